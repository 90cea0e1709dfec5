"""Netpbm (PGM/PPM) reading and writing, ASCII and binary.

Gray images are ``(H, W)`` float arrays, color images ``(3, H, W)``.
"""
import numpy as np

__all__ = ["NetpbmError", "read_netpbm", "write_netpbm", "quantize"]

_CHANNELS = {b"P2": 1, b"P5": 1, b"P3": 3, b"P6": 3}


class NetpbmError(ValueError):
    pass


def _header(buf):
    """Parse magic, width, height, maxval; return them with the payload offset."""
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < 4:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise NetpbmError("truncated header")
        tokens.append(buf[start:pos])
    magic = tokens[0]
    if magic not in _CHANNELS:
        raise NetpbmError(f"unsupported magic number {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise NetpbmError("malformed header") from None
    if width < 1 or height < 1:
        raise NetpbmError("image dimensions must be positive")
    if not 1 <= maxval <= 65535:
        raise NetpbmError(f"maxval {maxval} outside 1..65535")
    # exactly one whitespace byte separates the header from binary data
    if pos >= n and magic in (b"P5", b"P6"):
        raise NetpbmError("truncated payload")
    return magic, width, height, maxval, pos + 1


def read_netpbm(path):
    """Read a P2/P3/P5/P6 file; returns ``(image, maxval)``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, width, height, maxval, offset = _header(buf)
    ch = _CHANNELS[magic]
    count = width * height * ch
    if magic in (b"P5", b"P6"):
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        payload = buf[offset:offset + need]
        if len(payload) < need:
            raise NetpbmError("truncated payload")
        values = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    else:
        text = buf[offset - 1:]
        # drop comments that may appear in the raster of ASCII files
        lines = [ln.split(b"#", 1)[0] for ln in text.splitlines()]
        words = b" ".join(lines).split()
        if len(words) < count:
            raise NetpbmError("truncated payload")
        try:
            values = np.array([int(w) for w in words[:count]], dtype=np.float64)
        except ValueError:
            raise NetpbmError("non-integer sample in raster") from None
    if np.any(values > maxval):
        raise NetpbmError("sample exceeds maxval")
    if ch == 1:
        return values.reshape(height, width), maxval
    return values.reshape(height, width, 3).transpose(2, 0, 1).copy(), maxval


def quantize(image, maxval=255):
    """Round half away from zero, then clamp to ``[0, maxval]``."""
    a = np.asarray(image, dtype=np.float64)
    r = np.sign(a) * np.floor(np.abs(a) + 0.5)
    return np.clip(r, 0, maxval).astype(np.int64)


def write_netpbm(image, path, maxval=255, binary=True):
    """Write a gray ``(H, W)`` or color ``(3, H, W)`` image; output bytes depend only on the inputs."""
    a = np.asarray(image, dtype=np.float64)
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval {maxval} outside 1..65535")
    if a.ndim == 2:
        magic = "P5" if binary else "P2"
        h, w = a.shape
        raster = quantize(a, maxval)
    elif a.ndim == 3 and a.shape[0] == 3:
        magic = "P6" if binary else "P3"
        _, h, w = a.shape
        raster = quantize(a, maxval).transpose(1, 2, 0)
    else:
        raise ValueError(f"expected (H, W) or (3, H, W) image, got shape {a.shape}")
    header = f"{magic}\n{w} {h}\n{maxval}\n".encode("ascii")
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        payload = raster.astype(dtype).tobytes()
    else:
        rows = []
        for row in raster.reshape(h, -1):
            line = []
            width = 0
            for v in row:
                s = str(int(v))
                if width and width + 1 + len(s) > 70:
                    rows.append(" ".join(line))
                    line, width = [], 0
                width += len(s) + (1 if line else 0)
                line.append(s)
            rows.append(" ".join(line))
        payload = ("\n".join(rows) + "\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + payload)
