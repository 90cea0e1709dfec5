"""Multiplicative L-look Gamma speckle.

The speckle factor is ``eta = mean(E_1, ..., E_L)`` with ``E_k`` i.i.d.
unit exponentials, i.e. Gamma(shape=L, scale=1/L): unit mean, variance 1/L.

Random numbers come from the Philox4x64-10 counter-based generator (numpy's
``np.random.Philox``) keyed by the seed. Uniforms are formed from 53-bit
integers ``k`` as ``(k + 0.5) / 2**53``, which lies strictly inside (0, 1), so
``-log(u)`` is finite and positive.
"""
from dataclasses import dataclass

import numpy as np

__all__ = ["SpeckleSpec", "RNG_ALGORITHM", "sample_speckle_field", "apply_noise"]

RNG_ALGORITHM = "Philox4x64-10"

_TWO53 = float(2**53)


@dataclass(frozen=True)
class SpeckleSpec:
    looks: int
    seed: int = 0

    def __post_init__(self):
        if int(self.looks) != self.looks or self.looks < 1:
            raise ValueError(f"looks must be a positive integer, got {self.looks!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def _open_uniforms(rng, shape):
    k = rng.integers(0, 2**53, size=shape, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) / _TWO53


def sample_speckle_field(width, height, spec):
    """Draw a ``(height, width)`` field of unit-mean Gamma(L) speckle factors.

    Identical ``(width, height, spec)`` always yield bit-identical output.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be positive")
    rng = np.random.Generator(np.random.Philox(int(spec.seed)))
    L = int(spec.looks)
    # accumulate look by look: bounded memory, fixed summation order
    acc = np.zeros((height, width), dtype=np.float64)
    for _ in range(L):
        acc -= np.log(_open_uniforms(rng, (height, width)))
    return acc / L


def apply_noise(clean, spec):
    """Return ``clean * eta``. ``clean`` may be one field or a channel stack ``(C, H, W)``.

    For a channel stack, channel ``c`` uses seed ``spec.seed + c``.
    """
    clean = np.asarray(clean, dtype=np.float64)
    if np.any(clean < 0):
        raise ValueError("clean image must be non-negative")
    if clean.ndim == 2:
        h, w = clean.shape
        return clean * sample_speckle_field(w, h, spec)
    if clean.ndim == 3:
        _, h, w = clean.shape
        return np.stack([
            ch * sample_speckle_field(w, h, SpeckleSpec(spec.looks, (spec.seed + c) % 2**64))
            for c, ch in enumerate(clean)
        ])
    raise ValueError(f"expected a 2D field or (C, H, W) stack, got shape {clean.shape}")
