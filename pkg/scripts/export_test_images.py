"""Export scikit-image's bundled photographs as 256x256 PGM/PPM files.

Usage: python3 scripts/export_test_images.py OUT_DIR

The files can stand in for the benchmark images in a suite's ``images``
map. scikit-image is only needed for this script.
"""
import sys
from pathlib import Path

import numpy as np
from skimage import color, data, transform

from despeckle.netpbm import write_netpbm

GRAY = {"camera": None, "chelsea": slice(75, 375), "astronaut": None}
COLOR = {"astronaut": None, "coffee": slice(100, 500)}


def _resize(img, columns):
    if columns is not None:
        img = img[:, columns]
    return transform.resize(img, (256, 256), anti_aliasing=True)


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, columns in GRAY.items():
        img = getattr(data, name)()
        g = color.rgb2gray(img) if img.ndim == 3 else img / 255.0
        write_netpbm(_resize(g, columns) * 255.0, out / f"{name}.pgm")
    for name, columns in COLOR.items():
        rgb = _resize(getattr(data, name)() / 255.0, columns)
        write_netpbm(np.moveaxis(rgb, -1, 0) * 255.0, out / f"{name}-color.ppm")


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    main(sys.argv[1])
