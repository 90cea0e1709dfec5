"""Published benchmark values, used as reference columns in bench tables.

Keys are ``(image, looks, model)``; values are ``(mssim, psnr_db)``. SAR
entries map an image name to ``(noisy_si, restored_si)``.
"""
_LOOKS = (1, 3, 5, 10)

_RAW = {
    "peppers": {
        "hpcpde": ((0.4938, 17.86), (0.5778, 23.39), (0.6184, 25.76), (0.6734, 28.35)),
        "tdfm": ((0.5233, 19.50), (0.6443, 24.36), (0.6636, 25.95), (0.6766, 28.36)),
        "proposed": ((0.6023, 23.88), (0.6749, 25.34), (0.7018, 26.31), (0.6926, 28.58)),
    },
    "parrots": {
        "hpcpde": ((0.5670, 19.10), (0.5910, 23.93), (0.6176, 25.87), (0.6658, 28.24)),
        "tdfm": ((0.5811, 20.63), (0.5926, 24.34), (0.6673, 26.15), (0.6934, 28.18)),
        "proposed": ((0.6100, 22.16), (0.7044, 25.09), (0.7372, 26.30), (0.7191, 28.39)),
    },
    "baboon": {
        "hpcpde": ((0.5489, 16.72), (0.6904, 19.60), (0.7558, 20.23), (0.8197, 22.18)),
        "tdfm": ((0.5687, 17.91), (0.6821, 19.51), (0.7366, 20.32), (0.7998, 21.60)),
        "proposed": ((0.5706, 18.08), (0.6924, 19.77), (0.7579, 20.67), (0.8254, 22.20)),
    },
    "caps": {
        "hpcpde": ((0.6879, 21.07), (0.7709, 25.41), (0.8016, 26.67), (0.8303, 28.18)),
        "tdfm": ((0.7190, 22.03), (0.7992, 25.74), (0.8065, 26.71), (0.8377, 27.96)),
        "proposed": ((0.7195, 23.45), (0.8122, 25.92), (0.8276, 26.86), (0.8601, 28.20)),
    },
}

TABLE = {
    (image, L, model): row[i]
    for image, models in _RAW.items()
    for model, row in models.items()
    for i, L in enumerate(_LOOKS)
}

SAR_SI = {"sar-image1": (1.02, 0.2911), "sar-image2": (0.92, 0.3275)}


def lookup(image, looks, model):
    """``(mssim, psnr_db)`` or ``None`` when no published value exists."""
    return TABLE.get((image, looks, model))
