"""Coupled fourth-order hyperbolic-parabolic PDE despeckling, baselines and evaluation tools."""
from .coefficients import coeff_hpcpde, coeff_proposed, coeff_tdfm, edge_h, grayscale_indicator
from .gauss_seidel import GSResult, gauss_seidel
from .metrics import MetricsReport, SsimParams, mssim, psnr, relative_change, speckle_index, ssim
from .noise import SpeckleSpec, apply_noise, sample_speckle_field
from .params import MODELS, ModelParams, SchemeWeights, StopRule
from .solver import SolverError, run_color, run_model

__version__ = "0.1.0"
