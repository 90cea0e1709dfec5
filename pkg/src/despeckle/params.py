"""Parameter records shared by the models, steppers and configuration layer."""
from dataclasses import dataclass, fields, asdict

__all__ = ["MODELS", "ModelParams", "SchemeWeights", "StopRule"]

MODELS = ("proposed", "tdfm", "hpcpde")


def _check_model(kind):
    if kind not in MODELS:
        raise ValueError(f"unknown model {kind!r}; expected one of {', '.join(MODELS)}")
    return kind


@dataclass(frozen=True)
class ModelParams:
    """Scalar parameters of one model run.

    ``alpha``, ``beta``, ``gamma`` and ``lam`` are the values tuned per image
    in the published tables; the rest are fixed defaults. For TDFM, ``beta``
    is the exponent of ``|lap(I_xi)| / k`` (2 in the original model).
    """

    alpha: float = 1.0
    beta: float = 10.0
    gamma: float = 1.0
    lam: float = 0.1
    iota: float = 1.0
    nu: float = 1.0
    xi: float = 1.0
    k: float = 1.0
    k_h: float = 1.0
    h_kind: str = "rational"  # rational: s^2/(s^2+k_h^2); clip: min(s/k_h, 1)
    hpcpde_s: str = "intensity"  # intensity: |I_xi|/M_xi; gradient: |grad I_xi|
    fidelity: str = "squared"  # squared: -lam (I-J)^2; signed: -lam (I-J), an alternative

    def __post_init__(self):
        for name in ("alpha", "beta", "iota", "k", "k_h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("gamma", "lam", "nu", "xi"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if self.h_kind not in ("rational", "clip"):
            raise ValueError(f"unknown h_kind {self.h_kind!r}")
        if self.hpcpde_s not in ("intensity", "gradient"):
            raise ValueError(f"unknown hpcpde_s {self.hpcpde_s!r}")
        if self.fidelity not in ("squared", "signed"):
            raise ValueError(f"unknown fidelity {self.fidelity!r}")

    def as_dict(self):
        return asdict(self)

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class SchemeWeights:
    """Time-discretization weights and the Gauss-Seidel settings of the implicit solves.

    The default ``theta1 = 0.5, theta2 = 0`` puts more weight on the implicit
    level than on the oldest one, which damps the highest spatial
    frequencies; equal weights (``0.25, 0.25``) are non-dissipative and let
    the fourth-order term ring.
    """

    theta1: float = 0.5
    theta2: float = 0.0
    theta: float = 0.5
    tau: float = 0.25
    gs_tol: float = 1e-6
    gs_max_sweeps: int = 200

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.theta1 + self.theta2 > 1.0:
            raise ValueError("theta1 + theta2 must not exceed 1")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if not self.gs_tol > 0 or self.gs_max_sweeps < 1:
            raise ValueError("invalid Gauss-Seidel settings")

    def as_dict(self):
        return asdict(self)

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class StopRule:
    mode: str = "best-psnr"  # best-psnr | relative-change | max-iters
    epsilon: float = 1e-4
    patience: int = 3
    max_iters: int = 500

    def __post_init__(self):
        if self.mode not in ("best-psnr", "relative-change", "max-iters"):
            raise ValueError(f"unknown stop mode {self.mode!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.patience < 1 or self.max_iters < 1:
            raise ValueError("patience and max_iters must be >= 1")

    def as_dict(self):
        return asdict(self)

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]
