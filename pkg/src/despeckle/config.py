"""Run configuration, parameter presets and strict JSON loading."""
import json
from dataclasses import dataclass, field, asdict, replace

from .params import MODELS, ModelParams, SchemeWeights, StopRule

__all__ = [
    "ConfigError",
    "RunConfig",
    "PRESETS",
    "SAR_PRESETS",
    "IMAGE_KIND",
    "preset_names",
    "resolve_preset",
    "default_preset",
    "config_from_dict",
    "load_config",
]


class ConfigError(ValueError):
    pass


LOOKS = (1, 3, 5, 10)

# (alpha, beta, gamma, lam) per model and look, as tuned per image in the published tables.
# HPCPDE has no fidelity term, so its lam is 0.
PRESETS = {
    "peppers": {
        "hpcpde": [(1, 3, 5, 0), (2, 3, 5, 0), (2, 3, 5, 0), (2, 3, 5, 0)],
        "tdfm": [(1, 2, 5, 0.05), (1, 2, 5, 0.05), (1, 2, 5, 0.05), (1, 2, 5, 0.1)],
        "proposed": [(1, 10, 1, 0.1), (1, 10, 1, 0.1), (1, 10, 1, 0.1), (2, 10, 1, 0.5)],
    },
    "parrots": {
        "hpcpde": [(1, 3, 1, 0)] * 4,
        "tdfm": [(1, 2, 5, 0.05), (1, 2, 5, 0.1), (1, 2, 5, 0.1), (1, 2, 5, 0.2)],
        "proposed": [(2, 10, 1, 0.05), (2, 10, 1, 0.05), (2, 10, 1, 0.05), (2, 10, 2, 0.05)],
    },
    "baboon": {
        "hpcpde": [(3, 3, 3, 0)] * 4,
        "tdfm": [(1, 2, 5, 0.1), (1.1, 2, 5, 0.1), (1.2, 2, 5, 0.1), (1.2, 2, 5, 0.1)],
        "proposed": [(1, 10, 3, 0.07), (1, 10, 3, 0.07), (1, 10, 3, 0.07), (2, 10, 3, 0.07)],
    },
    "caps": {
        "hpcpde": [(1, 3, 3, 0), (1, 3, 3, 0), (1, 3, 3, 0), (2, 3, 3, 0)],
        "tdfm": [(1, 2, 5, 0.5), (1, 2, 5, 0.5), (1, 2, 5, 0.5), (1, 2, 5, 0.3)],
        "proposed": [(1, 10, 2.5, 0.01), (1, 10, 2.5, 0.01), (1, 10, 2.5, 0.02), (1.8, 10, 2, 0.05)],
    },
}

IMAGE_KIND = {"peppers": "gray", "parrots": "gray", "baboon": "color", "caps": "color"}

# real SAR scenes, (alpha, beta, gamma, lam), any model
SAR_PRESETS = {
    "sar-image1": (0.1, 4, 5, 0.007),
    "sar-image2": (0.1, 4, 2, 0.001),
}


def _row(values):
    a, b, g, lam = values
    return {"alpha": float(a), "beta": float(b), "gamma": float(g), "lam": float(lam)}


def _look_index(looks):
    # nearest tabulated look; ties go to the smaller one
    return min(range(len(LOOKS)), key=lambda i: (abs(LOOKS[i] - looks), LOOKS[i]))


def preset_names():
    names = []
    for image, kind in IMAGE_KIND.items():
        for L in LOOKS:
            names.append(f"{image}-{kind}-L{L}")
            names.extend(f"{m}-{image}-L{L}" for m in MODELS)
    return names + list(SAR_PRESETS)


def resolve_preset(name, model=None):
    """Look up a preset; returns ``(model, {alpha, beta, gamma, lam})``.

    Accepted names: ``<image>-<gray|color>-L<n>`` (needs ``model``),
    ``<model>-<image>-L<n>`` and ``sar-image1``/``sar-image2``.
    """
    if name in SAR_PRESETS:
        return model or "proposed", _row(SAR_PRESETS[name])
    parts = name.split("-")
    if len(parts) == 3 and parts[2].startswith("L") and parts[2][1:].isdigit():
        looks = int(parts[2][1:])
        if looks in LOOKS:
            if parts[0] in MODELS and parts[1] in PRESETS:
                if model is not None and model != parts[0]:
                    raise ConfigError(f"preset {name!r} is for model {parts[0]!r}, not {model!r}")
                return parts[0], _row(PRESETS[parts[1]][parts[0]][LOOKS.index(looks)])
            if parts[0] in PRESETS and parts[1] == IMAGE_KIND[parts[0]]:
                if model is None:
                    raise ConfigError(f"preset {name!r} needs a model")
                if model not in MODELS:
                    raise ConfigError(f"unknown model {model!r}")
                return model, _row(PRESETS[parts[0]][model][LOOKS.index(looks)])
    raise ConfigError(f"unknown preset {name!r}")


def default_preset(model, looks, color=False):
    """Preset row used when none is named: peppers (gray) or caps (color) at the nearest look."""
    image = "caps" if color else "peppers"
    return _row(PRESETS[image][model][_look_index(looks)])


@dataclass
class RunConfig:
    input: str
    model: str = "proposed"
    looks: int = 3
    seed: int = 0
    preset: str = None
    simulate: bool = False
    params: ModelParams = field(default_factory=ModelParams)
    scheme: SchemeWeights = field(default_factory=SchemeWeights)
    stop: StopRule = field(default_factory=StopRule)
    output: str = "out"
    color: bool = False
    reference: str = None
    intensity_scale: float = 255.0
    floor: float = 1.0

    def to_dict(self):
        d = asdict(self)
        return d


_TOP = {
    "input": str, "model": str, "looks": int, "seed": int, "preset": (str, type(None)),
    "simulate": bool, "params": dict, "scheme": dict, "stop": dict, "output": str,
    "color": bool, "reference": (str, type(None)), "intensity_scale": (int, float),
    "floor": (int, float, type(None)),
}


def _check_type(path, value, types):
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"{path}: expected {types}, got bool")
    if not isinstance(value, types):
        raise ConfigError(f"{path}: wrong type {type(value).__name__}")


def _section(path, data, cls, base):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    allowed = cls.keys()
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key '{path}.{key}'")
    try:
        return replace(base, **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_from_dict(data):
    """Build a fully resolved :class:`RunConfig` from a parsed JSON object.

    Unknown keys are rejected. Model parameters start from the named preset
    (or the default preset for the model and look count) and are then
    overridden by the ``params`` section.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for key, value in data.items():
        if key not in _TOP:
            raise ConfigError(f"unknown key '{key}'")
        _check_type(key, value, _TOP[key])
    if "input" not in data:
        raise ConfigError("missing required key 'input'")
    model = data.get("model", "proposed")
    if model not in MODELS:
        raise ConfigError(f"model: unknown model {model!r}")
    looks = data.get("looks", 3)
    if looks < 1:
        raise ConfigError("looks: must be >= 1")
    color = data.get("color", False)
    preset = data.get("preset")
    if preset is not None:
        model, row = resolve_preset(preset, data.get("model"))
    else:
        row = default_preset(model, looks, color)
    params = _section("params", row, ModelParams, ModelParams())
    params = _section("params", data.get("params", {}), ModelParams, params)
    scheme = _section("scheme", data.get("scheme", {}), SchemeWeights, SchemeWeights())
    has_reference = data.get("simulate", False) or data.get("reference") is not None
    stop_base = StopRule() if has_reference else StopRule(mode="relative-change")
    stop = _section("stop", data.get("stop", {}), StopRule, stop_base)
    scale = float(data.get("intensity_scale", 255.0))
    if not scale > 0:
        raise ConfigError("intensity_scale: must be > 0")
    floor = data.get("floor", 1.0)
    return RunConfig(
        input=data["input"], model=model, looks=int(looks), seed=int(data.get("seed", 0)),
        preset=preset, simulate=data.get("simulate", False), params=params, scheme=scheme,
        stop=stop, output=data.get("output", "out"), color=color,
        reference=data.get("reference"), intensity_scale=scale,
        floor=None if floor is None else float(floor),
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)
