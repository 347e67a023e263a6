"""
Run configuration: every simulation, scan, sensor, reconstruction and
evaluation parameter as named keys in a JSON file.

Unknown keys anywhere in the file raise :class:`ValidationError` naming the
offending key path. Omitted keys take the defaults below, which describe the
full-size experimental geometry.
"""

import json
from dataclasses import dataclass, field, fields, is_dataclass, replace

from .errors import ValidationError
from .optimization import ReconstructionConfig

PAPER_SHIFT = 2.649e-3


@dataclass(frozen=True)
class GeometryConfig:
    wavelength: float = 561e-9
    pitch: float = 3.45e-6
    probe_pixels: int = 512
    distance: float = 61e-3


@dataclass(frozen=True)
class ProbeConfig:
    diameter: float = 1.2e-3
    edge_smoothing: float = 0.0


@dataclass(frozen=True)
class ScanConfig:
    count: int = 52
    min_distance: float = 0.25e-3
    region: tuple = (2.4e-3, 2.4e-3)
    seed: int = 1
    margin_px: int = 8


@dataclass(frozen=True)
class SensorConfig:
    name: str
    width: int = 512
    height: int = 512
    x0: float = 0.0
    y0: float = 0.0
    z: object = None
    exposure_weight: float = 1.0


def _default_sensors():
    return (SensorConfig("a"), SensorConfig("b", x0=PAPER_SHIFT, exposure_weight=10.0))


@dataclass(frozen=True)
class TargetConfig:
    ladder: tuple = (40.0, 48.0, 56.0, 68.0, 80.0)
    bar_length_factor: float = 10.0
    gap: float = 25e-6
    line_transmittance: float = 0.0
    background_transmittance: float = 1.0


@dataclass(frozen=True)
class NoiseConfig:
    photon_scale: float = 0.0
    quantization_bits: object = None
    seed: int = 0


@dataclass(frozen=True)
class EvaluationConfig:
    transmittance: str = "intensity"
    prominence: float = 0.05
    na_illum: float = 0.01


@dataclass(frozen=True)
class AblationConfig:
    sensor_size: int = 256
    shifts_px: tuple = (256, 512, 768)
    full_frame: tuple = (2048, 1536)
    band_height: int = 384


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one simulate/reconstruct/evaluate run."""

    name: str = "paper"
    seed: int = 0
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    sensors: tuple = field(default_factory=_default_sensors)
    target: TargetConfig = field(default_factory=TargetConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    reconstruction: ReconstructionConfig = field(default_factory=ReconstructionConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)

    def __post_init__(self):
        g = self.geometry
        if not (g.wavelength > 0 and g.pitch > 0 and g.distance > 0 and g.probe_pixels >= 1):
            raise ValidationError("geometry: wavelength, pitch, distance and probe_pixels must be positive")
        if not self.sensors:
            raise ValidationError("sensors: at least one sensor is required")
        if self.evaluation.transmittance not in ("intensity", "amplitude"):
            raise ValidationError("evaluation.transmittance must be 'intensity' or 'amplitude'")

    def to_dict(self):
        return _to_plain(self)

    def with_seed(self, seed):
        """Override every seed with one integer."""
        return replace(self, seed=seed,
                       scan=replace(self.scan, seed=seed),
                       noise=replace(self.noise, seed=seed),
                       reconstruction=replace(self.reconstruction, rng_seed=seed))


_NESTED = {
    "geometry": GeometryConfig, "probe": ProbeConfig, "scan": ScanConfig,
    "target": TargetConfig, "noise": NoiseConfig, "reconstruction": ReconstructionConfig,
    "evaluation": EvaluationConfig, "ablation": AblationConfig,
}


def _to_plain(obj):
    if is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"unknown config key(s): {', '.join(f'{path}.{k}' for k in unknown)}")
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if isinstance(value, list):
            value = tuple(value)
        kwargs[f.name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def config_from_dict(data):
    """Build a validated :class:`RunConfig` from plain data."""
    if not isinstance(data, dict):
        raise ValidationError("config root must be an object")
    top = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ValidationError(f"unknown config key(s): {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED:
            kwargs[key] = _build(_NESTED[key], value, key)
        elif key == "sensors":
            if not isinstance(value, list):
                raise ValidationError("sensors: expected a list")
            kwargs[key] = tuple(_build(SensorConfig, s, f"sensors[{i}]") for i, s in enumerate(value))
        else:
            kwargs[key] = value
    return RunConfig(**kwargs)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def dump_config(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")


def desk_config():
    """Quarter-scale geometry used for the desk-top experiments.

    Lengths in the object and detector planes shrink by four while the
    diffraction angles, and therefore the line-set frequencies that reach
    each sensor, stay as in the full-size setup.
    """
    pitch = 3.45e-6
    return RunConfig(
        name="desk",
        geometry=GeometryConfig(probe_pixels=128, distance=61e-3 / 4),
        probe=ProbeConfig(diameter=0.3e-3),
        scan=ScanConfig(min_distance=0.25e-3 / 4, region=(0.6e-3, 0.6e-3)),
        sensors=(SensorConfig("a", width=128, height=128),
                 SensorConfig("b", width=128, height=128, x0=192 * pitch, exposure_weight=10.0)),
        reconstruction=DESK_RECONSTRUCTION,
        ablation=AblationConfig(sensor_size=64, shifts_px=(64, 128, 192),
                                full_frame=(512, 384), band_height=96),
    )


DESK_RECONSTRUCTION = ReconstructionConfig(
    learning_rate=0.03, adam_beta2=0.9, batch_size=1, lr_decay=0.85,
    learning_rate_after_switch=0.01, reset_optimizer_at_switch=True,
)


def paper_config():
    """Full-size geometry with the desk-tuned optimizer settings."""
    return RunConfig(reconstruction=DESK_RECONSTRUCTION)
