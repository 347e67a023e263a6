"""
End-to-end pipelines built from a :class:`RunConfig`: scene assembly,
simulation, reconstruction, evaluation and the sensor-configuration ladder.
"""

from dataclasses import dataclass, replace

import numpy as np

from .config import SensorConfig
from .errors import ValidationError
from .evaluation import fringe_visibility, normalize_transmittance
from .forward import Dataset, SceneModel, SensorSpec
from .grid import ComplexField, GridSpec
from .optimization import reconstruct
from .scan import poisson_disk
from .simulator import (NoiseSpec, clear_region, ladder_target, line_set_regions,
                        make_probe, make_resolution_target, simulate_dataset)


@dataclass
class Experiment:
    """True scene plus everything needed to score a reconstruction."""

    config: object
    scene: SceneModel
    target: object
    regions: list
    clear: tuple

    def initial_scene(self, sensors=None):
        """Same geometry with a transparent object guess."""
        ones = ComplexField(self.scene.object.grid, np.ones(self.scene.object.grid.shape))
        return self.scene.replace(object=ones, sensors=sensors)

    def evaluate(self, obj):
        ev = self.config.evaluation
        t = normalize_transmittance(obj, self.clear, kind=ev.transmittance)
        return [fringe_visibility(t, r, prominence=ev.prominence) for r in self.regions]


def sensor_specs(config, sensors=None):
    g = config.geometry
    chosen = config.sensors if sensors is None else sensors
    return tuple(SensorSpec(name=s.name, width=s.width, height=s.height, x0=s.x0, y0=s.y0,
                            z=g.distance if s.z is None else s.z,
                            exposure_weight=s.exposure_weight) for s in chosen)


def build_experiment(config, sensors=None):
    """Target object, probe, scan and sensors described by ``config``."""
    g = config.geometry
    probe_grid = GridSpec.square(g.probe_pixels, g.pitch, g.wavelength)
    sc = config.scan
    scan = poisson_disk(sc.region, sc.min_distance, sc.count, sc.seed)
    offsets = np.rint(scan.positions / g.pitch).astype(int)
    size = g.probe_pixels + int(offsets.max()) + 1 + 2 * sc.margin_px
    obj_grid = GridSpec.square(size, g.pitch, g.wavelength)
    tc = config.target
    target = ladder_target(tuple(tc.ladder), tc.bar_length_factor, tc.gap)
    target = replace(target, line_transmittance=tc.line_transmittance,
                     background_transmittance=tc.background_transmittance)
    obj = make_resolution_target(obj_grid, target)
    probe = make_probe(probe_grid, config.probe.diameter, config.probe.edge_smoothing)
    scene = SceneModel(obj, probe, scan, sensor_specs(config, sensors),
                       origin_px=(sc.margin_px, sc.margin_px))
    return Experiment(config, scene, target, line_set_regions(obj_grid, target),
                      clear_region(obj_grid, target))


def noise_spec(config):
    n = config.noise
    return NoiseSpec(photon_scale=n.photon_scale, quantization_bits=n.quantization_bits,
                     rng_seed=n.seed)


def simulate(config):
    exp = build_experiment(config)
    return exp, simulate_dataset(exp.scene, noise_spec(config))


def run_reconstruction(exp, dataset, rconfig=None, sensors=None):
    """Reconstruct from ``dataset`` (optionally a sensor subset).

    When no off-axis sensor remains the mixing factor is forced to zero.
    """
    rconfig = rconfig or exp.config.reconstruction
    if sensors is not None:
        dataset = dataset.select_sensors(sensors)
    if all(s.on_axis for s in dataset.sensors):
        rconfig = replace(rconfig, gamma_initial=0.0, gamma_final=0.0)
    init = exp.initial_scene(sensors=dataset.sensors)
    return reconstruct(dataset, init, rconfig)


def compare_fusion(config):
    """Fused run with the configured schedule against gamma fixed at 0.

    Returns
    -------
    dict
        ``{"dataset", "fused", "on_axis"}``, the latter two holding
        ``(ReconstructionResult, reports)``.
    """
    exp, dataset = simulate(config)
    rc = config.reconstruction
    fused = reconstruct(dataset, exp.initial_scene(), rc)
    single = reconstruct(dataset, exp.initial_scene(),
                         replace(rc, gamma_initial=0.0, gamma_final=0.0))
    return {"experiment": exp, "dataset": dataset,
            "fused": (fused, exp.evaluate(fused.object)),
            "on_axis": (single, exp.evaluate(single.object))}


def ablation_windows(config):
    """Sensor sets of the configuration ladder, keyed by a display name.

    Every window is cut from one on-axis full camera frame, so shifts must be
    whole pixels.
    """
    ab = config.ablation
    pitch = config.geometry.pitch
    fw, fh = ab.full_frame
    s = ab.sensor_size
    ladder = {
        "full_frame": (SensorConfig("full", width=fw, height=fh),),
        "band": (SensorConfig("band", width=fw, height=ab.band_height),),
        "centre": (SensorConfig("a", width=s, height=s),),
    }
    for shift in ab.shifts_px:
        if shift + s / 2 > fw / 2:
            raise ValidationError(f"shift {shift} px leaves the full frame")
        ladder[f"centre+{shift}px"] = (SensorConfig("a", width=s, height=s),
                                       SensorConfig("b", width=s, height=s, x0=shift * pitch))
    return ladder


def crop_frames(full, full_sensor, sensor, pitch):
    """Cut a sub-window from full-frame stacks of shape ``(N, fh, fw)``."""
    _, fh, fw = full.shape
    cx = (fw - sensor.width) // 2 + int(round(sensor.x0 / pitch))
    cy = (fh - sensor.height) // 2 + int(round(sensor.y0 / pitch))
    if cx < 0 or cy < 0 or cx + sensor.width > fw or cy + sensor.height > fh:
        raise ValidationError(f"window {sensor.name} leaves the full frame")
    # full-frame exposure is unity; rescale to the window's own exposure
    return full[:, cy:cy + sensor.height, cx:cx + sensor.width] * (
        sensor.exposure_weight / full_sensor.exposure_weight)


def run_ablation(config, progress=None):
    """Reconstruct every ladder configuration from one simulated frame set.

    Returns
    -------
    (Dataset, dict)
        The full-frame dataset and, per configuration name,
        ``(ReconstructionResult, reports)``.
    """
    ladder = ablation_windows(config)
    full_cfg = ladder["full_frame"]
    exp_full = build_experiment(config, sensors=full_cfg)
    full_data = simulate_dataset(exp_full.scene, noise_spec(config))
    full_sensor = full_data.sensors[0]
    pitch = config.geometry.pitch
    results = {}
    for name, windows in ladder.items():
        specs = sensor_specs(config, windows)
        frames = [crop_frames(full_data.frames[0], full_sensor, s, pitch) for s in specs]
        data = Dataset(full_data.grid, full_data.object_shape, full_data.origin_px,
                       full_data.scan, specs, frames, full_data.noise)
        result = run_reconstruction(exp_full, data)
        results[name] = (result, exp_full.evaluate(result.object))
        if progress is not None:
            progress(name, results[name])
    return full_data, results
