from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensorfusion import (ComplexField, Dataset, NumericalError, OptimizerState,
                          ReconstructionConfig, ValidationError, adam_step, loss_gradient,
                          mixed_loss, mse, predict_dataset, reconstruct)
from sensorfusion.optimization import format_loss_table

from .conftest import random_complex, small_scene


def perturbed(scene, seed=5, scale=0.05):
    rng = np.random.default_rng(seed)
    obj = ComplexField(scene.object.grid,
                       scene.object.values + random_complex(rng, scene.object.grid.shape, scale))
    probe = ComplexField(scene.grid, scene.probe.values + random_complex(rng, scene.grid.shape, scale))
    return scene.replace(object=obj, probe=probe)


def fd_check(scene, data, gamma, with_probe, n_dirs=3, h=1e-6, seed=0):
    """Worst relative error of packed gradients against central differences."""
    grad = loss_gradient(scene, data, gamma, with_probe=with_probe)
    rng = np.random.default_rng(seed)
    worst = 0.0
    targets = ["object", "probe"] if with_probe else ["object"]
    for target in targets:
        base = getattr(scene, target)
        g = grad.object if target == "object" else grad.probe
        for _ in range(n_dirs):
            d = random_complex(rng, base.values.shape)
            d /= np.linalg.norm(d)

            def loss_at(t):
                moved = ComplexField(base.grid, base.values + t * d)
                return loss_gradient(scene.replace(**{target: moved}), data, gamma).report.loss

            fd = (loss_at(h) - loss_at(-h)) / (2 * h)
            an = float(np.real(np.vdot(g, d)))
            worst = max(worst, abs(fd - an) / max(abs(an), 1e-30))
    return worst


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0])
def test_gradient_matches_finite_differences(gamma):
    truth = small_scene(obj_n=24, probe_n=12, offsets=((0, 0), (6, 9), (11, 3)))
    data = predict_dataset(truth)
    worst = fd_check(perturbed(truth), data, gamma, with_probe=True)
    assert worst < 1e-4


def test_mse_definition():
    pred = np.zeros((2, 3, 3))
    meas = np.ones((2, 3, 3))
    assert mse(pred, meas) == pytest.approx(9.0)
    assert mse(pred[0], meas[0]) == pytest.approx(9.0)
    with pytest.raises(ValidationError):
        mse(pred, meas[:, :2])


@settings(max_examples=50)
@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0, 1))
def test_mixed_loss_is_convex_combination(on, off, gamma):
    value = mixed_loss(on, off, gamma)
    assert min(on, off) - 1e-9 * max(on, off, 1) <= value <= max(on, off) + 1e-9 * max(on, off, 1)


def test_mixed_loss_drops_zero_weight_terms():
    assert mixed_loss(2.0, float("nan"), 0.0) == 2.0
    assert mixed_loss(float("nan"), 3.0, 1.0) == 3.0
    with pytest.raises(ValidationError):
        mixed_loss(1.0, 1.0, 1.5)


def reference_adam(grads, lr, b1, b2, eps, x0):
    """Textbook scalar Adam."""
    x, m, v = x0, 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x = x - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
        out.append(x)
    return out


@settings(max_examples=30)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.floats(1e-4, 1.0))
def test_adam_matches_scalar_reference(grads, lr):
    cfg = ReconstructionConfig(learning_rate=lr)
    x = np.array([0.5])
    state = OptimizerState.zeros_like(x)
    got = []
    for g in grads:
        x, state = adam_step(x, np.array([g]), state, cfg)
        got.append(float(x[0]))
    expected = reference_adam(grads, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, 0.5)
    np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-12)


@settings(max_examples=20)
@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=6))
def test_adam_updates_real_and_imaginary_parts_independently(grads):
    cfg = ReconstructionConfig(learning_rate=0.1)
    z = np.array([1 + 1j])
    state = OptimizerState.zeros_like(z)
    for g in grads:
        z, state = adam_step(z, np.array([g]), state, cfg)
    re = reference_adam([g.real for g in grads], 0.1, 0.9, 0.999, 1e-8, 1.0)[-1]
    im = reference_adam([g.imag for g in grads], 0.1, 0.9, 0.999, 1e-8, 1.0)[-1]
    assert z[0].real == pytest.approx(re, rel=1e-12, abs=1e-12)
    assert z[0].imag == pytest.approx(im, rel=1e-12, abs=1e-12)


def test_true_object_is_a_fixed_point():
    truth = small_scene()
    data = predict_dataset(truth)
    grad = loss_gradient(truth, data, 0.5, with_probe=True)
    assert grad.report.loss < 1e-20
    assert np.abs(grad.object).max() < 1e-10
    result = reconstruct(data, truth, ReconstructionConfig(epochs=3, gamma_switch_epoch=1))
    np.testing.assert_allclose(result.object.values, truth.object.values, atol=1e-9)


def test_zero_epochs_returns_initial_guess():
    truth = small_scene()
    data = predict_dataset(truth)
    start = perturbed(truth)
    result = reconstruct(data, start, ReconstructionConfig(epochs=0, gamma_switch_epoch=0))
    np.testing.assert_array_equal(result.object.values, start.object.values)
    assert result.history == []


def test_off_axis_nan_ignored_when_gamma_zero():
    truth = small_scene()
    data = predict_dataset(truth)
    frames = [data.frames[0], np.full_like(data.frames[1], np.nan)]
    poisoned = Dataset(data.grid, data.object_shape, data.origin_px, data.scan, data.sensors, frames)
    start = perturbed(truth)
    cfg = ReconstructionConfig(epochs=2, gamma_initial=0.0, gamma_final=0.0, gamma_switch_epoch=0)
    clean = reconstruct(data, start, cfg)
    dirty = reconstruct(poisoned, start, cfg)
    np.testing.assert_array_equal(clean.object.values, dirty.object.values)
    assert np.isnan(dirty.history[0].mse["b"])
    with pytest.raises(NumericalError) as info:
        reconstruct(poisoned, start, replace(cfg, gamma_final=0.5, epochs=3, gamma_switch_epoch=1))
    assert info.value.epoch == 1


def test_reconstruction_reduces_loss_and_is_deterministic():
    truth = small_scene()
    data = predict_dataset(truth)
    start = perturbed(truth, scale=0.1).replace(probe=truth.probe)
    cfg = ReconstructionConfig(epochs=8, gamma_switch_epoch=4, learning_rate=0.01, batch_size=1)
    a = reconstruct(data, start, cfg)
    b = reconstruct(data, start, cfg)
    assert a.history[-1].loss < 0.5 * a.history[0].loss
    np.testing.assert_array_equal(a.object.values, b.object.values)
    assert format_loss_table(a.history) == format_loss_table(b.history)
    assert [r.gamma for r in a.history] == [0.0] * 4 + [0.5] * 4


def test_probe_optimization_changes_probe_only_when_enabled():
    truth = small_scene()
    data = predict_dataset(truth)
    start = perturbed(truth)
    cfg = ReconstructionConfig(epochs=2, gamma_switch_epoch=1)
    fixed = reconstruct(data, start, cfg)
    np.testing.assert_array_equal(fixed.probe.values, start.probe.values)
    moved = reconstruct(data, start, replace(cfg, optimize_probe=True))
    assert not np.array_equal(moved.probe.values, start.probe.values)


def test_learning_rate_schedule():
    cfg = ReconstructionConfig(learning_rate=0.1, lr_decay=0.5, gamma_switch_epoch=2,
                               learning_rate_after_switch=0.04)
    assert [cfg.learning_rate_at(e) for e in range(4)] == pytest.approx([0.1, 0.05, 0.04, 0.02])
    assert cfg.gamma_at(1) == 0.0 and cfg.gamma_at(2) == 0.5


@pytest.mark.parametrize("kwargs", [dict(epochs=-1), dict(learning_rate=0.0), dict(adam_beta1=1.0),
                                    dict(gamma_final=1.5), dict(gamma_switch_epoch=50),
                                    dict(batch_size=0), dict(lr_decay=0.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        ReconstructionConfig(**kwargs)


def test_loss_table_format():
    truth = small_scene()
    data = predict_dataset(truth)
    result = reconstruct(data, perturbed(truth), ReconstructionConfig(epochs=2, gamma_switch_epoch=1))
    lines = format_loss_table(result.history).splitlines()
    assert lines[0] == "epoch\tmse_on\tmse_off\tgamma\tloss"
    assert len(lines) == 3
    assert lines[2].split("\t")[3] == "0.5"
