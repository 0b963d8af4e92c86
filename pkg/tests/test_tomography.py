"""Seeded-scan simulation and JSI reconstruction."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.constants import hbar

from hcfwm import jsa, schmidt, tomography
from hcfwm.errors import RangeError, ValidationError
from hcfwm.tomography import NoiseModel, SetScan


def normalized_truth(grid):
    intensity = jsa.jsi(grid)
    return intensity / intensity.sum()


# ----------------------------------------------------------- roundtrip


def test_noiseless_roundtrip_is_exact(grid128):
    scan = tomography.simulate_set_scan(
        grid128, grid128.omega_i, pump_power_W=1.0, seed_power_W=1e-3
    )
    rec = tomography.reconstruct_jsi(scan)
    assert rec.values.shape == (128, 128)
    assert rec.values.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(rec.values - normalized_truth(grid128))) < 1e-12
    assert np.array_equal(rec.omega_s, grid128.omega_s)
    assert np.array_equal(rec.omega_i, grid128.omega_i)


def test_descending_sweep_reconstructs_identically(grid128):
    up = tomography.reconstruct_jsi(
        tomography.simulate_set_scan(grid128, grid128.omega_i, 1.0, 1e-3)
    )
    down = tomography.reconstruct_jsi(
        tomography.simulate_set_scan(
            grid128, grid128.omega_i[::-1].copy(), 1.0, 1e-3
        )
    )
    assert np.all(np.diff(down.omega_i) > 0.0)
    assert np.max(np.abs(up.values - down.values)) < 1e-12


def test_reconstruction_removes_seed_power_profile(grid128):
    rng = np.random.default_rng(11)
    ragged = rng.uniform(0.5e-3, 2e-3, grid128.omega_i.size)
    rec_ragged = tomography.reconstruct_jsi(
        tomography.simulate_set_scan(
            grid128, grid128.omega_i, 1.0, ragged
        )
    )
    rec_flat = tomography.reconstruct_jsi(
        tomography.simulate_set_scan(grid128, grid128.omega_i, 1.0, 1e-3)
    )
    assert np.max(np.abs(rec_ragged.values - rec_flat.values)) < 1e-12


def test_schmidt_number_survives_the_roundtrip(grid128):
    scan = tomography.simulate_set_scan(
        grid128, grid128.omega_i, 2.0, 1e-3, gain=1e6
    )
    rec = tomography.reconstruct_jsi(scan)
    k_rec = schmidt.schmidt_decompose(rec.values).K
    k_truth = schmidt.schmidt_decompose(grid128, flat_phase=True).K
    assert abs(k_rec - k_truth) < 1e-6


# ------------------------------------------------------- forward model


def test_slice_scaling_in_pump_and_seed(grid128):
    axis = grid128.omega_i[::16]
    base = tomography.simulate_set_scan(grid128, axis, 1.0, 1e-3)
    double_seed = tomography.simulate_set_scan(grid128, axis, 1.0, 2e-3)
    double_pump = tomography.simulate_set_scan(grid128, axis, 2.0, 1e-3)
    assert np.allclose(double_seed.slices, 2.0 * base.slices, rtol=1e-12)
    assert np.allclose(double_pump.slices, 4.0 * base.slices, rtol=1e-12)
    half_duty = tomography.simulate_set_scan(
        grid128, axis, 1.0, 1e-3, duty_cycle=0.5
    )
    assert np.allclose(half_duty.slices, 0.5 * base.slices, rtol=1e-12)


def test_seed_between_grid_columns_interpolates_linearly(grid128):
    intensity = jsa.jsi(grid128)
    k = 40
    w = 0.25
    omega = float(
        (1.0 - w) * grid128.omega_i[k] + w * grid128.omega_i[k + 1]
    )
    scan = tomography.simulate_set_scan(
        grid128, [omega, grid128.omega_i[-1]], 1.0, 1e-3
    )
    n_seed = scan.seed_photon_number()[0]
    manual = (1.0 - w) * intensity[:, k] + w * intensity[:, k + 1]
    assert np.allclose(scan.slices[0] / n_seed, manual, rtol=1e-9)


def test_seed_photon_number_uses_sweep_center(grid128):
    scan = tomography.simulate_set_scan(
        grid128, grid128.omega_i[::16], 1.0, 1e-3, duty_cycle=0.25
    )
    mid = 0.5 * (scan.omega_i[0] + scan.omega_i[-1])
    assert scan.omega_ref == pytest.approx(mid, rel=0.0, abs=0.0)
    n = scan.seed_photon_number()
    assert np.all(n == n[0])  # uniform powers, one conversion constant
    assert n[0] == pytest.approx(1e-3 * 0.25 / (hbar * mid), rel=1e-14)


def test_sweep_outside_truth_axis_raises(grid128):
    below = grid128.omega_i[0] - 1e12
    with pytest.raises(RangeError, match="idler axis"):
        tomography.simulate_set_scan(grid128, [below], 1.0, 1e-3)
    above = grid128.omega_i[-1] + 1e12
    with pytest.raises(RangeError, match="idler axis"):
        tomography.simulate_set_scan(
            grid128, [grid128.omega_i[0], above], 1.0, 1e-3
        )


def test_scan_validation(grid128):
    axis = grid128.omega_i[:4]
    slices = np.ones((4, grid128.omega_s.size))
    good = dict(
        omega_s=grid128.omega_s, slices=slices,
        seed_power_W=np.full(4, 1e-3), pump_power_W=1.0,
    )
    with pytest.raises(ValidationError, match="monotone"):
        SetScan(omega_i=axis[[0, 2, 1, 3]], **good)
    with pytest.raises(ValidationError, match="profile"):
        SetScan(omega_i=axis, **{**good, "seed_power_W": np.full(3, 1e-3)})
    with pytest.raises(ValidationError, match="> 0 W"):
        SetScan(omega_i=axis, **{**good, "seed_power_W": np.zeros(4)})
    with pytest.raises(ValidationError, match="pump power"):
        SetScan(omega_i=axis, **{**good, "pump_power_W": 0.0})
    with pytest.raises(ValidationError, match="duty"):
        SetScan(omega_i=axis, **good, duty_cycle=1.5)
    with pytest.raises(ValidationError, match="shape"):
        SetScan(omega_i=axis, **{**good, "slices": slices[:, :-1]})
    with pytest.raises(ValidationError, match="gain"):
        tomography.simulate_set_scan(grid128, axis, 1.0, 1e-3, gain=0.0)


def test_reconstruction_needs_two_slices(grid128):
    scan = tomography.simulate_set_scan(
        grid128, [float(grid128.omega_i[5])], 1.0, 1e-3
    )
    with pytest.raises(ValidationError, match="at least 2 slices"):
        tomography.reconstruct_jsi(scan)


# --------------------------------------------------------------- noise


def test_noise_model_validation():
    with pytest.raises(ValidationError, match="rel_sigma"):
        NoiseModel(rel_sigma=-0.1)
    with pytest.raises(ValidationError, match="dark_floor"):
        NoiseModel(dark_floor=-1.0)
    assert NoiseModel(seed=7).seed == (7,)
    assert not NoiseModel().active
    assert NoiseModel(rel_sigma=0.01).active


def test_noise_is_reproducible_and_thread_invariant(grid128):
    noise = NoiseModel(rel_sigma=0.01, dark_floor=2.0, seed=(42,))
    kwargs = dict(
        truth=grid128, seed_omega_i=grid128.omega_i[::8],
        pump_power_W=1.0, seed_power_W=1e-3, noise=noise, gain=1e9,
    )
    serial = tomography.simulate_set_scan(threads=1, **kwargs)
    threaded = tomography.simulate_set_scan(threads=4, **kwargs)
    repeat = tomography.simulate_set_scan(threads=1, **kwargs)
    assert np.array_equal(serial.slices, threaded.slices)
    assert np.array_equal(serial.slices, repeat.slices)
    other = tomography.simulate_set_scan(
        threads=1, **{**kwargs, "noise": NoiseModel(0.01, 2.0, (43,))}
    )
    assert not np.array_equal(serial.slices, other.slices)


def test_noise_clips_at_zero_before_dark_floor(grid128):
    axis = grid128.omega_i[::8]
    wild = tomography.simulate_set_scan(
        grid128, axis, 1.0, 1e-3,
        noise=NoiseModel(rel_sigma=50.0, seed=(1,)), gain=1e9,
    )
    assert np.all(wild.slices >= 0.0)
    assert np.any(wild.slices == 0.0)  # clipped draws land exactly at zero
    dark = tomography.simulate_set_scan(
        grid128, axis, 1.0, 1e-3,
        noise=NoiseModel(rel_sigma=50.0, dark_floor=3.5, seed=(1,)),
        gain=1e9,
    )
    # same draws, shifted by the constant floor
    assert np.allclose(dark.slices, wild.slices + 3.5, rtol=0.0, atol=1e-9)
    assert np.min(dark.slices) == pytest.approx(3.5, abs=1e-12)


def test_dark_floor_adds_exactly(grid128):
    axis = grid128.omega_i[::8]
    clean = tomography.simulate_set_scan(grid128, axis, 1.0, 1e-3, gain=1e9)
    dark = tomography.simulate_set_scan(
        grid128, axis, 1.0, 1e-3,
        noise=NoiseModel(dark_floor=7.25), gain=1e9,
    )
    assert np.array_equal(dark.slices, clean.slices + 7.25)


def test_reconstruction_error_tracks_noise_level(grid128):
    """Mean relative L2 reconstruction error under 1% multiplicative noise
    must sit near 1%: systematically larger means the pipeline adds error,
    smaller means it smooths the data."""
    truth = normalized_truth(grid128)
    errors = []
    for draw in range(100):
        scan = tomography.simulate_set_scan(
            grid128, grid128.omega_i, 1.0, 1e-3,
            noise=NoiseModel(rel_sigma=0.01, seed=(1234, draw)), gain=1e9,
        )
        rec = tomography.reconstruct_jsi(scan)
        errors.append(
            np.linalg.norm(rec.values - truth) / np.linalg.norm(truth)
        )
    mean_err = float(np.mean(errors))
    assert 0.005 < mean_err < 0.02


# ------------------------------------------------------- power scaling


def test_power_scaling_noiseless_exponents(grid128):
    powers = np.geomspace(1e-4, 1e-2, 5)
    scaling = tomography.power_scaling_check(grid128, powers, powers)
    assert scaling.seed_exponent == pytest.approx(1.0, abs=1e-9)
    assert scaling.pump_exponent == pytest.approx(2.0, abs=1e-9)
    assert scaling.r_squared_seed > 1.0 - 1e-12
    assert scaling.r_squared_pump > 1.0 - 1e-12


def test_power_scaling_with_noise_and_dark(grid128):
    # dark floor sized to the raw counts (~1e-21..1e-17 here) so its
    # subtraction leaves the signal representable
    noise = NoiseModel(rel_sigma=0.01, dark_floor=1e-18, seed=(9,))
    powers = np.geomspace(1e-4, 1e-2, 7)
    scaling = tomography.power_scaling_check(
        grid128, powers, powers, noise=noise
    )
    assert scaling.seed_exponent == pytest.approx(1.0, abs=0.02)
    assert scaling.pump_exponent == pytest.approx(2.0, abs=0.02)
    assert scaling.r_squared_seed > 0.999
    assert scaling.r_squared_pump > 0.999


def test_power_scaling_validation(grid128):
    four = np.geomspace(1e-4, 1e-2, 4)
    five = np.geomspace(1e-4, 1e-2, 5)
    with pytest.raises(ValidationError, match="at least 5"):
        tomography.power_scaling_check(grid128, four, five)
    with pytest.raises(ValidationError, match="> 0 W"):
        tomography.power_scaling_check(grid128, five, five * 0.0)


# ----------------------------------------------------------------- IO


def test_scan_csv_layout(grid128):
    scan = tomography.simulate_set_scan(
        grid128, grid128.omega_i[:2], 1.0, [1e-3, 2e-3]
    )
    text = tomography.set_scan_to_csv(scan)
    lines = text.splitlines()
    assert lines[0] == "seed_lambda_nm,signal_lambda_nm,counts,seed_power_W"
    assert len(lines) == 1 + 2 * grid128.omega_s.size
    first = lines[1].split(",")
    assert float(first[0]) == pytest.approx(
        float(scan.lambda_i_nm[0]), rel=1e-8
    )
    assert float(first[1]) == pytest.approx(
        float(scan.lambda_s_nm[0]), rel=1e-8
    )
    assert float(first[3]) == pytest.approx(1e-3, rel=1e-8)
    # second block switches to the second seed step and power
    second = lines[1 + grid128.omega_s.size].split(",")
    assert float(second[3]) == pytest.approx(2e-3, rel=1e-8)


def test_reconstruction_csv_layout(grid128):
    rec = tomography.reconstruct_jsi(
        tomography.simulate_set_scan(grid128, grid128.omega_i, 1.0, 1e-3)
    )
    lines = tomography.reconstruction_to_csv(rec).splitlines()
    assert lines[0].split(",")[0] == "0"
    assert len(lines) == 1 + rec.omega_s.size
