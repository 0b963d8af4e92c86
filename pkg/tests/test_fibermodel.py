"""Tube-model dispersion: resonances, bands, derivatives, divergence zones."""

from __future__ import annotations

import numpy as np
import pytest

from hcfwm import fibermodel, gasmedia
from hcfwm.errors import (
    DivergenceZoneError,
    RangeError,
    StencilError,
    ValidationError,
)

# frozen regression values for the reference fiber (R_eff 22 um, t 630 nm)
VACUUM_RESONANCES_NM = (1317.2899469788158, 666.790835205989, 449.9856380633246)
XENON_34_RESONANCES_NM = (1314.7649827914972, 665.5223451924172, 449.1405519135065)
NEFF_VACUUM_NO_COT_1030 = 0.9998394514036335
ZDW_XENON_34_BAND_I_NM = 1588.0716635930262
ZDW_XENON_34_BAND_II_NM = 835.3384652130806
BETA1_XENON_34_1030 = 3.343570955435662e-09
BETA2_XENON_34_1030 = -8.272111617054772e-28


def test_resonance_goldens_vacuum(fiber, vacuum):
    structure = fibermodel.resonance_wavelengths(
        fiber, vacuum, window_nm=(400.0, 2000.0)
    )
    assert structure.resonances_nm == pytest.approx(
        VACUUM_RESONANCES_NM, rel=1e-9
    )


def test_resonances_satisfy_their_defining_equation(fiber, vacuum):
    """lambda_j must solve lambda = (2 t / j) sqrt(n_si^2 - n_gas^2)."""
    structure = fibermodel.band_structure(fiber, vacuum)
    si = gasmedia.get_model("silica")
    for j, lam in enumerate(structure.resonances_nm[:4], start=1):
        n_si2 = 1.0 + float(si.n_squared_minus_one(lam, check=False))
        rhs = (2.0 * fiber.t_nm / j) * np.sqrt(n_si2 - 1.0)
        assert lam == pytest.approx(rhs, abs=1e-6)


def test_gas_filling_shifts_resonances_down(fiber, xenon, vacuum):
    xe = fibermodel.band_structure(fiber, xenon).resonances_nm
    assert xe[:3] == pytest.approx(XENON_34_RESONANCES_NM, rel=1e-9)
    vac = fibermodel.band_structure(fiber, vacuum).resonances_nm
    # higher core index narrows the index step across the wall
    assert all(x < v for x, v in zip(xe[:3], VACUUM_RESONANCES_NM))
    assert all(x < v for x, v in zip(xe, vac))


def test_band_labels_and_edges(fiber, vacuum):
    structure = fibermodel.resonance_wavelengths(
        fiber, vacuum, window_nm=(400.0, 2000.0)
    )
    labels = [b.label for b in structure.bands]
    assert labels == ["I", "II", "III", "IV"]
    band_i = structure.bands_by_label["I"]
    assert band_i.lo_nm == pytest.approx(VACUUM_RESONANCES_NM[0], rel=1e-9)
    assert band_i.hi_nm == 2000.0
    band_ii = structure.bands_by_label["II"]
    assert band_ii.lo_nm == pytest.approx(VACUUM_RESONANCES_NM[1], rel=1e-9)
    assert band_ii.hi_nm == pytest.approx(VACUUM_RESONANCES_NM[0], rel=1e-9)


def test_window_clipping_keeps_global_labels(fiber, vacuum):
    clipped = fibermodel.resonance_wavelengths(
        fiber, vacuum, window_nm=(700.0, 1300.0)
    )
    assert [b.label for b in clipped.bands] == ["II"]
    band = clipped.bands[0]
    assert band.index == 2
    assert band.lo_nm == 700.0 and band.hi_nm == 1300.0
    # resonances outside the window are dropped from the listing only
    assert clipped.resonances_nm == ()
    with pytest.raises(ValidationError, match="empty window"):
        fibermodel.resonance_wavelengths(fiber, vacuum, window_nm=(900.0, 900.0))


def test_band_index_and_band_of(fiber, xenon):
    structure = fibermodel.band_structure(fiber, xenon)
    assert structure.band_index([1500.0, 1030.0, 500.0]).tolist() == [1, 2, 3]
    assert structure.band_of(1030.0).label == "II"
    assert structure.band_of(XENON_34_RESONANCES_NM[0]) is None


def test_exclusion_zone_half_percent(fiber, xenon):
    structure = fibermodel.band_structure(fiber, xenon)
    lam1 = structure.resonances_nm[0]
    inside = lam1 * 1.004
    outside = lam1 * 1.006
    assert not bool(structure.in_band_mask(inside)[0])
    assert bool(structure.in_band_mask(outside)[0])
    with pytest.raises(DivergenceZoneError) as err:
        structure.require_band(inside)
    assert err.value.lambda_j_nm == pytest.approx(lam1, rel=1e-12)
    with pytest.raises(RangeError, match="outside the model window"):
        structure.require_band(5000.0)


def test_capillary_index_deficit(fiber, vacuum):
    """Without the wall term the mode sits below the gas index by
    u^2 lambda^2 / (8 pi^2 R^2), the classic capillary deficit."""
    n_eff = float(
        fibermodel.effective_index(
            fiber, vacuum, 1030.0, include_resonance_term=False
        )
    )
    assert n_eff == pytest.approx(NEFF_VACUUM_NO_COT_1030, rel=1e-12)
    u = fiber.u
    expected_deficit = (
        u**2 * (1030.0e-9) ** 2 / (8.0 * np.pi**2 * (fiber.R_eff_um * 1e-6) ** 2)
    )
    assert 1.0 - n_eff == pytest.approx(expected_deficit, rel=1e-9)


def test_cot_term_diverges_toward_resonance(fiber, xenon):
    structure = fibermodel.band_structure(fiber, xenon)
    lam1 = structure.resonances_nm[0]

    def cot_magnitude(offset: float) -> float:
        lam = lam1 * (1.0 + offset)
        full = fibermodel.delta_eff(fiber, xenon, lam, check=False)
        smooth = fibermodel.delta_eff(
            fiber, xenon, lam, check=False, include_resonance_term=False
        )
        return abs(float(full - smooth))

    offsets = (0.10, 0.05, 0.02, 0.01, 0.006, 0.001)
    mags = [cot_magnitude(o) for o in offsets]
    assert all(b > a for a, b in zip(mags, mags[1:]))
    assert mags[-1] / mags[0] > 50.0


def test_wavevector_consistency(fiber, xenon):
    om = fibermodel.omega_from_lambda_nm(np.array([800.0, 1030.0, 1500.0]))
    k = fibermodel.wavevector(fiber, xenon, om)
    kappa = fibermodel.reduced_kappa(fiber, xenon, om)
    c = 299792458.0
    assert np.allclose(k, om / c + kappa, rtol=0.0, atol=0.0)
    n_eff = fibermodel.effective_index(
        fiber, xenon, fibermodel.lambda_nm_from_omega(om)
    )
    assert np.allclose(k, n_eff * om / c, rtol=1e-12)


def test_lambda_omega_roundtrip():
    lam = np.array([250.0, 1030.0, 3200.0])
    back = fibermodel.lambda_nm_from_omega(fibermodel.omega_from_lambda_nm(lam))
    assert np.allclose(back, lam, rtol=1e-14)


def test_dispersion_derivative_goldens(fiber, xenon):
    pt = fibermodel.dispersion_derivatives(fiber, xenon, 1030.0)
    assert pt.beta1 == pytest.approx(BETA1_XENON_34_1030, rel=1e-12)
    assert pt.beta2 == pytest.approx(BETA2_XENON_34_1030, rel=1e-9)
    # beta1 is within a part in 1e3 of n_eff / c (group vs phase index)
    n_eff = float(fibermodel.effective_index(fiber, xenon, 1030.0))
    assert pt.beta1 == pytest.approx(n_eff / 299792458.0, rel=1e-3)


def test_beta1_smooth_across_neighbors(fiber, xenon):
    b = [
        fibermodel.dispersion_derivatives(fiber, xenon, lam).beta1
        for lam in (1029.0, 1030.0, 1031.0)
    ]
    # central value agrees with the average of its neighbors far better
    # than the neighbor spread itself: no stencil noise
    spread = abs(b[2] - b[0])
    assert abs(b[1] - 0.5 * (b[0] + b[2])) < 1e-2 * spread


def test_beta2_sign_structure(fiber, xenon):
    """Normal dispersion at short wavelengths, anomalous beyond the ZDW."""
    assert fibermodel.dispersion_derivatives(fiber, xenon, 780.0).beta2 > 0.0
    assert fibermodel.dispersion_derivatives(fiber, xenon, 1030.0).beta2 < 0.0
    assert fibermodel.dispersion_derivatives(fiber, xenon, 1500.0).beta2 > 0.0
    assert fibermodel.dispersion_derivatives(fiber, xenon, 1700.0).beta2 < 0.0


def test_find_zdw_goldens_and_residual(fiber, xenon):
    zdw_i = fibermodel.find_zdw(fiber, xenon, "I")
    assert zdw_i == pytest.approx([ZDW_XENON_34_BAND_I_NM], rel=1e-9)
    zdw_ii = fibermodel.find_zdw(fiber, xenon, "II")
    assert zdw_ii == pytest.approx([ZDW_XENON_34_BAND_II_NM], rel=1e-9)
    at_root = fibermodel.dispersion_derivatives(fiber, xenon, zdw_i[0]).beta2
    assert abs(at_root) < 1e-30
    with pytest.raises(ValidationError, match="no band"):
        fibermodel.find_zdw(fiber, xenon, "XL")


def test_stencil_error_against_exclusion_zone(fiber, xenon):
    structure = fibermodel.band_structure(fiber, xenon)
    lam1 = structure.resonances_nm[0]
    # legal wavelength, but the finite-difference stencil cannot fit
    # between it and the exclusion-zone edge
    lam = lam1 * 0.995 * (1.0 - 1e-6)
    assert structure.require_band(lam).label == "II"
    with pytest.raises(StencilError, match="stencil"):
        fibermodel.dispersion_derivatives(fiber, xenon, lam)


def test_derivatives_refuse_divergence_zone(fiber, xenon):
    lam2 = fibermodel.band_structure(fiber, xenon).resonances_nm[1]
    with pytest.raises(DivergenceZoneError):
        fibermodel.dispersion_derivatives(fiber, xenon, lam2 * 1.001)
    with pytest.raises(DivergenceZoneError):
        fibermodel.delta_eff(fiber, xenon, lam2 * 1.001)


def test_model_window_intersects_gas_and_silica(fiber, xenon, vacuum):
    assert fibermodel.model_window_nm(fiber, xenon) == (250.0, 3200.0)
    assert fibermodel.model_window_nm(fiber, vacuum) == (210.0, 3710.0)


def test_mode_parameter_bessel_zeros():
    he11 = fibermodel.FiberModel(R_eff_um=22.0, t_nm=630.0)
    assert he11.u == pytest.approx(2.404825557695773, rel=1e-12)
    assert he11.mode_label == "HE11"
    he12 = fibermodel.FiberModel(R_eff_um=22.0, t_nm=630.0, mode_m=1, mode_n=2)
    assert he12.u == pytest.approx(5.520078110286311, rel=1e-12)


def test_higher_order_mode_deeper_deficit(vacuum):
    base = fibermodel.FiberModel(R_eff_um=22.0, t_nm=630.0)
    he12 = fibermodel.FiberModel(R_eff_um=22.0, t_nm=630.0, mode_n=2)
    d11 = float(fibermodel.delta_eff(base, vacuum, 1030.0,
                                     include_resonance_term=False))
    d12 = float(fibermodel.delta_eff(he12, vacuum, 1030.0,
                                     include_resonance_term=False))
    assert d12 < d11 < 0.0
    assert d12 / d11 == pytest.approx((he12.u / base.u) ** 2, rel=1e-9)


def test_fiber_validation():
    with pytest.raises(ValidationError):
        fibermodel.FiberModel(R_eff_um=0.0, t_nm=630.0)
    with pytest.raises(ValidationError):
        fibermodel.FiberModel(R_eff_um=22.0, t_nm=-1.0)
    with pytest.raises(ValidationError):
        fibermodel.FiberModel(R_eff_um=22.0, t_nm=630.0, mode_m=0)


def test_roman_numerals():
    assert [fibermodel.roman(n) for n in range(1, 10)] == [
        "I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX"
    ]
    with pytest.raises(ValueError):
        fibermodel.roman(0)
