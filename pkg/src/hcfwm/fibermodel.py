"""Tube-model dispersion of gas-filled antiresonant hollow-core fiber.

The fundamental-ish core modes of a single-ring antiresonant fiber are
modeled as those of a gas-filled tube of effective radius ``R_eff`` with a
silica wall of thickness ``t``:

    n_eff = n_gas - u^2 / (2 k0^2 n_gas R_eff^2)
            - u^2 / (k0^3 n_gas^2 R_eff^3)
              * cot(psi) * (eps + 1) / (2 sqrt(eps - 1))

with ``u`` the n-th zero of the Bessel function J_{m-1} for mode HE_{mn}
(2.405 for HE11), ``psi = k0 t sqrt(n_si^2 - n_gas^2)`` the transverse phase
across the wall, and ``eps = n_si^2 / n_gas^2``.  The cot term diverges at
the wall resonances

    lambda_j = (2 t / j) sqrt(n_si^2(lambda_j) - n_gas^2(lambda_j)),  j = 1, 2, ...

which split the spectrum into transmission bands, labeled with Roman
numerals from the long-wavelength side: band I lies above lambda_1, band II
between lambda_2 and lambda_1, and so on.  Labels are assigned from the full
resonance list, so clipping to a narrower window never renumbers bands.
Evaluation is refused inside an exclusion zone of +-0.5% of lambda_j around
every resonance, where the tube model has no quantitative meaning.

All dispersion arithmetic runs on reduced quantities: the reduced index
``delta_eff = n_eff - 1`` (a few 1e-4 in magnitude) and the reduced
wavevector ``kappa = omega * delta_eff / c``, so that group-delay
differences between pump, signal, and idler survive in double precision.
Group velocity dispersion is formed from kappa by central differences; the
full ``k = omega / c + kappa`` is reconstructed only on demand.

Units: R_eff in um, t in nm, wavelengths vacuum nm, omega rad/s, beta1 s/m,
beta2 s^2/m.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.constants import c as _C
from scipy.optimize import brentq
from scipy.special import jn_zeros

from . import gasmedia
from .errors import (
    ConvergenceError,
    DivergenceZoneError,
    RangeError,
    StencilError,
    ValidationError,
)
from .gasmedia import GasState

EXCLUSION_FRACTION = 0.005

# relative omega steps for the dispersion stencils; the second-difference
# step is wider because beta2 of these fibers is ~1e-28 s^2/m and a 1e-5
# step would push the difference below double-precision cancellation noise
BETA1_REL_STEP = 1e-5
BETA2_REL_STEP = 1e-4

_ROMAN = (
    (1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"),
    (90, "XC"), (50, "L"), (40, "XL"), (10, "X"), (9, "IX"),
    (5, "V"), (4, "IV"), (1, "I"),
)


def roman(n: int) -> str:
    if n < 1:
        raise ValueError("roman numerals start at 1")
    out = []
    for value, glyph in _ROMAN:
        while n >= value:
            out.append(glyph)
            n -= value
    return "".join(out)


def omega_from_lambda_nm(lambda_nm):
    return 2.0 * np.pi * _C / (np.asarray(lambda_nm, dtype=float) * 1e-9)


def lambda_nm_from_omega(omega):
    return 2.0 * np.pi * _C / np.asarray(omega, dtype=float) * 1e9


@dataclass(frozen=True)
class FiberModel:
    """Geometry and mode of the tube model."""

    R_eff_um: float
    t_nm: float
    mode_m: int = 1
    mode_n: int = 1

    def __post_init__(self):
        if self.R_eff_um <= 0.0:
            raise ValidationError(f"R_eff_um must be > 0, got {self.R_eff_um}")
        if self.t_nm <= 0.0:
            raise ValidationError(f"t_nm must be > 0, got {self.t_nm}")
        if self.mode_m < 1 or self.mode_n < 1:
            raise ValidationError(
                f"mode indices must be >= 1, got HE{self.mode_m}{self.mode_n}"
            )

    @property
    def u(self) -> float:
        """Transverse mode parameter: n-th zero of J_{m-1}."""
        return float(jn_zeros(self.mode_m - 1, self.mode_n)[self.mode_n - 1])

    @property
    def mode_label(self) -> str:
        return f"HE{self.mode_m}{self.mode_n}"


@dataclass(frozen=True)
class Band:
    """One transmission band, clipped to the model window."""

    label: str
    index: int
    lo_nm: float
    hi_nm: float
    res_lo_nm: float | None
    res_hi_nm: float | None

    @property
    def usable_lo_nm(self) -> float:
        """Lower edge with the resonance exclusion zone removed."""
        if self.res_lo_nm is not None:
            return max(self.lo_nm, self.res_lo_nm * (1.0 + EXCLUSION_FRACTION))
        return self.lo_nm

    @property
    def usable_hi_nm(self) -> float:
        if self.res_hi_nm is not None:
            return min(self.hi_nm, self.res_hi_nm * (1.0 - EXCLUSION_FRACTION))
        return self.hi_nm


@dataclass(frozen=True)
class BandStructure:
    """Resonances and bands of one (fiber, gas) pair over a window."""

    fiber: FiberModel
    gas: GasState
    window_nm: tuple[float, float]
    resonances_nm: tuple[float, ...]  # descending: lambda_1 > lambda_2 > ...
    bands: tuple[Band, ...]

    @cached_property
    def _res_array(self) -> np.ndarray:
        return np.asarray(self.resonances_nm, dtype=float)

    @cached_property
    def bands_by_label(self) -> dict[str, Band]:
        return {b.label: b for b in self.bands}

    def band_index(self, lambda_nm) -> np.ndarray:
        """1-based band index j for each wavelength (band I is j = 1)."""
        lam = np.atleast_1d(np.asarray(lambda_nm, dtype=float))
        res = self._res_array
        if res.size == 0:
            return np.ones(lam.shape, dtype=int)
        # count resonances above lambda; arrays negated so searchsorted
        # sees ascending order
        return 1 + np.searchsorted(-res, -lam, side="left")

    def in_band_mask(self, lambda_nm) -> np.ndarray:
        """True where evaluation is allowed: inside the window and clear of
        every resonance exclusion zone."""
        lam = np.atleast_1d(np.asarray(lambda_nm, dtype=float))
        lo, hi = self.window_nm
        ok = (lam > lo) & (lam < hi)
        for lj in self.resonances_nm:
            ok &= np.abs(lam - lj) > EXCLUSION_FRACTION * lj
        return ok

    def band_of(self, lambda_nm: float) -> Band | None:
        """Band containing the wavelength, or None if not evaluable there."""
        if not bool(self.in_band_mask(lambda_nm)[0]):
            return None
        j = int(self.band_index(lambda_nm)[0])
        return self.bands_by_label.get(roman(j))

    def require_band(self, lambda_nm: float) -> Band:
        """Like band_of, but raises a specific error instead of None."""
        lam = float(lambda_nm)
        lo, hi = self.window_nm
        if not (lo < lam < hi):
            raise RangeError(
                f"{lam:.6g} nm outside the model window [{lo:.6g}, {hi:.6g}] nm "
                f"for {self.gas.species} at {self.gas.pressure_bar:g} bar"
            )
        for lj in self.resonances_nm:
            if abs(lam - lj) <= EXCLUSION_FRACTION * lj:
                raise DivergenceZoneError(
                    f"{lam:.6g} nm lies within {100 * EXCLUSION_FRACTION:.1f}% of the "
                    f"wall resonance at {lj:.6g} nm where the tube model diverges",
                    lambda_j_nm=lj,
                )
        band = self.band_of(lam)
        if band is None:
            raise RangeError(f"{lam:.6g} nm is not inside any transmission band")
        return band


def model_window_nm(fiber: FiberModel, gas: GasState) -> tuple[float, float]:
    """Joint validity window of the gas and wall dispersion data."""
    si = gasmedia.get_model("silica")
    lo = max(gas.model.lambda_min_nm, si.lambda_min_nm)
    hi = min(gas.model.lambda_max_nm, si.lambda_max_nm)
    if not lo < hi:
        raise ValidationError(
            f"empty joint validity window for {gas.species} and silica"
        )
    return (lo, hi)


def _solve_resonance(fiber: FiberModel, gas: GasState, j: int) -> float:
    """Fixed-point solve of lambda_j = (2t/j) sqrt(n_si^2 - n_gas^2)."""
    t_um = fiber.t_nm * 1e-3
    # seed with fixed indices n_si = 1.45, n_gas = 1
    lam_um = (2.0 * t_um / j) * np.sqrt(1.45**2 - 1.0)
    si = gasmedia.get_model("silica")
    for _ in range(100):
        lam_nm = lam_um * 1e3
        n_si2 = 1.0 + si.n_squared_minus_one(lam_nm, check=False)
        dg = gasmedia.delta_gas(gas, lam_nm, check=False)
        n_gas2 = (1.0 + dg) ** 2
        nxt = (2.0 * t_um / j) * np.sqrt(n_si2 - n_gas2)
        if abs(nxt - lam_um) < 1e-12:  # 1e-9 nm in um
            return float(nxt * 1e3)
        lam_um = nxt
    raise ConvergenceError(
        f"resonance j={j} did not converge to 1e-9 nm within 100 iterations "
        f"(t = {fiber.t_nm:g} nm, {gas.species} at {gas.pressure_bar:g} bar)"
    )


@lru_cache(maxsize=64)
def _band_structure_full(fiber: FiberModel, gas: GasState) -> BandStructure:
    window = model_window_nm(fiber, gas)
    lo, hi = window
    # solve resonances down past the window edge so exclusion zones of
    # just-outside resonances still apply; 170 nm keeps the Sellmeier sums
    # clear of their UV poles during iteration
    floor = max(170.0, 0.8 * lo)
    resonances: list[float] = []
    j = 1
    while j <= 200:
        lam_j = _solve_resonance(fiber, gas, j)
        if lam_j < floor:
            break
        resonances.append(lam_j)
        j += 1
    res = tuple(resonances)

    bands: list[Band] = []
    # band j spans (lambda_j, lambda_{j-1}); lambda_0 = +inf
    uppers = (np.inf,) + res
    lowers = res + (0.0,)
    for idx, (res_lo, res_hi) in enumerate(zip(lowers, uppers), start=1):
        b_lo = max(lo, res_lo)
        b_hi = min(hi, res_hi if np.isfinite(res_hi) else hi)
        if b_lo >= b_hi:
            continue
        bands.append(
            Band(
                label=roman(idx),
                index=idx,
                lo_nm=b_lo,
                hi_nm=b_hi,
                res_lo_nm=res_lo if res_lo > 0.0 else None,
                res_hi_nm=res_hi if np.isfinite(res_hi) else None,
            )
        )
    return BandStructure(
        fiber=fiber, gas=gas, window_nm=window,
        resonances_nm=res, bands=tuple(bands),
    )


def band_structure(fiber: FiberModel, gas: GasState) -> BandStructure:
    """Bands over the full joint validity window (cached)."""
    return _band_structure_full(fiber, gas)


def resonance_wavelengths(
    fiber: FiberModel,
    gas: GasState,
    window_nm: tuple[float, float] | None = None,
) -> BandStructure:
    """Band structure, optionally clipped to a user window.

    Clipping narrows band edges and drops resonances outside the window but
    keeps the global labels, so band II stays band II however the window is
    drawn.
    """
    full = band_structure(fiber, gas)
    if window_nm is None:
        return full
    lo, hi = float(window_nm[0]), float(window_nm[1])
    flo, fhi = full.window_nm
    lo, hi = max(lo, flo), min(hi, fhi)
    if not lo < hi:
        raise ValidationError(f"empty window ({window_nm[0]}, {window_nm[1]}) nm")
    bands = []
    for b in full.bands:
        b_lo, b_hi = max(b.lo_nm, lo), min(b.hi_nm, hi)
        if b_lo < b_hi:
            bands.append(
                Band(label=b.label, index=b.index, lo_nm=b_lo, hi_nm=b_hi,
                     res_lo_nm=b.res_lo_nm, res_hi_nm=b.res_hi_nm)
            )
    res = tuple(lj for lj in full.resonances_nm if lo <= lj <= hi)
    return BandStructure(
        fiber=fiber, gas=gas, window_nm=(lo, hi),
        resonances_nm=res, bands=tuple(bands),
    )


def delta_eff(
    fiber: FiberModel,
    gas: GasState,
    lambda_nm,
    check: bool = True,
    include_resonance_term: bool = True,
):
    """Reduced effective index n_eff - 1 of the mode.

    With ``include_resonance_term=False`` the cot term is dropped, leaving
    gas dispersion plus the smooth capillary waveguide term; useful for
    isolating contributions, not for quantitative band-edge work.
    """
    lam = np.asarray(lambda_nm, dtype=float)
    if check:
        structure = band_structure(fiber, gas)
        for lam_i in np.atleast_1d(lam):
            structure.require_band(float(lam_i))
    dg = gasmedia.delta_gas(gas, lam, check=check)
    n_gas = 1.0 + dg
    u = fiber.u
    k0 = 2.0 * np.pi / (lam * 1e-9)
    R = fiber.R_eff_um * 1e-6
    out = dg - u**2 / (2.0 * k0**2 * n_gas * R**2)
    if include_resonance_term:
        si = gasmedia.get_model("silica")
        n_si2 = 1.0 + si.n_squared_minus_one(lam, check=check)
        eps = n_si2 / n_gas**2
        psi = k0 * (fiber.t_nm * 1e-9) * np.sqrt(n_si2 - n_gas**2)
        out = out - (
            u**2 / (k0**3 * n_gas**2 * R**3)
            * (eps + 1.0) / (2.0 * np.sqrt(eps - 1.0) * np.tan(psi))
        )
    return out


def effective_index(fiber, gas, lambda_nm, check=True, include_resonance_term=True):
    """Absolute effective index; see delta_eff for the reduced form."""
    return 1.0 + delta_eff(
        fiber, gas, lambda_nm, check=check,
        include_resonance_term=include_resonance_term,
    )


def reduced_kappa(fiber: FiberModel, gas: GasState, omega, check: bool = True):
    """Reduced wavevector kappa = omega (n_eff - 1) / c in rad/m."""
    om = np.asarray(omega, dtype=float)
    lam = lambda_nm_from_omega(om)
    return om * delta_eff(fiber, gas, lam, check=check) / _C


def wavevector(fiber: FiberModel, gas: GasState, omega, check: bool = True):
    """Full propagation constant k = omega/c + kappa in rad/m."""
    om = np.asarray(omega, dtype=float)
    return om / _C + reduced_kappa(fiber, gas, om, check=check)


@dataclass(frozen=True)
class DispersionPoint:
    """Local dispersion at one wavelength."""

    lambda_nm: float
    omega: float
    k: float        # rad/m
    beta1: float    # s/m, inverse group velocity
    beta2: float    # s^2/m


def _stencil_ok(structure: BandStructure, omega_pts: np.ndarray) -> bool:
    lam = lambda_nm_from_omega(omega_pts)
    return bool(np.all(structure.in_band_mask(lam)))


def dispersion_derivatives(
    fiber: FiberModel, gas: GasState, lambda_nm: float
) -> DispersionPoint:
    """k, beta1, beta2 at one wavelength by central differences on kappa.

    beta1 = 1/c + d kappa / d omega at relative step 1e-5; beta2 from the
    second central difference at relative step 1e-4.  If a stencil point
    lands outside the band (near a resonance or window edge) the steps are
    halved up to three times before giving up.
    """
    lam0 = float(lambda_nm)
    structure = band_structure(fiber, gas)
    structure.require_band(lam0)
    om0 = float(omega_from_lambda_nm(lam0))

    h1, h2 = BETA1_REL_STEP * om0, BETA2_REL_STEP * om0
    for _ in range(4):
        pts = np.array([om0 - h2, om0 - h1, om0, om0 + h1, om0 + h2])
        if _stencil_ok(structure, pts):
            kap = reduced_kappa(fiber, gas, pts, check=False)
            beta1 = 1.0 / _C + (kap[3] - kap[1]) / (2.0 * h1)
            beta2 = (kap[4] - 2.0 * kap[2] + kap[0]) / h2**2
            return DispersionPoint(
                lambda_nm=lam0, omega=om0,
                k=om0 / _C + float(kap[2]),
                beta1=float(beta1), beta2=float(beta2),
            )
        h1, h2 = 0.5 * h1, 0.5 * h2
    raise StencilError(
        f"no room for a dispersion stencil at {lam0:.6g} nm; a band edge or "
        f"resonance exclusion zone is closer than {BETA2_REL_STEP / 8:.1e} "
        f"(relative) in omega"
    )


def _beta2_on_grid(
    fiber: FiberModel, gas: GasState, omega: np.ndarray
) -> np.ndarray:
    """Vectorized beta2 for grids already known to sit safely inside a band."""
    h2 = BETA2_REL_STEP * omega
    kp = reduced_kappa(fiber, gas, omega + h2, check=False)
    k0 = reduced_kappa(fiber, gas, omega, check=False)
    km = reduced_kappa(fiber, gas, omega - h2, check=False)
    return (kp - 2.0 * k0 + km) / h2**2


def find_zdw(
    fiber: FiberModel,
    gas: GasState,
    band: Band | str,
    grid_points: int = 400,
) -> list[float]:
    """Zero-dispersion wavelengths (beta2 = 0) inside one band, in nm.

    Scans beta2 on a uniform omega grid over the band interior (staying
    clear of exclusion zones and leaving stencil margin), brackets sign
    changes, and polishes each with a root solve.  Returns wavelengths in
    ascending order; empty list if beta2 does not cross zero.
    """
    structure = band_structure(fiber, gas)
    if isinstance(band, str):
        try:
            band = structure.bands_by_label[band]
        except KeyError:
            raise ValidationError(
                f"no band {band!r}; have {sorted(structure.bands_by_label)}"
            ) from None

    # interior margins: exclusion zone is 0.5%, stencil reach is 2e-4, so
    # 0.6% against resonance edges and 0.1% against window edges is safe
    lo = band.usable_lo_nm * (1.001 if band.res_lo_nm is None else 1.0)
    if band.res_lo_nm is not None:
        lo = band.res_lo_nm * (1.0 + EXCLUSION_FRACTION + 1e-3)
    hi = band.usable_hi_nm * (0.999 if band.res_hi_nm is None else 1.0)
    if band.res_hi_nm is not None:
        hi = band.res_hi_nm * (1.0 - EXCLUSION_FRACTION - 1e-3)
    lo, hi = max(lo, band.lo_nm), min(hi, band.hi_nm)
    if not lo < hi:
        return []

    om = np.linspace(
        float(omega_from_lambda_nm(hi)), float(omega_from_lambda_nm(lo)),
        max(int(grid_points), 8),
    )
    b2 = _beta2_on_grid(fiber, gas, om)

    def f(omega: float) -> float:
        return float(_beta2_on_grid(fiber, gas, np.array([omega]))[0])

    roots: list[float] = []
    sign = np.sign(b2)
    for i in range(om.size - 1):
        if sign[i] == 0.0:
            roots.append(float(om[i]))
        elif sign[i] * sign[i + 1] < 0.0:
            roots.append(float(brentq(f, om[i], om[i + 1], rtol=1e-13)))
    if sign[-1] == 0.0:
        roots.append(float(om[-1]))

    lams = sorted(float(lambda_nm_from_omega(r)) for r in roots)
    deduped: list[float] = []
    for lam in lams:
        if not deduped or abs(lam - deduped[-1]) > 1e-5 * lam:
            deduped.append(lam)
    return deduped
