"""Joint spectral amplitude F(omega_s, omega_i) = alpha * phi on a grid.

The two-photon amplitude of degenerate-pump FWM factors into an energy
conservation part, the autoconvolution of the pump spectral amplitude
evaluated at the frequency sum,

    alpha(omega_s + omega_i) = [A * A](omega_s + omega_i),

and a phase-matching part set by the fiber,

    phi = sinc(delta_k L / 2) * exp(i delta_k L / 2).

Around a solved branch (omega_s0, omega_i0) the mismatch linearizes to

    delta_k_lin =   (omega_s - omega_s0)(beta1_p - beta1_s)
                  + (omega_i - omega_i0)(beta1_p - beta1_i)

with zero offset at the branch itself.  The "full" mode instead evaluates
the un-linearized mismatch 2 k((omega_s+omega_i)/2) - k(omega_s) -
k(omega_i), whose first-order Taylor expansion reproduces delta_k_lin;
both modes therefore agree near the branch center and differ only where
dispersion curvature matters.

Pump spectra come in two flavors: an analytic Gaussian (closed-form
autoconvolution of width sqrt(2) sigma centered at 2 omega_p0) and a
sampled complex spectrum (numerical autoconvolution on its uniform grid,
zero outside twice the sampled support).  Sampled amplitudes are
normalized to unit L2 norm at construction, under which the Gaussian
closed form and the sampled autoconvolution of the same Gaussian agree
pointwise with unit peak.

Grids are square (N x N), centered on the branch, with half-width
kappa_span * max(sqrt(2) sigma, sqrt(dphi width at L)) per axis.  Cells
whose signal or idler leaves its transmission band are zeroed; the clipped
fraction is reported, warning above zero and failing above 20%.  After
construction sum |F|^2 domega_s domega_i = 1 (the overall FWM gain
constant is absorbed into this normalization).
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import fibermodel
from .errors import ClippedGridError, ValidationError
from .fibermodel import FiberModel, lambda_nm_from_omega
from .gasmedia import GasState
from .phasematch import PhaseMatchBranch

DEFAULT_GRID_N = 512
DEFAULT_KAPPA_SPAN = 4.0
CLIP_FATAL_FRACTION = 0.20

_FOUR_LN2 = 4.0 * np.log(2.0)


@dataclass(frozen=True)
class GaussianPump:
    """Transform-limited Gaussian pump: A(omega) ~ exp(-(omega-omega_p0)^2 / (2 sigma^2))."""

    omega_p0: float
    sigma: float  # rad/s, field-amplitude standard deviation

    def __post_init__(self):
        if self.omega_p0 <= 0.0:
            raise ValidationError(f"omega_p0 must be > 0, got {self.omega_p0}")
        if self.sigma <= 0.0:
            raise ValidationError(f"pump sigma must be > 0, got {self.sigma}")

    @classmethod
    def from_fwhm(cls, lambda_nm: float, fwhm_fs: float) -> "GaussianPump":
        """Pump from center wavelength and intensity FWHM duration.

        Transform-limited Gaussian assumption: FWHM_t * FWHM_omega = 4 ln 2,
        so the field sigma is 2 sqrt(ln 2) / FWHM_t.
        """
        if fwhm_fs <= 0.0:
            raise ValidationError(f"fwhm_fs must be > 0, got {fwhm_fs}")
        sigma = 2.0 * np.sqrt(np.log(2.0)) / (fwhm_fs * 1e-15)
        return cls(
            omega_p0=float(fibermodel.omega_from_lambda_nm(lambda_nm)),
            sigma=sigma,
        )

    @property
    def fwhm_fs(self) -> float:
        return 2.0 * np.sqrt(np.log(2.0)) / self.sigma * 1e15

    @property
    def rms_sigma(self) -> float:
        """Standard deviation of the intensity spectrum |A|^2."""
        return self.sigma / np.sqrt(2.0)


class SampledPump:
    """Pump given as complex amplitude samples on a uniform omega grid.

    The amplitude is rescaled to unit L2 norm and its autoconvolution is
    precomputed once on the doubled axis; pump_alpha interpolates it
    linearly and returns zero outside twice the sampled support.
    """

    def __init__(self, omega, amplitude):
        omega = np.asarray(omega, dtype=float)
        amplitude = np.asarray(amplitude, dtype=complex)
        if omega.ndim != 1 or omega.size < 4:
            raise ValidationError("sampled pump needs a 1-D axis of >= 4 points")
        if amplitude.shape != omega.shape:
            raise ValidationError("omega axis and amplitude must have equal length")
        d = np.diff(omega)
        if np.any(d <= 0.0):
            raise ValidationError("sampled pump axis must be strictly increasing")
        if np.max(d) - np.min(d) > 1e-9 * np.mean(d):
            raise ValidationError("sampled pump axis must be uniformly spaced")
        if not np.all(np.isfinite(amplitude)):
            raise ValidationError("sampled pump amplitude must be finite")
        norm2 = np.sum(np.abs(amplitude) ** 2) * d[0]
        if norm2 <= 0.0:
            raise ValidationError("sampled pump amplitude is identically zero")
        self.omega = omega
        self.amplitude = amplitude / np.sqrt(norm2)
        self._domega = float(d[0])
        # autoconvolution on the doubled axis 2*omega[0] .. 2*omega[-1]
        self._conv = np.convolve(self.amplitude, self.amplitude) * self._domega
        self._conv_start = 2.0 * float(omega[0])

    @property
    def omega_p0(self) -> float:
        """Intensity-weighted spectral centroid."""
        w = np.abs(self.amplitude) ** 2
        return float(np.sum(w * self.omega) / np.sum(w))

    @property
    def rms_sigma(self) -> float:
        """Standard deviation of the intensity spectrum |A|^2."""
        w = np.abs(self.amplitude) ** 2
        mu = np.sum(w * self.omega) / np.sum(w)
        return float(np.sqrt(np.sum(w * (self.omega - mu) ** 2) / np.sum(w)))

    @classmethod
    def modulated_gaussian(
        cls,
        omega_p0: float,
        sigma: float,
        depth: float,
        period: float,
        phase: float = 0.0,
        n: int = 4096,
        span: float = 8.0,
    ) -> "SampledPump":
        """Gaussian envelope times a sinusoidal spectral modulation.

        A(omega) = exp(-(omega-omega_p0)^2/(2 sigma^2))
                   * (1 + depth cos(2 pi (omega-omega_p0)/period + phase))

        An empirical stand-in for a pump carrying residual self-phase
        modulation structure; depth and period are calibration knobs, not
        measured quantities.
        """
        if sigma <= 0.0 or period <= 0.0:
            raise ValidationError("sigma and period must be > 0")
        if not 0.0 <= depth < 1.0:
            raise ValidationError(f"modulation depth must be in [0, 1), got {depth}")
        om = omega_p0 + np.linspace(-span * sigma, span * sigma, int(n))
        a = np.exp(-((om - omega_p0) ** 2) / (2.0 * sigma**2)) * (
            1.0 + depth * np.cos(2.0 * np.pi * (om - omega_p0) / period + phase)
        )
        return cls(om, a.astype(complex))


def pump_alpha(pump, Omega):
    """Energy conservation function alpha at the frequency sum Omega.

    Gaussian pumps use the closed form exp(-(Omega - 2 omega_p0)^2 /
    (4 sigma^2)); sampled pumps interpolate their precomputed numerical
    autoconvolution (zero outside support).  Depends on omega_s + omega_i
    only, which is what makes alpha strictly anti-diagonal on the grid.
    """
    Om = np.asarray(Omega, dtype=float)
    if isinstance(pump, GaussianPump):
        out = np.exp(-((Om - 2.0 * pump.omega_p0) ** 2) / (4.0 * pump.sigma**2))
        return out.astype(complex)
    if isinstance(pump, SampledPump):
        x = (Om - pump._conv_start) / pump._domega
        re = np.interp(x, np.arange(pump._conv.size), pump._conv.real, left=0.0, right=0.0)
        im = np.interp(x, np.arange(pump._conv.size), pump._conv.imag, left=0.0, right=0.0)
        return re + 1j * im
    raise ValidationError(f"unknown pump spectrum type {type(pump).__name__}")


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def phi_function(
    fiber: FiberModel | None,
    gas: GasState | None,
    branch: PhaseMatchBranch,
    omega_s,
    omega_i,
    L_m: float,
    mode: str = "linearized",
    check: bool = True,
):
    """Phase-matching function phi = sinc(delta_k L/2) exp(i delta_k L/2).

    mode="linearized" uses the first-order expansion around the branch (no
    fiber/gas evaluation needed); mode="full" evaluates the un-linearized
    mismatch 2k(omega_bar) - k(omega_s) - k(omega_i) with
    omega_bar = (omega_s + omega_i)/2, requiring fiber and gas.
    |phi| <= 1 everywhere.
    """
    if L_m <= 0.0:
        raise ValidationError(f"fiber length must be > 0 m, got {L_m}")
    om_s = np.asarray(omega_s, dtype=float)
    om_i = np.asarray(omega_i, dtype=float)
    if mode == "linearized":
        dk = (om_s - branch.omega_s) * (branch.beta1_p - branch.beta1_s) + (
            om_i - branch.omega_i
        ) * (branch.beta1_p - branch.beta1_i)
    elif mode == "full":
        if fiber is None or gas is None:
            raise ValidationError("full mode requires fiber and gas")
        om_p = 0.5 * (om_s + om_i)
        dk = (
            2.0 * fibermodel.reduced_kappa(fiber, gas, om_p, check=check)
            - fibermodel.reduced_kappa(fiber, gas, om_s, check=check)
            - fibermodel.reduced_kappa(fiber, gas, om_i, check=check)
        )
    else:
        raise ValidationError(f"mode must be 'linearized' or 'full', got {mode!r}")
    x = dk * L_m / 2.0
    return _sinc(x) * np.exp(1j * x)


@dataclass(eq=False)
class JsaGrid:
    """Discretized JSA with its construction metadata."""

    omega_s: np.ndarray
    omega_i: np.ndarray
    values: np.ndarray  # complex, values[j, k] = F(omega_s[j], omega_i[k])
    fiber: FiberModel
    gas: GasState
    pump: object
    branch: PhaseMatchBranch
    L_m: float
    mode: str
    clipped_fraction: float

    @property
    def cell_area(self) -> float:
        return float(
            (self.omega_s[1] - self.omega_s[0]) * (self.omega_i[1] - self.omega_i[0])
        )

    @property
    def lambda_s_nm(self) -> np.ndarray:
        return lambda_nm_from_omega(self.omega_s)

    @property
    def lambda_i_nm(self) -> np.ndarray:
        return lambda_nm_from_omega(self.omega_i)


def _pump_sizing_sigma(pump) -> float:
    if isinstance(pump, GaussianPump):
        return pump.sigma
    if isinstance(pump, SampledPump):
        # sqrt(2) * intensity RMS reduces to the field sigma for a Gaussian
        return np.sqrt(2.0) * pump.rms_sigma
    raise ValidationError(f"unknown pump spectrum type {type(pump).__name__}")


def build_jsa(
    fiber: FiberModel,
    gas: GasState,
    pump,
    branch: PhaseMatchBranch,
    L_m: float,
    n: int = DEFAULT_GRID_N,
    kappa_span: float = DEFAULT_KAPPA_SPAN,
    mode: str = "linearized",
) -> JsaGrid:
    """JSA grid centered on a solved branch, normalized to unit L2 norm."""
    if L_m <= 0.0:
        raise ValidationError(f"fiber length must be > 0 m, got {L_m}")
    if n < 8:
        raise ValidationError("grid size n must be >= 8")
    if kappa_span <= 0.0:
        raise ValidationError("kappa_span must be > 0")

    sigma = _pump_sizing_sigma(pump)
    half = kappa_span * max(np.sqrt(2.0) * sigma, np.sqrt(branch.dphi_width(L_m)))
    offsets = np.linspace(-half, half, int(n))
    omega_s = branch.omega_s + offsets
    omega_i = branch.omega_i + offsets

    structure = fibermodel.band_structure(fiber, gas)
    ok_s = structure.in_band_mask(lambda_nm_from_omega(omega_s))
    ok_i = structure.in_band_mask(lambda_nm_from_omega(omega_i))
    mask = np.outer(ok_s, ok_i)
    if mode == "full":
        om_bar = 0.5 * (omega_s[:, None] + omega_i[None, :])
        mask &= structure.in_band_mask(
            lambda_nm_from_omega(om_bar.ravel())
        ).reshape(om_bar.shape)

    clipped = 1.0 - float(np.count_nonzero(mask)) / mask.size
    if clipped > CLIP_FATAL_FRACTION:
        raise ClippedGridError(
            f"{clipped:.1%} of the JSA grid falls outside the transmission "
            f"bands (limit {CLIP_FATAL_FRACTION:.0%}); shrink kappa_span or "
            f"move the branch away from band edges"
        )
    if clipped > 0.0:
        warnings.warn(
            f"{clipped:.2%} of the JSA grid clipped by band edges",
            stacklevel=2,
        )

    values = np.zeros((int(n), int(n)), dtype=complex)
    alpha = pump_alpha(pump, omega_s[:, None] + omega_i[None, :])
    if mode == "linearized":
        phi = phi_function(None, None, branch, omega_s[:, None], omega_i[None, :], L_m,
                           mode="linearized")
        values = alpha * phi
        values[~mask] = 0.0
    elif mode == "full":
        js, ks = np.nonzero(mask)
        phi_valid = phi_function(
            fiber, gas, branch, omega_s[js], omega_i[ks], L_m,
            mode="full", check=False,
        )
        values[js, ks] = alpha[js, ks] * phi_valid
    else:
        raise ValidationError(f"mode must be 'linearized' or 'full', got {mode!r}")

    if not np.all(np.isfinite(values)):
        raise ValidationError("JSA grid contains non-finite values")
    cell = float((omega_s[1] - omega_s[0]) * (omega_i[1] - omega_i[0]))
    norm2 = np.sum(np.abs(values) ** 2) * cell
    if norm2 <= 0.0:
        raise ValidationError("JSA grid is identically zero")
    values /= np.sqrt(norm2)

    return JsaGrid(
        omega_s=omega_s, omega_i=omega_i, values=values,
        fiber=fiber, gas=gas, pump=pump, branch=branch,
        L_m=float(L_m), mode=mode, clipped_fraction=clipped,
    )


def jsi(grid: JsaGrid) -> np.ndarray:
    """Joint spectral intensity |F|^2; sums to 1/cell_area by construction."""
    return np.abs(grid.values) ** 2


@dataclass(frozen=True)
class Marginals:
    """Single-photon spectra obtained by integrating out the partner."""

    signal: np.ndarray          # vs omega_s, integral d omega_i of JSI
    idler: np.ndarray           # vs omega_i
    centroid_omega_s: float
    centroid_omega_i: float
    centroid_lambda_s_nm: float
    centroid_lambda_i_nm: float


def marginals(grid, omega_s=None, omega_i=None) -> Marginals:
    """Marginal spectra and intensity-weighted centroids.

    Accepts a JsaGrid, or a raw real JSI array with explicit axes (as
    produced by tomography reconstruction).
    """
    if isinstance(grid, JsaGrid):
        intensity = jsi(grid)
        omega_s, omega_i = grid.omega_s, grid.omega_i
    else:
        intensity = np.asarray(grid, dtype=float)
        if omega_s is None or omega_i is None:
            raise ValidationError("raw-grid marginals need omega_s and omega_i axes")
        omega_s = np.asarray(omega_s, dtype=float)
        omega_i = np.asarray(omega_i, dtype=float)
    if intensity.shape != (omega_s.size, omega_i.size):
        raise ValidationError("JSI shape does not match the axes")
    d_s = float(omega_s[1] - omega_s[0])
    d_i = float(omega_i[1] - omega_i[0])
    sig = intensity.sum(axis=1) * d_i
    idl = intensity.sum(axis=0) * d_s
    tot_s, tot_i = sig.sum(), idl.sum()
    if tot_s <= 0.0 or tot_i <= 0.0:
        raise ValidationError("JSI has no weight; cannot form centroids")
    cs = float(np.sum(sig * omega_s) / tot_s)
    ci = float(np.sum(idl * omega_i) / tot_i)
    return Marginals(
        signal=sig, idler=idl,
        centroid_omega_s=cs, centroid_omega_i=ci,
        centroid_lambda_s_nm=float(lambda_nm_from_omega(cs)),
        centroid_lambda_i_nm=float(lambda_nm_from_omega(ci)),
    )


def _pump_meta(pump) -> dict:
    if isinstance(pump, GaussianPump):
        return {
            "shape": "gaussian",
            "omega_p0_rad_s": pump.omega_p0,
            "sigma_rad_s": pump.sigma,
        }
    return {
        "shape": "sampled",
        "omega_p0_rad_s": pump.omega_p0,
        "points": int(pump.omega.size),
        "omega_min_rad_s": float(pump.omega[0]),
        "omega_max_rad_s": float(pump.omega[-1]),
    }


def jsa_to_json(grid: JsaGrid, path: str | None = None) -> str:
    """Self-describing JSON: axes, row-major magnitude and phase, metadata."""
    obj = {
        "omega_s_rad_s": grid.omega_s.tolist(),
        "omega_i_rad_s": grid.omega_i.tolist(),
        "lambda_s_nm": grid.lambda_s_nm.tolist(),
        "lambda_i_nm": grid.lambda_i_nm.tolist(),
        "magnitude": np.abs(grid.values).tolist(),
        "phase_rad": np.angle(grid.values).tolist(),
        "metadata": {
            "fiber": {
                "R_eff_um": grid.fiber.R_eff_um,
                "t_nm": grid.fiber.t_nm,
                "mode": grid.fiber.mode_label,
            },
            "gas": {
                "species": grid.gas.species,
                "pressure_bar": grid.gas.pressure_bar,
                "temperature_K": grid.gas.temperature_K,
            },
            "pump": _pump_meta(grid.pump),
            "branch": {
                "lambda_p_nm": grid.branch.lambda_p_nm,
                "lambda_s_nm": grid.branch.lambda_s_nm,
                "lambda_i_nm": grid.branch.lambda_i_nm,
                "band_p": grid.branch.band_p,
                "band_s": grid.branch.band_s,
                "band_i": grid.branch.band_i,
                "theta_deg": grid.branch.theta_deg,
            },
            "L_m": grid.L_m,
            "mode": grid.mode,
            "clipped_fraction": grid.clipped_fraction,
            "normalization": "sum(|F|^2) * domega_s * domega_i = 1",
        },
    }
    text = json.dumps(obj, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def grid_to_csv(
    lambda_s_nm, lambda_i_nm, values, path: str | None = None
) -> str:
    """Real grid as CSV; first row holds idler wavelengths (nm), first
    column signal wavelengths (nm), corner cell 0."""
    lam_s = np.asarray(lambda_s_nm, dtype=float)
    lam_i = np.asarray(lambda_i_nm, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (lam_s.size, lam_i.size):
        raise ValidationError("grid shape does not match the wavelength axes")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["0"] + [f"{x:.9g}" for x in lam_i])
    for j in range(lam_s.size):
        writer.writerow([f"{lam_s[j]:.9g}"] + [f"{v:.9g}" for v in values[j]])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def jsi_to_csv(grid: JsaGrid, path: str | None = None) -> str:
    """JSI as CSV in the layout of grid_to_csv."""
    return grid_to_csv(grid.lambda_s_nm, grid.lambda_i_nm, jsi(grid), path)
