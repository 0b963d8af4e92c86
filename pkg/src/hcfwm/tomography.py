"""Stimulated-emission tomography of the joint spectral intensity.

Seeding the idler of the four-wave-mixing process with a swept
narrow-band laser amplifies each horizontal slice of the JSI by the seed
photon number, so a scan of recorded signal spectra maps out the whole
distribution classically.  This module simulates such a scan from a
ground-truth JSA grid, reconstructs the JSI by seed-power normalization,
and fits the power-scaling laws (linear in seed, quadratic in pump) that
identify the stimulated regime.

Absolute gain is not modeled; a single arbitrary constant multiplies
every slice and all comparisons are shape-based after normalization.
The per-photon energy of the seed is evaluated once at the sweep center,
so the simulated slice is strictly linear in the monitored seed power;
across a 30 nm sweep near 1550 nm the neglected variation is below 1%.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar

from .errors import RangeError, ValidationError
from .fibermodel import lambda_nm_from_omega
from .jsa import JsaGrid, grid_to_csv, jsi

__all__ = [
    "NoiseModel",
    "SetScan",
    "Reconstruction",
    "PowerScaling",
    "simulate_set_scan",
    "reconstruct_jsi",
    "power_scaling_check",
    "set_scan_to_csv",
    "reconstruction_to_csv",
]

SET_CSV_HEADER = "seed_lambda_nm,signal_lambda_nm,counts,seed_power_W"


@dataclass(frozen=True)
class NoiseModel:
    """Per-sample multiplicative Gaussian noise plus an additive dark floor.

    rel_sigma is the relative standard deviation of the multiplicative
    factor; dark_floor is a constant background added to every sample.
    seed feeds a splittable stream: slice i always draws from
    default_rng([*seed, i]), so results are identical for any worker
    count and any execution order.
    """

    rel_sigma: float = 0.0
    dark_floor: float = 0.0
    seed: tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.rel_sigma < 0.0:
            raise ValidationError(
                f"noise rel_sigma must be >= 0, got {self.rel_sigma}"
            )
        if self.dark_floor < 0.0:
            raise ValidationError(
                f"noise dark_floor must be >= 0, got {self.dark_floor}"
            )
        if isinstance(self.seed, (int, np.integer)):
            object.__setattr__(self, "seed", (int(self.seed),))
        else:
            object.__setattr__(self, "seed", tuple(int(s) for s in self.seed))

    @property
    def active(self) -> bool:
        return self.rel_sigma > 0.0 or self.dark_floor > 0.0

    def rng_for_slice(self, index: int) -> np.random.Generator:
        return np.random.default_rng([*self.seed, int(index)])


@dataclass
class SetScan:
    """One stimulated-emission scan: swept seed, recorded signal spectra.

    slices[k, j] is the recorded signal intensity at omega_s[j] with the
    seed parked at omega_i[k]; seed_power_W[k] is the monitored seed
    power for that step.
    """

    omega_i: np.ndarray
    omega_s: np.ndarray
    slices: np.ndarray
    seed_power_W: np.ndarray
    pump_power_W: float
    duty_cycle: float = 1.0
    noise: NoiseModel = field(default_factory=NoiseModel)
    gain: float = 1.0

    def __post_init__(self):
        self.omega_i = np.asarray(self.omega_i, dtype=float)
        self.omega_s = np.asarray(self.omega_s, dtype=float)
        self.slices = np.asarray(self.slices, dtype=float)
        self.seed_power_W = np.asarray(self.seed_power_W, dtype=float)
        if self.omega_i.ndim != 1 or self.omega_i.size < 1:
            raise ValidationError("seed sweep must be a non-empty 1-D axis")
        steps = np.diff(self.omega_i)
        if self.omega_i.size > 1 and not (
            np.all(steps > 0.0) or np.all(steps < 0.0)
        ):
            raise ValidationError("seed sweep must be strictly monotone")
        if self.seed_power_W.shape != self.omega_i.shape:
            raise ValidationError(
                "seed power profile must match the sweep axis length"
            )
        if np.any(self.seed_power_W <= 0.0):
            raise ValidationError("monitored seed powers must be > 0 W")
        if self.pump_power_W <= 0.0:
            raise ValidationError(
                f"pump power must be > 0 W, got {self.pump_power_W}"
            )
        if not 0.0 < self.duty_cycle <= 1.0:
            raise ValidationError(
                f"duty cycle must be in (0, 1], got {self.duty_cycle}"
            )
        if self.slices.shape != (self.omega_i.size, self.omega_s.size):
            raise ValidationError(
                "slices must have shape (sweep steps, signal axis); got "
                f"{self.slices.shape}"
            )

    @property
    def n_slices(self) -> int:
        return int(self.omega_i.size)

    @property
    def omega_ref(self) -> float:
        """Sweep-center frequency used for the photon-energy conversion."""
        return float(0.5 * (self.omega_i[0] + self.omega_i[-1]))

    @property
    def lambda_i_nm(self) -> np.ndarray:
        return lambda_nm_from_omega(self.omega_i)

    @property
    def lambda_s_nm(self) -> np.ndarray:
        return lambda_nm_from_omega(self.omega_s)

    def seed_photon_number(self) -> np.ndarray:
        """Per-step seed photon number derived from the monitored power."""
        return self.seed_power_W * self.duty_cycle / (hbar * self.omega_ref)


@dataclass(frozen=True)
class Reconstruction:
    """Seed-normalized, unit-sum JSI on the scan's axes."""

    omega_s: np.ndarray
    omega_i: np.ndarray
    values: np.ndarray  # values[j, k] on (omega_s[j], omega_i[k]); sums to 1

    @property
    def lambda_s_nm(self) -> np.ndarray:
        return lambda_nm_from_omega(self.omega_s)

    @property
    def lambda_i_nm(self) -> np.ndarray:
        return lambda_nm_from_omega(self.omega_i)


@dataclass(frozen=True)
class PowerScaling:
    """Fitted log-log exponents of total signal vs seed and pump power."""

    seed_exponent: float
    pump_exponent: float
    r_squared_seed: float
    r_squared_pump: float


def _interp_jsi_slice(
    intensity: np.ndarray, axis: np.ndarray, omega: float
) -> np.ndarray:
    """Linear interpolation of JSI columns at one seed frequency."""
    k = int(np.searchsorted(axis, omega))
    if k == 0:
        return intensity[:, 0].copy()
    if k >= axis.size:
        return intensity[:, -1].copy()
    w = (omega - axis[k - 1]) / (axis[k] - axis[k - 1])
    if w == 0.0:
        return intensity[:, k - 1].copy()
    return (1.0 - w) * intensity[:, k - 1] + w * intensity[:, k]


def simulate_set_scan(
    truth: JsaGrid,
    seed_omega_i,
    pump_power_W: float,
    seed_power_W,
    noise: NoiseModel | None = None,
    gain: float = 1.0,
    duty_cycle: float = 1.0,
    threads: int = 1,
) -> SetScan:
    """Forward-simulate a seeded scan of the ground-truth JSI.

    Each slice is gain * P_pump^2 * N_seed * JSI(omega_s, omega_i), with
    N_seed the seed photon number for that step.  Noise draws use one
    splittable stream per slice, so any worker count gives identical
    results.
    """
    seed_omega_i = np.atleast_1d(np.asarray(seed_omega_i, dtype=float))
    if seed_omega_i.size < 1:
        raise ValidationError("seed sweep must contain at least one step")
    lo, hi = float(truth.omega_i[0]), float(truth.omega_i[-1])
    if np.any(seed_omega_i < lo) or np.any(seed_omega_i > hi):
        raise RangeError(
            "seed sweep leaves the ground-truth idler axis "
            f"[{lo:.6g}, {hi:.6g}] rad/s"
        )
    powers = np.broadcast_to(
        np.asarray(seed_power_W, dtype=float), seed_omega_i.shape
    ).copy()
    if noise is None:
        noise = NoiseModel()
    if gain <= 0.0:
        raise ValidationError(f"gain must be > 0, got {gain}")

    intensity = jsi(truth)
    omega_ref = float(0.5 * (seed_omega_i[0] + seed_omega_i[-1]))
    n_seed = powers * duty_cycle / (hbar * omega_ref)
    prefactor = gain * pump_power_W**2

    def one_slice(k: int) -> np.ndarray:
        out = prefactor * n_seed[k] * _interp_jsi_slice(
            intensity, truth.omega_i, seed_omega_i[k]
        )
        if noise.rel_sigma > 0.0:
            rng = noise.rng_for_slice(k)
            out = out * (
                1.0 + noise.rel_sigma * rng.standard_normal(out.size)
            )
            np.maximum(out, 0.0, out=out)
        if noise.dark_floor > 0.0:
            out = out + noise.dark_floor
        return out

    indices = range(seed_omega_i.size)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one_slice, indices))
    else:
        rows = [one_slice(k) for k in indices]

    return SetScan(
        omega_i=seed_omega_i,
        omega_s=truth.omega_s.copy(),
        slices=np.vstack(rows),
        seed_power_W=powers,
        pump_power_W=float(pump_power_W),
        duty_cycle=float(duty_cycle),
        noise=noise,
        gain=float(gain),
    )


def reconstruct_jsi(scan: SetScan) -> Reconstruction:
    """Divide each slice by its seed photon number and renormalize.

    The arbitrary gain, the pump power, and the photon-energy constant
    all cancel in the unit-sum normalization, so the reconstruction
    depends only on the slice shapes and the monitored power profile.
    """
    if scan.n_slices < 2:
        raise ValidationError(
            f"reconstruction needs at least 2 slices, got {scan.n_slices}"
        )
    n_seed = scan.seed_photon_number()
    if np.any(n_seed <= 0.0):
        raise ValidationError("monitored seed powers must be > 0 W")
    normalized = scan.slices / n_seed[:, None]
    omega_i = scan.omega_i
    if omega_i[0] > omega_i[-1]:
        omega_i = omega_i[::-1].copy()
        normalized = normalized[::-1]
    grid = normalized.T.copy()
    total = grid.sum()
    if total <= 0.0:
        raise ValidationError("scan carries no counts; cannot normalize")
    grid /= total
    return Reconstruction(
        omega_s=scan.omega_s.copy(), omega_i=omega_i, values=grid
    )


def _loglog_fit(powers: np.ndarray, totals: np.ndarray) -> tuple[float, float]:
    x = np.log(powers)
    y = np.log(totals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0.0 else 1.0
    return float(slope), r2


def power_scaling_check(
    truth: JsaGrid,
    seed_powers_W,
    pump_powers_W,
    noise: NoiseModel | None = None,
    seed_omega_i=None,
    duty_cycle: float = 1.0,
) -> PowerScaling:
    """Fit log-log total counts vs seed and pump power.

    Expected exponents are 1 (seed) and 2 (pump); deviations flag a
    broken stimulated-regime model.  The configured dark floor is
    subtracted before fitting since it is a known constant of the
    simulated detector.
    """
    seed_powers = np.asarray(seed_powers_W, dtype=float)
    pump_powers = np.asarray(pump_powers_W, dtype=float)
    for name, arr in (("seed", seed_powers), ("pump", pump_powers)):
        if arr.ndim != 1 or arr.size < 5:
            raise ValidationError(
                f"{name} power axis needs at least 5 points, got {arr.size}"
            )
        if np.any(arr <= 0.0):
            raise ValidationError(f"{name} powers must all be > 0 W")
    if noise is None:
        noise = NoiseModel()
    if seed_omega_i is None:
        seed_omega_i = truth.omega_i[:: max(1, truth.omega_i.size // 32)]

    def total_counts(pump_W: float, seed_W: float, tag: int, idx: int):
        scan = simulate_set_scan(
            truth,
            seed_omega_i,
            pump_W,
            seed_W,
            noise=NoiseModel(
                rel_sigma=noise.rel_sigma,
                dark_floor=noise.dark_floor,
                seed=(*noise.seed, tag, idx),
            ),
            duty_cycle=duty_cycle,
        )
        return float(np.sum(scan.slices - noise.dark_floor))

    seed_totals = np.array(
        [total_counts(1.0, p, 0, i) for i, p in enumerate(seed_powers)]
    )
    pump_totals = np.array(
        [total_counts(p, 1.0, 1, i) for i, p in enumerate(pump_powers)]
    )
    seed_exp, r2_seed = _loglog_fit(seed_powers, seed_totals)
    pump_exp, r2_pump = _loglog_fit(pump_powers, pump_totals)
    return PowerScaling(
        seed_exponent=seed_exp,
        pump_exponent=pump_exp,
        r_squared_seed=r2_seed,
        r_squared_pump=r2_pump,
    )


def set_scan_to_csv(scan: SetScan, path: str | None = None) -> str:
    """Long-format CSV, one row per (seed step, signal sample)."""
    lam_i = scan.lambda_i_nm
    lam_s = scan.lambda_s_nm
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SET_CSV_HEADER.split(","))
    for k in range(scan.n_slices):
        li = f"{lam_i[k]:.9g}"
        pw = f"{scan.seed_power_W[k]:.9g}"
        for j in range(scan.omega_s.size):
            writer.writerow(
                [li, f"{lam_s[j]:.9g}", f"{scan.slices[k, j]:.9g}", pw]
            )
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def reconstruction_to_csv(rec: Reconstruction, path: str | None = None) -> str:
    """Reconstructed JSI in the shared grid CSV layout."""
    return grid_to_csv(rec.lambda_s_nm, rec.lambda_i_nm, rec.values, path)
