"""Parameter-study drivers: length series, pressure series, thickness maps.

Each driver re-solves the phase-matching branch where the parameter
changes it, evaluates the JSA and its Schmidt numbers per point, and
aggregates centroids and angles into one summary table.  Per-point
failures are recorded as gaps and the sweep continues; a pressure sweep
additionally fits the idler centroid frequency against pressure.

Branch continuity across sweep points uses nearest-neighbor matching in
(omega_s, omega_i) seeded by the previous point, which prevents
branch-hopping artifacts in fitted slopes when several families coexist.
Fits are reported in frequency (THz = 10^12 rad/s), not wavelength.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .errors import HcfwmError, NumericalError, ValidationError
from .fibermodel import FiberModel, omega_from_lambda_nm
from .gasmedia import GasState, make_gas
from .jsa import GaussianPump, SampledPump, build_jsa, jsi_to_csv, marginals
from .phasematch import (
    DensityRecord,
    PhaseMatchBranch,
    density_map,
    solve_phase_matching,
)
from .schmidt import schmidt_decompose

__all__ = [
    "SweepPoint",
    "SweepGap",
    "PressureFit",
    "SweepResult",
    "ThicknessMap",
    "fiber_from_config",
    "gas_from_config",
    "pump_from_config",
    "select_branch",
    "sweep_length",
    "sweep_pressure",
    "sweep_thickness",
    "summary_csv",
    "fit_to_dict",
]

SUMMARY_CSV_HEADER = (
    "param",
    "value",
    "K_flat",
    "K_complex",
    "theta_deg",
    "idler_nm",
    "signal_nm",
)


@dataclass(frozen=True)
class SweepPoint:
    """One evaluated sweep point with its derived scalars."""

    value: float
    branch: PhaseMatchBranch
    K_flat: float
    K_complex: float
    theta_deg: float
    idler_nm: float
    signal_nm: float
    idler_omega: float
    signal_omega: float
    artifacts: dict

    @property
    def family(self) -> tuple[str, str]:
        return self.branch.family


@dataclass(frozen=True)
class SweepGap:
    """A sweep point that failed, with the reason it was skipped."""

    value: float
    reason: str


@dataclass(frozen=True)
class PressureFit:
    """Linear fit of idler centroid frequency vs pressure.

    slope_THz_per_bar and span_THz are angular frequencies in units of
    10^12 rad/s, following the package convention.
    """

    slope_THz_per_bar: float
    intercept_THz: float
    r_squared: float
    span_THz: float
    n_points: int


@dataclass(frozen=True)
class SweepResult:
    """Aggregated sweep: monotone axis, per-point records, gaps, fit."""

    param: str
    unit: str
    points: tuple[SweepPoint, ...]
    gaps: tuple[SweepGap, ...]
    fit: PressureFit | None = None


@dataclass(frozen=True)
class ThicknessMap:
    """Phase-matching density map for one strut thickness."""

    t_nm: float
    records: tuple[DensityRecord, ...]

    @property
    def families(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted({(r.band_s, r.band_i) for r in self.records}))


def fiber_from_config(cfg: RunConfig) -> FiberModel:
    return FiberModel(
        R_eff_um=cfg.fiber.R_eff_um,
        t_nm=cfg.fiber.t_nm,
        mode_m=cfg.fiber.mode_m,
        mode_n=cfg.fiber.mode_n,
    )


def gas_from_config(cfg: RunConfig, pressure_bar: float | None = None) -> GasState:
    return make_gas(
        cfg.gas.species,
        cfg.gas.pressure_bar if pressure_bar is None else pressure_bar,
        temperature_K=cfg.gas.temperature_K,
    )


def pump_from_config(cfg: RunConfig):
    """Gaussian pump from the config width; sampled when modulated."""
    if cfg.pump.pulse_fwhm_fs is not None:
        base = GaussianPump.from_fwhm(cfg.pump.lambda_nm, cfg.pump.pulse_fwhm_fs)
    else:
        base = GaussianPump(
            omega_p0=float(omega_from_lambda_nm(cfg.pump.lambda_nm)),
            sigma=cfg.pump.sigma_THz * 1e12,
        )
    mod = cfg.pump.modulation
    if mod is not None and mod.depth > 0.0:
        return SampledPump.modulated_gaussian(
            base.omega_p0, base.sigma, mod.depth, mod.period_THz * 1e12
        )
    return base


def select_branch(
    branches: list[PhaseMatchBranch],
    prev: tuple[float, float] | None = None,
    seed_idler_nm: float | None = None,
) -> PhaseMatchBranch:
    """Pick one branch: nearest to the previous point, else nearest to a
    requested idler wavelength, else the most-detuned branch."""
    if not branches:
        raise NumericalError("no phase-matched branch in the scan window")
    if prev is not None:
        ws0, wi0 = prev
        return min(
            branches,
            key=lambda b: (b.omega_s - ws0) ** 2 + (b.omega_i - wi0) ** 2,
        )
    if seed_idler_nm is not None:
        return min(branches, key=lambda b: abs(b.lambda_i_nm - seed_idler_nm))
    return max(branches, key=lambda b: b.delta_omega)


def _evaluate_point(
    cfg: RunConfig,
    fiber: FiberModel,
    gas: GasState,
    pump,
    branch: PhaseMatchBranch,
    L_m: float,
    value: float,
    out_dir: str | None,
    stem: str,
) -> SweepPoint:
    grid = build_jsa(
        fiber,
        gas,
        pump,
        branch,
        L_m,
        n=cfg.grid.N,
        kappa_span=cfg.grid.span,
        mode=cfg.grid.mode,
    )
    k_flat = schmidt_decompose(grid, flat_phase=True).K
    k_complex = schmidt_decompose(grid, flat_phase=False).K
    marg = marginals(grid)
    artifacts: dict = {}
    if out_dir is not None:
        fname = f"{stem}.csv"
        jsi_to_csv(grid, os.path.join(out_dir, fname))
        artifacts["jsi_csv"] = fname
    return SweepPoint(
        value=value,
        branch=branch,
        K_flat=k_flat,
        K_complex=k_complex,
        theta_deg=branch.theta_deg,
        idler_nm=marg.centroid_lambda_i_nm,
        signal_nm=marg.centroid_lambda_s_nm,
        idler_omega=marg.centroid_omega_i,
        signal_omega=marg.centroid_omega_s,
        artifacts=artifacts,
    )


def _run_jobs(jobs, threads: int):
    """Order-preserving job execution; jobs are () -> result callables."""
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda job: job(), jobs))
    return [job() for job in jobs]


def _check_axis(name: str, values) -> tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if not values:
        raise ValidationError(f"{name} axis must not be empty")
    if any(v <= 0.0 for v in values):
        raise ValidationError(f"{name} axis values must be > 0")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValidationError(f"{name} axis must be strictly increasing")
    return values


def sweep_length(
    cfg: RunConfig,
    lengths=None,
    out_dir: str | None = None,
    threads: int = 1,
) -> SweepResult:
    """JSA and Schmidt numbers for a series of fiber lengths.

    The branch is pressure- and pump-determined, so it is solved once
    and shared by all lengths.
    """
    if lengths is None:
        if cfg.sweep_length is None:
            raise ValidationError(
                "config section 'sweep_length' is required for a length sweep"
            )
        lengths = cfg.sweep_length.lengths_m
    lengths = _check_axis("length_m", lengths)
    fiber = fiber_from_config(cfg)
    gas = gas_from_config(cfg)
    pump = pump_from_config(cfg)
    branches = solve_phase_matching(
        fiber,
        gas,
        pump.omega_p0,
        detuning_window=cfg.phasematch.detuning_window(),
        pump_peak_power_W=cfg.phasematch.pump_peak_power_W,
        grid_points=cfg.phasematch.grid_points,
    )
    branch = select_branch(
        branches, seed_idler_nm=cfg.phasematch.seed_idler_nm
    )

    points: list[SweepPoint] = []
    gaps: list[SweepGap] = []
    jobs = []
    for L in lengths:
        def job(L=L):
            try:
                return _evaluate_point(
                    cfg, fiber, gas, pump, branch, L, L, out_dir,
                    f"jsi_L_{L:g}m",
                )
            except HcfwmError as exc:
                return SweepGap(value=L, reason=str(exc))
        jobs.append(job)
    for res in _run_jobs(jobs, threads):
        (gaps if isinstance(res, SweepGap) else points).append(res)
    return SweepResult(
        param="length_m",
        unit="m",
        points=tuple(points),
        gaps=tuple(gaps),
        fit=None,
    )


def sweep_pressure(
    cfg: RunConfig,
    pressures=None,
    out_dir: str | None = None,
    threads: int = 1,
) -> SweepResult:
    """Branch, JSA, and centroids across a gas-pressure series.

    Branch selection is chained: each pressure takes the branch nearest
    the previous point's (omega_s, omega_i); the first point honors
    phasematch.seed_idler_nm when several families coexist.  The fit is
    idler centroid frequency (THz = 10^12 rad/s) vs pressure (bar); it
    needs at least two successful points.
    """
    if pressures is None:
        if cfg.sweep_pressure is None:
            raise ValidationError(
                "config section 'sweep_pressure' is required for a "
                "pressure sweep"
            )
        pressures = cfg.sweep_pressure.pressures_bar
    pressures = _check_axis("pressure_bar", pressures)
    fiber = fiber_from_config(cfg)
    pump = pump_from_config(cfg)

    solved: list[tuple[float, GasState, PhaseMatchBranch]] = []
    gaps: list[SweepGap] = []
    prev: tuple[float, float] | None = None
    for P in pressures:
        try:
            gas = gas_from_config(cfg, pressure_bar=P)
            branches = solve_phase_matching(
                fiber,
                gas,
                pump.omega_p0,
                detuning_window=cfg.phasematch.detuning_window(),
                pump_peak_power_W=cfg.phasematch.pump_peak_power_W,
                grid_points=cfg.phasematch.grid_points,
            )
            branch = select_branch(
                branches,
                prev=prev,
                seed_idler_nm=cfg.phasematch.seed_idler_nm,
            )
        except HcfwmError as exc:
            gaps.append(SweepGap(value=P, reason=str(exc)))
            continue
        prev = (branch.omega_s, branch.omega_i)
        solved.append((P, gas, branch))

    jobs = []
    for P, gas, branch in solved:
        def job(P=P, gas=gas, branch=branch):
            try:
                return _evaluate_point(
                    cfg, fiber, gas, pump, branch, cfg.fiber_length_m, P,
                    out_dir, f"jsi_P_{P:g}bar",
                )
            except HcfwmError as exc:
                return SweepGap(value=P, reason=str(exc))
        jobs.append(job)
    points: list[SweepPoint] = []
    for res in _run_jobs(jobs, threads):
        (gaps if isinstance(res, SweepGap) else points).append(res)
    gaps.sort(key=lambda g: g.value)

    if len(points) < 2:
        raise NumericalError(
            "pressure sweep produced fewer than 2 successful points "
            f"({len(gaps)} gaps); cannot fit the tuning slope"
        )
    pr = np.array([p.value for p in points])
    nu = np.array([p.idler_omega for p in points]) / 1e12
    slope, intercept = np.polyfit(pr, nu, 1)
    resid = nu - (slope * pr + intercept)
    ss_tot = float(np.sum((nu - nu.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0.0 else 1.0
    fit = PressureFit(
        slope_THz_per_bar=float(slope),
        intercept_THz=float(intercept),
        r_squared=r2,
        span_THz=float(nu.max() - nu.min()),
        n_points=len(points),
    )
    return SweepResult(
        param="pressure_bar",
        unit="bar",
        points=tuple(points),
        gaps=tuple(gaps),
        fit=fit,
    )


def sweep_thickness(
    cfg: RunConfig,
    t_values_nm,
    threads: int = 1,
) -> list[ThicknessMap]:
    """Phase-matching density map per strut thickness; [] for no values."""
    maps: list[ThicknessMap] = []
    if cfg.density_map is None:
        raise ValidationError(
            "config section 'density_map' is required for thickness maps"
        )
    base = fiber_from_config(cfg)
    gas = gas_from_config(cfg)
    for t in t_values_nm:
        if t <= 0.0:
            raise ValidationError(f"strut thickness must be > 0 nm, got {t}")
        fiber = replace(base, t_nm=float(t))
        records = density_map(
            fiber,
            gas,
            (cfg.density_map.pump_min_nm, cfg.density_map.pump_max_nm),
            cfg.density_map.pump_steps,
            detuning_window=cfg.phasematch.detuning_window(),
            grid_points=cfg.phasematch.grid_points,
            threads=threads,
        )
        maps.append(ThicknessMap(t_nm=float(t), records=tuple(records)))
    return maps


def summary_csv(result: SweepResult, path: str | None = None) -> str:
    """One row per successful sweep point, in axis order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_CSV_HEADER)
    for p in result.points:
        writer.writerow(
            [
                result.param,
                f"{p.value:.9g}",
                f"{p.K_flat:.9g}",
                f"{p.K_complex:.9g}",
                f"{p.theta_deg:.9g}",
                f"{p.idler_nm:.9g}",
                f"{p.signal_nm:.9g}",
            ]
        )
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def fit_to_dict(result: SweepResult) -> dict:
    """JSON-ready summary of a sweep's fit and gaps."""
    obj: dict = {
        "param": result.param,
        "unit": result.unit,
        "n_points": len(result.points),
        "gaps": [{"value": g.value, "reason": g.reason} for g in result.gaps],
    }
    if result.fit is not None:
        obj["fit"] = {
            "slope_THz_per_bar": result.fit.slope_THz_per_bar,
            "intercept_THz": result.fit.intercept_THz,
            "r_squared": result.fit.r_squared,
            "span_THz": result.fit.span_THz,
            "n_points": result.fit.n_points,
        }
    return obj
