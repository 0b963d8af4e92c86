"""Command-line front end: config-driven runs with per-run manifests.

Every subcommand reads one config (a YAML path or the name of a bundled
recipe), writes its artifacts under `<out>/<subcommand>/<label>/` where
the label defaults to a UTC timestamp, and emits a machine-parseable
manifest.json listing the files.  Exit code 0 means success, 1 a
validation problem (bad config, out-of-range physics), 2 a numerical
failure (non-convergence, no fittable sweep).

Output files never embed wall-clock times or absolute paths, so a rerun
with the same config, the same --label, and any --threads count is
byte-identical.  The bundled gas data can be replaced by pointing the
HCFWM_GAS_DATA environment variable at an alternative table.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import os
import sys
from importlib.resources import files as resource_files

import numpy as np

from . import __version__, fibermodel, gasmedia, jsa, phasematch, schmidt
from . import sweeps as sweeps_mod
from . import tomography
from .config import (
    RunConfig,
    config_to_dict,
    dump_config,
    load_config,
    loads_config,
)
from .errors import NumericalError, ValidationError

SUBCOMMANDS = (
    "dispersion",
    "phasematch",
    "jsa",
    "schmidt",
    "set-sim",
    "sweep-length",
    "sweep-pressure",
    "density-map",
)

_DISPERSION_SAMPLES_PER_BAND = 200


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors."""

    def error(self, message):
        raise ValidationError(message)


def bundled_recipes() -> list[str]:
    root = resource_files("hcfwm").joinpath("recipes")
    names = []
    for entry in root.iterdir():
        if entry.name.endswith(".yaml"):
            names.append(entry.name[: -len(".yaml")])
    return sorted(names)


def resolve_config(value: str) -> RunConfig:
    """A filesystem path, or the name of a bundled recipe."""
    if os.path.exists(value):
        return load_config(value)
    name = value[: -len(".yaml")] if value.endswith(".yaml") else value
    candidate = resource_files("hcfwm").joinpath("recipes", f"{name}.yaml")
    if candidate.is_file():
        return loads_config(candidate.read_text(), origin=f"recipe '{name}'")
    raise ValidationError(
        f"config '{value}' is neither a file nor a bundled recipe; "
        f"bundled recipes: {', '.join(bundled_recipes())}"
    )


def _write_rows(path: str, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def _g(x: float) -> str:
    return f"{x:.9g}"


class _Run:
    """Collects artifacts and summary lines for one subcommand run."""

    def __init__(self, cfg: RunConfig, subcommand: str, run_dir: str):
        self.cfg = cfg
        self.subcommand = subcommand
        self.run_dir = run_dir
        self.artifacts: list[dict] = []
        self.results: dict = {}

    def path(self, fname: str) -> str:
        return os.path.join(self.run_dir, fname)

    def add(self, fname: str, description: str) -> None:
        self.artifacts.append({"file": fname, "description": description})
        print(f"wrote {os.path.join(self.run_dir, fname)}  ({description})")

    def wants(self, fmt: str) -> bool:
        return fmt in self.cfg.output.formats

    def finish(self) -> None:
        dump_config(self.cfg, self.path("config.yaml"))
        self.add("config.yaml", "resolved run configuration")
        manifest = {
            "package": f"hcfwm {__version__}",
            "subcommand": self.subcommand,
            "config": config_to_dict(self.cfg),
            "artifacts": self.artifacts,
            "results": self.results,
        }
        with open(self.path("manifest.json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(f"wrote {self.path('manifest.json')}  (run manifest)")


def _solve_branch(cfg: RunConfig, fiber, gas, pump):
    branches = phasematch.solve_phase_matching(
        fiber,
        gas,
        pump.omega_p0,
        detuning_window=cfg.phasematch.detuning_window(),
        pump_peak_power_W=cfg.phasematch.pump_peak_power_W,
        grid_points=cfg.phasematch.grid_points,
    )
    return sweeps_mod.select_branch(
        branches, seed_idler_nm=cfg.phasematch.seed_idler_nm
    )


def _build_grid(cfg: RunConfig, fiber, gas, pump, branch):
    return jsa.build_jsa(
        fiber,
        gas,
        pump,
        branch,
        cfg.fiber_length_m,
        n=cfg.grid.N,
        kappa_span=cfg.grid.span,
        mode=cfg.grid.mode,
    )


def cmd_dispersion(run: _Run, threads: int) -> None:
    cfg = run.cfg
    fiber = sweeps_mod.fiber_from_config(cfg)
    gas = sweeps_mod.gas_from_config(cfg)
    structure = fibermodel.band_structure(fiber, gas)
    _write_rows(
        run.path("bands.csv"),
        (
            "band",
            "index",
            "lo_nm",
            "hi_nm",
            "usable_lo_nm",
            "usable_hi_nm",
            "res_lo_nm",
            "res_hi_nm",
        ),
        [
            (
                b.label,
                b.index,
                _g(b.lo_nm),
                _g(b.hi_nm),
                _g(b.usable_lo_nm),
                _g(b.usable_hi_nm),
                "" if b.res_lo_nm is None else _g(b.res_lo_nm),
                "" if b.res_hi_nm is None else _g(b.res_hi_nm),
            )
            for b in structure.bands
        ],
    )
    run.add("bands.csv", "transmission bands and anti-resonance edges")

    rows = []
    zdws = {}
    for band in structure.bands:
        lo, hi = band.usable_lo_nm, band.usable_hi_nm
        margin = 1e-3 * (hi - lo)
        grid = np.linspace(lo + margin, hi - margin, _DISPERSION_SAMPLES_PER_BAND)
        for lam in grid:
            pt = fibermodel.dispersion_derivatives(fiber, gas, float(lam))
            rows.append(
                (
                    _g(pt.lambda_nm),
                    band.label,
                    _g(pt.k),
                    _g(pt.beta1),
                    _g(pt.beta2),
                )
            )
        try:
            zdws[band.label] = fibermodel.find_zdw(fiber, gas, band)
        except NumericalError:
            zdws[band.label] = []
    _write_rows(
        run.path("dispersion.csv"),
        ("lambda_nm", "band", "k_rad_m", "beta1_s_m", "beta2_s2_m"),
        rows,
    )
    run.add("dispersion.csv", "wavevector and derivatives per band")
    _write_rows(
        run.path("zdw.csv"),
        ("band", "zdw_nm"),
        [(label, _g(z)) for label, zs in sorted(zdws.items()) for z in zs],
    )
    run.add("zdw.csv", "zero-dispersion wavelengths per band")
    run.results["bands"] = [b.label for b in structure.bands]
    run.results["resonances_nm"] = list(structure.resonances_nm)
    run.results["zdw_nm"] = zdws
    print(
        f"{len(structure.bands)} bands; resonances at "
        + ", ".join(f"{r:.1f} nm" for r in structure.resonances_nm)
    )


def cmd_phasematch(run: _Run, threads: int) -> None:
    cfg = run.cfg
    fiber = sweeps_mod.fiber_from_config(cfg)
    gas = sweeps_mod.gas_from_config(cfg)
    pump = sweeps_mod.pump_from_config(cfg)
    branches = phasematch.solve_phase_matching(
        fiber,
        gas,
        pump.omega_p0,
        detuning_window=cfg.phasematch.detuning_window(),
        pump_peak_power_W=cfg.phasematch.pump_peak_power_W,
        grid_points=cfg.phasematch.grid_points,
    )
    L = cfg.fiber_length_m
    _write_rows(
        run.path("branches.csv"),
        (
            "lambda_p_nm",
            "lambda_s_nm",
            "lambda_i_nm",
            "delta_omega_THz",
            "band_p",
            "band_s",
            "band_i",
            "theta_deg",
            "dphi_width_THz2",
            "residual_rad_m",
        ),
        [
            (
                _g(b.lambda_p_nm),
                _g(b.lambda_s_nm),
                _g(b.lambda_i_nm),
                _g(b.delta_omega / 1e12),
                b.band_p,
                b.band_s,
                b.band_i,
                _g(b.theta_deg),
                _g(b.dphi_width(L) / 1e24),
                _g(b.residual_rad_m),
            )
            for b in branches
        ],
    )
    run.add("branches.csv", "phase-matched branches at the pump")
    run.results["n_branches"] = len(branches)
    for b in branches:
        print(
            f"branch: signal {b.lambda_s_nm:.2f} nm ({b.band_s}), idler "
            f"{b.lambda_i_nm:.2f} nm ({b.band_i}), theta {b.theta_deg:.2f} deg"
        )
    if not branches:
        print("no phase-matched branches in the scan window")


def cmd_jsa(run: _Run, threads: int) -> None:
    cfg = run.cfg
    fiber = sweeps_mod.fiber_from_config(cfg)
    gas = sweeps_mod.gas_from_config(cfg)
    pump = sweeps_mod.pump_from_config(cfg)
    branch = _solve_branch(cfg, fiber, gas, pump)
    grid = _build_grid(cfg, fiber, gas, pump, branch)
    marg = jsa.marginals(grid)
    if run.wants("json"):
        jsa.jsa_to_json(grid, run.path("jsa.json"))
        run.add("jsa.json", "complex JSA grid with metadata")
    if run.wants("csv"):
        jsa.jsi_to_csv(grid, run.path("jsi.csv"))
        run.add("jsi.csv", "joint spectral intensity grid")
        _write_rows(
            run.path("marginals.csv"),
            ("lambda_s_nm", "signal", "lambda_i_nm", "idler"),
            [
                (
                    _g(grid.lambda_s_nm[j]),
                    _g(marg.signal[j]),
                    _g(grid.lambda_i_nm[j]),
                    _g(marg.idler[j]),
                )
                for j in range(grid.omega_s.size)
            ],
        )
        run.add("marginals.csv", "signal and idler marginal spectra")
    run.results["centroid_signal_nm"] = marg.centroid_lambda_s_nm
    run.results["centroid_idler_nm"] = marg.centroid_lambda_i_nm
    run.results["clipped_fraction"] = grid.clipped_fraction
    print(
        f"JSA {cfg.grid.N}x{cfg.grid.N} ({cfg.grid.mode}); centroids "
        f"signal {marg.centroid_lambda_s_nm:.2f} nm, idler "
        f"{marg.centroid_lambda_i_nm:.2f} nm"
    )


def cmd_schmidt(run: _Run, threads: int) -> None:
    cfg = run.cfg
    fiber = sweeps_mod.fiber_from_config(cfg)
    gas = sweeps_mod.gas_from_config(cfg)
    pump = sweeps_mod.pump_from_config(cfg)
    branch = _solve_branch(cfg, fiber, gas, pump)
    grid = _build_grid(cfg, fiber, gas, pump, branch)
    flat = schmidt.schmidt_decompose(grid, flat_phase=True)
    cplx = schmidt.schmidt_decompose(grid, flat_phase=False)
    if run.wants("json"):
        schmidt.schmidt_to_json(flat, run.path("schmidt_flat.json"))
        run.add("schmidt_flat.json", "flat-phase Schmidt decomposition")
        schmidt.schmidt_to_json(cplx, run.path("schmidt_complex.json"))
        run.add("schmidt_complex.json", "complex-JSA Schmidt decomposition")
    if run.wants("csv"):
        schmidt.schmidt_modes_to_csv(cplx, path=run.path("modes.csv"))
        run.add("modes.csv", "leading Schmidt mode vectors")
    run.results["K_flat"] = flat.K
    run.results["K_complex"] = cplx.K
    run.results["purity_flat"] = flat.purity
    print(
        f"Schmidt numbers at L={cfg.fiber_length_m:g} m: flat-phase "
        f"K={flat.K:.4f}, complex K={cplx.K:.4f}"
    )


def cmd_set_sim(run: _Run, threads: int) -> None:
    cfg = run.cfg
    if cfg.set_sim is None:
        raise ValidationError(
            "config section 'set_sim' is required for the set-sim subcommand"
        )
    ss = cfg.set_sim
    fiber = sweeps_mod.fiber_from_config(cfg)
    gas = sweeps_mod.gas_from_config(cfg)
    pump = sweeps_mod.pump_from_config(cfg)
    branch = _solve_branch(cfg, fiber, gas, pump)
    grid = _build_grid(cfg, fiber, gas, pump, branch)
    seed_axis = np.linspace(
        float(fibermodel.omega_from_lambda_nm(ss.seed_max_nm)),
        float(fibermodel.omega_from_lambda_nm(ss.seed_min_nm)),
        ss.steps,
    )
    noise = tomography.NoiseModel(
        rel_sigma=ss.noise.rel_sigma,
        dark_floor=ss.noise.dark_floor,
        seed=ss.noise.seed,
    )
    scan = tomography.simulate_set_scan(
        grid,
        seed_axis,
        ss.pump_power_W,
        ss.seed_power_W,
        noise=noise,
        duty_cycle=ss.duty_cycle,
        threads=threads,
    )
    rec = tomography.reconstruct_jsi(scan)
    if run.wants("csv"):
        tomography.set_scan_to_csv(scan, run.path("scan.csv"))
        run.add("scan.csv", "stimulated scan, one row per sample")
        tomography.reconstruction_to_csv(rec, run.path("reconstruction.csv"))
        run.add("reconstruction.csv", "seed-normalized JSI reconstruction")
    rec_marg = jsa.marginals(rec.values, omega_s=rec.omega_s, omega_i=rec.omega_i)
    run.results["reconstructed_idler_nm"] = rec_marg.centroid_lambda_i_nm
    run.results["reconstructed_signal_nm"] = rec_marg.centroid_lambda_s_nm
    print(
        f"scan: {scan.n_slices} slices x {scan.omega_s.size} samples; "
        f"reconstructed idler centroid {rec_marg.centroid_lambda_i_nm:.2f} nm"
    )
    if ss.power_check_seed_W is not None or ss.power_check_pump_W is not None:
        if ss.power_check_seed_W is None or ss.power_check_pump_W is None:
            raise ValidationError(
                "config keys 'set_sim.power_check_seed_W' and "
                "'set_sim.power_check_pump_W' must be set together"
            )
        scaling = tomography.power_scaling_check(
            grid,
            ss.power_check_seed_W,
            ss.power_check_pump_W,
            noise=noise,
            duty_cycle=ss.duty_cycle,
        )
        if run.wants("json"):
            with open(run.path("power_scaling.json"), "w") as fh:
                json.dump(
                    {
                        "seed_exponent": scaling.seed_exponent,
                        "pump_exponent": scaling.pump_exponent,
                        "r_squared_seed": scaling.r_squared_seed,
                        "r_squared_pump": scaling.r_squared_pump,
                    },
                    fh,
                    sort_keys=True,
                    indent=1,
                )
                fh.write("\n")
            run.add("power_scaling.json", "log-log power-law exponents")
        run.results["seed_exponent"] = scaling.seed_exponent
        run.results["pump_exponent"] = scaling.pump_exponent
        print(
            f"power scaling: seed exponent {scaling.seed_exponent:.3f}, "
            f"pump exponent {scaling.pump_exponent:.3f}"
        )


def _emit_sweep(run: _Run, result) -> None:
    sweeps_mod.summary_csv(result, run.path("summary.csv"))
    run.add("summary.csv", "per-point Schmidt numbers and centroids")
    for p in result.points:
        for fname in p.artifacts.values():
            run.add(fname, f"JSI grid at {result.param}={p.value:g}")
    with open(run.path("sweep.json"), "w") as fh:
        json.dump(sweeps_mod.fit_to_dict(result), fh, sort_keys=True, indent=1)
        fh.write("\n")
    run.add("sweep.json", "sweep fit, gaps, and point count")
    run.results["sweep"] = sweeps_mod.fit_to_dict(result)
    for p in result.points:
        print(
            f"{result.param}={p.value:g}{result.unit}: K_flat={p.K_flat:.4f} "
            f"K_complex={p.K_complex:.4f} theta={p.theta_deg:.2f} deg "
            f"idler={p.idler_nm:.2f} nm"
        )
    for g in result.gaps:
        print(f"{result.param}={g.value:g}{result.unit}: gap ({g.reason})")


def cmd_sweep_length(run: _Run, threads: int) -> None:
    result = sweeps_mod.sweep_length(
        run.cfg, out_dir=run.run_dir, threads=threads
    )
    _emit_sweep(run, result)


def cmd_sweep_pressure(run: _Run, threads: int) -> None:
    result = sweeps_mod.sweep_pressure(
        run.cfg, out_dir=run.run_dir, threads=threads
    )
    _emit_sweep(run, result)
    fit = result.fit
    print(
        f"fitted idler sensitivity: {fit.slope_THz_per_bar:.2f} THz/bar "
        f"(|slope| {abs(fit.slope_THz_per_bar):.2f}, r^2 {fit.r_squared:.4f}, "
        f"span {fit.span_THz:.2f} THz over {fit.n_points} points)"
    )


def cmd_density_map(run: _Run, threads: int) -> None:
    cfg = run.cfg
    if cfg.density_map is None:
        raise ValidationError(
            "config section 'density_map' is required for the density-map "
            "subcommand"
        )
    fiber = sweeps_mod.fiber_from_config(cfg)
    gas = sweeps_mod.gas_from_config(cfg)
    records = phasematch.density_map(
        fiber,
        gas,
        (cfg.density_map.pump_min_nm, cfg.density_map.pump_max_nm),
        cfg.density_map.pump_steps,
        detuning_window=cfg.phasematch.detuning_window(),
        grid_points=cfg.phasematch.grid_points,
        threads=threads,
    )
    phasematch.density_map_to_csv(records, run.path("density.csv"))
    run.add("density.csv", "phase-matched branches over the pump scan")
    families: dict[tuple[str, str], list[float]] = {}
    for r in records:
        families.setdefault((r.band_s, r.band_i), []).append(r.theta_deg)
    fam_obj = {
        f"{s}+{i}": {
            "count": len(thetas),
            "theta_min_deg": min(thetas),
            "theta_max_deg": max(thetas),
        }
        for (s, i), thetas in sorted(families.items())
    }
    with open(run.path("families.json"), "w") as fh:
        json.dump(fam_obj, fh, sort_keys=True, indent=1)
        fh.write("\n")
    run.add("families.json", "branch families and their angle ranges")
    run.results["n_records"] = len(records)
    run.results["families"] = sorted(f"{s}+{i}" for s, i in families)
    print(
        f"{len(records)} phase-matched points in "
        f"{len(families)} famil{'y' if len(families) == 1 else 'ies'}: "
        + ", ".join(sorted(f"{s}+{i}" for s, i in families))
    )


_HANDLERS = {
    "dispersion": cmd_dispersion,
    "phasematch": cmd_phasematch,
    "jsa": cmd_jsa,
    "schmidt": cmd_schmidt,
    "set-sim": cmd_set_sim,
    "sweep-length": cmd_sweep_length,
    "sweep-pressure": cmd_sweep_pressure,
    "density-map": cmd_density_map,
}

_HELP = {
    "dispersion": "band structure, dispersion curves, and ZDWs",
    "phasematch": "phase-matched signal/idler branches at the pump",
    "jsa": "joint spectral amplitude and marginals",
    "schmidt": "Schmidt decomposition of the JSA",
    "set-sim": "stimulated-emission tomography simulation",
    "sweep-length": "JSA and Schmidt numbers vs fiber length",
    "sweep-pressure": "branch tuning and Schmidt numbers vs gas pressure",
    "density-map": "branch families over a pump-wavelength scan",
}


def build_parser() -> _Parser:
    parser = _Parser(
        prog="hcfwm",
        description=(
            "Design and analysis of photon-pair generation by four-wave "
            "mixing in gas-filled hollow-core fiber"
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"hcfwm {__version__}"
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument(
            "--config",
            required=True,
            help="YAML config path or bundled recipe name "
            f"({', '.join(bundled_recipes())})",
        )
        p.add_argument(
            "--out",
            default=None,
            help="output root (default: the config's output.dir)",
        )
        p.add_argument(
            "--label",
            default=None,
            help="run directory name (default: UTC timestamp)",
        )
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker-thread cap; results are identical at any value",
        )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            raise ValidationError(
                f"a subcommand is required: one of {', '.join(SUBCOMMANDS)}"
            )
        if args.threads < 1:
            raise ValidationError(
                f"--threads must be >= 1, got {args.threads}"
            )
        cfg = resolve_config(args.config)
        label = args.label or datetime.datetime.now(
            datetime.timezone.utc
        ).strftime("%Y%m%dT%H%M%SZ")
        out_root = args.out or cfg.output.dir
        run_dir = os.path.join(out_root, args.subcommand, label)
        os.makedirs(run_dir, exist_ok=True)
        run = _Run(cfg, args.subcommand, run_dir)
        _HANDLERS[args.subcommand](run, args.threads)
        run.finish()
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
