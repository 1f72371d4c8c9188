"""Command-line front end: ``nhscatter <subcommand> --config run.yaml``.

Exit codes: 0 success, 1 computational failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import SWEEP_COLUMNS, PacketConfig, sweep_ti_vs_td
from .config import RunConfig, load_config
from .dynamics import (
    extract_RT,
    fit_growth_rate,
    fit_spatial_decay,
    gaussian_packet,
    propagate_eigen,
    propagate_stepper,
    separation_time,
)
from .errors import ConfigError, ExceptionalPointWarning, NHScatterError, NoCriticalPointError
from .io import write_csv, write_json
from .model import build_finite_hamiltonian, model_params, with_parameter
from .poles import PoleKind, critical_gamma, pole_trajectory, validity_verdict
from .scattering import coefficients_over_k
from .spectrum import detect_bound_states, eigendecompose, participation_ratio

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2

SCATTER_COLUMNS = ("k", "R_L", "T_L", "R_R", "T_R")
POLE_COLUMNS = ("param", "pole_index", "re_k", "im_k", "re_E", "im_E", "class")
TIMESERIES_COLUMNS = ("t", "total_intensity", "R_L", "T_L")
SNAPSHOT_COLUMNS = ("j", "abs_psi2", "re_psi", "im_psi")
SPECTRUM_COLUMNS = ("n", "re_E", "im_E", "participation_ratio")
PROFILE_COLUMNS = ("j", "re_psi", "im_psi", "abs_psi2")


def _out_dir(cfg: RunConfig, args) -> Path:
    return Path(args.out if args.out is not None else cfg.output_dir)


def _sweep_parameter(cfg: RunConfig, model) -> str:
    return cfg.sweep.parameter or model.sweep_parameter


def _time_label(t: float) -> str:
    return f"{t:g}".replace(".", "p")


# ------------------------------------------------------------ subcommands


def cmd_scatter(cfg: RunConfig, args):
    """Closed-form R/T over the k-grid, optionally across a parameter sweep."""
    model = cfg.model.build()
    sc = cfg.scatter
    ks = np.linspace(sc.k_min, sc.k_max, sc.n_k)
    if args.dry_run:
        return f"scatter: {model.family} on {sc.n_k} k-points"
    out = _out_dir(cfg, args)
    if cfg.sweep is None:
        write_csv(out / "scatter.csv", SCATTER_COLUMNS, coefficients_over_k(model, ks))
    else:
        parameter = _sweep_parameter(cfg, model)
        rows = []
        for value in cfg.sweep.grid():
            table = coefficients_over_k(with_parameter(model, parameter, value), ks)
            rows.extend((value, *row) for row in table)
        write_csv(out / "scatter.csv", ("param",) + SCATTER_COLUMNS, rows)
    return f"wrote {out / 'scatter.csv'}"


def cmd_poles(cfg: RunConfig, args):
    """Pole positions and classes, tracked across the sweep grid if one is given."""
    model = cfg.model.build()
    if cfg.sweep is not None:
        parameter = _sweep_parameter(cfg, model)
        grid = cfg.sweep.grid()
    else:
        parameter = model.sweep_parameter
        grid = np.array([getattr(model, parameter)])
    if args.dry_run:
        return f"poles: {model.family}.{parameter} over {grid.size} values"
    traj = pole_trajectory(model, grid, parameter, solver=cfg.poles.solver)
    out = _out_dir(cfg, args)
    write_csv(out / "poles.csv", POLE_COLUMNS, traj.rows())
    return f"wrote {out / 'poles.csv'}"


def cmd_evolve(cfg: RunConfig, args):
    """Wave-packet run: intensity time series, snapshots and a summary."""
    cfg.require("lattice", "packet", "time")
    model = cfg.model.build()
    tm = cfg.time
    if args.dry_run:
        return f"evolve: {model.family}, L={cfg.lattice.L}, t_end={tm.t_end}, {tm.propagator}"
    lattice, pk = cfg.lattice, cfg.packet
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        packet = gaussian_packet(lattice, pk.j0, pk.sigma, pk.k)
    n = int(math.floor(tm.t_end / tm.record_every + 1e-9))
    times = tm.record_every * np.arange(n + 1)
    if not math.isclose(times[-1], tm.t_end, abs_tol=1e-9):
        times = np.append(times, tm.t_end)
    times = np.unique(np.concatenate([times, tm.snapshot_times]))
    H = build_finite_hamiltonian(model, lattice)
    propagator = tm.propagator
    if propagator == "eigen":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ExceptionalPointWarning)
            spec = eigendecompose(H, lattice.sites)
        if spec.near_exceptional:
            propagator = "stepper"
        else:
            result = propagate_eigen(spec, packet, times)
    if propagator == "stepper":
        result = propagate_stepper(H, packet, dt=tm.dt, times=times)

    out = _out_dir(cfg, args)
    write_csv(
        out / "timeseries.csv",
        TIMESERIES_COLUMNS,
        zip(result.times, result.total_intensity, result.R_L, result.T_L),
    )
    for t in tm.snapshot_times or (tm.t_end,):
        psi = result.snapshot(t)
        write_csv(
            out / f"snapshot_t{_time_label(t)}.csv",
            SNAPSHOT_COLUMNS,
            zip(lattice.sites, np.abs(psi) ** 2, psi.real, psi.imag),
        )

    rt = extract_RT(result, tm.t_end)
    verdict = validity_verdict(model)
    summary = {
        "model": {"family": model.family, **model_params(model)},
        "propagator": propagator,
        "t_end": tm.t_end,
        "R_L": rt.R_L,
        "T_L": rt.T_L,
        "center_intensity": rt.center,
        "separation_time": separation_time(result),
        "valid": verdict.valid,
        "n_growing_poles": verdict.n_growing,
    }
    if model.is_hermitian:
        summary["max_norm_drift"] = float(np.abs(result.total_intensity - 1.0).max())
    if verdict.n_growing:
        try:
            growth = fit_growth_rate(result, tm.growth_window)
            decay = fit_spatial_decay(result.snapshot(tm.t_end), lattice.sites)
            summary["growth_rate"] = growth.rate
            summary["decay_alpha"] = decay.alpha
        except NHScatterError as exc:
            summary["fit_error"] = str(exc)
    write_json(out / "summary.json", summary)
    return f"R_L = {rt.R_L:.6f}, T_L = {rt.T_L:.6f} at t = {tm.t_end:g}; wrote {out}"


def cmd_spectrum(cfg: RunConfig, args):
    """Eigenvalues, participation ratios, bound states and their profiles."""
    cfg.require("lattice")
    model = cfg.model.build()
    lattice = cfg.lattice
    if args.dry_run:
        return f"spectrum: {model.family}, L={lattice.L}"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ExceptionalPointWarning)
        spec = eigendecompose(build_finite_hamiltonian(model, lattice), lattice.sites)
    out = _out_dir(cfg, args)
    pr = [participation_ratio(spec.right[:, n]) for n in range(len(spec))]
    write_csv(
        out / "spectrum.csv",
        SPECTRUM_COLUMNS,
        zip(range(len(spec)), spec.eigenvalues.real, spec.eigenvalues.imag, pr),
    )
    bound = detect_bound_states(spec, cfg.spectrum.threshold)
    if cfg.spectrum.profiles == "all":
        profiled = range(len(spec))
    elif cfg.spectrum.profiles == "bound":
        profiled = [b.index for b in bound]
    elif cfg.spectrum.profiles == "none":
        profiled = []
    else:
        profiled = cfg.spectrum.profiles
    for n in profiled:
        psi = spec.right[:, n]
        write_csv(
            out / f"state_{n}.csv",
            PROFILE_COLUMNS,
            zip(lattice.sites, psi.real, psi.imag, np.abs(psi) ** 2),
        )
    write_json(
        out / "bound_states.json",
        {
            "threshold": cfg.spectrum.threshold,
            "near_exceptional": spec.near_exceptional,
            "min_overlap": spec.min_overlap,
            "completeness_residual": spec.completeness_residual,
            "bound_states": [
                {
                    "n": b.index,
                    "E": b.energy,
                    "center_site": b.center_site,
                    "alpha": b.alpha,
                    "alpha_stderr": b.alpha_stderr,
                    "fit_r2": b.fit_r2,
                    "participation_ratio": b.participation_ratio,
                    "diagnostic": b.diagnostic,
                }
                for b in bound
            ],
        },
    )
    note = " (near an exceptional point)" if caught else ""
    return f"{len(spec)} eigenvalues, {len(bound)} bound state(s){note}; wrote {out}"


def cmd_sweep(cfg: RunConfig, args):
    """Time-independent versus wave-packet coefficients across the sweep grid."""
    cfg.require("lattice", "packet", "time", "sweep")
    model = cfg.model.build()
    parameter = _sweep_parameter(cfg, model)
    grid = cfg.sweep.grid()
    if args.dry_run:
        return f"sweep: {model.family}.{parameter} over {grid.size} values, L={cfg.lattice.L}"
    packet = PacketConfig(
        L=cfg.lattice.L,
        j0=cfg.packet.j0,
        sigma=cfg.packet.sigma,
        k=cfg.packet.k,
        t_extract=cfg.time.t_end,
        propagator=cfg.time.propagator,
        dt=cfg.time.dt,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        report = sweep_ti_vs_td(model, grid, packet, parameter, threads=args.threads)
    out = _out_dir(cfg, args)
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, (r.csv_row() for r in report.rows))
    n_div = sum(r.diverged for r in report.rows)
    return f"{len(report.rows)} points, {n_div} diverged; wrote {out / 'sweep.csv'}"


def _verdict_payload(model):
    verdict = validity_verdict(model)
    try:
        gc = critical_gamma(model)
    except NoCriticalPointError:
        gc = None
    offending = set(id(p) for p in verdict.offending_poles)
    return {
        "model": {"family": model.family, **model_params(model)},
        "sweep_parameter": model.sweep_parameter,
        "valid": verdict.valid,
        "critical_value": gc,
        "margin": verdict.gamma_margin,
        "n_growing_poles": verdict.n_growing,
        "spectral_singularity": any(
            p.kind is PoleKind.SPECTRAL_SINGULARITY for p in verdict.poles
        ),
        "poles": [
            {"k": p.k, "E": p.E, "class": p.kind.value, "offending": id(p) in offending}
            for p in verdict.poles
        ],
    }


def _verdict_text(payload) -> str:
    params = ", ".join(f"{k}={v:g}" for k, v in payload["model"].items() if k != "family")
    lines = [f"model: {payload['model']['family']}({params})"]
    gc = payload["critical_value"]
    name = payload["sweep_parameter"]
    lines.append(
        f"critical {name}: " + ("none in range" if gc is None else f"{gc:.12g}")
    )
    lines.append("verdict: " + ("VALID" if payload["valid"] else "INVALID"))
    for p in payload["poles"]:
        k, E = p["k"], p["E"]
        flag = "  <-- offending" if p["offending"] else ""
        lines.append(
            f"  pole k = {k.real:+.10f} {k.imag:+.10f}i   E = {E.real:+.10f} {E.imag:+.10f}i"
            f"   {p['class']}{flag}"
        )
    if payload["spectral_singularity"]:
        lines.append("a pole lies on the real k axis inside the band: spectral singularity")
    return "\n".join(lines)


def cmd_validate(cfg: RunConfig, args):
    """Pole-based verdict on whether time-independent scattering is meaningful."""
    model = cfg.model.build()
    if args.dry_run:
        return f"validate: {model.family}"
    payload = _verdict_payload(model)
    out = _out_dir(cfg, args)
    write_json(out / "verdict.json", payload)
    return _verdict_text(payload)


COMMANDS = {
    "scatter": cmd_scatter,
    "poles": cmd_poles,
    "evolve": cmd_evolve,
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nhscatter",
        description="Scattering off non-Hermitian two-site centers in a 1D tight-binding chain.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=func.__doc__.splitlines()[0])
        p.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
        p.add_argument("--dry-run", action="store_true", help="validate the config and exit")
        p.add_argument("--threads", type=int, default=1, metavar="N",
                       help="concurrent sweep points (sweep only)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        cfg = load_config(args.config)
        message = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NHScatterError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if args.dry_run:
        message = f"config OK; would run {message}"
    print(message)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
