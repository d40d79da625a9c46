"""Command-line front end.

Usage::

    kolmlab <kind> --config cfg.json [--seed N] [--out DIR] [--plots]

Kinds: propagate, decay-check, thickness, spectral-fit, interp-verify,
telescope.  Every run writes CSV tables plus ``manifest.json`` into the
output directory (default ``runs/<kind>``).

CSV files are byte-deterministic for a fixed config and seed: floats are
written with ``repr`` (shortest round-trip form) and no timestamps or
environment data appear in them.  The manifest carries the one timestamp
of the run, the fully resolved config, and the artifact list.

Exit codes::

    0  run completed, all checked inequalities hold
    2  config unreadable or invalid
    3  a numerical guard tripped (resolution, aliasing, quadrature, ...)
    4  a checked inequality failed; the witness is printed and recorded
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import (
    build_descriptor,
    initial_states,
    load_config,
    resolved_dict,
)
from .errors import ConfigError, GeometryError, GuardError, KolmlabError
from .grid import PhaseField, PhaseGrid, SpectralField, fourier_inverse, l2_norm
from .inequality import fit_spectral_constant, verify_interpolation
from .mixtures import mixture_norm, mixture_to_phase, physical_norm
from .propagator import (
    DecayConstants,
    decay_bound,
    fd_solve,
    propagate_grid,
    propagate_mixture,
    tail_mass,
)
from .snapshots import load_field, save_field
from .telescope import (
    TimeSet,
    assemble_constants,
    build_sequence,
    containment_index,
    find_density_point,
    select_l1,
    verify_observability,
)
from .thickness import check_thickness, minimal_delta

_REL_TOL = 1e-9


def _fmt(value) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def _write_csv(out_dir: str, name: str, header, rows) -> str:
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return name


def _write_manifest(out_dir: str, kind: str, cfg, extra: dict, exit_code: int):
    body = {
        "format": "kolmlab-run-manifest",
        "library_version": __version__,
        "kind": kind,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": resolved_dict(cfg),
        "exit_code": exit_code,
    }
    body.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _maybe_plot(enabled: bool, out_dir: str, name: str, draw) -> str | None:
    """Render one SVG if plotting is requested and matplotlib is present."""
    if not enabled:
        return None
    try:
        import matplotlib
    except ImportError:
        print("plots requested but matplotlib is not installed; skipping", file=sys.stderr)
        return None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    draw(ax)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, name))
    plt.close(fig)
    return name


# ---------------------------------------------------------------------------
# per-kind runners: each returns (exit_code, manifest_extra)


def _initial_field(cfg) -> PhaseField:
    spec = cfg.initial
    if "snapshot" in spec:
        obj = load_field(spec["snapshot"])
        if isinstance(obj, SpectralField):
            return fourier_inverse(obj)
        if isinstance(obj, PhaseField):
            return obj
        raise ConfigError("snapshot initial data must hold a field, not a mask")
    state = initial_states(spec, cfg.seed)[0]
    return mixture_to_phase(state, cfg.grid.build())


def _run_propagate(cfg, out_dir: str, plots: bool):
    artifacts = []
    if cfg.backend == "mixture":
        states = initial_states(cfg.initial, cfg.seed)
        rows = []
        for i, state in enumerate(states):
            for t in cfg.times:
                moved = propagate_mixture(state, float(t))
                rows.append((i, t, mixture_norm(moved), physical_norm(moved)))
        artifacts.append(_write_csv(
            out_dir, "trajectory.csv",
            ("state", "time", "spectral_norm", "physical_norm"), rows,
        ))
        norms = [r[3] for r in rows]
    else:
        field0 = _initial_field(cfg)
        rows = []
        norms = []
        for i, t in enumerate(cfg.times):
            if cfg.backend == "fd":
                moved = fd_solve(field0, float(t), cfg.fd_steps)
                reference = propagate_grid(field0, float(t))
                err = l2_norm(PhaseField(field0.grid, moved.values - reference.values))
                scale = max(l2_norm(reference), 1e-300)
                rows.append((i, t, l2_norm(moved), err / scale))
            else:
                moved = propagate_grid(field0, float(t))
                rows.append((i, t, l2_norm(moved)))
            norms.append(rows[-1][2])
            if cfg.save_snapshots:
                name = f"state_{i:03d}.npz"
                save_field(os.path.join(out_dir, name), moved)
                artifacts.append(name)
        header = ("index", "time", "l2_norm")
        if cfg.backend == "fd":
            header = header + ("reference_rel_err",)
        artifacts.insert(0, _write_csv(out_dir, "trajectory.csv", header, rows))

    plot = _maybe_plot(plots, out_dir, "trajectory.svg", lambda ax: (
        ax.plot(list(cfg.times), norms[-len(cfg.times):], marker="o"),
        ax.set_xlabel("time"), ax.set_ylabel("L2 norm"),
    ))
    if plot:
        artifacts.append(plot)
    print(f"propagate[{cfg.backend}]: {len(rows)} rows -> {out_dir}")
    return 0, {
        "operations": ["propagate_mixture" if cfg.backend == "mixture" else
                       ("fd_solve" if cfg.backend == "fd" else "propagate_grid")],
        "artifacts": artifacts,
    }


def _run_decay_check(cfg, out_dir: str, plots: bool):
    states = initial_states(cfg.initial, cfg.seed)
    rows = []
    violations = []
    for i, state in enumerate(states):
        constants = DecayConstants(
            d=state.d, c_exponent=cfg.c_exponent, c_pointwise=cfg.c_pointwise
        )
        mass0 = mixture_norm(state) ** 2
        for t in cfg.t_values:
            moved = propagate_mixture(state, float(t))
            for n in cfg.n_values:
                tail = tail_mass(moved, float(n))
                bound = decay_bound(float(n), float(t), mass0, constants, d=state.d)
                ok = tail <= bound * (1.0 + _REL_TOL) + 1e-300
                if tail <= 0:
                    margin = np.inf
                elif bound <= 0:
                    margin = -np.inf
                else:
                    margin = float(np.log(bound) - np.log(tail))
                rows.append((i, n, t, tail, bound, margin, ok))
                if not ok:
                    violations.append(
                        f"state {i}, N={n}, T={t}: tail {tail:.6e} > bound {bound:.6e}"
                    )
    artifacts = [_write_csv(
        out_dir, "decay_check.csv",
        ("state", "n_cut", "time", "tail_mass", "bound", "log_margin", "holds"),
        rows,
    )]
    plot = _maybe_plot(plots, out_dir, "decay.svg", lambda ax: (
        ax.semilogy([r[1] for r in rows], [max(r[3], 1e-300) for r in rows], "o", label="tail"),
        ax.semilogy([r[1] for r in rows], [r[4] for r in rows], "x", label="bound"),
        ax.set_xlabel("band radius N"), ax.legend(),
    ))
    if plot:
        artifacts.append(plot)
    for w in violations:
        print("violation:", w)
    print(f"decay-check: {len(rows)} cases, {len(violations)} violations -> {out_dir}")
    extra = {"operations": ["tail_mass", "decay_bound"], "artifacts": artifacts,
             "violations": violations}
    return (4 if violations else 0), extra


def _run_thickness(cfg, out_dir: str, plots: bool):
    desc = build_descriptor(cfg.set_body)
    verdict = check_thickness(desc, cfg.delta, cfg.r, cfg.sampling_step)
    try:
        least = minimal_delta(desc, cfg.r, cfg.sampling_step)
    except GeometryError:
        least = None
    witness = json.dumps(list(verdict.counterexample)) if verdict.counterexample else ""
    artifacts = [_write_csv(
        out_dir, "thickness.csv",
        ("variant", "delta", "r", "sampling_step", "thick", "worst_distance",
         "minimal_delta", "counterexample"),
        [(cfg.set_body["variant"], verdict.delta, verdict.r, verdict.sampling_step,
          verdict.thick, verdict.worst_distance, least, witness)],
    )]
    word = "thick" if verdict.thick else "NOT thick"
    print(f"thickness: set is {word} at (delta={cfg.delta}, r={cfg.r}) -> {out_dir}")
    return 0, {
        "operations": ["check_thickness", "minimal_delta"],
        "artifacts": artifacts,
        "thick": bool(verdict.thick),
    }


def _run_spectral_fit(cfg, out_dir: str, plots: bool):
    desc = build_descriptor(cfg.set_body)
    report = fit_spectral_constant(
        desc, cfg.n_values, samples_per_n=cfg.samples_per_n,
        seed=cfg.seed, grid=cfg.grid.build(),
    )
    rows = [(r.n_cut, r.worst_ratio, r.fitted_c) for r in report.rows]
    artifacts = [_write_csv(
        out_dir, "spectral_fit.csv", ("n_cut", "worst_ratio", "fitted_c"), rows,
    )]
    plot = _maybe_plot(plots, out_dir, "spectral_fit.svg", lambda ax: (
        ax.semilogy([r[0] for r in rows], [r[1] for r in rows], marker="o"),
        ax.set_xlabel("band radius N"), ax.set_ylabel("worst ratio"),
    ))
    if plot:
        artifacts.append(plot)
    print(f"spectral-fit: fitted constant {report.fitted_constant!r} "
          f"over {len(rows)} band radii -> {out_dir}")
    return 0, {
        "operations": ["fit_spectral_constant"],
        "artifacts": artifacts,
        "fitted_constant": report.fitted_constant,
        "sample_family": report.family,
    }


def _fitted_c1(desc, cfg, d: int) -> float:
    """Spectral fit on the set, converted to the assembled bound's first constant."""
    dim = getattr(desc, "dim", 2 * d)
    grid_d = max(1, dim // 2)
    grid = None if grid_d == 1 else PhaseGrid(grid_d, 48, float(np.pi))
    fit = fit_spectral_constant(
        desc, cfg.fit_n_values, samples_per_n=cfg.fit_samples_per_n,
        seed=cfg.seed, grid=grid,
    )
    return float(fit.fitted_constant / 2.0 + DecayConstants(d=grid_d).c3)


def _run_interp_verify(cfg, out_dir: str, plots: bool):
    desc = build_descriptor(cfg.set_body)
    states = initial_states(cfg.initial, cfg.seed)
    c1 = cfg.c1 if cfg.c1 is not None else _fitted_c1(desc, cfg, states[0].d)
    rows = []
    violations = []
    for i, state in enumerate(states):
        for t in cfg.t_values:
            for alpha in cfg.alpha_values:
                rep = verify_interpolation(
                    state, desc, float(t), float(alpha), c1,
                    max_points=cfg.max_points,
                )
                budget = rep.ledger.observed_budget
                ok = rep.holds and rep.observed_constant <= budget * (1.0 + _REL_TOL)
                rows.append((
                    i, t, alpha, rep.lhs, rep.norm_gt_omega, rep.norm_g0,
                    rep.log_rhs, rep.rhs, rep.observed_constant, budget, ok,
                ))
                if not ok:
                    violations.append(
                        f"state {i}, T={t}, alpha={alpha}: lhs {rep.lhs:.6e}, "
                        f"log rhs {rep.log_rhs:.6e}, observed {rep.observed_constant:.6e}, "
                        f"budget {budget:.6e}"
                    )
    artifacts = [_write_csv(
        out_dir, "interp_verify.csv",
        ("state", "horizon", "alpha", "lhs", "restricted_norm", "initial_norm",
         "log_rhs", "rhs", "observed_constant", "budget", "holds"),
        rows,
    )]
    plot = _maybe_plot(plots, out_dir, "interp_verify.svg", lambda ax: (
        ax.plot([r[1] for r in rows], [r[8] for r in rows], "o"),
        ax.set_xlabel("horizon T"), ax.set_ylabel("observed constant"),
    ))
    if plot:
        artifacts.append(plot)
    for w in violations:
        print("violation:", w)
    print(f"interp-verify: c1={c1!r}, {len(rows)} cases, "
          f"{len(violations)} violations -> {out_dir}")
    extra = {"operations": ["verify_interpolation"], "artifacts": artifacts,
             "c1": c1, "violations": violations}
    return (4 if violations else 0), extra


def _run_telescope(cfg, out_dir: str, plots: bool):
    desc = build_descriptor(cfg.set_body)
    time_set = TimeSet(cfg.horizon, cfg.intervals)
    states = initial_states(cfg.initial, cfg.seed)
    l = find_density_point(time_set)
    l1 = cfg.l1 if cfg.l1 is not None else select_l1(time_set, l, cfg.lam)
    m0 = containment_index(time_set, l, cfg.lam, l1)
    depth = cfg.depth if cfg.depth is not None else min(max(8, m0), 64)
    seq = build_sequence(time_set, l, cfg.lam, l1, depth)
    c1 = cfg.c1 if cfg.c1 is not None else _fitted_c1(desc, cfg, states[0].d)
    consts = assemble_constants(seq, c1)

    step_rows = []
    summary_rows = []
    violations = []
    for i, state in enumerate(states):
        rep = verify_observability(
            state, desc, time_set, seq, consts,
            nodes_per_component=cfg.nodes_per_component, max_rows=cfg.max_rows,
        )
        for row in rep.rows:
            step_rows.append((
                i, row.m, row.l_m, row.interval_measure,
                row.log_lhs, row.log_rhs, row.lhs, row.rhs, row.holds,
            ))
            if not row.holds:
                violations.append(
                    f"state {i}, step m={row.m}: log lhs {row.log_lhs:.6e} "
                    f"> log rhs {row.log_rhs:.6e}"
                )
        summary_rows.append((
            i, rep.lhs, rep.total_integral, rep.log_rhs, rep.log_ratio,
            rep.ratio, rep.identity_abs_err, rep.chain_last_m, rep.all_steps_hold,
        ))
        if rep.log_ratio > _REL_TOL:
            violations.append(
                f"state {i}: log ratio {rep.log_ratio:.6e} > 0 "
                f"(lhs {rep.lhs:.6e} exceeds the bound)"
            )
        if rep.identity_abs_err > 1e-8:
            violations.append(
                f"state {i}: telescoping identity drift {rep.identity_abs_err:.3e}"
            )
    artifacts = [
        _write_csv(
            out_dir, "telescope_steps.csv",
            ("state", "m", "l_m", "interval_measure", "log_step_lhs",
             "log_step_rhs", "step_lhs", "step_rhs", "holds"),
            step_rows,
        ),
        _write_csv(
            out_dir, "telescope_summary.csv",
            ("state", "lhs", "total_integral", "log_rhs", "log_ratio", "ratio",
             "identity_abs_err", "chain_last_m", "all_steps_hold"),
            summary_rows,
        ),
    ]
    plot = _maybe_plot(plots, out_dir, "telescope.svg", lambda ax: (
        ax.plot([r[1] for r in step_rows], [r[4] for r in step_rows], "o", label="log lhs"),
        ax.plot([r[1] for r in step_rows], [r[5] for r in step_rows], "x", label="log rhs"),
        ax.set_xlabel("step m"), ax.legend(),
    ))
    if plot:
        artifacts.append(plot)
    for w in violations:
        print("violation:", w)
    print(f"telescope: l={l!r}, l1={l1!r}, depth={depth}, "
          f"{len(violations)} violations -> {out_dir}")
    extra = {
        "operations": ["find_density_point", "select_l1", "build_sequence",
                       "assemble_constants", "verify_observability"],
        "artifacts": artifacts,
        "sequence": {"l": l, "l1": l1, "lambda": cfg.lam, "depth": depth,
                     "m0": m0, "certified_all": seq.certified_all},
        "constants": {"c1": c1, "beta": consts.beta, "c2": consts.c2,
                      "log_cobs": consts.log_cobs},
        "violations": violations,
    }
    return (4 if violations else 0), extra


_RUNNERS = {
    "propagate": _run_propagate,
    "decay-check": _run_decay_check,
    "thickness": _run_thickness,
    "spectral-fit": _run_spectral_fit,
    "interp-verify": _run_interp_verify,
    "telescope": _run_telescope,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kolmlab",
        description="verification lab for kinetic transport-diffusion estimates",
    )
    parser.add_argument("--version", action="version", version=f"kolmlab {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in _RUNNERS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (default runs/<kind>)")
        p.add_argument("--plots", action="store_true", help="also write SVG plots")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = args.out if args.out is not None else os.path.join("runs", args.kind)
    try:
        cfg = load_config(args.config, args.kind)
        if args.seed is not None:
            cfg = replace(cfg, seed=int(args.seed))
        os.makedirs(out_dir, exist_ok=True)
        code, extra = _RUNNERS[args.kind](cfg, out_dir, args.plots)
        _write_manifest(out_dir, args.kind, cfg, extra, code)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    except KolmlabError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
