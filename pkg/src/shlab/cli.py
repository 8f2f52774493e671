"""Command-line entry points: simulate, workbench, diagnose, wsu, convergence.

Exit codes: 0 ok, 2 validation/parse, 3 numerical abort, 4 IO.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    energy_inequality_residual,
    weak_residual,
    weak_strong_experiment,
)
from .errors import (
    ConstraintError,
    DesignError,
    EnergyPositivityError,
    FormatError,
    InvalidValueError,
    NumericalAbort,
    ParseError,
    PositivityError,
    SearchError,
    SolvabilityError,
    ValidationError,
)
from .fields import TorusGrid
from .scenario import load_config
from .snapshots import write_snapshot
from .solver import simulate
from .workbench import (
    energy_gap,
    find_energy_offset,
    improvement_step,
    subsolution_certificate,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_VALIDATION_ERRORS = (ParseError, ValidationError, InvalidValueError, PositivityError)
_NUMERICAL_ERRORS = (
    NumericalAbort,
    SolvabilityError,
    EnergyPositivityError,
    DesignError,
    SearchError,
    ConstraintError,
)


def _write_manifest(out_dir: Path, scenario_path: Path, seed: int, grid, outputs, timings):
    manifest = {
        "scenario_sha256": hashlib.sha256(scenario_path.read_bytes()).hexdigest(),
        "scenario_file": scenario_path.name,
        "seed": seed,
        "grid": {"nx": grid.nx, "ny": grid.ny},
        "shlab_version": __version__,
        "outputs": sorted(str(p.name) for p in outputs),
        "timings_s": timings,
    }
    with open(out_dir / "run_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    shutil.copyfile(scenario_path, out_dir / scenario_path.name)


def _prep_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.scenario)
    if args.seed is not None:
        cfg.values["seed"] = args.seed
    if args.cfl is not None:
        cfg.values["physics.cfl"] = args.cfl
    scn = cfg.to_scenario()
    traj = simulate(scn)
    out = _prep_out(args)
    outputs = []
    ledger_path = out / "ledger.csv"
    traj.ledger.to_csv(ledger_path)
    outputs.append(ledger_path)
    for j, st in enumerate(traj.states):
        for name, fld in (("h", st.h), ("q", st.q), ("B", traj.selections[j])):
            p = out / f"snapshot_{j:04d}_{name}.shlab"
            write_snapshot(fld, p)
            outputs.append(p)
    residual = energy_inequality_residual(traj.ledger)
    summary = out / "summary.txt"
    with open(summary, "w") as fh:
        fh.write(
            "shlab simulate\n"
            f"grid: {scn.grid.nx}x{scn.grid.ny}  T = {scn.T}  steps = {traj.n_steps}\n"
            f"final mass: {traj.ledger.rows[-1][1]:.12g}\n"
            f"final total energy: {traj.ledger.rows[-1][4]:.12g}\n"
            f"worst energy-balance residual: {residual:.6g}\n"
        )
    outputs.append(summary)
    _write_manifest(
        out, Path(args.scenario), scn.seed, scn.grid, outputs,
        {"total": time.perf_counter() - t0},
    )
    return EXIT_OK


def _cmd_workbench(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.scenario)
    if args.seed is not None:
        cfg.values["seed"] = args.seed
    problem = cfg.to_workbench_problem()
    fixed = cfg.values["workbench.lambda"]
    offset = fixed if fixed is not None else find_energy_offset(problem)
    sub = problem.build(offset)
    report = subsolution_certificate(sub)
    out = _prep_out(args)
    outputs = []

    gap_rows = [(0, energy_gap(sub), sub.delta, 1)]
    seed = cfg.values["seed"]
    n = cfg.values["workbench.osc_n"]
    for k in range(args.steps):
        sub, step_report = improvement_step(sub, seed=seed + k, n=n)
        gap_rows.append(
            (k + 1, energy_gap(sub), sub.delta, int(step_report.accepted))
        )

    cert = subsolution_certificate(sub)
    with open(out / "certificate.csv", "w") as fh:
        fh.write("t,min_margin\n")
        per_t = cert.margin.values.min(axis=(1, 2))
        for t, m in zip(sub.times, per_t):
            fh.write(f"{t:.17g},{m:.17g}\n")
    outputs.append(out / "certificate.csv")
    with open(out / "gap.csv", "w") as fh:
        fh.write("step,I,delta,accepted\n")
        for row in gap_rows:
            fh.write(f"{row[0]},{row[1]:.17g},{row[2]:.17g},{row[3]}\n")
    outputs.append(out / "gap.csv")

    for label, k in (("t0", 0), ("tmid", sub.times.size // 2), ("tend", sub.times.size - 1)):
        for name, stf in (("v", sub.velocity), ("E", sub.kinetic_energy), ("M", sub.stress)):
            p = out / f"{name}_{label}.shlab"
            write_snapshot(stf.slice(k), p)
            outputs.append(p)

    summary = out / "summary.txt"
    with open(summary, "w") as fh:
        fh.write(
            "shlab workbench\n"
            f"energy offset: {offset:.9g} ({'fixed' if fixed is not None else 'searched'})\n"
            f"certificate: {'PASS' if cert.passed else 'FAIL'}  min margin = {cert.min_margin:.6g}\n"
            f"energy gap I: initial {gap_rows[0][1]:.9g} -> final {gap_rows[-1][1]:.9g}\n"
            f"accepted steps: {sum(r[3] for r in gap_rows[1:])}/{args.steps}\n"
        )
    outputs.append(summary)
    _write_manifest(
        out, Path(args.scenario), seed, problem.grid, outputs,
        {"total": time.perf_counter() - t0},
    )
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    run_dir = Path(args.run_dir)
    ledger_path = run_dir / "ledger.csv"
    if not ledger_path.exists():
        raise FormatError(f"no ledger.csv in {run_dir}")
    rows = np.genfromtxt(ledger_path, delimiter=",", names=True)
    residual = float(np.max(rows["e2_residual"]))
    mass = rows["mass"]
    drift = float(np.max(np.abs(mass - mass[0])) / abs(mass[0]))
    diss = rows["dissipation_cum"]
    monotone = bool(np.all(np.diff(diss) >= -1e-14))
    text = (
        "shlab diagnose\n"
        f"rows: {rows.size}\n"
        f"relative mass drift: {drift:.6g}\n"
        f"worst energy-balance residual: {residual:.6g}\n"
        f"dissipation nondecreasing: {monotone}\n"
    )
    sys.stdout.write(text)
    with open(run_dir / "diagnose.txt", "w") as fh:
        fh.write(text)
    return EXIT_OK


def _cmd_wsu(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.scenario)
    coarse = TorusGrid(cfg.values["grid.nx"], cfg.values["grid.ny"])
    fine = TorusGrid(args.refine * coarse.nx, args.refine * coarse.ny)
    eps_list = [float(e) for e in args.eps.split(",")] if args.eps else [0.0]
    out = _prep_out(args)
    outputs = []
    rates = []
    for eps in eps_list:
        report = weak_strong_experiment(cfg.to_scenario, eps, coarse, fine)
        p = out / f"wsu_eps{eps:g}.csv"
        with open(p, "w") as fh:
            fh.write("t,E_rel,fitted_c\n")
            for t, v in zip(report.times, report.values):
                fh.write(f"{t:.17g},{v:.17g},{report.rate:.17g}\n")
        outputs.append(p)
        rates.append((eps, report.rate, report.values[0], report.values[-1], report.truncated))
    summary = out / "summary.txt"
    with open(summary, "w") as fh:
        fh.write("shlab wsu\n")
        for eps, rate, e0, eT, trunc in rates:
            fh.write(
                f"eps = {eps:g}: E(0) = {e0:.6g}, E(T) = {eT:.6g}, fitted c = {rate:.6g}"
                + ("  [truncated at shock]" if trunc else "")
                + "\n"
            )
    outputs.append(summary)
    _write_manifest(
        out, Path(args.scenario), cfg.values["seed"], coarse, outputs,
        {"total": time.perf_counter() - t0},
    )
    return EXIT_OK


def _cmd_convergence(args) -> int:
    from .diagnostics import restrict_state

    t0 = time.perf_counter()
    cfg = load_config(args.scenario)
    base = TorusGrid(cfg.values["grid.nx"], cfg.values["grid.ny"])
    grids = [base, TorusGrid(2 * base.nx, 2 * base.ny)]
    ref_grid = TorusGrid(4 * base.nx, 4 * base.ny)
    ref = simulate(cfg.to_scenario(ref_grid))
    errors = []
    for g in grids:
        traj = simulate(cfg.to_scenario(g))
        ref_h = restrict_state(ref.states[-1], g).h.values
        errors.append(float(np.mean(np.abs(traj.states[-1].h.values - ref_h))))
    order = float(np.log2(errors[0] / errors[1]))
    out = _prep_out(args)
    with open(out / "convergence.csv", "w") as fh:
        fh.write("nx,l1_error\n")
        for g, err in zip(grids, errors):
            fh.write(f"{g.nx},{err:.17g}\n")
    summary = out / "summary.txt"
    with open(summary, "w") as fh:
        fh.write(f"shlab convergence\nobserved L1 order: {order:.4g}\n")
    _write_manifest(
        out, Path(args.scenario), cfg.values["seed"], base,
        [out / "convergence.csv", summary], {"total": time.perf_counter() - t0},
    )
    sys.stdout.write(f"observed L1 order: {order:.4g}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the finite-volume solver")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cfl", type=float, default=None)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("workbench", help="build and improve a subsolution")
    p.add_argument("scenario")
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_workbench)

    p = sub.add_parser("diagnose", help="re-check ledger invariants of a run directory")
    p.add_argument("run_dir")
    p.set_defaults(fn=_cmd_diagnose)

    p = sub.add_parser("wsu", help="weak-strong uniqueness experiment")
    p.add_argument("scenario")
    p.add_argument("--eps", default="0.01")
    p.add_argument("--refine", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_wsu)

    p = sub.add_parser("convergence", help="grid-refinement study against a 4x reference")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_convergence)
    return parser


def thread_cap() -> int | None:
    """Worker-parallelism cap from SHLAB_THREADS; None means no cap.

    All current commands are single-process, so this only validates and
    records the setting for forward compatibility.
    """
    raw = os.environ.get("SHLAB_THREADS")
    if raw is None:
        return None
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValidationError(f"SHLAB_THREADS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValidationError("SHLAB_THREADS must be >= 1")
    return cap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        thread_cap()
        return args.fn(args)
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"shlab: validation error: {exc}\n")
        return EXIT_VALIDATION
    except _NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"shlab: numerical abort: {exc}\n")
        return EXIT_NUMERICAL
    except (OSError, FormatError) as exc:
        sys.stderr.write(f"shlab: io error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
