"""Batch front end: simulate | decompose | sweep | kernelcheck.

All experiments are driven by a flat config file (key = value sections); the
bundled reference experiment runs when --config is omitted.  Outputs are CSV
(17 significant digits, LF endings) and JSON with stable key order, so that
identical config and seed reproduce bit-identical files.

Exit codes: 0 success, 1 bad config or arguments, 2 admissibility hard fail
under --strict, 3 solver failure, 4 sweep member failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    DiagnosticsReport,
    SweepConfig,
    depinning_time,
    flow_rule_violations,
    kernel_gap_study,
    run_convergence_sweep,
)
from .config import (
    ANALYTIC,
    ConfigError,
    ExperimentConfig,
    build_initial_state,
    parse_config,
    reference_config,
    render_config,
)
from .fluctuations import FluctuationLedger, split_fluctuations
from .profile import Grid, SimState, WHOLE_LINE, check_admissible, save_profile
from .scheme import AdmissibilityError, DomainExhausted, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ADMISSIBILITY = 2
EXIT_SOLVER = 3
EXIT_SWEEP_MEMBER = 4


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        cfg = reference_config()
    else:
        cfg = parse_config(Path(args.config).read_text())
    if getattr(args, "strict", False):
        cfg.strict = True
    return cfg


def _run_with_ledger(cfg: ExperimentConfig):
    state = build_initial_state(cfg)
    eps = cfg.eps
    n_steps = int(math.floor(cfg.t_final / cfg.eps2 + 1e-9))
    ledger = FluctuationLedger(n_steps)
    adm_tol = cfg.tolerances.admissibility_for(cfg.backend, cfg.h)
    result = run(
        state,
        eps,
        cfg.t_final,
        snapshot_times=cfg.snapshot_times,
        ledger=ledger,
        strict=cfg.strict,
        adm_tol=adm_tol,
        root_tol=cfg.tolerances.root,
    )
    return state, result, ledger, adm_tol


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        state, result, ledger, adm_tol = _run_with_ledger(cfg)
    except AdmissibilityError as exc:
        print(f"admissibility: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except DomainExhausted as exc:
        print(f"solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    traj = result.trajectory
    for msg in result.warnings:
        print(f"warning: {msg}", file=sys.stderr)

    _write_csv(
        out / "interface.csv",
        ["t", "xi", "mode", "p_at_xi"],
        zip(traj.times.tolist(), traj.xis.tolist(), traj.modes, traj.p_at_xi.tolist()),
    )
    for n, prof in traj.snapshots.items():
        t = traj.snapshot_times[n]
        save_profile(out / f"profile_n{n:05d}.csv", prof, alpha=traj.alpha)
    flow_tol = 1e-6 if cfg.backend == ANALYTIC else 10.0 * cfg.h
    violations = flow_rule_violations(traj, flow_tol)
    diag = {
        "config": render_config(cfg),
        "seed": args.seed,
        "depinning_time": depinning_time(traj),
        "n_steps": traj.n_steps,
        "flow_rule_tol": flow_tol,
        "flow_rule_violations": len(violations),
        "max_jump_error": float(np.max(traj.jump_errors)),
        "max_shift": float(np.max(traj.shifts)),
        "shift_cap": 0.5 * traj.alpha * cfg.eps2,
        "max_root_residual": float(np.max(traj.root_residuals)),
        "max_identity_error": float(np.max(ledger.identity_errors)),
        "snapped_snapshot_times": {str(n): traj.times[n] for n in traj.snapshots},
        "admissibility_initial_ok": traj.admissibility[0].passed,
        "admissibility_worst": traj.admissibility[0].worst_violations(),
        "warnings": result.warnings,
    }
    _write_json(out / "diagnostics.json", diag)
    return EXIT_OK


def cmd_decompose(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    times = [float(t) for t in args.times] if args.times else [0.1537]
    try:
        state, result, ledger, _ = _run_with_ledger(cfg)
    except AdmissibilityError as exc:
        print(f"admissibility: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except DomainExhausted as exc:
        print(f"solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    x = ledger.grid.x
    for t in times:
        try:
            sp = split_fluctuations(ledger, t)
        except ValueError as exc:
            print(f"decompose: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        n = ledger.index_of(t)
        p, q, f = ledger.p_hist[n], ledger.q_hist[n], ledger.f_hist[n]
        tag = f"{t:.6f}".rstrip("0").rstrip(".").replace(".", "p")
        _write_csv(
            out / f"decomposition_t{tag}.csv",
            ["x", "p", "q", "f", "f_ess4", "f_neg_total"],
            zip(x.tolist(), p.tolist(), q.tolist(), f.tolist(),
                sp.ess4.tolist(), sp.neg_total.tolist()),
        )
        _write_csv(
            out / f"split_t{tag}.csv",
            ["x", "f_ess1", "f_ess2", "f_ess3", "f_ess4",
             "f_neg1", "f_neg2", "f_neg3", "f_neg4"],
            zip(x.tolist(), *(a.tolist() for a in sp.ess), *(a.tolist() for a in sp.neg)),
        )
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eps2_list = [float(e) for e in args.eps2] if args.eps2 else list(cfg.sweep_eps2)
    gamma = args.gamma if args.gamma is not None else cfg.sweep_gamma
    if len(eps2_list) < 3:
        print("sweep needs at least 3 eps2 values to estimate rates", file=sys.stderr)
        return EXIT_CONFIG
    if not 0.0 < gamma < 0.5:
        print(f"gamma {gamma} outside (0, 1/2)", file=sys.stderr)
        return EXIT_CONFIG

    eps_list = [math.sqrt(e2) for e2 in eps2_list]
    base = ExperimentConfig(**{**cfg.__dict__})
    base.backend = ANALYTIC
    base.h = min(eps_list) / 10.0
    base.eps2 = eps2_list[0]

    def make_state(eps: float) -> SimState:
        return build_initial_state(base)

    try:
        sweep = SweepConfig(eps_list=eps_list, gamma=gamma,
                            comparison_times=cfg.comparison_times, seed=args.seed)
        report = run_convergence_sweep(make_state, cfg.t_final, sweep)
    except (ValueError, ConfigError) as exc:
        print(f"sweep: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainExhausted as exc:
        partial = DiagnosticsReport(eps_list=eps_list, seed=args.seed,
                                    notes=[f"member failed: {exc}"])
        (out / "sweep_report.json").write_text(partial.to_json() + "\n")
        print(f"sweep member failed: {exc}", file=sys.stderr)
        return EXIT_SWEEP_MEMBER

    (out / "sweep_report.json").write_text(report.to_json() + "\n")
    _write_csv(
        out / "rates.csv",
        ["quantity", "value_coarse_to_fine", "order_estimates"],
        [
            ["q_vs_heat", " ".join(map(_fmt, report.q_errors)),
             " ".join(map(_fmt, report.rate_estimates["q_vs_heat"]))],
            ["xi_cauchy", " ".join(map(_fmt, report.xi_distances)),
             " ".join(map(_fmt, report.rate_estimates["xi_cauchy"]))],
            ["p_cauchy", " ".join(map(_fmt, report.p_distances)),
             " ".join(map(_fmt, report.rate_estimates["p_cauchy"]))],
            ["stefan_residual", " ".join(map(_fmt, report.stefan_residuals)), ""],
        ],
    )
    lines = ["quantity            coarse -> fine"]
    lines.append(f"depinning_time      {'  '.join(_fmt(v) for v in report.depinning_times)}")
    lines.append(f"xi_cauchy           {'  '.join(_fmt(v) for v in report.xi_distances)}")
    lines.append(f"p_cauchy            {'  '.join(_fmt(v) for v in report.p_distances)}")
    lines.append(f"q_vs_heat           {'  '.join(_fmt(v) for v in report.q_errors)}")
    lines.append(f"stefan_residual     {'  '.join(_fmt(v) for v in report.stefan_residuals)}")
    lines.append(f"holder_time(g={gamma:g})  {'  '.join(_fmt(v) for v in report.holder_time)}")
    lines.append(f"holder_space        {'  '.join(_fmt(v) for v in report.holder_space)}")
    (out / "sweep_report.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_kernelcheck(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eps = args.eps
    n_list = [int(n) for n in args.n] if args.n else [4, 16, 64, 256, 1024]
    if eps <= 0 or any(n < 1 for n in n_list):
        print("kernelcheck needs eps > 0 and positive n", file=sys.stderr)
        return EXIT_CONFIG
    cfg = reference_config()
    cfg.backend = ANALYTIC
    cfg.h = eps / 10.0
    try:
        q_ini = None
        if not args.no_data_gap:
            from .profile import to_p
            q_ini = to_p(build_initial_state(cfg))
        study = kernel_gap_study(eps, n_list, q_ini=q_ini)
    except Exception as exc:  # solver trouble surfaces as exit 3
        print(f"kernelcheck: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    rows = []
    for r in study["rows"]:
        rows.append([r["n"], r["sup_gap"], r["normalized_gap"],
                     r.get("data_gap", ""), r.get("normalized_data_gap", "")])
    _write_csv(out / "kernel_gap.csv",
               ["n", "sup_gap", "eps_n32_gap", "data_gap", "sqrtn_over_eps_data_gap"], rows)
    _write_csv(out / "gap_integrals.csv",
               ["n", "int_b", "int_b_over_s2"],
               [[r["n"], r["int_b"], r["int_b_over_s2"]] for r in study["frequency_integrals"]])
    _write_json(out / "kernelcheck.json", study)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hystdiff",
        description="Hysteretic interface dynamics in bilinear forward-backward diffusion",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="experiment config path (default: built-in reference)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--strict", action="store_true",
                       help="treat admissibility violations as hard errors")

    p = sub.add_parser("simulate", help="run the time march, emit interface curve and snapshots")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="emit regular/fluctuation decomposition at given times")
    common(p)
    p.add_argument("--times", nargs="*", type=float, help="diagnostic times (continuous)")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("sweep", help="step-size sweep with convergence diagnostics")
    common(p)
    p.add_argument("--eps2", nargs="*", type=float, help="override eps**2 list")
    p.add_argument("--gamma", type=float, default=None, help="Hoelder exponent in (0, 1/2)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("kernelcheck", help="kernel self-convolution gap tables")
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--n", nargs="*", type=int, help="power list (default 4 16 64 256 1024)")
    p.add_argument("--no-data-gap", action="store_true")
    p.set_defaults(func=cmd_kernelcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
