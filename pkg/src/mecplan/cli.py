"""Command-line interface.

Subcommands: ``make-scenario`` (write a scenario file), ``validate-queueing``
(simulate the MEC queue under all three disciplines and check the
short-packet delay model), ``optimize`` (run one solver on a scenario),
``sweep`` (re-solve across a parameter range). Every run drops a
``manifest.json`` capturing the exact flags and seeds next to its outputs.

Exit codes: 0 = answered (including infeasible), 1 = validation failure,
2 = usage error, 3 = internal/numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .optimizer import (
    InfeasibleError,
    assoc_comm_bottleneck,
    assoc_comp_bottleneck,
    brute_force_solve,
    extended_plb_solve,
    plb_solve,
)
from .queueing import MecServerSpec, ParetoWorkload, long_tail_asymptote
from .scenario import (
    Scenario,
    ScenarioConfig,
    ScenarioError,
    generate_scenario,
    load_scenario,
    save_scenario,
    with_first_devices,
    with_n_t,
    with_s_rate_factor,
    with_symbol_budget,
)
from .sim import (
    ArrivalSpec,
    Discipline,
    JobClass,
    backend_name,
    run_queue_sim,
    validate_ps_approximation,
    write_ccdf_csv,
)

_RELIABLE_MIN_TAIL = 50
_RELIABLE_MIN_TOTAL = 10_000


def _fmt(x) -> str:
    return f"{x:.12g}"


def _write_manifest(out_dir: Path, command: str, flags: dict, seeds, outputs, t0: float):
    manifest = {
        "command": command,
        "flags": flags,
        "seeds": seeds,
        "tool_version": __version__,
        "kernel_backend": backend_name(),
        "outputs": [str(p) for p in outputs],
        "wall_clock_s": round(time.time() - t0, 3),
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def _fig5_setup():
    """The queueing validation preset: 10 short + 10 long sources."""
    rates = tuple([0.01] * 20)
    classes = [JobClass.deterministic(1.0, label="short") for _ in range(10)]
    classes += [JobClass.pareto(10.0, 1.5, label="long") for _ in range(10)]
    return ArrivalSpec(kind="bernoulli", rates=rates), classes, 5.0


def _scenario_queue_setup(scen: Scenario):
    """Map a scenario's first AP to a single-queue validation setup."""
    c_s = scen.compute.c_s
    rates = [d.lambda_u for d in scen.devices]
    classes = [JobClass.deterministic(c_s, label="short") for _ in scen.devices]
    ap = scen.aps[0]
    rates.append(ap.lambda_long)
    classes.append(
        JobClass.pareto(scen.compute.c0_ratio * c_s, scen.compute.pareto_v, label="long")
    )
    return ArrivalSpec(kind="bernoulli", rates=tuple(rates)), classes, ap.s_rate


def cmd_validate_queueing(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.scenario == "fig5" or args.scenario is None:
        arrivals, classes, total_rate = _fig5_setup()
    else:
        arrivals, classes, total_rate = _scenario_queue_setup(load_scenario(args.scenario))
    if args.arrivals:
        arrivals = ArrivalSpec(kind=args.arrivals, rates=arrivals.rates)

    rho = sum(r * j.mean_work for r, j in zip(arrivals.rates, classes)) / total_rate
    c_s = next(j.c for j in classes if j.work_kind == "deterministic")
    longs = [j for j in classes if j.work_kind == "pareto"]
    pw = ParetoWorkload(c0_ratio=longs[0].c0 / c_s, v=longs[0].v) if longs else None
    mec = MecServerSpec(
        s_rate=total_rate,
        c_s=c_s,
        c_l_mean=pw.mean_ratio * c_s if pw else c_s,
        lambda_long=sum(r for r, j in zip(arrivals.rates, classes) if j.work_kind == "pareto")
        or 1e-12,
        lambda_short_sum=sum(
            r for r, j in zip(arrivals.rates, classes) if j.work_kind == "deterministic"
        ),
    )

    splits = tuple(
        r * j.mean_work / rho for r, j in zip(arrivals.rates, classes)
    )  # per-source rate shares proportional to offered load
    disciplines = {
        "ps": Discipline.ps(),
        "fcfs_mux": Discipline.fcfs_mux(),
        "fcfs_individual": Discipline.fcfs_individual(splits),
    }

    outputs = []
    for name, disc in disciplines.items():
        ccdfs = run_queue_sim(
            arrivals, classes, disc, total_rate, args.packets, args.seed
        )
        rows = []
        for label, ccdf in ccdfs.items():
            if label == "short":
                grid = [(q, c_s * (q + 1) / total_rate) for q in range(0, 61)]
                for q, t in grid:
                    emp = ccdf.query_geq(t * (1.0 - 1e-9))
                    if q > 0 and emp == 0.0:
                        break
                    model = rho**q if name == "ps" else None
                    rows.append(_ccdf_row(label, t, emp, ccdf, model))
            else:
                t_grid = np.geomspace(pw.c0_ratio * c_s / total_rate, ccdf.samples[-1], 30)
                for t in t_grid:
                    emp = ccdf.query(t)
                    model = long_tail_asymptote(pw, mec, t) if name == "ps" else None
                    rows.append(_ccdf_row(label, t, emp, ccdf, model))
        path = out_dir / f"ccdf_{name}.csv"
        write_ccdf_csv(path, rows)
        outputs.append(path)

    report = validate_ps_approximation(
        arrivals, classes, total_rate, args.packets, args.seed
    )
    report_path = out_dir / "ps_check.csv"
    with open(report_path, "w") as fh:
        fh.write("q,t_slots,prob_model,prob_empirical,stderr,flagged\n")
        for r in report.rows:
            fh.write(
                f"{r.q},{_fmt(r.t_slots)},{_fmt(r.model)},{_fmt(r.empirical)},"
                f"{_fmt(r.stderr)},{int(r.flagged)}\n"
            )
    outputs.append(report_path)
    _write_manifest(
        out_dir,
        "validate-queueing",
        {
            "scenario": args.scenario or "fig5",
            "packets": args.packets,
            "arrivals": arrivals.kind,
        },
        [args.seed],
        outputs,
        t0,
    )
    if not report.passed:
        flagged = ", ".join(f"q={r.q}" for r in report.flagged())
        print(
            f"FAIL: short-packet model deviates beyond 3 stderr + 20% at {flagged} "
            f"(rho={rho:.4f}); see {report_path}",
            file=sys.stderr,
        )
        return 1
    print(f"OK: short-packet model within tolerance at all probed q (rho={rho:.4f})")
    return 0


def _ccdf_row(label, t, emp, ccdf, model):
    n_tail = int(round(emp * ccdf.count))
    reliable = n_tail >= _RELIABLE_MIN_TAIL and ccdf.count >= _RELIABLE_MIN_TOTAL
    return (label, t, emp, ccdf.stderr(t), model, reliable)


def cmd_optimize(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scen = load_scenario(args.scenario)

    if args.mode in ("plb", "extended", "brute"):
        if args.mode == "plb":
            report = plb_solve(scen, args.eps_init, args.delta_eps)
        elif args.mode == "extended":
            report = extended_plb_solve(scen, args.eps_init, args.delta_eps)
        else:
            report = brute_force_solve(scen)
        doc = report.to_dict()
        summary = [
            f"solver: {doc['solver']}",
            f"status: {doc['status']}",
            f"worst-case loss: {_fmt(doc['epsilon_a'])}",
            f"iterations: {doc['iterations']}",
        ]
        if report.allocation is not None:
            summary.append(f"subcarriers used: {report.allocation.total_subcarriers()}")
    elif args.mode == "comm":
        x = assoc_comm_bottleneck(scen)
        doc = {
            "solver": "comm_bottleneck",
            "status": "optimal",
            "association": [int(r.argmax()) if r.any() else None for r in x],
        }
        summary = ["solver: comm_bottleneck"]
    elif args.mode == "comp":
        try:
            res = assoc_comp_bottleneck(scen)
            doc = {
                "solver": "comp_bottleneck",
                "status": "optimal",
                "rho_star": res.rho_star,
                "lambda_targets": [float(v) for v in res.lambda_targets],
                "members": res.members,
                "association": [int(r.argmax()) if r.any() else None for r in res.x],
                "achieved_rho": [float(v) for v in res.achieved_rho],
            }
            summary = [f"solver: comp_bottleneck", f"rho*: {_fmt(res.rho_star)}"]
        except InfeasibleError as exc:
            doc = {"solver": "comp_bottleneck", "status": "infeasible", "detail": str(exc)}
            summary = ["solver: comp_bottleneck", "status: infeasible"]
    else:  # pragma: no cover - argparse restricts choices
        raise AssertionError(args.mode)

    report_path = out_dir / "report.json"
    with open(report_path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_json_default)
        fh.write("\n")
    summary_path = out_dir / "summary.txt"
    summary_path.write_text("\n".join(summary) + "\n")
    _write_manifest(
        out_dir,
        "optimize",
        {
            "scenario": args.scenario,
            "mode": args.mode,
            "eps_init": args.eps_init,
            "delta_eps": args.delta_eps,
        },
        [scen.seed],
        [report_path, summary_path],
        t0,
    )
    print("\n".join(summary))
    return 0


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _sweep_point(packed):
    scen, vary, value = packed
    try:
        if vary == "nt":
            mod = with_n_t(scen, int(value))
        elif vary == "srate":
            mod = with_s_rate_factor(scen, float(value))
        elif vary == "w0ts":
            mod = with_symbol_budget(scen, float(value))
        else:
            mod = with_first_devices(scen, int(value))
        report = extended_plb_solve(mod)
        if report.status != "optimal":
            return (value, report.status, None, None, None, None, None)
        x_plb = report.allocation.x
        x_comm = assoc_comm_bottleneck(mod)
        dist_comm = int((x_plb != x_comm).any(axis=1).sum())
        try:
            comp = assoc_comp_bottleneck(mod)
            dist_comp = int((x_plb != comp.x).any(axis=1).sum())
        except InfeasibleError:
            dist_comp = None
        return (
            value,
            "optimal",
            report.epsilon_a,
            report.allocation.total_subcarriers(),
            report.iterations,
            dist_comm,
            dist_comp,
        )
    except Exception as exc:  # per-point failures become rows, sweep continues
        return (value, f"error: {exc}", None, None, None, None, None)


def cmd_sweep(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scen = load_scenario(args.scenario)
    values = [v for v in args.values.split(",") if v]
    work = [(scen, args.vary, v) for v in values]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, work))
    else:
        results = [_sweep_point(w) for w in work]

    path = out_dir / "sweep.csv"
    with open(path, "w") as fh:
        fh.write(
            "vary_param,value,epsilon_a,subcarriers_used,iterations,"
            "assoc_dist_comm,assoc_dist_comp,status\n"
        )
        for value, status, eps, subs, iters, d_comm, d_comp in results:
            cells = [
                args.vary,
                value,
                "" if eps is None else _fmt(eps),
                "" if subs is None else str(subs),
                "" if iters is None else str(iters),
                "" if d_comm is None else str(d_comm),
                "" if d_comp is None else str(d_comp),
                status,
            ]
            fh.write(",".join(str(c) for c in cells) + "\n")
    _write_manifest(
        out_dir,
        "sweep",
        {"scenario": args.scenario, "vary": args.vary, "values": args.values, "jobs": args.jobs},
        [scen.seed],
        [path],
        t0,
    )
    print(f"sweep written to {path}")
    return 0


def cmd_make_scenario(args) -> int:
    cfg = ScenarioConfig(
        n_aps=args.aps,
        n_devices=args.devices,
        seed=args.seed,
        n_t=args.nt,
        s_rate_over_cs=args.srate,
        shadowing_std_db=args.shadowing,
    )
    scen = generate_scenario(cfg)
    save_scenario(scen, args.out)
    print(
        f"wrote {args.out} (K={scen.n_devices}, M={scen.n_aps}, "
        f"typical={scen.typical_scenario})"
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mecplan",
        description="Cross-layer planning for mission-critical IoT over MEC",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-scenario", help="generate and save a scenario file")
    p.add_argument("--out", required=True)
    p.add_argument("--devices", type=int, default=20)
    p.add_argument("--aps", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nt", type=int, default=16)
    p.add_argument("--srate", type=float, default=6.0, help="MEC service rate / c_s")
    p.add_argument("--shadowing", type=float, default=8.0, help="shadowing std (dB)")
    p.set_defaults(func=cmd_make_scenario)

    p = sub.add_parser(
        "validate-queueing", help="simulate the MEC queue and check the delay model"
    )
    p.add_argument(
        "scenario",
        nargs="?",
        default=None,
        help="scenario file, or 'fig5' for the builtin preset (default)",
    )
    p.add_argument("--packets", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--arrivals", choices=["bernoulli", "poisson"], default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_validate_queueing)

    p = sub.add_parser("optimize", help="solve one scenario")
    p.add_argument("scenario")
    p.add_argument(
        "--mode", choices=["plb", "extended", "comm", "comp", "brute"], default="extended"
    )
    p.add_argument("--eps-init", type=float, default=1.0)
    p.add_argument("--delta-eps", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="re-solve across a parameter range")
    p.add_argument("scenario")
    p.add_argument("--vary", choices=["nt", "srate", "w0ts", "k"], required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
