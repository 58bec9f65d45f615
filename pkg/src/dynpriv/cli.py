"""Command-line front door: validate, simulate, attack, and batch-verify.

Exit codes: 0 all requested verdicts pass; 2 invalid config; 3 structural
assumption violated under --strict; 4 numerical failure; 5 verdict failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import adversary as adv
from . import analysis
from . import scenario as scn
from .solver import BlowUpError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_NUMERIC = 4
EXIT_VERDICT = 5

SUITE_SCENARIOS = (
    "example1_satnet_n20",
    "example2_fj_n20",
    "example3_consensus_n20",
    "example3_consensus",
    "example4_pinning_n10",
    "example4_pinning",
)


def _load(args) -> dict:
    if args.config:
        config = scn.load_config(args.config)
    elif getattr(args, "bundled", None):
        config = scn.load_bundled(args.bundled)
    else:
        raise scn.ScenarioError("provide --config PATH or --bundled NAME")
    if getattr(args, "seed", None) is not None:
        config = scn.override_seed(config, args.seed)
    return config


def _outdir(args, name: str) -> Path:
    base = Path(args.out) if args.out else Path("out")
    path = base / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_artifacts(outdir: Path, sc, traj, report) -> None:
    traj.to_csv(outdir / "trajectory.csv")
    nu = getattr(sc.system, "nu", None)
    header, table = analysis.series_table(traj, nu)
    with open(outdir / "series.csv", "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in table:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    report.series_files = {"trajectory": "trajectory.csv", "series": "series.csv"}
    _write_json(outdir / "report.json", report.as_dict())


def cmd_check(args) -> int:
    config = _load(args)
    sc = scn.build_scenario(config)
    graph_results = scn.run_graph_checks(sc)
    mask_results = scn.run_mask_check(sc)
    violations = scn.covering_violations(sc)
    payload = {
        "scenario": sc.name,
        "config_hash": sc.hash,
        "graph": graph_results,
        "covering_pairs": [list(v) for v in violations],
        "mask": mask_results,
    }
    outdir = _outdir(args, sc.name)
    _write_json(outdir / "check_report.json", payload)
    failed = [k for k, ok in graph_results.items() if not ok]
    if not mask_results["ok"]:
        failed.append("mask_axioms")
    for k in sorted(graph_results):
        print(f"check {k}: {'pass' if graph_results[k] else 'FAIL'}")
    print(f"check mask_axioms: {'pass' if mask_results['ok'] else 'FAIL'}")
    if violations:
        print(f"covering pairs (target, observer-covered-by): {sorted(violations)}")
    if failed and args.strict:
        print(f"strict mode: failing checks {failed}", file=sys.stderr)
        return EXIT_ASSUMPTION
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load(args)
    sc = scn.build_scenario(config)
    if args.strict:
        graph_results = scn.run_graph_checks(sc)
        if not all(graph_results.values()):
            bad = [k for k, ok in graph_results.items() if not ok]
            print(f"strict mode: failing checks {bad}", file=sys.stderr)
            if "no_covering" in bad:
                print(f"covering pairs: {sorted(scn.covering_violations(sc))}", file=sys.stderr)
            return EXIT_ASSUMPTION
    outdir = _outdir(args, sc.name)
    try:
        traj, report = scn.run_simulation(sc, tol_override=args.tol)
    except BlowUpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write_artifacts(outdir, sc, traj, report)
    for name, ok in sorted(report.verdicts.items()):
        print(f"verdict {name}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if report.all_pass else EXIT_VERDICT


def cmd_adversary(args) -> int:
    config = _load(args)
    sc = scn.build_scenario(config)
    if sc.adversary is None:
        raise scn.ScenarioError("scenario config has no adversary block")
    observer = int(sc.adversary["observer"])
    target = int(sc.adversary["target"])
    policies = sc.adversary.get("policies", list(adv.SUBSTITUTION_POLICIES))
    settle_tol = float(sc.adversary.get("settle_tol", 1e-6))
    outdir = _outdir(args, sc.name)
    try:
        traj, _report = scn.run_simulation(sc)
    except BlowUpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    lap = scn.laplacian(sc.graph)
    row_field, needed = adv.make_linear_row_field(lap, target)
    view = adv.EavesdropperView.from_trajectory(sc.graph, observer, traj)
    true_x0 = float(sc.x0[target])
    attempts = []
    for policy in policies:
        result = adv.reconstruct_initial(
            view, target, row_field, needed, policy=policy, settle_tol=settle_tol
        )
        attempts.append(
            {
                "observer": observer,
                "target": target,
                "policy": policy,
                "x_hat": result.x_hat,
                "true_x0": true_x0,
                "abs_error": abs(result.x_hat - true_x0),
                "missing_channels": list(result.missing_channels),
            }
        )
        print(
            f"attack policy={policy}: x_hat={result.x_hat:.6g} "
            f"true={true_x0:.6g} err={abs(result.x_hat - true_x0):.3e}"
        )
    payload = {
        "scenario": sc.name,
        "config_hash": sc.hash,
        "covering_pairs": [list(v) for v in adv.covering_pairs(sc.graph)],
        "attempts": attempts,
    }
    _write_json(outdir / "attack.json", payload)
    return EXIT_OK


def cmd_suite(args) -> int:
    names = args.names or list(SUITE_SCENARIOS)
    rows = []
    worst = EXIT_OK
    for name in names:
        config = scn.load_bundled(name)
        sc = scn.build_scenario(config)
        graph_results = scn.run_graph_checks(sc)
        if not all(graph_results.values()):
            rows.append(
                {
                    "scenario": name,
                    "config_hash": sc.hash,
                    "status": "assumption-failed",
                    "verdicts": graph_results,
                }
            )
            worst = max(worst, EXIT_VERDICT)
            continue
        outdir = _outdir(args, name)
        try:
            traj, report = scn.run_simulation(sc, tol_override=args.tol)
        except BlowUpError as exc:
            rows.append(
                {
                    "scenario": name,
                    "config_hash": sc.hash,
                    "status": f"numerical failure: {exc}",
                    "verdicts": {},
                }
            )
            worst = max(worst, EXIT_NUMERIC)
            continue
        _write_artifacts(outdir, sc, traj, report)
        ok = report.all_pass
        rows.append(
            {
                "scenario": name,
                "config_hash": sc.hash,
                "status": "pass" if ok else "verdict-failed",
                "verdicts": report.verdicts,
            }
        )
        if not ok:
            worst = max(worst, EXIT_VERDICT)
    width = max(len(r["scenario"]) for r in rows) + 2
    print(f"{'scenario':<{width}}status           verdicts")
    for row in rows:
        marks = " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in sorted(row["verdicts"].items()))
        print(f"{row['scenario']:<{width}}{row['status']:<17}{marks}")
    base = Path(args.out) if args.out else Path("out")
    base.mkdir(parents=True, exist_ok=True)
    _write_json(base / "suite_summary.json", {"results": rows})
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynpriv",
        description="Simulate and verify output-masked multiagent dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("simulate", cmd_simulate),
        ("check", cmd_check),
        ("adversary", cmd_adversary),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to a scenario JSON file")
        p.add_argument("--bundled", help="name of a bundled scenario")
        p.add_argument("--out", help="artifact output directory (default ./out)")
        p.add_argument("--strict", action="store_true", help="fail on assumption violations")
        p.add_argument("--seed", type=int, help="override the top-level config seed")
        p.add_argument("--tol", type=float, help="override the convergence tolerance")
        p.set_defaults(fn=fn)
    p = sub.add_parser("suite")
    p.add_argument("--names", nargs="*", help="bundled scenario subset (default: full suite)")
    p.add_argument("--out", help="artifact output directory (default ./out)")
    p.add_argument("--tol", type=float, help="override the convergence tolerance")
    p.set_defaults(fn=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except scn.ScenarioError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
