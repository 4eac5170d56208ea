"""Command-line front end: ``cvtec verify | tables | sweep-squeezing | sweep-rates | montecarlo``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ERROR_VARIANCE_1DB,
    DEFAULT_SHARDS,
    db_grid,
    monte_carlo_summary,
    rate_sweep,
    squeezing_sweep,
    write_rate_csv,
    write_sweep_csv,
)
from .decoder import ALL_SIGNATURES, build_decoder, check_golden_tables
from .gaussian import combination_stats
from .network import (
    compose_network,
    paper_adjacency,
    paper_network,
    paper_unitary,
    verify_cluster_condition,
)
from .tec import CORRELATIONS, ClusterConfig, correlation, nullifier, prepare_cluster

OUTPUT_DIR_ENV = "CVTEC_OUTPUT_DIR"

DEFAULT_R_GRID = (0.0, 0.345, 0.576, 1.151)

# Var(delta_a) = factor * e^{-2r} / 4: one plus the vertex degree.
NULLIFIER_FACTORS = (3, 3, 3, 3, 3, 3, 7, 7)


def _fail(check: str, **info) -> None:
    print(json.dumps({"check": check, **info}, sort_keys=True), file=sys.stderr)


def _pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a pair like 5,6, got {text!r}") from None
    if (i, j) not in CORRELATIONS:
        raise argparse.ArgumentTypeError(f"protected pair must be one of {list(CORRELATIONS)}")
    return i, j


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


@contextlib.contextmanager
def _output(path: str | None, default_name: str):
    """Open ``path``; else ``$CVTEC_OUTPUT_DIR/default_name``; else stdout."""
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        path = str(Path(os.environ[OUTPUT_DIR_ENV]) / default_name)
    if path is None or path == "-":
        yield sys.stdout
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="", encoding="utf-8") as fh:
        yield fh


def verification_checks(r_grid=DEFAULT_R_GRID) -> list[tuple[str, float]]:
    """``(name, residual)`` for every built-in consistency check."""
    u = paper_unitary()
    report = verify_cluster_condition(u, paper_adjacency())
    decomposition = float(np.max(np.abs(compose_network(paper_network()).entries - u.entries)))
    checks = [
        ("unitarity", report.unitarity_residual),
        ("cluster_condition", report.max_residual_imrel),
        ("gram_condition", report.max_residual_gram),
        ("decomposition", decomposition),
    ]
    adj = paper_adjacency()
    null_res, corr_res = 0.0, 0.0
    for r in r_grid:
        state = prepare_cluster(ClusterConfig(r))
        scale = math.exp(-2 * r) / 4
        for a, factor in enumerate(NULLIFIER_FACTORS, start=1):
            _, var = combination_stats(state, nullifier(a, adj.neighbors(a)))
            null_res = max(null_res, abs(var - factor * scale))
        for i, j in CORRELATIONS:
            _, var = combination_stats(state, correlation(i, j))
            corr_res = max(corr_res, abs(var - 2 * scale))
    checks.append(("nullifier_variances", null_res))
    checks.append(("correlation_variances", corr_res))
    return checks


def cmd_verify(args) -> int:
    if args.dump_network:
        Path(args.dump_network).write_text(paper_network().to_json() + "\n", encoding="utf-8")
    failed = 0
    results = []
    for name, residual in verification_checks(args.r_grid):
        ok = residual < args.tolerance
        failed += not ok
        results.append({"check": name, "residual": residual, "tolerance": args.tolerance, "pass": ok})
        if not ok:
            _fail(name, residual=residual, tolerance=args.tolerance)
    if args.format == "json":
        print(json.dumps({"version": __version__, "checks": results}, indent=2, sort_keys=True))
    else:
        for res in results:
            status = "PASS" if res["pass"] else "FAIL"
            print(f"{status}  {res['check']:<22} residual={res['residual']:.3e}  tol={res['tolerance']:.1e}")
    return 1 if failed else 0


def cmd_tables(args) -> int:
    cfg = ClusterConfig(protected=args.protected)
    table = build_decoder(cfg, sign_sensitive=not args.sign_blind)
    golden = None
    if cfg.protected != (5, 6):
        print(f"notice: no published rows for protected pair {cfg.protected}; golden diff skipped",
              file=sys.stderr)
    elif args.sign_blind:
        print("notice: published rows assume sign-resolved syndromes; golden diff skipped",
              file=sys.stderr)
    else:
        checked, mismatches = check_golden_tables(table)
        golden = {"checked": checked, "mismatches": mismatches}
        for m in mismatches:
            _fail("golden_table", **m)

    with _output(args.out, f"decoder_{cfg.protected[0]}{cfg.protected[1]}.{args.format}") as fh:
        if args.format == "json":
            data = table.to_dict()
            data["golden"] = golden
            data["version"] = __version__
            fh.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
        elif args.format == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["signature", "kind", "w1", "w2", "w3", "w4", "predicted_pattern"])
            for sig in ALL_SIGNATURES:
                a = table.lookup(sig)
                pred = a.predicted_pattern.label if a.predicted_pattern is not None else ""
                w.writerow([sig, a.kind, *a.weights, pred])
        else:
            names = "  ".join(f"p{i}-p{j}" for i, j in cfg.syndrome_pairs)
            fh.write(f"protected p{cfg.protected[0]}-p{cfg.protected[1]}; syndromes {names}\n")
            for sig in ALL_SIGNATURES:
                a = table.lookup(sig)
                if a.kind == "undecodable" and a.predicted_pattern is None:
                    continue
                pred = a.predicted_pattern.label if a.predicted_pattern is not None else "-"
                fh.write(f"{sig}  {a.kind:<18} {a.describe(cfg):<22} predicted {{{pred}}}\n")
            fh.write(f"ambiguous signatures: {len(table.ambiguities)}\n")
            if golden is not None:
                fh.write(f"golden rows: {golden['checked']} cases, "
                         f"{len(golden['mismatches'])} mismatches\n")
    return 1 if golden and golden["mismatches"] else 0


def cmd_sweep_squeezing(args) -> int:
    points = squeezing_sweep(db_grid(args.db_max, args.db_step), args.error_var, args.protected)
    with _output(args.out, "sweep_squeezing.csv") as fh:
        write_sweep_csv(points, fh)
    return 0


def cmd_sweep_rates(args) -> int:
    if not 0.0 <= args.p_max <= 1.0 or args.points < 1:
        print("p-max must lie in [0, 1] and points must be positive", file=sys.stderr)
        return 2
    points = rate_sweep(np.linspace(0.0, args.p_max, args.points))
    with _output(args.out, "sweep_rates.csv") as fh:
        write_rate_csv(points, fh)
    return 0


def cmd_montecarlo(args) -> int:
    cfg = ClusterConfig(args.r, args.protected)
    summary = monte_carlo_summary(
        cfg, args.p, args.trials, args.seed,
        sign_sensitive=not args.sign_blind, mode=args.mode, epsilon=args.epsilon,
        threshold_fraction=args.threshold, shards=args.shards,
    )
    with _output(args.out, "montecarlo.json") as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvtec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check the unitary, network and cluster variances")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--r-grid", type=_float_list, default=list(DEFAULT_R_GRID))
    p.add_argument("--dump-network", metavar="PATH", help="write the network as JSON")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tables", help="generate the decoder table and diff it against the published syndrome tables")
    p.add_argument("--protected", type=_pair, default=(5, 6))
    p.add_argument("--sign-blind", action="store_true")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("sweep-squeezing", help="protected-correlation variance against squeezing")
    p.add_argument("--db-max", type=float, default=10.0)
    p.add_argument("--db-step", type=float, default=0.1)
    p.add_argument("--error-var", type=float, default=ERROR_VARIANCE_1DB)
    p.add_argument("--protected", type=_pair, default=(5, 6))
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_squeezing)

    p = sub.add_parser("sweep-rates", help="closed-form error rates against p")
    p.add_argument("--p-max", type=float, default=0.5)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_rates)

    p = sub.add_parser("montecarlo", help="Monte Carlo logical error rate")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sign-blind", action="store_true")
    p.add_argument("--mode", choices=("expectation", "sampled"), default="expectation")
    p.add_argument("--r", type=float, default=0.0, help="squeezing in nats (sampled mode)")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--protected", type=_pair, default=(5, 6))
    p.add_argument("--shards", type=int, default=DEFAULT_SHARDS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        _fail(args.command, error=str(exc))
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
