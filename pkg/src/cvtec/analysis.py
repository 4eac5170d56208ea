"""Error-rate formulas, exhaustive and Monte Carlo rate estimates, sweeps."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from . import __version__
from .decoder import (
    DecoderTable,
    build_decoder,
    ideal_response,
    pattern_outcomes,
    signature_index,
)
from .gaussian import combination_stats, db_to_r, sample_quadratures, vacuum
from .tec import (
    DEFAULT_THRESHOLD,
    ERROR_MODES,
    ClusterConfig,
    ErrorPattern,
    classify_codes,
    corrected_variance,
    error_response,
    prepare_cluster,
)

# Gaussian error amplitude variance for the squeezing sweep, 1 dB above the SNL.
ERROR_VARIANCE_1DB = 0.315

DEFAULT_SHARDS = 16
_MEAN_TOL = 1e-9


def _check_p(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"error probability must lie in [0, 1], got {p}")
    return float(p)


def analytic_p1(p: float) -> float:
    """Protected-correlation error rate without correction."""
    p = _check_p(p)
    return 1.0 - p**2 - (1.0 - p) ** 2


def analytic_p2(p: float) -> float:
    """Error rate with parity-only (sign-blind) syndromes."""
    p = _check_p(p)
    q = 1.0 - p
    return (
        1.0
        - p**6
        - q**6
        - 6 * p**5 * q
        - 6 * p * q**5
        - 9 * p**4 * q**2
        - 9 * p**2 * q**4
    )


def analytic_p3(p: float) -> float:
    """Error rate with sign-resolved syndromes: three-error cases are recovered too."""
    p = _check_p(p)
    return analytic_p2(p) - 2 * 9 * p**3 * (1.0 - p) ** 3


def _table_for(table: DecoderTable, sign_sensitive: bool | None) -> DecoderTable:
    if sign_sensitive is None or sign_sensitive == table.sign_sensitive:
        return table
    return build_decoder(table.config, sign_sensitive)


def brute_force_rate(
    table: DecoderTable, p: float, sign_sensitive: bool | None = None
) -> float:
    """Exact logical error rate by summing over all 64 error patterns.

    ``sign_sensitive`` overrides the table's own classification mode; the
    table is rebuilt for the other mode when they differ.
    """
    p = _check_p(p)
    table = _table_for(table, sign_sensitive)
    return math.fsum(pat.probability(p) for pat, ok in pattern_outcomes(table) if not ok)


def weight_class_accounting(table: DecoderTable) -> dict[int, tuple[int, int]]:
    """``{weight: (corrected, total)}`` over the 64 patterns."""
    acc = {k: [0, 0] for k in range(len(ERROR_MODES) + 1)}
    for pat, ok in pattern_outcomes(table):
        acc[pat.weight][1] += 1
        acc[pat.weight][0] += int(ok)
    return {k: (v[0], v[1]) for k, v in acc.items()}


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    std_error: float
    errors: int
    trials: int


def monte_carlo_rate(
    cfg: ClusterConfig,
    p: float,
    trials: int,
    seed: int,
    sign_sensitive: bool = True,
    mode: str = "expectation",
    epsilon: float = 1.0,
    threshold_fraction: float = DEFAULT_THRESHOLD,
    table: DecoderTable | None = None,
    shards: int = DEFAULT_SHARDS,
    workers: int = 1,
) -> MonteCarloResult:
    """Stochastic estimate of the logical error rate.

    Each trial hits every mode 1..6 independently with probability ``p``, all
    hit modes sharing the amplitude ``epsilon``. Trials are split into a fixed
    number of shards with seeds spawned from ``seed``, so the estimate depends
    only on ``(seed, shards)`` and not on ``workers``. In ``"sampled"`` mode the
    syndromes carry finite-squeezing homodyne noise before classification; a
    logical error is still a nonzero residual mean after feedforward.
    """
    p = _check_p(p)
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if mode not in ("expectation", "sampled"):
        raise ValueError(f"unknown measurement mode {mode!r}")
    if table is None or table.config.protected != cfg.protected:
        table = build_decoder(cfg, sign_sensitive)
    else:
        table = _table_for(table, sign_sensitive)

    prot_resp, syn_resp = error_response(cfg)
    weights = table.weight_array()
    noise = None
    if mode == "sampled":
        noise = (prepare_cluster(cfg), [cfg.protected_combination(), *cfg.syndrome_combinations()])

    shards = max(1, min(shards, trials))
    sizes = [trials // shards + (1 if i < trials % shards else 0) for i in range(shards)]
    seeds = np.random.SeedSequence(seed).spawn(shards)

    def run(i: int) -> int:
        rng = np.random.default_rng(seeds[i])
        hits = (rng.random((sizes[i], len(ERROR_MODES))) < p).astype(float)
        effect = epsilon * hits @ prot_resp
        syn_mean = epsilon * hits @ syn_resp
        observed = syn_mean
        if noise is not None:
            draws = sample_quadratures(noise[0], noise[1], rng, size=sizes[i])
            observed = syn_mean + draws[:, 1:]
        codes = classify_codes(observed, epsilon, threshold_fraction)
        w = weights[signature_index(codes)]
        residual = effect + np.einsum("ij,ij->i", w, syn_mean)
        return int(np.count_nonzero(np.abs(residual) > _MEAN_TOL * abs(epsilon)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(run, range(shards)))
    else:
        errors = sum(run(i) for i in range(shards))
    est = errors / trials
    return MonteCarloResult(est, math.sqrt(est * (1.0 - est) / trials), errors, trials)


@dataclass(frozen=True)
class RateCurvePoint:
    p: float
    p1: float
    p2: float
    p3: float


def rate_sweep(p_grid: Iterable[float] | None = None) -> list[RateCurvePoint]:
    if p_grid is None:
        p_grid = np.linspace(0.0, 0.5, 101)
    return [
        RateCurvePoint(float(p), analytic_p1(p), analytic_p2(p), analytic_p3(p))
        for p in p_grid
    ]


@dataclass(frozen=True)
class SweepPoint:
    squeezing_db: float
    var_snl: float
    var_no_error: float
    var_uncorrected: float
    var_corrected: float


def squeezing_sweep(
    db_grid: Iterable[float],
    error_variance: float = ERROR_VARIANCE_1DB,
    protected: tuple[int, int] = (5, 6),
    error_mode: int | None = None,
    table: DecoderTable | None = None,
) -> list[SweepPoint]:
    """Protected-correlation variance against input squeezing.

    A zero-mean Gaussian displacement of variance ``error_variance`` hits
    ``error_mode`` (default: the first protected mode). Columns: shot-noise
    level, no error, error without correction, error with feedforward.
    """
    if not error_variance > 0:
        raise ValueError(f"error variance must be positive, got {error_variance}")
    if error_mode is None:
        error_mode = protected[0]
    base = ClusterConfig(0.0, protected)
    table = table or build_decoder(base)
    prot = base.protected_combination()
    _, var_snl = combination_stats(vacuum(8), prot)
    prot_resp, syn_resp = error_response(base)
    hit = np.zeros(len(ERROR_MODES))
    hit[error_mode - 1] = 1.0
    action = table.lookup(ideal_response(base, ErrorPattern.fixed([error_mode])).signature)
    leak_uncorrected = float(hit @ prot_resp)
    leak_corrected = leak_uncorrected + float(hit @ syn_resp @ np.array(action.weights))

    points = []
    for db in db_grid:
        if db < 0:
            raise ValueError(f"squeezing must be nonnegative, got {db} dB")
        cfg = ClusterConfig(db_to_r(db), protected)
        _, var_c = combination_stats(prepare_cluster(cfg), prot)
        var_d = corrected_variance(cfg, error_mode, table)
        points.append(
            SweepPoint(
                squeezing_db=float(db),
                var_snl=var_snl,
                var_no_error=var_c,
                var_uncorrected=var_c + error_variance * leak_uncorrected**2,
                var_corrected=var_d + error_variance * leak_corrected**2,
            )
        )
    return points


def db_grid(db_max: float, step: float = 0.1) -> np.ndarray:
    """Uniform grid ``0, step, ..., db_max`` inclusive."""
    if db_max < 0 or step <= 0:
        raise ValueError("need db_max >= 0 and step > 0")
    n = int(round(db_max / step))
    return np.linspace(0.0, db_max, n + 1)


RATE_HEADER = ("p", "P1", "P2", "P3")
SWEEP_HEADER = ("squeezing_db", "snl", "no_error", "uncorrected", "corrected")


def write_rate_csv(points: Sequence[RateCurvePoint], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RATE_HEADER)
    for pt in points:
        w.writerow([repr(pt.p), repr(pt.p1), repr(pt.p2), repr(pt.p3)])


def write_sweep_csv(points: Sequence[SweepPoint], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for pt in points:
        w.writerow(
            [repr(v) for v in (pt.squeezing_db, pt.var_snl, pt.var_no_error,
                               pt.var_uncorrected, pt.var_corrected)]
        )


def monte_carlo_summary(
    cfg: ClusterConfig,
    p: float,
    trials: int,
    seed: int,
    sign_sensitive: bool = True,
    mode: str = "expectation",
    epsilon: float = 1.0,
    threshold_fraction: float = DEFAULT_THRESHOLD,
    shards: int = DEFAULT_SHARDS,
) -> dict:
    """JSON-ready record of a Monte Carlo run compared with the closed form."""
    res = monte_carlo_rate(cfg, p, trials, seed, sign_sensitive, mode, epsilon,
                           threshold_fraction, shards=shards)
    analytic = None
    if cfg.protected == (5, 6):
        analytic = analytic_p3(p) if sign_sensitive else analytic_p2(p)
    z = None
    if analytic is not None:
        diff = res.estimate - analytic
        if res.std_error > 0:
            z = diff / res.std_error
        elif diff == 0:
            z = 0.0
    return {
        "estimate": res.estimate,
        "std_error": res.std_error,
        "errors": res.errors,
        "analytic": analytic,
        "z_score": z,
        "metadata": {
            "version": __version__,
            "p": p,
            "trials": trials,
            "seed": seed,
            "shards": shards,
            "sign_sensitive": sign_sensitive,
            "mode": mode,
            "r": cfg.r,
            "epsilon": epsilon,
            "threshold_fraction": threshold_fraction,
            "protected": list(cfg.protected),
        },
    }


def point_dict(pt) -> dict:
    return asdict(pt)
