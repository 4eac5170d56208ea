"""Cluster preparation, error injection, syndrome measurement and feedforward.

Mode labels are one-based (``1..8``). Of the five protected correlations
``p1-p2, p2-p5, p3-p6, p4-p3, p5-p6`` one is chosen as the protected
observable and the other four serve as syndromes.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import IO, Iterable, Sequence

import numpy as np

from .gaussian import (
    GaussianState,
    QuadratureCombination,
    apply,
    combination_moments,
    combination_stats,
    displace_p,
    sample_quadratures,
    squeeze_p,
    vacuum,
)
from .network import N_MODES, network_symplectic

CORRELATIONS: tuple[tuple[int, int], ...] = ((1, 2), (2, 5), (3, 6), (4, 3), (5, 6))
ERROR_MODES: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
SOURCES = ("from_unitary", "from_network")
SYMBOLS = ("-", "0", "+")

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class ClusterConfig:
    """Squeezing (nats, uniform over inputs), protected pair and unitary source."""

    r: float = 0.0
    protected: tuple[int, int] = (5, 6)
    source: str = "from_unitary"

    def __post_init__(self):
        object.__setattr__(self, "protected", tuple(int(m) for m in self.protected))
        object.__setattr__(self, "r", float(self.r))
        if not self.r >= 0:
            raise ValueError(f"squeezing parameter must be nonnegative, got {self.r}")
        if self.protected not in CORRELATIONS:
            raise ValueError(
                f"protected pair {self.protected} is not one of {list(CORRELATIONS)}"
            )
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")

    @property
    def syndrome_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(c for c in CORRELATIONS if c != self.protected)

    def protected_combination(self) -> QuadratureCombination:
        return correlation(*self.protected)

    def syndrome_combinations(self) -> list[QuadratureCombination]:
        return [correlation(i, j) for i, j in self.syndrome_pairs]


def correlation(i: int, j: int) -> QuadratureCombination:
    """``p_i - p_j`` on the eight-mode cluster, one-based labels."""
    return QuadratureCombination.p_difference(N_MODES, i - 1, j - 1)


def nullifier(a: int, neighbors: Iterable[int]) -> QuadratureCombination:
    """``p_a - sum_{b in N_a} x_b``."""
    return QuadratureCombination.from_terms(
        N_MODES, x={b - 1: -1.0 for b in neighbors}, p={a - 1: 1.0}, name=f"delta{a}"
    )


def prepare_cluster(cfg: ClusterConfig) -> GaussianState:
    """Eight p-squeezed vacua sent through the cluster-generation network."""
    return _prepare(cfg.r, cfg.source)


@lru_cache(maxsize=64)
def _prepare(r: float, source: str) -> GaussianState:
    state = vacuum(N_MODES)
    for mode in range(N_MODES):
        state = squeeze_p(state, mode, r)
    return apply(state, network_symplectic(source))


@dataclass(frozen=True)
class ErrorPattern:
    """Identical p-displacement on every listed mode.

    ``amplitude_model`` is ``"fixed"`` (amplitude ``epsilon`` each time) or
    ``"gaussian"`` (one ``Normal(0, sigma^2)`` amplitude per trial, shared by
    all listed modes).
    """

    modes: frozenset[int] = frozenset()
    amplitude_model: str = "fixed"
    epsilon: float = 1.0
    sigma: float | None = None

    def __post_init__(self):
        modes = frozenset(int(m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        if not modes <= set(ERROR_MODES):
            raise ValueError(f"error modes must be a subset of {ERROR_MODES}, got {sorted(modes)}")
        if self.amplitude_model == "fixed":
            if modes and self.epsilon == 0:
                raise ValueError("a fixed-amplitude error needs a nonzero epsilon")
        elif self.amplitude_model == "gaussian":
            if self.sigma is None or not self.sigma > 0:
                raise ValueError(f"gaussian amplitude model needs sigma > 0, got {self.sigma}")
        else:
            raise ValueError(f"unknown amplitude model {self.amplitude_model!r}")

    @classmethod
    def fixed(cls, modes: Iterable[int], epsilon: float = 1.0) -> "ErrorPattern":
        return cls(frozenset(modes), "fixed", epsilon)

    @classmethod
    def gaussian(cls, modes: Iterable[int], sigma: float) -> "ErrorPattern":
        return cls(frozenset(modes), "gaussian", sigma=sigma)

    @property
    def weight(self) -> int:
        return len(self.modes)

    @property
    def effective_weight(self) -> int:
        # Identical errors on k modes look like identical errors on the 6 - k others.
        return min(self.weight, len(ERROR_MODES) - self.weight)

    @property
    def label(self) -> str:
        return ",".join(str(m) for m in sorted(self.modes))

    def complement(self) -> "ErrorPattern":
        rest = frozenset(ERROR_MODES) - self.modes
        return ErrorPattern(rest, self.amplitude_model, self.epsilon, self.sigma)

    def probability(self, p: float) -> float:
        """Occurrence probability when each mode is hit independently with probability ``p``."""
        k = self.weight
        return p**k * (1.0 - p) ** (len(ERROR_MODES) - k)


def all_patterns(epsilon: float = 1.0) -> list[ErrorPattern]:
    """All 64 fixed-amplitude patterns, by weight then lexicographically."""
    return [
        ErrorPattern.fixed(c, epsilon)
        for k in range(len(ERROR_MODES) + 1)
        for c in itertools.combinations(ERROR_MODES, k)
    ]


def inject(
    state: GaussianState,
    pattern: ErrorPattern,
    rng_seed: int | np.random.Generator | None = None,
) -> tuple[GaussianState, float]:
    """Displace ``p`` of every mode in ``pattern`` by one shared amplitude."""
    if not pattern.modes:
        return state, 0.0
    if pattern.amplitude_model == "fixed":
        amplitude = float(pattern.epsilon)
    else:
        amplitude = float(np.random.default_rng(rng_seed).normal(0.0, pattern.sigma))
    for mode in sorted(pattern.modes):
        state = displace_p(state, mode - 1, amplitude)
    return state, amplitude


@dataclass(frozen=True)
class SyndromeVector:
    """Four syndrome values, their ternary classification and the protected value."""

    raw: tuple[float, ...]
    classified: tuple[str, ...]
    protected: float | None = None

    @property
    def signature(self) -> str:
        return "".join(self.classified)


def classify(
    raw: Sequence[float], epsilon: float, threshold_fraction: float = DEFAULT_THRESHOLD
) -> tuple[str, ...]:
    """Ternary symbols in units of ``epsilon``: ``+`` near ``+eps``, ``-`` near ``-eps``."""
    codes = classify_codes(np.asarray(raw, dtype=float), epsilon, threshold_fraction)
    return tuple(SYMBOLS[c + 1] for c in codes)


def classify_codes(
    raw: np.ndarray, epsilon: float, threshold_fraction: float = DEFAULT_THRESHOLD
) -> np.ndarray:
    """Array form of :func:`classify`, returning ``-1, 0, +1`` codes."""
    if epsilon == 0:
        raise ValueError("classification needs a nonzero reference amplitude")
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError(f"threshold fraction must lie in (0, 1), got {threshold_fraction}")
    scaled = np.asarray(raw, dtype=float) * np.sign(epsilon)
    cut = threshold_fraction * abs(epsilon)
    return (scaled > cut).astype(np.int8) - (scaled < -cut).astype(np.int8)


def measure_syndromes(
    state: GaussianState,
    cfg: ClusterConfig,
    mode: str = "expectation",
    seed: int | np.random.Generator | None = None,
    epsilon: float = 1.0,
    threshold_fraction: float = DEFAULT_THRESHOLD,
) -> SyndromeVector:
    """Read out the four syndromes and the protected correlation.

    ``"expectation"`` returns exact means (the ideal-syndrome limit);
    ``"sampled"`` returns one joint homodyne draw including the finite-squeezing
    noise, so protected and syndrome values stay correlated.
    """
    combos = [cfg.protected_combination(), *cfg.syndrome_combinations()]
    if mode == "expectation":
        values, _ = combination_moments(state, combos)
    elif mode == "sampled":
        values = sample_quadratures(state, combos, seed)
    else:
        raise ValueError(f"unknown measurement mode {mode!r}")
    raw = tuple(float(v) for v in values[1:])
    return SyndromeVector(raw, classify(raw, epsilon, threshold_fraction), float(values[0]))


ACTION_KINDS = (
    "none",
    "add_syndrome",
    "subtract_syndrome",
    "combined",
    "undecodable",
    "no_detection",
)


@dataclass(frozen=True)
class CorrectionAction:
    """Feedforward rule: add ``sum_i weights[i] * syndrome_i`` to the protected value.

    Single-syndrome rules are reported as ``add_syndrome``/``subtract_syndrome``
    with a one-based :attr:`index`; ``combined`` uses several syndromes.
    """

    kind: str
    weights: tuple[int, ...] = (0, 0, 0, 0)
    predicted_pattern: ErrorPattern | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        if self.kind not in ACTION_KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")
        if len(self.weights) != 4:
            raise ValueError("an action carries exactly four syndrome weights")
        nonzero = [w for w in self.weights if w]
        if self.kind in ("add_syndrome", "subtract_syndrome"):
            want = 1 if self.kind == "add_syndrome" else -1
            if nonzero != [want]:
                raise ValueError(f"{self.kind} needs a single weight of {want}, got {self.weights}")
        elif self.kind == "combined":
            if len(nonzero) < 2:
                raise ValueError("a combined action needs at least two syndromes")
        elif nonzero:
            raise ValueError(f"{self.kind} carries no syndrome weights")

    @classmethod
    def from_weights(
        cls, weights: Sequence[int], predicted: ErrorPattern | None = None
    ) -> "CorrectionAction":
        nonzero = [w for w in weights if w]
        if not nonzero:
            kind = "none"
        elif len(nonzero) == 1 and abs(nonzero[0]) == 1:
            kind = "add_syndrome" if nonzero[0] > 0 else "subtract_syndrome"
        else:
            kind = "combined"
        return cls(kind, tuple(weights), predicted)

    @property
    def index(self) -> int | None:
        if self.kind in ("add_syndrome", "subtract_syndrome"):
            return next(i for i, w in enumerate(self.weights) if w) + 1
        return None

    def describe(self, cfg: ClusterConfig | None = None) -> str:
        if self.kind not in ("add_syndrome", "subtract_syndrome", "combined"):
            return self.kind
        names = [f"p{i}-p{j}" for i, j in (cfg or ClusterConfig()).syndrome_pairs]
        terms = [f"{'+' if w > 0 else '-'}({n})" for w, n in zip(self.weights, names) if w]
        return " ".join(terms)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "weights": list(self.weights)}
        if self.index is not None:
            d["index"] = self.index
        d["predicted_pattern"] = (
            sorted(self.predicted_pattern.modes) if self.predicted_pattern is not None else None
        )
        return d


def apply_correction(raw_protected: float, s: SyndromeVector, action: CorrectionAction) -> float:
    """Classical feedforward of the syndrome record onto the protected record."""
    return float(raw_protected + sum(w * v for w, v in zip(action.weights, s.raw)))


def corrected_combination(cfg: ClusterConfig, action: CorrectionAction) -> QuadratureCombination:
    """The observable actually reported after feedforward, e.g. ``p2 - p6``."""
    c = cfg.protected_combination().coefficients.copy()
    for w, combo in zip(action.weights, cfg.syndrome_combinations()):
        c += w * combo.coefficients
    return QuadratureCombination(c)


def corrected_variance(cfg: ClusterConfig, error_mode: int | None = None, table=None) -> float:
    """Variance of the reported protected value after decoding a single error.

    The feedforward turns the reported value into a quadrature combination of
    its own (``p2 - p6`` for a mode-5 error), so the variance is exact for the
    Gaussian state. ``error_mode=None`` gives the no-error variance.
    """
    from .decoder import build_decoder, decode, ideal_response

    state = prepare_cluster(cfg)
    if error_mode is None:
        return combination_stats(state, cfg.protected_combination())[1]
    if error_mode not in ERROR_MODES:
        raise ValueError(f"single-error scenario needs a mode in {ERROR_MODES}, got {error_mode!r}")
    if table is None:
        table = build_decoder(cfg)
    elif table.config.protected != cfg.protected:
        raise ValueError("decoder table was built for a different protected pair")
    action = decode(ideal_response(cfg, ErrorPattern.fixed([error_mode])), table)
    if action.kind in ("undecodable", "no_detection"):
        raise ValueError(f"a mode-{error_mode} error is not decodable ({action.kind})")
    return combination_stats(state, corrected_combination(cfg, action))[1]


def error_response(cfg: ClusterConfig) -> tuple[np.ndarray, np.ndarray]:
    """Mean shift per unit p-displacement on modes 1..6.

    Returns ``(protected, syndromes)`` with shapes ``(6,)`` and ``(6, 4)``.
    """
    idx = [N_MODES + m - 1 for m in ERROR_MODES]
    prot = cfg.protected_combination().coefficients[idx]
    syn = np.stack([c.coefficients[idx] for c in cfg.syndrome_combinations()], axis=1)
    return prot, syn


@dataclass(frozen=True)
class TecResult:
    pattern: ErrorPattern
    amplitude: float
    syndromes: SyndromeVector
    action: CorrectionAction
    corrected: float
    residual_mean: float

    @property
    def logical_error(self) -> bool:
        return abs(self.residual_mean) > 1e-9 * max(1.0, abs(self.amplitude))

    CSV_HEADER = (
        "pattern",
        "amplitude",
        "s1",
        "s2",
        "s3",
        "s4",
        "signature",
        "action",
        "weights",
        "protected",
        "corrected",
        "logical_error",
    )

    def csv_row(self) -> list:
        return [
            self.pattern.label,
            repr(self.amplitude),
            *(repr(v) for v in self.syndromes.raw),
            self.syndromes.signature,
            self.action.kind,
            " ".join(str(w) for w in self.action.weights),
            repr(self.syndromes.protected),
            repr(self.corrected),
            int(self.logical_error),
        ]


def run_protocol(
    cfg: ClusterConfig,
    pattern: ErrorPattern,
    table,
    mode: str = "expectation",
    seed: int | None = None,
    threshold_fraction: float = DEFAULT_THRESHOLD,
) -> TecResult:
    """Prepare, inject, measure, decode and correct once."""
    from .decoder import decode

    rng = np.random.default_rng(seed)
    state, amplitude = inject(prepare_cluster(cfg), pattern, rng)
    if pattern.amplitude_model == "fixed":
        reference = pattern.epsilon
    else:
        reference = pattern.sigma
    s = measure_syndromes(state, cfg, mode, rng, reference, threshold_fraction)
    action = decode(s, table)
    corrected = apply_correction(s.protected, s, action)
    ideal = measure_syndromes(state, cfg, "expectation", epsilon=reference)
    residual = apply_correction(ideal.protected, ideal, action)
    return TecResult(pattern, amplitude, s, action, corrected, residual)


def write_results_csv(results: Iterable[TecResult], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TecResult.CSV_HEADER)
    for res in results:
        writer.writerow(res.csv_row())
