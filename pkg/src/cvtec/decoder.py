"""Syndrome decoder generated by enumerating identical-error patterns.

Every pattern over modes 1..6 is pushed through the Gaussian machinery in
the ideal (expectation) limit. Each observed signature is assigned to the
claiming pattern of smallest effective weight ``min(k, 6 - k)``. Its
feedforward rule is the zero-mean syndrome combination of least variance.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .gaussian import combination_moments
from .tec import (
    SYMBOLS,
    ClusterConfig,
    CorrectionAction,
    ErrorPattern,
    SyndromeVector,
    all_patterns,
    corrected_combination,
    inject,
    measure_syndromes,
    prepare_cluster,
)

ALL_SIGNATURES: tuple[str, ...] = tuple("".join(s) for s in itertools.product(SYMBOLS, repeat=4))
ZERO_SIGNATURE = "0000"

_WEIGHT_CHOICES = sorted(
    itertools.product((-1, 0, 1), repeat=4), key=lambda w: (sum(map(abs, w)), w)
)
_MEAN_TOL = 1e-9


def collapse(signature: str) -> str:
    """Sign-blind view: ``+`` and ``-`` both become ``1``."""
    return "".join("0" if ch == "0" else "1" for ch in signature)


def signature_index(codes: np.ndarray) -> np.ndarray:
    """Base-3 index of ``-1/0/+1`` code rows, matching the order of ``ALL_SIGNATURES``."""
    codes = np.asarray(codes, dtype=np.int64) + 1
    return codes @ np.array([27, 9, 3, 1])


@dataclass(frozen=True)
class Ambiguity:
    """A signature claimed by patterns that need different corrections."""

    signature: str
    claimants: tuple[tuple[int, ...], ...]
    chosen: tuple[int, ...]
    uncorrected: tuple[tuple[int, ...], ...]
    equal_weight_conflict: bool

    def to_dict(self) -> dict:
        return {
            "signature": self.signature,
            "claimants": [list(c) for c in self.claimants],
            "chosen": list(self.chosen),
            "uncorrected": [list(c) for c in self.uncorrected],
            "equal_weight_conflict": self.equal_weight_conflict,
        }


@dataclass(frozen=True, eq=False)
class DecoderTable:
    """Total map from the 81 ternary signatures to correction actions."""

    config: ClusterConfig
    sign_sensitive: bool
    actions: Mapping[str, CorrectionAction]
    ambiguities: tuple[Ambiguity, ...]

    def __post_init__(self):
        missing = set(ALL_SIGNATURES) - set(self.actions)
        if missing:
            raise ValueError(f"decoder table is missing signatures {sorted(missing)}")
        object.__setattr__(self, "actions", MappingProxyType(dict(self.actions)))

    def lookup(self, signature: str) -> CorrectionAction:
        return self.actions[signature]

    def weight_array(self) -> np.ndarray:
        """``(81, 4)`` feedforward weights in ``ALL_SIGNATURES`` order."""
        return np.array([self.actions[s].weights for s in ALL_SIGNATURES], dtype=float)

    def __eq__(self, other):
        if not isinstance(other, DecoderTable):
            return NotImplemented
        return (
            self.config == other.config
            and self.sign_sensitive == other.sign_sensitive
            and dict(self.actions) == dict(other.actions)
            and self.ambiguities == other.ambiguities
        )

    def to_dict(self) -> dict:
        return {
            "protected": list(self.config.protected),
            "syndromes": [f"p{i}-p{j}" for i, j in self.config.syndrome_pairs],
            "sign_sensitive": self.sign_sensitive,
            "actions": {s: self.actions[s].to_dict() for s in ALL_SIGNATURES},
            "ambiguities": [a.to_dict() for a in self.ambiguities],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def ideal_response(cfg: ClusterConfig, pattern: ErrorPattern) -> SyndromeVector:
    """Noise-free syndromes and protected mean for ``pattern``."""
    state, _ = inject(prepare_cluster(cfg), pattern)
    return measure_syndromes(state, cfg, "expectation", epsilon=pattern.epsilon or 1.0)


def _rank(pattern: ErrorPattern) -> tuple:
    # Equal effective weight: prefer the single-error reading of weight 1/5 classes,
    # then fewer actual errors.
    single = 0 if pattern.effective_weight == 1 else 1
    return (pattern.effective_weight, single, pattern.weight, sorted(pattern.modes))


def _best_weights(cfg: ClusterConfig, response: SyndromeVector) -> tuple[int, ...] | None:
    state = prepare_cluster(cfg)
    _, ref_var = combination_moments(state, [cfg.protected_combination()])
    ref = float(ref_var[0, 0])
    best = None
    for w in _WEIGHT_CHOICES:
        residual = response.protected + sum(wi * s for wi, s in zip(w, response.raw))
        if abs(residual) > _MEAN_TOL:
            continue
        combo = corrected_combination(cfg, CorrectionAction.from_weights(w))
        _, var = combination_moments(state, [combo])
        # Rounded relative variance keeps tie-breaks machine-independent.
        key = (round(float(var[0, 0]) / ref, 9) if ref > 0 else 0.0, sum(map(abs, w)))
        if best is None or key < best[0]:
            best = (key, w)
    return None if best is None else best[1]


def build_decoder(cfg: ClusterConfig | None = None, sign_sensitive: bool = True) -> DecoderTable:
    """Enumerate all 64 identical-error patterns and build the lookup table.

    With ``sign_sensitive=False`` patterns are grouped by which syndromes are
    nonzero only (qubit-style parity syndromes); every ternary signature then
    maps to the action of its collapsed class.
    """
    cfg = cfg or ClusterConfig()
    responses = {p: ideal_response(cfg, p) for p in all_patterns()}
    key = (lambda s: s) if sign_sensitive else collapse

    groups: dict[str, list[ErrorPattern]] = {}
    for p, resp in responses.items():
        groups.setdefault(key(resp.signature), []).append(p)

    class_actions: dict[str, CorrectionAction] = {}
    ambiguities = []
    for k in sorted(groups):
        claimants = sorted(groups[k], key=_rank)
        if k == key(ZERO_SIGNATURE):
            class_actions[k] = CorrectionAction("no_detection")
            chosen = None
        else:
            chosen = claimants[0]
            w = _best_weights(cfg, responses[chosen])
            if w is None:
                class_actions[k] = CorrectionAction("undecodable", predicted_pattern=chosen)
            else:
                class_actions[k] = CorrectionAction.from_weights(w, chosen)
        action = class_actions[k]
        uncorrected = [
            p
            for p in claimants
            if abs(_residual(responses[p], action)) > _MEAN_TOL
        ]
        if len(claimants) > 1 and uncorrected:
            top = _rank(claimants[0])[:2]
            tied = [p for p in claimants if _rank(p)[:2] == top]
            conflict = len({_correctable_by(responses[p], action) for p in tied}) > 1
            ambiguities.append(
                Ambiguity(
                    signature=k,
                    claimants=tuple(tuple(sorted(p.modes)) for p in claimants),
                    chosen=tuple(sorted(chosen.modes)) if chosen is not None else (),
                    uncorrected=tuple(tuple(sorted(p.modes)) for p in uncorrected),
                    equal_weight_conflict=conflict,
                )
            )

    actions = {}
    for s in ALL_SIGNATURES:
        actions[s] = class_actions.get(key(s), CorrectionAction("undecodable"))
    return DecoderTable(cfg, sign_sensitive, actions, tuple(ambiguities))


def _residual(resp: SyndromeVector, action: CorrectionAction) -> float:
    return resp.protected + sum(w * s for w, s in zip(action.weights, resp.raw))


def _correctable_by(resp: SyndromeVector, action: CorrectionAction) -> bool:
    return abs(_residual(resp, action)) <= _MEAN_TOL


def decode(s: SyndromeVector, table: DecoderTable) -> CorrectionAction:
    return table.lookup(s.signature)


def pattern_outcomes(table: DecoderTable) -> list[tuple[ErrorPattern, bool]]:
    """``(pattern, corrected)`` for all 64 patterns in the ideal syndrome model."""
    out = []
    for p in all_patterns():
        resp = ideal_response(table.config, p)
        action = decode(resp, table)
        out.append((p, _correctable_by(resp, action)))
    return out


# -- golden comparison against the published syndrome tables ----------------


def load_golden() -> dict:
    text = resources.files("cvtec").joinpath("data/golden_tables.json").read_text("utf-8")
    return json.loads(text)


def _golden_cases(row: dict):
    yield tuple(row["modes"]), tuple(row["syndrome"]), 0
    if row.get("bracket_modes"):
        # Bracketed modes read the syndrome columns in reverse order.
        yield tuple(row["bracket_modes"]), tuple(reversed(row["syndrome"])), 1


def check_golden_tables(table: DecoderTable, golden: dict | None = None) -> tuple[int, list[dict]]:
    """Compare a (5,6)-protected decoder with the published syndrome tables.

    Returns ``(cases_checked, mismatches)``.
    """
    if table.config.protected != (5, 6):
        raise ValueError("golden rows exist only for the protected pair (5,6)")
    golden = golden or load_golden()
    symbol = {"e": "+", "-e": "-", "0": "0"}
    mismatches = []
    checked = 0
    for name, rows in golden["tables"].items():
        for row in rows:
            resolved = row.get("resolved_as")
            for modes, expected, bracket in _golden_cases(row):
                checked += 1
                pattern = ErrorPattern.fixed(modes)
                resp = ideal_response(table.config, pattern)
                action = decode(resp, table)

                def miss(check, want, got):
                    mismatches.append(
                        {"table": name, "row": row["row"], "modes": list(modes),
                         "check": check, "expected": want, "actual": got}
                    )

                want_sig = "".join(symbol[v] for v in expected)
                if resp.signature != want_sig:
                    miss("syndrome", want_sig, resp.signature)
                affected = abs(resp.protected) > _MEAN_TOL
                want_req = row["requirement"] == "Y"
                if affected != want_req:
                    miss("requirement", row["requirement"], "Y" if affected else "N")
                ok = _correctable_by(resp, action)
                if ok != row["correctable"]:
                    miss("correctable", row["correctable"], ok)
                if resolved is not None:
                    single = ideal_response(table.config, ErrorPattern.fixed([resolved[bracket]]))
                    ref_action = decode(single, table)
                    if action.weights != ref_action.weights:
                        miss("resolution", list(ref_action.weights), list(action.weights))
    return checked, mismatches
