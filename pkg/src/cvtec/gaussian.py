"""Gaussian states in the quadrature (xxpp) representation.

States are immutable values: every operation returns a new
:class:`GaussianState`. Quadratures are ordered ``(x_1..x_n, p_1..p_n)`` and
the vacuum variance of a single quadrature is 1/4 (the shot-noise level).
Mode indices in this module are zero-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

VACUUM_VARIANCE = 0.25

SYMMETRY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-10


def symplectic_form(n: int) -> np.ndarray:
    """The canonical form ``[[0, I], [-I, 0]]`` for ``n`` modes in xxpp order."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def r_to_db(r: float) -> float:
    """Squeezing in dB below the shot-noise level for parameter ``r``."""
    return 20.0 * r / math.log(10.0)


def db_to_r(db: float) -> float:
    return db * math.log(10.0) / 20.0


def variance_to_db(variance: float) -> float:
    """Noise level of a single-quadrature variance relative to the SNL (positive = below)."""
    return -10.0 * math.log10(variance / VACUUM_VARIANCE)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of an ``n``-mode Gaussian state.

    The covariance matrix is symmetrized on construction to absorb
    floating-point drift; asymmetry beyond ``1e-12`` is rejected.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size == 0 or mean.size % 2:
            raise ValueError(f"mean must be a vector of even length, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"cov shape {cov.shape} does not match mean length {mean.size}"
            )
        asym = np.max(np.abs(cov - cov.T)) if cov.size else 0.0
        if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(cov))):
            raise ValueError(f"cov is not symmetric (max asymmetry {asym:.3e})")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(0.5 * (cov + cov.T)))

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def x_index(self, mode: int) -> int:
        _check_mode(self.n_modes, mode)
        return mode

    def p_index(self, mode: int) -> int:
        _check_mode(self.n_modes, mode)
        return self.n_modes + mode

    def is_physical(self, tol: float = 1e-10) -> bool:
        """Whether ``cov + (i/4) Omega`` is positive semidefinite."""
        m = self.cov + 1j * VACUUM_VARIANCE * symplectic_form(self.n_modes)
        return bool(np.min(np.linalg.eigvalsh(m)) >= -tol)

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianState":
        state = cls(np.array(data["mean"]), np.array(data["cov"]))
        if state.n_modes != data.get("n_modes", state.n_modes):
            raise ValueError("n_modes does not match the mean vector length")
        return state

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GaussianState":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SymplecticTransform:
    """A linear quadrature map ``q -> S q`` preserving the symplectic form."""

    matrix: np.ndarray
    label: str = "symplectic"

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be 2n x 2n, got {s.shape}")
        omega = symplectic_form(s.shape[0] // 2)
        residual = np.max(np.abs(s.T @ omega @ s - omega))
        if residual > SYMPLECTIC_TOL:
            raise ValueError(
                f"{self.label}: matrix is not symplectic (residual {residual:.3e})"
            )
        object.__setattr__(self, "matrix", _frozen(s))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def symplectic_residual(self) -> float:
        omega = symplectic_form(self.n_modes)
        return float(np.max(np.abs(self.matrix.T @ omega @ self.matrix - omega)))

    def __matmul__(self, other: "SymplecticTransform") -> "SymplecticTransform":
        # (self @ other) applies `other` first.
        return SymplecticTransform(self.matrix @ other.matrix, label=f"{self.label}*{other.label}")

    def inverse(self) -> "SymplecticTransform":
        # S^-1 = -Omega S^T Omega for symplectic S.
        omega = symplectic_form(self.n_modes)
        return SymplecticTransform(-omega @ self.matrix.T @ omega, label=f"{self.label}^-1")


@dataclass(frozen=True)
class QuadratureCombination:
    """Real weights on ``(x_1..x_n, p_1..p_n)`` defining an observable ``c . q``."""

    coefficients: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0 or c.size % 2:
            raise ValueError(f"coefficients must be a vector of even length, got {c.shape}")
        if not np.any(c):
            raise ValueError("a quadrature combination needs at least one nonzero coefficient")
        object.__setattr__(self, "coefficients", _frozen(c))

    @property
    def n_modes(self) -> int:
        return self.coefficients.size // 2

    @classmethod
    def from_terms(
        cls,
        n: int,
        x: dict[int, float] | None = None,
        p: dict[int, float] | None = None,
        name: str = "",
    ) -> "QuadratureCombination":
        """Build from sparse ``{mode: weight}`` maps for x and p quadratures."""
        c = np.zeros(2 * n)
        for mode, w in (x or {}).items():
            _check_mode(n, mode)
            c[mode] += w
        for mode, w in (p or {}).items():
            _check_mode(n, mode)
            c[n + mode] += w
        return cls(c, name=name)

    @classmethod
    def p_difference(cls, n: int, i: int, j: int) -> "QuadratureCombination":
        """The observable ``p_i - p_j``."""
        return cls.from_terms(n, p={i: 1.0, j: -1.0}, name=f"p{i}-p{j}")

    def __add__(self, other: "QuadratureCombination") -> "QuadratureCombination":
        return QuadratureCombination(self.coefficients + other.coefficients)

    def __sub__(self, other: "QuadratureCombination") -> "QuadratureCombination":
        return QuadratureCombination(self.coefficients - other.coefficients)


def _check_mode(n: int, mode: int) -> None:
    if not (isinstance(mode, (int, np.integer)) and 0 <= mode < n):
        raise IndexError(f"mode {mode!r} out of range for {n} modes")


def _check_dims(state: GaussianState, n: int, what: str) -> None:
    if n != state.n_modes:
        raise ValueError(f"{what} acts on {n} modes but the state has {state.n_modes}")


def vacuum(n: int) -> GaussianState:
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"number of modes must be a positive integer, got {n!r}")
    return GaussianState(np.zeros(2 * n), VACUUM_VARIANCE * np.eye(2 * n))


def mode_map_to_symplectic(v: np.ndarray, label: str = "passive") -> SymplecticTransform:
    """Quadrature image ``[[Re V, -Im V], [Im V, Re V]]`` of a complex mode map.

    ``v`` acts on annihilation operators, ``a_out = V a_in``.
    """
    v = np.asarray(v, dtype=complex)
    return SymplecticTransform(np.block([[v.real, -v.imag], [v.imag, v.real]]), label=label)


def squeezer(n: int, mode: int, r: float) -> SymplecticTransform:
    """Squeezing of the p quadrature: ``x -> e^r x``, ``p -> e^-r p``."""
    _check_mode(n, mode)
    if r < 0:
        raise ValueError(f"squeezing parameter must be nonnegative, got {r}")
    d = np.ones(2 * n)
    d[mode] = math.exp(r)
    d[n + mode] = math.exp(-r)
    return SymplecticTransform(np.diag(d), label="squeeze")


def phase_map(n: int, mode: int, phase: complex) -> np.ndarray:
    _check_mode(n, mode)
    v = np.eye(n, dtype=complex)
    v[mode, mode] = phase
    return v


def beam_splitter_map(n: int, k: int, l: int, T: float, sign: int = +1) -> np.ndarray:
    """Complex mode map of a beam splitter on modes ``k`` and ``l``.

    Entries: ``kk = sqrt(T)``, ``kl = sqrt(1-T)``, ``lk = sign*sqrt(1-T)``,
    ``ll = -sign*sqrt(T)``.
    """
    _check_mode(n, k)
    _check_mode(n, l)
    if k == l:
        raise ValueError("beam splitter needs two distinct modes")
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {T}")
    if sign not in (+1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    t, rr = math.sqrt(T), math.sqrt(1.0 - T)
    v = np.eye(n, dtype=complex)
    v[k, k], v[k, l] = t, rr
    v[l, k], v[l, l] = sign * rr, -sign * t
    return v


def fourier(n: int, mode: int) -> SymplecticTransform:
    """90 degree phase-space rotation, ``a -> i a``."""
    return mode_map_to_symplectic(phase_map(n, mode, 1j), label="fourier")


def rotate_pi(n: int, mode: int) -> SymplecticTransform:
    """180 degree phase-space rotation, ``a -> -a``."""
    return mode_map_to_symplectic(phase_map(n, mode, -1.0), label="rotate_pi")


def beam_splitter(n: int, k: int, l: int, T: float, sign: int = +1) -> SymplecticTransform:
    return mode_map_to_symplectic(beam_splitter_map(n, k, l, T, sign), label="beamsplitter")


def apply(state: GaussianState, S: SymplecticTransform) -> GaussianState:
    _check_dims(state, S.n_modes, S.label)
    m = S.matrix
    return GaussianState(m @ state.mean, m @ state.cov @ m.T)


def squeeze_p(state: GaussianState, mode: int, r: float) -> GaussianState:
    return apply(state, squeezer(state.n_modes, mode, r))


def displace_p(state: GaussianState, mode: int, amount: float) -> GaussianState:
    """Shift the mean of ``p_mode`` by ``amount``; the covariance is untouched."""
    mean = state.mean.copy()
    mean[state.p_index(mode)] += amount
    return GaussianState(mean, state.cov)


def displace_x(state: GaussianState, mode: int, amount: float) -> GaussianState:
    mean = state.mean.copy()
    mean[state.x_index(mode)] += amount
    return GaussianState(mean, state.cov)


def apply_loss(state: GaussianState, mode: int | Iterable[int], eta: float) -> GaussianState:
    """Pure-loss channel of transmissivity ``eta`` on one or several modes.

    Moments transform as ``q -> sqrt(eta) q`` on the lossy quadratures, with
    ``(1 - eta)/4`` vacuum noise added to their variances.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {eta}")
    modes = [mode] if isinstance(mode, (int, np.integer)) else list(mode)
    n = state.n_modes
    scale = np.ones(2 * n)
    for m in modes:
        _check_mode(n, m)
        scale[m] = scale[n + m] = math.sqrt(eta)
    noise = np.zeros(2 * n)
    noise[scale != 1.0] = (1.0 - eta) * VACUUM_VARIANCE
    cov = scale[:, None] * state.cov * scale[None, :] + np.diag(noise)
    return GaussianState(scale * state.mean, cov)


def combination_stats(state: GaussianState, c: QuadratureCombination) -> tuple[float, float]:
    """Mean ``c.mean`` and variance ``c^T cov c`` of a quadrature combination."""
    _check_dims(state, c.n_modes, "combination")
    w = c.coefficients
    return float(w @ state.mean), float(w @ state.cov @ w)


def combination_moments(
    state: GaussianState, combos: Sequence[QuadratureCombination]
) -> tuple[np.ndarray, np.ndarray]:
    """Joint mean vector and covariance matrix of several combinations."""
    if not combos:
        raise ValueError("at least one combination is required")
    for c in combos:
        _check_dims(state, c.n_modes, "combination")
    m = np.stack([c.coefficients for c in combos])
    cov = m @ state.cov @ m.T
    return m @ state.mean, 0.5 * (cov + cov.T)


def sample_quadratures(
    state: GaussianState,
    combos: Sequence[QuadratureCombination],
    rng_seed: int | np.random.Generator | None,
    size: int | None = None,
) -> np.ndarray:
    """Joint homodyne outcomes of commuting quadrature combinations.

    Returns a vector of length ``len(combos)``, or an array of shape
    ``(size, len(combos))`` when ``size`` is given. Draws are reproducible for
    a fixed integer seed.
    """
    mean, cov = combination_moments(state, combos)
    w, vecs = np.linalg.eigh(cov)
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.min(w) < -1e-10 * scale:
        raise ValueError(
            f"projected covariance is not positive semidefinite (min eigenvalue {np.min(w):.3e})"
        )
    factor = vecs * np.sqrt(np.clip(w, 0.0, None))
    rng = np.random.default_rng(rng_seed)
    z = rng.standard_normal((1 if size is None else size, len(combos)))
    draws = mean + z @ factor.T
    return draws[0] if size is None else draws
