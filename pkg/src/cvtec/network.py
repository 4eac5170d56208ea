"""The eight-mode cluster-generation unitary and its beam-splitter network.

Mode labels in this module are one-based (modes ``1..n``), matching the
optical mode names ``C_1..C_8``. Complex mode maps act on annihilation
operators, ``C_k = sum_l U[k, l] a_l``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import sqrt
from typing import Sequence

import numpy as np

from .gaussian import (
    SymplecticTransform,
    beam_splitter_map,
    mode_map_to_symplectic,
    phase_map,
)

UNITARITY_TOL = 1e-10

N_MODES = 8

# Transmittances T_1..T_12 of the preparation network.
PAPER_TRANSMITTANCES = {
    1: 1 / 78,
    2: 6 / 7,
    3: 54 / 55,
    4: 5 / 6,
    5: 35 / 36,
    6: 4 / 5,
    7: 20 / 21,
    8: 3 / 4,
    9: 9 / 10,
    10: 2 / 3,
    11: 2 / 3,
    12: 1 / 2,
}

ELEMENT_KINDS = ("fourier", "rotate_pi", "beamsplitter")


@dataclass(frozen=True)
class ComplexModeMap:
    entries: np.ndarray

    def __post_init__(self):
        u = np.array(self.entries, dtype=complex, copy=True)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"mode map must be square, got shape {u.shape}")
        u.setflags(write=False)
        object.__setattr__(self, "entries", u)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def unitarity_residual(self) -> float:
        u = self.entries
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.n))))

    def is_unitary(self, tol: float = UNITARITY_TOL) -> bool:
        return self.unitarity_residual() < tol

    def __matmul__(self, other: "ComplexModeMap") -> "ComplexModeMap":
        return ComplexModeMap(self.entries @ other.entries)


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric 0/1 adjacency matrix of a simple graph."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=int, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got shape {a.shape}")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if not (a == a.T).all():
            raise ValueError("adjacency matrix must be symmetric")
        if np.any(np.diag(a)):
            raise ValueError("adjacency matrix must have a zero diagonal")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def neighbors(self, mode: int) -> tuple[int, ...]:
        """One-based labels of the neighbours of ``mode``."""
        return tuple(int(j) + 1 for j in np.flatnonzero(self.matrix[mode - 1]))

    @classmethod
    def empty(cls, n: int) -> "AdjacencyMatrix":
        return cls(np.zeros((n, n), dtype=int))

    @classmethod
    def complete(cls, n: int) -> "AdjacencyMatrix":
        return cls(np.ones((n, n), dtype=int) - np.eye(n, dtype=int))


@dataclass(frozen=True)
class NetworkElement:
    """One optical element: ``fourier(k)``, ``rotate_pi(k)`` or ``beamsplitter(k, l, T, sign)``."""

    kind: str
    modes: tuple[int, ...]
    T: float | None = None
    sign: int | None = None
    index: int | None = None  # beam-splitter number j in T_j, informational

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        if self.kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        if self.kind == "beamsplitter":
            if len(self.modes) != 2 or self.modes[0] == self.modes[1]:
                raise ValueError(f"beam splitter needs two distinct modes, got {self.modes}")
            if self.T is None or not 0.0 < self.T <= 1.0:
                raise ValueError(f"beam-splitter transmittance must lie in (0, 1], got {self.T}")
            if self.sign not in (+1, -1):
                raise ValueError(f"beam-splitter sign must be +1 or -1, got {self.sign!r}")
        else:
            if len(self.modes) != 1:
                raise ValueError(f"{self.kind} acts on exactly one mode, got {self.modes}")
            if self.T is not None or self.sign is not None:
                raise ValueError(f"{self.kind} takes no transmittance or sign")

    def mode_map(self, n: int) -> np.ndarray:
        zero_based = [m - 1 for m in self.modes]
        if self.kind == "fourier":
            return phase_map(n, zero_based[0], 1j)
        if self.kind == "rotate_pi":
            return phase_map(n, zero_based[0], -1.0)
        return beam_splitter_map(n, zero_based[0], zero_based[1], self.T, self.sign)

    def inverse(self) -> tuple["NetworkElement", ...]:
        """Elements whose product is the inverse of this element."""
        if self.kind == "fourier":
            return (self,) * 3
        if self.kind == "beamsplitter" and self.sign == -1:
            # B-_kl is a rotation; its transpose is B-_lk.
            return (NetworkElement("beamsplitter", self.modes[::-1], self.T, -1, self.index),)
        # rotate_pi and B+ are involutions.
        return (self,)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "modes": list(self.modes), "T": self.T, "sign": self.sign}
        if self.index is not None:
            d["index"] = self.index
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkElement":
        try:
            return cls(d["kind"], tuple(d["modes"]), d.get("T"), d.get("sign"), d.get("index"))
        except KeyError as exc:
            raise ValueError(f"malformed network element {d!r}: missing {exc}") from None


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered elements whose left-to-right matrix product is the network unitary."""

    n: int
    elements: tuple[NetworkElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            if not all(1 <= m <= self.n for m in el.modes):
                raise ValueError(f"element {el} addresses a mode outside 1..{self.n}")

    @property
    def transmittances(self) -> dict[int, float]:
        return {
            el.index: el.T
            for el in self.elements
            if el.kind == "beamsplitter" and el.index is not None
        }

    def inverse(self) -> "NetworkSpec":
        inv: list[NetworkElement] = []
        for el in reversed(self.elements):
            inv.extend(el.inverse())
        return NetworkSpec(self.n, tuple(inv))

    def to_dict(self) -> dict:
        return {"n": self.n, "elements": [el.to_dict() for el in self.elements]}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(int(d["n"]), tuple(NetworkElement.from_dict(e) for e in d["elements"]))

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "NetworkSpec":
        return cls.from_dict(json.loads(text))


def paper_unitary() -> ComplexModeMap:
    """The closed-form 8x8 unitary generating the K_{2,6}-structured cluster."""
    s = sqrt
    a = 2 / s(35)
    b = 2 / (3 * s(7))
    c = -1j / s(91)
    d = 2 / (3 * s(11))
    e = 1j / s(7)
    f = 2 / s(143)
    u = [
        [s(3 / 5), a, b, c, d, e, f, 0],
        [0, -5 / s(35), b, c, d, e, f, 0],
        [0, 0, -s(7) / 3, c, d, e, f, 0],
        [0, 0, 0, c, 0, e, -11 / s(143), 0],
        [0, 0, 0, c, -3 / s(11), e, f, 0],
        [-2 / s(15), a, b, c, d, e, f, 1 / s(3)],
        [1j / s(15), -1j / s(35), -1j / (3 * s(7)), -7 / s(91), -1j / (3 * s(11)), 0, -1j / s(143), 1j / s(3)],
        [1j / s(15), -1j / s(35), -1j / (3 * s(7)), 6 / s(91), -1j / (3 * s(11)), 1 / s(7), -1j / s(143), 1j / s(3)],
    ]
    return ComplexModeMap(np.array(u, dtype=complex))


def paper_adjacency() -> AdjacencyMatrix:
    """Modes 1..6 are each linked to modes 7 and 8, and nothing else."""
    a = np.zeros((N_MODES, N_MODES), dtype=int)
    a[:6, 6:] = 1
    a[6:, :6] = 1
    return AdjacencyMatrix(a)


def paper_network() -> NetworkSpec:
    """The 24-element decomposition of :func:`paper_unitary`, leftmost factor first."""
    T = PAPER_TRANSMITTANCES

    def F(k):
        return NetworkElement("fourier", (k,))

    def I(k):
        return NetworkElement("rotate_pi", (k,))

    def B(k, l, j, sign):
        return NetworkElement("beamsplitter", (k, l), T[j], sign, j)

    elements = (
        I(2), F(3), F(4), F(5), I(6), F(7), F(8),
        B(6, 8, 12, +1), B(7, 8, 11, +1), B(1, 6, 10, +1), B(1, 7, 9, +1), B(2, 6, 8, +1),
        F(6),
        B(2, 7, 7, +1), B(3, 6, 6, +1),
        F(3),
        B(3, 7, 5, -1), B(5, 6, 4, -1),
        F(5),
        B(5, 7, 3, -1), B(4, 6, 2, -1),
        F(4),
        B(4, 7, 1, +1),
        F(4),
    )
    return NetworkSpec(N_MODES, elements)


def compose_network(spec: NetworkSpec) -> ComplexModeMap:
    """Ordered product ``E_1 E_2 ... E_m`` of the elements' mode maps.

    The rightmost element acts first on the input modes.
    """
    u = np.eye(spec.n, dtype=complex)
    for el in spec.elements:
        u = u @ el.mode_map(spec.n)
    return ComplexModeMap(u)


@dataclass(frozen=True)
class ClusterReport:
    max_residual_imrel: float
    max_residual_gram: float
    unitarity_residual: float

    def passes(self, tol: float = UNITARITY_TOL) -> bool:
        return max(self.max_residual_imrel, self.max_residual_gram, self.unitarity_residual) < tol

    def to_dict(self) -> dict:
        return {
            "max_residual_imrel": self.max_residual_imrel,
            "max_residual_gram": self.max_residual_gram,
            "unitarity_residual": self.unitarity_residual,
        }


def verify_cluster_condition(U: ComplexModeMap, A: AdjacencyMatrix) -> ClusterReport:
    """Residuals of ``Im U = A Re U``, ``Re U Re U^T = (I + A^2)^-1`` and unitarity."""
    if U.n != A.n:
        raise ValueError(f"mode map has {U.n} modes but the graph has {A.n} vertices")
    re, im = U.entries.real, U.entries.imag
    a = A.matrix.astype(float)
    gram_target = np.linalg.inv(np.eye(A.n) + a @ a)
    return ClusterReport(
        max_residual_imrel=float(np.max(np.abs(im - a @ re))),
        max_residual_gram=float(np.max(np.abs(re @ re.T - gram_target))),
        unitarity_residual=U.unitarity_residual(),
    )


def to_symplectic(U: ComplexModeMap, tol: float = UNITARITY_TOL) -> SymplecticTransform:
    residual = U.unitarity_residual()
    if residual >= tol:
        raise ValueError(f"mode map is not unitary (residual {residual:.3e})")
    return mode_map_to_symplectic(U.entries, label="network")


def network_symplectic(source: str = "from_unitary") -> SymplecticTransform:
    """Symplectic transform of the cluster-generation network."""
    if source == "from_unitary":
        return to_symplectic(paper_unitary())
    if source == "from_network":
        return to_symplectic(compose_network(paper_network()))
    raise ValueError(f"unknown network source {source!r}")


def element_list(spec: NetworkSpec) -> Sequence[str]:
    """Compact human-readable rendering such as ``B+68(0.5)``."""
    out = []
    for el in spec.elements:
        if el.kind == "fourier":
            out.append(f"F{el.modes[0]}")
        elif el.kind == "rotate_pi":
            out.append(f"I{el.modes[0]}(-1)")
        else:
            s = "+" if el.sign > 0 else "-"
            out.append(f"B{s}{el.modes[0]}{el.modes[1]}({el.T:.6g})")
    return out
