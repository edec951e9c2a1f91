"""Physical and communication topologies of an MTDC grid.

Buses are 1-indexed in every public structure and file format; the matrices
returned here are 0-indexed numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import networkx as nx
import numpy as np

from .errors import ModelError

Edge = tuple[int, int, float]


def _normalize_edges(raw: Sequence[Sequence[float]], n: int, what: str) -> tuple[Edge, ...]:
    seen: set[frozenset[int]] = set()
    out = []
    for k, e in enumerate(raw):
        if len(e) != 3:
            raise ModelError(f"{what} edge #{k + 1}: expected (i, j, value), got {e!r}")
        i, j, val = int(e[0]), int(e[1]), float(e[2])
        if i != e[0] or j != e[1]:
            raise ModelError(f"{what} edge #{k + 1}: bus indices must be integers")
        if not (1 <= i <= n and 1 <= j <= n):
            raise ModelError(f"{what} edge {i}-{j}: endpoint outside 1..{n}")
        if i == j:
            raise ModelError(f"{what} edge {i}-{j}: self-loop")
        if not np.isfinite(val) or val <= 0:
            raise ModelError(f"{what} edge {i}-{j}: value must be finite and > 0, got {val}")
        key = frozenset((i, j))
        if key in seen:
            raise ModelError(f"{what} edge {i}-{j}: duplicate edge")
        seen.add(key)
        out.append((i, j, val))
    return tuple(out)


def _check_connected(n: int, edges: tuple[Edge, ...], what: str) -> None:
    g = nx.Graph()
    g.add_nodes_from(range(1, n + 1))
    g.add_edges_from((i, j) for i, j, _ in edges)
    if not nx.is_connected(g):
        comps = sorted(sorted(c) for c in nx.connected_components(g))
        raise ModelError(f"{what} graph is disconnected; components: {comps}")


@dataclass(frozen=True)
class NetworkModel:
    """DC buses joined by resistive lines, plus a communication graph.

    ``edges`` holds ``(i, j, R_ij)`` with resistance in ohms and
    ``comm_edges`` holds ``(i, j, c_ij)`` weights in 1/ohm. When
    ``comm_edges`` is omitted the communication graph mirrors the physical
    one with ``c_ij = 1 / R_ij``.
    """

    n: int
    edges: tuple[Edge, ...]
    capacitances: tuple[float, ...]
    comm_edges: tuple[Edge, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ModelError(f"bus count must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        edges = _normalize_edges(self.edges, self.n, "line")
        object.__setattr__(self, "edges", edges)
        caps = tuple(float(c) for c in self.capacitances)
        if len(caps) != self.n:
            raise ModelError(f"expected {self.n} capacitances, got {len(caps)}")
        for k, c in enumerate(caps, start=1):
            if not np.isfinite(c) or c <= 0:
                raise ModelError(f"bus {k}: capacitance must be > 0, got {c}")
        object.__setattr__(self, "capacitances", caps)
        if self.comm_edges is None:
            comm = tuple((i, j, 1.0 / r) for i, j, r in edges)
        else:
            comm = _normalize_edges(self.comm_edges, self.n, "communication")
        object.__setattr__(self, "comm_edges", comm)
        _check_connected(self.n, edges, "physical")
        _check_connected(self.n, comm, "communication")

    @cached_property
    def L_R(self) -> np.ndarray:
        return build_laplacian(self, "physical")

    @cached_property
    def L_C(self) -> np.ndarray:
        return build_laplacian(self, "communication")

    @property
    def C_inv(self) -> np.ndarray:
        """diag(1/C_i), the matrix the bus equations multiply by."""
        return np.diag(1.0 / np.asarray(self.capacitances))

    def same_topology_weights(self, rtol: float = 1e-12) -> bool:
        """True when L_C equals L_R (communication mirrors the grid)."""
        scale = max(np.abs(self.L_R).max(), 1.0)
        return bool(np.allclose(self.L_C, self.L_R, rtol=0.0, atol=rtol * scale))

    def permuted(self, perm: Sequence[int]) -> "NetworkModel":
        """Relabel buses: old bus ``k`` (1-indexed) becomes ``perm[k-1]``."""
        p = [int(x) for x in perm]
        if sorted(p) != list(range(1, self.n + 1)):
            raise ModelError("perm must be a permutation of 1..n")
        caps = [0.0] * self.n
        for old, new in enumerate(p, start=1):
            caps[new - 1] = self.capacitances[old - 1]
        return NetworkModel(
            n=self.n,
            edges=tuple((p[i - 1], p[j - 1], r) for i, j, r in self.edges),
            capacitances=tuple(caps),
            comm_edges=tuple((p[i - 1], p[j - 1], c) for i, j, c in self.comm_edges),
        )


def build_laplacian(
    model: NetworkModel, which: Literal["physical", "communication"] = "physical"
) -> np.ndarray:
    """Weighted Laplacian B W B^T.

    Physical edges are weighted by conductance 1/R_ij, communication edges by
    c_ij.
    """
    if which == "physical":
        weighted = [(i, j, 1.0 / r) for i, j, r in model.edges]
    elif which == "communication":
        weighted = list(model.comm_edges)
    else:
        raise ValueError(f"which must be 'physical' or 'communication', got {which!r}")
    B = np.zeros((model.n, len(weighted)))
    w = np.empty(len(weighted))
    for k, (i, j, g) in enumerate(weighted):
        B[i - 1, k] = 1.0
        B[j - 1, k] = -1.0
        w[k] = g
    L = (B * w) @ B.T
    # B W B^T is symmetric in exact arithmetic; make it so in floating point too
    L = 0.5 * (L + L.T)
    L.setflags(write=False)
    return L


def laplacian_spectrum(L: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in ascending order."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {L.shape}")
    scale = max(np.abs(L).max(), 1.0)
    if not np.allclose(L, L.T, rtol=0.0, atol=atol * scale):
        raise ValueError("laplacian_spectrum requires a symmetric matrix")
    return np.linalg.eigvalsh(0.5 * (L + L.T))
