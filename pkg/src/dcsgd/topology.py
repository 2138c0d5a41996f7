"""Gossip mixing matrices: symmetric, doubly stochastic, with cached spectral stats.

Every builder returns a :class:`MixingMatrix` whose entries W satisfy
W = W^T exactly, row sums 1 (to 1e-12), largest eigenvalue 1, and a
spectral radius rho = max(|lambda_2|, |lambda_n|) strictly below 1 for
connected topologies.  Disconnected graphs are rejected at construction
time rather than allowed to run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TopologyError

ROW_SUM_TOL = 1e-12
LAMBDA1_TOL = 1e-10
CONNECTED_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """An n x n gossip weight matrix with its spectral statistics.

    Attributes:
        n: node count.
        entries: the weight matrix W, read-only.
        eigenvalues: full real spectrum, sorted descending.
        rho: max(|lambda_2|, |lambda_n|), governs consensus speed.
        mu: max over i >= 2 of |lambda_i - 1|, enters the difference-compression
            feasibility budget.
    """

    n: int
    entries: np.ndarray
    eigenvalues: np.ndarray
    rho: float
    mu: float

    @classmethod
    def from_entries(cls, entries: np.ndarray, require_connected: bool = True) -> "MixingMatrix":
        """Validate a candidate weight matrix and attach spectral stats.

        Raises TopologyError if the matrix is not symmetric doubly stochastic,
        or (when require_connected) if the mixing process does not contract,
        i.e. rho >= 1 - 1e-10.
        """
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise TopologyError(f"weight matrix must be square, got shape {entries.shape}")
        n = entries.shape[0]
        if n < 2:
            raise TopologyError(f"need at least 2 nodes, got {n}")
        if not np.array_equal(entries, entries.T):
            raise TopologyError("weight matrix must be exactly symmetric")
        row_err = np.max(np.abs(entries.sum(axis=1) - 1.0))
        if row_err > ROW_SUM_TOL:
            raise TopologyError(f"rows must sum to 1 (max deviation {row_err:.3e})")
        rho, mu, eigenvalues = spectral_stats(entries)
        if abs(eigenvalues[0] - 1.0) > LAMBDA1_TOL:
            raise TopologyError(f"largest eigenvalue must be 1, got {eigenvalues[0]!r}")
        if require_connected and rho >= 1.0 - CONNECTED_TOL:
            raise TopologyError(
                f"topology does not mix (rho = {rho:.12f} >= 1); the graph is "
                "disconnected or the weights make it periodic"
            )
        entries = entries.copy()
        entries.flags.writeable = False
        eigenvalues = eigenvalues.copy()
        eigenvalues.flags.writeable = False
        return cls(n=n, entries=entries, eigenvalues=eigenvalues, rho=rho, mu=mu)

    @property
    def degrees(self) -> np.ndarray:
        """Neighbor count per node (nonzero off-diagonal weights)."""
        off = self.entries.copy()
        np.fill_diagonal(off, 0.0)
        return np.count_nonzero(off, axis=1)

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2


def spectral_stats(entries: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Return (rho, mu, eigenvalues sorted descending) of a symmetric W.

    rho = max(|lambda_2|, |lambda_n|); mu = max_{i>=2} |lambda_i - 1|.
    Eigenvalues within 1e-10 of 1 are snapped to exactly 1 so that the
    lambda_1 = 1 check is stable under roundoff.
    """
    entries = np.asarray(getattr(entries, "entries", entries), dtype=float)
    eigenvalues = np.linalg.eigvalsh(entries)[::-1].copy()
    eigenvalues[np.abs(eigenvalues - 1.0) <= LAMBDA1_TOL] = 1.0
    rest = eigenvalues[1:]
    rho = float(np.max(np.abs(rest)))
    mu = float(np.max(np.abs(rest - 1.0)))
    return rho, mu, eigenvalues


def build_ring(n: int) -> MixingMatrix:
    """Ring of n nodes, uniform weight 1/3 on self and both neighbors.

    For n = 3 the ring coincides with the fully connected graph.
    """
    if n < 3:
        raise TopologyError(f"a ring needs n >= 3 nodes, got {n}")
    entries = np.zeros((n, n))
    for i in range(n):
        entries[i, i] += 1.0 / 3.0
        entries[i, (i + 1) % n] += 1.0 / 3.0
        entries[i, (i - 1) % n] += 1.0 / 3.0
    return MixingMatrix.from_entries(entries)


def build_fully_connected(n: int) -> MixingMatrix:
    """Complete graph with all weights 1/n; consensus in a single round."""
    if n < 2:
        raise TopologyError(f"need n >= 2 nodes, got {n}")
    entries = np.full((n, n), 1.0 / n)
    return MixingMatrix.from_entries(entries)


def build_custom(n: int, edges: list[tuple[int, int]], self_weights=None) -> MixingMatrix:
    """Metropolis-weighted matrix for an arbitrary connected undirected graph.

    Edge (i, j) gets weight min(1/deg_i, 1/deg_j); the remainder of each row
    sits on the diagonal, which makes the matrix doubly stochastic for any
    graph.  With ``self_weights`` s_i in [0, 1) the edge weight becomes
    min((1 - s_i)/deg_i, (1 - s_j)/deg_j), guaranteeing W_ii >= s_i; this
    lazy variant avoids rho = 1 on bipartite regular graphs.

    Disconnected graphs (and weightings that fail to mix) raise TopologyError.
    """
    if n < 2:
        raise TopologyError(f"need n >= 2 nodes, got {n}")
    adj = np.zeros((n, n), dtype=bool)
    for edge in edges:
        i, j = int(edge[0]), int(edge[1])
        if not (0 <= i < n and 0 <= j < n):
            raise TopologyError(f"edge {edge} out of range for n = {n}")
        if i == j:
            raise TopologyError(f"self-loop {edge} not allowed; self weight is implicit")
        adj[i, j] = True
        adj[j, i] = True
    deg = adj.sum(axis=1)
    if np.any(deg == 0):
        isolated = int(np.flatnonzero(deg == 0)[0])
        raise TopologyError(f"node {isolated} has no edges; graph is disconnected")
    if self_weights is None:
        lazy = np.zeros(n)
    else:
        lazy = np.asarray(self_weights, dtype=float)
        if lazy.shape != (n,):
            raise TopologyError(f"self_weights must have length {n}")
        if np.any(lazy < 0.0) or np.any(lazy >= 1.0):
            raise TopologyError("self_weights must lie in [0, 1)")
    share = (1.0 - lazy) / deg
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j]:
                w = min(share[i], share[j])
                entries[i, j] = w
                entries[j, i] = w
    np.fill_diagonal(entries, 1.0 - entries.sum(axis=1))
    return MixingMatrix.from_entries(entries)
