"""Network graphs and doubly stochastic mixing matrices with spectral data.

Agents sit on the nodes of an undirected connected graph and average with
their neighbors through a symmetric doubly stochastic primitive mixing matrix
``W`` built by the Metropolis rule.  Everything downstream (strategy matrices,
the transformed error recursion) consumes the cached eigendecomposition, whose
first column is pinned to the exact consensus direction ``1/sqrt(K)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

GRAPH_KINDS = ("ring", "line", "complete", "metropolis_random")

#: tolerances used by the mixing-matrix validators
SYMMETRY_TOL = 1e-12
STOCHASTIC_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph on agent indices ``0..K-1``.

    Self-loops are implicit: every agent neighbors itself through the
    diagonal of the mixing matrix and edges never include ``(i, i)``.
    """

    node_count: int
    edges: frozenset[tuple[int, int]]  # pairs stored as (min, max)

    def __post_init__(self) -> None:
        if self.node_count < 2:
            raise ValueError(f"need at least 2 nodes, got {self.node_count}")
        for i, j in self.edges:
            if not (0 <= i < j < self.node_count):
                raise ValueError(f"edge ({i},{j}) out of range for K={self.node_count}")
        if not self.is_connected():
            raise ValueError("graph is not connected")

    def neighbors(self, i: int) -> list[int]:
        out = [j for a, j in self.edges if a == i] + [a for a, j in self.edges if j == i]
        return sorted(out)

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def is_connected(self) -> bool:
        return _connected(self.node_count, self.edges)


def _connected(node_count: int, edges) -> bool:
    if node_count == 0:
        return False
    adj = {k: set() for k in range(node_count)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u] - seen:
            seen.add(v)
            queue.append(v)
    return len(seen) == node_count


def build_graph(kind: str, K: int, *, seed: int = 0, q: float = 0.5, max_retries: int = 100) -> Graph:
    """Construct a connected graph of the requested family.

    Args:
        kind: one of ``ring``, ``line``, ``complete``, ``metropolis_random``.
        K: number of agents (>= 2).
        seed: RNG seed, used only by ``metropolis_random``.
        q: edge probability in (0, 1] for ``metropolis_random``.
        max_retries: resampling budget before giving up on connectivity.

    Returns:
        A connected :class:`Graph`.

    Raises:
        ValueError: unknown kind, K < 2, bad q, or the random family stayed
            disconnected for the whole retry budget.
    """
    if K < 2:
        raise ValueError(f"need at least 2 agents, got K={K}")
    if kind == "ring":
        edges = {tuple(sorted((i, (i + 1) % K))) for i in range(K)}
        return Graph(K, frozenset(edges))
    if kind == "line":
        return Graph(K, frozenset((i, i + 1) for i in range(K - 1)))
    if kind == "complete":
        return Graph(K, frozenset((i, j) for i in range(K) for j in range(i + 1, K)))
    if kind == "metropolis_random":
        if not 0.0 < q <= 1.0:
            raise ValueError(f"edge probability q must be in (0,1], got {q}")
        rng = np.random.default_rng(seed)
        for _ in range(max_retries):
            draws = rng.random((K, K))
            edges = frozenset((i, j) for i in range(K) for j in range(i + 1, K) if draws[i, j] < q)
            if _connected(K, edges):
                return Graph(K, edges)
        raise ValueError(f"metropolis_random stayed disconnected after {max_retries} tries (K={K}, q={q})")
    raise ValueError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")


@dataclass(eq=False)
class MixingMatrix:
    """Symmetric doubly stochastic primitive mixing matrix with spectral data.

    Attributes:
        w: the ``K x K`` weight matrix.
        eigenvalues: all eigenvalues, descending, leading entry 1.
        U: orthogonal eigenvector matrix; ``U[:, 0]`` is exactly
            ``ones(K)/sqrt(K)`` and ``U @ diag(eigenvalues) @ U.T`` rebuilds
            ``w`` to 1e-10.
        lambda_mix: second-largest eigenvalue magnitude, in [0, 1).
        graph: originating graph when built from one (sparsity audited).
    """

    w: np.ndarray
    eigenvalues: np.ndarray
    U: np.ndarray
    lambda_mix: float
    graph: Graph | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return self.w.shape[0]

    @property
    def U_hat(self) -> np.ndarray:
        """Eigenvector columns orthogonal to the consensus direction."""
        return self.U[:, 1:]

    @property
    def lambda_hat(self) -> np.ndarray:
        """Eigenvalues on the complement of the consensus direction."""
        return self.eigenvalues[1:]


def _eigendecompose(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition with the consensus eigenvector pinned.

    Orders eigenvalues descending (ties keep ascending-index order), replaces
    the eigenvector for eigenvalue 1 by the exact ``1/sqrt(K)`` vector, and
    re-orthogonalizes the remaining columns against it.  Re-orthogonalization
    stays within eigenspaces (a rank-one correction along the consensus
    direction), so the reconstruction property is preserved.
    """
    K = w.shape[0]
    vals, vecs = np.linalg.eigh(w)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]

    ones = np.ones(K) / np.sqrt(K)
    vecs[:, 0] = ones
    for j in range(1, K):
        vecs[:, j] -= ones * (ones @ vecs[:, j])
        norm = np.linalg.norm(vecs[:, j])
        if norm == 0.0:  # pragma: no cover - only for a defective eigensolver result
            raise np.linalg.LinAlgError("eigenvector collapsed while re-orthogonalizing")
        vecs[:, j] /= norm
    return vals, vecs


def _validate_mixing(w: np.ndarray, graph: Graph | None) -> None:
    K = w.shape[0]
    if w.shape != (K, K):
        raise ValueError(f"mixing matrix must be square, got {w.shape}")
    sym = np.max(np.abs(w - w.T))
    if sym > SYMMETRY_TOL:
        raise ValueError(f"mixing matrix not symmetric: max asymmetry {sym:.3e}")
    ones = np.ones(K)
    row = np.max(np.abs(w @ ones - ones))
    col = np.max(np.abs(ones @ w - ones))
    if max(row, col) > STOCHASTIC_TOL:
        raise ValueError(f"mixing matrix not doubly stochastic: row residual {row:.3e}, col {col:.3e}")
    if graph is not None:
        allowed = graph.adjacency() + np.eye(K)
        stray = np.max(np.abs(w[allowed == 0])) if np.any(allowed == 0) else 0.0
        if stray > 0.0:
            raise ValueError(f"mixing matrix has weight {stray:.3e} outside the graph's sparsity pattern")


def metropolis_weights(g: Graph) -> MixingMatrix:
    """Metropolis-rule mixing matrix for a connected graph.

    ``w[i,j] = 1/(1 + max(deg_i, deg_j))`` on edges and the diagonal absorbs
    the remainder, which yields a symmetric doubly stochastic matrix with at
    least one positive diagonal entry (hence primitive on a connected graph).
    """
    K = g.node_count
    deg = g.degrees
    w = np.zeros((K, K))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return from_matrix(w, graph=g)


def from_matrix(w: np.ndarray, *, graph: Graph | None = None) -> MixingMatrix:
    """Wrap and validate an explicit mixing matrix (mostly for tests)."""
    w = np.asarray(w, dtype=float)
    _validate_mixing(w, graph)
    vals, vecs = _eigendecompose(w)
    lambda_mix = float(np.max(np.abs(vals[1:])))
    if lambda_mix >= 1.0:
        raise ValueError(f"matrix is not primitive: second eigenvalue magnitude {lambda_mix}")
    recon = np.linalg.norm(vecs @ np.diag(vals) @ vecs.T - w)
    if recon > RECONSTRUCTION_TOL:  # pragma: no cover - guards eigensolver trouble
        raise np.linalg.LinAlgError(f"eigendecomposition reconstruction residual {recon:.3e}")
    return MixingMatrix(w=w, eigenvalues=vals, U=vecs, lambda_mix=lambda_mix, graph=graph)


def build_mixing(kind: str, K: int, *, seed: int = 0, q: float = 0.5) -> MixingMatrix:
    """Convenience: graph construction and Metropolis weights in one call."""
    return metropolis_weights(build_graph(kind, K, seed=seed, q=q))


def spectral_data(m: MixingMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray, float, np.ndarray, np.ndarray]:
    """Unpack ``(U, eigenvalues, lambda_mix, U_hat, lambda_hat)``.

    Accepts either a :class:`MixingMatrix` (cached decomposition) or a raw
    matrix, which is validated and decomposed on the fly.
    """
    if isinstance(m, np.ndarray):
        m = from_matrix(m)
    return m.U, m.eigenvalues, m.lambda_mix, m.U_hat, m.lambda_hat
