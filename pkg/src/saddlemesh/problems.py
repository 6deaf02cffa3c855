"""Synthetic minimax problems: a stochastic quadratic family and a bilinear toy.

The main instance is the quadratic minimax cost

    J_k(x, y) = E[ 1/2 (a^T x)^2 + y^T (B_k x + e) - nu/2 ||y||^2 ]

with per-sample data ``a`` (feature vector) and ``e`` (error vector), and a
fixed per-agent coupling matrix ``B_k``.  In offline mode the expectation is
the empirical mean over a stored dataset of N_k samples; in online mode fresh
samples are drawn from the generating distribution and the exact gradients use
``E[a a^T] = var * I + m m^T``.

Per-sample gradients (hand-differentiated, the anchor for all estimators):

    grad_x Q = a (a^T x) + B_k^T y
    grad_y Q = B_k x + e - nu y

Hessians are constant in the sample randomness except the ``a a^T`` block, so
Hessian-vector products are exact one-liners.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

Batch = tuple[np.ndarray, np.ndarray]  # (A rows (b, d1), E rows (b, d2))


class MinimaxProblem:
    """Interface for per-agent stochastic saddle-point objectives.

    Concrete problems provide batch draws, batch-mean gradients at a point,
    Hessian-vector products (optional; guarded by ``has_hvp``), exact local
    and global gradients, and the analytic saddle point when known.
    """

    K: int
    d1: int
    d2: int
    nu: float
    has_hvp: bool = False

    def sample_count(self, k: int) -> int | None:
        """Local dataset size, or None for online (population) problems."""
        raise NotImplementedError

    def draw_batch(self, k: int, size: int, rng: np.random.Generator) -> Batch:
        raise NotImplementedError

    def full_batch(self, k: int) -> Batch:
        raise NotImplementedError

    def batch_grad(self, k: int, x: np.ndarray, y: np.ndarray, batch: Batch) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def batch_hvp(self, k: int, dx: np.ndarray, dy: np.ndarray, batch: Batch) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError("problem does not expose Hessian-vector products")

    def local_grad(self, k: int, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def global_grad(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        gx = np.zeros(self.d1)
        gy = np.zeros(self.d2)
        for k in range(self.K):
            lx, ly = self.local_grad(k, x, y)
            gx += lx
            gy += ly
        return gx / self.K, gy / self.K

    def saddle_point(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


def _as_single_sample(problem: "QuadraticMinimax", k: int, sample) -> Batch:
    if isinstance(sample, (int, np.integer)):
        if problem.mode != "offline":
            raise ValueError("integer sample indices only address offline datasets")
        return problem.A[k][None, int(sample)], problem.E[k][None, int(sample)]
    a, e = sample
    return np.asarray(a, dtype=float)[None, :], np.asarray(e, dtype=float)[None, :]


def grad_loss(problem: MinimaxProblem, k: int, x: np.ndarray, y: np.ndarray, sample) -> tuple[np.ndarray, np.ndarray]:
    """Exact analytic gradient pair of the sampled loss at one data point.

    ``sample`` is an integer index into agent ``k``'s offline dataset, or an
    ``(a, e)`` pair of raw draws.
    """
    if isinstance(problem, QuadraticMinimax):
        return problem.batch_grad(k, x, y, _as_single_sample(problem, k, sample))
    return problem.batch_grad(k, x, y, sample)


def saddle_residual(problem: MinimaxProblem, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Squared exact global gradient norms at ``(x, y)``.

    This is the stationarity measure runs are judged by: both components
    vanish exactly at a saddle point.
    """
    gx, gy = problem.global_grad(x, y)
    return float(gx @ gx), float(gy @ gy)


@dataclass(eq=False)
class QuadraticMinimax(MinimaxProblem):
    """The synthetic quadratic minimax family (offline or online).

    Attributes:
        A: per-agent sample matrices, each (N_k, d1) — offline only.
        E: per-agent error rows, each (N_k, d2) — offline only.
        B: per-agent coupling matrices, each (d2, d1).
        nu: strong-concavity constant of the y block (> 0).
        mode: "offline" (finite sum over stored samples) or "online".
        agent_means: per-agent feature mean (scalar; all entries share it).
        data_std, noise_std: generating standard deviations (online draws
            and the online exact gradient need them).
    """

    K: int
    d1: int
    d2: int
    nu: float
    mode: str
    B: list[np.ndarray]
    A: list[np.ndarray] = field(default_factory=list, repr=False)
    E: list[np.ndarray] = field(default_factory=list, repr=False)
    agent_means: np.ndarray = field(default=None, repr=False)
    data_std: float = 0.0
    noise_std: float = 0.0
    has_hvp: bool = True

    def __post_init__(self) -> None:
        # cache the exact per-agent curvature C_k = E[a a^T] and mean error
        self._C = []
        self._e_mean = []
        for k in range(self.K):
            if self.mode == "offline":
                Ak = self.A[k]
                self._C.append(Ak.T @ Ak / Ak.shape[0])
                self._e_mean.append(self.E[k].mean(axis=0))
            else:
                m = np.full(self.d1, self.agent_means[k])
                self._C.append(self.data_std**2 * np.eye(self.d1) + np.outer(m, m))
                self._e_mean.append(np.zeros(self.d2))
        self._C_bar = np.mean(self._C, axis=0)
        self._B_bar = np.mean(self.B, axis=0)
        self._e_bar = np.mean(self._e_mean, axis=0)

    def sample_count(self, k: int) -> int | None:
        return self.A[k].shape[0] if self.mode == "offline" else None

    def draw_batch(self, k: int, size: int, rng: np.random.Generator) -> Batch:
        if size < 1:
            raise ValueError(f"batch size must be >= 1, got {size}")
        if self.mode == "offline":
            idx = rng.integers(0, self.A[k].shape[0], size=size)  # with replacement
            return self.A[k][idx], self.E[k][idx]
        a = rng.normal(self.agent_means[k], self.data_std, size=(size, self.d1))
        e = rng.normal(0.0, self.noise_std, size=(size, self.d2))
        return a, e

    def full_batch(self, k: int) -> Batch:
        if self.mode != "offline":
            raise ValueError("online problems have no full batch; use a finite large batch")
        return self.A[k], self.E[k]

    def batch_grad(self, k: int, x: np.ndarray, y: np.ndarray, batch: Batch) -> tuple[np.ndarray, np.ndarray]:
        Ab, Eb = batch
        n = Ab.shape[0]
        gx = Ab.T @ (Ab @ x) / n + self.B[k].T @ y
        gy = self.B[k] @ x + Eb.mean(axis=0) - self.nu * y
        return gx, gy

    def batch_hvp(self, k: int, dx: np.ndarray, dy: np.ndarray, batch: Batch) -> tuple[np.ndarray, np.ndarray]:
        Ab, _ = batch
        n = Ab.shape[0]
        hx = Ab.T @ (Ab @ dx) / n + self.B[k].T @ dy
        hy = self.B[k] @ dx - self.nu * dy
        return hx, hy

    def local_grad(self, k: int, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        gx = self._C[k] @ x + self.B[k].T @ y
        gy = self.B[k] @ x + self._e_mean[k] - self.nu * y
        return gx, gy

    def global_grad(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        gx = self._C_bar @ x + self._B_bar.T @ y
        gy = self._B_bar @ x + self._e_bar - self.nu * y
        return gx, gy

    def saddle_point(self) -> tuple[np.ndarray, np.ndarray]:
        """Solve the linear stationarity system.

        Eliminating ``y = (B_bar x + e_bar)/nu`` from the x-stationarity
        equation leaves ``(C_bar + B_bar^T B_bar / nu) x = -B_bar^T e_bar/nu``.
        """
        lhs = self._C_bar + self._B_bar.T @ self._B_bar / self.nu
        rhs = -self._B_bar.T @ self._e_bar / self.nu
        try:
            x = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError:  # pragma: no cover - degenerate data
            x = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
        y = (self._B_bar @ x + self._e_bar) / self.nu
        return x, y


def make_quadratic(
    K: int,
    d1: int,
    d2: int,
    N_per_agent: int,
    nu: float,
    *,
    hetero_shift: float = 0.01,
    data_spread: float = 10.0,
    coupling_spread: float = 0.001,
    noise_spread: float = 10.0,
    spread_is_variance: bool = True,
    mode: str = "offline",
    seed: int = 0,
) -> QuadraticMinimax:
    """Generate a quadratic minimax instance.

    Agent ``k`` (0-based) draws feature entries from
    ``Normal(1 + hetero_shift * (k+1), data_spread)``, coupling entries from
    ``Normal(0, coupling_spread)`` and error entries from
    ``Normal(0, noise_spread)``.  The spread arguments are variances by
    default (``spread_is_variance=False`` reads them as standard deviations).

    Args:
        K: number of agents (>= 1).
        d1, d2: descent/ascent dimensions.
        N_per_agent: offline dataset size per agent (ignored online).
        nu: strong-concavity constant, > 0.
        mode: "offline" or "online".
        seed: all randomness is derived from this via per-agent substreams.
    """
    if K < 1 or d1 < 1 or d2 < 1 or (mode == "offline" and N_per_agent < 1):
        raise ValueError(f"dimensions must be positive, got K={K} d1={d1} d2={d2} N={N_per_agent}")
    if nu <= 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    if mode not in ("offline", "online"):
        raise ValueError(f"mode must be 'offline' or 'online', got {mode!r}")

    to_std = np.sqrt if spread_is_variance else (lambda v: v)
    data_std = float(to_std(data_spread))
    coupling_std = float(to_std(coupling_spread))
    noise_std = float(to_std(noise_spread))
    agent_means = np.array([1.0 + hetero_shift * (k + 1) for k in range(K)])

    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(K)]
    B = [rng.normal(0.0, coupling_std, size=(d2, d1)) for rng in streams]
    A_rows: list[np.ndarray] = []
    E_rows: list[np.ndarray] = []
    if mode == "offline":
        for k, rng in enumerate(streams):
            A_rows.append(rng.normal(agent_means[k], data_std, size=(N_per_agent, d1)))
            E_rows.append(rng.normal(0.0, noise_std, size=(N_per_agent, d2)))

    return QuadraticMinimax(
        K=K, d1=d1, d2=d2, nu=nu, mode=mode, B=B, A=A_rows, E=E_rows,
        agent_means=agent_means, data_std=data_std, noise_std=noise_std,
    )


@dataclass(eq=False)
class BilinearSaddle(MinimaxProblem):
    """Deterministic toy: J = 1/2 ||x||^2 + x^T M y - nu/2 ||y||^2.

    Noise-free (every "sample" yields the exact gradient), identical across
    agents, saddle at the origin.  Useful for fixed-point and equivalence
    tests where sampling variance would only obscure the algebra.
    """

    K: int
    M: np.ndarray
    nu: float = 1.0
    has_hvp: bool = True

    def __post_init__(self) -> None:
        self.M = np.asarray(self.M, dtype=float)
        self.d1, self.d2 = self.M.shape

    def sample_count(self, k: int) -> int | None:
        return 1

    def draw_batch(self, k: int, size: int, rng: np.random.Generator) -> Batch:
        return np.empty((size, 0)), np.empty((size, 0))  # placeholder rows: loss is deterministic

    def full_batch(self, k: int) -> Batch:
        return np.empty((1, 0)), np.empty((1, 0))

    def batch_grad(self, k, x, y, batch) -> tuple[np.ndarray, np.ndarray]:
        return x + self.M @ y, self.M.T @ x - self.nu * y

    def batch_hvp(self, k, dx, dy, batch) -> tuple[np.ndarray, np.ndarray]:
        return dx + self.M @ dy, self.M.T @ dx - self.nu * dy

    def local_grad(self, k, x, y) -> tuple[np.ndarray, np.ndarray]:
        return self.batch_grad(k, x, y, None)

    def global_grad(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        return self.batch_grad(0, x, y, None)

    def saddle_point(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(self.d1), np.zeros(self.d2)


# --------------------------------------------------------------- CSV audit


def dump_dataset(problem: QuadraticMinimax, path: str) -> None:
    """Write an offline dataset to CSV, one row per record, for audits."""
    if problem.mode != "offline":
        raise ValueError("only offline datasets can be dumped")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["meta", problem.K, problem.d1, problem.d2, repr(float(problem.nu))])
        for k in range(problem.K):
            for r in range(problem.d2):
                w.writerow(["B", k, r] + [repr(float(v)) for v in problem.B[k][r]])
            for s in range(problem.A[k].shape[0]):
                w.writerow(["a", k, s] + [repr(float(v)) for v in problem.A[k][s]])
                w.writerow(["e", k, s] + [repr(float(v)) for v in problem.E[k][s]])


def load_dataset(path: str) -> QuadraticMinimax:
    """Rebuild an offline problem from :func:`dump_dataset` output."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "meta":
        raise ValueError(f"{path}: not a dataset dump (missing meta row)")
    _, K, d1, d2, nu = rows[0]
    K, d1, d2, nu = int(K), int(d1), int(d2), float(nu)
    B = [[] for _ in range(K)]
    A = [[] for _ in range(K)]
    E = [[] for _ in range(K)]
    for row in rows[1:]:
        tag, k = row[0], int(row[1])
        vals = [float(v) for v in row[3:]]
        {"B": B, "a": A, "e": E}[tag][k].append(vals)
    return QuadraticMinimax(
        K=K, d1=d1, d2=d2, nu=nu, mode="offline",
        B=[np.array(b) for b in B], A=[np.array(a) for a in A], E=[np.array(e) for e in E],
        agent_means=np.zeros(K), data_std=0.0, noise_std=0.0,
    )
