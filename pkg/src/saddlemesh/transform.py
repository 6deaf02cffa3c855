"""Spectral deviation coordinates and the contraction verification oracle.

Away from the consensus direction, one round of the general-form recursion
acts on each eigenvector coordinate of the mixing matrix independently.  With
the auxiliary block

    Z_x = mu_x * a Mx + b Dx - b_sq X        (ascent side: -mu_y * a My + ...)

the pair ``(u, v) = (uhat^T X, lambda_b^{-1} uhat^T Z)`` of one nontrivial
eigenvector ``uhat`` evolves as ``s+ = G s + drive`` with the 2x2 block

    G = [[lambda_a lambda_c - lambda_b^2,  -lambda_b],
         [lambda_b,                         1       ]]

This module factors every block as ``G = V T V^-1`` with ``T`` chosen so its
spectral norm is the honest contraction factor (a rotation-scaling block for
complex eigenvalue pairs, a scaled Jordan block for defective ones, a diagonal
for well-separated real ones), assembles the full transition, and replays a
recorded run in the transformed coordinates to certify the dynamics:

* the network centroid obeys the exact averaged-gradient recursion,
* the deviation coordinates obey ``e+ = T e + drive`` to tight tolerance,
* with zero step sizes the deviation norm contracts at rate ||T||.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .strategy import StrategySet
from .topology import MixingMatrix

#: eigenvalue separations below this (relative) are treated as defective
JORDAN_TOL = 1e-8
#: separations below this get the orthogonal-basis scaling instead of an
#: ill-conditioned eigenvector basis (float noise around a double root)
NEAR_DEFECTIVE_TOL = 1e-6
REASSEMBLY_TOL = 1e-8

CENTROID_TOL = 1e-12
RECURSION_TOL = 1e-8
CONTRACTION_SLACK = 1e-10


@dataclass(frozen=True)
class BlockFactor:
    """Factorization ``G = V T V^-1`` of one per-eigenvalue 2x2 block."""

    eigenvalue: float
    G: np.ndarray
    V: np.ndarray
    T: np.ndarray
    norm: float
    case: str  # "complex" | "jordan" | "near_defective" | "real"


@dataclass(eq=False)
class TransitionFactorization:
    """Assembled transformed transition for one strategy on one network.

    Stacked layout: coordinates ``[uhat^T X ; lambda_b^{-1} uhat^T Z]`` (two
    groups of K-1 rows).  Block layout: coordinates grouped per eigenvalue
    (rows 2j, 2j+1 belong to eigenvalue j).  ``Qhat`` maps block to stacked;
    the permutation between the groupings is implicit in its sparsity.
    """

    strategy: StrategySet
    blocks: list[BlockFactor]
    T_full: np.ndarray
    Qhat: np.ndarray
    Qhat_inv: np.ndarray
    P: np.ndarray
    T_norm: float
    reassembly_residual: float
    uhat: np.ndarray = field(repr=False)
    lam_a: np.ndarray = field(repr=False)
    lam_b: np.ndarray = field(repr=False)


def _eig_pair(G: np.ndarray) -> tuple[float, float, float]:
    tr = G[0, 0] + G[1, 1]
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    disc = tr * tr - 4.0 * det
    return tr, det, disc


def _real_eigenvector(G: np.ndarray, t: float) -> np.ndarray:
    # two candidate null vectors of (G - tI); take the better-conditioned one
    c1 = np.array([G[0, 1], t - G[0, 0]])
    c2 = np.array([t - G[1, 1], G[1, 0]])
    v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
    n = np.linalg.norm(v)
    if n == 0.0:  # G is already t*I
        return np.array([1.0, 0.0])
    return v / n


def _factor_block(lam: float, lam_a: float, lam_b_sq: float, lam_c: float) -> BlockFactor:
    lam_b = float(np.sqrt(max(lam_b_sq, 0.0)))
    G = np.array([[lam_a * lam_c - lam_b_sq, -lam_b], [lam_b, 1.0]])
    tr, det, disc = _eig_pair(G)

    # an exactly defective block carries discriminant float dust of order
    # eps * tr^2, i.e. root separation up to ~1e-7; everything inside the
    # near-defective band is treated as (close to) a double root
    scale = max(1.0, abs(tr) / 2.0)
    root = float(np.sqrt(abs(disc)))
    if disc < 0.0 and root > NEAR_DEFECTIVE_TOL * scale:
        # complex pair alpha +- i omega: real rotation-scaling form
        alpha, omega = tr / 2.0, np.sqrt(-disc) / 2.0
        evals, evecs = np.linalg.eig(G)
        w = evecs[:, int(np.argmax(np.imag(evals)))]  # the +i*omega eigenvalue
        u, v = np.real(w), np.imag(w)
        V = np.column_stack([u, v])
        T = np.array([[alpha, omega], [-omega, alpha]])
        case = "complex"
    else:
        if disc < 0.0:
            sep = 0.0  # imaginary dust around a double root
            t1 = t2 = tr / 2.0
        else:
            t1, t2 = (tr + root) / 2.0, (tr - root) / 2.0
            sep = root
        if sep <= JORDAN_TOL * max(1.0, abs(t1), abs(t2)):
            # defective: basis (v1, eps*v2) with v1 = (G - gamma I) v2
            gamma = tr / 2.0
            N = G - gamma * np.eye(2)
            v2 = np.eye(2)[:, int(np.argmax(np.linalg.norm(N, axis=0)))]
            v1 = N @ v2
            if np.linalg.norm(v1) < 1e-14 * max(1.0, np.linalg.norm(G)):
                V, T, case = np.eye(2), gamma * np.eye(2), "jordan"
            else:
                eps = (1.0 - abs(gamma)) / 2.0 if abs(gamma) < 1.0 else 0.5
                V = np.column_stack([v1, eps * v2])
                T = np.array([[gamma, eps], [0.0, gamma]])
                case = "jordan"
        elif sep <= NEAR_DEFECTIVE_TOL * max(1.0, abs(t1), abs(t2)):
            # real but too close for an eigenvector basis: orthogonal Schur
            # basis, then shrink the off-diagonal coupling
            q1 = _real_eigenvector(G, t1)
            q2 = np.array([-q1[1], q1[0]])
            Q = np.column_stack([q1, q2])
            S = Q.T @ G @ Q  # upper triangular: diag (t1, t2), coupling s
            s = S[0, 1]
            top = max(abs(t1), abs(t2))
            eps = 1.0 if (abs(s) < 1e-14 or top >= 1.0) else min(1.0, (1.0 - top) / (2.0 * abs(s)))
            V = Q @ np.diag([1.0, eps])
            T = np.array([[t1, s * eps], [0.0, t2]])
            case = "near_defective"
        else:
            V = np.column_stack([_real_eigenvector(G, t1), _real_eigenvector(G, t2)])
            T = np.diag([t1, t2])
            case = "real"

    norm = float(np.linalg.norm(T, 2))
    return BlockFactor(eigenvalue=float(lam), G=G, V=V, T=T, norm=norm, case=case)


def build_transition(strategy: StrategySet) -> TransitionFactorization:
    """Factor the transformed one-round transition of a strategy.

    Raises:
        np.linalg.LinAlgError: a block reassembly residual exceeds 1e-8
            (numerically pathological spectrum).
    """
    m: MixingMatrix = strategy.w_ref
    K = m.K
    n = K - 1
    lam = m.lambda_hat
    lam_a = strategy.eig_a[1:]
    lam_b_sq = strategy.eig_b_sq[1:]
    lam_c = strategy.eig_c[1:]
    lam_b = np.sqrt(np.clip(lam_b_sq, 0.0, None))
    if np.min(lam_b) <= 1e-14:
        raise np.linalg.LinAlgError(
            "b-factor is singular off the consensus line; the deviation coordinates are undefined")

    blocks = [_factor_block(lam[j], lam_a[j], lam_b_sq[j], lam_c[j]) for j in range(n)]

    # stacked-layout transition P acts on [uhat^T X ; lambda_b^{-1} uhat^T Z]
    P = np.zeros((2 * n, 2 * n))
    P[:n, :n] = np.diag(lam_a * lam_c - lam_b_sq)
    P[:n, n:] = np.diag(-lam_b)
    P[n:, :n] = np.diag(lam_b)
    P[n:, n:] = np.eye(n)

    T_full = np.zeros((2 * n, 2 * n))
    Qhat = np.zeros((2 * n, 2 * n))
    for j, blk in enumerate(blocks):
        T_full[2 * j:2 * j + 2, 2 * j:2 * j + 2] = blk.T
        # stacked rows (j, n + j) hold eigenvalue j's (u, v) pair
        Qhat[j, 2 * j:2 * j + 2] = blk.V[0]
        Qhat[n + j, 2 * j:2 * j + 2] = blk.V[1]
    Qhat_inv = np.linalg.inv(Qhat)

    residual = float(np.linalg.norm(P - Qhat @ T_full @ Qhat_inv))
    if residual > REASSEMBLY_TOL:
        raise np.linalg.LinAlgError(f"transition reassembly residual {residual:.3e} exceeds {REASSEMBLY_TOL:g}")

    return TransitionFactorization(
        strategy=strategy, blocks=blocks, T_full=T_full, Qhat=Qhat, Qhat_inv=Qhat_inv,
        P=P, T_norm=max(b.norm for b in blocks), reassembly_residual=residual,
        uhat=m.U_hat, lam_a=lam_a, lam_b=lam_b,
    )


# --------------------------------------------------------- error vectors


@dataclass(eq=False)
class CoupledError:
    """Transformed deviation coordinates of one round, block layout.

    ``e_x`` has shape (2(K-1), d1): rows 2j, 2j+1 are eigenvalue j's
    transformed pair; columns are problem coordinates.
    """

    e_x: np.ndarray
    e_y: np.ndarray
    tau_x: float = 1.0
    tau_y: float = 1.0

    def sq_norm(self) -> float:
        return float(np.sum(self.e_x**2) + np.sum(self.e_y**2))


def deviation_blocks(
    fact: TransitionFactorization,
    X: np.ndarray, Y: np.ndarray, Dx: np.ndarray, Dy: np.ndarray,
    mu_x: float, mu_y: float, Mx: np.ndarray, My: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked-layout coordinates ``[uhat^T X ; lambda_b^{-1} uhat^T Z]``."""
    s = fact.strategy
    Zx = mu_x * (s.a @ Mx) + s.b @ Dx - s.b_sq @ X
    Zy = -mu_y * (s.a @ My) + s.b @ Dy - s.b_sq @ Y
    inv_b = 1.0 / fact.lam_b
    sx = np.vstack([fact.uhat.T @ X, inv_b[:, None] * (fact.uhat.T @ Zx)])
    sy = np.vstack([fact.uhat.T @ Y, inv_b[:, None] * (fact.uhat.T @ Zy)])
    return sx, sy


def compute_error_vectors(
    state,
    strategy: StrategySet,
    fact: TransitionFactorization,
    mu_x: float,
    mu_y: float,
    Mx: np.ndarray,
    My: np.ndarray,
    tau_x: float = 1.0,
    tau_y: float = 1.0,
) -> CoupledError:
    """Transformed error coordinates of a general-form state."""
    if tau_x <= 0 or tau_y <= 0:
        raise ValueError(f"tau scalings must be positive, got {tau_x}, {tau_y}")
    sx, sy = deviation_blocks(fact, state.X, state.Y, state.Dx, state.Dy, mu_x, mu_y, Mx, My)
    return CoupledError(
        e_x=fact.Qhat_inv @ sx / tau_x,
        e_y=fact.Qhat_inv @ sy / tau_y,
        tau_x=tau_x, tau_y=tau_y,
    )


def _drive(fact: TransitionFactorization, mu: float, tau: float, dM: np.ndarray, sign: float) -> np.ndarray:
    n = fact.lam_b.shape[0]
    top = np.zeros((n, dM.shape[1]))
    bottom = (fact.lam_a / fact.lam_b)[:, None] * (fact.uhat.T @ dM)
    return sign * (mu / tau) * (fact.Qhat_inv @ np.vstack([top, bottom]))


# ---------------------------------------------------------- verification


@dataclass(eq=False)
class VerificationReport:
    """Residuals from replaying a run in the transformed coordinates."""

    ok: bool
    rounds: int
    t_norm: float
    reassembly_residual: float
    max_centroid_residual: float
    max_recursion_residual: float
    max_contraction_excess: float | None
    failures: list[str]
    per_round: list[tuple[int, float, float]]

    def to_text(self) -> str:
        lines = [
            f"transformed-dynamics verification: {'ok' if self.ok else 'FAILED'}",
            f"rounds checked: {self.rounds}",
            f"transition norm ||T||: {self.t_norm:.12f}",
            f"reassembly residual: {self.reassembly_residual:.3e}",
            f"max centroid residual: {self.max_centroid_residual:.3e} (tol {CENTROID_TOL:g})",
            f"max recursion residual: {self.max_recursion_residual:.3e} (tol {RECURSION_TOL:g})",
        ]
        if self.max_contraction_excess is not None:
            lines.append(f"max contraction excess: {self.max_contraction_excess:.3e} (tol {CONTRACTION_SLACK:g})")
        for f in self.failures:
            lines.append(f"FAIL: {f}")
        lines.append("round  centroid_residual  recursion_residual")
        for r, c, e in self.per_round:
            lines.append(f"{r:5d}  {c:17.3e}  {e:18.3e}")
        return "\n".join(lines)


def verify_transformed_dynamics(
    log,
    fact: TransitionFactorization | None = None,
    tau: tuple[float, float] = (1.0, 1.0),
) -> VerificationReport:
    """Replay a recorded general-form run in transformed coordinates.

    Checks, per round: (a) the exact centroid recursion, (b) the transformed
    error recursion ``e+ = T e + drive``, and — when both step sizes are
    zero, so the driving term vanishes identically — (c) geometric
    contraction of the error norm at rate ||T||.
    """
    cfg = log.config
    tr = log.trajectory
    if tr is None or not tr.get("Dx"):
        raise ValueError("verification needs a general-form run recorded with record_trajectory=True")
    if fact is None:
        fact = build_transition(log.strategy_set)
    tau_x, tau_y = tau
    rounds = len(tr["X"]) - 1
    per_round: list[tuple[int, float, float]] = []
    max_centroid = 0.0
    max_recursion = 0.0
    zero_mu = cfg.mu_x == 0.0 and cfg.mu_y == 0.0
    max_excess: float | None = 0.0 if zero_mu else None

    def err_at(i: int) -> CoupledError:
        state = type("S", (), {})()
        state.X, state.Y = tr["X"][i], tr["Y"][i]
        state.Dx, state.Dy = tr["Dx"][i], tr["Dy"][i]
        return compute_error_vectors(state, fact.strategy, fact, cfg.mu_x, cfg.mu_y,
                                     tr["Mx"][i], tr["My"][i], tau_x, tau_y)

    e_prev = err_at(0)
    for i in range(rounds):
        # (a) centroid recursion, exact up to float associativity
        xc_res = np.max(np.abs(
            tr["X"][i + 1].mean(axis=0) - (tr["X"][i].mean(axis=0) - cfg.mu_x * tr["Mx"][i].mean(axis=0))))
        yc_res = np.max(np.abs(
            tr["Y"][i + 1].mean(axis=0) - (tr["Y"][i].mean(axis=0) + cfg.mu_y * tr["My"][i].mean(axis=0))))
        centroid_res = max(float(xc_res), float(yc_res))

        # (b) transformed error recursion
        e_next = err_at(i + 1)
        pred_x = fact.T_full @ e_prev.e_x + _drive(fact, cfg.mu_x, tau_x, tr["Mx"][i] - tr["Mx"][i + 1], -1.0)
        pred_y = fact.T_full @ e_prev.e_y + _drive(fact, cfg.mu_y, tau_y, tr["My"][i] - tr["My"][i + 1], +1.0)
        rec_res = max(
            float(np.max(np.abs(e_next.e_x - pred_x))),
            float(np.max(np.abs(e_next.e_y - pred_y))),
        )

        if zero_mu:
            lhs = np.sqrt(e_next.sq_norm())
            rhs = fact.T_norm * np.sqrt(e_prev.sq_norm())
            max_excess = max(max_excess, float(lhs - rhs))

        per_round.append((i + 1, centroid_res, rec_res))
        max_centroid = max(max_centroid, centroid_res)
        max_recursion = max(max_recursion, rec_res)
        e_prev = e_next

    failures = []
    if max_centroid > CENTROID_TOL:
        failures.append(f"centroid recursion residual {max_centroid:.3e} > {CENTROID_TOL:g}")
    if max_recursion > RECURSION_TOL:
        failures.append(f"transformed recursion residual {max_recursion:.3e} > {RECURSION_TOL:g}")
    if zero_mu and max_excess > CONTRACTION_SLACK:
        failures.append(f"contraction violated by {max_excess:.3e} > {CONTRACTION_SLACK:g}")

    return VerificationReport(
        ok=not failures,
        rounds=rounds,
        t_norm=fact.T_norm,
        reassembly_residual=fact.reassembly_residual,
        max_centroid_residual=max_centroid,
        max_recursion_residual=max_recursion,
        max_contraction_excess=max_excess,
        failures=failures,
        per_round=per_round,
    )
