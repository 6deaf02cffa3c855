"""Multi-agent saddle-point run loop.

Two mathematically equivalent update forms are implemented and cross-checked:

* ``general`` — the stacked matrix recursion with explicit dual blocks:

      X+ = a (c X - mu_x Mx) - b Dx,      Dx+ = Dx + b X+
      Y+ = a (c Y + mu_y My) - b Dy,      Dy+ = Dy + b Y+

  (descent in x, ascent in y; ``Dx0 = Dy0 = 0``).

* ``node_level`` — the per-strategy difference recursions agents would
  actually run, which eliminate the dual blocks: diffusion-style corrections
  for ``ed``/``extra`` and explicit tracker variables for the
  gradient-tracking family.

Both consume the same per-round stacked gradient estimates ``Mx (K,d1)``,
``My (K,d2)`` produced by the estimator module under one network-shared
Bernoulli draw per round.  All block products are K x K matrix actions on
stacked arrays — Kronecker structure is exploited, never materialized.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .estimators import EstimatorConfig, EstimatorState, estimator_step, warm_start
from .metrics import MetricsRow, record
from .problems import MinimaxProblem
from .strategy import StrategyKind, StrategySet, build_strategy
from .topology import MixingMatrix

INIT_KINDS = ("random", "consensus", "zero")


@dataclass(frozen=True)
class Seeds:
    """The three independent randomness sources of a run."""

    data: int = 0
    estimator: int = 1
    bernoulli: int = 2


@dataclass(eq=False)
class NetworkState:
    """General-form state: stacked iterates plus dual correction blocks."""

    X: np.ndarray
    Y: np.ndarray
    Dx: np.ndarray
    Dy: np.ndarray
    round: int = 0


@dataclass(eq=False)
class NodeLevelState:
    """Difference-form state.

    ``tracker_x/y`` carry the gradient-tracking variables (zero-initialized;
    unused by ``ed``/``extra``).  ``w`` is the plain mixing matrix the
    per-node recursions multiply by.
    """

    X: np.ndarray
    Y: np.ndarray
    X_prev: np.ndarray
    Y_prev: np.ndarray
    tracker_x: np.ndarray
    tracker_y: np.ndarray
    w: np.ndarray
    round: int = 0


@dataclass(eq=False)
class RunConfig:
    """Everything one run needs besides the problem itself.

    ``mixing`` may be None only when the problem has a single agent, which
    selects the centralized fallback (no network, plain two-time-scale
    updates).  ``metrics_every`` thins the recorded rows; rounds 0 and T are
    always kept.
    """

    mu_x: float
    mu_y: float
    T: int
    strategy: StrategyKind | str = StrategyKind.ED
    estimator: EstimatorConfig = field(default_factory=lambda: EstimatorConfig(p=1.0, beta_x=0.0, beta_y=0.0))
    mixing: MixingMatrix | None = None
    update_form: str = "node_level"
    seeds: Seeds = field(default_factory=Seeds)
    metrics_every: int = 1
    init: str = "random"
    init_scale: float = 1.0
    divergence_limit: float = 1e12
    record_trajectory: bool = False
    record_wallclock: bool = False

    def __post_init__(self) -> None:
        if self.mu_x < 0 or self.mu_y < 0:
            raise ValueError(f"step sizes must be nonnegative, got mu_x={self.mu_x}, mu_y={self.mu_y}")
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}")
        if self.update_form not in ("general", "node_level"):
            raise ValueError(f"update_form must be 'general' or 'node_level', got {self.update_form!r}")
        if self.init not in INIT_KINDS:
            raise ValueError(f"init must be one of {INIT_KINDS}, got {self.init!r}")
        if self.metrics_every < 1:
            raise ValueError(f"metrics_every must be >= 1, got {self.metrics_every}")
        if self.mu_x > self.mu_y:
            warnings.warn(
                f"mu_x={self.mu_x} > mu_y={self.mu_y}: the ascent side is usually run "
                "on the faster time scale", RuntimeWarning, stacklevel=2,
            )


@dataclass(eq=False)
class RunLog:
    """Everything a finished (or aborted) run reports."""

    rows: list[MetricsRow]
    diverged: bool = False
    diverged_round: int | None = None
    estimator_states: list[EstimatorState] = field(default_factory=list)
    strategy_set: StrategySet | None = None
    trajectory: dict[str, list[np.ndarray]] | None = None
    config: RunConfig | None = None


# ------------------------------------------------------------ update forms


def step_general(
    state: NetworkState,
    strategy: StrategySet,
    mu_x: float,
    mu_y: float,
    Mx: np.ndarray,
    My: np.ndarray,
) -> NetworkState:
    """One round of the stacked matrix recursion."""
    a, b, c = strategy.a, strategy.b, strategy.c
    X1 = a @ (c @ state.X - mu_x * Mx) - b @ state.Dx
    Y1 = a @ (c @ state.Y + mu_y * My) - b @ state.Dy
    Dx1 = state.Dx + b @ X1
    Dy1 = state.Dy + b @ Y1
    return NetworkState(X=X1, Y=Y1, Dx=Dx1, Dy=Dy1, round=state.round + 1)


def step_node_level(
    state: NodeLevelState,
    kind: StrategyKind | str,
    mu_x: float,
    mu_y: float,
    Mx: np.ndarray,
    My: np.ndarray,
    Mx_prev: np.ndarray,
    My_prev: np.ndarray,
) -> NodeLevelState:
    """One round of the per-strategy difference recursion.

    Round 0 uses the uniform initialization ``X_prev = X0``, ``M_prev = 0``,
    ``tracker = 0``; no special-casing is needed, the first step then lands on
    each strategy's prescribed starting move.
    """
    kind = StrategyKind.parse(kind)
    w = state.w
    X, Y, Xp, Yp = state.X, state.Y, state.X_prev, state.Y_prev
    tx, ty = state.tracker_x, state.tracker_y

    if kind is StrategyKind.ED:
        X1 = w @ (2.0 * X - Xp - mu_x * (Mx - Mx_prev))
        Y1 = w @ (2.0 * Y - Yp + mu_y * (My - My_prev))
    elif kind is StrategyKind.EXTRA:
        X1 = w @ (2.0 * X - Xp) - mu_x * (Mx - Mx_prev)
        Y1 = w @ (2.0 * Y - Yp) + mu_y * (My - My_prev)
    elif kind is StrategyKind.ATC_GT:
        tx = w @ (tx + Mx - Mx_prev)
        ty = w @ (ty + My - My_prev)
        X1 = w @ (X - mu_x * tx)
        Y1 = w @ (Y + mu_y * ty)
    elif kind is StrategyKind.SEMI_ATC_GT:
        tx = w @ (tx + Mx - Mx_prev)
        ty = w @ (ty + My - My_prev)
        X1 = w @ X - mu_x * tx
        Y1 = w @ Y + mu_y * ty
    else:  # NON_ATC_GT
        tx = w @ tx + (Mx - Mx_prev)
        ty = w @ ty + (My - My_prev)
        X1 = w @ X - mu_x * tx
        Y1 = w @ Y + mu_y * ty

    return NodeLevelState(
        X=X1, Y=Y1, X_prev=X, Y_prev=Y, tracker_x=tx, tracker_y=ty, w=w,
        round=state.round + 1,
    )


def _centralized_step(X, Y, mu_x, mu_y, Mx, My):
    # K = 1: every strategy collapses to the plain two-time-scale update
    return X - mu_x * Mx, Y + mu_y * My


# ------------------------------------------------------------------- run


def _initial_iterates(cfg: RunConfig, problem: MinimaxProblem, K: int) -> tuple[np.ndarray, np.ndarray]:
    # the init stream is derived from the data seed but salted so it can never
    # collide with the per-agent dataset substreams spawned from the bare seed
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seeds.data, 0x5EED1217)))
    if cfg.init == "zero":
        return np.zeros((K, problem.d1)), np.zeros((K, problem.d2))
    if cfg.init == "consensus":
        x = rng.normal(scale=cfg.init_scale, size=problem.d1)
        y = rng.normal(scale=cfg.init_scale, size=problem.d2)
        return np.tile(x, (K, 1)), np.tile(y, (K, 1))
    X = rng.normal(scale=cfg.init_scale, size=(K, problem.d1))
    Y = rng.normal(scale=cfg.init_scale, size=(K, problem.d2))
    return X, Y


def _blown_up(arrs, limit: float) -> bool:
    return any(not np.all(np.isfinite(a)) or np.max(np.abs(a)) > limit for a in arrs)


def run(problem: MinimaxProblem, cfg: RunConfig) -> RunLog:
    """Warm-start, then execute T rounds of estimate-and-combine.

    Fully deterministic given ``cfg.seeds``: agent estimator streams are
    spawned per agent from the estimator seed, the shared Bernoulli stream is
    its own generator, and initial iterates derive from the data seed.
    """
    K = problem.K
    centralized = K == 1
    if not centralized:
        if cfg.mixing is None:
            raise ValueError("multi-agent problems need cfg.mixing (a MixingMatrix)")
        if cfg.mixing.K != K:
            raise ValueError(f"mixing matrix is {cfg.mixing.K}x{cfg.mixing.K} but the problem has K={K} agents")
    strategy = None if centralized else build_strategy(cfg.strategy, cfg.mixing)

    X, Y = _initial_iterates(cfg, problem, K)
    agent_rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seeds.estimator).spawn(K)]
    bern = np.random.default_rng(cfg.seeds.bernoulli)

    states = [
        warm_start(problem, k, X[k], Y[k], cfg.estimator.b0, agent_rngs[k])
        for k in range(K)
    ]
    Mx = np.stack([s.g_x for s in states])
    My = np.stack([s.g_y for s in states])
    Mx_prev = np.zeros_like(Mx)
    My_prev = np.zeros_like(My)

    if cfg.update_form == "general" and not centralized:
        net: NetworkState | NodeLevelState = NetworkState(
            X=X, Y=Y, Dx=np.zeros_like(X), Dy=np.zeros_like(Y))
    else:
        net = NodeLevelState(
            X=X, Y=Y, X_prev=X.copy(), Y_prev=Y.copy(),
            tracker_x=np.zeros_like(X), tracker_y=np.zeros_like(Y),
            w=np.eye(1) if centralized else cfg.mixing.w)

    log = RunLog(rows=[], strategy_set=strategy, config=cfg)
    if cfg.record_trajectory:
        log.trajectory = {key: [] for key in ("X", "Y", "Dx", "Dy", "Mx", "My")}

    t0 = time.perf_counter_ns()

    def elapsed_us() -> int:
        return (time.perf_counter_ns() - t0) // 1000 if cfg.record_wallclock else 0

    def snap(pi: int) -> None:
        r = net.round
        if r % cfg.metrics_every == 0 or r == cfg.T:
            log.rows.append(record(problem, net.X, net.Y,
                                   [s.oracle_count for s in states], r, pi, elapsed_us()))
        if log.trajectory is not None:
            log.trajectory["X"].append(net.X.copy())
            log.trajectory["Y"].append(net.Y.copy())
            if isinstance(net, NetworkState):
                log.trajectory["Dx"].append(net.Dx.copy())
                log.trajectory["Dy"].append(net.Dy.copy())
            log.trajectory["Mx"].append(Mx.copy())
            log.trajectory["My"].append(My.copy())

    snap(pi=1)  # round 0; the warm start is by construction a refresh round

    for i in range(cfg.T):
        if centralized:
            X1, Y1 = _centralized_step(net.X, net.Y, cfg.mu_x, cfg.mu_y, Mx, My)
            net = NodeLevelState(X=X1, Y=Y1, X_prev=net.X, Y_prev=net.Y,
                                 tracker_x=net.tracker_x, tracker_y=net.tracker_y,
                                 w=net.w, round=net.round + 1)
        elif isinstance(net, NetworkState):
            net = step_general(net, strategy, cfg.mu_x, cfg.mu_y, Mx, My)
        else:
            net = step_node_level(net, strategy.kind, cfg.mu_x, cfg.mu_y,
                                  Mx, My, Mx_prev, My_prev)

        if _blown_up((net.X, net.Y), cfg.divergence_limit):
            log.diverged = True
            log.diverged_round = net.round
            break

        pi = int(bern.random() < cfg.estimator.p)
        new_states = [
            estimator_step(states[k], cfg.estimator, problem, k,
                           (net.X[k], net.Y[k]), pi, agent_rngs[k])
            for k in range(K)
        ]
        states = new_states
        Mx_prev, My_prev = Mx, My
        Mx = np.stack([s.g_x for s in states])
        My = np.stack([s.g_y for s in states])
        snap(pi)

    log.estimator_states = states
    return log
