"""Probabilistic variance-reduced gradient estimators for saddle problems.

One estimator family covers the whole zoo.  Each round a network-shared
Bernoulli draw ``pi ~ Bern(p)`` picks between a large-batch refresh and a
cheap corrected step; the corrected step blends the previous estimate with a
fresh minibatch through momentum ``beta`` and an optional drift correction —
either a gradient difference (``gamma1``) or a Hessian-vector product
(``gamma2``) evaluated on the same samples:

    pi = 1:  g <- mean gradient over the large batch (full batch offline)
    pi = 0:  g <- (1-beta) * [g_prev - mean(gamma1 * q + gamma2 * h)]
                  + beta * mean gradient at z_new
             q = grad Q(z_prev; xi) - grad Q(z_new; xi)      (same sample)
             h = Hessian(z_new; xi) applied to (z_prev - z_new)

Setting the knobs per :func:`specialize` recovers plain descent-ascent,
stochastic descent-ascent, heavy-ball momentum, recursive momentum,
Hessian-corrected momentum, loopless recursive refresh, and batch-scheduled
refresh as exact special cases.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .problems import MinimaxProblem

PRESETS = ("GDA", "SGDA", "HB", "STORM", "HC_MOMENTUM", "LOOPLESS_SARAH", "PAGE")


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs of the unified estimator.

    Attributes:
        p: refresh probability in [0, 1] (the Bernoulli parameter).
        beta_x, beta_y: momentum mixing factors in [0, 1] per variable.
        b: minibatch size of the corrected branch (>= 1).
        big_B: refresh batch size — a positive int (online) or "full"
            (offline: the entire local dataset, which is also what an int
            collapses to offline).
        b0: warm-up batch size — positive int or "full".
        gamma1: 1 to enable the gradient-difference correction.
        gamma2: 1 to enable the Hessian-vector correction (exclusive with
            gamma1; needs a problem exposing Hessian-vector products).
        independent_batches: draw separate minibatches for the x- and y-sides
            instead of sharing one (ablation switch; doubles the sample cost).
    """

    p: float
    beta_x: float
    beta_y: float
    b: int = 1
    big_B: int | str = "full"
    b0: int | str = 1
    gamma1: int = 0
    gamma2: int = 0
    independent_batches: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0,1], got {self.p}")
        for name, beta in (("beta_x", self.beta_x), ("beta_y", self.beta_y)):
            if not 0.0 <= beta <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {beta}")
        if not (isinstance(self.b, (int, np.integer)) and self.b >= 1):
            raise ValueError(f"b must be an integer >= 1, got {self.b!r}")
        for name, size in (("big_B", self.big_B), ("b0", self.b0)):
            ok = size == "full" or (isinstance(size, (int, np.integer)) and size >= 1)
            if not ok:
                raise ValueError(f"{name} must be 'full' or an integer >= 1, got {size!r}")
        if self.gamma1 not in (0, 1) or self.gamma2 not in (0, 1):
            raise ValueError(f"gamma1/gamma2 must be 0 or 1, got {self.gamma1}/{self.gamma2}")
        if self.gamma1 * self.gamma2 != 0:
            raise ValueError("gamma1 and gamma2 are exclusive correction modes; pick at most one")


@dataclass
class EstimatorState:
    """Per-agent estimator memory.

    ``oracle_count`` tallies stochastic samples drawn by this agent (one unit
    per sample; evaluating both variable blocks on a shared sample costs one).
    """

    g_x: np.ndarray
    g_y: np.ndarray
    prev_x: np.ndarray
    prev_y: np.ndarray
    oracle_count: int = 0


def _refresh_size(config: EstimatorConfig, problem: MinimaxProblem, k: int) -> int | None:
    """Samples a refresh draws; None means: use the offline full batch."""
    if problem.sample_count(k) is not None:
        return None  # offline refreshes always average the whole local dataset
    if config.big_B == "full":
        raise ValueError("big_B='full' is undefined for online problems; give an integer batch size")
    return int(config.big_B)


def warm_start(
    problem: MinimaxProblem,
    k: int,
    x0: np.ndarray,
    y0: np.ndarray,
    b0: int | str,
    rng: np.random.Generator,
) -> EstimatorState:
    """Initialize one agent's estimator from a b0-sample average at (x0, y0).

    Offline, ``b0 >= N_k`` (or "full") uses the whole local dataset exactly
    once — the estimate then equals the exact local gradient.  Smaller b0
    draws with replacement.
    """
    n = problem.sample_count(k)
    if n is not None and (b0 == "full" or b0 >= n):
        batch, drawn = problem.full_batch(k), n
    else:
        if b0 == "full":
            raise ValueError("b0='full' is undefined for online problems; give an integer batch size")
        batch, drawn = problem.draw_batch(k, int(b0), rng), int(b0)
    g_x, g_y = problem.batch_grad(k, x0, y0, batch)
    return EstimatorState(
        g_x=g_x, g_y=g_y, prev_x=np.array(x0, dtype=float), prev_y=np.array(y0, dtype=float),
        oracle_count=drawn,
    )


def estimator_step(
    state: EstimatorState,
    config: EstimatorConfig,
    problem: MinimaxProblem,
    k: int,
    z_new: tuple[np.ndarray, np.ndarray],
    pi: int,
    rng: np.random.Generator,
) -> EstimatorState:
    """Advance one agent's gradient estimate to the iterate ``z_new``.

    ``pi`` is this round's shared Bernoulli draw (1 = refresh branch,
    0 = corrected branch); the engine draws it once per round for the whole
    network, never per agent.
    """
    x_new, y_new = (np.asarray(z_new[0], dtype=float), np.asarray(z_new[1], dtype=float))
    if config.gamma2 == 1 and not problem.has_hvp:
        raise ValueError("gamma2=1 needs Hessian-vector products, which this problem does not expose")

    if pi:
        size = _refresh_size(config, problem, k)
        if size is None:
            batch, drawn = problem.full_batch(k), problem.sample_count(k)
        else:
            batch, drawn = problem.draw_batch(k, size, rng), size
        g_x, g_y = problem.batch_grad(k, x_new, y_new, batch)
        return EstimatorState(g_x=g_x, g_y=g_y, prev_x=x_new.copy(), prev_y=y_new.copy(),
                              oracle_count=state.oracle_count + drawn)

    batch_x = problem.draw_batch(k, config.b, rng)
    if config.independent_batches:
        batch_y = problem.draw_batch(k, config.b, rng)
        drawn = 2 * config.b
    else:
        batch_y = batch_x
        drawn = config.b

    def corrected(beta: float, g_prev: np.ndarray, pick, batch) -> np.ndarray:
        cache: list[np.ndarray] = []

        def grad_at_new() -> np.ndarray:
            if not cache:
                cache.append(pick(problem.batch_grad(k, x_new, y_new, batch)))
            return cache[0]

        if beta >= 1.0:
            return grad_at_new()
        if config.gamma1:
            # same-sample gradient difference between the old and new iterate
            g_at_prev = pick(problem.batch_grad(k, state.prev_x, state.prev_y, batch))
            carried = g_prev - (g_at_prev - grad_at_new())
        elif config.gamma2:
            h = pick(problem.batch_hvp(k, state.prev_x - x_new, state.prev_y - y_new, batch))
            carried = g_prev - h
        else:
            carried = g_prev
        if beta == 0.0:
            return carried
        return (1.0 - beta) * carried + beta * grad_at_new()

    g_x = corrected(config.beta_x, state.g_x, lambda g: g[0], batch_x)
    g_y = corrected(config.beta_y, state.g_y, lambda g: g[1], batch_y)
    return EstimatorState(g_x=g_x, g_y=g_y, prev_x=x_new.copy(), prev_y=y_new.copy(),
                          oracle_count=state.oracle_count + drawn)


def specialize(name: str, *, N: int | None = None, **overrides) -> EstimatorConfig:
    """Return the preset configuration for a named estimator scheme.

    Presets (override any field by keyword):

    - ``GDA``: always refresh on the full batch — deterministic descent-ascent.
    - ``SGDA``: never refresh, beta=1, b=1 — plain single-sample stochastic.
    - ``HB``: heavy-ball smoothing of stochastic gradients (beta=0.1 default).
    - ``STORM``: recursive momentum, gradient-difference corrected, b=1.
    - ``HC_MOMENTUM``: like STORM but Hessian-corrected (gamma2 path).
    - ``LOOPLESS_SARAH``: beta=0, gamma1=1, occasional refresh (p=0.1 default).
    - ``PAGE``: like LOOPLESS_SARAH with b = round(sqrt(N)) — pass the local
      dataset size ``N``; default p balances per-round sampling cost at
      ``b / (b + N)``.
    """
    key = name.upper()
    if key == "GDA":
        base = EstimatorConfig(p=1.0, beta_x=0.0, beta_y=0.0, b=1, big_B="full", b0="full")
    elif key == "SGDA":
        base = EstimatorConfig(p=0.0, beta_x=1.0, beta_y=1.0, b=1, b0=1)
    elif key == "HB":
        beta = overrides.pop("beta", 0.1)
        base = EstimatorConfig(p=0.0, beta_x=beta, beta_y=beta, b=1, b0=1)
    elif key == "STORM":
        beta = overrides.pop("beta", 0.01)
        base = EstimatorConfig(p=0.0, beta_x=beta, beta_y=beta, b=1, b0=1, gamma1=1)
    elif key == "HC_MOMENTUM":
        beta = overrides.pop("beta", 0.01)
        base = EstimatorConfig(p=0.0, beta_x=beta, beta_y=beta, b=1, b0=1, gamma2=1)
    elif key == "LOOPLESS_SARAH":
        base = EstimatorConfig(p=overrides.pop("p", 0.1), beta_x=0.0, beta_y=0.0,
                               b=1, big_B="full", b0="full", gamma1=1)
    elif key == "PAGE":
        if N is None:
            raise ValueError("PAGE needs the local dataset size: specialize('PAGE', N=...)")
        b = max(1, round(np.sqrt(N)))
        base = EstimatorConfig(p=overrides.pop("p", b / (b + N)), beta_x=0.0, beta_y=0.0,
                               b=b, big_B="full", b0="full", gamma1=1)
    else:
        raise ValueError(f"unknown estimator preset {name!r}; expected one of {PRESETS}")
    if "beta" in overrides:
        value = overrides.pop("beta")
        overrides.setdefault("beta_x", value)
        overrides.setdefault("beta_y", value)
    return replace(base, **overrides) if overrides else base
