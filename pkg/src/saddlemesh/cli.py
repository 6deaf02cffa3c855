"""Batch experiment driver: estimator x strategy x topology grids.

``saddlemesh run <spec>`` executes every cell of the grid described by a flat
key=value spec file (grammar in docs/spec-format.md), writing one metrics CSV
per cell per repetition plus a summary table.  ``saddlemesh verify <spec>``
replays small instances of every strategy through the independent checks
(structure validation, update-form equivalence, transformed-dynamics
residuals, zero-step contraction) and fails loudly on the first broken
invariant.

Exit codes: 0 success, 1 verification failure, 2 spec error, 3 every cell
diverged.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .engine import RunConfig, Seeds, run
from .estimators import EstimatorConfig, specialize
from .metrics import write_csv
from .problems import make_quadratic
from .strategy import StrategyKind, build_strategy, validate_assumption4
from .topology import build_mixing
from .transform import (
    build_transition,
    compute_error_vectors,
    deviation_blocks,
    verify_transformed_dynamics,
)

ESTIMATORS = ("grace", "gda", "sgda", "hb", "storm", "hc_momentum", "loopless_sarah", "page")
STRATEGIES = tuple(k.value for k in StrategyKind)
TOPOLOGIES = ("ring", "line", "complete", "metropolis_random")
_TOPOLOGY_ALIASES = {"metropolis": "metropolis_random", "random": "metropolis_random"}
_TRACKING = ("atc_gt", "semi_atc_gt", "non_atc_gt")

#: the hybrid estimator: occasional refresh, minibatch gradient-difference
#: correction, smoothed by a small momentum factor
GRACE_DEFAULTS = dict(p=0.1, beta_x=0.01, beta_y=0.01, b=5, big_B="full", b0=1000, gamma1=1.0)

SUMMARY_HEADER = ("estimator,strategy,topology,rep,status,rounds,"
                  "final_grad_x_sq,final_grad_y_sq,final_consensus_x,final_consensus_y,"
                  "oracle_total,file")

_OVERRIDE_FIELDS = {
    # spec key -> EstimatorConfig kwarg
    "beta": "beta",
    "refresh_prob": "p",
    "batch": "b",
    "big_batch": "big_B",
    "warm_batch": "b0",
    "gamma1": "gamma1",
    "gamma2": "gamma2",
    "independent_batches": "independent_batches",
}


class SpecError(Exception):
    """A spec file problem, carrying its origin and (when known) line number."""

    def __init__(self, origin: str, line: int | None, msg: str):
        self.origin, self.line, self.msg = origin, line, msg
        where = f"{origin}:{line}" if line is not None else origin
        super().__init__(f"{where}: {msg}")


@dataclass
class ExperimentSpec:
    estimators: list[str]
    strategies: list[str]
    topologies: list[str]
    agents: int
    dim_x: int
    dim_y: int
    samples: int
    nu: float
    mu_x: float
    mu_y: float
    rounds: int
    reps: int = 1
    metrics_every: int = 1
    init: str = "random"
    init_scale: float = 1.0
    q: float = 0.5
    update_form: str = "node_level"
    divergence_limit: float = 1e12
    # estimator name (or "*") -> {config kwarg: value}
    overrides: dict[str, dict] = field(default_factory=dict)


# -------------------------------------------------------------- spec parsing


def _as_int(s: str) -> int:
    return int(s, 10)


def _as_float(s: str) -> float:
    return float(s)


def _as_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {s!r}")


def _as_batch(s: str):
    if s.lower() == "full":
        return "full"
    n = int(s, 10)
    if n < 1:
        raise ValueError("batch sizes must be >= 1 or 'full'")
    return n


def _as_positive_int(s: str) -> int:
    n = int(s, 10)
    if n < 1:
        raise ValueError("must be >= 1")
    return n


def _as_name_list(valid, what, aliases=None):
    def cast(s: str):
        names = [part.strip().lower() for part in s.split(",") if part.strip()]
        if not names:
            raise ValueError(f"expected at least one {what}")
        out = []
        for n in names:
            n = (aliases or {}).get(n, n)
            if n not in valid:
                raise ValueError(f"unknown {what} {n!r}; expected one of {', '.join(valid)}")
            if n in out:
                raise ValueError(f"duplicate {what} {n!r}")
            out.append(n)
        return out
    return cast


_OVERRIDE_CASTERS = {
    "beta": _as_float,
    "refresh_prob": _as_float,
    "batch": _as_positive_int,
    "big_batch": _as_batch,
    "warm_batch": _as_batch,
    "gamma1": _as_float,
    "gamma2": _as_float,
    "independent_batches": _as_bool,
}

_KEY_CASTERS = {
    "estimators": _as_name_list(ESTIMATORS, "estimator"),
    "strategies": _as_name_list(STRATEGIES, "strategy"),
    "topologies": _as_name_list(TOPOLOGIES, "topology", _TOPOLOGY_ALIASES),
    "agents": _as_int,
    "dim_x": _as_int,
    "dim_y": _as_int,
    "samples": _as_int,
    "nu": _as_float,
    "mu_x": _as_float,
    "mu_y": _as_float,
    "rounds": _as_int,
    "reps": _as_int,
    "metrics_every": _as_int,
    "init": str,
    "init_scale": _as_float,
    "q": _as_float,
    "update_form": str,
    "divergence_limit": _as_float,
}

_REQUIRED = ("estimators", "strategies", "topologies", "agents", "dim_x", "dim_y",
             "samples", "nu", "mu_x", "mu_y", "rounds")

_RANGE_CHECKS = {
    "agents": (lambda v: v >= 2, "needs at least 2 agents"),
    "dim_x": (lambda v: v >= 1, "must be >= 1"),
    "dim_y": (lambda v: v >= 1, "must be >= 1"),
    "samples": (lambda v: v >= 1, "must be >= 1"),
    "nu": (lambda v: v > 0, "must be > 0"),
    "mu_x": (lambda v: v >= 0, "must be >= 0"),
    "mu_y": (lambda v: v >= 0, "must be >= 0"),
    "rounds": (lambda v: v >= 0, "must be >= 0"),
    "reps": (lambda v: v >= 1, "must be >= 1"),
    "metrics_every": (lambda v: v >= 1, "must be >= 1"),
    "init": (lambda v: v in ("zero", "consensus", "random"), "must be zero, consensus or random"),
    "init_scale": (lambda v: v > 0, "must be > 0"),
    "q": (lambda v: 0 < v <= 1, "must be in (0, 1]"),
    "update_form": (lambda v: v in ("general", "node_level"), "must be general or node_level"),
    "divergence_limit": (lambda v: v > 0, "must be > 0"),
}


def parse_spec_text(text: str, origin: str) -> ExperimentSpec:
    """Parse the flat key=value grammar; raises SpecError with line numbers."""
    values: dict[str, object] = {}
    lines_seen: dict[str, int] = {}
    overrides: dict[str, dict] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(origin, lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not value:
            raise SpecError(origin, lineno, f"key {key!r} has no value")

        if "." in key:
            prefix, _, fld = key.partition(".")
            if prefix not in ESTIMATORS:
                raise SpecError(origin, lineno, f"unknown estimator {prefix!r} in key {key!r}")
            if fld not in _OVERRIDE_FIELDS:
                raise SpecError(origin, lineno,
                                f"unknown estimator field {fld!r}; expected one of "
                                f"{', '.join(sorted(_OVERRIDE_FIELDS))}")
            if key in lines_seen:
                raise SpecError(origin, lineno, f"duplicate key {key!r} (first at line {lines_seen[key]})")
            lines_seen[key] = lineno
            try:
                overrides.setdefault(prefix, {})[_OVERRIDE_FIELDS[fld]] = _OVERRIDE_CASTERS[fld](value)
            except ValueError as exc:
                raise SpecError(origin, lineno, f"{key}: {exc}") from None
            continue

        if key in _OVERRIDE_FIELDS:  # bare override key applies to every estimator
            if key in lines_seen:
                raise SpecError(origin, lineno, f"duplicate key {key!r} (first at line {lines_seen[key]})")
            lines_seen[key] = lineno
            try:
                overrides.setdefault("*", {})[_OVERRIDE_FIELDS[key]] = _OVERRIDE_CASTERS[key](value)
            except ValueError as exc:
                raise SpecError(origin, lineno, f"{key}: {exc}") from None
            continue

        if key not in _KEY_CASTERS:
            raise SpecError(origin, lineno, f"unknown key {key!r} (see docs/spec-format.md)")
        if key in lines_seen:
            raise SpecError(origin, lineno, f"duplicate key {key!r} (first at line {lines_seen[key]})")
        lines_seen[key] = lineno
        try:
            values[key] = _KEY_CASTERS[key](value)
        except ValueError as exc:
            raise SpecError(origin, lineno, f"{key}: {exc}") from None

    for key in _REQUIRED:
        if key not in values:
            raise SpecError(origin, None, f"missing required key {key!r}")
    for key, (check, msg) in _RANGE_CHECKS.items():
        if key in values and not check(values[key]):
            raise SpecError(origin, lines_seen[key], f"{key} {msg}")

    return ExperimentSpec(overrides=overrides, **values)


def parse_spec_file(path: str) -> ExperimentSpec:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(path, None, f"cannot read spec: {exc.strerror or exc}") from None
    return parse_spec_text(text, path)


# ------------------------------------------------------------- built-in specs

DESK_SPEC = """\
# Desk-scale synthetic minimax comparison: the full estimator x strategy x
# topology grid at sizes that finish in about a minute.

estimators = grace, storm, loopless_sarah
strategies = ed, extra, atc_gt
topologies = metropolis_random, ring, line

agents = 8
dim_x = 16
dim_y = 16
samples = 200
nu = 10.0

mu_x = 0.001
mu_y = 0.01
rounds = 2000
reps = 3
metrics_every = 10

# shared warm start; capped at the local dataset size
warm_batch = 1000
# the occasional-refresh method runs on small fresh minibatches
loopless_sarah.batch = 5
"""

PAPER_SPEC = """\
# Full-size synthetic minimax comparison (slow; prefer the desk scale for
# interactive work).  20 agents, 100/100 dimensions, 2000 samples per agent,
# step sizes 1e-3 / 1e-2, shared 1000-sample warm start.

estimators = grace, storm, loopless_sarah
strategies = ed, extra, atc_gt
topologies = metropolis_random, ring, line

agents = 20
dim_x = 100
dim_y = 100
samples = 2000
nu = 10.0

mu_x = 0.001
mu_y = 0.01
rounds = 10000
reps = 3
metrics_every = 50

warm_batch = 1000
loopless_sarah.batch = 5
"""

_SCALES = {"desk": DESK_SPEC, "paper": PAPER_SPEC}


# ------------------------------------------------------------------ plumbing


def _derive_seed(base: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=base, spawn_key=tuple(key)).generate_state(1, np.uint64)[0])


def build_estimator(name: str, spec: ExperimentSpec) -> EstimatorConfig:
    """Resolve an estimator name plus spec overrides to a configuration."""
    merged = {**spec.overrides.get("*", {}), **spec.overrides.get(name, {})}
    if name == "grace":
        kwargs = dict(GRACE_DEFAULTS)
        beta = merged.pop("beta", None)
        if beta is not None:
            kwargs["beta_x"] = kwargs["beta_y"] = beta
        kwargs.update(merged)
        return EstimatorConfig(**kwargs)
    return specialize(name, N=spec.samples, **merged)


def _config_error(origin: str, what: str, exc: Exception) -> SpecError:
    return SpecError(origin, None, f"{what}: {exc}")


def run_experiment(spec: ExperimentSpec, out_dir: str, base_seed: int, origin: str = "<spec>") -> int:
    """Execute the grid; returns the process exit code."""
    # config-stage resolution so bad combinations fail before any work
    est_configs = {}
    for name in spec.estimators:
        try:
            est_configs[name] = build_estimator(name, spec)
        except ValueError as exc:
            raise _config_error(origin, f"estimator {name!r} config invalid", exc) from None
    if spec.samples < 2 and any(c.p < 1 for c in est_configs.values()):
        raise SpecError(origin, None, "stochastic estimators need samples >= 2")

    os.makedirs(out_dir, exist_ok=True)
    cells = list(itertools.product(spec.estimators, spec.strategies, spec.topologies))
    total = len(cells) * spec.reps
    done = 0
    statuses = []
    summary_lines = [SUMMARY_HEADER]

    for rep in range(spec.reps):
        data_seed = _derive_seed(base_seed, 0xDA7A, rep)
        topo_seed = _derive_seed(base_seed, 0x7090, rep)
        problem = make_quadratic(spec.agents, spec.dim_x, spec.dim_y, spec.samples,
                                 spec.nu, seed=data_seed)
        for ci, (est, strat, topo) in enumerate(cells):
            mixing = build_mixing(topo, spec.agents, seed=topo_seed, q=spec.q)
            seeds = Seeds(data=data_seed,
                          estimator=_derive_seed(base_seed, 0xC311, ci, rep, 1),
                          bernoulli=_derive_seed(base_seed, 0xC311, ci, rep, 2))
            cfg = RunConfig(mu_x=spec.mu_x, mu_y=spec.mu_y, T=spec.rounds,
                            strategy=strat, estimator=est_configs[est], mixing=mixing,
                            update_form=spec.update_form, seeds=seeds,
                            metrics_every=spec.metrics_every, init=spec.init,
                            init_scale=spec.init_scale,
                            divergence_limit=spec.divergence_limit)
            log = run(problem, cfg)

            fname = f"{est}_{strat}_{topo}_rep{rep}.csv"
            write_csv(os.path.join(out_dir, fname), log.rows)
            status = "DIVERGED" if log.diverged else "OK"
            statuses.append(status)
            last = log.rows[-1]
            oracle_total = sum(s.oracle_count for s in log.estimator_states)
            summary_lines.append(",".join([
                est, strat, topo, str(rep), status, str(last.round),
                repr(float(last.grad_x_sq)), repr(float(last.grad_y_sq)),
                repr(float(last.consensus_x)), repr(float(last.consensus_y)),
                str(oracle_total), fname,
            ]))
            done += 1
            print(f"[{done}/{total}] {fname}: {status} rounds={last.round} "
                  f"grad_x_sq={last.grad_x_sq:.3e}")

    with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    print(f"wrote {len(statuses)} cell runs and summary.csv to {out_dir}")

    if statuses and all(s == "DIVERGED" for s in statuses):
        print("every cell diverged", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------- verify mode


def _clamped(spec: ExperimentSpec) -> tuple[int, int, int, int, int]:
    return (min(spec.agents, 8), min(spec.dim_x, 8), min(spec.dim_y, 8),
            min(spec.rounds, 100) or 50, min(spec.samples, 64))


def run_verify(spec: ExperimentSpec, out_dir: str | None, base_seed: int) -> int:
    """Drive the oracle battery on small instances of every strategy."""
    K, dx, dy, T, N = _clamped(spec)
    problem = make_quadratic(K, dx, dy, N, spec.nu, seed=base_seed)
    failures: list[str] = []
    reports: dict[str, str] = {}

    def check(name: str, ok: bool, detail: str) -> None:
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failures.append(f"{name}: {detail}")

    for topo in spec.topologies:
        mixing = build_mixing(topo, K, seed=base_seed, q=spec.q)
        for kind in STRATEGIES:
            s = build_strategy(kind, mixing)
            rep = validate_assumption4(s)
            check(f"structure[{kind}/{topo}]", rep.ok,
                  "all residuals within tolerance" if rep.ok else "; ".join(rep.failures))

            init = "consensus" if kind in _TRACKING else "random"
            seeds = Seeds(data=base_seed, estimator=base_seed + 1, bernoulli=base_seed + 2)
            base_kwargs = dict(mu_x=spec.mu_x, mu_y=spec.mu_y, T=T, strategy=kind,
                               estimator=specialize("storm"), mixing=mixing, seeds=seeds,
                               init=init, record_trajectory=True)
            log_g = run(problem, RunConfig(update_form="general", **base_kwargs))
            log_n = run(problem, RunConfig(update_form="node_level", **base_kwargs))
            gap = 0.0
            for Xg, Xn in zip(log_g.trajectory["X"], log_n.trajectory["X"]):
                gap = max(gap, float(np.linalg.norm(Xg - Xn) / max(1.0, np.linalg.norm(Xg))))
            for Yg, Yn in zip(log_g.trajectory["Y"], log_n.trajectory["Y"]):
                gap = max(gap, float(np.linalg.norm(Yg - Yn) / max(1.0, np.linalg.norm(Yg))))
            check(f"equivalence[{kind}/{topo}]", gap <= 1e-9, f"max form gap {gap:.3e}")

            report = verify_transformed_dynamics(log_g)
            check(f"transform[{kind}/{topo}]", report.ok,
                  f"centroid {report.max_centroid_residual:.3e}, "
                  f"recursion {report.max_recursion_residual:.3e}, ||T|| {report.t_norm:.6f}")
            reports[f"verify_{kind}_{topo}.txt"] = report.to_text()

            # transformed coordinates must reconstruct the raw deviations
            fact = build_transition(log_g.strategy_set)
            tr = log_g.trajectory
            state = type("S", (), {"X": tr["X"][-1], "Y": tr["Y"][-1],
                                   "Dx": tr["Dx"][-1], "Dy": tr["Dy"][-1]})()
            err = compute_error_vectors(state, log_g.strategy_set, fact,
                                        spec.mu_x, spec.mu_y, tr["Mx"][-1], tr["My"][-1])
            sx, sy = deviation_blocks(fact, state.X, state.Y, state.Dx, state.Dy,
                                      spec.mu_x, spec.mu_y, tr["Mx"][-1], tr["My"][-1])
            scale = max(1.0, float(np.linalg.norm(sx)), float(np.linalg.norm(sy)))
            res = max(float(np.linalg.norm(fact.Qhat @ err.e_x - sx)),
                      float(np.linalg.norm(fact.Qhat @ err.e_y - sy))) / scale
            check(f"norm-identity[{kind}/{topo}]", res <= 1e-9, f"reconstruction residual {res:.3e}")

    # zero-step contraction, once per strategy on the first topology
    mixing = build_mixing(spec.topologies[0], K, seed=base_seed, q=spec.q)
    for kind in STRATEGIES:
        cfg = RunConfig(mu_x=0.0, mu_y=0.0, T=min(T, 30), strategy=kind,
                        estimator=specialize("gda"), mixing=mixing,
                        update_form="general", init="random",
                        seeds=Seeds(data=base_seed), record_trajectory=True)
        report = verify_transformed_dynamics(run(problem, cfg))
        excess = report.max_contraction_excess
        detail = f"||T|| {report.t_norm:.6f}, max excess " + (
            f"{excess:.3e}" if excess is not None else "not measured")
        check(f"contraction[{kind}]", report.ok and excess is not None and excess <= 1e-10, detail)

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for fname, text in reports.items():
            with open(os.path.join(out_dir, fname), "w") as fh:
                fh.write(text + "\n")
        print(f"wrote {len(reports)} replay reports to {out_dir}")

    if failures:
        print(f"verification FAILED: {failures[0]}", file=sys.stderr)
        return 1
    print("verification passed")
    return 0


# ------------------------------------------------------------------ argparse


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saddlemesh",
        description="Decentralized stochastic minimax experiment driver.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment grid")
    p_run.add_argument("spec", nargs="?", default=None, help="spec file (see docs/spec-format.md)")
    p_run.add_argument("--out", default="results", help="output directory (default: results)")
    p_run.add_argument("--seed", type=int, default=0, help="base seed (default: 0)")
    p_run.add_argument("--scale", choices=sorted(_SCALES), default=None,
                       help="use a built-in spec instead of a file")

    p_verify = sub.add_parser("verify", help="run the verification battery")
    p_verify.add_argument("spec", nargs="?", default=None, help="spec file sizing the checks")
    p_verify.add_argument("--out", default=None, help="directory for replay reports (optional)")
    p_verify.add_argument("--seed", type=int, default=0, help="base seed (default: 0)")
    p_verify.add_argument("--scale", choices=sorted(_SCALES), default=None,
                          help="use a built-in spec instead of a file")
    return parser


def _load_spec(args, parser) -> ExperimentSpec:
    if args.spec and args.scale:
        parser.error("give either a spec file or --scale, not both")
    if args.spec:
        return parse_spec_file(args.spec)
    scale = args.scale
    if scale is None:
        if args.command == "verify":
            scale = "desk"
        else:
            parser.error("provide a spec file or --scale {desk,paper}")
    return parse_spec_text(_SCALES[scale], f"<built-in {scale}>")


def main(argv=None) -> int:
    parser = _make_parser()
    args = parser.parse_args(argv)
    try:
        spec = _load_spec(args, parser)
        if args.command == "run":
            return run_experiment(spec, args.out, args.seed,
                                  origin=args.spec or f"<built-in {args.scale}>")
        return run_verify(spec, args.out, args.seed)
    except SpecError as exc:
        print(f"saddlemesh: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
