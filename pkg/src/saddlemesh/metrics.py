"""Per-round evaluation quantities and their CSV round-trip.

Every recorded row evaluates the EXACT deterministic global gradient at the
network centroid — never the stochastic estimate — so convergence curves are
noise-free.  The CSV schema is a stable external contract; floats are written
with ``repr`` (shortest round-trip form) so a read-back reproduces the row
bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

from .problems import MinimaxProblem

CSV_HEADER = "round,grad_x_sq,grad_y_sq,consensus_x,consensus_y,oracle_max,oracle_mean,pi,wallclock_us"

_COLUMNS = CSV_HEADER.split(",")


@dataclass(frozen=True)
class MetricsRow:
    round: int
    grad_x_sq: float
    grad_y_sq: float
    consensus_x: float
    consensus_y: float
    oracle_max: int
    oracle_mean: float
    pi: int
    wallclock_us: int


def record(
    problem: MinimaxProblem,
    X: np.ndarray,
    Y: np.ndarray,
    oracle_counts: list[int],
    round_index: int,
    pi: int,
    wallclock_us: int = 0,
) -> MetricsRow:
    """Evaluate one metrics row from stacked iterates ``X (K,d1)``, ``Y (K,d2)``."""
    x_c = X.mean(axis=0)
    y_c = Y.mean(axis=0)
    gx, gy = problem.global_grad(x_c, y_c)
    dev_x = X - x_c
    dev_y = Y - y_c
    counts = np.asarray(oracle_counts)
    return MetricsRow(
        round=int(round_index),
        grad_x_sq=float(gx @ gx),
        grad_y_sq=float(gy @ gy),
        consensus_x=float(np.sum(dev_x * dev_x)),
        consensus_y=float(np.sum(dev_y * dev_y)),
        oracle_max=int(counts.max()),
        oracle_mean=float(counts.mean()),
        pi=int(pi),
        wallclock_us=int(wallclock_us),
    )


def write_csv(path: str, rows: list[MetricsRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        w = csv.writer(fh)
        for r in rows:
            w.writerow([
                r.round,
                repr(float(r.grad_x_sq)),
                repr(float(r.grad_y_sq)),
                repr(float(r.consensus_x)),
                repr(float(r.consensus_y)),
                r.oracle_max,
                repr(float(r.oracle_mean)),
                r.pi,
                r.wallclock_us,
            ])


def read_csv(path: str) -> list[MetricsRow]:
    """Parse a metrics CSV, insisting on the exact canonical header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header {CSV_HEADER!r}") from None
        if header != _COLUMNS:
            raise ValueError(f"{path}: header mismatch; expected {CSV_HEADER!r}, got {','.join(header)!r}")
        out = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(_COLUMNS):
                raise ValueError(f"{path}:{line_no}: expected {len(_COLUMNS)} fields, got {len(row)}")
            out.append(MetricsRow(
                round=int(row[0]),
                grad_x_sq=float(row[1]),
                grad_y_sq=float(row[2]),
                consensus_x=float(row[3]),
                consensus_y=float(row[4]),
                oracle_max=int(row[5]),
                oracle_mean=float(row[6]),
                pi=int(row[7]),
                wallclock_us=int(row[8]),
            ))
    return out


def first_stationary_round(rows: list[MetricsRow], eps_sq: float) -> int | None:
    """First recorded round where both squared gradient norms are <= eps_sq."""
    for r in rows:
        if r.grad_x_sq <= eps_sq and r.grad_y_sq <= eps_sq:
            return r.round
    return None


def row_as_list(r: MetricsRow) -> list:
    return [getattr(r, f.name) for f in fields(MetricsRow)]
