"""Metrics rows and the CSV contract."""

import numpy as np
import pytest

from saddlemesh.engine import RunConfig, run
from saddlemesh.estimators import specialize
from saddlemesh.metrics import (
    CSV_HEADER,
    MetricsRow,
    first_stationary_round,
    read_csv,
    record,
    row_as_list,
    write_csv,
)
from saddlemesh.problems import make_quadratic
from saddlemesh.topology import build_mixing


def test_header_is_the_frozen_contract():
    assert CSV_HEADER == ("round,grad_x_sq,grad_y_sq,consensus_x,consensus_y,"
                          "oracle_max,oracle_mean,pi,wallclock_us")


def test_mirrored_iterates_double_the_squared_norm():
    # two agents at x and -x: centroid 0, consensus energy 2 ||x||^2
    problem = make_quadratic(2, 3, 2, 10, 4.0, seed=0)
    x = np.array([1.0, -2.0, 0.5])
    X = np.vstack([x, -x])
    Y = np.zeros((2, 2))
    row = record(problem, X, Y, [5, 7], round_index=3, pi=0)
    assert row.consensus_x == pytest.approx(2 * float(x @ x), rel=1e-14)
    assert row.consensus_y == 0.0
    assert row.oracle_max == 7
    assert row.oracle_mean == 6.0
    assert row.round == 3 and row.pi == 0 and row.wallclock_us == 0


def test_gradients_vanish_at_the_saddle():
    problem = make_quadratic(4, 3, 2, 20, 5.0, seed=2)
    xs, ys = problem.saddle_point()
    X = np.tile(xs, (4, 1))
    Y = np.tile(ys, (4, 1))
    row = record(problem, X, Y, [1] * 4, 0, 1)
    assert row.grad_x_sq <= 1e-16
    assert row.grad_y_sq <= 1e-16
    assert row.consensus_x == 0.0


def test_gradient_is_evaluated_at_the_centroid_not_per_agent():
    problem = make_quadratic(2, 2, 2, 10, 4.0, seed=1)
    xs, ys = problem.saddle_point()
    spread = np.array([[1.0, 0.0], [-1.0, 0.0]])
    row = record(problem, np.tile(xs, (2, 1)) + spread, np.tile(ys, (2, 1)), [1, 1], 0, 1)
    # centroid sits exactly at the saddle even though no agent does
    assert row.grad_x_sq <= 1e-16
    assert row.consensus_x == pytest.approx(2.0, rel=1e-14)


def test_csv_round_trip_is_bit_exact(tmp_path):
    problem = make_quadratic(3, 4, 3, 15, 4.0, seed=5)
    cfg = RunConfig(mu_x=1e-3, mu_y=5e-3, T=12, strategy="ed",
                    estimator=specialize("storm"), mixing=build_mixing("ring", 3))
    rows = run(problem, cfg).rows
    assert len(rows) == 13
    path = tmp_path / "out.csv"
    write_csv(str(path), rows)
    assert read_csv(str(path)) == rows


def test_round_trip_survives_ugly_floats(tmp_path):
    rows = [MetricsRow(0, 1 / 3, 2.5e-17, 0.1 + 0.2, 1e300, 9, 7.5, 1, 12345)]
    path = tmp_path / "ugly.csv"
    write_csv(str(path), rows)
    assert read_csv(str(path)) == rows


def test_reader_rejects_wrong_header_naming_the_file(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("round,grad_x_sq\n0,1.0\n")
    with pytest.raises(ValueError, match="bad.csv.*header mismatch"):
        read_csv(str(path))


def test_reader_rejects_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError, match="empty"):
        read_csv(str(path))


def test_reader_reports_short_row_with_line_number(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text(CSV_HEADER + "\n0,1.0,1.0\n")
    with pytest.raises(ValueError, match="short.csv:2"):
        read_csv(str(path))


def test_stationarity_detector_matches_brute_force():
    rng = np.random.default_rng(8)
    rows = [MetricsRow(r, float(g), float(g) / 2, 0.0, 0.0, 1, 1.0, 0, 0)
            for r, g in enumerate(rng.uniform(0.0, 2.0, size=40))]
    for eps_sq in (0.05, 0.5, 1.5, 3.0):
        expected = None
        for r in rows:
            if r.grad_x_sq <= eps_sq and r.grad_y_sq <= eps_sq:
                expected = r.round
                break
        assert first_stationary_round(rows, eps_sq) == expected
    assert first_stationary_round(rows, -1.0) is None


def test_row_as_list_follows_header_order():
    row = MetricsRow(1, 2.0, 3.0, 4.0, 5.0, 6, 7.0, 1, 8)
    assert row_as_list(row) == [1, 2.0, 3.0, 4.0, 5.0, 6, 7.0, 1, 8]
    assert [f for f in CSV_HEADER.split(",")] == [
        "round", "grad_x_sq", "grad_y_sq", "consensus_x", "consensus_y",
        "oracle_max", "oracle_mean", "pi", "wallclock_us"]
