"""Graph construction and Metropolis mixing-matrix tests.

Hand-computed oracles come first (small rings/lines where the Metropolis rule
can be evaluated on paper), followed by property tests over the whole family.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from saddlemesh.topology import (
    Graph,
    build_graph,
    build_mixing,
    from_matrix,
    metropolis_weights,
    spectral_data,
)

# ---------------------------------------------------------------- oracles


def test_ring3_is_uniform_third():
    # degrees all 2 -> each edge weight 1/(1+2)=1/3, diagonal 1-2/3=1/3
    m = build_mixing("ring", 3)
    assert_allclose(m.w, np.full((3, 3), 1.0 / 3.0), rtol=0, atol=1e-15)


def test_line2_is_half_projector():
    m = build_mixing("line", 2)
    assert_allclose(m.w, np.array([[0.5, 0.5], [0.5, 0.5]]), rtol=0, atol=1e-15)
    assert_allclose(np.sort(m.eigenvalues), [0.0, 1.0], atol=1e-14)
    assert m.lambda_mix == pytest.approx(0.0, abs=1e-14)


def test_ring5_circulant_spectrum():
    # circulant(1/3,1/3,0,0,1/3): eigenvalues (1+2cos(2*pi*j/5))/3
    m = build_mixing("ring", 5)
    expected = np.sort([(1.0 + 2.0 * np.cos(2.0 * np.pi * j / 5.0)) / 3.0 for j in range(5)])
    assert_allclose(np.sort(m.eigenvalues), expected, atol=1e-12)
    assert m.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    assert m.lambda_mix == pytest.approx(0.5393446629166316, abs=1e-12)


def test_line3_hand_weights():
    # degrees (1,2,1): end edges get 1/(1+2)=1/3, diagonals 2/3, 1/3, 2/3
    m = build_mixing("line", 3)
    expected = np.array([[2 / 3, 1 / 3, 0.0], [1 / 3, 1 / 3, 1 / 3], [0.0, 1 / 3, 2 / 3]])
    assert_allclose(m.w, expected, atol=1e-15)


@pytest.mark.parametrize("K", [2, 4, 7])
def test_complete_graph_is_uniform_averaging(K):
    m = build_mixing("complete", K)
    assert_allclose(m.w, np.full((K, K), 1.0 / K), atol=1e-14)
    # uniform averaging kills everything off the consensus line
    assert m.lambda_mix == pytest.approx(0.0, abs=1e-12)


def test_even_ring_touches_minus_one_third():
    # degree-2 circulant: smallest eigenvalue (1+2cos(pi))/3 = -1/3 exactly
    for K in (4, 8, 16):
        m = build_mixing("ring", K)
        assert m.eigenvalues[-1] == pytest.approx(-1.0 / 3.0, abs=1e-12)


# ---------------------------------------------------------------- graphs


def test_graph_families_shapes():
    g = build_graph("ring", 6)
    assert len(g.edges) == 6 and all(len(g.neighbors(i)) == 2 for i in range(6))
    g = build_graph("line", 6)
    assert len(g.edges) == 5 and g.degrees.tolist() == [1, 2, 2, 2, 2, 1]
    g = build_graph("complete", 6)
    assert len(g.edges) == 15


def test_random_graph_is_seeded_and_connected():
    g1 = build_graph("metropolis_random", 12, seed=3, q=0.3)
    g2 = build_graph("metropolis_random", 12, seed=3, q=0.3)
    assert g1.edges == g2.edges
    assert g1.is_connected()
    g3 = build_graph("metropolis_random", 12, seed=4, q=0.3)
    assert g3.edges != g1.edges  # overwhelmingly likely, and frozen by the seed


def test_random_graph_q_one_is_complete():
    g = build_graph("metropolis_random", 5, seed=0, q=1.0)
    assert len(g.edges) == 10


def test_rejects_bad_inputs():
    with pytest.raises(ValueError, match="at least 2"):
        build_graph("ring", 1)
    with pytest.raises(ValueError, match="unknown graph kind"):
        build_graph("torus", 4)
    with pytest.raises(ValueError, match="edge probability"):
        build_graph("metropolis_random", 4, q=0.0)
    with pytest.raises(ValueError, match="not connected"):
        Graph(4, frozenset({(0, 1), (2, 3)}))
    with pytest.raises(ValueError, match="out of range"):
        Graph(3, frozenset({(0, 5)}))


def test_disconnected_random_exhausts_retries():
    # q so small that 30 nodes virtually never connect -> clean failure
    with pytest.raises(ValueError, match="stayed disconnected"):
        build_graph("metropolis_random", 30, seed=0, q=1e-6, max_retries=5)


# ---------------------------------------------------------------- validation


def test_from_matrix_rejects_nonprimitive():
    # swap matrix: doubly stochastic but eigenvalue -1
    with pytest.raises(ValueError, match="not primitive"):
        from_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_from_matrix_rejects_asymmetric_and_nonstochastic():
    with pytest.raises(ValueError, match="not symmetric"):
        from_matrix(np.array([[0.5, 0.4], [0.5, 0.6]]))
    with pytest.raises(ValueError, match="not doubly stochastic"):
        from_matrix(np.array([[0.9, 0.2], [0.2, 0.9]]))


def test_sparsity_pattern_is_audited():
    g = build_graph("line", 3)
    uniform = np.full((3, 3), 1.0 / 3.0)  # has a (0,2) entry the line lacks
    with pytest.raises(ValueError, match="sparsity"):
        from_matrix(uniform, graph=g)


# ---------------------------------------------------------------- properties

graph_cases = st.one_of(
    st.tuples(st.just("ring"), st.integers(2, 12), st.just(0)),
    st.tuples(st.just("line"), st.integers(2, 12), st.just(0)),
    st.tuples(st.just("complete"), st.integers(2, 9), st.just(0)),
    st.tuples(st.just("metropolis_random"), st.integers(3, 10), st.integers(0, 50)),
)


@settings(max_examples=60, deadline=None)
@given(graph_cases)
def test_mixing_matrix_invariants(case):
    kind, K, seed = case
    m = build_mixing(kind, K, seed=seed)
    ones = np.ones(K)
    assert_allclose(m.w, m.w.T, atol=1e-12)
    assert_allclose(m.w @ ones, ones, atol=1e-12)
    assert np.all(m.w >= 0.0)
    assert 0.0 <= m.lambda_mix < 1.0
    # spectral contract: exact consensus direction, orthogonality, rebuild
    U, vals, lam_mix, U_hat, lam_hat = spectral_data(m)
    assert_allclose(U[:, 0], ones / np.sqrt(K), rtol=0, atol=0)
    assert_allclose(U.T @ U, np.eye(K), atol=1e-10)
    assert_allclose(U @ np.diag(vals) @ U.T, m.w, atol=1e-10)
    assert vals[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(vals) <= 1e-12)  # descending
    assert U_hat.shape == (K, K - 1) and lam_hat.shape == (K - 1,)
    assert lam_mix == pytest.approx(np.max(np.abs(lam_hat)), abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 10))
def test_metropolis_weight_rule(K):
    g = build_graph("line", K)
    m = metropolis_weights(g)
    deg = g.degrees
    for i, j in g.edges:
        assert m.w[i, j] == pytest.approx(1.0 / (1.0 + max(deg[i], deg[j])), abs=1e-15)


def test_spectral_data_accepts_raw_matrix():
    # ring K=4 spectrum: {1, 1/3, 1/3, -1/3} -> lambda_mix = 1/3
    w = build_mixing("ring", 4).w
    U, vals, lam, _, _ = spectral_data(w)
    assert_allclose(U @ np.diag(vals) @ U.T, w, atol=1e-10)
    assert lam == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert_allclose(np.sort(vals), [-1 / 3, 1 / 3, 1 / 3, 1.0], atol=1e-12)
