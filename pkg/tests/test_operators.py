import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hnd.errors import ShapeMismatch, TooLarge
from hnd.operators import (
    HypergraphOperators,
    SparseOperator,
    dense_oracle,
    divergence_apply,
    gradient_apply,
    laplacian_apply,
    laplacian_matrix,
    scaled_gradient_matrix,
)

from conftest import random_hypergraph

H0_GRAD = np.array([0.353553, -0.353553, 0.471405, -0.235702, -0.235702])


def test_gradient_h0_hand_values(h0_ops):
    g = gradient_apply(h0_ops, np.array([1.0, 0.0, 0.0]))
    assert np.allclose(g, H0_GRAD, atol=1e-6)


def test_gradient_normalized_constant_null(h0_ops):
    f = h0_ops.sqrt_d
    assert np.abs(gradient_apply(h0_ops, f)).max() <= 1e-12


def test_gradient_null_on_random_hypergraphs():
    for seed in range(10):
        ops = HypergraphOperators(random_hypergraph(seed))
        assert np.abs(ops.grad(ops.sqrt_d)).max() <= 1e-12
        L = dense_oracle(laplacian_matrix(ops))
        assert np.abs(L @ ops.sqrt_d).max() <= 1e-12


def test_gradient_linearity(h0_ops):
    f = np.array([0.3, -1.2, 2.0])
    assert np.allclose(gradient_apply(h0_ops, -3.0 * f),
                       -3.0 * gradient_apply(h0_ops, f), atol=1e-14)


def test_divergence_zero(h0_ops):
    assert np.array_equal(divergence_apply(h0_ops, np.zeros(5)), np.zeros(3))


@given(st.integers(0, 2**32))
@settings(max_examples=20, deadline=None)
def test_adjointness_random(seed):
    hg = random_hypergraph(seed)
    ops = HypergraphOperators(hg)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(ops.n)
    g = rng.standard_normal(ops.N)
    lhs = float((ops.w_pair * ops.grad(f) * g).sum())
    rhs = float((f * ops.div(g)).sum())
    assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(rhs))


def test_divergence_of_gradient_equals_laplacian(h0_ops):
    f = np.array([1.0, 0.0, 0.0])
    via_ops = divergence_apply(h0_ops, gradient_apply(h0_ops, f))
    via_matrix = dense_oracle(laplacian_matrix(h0_ops)) @ f
    assert np.allclose(via_ops, via_matrix, atol=1e-12)


def test_scaled_gradient_row_sums(h0_ops):
    G = dense_oracle(scaled_gradient_matrix(h0_ops))
    assert np.abs(G @ h0_ops.sqrt_d).max() <= 1e-12
    assert G.shape == (5, 3)


def test_factorization_h0(h0_ops):
    G = dense_oracle(scaled_gradient_matrix(h0_ops))
    L = dense_oracle(laplacian_matrix(h0_ops))
    assert np.abs(G.T @ G - L).max() <= 1e-12


def test_laplacian_h0_diagonal(h0_ops):
    L = dense_oracle(laplacian_matrix(h0_ops))
    assert np.allclose(np.diag(L), [7.0 / 12.0, 7.0 / 12.0, 2.0 / 3.0], atol=1e-12)


def test_laplacian_symmetric_psd_random():
    for seed in range(20):
        ops = HypergraphOperators(random_hypergraph(seed + 100))
        L = dense_oracle(laplacian_matrix(ops))
        assert np.abs(L - L.T).max() <= 1e-12
        eigs = np.linalg.eigvalsh(L)
        assert eigs.min() >= -1e-9
        assert eigs.max() <= 2.0 + 1e-9


def test_factorization_random():
    for seed in range(10):
        ops = HypergraphOperators(random_hypergraph(seed + 300))
        G = dense_oracle(scaled_gradient_matrix(ops))
        L = dense_oracle(laplacian_matrix(ops))
        assert np.abs(G.T @ G - L).max() <= 1e-12


def test_matrix_free_matches_matrices():
    for seed in range(5):
        ops = HypergraphOperators(random_hypergraph(seed + 500))
        rng = np.random.default_rng(seed)
        f = rng.standard_normal((ops.n, 3))
        g = rng.standard_normal((ops.N, 3))
        G = dense_oracle(scaled_gradient_matrix(ops))
        assert np.allclose(ops.grad_scaled(f), G @ f, atol=1e-12)
        assert np.allclose(ops.grad_scaled_t(g), G.T @ g, atol=1e-12)
        # pinned scaling: div(g) = Dv^{-1/2} (B-C)^T S g = G^T S^{1/2} g
        assert np.allclose(divergence_apply(ops, g),
                           G.T @ (np.sqrt(ops.w_pair)[:, None] * g), atol=1e-12)
        assert np.allclose(laplacian_apply(ops, f), G.T @ (G @ f), atol=1e-12)


def test_shape_mismatch_errors(h0_ops):
    with pytest.raises(ShapeMismatch):
        gradient_apply(h0_ops, np.zeros(4))
    with pytest.raises(ShapeMismatch):
        divergence_apply(h0_ops, np.zeros(6))


def test_sparse_identity_round_trip():
    eye = SparseOperator.from_dense(np.eye(3))
    assert np.array_equal(dense_oracle(eye), np.eye(3))
    twice = SparseOperator.from_dense(dense_oracle(eye))
    assert np.array_equal(dense_oracle(twice), np.eye(3))


def test_sparse_deduplicates_and_sorts():
    op = SparseOperator.from_triples((2, 2), [1, 0, 1], [0, 1, 0], [2.0, 3.0, -1.0])
    assert op.row.tolist() == [0, 1]
    assert op.col.tolist() == [1, 0]
    assert op.val.tolist() == [3.0, 1.0]


def test_sparse_drops_explicit_zeros():
    op = SparseOperator.from_triples((2, 2), [0, 0], [0, 0], [1.0, -1.0])
    assert op.val.size == 0


def test_sparse_apply_matches_dense(h0_ops):
    G = scaled_gradient_matrix(h0_ops)
    x = np.array([[1.0, 2.0], [0.5, -1.0], [0.0, 3.0]])
    assert np.allclose(G.apply(x), dense_oracle(G) @ x, atol=1e-14)
    assert np.allclose(dense_oracle(G.transpose()), dense_oracle(G).T, atol=0)


def test_dense_oracle_symmetry_h0(h0_ops):
    L = dense_oracle(laplacian_matrix(h0_ops))
    assert np.array_equal(L, L.T)


def test_dense_oracle_too_large():
    op = SparseOperator.from_triples((2000, 2000), [0], [0], [1.0])
    with pytest.raises(TooLarge):
        dense_oracle(op)


def test_matrix_market_export(h0_ops):
    from scipy.io import mmread

    L = laplacian_matrix(h0_ops)
    text = L.to_matrix_market()
    assert text.startswith("%%MatrixMarket matrix coordinate real general")
    parsed = mmread(io.StringIO(text)).toarray()
    assert np.allclose(parsed, dense_oracle(L), atol=0)
