"""Hypergraph gradient, divergence, and Laplacian.

The raw operator pair follows the degree-normalized definitions

    (grad f)(e, v) = f(v)/sqrt(d_v) - (1/|e|) sum_{u in e} f(u)/sqrt(d_u)
    (div g)(v)     = sum_{e : v in e} (w_e/sqrt(d_v)) (g(e,v) - (1/|e|) sum_{u in e} g(e,u))

which are adjoint under the node inner product and the w_e-weighted
pair inner product, so div(grad(.)) is the normalized hypergraph
Laplacian  L = I - Dv^{-1/2} H We De^{-1} H^T Dv^{-1/2}.

The scaled gradient matrix  G = S^{1/2} (B - C) Dv^{-1/2}  (S the
per-pair diagonal of edge weights, B the pair-to-node selector, C the
pair-to-edge-mean averager) satisfies G^T G = L, which puts the
diffusion right-hand side in the symmetric form -G^T A G x. The raw
operators relate to it by  grad = S^{-1/2} G  and  div(g) = G^T S^{1/2} g.

``HypergraphOperators`` holds the precomputed index arrays and applies
all operators matrix-free with deterministic reduction order (sorted
segment sums); ``SparseOperator`` provides the explicit coordinate-
format matrices used by test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, TooLarge
from .hypergraph import Degrees, Hypergraph, PairIndex, degrees, pair_index

DENSE_LIMIT = 10**6


class HypergraphOperators:
    """Matrix-free hypergraph calculus over a fixed hypergraph.

    Immutable after construction; all applications are pure and safe to
    share across threads.
    """

    def __init__(self, hg: Hypergraph):
        self.hypergraph = hg
        self.pairs: PairIndex = pair_index(hg)
        self.deg: Degrees = degrees(hg)
        self.n = hg.n
        self.m = hg.m
        self.N = self.pairs.N

        self.pair_edge = self.pairs.edge_id
        self.pair_node = self.pairs.node_id
        sizes = self.deg.edge_size
        self.edge_ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.inv_size_pair = np.repeat(1.0 / sizes, sizes)
        self.w_edge = np.asarray(hg.weights, dtype=np.float64)
        self.w_pair = np.repeat(self.w_edge, sizes)
        self.sqrt_w_pair = np.sqrt(self.w_pair)
        self.sqrt_d = np.sqrt(self.deg.d_v)
        self.inv_sqrt_d = 1.0 / self.sqrt_d

        # node-major view of the pair list: within a node, edge order
        self.node_order = np.argsort(self.pair_node, kind="stable")
        self.incidence_count = np.bincount(self.pair_node, minlength=self.n)
        self.node_ptr = np.concatenate([[0], np.cumsum(self.incidence_count)]).astype(np.int64)

    # ---- segment reductions (deterministic order) ----

    def edge_sum(self, pair_values: np.ndarray) -> np.ndarray:
        """Sum pair-aligned values within each edge block."""
        return np.add.reduceat(pair_values, self.edge_ptr[:-1], axis=0)

    def node_sum(self, pair_values: np.ndarray) -> np.ndarray:
        """Sum pair-aligned values over each node's incident pairs."""
        return np.add.reduceat(pair_values[self.node_order], self.node_ptr[:-1], axis=0)

    # ---- raw operators ----

    def grad(self, f: np.ndarray) -> np.ndarray:
        """Deviation of each member from its edge's normalized mean."""
        s = f * self.inv_sqrt_d[:, None] if f.ndim == 2 else f * self.inv_sqrt_d
        gathered = s[self.pair_node]
        mean = self.edge_sum(gathered)
        mean *= (1.0 / self.deg.edge_size)[:, None] if f.ndim == 2 else 1.0 / self.deg.edge_size
        return gathered - mean[self.pair_edge]

    def div(self, g: np.ndarray) -> np.ndarray:
        """Adjoint of grad: weighted net flux imbalance per node."""
        z = g * (self.w_pair[:, None] if g.ndim == 2 else self.w_pair)
        return self._collect(z, g.ndim)

    # ---- scaled operators (G and its transpose) ----

    def grad_scaled(self, f: np.ndarray) -> np.ndarray:
        """Apply G = S^{1/2} (B - C) Dv^{-1/2}."""
        out = self.grad(f)
        out *= self.sqrt_w_pair[:, None] if f.ndim == 2 else self.sqrt_w_pair
        return out

    def grad_scaled_t(self, y: np.ndarray) -> np.ndarray:
        """Apply G^T."""
        z = y * (self.sqrt_w_pair[:, None] if y.ndim == 2 else self.sqrt_w_pair)
        return self._collect(z, y.ndim)

    def _collect(self, z: np.ndarray, ndim: int) -> np.ndarray:
        """Dv^{-1/2} (B - C)^T z for pair-aligned z."""
        edge_tot = self.edge_sum(z)
        averaged = edge_tot[self.pair_edge] * (
            self.inv_size_pair[:, None] if ndim == 2 else self.inv_size_pair
        )
        out = self.node_sum(z - averaged)
        out *= self.inv_sqrt_d[:, None] if ndim == 2 else self.inv_sqrt_d
        return out

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Apply L = G^T G."""
        return self.grad_scaled_t(self.grad_scaled(f))

    def quad_apply(self, a: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Apply G^T diag(a) G for a positive pair-aligned diagonal a."""
        y = self.grad_scaled(f)
        y *= a[:, None] if f.ndim == 2 else a
        return self.grad_scaled_t(y)


def as_operators(hg) -> HypergraphOperators:
    """Coerce a Hypergraph to its operator workspace."""
    return hg if isinstance(hg, HypergraphOperators) else HypergraphOperators(hg)


def _check_node_signal(ops: HypergraphOperators, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != ops.n or f.ndim > 2:
        raise ShapeMismatch(f"node signal must be ({ops.n},) or ({ops.n}, d), got {f.shape}")
    return f


def _check_pair_signal(ops: HypergraphOperators, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.shape[0] != ops.N or g.ndim > 2:
        raise ShapeMismatch(f"pair signal must be ({ops.N},) or ({ops.N}, d), got {g.shape}")
    return g


def gradient_apply(hg, f: np.ndarray) -> np.ndarray:
    """Hypergraph gradient of a node signal, in pair-index order."""
    ops = as_operators(hg)
    return ops.grad(_check_node_signal(ops, f))


def divergence_apply(hg, g: np.ndarray) -> np.ndarray:
    """Hypergraph divergence of a pair signal."""
    ops = as_operators(hg)
    return ops.div(_check_pair_signal(ops, g))


def laplacian_apply(hg, f: np.ndarray) -> np.ndarray:
    """div(grad(f)), equal to G^T G f."""
    ops = as_operators(hg)
    return ops.laplacian(_check_node_signal(ops, f))


@dataclass(frozen=True)
class SparseOperator:
    """Coordinate-format sparse matrix with canonical entry order.

    Entries are sorted by (row, col), duplicate coordinates summed, and
    explicit zeros dropped, so equal operators have identical storage.
    """

    shape: tuple[int, int]
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray

    @classmethod
    def from_triples(cls, shape, row, col, val) -> "SparseOperator":
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        val = np.asarray(val, dtype=np.float64)
        if row.size and (row.min() < 0 or row.max() >= shape[0]):
            raise ShapeMismatch("row index out of range")
        if col.size and (col.min() < 0 or col.max() >= shape[1]):
            raise ShapeMismatch("col index out of range")
        key = row * shape[1] + col
        order = np.argsort(key, kind="stable")
        key = key[order]
        val = val[order]
        uniq, starts = np.unique(key, return_index=True)
        summed = np.add.reduceat(val, starts) if val.size else val
        keep = summed != 0.0
        uniq, summed = uniq[keep], summed[keep]
        return cls(
            shape=(int(shape[0]), int(shape[1])),
            row=(uniq // shape[1]).astype(np.int64),
            col=(uniq % shape[1]).astype(np.int64),
            val=summed,
        )

    @classmethod
    def from_dense(cls, mat: np.ndarray) -> "SparseOperator":
        mat = np.asarray(mat, dtype=np.float64)
        r, c = np.nonzero(mat)
        return cls.from_triples(mat.shape, r, c, mat[r, c])

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Row-streaming product with a vector or matrix."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.shape[1]:
            raise ShapeMismatch(f"operand rows {x.shape[0]} != cols {self.shape[1]}")
        out_shape = (self.shape[0],) + x.shape[1:]
        out = np.zeros(out_shape)
        contrib = self.val[:, None] * x[self.col] if x.ndim == 2 else self.val * x[self.col]
        np.add.at(out, self.row, contrib)
        return out

    def transpose(self) -> "SparseOperator":
        return SparseOperator.from_triples(
            (self.shape[1], self.shape[0]), self.col, self.row, self.val
        )

    def to_dense(self) -> np.ndarray:
        if self.shape[0] * self.shape[1] > DENSE_LIMIT:
            raise TooLarge(f"dense form would hold {self.shape[0] * self.shape[1]} entries")
        out = np.zeros(self.shape)
        out[self.row, self.col] = self.val
        return out

    def to_matrix_market(self) -> str:
        """MatrixMarket coordinate text (1-based indices)."""
        lines = ["%%MatrixMarket matrix coordinate real general"]
        lines.append(f"{self.shape[0]} {self.shape[1]} {self.val.size}")
        for r, c, v in zip(self.row, self.col, self.val):
            lines.append(f"{int(r) + 1} {int(c) + 1} {float(v)!r}")
        return "\n".join(lines) + "\n"


def dense_oracle(op: SparseOperator) -> np.ndarray:
    """Exact dense materialization for small test oracles."""
    return op.to_dense()


def scaled_gradient_matrix(hg) -> SparseOperator:
    """Explicit N x n matrix of G = S^{1/2} (B - C) Dv^{-1/2}."""
    ops = as_operators(hg)
    rows, cols, vals = [], [], []
    for e, members in enumerate(ops.hypergraph.edges):
        k = len(members)
        sw = np.sqrt(ops.w_edge[e])
        base = ops.edge_ptr[e]
        for j, v in enumerate(members):
            p = base + j
            for u in members:
                coef = -sw / (k * ops.sqrt_d[u])
                if u == v:
                    coef += sw / ops.sqrt_d[v]
                rows.append(p)
                cols.append(u)
                vals.append(coef)
    return SparseOperator.from_triples((ops.N, ops.n), rows, cols, vals)


def laplacian_matrix(hg) -> SparseOperator:
    """Closed-form Laplacian I - Dv^{-1/2} H We De^{-1} H^T Dv^{-1/2}."""
    ops = as_operators(hg)
    rows, cols, vals = [], [], []
    for e, members in enumerate(ops.hypergraph.edges):
        coef = ops.w_edge[e] / len(members)
        for v in members:
            for u in members:
                rows.append(v)
                cols.append(u)
                vals.append(-coef / (ops.sqrt_d[v] * ops.sqrt_d[u]))
    rows.extend(range(ops.n))
    cols.extend(range(ops.n))
    vals.extend([1.0] * ops.n)
    return SparseOperator.from_triples((ops.n, ops.n), rows, cols, vals)
