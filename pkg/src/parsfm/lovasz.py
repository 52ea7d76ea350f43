"""Lovász extension: chain decompositions, values, subgradients, rounding.

Sorting a point ``x`` in decreasing order (ties broken by ascending index)
gives a permutation ``pi`` and the chain of prefix sets
``S_j = {pi[0], ..., pi[j-1]}``.  One batch of ``n`` queries for
``f(S_1), ..., f(S_n)`` (``f(S_0) = f(empty) = 0`` is free) yields the
extension value, a subgradient, and the best prefix set at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from parsfm.oracle import WORD_BITS, OracleLedger, evaluate_batch


@dataclass(frozen=True)
class ChainDecomposition:
    perm: np.ndarray            # pi, 0-based element indices
    prefix_values: np.ndarray   # f(S_0), ..., f(S_n)

    @property
    def n(self) -> int:
        return len(self.perm)

    def prefix_set(self, j: int) -> int:
        mask = 0
        for i in self.perm[:j]:
            mask |= 1 << int(i)
        return mask


@dataclass(frozen=True)
class ChainBatch:
    """Chain decompositions of ``k`` points, stored row-wise."""

    perms: np.ndarray           # (k, n)
    prefix_values: np.ndarray   # (k, n + 1)

    def __len__(self) -> int:
        return self.perms.shape[0]

    def __getitem__(self, row: int) -> ChainDecomposition:
        return ChainDecomposition(self.perms[row], self.prefix_values[row])

    def values(self, X: np.ndarray) -> np.ndarray:
        """Extension values at the rows of ``X`` (the points that were decomposed)."""
        g = self.subgradients()
        return np.einsum("ij,ij->i", g, X)

    def subgradients(self) -> np.ndarray:
        k, n = self.perms.shape
        g = np.empty((k, n), dtype=float)
        np.put_along_axis(g, self.perms, np.diff(self.prefix_values, axis=1), axis=1)
        return g


def sort_order(X: np.ndarray) -> np.ndarray:
    """Row-wise decreasing order with ties broken by ascending index."""
    return np.argsort(-np.asarray(X, dtype=float), axis=-1, kind="stable")


def _prefix_masks(perms: np.ndarray, n: int) -> np.ndarray:
    if n <= WORD_BITS:
        return np.bitwise_or.accumulate(np.left_shift(np.int64(1), perms.astype(np.int64)), axis=1)
    bits = np.vectorize(lambda i: 1 << int(i), otypes=[object])(perms)
    return np.bitwise_or.accumulate(bits, axis=1)


def chain_decompose_many(X: np.ndarray, instance, ledger: OracleLedger) -> ChainBatch:
    """Decompose every row of ``X`` using a single round of ``k * n`` queries."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k, n = X.shape
    if n != instance.n:
        raise ValueError(f"points have dimension {n}, instance has n={instance.n}")
    perms = sort_order(X)
    masks = _prefix_masks(perms, n)
    vals = evaluate_batch(instance, masks.ravel(), ledger).reshape(k, n)
    prefix = np.zeros((k, n + 1), dtype=vals.dtype if vals.dtype != object else float)
    prefix[:, 1:] = vals
    return ChainBatch(perms, prefix)


def chain_decompose(x: np.ndarray, instance, ledger: OracleLedger) -> ChainDecomposition:
    """Chain decomposition of one point: one round of ``n`` queries."""
    return chain_decompose_many(np.asarray(x, dtype=float)[None, :], instance, ledger)[0]


def lovasz_value(decomp: ChainDecomposition, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    steps = np.diff(decomp.prefix_values)
    return float(np.dot(x[decomp.perm], steps))


def lovasz_subgradient(decomp: ChainDecomposition) -> np.ndarray:
    g = np.empty(decomp.n, dtype=float)
    g[decomp.perm] = np.diff(decomp.prefix_values)
    return g


def threshold_round(decomp: ChainDecomposition) -> tuple[int, int]:
    """Best prefix set of the chain and its value; smallest ``j`` wins ties.

    For ``x`` in the unit cube the value is at most the extension value at
    ``x``.  No queries are issued.
    """
    j = int(np.argmin(decomp.prefix_values))
    value = decomp.prefix_values[j]
    return decomp.prefix_set(j), value.item() if hasattr(value, "item") else value
