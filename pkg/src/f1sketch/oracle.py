"""Exact ground truth for desk-scale verification.

Keeps the full frequency vector and recomputes every derived quantity from
scratch on each query, in exact integer arithmetic wherever the moment
order allows. The point of this module is trust, not speed; nothing here
is shared with the sketch code paths beyond the hash/variate objects handed
in explicitly for cell replay.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class TailBoundCheck(NamedTuple):
    holds: bool
    lhs: float
    rhs: float


class ExactState:
    """Dense exact frequency vector for domains up to about a million items."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("domain size must be >= 1")
        self.n = n
        self.frequencies = np.zeros(n, dtype=np.int64)

    def update(self, i: int, v: int) -> None:
        if not 1 <= i <= self.n:
            raise ValueError(f"item {i} outside domain [1, {self.n}]")
        self.frequencies[i - 1] += v

    def update_many(self, items, deltas) -> None:
        items = np.asarray(items, dtype=np.int64)
        if items.size and (items.min() < 1 or items.max() > self.n):
            raise ValueError("item outside domain")
        np.add.at(self.frequencies, items - 1, np.asarray(deltas, dtype=np.int64))

    @classmethod
    def from_frequencies(cls, freqs) -> "ExactState":
        state = cls(len(freqs))
        state.frequencies = np.asarray(freqs, dtype=np.int64).copy()
        return state

    # -- exact quantities ----------------------------------------------------

    def _sorted_magnitudes(self) -> list[int]:
        """|f| in the residual order: larger magnitude first, ties to the
        smaller item index."""
        mags = np.abs(self.frequencies)
        order = np.lexsort((np.arange(self.n), -mags))
        return [int(m) for m in mags[order]]

    def moment(self, p: float) -> float:
        """F_p = sum |f_i|^p; exact integer arithmetic for integral p."""
        if p <= 0:
            raise ValueError("moment order must be positive")
        mags = np.abs(self.frequencies)
        if float(p).is_integer():
            return sum(int(m) ** int(p) for m in mags if m)
        return float((mags[mags > 0].astype(float) ** p).sum())

    def residual(self, p: float, k: int) -> float:
        """F_p after dropping the k largest magnitudes."""
        if not 0 <= k <= self.n:
            raise ValueError("need 0 <= k <= n")
        tail = self._sorted_magnitudes()[k:]
        if float(p).is_integer():
            return sum(m ** int(p) for m in tail if m)
        return float(sum(float(m) ** p for m in tail if m))

    def residual_of_set(self, p: float, removed) -> float:
        """F_p over everything outside an explicit item set."""
        mask = np.ones(self.n, dtype=bool)
        for i in removed:
            mask[int(i) - 1] = False
        mags = np.abs(self.frequencies[mask])
        if float(p).is_integer():
            return sum(int(m) ** int(p) for m in mags if m)
        return float((mags[mags > 0].astype(float) ** p).sum())

    def check_tail_bound(self, p: float, q: float, budget: int) -> TailBoundCheck:
        """Deterministic tail inequality:
        residual(q, B) <= moment(p)^(q/p) / B^(q/p - 1).

        Evaluated in exact integer arithmetic when p = 1 and q is integral;
        the returned sides are floats either way.
        """
        if not 0 < p <= q:
            raise ValueError("need 0 < p <= q")
        if budget < 1:
            raise ValueError("budget must be >= 1")
        lhs = self.residual(q, min(budget, self.n))
        if p == 1.0 and float(q).is_integer():
            qi = int(q)
            lhs_int = int(lhs)
            f1 = int(self.moment(1.0)) if self.frequencies.any() else 0
            holds = lhs_int * budget ** (qi - 1) <= f1**qi
            rhs = f1**qi / budget ** (qi - 1)
            return TailBoundCheck(holds, float(lhs_int), float(rhs))
        rhs = self.moment(p) ** (q / p) / budget ** (q / p - 1.0)
        return TailBoundCheck(lhs <= rhs, float(lhs), float(rhs))

    def heavy_set(self, budget: int) -> set[int]:
        """Items with f^2 >= 4 * residual(2, 4*budget) / budget, all exact."""
        if budget < 1:
            raise ValueError("budget must be >= 1")
        res = self.residual(2.0, min(4 * budget, self.n))
        threshold = 4.0 * res / budget
        nz = np.nonzero(self.frequencies)[0]
        f = self.frequencies[nz].astype(float)
        return {int(i) + 1 for i, fi in zip(nz, f) if fi * fi >= threshold}


def expected_countsketch_cells(state: ExactState, table) -> np.ndarray:
    """Recompute a CountSketch's cells from the exact vector and the table's
    own hashes, independent of the incremental update path."""
    cells = np.zeros((table.rows, table.cols), dtype=np.int64)
    items = np.nonzero(state.frequencies)[0].astype(np.int64) + 1
    f = state.frequencies[items - 1]
    for j in range(table.rows):
        idx = table.bucket_hashes[j].eval_many(items) - 1
        np.add.at(cells[j], idx, f * table.sign_hashes[j].eval_many(items))
    return cells


def expected_stable_cells(state: ExactState, table) -> np.ndarray:
    """Recompute a stable table's cells: sum over items of f * variate,
    accumulated in ascending item order."""
    cells = np.zeros((table.cols, 3))
    items = np.nonzero(state.frequencies)[0].astype(np.int64) + 1
    if items.size == 0:
        return cells
    f = state.frequencies[items - 1].astype(float)
    buckets = table.bucket_hash.eval_many(items)
    variates = table.source.variates_for(buckets, items)
    np.add.at(cells, buckets - 1, f[:, None] * variates)
    return cells
