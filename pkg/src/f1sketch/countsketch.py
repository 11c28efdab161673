"""CountSketch tables: point frequency estimates, top-k, F2 and residual F2.

Cells are signed 64-bit counters; an update (i, v) adds v * sign_j(i) to one
cell per row. Ingestion is single-writer; once the writer quiesces, every
read is safe from any number of threads. Distinct tables may be written by
distinct threads.
"""

from __future__ import annotations

import numpy as np

from .hashing import KWiseHash, SignHash
from . import seeds

# hard ceiling on |cell|; update streams are sized so m * M stays below it
CELL_LIMIT = 1 << 62


class SketchInvariantError(RuntimeError):
    """An internal accumulator invariant was violated (overflow / NaN)."""


class CountSketchTable:
    """rows x cols signed-counter sketch with per-row bucket and sign hashes.

    `candidate_mode` controls how top-k enumeration finds its candidates:
      - "exact": remember every touched item index (space O(distinct items)).
      - "heap":  bounded map of the `candidate_capacity` largest estimated
                 magnitudes, refreshed on every arrival (slower updates,
                 fixed space).
    """

    def __init__(self, rows: int, cols: int, *, bucket_hashes, sign_hashes,
                 candidate_mode: str = "exact",
                 candidate_capacity: int | None = None):
        if rows < 1 or cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if len(bucket_hashes) != rows or len(sign_hashes) != rows:
            raise ValueError("need one bucket hash and one sign hash per row")
        if candidate_mode not in ("exact", "heap"):
            raise ValueError("candidate_mode must be 'exact' or 'heap'")
        if candidate_mode == "heap" and not candidate_capacity:
            raise ValueError("heap mode needs a positive candidate_capacity")
        self.rows = rows
        self.cols = cols
        self.bucket_hashes = tuple(bucket_hashes)
        self.sign_hashes = tuple(sign_hashes)
        self.cells = np.zeros((rows, cols), dtype=np.int64)
        self.candidate_mode = candidate_mode
        self.candidate_capacity = candidate_capacity
        self._touched: set[int] = set()
        self._heap_candidates: dict[int, float] = {}

    @classmethod
    def from_seed(cls, key: bytes, rows: int, cols: int, n: int, *,
                  bucket_independence: int = 8, role: str = "cs",
                  **kwargs) -> "CountSketchTable":
        """Build a table whose per-row hashes are derived from one PRF key."""
        bucket = [
            KWiseHash.from_seed(seeds.derive_key(key, role + "-bucket", j),
                                bucket_independence, n, cols)
            for j in range(rows)
        ]
        sign = [
            SignHash.from_seed(seeds.derive_key(key, role + "-sign", j), n)
            for j in range(rows)
        ]
        return cls(rows, cols, bucket_hashes=bucket, sign_hashes=sign, **kwargs)

    # -- ingestion ---------------------------------------------------------

    def update(self, i: int, v: int) -> None:
        """Apply one turnstile record (item i, signed delta v)."""
        self.update_many(np.array([i], dtype=np.int64),
                         np.array([v], dtype=np.int64))

    def update_many(self, items: np.ndarray, deltas: np.ndarray) -> None:
        """Apply a batch of records; equivalent to per-record updates."""
        if len(items) == 0:
            return
        items = np.asarray(items, dtype=np.int64)
        deltas = np.asarray(deltas, dtype=np.int64)
        # a batch whose total magnitude reaches 2**62 could wrap int64
        # before the post-add check below sees it
        if float(np.abs(deltas).sum(dtype=np.float64)) >= float(CELL_LIMIT):
            raise SketchInvariantError("batch magnitude would overflow counters")
        for j in range(self.rows):
            idx = self.bucket_hashes[j].eval_many(items) - 1
            signed = deltas * self.sign_hashes[j].eval_many(items)
            np.add.at(self.cells[j], idx, signed)
            if np.abs(self.cells[j][idx]).max() >= CELL_LIMIT:
                raise SketchInvariantError("counter overflow: |cell| >= 2**62")
        if self.candidate_mode == "exact":
            self._touched.update(int(i) for i in items)
        else:
            for i in items:
                self._heap_candidates[int(i)] = abs(self.point_estimate(int(i)))
            cap = self.candidate_capacity
            if len(self._heap_candidates) > 2 * cap:
                keep = sorted(self._heap_candidates.items(),
                              key=lambda kv: (-kv[1], kv[0]))[:cap]
                self._heap_candidates = dict(keep)

    def touched_items(self) -> np.ndarray:
        """Candidate item indices, ascending."""
        if self.candidate_mode == "exact":
            return np.array(sorted(self._touched), dtype=np.int64)
        return np.array(sorted(self._heap_candidates), dtype=np.int64)

    # -- estimation --------------------------------------------------------

    def point_estimate(self, i: int) -> float:
        """Median over rows of cell * sign: the frequency estimate for i."""
        vals = [
            self.cells[j][self.bucket_hashes[j].eval(i) - 1] * self.sign_hashes[j].eval(i)
            for j in range(self.rows)
        ]
        return float(np.median(vals))

    def point_estimate_many(self, items: np.ndarray) -> np.ndarray:
        items = np.asarray(items, dtype=np.int64)
        if items.size == 0:
            return np.zeros(0)
        per_row = np.empty((self.rows, items.size))
        for j in range(self.rows):
            idx = self.bucket_hashes[j].eval_many(items) - 1
            per_row[j] = self.cells[j][idx] * self.sign_hashes[j].eval_many(items)
        return np.median(per_row, axis=0)

    def top_k(self, k: int) -> list[tuple[int, float]]:
        """k candidates of largest |estimate|, ties to the smaller index.

        Returns all candidates when fewer than k items were touched.
        """
        if k < 0:
            raise ValueError("k must be >= 0")
        items = self.touched_items()
        if items.size == 0 or k == 0:
            return []
        est = self.point_estimate_many(items)
        order = np.lexsort((items, -np.abs(est)))
        return [(int(items[o]), float(est[o])) for o in order[:k]]

    def f2_estimate(self) -> float:
        """Median over rows of the sum of squared cells."""
        return float(np.median((self.cells.astype(float) ** 2).sum(axis=1)))

    def f2_residual_estimate(self, k: int) -> float:
        """Estimated second moment of everything outside the top-k items.

        Per row, the estimated contribution of each top-k item is removed
        from its cell and the squared cells are summed; the median row value
        is returned (clamped at zero). k = 0 reduces to `f2_estimate`.
        """
        if k < 0:
            raise ValueError("k must be >= 0")
        top = self.top_k(k)
        if not top:
            return self.f2_estimate()
        items = np.array([i for i, _ in top], dtype=np.int64)
        est = np.array([e for _, e in top])
        row_vals = np.empty(self.rows)
        for j in range(self.rows):
            skimmed = self.cells[j].astype(float)
            idx = self.bucket_hashes[j].eval_many(items) - 1
            np.subtract.at(skimmed, idx, est * self.sign_hashes[j].eval_many(items))
            row_vals[j] = (skimmed ** 2).sum()
        return max(0.0, float(np.median(row_vals)))

    def nbytes(self) -> int:
        return int(self.cells.nbytes)
