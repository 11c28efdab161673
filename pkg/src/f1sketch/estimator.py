"""First-moment estimator for turnstile streams.

One estimator owns three linear structures, all derived from a single
master seed:

  * a stable-sketch table of `width` buckets, three Cauchy accumulators
    each, which carries the light-item mass;
  * a CountSketch of `depth` rows used to read off isolated heavy items;
  * a taller CountSketch (the heavy-hitter structure) whose point estimates
    and residual-F2 estimate drive the heavy/light split.

Ingestion is single-writer. `estimate()` and every other read are safe
concurrently once ingestion quiesces, and `estimate()` never mutates sketch
state, so it may be called repeatedly. Independent estimators (distinct
seeds) can run fully in parallel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import seeds
from .countsketch import CountSketchTable, SketchInvariantError
from .hashing import KWiseHash
from .stable import DEFAULT_TRUNCATION_CAP, StableVariateSource, stability_constant


def isolation_row(bucket_hashes, item: int, heavy_items) -> int | None:
    """Smallest row index (1-based) whose bucket hash separates `item` from
    every other member of `heavy_items`, or None if no row does."""
    item = int(item)
    others = [int(k) for k in heavy_items if int(k) != item]
    for j, h in enumerate(bucket_hashes):
        b = h.eval(item)
        if all(h.eval(k) != b for k in others):
            return j + 1
    return None


@dataclass(frozen=True)
class EstimatorConfig:
    """Sizing knobs derived from the requested accuracy.

    `accuracy` is the user-facing relative error target in (0, 1/2]; the
    internal working accuracy is a tenth of it, which keeps the analysis
    precondition eps <= 1/8 satisfied automatically. `depth` may be
    overridden; the default follows the collision-probability bound
    2 + log2(5.1/eps^2) (see also `depth_variance_bound` for the larger
    alternative some of the variance analysis assumes).
    """

    accuracy: float
    n: int
    seed: int
    p: float = 1.0
    depth: int | None = None
    candidate_mode: str = "exact"
    candidate_capacity: int | None = None
    truncation_cap: float = DEFAULT_TRUNCATION_CAP
    memory_cap_bytes: int = 1 << 30

    def __post_init__(self):
        if not 0.0 < self.accuracy <= 0.5:
            raise ValueError("accuracy must lie in (0, 1/2]")
        if self.n < 1:
            raise ValueError("domain size n must be >= 1")
        if not 0.0 < self.p < 2.0:
            raise ValueError("moment order p must lie in (0, 2)")

    @property
    def eps(self) -> float:
        return self.accuracy / 10.0

    @property
    def budget(self) -> int:
        """Frequency resolution budget, ceil(1/eps^2)."""
        return math.ceil(1.0 / self.eps**2)

    @property
    def width(self) -> int:
        """Buckets per table: 64 * budget."""
        return 64 * self.budget

    @property
    def table_depth(self) -> int:
        if self.depth is not None:
            return self.depth
        return math.ceil(2 + math.log2(5.1 / self.eps**2))

    @property
    def hh_depth(self) -> int:
        """Rows of the heavy-hitter structure: ceil(log2 n) + 2."""
        return math.ceil(math.log2(max(self.n, 2))) + 2

    @property
    def independence(self) -> int:
        """Bucket-hash independence for the stable table: max(8, ceil(log2 1/eps^2))."""
        return max(8, math.ceil(math.log2(1.0 / self.eps**2)))

    @property
    def heavy_clamp(self) -> int:
        """Largest heavy-set size the light correction will trust: ceil(5.1 * budget)."""
        return math.ceil(5.1 * self.budget)

    @property
    def depth_variance_bound(self) -> int:
        """Alternative depth log2(36 * budget^2 / eps^4) from the variance analysis."""
        return math.ceil(math.log2(36.0 * self.budget**2 / self.eps**4))


@dataclass(frozen=True)
class Classification:
    """Heavy/light split of the touched items.

    heavy iff estimate^2 >= threshold, with
    threshold = 4 * f2_residual / budget; `signs` are sgn(estimate) with
    sgn(0) = +1. Light items are the remaining touched items.
    """

    items: np.ndarray
    estimates: np.ndarray
    heavy_mask: np.ndarray
    threshold: float
    f2_residual: float

    @property
    def heavy_items(self) -> np.ndarray:
        return self.items[self.heavy_mask]

    @property
    def heavy_estimates(self) -> np.ndarray:
        return self.estimates[self.heavy_mask]

    @property
    def heavy_signs(self) -> np.ndarray:
        return np.where(self.heavy_estimates >= 0, 1, -1).astype(np.int64)

    @property
    def light_items(self) -> np.ndarray:
        return self.items[~self.heavy_mask]

    @property
    def heavy_count(self) -> int:
        return int(self.heavy_mask.sum())

    @classmethod
    def empty(cls) -> "Classification":
        return cls(
            items=np.zeros(0, dtype=np.int64),
            estimates=np.zeros(0),
            heavy_mask=np.zeros(0, dtype=bool),
            threshold=0.0,
            f2_residual=0.0,
        )


@dataclass(frozen=True)
class EstimateReport:
    """Final estimate and its decomposition; total == heavy + light exactly."""

    total: float
    heavy: float
    light: float
    heavy_count: int
    light_correction: float
    diagnostics: dict = field(default_factory=dict)


class StableTable:
    """`cols` buckets of three stable accumulators plus their bucket hash."""

    def __init__(self, cols: int, bucket_hash: KWiseHash,
                 source: StableVariateSource):
        self.cols = cols
        self.bucket_hash = bucket_hash
        self.source = source
        self.cells = np.zeros((cols, 3))

    def update_many(self, items: np.ndarray, deltas: np.ndarray) -> None:
        if len(items) == 0:
            return
        buckets = self.bucket_hash.eval_many(items)
        variates = self.source.variates_for(buckets, items)
        np.add.at(self.cells, buckets - 1, deltas[:, None] * variates)
        if not np.isfinite(self.cells).all():
            raise SketchInvariantError("stable accumulator is not finite")

    def nbytes(self) -> int:
        return int(self.cells.nbytes)


class Estimator:
    """Streaming F1 estimator; see module docstring for the structure."""

    def __init__(self, config: EstimatorConfig):
        self.config = config
        c = config
        total_bytes = (c.width * 3 + c.table_depth * c.width + c.hh_depth * c.width) * 8
        if total_bytes > c.memory_cap_bytes:
            raise ValueError(
                f"accuracy {c.accuracy} needs {total_bytes} sketch bytes, "
                f"above the cap of {c.memory_cap_bytes}"
            )
        key = seeds.master_key(c.seed)
        self.table = StableTable(
            c.width,
            KWiseHash.from_seed(seeds.derive_key(key, "u-bucket"),
                                c.independence, c.n, c.width),
            StableVariateSource(seeds.derive_key(key, "u-variates"),
                                p=c.p, cap=c.truncation_cap),
        )
        self.countsketch = CountSketchTable.from_seed(
            seeds.derive_key(key, "cs"), c.table_depth, c.width, c.n, role="cs")
        self.heavy_hitters = CountSketchTable.from_seed(
            seeds.derive_key(key, "hh"), c.hh_depth, c.width, c.n, role="hh",
            candidate_mode=c.candidate_mode,
            candidate_capacity=c.candidate_capacity,
        )
        self._pending_items: list = []
        self._pending_deltas: list = []
        self._updates = 0
        self._ingest_ns = 0
        self._eager = c.candidate_mode == "heap"

    # -- ingestion ---------------------------------------------------------

    def update(self, i: int, v: int) -> None:
        """Apply one turnstile record."""
        if not 1 <= i <= self.config.n:
            raise ValueError(f"item {i} outside domain [1, {self.config.n}]")
        self._pending_items.append(i)
        self._pending_deltas.append(v)
        self._updates += 1
        if self._eager:
            self.flush()

    def update_many(self, items: np.ndarray, deltas: np.ndarray) -> None:
        """Apply a batch of records (order of records never matters)."""
        items = np.asarray(items, dtype=np.int64)
        deltas = np.asarray(deltas, dtype=np.int64)
        if items.size and (items.min() < 1 or items.max() > self.config.n):
            raise ValueError("item outside domain")
        self._pending_items.append(items)
        self._pending_deltas.append(deltas)
        self._updates += int(items.size)
        if self._eager:
            self.flush()

    def flush(self) -> None:
        """Materialize buffered records into the sketch cells.

        Buffered deltas for one item are combined exactly (integer sums)
        before touching any float accumulator, which is what makes the final
        sketch state independent of record order. Called automatically by
        every read; worth calling explicitly only to fence off ingestion
        timing or to quiesce before concurrent reads.
        """
        if not self._pending_items:
            return
        t0 = time.perf_counter_ns()
        if len(self._pending_items) == 1 and isinstance(self._pending_items[0], np.ndarray):
            items = self._pending_items[0]
            deltas = self._pending_deltas[0]
        else:
            items = np.concatenate([np.atleast_1d(np.asarray(x, dtype=np.int64))
                                    for x in self._pending_items])
            deltas = np.concatenate([np.atleast_1d(np.asarray(x, dtype=np.int64))
                                     for x in self._pending_deltas])
        self._pending_items = []
        self._pending_deltas = []
        uniq, inverse = np.unique(items, return_inverse=True)
        agg = np.zeros(uniq.size, dtype=np.int64)
        np.add.at(agg, inverse, deltas)
        self.table.update_many(uniq, agg)
        self.countsketch.update_many(uniq, agg)
        self.heavy_hitters.update_many(uniq, agg)
        self._ingest_ns += time.perf_counter_ns() - t0

    # -- estimation --------------------------------------------------------

    def touched_items(self) -> np.ndarray:
        self.flush()
        return self.heavy_hitters.touched_items()

    def classify(self) -> Classification:
        """Split touched items into heavy and light by estimated frequency."""
        self.flush()
        items = self.heavy_hitters.touched_items()
        if items.size == 0:
            return Classification.empty()
        est = self.heavy_hitters.point_estimate_many(items)
        residual = self.heavy_hitters.f2_residual_estimate(4 * self.config.budget)
        threshold = 4.0 * residual / self.config.budget
        heavy = est**2 >= threshold
        return Classification(items=items, estimates=est, heavy_mask=heavy,
                              threshold=threshold, f2_residual=residual)

    def isolation_index(self, i: int, heavy_items) -> int | None:
        """Smallest CountSketch row isolating heavy item i from the rest of
        the heavy set, or None when every row has a collision."""
        return isolation_row(self.countsketch.bucket_hashes, i, heavy_items)

    def _isolation_table(self, heavy: np.ndarray):
        """Per-item first isolating row (0-based; -1 if none) and the
        (rows x items) bucket matrix."""
        rows = self.countsketch.rows
        buckets = np.empty((rows, heavy.size), dtype=np.int64)
        isolated = np.zeros((rows, heavy.size), dtype=bool)
        for j in range(rows):
            buckets[j] = self.countsketch.bucket_hashes[j].eval_many(heavy)
            counts = np.bincount(buckets[j], minlength=self.countsketch.cols + 1)
            isolated[j] = counts[buckets[j]] == 1
        any_row = isolated.any(axis=0)
        first = np.where(any_row, isolated.argmax(axis=0), -1)
        return first, buckets

    def heavy_contributions(self, cls: Classification) -> np.ndarray:
        """Per-item reads aligned with cls.heavy_items.

        A heavy item i contributes cell * sgn(estimate_i) * sign_row(i) from
        its first isolating row, or 0 when no row isolates it.
        """
        self.flush()
        heavy = cls.heavy_items
        out = np.zeros(heavy.size)
        if heavy.size == 0:
            return out
        first, buckets = self._isolation_table(heavy)
        signs_est = cls.heavy_signs
        ok = first >= 0
        if ok.any():
            row_sign = np.zeros((self.countsketch.rows, heavy.size), dtype=np.int64)
            for j in np.unique(first[ok]):
                row_sign[j] = self.countsketch.sign_hashes[j].eval_many(heavy)
            idx = np.nonzero(ok)[0]
            cells = self.countsketch.cells[first[idx], buckets[first[idx], idx] - 1]
            out[idx] = cells * signs_est[idx] * row_sign[first[idx], idx]
        return out

    def heavy_estimate(self, cls: Classification) -> float:
        """Sum of isolated-cell reads over the heavy set."""
        return float(self.heavy_contributions(cls).sum())

    def collision_free_buckets(self, heavy_items) -> np.ndarray:
        """StableTable buckets (1-based) that no heavy item hashes into."""
        self.flush()
        mask = self._collision_free_mask(np.asarray(heavy_items, dtype=np.int64))
        return np.nonzero(mask)[0].astype(np.int64) + 1

    def _collision_free_mask(self, heavy: np.ndarray) -> np.ndarray:
        mask = np.ones(self.config.width, dtype=bool)
        if heavy.size:
            mask[self.table.bucket_hash.eval_many(heavy) - 1] = False
        return mask

    def light_estimate(self, cls: Classification, p: float | None = None) -> float:
        """Geometric-means read of the heavy-free stable buckets.

        Sums |x1 * x2 * x3|^(p/3) over every bucket no heavy item occupies,
        scaled by the moment constant C(p, p/3)^-3 and by the collision
        correction (1 - 1/width)^-heavy_count, which compensates for the
        buckets the heavy set removed. heavy_count is clamped at
        `heavy_clamp` so a runaway heavy set cannot blow up the correction;
        the clamp event is reported in diagnostics by `estimate`.
        """
        self.flush()
        if p is None:
            p = self.config.p
        if not 0.0 < p < 2.0:
            raise ValueError("moment order p must lie in (0, 2)")
        heavy = cls.heavy_items
        mask = self._collision_free_mask(heavy)
        prod = np.abs(self.table.cells.prod(axis=1))
        total = float((prod[mask] ** (p / 3.0)).sum())
        correction = (1.0 - 1.0 / self.config.width) ** (
            -min(int(heavy.size), self.config.heavy_clamp))
        return correction * stability_constant(p, p / 3.0) ** -3 * total

    def estimate(self) -> EstimateReport:
        """Classify, estimate both parts, and report their exact sum."""
        self.flush()
        t0 = time.perf_counter_ns()
        cls = self.classify()
        t1 = time.perf_counter_ns()
        heavy = self.heavy_estimate(cls)
        t2 = time.perf_counter_ns()
        light = self.light_estimate(cls)
        t3 = time.perf_counter_ns()
        correction = (1.0 - 1.0 / self.config.width) ** (
            -min(cls.heavy_count, self.config.heavy_clamp))
        diagnostics = {
            "updates": self._updates,
            "ingest_ns": self._ingest_ns,
            "classify_ns": t1 - t0,
            "heavy_ns": t2 - t1,
            "light_ns": t3 - t2,
            "stable_bytes": self.table.nbytes(),
            "countsketch_bytes": self.countsketch.nbytes(),
            "heavy_hitter_bytes": self.heavy_hitters.nbytes(),
            "heavy_clamped": cls.heavy_count > self.config.heavy_clamp,
            "threshold": cls.threshold,
            "f2_residual_estimate": cls.f2_residual,
        }
        return EstimateReport(total=heavy + light, heavy=heavy, light=light,
                              heavy_count=cls.heavy_count,
                              light_correction=correction,
                              diagnostics=diagnostics)
