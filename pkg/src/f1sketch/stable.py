"""Symmetric p-stable variates and the estimators built on them.

Covers the Cauchy (p=1) special case used by the first-moment sketch, the
general p in (0, 2) case via the Chambers-Mallows-Stuck transform, the
moment constants of stable laws, and the two classical whole-vector
baseline estimators (median of sketch magnitudes, geometric means).
"""

from __future__ import annotations

import hashlib
import math
import struct

import numpy as np

DEFAULT_TRUNCATION_CAP = 1e9


def cauchy_variate(u: float, cap: float = DEFAULT_TRUNCATION_CAP) -> float:
    """Standard Cauchy draw from a uniform u in (0, 1), clamped to +-cap."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly inside (0, 1)")
    x = math.tan(math.pi * (u - 0.5))
    return max(-cap, min(cap, x))


def stable_variate(u1: float, u2: float, p: float,
                   cap: float = DEFAULT_TRUNCATION_CAP) -> float:
    """Symmetric p-stable draw from two uniforms, clamped to +-cap.

    Chambers-Mallows-Stuck: theta = pi*(u1 - 1/2), W = -ln(u2). p = 1
    degenerates to tan(theta), the Cauchy inverse CDF.
    """
    if not 0.0 < u1 < 1.0 or not 0.0 < u2 < 1.0:
        raise ValueError("uniforms must lie strictly inside (0, 1)")
    if not 0.0 < p <= 2.0:
        raise ValueError("stability index p must lie in (0, 2]")
    theta = math.pi * (u1 - 0.5)
    if p == 1.0:
        x = math.tan(theta)
    else:
        w = -math.log(u2)
        x = (math.sin(p * theta) / math.cos(theta) ** (1.0 / p)) * (
            math.cos((1.0 - p) * theta) / w
        ) ** ((1.0 - p) / p)
    return max(-cap, min(cap, x))


def stability_constant(p: float, q: float) -> float:
    """q-th absolute moment of a unit-scale symmetric p-stable variable.

    (2/pi) * Gamma(1 - q/p) * Gamma(q) * sin(pi q / 2), valid for
    -1 < q < p, q != 0. Computed through log-gamma; both gamma factors are
    positive except Gamma(q) on (-1, 0), where sin(pi q / 2) flips sign too,
    so the result is always positive.
    """
    if not 0.0 < p <= 2.0:
        raise ValueError("need 0 < p <= 2")
    if q >= p or q <= -1.0 or q == 0.0:
        raise ValueError("need -1 < q < p with q != 0 (Gamma poles)")
    # lgamma returns log|Gamma|; on (-1, 0) both Gamma(q) and sin(pi q/2)
    # are negative, so the product stays positive and |.| is safe.
    log_mag = math.lgamma(1.0 - q / p) + math.lgamma(q)
    return (2.0 / math.pi) * math.exp(log_mag) * abs(math.sin(math.pi * q / 2.0))


def kp_constant(p: float) -> float:
    """Variance constant of the three-way geometric-means bucket estimator:
    C(p, p/3)**-6 * C(p, 2p/3)**3."""
    if not 0.0 < p < 2.0:
        raise ValueError("need 0 < p < 2")
    return stability_constant(p, p / 3.0) ** -6 * stability_constant(p, 2.0 * p / 3.0) ** 3


def geometric_means_estimate(values, p: float) -> float:
    """Unbiased F_p estimate from t independent p-stable sketches of one
    vector: C(p, p/t)**-t * prod |X_i|**(p/t)."""
    x = np.asarray(values, dtype=float)
    t = x.size
    if t < 3:
        raise ValueError("need at least 3 sketch values")
    if not np.isfinite(x).all():
        raise ValueError("sketch values must be finite")
    mags = np.abs(x)
    if (mags == 0.0).any():
        return 0.0
    scale = stability_constant(p, p / t) ** -t
    # work in logs so large t cannot overflow the running product
    return scale * math.exp(float(np.log(mags).sum()) * (p / t))


def median_estimate(values) -> float:
    """Median of sketch magnitudes; estimates F_1 for Cauchy sketches.

    The median of |Cauchy(scale=F1)| is exactly F1, so no scale constant is
    applied. Even-length input uses the lower median; prefer odd t.
    """
    x = np.abs(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("need at least one sketch value")
    return float(np.sort(x)[(x.size - 1) // 2])


class StableVariateSource:
    """Replayable p-stable variates indexed by (bucket, slot, item).

    Each (bucket, item) pair gets one keyed-BLAKE2b digest; slots r in
    {1, 2, 3} consume disjoint 64-bit lanes of it, so all variates are
    mutually independent for PRF purposes and any one of them is a pure
    function of (key, bucket, slot, item). Magnitudes are clamped to `cap`.
    """

    __slots__ = ("key", "p", "cap")

    def __init__(self, key: bytes, p: float = 1.0,
                 cap: float = DEFAULT_TRUNCATION_CAP):
        if not 0.0 < p <= 2.0:
            raise ValueError("stability index p must lie in (0, 2]")
        if cap <= 0:
            raise ValueError("truncation cap must be positive")
        self.key = key
        self.p = p
        self.cap = cap

    def _words(self, bucket: int, item: int) -> tuple:
        digest = hashlib.blake2b(
            struct.pack("<qq", bucket, item), key=self.key, digest_size=48
        ).digest()
        return struct.unpack("<6Q", digest)

    @staticmethod
    def _uniform(word: int) -> float:
        # 52-bit mantissa, offset by half a step: strictly inside (0, 1)
        return ((word >> 12) + 0.5) * 2.0 ** -52

    def variate(self, bucket: int, slot: int, item: int) -> float:
        """Variate s_{bucket,slot}(item); slot in {1, 2, 3}."""
        if slot not in (1, 2, 3):
            raise ValueError("slot must be 1, 2 or 3")
        w = self._words(bucket, item)
        u1 = self._uniform(w[2 * (slot - 1)])
        u2 = self._uniform(w[2 * (slot - 1) + 1])
        return stable_variate(u1, u2, self.p, self.cap)

    def variates_for(self, buckets: np.ndarray, items: np.ndarray) -> np.ndarray:
        """All three slots for aligned (bucket, item) pairs; shape (len, 3)."""
        n = len(items)
        words = np.empty((n, 6), dtype=np.uint64)
        pack = struct.pack
        blake = hashlib.blake2b
        key = self.key
        for idx in range(n):
            digest = blake(pack("<qq", int(buckets[idx]), int(items[idx])),
                           key=key, digest_size=48).digest()
            words[idx] = struct.unpack("<6Q", digest)
        u = ((words >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0 ** -52
        u1 = u[:, 0::2]
        theta = np.pi * (u1 - 0.5)
        if self.p == 1.0:
            x = np.tan(theta)
        else:
            p = self.p
            w = -np.log(u[:, 1::2])
            x = (np.sin(p * theta) / np.cos(theta) ** (1.0 / p)) * (
                np.cos((1.0 - p) * theta) / w
            ) ** ((1.0 - p) / p)
        return np.clip(x, -self.cap, self.cap)
