"""Limited-independence hash families over a prime field.

A t-wise independent hash is a uniformly random polynomial of degree t-1
over GF(p), evaluated by Horner's rule and reduced onto the bucket range
[1, C]. The reduction `(value mod C) + 1` skews bucket probabilities by at
most C/p relative; with the default 61-bit prime and desk-scale C this is
below 2**-45 and is ignored everywhere except the small-field exhaustive
tests, which account for it exactly.

Hash objects are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import numpy as np

from . import seeds

MERSENNE61 = (1 << 61) - 1

_M61 = np.uint64(MERSENNE61)
_MASK30 = np.uint64((1 << 30) - 1)
_MASK31 = np.uint64((1 << 31) - 1)


def _mulmod61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a * b) mod (2**61 - 1) on uint64 arrays without 128-bit overflow."""
    a1 = a >> np.uint64(31)
    a0 = a & _MASK31
    b1 = b >> np.uint64(31)
    b0 = b & _MASK31
    # a*b = a1*b1*2^62 + (a1*b0 + a0*b1)*2^31 + a0*b0, and 2^61 === 1 (mod p)
    mid = a1 * b0 + a0 * b1
    acc = (a1 * b1 << np.uint64(1)) + (mid >> np.uint64(30)) + ((mid & _MASK30) << np.uint64(31)) + a0 * b0
    acc = (acc & _M61) + (acc >> np.uint64(61))
    acc = (acc & _M61) + (acc >> np.uint64(61))
    return np.where(acc >= _M61, acc - _M61, acc)


def _addmod61(a: np.ndarray, b: np.uint64) -> np.ndarray:
    s = a + b
    s = (s & _M61) + (s >> np.uint64(61))
    return np.where(s >= _M61, s - _M61, s)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class KWiseHash:
    """Degree t-1 polynomial hash over GF(prime), output in [1, range_size].

    `coefficients` are listed leading coefficient first; any t distinct
    inputs receive jointly uniform field values over a uniform draw of the
    coefficient tuple.
    """

    __slots__ = ("coefficients", "prime", "range_size", "_coeff_vec")

    def __init__(self, coefficients, prime: int, range_size: int):
        coefficients = [int(c) % prime for c in coefficients]
        if not coefficients:
            raise ValueError("need at least one coefficient (t >= 1)")
        if range_size < 1:
            raise ValueError("range_size must be >= 1")
        if prime < range_size:
            raise ValueError("prime must be at least the output range")
        if not is_prime(prime):
            raise ValueError(f"{prime} is not prime")
        self.coefficients = tuple(coefficients)
        self.prime = prime
        self.range_size = range_size
        self._coeff_vec = (
            np.array(coefficients, dtype=np.uint64) if prime == MERSENNE61 else None
        )

    @classmethod
    def from_seed(cls, key: bytes, t: int, n: int, range_size: int,
                  prime: int | None = None) -> "KWiseHash":
        """Draw a t-wise independent hash [n] -> [range_size] from a PRF key."""
        if t < 1:
            raise ValueError("independence degree t must be >= 1")
        if n < 1 or range_size < 1:
            raise ValueError("domain and range sizes must be >= 1")
        if prime is None:
            prime = MERSENNE61
        if prime <= n or prime < range_size:
            raise ValueError("prime must exceed the domain and cover the range")
        return cls(seeds.field_elements(key, t, prime), prime, range_size)

    def eval(self, i: int) -> int:
        """Bucket of item i, in [1, range_size]. i must lie in the domain."""
        v = 0
        x = i % self.prime
        for c in self.coefficients:
            v = (v * x + c) % self.prime
        return v % self.range_size + 1

    __call__ = eval

    def eval_many(self, items: np.ndarray) -> np.ndarray:
        """Vectorized `eval` over an integer array; returns int64 buckets."""
        if self._coeff_vec is not None:
            x = np.asarray(items, dtype=np.uint64)
            v = np.full(x.shape, self._coeff_vec[0], dtype=np.uint64)
            for c in self._coeff_vec[1:]:
                v = _addmod61(_mulmod61(v, x), c)
            return (v % np.uint64(self.range_size)).astype(np.int64) + 1
        return np.array([self.eval(int(i)) for i in np.asarray(items).ravel()],
                        dtype=np.int64).reshape(np.shape(items))


class SignHash:
    """4-wise independent sign hash onto {-1, +1}.

    Wraps a range-2 KWiseHash; bucket 1 maps to +1, bucket 2 to -1.
    """

    __slots__ = ("inner",)

    def __init__(self, inner: KWiseHash):
        if inner.range_size != 2:
            raise ValueError("sign hash needs an inner hash with range 2")
        self.inner = inner

    @classmethod
    def from_seed(cls, key: bytes, n: int, prime: int | None = None) -> "SignHash":
        return cls(KWiseHash.from_seed(key, t=4, n=n, range_size=2, prime=prime))

    def eval(self, i: int) -> int:
        return 1 if self.inner.eval(i) == 1 else -1

    __call__ = eval

    def eval_many(self, items: np.ndarray) -> np.ndarray:
        return np.where(self.inner.eval_many(items) == 1, 1, -1).astype(np.int64)
