"""Deterministic seed derivation.

Every source of randomness in a sketch (hash coefficients, stable variates)
is derived from one 64-bit master seed through a keyed BLAKE2b pseudorandom
function, so a whole run can be replayed bit-for-bit from that single seed.
"""

from __future__ import annotations

import hashlib
import struct


def master_key(seed: int) -> bytes:
    """Expand a 64-bit master seed into a 32-byte PRF key."""
    return hashlib.blake2b(
        struct.pack("<Q", seed % (1 << 64)),
        digest_size=32,
        person=b"f1sketch-master",
    ).digest()


def derive_key(key: bytes, role: str, index: int = 0) -> bytes:
    """Derive a 32-byte subkey for one named component of a run.

    `role` tags the structure (e.g. "cs-bucket") and `index` the table row,
    so no two components ever share a random stream.
    """
    h = hashlib.blake2b(key=key, digest_size=32)
    h.update(role.encode("ascii"))
    h.update(struct.pack("<q", index))
    return h.digest()


def field_elements(key: bytes, count: int, prime: int) -> list[int]:
    """Draw `count` elements uniformly from [0, prime) under `key`.

    Each element consumes 16 PRF bytes, so the residue bias is below
    prime / 2**128 -- negligible for any prime that fits in a machine word.
    """
    out = []
    block = 0
    while len(out) < count:
        digest = hashlib.blake2b(
            key=key, digest_size=64, salt=struct.pack("<q", block)
        ).digest()
        for off in range(0, 64, 16):
            if len(out) == count:
                break
            out.append(int.from_bytes(digest[off : off + 16], "little") % prime)
        block += 1
    return out
