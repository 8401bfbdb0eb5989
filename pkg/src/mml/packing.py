"""Greedy constructions of well-separated sign vectors.

A packing over {-1,+1}^m keeps every pair of vectors at L1 distance at
least m/3.  Two +-1 vectors differing in k coordinates are at L1 distance
2k, so the rule is checked as an exact integer condition: Hamming distance
>= ceil(m/6).  Run to exhaustion, the greedy sweep keeps at least 2^(m/5)
vectors (a volume count: each accepted vector excludes fewer than 2^(4m/5)
hypercube points).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .rng import rng_from

__all__ = [
    "SignPacking",
    "PackingError",
    "build_packing",
    "randomized_packing",
    "min_hamming",
    "verify_separation",
]

EXHAUSTIVE_MAX_M = 30
_BLOCK = 1 << 16


class PackingError(ValueError):
    """Budget exhausted or target size unreachable; carries the achieved size."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class SignPacking:
    """Set of +-1 vectors with pairwise L1 separation at least m/3."""

    m: int
    vectors: tuple[tuple[int, ...], ...]

    @property
    def min_l1(self) -> Fraction:
        return Fraction(self.m, 3)

    @property
    def size(self) -> int:
        return len(self.vectors)

    def array(self) -> np.ndarray:
        return np.array(self.vectors, dtype=np.int8).reshape(self.size, self.m)

    def to_json(self) -> dict:
        return {"m": self.m, "vectors": [list(v) for v in self.vectors]}

    @staticmethod
    def from_json(obj: dict) -> "SignPacking":
        vectors = tuple(tuple(int(x) for x in v) for v in obj["vectors"])
        return SignPacking(int(obj["m"]), vectors)


def _separation(m: int) -> int:
    # Hamming threshold equivalent to L1 >= m/3
    return -(-m // 6)


def _decode(codes: np.ndarray, m: int) -> np.ndarray:
    """Integer codes to +-1 rows; bit j set means coordinate j is +1."""
    bits = (codes[:, None].astype(np.uint64) >> np.arange(m, dtype=np.uint64)) & 1
    return (2 * bits.astype(np.int8) - 1).astype(np.int8)


def build_packing(m: int, target_size: int | None = None) -> SignPacking:
    """Exhaustive greedy packing over candidates in integer order.

    Candidate c is accepted iff its Hamming distance to every accepted
    vector is at least ceil(m/6).  Stops at target_size when given,
    otherwise runs through all 2^m candidates.  The candidate order is the
    integer order of the binary encoding (bit j set <-> coordinate j = +1).
    """
    if m < 1:
        raise ValueError("m must be positive")
    if m > EXHAUSTIVE_MAX_M:
        raise PackingError(
            f"exhaustive mode enumerates 2^m candidates; m={m} exceeds the "
            f"budget guard m <= {EXHAUSTIVE_MAX_M}"
        )
    if target_size is not None and target_size < 1:
        raise ValueError("target_size must be positive")
    t = _separation(m)
    accepted: list[int] = []
    acc_arr = np.empty(0, dtype=np.uint64)
    total = 1 << m
    for start in range(0, total, _BLOCK):
        cand = np.arange(start, min(start + _BLOCK, total), dtype=np.uint64)
        alive = np.ones(cand.size, dtype=bool)
        for a in acc_arr:
            alive &= np.bitwise_count(cand ^ a) >= t
            if not alive.any():
                break
        survivors = cand[alive]
        while survivors.size:
            c = survivors[0]
            accepted.append(int(c))
            if target_size is not None and len(accepted) >= target_size:
                break
            survivors = survivors[np.bitwise_count(survivors ^ c) >= t]
        if target_size is not None and len(accepted) >= target_size:
            break
        acc_arr = np.array(accepted, dtype=np.uint64)
    if target_size is not None and len(accepted) < target_size:
        raise PackingError(
            f"greedy exhausted 2^{m} candidates with only {len(accepted)} "
            f"vectors; target {target_size} unreachable",
            achieved=len(accepted),
        )
    vecs = _decode(np.array(accepted, dtype=np.uint64), m)
    return SignPacking(m, tuple(tuple(int(x) for x in row) for row in vecs))


def randomized_packing(
    m: int, target_size: int, seed: int, retry_factor: int = 1000
) -> SignPacking:
    """Rejection sampling of uniform +-1 vectors with the greedy acceptance rule.

    Deterministic given the seed.  Fails after retry_factor * target_size
    draws, which signals that target_size is too ambitious for this m.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if target_size < 1:
        raise ValueError("target_size must be positive")
    t = _separation(m)
    rng = rng_from(seed, "randomized_packing", m)
    accepted: list[np.ndarray] = []
    max_draws = retry_factor * target_size
    for _ in range(max_draws):
        v = (2 * rng.integers(0, 2, size=m) - 1).astype(np.int8)
        if all(int(np.sum(v != a)) >= t for a in accepted):
            accepted.append(v)
            if len(accepted) == target_size:
                break
    if len(accepted) < target_size:
        raise PackingError(
            f"randomized packing reached {len(accepted)}/{target_size} vectors "
            f"after {max_draws} draws (m={m}, separation {t})",
            achieved=len(accepted),
        )
    return SignPacking(m, tuple(tuple(int(x) for x in v) for v in accepted))


def min_hamming(packing: SignPacking) -> int:
    """Exact minimum pairwise Hamming distance (brute force over all pairs)."""
    arr = packing.array()
    if len(arr) < 2:
        return packing.m
    best = packing.m
    for i in range(len(arr) - 1):
        best = min(best, int(np.min(np.sum(arr[i + 1 :] != arr[i], axis=1))))
    return best


def verify_separation(packing: SignPacking) -> bool:
    """Post-hoc check of all pairwise distances against the exact threshold."""
    if any(abs(x) != 1 for v in packing.vectors for x in v):
        return False
    return min_hamming(packing) >= _separation(packing.m)
