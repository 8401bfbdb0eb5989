"""Deterministic seed derivation and the shared uniform-to-normal transform.

All randomness in the package flows through a single convention: a 64-bit
master seed plus a tuple of key parts (member index, trial index, check name,
...) is hashed into a child seed, and every child stream is an independent
numpy Generator.  This keeps concurrent trials reproducible and independent
of execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "rng_from", "standard_normals"]


def derive_seed(master_seed: int, *parts) -> int:
    """Hash (master_seed, *parts) into a 64-bit child seed.

    Parts may be ints or strings; the digest is platform-independent.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master_seed)).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode())
    return int.from_bytes(h.digest(), "big")


def rng_from(master_seed: int, *parts) -> np.random.Generator:
    """Generator seeded from the derived child seed."""
    return np.random.default_rng(derive_seed(master_seed, *parts))


def standard_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normal variates via the pairwise (Box-Muller) transform.

    Drawn from the generator's uniform stream so that samplers across the
    package share one documented uniform-to-normal convention.
    """
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    n = int(np.prod(shape)) if shape else 1
    pairs = (n + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # in (0, 1]: keeps log() finite
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:n].reshape(shape)
