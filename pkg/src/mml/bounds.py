"""Closed-form risk bounds and sample-complexity inversion.

The lower bound combines a pairwise L1 separation alpha and a pairwise KL
ceiling beta over a finite class into

    (alpha / 4) * max{0, 1 - (n * beta + log 2) / log |class|},

clamped at zero so a vacuous bound is never negative.  The upper bound is
min{1, c * sqrt(VC / n)} where VC counts the dimension of the function space
inducing the density-comparison sets of each family.  The universal constant
c is a user parameter (default 1): reports always show it explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "FanoInputs",
    "VcInputs",
    "FAMILIES",
    "fano_lower_bound",
    "yatracos_vc_dimension",
    "vc_upper_bound",
    "sample_complexity",
]

FAMILIES = (
    "gaussian",
    "ising",
    "ising_no_field",
    "gaussian_unknown_graph",
    "ising_unknown_graph",
)


@dataclass(frozen=True)
class FanoInputs:
    alpha: float  # pairwise L1 separation lower bound
    beta: float  # pairwise KL upper bound
    class_size: int
    n: int

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 2.0):
            raise ValueError("alpha must lie in [0, 2] (L1 between densities)")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        if self.class_size < 2:
            raise ValueError("class_size must be at least 2")
        if self.n < 1:
            raise ValueError("n must be positive")


@dataclass(frozen=True)
class VcInputs:
    family: str
    d: int
    m: int
    n: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.d < 1:
            raise ValueError("d must be positive")
        if not (0 <= self.m <= self.d * (self.d - 1) // 2):
            raise ValueError("m must satisfy 0 <= m <= d(d-1)/2")
        if self.n < 1:
            raise ValueError("n must be positive")


def fano_lower_bound(inputs: FanoInputs) -> float:
    """Minimax-risk lower bound from a finite class; natural logarithms."""
    bracket = 1.0 - (inputs.n * inputs.beta + math.log(2.0)) / math.log(inputs.class_size)
    return (inputs.alpha / 4.0) * max(0.0, bracket)


def yatracos_vc_dimension(family: str, d: int, m: int) -> int:
    """VC dimension governing the minimum-distance estimator for each family.

    The density-comparison sets are zero sets of functions from a space
    spanned by 1, the edge monomials x_i x_j, and (with a field / a mean)
    the linear and square terms; its dimension bounds the VC dimension.
    The unknown-graph figure is an order-level surrogate with constant 1.
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    if family == "gaussian":
        return m + 2 * d + 1
    if family == "ising":
        return m + d + 1
    if family == "ising_no_field":
        return m + 1
    # unknown-graph variants: order (m + d) log d only
    return math.ceil((m + d) * math.log(d)) if d > 1 else 0


def vc_upper_bound(inputs: VcInputs, c: float = 1.0) -> float:
    """min{1, c * sqrt(VC / n)}; exactly 0 for the one-member no-field class."""
    if c <= 0:
        raise ValueError("c must be positive")
    if inputs.family == "ising_no_field" and inputs.m == 0:
        return 0.0  # the class holds a single distribution
    dim = yatracos_vc_dimension(inputs.family, inputs.d, inputs.m)
    return min(1.0, c * math.sqrt(dim / inputs.n))


def sample_complexity(family: str, d: int, m: int, eps: float, c: float = 1.0) -> int:
    """Smallest n at which the upper bound drops to eps (0 when it starts there)."""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in the open interval (0, 1)")
    if c <= 0:
        raise ValueError("c must be positive")
    if family == "ising_no_field" and m == 0:
        return 0
    dim = yatracos_vc_dimension(family, d, m)
    if dim == 0:
        return 0
    n = max(1, math.ceil(c * c * dim / (eps * eps)))
    # settle float boundary cases so that bound(n) <= eps < bound(n - 1)
    def bound(k: int) -> float:
        return vc_upper_bound(VcInputs(family, d, m, k), c)

    while n > 1 and bound(n - 1) <= eps:
        n -= 1
    while bound(n) > eps:
        n += 1
    return n
