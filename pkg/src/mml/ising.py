"""Ising models on graphs: exact enumeration machinery and samplers.

A model on {-1,+1}^d has Hamiltonian H(x) = x^T W x + h^T x with W symmetric,
zero-diagonal and supported on the graph edges, and probability mass
proportional to exp(H(x)).  For d up to the exact cutoff (default 20,
override with the MML_EXACT_CUTOFF environment variable) the partition
function, probability vector, moments and statistical distances are computed
by full enumeration of the 2^d configurations, in log space throughout.

Configurations are indexed by integers: bit j of the index set means
coordinate j is +1.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import logsumexp

from .graphs import Graph, make_graph
from .packing import SignPacking, build_packing, randomized_packing
from .rng import derive_seed, rng_from

__all__ = [
    "IsingModel",
    "HardIsingFamily",
    "ProductIsingFamily",
    "ExactCutoffError",
    "exact_cutoff",
    "configurations",
    "encode_configurations",
    "decode_configurations",
    "ising_model",
    "hamiltonian",
    "partition_function",
    "pmf",
    "log_pmf",
    "interactions_from_signs",
    "hard_ising_family",
    "build_hard_ising_family",
    "product_ising_family",
    "build_product_family",
    "sample_exact",
    "sample_gibbs",
    "tv_exact",
    "kl_exact",
    "quadratic_form_moments",
    "exp_moment",
    "pmf_csv_rows",
    "samples_csv_rows",
]

_BLOCK = 1 << 16


class ExactCutoffError(ValueError):
    """Raised when an exact-enumeration operation is asked for d beyond the cutoff."""


def exact_cutoff() -> int:
    """Dimension cutoff for 2^d enumeration (env MML_EXACT_CUTOFF, default 20)."""
    return int(os.environ.get("MML_EXACT_CUTOFF", "20"))


def _check_cutoff(d: int, what: str):
    cut = exact_cutoff()
    if d > cut:
        raise ExactCutoffError(
            f"{what} enumerates 2^d configurations; d={d} exceeds the cutoff {cut}"
        )


def configurations(d: int) -> np.ndarray:
    """All 2^d configurations as +-1 rows, row k decoding index k."""
    idx = np.arange(1 << d, dtype=np.int64)
    return decode_configurations(idx, d)


def decode_configurations(idx, d: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    bits = (idx[..., None] >> np.arange(d)) & 1
    return (2 * bits - 1).astype(np.int8)


def encode_configurations(x) -> np.ndarray | int:
    """Inverse of decode_configurations; accepts a single vector or a batch."""
    x = np.asarray(x)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    bits = (pts > 0).astype(np.int64)
    idx = bits @ (1 << np.arange(pts.shape[-1], dtype=np.int64))
    return int(idx[0]) if single else idx


@dataclass(frozen=True)
class IsingModel:
    """Field h and symmetric zero-diagonal interactions W on a graph."""

    graph: Graph
    field: np.ndarray
    interactions: np.ndarray
    log_partition: float | None  # cached when computable exactly

    @property
    def d(self) -> int:
        return self.graph.d

    def to_json(self) -> dict:
        return {
            "h": self.field.tolist(),
            "W": self.interactions.tolist(),
            "graph": self.graph.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "IsingModel":
        graph = Graph.from_json(obj["graph"])
        return ising_model(
            graph,
            field=np.array(obj["h"], dtype=float),
            interactions=np.array(obj["W"], dtype=float),
        )


def _all_hamiltonians(W: np.ndarray, h: np.ndarray, d: int) -> np.ndarray:
    total = 1 << d
    out = np.empty(total)
    for start in range(0, total, _BLOCK):
        idx = np.arange(start, min(start + _BLOCK, total), dtype=np.int64)
        x = decode_configurations(idx, d).astype(np.float64)
        out[start : start + idx.size] = np.einsum("ni,ij,nj->n", x, W, x) + x @ h
    return out


def ising_model(graph: Graph, field=None, interactions=None) -> IsingModel:
    """Build a validated model; caches log Z whenever it is exactly computable."""
    d = graph.d
    h = np.zeros(d) if field is None else np.array(field, dtype=float)
    W = np.zeros((d, d)) if interactions is None else np.array(interactions, dtype=float)
    if h.shape != (d,):
        raise ValueError("field has wrong length")
    if W.shape != (d, d):
        raise ValueError("interactions must be d x d")
    if np.any(np.diag(W) != 0.0):
        raise ValueError("interactions must be zero-diagonal")
    if not np.array_equal(W, W.T):
        raise ValueError("interactions must be symmetric")
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            if W[i - 1, j - 1] != 0.0 and not graph.has_edge(i, j):
                raise ValueError(f"interaction entry ({i},{j}) nonzero off the graph")
    if d <= exact_cutoff():
        log_z = float(logsumexp(_all_hamiltonians(W, h, d)))
    elif not W.any():
        # no interactions: the partition function factorizes over coordinates
        log_z = float(np.sum(np.log(2.0 * np.cosh(h))))
    else:
        log_z = None
    h.setflags(write=False)
    W.setflags(write=False)
    return IsingModel(graph, h, W, log_z)


def hamiltonian(model: IsingModel, x) -> float | np.ndarray:
    """H(x) = x^T W x + h^T x for a configuration (d,) or batch (n, d)."""
    x = np.asarray(x)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[1] != model.d:
        raise ValueError("configuration has wrong length")
    if not np.all(np.abs(pts) == 1):
        raise ValueError("configuration entries must be +-1")
    pts = pts.astype(np.float64)
    out = np.einsum("ni,ij,nj->n", pts, model.interactions, pts) + pts @ model.field
    return float(out[0]) if single else out


def partition_function(model: IsingModel) -> float:
    """log Z via log-sum-exp over all configurations."""
    _check_cutoff(model.d, "partition_function")
    if model.log_partition is not None:
        return model.log_partition
    return float(logsumexp(_all_hamiltonians(model.interactions, model.field, model.d)))


def log_pmf(model: IsingModel) -> np.ndarray:
    _check_cutoff(model.d, "log_pmf")
    energies = _all_hamiltonians(model.interactions, model.field, model.d)
    return energies - logsumexp(energies)


def pmf(model: IsingModel) -> np.ndarray:
    """Probability vector over configuration indices; sums to 1 up to roundoff."""
    return np.exp(log_pmf(model))


def interactions_from_signs(graph: Graph, s, delta: float) -> IsingModel:
    """Zero-field model with W = +-delta on the graph edges per the sign vector."""
    s = np.asarray(s)
    if s.shape != (graph.m,):
        raise ValueError(f"sign vector has length {len(s)}, graph has m={graph.m}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("sign vector entries must be +-1")
    W = np.zeros((graph.d, graph.d))
    for k, (i, j) in enumerate(graph.edges):
        W[i - 1, j - 1] = delta * float(s[k])
        W[j - 1, i - 1] = delta * float(s[k])
    return ising_model(graph, interactions=W)


@dataclass(frozen=True)
class HardIsingFamily:
    """One zero-field model per packing vector, W entries +-delta on the edges."""

    graph: Graph
    delta: float
    packing: SignPacking | None
    models: tuple[IsingModel, ...]

    @property
    def size(self) -> int:
        return len(self.models)

    def labels(self) -> list[str]:
        if self.packing is None:
            return ["uniform"]
        return ["".join("+" if x > 0 else "-" for x in v) for v in self.packing.vectors]

    def to_json(self) -> dict:
        return {
            "kind": "ising",
            "delta": self.delta,
            "graph": self.graph.to_json(),
            "packing": None if self.packing is None else self.packing.to_json(),
            "models": [mod.to_json() for mod in self.models],
        }


def hard_ising_family(
    graph: Graph, delta: float, packing: SignPacking | None = None
) -> HardIsingFamily:
    if graph.m == 0:
        return HardIsingFamily(graph, delta, None, (ising_model(graph),))
    if packing is None:
        packing = build_packing(graph.m)
    if packing.m != graph.m:
        raise ValueError(f"packing is over length {packing.m}, graph has m={graph.m}")
    models = tuple(interactions_from_signs(graph, v, delta) for v in packing.vectors)
    return HardIsingFamily(graph, delta, packing, models)


def build_hard_ising_family(graph: Graph, n: int, c2: float) -> HardIsingFamily:
    """Family at delta = c2 / sqrt(n), guarded exactly like the Gaussian build."""
    if n < 1:
        raise ValueError("n must be positive")
    if c2 <= 0:
        raise ValueError("c2 must be positive")
    delta = c2 / math.sqrt(n)
    m = graph.m
    if delta * delta * m > 1.0 / 8.0:
        raise ValueError(
            f"n={n} too small for m={m} at c2={c2}: need n >= {8 * c2 * c2 * m:.3g} "
            "so that delta*sqrt(2m) <= 1/2"
        )
    return hard_ising_family(graph, delta)


@dataclass(frozen=True)
class ProductIsingFamily:
    """Interaction-free models with field entries +-delta from a packing."""

    d: int
    delta: float
    packing: SignPacking
    models: tuple[IsingModel, ...]

    @property
    def size(self) -> int:
        return len(self.models)

    def labels(self) -> list[str]:
        return ["".join("+" if x > 0 else "-" for x in v) for v in self.packing.vectors]

    def to_json(self) -> dict:
        return {
            "kind": "product",
            "delta": self.delta,
            "d": self.d,
            "packing": self.packing.to_json(),
            "models": [mod.to_json() for mod in self.models],
        }


def product_ising_family(
    d: int, delta: float, packing: SignPacking | None = None, seed: int = 0
) -> ProductIsingFamily:
    """Family at a fixed delta > 0 over a packing of length-d sign vectors.

    The default packing is randomized with target size ceil(2^(d/5)): a
    typical pair then differs in about d/2 coordinates, and the family stays
    small enough for exact tournament selection downstream.
    """
    if delta <= 0:
        raise ValueError("delta must be positive (delta = 0 collapses the family)")
    if packing is None:
        target = math.ceil(2 ** (d / 5))
        if target < 2:
            target = 2
        packing = randomized_packing(d, target, derive_seed(seed, "product_packing", d))
    if packing.m != d:
        raise ValueError(f"packing is over length {packing.m}, need {d}")
    graph = make_graph(d, [])
    models = tuple(ising_model(graph, field=delta * np.asarray(v, dtype=float))
                   for v in packing.vectors)
    return ProductIsingFamily(d, delta, packing, models)


def build_product_family(d: int, n: int, c2: float, seed: int = 0) -> ProductIsingFamily:
    if n < 1:
        raise ValueError("n must be positive")
    if c2 <= 0:
        raise ValueError("c2 must be positive")
    return product_ising_family(d, c2 / math.sqrt(n), seed=seed)


def sample_exact(model: IsingModel, count: int, seed: int) -> np.ndarray:
    """I.i.d. draws by inverse-CDF over the exact probability vector."""
    if count < 1:
        raise ValueError("count must be positive")
    _check_cutoff(model.d, "sample_exact")
    cdf = np.cumsum(pmf(model))
    u = rng_from(seed, "ising_sample").random(count)
    idx = np.searchsorted(cdf, u, side="right")
    return decode_configurations(np.minimum(idx, (1 << model.d) - 1), model.d)


@njit(cache=True)
def _gibbs_chain(indptr, indices, weights, h, count, burn_in, thin, seed):  # pragma: no cover
    np.random.seed(seed)
    d = h.shape[0]
    x = np.ones(d, dtype=np.int8)
    out = np.empty((count, d), dtype=np.int8)
    total_sweeps = burn_in + count * thin
    k = 0
    for sweep in range(total_sweeps):
        for i in range(d):
            local = h[i]
            for p in range(indptr[i], indptr[i + 1]):
                local += 2.0 * weights[p] * x[indices[p]]
            prob = 1.0 / (1.0 + np.exp(-2.0 * local))
            x[i] = 1 if np.random.random() < prob else -1
        if sweep >= burn_in and (sweep - burn_in + 1) % thin == 0:
            out[k] = x
            k += 1
    return out


def sample_gibbs(
    model: IsingModel,
    count: int,
    burn_in: int | None = None,
    thin: int | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Single-site systematic-scan Gibbs sampler.

    burn_in and thin are measured in full sweeps over the d sites; defaults
    (1000*d and d) are conservative for the weak-interaction regimes this
    package exercises.  Site i flips to +1 with probability
    1 / (1 + exp(-2 (h_i + 2 sum_j W_ij x_j))).  Deterministic given the seed.
    """
    if count < 1:
        raise ValueError("count must be positive")
    d = model.d
    if burn_in is None:
        burn_in = 1000 * d
    if thin is None:
        thin = d
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    if thin < 1:
        raise ValueError("thin must be at least 1")
    W = model.interactions
    indptr = [0]
    indices: list[int] = []
    weights: list[float] = []
    for i in range(d):
        nz = np.nonzero(W[i])[0]
        indices.extend(int(j) for j in nz)
        weights.extend(float(W[i, j]) for j in nz)
        indptr.append(len(indices))
    return _gibbs_chain(
        np.array(indptr, dtype=np.int64),
        np.array(indices, dtype=np.int64),
        np.array(weights, dtype=np.float64),
        np.asarray(model.field, dtype=np.float64),
        count,
        burn_in,
        thin,
        derive_seed(seed, "gibbs") % (1 << 32),
    )


def _check_pair(p: IsingModel, q: IsingModel, what: str):
    if p.d != q.d:
        raise ValueError(f"dimension mismatch: {p.d} vs {q.d}")
    _check_cutoff(p.d, what)


def tv_exact(p: IsingModel, q: IsingModel) -> float:
    """Half the L1 distance between the exact probability vectors."""
    _check_pair(p, q, "tv_exact")
    return 0.5 * float(np.abs(pmf(p) - pmf(q)).sum())


def kl_exact(p: IsingModel, q: IsingModel) -> float:
    """KL(p || q) by exact enumeration; finite since q is everywhere positive."""
    _check_pair(p, q, "kl_exact")
    return float(np.sum(pmf(p) * (log_pmf(p) - log_pmf(q))))


def _check_quadratic_input(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    if np.any(np.diag(W) != 0.0):
        raise ValueError("W must be zero-diagonal")
    if not np.array_equal(W, W.T):
        raise ValueError("W must be symmetric")
    _check_cutoff(W.shape[0], "hypercube moments")
    return W


def _quadratic_forms(W: np.ndarray) -> np.ndarray:
    d = W.shape[0]
    return _all_hamiltonians(W, np.zeros(d), d)


def quadratic_form_moments(W, k: int) -> float:
    """E{(X^T W X)^k} for X uniform on the hypercube, by exact enumeration.

    The first moment is 0 and the second is 2 ||W||_F^2 for any symmetric
    zero-diagonal W.
    """
    W = _check_quadratic_input(W)
    if k < 1:
        raise ValueError("k must be a positive integer")
    q = _quadratic_forms(W)
    return float(np.mean(q**k))


def exp_moment(W, t: float) -> float:
    """E{exp(t X^T W X)} exactly; equals 2^{-d} Z(tW) for zero field."""
    W = _check_quadratic_input(W)
    if t <= 0:
        raise ValueError("t must be positive")
    q = _quadratic_forms(W)
    d = W.shape[0]
    return float(np.exp(logsumexp(t * q) - d * math.log(2.0)))


def pmf_csv_rows(model: IsingModel):
    """(config_index, probability) rows for CSV export."""
    yield ["config_index", "probability"]
    for k, p in enumerate(pmf(model)):
        yield [k, repr(float(p))]


def samples_csv_rows(draws) -> list:
    """One +-1 row per draw."""
    return [[int(v) for v in row] for row in np.asarray(draws)]
