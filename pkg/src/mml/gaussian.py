"""Multivariate normal graphical models and their statistical distances.

A model is stored by its precision matrix (inverse covariance), which must
vanish off the edges of its graph.  The hard family construction places a
unit diagonal and +-delta on the graph edges according to a sign vector;
with delta^2 * m <= 1/8 every such precision matrix has eigenvalues in
[1/2, 3/2] (|lambda - 1| <= ||Delta||_F = delta * sqrt(2m) <= 1/2), so all
family members are well-conditioned.

Dimensions stay small (d <= a few dozen) throughout, so covariances are
obtained by direct inversion and symmetric square roots by full
eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .graphs import Graph, standard_graph
from .packing import SignPacking, build_packing
from .rng import derive_seed, rng_from, standard_normals

__all__ = [
    "GaussianModel",
    "HardGaussianFamily",
    "gaussian_model",
    "precision_from_signs",
    "hard_gaussian_family",
    "build_hard_gaussian_family",
    "log_density",
    "sample",
    "kl_divergence",
    "jeffreys_divergence",
    "tv_lower_bound_frobenius",
    "tv_monte_carlo",
    "divergence_report",
]

IDENTITY_TOL = 1e-8  # max-entry tolerance for covariance @ precision = I


@dataclass(frozen=True)
class GaussianModel:
    """Normal model with precision supported on a graph; arrays are read-only."""

    graph: Graph
    mean: np.ndarray
    precision: np.ndarray
    covariance: np.ndarray
    log_norm_const: float

    @property
    def d(self) -> int:
        return self.graph.d

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "precision": self.precision.tolist(),
            "graph": self.graph.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "GaussianModel":
        graph = Graph.from_json(obj["graph"])
        return gaussian_model(
            np.array(obj["precision"], dtype=float),
            mean=np.array(obj["mean"], dtype=float),
            graph=graph,
        )


def _complete_graph(d: int) -> Graph:
    return standard_graph("complete", d)


def gaussian_model(precision, mean=None, graph: Graph | None = None) -> GaussianModel:
    """Build a validated model from a precision matrix.

    The matrix is stored exactly symmetric (upper triangle is authoritative).
    Raises if it is not positive definite, if it has support off the graph,
    or if the computed inverse fails the identity check.
    """
    precision = np.array(precision, dtype=float)
    if precision.ndim != 2 or precision.shape[0] != precision.shape[1]:
        raise ValueError("precision must be a square matrix")
    d = precision.shape[0]
    if not np.allclose(precision, precision.T, atol=1e-12):
        raise ValueError("precision must be symmetric")
    precision = np.triu(precision) + np.triu(precision, 1).T
    if graph is None:
        graph = _complete_graph(d)
    if graph.d != d:
        raise ValueError(f"graph has {graph.d} vertices, precision is {d}x{d}")
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            if precision[i - 1, j - 1] != 0.0 and not graph.has_edge(i, j):
                raise ValueError(f"precision entry ({i},{j}) nonzero off the graph")
    if mean is None:
        mean = np.zeros(d)
    mean = np.array(mean, dtype=float)  # copy: the stored array is frozen below
    if mean.shape != (d,):
        raise ValueError("mean has wrong length")
    try:
        chol = np.linalg.cholesky(precision)
    except np.linalg.LinAlgError:
        raise ValueError("precision is not positive definite") from None
    covariance = np.linalg.inv(precision)
    covariance = (covariance + covariance.T) / 2.0
    err = np.max(np.abs(covariance @ precision - np.eye(d)))
    if err > IDENTITY_TOL:
        raise ValueError(f"covariance * precision deviates from I by {err:.2e}")
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    log_norm_const = -0.5 * d * math.log(2.0 * math.pi) + 0.5 * log_det
    for a in (mean, precision, covariance):
        a.setflags(write=False)
    return GaussianModel(graph, mean, precision, covariance, log_norm_const)


def precision_from_signs(
    graph: Graph, s, delta: float, allow_unstable: bool = False
) -> GaussianModel:
    """Zero-mean model with unit diagonal and +-delta on the graph edges.

    Enforces delta^2 * m <= 1/8 so that the eigenvalues stay in [1/2, 3/2];
    allow_unstable lifts the guard and requires only positive definiteness.
    """
    s = np.asarray(s)
    m = graph.m
    if s.shape != (m,):
        raise ValueError(f"sign vector has length {len(s)}, graph has m={m}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("sign vector entries must be +-1")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if not allow_unstable and delta * delta * m > 1.0 / 8.0 + 1e-15:
        raise ValueError(
            f"delta^2 * m = {delta * delta * m:.4g} > 1/8; the eigenvalue "
            "bound no longer applies (pass allow_unstable=True to override)"
        )
    precision = np.eye(graph.d)
    for k, (i, j) in enumerate(graph.edges):
        precision[i - 1, j - 1] = delta * float(s[k])
        precision[j - 1, i - 1] = delta * float(s[k])
    return gaussian_model(precision, graph=graph)


@dataclass(frozen=True)
class HardGaussianFamily:
    """One zero-mean model per sign vector of a packing, at a common delta."""

    graph: Graph
    delta: float
    packing: SignPacking | None  # None only for the trivial m=0 family
    models: tuple[GaussianModel, ...]

    @property
    def size(self) -> int:
        return len(self.models)

    def labels(self) -> list[str]:
        if self.packing is None:
            return ["standard"]
        return ["".join("+" if x > 0 else "-" for x in v) for v in self.packing.vectors]

    def to_json(self) -> dict:
        return {
            "kind": "gaussian",
            "delta": self.delta,
            "graph": self.graph.to_json(),
            "packing": None if self.packing is None else self.packing.to_json(),
            "models": [mod.to_json() for mod in self.models],
        }


def hard_gaussian_family(
    graph: Graph, delta: float, packing: SignPacking | None = None
) -> HardGaussianFamily:
    """Family at a fixed delta; builds the packing for the graph when absent."""
    if graph.m == 0:
        return HardGaussianFamily(
            graph, delta, None, (gaussian_model(np.eye(graph.d), graph=graph),)
        )
    if packing is None:
        packing = build_packing(graph.m)
    if packing.m != graph.m:
        raise ValueError(f"packing is over length {packing.m}, graph has m={graph.m}")
    models = tuple(precision_from_signs(graph, v, delta) for v in packing.vectors)
    return HardGaussianFamily(graph, delta, packing, models)


def build_hard_gaussian_family(graph: Graph, n: int, c2: float) -> HardGaussianFamily:
    """Family at delta = c2 / sqrt(n).

    Requires n large enough that delta * sqrt(2m) <= 1/2 (i.e. n >= 8 c2^2 m),
    the regime in which every member is guaranteed well-conditioned.
    """
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
    return hard_gaussian_family(graph, delta)


def log_density(model: GaussianModel, x) -> float | np.ndarray:
    """Log density at a point (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[1] != model.d:
        raise ValueError(f"points have dimension {pts.shape[1]}, model has {model.d}")
    centered = pts - model.mean
    quad = np.einsum("ni,ij,nj->n", centered, model.precision, centered)
    out = -0.5 * quad + model.log_norm_const
    return float(out[0]) if single else out


def sample(model: GaussianModel, count: int, seed: int) -> np.ndarray:
    """Draw count i.i.d. vectors, deterministically from the seed.

    With precision = L L^T, x = mean + solve(L^T, z) has the model's
    covariance; z comes from the shared uniform-to-normal transform.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = rng_from(seed, "gaussian_sample")
    z = standard_normals(rng, (count, model.d))
    chol = np.linalg.cholesky(model.precision)
    return model.mean + solve_triangular(chol, z.T, lower=True, trans="T").T


def _check_same_d(p: GaussianModel, q: GaussianModel):
    if p.d != q.d:
        raise ValueError(f"dimension mismatch: {p.d} vs {q.d}")


def _check_zero_means(p: GaussianModel, q: GaussianModel):
    if np.any(p.mean != 0.0) or np.any(q.mean != 0.0):
        raise ValueError("only defined for zero-mean models")


def kl_divergence(p: GaussianModel, q: GaussianModel) -> float:
    """KL(p || q) in closed form."""
    _check_same_d(p, q)
    d = p.d
    trace_term = float(np.sum(q.precision * p.covariance))
    dm = q.mean - p.mean
    quad = float(dm @ q.precision @ dm)
    # log det Sigma_q - log det Sigma_p = log det P_p - log det P_q
    log_det = float(np.linalg.slogdet(p.precision)[1] - np.linalg.slogdet(q.precision)[1])
    return 0.5 * (trace_term - d + quad + log_det)


def jeffreys_divergence(p: GaussianModel, q: GaussianModel) -> float:
    """Symmetrized divergence tr((S_p - S_q)(P_q - P_p)) / 2 for zero means.

    Equals kl(p, q) + kl(q, p); the trace form avoids the log-determinants.
    """
    _check_same_d(p, q)
    _check_zero_means(p, q)
    diff_cov = p.covariance - q.covariance
    diff_prec = q.precision - p.precision
    return 0.5 * float(np.sum(diff_cov * diff_prec))


def tv_lower_bound_frobenius(p: GaussianModel, q: GaussianModel) -> float:
    """min{1, || S_p^{1/2} P_q S_p^{1/2} - I ||_F} / 100, a certified TV floor."""
    _check_same_d(p, q)
    _check_zero_means(p, q)
    lam, vec = np.linalg.eigh(p.covariance)
    root = vec @ np.diag(np.sqrt(np.maximum(lam, 0.0))) @ vec.T
    dev = root @ q.precision @ root - np.eye(p.d)
    return min(1.0, float(np.linalg.norm(dev, "fro"))) / 100.0


def tv_monte_carlo(
    p: GaussianModel, q: GaussianModel, count: int, seed: int
) -> tuple[float, float]:
    """Unbiased TV estimate with a normal-approximation half width.

    Averages max{0, 1 - q(x)/p(x)} over x ~ p, computed in log space; the
    integrand lies in [0, 1] and has expectation exactly TV(p, q).
    """
    _check_same_d(p, q)
    x = sample(p, count, seed)
    diff = log_density(q, x) - log_density(p, x)
    integrand = np.where(diff < 0.0, -np.expm1(np.minimum(diff, 0.0)), 0.0)
    estimate = float(np.mean(integrand))
    if count > 1:
        half_width = 1.96 * float(np.std(integrand, ddof=1)) / math.sqrt(count)
    else:
        half_width = 0.0
    return estimate, half_width


def divergence_report(models, mc_count: int = 100_000, seed: int = 0) -> list[dict]:
    """Pairwise divergence rows (one per unordered pair) for CSV export."""
    rows = []
    for a in range(len(models)):
        for b in range(a + 1, len(models)):
            p, q = models[a], models[b]
            est, hw = tv_monte_carlo(p, q, mc_count, derive_seed(seed, "pair", a, b))
            rows.append(
                {
                    "pair_id": f"{a}-{b}",
                    "kl_pq": kl_divergence(p, q),
                    "kl_qp": kl_divergence(q, p),
                    "jeffreys": jeffreys_divergence(p, q),
                    "tv_lb": tv_lower_bound_frobenius(p, q),
                    "tv_mc": est,
                    "tv_mc_halfwidth": hw,
                }
            )
    return rows
