"""Minimum-distance density estimation over finite classes.

The estimator compares, for every ordered pair (f, g) of class members, the
candidate's probability of the set {x : f(x) > g(x)} with the empirical
frequency of that set, and selects the member whose worst discrepancy is
smallest.  Ties go to the smallest member index, so selection is
deterministic.

Set probabilities are exact for Ising classes (hypercube enumeration, d up
to the exact cutoff) and Monte-Carlo approximated for Gaussian classes with
a shared evaluation sample per member (the half width of those estimates is
recorded on the class context).  Risk experiments draw per-trial sample
seeds from (master_seed, member label, trial index), so trials can run
concurrently in any order and still aggregate identically.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gaussian as gaussian_mod
from . import ising as ising_mod
from .gaussian import GaussianModel, HardGaussianFamily, hard_gaussian_family
from .graphs import Graph
from .ising import HardIsingFamily, IsingModel, ProductIsingFamily
from .packing import build_packing, randomized_packing
from .rng import derive_seed, rng_from

__all__ = [
    "FiniteClass",
    "RiskSummary",
    "RiskCurve",
    "RiskExperiment",
    "finite_class_from_family",
    "yatracos_statistic",
    "minimum_distance_select",
    "scheffe_select",
    "empirical_risk",
    "risk_curve",
    "fit_rate",
]

_HIST_MAX_STATES = 1 << 13  # below this, per-trial histograms beat index gathering


@dataclass
class FiniteClass:
    """Homogeneous finite class of models with stable labels.

    eval_count / eval_seed control the Monte-Carlo evaluation samples used
    for Gaussian set probabilities (seeded per member label, so the class is
    insensitive to member order).  tv_count controls the Monte-Carlo TV
    used when scoring Gaussian selections.
    """

    kind: str
    members: tuple
    labels: tuple[str, ...]
    eval_count: int = 100_000
    eval_seed: int = 0
    tv_count: int = 100_000
    _ctx: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("gaussian", "ising"):
            raise ValueError("kind must be 'gaussian' or 'ising'")
        self.members = tuple(self.members)
        if not self.members:
            raise ValueError("class must have at least one member")
        self.labels = tuple(str(x) for x in self.labels)
        if len(self.labels) != len(self.members):
            raise ValueError("labels and members must have equal length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be distinct")
        want = IsingModel if self.kind == "ising" else GaussianModel
        dims = set()
        for mem in self.members:
            if not isinstance(mem, want):
                raise ValueError(f"member {mem!r} is not a {self.kind} model")
            dims.add(mem.d)
        if len(dims) != 1:
            raise ValueError("members must share one dimension")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def d(self) -> int:
        return self.members[0].d

    def index_of(self, candidate) -> int:
        if isinstance(candidate, (int, np.integer)):
            if not 0 <= candidate < self.size:
                raise ValueError(f"member index {candidate} out of range")
            return int(candidate)
        if isinstance(candidate, str):
            if candidate not in self.labels:
                raise ValueError(f"label {candidate!r} not in class")
            return self.labels.index(candidate)
        for i, mem in enumerate(self.members):
            if mem is candidate:
                return i
        raise ValueError("candidate is not a member of the class")

    def context(self) -> "_ClassContext":
        if self._ctx is None:
            self._ctx = _ClassContext(self)
        return self._ctx


def finite_class_from_family(family, **opts) -> FiniteClass:
    if isinstance(family, (HardIsingFamily, ProductIsingFamily)):
        return FiniteClass("ising", family.models, family.labels(), **opts)
    if isinstance(family, HardGaussianFamily):
        return FiniteClass("gaussian", family.models, family.labels(), **opts)
    raise ValueError(f"unsupported family type {type(family)!r}")


class _ClassContext:
    """Precomputed pair sets, member set-probabilities and pairwise distances."""

    def __init__(self, fc: FiniteClass):
        self.fc = fc
        K = fc.size
        self.pairs = [(a, b) for a in range(K) for b in range(K) if a != b]
        if fc.kind == "ising":
            self._build_ising()
        else:
            self._build_gaussian()

    def _build_ising(self):
        fc = self.fc
        self.pmfs = np.array([ising_mod.pmf(mem) for mem in fc.members])
        self.cdfs = np.cumsum(self.pmfs, axis=1)
        if self.pairs:
            self.masks = np.array(
                [self.pmfs[a] > self.pmfs[b] for a, b in self.pairs], dtype=np.int8
            )
            self.set_probs = self.pmfs @ self.masks.T.astype(np.float64)
        else:
            self.masks = np.zeros((0, self.pmfs.shape[1]), dtype=np.int8)
            self.set_probs = np.zeros((fc.size, 0))
        self.tv = 0.5 * np.abs(self.pmfs[:, None, :] - self.pmfs[None, :, :]).sum(axis=2)
        self.set_prob_halfwidth = 0.0  # exact

    def _build_gaussian(self):
        fc = self.fc
        K = fc.size
        self.set_probs = np.zeros((K, len(self.pairs)))
        hw = 0.0
        for i, mem in enumerate(fc.members):
            seed = derive_seed(fc.eval_seed, "yatracos_eval", fc.labels[i])
            pts = gaussian_mod.sample(mem, fc.eval_count, seed)
            logd = np.array([gaussian_mod.log_density(m, pts) for m in fc.members])
            for p, (a, b) in enumerate(self.pairs):
                prob = float(np.mean(logd[a] > logd[b]))
                self.set_probs[i, p] = prob
                hw = max(hw, 1.96 * math.sqrt(prob * (1 - prob) / fc.eval_count))
        self.set_prob_halfwidth = hw

    def empirical_set_freqs(self, samples: np.ndarray) -> np.ndarray:
        """Frequencies of every pair set in one sample matrix (n, d)."""
        return self.empirical_set_freqs_batch(samples[None, ...])[0]

    def empirical_set_freqs_batch(self, batches: np.ndarray) -> np.ndarray:
        """(T, n, d) sample batches -> (T, npairs) empirical set frequencies."""
        T, n, _ = batches.shape
        if not self.pairs:
            return np.zeros((T, 0))
        if self.fc.kind == "ising":
            states = self.pmfs.shape[1]
            cfg = ising_mod.encode_configurations(batches.reshape(T * n, -1))
            cfg = cfg.reshape(T, n)
            if states <= _HIST_MAX_STATES:
                hist = np.zeros((T, states))
                for t in range(T):
                    hist[t] = np.bincount(cfg[t], minlength=states)
                return (hist / n) @ self.masks.T.astype(np.float64)
            picked = self.masks[:, cfg.reshape(-1)].reshape(len(self.pairs), T, n)
            return picked.mean(axis=2).T.astype(np.float64)
        out = np.empty((T, len(self.pairs)))
        for t in range(T):
            logd = np.array(
                [gaussian_mod.log_density(m, batches[t]) for m in self.fc.members]
            )
            for p, (a, b) in enumerate(self.pairs):
                out[t, p] = np.mean(logd[a] > logd[b])
        return out

    def statistics(self, freqs: np.ndarray) -> np.ndarray:
        """(T, npairs) set frequencies -> (T, K) tournament statistics."""
        T = freqs.shape[0]
        K = self.fc.size
        stats = np.zeros((T, K))
        if self.pairs:
            for i in range(K):
                stats[:, i] = np.max(np.abs(freqs - self.set_probs[i]), axis=1)
        return stats

    def draw(self, member: int, n: int, seed: int) -> np.ndarray:
        fc = self.fc
        if fc.kind == "ising":
            u = rng_from(seed, "ising_sample").random(n)
            idx = np.searchsorted(self.cdfs[member], u, side="right")
            idx = np.minimum(idx, self.pmfs.shape[1] - 1)
            return ising_mod.decode_configurations(idx, fc.d)
        return gaussian_mod.sample(fc.members[member], n, seed)

    def tv_to(self, chosen: int, true: int, seed: int) -> float:
        if chosen == true:
            return 0.0
        fc = self.fc
        if fc.kind == "ising":
            return float(self.tv[chosen, true])
        est, _ = gaussian_mod.tv_monte_carlo(
            fc.members[chosen], fc.members[true], fc.tv_count, seed
        )
        return est


def _validate_samples(fc: FiniteClass, samples) -> np.ndarray:
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] < 1:
        raise ValueError("samples must be a nonempty (n, d) array")
    if samples.shape[1] != fc.d:
        raise ValueError(f"samples have dimension {samples.shape[1]}, class has {fc.d}")
    return samples


def yatracos_statistic(candidate, samples, finite_class: FiniteClass) -> float:
    """Worst discrepancy of the candidate over all pair sets.

    For a single-member class there are no pairs and the supremum over the
    empty set is taken to be 0.
    """
    idx = finite_class.index_of(candidate)
    samples = _validate_samples(finite_class, samples)
    ctx = finite_class.context()
    if not ctx.pairs:
        return 0.0
    freqs = ctx.empirical_set_freqs(samples)
    return float(np.max(np.abs(freqs - ctx.set_probs[idx])))


def minimum_distance_select(finite_class: FiniteClass, samples) -> str:
    """Label of the member minimizing the statistic; first index wins ties."""
    samples = _validate_samples(finite_class, samples)
    ctx = finite_class.context()
    freqs = ctx.empirical_set_freqs_batch(samples[None, ...])
    chosen = int(ctx.statistics(freqs).argmin(axis=1)[0])
    return finite_class.labels[chosen]


def scheffe_select(finite_class: FiniteClass, samples) -> str:
    """Direct two-member rule: compare the A-probability of each member with
    the empirical frequency of A = {x : f0(x) > f1(x)}."""
    if finite_class.size != 2:
        raise ValueError("scheffe_select applies to two-member classes")
    samples = _validate_samples(finite_class, samples)
    ctx = finite_class.context()
    p = ctx.pairs.index((0, 1))
    freq = ctx.empirical_set_freqs(samples)[p]
    d0 = abs(ctx.set_probs[0, p] - freq)
    d1 = abs(ctx.set_probs[1, p] - freq)
    return finite_class.labels[0 if d0 <= d1 else 1]


@dataclass(frozen=True)
class RiskSummary:
    n: int
    trials: int
    labels: tuple[str, ...]
    member_mean: np.ndarray  # mean TV-to-truth per true member
    member_se: np.ndarray
    sup_risk: float  # max over members of the member means
    sup_se: float  # standard error attached to the maximizing member
    mean_risk: float  # grand mean over all (member, trial) records
    records: list  # (n, trial, true_label, chosen_label, tv_to_truth)


def _member_block(ctx: _ClassContext, member: int, n: int, trials: int, master_seed: int):
    fc = ctx.fc
    label = fc.labels[member]
    seeds = [derive_seed(master_seed, "risk", label, t) for t in range(trials)]
    batches = np.stack([ctx.draw(member, n, s) for s in seeds])
    freqs = ctx.empirical_set_freqs_batch(batches)
    chosen = ctx.statistics(freqs).argmin(axis=1)
    tvs = np.array(
        [
            ctx.tv_to(int(c), member, derive_seed(master_seed, "risk_tv", label, t))
            for t, c in enumerate(chosen)
        ]
    )
    return chosen, tvs


def empirical_risk(
    finite_class: FiniteClass, n: int, trials: int, master_seed: int, jobs: int = 1
) -> RiskSummary:
    """Measured risk of the selector: per-member means and the sup over members.

    Each (member, trial) cell draws its own seed, so results are identical
    for any worker count.
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    ctx = finite_class.context()
    K = finite_class.size
    chosen_all: list = [None] * K
    tv_all: list = [None] * K

    def work(member: int):
        chosen_all[member], tv_all[member] = _member_block(
            ctx, member, n, trials, master_seed
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, range(K)))
    else:
        for member in range(K):
            work(member)

    member_mean = np.array([tv.mean() for tv in tv_all])
    member_se = np.array(
        [tv.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0 for tv in tv_all]
    )
    top = int(member_mean.argmax())
    records = []
    for member in range(K):
        for t in range(trials):
            records.append(
                (
                    n,
                    t,
                    finite_class.labels[member],
                    finite_class.labels[int(chosen_all[member][t])],
                    float(tv_all[member][t]),
                )
            )
    return RiskSummary(
        n=n,
        trials=trials,
        labels=finite_class.labels,
        member_mean=member_mean,
        member_se=member_se,
        sup_risk=float(member_mean[top]),
        sup_se=float(member_se[top]),
        mean_risk=float(np.mean([r[4] for r in records])),
        records=records,
    )


@dataclass
class RiskExperiment:
    """Declarative config for a risk-versus-n experiment.

    Either fixed_delta (one family reused at every n) or c2 (family rebuilt
    with delta = c2 / sqrt(n)) must be set.  kind 'product' ignores the
    graph and uses d with interaction-free members.
    """

    kind: str  # "ising" | "gaussian" | "product"
    graph: Graph | None = None
    d: int | None = None
    c2: float | None = None
    fixed_delta: float | None = None
    packing: object = None  # prebuilt SignPacking wins over mode/target/seed
    packing_mode: str = "exhaustive"  # or "random"
    packing_target: int | None = None
    packing_seed: int = 0
    eval_count: int = 100_000
    tv_count: int = 100_000

    def __post_init__(self):
        if self.kind not in ("ising", "gaussian", "product"):
            raise ValueError("kind must be ising, gaussian or product")
        if (self.c2 is None) == (self.fixed_delta is None):
            raise ValueError("set exactly one of c2 and fixed_delta")
        if self.kind == "product":
            if self.d is None:
                raise ValueError("product experiments need d")
        elif self.graph is None:
            raise ValueError("graph experiments need a graph")

    def _packing(self, m: int):
        if m == 0:
            return None
        if self.packing is not None:
            return self.packing
        if self.packing_mode == "exhaustive":
            return build_packing(m, target_size=self.packing_target)
        if self.packing_mode == "random":
            target = self.packing_target
            if target is None:
                target = max(2, math.ceil(2 ** (m / 5)))
            return randomized_packing(m, target, self.packing_seed)
        raise ValueError(f"unknown packing mode {self.packing_mode!r}")

    def delta_for(self, n: int) -> float:
        if self.fixed_delta is not None:
            return self.fixed_delta
        return self.c2 / math.sqrt(n)

    def family_for(self, n: int):
        delta = self.delta_for(n)
        if self.kind == "product":
            packing = self._packing(self.d)
            return ising_mod.product_ising_family(self.d, delta, packing)
        packing = self._packing(self.graph.m)
        if self.kind == "ising":
            return ising_mod.hard_ising_family(self.graph, delta, packing)
        return hard_gaussian_family(self.graph, delta, packing)

    def class_for(self, n: int) -> FiniteClass:
        return finite_class_from_family(
            self.family_for(n), eval_count=self.eval_count, tv_count=self.tv_count
        )

    def manifest(self) -> dict:
        return {
            "kind": self.kind,
            "graph": None if self.graph is None else self.graph.to_json(),
            "d": self.d,
            "c2": self.c2,
            "fixed_delta": self.fixed_delta,
            "packing": None if self.packing is None else self.packing.to_json(),
            "packing_mode": self.packing_mode,
            "packing_target": self.packing_target,
            "packing_seed": self.packing_seed,
            "eval_count": self.eval_count,
            "tv_count": self.tv_count,
        }


@dataclass
class RiskCurve:
    records: list  # flat (n, trial, true_label, chosen_label, tv)
    per_n: list  # dicts: n, mean_risk, sup_risk, sup_se, mean_se
    fitted_slope: float | None
    fitted_intercept: float | None
    fitted_r_squared: float | None
    fit_error: str | None
    config: dict

    def csv_rows(self):
        header = ["n", "trial", "true_label", "chosen_label", "tv_to_truth"]
        yield header
        for rec in self.records:
            yield [rec[0], rec[1], rec[2], rec[3], repr(rec[4])]

    def plot_rows(self):
        yield ["n", "mean_risk", "stderr"]
        for row in self.per_n:
            yield [row["n"], repr(row["mean_risk"]), repr(row["mean_se"])]

    def manifest(self) -> dict:
        return {
            "config": self.config,
            "per_n": self.per_n,
            "fitted_slope": self.fitted_slope,
            "fitted_intercept": self.fitted_intercept,
            "fitted_r_squared": self.fitted_r_squared,
            "fit_error": self.fit_error,
        }


def fit_rate(points) -> tuple[float, float, float]:
    """Ordinary least squares of log risk on log n -> (slope, intercept, r^2)."""
    pts = [(float(n), float(r)) for n, r in points]
    if len(pts) < 2:
        raise ValueError("need at least two points")
    if any(r <= 0.0 for _, r in pts):
        raise ValueError("risks must be positive for a log-log fit")
    x = np.log([n for n, _ in pts])
    y = np.log([r for _, r in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def risk_curve(
    experiment: RiskExperiment,
    n_grid,
    trials: int,
    master_seed: int,
    jobs: int = 1,
) -> RiskCurve:
    """Run empirical_risk over the grid and fit the log-log rate.

    In c2 mode the family is rebuilt at every n (delta = c2 / sqrt(n)); in
    fixed_delta mode one family is shared by the whole grid.
    """
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < 2:
        raise ValueError("n_grid needs at least two points")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    if trials < 1:
        raise ValueError("trials must be positive")

    fixed_class = experiment.class_for(n_grid[0]) if experiment.fixed_delta is not None else None
    records = []
    per_n = []
    for n in n_grid:
        fc = fixed_class if fixed_class is not None else experiment.class_for(n)
        summary = empirical_risk(fc, n, trials, master_seed, jobs=jobs)
        records.extend(summary.records)
        all_tv = np.array([r[4] for r in summary.records])
        per_n.append(
            {
                "n": n,
                "mean_risk": float(all_tv.mean()),
                "mean_se": float(all_tv.std(ddof=1) / math.sqrt(len(all_tv)))
                if len(all_tv) > 1
                else 0.0,
                "sup_risk": summary.sup_risk,
                "sup_se": summary.sup_se,
                "delta": experiment.delta_for(n),
                "class_size": fc.size,
            }
        )
    slope = intercept = r2 = None
    fit_error = None
    try:
        slope, intercept, r2 = fit_rate([(row["n"], row["mean_risk"]) for row in per_n])
    except ValueError as exc:
        fit_error = str(exc)
    config = {
        "experiment": experiment.manifest(),
        "n_grid": n_grid,
        "trials": trials,
        "master_seed": master_seed,
        "risk_definition": "sup and mean taken over the finite constructed family",
    }
    return RiskCurve(records, per_n, slope, intercept, r2, fit_error, config)
