"""Named numerical checks, one per inequality the constructions rely on.

Every check draws its own RNG from (suite_seed, check_name), emits a JSON
report {check, status, fitted_constants, failures, info} and treats any
in-hypothesis violation as a failure with enough data to reproduce it.
Constants that the theory leaves abstract are always fitted from a sweep
and reported, never asserted against guessed magnitudes; a disjoint-seed
rerun must reproduce each fitted constant within a factor of two.
Out-of-hypothesis probes are reported under info and never counted as
failures.

Hypercube variates are uniformly bounded, so their sub-gaussian scale is an
absolute constant that the fitted constants absorb; no check carries it as
a separate parameter.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import gaussian as gaussian_mod
from . import ising as ising_mod
from .estimation import fit_rate
from .graphs import make_graph, standard_graph
from .packing import build_packing
from .rng import derive_seed, rng_from

__all__ = [
    "CHECK_NAMES",
    "run_check",
    "run_all",
    "verify_psd",
    "verify_partition_bounds",
    "verify_moment_identities",
    "verify_kl_bounds_gaussian",
    "verify_kl_bounds_ising",
    "verify_l1_lower_ising",
    "verify_tv_lower_gaussian",
    "verify_frobenius_facts",
]


def _report(check, seed, failures, fitted=None, info=None) -> dict:
    return {
        "check": check,
        "status": "PASS" if not failures else "FAIL",
        "seed": seed,
        "fitted_constants": fitted or {},
        "failures": failures,
        "info": info or {},
    }


def _random_graph(rng, d_max, d_min=2, m_min=1):
    d = int(rng.integers(d_min, d_max + 1))
    max_m = d * (d - 1) // 2
    m = int(rng.integers(m_min, max_m + 1))
    all_pairs = list(itertools.combinations(range(1, d + 1), 2))
    picked = rng.choice(len(all_pairs), size=m, replace=False)
    return make_graph(d, [all_pairs[k] for k in picked])


def _random_signs(rng, m):
    return (2 * rng.integers(0, 2, size=m) - 1).astype(np.int8)


def verify_psd(trials: int = 1000, d_max: int = 12, seed: int = 0) -> dict:
    """Eigenvalues of hard-family precision matrices stay inside [1/2, 3/2].

    Instances use random graphs, random signs and delta with delta^2 m <= 1/8
    (a share of them exactly on the boundary).  Also asserts the norm chain
    spectral(Delta) <= frobenius(Delta) = delta*sqrt(2m) <= 1/2 that yields
    the confinement.
    """
    rng = rng_from(seed, "psd")
    failures = []
    tol = 1e-9
    for trial in range(trials):
        graph = _random_graph(rng, d_max)
        s = _random_signs(rng, graph.m)
        dmax_delta = 1.0 / math.sqrt(8.0 * graph.m)
        delta = dmax_delta if trial % 10 == 0 else float(rng.random()) * dmax_delta
        model = gaussian_mod.precision_from_signs(graph, s, delta)
        eigs = np.linalg.eigvalsh(model.precision)
        delta_mat = model.precision - np.eye(graph.d)
        fro = float(np.linalg.norm(delta_mat, "fro"))
        spec = float(np.linalg.norm(delta_mat, 2))
        expected_fro = delta * math.sqrt(2.0 * graph.m)
        ok = (
            eigs.min() >= 0.5 - tol
            and eigs.max() <= 1.5 + tol
            and spec <= fro + tol
            and abs(fro - expected_fro) <= 1e-10 * max(1.0, expected_fro)
            and fro <= 0.5 + tol
        )
        if not ok:
            failures.append(
                {
                    "trial": trial,
                    "d": graph.d,
                    "m": graph.m,
                    "delta": delta,
                    "eig_min": float(eigs.min()),
                    "eig_max": float(eigs.max()),
                }
            )
    # out-of-hypothesis probe: delta^2 m = 0.5 on a star
    star = standard_graph("star", d_max)
    delta = math.sqrt(0.5 / star.m)
    probe = gaussian_mod.precision_from_signs(
        star, np.ones(star.m, dtype=np.int8), delta, allow_unstable=True
    )
    probe_eigs = np.linalg.eigvalsh(probe.precision)
    info = {
        "out_of_hypothesis_probe": {
            "graph": "star",
            "delta_sq_m": 0.5,
            "eig_min": float(probe_eigs.min()),
            "eig_max": float(probe_eigs.max()),
            "inside_band": bool(probe_eigs.min() >= 0.5 and probe_eigs.max() <= 1.5),
        }
    }
    return _report("psd", seed, failures, info=info)


def _partition_sweep(rng, samples, d_max, fnorm_max=0.25):
    """Random zero-field models with a target frobenius norm in (0, fnorm_max]."""
    out = []
    for k in range(samples):
        graph = _random_graph(rng, d_max)
        s = _random_signs(rng, graph.m)
        fnorm = fnorm_max if k % 25 == 0 else float(rng.random()) * fnorm_max
        fnorm = max(fnorm, 1e-3)
        delta = fnorm / math.sqrt(2.0 * graph.m)
        model = ising_mod.interactions_from_signs(graph, s, delta)
        out.append((model, fnorm))
    return out


def verify_partition_bounds(samples: int = 250, d_max: int = 12, seed: int = 0) -> dict:
    """1 <= 2^{-d} Z(W) <= 1 + c ||W||_F^2 for small zero-field interactions.

    The lower inequality must hold exactly (up to float roundoff) on every
    instance; the upper constant is the sweep maximum of
    (2^{-d} Z - 1) / ||W||_F^2 and must agree within x2 across two sweeps.
    """
    failures = []
    constants = []
    for sweep in ("A", "B"):
        rng = rng_from(seed, "partition", sweep)
        ratios = []
        for model, fnorm in _partition_sweep(rng, samples, d_max):
            excess = math.expm1(
                ising_mod.partition_function(model) - model.d * math.log(2.0)
            )
            if excess < -1e-12:
                failures.append(
                    {"sweep": sweep, "d": model.d, "fnorm": fnorm, "excess": excess}
                )
            ratios.append(excess / fnorm**2)
        constants.append(max(ratios))
    stable = max(constants) <= 2.0 * min(constants)
    if not stable:
        failures.append({"reason": "fitted constant unstable", "constants": constants})
    fitted = {"partition_upper_c": max(constants), "per_sweep": constants}
    return _report("partition", seed, failures, fitted=fitted)


def _random_zero_diag(rng, d, fnorm):
    g = rng.normal(size=(d, d))
    w = np.triu(g, 1)
    w = w + w.T
    norm = np.linalg.norm(w, "fro")
    return w * (fnorm / norm) if norm > 0 else w


def verify_moment_identities(trials: int = 100, d_max: int = 12, seed: int = 0) -> dict:
    """First and second hypercube moments of x^T W x: exactly 0 and 2||W||_F^2.

    Also fits the growth constant max_k E{(x^T W x)^k}^(1/k) / (k ||W||_F)
    over k in {2, 4, 8}.
    """
    rng = rng_from(seed, "moments")
    failures = []
    growth = []
    for trial in range(trials):
        d = int(rng.integers(2, d_max + 1))
        w = _random_zero_diag(rng, d, fnorm=float(rng.uniform(0.2, 3.0)))
        fro2 = float(np.linalg.norm(w, "fro") ** 2)
        m1 = ising_mod.quadratic_form_moments(w, 1)
        m2 = ising_mod.quadratic_form_moments(w, 2)
        if abs(m1) > 1e-10 or abs(m2 - 2.0 * fro2) > 1e-10 * max(1.0, 2.0 * fro2):
            failures.append({"trial": trial, "d": d, "m1": m1, "m2": m2, "fro2": fro2})
        if trial % 5 == 0:
            fro = math.sqrt(fro2)
            for k in (2, 4, 8):
                mk = ising_mod.quadratic_form_moments(w, k)
                growth.append(mk ** (1.0 / k) / (k * fro))
    fitted = {"moment_growth_c": max(growth)}
    return _report("moments", seed, failures, fitted=fitted)


def _random_near_identity_precision(rng, d, radius):
    delta = _random_zero_diag(rng, d, 1.0)
    diag = rng.normal(size=d)
    delta = delta + np.diag(diag)
    delta *= radius / np.linalg.norm(delta, "fro")
    return np.eye(d) + delta


def verify_kl_bounds_gaussian(pairs: int = 500, d_max: int = 8, seed: int = 0) -> dict:
    """KL <= 2 ||P_q - P_p||_F^2 whenever both precisions are within 1/2 of I."""
    rng = rng_from(seed, "kl_gaussian")
    failures = []
    for trial in range(pairs):
        d = int(rng.integers(1, d_max + 1))
        r1 = 0.5 if trial % 10 == 0 else float(rng.random()) * 0.5
        r2 = float(rng.random()) * 0.5
        p = gaussian_mod.gaussian_model(_random_near_identity_precision(rng, d, r1))
        q = gaussian_mod.gaussian_model(_random_near_identity_precision(rng, d, r2))
        kl = gaussian_mod.kl_divergence(p, q)
        bound = 2.0 * float(np.linalg.norm(q.precision - p.precision, "fro") ** 2)
        if kl > bound + 1e-12:
            failures.append({"trial": trial, "d": d, "kl": kl, "bound": bound})
    return _report("kl_gaussian", seed, failures)


def verify_kl_bounds_ising(samples: int = 150, d_max: int = 10, seed: int = 0) -> dict:
    """Fitted ceiling for KL / (||W||_F^2 + ||W~||_F^2) over small-norm pairs."""
    failures = []
    constants = []
    for sweep in ("A", "B"):
        rng = rng_from(seed, "kl_ising", sweep)
        ratios = []
        for k in range(samples):
            graph = _random_graph(rng, d_max)
            fnorm = max(float(rng.random()) * 0.25, 1e-3)
            delta = fnorm / math.sqrt(2.0 * graph.m)
            p = ising_mod.interactions_from_signs(graph, _random_signs(rng, graph.m), delta)
            q = ising_mod.interactions_from_signs(graph, _random_signs(rng, graph.m), delta)
            kl = ising_mod.kl_exact(p, q)
            denom = float(
                np.linalg.norm(p.interactions, "fro") ** 2
                + np.linalg.norm(q.interactions, "fro") ** 2
            )
            if kl < -1e-12:
                failures.append({"sweep": sweep, "k": k, "kl": kl})
            ratios.append(kl / denom)
        constants.append(max(ratios))
    stable = max(constants) <= 2.0 * min(constants)
    if not stable:
        failures.append({"reason": "fitted constant unstable", "constants": constants})
    return _report(
        "kl_ising", seed, failures, fitted={"kl_ratio_c": max(constants), "per_sweep": constants}
    )


def _l1_sweep(rng, samples, d_max):
    rows = []
    for _ in range(samples):
        graph = _random_graph(rng, d_max, d_min=3, m_min=2)
        fnorm = max(float(rng.random()) * 0.25, 2e-2)
        delta = fnorm / math.sqrt(2.0 * graph.m)
        s1 = _random_signs(rng, graph.m)
        s2 = _random_signs(rng, graph.m)
        if np.array_equal(s1, s2):
            s2 = -s2
        p = ising_mod.interactions_from_signs(graph, s1, delta)
        q = ising_mod.interactions_from_signs(graph, s2, delta)
        l1 = 2.0 * ising_mod.tv_exact(p, q)
        dw = float(np.linalg.norm(p.interactions - q.interactions, "fro"))
        ssum = float(
            np.linalg.norm(p.interactions, "fro") ** 2
            + np.linalg.norm(q.interactions, "fro") ** 2
        )
        if dw > 0:
            rows.append((l1, dw, ssum))
    return rows


def verify_l1_lower_ising(
    samples: int = 120, d_max: int = 10, seed: int = 0, slope_tol: float = 0.05
) -> dict:
    """L1 separation of the hard family: linear in ||W - W~||_F at small norms.

    Two parts: (a) on a fixed sign pair, the exact L1 distance against delta
    in {0.1, 0.05, 0.025, 0.0125} has log-log slope 1 within slope_tol;
    (b) with the quadratic correction c3 fitted jointly by least squares,
    the certified coefficient c2 = min (L1 + c3 * S) / ||W - W~||_F over the
    sweep is strictly positive and stable across two sweeps.
    """
    failures = []
    graph = standard_graph("path", 8)
    packing = build_packing(graph.m, target_size=2)
    deltas = [0.1, 0.05, 0.025, 0.0125]
    l1s = []
    for delta in deltas:
        p = ising_mod.interactions_from_signs(graph, packing.vectors[0], delta)
        q = ising_mod.interactions_from_signs(graph, packing.vectors[1], delta)
        l1s.append(2.0 * ising_mod.tv_exact(p, q))
    slope, _, _ = fit_rate(list(zip(deltas, l1s)))
    if abs(slope - 1.0) > slope_tol:
        failures.append({"reason": "delta sweep slope off", "slope": slope})

    constants = []
    c3_values = []
    for sweep in ("A", "B"):
        rng = rng_from(seed, "l1_ising", sweep)
        rows = _l1_sweep(rng, samples, d_max)
        design = np.array([[dw, -ssum] for _, dw, ssum in rows])
        response = np.array([l1 for l1, _, _ in rows])
        coef, *_ = np.linalg.lstsq(design, response, rcond=None)
        c3 = max(float(coef[1]), 0.0)
        c2 = min((l1 + c3 * ssum) / dw for l1, dw, ssum in rows)
        if c2 <= 0:
            failures.append({"sweep": sweep, "reason": "certified c2 not positive", "c2": c2})
        constants.append(c2)
        c3_values.append(c3)
    if max(constants) > 2.0 * min(constants):
        failures.append({"reason": "fitted constant unstable", "constants": constants})
    fitted = {
        "l1_slope_vs_delta": slope,
        "l1_lower_c2": min(constants),
        "l1_quadratic_c3": max(c3_values),
        "per_sweep_c2": constants,
    }
    return _report("l1_ising", seed, failures, fitted=fitted)


def verify_tv_lower_gaussian(
    pairs: int = 100, count: int = 100_000, d_max: int = 8, seed: int = 0
) -> dict:
    """Monte-Carlo TV (plus 3 half-widths) dominates the certified floor."""
    rng = rng_from(seed, "tv_gaussian")
    failures = []
    for trial in range(pairs):
        d = int(rng.integers(1, d_max + 1))
        if trial % 2 == 0 and d >= 2:
            graph = _random_graph(rng, d_max, d_min=d, m_min=1)
            dmax_delta = 1.0 / math.sqrt(8.0 * graph.m)
            delta = float(rng.uniform(0.5, 1.0)) * dmax_delta
            p = gaussian_mod.precision_from_signs(graph, _random_signs(rng, graph.m), delta)
            q = gaussian_mod.precision_from_signs(graph, _random_signs(rng, graph.m), delta)
        else:
            p = gaussian_mod.gaussian_model(
                _random_near_identity_precision(rng, d, float(rng.random()) * 0.5)
            )
            q = gaussian_mod.gaussian_model(
                _random_near_identity_precision(rng, d, float(rng.random()) * 0.5)
            )
        floor = gaussian_mod.tv_lower_bound_frobenius(p, q)
        est, hw = gaussian_mod.tv_monte_carlo(
            p, q, count, derive_seed(seed, "tv_gaussian_mc", trial)
        )
        # 1e-12 absorbs roundoff in the floor for (near-)identical pairs
        if est + 3.0 * hw + 1e-12 < floor:
            failures.append(
                {"trial": trial, "d": p.d, "floor": floor, "estimate": est, "hw": hw}
            )
    return _report("tv_gaussian", seed, failures)


def verify_frobenius_facts(trials: int = 200, d_max: int = 8, seed: int = 0) -> dict:
    """Product-norm inequalities and singular-value identities on random matrices."""
    rng = rng_from(seed, "frobenius")
    failures = []
    rel = 1e-8
    for trial in range(trials):
        d = int(rng.integers(1, d_max + 1))
        a = rng.normal(size=(d, d))
        b = rng.normal(size=(d, d))
        if trial % 20 == 0:
            a = np.eye(d)
        if trial % 20 == 10 and d >= 2:
            a[:, 0] = a[:, 1]  # rank-deficient: left bound degenerates to 0
        sa = np.linalg.svd(a, compute_uv=False)
        sb = np.linalg.svd(b, compute_uv=False)
        fa, fb = np.linalg.norm(a, "fro"), np.linalg.norm(b, "fro")
        fab = np.linalg.norm(a @ b, "fro")
        lower = max(sa[-1] * fb, sb[-1] * fa)
        upper = min(sa[0] * fb, sb[0] * fa)
        scale = max(1.0, fab)
        ok = lower <= fab + rel * scale and fab <= upper + rel * scale
        ok = ok and np.linalg.norm(a, 2) <= fa + rel * max(1.0, fa)
        if sa[-1] > 1e-10:
            inv_s = np.linalg.svd(np.linalg.inv(a), compute_uv=False)
            recip = np.sort(1.0 / sa)
            ok = ok and np.allclose(np.sort(inv_s), recip, rtol=1e-8)
        if not ok:
            failures.append({"trial": trial, "d": d, "fab": float(fab)})
    return _report("frobenius", seed, failures)


CHECK_NAMES = (
    "psd",
    "partition",
    "moments",
    "kl_gaussian",
    "kl_ising",
    "l1_ising",
    "tv_gaussian",
    "frobenius",
)

_CHECKS = {
    "psd": verify_psd,
    "partition": verify_partition_bounds,
    "moments": verify_moment_identities,
    "kl_gaussian": verify_kl_bounds_gaussian,
    "kl_ising": verify_kl_bounds_ising,
    "l1_ising": verify_l1_lower_ising,
    "tv_gaussian": verify_tv_lower_gaussian,
    "frobenius": verify_frobenius_facts,
}


def run_check(name: str, seed: int = 0, **overrides) -> dict:
    if name not in _CHECKS:
        raise ValueError(
            f"unknown check {name!r}; valid names: {', '.join(CHECK_NAMES)}"
        )
    return _CHECKS[name](seed=seed, **overrides)


def run_all(seed: int = 0) -> list[dict]:
    return [run_check(name, seed=seed) for name in CHECK_NAMES]
