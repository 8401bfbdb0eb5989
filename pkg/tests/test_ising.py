import math

import numpy as np
import pytest

from mml.graphs import make_graph, standard_graph
from mml.ising import (
    ExactCutoffError,
    IsingModel,
    build_hard_ising_family,
    build_product_family,
    configurations,
    decode_configurations,
    encode_configurations,
    exp_moment,
    hamiltonian,
    hard_ising_family,
    interactions_from_signs,
    ising_model,
    kl_exact,
    log_pmf,
    partition_function,
    pmf,
    product_ising_family,
    quadratic_form_moments,
    sample_exact,
    sample_gibbs,
    tv_exact,
)
from mml.packing import build_packing
from mml.rng import rng_from

EDGE = make_graph(2, [(1, 2)])
SINGLETON = make_graph(1, [])


def field_model(*h):
    return ising_model(make_graph(len(h), []), field=list(h))


def enumeration_logz(model):
    """Brute-force oracle: sum exp(H) over explicitly listed configurations."""
    total = 0.0
    for x in configurations(model.d).astype(float):
        total += math.exp(float(x @ model.interactions @ x + model.field @ x))
    return math.log(total)


class TestConfigurations:
    def test_encode_decode_roundtrip(self):
        for d in (1, 3, 6):
            idx = np.arange(2**d)
            assert np.array_equal(encode_configurations(decode_configurations(idx, d)), idx)

    def test_bit_convention(self):
        # bit j set <-> coordinate j is +1
        assert decode_configurations(np.array([5]), 3).tolist() == [[1, -1, 1]]
        assert encode_configurations([1, -1, 1]) == 5


class TestHamiltonian:
    def test_zero_model(self):
        model = ising_model(EDGE)
        for x in configurations(2):
            assert hamiltonian(model, x) == 0.0

    def test_single_edge(self):
        model = interactions_from_signs(EDGE, [1], 0.3)
        assert hamiltonian(model, [1, 1]) == pytest.approx(2 * 0.3)
        assert hamiltonian(model, [1, -1]) == pytest.approx(-2 * 0.3)

    def test_field_only(self):
        assert hamiltonian(field_model(0.7), [-1]) == pytest.approx(-0.7)

    def test_rejects_non_sign_input(self):
        with pytest.raises(ValueError, match="\\+-1"):
            hamiltonian(ising_model(EDGE), [0.5, 1.0])


class TestPartitionFunction:
    def test_uniform(self):
        for d in (1, 4, 9):
            model = ising_model(make_graph(d, []))
            assert partition_function(model) == pytest.approx(d * math.log(2))

    def test_single_edge_cosh(self):
        delta = 0.3
        model = interactions_from_signs(EDGE, [1], delta)
        assert math.exp(partition_function(model)) == pytest.approx(4 * math.cosh(2 * delta))

    @pytest.mark.parametrize("d", [2, 5, 12])
    def test_product_factorization(self, d):
        rng = rng_from(0, "partition_product", d)
        h = rng.normal(size=d)
        model = ising_model(make_graph(d, []), field=h)
        factorized = float(np.sum(np.log(2 * np.cosh(h))))
        assert partition_function(model) == pytest.approx(factorized, abs=1e-10)

    def test_matches_enumeration_oracle(self):
        g = standard_graph("cycle", 4)
        model = interactions_from_signs(g, [1, -1, 1, -1], 0.4)
        assert partition_function(model) == pytest.approx(enumeration_logz(model), abs=1e-10)

    def test_cutoff(self, monkeypatch):
        monkeypatch.setenv("MML_EXACT_CUTOFF", "4")
        model = ising_model(make_graph(3, []))
        assert partition_function(model) == pytest.approx(3 * math.log(2))
        big = IsingModel(make_graph(6, []), np.zeros(6), np.zeros((6, 6)), None)
        with pytest.raises(ExactCutoffError, match="cutoff 4"):
            partition_function(big)


class TestPmf:
    def test_uniform(self):
        p = pmf(ising_model(make_graph(3, [])))
        assert np.allclose(p, 1 / 8)

    def test_sigmoid_value(self):
        p = pmf(field_model(0.5))
        plus = math.exp(0.5) / (math.exp(0.5) + math.exp(-0.5))
        assert p[encode_configurations([1])] == pytest.approx(plus)
        assert plus == pytest.approx(0.7311, abs=1e-4)

    def test_aligned_configs(self):
        delta = 0.2
        p = pmf(interactions_from_signs(EDGE, [1], delta))
        expect = math.exp(2 * delta) / (4 * math.cosh(2 * delta))
        assert p[encode_configurations([1, 1])] == pytest.approx(expect)
        assert p[encode_configurations([-1, -1])] == pytest.approx(expect)

    def test_sums_to_one(self):
        rng = rng_from(1, "pmf_sum")
        for _ in range(20):
            d = int(rng.integers(1, 10))
            h = rng.normal(size=d) * 3
            model = ising_model(make_graph(d, []), field=h)
            assert abs(pmf(model).sum() - 1.0) < 1e-12

    def test_log_space_handles_large_weights(self):
        model = field_model(50.0, -50.0)
        p = pmf(model)
        assert np.isfinite(log_pmf(model)).all()
        assert p[encode_configurations([1, -1])] == pytest.approx(1.0)


class TestInteractionsFromSigns:
    def test_zero_delta_uniform(self):
        model = interactions_from_signs(EDGE, [1], 0.0)
        assert np.allclose(pmf(model), 0.25)

    def test_entries(self):
        model = interactions_from_signs(EDGE, [1], 0.3)
        assert model.interactions[0, 1] == 0.3 and model.interactions[1, 0] == 0.3
        assert np.all(model.field == 0.0)

    def test_frobenius_count(self):
        g = standard_graph("path", 3)
        model = interactions_from_signs(g, [1, -1], 0.2)
        assert np.linalg.norm(model.interactions, "fro") ** 2 == pytest.approx(0.16)

    def test_exact_frobenius_identity(self):
        g = standard_graph("cycle", 6)
        packing = build_packing(g.m, target_size=4)
        for v in packing.vectors:
            model = interactions_from_signs(g, v, 0.11)
            fro2 = float(np.sum(model.interactions**2))
            assert fro2 == pytest.approx(2 * 0.11**2 * g.m, rel=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            interactions_from_signs(EDGE, [1, -1], 0.1)


class TestFamilies:
    def test_path8_by_rule(self):
        fam = build_hard_ising_family(standard_graph("path", 8), n=700, c2=0.1)
        assert fam.size >= 3
        assert fam.delta == pytest.approx(0.1 / math.sqrt(700))
        for model in fam.models:
            assert np.all(model.field == 0.0)

    def test_empty_graph(self):
        fam = build_hard_ising_family(make_graph(4, []), n=100, c2=0.1)
        assert fam.size == 1
        assert np.allclose(pmf(fam.models[0]), 1 / 16)

    def test_n_guard(self):
        with pytest.raises(ValueError, match="too small"):
            build_hard_ising_family(standard_graph("complete", 8), n=2, c2=1.0)

    def test_product_family_size(self):
        fam = build_product_family(10, n=500, c2=0.2)
        assert fam.size >= 4  # 2^(10/5)
        arr = fam.packing.array()
        for i in range(fam.size):
            for j in range(i + 1, fam.size):
                assert np.sum(arr[i] != arr[j]) >= math.ceil(10 / 6)

    def test_product_zero_delta_guarded(self):
        with pytest.raises(ValueError, match="delta"):
            product_ising_family(6, 0.0)

    def test_product_kl_additivity_and_scale(self):
        d, delta = 8, 0.05
        fam = product_ising_family(d, delta, seed=3)
        one_d_kl = {}
        for i in range(fam.size):
            for j in range(fam.size):
                if i == j:
                    continue
                p, q = fam.models[i], fam.models[j]
                # additivity: KL is the sum of per-coordinate 1-D divergences
                per_coord = 0.0
                for hp, hq in zip(p.field, q.field):
                    key = (hp, hq)
                    if key not in one_d_kl:
                        one_d_kl[key] = kl_exact(field_model(hp), field_model(hq))
                    per_coord += one_d_kl[key]
                total = kl_exact(p, q)
                assert total == pytest.approx(per_coord, abs=1e-10)
                # scale: bounded by a small multiple of delta^2 d
                assert total <= 2.1 * delta**2 * d


class TestSampleExact:
    def test_uniform_coordinate_means(self):
        model = ising_model(make_graph(6, []))
        draws = sample_exact(model, 100_000, seed=4)
        assert np.max(np.abs(draws.mean(axis=0))) < 0.02

    def test_deterministic(self):
        model = interactions_from_signs(EDGE, [1], 0.2)
        assert np.array_equal(sample_exact(model, 50, seed=1), sample_exact(model, 50, seed=1))

    def test_strong_field(self):
        draws = sample_exact(field_model(5.0), 2000, seed=0)
        assert draws.mean() > 0.99

    def test_matches_pmf(self):
        model = interactions_from_signs(standard_graph("path", 4), [1, -1, 1], 0.3)
        draws = sample_exact(model, 200_000, seed=9)
        emp = np.bincount(encode_configurations(draws), minlength=16) / len(draws)
        assert 0.5 * np.abs(emp - pmf(model)).sum() < 0.01


class TestSampleGibbs:
    def test_matches_exact_pmf(self):
        g = standard_graph("path", 8)
        model = interactions_from_signs(g, build_packing(g.m, target_size=1).vectors[0], 0.2)
        draws = sample_gibbs(model, 200_000, seed=6)
        emp = np.bincount(encode_configurations(draws), minlength=256) / len(draws)
        assert 0.5 * np.abs(emp - pmf(model)).sum() < 0.02

    def test_full_budget_d12_against_exact_sampler(self):
        # at a million draws and 4096 states, the empirical distribution of a
        # perfect sampler already sits at TV ~0.025 from the truth, so compare
        # against an exact-sampler baseline at the same budget
        g = standard_graph("cycle", 12)
        model = interactions_from_signs(g, build_packing(g.m, target_size=1).vectors[0], 0.2)
        count = 1_000_000
        truth = pmf(model)
        gibbs = np.bincount(
            encode_configurations(sample_gibbs(model, count, seed=12)), minlength=4096
        ) / count
        exact = np.bincount(
            encode_configurations(sample_exact(model, count, seed=12)), minlength=4096
        ) / count
        tv_gibbs = 0.5 * np.abs(gibbs - truth).sum()
        tv_exact_baseline = 0.5 * np.abs(exact - truth).sum()
        assert tv_gibbs <= tv_exact_baseline + 0.005

    def test_no_interactions_matches_tanh(self):
        h = np.array([0.4, -0.8, 0.0, 1.2])
        model = ising_model(make_graph(4, []), field=h)
        count = 50_000
        draws = sample_gibbs(model, count, seed=2)
        se = np.sqrt((1 - np.tanh(h) ** 2) / count)
        assert np.all(np.abs(draws.mean(axis=0) - np.tanh(h)) <= 3 * se + 1e-9)

    def test_deterministic(self):
        model = interactions_from_signs(EDGE, [-1], 0.3)
        a = sample_gibbs(model, 100, burn_in=50, thin=2, seed=8)
        b = sample_gibbs(model, 100, burn_in=50, thin=2, seed=8)
        assert np.array_equal(a, b)

    def test_parameter_validation(self):
        model = ising_model(EDGE)
        with pytest.raises(ValueError):
            sample_gibbs(model, 10, burn_in=-1)
        with pytest.raises(ValueError):
            sample_gibbs(model, 10, thin=0)


class TestDistances:
    def test_tv_identical(self):
        model = interactions_from_signs(EDGE, [1], 0.2)
        assert tv_exact(model, model) == 0.0

    def test_tv_field_flip(self):
        assert tv_exact(field_model(0.5), field_model(-0.5)) == pytest.approx(
            math.tanh(0.5)
        )
        assert math.tanh(0.5) == pytest.approx(0.4621, abs=1e-4)

    def test_tv_edge_flip(self):
        delta = 0.35
        p = interactions_from_signs(EDGE, [1], delta)
        q = interactions_from_signs(EDGE, [-1], delta)
        assert tv_exact(p, q) == pytest.approx(math.tanh(2 * delta))

    def test_kl_identical(self):
        model = interactions_from_signs(EDGE, [1], 0.2)
        assert kl_exact(model, model) == pytest.approx(0.0, abs=1e-14)

    def test_kl_nonnegative(self):
        rng = rng_from(2, "kl_nonneg")
        for _ in range(20):
            p = field_model(*rng.normal(size=3))
            q = field_model(*rng.normal(size=3))
            assert kl_exact(p, q) >= 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            tv_exact(field_model(0.1), field_model(0.1, 0.2))


class TestMoments:
    def test_first_moment_zero(self):
        rng = rng_from(3, "moment1")
        for _ in range(10):
            d = int(rng.integers(2, 9))
            w = rng.normal(size=(d, d))
            w = np.triu(w, 1)
            w = w + w.T
            assert abs(quadratic_form_moments(w, 1)) < 1e-12

    def test_second_moment_single_edge(self):
        w = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert quadratic_form_moments(w, 2) == pytest.approx(4.0)  # = 2 ||W||_F^2

    def test_zero_matrix(self):
        w = np.zeros((3, 3))
        for k in (1, 2, 4, 8):
            assert quadratic_form_moments(w, k) == 0.0

    def test_rejects_bad_matrices(self):
        with pytest.raises(ValueError, match="zero-diagonal"):
            quadratic_form_moments(np.eye(2), 2)
        with pytest.raises(ValueError, match="symmetric"):
            quadratic_form_moments(np.array([[0.0, 1.0], [0.5, 0.0]]), 2)

    def test_exp_moment_identity_case(self):
        assert exp_moment(np.zeros((4, 4)), 0.7) == pytest.approx(1.0)

    def test_exp_moment_single_edge(self):
        delta = 0.25
        w = np.array([[0.0, delta], [delta, 0.0]])
        for t in (0.1, 0.5, 2.0):
            assert exp_moment(w, t) == pytest.approx(math.cosh(2 * t * delta))
            assert exp_moment(w, t) >= 1.0

    def test_exp_moment_quadratic_growth(self):
        # value - 1 stays within a fitted multiple of t^2 ||W||_F^2
        rng = rng_from(4, "exp_moment")
        w = rng.normal(size=(5, 5))
        w = np.triu(w, 1)
        w = w + w.T
        w /= np.linalg.norm(w, "fro") * 4
        ratios = []
        for t in (0.05, 0.1, 0.2, 0.4):
            fro = np.linalg.norm(w, "fro")
            ratios.append((exp_moment(w, t) - 1.0) / (t**2 * fro**2))
        assert max(ratios) < 4.0
        assert max(ratios) <= 2.0 * min(ratios)


class TestSerialization:
    def test_pmf_csv_rows(self):
        from mml.ising import pmf_csv_rows

        model = field_model(0.5, -0.2)
        rows = list(pmf_csv_rows(model))
        assert rows[0] == ["config_index", "probability"]
        assert len(rows) == 5
        assert sum(float(r[1]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-12)

    def test_samples_csv_rows(self):
        from mml.ising import samples_csv_rows

        draws = sample_exact(field_model(0.3, 0.1, -0.4), 7, seed=0)
        rows = samples_csv_rows(draws)
        assert len(rows) == 7
        assert all(set(row) <= {-1, 1} for row in rows)

    def test_json_roundtrip(self):
        g = standard_graph("path", 3)
        model = ising_model(g, field=[0.1, -0.2, 0.0],
                            interactions=interactions_from_signs(g, [1, -1], 0.2).interactions)
        back = IsingModel.from_json(model.to_json())
        assert np.array_equal(back.field, model.field)
        assert np.array_equal(back.interactions, model.interactions)
        assert back.graph == model.graph

    def test_off_graph_rejected(self):
        g = make_graph(3, [(1, 2)])
        w = np.zeros((3, 3))
        w[0, 2] = w[2, 0] = 0.1
        with pytest.raises(ValueError, match="off the graph"):
            ising_model(g, interactions=w)
