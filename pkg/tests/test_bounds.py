import math

import pytest

from mml.bounds import (
    FanoInputs,
    VcInputs,
    fano_lower_bound,
    sample_complexity,
    vc_upper_bound,
    yatracos_vc_dimension,
)


def test_fano_bracket_vanishes():
    assert fano_lower_bound(FanoInputs(1.0, 0.0, 2, 10)) == 0.0


def test_fano_direct_arithmetic():
    # class with log-size 4 (size 55 gives log 4.007...)
    size = 55
    expected = 0.25 * (1.0 - math.log(2.0) / math.log(size))
    assert fano_lower_bound(FanoInputs(1.0, 0.0, size, 10)) == pytest.approx(expected)


def test_fano_hard_gaussian_assembly():
    # m=20, n=1000, delta=2e-3 with beta = 8 delta^2 m and size 2^(m/5)
    m, n, delta = 20, 1000, 2.0e-3
    alpha = 0.01 * delta * math.sqrt(m)  # some fitted separation constant
    beta = 8.0 * delta * delta * m
    size = 2 ** (m // 5)
    value = fano_lower_bound(FanoInputs(alpha, beta, size, n))
    bracket = 1.0 - (n * beta + math.log(2)) / math.log(size)
    assert value == pytest.approx(alpha / 4.0 * bracket)
    assert value > 0.0


def test_fano_validation():
    with pytest.raises(ValueError):
        FanoInputs(3.0, 0.0, 2, 1)  # alpha > 2
    with pytest.raises(ValueError):
        FanoInputs(1.0, -0.1, 2, 1)
    with pytest.raises(ValueError):
        FanoInputs(1.0, 0.0, 1, 1)


def test_fano_monotonicity():
    base = FanoInputs(1.0, 1e-4, 64, 100)
    v = fano_lower_bound(base)
    assert fano_lower_bound(FanoInputs(1.0, 1e-4, 64, 200)) <= v
    assert fano_lower_bound(FanoInputs(1.0, 2e-4, 64, 100)) <= v
    assert fano_lower_bound(FanoInputs(1.5, 1e-4, 64, 100)) >= v
    assert fano_lower_bound(FanoInputs(1.0, 1e-4, 128, 100)) >= v


@pytest.mark.parametrize(
    "family,d,m,dim",
    [
        ("gaussian", 8, 7, 24),
        ("ising", 5, 4, 10),
        ("ising_no_field", 10, 0, 1),
        ("ising_no_field", 10, 5, 6),
    ],
)
def test_vc_dimensions(family, d, m, dim):
    assert yatracos_vc_dimension(family, d, m) == dim


def test_vc_dimension_unknown_graph_order():
    assert yatracos_vc_dimension("gaussian_unknown_graph", 8, 7) == math.ceil(
        15 * math.log(8)
    )


def test_vc_upper_bound_values():
    assert vc_upper_bound(VcInputs("gaussian", 8, 7, 2400), 1.0) == pytest.approx(0.1)
    assert vc_upper_bound(VcInputs("gaussian", 8, 7, 1), 1.0) == 1.0  # clamps
    assert vc_upper_bound(VcInputs("ising_no_field", 10, 0, 5), 1.0) == 0.0


def test_sample_complexity_inversion():
    assert sample_complexity("gaussian", 8, 7, 0.1, 1.0) == 2400
    assert sample_complexity("ising_no_field", 10, 0, 0.5, 1.0) == 0
    with pytest.raises(ValueError):
        sample_complexity("gaussian", 8, 7, 1.0, 1.0)  # open interval
    with pytest.raises(ValueError):
        sample_complexity("gaussian", 8, 7, 0.0, 1.0)


@pytest.mark.parametrize("family,d,m", [("gaussian", 8, 7), ("ising", 6, 5)])
@pytest.mark.parametrize("eps", [0.9, 0.5, 0.1, 0.037])
@pytest.mark.parametrize("c", [1.0, 0.7, 2.3])
def test_sample_complexity_is_exact_crossing(family, d, m, eps, c):
    n = sample_complexity(family, d, m, eps, c)
    assert vc_upper_bound(VcInputs(family, d, m, n), c) <= eps
    if n > 1:
        assert vc_upper_bound(VcInputs(family, d, m, n - 1), c) > eps


def test_vc_inputs_validation():
    with pytest.raises(ValueError):
        VcInputs("mystery", 4, 2, 10)
    with pytest.raises(ValueError):
        VcInputs("ising", 4, 7, 10)  # m > d(d-1)/2
