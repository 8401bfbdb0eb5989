import math

import pytest

from mml.verify import CHECK_NAMES, run_all, run_check

# small overrides keep the unit suite fast; full sizes run in the acceptance suite
FAST = {
    "psd": {"trials": 120},
    "partition": {"samples": 40},
    "moments": {"trials": 25},
    "kl_gaussian": {"pairs": 80},
    "kl_ising": {"samples": 40},
    "l1_ising": {"samples": 40},
    "tv_gaussian": {"pairs": 12, "count": 20_000},
    "frobenius": {"trials": 60},
}


@pytest.mark.parametrize("name", CHECK_NAMES)
def test_check_passes_and_schema(name):
    report = run_check(name, seed=0, **FAST[name])
    assert report["check"] == name
    assert report["status"] == "PASS"
    assert report["failures"] == []
    assert set(report) == {"check", "status", "seed", "fitted_constants", "failures", "info"}


@pytest.mark.parametrize("name", CHECK_NAMES)
def test_check_deterministic(name):
    a = run_check(name, seed=3, **FAST[name])
    b = run_check(name, seed=3, **FAST[name])
    assert a == b


def test_unknown_check_lists_names():
    with pytest.raises(ValueError) as err:
        run_check("psdx")
    for name in CHECK_NAMES:
        assert name in str(err.value)


def test_psd_probe_reports_out_of_hypothesis():
    report = run_check("psd", seed=1, trials=60)
    probe = report["info"]["out_of_hypothesis_probe"]
    assert probe["delta_sq_m"] == 0.5
    assert not probe["inside_band"]  # star at delta^2 m = 0.5 escapes [1/2, 3/2]
    assert report["status"] == "PASS"  # probes never count as failures


def test_partition_constants_reproduce_across_seeds():
    a = run_check("partition", seed=0, samples=60)["fitted_constants"]["partition_upper_c"]
    b = run_check("partition", seed=99, samples=60)["fitted_constants"]["partition_upper_c"]
    assert max(a, b) <= 2.0 * min(a, b)
    assert math.isfinite(a) and a > 0


def test_l1_fitted_slope_near_one():
    fitted = run_check("l1_ising", seed=0, samples=40)["fitted_constants"]
    assert abs(fitted["l1_slope_vs_delta"] - 1.0) <= 0.05
    assert fitted["l1_lower_c2"] > 0


def test_run_all_covers_every_check():
    reports = run_all(seed=2)
    assert [r["check"] for r in reports] == list(CHECK_NAMES)
    assert all(r["seed"] == 2 for r in reports)
    assert all(r["status"] == "PASS" for r in reports)
