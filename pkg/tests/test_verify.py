import math

import numpy as np
import pytest

from partimax import verify
from partimax.coverage import GainTable
from partimax.tiling import build
from partimax.verify import VerifyConfig

FAST = VerifyConfig(nemhauser_instances=50, stochastic_families=2, stochastic_seeds=100, coverage_instances=20,
                    sampled_argmax_families=5, sampled_argmax_reps=2000, partimax_families=2, partimax_seeds=100,
                    proportionality_draws=50_000, proportionality_tv=0.03)


def exact_expected_max(w, r):
    """E[max of r proportional draws] from the order-statistic CDF."""
    w = np.asarray(w, float)
    p = w / w.sum()
    total = 0.0
    for v in np.unique(w):
        total += v * (p[w <= v].sum() ** r - p[w < v].sum() ** r)
    return total


@pytest.mark.parametrize("shape", range(5))
def test_sampled_argmax_gap_matches_exact_value(shape):
    w = verify.weight_family(np.random.default_rng(shape), shape)
    r = 4
    mean, se = verify.sampled_argmax_gap(w, r, 40_000, np.random.default_rng(1))
    assert abs(mean - (w.max() - exact_expected_max(w, r))) < 4 * se + 1e-12


def test_sample_sizes():
    assert verify.stochastic_sample_size(20, 4, 0.2) == 9
    assert verify.partimax_sample_size(6, 30) == 89


def test_random_belief_shape():
    coder = build(verify.SMALL_TILING)
    b = verify.random_belief(np.random.default_rng(0), 17, coder)
    assert b.shape == (17, 4)
    assert (b[:, 2:] == 0).all()
    assert (b[:, 0] <= coder.width).all()


def test_total_variation():
    assert verify.total_variation([0.5, 0.5], [0.5, 0.5]) == 0
    assert verify.total_variation([1, 0], [0, 1]) == 1


def test_uniform_sampler_is_far_from_proportional():
    coder = build(verify.SMALL_TILING)
    b = verify.random_belief(np.random.default_rng(3), 20, coder)
    table = GainTable.initialize(b, coder)
    good = verify.sampler_distance(table, 50_000, np.random.default_rng(0))
    bad = verify.sampler_distance(table, 50_000, np.random.default_rng(0), uniform_boxes=True)
    assert good < 0.03 < bad


@pytest.mark.parametrize("name", sorted(verify.SUITES))
def test_each_suite_passes_at_reduced_scale(name):
    (res,) = verify.run_suites([name], FAST)
    assert res.passed, res.line()
    assert res.line().startswith(f"PASS {name}:")


def test_negative_control_reports_failure():
    (res,) = verify.run_suites(["proportionality"], FAST, uniform_boxes=True)
    assert not res.passed
    assert res.line().startswith("FAIL")


def test_unknown_suite():
    with pytest.raises(ValueError, match="unknown suites"):
        verify.run_suites(["bogus"])


def test_failure_line_carries_seed():
    line = verify.SuiteResult("x", False, "gap 3", seed=17, elapsed=0.25).line()
    assert "17" in line and line.startswith("FAIL x")


def test_partimax_factor_is_positive():
    r = verify.partimax_sample_size(6, 30)
    assert 1 - 1 / math.e - (r / (r + 1)) ** r > 0.26
