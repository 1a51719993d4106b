import math

import numpy as np
import pytest

import centroidkit as ck


def test_sample_shape_and_support():
    x = ck.sample(ck.DistributionSpec.sparse(4), 50, 1)
    assert x.shape == (50, 4)
    assert np.all(np.count_nonzero(x, axis=1) == 1)
    assert np.all(np.abs(x[x != 0]) == 2.0)


def test_exact_even_norm():
    spec = ck.DistributionSpec.rademacher(2)
    assert ck.mp_norm_exact_even(spec, 2, np.array([1.0, 1.0])) == pytest.approx(8 ** 0.25, rel=1e-14)


def test_gaussian_dual_norm():
    s = np.array([1.0, -2.0, 0.5])
    g4 = 3 ** 0.25
    est = ck.zp_norm(ck.DistributionSpec.gaussian(3), 4.0, s)
    assert est["method"] == "exact_even"
    assert est["value"] == pytest.approx(np.linalg.norm(s) / g4, rel=1e-9)


def test_c2k_examples():
    value, exact = ck.c2k(1, 2)
    assert exact == "1"
    assert value == 1.0
    lower, upper = ck.c2k_bounds(2, 2)
    assert lower == "3/16"
    assert upper == "48"


def test_rademacher_and_surrogate():
    assert ck.rademacher_norm(np.array([1.0, 1.0]), 4.0) == pytest.approx(8 ** 0.25)
    assert ck.hitczenko_surrogate(np.ones(8), 2.0) == pytest.approx(2 + math.sqrt(12))


def test_sparse_minoration():
    cx, sup = ck.sparse_minoration(16)
    assert sup == 1.0
    assert cx >= 0.2 * 4


def test_run_experiment_and_config_errors():
    cfg = {"seed": 3, "grid": {"n": [4, 6], "p": [2, 4]}, "budgets": {"trials": 20}}
    passed, report = ck.run_experiment("hitczenko", cfg)
    assert passed
    assert report["experiment"] == "hitczenko"
    assert "hitczenko" in ck.experiment_names()
    with pytest.raises(ValueError):
        ck.run_experiment("verify-z2", {"grid": {"n": [4]}})
