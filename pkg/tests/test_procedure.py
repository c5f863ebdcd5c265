import json
import math

import numpy as np
import pytest
from scipy.special import ndtri

from clfgof.distinguish import ConstantProcedure
from clfgof.errors import InvalidDataset, OutOfRange
from clfgof.procedure import (
    TestConfig,
    TestReport,
    delta_min,
    normal_cdf,
    normal_quantile,
    run_cross_test,
    run_split_test,
    run_test,
    z_statistic,
)

from conftest import make_aug


def test_normal_quantile_reference():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)
    assert normal_quantile(0.95) == pytest.approx(1.644854, abs=1e-6)


def test_normal_quantile_accuracy():
    ps = np.concatenate([np.logspace(-15, -1, 60), np.linspace(0.01, 0.99, 197), 1 - np.logspace(-12, -1, 40)])
    for p in ps:
        assert abs(normal_quantile(p) - ndtri(p)) < 1e-9, p
        assert abs(normal_cdf(normal_quantile(p)) - p) < 1e-12 + 1e-9 * p


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_normal_quantile_out_of_range(p):
    with pytest.raises(OutOfRange):
        normal_quantile(p)


def test_delta_min_examples():
    assert delta_min(0.5, 0.3, 100, 0.05) == 0.0
    assert delta_min(0.9, 0.5, 100, 0.05) == pytest.approx(0.317757, abs=1e-6)
    vals = [delta_min(0.8, 0.4, 200, a) for a in (0.2, 0.1, 0.05, 0.01, 0.001)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_config_validation():
    for bad in ({"alpha": 0}, {"delta": 0.7}, {"method": "both"}, {"K": 1}, {"split_fraction": 1.0},
                {"distinguisher": "xgboost"}):
        with pytest.raises(InvalidDataset):
            TestConfig(**bad)


def test_split_report_fields():
    aug = make_aug(n=300, seed=4)
    rep = run_split_test(aug, TestConfig(method="split", delta=0.0))
    assert 0.0 <= rep.T <= 1.0 and rep.n_eval == 150
    z = math.sqrt(150) * (rep.T - 0.5) / math.sqrt(rep.sigma2_hat)
    assert rep.z_stat == pytest.approx(z)
    assert rep.p_value == pytest.approx(1 - normal_cdf(z))
    assert rep.reject == (z > normal_quantile(0.95))
    assert rep.per_fold is None
    json.dumps(rep.to_dict())


def test_cross_report_fields():
    aug = make_aug(n=203, seed=4)
    rep = run_cross_test(aug, TestConfig(method="cross", K=5))
    assert rep.n_eval == 203
    assert [f["n_k"] for f in rep.per_fold] == [41, 41, 41, 40, 40]
    assert rep.T == pytest.approx(np.mean([f["T_k"] for f in rep.per_fold]))
    assert rep.sigma2_hat == pytest.approx(np.mean([f["sigma2_k"] for f in rep.per_fold]))


def test_null_centred_constant_no_reject():
    aug = make_aug(n=2000, seed=5)
    for method in ("split", "cross"):
        rep = run_test(aug, TestConfig(method=method), procedure=ConstantProcedure())
        assert abs(rep.T - 0.5) < 0.03
        assert not rep.reject or rep.p_value > 0.001


def test_delta_half_never_rejects():
    aug = make_aug(n=400, seed=6, shift=1.0)
    for method in ("split", "cross"):
        rep = run_test(aug, TestConfig(method=method, delta=0.5))
        assert not rep.reject


def test_decide_matches_reject():
    aug = make_aug(n=400, seed=7, shift=1.0)
    rep = run_test(aug, TestConfig(method="cross", delta=0.1))
    assert rep.decide(0.1) == rep.reject
    assert rep.decide(max(rep.delta_min - 1e-6, 0.0)) == (rep.delta_min > 1e-6)
    assert not rep.decide(rep.delta_min + 1e-6)


def test_small_inputs_rejected():
    with pytest.raises(InvalidDataset):
        run_split_test(make_aug(n=3), TestConfig(method="split"))
    with pytest.raises(InvalidDataset):
        run_cross_test(make_aug(n=9), TestConfig(method="cross", K=5))


def test_seed_determinism():
    aug = make_aug(n=300, seed=8)
    a = run_test(aug, TestConfig(seed=3)).to_dict()
    b = run_test(aug, TestConfig(seed=3)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    c = run_test(aug, TestConfig(seed=4)).to_dict()
    assert c != a
