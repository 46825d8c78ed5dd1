import numpy as np
import pytest

from lro import LikelihoodSet, ObservationSet, max_log_likelihood
from lro.apps import (
    DemandModel,
    NewsvendorInstance,
    compare_methods,
    evaluate_decision,
    evaluate_lro_measure,
    newsvendor_empirical,
    newsvendor_lro,
    newsvendor_scarf,
)
from lro.apps.newsvendor import quantile_decision, sample_moments, scarf_worst_case, total_variation


def inst_from(values, counts, b=1.0, h=1.0):
    return NewsvendorInstance(b, h, ObservationSet(np.asarray(values, float), counts))


def test_single_observed_demand():
    inst = inst_from(range(1, 6), [0, 0, 1, 0, 0])
    res = newsvendor_lro(inst, max_log_likelihood(inst.observations))
    assert res.decision == 3 and res.value == pytest.approx(0.0, abs=1e-12)


def test_mle_set_gives_empirical_median():
    counts = [2, 1, 4, 1, 3, 0, 2]
    inst = inst_from(range(1, 8), counts)
    res = newsvendor_lro(inst, max_log_likelihood(inst.observations))
    emp_costs = [evaluate_decision(x, inst.observations.mle(), inst) for x in range(1, 8)]
    assert emp_costs[res.decision - 1] == pytest.approx(min(emp_costs))


def test_scarf_closed_form():
    assert newsvendor_scarf(42.0, 13.0, 2.0, 2.0) == 42.0
    assert newsvendor_scarf(50.0, 50.0, 4.0, 1.0) == pytest.approx(87.5)
    with pytest.raises(ValueError):
        newsvendor_scarf(1.0, -1.0, 1.0, 1.0)


def test_scarf_worst_case_matches_moments():
    pts, pr = scarf_worst_case(60.0, 50.0, 20.0)
    assert pr.sum() == pytest.approx(1.0)
    assert pr @ pts == pytest.approx(50.0)
    assert pr @ (pts - 50.0) ** 2 == pytest.approx(400.0)


def test_empirical_quantile():
    assert newsvendor_empirical(inst_from([1, 2, 3], [1, 1, 1])) == 2
    data = np.arange(1, 11)
    inst = inst_from(data, np.ones(10, dtype=int), b=9.0, h=1.0)
    assert newsvendor_empirical(inst) == 9


def test_empirical_is_optimal_under_empirical():
    rng = np.random.default_rng(4)
    counts = rng.integers(0, 6, 30)
    counts[0] = 1
    inst = inst_from(range(30), counts, b=3.0, h=1.0)
    x = newsvendor_empirical(inst)
    p = inst.observations.mle()
    costs = [evaluate_decision(y, p, inst) for y in range(30)]
    assert costs[x] <= min(costs) + 1e-12


def test_evaluate_decision_examples():
    inst = inst_from([0, 1, 2], [1, 1, 1])
    assert evaluate_decision(1, [0.5, 0.0, 0.5], inst) == pytest.approx(1.0)
    assert evaluate_decision(2, [0.0, 0.0, 1.0], inst) == 0.0


def test_lro_self_optimal_and_certified_by_grid():
    rng = np.random.default_rng(12)
    counts = rng.integers(0, 8, 25)
    inst = inst_from(range(25), counts, b=2.0, h=1.0)
    lset = LikelihoodSet(inst.observations, max_log_likelihood(inst.observations) - 5.0)
    res = newsvendor_lro(inst, lset.gamma)
    costs = [evaluate_lro_measure(x, lset, inst) for x in range(25)]
    assert res.value <= min(costs) + 1e-6
    assert costs[res.decision] == pytest.approx(res.value, abs=1e-9)


def test_total_variation():
    assert total_variation([0, 1], [0.5, 0.5], [0, 1], [0.5, 0.5]) == 0.0
    assert total_variation([0.0], [1.0], [1.0], [1.0]) == 1.0
    assert total_variation([0, 1], [0.25, 0.75], [1, 2], [0.5, 0.5]) == pytest.approx(0.5)


def test_demand_model_parse_and_sample():
    m = DemandModel.parse("trunc-normal:50,50", 0, 200)
    s = m.sample(500, seed=3)
    assert s.shape == (500,) and s.min() >= 0 and s.max() <= 200
    assert np.array_equal(s, np.rint(s))
    assert np.array_equal(s, m.sample(500, seed=3))
    assert m.pmf().sum() == pytest.approx(1.0) and len(m.pmf()) == 201
    e = DemandModel.parse("trunc-exp:0.02", 0, 200)
    assert e.pmf()[0] > e.pmf()[100]
    for bad in ("uniform:1", "trunc-normal:1", "trunc-exp:-1", "trunc-normal:a,b"):
        with pytest.raises(ValueError):
            DemandModel.parse(bad, 0, 200)


def test_sample_moments_population():
    mu, sd = sample_moments(ObservationSet([0.0, 2.0], [1, 1]))
    assert (mu, sd) == (1.0, 1.0)


def test_quantile_decision():
    assert quantile_decision(np.array([1.0, 2.0, 3.0]), [0.2, 0.3, 0.5], 0.5) == 2


def test_instance_validation():
    with pytest.raises(ValueError):
        inst_from([1, 2], [1, 1], b=0.0)


@pytest.fixture(scope="module")
def normal_run():
    m = DemandModel.parse("trunc-normal:50,50", 0, 200)
    obs = ObservationSet.from_samples(m.sample(1000, seed=7), support=m.grid())
    inst = NewsvendorInstance(1.0, 1.0, obs)
    return inst, compare_methods(inst, true_pmf=m.pmf())


def test_comparison_structure(normal_run):
    inst, cmp = normal_run
    assert set(cmp.decisions) == {"LRO", "LRO(mu,sigma2)", "Scarf", "Empirical", "Underlying"}
    assert cmp.dof == 100
    assert cmp.gamma == pytest.approx(max_log_likelihood(inst.observations) - 0.5 * 124.342114, abs=1e-5)
    # b = h: Scarf is the sample mean
    assert cmp.scarf_raw == cmp.mu_hat
    for m, (pts, pr) in cmp.worst_cases.items():
        assert pr.sum() == pytest.approx(1.0, abs=1e-8)
    lro_cost = cmp.lro_cost["LRO"]
    assert all(lro_cost <= c + 1e-6 for c in cmp.lro_cost.values())
    assert cmp.tv_to_empirical["Scarf"] > cmp.tv_to_empirical["LRO"]


def test_moment_constrained_worst_case_matches_moments(normal_run):
    inst, cmp = normal_run
    pts, pr = cmp.worst_cases["LRO(mu,sigma2)"]
    assert pr @ pts == pytest.approx(cmp.mu_hat, abs=1e-5)
    assert pr @ (pts - cmp.mu_hat) ** 2 == pytest.approx(cmp.sigma_hat ** 2, rel=1e-5)
