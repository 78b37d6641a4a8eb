import math

import numpy as np
import pytest

from fuzzykuma.errors import DegenerateObservationError
from fuzzykuma.fuzzy import FuzzySample, crisp_interval, crisp_point, default_fis, fuzzify, triangular
from fuzzykuma.kuma import KumaParams, cdf, sample
from fuzzykuma.likelihood import (
    LikelihoodForm,
    LogLikelihood,
    complete_data_loglik,
    conditional_expectation,
    event_probabilities,
    fuzzy_event_prob,
    hessian,
    obs_loglik,
    score,
)
from fuzzykuma.mle import FitOptions, fit_newton_raphson
from fuzzykuma.quad import integrate_weighted_many
from oracles import central_difference, complete_loglik

EPS = 1e-9
FORMS = [LikelihoodForm.EXACT, LikelihoodForm.PAPER_EQ5]


def test_event_prob_examples():
    p = KumaParams(2, 3)
    assert fuzzy_event_prob(crisp_interval(EPS, 1 - EPS), p) == pytest.approx(1.0, abs=1e-8)
    assert fuzzy_event_prob(crisp_interval(0.2, 0.4), KumaParams(1, 1)) == pytest.approx(0.2, rel=1e-12)
    expected = cdf(0.4, p) - cdf(0.2, p)
    assert expected == pytest.approx(0.96**3 - 0.84**3)
    assert fuzzy_event_prob(crisp_interval(0.2, 0.4), p) == pytest.approx(expected, rel=1e-12)


def test_closed_form_matches_quadrature():
    ms = default_fis().events + (triangular(0.3, 0.45, 0.5), crisp_interval(0.05, 0.95))
    for a, b in [(2, 3), (0.5, 6), (5, 0.5), (0.7, 0.7), (1, 1), (9, 2)]:
        p = KumaParams(a, b)
        quad = integrate_weighted_many(lambda x: np.exp(np.log(a * b) + (a - 1) * np.log(x) + (b - 1) * np.log1p(-x**a)), ms)
        assert event_probabilities(ms, p) == pytest.approx(quad, rel=1e-9)


@pytest.mark.parametrize("a", [1.0, 2.0, 3.5, 5.0])
@pytest.mark.parametrize("b", [1.0, 2.5, 5.0])
def test_fis_probabilities_sum_to_one(a, b):
    probs = event_probabilities(default_fis().events, KumaParams(a, b))
    assert probs.sum() == pytest.approx(1.0, abs=1e-8)


def test_clipping_mass_for_small_shapes():
    # supports are clipped to [1e-9, 1 - 1e-9]; the mass lost is exactly the two clipped tails
    p = KumaParams(0.5, 0.5)
    lost = cdf(EPS, p) + 1 - cdf(1 - EPS, p)
    assert event_probabilities(default_fis().events, p).sum() == pytest.approx(1 - lost, abs=1e-10)


def test_conditional_expectation_examples():
    p = KumaParams(2, 3)
    obs = triangular(0.2, 0.5, 0.7)
    assert conditional_expectation(lambda x: np.ones_like(x), obs, p) == pytest.approx(1.0, rel=1e-14)
    x0, w = 0.37, 1e-5
    assert conditional_expectation(lambda x: x, triangular(x0 - w, x0, x0 + w), p) == pytest.approx(x0, abs=1e-4)
    anti = lambda t: t * math.log(t) - t  # noqa: E731
    expected = (anti(0.4) - anti(0.2)) / 0.2
    got = conditional_expectation(np.log, crisp_interval(0.2, 0.4), KumaParams(1, 1))
    assert got == pytest.approx(expected, rel=1e-11)


def test_loglik_full_support_is_zero():
    s = FuzzySample.from_rows([[EPS, EPS, 1 - EPS, 1 - EPS]])
    assert obs_loglik(s, KumaParams(2, 3)) == pytest.approx(0.0, abs=1e-8)


def test_crisp_points_reproduce_complete_loglik(crisp_values, crisp_sample):
    for p in [KumaParams(2, 3), KumaParams(0.8, 1.7)]:
        ref = complete_loglik(crisp_values, p.a, p.b)
        for form in FORMS:
            assert obs_loglik(crisp_sample, p, form) == pytest.approx(ref, rel=1e-12)


def _narrow(values, w):
    return FuzzySample.from_rows([[v - w, v, v, v + w] for v in values])


def test_crisp_limit_narrow_triangles(crisp_values):
    p = KumaParams(2, 3)
    ref = complete_loglik(crisp_values, p.a, p.b)
    gaps = []
    for w in (1e-2, 1e-3, 1e-4):
        s = _narrow(crisp_values, w)
        # each triangle has area w; dividing it out turns probabilities into densities
        ll = obs_loglik(s, p) - len(crisp_values) * math.log(w)
        gaps.append(abs(ll - ref))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] < 1e-3


def test_paper_form_vanishes_at_unit_params(fuzzy_sample):
    assert obs_loglik(fuzzy_sample, KumaParams(1, 1), LikelihoodForm.PAPER_EQ5) == pytest.approx(0.0, abs=1e-12)


def test_paper_form_bb_is_exact(fuzzy_sample):
    for b in (0.7, 3.0, 4.4):
        h = hessian(fuzzy_sample, KumaParams(1.3, b), LikelihoodForm.PAPER_EQ5)
        assert h.d_bb == -len(fuzzy_sample) / b**2


def _ll(sample, form):
    return lambda th: obs_loglik(sample, KumaParams(*th), form)


def _score(sample, form):
    return lambda th: score(sample, KumaParams(*th), form).as_array()


@pytest.mark.parametrize("form", FORMS, ids=["exact", "paper"])
def test_score_and_hessian_vs_finite_differences(fuzzy_sample, form):
    rng = np.random.default_rng(7)
    for th in rng.uniform(0.5, 5.0, size=(5, 2)):
        g = score(fuzzy_sample, KumaParams(*th), form).as_array()
        fd = central_difference(_ll(fuzzy_sample, form), th, 1e-5)
        assert np.all(np.abs(fd - g) <= 1e-5 * np.abs(g))
        H = hessian(fuzzy_sample, KumaParams(*th), form).as_array()
        fdh = np.column_stack([central_difference(lambda t: _score(fuzzy_sample, form)(t)[k], th, 1e-5) for k in range(2)])
        assert np.all(np.abs(fdh - H) <= 1e-4 * np.abs(H))
        assert H[0, 1] == H[1, 0]


def test_exact_b_derivative_single_interval_at_a1():
    lo, hi, b = 0.2, 0.4, 2.7
    s = FuzzySample.from_rows([[lo, lo, hi, hi]])
    # at a = 1 the event probability is (1-lo)^b - (1-hi)^b
    P = (1 - lo) ** b - (1 - hi) ** b
    d = ((1 - lo) ** b * math.log(1 - lo) - (1 - hi) ** b * math.log(1 - hi)) / P
    assert score(s, KumaParams(1.0, b)).d_b == pytest.approx(d, rel=1e-10)


def test_score_vanishes_at_mle(fuzzy_sample):
    res = fit_newton_raphson(fuzzy_sample, FitOptions())
    g = score(fuzzy_sample, res.params)
    assert abs(g.d_a) < 1e-6 and abs(g.d_b) < 1e-6


def test_degenerate_observation_names_index():
    s = FuzzySample.from_rows([[0.3, 0.3, 0.4, 0.4], [0.99, 0.99, 0.999, 0.999]])
    with pytest.raises(DegenerateObservationError) as info:
        obs_loglik(s, KumaParams(5.0, 400.0))
    assert info.value.index == 1


def test_vectorised_loglik_matches_scalar(fuzzy_sample):
    ll = LogLikelihood(fuzzy_sample)
    a = np.array([0.8, 2.0, 3.1])
    b = np.array([1.5, 3.0, 0.9])
    vec = ll(a, b)
    for k in range(3):
        assert vec[k] == pytest.approx(obs_loglik(fuzzy_sample, KumaParams(a[k], b[k])), rel=1e-13)


def test_non_strict_returns_minus_inf():
    s = FuzzySample.from_rows([[0.99, 0.99, 0.999, 0.999]])
    assert LogLikelihood(s)(0.1, 400.0, strict=False) == -np.inf


def test_complete_data_loglik_helper(crisp_values):
    assert complete_data_loglik(crisp_values, KumaParams(2, 3)) == pytest.approx(complete_loglik(crisp_values, 2, 3))
