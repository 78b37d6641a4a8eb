import math

import numpy as np
import pytest

from fuzzykuma.errors import FitError
from fuzzykuma.fuzzy import FuzzySample, default_fis, fuzzify
from fuzzykuma.kuma import KumaParams, sample
from fuzzykuma.likelihood import LikelihoodForm, obs_loglik
from fuzzykuma.mle import DISTANT_START, FitOptions, FitResult, IntervalEstimate, asymptotic_ci, fit_em, fit_newton_raphson
from fuzzykuma.mle import _EStep
from oracles import classical_mle, grid_search_mle


def test_crisp_fit_matches_grid_oracle(crisp_values, crisp_sample):
    a_g, b_g = grid_search_mle(crisp_values)
    for fit in (fit_newton_raphson, fit_em):
        res = fit(crisp_sample, FitOptions(init=DISTANT_START))
        assert res.converged
        assert abs(res.params.a - a_g) < 1e-3 and abs(res.params.b - b_g) < 1e-3


def test_crisp_fit_matches_profile_oracle(crisp_values, crisp_sample):
    a_c, b_c = classical_mle(crisp_values)
    res = fit_newton_raphson(crisp_sample)
    assert res.params.a == pytest.approx(a_c, rel=1e-7)
    assert res.params.b == pytest.approx(b_c, rel=1e-7)


def test_starting_at_optimum_needs_few_iterations(fuzzy_sample):
    first = fit_newton_raphson(fuzzy_sample)
    again = fit_newton_raphson(fuzzy_sample, FitOptions(init=first.params))
    assert again.converged and again.iterations <= 2


def test_em_and_nr_agree_on_fuzzy_data(fuzzy_sample):
    nr = fit_newton_raphson(fuzzy_sample, FitOptions(init=DISTANT_START))
    em = fit_em(fuzzy_sample, FitOptions(init=DISTANT_START))
    assert nr.converged and em.converged
    assert np.allclose(nr.params.as_array(), em.params.as_array(), atol=1e-6)
    assert nr.loglik == pytest.approx(em.loglik, abs=1e-8)


def test_em_b_update_identity(fuzzy_sample):
    # after an M-step, b equals -n / sum E[log(1 - X^a)] at the new a
    e = _EStep(fuzzy_sample, KumaParams(1.5, 2.0), FitOptions().spec)
    from fuzzykuma.mle import _m_step

    a, b = _m_step(e)
    m, _ = e.sum_log1m(a)
    assert b == pytest.approx(-len(fuzzy_sample) / m, rel=1e-14)


def test_em_is_monotone(truth):
    x = sample(80, truth, 31)
    s = fuzzify(x, default_fis(), 32)
    res = fit_em(s, FitOptions(init=DISTANT_START))
    lls = [obs_loglik(s, p) for p in res.trace]
    assert all(b >= a - 1e-10 for a, b in zip(lls, lls[1:]))


def test_em_rejects_paper_form(fuzzy_sample):
    with pytest.raises(ValueError):
        fit_em(fuzzy_sample, FitOptions(form=LikelihoodForm.PAPER_EQ5))


def test_paper_form_nr_converges(fuzzy_sample):
    res = fit_newton_raphson(fuzzy_sample, FitOptions(form="paper"))
    assert res.converged and res.params.a > 0 and res.params.b > 0


def test_max_iter_exhaustion_is_reported(fuzzy_sample):
    res = fit_newton_raphson(fuzzy_sample, FitOptions(init=DISTANT_START, max_iter=1))
    assert not res.converged and res.iterations == 1
    with pytest.raises(FitError):
        asymptotic_ci(res)


def test_options_validation():
    with pytest.raises(ValueError):
        FitOptions(eps=0)
    with pytest.raises(ValueError):
        FitOptions(max_iter=0)


def test_ci_uses_normal_quantile():
    info = np.diag([4.0, 1.0])

    class Info:
        def as_array(self):
            return info

    res = FitResult(KumaParams(2.0, 3.0), 0.0, 3, True, Info())
    ci_a, ci_b = asymptotic_ci(res, 0.95)
    assert ci_a.upper - 2.0 == pytest.approx(1.959963984540054 * 0.5, rel=1e-12)
    assert ci_b.width == pytest.approx(2 * 1.959963984540054, rel=1e-12)
    ci90 = asymptotic_ci(res, 0.90)[0]
    assert ci90.width < ci_a.width


def test_ci_lower_bound_floored():
    class Info:
        def as_array(self):
            return np.diag([0.01, 0.01])

    lo = asymptotic_ci(FitResult(KumaParams(0.5, 0.5), 0.0, 3, True, Info()))[0].lower
    assert lo == 0.0


def test_ci_width_shrinks_like_root_n(truth):
    widths = {}
    for n in (100, 400):
        x = sample(n, truth, 5)
        res = fit_newton_raphson(FuzzySample.crisp(x))
        widths[n] = asymptotic_ci(res)[0].width
    assert widths[100] / widths[400] == pytest.approx(2.0, rel=0.25)


def test_interval_estimate():
    iv = IntervalEstimate(1.0, 2.5, 0.95)
    assert iv.width == 1.5 and iv.contains(2.5) and not iv.contains(2.6)
    with pytest.raises(ValueError):
        IntervalEstimate(2.0, 1.0, 0.95)


def test_fuzzy_estimates_near_truth(truth):
    x = sample(2000, truth, 77)
    res = fit_em(fuzzify(x, default_fis(), 78), FitOptions(init=DISTANT_START))
    assert math.isclose(res.params.a, truth.a, rel_tol=0.15)
    assert math.isclose(res.params.b, truth.b, rel_tol=0.25)
