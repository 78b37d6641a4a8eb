import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from fuzzykuma.kuma import KumaParams, cdf, logpdf, pdf, quantile, sample

positive = st.floats(0.3, 8.0)


def test_params_reject_nonpositive():
    with pytest.raises(ValueError):
        KumaParams(0.0, 1.0)
    with pytest.raises(ValueError):
        KumaParams(1.0, -2.0)
    with pytest.raises(ValueError):
        KumaParams(float("nan"), 1.0)


def test_pdf_examples():
    assert pdf(0.5, KumaParams(1, 1)) == pytest.approx(1.0, abs=1e-15)
    assert pdf(0.5, KumaParams(2, 3)) == pytest.approx(2 * 3 * 0.5 * 0.75**2, rel=1e-14)
    v = pdf(0.999, KumaParams(2, 0.5))
    assert np.isfinite(v) and v > 10
    assert v == pytest.approx(2 * 0.5 * 0.999 * (1 - 0.999**2) ** -0.5, rel=1e-12)


def test_pdf_domain():
    with pytest.raises(ValueError):
        pdf(0.0, KumaParams(1, 1))
    with pytest.raises(ValueError):
        pdf(1.2, KumaParams(1, 1))


def test_cdf_examples():
    assert cdf(0.5, KumaParams(1, 1)) == pytest.approx(0.5)
    assert cdf(0.5, KumaParams(2, 3)) == pytest.approx(1 - 0.75**3, rel=1e-14)
    assert cdf(0.0, KumaParams(3, 4)) == 0.0
    assert cdf(-1.0, KumaParams(3, 4)) == 0.0
    assert cdf(1.5, KumaParams(3, 4)) == 1.0


def test_quantile_examples():
    assert quantile(0.5, KumaParams(1, 1)) == pytest.approx(0.5)
    assert quantile(0.578125, KumaParams(2, 3)) == pytest.approx(0.5, rel=1e-13)
    p = KumaParams(0.7, 2.2)
    assert quantile(0.0, p) == 0.0
    assert quantile(1.0, p) == 1.0


def test_sample_determinism_and_support():
    p = KumaParams(2, 3)
    assert np.array_equal(sample(5, p, 42), sample(5, p, 42))
    x = sample(1000, KumaParams(0.5, 0.5), 7)
    assert np.all((x > 0) & (x < 1))


def test_sample_ks_distance():
    p = KumaParams(2, 3)
    x = sample(10**5, p, 2024)
    ks = stats.kstest(x, lambda t: cdf(t, p)).statistic
    assert ks < 0.01


@pytest.mark.parametrize("a", [0.5, 1, 2, 5])
@pytest.mark.parametrize("b", [0.5, 1, 2, 5])
def test_pdf_integrates_to_one(a, b):
    from fuzzykuma.fuzzy import crisp_interval
    from fuzzykuma.quad import QuadratureSpec, integrate_weighted

    p = KumaParams(a, b)
    # the package quadrature works on the clipped support; add back the clipped tails in closed form
    eps = 1e-9
    inner = integrate_weighted(lambda x: pdf(x, p), crisp_interval(eps, 1 - eps), QuadratureSpec(max_subdivisions=400))
    tails = cdf(eps, p) + (1 - cdf(1 - eps, p))
    assert inner + tails == pytest.approx(1.0, abs=1e-8)
    # independent check with scipy's QUADPACK
    total, _ = integrate.quad(lambda x: pdf(x, p), 0, 1, limit=200, points=[0.5])
    assert total == pytest.approx(1.0, abs=1e-7)


@settings(max_examples=50, deadline=None)
@given(a=positive, b=positive, x=st.floats(0.05, 0.95))
def test_pdf_is_derivative_of_cdf(a, b, x):
    p = KumaParams(a, b)
    h = 1e-6
    fd = (cdf(x + h, p) - cdf(x - h, p)) / (2 * h)
    assert fd == pytest.approx(pdf(x, p), rel=1e-5, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(a=positive, b=positive, x=st.floats(0.01, 0.99))
def test_quantile_inverts_cdf(a, b, x):
    p = KumaParams(a, b)
    u = cdf(x, p)
    if 1e-12 < u < 1 - 1e-6:
        assert quantile(u, p) == pytest.approx(x, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(a=positive, b=positive)
def test_cdf_monotone(a, b):
    x = np.linspace(0, 1, 2001)
    assert np.all(np.diff(cdf(x, KumaParams(a, b))) >= 0)


def test_logpdf_matches_pdf():
    p = KumaParams(1.7, 0.6)
    x = np.linspace(0.01, 0.99, 50)
    assert np.allclose(np.exp(logpdf(x, p)), p.a * p.b * x ** (p.a - 1) * (1 - x**p.a) ** (p.b - 1))
