import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps
from scipy.special import betainc as scipy_betainc

from cxrstudy.distributions import (
    betainc_reg,
    f_sf,
    normal_cdf,
    normal_ppf,
    normal_sf,
    t_cdf,
    t_ppf,
    t_sf,
)

# scipy is the reference implementation here; the package itself must not
# depend on it, so these tests pin our stdlib-only code against it.


def test_normal_cdf_against_scipy():
    rng = random.Random(1)
    for _ in range(500):
        x = rng.uniform(-8, 8)
        assert normal_cdf(x) == pytest.approx(sps.norm.cdf(x), abs=1e-12)
        assert normal_sf(x) == pytest.approx(sps.norm.sf(x), abs=1e-12)


def test_normal_ppf_against_scipy():
    rng = random.Random(2)
    for _ in range(500):
        p = rng.uniform(1e-9, 1 - 1e-9)
        assert normal_ppf(p) == pytest.approx(sps.norm.ppf(p), abs=1e-9)


def test_normal_ppf_boundaries_and_rejection():
    assert normal_ppf(0.0) == -math.inf
    assert normal_ppf(1.0) == math.inf
    for p in (-0.5, 1.5):
        with pytest.raises(ValueError):
            normal_ppf(p)


def test_betainc_against_scipy():
    rng = random.Random(3)
    for _ in range(500):
        a = rng.uniform(0.1, 50)
        b = rng.uniform(0.1, 50)
        x = rng.random()
        assert betainc_reg(a, b, x) == pytest.approx(
            scipy_betainc(a, b, x), abs=1e-10)


def test_t_cdf_against_scipy():
    rng = random.Random(4)
    for _ in range(500):
        df = rng.choice([1, 2, 3, 5, 10, 30, 100, 295])
        x = rng.uniform(-10, 10)
        assert t_cdf(x, df) == pytest.approx(sps.t.cdf(x, df), abs=1e-10)
        assert t_sf(x, df) == pytest.approx(sps.t.sf(x, df), abs=1e-10)


def test_t_ppf_against_scipy():
    rng = random.Random(5)
    for _ in range(200):
        df = rng.choice([1, 2, 5, 10, 30, 295])
        p = rng.uniform(1e-6, 1 - 1e-6)
        assert t_ppf(p, df) == pytest.approx(sps.t.ppf(p, df), abs=1e-7)


def test_f_sf_against_scipy():
    rng = random.Random(6)
    for _ in range(300):
        d1 = rng.randint(1, 20)
        d2 = rng.randint(1, 200)
        x = rng.uniform(0, 30)
        assert f_sf(x, d1, d2) == pytest.approx(sps.f.sf(x, d1, d2), abs=1e-10)


@given(st.floats(-8, 8), st.floats(-8, 8))
def test_normal_cdf_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert normal_cdf(lo) <= normal_cdf(hi) + 1e-15


@given(st.floats(-8, 8))
def test_normal_cdf_sf_complement(x):
    assert normal_cdf(x) + normal_sf(x) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200)
@given(st.floats(0.001, 0.999), st.integers(1, 200))
def test_t_ppf_inverts_t_cdf(p, df):
    assert t_cdf(t_ppf(p, df), df) == pytest.approx(p, abs=1e-9)


def test_t_cdf_symmetry():
    for df in (1, 4, 29):
        for x in (0.3, 1.7, 4.2):
            assert t_cdf(-x, df) == pytest.approx(1 - t_cdf(x, df), abs=1e-12)


def test_f_sf_matches_t_squared():
    # F(1, d) is the square of t(d): sf_F(t^2) == 2*sf_t(|t|)
    for df in (3, 10, 50):
        for t in (0.5, 1.3, 2.8):
            assert f_sf(t * t, 1, df) == pytest.approx(2 * t_sf(t, df), abs=1e-11)
