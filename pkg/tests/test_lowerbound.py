import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unidisc.dictionary import Domain, build_sine_system
from unidisc.discretization import one_sided_check
from unidisc.lowerbound import dirichlet_search, min_m_threshold, sine_failure_certificate
from unidisc.sampling import explicit_points

UNIT = Domain("unit-interval", 1)


def _brute_smallest_k(x, N):
    m = len(x)
    for k in range(1, N + 1):
        err = max(abs(t - round(k * t) / k) for t in x)
        if err <= N ** (-1 / m) / k:
            return k
    return None


def test_dirichlet_exact_rationals():
    r = dirichlet_search([1 / 3, 2 / 3], 9)
    assert (r.k, r.a, r.max_error) == (3, (1, 2), 0.0)


def test_dirichlet_half():
    r = dirichlet_search([0.5], 2)
    assert r.k == 1


def test_dirichlet_golden():
    x = 0.6180339887
    r = dirichlet_search([x], 100)
    assert abs(x - r.a[0] / r.k) <= 1 / (100 * r.k)
    assert r.k == _brute_smallest_k([x], 100)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=4), st.integers(1, 300))
def test_dirichlet_always_admissible(x, N):
    r = dirichlet_search(x, N)
    assert 1 <= r.k <= N
    assert r.max_error <= r.bound
    assert r.k == _brute_smallest_k(x, N)


def test_certificate_exact_zeros():
    cert = sine_failure_certificate([1 / 3, 2 / 3], 9)
    assert cert is not None
    assert cert.k == 3
    assert cert.discrete_mean < 1e-30


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=2))
def test_certificate_always_for_two_points_n64(x):
    cert = sine_failure_certificate(x, 64)
    assert cert is not None
    assert cert.implied_mean_bound <= 2 * math.pi**2 / 64 + 1e-12
    assert cert.discrete_mean < 0.5 * cert.norm_sq
    assert cert.recheck() == pytest.approx(cert.discrete_mean)
    D = build_sine_system(64)
    assert not one_sided_check(D, 1, explicit_points(np.array(x)[:, None], UNIT)).holds


def test_no_certificate_when_many_points():
    x = np.linspace(0.01, 0.99, 40)
    assert 2 * math.pi**2 * 64 ** (-2 / 40) >= 0.5
    assert sine_failure_certificate(x, 64) is None


def test_certificate_serializes():
    d = sine_failure_certificate([0.1, 0.7], 64).to_dict()
    assert set(d) >= {"k", "a", "points", "discrete_mean", "implied_mean_bound"}


def test_threshold_n64():
    assert min_m_threshold(64) == pytest.approx(math.log(64) / math.log(2 * math.pi))
    assert min_m_threshold(64) == pytest.approx(2.263, abs=1e-3)


def test_threshold_n6():
    t = min_m_threshold(6)
    assert t == pytest.approx(0.975, abs=1e-3) and t < 1


def test_threshold_vanishes_with_c1():
    vals = [min_m_threshold(64, c) for c in (1e-1, 1e-3, 1e-9, 1e-30, 1e-100)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.1


def test_threshold_independent_of_scale():
    assert min_m_threshold(100, 0.5, 1.0) == pytest.approx(min_m_threshold(100, 0.5, 3.0))
