import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sp

from fbm_bismut.special import beta, gamma, hyp2f1, hyp2f1_series, jacobi_rule, rgamma


def test_gamma_half_is_sqrt_pi():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@given(st.floats(min_value=0.05, max_value=20.0))
def test_gamma_recursion(x):
    assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


def test_rgamma_at_poles_is_zero():
    assert rgamma(0.0) == 0.0
    assert rgamma(-3.0) == 0.0


def test_beta_matches_gamma_ratio():
    assert beta(1.2, 0.3) == pytest.approx(gamma(1.2) * gamma(0.3) / gamma(1.5), rel=1e-13)


@given(st.floats(min_value=0.05, max_value=0.95), st.floats(min_value=-30.0, max_value=0.0))
def test_hyp2f1_against_scipy_on_kernel_arguments(H, z):
    a, b, c = H - 0.5, 0.5 - H, H + 0.5
    assert hyp2f1(a, b, c, z) == pytest.approx(sp.hyp2f1(a, b, c, z), rel=1e-11, abs=1e-13)


def test_hyp2f1_series_inside_disc():
    z = np.array([-0.5, 0.0, 0.3])
    assert np.allclose(hyp2f1_series(0.3, 0.7, 1.4, z), sp.hyp2f1(0.3, 0.7, 1.4, z), rtol=1e-12)


def test_hyp2f1_zero_parameter_is_one():
    assert hyp2f1(0.0, 0.3, 1.0, -5.0) == 1.0


@pytest.mark.parametrize("left,right", [(0.0, 0.0), (-0.4, 0.0), (0.0, 0.2), (-0.2, -0.3)])
def test_jacobi_rule_integrates_weighted_monomials(left, right):
    x, w = jacobi_rule(8, 0.0, 2.0, left, right)
    # int_0^2 x^left (2-x)^right x^2 dx = 2^(3+left+right) B(3+left, 1+right)
    exact = 2.0 ** (3 + left + right) * sp.beta(3 + left, 1 + right)
    assert np.sum(w * x**2) == pytest.approx(exact, rel=1e-12)
