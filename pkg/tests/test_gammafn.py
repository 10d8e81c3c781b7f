"""Lanczos gamma vs the independent C-library oracle."""

import math

import numpy as np
import pytest

from fraclevel.gammafn import gamma, log_abs_rgamma, rgamma, sinpi


def test_positive_axis_accuracy():
    xs = np.linspace(1e-3, 50.0, 20011)
    worst = max(abs(gamma(float(x)) - math.gamma(x)) / math.gamma(x) for x in xs)
    assert worst < 1e-13


def test_reflection_matches_oracle():
    for x in np.linspace(-20.3, -0.05, 997):
        x = float(x)
        if abs(x - round(x)) < 1e-3:
            continue
        assert gamma(x) == pytest.approx(math.gamma(x), rel=5e-13)


def test_poles_return_inf():
    for n in (0.0, -1.0, -2.0, -7.0):
        assert gamma(n) == math.inf


def test_rgamma_exact_zeros():
    for n in (0.0, -1.0, -2.0, -10.0, -50.0):
        assert rgamma(n) == 0.0


def test_rgamma_positive():
    for x in (0.5, 1.0, 2.5, 10.0, 49.5):
        assert rgamma(x) == pytest.approx(1.0 / math.gamma(x), rel=1e-13)


def test_rgamma_negative_nonintegers():
    for x in (-0.5, -1.5, -3.3, -12.7):
        assert rgamma(x) == pytest.approx(1.0 / math.gamma(x), rel=5e-13)


def test_rgamma_beyond_overflow():
    # Gamma overflows but its reciprocal must still come back as 0.0
    assert rgamma(200.0) == 0.0


def test_sinpi_exact_zeros_and_signs():
    assert sinpi(3.0) == 0.0
    assert sinpi(-4.0) == 0.0
    assert sinpi(0.5) == 1.0
    assert sinpi(1.5) == -1.0
    assert sinpi(2.25) == pytest.approx(math.sin(2.25 * math.pi), rel=1e-15)


def test_log_abs_rgamma_consistency():
    for x in (-0.5, -3.3, 0.7, 5.0, -180.5):
        lg, sign = log_abs_rgamma(x)
        if abs(x) < 60:
            assert sign * math.exp(lg) == pytest.approx(rgamma(x), rel=1e-12)
        else:
            assert math.isfinite(lg) and sign != 0.0
    lg, sign = log_abs_rgamma(-4.0)
    assert lg == -math.inf and sign == 0.0
