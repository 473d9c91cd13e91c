import numpy as np
import pytest
from scipy import special

from cavitybragg.bessel import iv, ive, log_ive

XS = np.concatenate([np.geomspace(1e-3, 50, 120), [29.99, 30.0, 30.01, 35.0]])


@pytest.mark.parametrize("m", range(0, 11))
def test_recurrence(m):
    for x in XS:
        lhs = iv(abs(m - 1), x) - iv(m + 1, x)
        rhs = 2 * m / x * iv(m, x)
        scale = max(abs(lhs), abs(rhs), iv(abs(m - 1), x))
        assert abs(lhs - rhs) <= 1e-9 * scale


@pytest.mark.parametrize("m", range(0, 13))
def test_matches_scipy(m):
    for x in XS:
        assert ive(m, x) == pytest.approx(special.ive(m, x), rel=1e-12, abs=1e-300)


def test_large_argument():
    for x in (100.0, 500.0, 2000.0):
        for m in range(0, 8):
            assert ive(m, x) == pytest.approx(special.ive(m, x), rel=1e-12)
    assert log_ive(3, 2000.0) == pytest.approx(np.log(special.ive(3, 2000.0)), rel=1e-12)


def test_special_values():
    assert ive(0, 0.0) == 1.0
    assert ive(3, 0.0) == 0.0
    assert ive(-2, 1.5) == ive(2, 1.5)
    assert log_ive(2, 0.0) == -np.inf
    # tiny argument: I_m(x) ~ (x/2)^m / m!
    assert iv(4, 1e-3) == pytest.approx((5e-4) ** 4 / 24, rel=1e-6)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        ive(1.5, 1.0)
    with pytest.raises(ValueError):
        ive(1, -1.0)
