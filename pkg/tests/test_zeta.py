import numpy as np
import pytest
import scipy.special
from hypothesis import given
from hypothesis import strategies as st

from gmeasure.zeta import PowerWeights, hurwitz_zeta, riemann_zeta


@given(st.floats(1.05, 12), st.floats(0.01, 1e4))
def test_hurwitz_matches_scipy(s, q):
    ref = scipy.special.zeta(s, q)
    v, err = hurwitz_zeta(s, q, with_error=True)
    assert abs(v - ref) <= max(err, 1e-14 * ref) + 4e-15 * ref


def test_known_values():
    assert riemann_zeta(2.0) == pytest.approx(np.pi**2 / 6, rel=1e-14)
    assert riemann_zeta(4.0) == pytest.approx(np.pi**4 / 90, rel=1e-14)
    assert riemann_zeta(1.5) == pytest.approx(2.612375348685488, rel=1e-13)


def test_error_bound_is_tiny():
    _, err = hurwitz_zeta(3.5, np.array([1.0, 10.0, 1e5]), with_error=True)
    assert np.all(err < 1e-13)


def test_vectorized_shape():
    q = np.linspace(1, 5, 7)
    assert hurwitz_zeta(2.5, q).shape == (7,)


@pytest.mark.parametrize("s,q", [(1.0, 1.0), (0.5, 1.0), (2.0, 0.0), (2.0, -1.0)])
def test_domain(s, q):
    with pytest.raises(ValueError):
        hurwitz_zeta(s, q)


def test_power_weights_tail_and_class_sum():
    w = PowerWeights(1.5)
    direct = np.sum(w(np.arange(7, 2_000_001)))
    # truncated direct sum misses about 2 / sqrt(2e6)
    assert w.tail(7) - direct == pytest.approx(2 / np.sqrt(2e6), rel=1e-3)
    cs = w.class_sum(3, 4)  # w_3 + w_7 + w_11 + ...
    assert cs == pytest.approx(4**-1.5 * scipy.special.zeta(1.5, 0.75), rel=1e-14)
    assert w.total() == pytest.approx(scipy.special.zeta(1.5), rel=1e-14)


@pytest.mark.parametrize("budget", [1e-3, 1e-9, 1e-12])
def test_cutoff_is_minimal(budget):
    w = PowerWeights(3.5)
    L = w.cutoff(budget)
    assert w.tail(L + 1) <= budget
    assert L == 0 or w.tail(L) > budget


def test_first_is_read_only_cache():
    w = PowerWeights(2.0)
    a = w.first(10)
    assert np.allclose(a, 1 / np.arange(1, 11) ** 2)
    assert not a.flags.writeable
