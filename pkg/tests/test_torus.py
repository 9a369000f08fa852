import numpy as np
import pytest

from aggdiff import BadParameter, TorusDomain


def test_wrap_examples():
    assert TorusDomain(1.0).wrap(0.75) == -0.25
    assert TorusDomain(1.0).wrap(-0.5) == -0.5
    assert TorusDomain(2.0).wrap(5.0) == -1.0


def test_min_image_examples():
    assert TorusDomain(1.0).min_image(0.6) == pytest.approx(-0.4, abs=1e-15)
    assert TorusDomain(1.0).min_image(-0.5) == 0.5
    assert TorusDomain(4.0).min_image(1.9) == 1.9


def test_bad_length():
    with pytest.raises(BadParameter):
        TorusDomain(0.0)
    with pytest.raises(BadParameter):
        TorusDomain(-3.0)


def test_wrap_range_and_periodicity(rng):
    for L in (0.7, 1.0, 13.5):
        dom = TorusDomain(L)
        x = rng.uniform(-5 * L, 5 * L, 10_000)
        w = dom.wrap(x)
        assert np.all(w >= dom.base) and np.all(w < dom.base + L)
        assert np.allclose(dom.wrap(x + L), w, atol=1e-12 * L)
        # result is congruent to the input
        assert np.allclose((w - x) / L, np.round((w - x) / L), atol=1e-9)


def test_min_image_properties(rng):
    for L in (1.0, 4.0):
        dom = TorusDomain(L)
        dx = rng.uniform(-3 * L, 3 * L, 10_000)
        m = dom.min_image(dx)
        assert np.all(m > -L / 2) and np.all(m <= L / 2)
        assert np.allclose(dom.min_image(dx + L), m, atol=1e-12 * L)
        # antisymmetry away from the half-period boundary
        interior = np.abs(np.abs(m) - L / 2) > 1e-9 * L
        assert np.allclose(
            dom.min_image(-dx[interior]), -m[interior], atol=1e-12 * L
        )
    # the documented boundary exception: both signs map to +L/2
    dom = TorusDomain(1.0)
    assert dom.min_image(0.5) == 0.5 and dom.min_image(-0.5) == 0.5


def test_scalar_returns_float(t1):
    assert isinstance(t1.wrap(0.3), float)
    assert isinstance(t1.min_image(0.3), float)
