import numpy as np
import pytest

from aggdiff import (
    BadParameter,
    MassMismatch,
    OutOfRange,
    PiecewiseDensity,
    TorusDomain,
    l1_between,
    read_density_csv,
    wasserstein1,
    write_density_csv,
)
from conftest import random_state
from aggdiff.particles import to_density


def test_uniform_cdf_and_inverse(uniform_density):
    d = uniform_density
    assert d.cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert d.cdf(-0.5) == 0.0
    assert d.cdf(0.5) == d.mass
    assert d.pseudo_inverse(0.0) == -0.5
    z = np.linspace(0.0, 1.0, 11)
    assert np.allclose(d.pseudo_inverse(z), -0.5 + z, atol=1e-15)


def test_three_cell_example(state3):
    d = to_density(state3)
    assert d.cdf(-0.25) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert d.pseudo_inverse(1.0 / 3.0) == pytest.approx(-0.25, abs=1e-15)
    assert d.pseudo_inverse(2.0 / 3.0) == pytest.approx(0.25, abs=1e-15)
    assert d.mass == 1.0


def test_mass_consistency_validation(t1):
    with pytest.raises(BadParameter):
        PiecewiseDensity(t1, np.array([-0.5, 0.0]), np.array([1.0, 1.0]), mass=2.0)
    with pytest.raises(BadParameter):
        PiecewiseDensity(t1, np.array([-0.5, 0.0]), np.array([1.0, -0.1]))
    with pytest.raises(BadParameter):
        PiecewiseDensity(t1, np.array([0.0, -0.5]), np.array([1.0, 1.0]))


def test_cdf_pseudo_inverse_roundtrip(rng):
    # cdf(X(z)) = z wherever the density is positive, sampled over [0, mass]
    for _ in range(20):
        d = to_density(random_state(rng))
        z = np.sort(rng.uniform(0.0, d.mass, 1000))
        x = d.pseudo_inverse(z)
        assert np.max(np.abs(d.cdf(x) - z)) <= 1e-10 * d.mass


def test_roundtrip_positions(rng):
    for _ in range(20):
        st = random_state(rng)
        d = to_density(st)
        z = st.mass * np.arange(st.n) / st.n
        back = d.pseudo_inverse(z)
        assert np.max(np.abs(back - st.positions)) <= 1e-12 * st.domain.length


def test_pseudo_inverse_out_of_range(uniform_density):
    with pytest.raises(OutOfRange):
        uniform_density.pseudo_inverse(-0.1)
    with pytest.raises(OutOfRange):
        uniform_density.pseudo_inverse(1.1)


def test_vacuum_cells_right_edge(t1):
    # density 1 on [-1/2, -1/4), vacuum on [-1/4, 1/4), 1 on [1/4, 1/2)
    d = PiecewiseDensity(
        t1, np.array([-0.5, -0.25, 0.25]), np.array([1.0, 0.0, 1.0])
    )
    assert d.mass == pytest.approx(0.5)
    # the flat CDF level gets the right edge of the vacuum gap
    assert d.pseudo_inverse(0.25) == pytest.approx(0.25, abs=1e-15)
    # z = 0 anchors at the first breakpoint regardless
    assert d.pseudo_inverse(0.0) == -0.5


def test_w1_translated_uniform(t1, uniform_density):
    for delta in (0.05, 0.2, 0.45):
        shifted = PiecewiseDensity(t1, np.array([-0.5 + delta]), np.array([1.0]))
        assert wasserstein1(uniform_density, shifted) == pytest.approx(delta, abs=1e-14)
    assert wasserstein1(uniform_density, uniform_density) == 0.0


def test_w1_mass_mismatch(t1, uniform_density):
    half = PiecewiseDensity(t1, np.array([-0.5]), np.array([0.5]))
    with pytest.raises(MassMismatch):
        wasserstein1(uniform_density, half)


def test_w1_against_riemann_oracle(rng, t1, state3):
    # dense-sampling oracle: 1e5-point Riemann sum of |X1 - X2|
    d1 = to_density(state3).normalized()
    d2 = to_density(random_state(rng, n=7)).normalized()
    z = (np.arange(100_000) + 0.5) / 100_000
    riemann = float(np.mean(np.abs(d1.pseudo_inverse(z) - d2.pseudo_inverse(z))))
    assert wasserstein1(d1, d2) == pytest.approx(riemann, abs=1e-6)


def test_l1_between_exact(t1, uniform_density):
    eps = 0.125
    other = PiecewiseDensity(t1, np.array([-0.5]), np.array([1.0 + eps]), mass=1.0 + eps)
    assert l1_between(uniform_density, other) == pytest.approx(eps, abs=1e-15)
    assert l1_between(uniform_density, uniform_density) == 0.0


def test_l1_between_window(t1):
    a = PiecewiseDensity(t1, np.array([-0.5, 0.0]), np.array([1.0, 2.0]))
    b = PiecewiseDensity(t1, np.array([-0.5, 0.0]), np.array([1.0, 1.0]))
    assert l1_between(a, b, window=(-0.25, 0.25)) == pytest.approx(0.25, abs=1e-15)


def test_csv_roundtrip(tmp_path, rng):
    st = random_state(rng, n=9)
    d = to_density(st)
    path = tmp_path / "snap.csv"
    write_density_csv(d, path)
    back = read_density_csv(path)
    assert back.domain.length == d.domain.length
    assert back.mass == d.mass
    assert np.array_equal(back.breakpoints, d.breakpoints)
    assert np.array_equal(back.values, d.values)


def test_csv_wraps_representatives(tmp_path, t1):
    # chains that drifted out of the fundamental interval wrap at I/O
    d = PiecewiseDensity(t1, np.array([0.7, 0.9]), np.array([1.0, 1.0]), t=0.5)
    path = tmp_path / "snap.csv"
    write_density_csv(d, path)
    back = read_density_csv(path)
    assert -0.5 <= back.breakpoints[0] < 0.5
    assert l1_between(d, back) <= 1e-12
