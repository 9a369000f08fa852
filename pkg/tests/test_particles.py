import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from aggdiff import (
    BadParameter,
    DegenerateQuantile,
    InvalidState,
    MassTooSmall,
    ParticleState,
    PiecewiseDensity,
    TorusDomain,
    densities,
    init_particles,
    to_density,
)
from conftest import random_state

# frozen oracle: brentq on the analytic CDF x + 1/2 - (cos(2 pi x) + 1)/(2 pi)
SINE_QUANTILES_N8 = np.array(
    [
        -0.5,
        -0.07325192378049813,
        0.05789529771491289,
        0.13751011701649984,
        0.20426402835505011,
        0.26709389449142457,
        0.3313239470758083,
        0.4034171629013352,
    ]
)


def test_state_validation(t1):
    with pytest.raises(InvalidState):
        ParticleState(t1, 1.0, np.array([0.0, 0.0, 0.1]))
    with pytest.raises(InvalidState):
        ParticleState(t1, 1.0, np.array([-0.5, 0.6]))  # wrap gap closes
    with pytest.raises(InvalidState):
        ParticleState(t1, 1.5, np.array([-0.5, 0.0]))  # mass above 1
    with pytest.raises(InvalidState):
        ParticleState(t1, 0.0, np.array([-0.5, 0.0]))


def test_uniform_quantiles(t1, uniform_density):
    st = init_particles(uniform_density, 4, t1)
    assert np.allclose(st.positions, [-0.5, -0.25, 0.0, 0.25], atol=1e-15)
    assert st.mass == 1.0


def test_half_mass_uniform(t1):
    rho = PiecewiseDensity(t1, np.array([-0.5]), np.array([0.5]))
    st = init_particles(rho, 2, t1)
    assert np.allclose(st.positions, [-0.5, 0.0], atol=1e-15)
    assert st.mass == 0.5


def test_sine_quantiles_against_bisection_oracle(t1):
    st = init_particles(lambda x: 1.0 + np.sin(2 * np.pi * np.asarray(x)), 8, t1)
    assert np.max(np.abs(st.positions - SINE_QUANTILES_N8)) <= 1e-12


def test_init_matches_independent_oracle_random_profile(t1):
    # independent oracle: scipy quad + brentq on a fresh smooth profile
    prof = lambda x: 0.8 + 0.3 * np.sin(2 * np.pi * np.asarray(x)) + 0.2 * np.cos(
        4 * np.pi * np.asarray(x) + 0.7
    )
    n = 16
    st = init_particles(prof, n, t1)
    mass = quad(lambda x: float(prof(np.asarray([x]))[0]), -0.5, 0.5, epsabs=1e-13)[0]
    assert st.mass == pytest.approx(mass, abs=1e-11)
    for k in range(1, n):
        z = mass * k / n
        F = lambda x: quad(lambda y: float(prof(np.asarray([y]))[0]), -0.5, x, epsabs=1e-13)[0] - z
        xk = brentq(F, -0.5, 0.5, xtol=1e-13)
        assert st.positions[k] == pytest.approx(xk, abs=1e-10)


def test_densities_examples(t1, state3):
    assert np.allclose(densities(state3), [4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0], atol=1e-15)
    uniform = init_particles(PiecewiseDensity(t1, np.array([-0.5]), np.array([1.0])), 4, t1)
    assert np.allclose(densities(uniform), 1.0, atol=1e-14)
    dom2 = TorusDomain(2.0)
    st = ParticleState(dom2, 0.5, np.array([-1.0, 0.0]))
    assert np.allclose(densities(st), 0.25, atol=1e-15)


def test_densities_mass_identity(rng):
    for _ in range(20):
        st = random_state(rng)
        assert float(np.sum(densities(st) * st.gaps())) == pytest.approx(
            st.mass, rel=1e-12
        )


def test_to_density(state3):
    d = to_density(state3)
    assert np.array_equal(d.breakpoints, state3.positions)
    assert np.allclose(d.values, [4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0], atol=1e-15)
    assert d.mass == state3.mass


def test_init_mass_errors(t1):
    with pytest.raises(MassTooSmall):
        init_particles(lambda x: np.zeros_like(np.asarray(x, dtype=float)), 4, t1)
    with pytest.raises(BadParameter):
        init_particles(lambda x: np.full_like(np.asarray(x, dtype=float), 2.0), 4, t1)
    with pytest.raises(BadParameter):
        init_particles(lambda x: -np.ones_like(np.asarray(x, dtype=float)), 4, t1)


def test_degenerate_quantile_reported(t1):
    # a spike two float-ulps wide holding half the mass: five quantiles land
    # inside it, so at least two must coincide in float64
    width = 1.1e-16
    spike = PiecewiseDensity(
        t1,
        np.array([-0.5, 0.3, 0.3 + width]),
        np.array([0.25, 0.5 / width, 0.25]),
        t=0.0,
    )
    with pytest.raises(DegenerateQuantile):
        init_particles(spike, 8, t1)


def test_vacuum_profile_right_edge_placement(t1):
    # vacuum over [-1/4, 1/4): quantiles land on the right edge of the gap
    rho = PiecewiseDensity(t1, np.array([-0.5, -0.25, 0.25]), np.array([1.0, 0.0, 1.0]))
    st = init_particles(rho, 4, t1)
    assert st.positions[2] == pytest.approx(0.25, abs=1e-14)  # the c/2 quantile
    d = to_density(st)
    assert d.mass == st.mass


def test_init_from_hat_with_hints(t1):
    hat = lambda x: np.maximum(0.0, 1.0 - np.abs(np.asarray(x, dtype=float)) / 0.25) * 2.0
    st = init_particles(hat, 32, t1, breakpoint_hints=(-0.25, 0.0, 0.25))
    assert st.mass == pytest.approx(0.5, abs=1e-12)
    assert st.positions[0] == -0.5
    # quantiles concentrate in the support
    assert np.sum(np.abs(st.positions) <= 0.25) >= 30
