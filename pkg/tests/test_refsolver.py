import numpy as np
import pytest

from aggdiff import (
    BadParameter,
    CFLViolation,
    GridDensity,
    TorusDomain,
    exact_heat,
    fv_solve,
    fv_step,
    interface_velocity,
    make_diffusion,
    make_mobility,
    two_yukawa,
    zero_kernel,
)
from aggdiff.refsolver import cfl_bound, read_grid_csv, write_grid_csv

HEAT_AMPLITUDE_T001 = 0.6738254512314336  # exp(-4 pi^2 * 0.01), frozen


@pytest.fixture
def t1():
    return TorusDomain(1.0)


@pytest.fixture
def heat_physics():
    mob = make_mobility("constant")
    return zero_kernel(), mob, make_diffusion("log", mob)


def _sine_grid(t1, m=256, amp=0.5):
    x = t1.base + (np.arange(m) + 0.5) / m
    return GridDensity(t1, 1.0 + amp * np.sin(2 * np.pi * x))


def test_exact_heat_values(t1):
    g0 = exact_heat(np.array([1.0, 0.0]), np.array([0.0, 0.5]), t1, 0.0, 512)
    assert g0.mass == pytest.approx(1.0, abs=1e-13)
    g = exact_heat(np.array([1.0, 0.0]), np.array([0.0, 0.5]), t1, 0.01, 512)
    # amplitude decays by the frozen factor; compare via the peak cell
    ratio = (np.max(g.values) - 1.0) / (np.max(g0.values) - 1.0)
    assert ratio == pytest.approx(HEAT_AMPLITUDE_T001, abs=1e-9)
    # rho0 = 1 stays 1
    flat = exact_heat(np.array([1.0]), np.array([0.0]), t1, 5.0, 64)
    assert np.allclose(flat.values, 1.0, atol=1e-15)


def test_exact_heat_linearity(t1):
    a = exact_heat(np.array([1.0, 0.2]), np.array([0.0, 0.4]), t1, 0.003, 128)
    b = exact_heat(2.0 * np.array([1.0, 0.2]), 2.0 * np.array([0.0, 0.4]), t1, 0.003, 128)
    assert np.allclose(2.0 * a.values, b.values, atol=1e-14)


def test_fv_step_uniform_fixed_point(t1, heat_physics):
    k, mob, diff = heat_physics
    g = GridDensity(t1, np.ones(64))
    dt = cfl_bound(g, k, diff) * 0.5
    out = fv_step(g, k, mob, diff, dt)
    assert np.array_equal(out.values, g.values)
    assert out.t == pytest.approx(dt)


def test_fv_step_cfl_violation(t1, heat_physics):
    k, mob, diff = heat_physics
    g = _sine_grid(t1, 64)
    with pytest.raises(CFLViolation):
        fv_step(g, k, mob, diff, 1.0)
    with pytest.raises(BadParameter):
        fv_step(g, k, mob, diff, -1.0)


def test_fv_step_mass_and_symmetry(t1, heat_physics):
    # delta-like profile spreads symmetrically, mass exact
    k, mob, diff = heat_physics
    vals = np.zeros(64)
    vals[31] = vals[32] = 32.0  # even profile about 0
    g = GridDensity(t1, vals)
    dt = 0.4 * cfl_bound(g, k, diff, safety=1.0)
    out = fv_step(g, k, mob, diff, dt)
    assert out.mass == pytest.approx(g.mass, rel=1e-13)
    assert np.allclose(out.values, out.values[::-1], atol=1e-12)
    assert np.min(out.values) >= 0.0


def test_fv_heat_matches_exact(t1, heat_physics):
    k, mob, diff = heat_physics
    g0 = _sine_grid(t1, 1024)
    sols = fv_solve(g0, k, mob, diff, 0.01, np.array([0.01]))
    ref = exact_heat(np.array([1.0, 0.0]), np.array([0.0, 0.5]), t1, 0.01, 1024)
    err = np.sum(np.abs(sols[-1].values - ref.values)) / 1024
    assert err <= 1e-4


def test_fv_self_convergence_heat(t1, heat_physics):
    k, mob, diff = heat_physics
    errs = []
    for m in (256, 512, 1024):
        g0 = _sine_grid(t1, m)
        sol = fv_solve(g0, k, mob, diff, 0.005, np.array([0.005]))[-1]
        ref = exact_heat(np.array([1.0, 0.0]), np.array([0.0, 0.5]), t1, 0.005, m)
        errs.append(float(np.sum(np.abs(sol.values - ref.values)) / m))
    assert errs[1] < errs[0] and errs[2] < errs[1]
    # first order or better in dx
    assert errs[0] / errs[2] >= 3.5


def test_fv_porous_medium_qualitative(t1):
    # compactly supported hat under PME: support expands, mass exact, rho >= 0
    mob = make_mobility("constant")
    diff = make_diffusion("power", mob, m=2.0)
    k = zero_kernel()
    m = 256
    x = t1.base + (np.arange(m) + 0.5) / m
    g0 = GridDensity(t1, 2.0 * np.maximum(0.0, 1.0 - np.abs(x) / 0.25))
    sols = fv_solve(g0, k, mob, diff, 0.01, np.array([0.005, 0.01]))
    final = sols[-1]
    assert final.mass == pytest.approx(g0.mass, rel=1e-12)
    assert np.min(final.values) >= 0.0
    assert np.sum(final.values > 1e-9) > np.sum(g0.values > 1e-9)
    assert np.max(final.values) < np.max(g0.values)


def test_fv_even_data_stays_even_with_kernel(t1):
    mob = make_mobility("rational")
    diff = make_diffusion("power", mob, m=2.0)
    kernel = two_yukawa(2.0)
    m = 128
    x = t1.base + (np.arange(m) + 0.5) / m
    g0 = GridDensity(t1, 0.3 * (1.0 + 0.4 * np.cos(2 * np.pi * x)))
    sols = fv_solve(g0, kernel, mob, diff, 0.005, np.array([0.005]))
    v = sols[-1].values
    assert np.max(np.abs(v - v[::-1])) <= 1e-10
    assert sols[-1].mass == pytest.approx(g0.mass, rel=1e-12)


def test_interface_velocity_zero_kernel(t1):
    g = _sine_grid(t1, 64)
    assert np.array_equal(interface_velocity(g, zero_kernel()), np.zeros(64))


def test_fv_numpy_and_fast_agree(t1):
    # force the numpy fallback with a quadrature-built diffusion
    mob = make_mobility("constant")
    kernel = two_yukawa(2.0)
    fast_diff = make_diffusion("power", mob, m=2.0)
    slow_diff = make_diffusion("power", mob, m=2.0, force_quadrature=True)
    g0 = _sine_grid(t1, 64, amp=0.3)
    a = fv_solve(g0, kernel, mob, fast_diff, 2e-4, np.array([2e-4]))[-1]
    b = fv_solve(g0, kernel, mob, slow_diff, 2e-4, np.array([2e-4]))[-1]
    assert np.max(np.abs(a.values - b.values)) <= 1e-11


def test_grid_csv_roundtrip(tmp_path, t1):
    g = _sine_grid(t1, 32)
    path = tmp_path / "grid.csv"
    write_grid_csv(g, path)
    back = read_grid_csv(path)
    assert back.m == g.m
    assert np.array_equal(back.values, g.values)
    assert back.domain.length == 1.0


def test_exact_heat_band_limit(t1):
    with pytest.raises(BadParameter):
        exact_heat(np.ones(80), np.zeros(80), t1, 0.01, 64)
    with pytest.raises(BadParameter):
        exact_heat(np.ones(2), np.zeros(3), t1, 0.01, 64)


def test_fv_solve_bad_record_times(t1, heat_physics):
    k, mob, diff = heat_physics
    g = _sine_grid(t1, 64)
    with pytest.raises(BadParameter):
        fv_solve(g, k, mob, diff, 0.01, np.array([0.02]))
    with pytest.raises(BadParameter):
        fv_solve(g, k, mob, diff, 0.01, np.array([0.005, 0.002]))
