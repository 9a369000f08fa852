import numpy as np
import pytest

from aggdiff import BadValue, ParseError, UnknownKey
from aggdiff.config import (
    RunConfig,
    build_state,
    heat_fourier_coeffs,
    line_profile,
    parse_config,
)


def write(tmp_path, text):
    p = tmp_path / "case.cfg"
    p.write_text(text)
    return p


def test_empty_config_is_default_heat_case(tmp_path):
    cfg = parse_config(write(tmp_path, "# nothing but a comment\n\n"))
    assert cfg == RunConfig()
    assert cfg.kernel_kind == "zero"
    assert cfg.mobility_kind == "constant"
    assert cfg.diffusion_family == "log"


def test_parse_full_config(tmp_path):
    cfg = parse_config(
        write(
            tmp_path,
            """
            domain.L = 2.0        # torus length
            particles.N = 128
            time.T = 0.1
            time.dt_max = 1e-3
            kernel.kind = two_yukawa
            kernel.beta = 3.0
            mobility.kind = rational
            diffusion.family = power
            diffusion.m = 2.0
            init.kind = sine
            init.mass = 0.5
            init.amplitude = 0.3
            output.dir = results
            """,
        )
    )
    assert cfg.domain_l == 2.0
    assert cfg.particles_n == 128
    assert cfg.kernel_beta == 3.0
    assert cfg.output_dir == "results"


def test_unknown_key_names_line(tmp_path):
    with pytest.raises(UnknownKey) as exc:
        parse_config(write(tmp_path, "\nkernel.knid = zero\n"))
    assert exc.value.line == 2


def test_unknown_kernel_kind_lists_valid(tmp_path):
    with pytest.raises(UnknownKey) as exc:
        parse_config(write(tmp_path, "kernel.kind = yukawa\n"))
    assert "two_yukawa" in str(exc.value)
    assert exc.value.line == 1


def test_bad_m_for_power_family(tmp_path):
    with pytest.raises(BadValue) as exc:
        parse_config(write(tmp_path, "diffusion.family = power\ndiffusion.m = 0.5\n"))
    assert "m = 1 is the log family" in str(exc.value)


def test_parse_error_no_equals(tmp_path):
    with pytest.raises(ParseError) as exc:
        parse_config(write(tmp_path, "domain.L 2.0\n"))
    assert exc.value.line == 1


def test_duplicate_key(tmp_path):
    with pytest.raises(ParseError):
        parse_config(write(tmp_path, "domain.L = 1\ndomain.L = 2\n"))


def test_bad_number(tmp_path):
    with pytest.raises(BadValue):
        parse_config(write(tmp_path, "particles.N = many\n"))
    with pytest.raises(BadValue):
        parse_config(write(tmp_path, "time.T = -0.5\n"))


def test_profiles_integrate_to_mass():
    from scipy.integrate import quad

    for kind, extra in (
        ("uniform", {}),
        ("sine", {"init_amplitude": 0.4, "init_phase": 0.3}),
        ("hat", {"init_center": 0.1, "init_width": 0.2}),
        ("gaussian_window", {"init_center": 0.0, "init_width": 0.15}),
    ):
        cfg = RunConfig(init_kind=kind, init_mass=0.75, **extra)
        f, _hints = line_profile(cfg)
        total = quad(lambda x: float(f(np.asarray([x]))[0]), -0.5, 0.5,
                     epsabs=1e-12, limit=200)[0]
        assert total == pytest.approx(0.75, abs=1e-9), kind


def test_heat_fourier_coeffs_match_profile():
    cfg = RunConfig(init_kind="sine", init_mass=1.0, init_amplitude=0.5, init_phase=0.7)
    a, b = heat_fourier_coeffs(cfg)
    f, _ = line_profile(cfg)
    x = np.linspace(-0.5, 0.5, 101)
    series = a[0] + a[1] * np.cos(2 * np.pi * x) + b[1] * np.sin(2 * np.pi * x)
    assert np.allclose(series, f(x), atol=1e-14)


def test_build_state_from_file(tmp_path):
    from aggdiff import PiecewiseDensity, TorusDomain, write_density_csv

    d = PiecewiseDensity(TorusDomain(1.0), np.array([-0.5, 0.0]), np.array([1.5, 0.5]))
    path = tmp_path / "rho0.csv"
    write_density_csv(d, path)
    cfg = RunConfig(init_kind="file", init_path=str(path), particles_n=16)
    st = build_state(cfg)
    assert st.n == 16
    assert st.mass == pytest.approx(d.mass, rel=1e-12)


def test_unknown_output_format(tmp_path):
    with pytest.raises(UnknownKey):
        parse_config(write(tmp_path, "output.formats = json\n"))


def test_gaussian_window_growth_profile():
    # torus-growth with a gaussian line profile: mass grows with the window
    from aggdiff.harness import torus_growth
    from dataclasses import replace
    from aggdiff.harness import GROWTH_CFG

    cfg = replace(GROWTH_CFG, init_kind="gaussian_window", init_width=1.0, time_t=0.005)
    rep = torus_growth(cfg, [8.0, 16.0], n0=8.0)
    masses = {L: r.trajectory.snapshots[0].mass for L, r in rep._results.items()}
    assert masses[8.0] < masses[16.0] <= 1.0
