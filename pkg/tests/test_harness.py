import numpy as np
import pytest
from dataclasses import replace

from aggdiff import DomainMismatch, GridDensity, PiecewiseDensity, TorusDomain
from aggdiff.config import RunConfig
from aggdiff.harness import (
    FULL_CFG,
    GROWTH_CFG,
    HEAT_CFG,
    convergence_in_n,
    l1_distance,
    run_one,
    torus_growth,
    write_run_evidence,
)


@pytest.fixture
def t1():
    return TorusDomain(1.0)


def test_l1_distance_examples(t1):
    uni_p = PiecewiseDensity(t1, np.array([-0.5]), np.array([1.0]))
    uni_g = GridDensity(t1, np.ones(32))
    assert l1_distance(uni_p, uni_g) == 0.0
    eps = 0.125
    up_g = GridDensity(t1, np.full(32, 1.0 + eps))
    assert l1_distance(uni_p, up_g) == pytest.approx(eps, abs=1e-14)
    with pytest.raises(DomainMismatch):
        l1_distance(uni_p, GridDensity(TorusDomain(2.0), np.ones(32)))


def test_l1_distance_same_function_zero(t1):
    # a 4-cell density rendered on its own grid: distance 0
    vals = np.array([2.0, 0.5, 1.0, 0.5])
    p = PiecewiseDensity(t1, -0.5 + np.arange(4) / 4.0, vals)
    g = GridDensity(t1, vals)
    assert l1_distance(p, g) == 0.0


def test_run_one_failure_recorded():
    cfg = replace(FULL_CFG, particles_n=32, time_t=0.01, time_record_count=3)
    res = run_one(cfg, fault="flip_g")
    assert res.failure is not None and "StepTooSmall" in res.failure
    assert res.t_fail is not None


def test_convergence_study_stationary_uniform(tmp_path):
    cfg = RunConfig(
        domain_l=1.0, time_t=0.02, time_record_count=5, kernel_kind="zero",
        mobility_kind="constant", diffusion_family="log",
        init_kind="uniform", init_mass=1.0,
    )
    rep = convergence_in_n(cfg, [8, 16, 32], oracle="heat", out_dir=tmp_path / "study")
    cells = {c["N"]: c for c in rep.cells if "N" in c}
    for n in (8, 16, 32):
        assert cells[n]["failure"] is None
        assert cells[n]["err_spacetime"] == pytest.approx(0.0, abs=1e-12)
    assert rep._cauchy[8] == pytest.approx(0.0, abs=1e-13)
    assert rep._cauchy[16] == pytest.approx(0.0, abs=1e-13)
    assert (tmp_path / "study" / "N16" / "diagnostics.csv").exists()
    assert (tmp_path / "study" / "report.json").exists()
    assert (tmp_path / "study" / "N8" / "manifest.json").exists()


def test_convergence_study_heat_oracle_decreasing():
    rep = convergence_in_n(HEAT_CFG, [25, 50, 100], oracle="heat")
    cells = {c["N"]: c for c in rep.cells if "N" in c}
    errs = [cells[n]["err_final"] for n in (25, 50, 100)]
    assert errs[1] < errs[0] and errs[2] < errs[1]
    assert len(rep._cauchy) == 2
    assert rep._cauchy[25] > rep._cauchy[50] > 0


def test_convergence_study_records_per_cell_failures():
    rep = convergence_in_n(FULL_CFG, [16, 32], oracle=None, fault="flip_g")
    assert all(c.get("failure") for c in rep.cells if "N" in c)
    assert rep._cauchy == {}


def test_torus_growth_no_mass_cut(tmp_path):
    # support inside [-2, 2]: c_L identical across L (no mass is cut)
    rep = torus_growth(GROWTH_CFG, [8.0, 16.0], n0=12.0, out_dir=tmp_path / "growth")
    masses = [r.trajectory.snapshots[0].mass for r in rep._results.values()]
    assert masses[0] == pytest.approx(masses[1], abs=1e-12)
    assert masses[0] == pytest.approx(1.0, abs=1e-9)
    assert len(rep._diffs) == 1


def test_torus_growth_rejects_periodic_profiles():
    cfg = replace(GROWTH_CFG, init_kind="sine")
    with pytest.raises(Exception):
        torus_growth(cfg, [8.0, 16.0])


def test_run_evidence_files(tmp_path):
    cfg = replace(HEAT_CFG, particles_n=24, time_record_count=3)
    res = run_one(cfg)
    write_run_evidence(res, tmp_path / "cell")
    assert (tmp_path / "cell" / "manifest.json").exists()
    assert (tmp_path / "cell" / "diagnostics.csv").exists()
    snaps = sorted(p.name for p in (tmp_path / "cell").glob("snap_t*.csv"))
    assert len(snaps) == 3
    assert "snap_t0.csv" in snaps


def test_study_determinism():
    cfg = replace(HEAT_CFG, particles_n=32, time_record_count=4)
    r1 = run_one(cfg)
    r2 = run_one(cfg)
    for a, b in zip(r1.snapshots, r2.snapshots):
        assert np.array_equal(a.breakpoints, b.breakpoints)
        assert np.array_equal(a.values, b.values)


def test_worker_count_does_not_change_results():
    # determinism contract: identical study numbers at any worker cap
    cfg = replace(HEAT_CFG, particles_n=16, time_record_count=4)
    seq = convergence_in_n(cfg, [16, 32], oracle="heat", workers=1)
    par = convergence_in_n(cfg, [16, 32], oracle="heat", workers=4)
    assert seq._cauchy == par._cauchy
    for n in (16, 32):
        a, b = seq._results[n], par._results[n]
        for da, db in zip(a.snapshots, b.snapshots):
            assert np.array_equal(da.breakpoints, db.breakpoints)
            assert np.array_equal(da.values, db.values)


def test_cauchy_criterion_skipped_not_passed_when_truncated():
    # a single-N study has no Cauchy pairs: the criterion must report SKIPPED
    from aggdiff.harness import _crit_cauchy

    cfg = replace(FULL_CFG, particles_n=50)
    rep = convergence_in_n(cfg, [50], oracle=None)
    verdict = _crit_cauchy(rep, runtime=0.0)
    assert verdict.status == "SKIPPED"
    assert "not assessable" in verdict.detail
