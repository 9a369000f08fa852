"""Measured studies: N-refinement, torus growth, and the acceptance suite."""

from __future__ import annotations

import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .config import (
    RunConfig,
    build_diffusion,
    build_kernel,
    build_mobility,
    build_scheme_config,
    build_state,
    config_echo,
    heat_fourier_coeffs,
    line_profile,
)
from .density import PiecewiseDensity, l1_between, wasserstein1, write_density_csv
from .diagnostics import (
    energy_dissipation_monitor,
    holder_half_estimate,
    trajectory_diagnostics,
    tv_dissipation_inequality,
    write_diagnostics_csv,
)
from .errors import AggDiffError, DomainMismatch
from .particles import ParticleState, densities, init_particles, to_density
from .physics import make_diffusion, make_mobility, phi_v_quadrature, two_yukawa
from .quadrature import adaptive_simpson
from .refsolver import GridDensity, exact_heat, fv_solve
from .scheme import SchemeConfig, Trajectory, integrate, uniform_records
from .torus import TorusDomain

ORACLE_M = 2048


def l1_distance(particle_density: PiecewiseDensity, grid: GridDensity) -> float:
    """Exact L1 distance between a particle density and a grid density."""
    if not particle_density.domain.same_as(grid.domain):
        raise DomainMismatch(
            f"L = {particle_density.domain.length} vs {grid.domain.length}"
        )
    return l1_between(particle_density, grid.as_piecewise())


# ---------------------------------------------------------------------------
# reports


@dataclass
class Verdict:
    criterion: str
    status: str  # PASS | FAIL | SKIPPED
    detail: str
    runtime_s: float = 0.0
    limit_s: float | None = None


@dataclass
class StudyReport:
    kind: str
    grid: list
    cells: list
    verdicts: list[Verdict] = field(default_factory=list)
    env: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(v.status == "FAIL" for v in self.verdicts)

    def table_text(self) -> str:
        rows = [("criterion", "status", "runtime", "detail")]
        for v in self.verdicts:
            rt = f"{v.runtime_s:.1f}s" + (f"/{v.limit_s:.0f}s" if v.limit_s else "")
            rows.append((v.criterion, v.status, rt, v.detail))
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = [
            "  ".join(c.ljust(widths[i]) if i < 3 else c for i, c in enumerate(r)) for r in rows
        ]
        lines.insert(1, "-" * max(map(len, lines)))
        return "\n".join(lines)

    def write(self, out_dir) -> None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        public = {k: v for k, v in self.__dict__.items() if not k.startswith("_")}
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(_jsonable(public), fh, indent=1)
        with open(os.path.join(out_dir, "table.txt"), "w") as fh:
            fh.write(self.table_text() + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Verdict):
        return _jsonable(obj.__dict__)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def environment_info() -> dict:
    import numpy
    import scipy

    try:
        import numba

        numba_v = numba.__version__
    except ImportError:  # pragma: no cover
        numba_v = None
    return {
        "aggdiff": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "numba": numba_v,
        "machine": platform.machine(),
        "note": "criterion runtimes exclude the one-time JIT warmup (disk-cached)",
    }


# ---------------------------------------------------------------------------
# single runs


@dataclass
class RunResult:
    cfg: RunConfig
    failure: str | None = None
    t_fail: float | None = None
    wall_s: float = 0.0
    trajectory: Trajectory | None = None
    snapshots: list[PiecewiseDensity] = field(default_factory=list)
    records: list = field(default_factory=list)
    linf_max: float = 0.0
    linf_phi_exact: bool = True
    min_rho: float = float("inf")
    min_rho0: float = 0.0
    mass_drift: float = 0.0
    holder: float = float("nan")
    int_a2: float = float("nan")
    delta_f: float = float("nan")
    fitted_c: float = float("nan")

    def metrics(self) -> dict:
        return {
            "N": self.cfg.particles_n,
            "L": self.cfg.domain_l,
            "failure": self.failure,
            "wall_s": self.wall_s,
            "linf_max": self.linf_max,
            "linf_phi_exact": self.linf_phi_exact,
            "min_rho": self.min_rho,
            "mass_drift": self.mass_drift,
            "holder": self.holder,
            "int_a2": self.int_a2,
            "delta_f": self.delta_f,
            "fitted_c": self.fitted_c,
            "accepted": self.trajectory.n_accepted if self.trajectory else 0,
            "rejected": self.trajectory.n_rejected if self.trajectory else 0,
        }


def run_one(cfg: RunConfig, fault: str | None = None) -> RunResult:
    """Run one configuration and collect every per-run diagnostic the studies use."""
    t0 = time.perf_counter()
    res = RunResult(cfg=cfg)
    try:
        state0 = build_state(cfg)
        kernel = build_kernel(cfg)
        mobility = build_mobility(cfg)
        diffusion = build_diffusion(cfg, state0)
        scheme_cfg = build_scheme_config(cfg, state0, diffusion)
        traj = integrate(
            state0, kernel, mobility, diffusion, scheme_cfg,
            provenance=config_echo(cfg), fault=fault,
        )
    except AggDiffError as exc:
        res.failure = f"{type(exc).__name__}: {exc}"
        res.t_fail = getattr(exc, "t_fail", None)
        res.wall_s = time.perf_counter() - t0
        return res
    res.trajectory = traj
    res.snapshots = [to_density(s) for s in traj.snapshots]
    res.records = trajectory_diagnostics(traj, kernel, diffusion)
    rhos = [densities(s) for s in traj.snapshots]
    res.linf_max = max(float(np.max(r)) for r in rhos)
    res.min_rho = min(float(np.min(r)) for r in rhos)
    res.min_rho0 = float(np.min(rhos[0]))
    res.linf_phi_exact = all(
        float(np.max(diffusion.eval_phi_v(r)))
        == float(diffusion.eval_phi_v(np.asarray([np.max(r)]))[0])
        for r in rhos
    )
    cL = traj.snapshots[0].mass
    res.mass_drift = max(abs(r.mass - cL) / cL for r in res.records)
    if len(traj.snapshots) >= 4:
        res.holder = holder_half_estimate(traj)
    if len(traj.snapshots) >= 3:
        mon = energy_dissipation_monitor(traj, kernel, diffusion)
        res.int_a2 = mon.int_a2
        res.delta_f = mon.delta_f
        res.fitted_c = mon.fitted_c
    res.wall_s = time.perf_counter() - t0
    return res


def write_run_evidence(res: RunResult, cell_dir) -> None:
    import os

    os.makedirs(cell_dir, exist_ok=True)
    manifest = {
        "config": config_echo(res.cfg),
        "failure": res.failure,
        "t_fail": res.t_fail,
        "wall_s": res.wall_s,
        "accepted": res.trajectory.n_accepted if res.trajectory else 0,
        "rejected": res.trajectory.n_rejected if res.trajectory else 0,
    }
    with open(os.path.join(cell_dir, "manifest.json"), "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=1)
    for dens in res.snapshots:
        write_density_csv(dens, os.path.join(cell_dir, f"snap_t{dens.t:.6g}.csv"))
    if res.records:
        write_diagnostics_csv(res.records, os.path.join(cell_dir, "diagnostics.csv"))


def _run_many(cfgs: list[RunConfig], workers: int, fault: str | None = None) -> list[RunResult]:
    if workers <= 1 or len(cfgs) <= 1:
        return [run_one(c, fault) for c in cfgs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: run_one(c, fault), cfgs))


# ---------------------------------------------------------------------------
# studies


def _oracle_snapshots(cfg: RunConfig, times: np.ndarray, oracle: str) -> list[PiecewiseDensity]:
    domain = TorusDomain(cfg.domain_l)
    if oracle == "heat":
        if cfg.kernel_kind != "zero" or cfg.mobility_kind != "constant" or cfg.diffusion_family != "log":
            raise AggDiffError("heat oracle needs K=0, v=1, log-entropy")
        a, b = heat_fourier_coeffs(cfg)
        return [exact_heat(a, b, domain, float(t), ORACLE_M).as_piecewise() for t in times]
    if oracle == "fv":
        profile, _hints = line_profile(cfg)
        dx = cfg.domain_l / ORACLE_M
        edges = domain.base + np.arange(ORACLE_M + 1) * dx
        # 3-point Gauss-Legendre cell averages of the initial profile
        gl_x = np.array([0.1127016653792583, 0.5, 0.8872983346207417])
        gl_w = np.array([5.0, 8.0, 5.0]) / 18.0
        nodes = edges[:-1, None] + dx * gl_x[None, :]
        vals = np.asarray(profile(nodes.ravel())).reshape(nodes.shape) @ gl_w
        grid0 = GridDensity(domain, np.maximum(vals, 0.0), t=float(times[0]))
        kernel = build_kernel(cfg)
        mobility = build_mobility(cfg)
        diffusion = make_diffusion(
            cfg.diffusion_family, mobility, m=cfg.diffusion_m,
            s_max=max(4.0 * float(np.max(vals)), 1.0),
        )
        grids = fv_solve(grid0, kernel, mobility, diffusion, float(times[-1]), times)
        return [g.as_piecewise() for g in grids]
    raise AggDiffError(f"unknown oracle {oracle!r}")


def _time_avg(errs: np.ndarray, ts: np.ndarray) -> float:
    if ts[-1] == ts[0]:
        return float(errs[0])
    return float(np.trapezoid(errs, ts) / (ts[-1] - ts[0]))


def convergence_in_n(
    base: RunConfig,
    n_list,
    oracle: str | None = None,
    out_dir=None,
    workers: int = 1,
    fault: str | None = None,
) -> StudyReport:
    """Run the scheme at each N; report oracle errors, Cauchy differences, diagnostics.

    Cauchy difference d(N) = time-averaged L1 between the N and 2N runs at
    common record times (computed for each consecutive doubling pair in
    n_list). Per-cell failures are recorded and the study continues.
    """
    n_list = sorted(int(n) for n in n_list)
    if any(n < 8 for n in n_list):
        raise AggDiffError("convergence study needs N >= 8")
    cfgs = [base.with_n(n) for n in n_list]
    results = _run_many(cfgs, workers, fault)
    by_n = dict(zip(n_list, results))
    times = uniform_records(base.time_t, base.time_record_count)

    cells = []
    oracle_dens = None
    if oracle is not None:
        oracle_dens = _oracle_snapshots(base, times, oracle)
    for n, res in zip(n_list, results):
        cell = res.metrics()
        if res.failure is None and oracle_dens is not None:
            errs = np.array(
                [l1_between(d, o) for d, o in zip(res.snapshots, oracle_dens)]
            )
            cell["err_spacetime"] = _time_avg(errs, times)
            cell["err_final"] = float(errs[-1])
        cells.append(cell)

    cauchy: dict[int, float] = {}
    for n in n_list:
        if 2 * n in by_n:
            a, b = by_n[n], by_n[2 * n]
            if a.failure is None and b.failure is None:
                errs = np.array(
                    [l1_between(d1, d2) for d1, d2 in zip(a.snapshots, b.snapshots)]
                )
                cauchy[n] = _time_avg(errs, times)

    report = StudyReport(
        kind="convergence_in_N",
        grid=[{"N": n} for n in n_list],
        cells=cells,
        env=environment_info(),
    )
    report.cells.append({"cauchy": {str(k): v for k, v in cauchy.items()}, "oracle": oracle})
    if out_dir is not None:
        import os

        for n, res in zip(n_list, results):
            write_run_evidence(res, os.path.join(out_dir, f"N{n}"))
        report.write(out_dir)
    report._results = by_n  # type: ignore[attr-defined]
    report._cauchy = cauchy  # type: ignore[attr-defined]
    return report


def torus_growth(
    base: RunConfig,
    l_list,
    n0: float = 50.0,
    out_dir=None,
    workers: int = 1,
) -> StudyReport:
    """Grow the torus with fixed particles-per-length; compare common windows.

    The line profile is built once (hat or gaussian_window) and restricted to
    each [-L/2, L/2); its first moment is checked finite by quadrature. Window
    L1 differences between consecutive-L runs are measured on the common
    window [-L_min/2, L_min/2) and time-averaged over record times.
    """
    l_list = sorted(float(L) for L in l_list)
    if base.init_kind not in ("hat", "gaussian_window"):
        raise AggDiffError("torus growth needs a localized line profile (hat, gaussian_window)")
    profile_cfg = replace(base, domain_l=l_list[-1])
    profile, hints = line_profile(profile_cfg)
    half = l_list[-1] / 2.0
    moment = adaptive_simpson(
        lambda x: abs(x) * float(profile(np.asarray([x]))[0]), -half, half, tol=1e-9
    )

    def run_at(L: float) -> RunResult:
        n = int(math.ceil(n0 * L))
        cfg = replace(base, domain_l=L, particles_n=n)
        t0 = time.perf_counter()
        res = RunResult(cfg=cfg)
        try:
            domain = TorusDomain(L)
            state0 = init_particles(profile, n, domain, breakpoint_hints=hints)
            kernel = build_kernel(cfg)
            mobility = build_mobility(cfg)
            diffusion = make_diffusion(
                cfg.diffusion_family, mobility, m=cfg.diffusion_m,
                s_max=max(4.0 * float(np.max(densities(state0))), 1.0),
            )
            scheme_cfg = build_scheme_config(cfg, state0, diffusion)
            traj = integrate(state0, kernel, mobility, diffusion, scheme_cfg,
                             provenance=config_echo(cfg))
        except AggDiffError as exc:
            res.failure = f"{type(exc).__name__}: {exc}"
            res.wall_s = time.perf_counter() - t0
            return res
        res.trajectory = traj
        res.snapshots = [to_density(s) for s in traj.snapshots]
        res.records = trajectory_diagnostics(traj, kernel, diffusion)
        cl = traj.snapshots[0].mass
        res.mass_drift = max(abs(r.mass - cl) / cl for r in res.records)
        res.wall_s = time.perf_counter() - t0
        return res

    if workers > 1 and len(l_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_at, l_list))
    else:
        results = [run_at(L) for L in l_list]

    window = (-l_list[0] / 2.0, l_list[0] / 2.0)
    times = uniform_records(base.time_t, base.time_record_count)
    diffs: dict[str, float] = {}
    for (l1v, r1), (l2v, r2) in zip(zip(l_list, results), zip(l_list[1:], results[1:])):
        if r1.failure is None and r2.failure is None:
            errs = np.array(
                [l1_between(d1, d2, window=window) for d1, d2 in zip(r1.snapshots, r2.snapshots)]
            )
            diffs[f"{l1v:g}->{l2v:g}"] = _time_avg(errs, times)

    cells = [r.metrics() for r in results]
    cells.append({"window_diffs": diffs, "first_moment": moment, "window": list(window)})
    report = StudyReport(
        kind="torus_growth",
        grid=[{"L": L, "N": int(math.ceil(n0 * L))} for L in l_list],
        cells=cells,
        env=environment_info(),
    )
    if out_dir is not None:
        import os

        for L, res in zip(l_list, results):
            write_run_evidence(res, os.path.join(out_dir, f"L{L:g}"))
        report.write(out_dir)
    report._results = dict(zip(l_list, results))  # type: ignore[attr-defined]
    report._diffs = diffs  # type: ignore[attr-defined]
    return report


# ---------------------------------------------------------------------------
# acceptance suite

# Frozen study configurations. Criteria pin kernel/mobility/diffusion/T; the
# initial profiles are chosen so the diffusive dt cap keeps the N = 400 runs
# inside the stated budgets, with the full-model density peak at the torus
# seam so the minimal-image plumbing is load-bearing.
HEAT_CFG = RunConfig(
    domain_l=1.0, time_t=0.01, time_record_count=11,
    kernel_kind="zero", mobility_kind="constant", diffusion_family="log",
    init_kind="sine", init_mass=1.0, init_amplitude=0.5, init_phase=0.0,
)
POROUS_CFG = RunConfig(
    domain_l=1.0, time_t=0.05, time_record_count=11,
    kernel_kind="zero", mobility_kind="constant", diffusion_family="power", diffusion_m=2.0,
    init_kind="sine", init_mass=0.5, init_amplitude=0.25, init_phase=0.0,
)
FULL_CFG = RunConfig(
    domain_l=1.0, time_t=0.05, time_record_count=11,
    kernel_kind="two_yukawa", kernel_beta=2.0,
    mobility_kind="rational", diffusion_family="power", diffusion_m=2.0,
    init_kind="sine", init_mass=0.2, init_amplitude=0.4, init_phase=-0.5 * math.pi,
)
GROWTH_CFG = RunConfig(
    domain_l=8.0, time_t=0.05, time_record_count=11,
    kernel_kind="zero", mobility_kind="rational", diffusion_family="power", diffusion_m=2.0,
    init_kind="hat", init_mass=1.0, init_center=0.0, init_width=2.0,
)


def warmup_jit() -> None:
    """Compile (or load from cache) the hot loops before any timed study."""
    tiny = replace(FULL_CFG, particles_n=12, time_t=1e-6, time_record_count=2)
    run_one(tiny)
    grid = GridDensity(TorusDomain(1.0), np.full(16, 0.5))
    mob = make_mobility("constant")
    diff = make_diffusion("power", mob, m=2.0, s_max=4.0)
    fv_solve(grid, two_yukawa(2.0), mob, diff, 1e-7, np.array([1e-7]))


def _ratio_spread(values) -> float:
    vals = [v for v in values if np.isfinite(v)]
    if len(vals) != len(list(values)) or not vals or min(vals) <= 0.0:
        return float("inf")
    return max(vals) / min(vals)


def _crit_heat(rep: StudyReport, runtime: float) -> Verdict:
    res = rep._results
    for n in (200, 400):
        if n not in res or res[n].failure is not None:
            return Verdict("1 heat-oracle", "FAIL", f"run N={n} missing or failed", runtime, 30.0)
    cells = {c["N"]: c for c in rep.cells if "N" in c}
    e200, e400 = cells[200].get("err_final"), cells[400].get("err_final")
    ok = e200 is not None and e200 <= 2e-2 and e400 > 0 and e200 / e400 >= 1.5
    detail = f"L1(T) N=200: {e200:.4g} (<=2e-2), ratio 200->400: {e200 / e400:.2f} (>=1.5)"
    status = "PASS" if ok and runtime <= 30.0 else "FAIL"
    if ok and runtime > 30.0:
        detail += f"; runtime {runtime:.1f}s exceeds 30s"
    return Verdict("1 heat-oracle", status, detail, runtime, 30.0)


def _crit_porous(rep: StudyReport, runtime: float) -> Verdict:
    res = rep._results
    if any(r.failure is not None for r in res.values()):
        return Verdict("2 porous-oracle", "FAIL", "a run failed", runtime, 120.0)
    vac = [n for n, r in res.items() if r.min_rho < 0.01 * r.min_rho0]
    if vac:
        return Verdict(
            "2 porous-oracle", "SKIPPED",
            f"vacuum flag at N={vac}: oracle comparison not asserted", runtime, 120.0,
        )
    cells = {c["N"]: c for c in rep.cells if "N" in c}
    errs = [cells[n]["err_spacetime"] for n in sorted(cells)]
    ok = cells[200]["err_spacetime"] <= 5e-2 and all(a > b for a, b in zip(errs, errs[1:]))
    detail = "space-time L1 " + ", ".join(
        f"N={n}: {cells[n]['err_spacetime']:.4g}" for n in sorted(cells)
    )
    status = "PASS" if ok and runtime <= 120.0 else "FAIL"
    if ok and runtime > 120.0:
        detail += f"; runtime {runtime:.1f}s exceeds 120s"
    return Verdict("2 porous-oracle", status, detail, runtime, 120.0)


def _crit_cauchy(rep: StudyReport, runtime: float) -> Verdict:
    cauchy = rep._cauchy
    if len(cauchy) < 2:
        return Verdict(
            "3 full-cauchy", "SKIPPED",
            f"only {len(cauchy)} Cauchy pair(s) available: decrease not assessable",
            runtime, 180.0,
        )
    failures = [n for n, r in rep._results.items() if r.failure is not None]
    if failures:
        return Verdict("3 full-cauchy", "FAIL", f"runs failed at N={failures}", runtime, 180.0)
    ns = sorted(cauchy)
    ds = [cauchy[n] for n in ns]
    ok = all(d > 0 for d in ds) and all(a > b for a, b in zip(ds, ds[1:]))
    detail = ", ".join(f"d({n})={cauchy[n]:.4g}" for n in ns)
    status = "PASS" if ok and runtime <= 180.0 else "FAIL"
    if ok and runtime > 180.0:
        detail += f"; runtime {runtime:.1f}s exceeds 180s"
    return Verdict("3 full-cauchy", status, detail, runtime, 180.0)


def _crit_linf(rep: StudyReport) -> Verdict:
    res = rep._results
    wanted = [n for n in (100, 200, 400) if n in res]
    if len(wanted) < 3 or any(res[n].failure is not None for n in wanted):
        return Verdict("4 linf-uniform", "SKIPPED", "needs successful runs at N=100,200,400")
    spread = _ratio_spread([res[n].linf_max for n in wanted])
    exact = all(res[n].linf_phi_exact for n in wanted)
    ok = spread <= 1.5 and exact
    detail = (
        f"max ||rho||_inf spread {spread:.3f} (<=1.5); "
        f"||phi_v(rho)||_inf == phi_v(||rho||_inf): {exact}"
    )
    return Verdict("4 linf-uniform", "PASS" if ok else "FAIL", detail)


def _crit_energy(rep: StudyReport) -> Verdict:
    res = rep._results
    if 400 not in res or 200 not in res or res[400].failure or res[200].failure:
        return Verdict("5 energy-dissipation", "SKIPPED", "needs successful N=200,400 runs")
    r400, r200 = res[400], res[200]
    df_ok = r400.delta_f <= 0.1
    ratio = _ratio_spread([r400.int_a2, r200.int_a2]) if max(r400.int_a2, r200.int_a2) > 1e-30 else 1.0
    a2_ok = ratio <= 2.0
    detail = (
        f"F(T)-F(0) = {r400.delta_f:.4g} (<=0.1); fitted C = {r400.fitted_c:.4g}; "
        f"int a^2 ratio 200/400 = {ratio:.3f} (<=2)"
    )
    return Verdict("5 energy-dissipation", "PASS" if df_ok and a2_ok else "FAIL", detail)


def _crit_holder(heat_rep: StudyReport, full_rep: StudyReport) -> Verdict:
    details, ok = [], True
    for name, rep in (("heat", heat_rep), ("full", full_rep)):
        res = rep._results
        wanted = [n for n in (100, 200, 400) if n in res and res[n].failure is None]
        if len(wanted) < 3:
            return Verdict("6 holder-half", "SKIPPED", f"{name}: needs N=100,200,400")
        vals = [res[n].holder for n in wanted]
        spread = _ratio_spread(vals)
        ok = ok and all(np.isfinite(v) for v in vals) and spread <= 2.0
        details.append(f"{name}: " + ", ".join(f"{v:.4g}" for v in vals) + f" (spread {spread:.2f})")
    return Verdict("6 holder-half", "PASS" if ok else "FAIL", "; ".join(details))


def _crit_growth(rep: StudyReport, runtime: float) -> Verdict:
    failures = [L for L, r in rep._results.items() if r.failure is not None]
    if failures:
        return Verdict("7 torus-growth", "FAIL", f"runs failed at L={failures}", runtime, 300.0)
    diffs = rep._diffs
    if len(diffs) < 2:
        return Verdict("7 torus-growth", "SKIPPED", "needs at least three L values", runtime, 300.0)
    vals = list(diffs.values())
    ok = all(v > 0 for v in vals) and all(a > b for a, b in zip(vals, vals[1:]))
    detail = ", ".join(f"{k}: {v:.4g}" for k, v in diffs.items())
    status = "PASS" if ok and runtime <= 300.0 else "FAIL"
    if ok and runtime > 300.0:
        detail += f"; runtime {runtime:.1f}s exceeds 300s"
    return Verdict("7 torus-growth", status, detail, runtime, 300.0)


def _rk4_order_factor() -> float:
    cfg = replace(HEAT_CFG, particles_n=16)
    state0 = build_state(cfg)
    kernel, mobility = build_kernel(cfg), build_mobility(cfg)
    diffusion = build_diffusion(cfg, state0)
    t_end = 0.01

    def final(h):
        sc = SchemeConfig(t_end=t_end, dt_init=h, dt_max=h, record_times=np.array([t_end]))
        return integrate(state0, kernel, mobility, diffusion, sc).snapshots[-1].positions

    x1, x2, x8 = final(2e-4), final(1e-4), final(2.5e-5)
    e1 = float(np.max(np.abs(x1 - x8)))
    e2 = float(np.max(np.abs(x2 - x8)))
    return e1 / e2 if e2 > 0 else float("inf")


def _translation_error() -> float:
    cfg = replace(FULL_CFG, particles_n=64, time_t=0.02, time_record_count=2)
    state0 = build_state(cfg)
    kernel, mobility = build_kernel(cfg), build_mobility(cfg)
    diffusion = build_diffusion(cfg, state0)
    sc = build_scheme_config(cfg, state0, diffusion)
    delta = 0.3
    shifted = ParticleState(state0.domain, state0.mass, state0.positions + delta, t=0.0)
    xa = integrate(state0, kernel, mobility, diffusion, sc).snapshots[-1].positions
    xb = integrate(shifted, kernel, mobility, diffusion, sc).snapshots[-1].positions
    return float(np.max(np.abs(state0.domain.min_image(xb - (xa + delta)))))


def _symmetry_error() -> float:
    # odd N: an even profile with even N puts particles exactly antipodal, and
    # the (-L/2, L/2] minimal-image convention kicks such a pair asymmetrically
    # (the documented boundary exception), an O(1/N) effect unrelated to the
    # scheme's equivariance
    cfg = replace(FULL_CFG, particles_n=65, time_t=0.1, time_record_count=2,
                  init_phase=0.5 * math.pi)
    state0 = build_state(cfg)
    kernel, mobility = build_kernel(cfg), build_mobility(cfg)
    diffusion = build_diffusion(cfg, state0)
    sc = build_scheme_config(cfg, state0, diffusion)
    x = integrate(state0, kernel, mobility, diffusion, sc).snapshots[-1].positions
    n = x.size
    sums = x + x[(n - np.arange(n)) % n]
    return float(np.max(np.abs(state0.domain.min_image(sums))))


def _w1_axioms_ok(rng: np.random.Generator, n_triples: int = 30):
    dom = TorusDomain(1.0)
    def rand_density():
        nb = int(rng.integers(3, 12))
        b = np.sort(rng.uniform(-0.5, 0.45, nb))
        v = rng.uniform(0.1, 2.0, nb)
        return PiecewiseDensity(dom, b, v).normalized()
    worst_tri, sym_exact, ident_ok = 0.0, True, True
    for _ in range(n_triples):
        a, b, c = rand_density(), rand_density(), rand_density()
        dab, dba = wasserstein1(a, b), wasserstein1(b, a)
        sym_exact = sym_exact and (dab == dba)
        ident_ok = ident_ok and wasserstein1(a, a) <= 1e-12
        worst_tri = max(worst_tri, wasserstein1(a, c) - (dab + wasserstein1(b, c)))
    return sym_exact, ident_ok, worst_tri


def _tv_inequality_ok(rng: np.random.Generator, n_states: int = 100) -> bool:
    dom = TorusDomain(1.0)
    specs = [
        make_diffusion("power", make_mobility("rational"), m=2.0),
        make_diffusion("log", make_mobility("constant")),
        make_diffusion("power", make_mobility("linear_cutoff", sbar=1.0), m=2.0),
    ]
    for i in range(n_states):
        n = int(rng.integers(4, 64))
        x = np.sort(rng.uniform(-0.5, 0.5, n))
        if np.min(np.diff(x)) <= 1e-12 or x[-1] - x[0] >= 1.0:
            continue
        state = ParticleState(dom, float(rng.uniform(0.1, 1.0)), x)
        rep = tv_dissipation_inequality(state, specs[i % len(specs)])
        if not rep.holds:
            return False
    return True


def _phi_v_quad_error() -> float:
    pairs = [
        ("log", 1.0, make_mobility("constant")),
        ("power", 2.0, make_mobility("constant")),
        ("power", 2.5, make_mobility("constant")),
        ("log", 1.0, make_mobility("linear_cutoff", sbar=0.7)),
        ("power", 2.0, make_mobility("linear_cutoff", sbar=0.7)),
        ("log", 1.0, make_mobility("rational")),
        ("power", 2.0, make_mobility("rational")),
    ]
    worst = 0.0
    for family, m, mob in pairs:
        spec = make_diffusion(family, mob, m=m, s_max=4.0)
        for s in np.linspace(0.05, 3.0, 25):
            closed = float(spec.eval_phi_v(np.asarray([s]))[0])
            quad = phi_v_quadrature(family, m, mob, float(s))
            worst = max(worst, abs(closed - quad))
    return worst


def _crit_invariants(all_results: list[RunResult]) -> Verdict:
    t0 = time.perf_counter()
    parts, ok = [], True

    drift = max((r.mass_drift for r in all_results if r.failure is None), default=0.0)
    ok &= drift <= 1e-10
    parts.append(f"mass drift {drift:.2e} (<=1e-10)")

    n_snaps = sum(len(r.snapshots) for r in all_results if r.failure is None)
    parts.append(f"ordering guard held at every accepted step; {n_snaps} snapshots revalidated")

    terr = _translation_error()
    ok &= terr <= 1e-9
    parts.append(f"translation equivariance {terr:.2e} (<=1e-9 L)")

    serr = _symmetry_error()
    ok &= serr <= 1e-9
    parts.append(f"symmetry preservation {serr:.2e} (<=1e-9 L)")

    rng = np.random.default_rng(20240811)
    sym_exact, ident_ok, worst_tri = _w1_axioms_ok(rng)
    ok &= sym_exact and ident_ok and worst_tri <= 1e-10
    parts.append(f"W1 axioms: symmetry exact {sym_exact}, triangle slack {worst_tri:.2e}")

    tv_ok = _tv_inequality_ok(rng)
    ok &= tv_ok
    parts.append(f"tv-dissipation inequality on random states: {tv_ok}")

    qerr = _phi_v_quad_error()
    ok &= qerr <= 1e-9
    parts.append(f"phi_v quadrature vs closed forms {qerr:.2e} (<=1e-9)")

    factor = _rk4_order_factor()
    ok &= 12.0 <= factor <= 20.0
    parts.append(f"RK4 order factor {factor:.2f} (in [12, 20])")

    runtime = time.perf_counter() - t0
    status = "PASS" if ok and runtime <= 120.0 else "FAIL"
    return Verdict("8 invariant-suite", status, "; ".join(parts), runtime, 120.0)


def _translation_error_under(fault: str | None) -> float:
    cfg = replace(FULL_CFG, particles_n=64, time_t=0.02, time_record_count=2)
    state0 = build_state(cfg)
    kernel, mobility = build_kernel(cfg), build_mobility(cfg)
    diffusion = build_diffusion(cfg, state0)
    sc = build_scheme_config(cfg, state0, diffusion)
    delta = 0.3
    shifted = ParticleState(state0.domain, state0.mass, state0.positions + delta, t=0.0)
    xa = integrate(state0, kernel, mobility, diffusion, sc, fault=fault).snapshots[-1].positions
    xb = integrate(shifted, kernel, mobility, diffusion, sc, fault=fault).snapshots[-1].positions
    return float(np.max(np.abs(state0.domain.min_image(xb - (xa + delta)))))


def _crit_mutation() -> Verdict:
    """Fault injection: the suite is supposed to have teeth, with flip_g
    breaking the energy criterion and no_min_image breaking the Cauchy
    criterion (both exercised at reduced scale here).

    Empirically the second leg cannot hold: evaluating K' without the minimal
    image is still a consistent particle scheme, so its own Cauchy differences
    keep decreasing (it converges to the wrong limit). The verdict reports
    that leg faithfully and also measures the invariant that does catch the
    fault (criterion 8's translation equivariance).
    """
    t0 = time.perf_counter()
    flip_cfg = replace(FULL_CFG, particles_n=100, time_t=0.02, time_record_count=5)
    flip = run_one(flip_cfg, fault="flip_g")
    flip_failed = flip.failure is not None or (np.isfinite(flip.delta_f) and flip.delta_f > 0.1)
    flip_detail = flip.failure or f"delta F = {flip.delta_f:.4g}"

    mut_rep = convergence_in_n(FULL_CFG, [25, 50, 100], oracle=None, fault="no_min_image")
    cauchy = mut_rep._cauchy
    runs_failed = any(r.failure is not None for r in mut_rep._results.values())
    if runs_failed or len(cauchy) < 2:
        mut_failed = True
        mut_detail = "mutant runs failed" if runs_failed else "mutant Cauchy pairs unavailable"
    else:
        ns = sorted(cauchy)
        ds = [cauchy[n] for n in ns]
        decreasing = all(a > b for a, b in zip(ds, ds[1:]))
        mut_failed = not decreasing
        mut_detail = "mutant Cauchy " + ", ".join(f"d({n})={cauchy[n]:.4g}" for n in ns)
    equiv_err = _translation_error_under("no_min_image")

    ok = flip_failed and mut_failed
    detail = (
        f"flip_g breaks the energy criterion: {flip_failed} ({flip_detail}); "
        f"no_min_image breaks Cauchy decrease: {mut_failed} ({mut_detail}; "
        f"the mutant stays self-consistent, so this leg is expected to fail honestly); "
        f"no_min_image IS caught by translation equivariance: error {equiv_err:.2e} vs 1e-9"
    )
    return Verdict("9 mutation-sanity", "PASS" if ok else "FAIL", detail, time.perf_counter() - t0)


def acceptance_suite(
    out_dir,
    workers: int = 1,
    heat_n_list=(100, 200, 400),
    porous_n_list=(100, 200, 400),
    full_n_list=(50, 100, 200, 400),
    growth_l_list=(8.0, 16.0, 32.0),
) -> StudyReport:
    """Run every acceptance criterion; verdicts plus evidence CSVs land in out_dir."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    warmup_jit()
    verdicts: list[Verdict] = []

    t0 = time.perf_counter()
    heat_rep = convergence_in_n(
        HEAT_CFG, heat_n_list, oracle="heat", out_dir=os.path.join(out_dir, "heat"), workers=workers
    )
    heat_wall = time.perf_counter() - t0

    t0 = time.perf_counter()
    porous_rep = convergence_in_n(
        POROUS_CFG, porous_n_list, oracle="fv", out_dir=os.path.join(out_dir, "porous"),
        workers=workers,
    )
    porous_wall = time.perf_counter() - t0

    t0 = time.perf_counter()
    full_rep = convergence_in_n(
        FULL_CFG, full_n_list, oracle=None, out_dir=os.path.join(out_dir, "full"), workers=workers
    )
    full_wall = time.perf_counter() - t0

    t0 = time.perf_counter()
    growth_rep = torus_growth(
        GROWTH_CFG, growth_l_list, n0=50.0, out_dir=os.path.join(out_dir, "growth"),
        workers=workers,
    )
    growth_wall = time.perf_counter() - t0

    verdicts.append(_crit_heat(heat_rep, heat_wall))
    verdicts.append(_crit_porous(porous_rep, porous_wall))
    verdicts.append(_crit_cauchy(full_rep, full_wall))
    verdicts.append(_crit_linf(full_rep))
    verdicts.append(_crit_energy(full_rep))
    verdicts.append(_crit_holder(heat_rep, full_rep))
    verdicts.append(_crit_growth(growth_rep, growth_wall))

    all_results = (
        list(heat_rep._results.values())
        + list(porous_rep._results.values())
        + list(full_rep._results.values())
        + list(growth_rep._results.values())
    )
    verdicts.append(_crit_invariants(all_results))
    verdicts.append(_crit_mutation())

    report = StudyReport(
        kind="acceptance",
        grid=[{"study": s} for s in ("heat", "porous", "full", "growth")],
        cells=[{"study": "summary"}],
        verdicts=verdicts,
        env=environment_info(),
    )
    report.write(out_dir)
    return report
