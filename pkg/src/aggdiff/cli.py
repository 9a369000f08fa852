"""Command-line entry point: run, converge, grow, accept, validate-physics."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import (
    RunConfig,
    build_diffusion,
    build_kernel,
    build_mobility,
    build_state,
    parse_config,
)
from .errors import AggDiffError, ConfigError
from .harness import (
    StudyReport,
    acceptance_suite,
    convergence_in_n,
    run_one,
    torus_growth,
    write_run_evidence,
)
from .physics import mobility_product_bound_check, validate_kernel

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aggdiff", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, needs_config in (
        ("run", True),
        ("converge", False),
        ("grow", False),
        ("accept", False),
        ("validate-physics", False),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=needs_config, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--quiet", action="store_true")
    return p


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(path)


def _say(quiet: bool, *args) -> None:
    if not quiet:
        print(*args)


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    out = args.out or cfg.output_dir
    res = run_one(cfg)
    write_run_evidence(res, out)
    if res.failure is not None:
        print(f"run failed: {res.failure}", file=sys.stderr)
        return EXIT_NUMERICAL
    _say(args.quiet, f"run complete: {len(res.snapshots)} snapshots in {out}")
    return EXIT_OK


def _auto_oracle(cfg: RunConfig) -> str | None:
    if cfg.kernel_kind != "zero" or cfg.init_kind not in ("uniform", "sine"):
        return None
    if cfg.mobility_kind == "constant" and cfg.diffusion_family == "log":
        return "heat"
    return "fv"


def _report_exit(rep: StudyReport, quiet: bool) -> int:
    if not quiet:
        print(rep.table_text())
    return EXIT_ACCEPTANCE if rep.failed else EXIT_OK


def _cmd_converge(args) -> int:
    cfg = _load_config(args.config)
    out = args.out or os.path.join(cfg.output_dir, "converge")
    n_list = [cfg.particles_n, 2 * cfg.particles_n, 4 * cfg.particles_n]
    rep = convergence_in_n(cfg, n_list, oracle=_auto_oracle(cfg), out_dir=out, workers=args.threads)
    failures = [c for c in rep.cells if c.get("failure")]
    _say(args.quiet, f"convergence study over N={n_list} written to {out}")
    if failures:
        print(f"{len(failures)} run(s) failed; see {out}/report.json", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_grow(args) -> int:
    cfg = _load_config(args.config)
    out = args.out or os.path.join(cfg.output_dir, "grow")
    l_list = [cfg.domain_l, 2 * cfg.domain_l, 4 * cfg.domain_l]
    rep = torus_growth(cfg, l_list, n0=50.0, out_dir=out, workers=args.threads)
    failures = [c for c in rep.cells if c.get("failure")]
    _say(args.quiet, f"torus-growth study over L={l_list} written to {out}")
    if failures:
        print(f"{len(failures)} run(s) failed; see {out}/report.json", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_accept(args) -> int:
    cfg = _load_config(args.config)
    out = args.out or os.path.join(cfg.output_dir, "acceptance")
    rep = acceptance_suite(out, workers=args.threads)
    return _report_exit(rep, args.quiet)


def _cmd_validate_physics(args) -> int:
    cfg = _load_config(args.config)
    kernel = build_kernel(cfg)
    mobility = build_mobility(cfg)
    state = build_state(cfg)
    diffusion = build_diffusion(cfg, state)
    krep = validate_kernel(kernel)
    lines = krep.lines()
    s = np.linspace(0.0, diffusion.s_max, 512)
    vv = mobility.eval_v(s)
    mono = bool(np.all(np.diff(vv) <= 1e-12))
    lines.append(f"[{'PASS' if mono else 'FAIL'}] {mobility.label}: nonincreasing on samples")
    vinf_ok = abs(float(mobility.eval_v(np.asarray([0.0]))[0]) - mobility.norm_v_inf) <= 1e-12
    lines.append(f"[{'PASS' if vinf_ok else 'FAIL'}] {mobility.label}: ||v||_inf = v(0)")
    pv = np.asarray(diffusion.eval_phi_v(s))
    pv_ok = pv[0] == 0.0 and bool(np.all(np.diff(pv) >= -1e-12))
    lines.append(
        f"[{'PASS' if pv_ok else 'FAIL'}] {diffusion.label}: phi_v(0)=0 and nondecreasing"
    )
    brep = mobility_product_bound_check(mobility, diffusion, s_max=diffusion.s_max)
    lines.extend(brep.lines())
    for line in lines:
        print(line)
    ok = krep.passed and mono and vinf_ok and pv_ok and brep.pointwise_bound_holds
    return EXIT_OK if ok else EXIT_USAGE


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "converge":
            return _cmd_converge(args)
        if args.command == "grow":
            return _cmd_grow(args)
        if args.command == "accept":
            return _cmd_accept(args)
        return _cmd_validate_physics(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AggDiffError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def console_main() -> None:  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    console_main()
