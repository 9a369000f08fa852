"""Run configuration: the dotted-key config format, validation, and builders."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.special import erf

from .density import PiecewiseDensity, read_density_csv
from .errors import BadValue, ParseError, UnknownKey
from .particles import ParticleState, init_particles
from .physics import (
    DiffusionSpec,
    KernelSpec,
    MobilitySpec,
    gaussian_bump,
    make_diffusion,
    make_mobility,
    two_yukawa,
    zero_kernel,
)
from .scheme import SchemeConfig, suggest_dt_init, uniform_records
from .torus import TorusDomain

KERNEL_KINDS = ("zero", "two_yukawa", "gaussian_bump")
MOBILITY_KINDS = ("constant", "linear_cutoff", "rational")
DIFFUSION_FAMILIES = ("log", "power")
INIT_KINDS = ("uniform", "sine", "hat", "gaussian_window", "file")
OUTPUT_FORMATS = ("csv",)


@dataclass(frozen=True)
class RunConfig:
    """One run's full parameter set; field names mirror the dotted config keys."""

    domain_l: float = 1.0
    particles_n: int = 200
    time_t: float = 0.05
    time_dt_init: float = 0.0  # 0 means: derive from the diffusive heuristic
    time_dt_max: float = 1e-2
    time_record_count: int = 11
    kernel_kind: str = "zero"
    kernel_beta: float = 2.0
    mobility_kind: str = "constant"
    mobility_sbar: float = 1.0
    diffusion_family: str = "log"
    diffusion_m: float = 2.0
    init_kind: str = "uniform"
    init_mass: float = 1.0
    init_amplitude: float = 0.5
    init_phase: float = 0.0
    init_center: float = 0.0
    init_width: float = 0.25
    init_path: str = ""
    output_dir: str = "out"
    output_formats: str = "csv"

    def with_n(self, n: int) -> "RunConfig":
        return replace(self, particles_n=n)


def _key_to_field(key: str) -> str:
    # documented keys use mixed case (domain.L, time.T); field names are lower
    return key.replace(".", "_").lower()


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _check_enum(key, value, allowed, line):
    if value not in allowed:
        raise UnknownKey(f"{key} = {value!r} is not one of {', '.join(allowed)}", line=line)


def _validate(cfg: RunConfig, line_of: dict[str, int] | None = None) -> RunConfig:
    line_of = line_of or {}

    def ln(key):
        return line_of.get(key)

    def positive(key, value):
        if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
            raise BadValue(f"{key} must be positive, got {value}", line=ln(key))

    positive("domain.L", cfg.domain_l)
    if cfg.particles_n < 2:
        raise BadValue(f"particles.N must be >= 2, got {cfg.particles_n}", line=ln("particles.N"))
    positive("time.T", cfg.time_t)
    if cfg.time_dt_init < 0:
        raise BadValue("time.dt_init must be >= 0 (0 derives it)", line=ln("time.dt_init"))
    positive("time.dt_max", cfg.time_dt_max)
    if cfg.time_record_count < 2:
        raise BadValue("time.record_count must be >= 2", line=ln("time.record_count"))
    _check_enum("kernel.kind", cfg.kernel_kind, KERNEL_KINDS, ln("kernel.kind"))
    if cfg.kernel_kind == "two_yukawa" and not cfg.kernel_beta > 1.0:
        raise BadValue(f"kernel.beta must be > 1, got {cfg.kernel_beta}", line=ln("kernel.beta"))
    _check_enum("mobility.kind", cfg.mobility_kind, MOBILITY_KINDS, ln("mobility.kind"))
    if cfg.mobility_kind == "linear_cutoff":
        positive("mobility.sbar", cfg.mobility_sbar)
    _check_enum("diffusion.family", cfg.diffusion_family, DIFFUSION_FAMILIES, ln("diffusion.family"))
    if cfg.diffusion_family == "power" and not cfg.diffusion_m > 1.0:
        raise BadValue(
            f"diffusion.m must be > 1 for the power family (m = 1 is the log family), got {cfg.diffusion_m}",
            line=ln("diffusion.m"),
        )
    _check_enum("init.kind", cfg.init_kind, INIT_KINDS, ln("init.kind"))
    if cfg.init_kind != "file":
        if not (0.0 < cfg.init_mass <= 1.0):
            raise BadValue(f"init.mass must lie in (0, 1], got {cfg.init_mass}", line=ln("init.mass"))
    if cfg.init_kind == "sine" and not (0.0 <= cfg.init_amplitude <= 1.0):
        raise BadValue("init.amplitude must lie in [0, 1] for sine", line=ln("init.amplitude"))
    if cfg.init_kind in ("hat", "gaussian_window"):
        positive("init.width", cfg.init_width)
        if cfg.init_kind == "hat" and not cfg.init_width < cfg.domain_l / 2:
            raise BadValue("init.width must be below L/2 for hat", line=ln("init.width"))
    if cfg.init_kind == "file" and not cfg.init_path:
        raise BadValue("init.path required for init.kind = file", line=ln("init.kind"))
    _check_enum("output.formats", cfg.output_formats, OUTPUT_FORMATS, ln("output.formats"))
    return cfg


def parse_config(path) -> RunConfig:
    """Parse a `dotted.key = value` config file with line-precise errors.

    Unknown keys are errors (no silent typos); every key has a documented
    default, so the empty file is the default heat-case run.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    values: dict[str, object] = {}
    line_of: dict[str, int] = {}
    for i, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ParseError(f"expected `dotted.key = value`, got {raw.strip()!r}", line=i)
        key, _, rhs = text.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        fname = _key_to_field(key)
        if fname not in _FIELD_NAMES:
            raise UnknownKey(f"unknown key {key!r}", line=i)
        if key in line_of:
            raise ParseError(f"duplicate key {key!r} (first set on line {line_of[key]})", line=i)
        ftype = RunConfig.__dataclass_fields__[fname].type
        if ftype == "int":
            try:
                values[fname] = int(rhs)
            except ValueError:
                raise BadValue(f"{key} expects an integer, got {rhs!r}", line=i) from None
        elif ftype == "float":
            try:
                values[fname] = float(rhs)
            except ValueError:
                raise BadValue(f"{key} expects a number, got {rhs!r}", line=i) from None
        else:
            values[fname] = rhs
        line_of[key] = i
    cfg = RunConfig(**values)  # type: ignore[arg-type]
    return _validate(cfg, {k: v for k, v in line_of.items()})


def build_kernel(cfg: RunConfig) -> KernelSpec:
    if cfg.kernel_kind == "zero":
        return zero_kernel()
    if cfg.kernel_kind == "two_yukawa":
        return two_yukawa(cfg.kernel_beta)
    return gaussian_bump()


def build_mobility(cfg: RunConfig) -> MobilitySpec:
    return make_mobility(cfg.mobility_kind, sbar=cfg.mobility_sbar)


def line_profile(cfg: RunConfig):
    """The initial density as a vectorized callable on the line, plus kink hints.

    `uniform` and `sine` are genuinely periodic (amplitude relative to the
    mean c_L/L); `hat` and `gaussian_window` are localized bumps that also
    make sense for torus-growth studies.
    """
    c, L = cfg.init_mass, cfg.domain_l
    if cfg.init_kind == "uniform":
        return (lambda x: np.full_like(np.asarray(x, dtype=float), c / L)), None
    if cfg.init_kind == "sine":
        a, ph = cfg.init_amplitude, cfg.init_phase
        return (
            lambda x: (c / L) * (1.0 + a * np.sin(2.0 * np.pi * np.asarray(x, dtype=float) / L + ph))
        ), None
    if cfg.init_kind == "hat":
        w, xc = cfg.init_width, cfg.init_center
        h = c / w
        return (
            lambda x: h * np.maximum(0.0, 1.0 - np.abs(np.asarray(x, dtype=float) - xc) / w)
        ), (xc - w, xc, xc + w)
    if cfg.init_kind == "gaussian_window":
        sigma, xc = cfg.init_width, cfg.init_center
        win = 0.5 * (
            erf((L / 2 - xc) / (sigma * np.sqrt(2.0))) + erf((L / 2 + xc) / (sigma * np.sqrt(2.0)))
        )
        amp = c / (sigma * np.sqrt(2.0 * np.pi) * win)
        return (
            lambda x: amp * np.exp(-0.5 * ((np.asarray(x, dtype=float) - xc) / sigma) ** 2)
        ), None
    raise BadValue(f"init.kind {cfg.init_kind!r} has no closed-form profile")


def build_state(cfg: RunConfig) -> ParticleState:
    domain = TorusDomain(cfg.domain_l)
    if cfg.init_kind == "file":
        dens = read_density_csv(cfg.init_path)
        return init_particles(dens, cfg.particles_n, dens.domain)
    profile, hints = line_profile(cfg)
    return init_particles(profile, cfg.particles_n, domain, breakpoint_hints=hints)


def build_diffusion(cfg: RunConfig, state: ParticleState) -> DiffusionSpec:
    from .particles import densities

    s_max = 4.0 * float(np.max(densities(state)))
    return make_diffusion(
        cfg.diffusion_family, build_mobility(cfg), m=cfg.diffusion_m, s_max=max(s_max, 1.0)
    )


def build_scheme_config(cfg: RunConfig, state: ParticleState, diffusion: DiffusionSpec) -> SchemeConfig:
    dt0 = cfg.time_dt_init
    if dt0 == 0.0:
        dt0 = min(cfg.time_dt_max, 0.25 * suggest_dt_init(state, diffusion))
    return SchemeConfig(
        t_end=cfg.time_t,
        dt_init=dt0,
        dt_max=cfg.time_dt_max,
        record_times=uniform_records(cfg.time_t, cfg.time_record_count),
    )


def heat_fourier_coeffs(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    """Exact Fourier coefficients of the sine/uniform profiles (heat oracle input)."""
    c, L = cfg.init_mass, cfg.domain_l
    if cfg.init_kind == "uniform":
        return np.array([c / L]), np.array([0.0])
    if cfg.init_kind == "sine":
        a, ph = cfg.init_amplitude, cfg.init_phase
        return (
            np.array([c / L, (c / L) * a * np.sin(ph)]),
            np.array([0.0, (c / L) * a * np.cos(ph)]),
        )
    raise BadValue(f"profile {cfg.init_kind!r} is not band-limited; no exact heat oracle")


def config_echo(cfg: RunConfig) -> dict:
    return {f.name.replace("_", ".", 1): getattr(cfg, f.name) for f in fields(cfg)}
