"""Particle ODE right-hand side and the order-preserving adaptive RK4 integrator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadParameter, InvalidState, StepTooSmall
from .particles import ParticleState
from .physics import DiffusionSpec, KernelSpec, MobilitySpec

try:  # compiled hot path; every public operation also has a numpy route
    from . import _fast
except ImportError:  # pragma: no cover
    _fast = None

_FAULTS = {None: 0, "flip_g": 1, "no_min_image": 2}
_KERN_CODES = {"zero": 0, "two_yukawa": 1, "gaussian_bump": 2}
_MOB_CODES = {"constant": 0, "linear_cutoff": 1, "rational": 2}


@dataclass(frozen=True)
class SchemeConfig:
    """Integrator controls: step bounds, guard threshold, recording times."""

    t_end: float
    dt_init: float
    dt_max: float
    record_times: np.ndarray
    safety: float = 0.4
    gap_min_fraction: float = 1e-8

    def __post_init__(self):
        rt = np.asarray(self.record_times, dtype=float)
        if self.t_end <= 0.0:
            raise BadParameter("t_end must be positive")
        if not (0.0 < self.dt_init <= self.dt_max):
            raise BadParameter("need 0 < dt_init <= dt_max")
        if not (0.0 < self.safety <= 1.0):
            raise BadParameter("safety must lie in (0, 1]")
        if rt.size and (np.any(np.diff(rt) <= 0.0) or rt[0] < 0.0 or rt[-1] > self.t_end):
            raise BadParameter("record_times must be strictly increasing within [0, t_end]")
        object.__setattr__(self, "record_times", rt)


def uniform_records(t_end: float, count: int) -> np.ndarray:
    return np.linspace(0.0, t_end, count)


@dataclass
class Trajectory:
    """Recorded states plus the full accept/reject step log."""

    snapshots: list[ParticleState]
    step_log: np.ndarray  # columns: time, dt, rejected flag
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = [s.t for s in self.snapshots]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidState("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def n_accepted(self) -> int:
        return int(np.sum(self.step_log[:, 2] == 0.0)) if self.step_log.size else 0

    @property
    def n_rejected(self) -> int:
        return int(np.sum(self.step_log[:, 2] == 1.0)) if self.step_log.size else 0


def _velocities_np(x, L, cL, kernel, mobility, diffusion, fault=None):
    """Numpy evaluation of the ODE right-hand side on a raw position chain.

    Returns (velocities, ok); ok is False when a gap is nonpositive (the
    caller treats that as a rejected stage).
    """
    n = x.size
    gaps = np.empty(n)
    gaps[:-1] = np.diff(x)
    gaps[-1] = x[0] + L - x[-1]
    if np.any(gaps <= 0.0):
        return None, False
    rho = cL / (n * gaps)
    if kernel.is_zero:
        sums = np.zeros(n)
    else:
        if fault == "no_min_image":
            base = -0.5 * L
            xw = (x - base) % L + base
            d = xw[:, None] - xw[None, :]
        else:
            d = x[:, None] - x[None, :]
            half = 0.5 * L
            d = np.where(d > half, d - L, d)
            d = np.where(d <= -half, d + L, d)
        contrib = kernel.eval_kprime(d)
        np.fill_diagonal(contrib, 0.0)  # j != k; K'(0) := 0 convention anyway
        # ascending-j accumulation per k: cumulative sum fixes the fp order
        sums = np.cumsum(contrib, axis=1)[:, -1]
    phi = diffusion.eval_phi_v(rho)
    g = phi - np.roll(phi, 1)
    if fault == "flip_g":
        g = -g
    vk = np.minimum(mobility.eval_v(rho), mobility.eval_v(np.roll(rho, 1)))
    vel = -(cL / n) * vk * sums - (n / cL) * g
    return vel, True


def rhs(
    state: ParticleState,
    kernel: KernelSpec,
    mobility: MobilitySpec,
    diffusion: DiffusionSpec,
    fault: str | None = None,
) -> np.ndarray:
    """Velocities x_dot_k of the particle ODE system.

    x_dot_k = -(c_L/N) v_k sum_{j != k} K'(x_k - x_j) - (N/c_L) G_k with
    G_k = phi_v(rho_k) - phi_v(rho_{k-1}) (cyclic) and v_k the mobility at the
    larger neighbouring density. Pairwise differences go through the minimal
    image; ``fault`` injects the suite's sanity mutations.
    """
    vel, ok = _velocities_np(
        state.positions, state.domain.length, state.mass, kernel, mobility, diffusion, fault
    )
    if not ok:
        raise InvalidState("state has a nonpositive gap")
    return vel


def step(
    state: ParticleState,
    kernel: KernelSpec,
    mobility: MobilitySpec,
    diffusion: DiffusionSpec,
    dt: float,
    gap_min_fraction: float = 1e-8,
    fault: str | None = None,
) -> ParticleState | None:
    """One classical RK4 step; returns None when the gap guard rejects it.

    Rejection (candidate gap <= gap_min_fraction * L, or a stage falling out
    of order) signals the caller to halve dt.
    """
    if dt <= 0.0:
        raise BadParameter("dt must be positive")
    L, cL = state.domain.length, state.mass
    x = state.positions
    args = (L, cL, kernel, mobility, diffusion, fault)
    k1, ok = _velocities_np(x, *args)
    if not ok:
        return None
    k2, ok = _velocities_np(x + 0.5 * dt * k1, *args)
    if not ok:
        return None
    k3, ok = _velocities_np(x + 0.5 * dt * k2, *args)
    if not ok:
        return None
    k4, ok = _velocities_np(x + dt * k3, *args)
    if not ok:
        return None
    xc = x + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    gap_min = gap_min_fraction * L
    if np.any(np.diff(xc) <= gap_min) or xc[0] + L - xc[-1] <= gap_min:
        return None
    return state.with_positions(xc, state.t + dt)


def suggest_dt_init(state: ParticleState, diffusion: DiffusionSpec, safety: float = 0.4) -> float:
    """Diffusive heuristic safety * min_gap^2 / max phi_v'(rho) at the state."""
    gaps = state.gaps()
    from .particles import densities

    pp = float(np.max(diffusion.eval_phi_v_prime(densities(state))))
    if pp <= 0.0:
        return float(np.min(gaps))
    return safety * float(np.min(gaps)) ** 2 / pp


def _fast_codes(kernel, mobility, diffusion):
    if _fast is None:
        return None
    if kernel.fast_kind not in _KERN_CODES or mobility.kind not in _MOB_CODES:
        return None
    if not diffusion.closed_form:
        return None
    fam = 0 if diffusion.family == "log" else 1
    if fam == 1 and mobility.kind == "rational" and diffusion.m != 2.0:
        return None
    return (
        _KERN_CODES[kernel.fast_kind],
        float(kernel.fast_param),
        _MOB_CODES[mobility.kind],
        float(mobility.sbar),
        fam,
        float(diffusion.m),
    )


def _advance_python(x, t, t_target, dt, dt_max, safety, gap_min, dt_floor, streak,
                    L, cL, kernel, mobility, diffusion, fault, log_rows):
    """Numpy twin of the compiled window loop (same adaptation policy)."""
    n = x.size
    args = (L, cL, kernel, mobility, diffusion, fault)
    while t < t_target:
        landing = t_target - t <= dt
        dt_step = t_target - t if landing else dt
        ok = True
        xc = None
        k1, ok = _velocities_np(x, *args)
        if ok:
            k2, ok = _velocities_np(x + 0.5 * dt_step * k1, *args)
        if ok:
            k3, ok = _velocities_np(x + 0.5 * dt_step * k2, *args)
        if ok:
            k4, ok = _velocities_np(x + dt_step * k3, *args)
        if ok:
            xc = x + (dt_step / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            if np.any(np.diff(xc) <= gap_min) or xc[0] + L - xc[-1] <= gap_min:
                ok = False
        log_rows.append((t, dt_step, 0.0 if ok else 1.0))
        if not ok:
            dt *= 0.5
            streak = 0
            if dt < dt_floor:
                return x, t, dt, streak, 1
            continue
        x = xc
        t = t_target if landing else t + dt_step
        streak += 1
        if streak >= 20:
            streak = 0
            gaps = np.empty(n)
            gaps[:-1] = np.diff(x)
            gaps[-1] = x[0] + L - x[-1]
            rho = cL / (n * gaps)
            max_pp = float(np.max(diffusion.eval_phi_v_prime(rho)))
            dt_new = min(2.0 * dt, dt_max)
            if max_pp > 0.0:
                dt_new = min(dt_new, safety * float(np.min(gaps)) ** 2 / max_pp)
            dt = dt_new
            if dt < dt_floor:
                return x, t, dt, streak, 1
    return x, t, dt, streak, 0


def integrate(
    state0: ParticleState,
    kernel: KernelSpec,
    mobility: MobilitySpec,
    diffusion: DiffusionSpec,
    config: SchemeConfig,
    provenance: dict | None = None,
    fault: str | None = None,
) -> Trajectory:
    """Run the particle ODE to t_end, landing exactly on each record time.

    Explicit RK4 with accept/reject on the geometric gap guard; dt doubles
    after 20 consecutive acceptances up to min(dt_max, safety * min_gap^2 /
    max phi_v'(rho)). Every snapshot is an actual ODE state (the last step
    before a record time is shortened to land on it). Raises StepTooSmall
    (with the failure time) when repeated halving drops dt below
    1e-14 * t_end: the scheme's well-definedness has been lost.
    """
    if fault not in _FAULTS:
        raise BadParameter(f"unknown fault {fault!r}")
    x = state0.positions.copy()
    t = float(state0.t)
    L, cL = state0.domain.length, state0.mass
    dt = float(config.dt_init)
    dt_floor = 1e-14 * config.t_end
    gap_min = config.gap_min_fraction * L
    streak = 0
    codes = _fast_codes(kernel, mobility, diffusion)

    targets = [rt for rt in config.record_times if rt >= t]
    if not targets or targets[-1] < config.t_end:
        targets = targets + [config.t_end]
    record_set = set(float(rt) for rt in config.record_times)

    snapshots: list[ParticleState] = []
    log_np: list[np.ndarray] = []
    log_rows: list[tuple] = []

    def snap(time):
        snapshots.append(ParticleState(state0.domain, cL, x.copy(), t=time))

    if t in record_set:
        snap(t)
    for t_target in targets:
        if t_target <= t:
            continue
        if codes is not None:
            kern, kp, mob, mp, fam, fm = codes
            buf = np.empty((4096, 3))
            log_n = 0
            while True:
                t, dt, streak, log_n, status = _fast._advance(
                    x, t, float(t_target), dt, config.dt_max, config.safety,
                    gap_min, dt_floor, streak, L, cL,
                    kern, kp, mob, mp, fam, fm, _FAULTS[fault], buf, log_n,
                )
                if status == 2:
                    grown = np.empty((buf.shape[0] * 2, 3))
                    grown[: buf.shape[0]] = buf
                    buf = grown
                    continue
                break
            log_np.append(buf[:log_n].copy())
            if status == 1:
                raise StepTooSmall(
                    f"dt fell below {dt_floor:.3e} at t = {t:.6g}: particle collision", t_fail=t
                )
        else:
            x, t, dt, streak, status = _advance_python(
                x, t, float(t_target), dt, config.dt_max, config.safety,
                gap_min, dt_floor, streak, L, cL, kernel, mobility, diffusion, fault, log_rows,
            )
            if status == 1:
                raise StepTooSmall(
                    f"dt fell below {dt_floor:.3e} at t = {t:.6g}: particle collision", t_fail=t
                )
        if float(t_target) in record_set:
            snap(float(t_target))

    if log_rows:
        log_np.append(np.asarray(log_rows, dtype=float).reshape(-1, 3))
    step_log = np.concatenate(log_np) if log_np else np.empty((0, 3))
    return Trajectory(snapshots=snapshots, step_log=step_log, provenance=provenance or {})
