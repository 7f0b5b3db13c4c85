"""Episode simulation: closed-loop integration with periodic guidance.

An episode starts in still-air level trim at the loiter speed, flies
``num_updates`` guidance intervals of ``dt_s`` seconds each (50 RK4 steps
per interval by default), and reports the time-averaged power drawn.
Heading sweeps repeat the episode over initial headings covering the full
circle so the wind direction drops out of strategy comparisons.

Episodes are deterministic (no randomness anywhere) and independent, so
sweeps can fan out to worker processes; results are reduced in heading
order regardless of completion order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from windward import _kernel
from windward.dynamics import (
    V_BAR_GUARD,
    Controls,
    NormContext,
    PhysicalUavParams,
    State,
    state_derivative,
    wind_relative_rates,
)
from windward.guidance import (
    GuidanceLimits,
    InsituWind,
    StrategyKind,
    adjust,
    optimal_loiter_speed,
)
from windward.tracking import Commands, TrackingGains, bank_and_lift_law, saturate, thrust_law
from windward.windfield import WindFieldSpec

__all__ = [
    "EpisodeConfig",
    "EpisodeResult",
    "SweepResult",
    "SweepError",
    "integrate_step",
    "run_episode",
    "heading_sweep",
    "benefit",
]

# Trajectory columns produced by run_episode(record="steps") and by the
# kernel recording buffer.
TRAJECTORY_COLUMNS = (
    "t_bar",
    "v_bar",
    "psi_rad",
    "gamma_rad",
    "x_bar",
    "y_bar",
    "h_bar",
    "p_bar",
    "c_l",
    "mu_rad",
)

# Per-update adjustment log columns.
ADJUSTMENT_COLUMNS = ("t_bar", "v0_bar", "psi0_rad", "dv", "dpsi_rad", "singular")


class SweepError(RuntimeError):
    """One or more episodes of a heading sweep ended invalid."""


@dataclass
class EpisodeConfig:
    """Everything needed to fly one episode."""

    params: PhysicalUavParams
    ctx: NormContext
    wind: WindFieldSpec
    gains: TrackingGains
    limits: GuidanceLimits
    strategy: StrategyKind
    psi0_rad: float = 0.0
    dt_s: float = 10.0
    steps_per_update: int = 50
    num_updates: int = 50
    v0_bar: Optional[float] = None  # defaults to the still-air loiter speed
    h0_bar: float = 0.0
    record: str = "none"  # "none" | "steps"
    backend: str = "auto"

    def __post_init__(self):
        if self.steps_per_update < 1:
            raise ValueError("steps_per_update must be >= 1")
        if self.num_updates < 1:
            raise ValueError("num_updates must be >= 1")
        if self.record not in ("none", "steps"):
            raise ValueError("record must be 'none' or 'steps'")


@dataclass
class EpisodeResult:
    """Episode outcome: average power plus diagnostics."""

    avg_power: float
    valid: bool
    strategy: StrategyKind
    psi0_rad: float
    final_state: State
    adjustments: np.ndarray  # one row per update, ADJUSTMENT_COLUMNS
    n_singular: int
    guard_tripped: bool
    saturation_counts: dict
    min_c_l: float
    max_c_l: float
    max_abs_mu_rad: float
    trajectory: Optional[np.ndarray] = None  # TRAJECTORY_COLUMNS when recorded
    aborted_at_update: Optional[int] = None


@dataclass
class SweepResult:
    """Heading sweep outcome."""

    avg_power: float  # mean of per-heading episode averages
    psi0_rad: np.ndarray
    per_heading_power: np.ndarray
    episodes: list = field(default_factory=list)


def integrate_step(
    state: State,
    commands: Commands,
    wind_field,
    ctx: NormContext,
    gains: TrackingGains,
    params: PhysicalUavParams,
    step: float,
    t_bar: float = 0.0,
) -> tuple[State, Controls, float]:
    """One classical RK4 step of the closed-loop dynamics.

    This is the slow, composable path built from the module-level pieces
    (wind sample -> wind rates -> tracking laws -> saturation -> state
    derivative), used for tests and custom fields; episode runs go through
    the interval kernels, which must stay numerically equivalent to
    repeated calls of this function.

    Returns the advanced state, the (saturated) controls at the step start
    and the power integrand there.
    """
    if step <= 0.0:
        raise ValueError("step must be > 0")

    def eval_closed_loop(s: State):
        wind = wind_field.sample((s.x_bar, s.y_bar, s.h_bar), t_bar)
        rates = wind_relative_rates(s, wind)
        mu, c_l = bank_and_lift_law(s, rates, commands, gains, ctx)
        # Lift and bank saturate first: the thrust law must cancel the drag
        # of the lift coefficient actually flown.  The placeholder power is
        # discarded below.
        sat, _ = saturate(Controls(p_bar=ctx.p_min_bar, c_l=c_l, mu_rad=mu), params, ctx)
        thrust = thrust_law(s, rates, commands, gains, ctx, c_l=sat.c_l)
        p_bar = min(max(thrust * s.v_bar, ctx.p_min_bar), ctx.p_max_bar)
        controls = Controls(p_bar=p_bar, c_l=sat.c_l, mu_rad=sat.mu_rad)
        return state_derivative(s, controls, wind, ctx), controls

    def offset(s: State, d, factor: float) -> State:
        return State(
            v_bar=s.v_bar + factor * d.v_bar,
            psi_rad=s.psi_rad + factor * d.psi_rad,
            gamma_rad=s.gamma_rad + factor * d.gamma_rad,
            x_bar=s.x_bar + factor * d.x_bar,
            y_bar=s.y_bar + factor * d.y_bar,
            h_bar=s.h_bar + factor * d.h_bar,
        )

    k1, controls0 = eval_closed_loop(state)
    k2, _ = eval_closed_loop(offset(state, k1, 0.5 * step))
    k3, _ = eval_closed_loop(offset(state, k2, 0.5 * step))
    k4, _ = eval_closed_loop(offset(state, k3, step))

    sixth = step / 6.0
    psi = state.psi_rad + sixth * (
        k1.psi_rad + 2.0 * (k2.psi_rad + k3.psi_rad) + k4.psi_rad
    )
    psi = math.fmod(psi, 2.0 * math.pi)
    if psi < 0.0:
        psi += 2.0 * math.pi
    new_state = State(
        v_bar=state.v_bar
        + sixth * (k1.v_bar + 2.0 * (k2.v_bar + k3.v_bar) + k4.v_bar),
        psi_rad=psi,
        gamma_rad=state.gamma_rad
        + sixth * (k1.gamma_rad + 2.0 * (k2.gamma_rad + k3.gamma_rad) + k4.gamma_rad),
        x_bar=state.x_bar + sixth * (k1.x_bar + 2.0 * (k2.x_bar + k3.x_bar) + k4.x_bar),
        y_bar=state.y_bar + sixth * (k1.y_bar + 2.0 * (k2.y_bar + k3.y_bar) + k4.y_bar),
        h_bar=state.h_bar + sixth * (k1.h_bar + 2.0 * (k2.h_bar + k3.h_bar) + k4.h_bar),
    )
    return new_state, controls0, controls0.p_bar


def run_episode(cfg: EpisodeConfig) -> EpisodeResult:
    """Fly one episode: guidance update at each interval start (including
    t = 0), then a kernel interval of RK4 steps with frozen commands.

    The commanded airspeed starts at the still-air loiter speed and the
    commanded heading at the initial heading; increments accumulate on the
    commands (the airspeed command is kept inside the speed box).  Average
    power is the trapezoidal integral of thrust*airspeed over the episode
    divided by its duration.
    """
    ctx = cfg.ctx
    v_star = optimal_loiter_speed(ctx)
    v0 = cfg.v0_bar if cfg.v0_bar is not None else v_star
    kernel = _kernel.resolve(cfg.backend)

    dt_bar = ctx.time_bar(cfg.dt_s)
    h_step = dt_bar / cfg.steps_per_update
    sin_psi_w = math.sin(cfg.wind.psi_w_rad)
    cos_psi_w = math.cos(cfg.wind.psi_w_rad)
    wm0_bar = cfg.wind.w_m0_mps / cfg.wind.v_n_mps

    v, psi, gamma = v0, cfg.psi0_rad, 0.0
    x, y, h = 0.0, 0.0, cfg.h0_bar
    v_c, psi_c, gamma_c = v0, cfg.psi0_rad, 0.0

    n_points = cfg.num_updates * cfg.steps_per_update + 1
    trajectory = None
    if cfg.record == "steps":
        trajectory = np.empty((n_points, len(TRAJECTORY_COLUMNS)))

    adjustments = np.zeros((cfg.num_updates, len(ADJUSTMENT_COLUMNS)))
    integral = 0.0
    n_singular = 0
    counts = {"c_l_low": 0, "c_l_high": 0, "mu": 0, "p_low": 0, "p_high": 0}
    min_cl = math.inf
    max_cl = -math.inf
    max_mu = 0.0
    guard_tripped = False
    aborted_at = None

    for k in range(cfg.num_updates):
        t_bar = k * dt_bar
        insitu = InsituWind.from_sample(cfg.wind.sample((x, y, h), t_bar))
        step = adjust(cfg.strategy, v, psi, insitu, cfg.limits, ctx)
        adjustments[k] = (t_bar, v, psi, step.dv, step.dpsi_rad, float(step.singular))
        if step.singular:
            n_singular += 1
        v_c = min(max(v_c + step.dv, ctx.v_min_bar), ctx.v_max_bar)
        psi_c = math.fmod(psi_c + step.dpsi_rad, 2.0 * math.pi)
        if psi_c < 0.0:
            psi_c += 2.0 * math.pi

        rec = None
        if trajectory is not None:
            rec = trajectory[
                k * cfg.steps_per_update : (k + 1) * cfg.steps_per_update + 1
            ]
        (v, psi, gamma, x, y, h), part, stats = kernel(
            v, psi, gamma, x, y, h,
            v_c, psi_c, gamma_c,
            cfg.steps_per_update, h_step, t_bar,
            wm0_bar, cfg.wind.a_x, cfg.wind.a_y,
            cfg.wind.omega_mx, cfg.wind.omega_my, sin_psi_w, cos_psi_w,
            ctx.rho_bar, ctx.c_d0, ctx.k_induced,
            cfg.gains.k_v_per_s * ctx.t_n_s,
            cfg.gains.k_psi_per_s * ctx.t_n_s,
            cfg.gains.k_gamma_per_s * ctx.t_n_s,
            cfg.params.c_l_min, cfg.params.c_l_max, cfg.params.mu_max_rad,
            ctx.p_min_bar, ctx.p_max_bar,
            V_BAR_GUARD,
            record=rec,
        )
        integral += part
        counts["c_l_low"] += stats[0]
        counts["c_l_high"] += stats[1]
        counts["mu"] += stats[2]
        counts["p_low"] += stats[3]
        counts["p_high"] += stats[4]
        min_cl = min(min_cl, stats[5])
        max_cl = max(max_cl, stats[6])
        max_mu = max(max_mu, stats[7])
        if stats[8] >= 0:
            guard_tripped = True
            aborted_at = k
            break

    valid = not guard_tripped
    t_f_bar = cfg.num_updates * dt_bar
    avg_power = integral / t_f_bar if valid else math.nan
    if trajectory is not None and aborted_at is not None:
        trajectory = trajectory[: aborted_at * cfg.steps_per_update + 1]

    return EpisodeResult(
        avg_power=avg_power,
        valid=valid,
        strategy=cfg.strategy,
        psi0_rad=cfg.psi0_rad,
        final_state=State(v, psi, gamma, x, y, h),
        adjustments=adjustments[: k + 1],
        n_singular=n_singular,
        guard_tripped=guard_tripped,
        saturation_counts=counts,
        min_c_l=min_cl,
        max_c_l=max_cl,
        max_abs_mu_rad=max_mu,
        trajectory=trajectory,
        aborted_at_update=aborted_at,
    )


def _sweep_headings(dpsi0_deg: float) -> np.ndarray:
    n = round(360.0 / dpsi0_deg)
    if n < 1 or abs(n * dpsi0_deg - 360.0) > 1e-9:
        raise ValueError(f"dpsi0_deg={dpsi0_deg} must divide 360")
    return np.radians(np.arange(n) * dpsi0_deg)


def heading_sweep(
    cfg: EpisodeConfig, dpsi0_deg: float = 5.0, pool=None
) -> SweepResult:
    """Run the episode once per initial heading over [0, 360).

    All episodes share the template config except psi0.  Any invalid
    episode fails the whole sweep (SweepError lists the headings); the
    sweep mean is taken in heading order so worker scheduling cannot
    change the result.
    """
    headings = _sweep_headings(dpsi0_deg)
    configs = [replace(cfg, psi0_rad=float(p)) for p in headings]
    if pool is None:
        episodes = [run_episode(c) for c in configs]
    else:
        episodes = pool.map(run_episode, configs)

    bad = [ep for ep in episodes if not ep.valid]
    if bad:
        degs = ", ".join(f"{math.degrees(ep.psi0_rad):.1f}" for ep in bad)
        raise SweepError(
            f"{len(bad)} of {len(episodes)} episodes invalid "
            f"(airspeed guard) at initial headings [{degs}] deg"
        )

    powers = np.array([ep.avg_power for ep in episodes])
    return SweepResult(
        avg_power=float(powers.mean()),
        psi0_rad=headings,
        per_heading_power=powers,
        episodes=episodes,
    )


def benefit(p0_avg: float, pi_avg: float) -> float:
    """Relative power saving of a strategy against the reference."""
    if p0_avg <= 0.0:
        raise ValueError(f"reference average power must be > 0, got {p0_avg}")
    return (p0_avg - pi_avg) / p0_avg
