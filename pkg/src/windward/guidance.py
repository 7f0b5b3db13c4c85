"""Periodic first-order command adjustments that reduce projected power.

Every update interval the guidance reads the wind at the vehicle (two
horizontal components, the four planar gradients and time partials),
projects where the vehicle will be one interval ahead under a trapezoidal
position model, forms the steady-level power requirement expected there,
and steps the airspeed and/or heading command by the maximum allowed
increment against the sign of that power's gradient.  Gradients below the
deadband ``epsilon`` leave the command untouched, so the scheme
degenerates to the constant-command reference strategy in uniform wind.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "InsituWind",
    "GuidanceLimits",
    "StrategyKind",
    "Adjustment",
    "SingularProjectionError",
    "optimal_loiter_speed",
    "projected_position_change",
    "projected_wind_rate",
    "projected_power",
    "airspeed_gradient",
    "heading_gradient",
    "adjust",
    "guidance_limit_bounds",
]

# 2x2 projection systems with determinant below this are treated as
# singular; the caller falls back to a zero adjustment.
Q_2D_SINGULAR = 1e-9


class SingularProjectionError(ArithmeticError):
    """Position-projection system is (near-)singular for this wind/interval."""


class StrategyKind(enum.Enum):
    REFERENCE = "reference"
    AIRSPEED_ONLY = "airspeed"
    HEADING_ONLY = "heading"
    COMBINED = "combined"

    @property
    def adjusts_airspeed(self) -> bool:
        return self in (StrategyKind.AIRSPEED_ONLY, StrategyKind.COMBINED)

    @property
    def adjusts_heading(self) -> bool:
        return self in (StrategyKind.HEADING_ONLY, StrategyKind.COMBINED)

    @property
    def strategy_id(self) -> int:
        """Conventional 0..3 numbering (0 = reference)."""
        return {
            StrategyKind.REFERENCE: 0,
            StrategyKind.AIRSPEED_ONLY: 1,
            StrategyKind.HEADING_ONLY: 2,
            StrategyKind.COMBINED: 3,
        }[self]


@dataclass(frozen=True)
class InsituWind:
    """Wind measured at the vehicle, normalized: components, the planar
    gradient entries g_ij = d(w_i)/d(j), and time partials."""

    w_x0: float = 0.0
    w_y0: float = 0.0
    g_xx: float = 0.0
    g_xy: float = 0.0
    g_yx: float = 0.0
    g_yy: float = 0.0
    tp_x: float = 0.0
    tp_y: float = 0.0

    @classmethod
    def from_sample(cls, wind_sample) -> "InsituWind":
        """Take the horizontal-plane subset of a full wind sample."""
        g = wind_sample.grad
        tp = wind_sample.dt_partials
        return cls(
            w_x0=wind_sample.w_x,
            w_y0=wind_sample.w_y,
            g_xx=g[0][0],
            g_xy=g[0][1],
            g_yx=g[1][0],
            g_yy=g[1][1],
            tp_x=tp[0],
            tp_y=tp[1],
        )


@dataclass(frozen=True)
class GuidanceLimits:
    """Per-update command increments, airspeed box and tuning constants."""

    dv_max: float  # max |airspeed command change| per update, normalized
    dpsi_max_rad: float  # max |heading command change| per update
    v_bar_min: float
    v_bar_max: float
    dt_bar: float  # normalized update interval
    epsilon: float = 1e-4  # gradient deadband
    eta: float = 1.0  # stepsize fraction of the allowed increment
    psi_min_rad: float = -math.inf  # optional absolute heading box,
    psi_max_rad: float = math.inf  # disabled by default

    def __post_init__(self):
        errors = []
        if self.dv_max <= 0.0:
            errors.append("dv_max must be > 0")
        if self.dpsi_max_rad <= 0.0:
            errors.append("dpsi_max_rad must be > 0")
        if self.epsilon <= 0.0:
            errors.append("epsilon must be > 0")
        if not 0.0 < self.eta <= 1.0:
            errors.append("eta must lie in (0, 1]")
        if self.dt_bar <= 0.0:
            errors.append("dt_bar must be > 0")
        if errors:
            raise ValueError("; ".join(errors))


@dataclass(frozen=True)
class Adjustment:
    """One guidance update: command increments plus a diagnostic flag."""

    dv: float = 0.0
    dpsi_rad: float = 0.0
    singular: bool = False


def optimal_loiter_speed(ctx) -> float:
    """Airspeed minimizing steady wings-level power in still air,
    (K / (3 rho_bar^2 c_d0))^(1/4)."""
    return (ctx.k_induced / (3.0 * ctx.rho_bar**2 * ctx.c_d0)) ** 0.25


def projected_position_change(
    v0: float,
    psi0: float,
    dv: float,
    dpsi: float,
    wind: InsituWind,
    dt_bar: float,
) -> tuple[float, float, float]:
    """Displacement over the next interval under the frozen-gradient model.

    Trapezoidal integration of the ground velocity, with the commanded
    airspeed/heading assumed reached by the interval end and the endpoint
    wind expressed through the frozen gradients, couples the displacement
    back to itself; the resulting 2x2 linear system is solved in closed
    form.  Returns (dx_bar, dy_bar, q_2d) where q_2d is the system
    determinant, useful for diagnosing near-singular projections.
    """
    s0 = math.sin(psi0)
    c0 = math.cos(psi0)
    s1 = math.sin(psi0 + dpsi)
    c1 = math.cos(psi0 + dpsi)
    b1 = v0 * s0 + (v0 + dv) * s1 + 2.0 * wind.w_x0 + wind.tp_x * dt_bar
    b2 = v0 * c0 + (v0 + dv) * c1 + 2.0 * wind.w_y0 + wind.tp_y * dt_bar

    two_over_dt = 2.0 / dt_bar
    q_2d = (
        two_over_dt * two_over_dt
        - two_over_dt * (wind.g_xx + wind.g_yy)
        + (wind.g_xx * wind.g_yy - wind.g_xy * wind.g_yx)
    )
    if abs(q_2d) < Q_2D_SINGULAR:
        raise SingularProjectionError(
            f"projection determinant {q_2d:.3e} below {Q_2D_SINGULAR:.0e}"
        )
    dx = ((two_over_dt - wind.g_yy) * b1 + wind.g_xy * b2) / q_2d
    dy = (wind.g_yx * b1 + (two_over_dt - wind.g_xx) * b2) / q_2d
    return dx, dy, q_2d


def _projected_components(
    wind: InsituWind, dx: float, dy: float, dt_bar: float
) -> tuple[float, float]:
    """Wind components one interval ahead under frozen gradients."""
    wx1 = wind.w_x0 + wind.g_xx * dx + wind.g_xy * dy + wind.tp_x * dt_bar
    wy1 = wind.w_y0 + wind.g_yx * dx + wind.g_yy * dy + wind.tp_y * dt_bar
    return wx1, wy1


def projected_wind_rate(
    v0: float,
    psi0: float,
    dv: float,
    dpsi: float,
    wind: InsituWind,
    dt_bar: float,
) -> float:
    """Along-track wind rate expected one interval ahead, for level flight
    at the commanded airspeed and heading."""
    dx, dy, _ = projected_position_change(v0, psi0, dv, dpsi, wind, dt_bar)
    wx1, wy1 = _projected_components(wind, dx, dy, dt_bar)
    v1 = v0 + dv
    s = math.sin(psi0 + dpsi)
    c = math.cos(psi0 + dpsi)
    return (
        (wind.g_xy + wind.g_yx) * v1 * s * c
        + wind.g_xx * v1 * s * s
        + wind.g_yy * v1 * c * c
        + wx1 * (wind.g_xx * s + wind.g_yx * c)
        + wy1 * (wind.g_xy * s + wind.g_yy * c)
        + wind.tp_x * s
        + wind.tp_y * c
    )


def projected_power(
    v0: float,
    psi0: float,
    dv: float,
    dpsi: float,
    wind: InsituWind,
    dt_bar: float,
    ctx,
) -> float:
    """Steady-level power expected one interval ahead: parasite plus
    induced drag power at the commanded airspeed, plus the work rate done
    against the projected along-track wind rate."""
    v1 = v0 + dv
    if v1 <= 0.0:
        raise ValueError(f"projected airspeed {v1:.4g} is not positive")
    wvr = projected_wind_rate(v0, psi0, dv, dpsi, wind, dt_bar)
    return ctx.rho_bar * v1**3 * ctx.c_d0 + ctx.k_induced / (ctx.rho_bar * v1) + v1 * wvr


def _position_partials_dv(
    psi0: float, wind: InsituWind, q_2d: float, dt_bar: float
) -> tuple[float, float]:
    """d(dx, dy)/d(airspeed increment) at zero adjustments."""
    s = math.sin(psi0)
    c = math.cos(psi0)
    two_over_dt = 2.0 / dt_bar
    ddx = ((two_over_dt - wind.g_yy) * s + wind.g_xy * c) / q_2d
    ddy = (wind.g_yx * s + (two_over_dt - wind.g_xx) * c) / q_2d
    return ddx, ddy


def _position_partials_dpsi(
    v0: float, psi0: float, wind: InsituWind, q_2d: float, dt_bar: float
) -> tuple[float, float]:
    """d(dx, dy)/d(heading increment) at zero adjustments."""
    s = math.sin(psi0)
    c = math.cos(psi0)
    two_over_dt = 2.0 / dt_bar
    ddx = v0 * ((two_over_dt - wind.g_yy) * c - wind.g_xy * s) / q_2d
    ddy = v0 * (wind.g_yx * c - (two_over_dt - wind.g_xx) * s) / q_2d
    return ddx, ddy


def airspeed_gradient(
    v0: float, psi0: float, wind: InsituWind, dt_bar: float, ctx
) -> float:
    """Exact partial of the projected power w.r.t. the airspeed increment,
    evaluated at zero adjustments.

    The drag part is the classic 3*rho*c_d0*v^2 - K/(rho*v^2), which
    vanishes at the still-air loiter speed; the wind part carries both the
    direct airspeed dependence and the indirect one through the projected
    displacement.  (The sin(2 psi)*tan(psi) grouping sometimes quoted for
    the direct term is expanded here so headings of 0 or 90 deg need no
    special-casing.)
    """
    dx0, dy0, q_2d = projected_position_change(v0, psi0, 0.0, 0.0, wind, dt_bar)
    wx1, wy1 = _projected_components(wind, dx0, dy0, dt_bar)
    s = math.sin(psi0)
    c = math.cos(psi0)
    ddx_dv, ddy_dv = _position_partials_dv(psi0, wind, q_2d, dt_bar)
    dwx_dv = wind.g_xx * ddx_dv + wind.g_xy * ddy_dv
    dwy_dv = wind.g_yx * ddx_dv + wind.g_yy * ddy_dv
    return (
        3.0 * ctx.rho_bar * ctx.c_d0 * v0 * v0
        - ctx.k_induced / (ctx.rho_bar * v0 * v0)
        + 2.0
        * v0
        * ((wind.g_xy + wind.g_yx) * s * c + wind.g_xx * s * s + wind.g_yy * c * c)
        + (wind.g_xx * s + wind.g_yx * c) * (wx1 + v0 * dwx_dv)
        + (wind.g_xy * s + wind.g_yy * c) * (wy1 + v0 * dwy_dv)
        + wind.tp_x * s
        + wind.tp_y * c
    )


def heading_gradient(
    v0: float, psi0: float, wind: InsituWind, dt_bar: float, ctx
) -> float:
    """Exact partial of the projected power w.r.t. the heading increment,
    evaluated at zero adjustments.

    Drag is heading-independent, so this is the airspeed times the partial
    of the projected along-track wind rate: rotation of the direct terms
    plus the indirect dependence through the projected displacement.
    """
    dx0, dy0, q_2d = projected_position_change(v0, psi0, 0.0, 0.0, wind, dt_bar)
    wx1, wy1 = _projected_components(wind, dx0, dy0, dt_bar)
    s = math.sin(psi0)
    c = math.cos(psi0)
    ddx_dpsi, ddy_dpsi = _position_partials_dpsi(v0, psi0, wind, q_2d, dt_bar)
    dwx_dpsi = wind.g_xx * ddx_dpsi + wind.g_xy * ddy_dpsi
    dwy_dpsi = wind.g_yx * ddx_dpsi + wind.g_yy * ddy_dpsi
    dwvr_dpsi = (
        (wind.g_xy + wind.g_yx) * v0 * math.cos(2.0 * psi0)
        + (wind.g_xx - wind.g_yy) * v0 * math.sin(2.0 * psi0)
        + dwx_dpsi * (wind.g_xx * s + wind.g_yx * c)
        + dwy_dpsi * (wind.g_xy * s + wind.g_yy * c)
        + wx1 * (wind.g_xx * c - wind.g_yx * s)
        + wy1 * (wind.g_xy * c - wind.g_yy * s)
        + wind.tp_x * c
        - wind.tp_y * s
    )
    return v0 * dwvr_dpsi


def _bang_bang_step(
    gradient: float,
    lower: float,
    upper: float,
    epsilon: float,
    eta: float,
) -> float:
    """Deadband-plus-saturation rule: full allowed step against the
    gradient sign, scaled by eta, then clipped back into [lower, upper]."""
    if abs(gradient) < epsilon:
        return 0.0
    step = eta * (lower if gradient > 0.0 else upper)
    return min(max(step, lower), upper)


def adjust(
    strategy: StrategyKind,
    v0: float,
    psi0: float,
    wind: InsituWind,
    limits: GuidanceLimits,
    ctx,
) -> Adjustment:
    """Compute this update's command increments for the given strategy.

    Both gradients are evaluated at zero adjustments (consistent with the
    first-order expansion the bang-bang rule is derived from), so the
    combined strategy is not sequential.  A singular projection yields a
    zero adjustment with the ``singular`` flag set.
    """
    if strategy is StrategyKind.REFERENCE:
        return Adjustment()

    dv_lower = max(-limits.dv_max, limits.v_bar_min - v0)
    dv_upper = min(limits.dv_max, limits.v_bar_max - v0)
    dpsi_lower = max(-limits.dpsi_max_rad, limits.psi_min_rad - psi0)
    dpsi_upper = min(limits.dpsi_max_rad, limits.psi_max_rad - psi0)

    dv = 0.0
    dpsi = 0.0
    try:
        if strategy.adjusts_airspeed:
            grad_v = airspeed_gradient(v0, psi0, wind, limits.dt_bar, ctx)
            dv = _bang_bang_step(
                grad_v, dv_lower, dv_upper, limits.epsilon, limits.eta
            )
        if strategy.adjusts_heading:
            grad_psi = heading_gradient(v0, psi0, wind, limits.dt_bar, ctx)
            dpsi = _bang_bang_step(
                grad_psi, dpsi_lower, dpsi_upper, limits.epsilon, limits.eta
            )
    except SingularProjectionError:
        return Adjustment(singular=True)
    return Adjustment(dv=dv, dpsi_rad=dpsi)


def guidance_limit_bounds(
    v_bar: float, ctx, params, dt_bar: float
) -> tuple[float, float]:
    """Largest per-update increments the closed loop can actually achieve
    at the given airspeed: excess-power limit for airspeed, bank-angle
    limit for heading."""
    excess_thrust = (
        ctx.p_max_bar / v_bar
        - ctx.rho_bar * v_bar**2 * ctx.c_d0
        - ctx.k_induced / (ctx.rho_bar * v_bar**2)
    )
    dv_bound = dt_bar * excess_thrust
    dpsi_bound = dt_bar * math.sin(params.mu_max_rad) / v_bar
    return dv_bound, dpsi_bound
