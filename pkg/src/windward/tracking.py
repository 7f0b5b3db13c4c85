"""Closed-loop tracking laws for airspeed, heading and path-angle commands.

Each channel is feedback-linearized into a first-order response: with
unsaturated controls and exact wind rates the realized normalized rates
are -K*t_n*(value - command), i.e. a physical time constant of 1/K.
Gains are expressed per physical second, so the laws multiply by t_n to
work in normalized time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from windward.dynamics import Controls, NormContext, PhysicalUavParams, State, WindRates

__all__ = [
    "TrackingGains",
    "Commands",
    "SaturationFlags",
    "wrap_angle",
    "thrust_law",
    "bank_and_lift_law",
    "saturate",
]


@dataclass(frozen=True)
class TrackingGains:
    """First-order loop gains, 1/s."""

    k_v_per_s: float = 0.5
    k_psi_per_s: float = 0.5
    k_gamma_per_s: float = 0.5

    def __post_init__(self):
        if min(self.k_v_per_s, self.k_psi_per_s, self.k_gamma_per_s) <= 0.0:
            raise ValueError("all tracking gains must be > 0")


@dataclass
class Commands:
    """Commanded airspeed (normalized), heading and path angle."""

    v_bar_c: float
    psi_c_rad: float
    gamma_c_rad: float = 0.0


@dataclass
class SaturationFlags:
    """Which control limits clamped during the last saturate() call."""

    c_l_low: bool = False
    c_l_high: bool = False
    mu: bool = False
    p_low: bool = False
    p_high: bool = False

    @property
    def any(self) -> bool:
        return self.c_l_low or self.c_l_high or self.mu or self.p_low or self.p_high


def wrap_angle(angle_rad: float) -> float:
    """Wrap an angle to (-pi, pi] so small errors never command full turns."""
    a = math.fmod(angle_rad + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def thrust_law(
    state: State,
    rates: WindRates,
    cmd: Commands,
    gains: TrackingGains,
    ctx: NormContext,
    c_l: float,
) -> float:
    """Unsaturated thrust cancelling drag, gravity and the along-track wind
    rate, plus a proportional airspeed-error term.

    ``c_l`` must be the lift coefficient actually flown (post-saturation),
    otherwise the drag cancellation is inexact.
    """
    v = state.v_bar
    drag = ctx.rho_bar * v * v * (ctx.c_d0 + ctx.k_induced * c_l * c_l)
    tracking = -gains.k_v_per_s * ctx.t_n_s * (v - cmd.v_bar_c)
    return tracking + drag + math.sin(state.gamma_rad) + rates.w_v_rate


def bank_and_lift_law(
    state: State,
    rates: WindRates,
    cmd: Commands,
    gains: TrackingGains,
    ctx: NormContext,
    prev_mu_rad: float = 0.0,
) -> tuple[float, float]:
    """Unsaturated (mu, C_L) tracking the heading and path-angle commands.

    The horizontal lift component must cancel the heading wind rate and
    drive the (wrapped) heading error; the vertical component must carry
    weight, cancel the path-angle wind rate and drive the gamma error.
    mu comes from the two-argument arctangent of those demands, C_L from
    their magnitude.  If both demands are exactly zero the previous bank
    angle is held.
    """
    v = state.v_bar
    cg = math.cos(state.gamma_rad)
    psi_err = wrap_angle(state.psi_rad - cmd.psi_c_rad)
    num = rates.w_psi_rate - v * cg * gains.k_psi_per_s * ctx.t_n_s * psi_err
    den = (
        cg
        - rates.w_gamma_rate
        - v * gains.k_gamma_per_s * ctx.t_n_s * (state.gamma_rad - cmd.gamma_c_rad)
    )
    if num == 0.0 and den == 0.0:
        return prev_mu_rad, 0.0
    mu = math.atan2(num, den)
    c_l = math.sqrt(num * num + den * den) / (ctx.rho_bar * v * v)
    return mu, c_l


def saturate(
    controls: Controls, params: PhysicalUavParams, ctx: NormContext
) -> tuple[Controls, SaturationFlags]:
    """Clamp controls into the airframe box, recording which limits bound."""
    flags = SaturationFlags()
    c_l = controls.c_l
    if c_l < params.c_l_min:
        c_l = params.c_l_min
        flags.c_l_low = True
    elif c_l > params.c_l_max:
        c_l = params.c_l_max
        flags.c_l_high = True
    mu = controls.mu_rad
    if mu < -params.mu_max_rad:
        mu = -params.mu_max_rad
        flags.mu = True
    elif mu > params.mu_max_rad:
        mu = params.mu_max_rad
        flags.mu = True
    p = controls.p_bar
    if p < ctx.p_min_bar:
        p = ctx.p_min_bar
        flags.p_low = True
    elif p > ctx.p_max_bar:
        p = ctx.p_max_bar
        flags.p_high = True
    return Controls(p_bar=p, c_l=c_l, mu_rad=mu), flags
