"""Normalized point-mass flight dynamics for a propeller-driven UAV.

All trajectory quantities are dimensionless: speeds are scaled by a
characteristic speed V_n, lengths by V_n^2/g, time by t_n = V_n/g and
power by m*g*V_n.  With that scaling the airframe enters the equations of
motion only through the normalized air density ``rho_bar`` (air density
combined with wing loading), the parasite drag coefficient ``c_d0`` and
the induced drag factor ``k_induced``.

Axis convention: x = East, y = North, h = up.  Heading psi is measured
from North toward East, so the ground track obeys x' ~ sin(psi) and
y' ~ cos(psi).  gamma is the air-relative flight path angle, positive up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "V_BAR_GUARD",
    "PhysicalUavParams",
    "NormContext",
    "State",
    "Controls",
    "WindRates",
    "SingularStateError",
    "scaneagle_params",
    "build_norm_context",
    "wind_relative_rates",
    "state_derivative",
    "instantaneous_power",
]

# Integration aborts below this normalized airspeed: the airspeed, heading
# and path-angle equations all divide by v_bar.
V_BAR_GUARD = 0.05


class SingularStateError(ValueError):
    """State too degenerate to evaluate the dynamics (airspeed below guard)."""


@dataclass(frozen=True)
class PhysicalUavParams:
    """Physical airframe parameters in SI units (angles in rad)."""

    mass_kg: float
    wing_area_m2: float
    c_d0: float
    e_max: float  # maximum lift-to-drag ratio
    p_max_w: float
    p_min_w: float
    v_max_mps: float
    v_min_mps: float
    c_l_max: float
    c_l_min: float
    mu_max_rad: float

    def __post_init__(self):
        errors = []
        if self.mass_kg <= 0.0:
            errors.append("mass_kg must be > 0")
        if self.wing_area_m2 <= 0.0:
            errors.append("wing_area_m2 must be > 0")
        if self.c_d0 <= 0.0:
            errors.append("c_d0 must be > 0")
        if self.e_max <= 0.0:
            errors.append("e_max must be > 0")
        if not 0.0 <= self.c_l_min < self.c_l_max:
            errors.append("need 0 <= c_l_min < c_l_max")
        if not 0.0 < self.mu_max_rad < math.pi / 2.0:
            errors.append("mu_max_rad must lie in (0, pi/2)")
        if not 0.0 < self.v_min_mps < self.v_max_mps:
            errors.append("need 0 < v_min_mps < v_max_mps")
        if not self.p_min_w < self.p_max_w:
            errors.append("need p_min_w < p_max_w")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def k_induced(self) -> float:
        # Drag polar C_D = c_d0 + K*C_L^2 with E_max = 1/(2*sqrt(K*c_d0)).
        return 1.0 / (4.0 * self.c_d0 * self.e_max**2)


def scaneagle_params() -> PhysicalUavParams:
    """ScanEagle-class small UAV. v_min sits just above the 19.7 m/s stall."""
    return PhysicalUavParams(
        mass_kg=20.0,
        wing_area_m2=0.55,
        c_d0=0.03,
        e_max=12.0,
        p_max_w=1400.0,
        p_min_w=0.0,
        v_max_mps=41.0,
        v_min_mps=20.0,
        c_l_max=1.5,
        c_l_min=0.0,
        mu_max_rad=math.radians(40.0),
    )


@dataclass(frozen=True)
class NormContext:
    """Normalization constants plus normalized operating limits."""

    v_n_mps: float
    g_mps2: float
    rho_air_kgpm3: float
    rho_bar: float
    c_d0: float
    k_induced: float
    t_n_s: float  # V_n / g
    length_scale_m: float  # V_n^2 / g
    power_scale_w: float  # m * g * V_n
    v_min_bar: float
    v_max_bar: float
    p_min_bar: float
    p_max_bar: float

    def speed_bar(self, v_mps: float) -> float:
        return v_mps / self.v_n_mps

    def speed_mps(self, v_bar: float) -> float:
        return v_bar * self.v_n_mps

    def time_bar(self, t_s: float) -> float:
        return t_s / self.t_n_s

    def time_s(self, t_bar: float) -> float:
        return t_bar * self.t_n_s

    def length_bar(self, d_m: float) -> float:
        return d_m / self.length_scale_m

    def length_m(self, d_bar: float) -> float:
        return d_bar * self.length_scale_m

    def power_bar(self, p_w: float) -> float:
        return p_w / self.power_scale_w

    def power_w(self, p_bar: float) -> float:
        return p_bar * self.power_scale_w


def build_norm_context(
    params: PhysicalUavParams,
    v_n_mps: float = 20.0,
    rho_air_kgpm3: float = 1.225,
    g_mps2: float = 9.80665,
) -> NormContext:
    """Derive normalization constants from the airframe and environment.

    rho_bar = rho * S * V_n^2 / (2 m g) folds air density and wing loading
    into one dimensionless number; speed and power limits are normalized
    alongside so downstream code never sees SI units.
    """
    if v_n_mps <= 0.0 or rho_air_kgpm3 <= 0.0 or g_mps2 <= 0.0:
        raise ValueError("v_n_mps, rho_air_kgpm3 and g_mps2 must all be > 0")
    weight_n = params.mass_kg * g_mps2
    rho_bar = rho_air_kgpm3 * params.wing_area_m2 * v_n_mps**2 / (2.0 * weight_n)
    power_scale = weight_n * v_n_mps
    return NormContext(
        v_n_mps=v_n_mps,
        g_mps2=g_mps2,
        rho_air_kgpm3=rho_air_kgpm3,
        rho_bar=rho_bar,
        c_d0=params.c_d0,
        k_induced=params.k_induced,
        t_n_s=v_n_mps / g_mps2,
        length_scale_m=v_n_mps**2 / g_mps2,
        power_scale_w=power_scale,
        v_min_bar=params.v_min_mps / v_n_mps,
        v_max_bar=params.v_max_mps / v_n_mps,
        p_min_bar=params.p_min_w / power_scale,
        p_max_bar=params.p_max_w / power_scale,
    )


@dataclass
class State:
    """Normalized trajectory state."""

    v_bar: float  # airspeed
    psi_rad: float  # heading, wrapped to [0, 2*pi)
    gamma_rad: float  # flight path angle
    x_bar: float  # East
    y_bar: float  # North
    h_bar: float  # altitude


@dataclass
class Controls:
    """Realized control set. p_bar stores thrust*airspeed, i.e. power."""

    p_bar: float
    c_l: float
    mu_rad: float


@dataclass(frozen=True)
class WindRates:
    """Material wind rates projected on the wind axes (airspeed frame)."""

    w_v_rate: float
    w_psi_rate: float
    w_gamma_rate: float


def wind_relative_rates(state: State, wind) -> WindRates:
    """Wind rates seen along the airspeed direction, the horizontal-turn
    direction and the pull-up direction.

    The wind sample must expose normalized components (w_x, w_y, w_h), the
    3x3 spatial gradient ``grad`` (rows = component, columns = d/dx, d/dy,
    d/dh) and time partials ``dt_partials``, all at the state's position.
    The material rates follow the wind components along the ground track;
    the three projections are what the airspeed, heading and path-angle
    equations subtract or add.
    """
    sp = math.sin(state.psi_rad)
    cp = math.cos(state.psi_rad)
    sg = math.sin(state.gamma_rad)
    cg = math.cos(state.gamma_rad)

    # Ground-relative velocity (air-relative velocity plus wind).
    xd = state.v_bar * cg * sp + wind.w_x
    yd = state.v_bar * cg * cp + wind.w_y
    hd = state.v_bar * sg + wind.w_h

    g = wind.grad
    tp = wind.dt_partials
    wdot_x = g[0][0] * xd + g[0][1] * yd + g[0][2] * hd + tp[0]
    wdot_y = g[1][0] * xd + g[1][1] * yd + g[1][2] * hd + tp[1]
    wdot_h = g[2][0] * xd + g[2][1] * yd + g[2][2] * hd + tp[2]

    return WindRates(
        w_v_rate=wdot_x * cg * sp + wdot_y * cg * cp + wdot_h * sg,
        w_psi_rate=wdot_x * cp - wdot_y * sp,
        w_gamma_rate=wdot_x * sg * sp + wdot_y * sg * cp - wdot_h * cg,
    )


class StateRates(State):
    """Time derivative of State with respect to normalized time."""


def state_derivative(
    state: State, controls: Controls, wind, ctx: NormContext
) -> StateRates:
    """Normalized point-mass equations of motion.

    The airspeed equation balances power against drag, gravity and the
    along-track wind rate; heading and path angle respond to the lift
    vector tilted by the bank angle, minus their wind-rate projections.
    """
    v = state.v_bar
    if v < V_BAR_GUARD:
        raise SingularStateError(f"v_bar={v:.4g} below guard {V_BAR_GUARD}")
    rates = wind_relative_rates(state, wind)
    sp = math.sin(state.psi_rad)
    cp = math.cos(state.psi_rad)
    sg = math.sin(state.gamma_rad)
    cg = math.cos(state.gamma_rad)

    rho = ctx.rho_bar
    drag = rho * v * v * (ctx.c_d0 + ctx.k_induced * controls.c_l**2)
    lift = rho * v * controls.c_l

    return StateRates(
        v_bar=controls.p_bar / v - drag - sg - rates.w_v_rate,
        psi_rad=lift * math.sin(controls.mu_rad) / cg - rates.w_psi_rate / (v * cg),
        gamma_rad=lift * math.cos(controls.mu_rad) - cg / v + rates.w_gamma_rate / v,
        x_bar=v * cg * sp + wind.w_x,
        y_bar=v * cg * cp + wind.w_y,
        h_bar=v * sg + wind.w_h,
    )


def instantaneous_power(controls: Controls, state: State) -> float:
    """Power drawn right now, thrust times airspeed (already p_bar)."""
    return controls.p_bar


def level_trim_c_l(v_bar: float, ctx: NormContext) -> float:
    """Lift coefficient holding level flight at zero bank."""
    return 1.0 / (ctx.rho_bar * v_bar**2)


def level_trim_power(v_bar: float, ctx: NormContext) -> float:
    """Steady wings-level power requirement in still air."""
    return ctx.rho_bar * v_bar**3 * ctx.c_d0 + ctx.k_induced / (ctx.rho_bar * v_bar)


def uniform_wind_sample(w_x: float = 0.0, w_y: float = 0.0, w_h: float = 0.0):
    """Gradient-free wind sample, mostly for tests and trim calculations."""
    from windward.windfield import WindSample

    return WindSample(
        w_x=w_x,
        w_y=w_y,
        w_h=w_h,
        grad=np.zeros((3, 3)),
        dt_partials=np.zeros(3),
    )
