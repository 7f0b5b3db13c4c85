"""Randomized self-checks with independent numerical oracles.

Each suite draws random problem instances, compares an analytic quantity
against an independent numerical route (central finite differences or
fixed-point iteration) and reports the worst error seen.  The CLI `check`
subcommand and the acceptance test suite both run exactly these routines,
so there is a single source of truth for what "verified" means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from windward.dynamics import NormContext, build_norm_context, scaneagle_params
from windward.guidance import (
    InsituWind,
    SingularProjectionError,
    airspeed_gradient,
    heading_gradient,
    projected_position_change,
    projected_power,
)
from windward.windfield import WindFieldSpec, verify_gradients

__all__ = [
    "CheckReport",
    "default_context",
    "gradient_fd_suite",
    "projection_fixed_point_suite",
    "windfield_gradient_suite",
    "run_all_checks",
]


@dataclass
class CheckReport:
    name: str
    n_draws: int
    max_error: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return (
            f"{status}  {self.name}: max error {self.max_error:.3e} "
            f"<= {self.tolerance:.0e} over {self.n_draws} draws{extra}"
        )


def default_context() -> NormContext:
    return build_norm_context(scaneagle_params())


def _draw_insitu(rng: np.random.Generator, with_time_partials: bool) -> InsituWind:
    g = rng.uniform(-0.2, 0.2, size=4)
    w = rng.uniform(-0.5, 0.5, size=2)
    tp = rng.uniform(-0.05, 0.05, size=2) if with_time_partials else (0.0, 0.0)
    return InsituWind(
        w_x0=w[0], w_y0=w[1],
        g_xx=g[0], g_xy=g[1], g_yx=g[2], g_yy=g[3],
        tp_x=tp[0], tp_y=tp[1],
    )


def gradient_fd_suite(
    n_draws: int = 1000,
    seed: int = 20260810,
    fd_step: float = 1e-6,
    with_time_partials: bool = False,
) -> CheckReport:
    """Analytic projected-power gradients vs central finite differences.

    Draws v0 in [0.6, 1.6], psi0 in [0, 2*pi), planar gradients in
    [-0.2, 0.2], wind components in [-0.5, 0.5] and dt_bar in [1, 6].
    Error metric: |analytic - fd| / max(1, |analytic|), worst over both
    gradients and all draws.  Draws whose projection system is singular
    (the operations raise on those) are redrawn and counted.
    """
    ctx = default_context()
    rng = np.random.default_rng(seed)
    worst = 0.0
    redrawn = 0
    done = 0
    while done < n_draws:
        v0 = rng.uniform(0.6, 1.6)
        psi0 = rng.uniform(0.0, 2.0 * math.pi)
        dt_bar = rng.uniform(1.0, 6.0)
        wind = _draw_insitu(rng, with_time_partials)
        try:
            grad_v = airspeed_gradient(v0, psi0, wind, dt_bar, ctx)
            grad_psi = heading_gradient(v0, psi0, wind, dt_bar, ctx)
            p = lambda dv, dpsi: projected_power(v0, psi0, dv, dpsi, wind, dt_bar, ctx)
            fd_v = (p(fd_step, 0.0) - p(-fd_step, 0.0)) / (2.0 * fd_step)
            fd_psi = (p(0.0, fd_step) - p(0.0, -fd_step)) / (2.0 * fd_step)
        except SingularProjectionError:
            redrawn += 1
            continue
        worst = max(
            worst,
            abs(grad_v - fd_v) / max(1.0, abs(grad_v)),
            abs(grad_psi - fd_psi) / max(1.0, abs(grad_psi)),
        )
        done += 1
    return CheckReport(
        name="projected-power gradients vs finite differences",
        n_draws=n_draws,
        max_error=worst,
        tolerance=1e-6,
        detail=f"{redrawn} singular draws redrawn",
    )


def _trapezoid_fixed_point(
    v0: float,
    psi0: float,
    dv: float,
    dpsi: float,
    wind: InsituWind,
    dt_bar: float,
    tol: float = 1e-14,
    max_iter: int = 2000,
):
    """Picard iteration of the implicit trapezoidal displacement system.

    Independent of the closed-form solve.  Returns None when the iteration
    is not contracting for this draw.
    """
    s0, c0 = math.sin(psi0), math.cos(psi0)
    s1, c1 = math.sin(psi0 + dpsi), math.cos(psi0 + dpsi)
    b1 = v0 * s0 + (v0 + dv) * s1 + 2.0 * wind.w_x0 + wind.tp_x * dt_bar
    b2 = v0 * c0 + (v0 + dv) * c1 + 2.0 * wind.w_y0 + wind.tp_y * dt_bar
    half_dt = 0.5 * dt_bar
    dx = dy = 0.0
    for _ in range(max_iter):
        dx_new = half_dt * (b1 + wind.g_xx * dx + wind.g_xy * dy)
        dy_new = half_dt * (b2 + wind.g_yx * dx + wind.g_yy * dy)
        if not (math.isfinite(dx_new) and math.isfinite(dy_new)):
            return None
        if abs(dx_new - dx) < tol and abs(dy_new - dy) < tol:
            return dx_new, dy_new
        dx, dy = dx_new, dy_new
    return None


def projection_fixed_point_suite(
    n_draws: int = 1000, seed: int = 20260810
) -> CheckReport:
    """Closed-form displacement solve vs trapezoidal fixed-point iteration.

    Draws follow the gradient-suite distribution and require
    |Q_2D| > 1e-3; draws where the Picard iteration itself diverges
    (spectral radius of (dt/2)*G above ~1, possible at large dt_bar even
    with a well-conditioned system) are redrawn and counted, since the
    oracle is only defined on its contraction domain.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    redrawn = 0
    done = 0
    while done < n_draws:
        v0 = rng.uniform(0.6, 1.6)
        psi0 = rng.uniform(0.0, 2.0 * math.pi)
        dt_bar = rng.uniform(1.0, 6.0)
        dv = rng.uniform(-0.1, 0.1)
        dpsi = rng.uniform(-0.5, 0.5)
        wind = _draw_insitu(rng, with_time_partials=True)
        try:
            dx, dy, q_2d = projected_position_change(v0, psi0, dv, dpsi, wind, dt_bar)
        except SingularProjectionError:
            redrawn += 1
            continue
        if abs(q_2d) <= 1e-3:
            redrawn += 1
            continue
        oracle = _trapezoid_fixed_point(v0, psi0, dv, dpsi, wind, dt_bar)
        if oracle is None:
            redrawn += 1
            continue
        worst = max(worst, abs(dx - oracle[0]), abs(dy - oracle[1]))
        done += 1
    return CheckReport(
        name="position projection vs fixed-point iteration",
        n_draws=n_draws,
        max_error=worst,
        tolerance=1e-10,
        detail=f"{redrawn} draws outside oracle domain redrawn",
    )


def windfield_gradient_suite(n_draws: int = 1000, seed: int = 20260810) -> CheckReport:
    """Analytic wind-field gradients vs central finite differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_draws):
        spec = WindFieldSpec(
            w_m0_mps=rng.uniform(0.0, 15.0),
            v_n_mps=20.0,
            a_x=rng.uniform(-1.0, 1.0),
            a_y=rng.uniform(-1.0, 1.0),
            omega_mx=rng.uniform(0.0, 10.0),
            omega_my=rng.uniform(0.0, 10.0),
            psi_w_rad=rng.uniform(0.0, 2.0 * math.pi),
        )
        position = rng.uniform(-50.0, 50.0, size=3)
        worst = max(worst, verify_gradients(spec, position, 0.0, fd_step=1e-6))
    return CheckReport(
        name="wind-field gradients vs finite differences",
        n_draws=n_draws,
        max_error=worst,
        tolerance=1e-6,
    )


def run_all_checks(n_draws: int = 1000, seed: int = 20260810) -> list[CheckReport]:
    return [
        gradient_fd_suite(n_draws, seed),
        gradient_fd_suite(n_draws, seed + 1, with_time_partials=True),
        projection_fixed_point_suite(n_draws, seed),
        windfield_gradient_suite(n_draws, seed),
    ]
