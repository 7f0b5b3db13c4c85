"""Analytic horizontal wind field with sinusoidal spatial variation.

The wind blows toward a fixed compass direction psi_w with magnitude

    W_m(x, y) = w_m0 * (1 + a_x*sin(omega_mx*x) + a_y*sin(omega_my*y))

where x, y are normalized positions and the spatial frequencies are in
radians per normalized length unit (V_n^2/g, about 40.8 m at the default
V_n = 20 m/s).  Components, their exact spatial gradients and (zero) time
partials are returned together so consumers never re-derive them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["WindFieldSpec", "WindSample", "sample", "verify_gradients"]


@dataclass(frozen=True)
class WindFieldSpec:
    """Sinusoidal wind magnitude model, constant direction."""

    w_m0_mps: float  # base magnitude, physical m/s
    v_n_mps: float  # normalization speed used for sampling
    a_x: float = 0.0  # dimensionless amplitude of the x-direction sinusoid
    a_y: float = 0.0
    omega_mx: float = 0.0  # rad per normalized length
    omega_my: float = 0.0
    psi_w_rad: float = math.pi / 2.0  # wind blowing toward East by default

    def __post_init__(self):
        if self.w_m0_mps < 0.0:
            raise ValueError("w_m0_mps must be >= 0")
        if self.v_n_mps <= 0.0:
            raise ValueError("v_n_mps must be > 0")

    @property
    def keeps_magnitude_nonnegative(self) -> bool:
        # |a_x| + |a_y| <= 1 guarantees W_m >= 0 everywhere.
        return abs(self.a_x) + abs(self.a_y) <= 1.0

    def sample(self, position, t_bar: float = 0.0) -> "WindSample":
        return sample(self, position, t_bar)


@dataclass
class WindSample:
    """Normalized wind at one point: components, 3x3 gradient, time partials.

    grad[i][j] = d(w component i)/d(position j) with i, j ordered (x, y, h).
    """

    w_x: float
    w_y: float
    w_h: float = 0.0
    grad: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    dt_partials: np.ndarray = field(default_factory=lambda: np.zeros(3))


def sample(spec: WindFieldSpec, position, t_bar: float = 0.0) -> WindSample:
    """Evaluate the field at a normalized position (x_bar, y_bar, h_bar).

    The field is horizontal (w_h = 0, no altitude dependence) and
    stationary (zero time partials); both are still carried explicitly so
    every consumer handles the general interface.
    """
    x_bar, y_bar = position[0], position[1]
    wm0_bar = spec.w_m0_mps / spec.v_n_mps
    sw = math.sin(spec.psi_w_rad)
    cw = math.cos(spec.psi_w_rad)

    wm = wm0_bar * (
        1.0
        + spec.a_x * math.sin(spec.omega_mx * x_bar)
        + spec.a_y * math.sin(spec.omega_my * y_bar)
    )
    dwm_dx = wm0_bar * spec.a_x * spec.omega_mx * math.cos(spec.omega_mx * x_bar)
    dwm_dy = wm0_bar * spec.a_y * spec.omega_my * math.cos(spec.omega_my * y_bar)

    grad = np.zeros((3, 3))
    grad[0, 0] = dwm_dx * sw
    grad[0, 1] = dwm_dy * sw
    grad[1, 0] = dwm_dx * cw
    grad[1, 1] = dwm_dy * cw
    return WindSample(w_x=wm * sw, w_y=wm * cw, w_h=0.0, grad=grad,
                      dt_partials=np.zeros(3))


def verify_gradients(
    spec: WindFieldSpec, position, t_bar: float = 0.0, fd_step: float = 1e-6
) -> float:
    """Check analytic gradients against central finite differences.

    Returns max over the nine gradient entries of
    |analytic - central difference| / max(1, |analytic|).
    """
    if fd_step <= 0.0:
        raise ValueError("fd_step must be > 0")
    base = sample(spec, position, t_bar)
    pos = np.asarray(position, dtype=float)
    worst = 0.0
    for j in range(3):
        hi = pos.copy()
        lo = pos.copy()
        hi[j] += fd_step
        lo[j] -= fd_step
        w_hi = sample(spec, hi, t_bar)
        w_lo = sample(spec, lo, t_bar)
        for i, (c_hi, c_lo) in enumerate(
            [(w_hi.w_x, w_lo.w_x), (w_hi.w_y, w_lo.w_y), (w_hi.w_h, w_lo.w_h)]
        ):
            fd = (c_hi - c_lo) / (2.0 * fd_step)
            analytic = base.grad[i, j]
            err = abs(analytic - fd) / max(1.0, abs(analytic))
            worst = max(worst, err)
    return worst
