"""Pure-Python closed-loop integration kernel.

One call advances the state through a whole guidance update interval:
fixed-step classical RK4 with the tracking laws and the analytic
sinusoidal wind field evaluated inline at every stage.  The compiled
kernel in _kernel_cy.pyx is a line-for-line twin of this module; tests
check the two against each other and against the composable module-level
functions, so keep any formula change mirrored in all three places.

Everything is normalized.  The wind field here is the stationary
horizontal sinusoidal model (zero vertical wind, zero time partials);
episodes with other fields must go through the slower generic path.
"""

from __future__ import annotations

import math

__all__ = ["integrate_interval", "BACKEND"]

BACKEND = "python"

_TWO_PI = 2.0 * math.pi


def integrate_interval(
    v: float,
    psi: float,
    gamma: float,
    x: float,
    y: float,
    h: float,
    v_c: float,
    psi_c: float,
    gamma_c: float,
    n_steps: int,
    h_step: float,
    t0_bar: float,
    wm0_bar: float,
    a_x: float,
    a_y: float,
    om_x: float,
    om_y: float,
    sin_psi_w: float,
    cos_psi_w: float,
    rho_bar: float,
    c_d0: float,
    k_ind: float,
    kv_tn: float,
    kpsi_tn: float,
    kgam_tn: float,
    c_l_min: float,
    c_l_max: float,
    mu_max: float,
    p_min_bar: float,
    p_max_bar: float,
    v_guard: float,
    record=None,
):
    """Integrate n_steps RK4 steps with fixed commands.

    Controls are recomputed from the tracking laws at every RK4 stage; the
    power integral is accumulated by the trapezoidal rule over the grid
    points.  ``record``, if given, is a float64 array of shape
    (n_steps + 1, 10) filled with rows
    (t_bar, v, psi, gamma, x, y, h, p_bar, c_l, mu).

    Returns ``(state, power_integral, stats)`` where state is the 6-tuple
    (v, psi, gamma, x, y, h) and stats is
    (n_cl_low, n_cl_high, n_mu, n_p_low, n_p_high,
     min_c_l, max_c_l, max_abs_mu, guard_step);
    guard_step is -1 unless the airspeed guard tripped, in which case it
    is the index of the offending step and integration stopped there.
    """
    sin = math.sin
    cos = math.cos
    sqrt = math.sqrt
    atan2 = math.atan2
    fmod = math.fmod
    pi = math.pi

    n_cl_lo = n_cl_hi = n_mu = n_p_lo = n_p_hi = 0
    min_cl = math.inf
    max_cl = -math.inf
    max_mu_abs = 0.0
    guard_step = -1

    def evaluate(v, psi, gamma, x, y):
        # Returns (dv, dpsi, dgamma, dx, dy, dh, p, c_l, mu) or None when
        # the airspeed guard trips.  Saturation stats update in place.
        nonlocal n_cl_lo, n_cl_hi, n_mu, n_p_lo, n_p_hi, min_cl, max_cl, max_mu_abs
        if v < v_guard:
            return None

        # Sinusoidal wind field: components and planar gradients.
        wm = wm0_bar * (1.0 + a_x * sin(om_x * x) + a_y * sin(om_y * y))
        wx = wm * sin_psi_w
        wy = wm * cos_psi_w
        dwm_dx = wm0_bar * a_x * om_x * cos(om_x * x)
        dwm_dy = wm0_bar * a_y * om_y * cos(om_y * y)
        gxx = dwm_dx * sin_psi_w
        gxy = dwm_dy * sin_psi_w
        gyx = dwm_dx * cos_psi_w
        gyy = dwm_dy * cos_psi_w

        sp = sin(psi)
        cp = cos(psi)
        sg = sin(gamma)
        cg = cos(gamma)

        # Ground velocity and wind-axis wind rates (no vertical wind).
        xd = v * cg * sp + wx
        yd = v * cg * cp + wy
        hd = v * sg
        wdx = gxx * xd + gxy * yd
        wdy = gyx * xd + gyy * yd
        wvr = wdx * cg * sp + wdy * cg * cp
        wpsir = wdx * cp - wdy * sp
        wgamr = wdx * sg * sp + wdy * sg * cp

        # Bank and lift from the heading/path tracking demands.
        err = fmod(psi - psi_c + pi, _TWO_PI)
        if err <= 0.0:
            err += _TWO_PI
        err -= pi
        num = wpsir - v * cg * kpsi_tn * err
        den = cg - wgamr - v * kgam_tn * (gamma - gamma_c)
        mu = atan2(num, den)
        c_l = sqrt(num * num + den * den) / (rho_bar * v * v)

        if c_l < c_l_min:
            c_l = c_l_min
            n_cl_lo += 1
        elif c_l > c_l_max:
            c_l = c_l_max
            n_cl_hi += 1
        if mu < -mu_max:
            mu = -mu_max
            n_mu += 1
        elif mu > mu_max:
            mu = mu_max
            n_mu += 1
        if c_l < min_cl:
            min_cl = c_l
        if c_l > max_cl:
            max_cl = c_l
        if abs(mu) > max_mu_abs:
            max_mu_abs = abs(mu)

        # Thrust law with the saturated lift coefficient, then power limits.
        drag = rho_bar * v * v * (c_d0 + k_ind * c_l * c_l)
        thrust = -kv_tn * (v - v_c) + drag + sg + wvr
        p = thrust * v
        if p < p_min_bar:
            p = p_min_bar
            n_p_lo += 1
        elif p > p_max_bar:
            p = p_max_bar
            n_p_hi += 1

        lift = rho_bar * v * c_l
        dv = p / v - drag - sg - wvr
        dpsi = lift * sin(mu) / cg - wpsir / (v * cg)
        dgamma = lift * cos(mu) - cg / v + wgamr / v
        return dv, dpsi, dgamma, xd, yd, hd, p, c_l, mu

    ev = evaluate(v, psi, gamma, x, y)
    if ev is None:
        stats = (n_cl_lo, n_cl_hi, n_mu, n_p_lo, n_p_hi, min_cl, max_cl, max_mu_abs, 0)
        return (v, psi, gamma, x, y, h), 0.0, stats
    p_prev = ev[6]
    if record is not None:
        record[0, 0] = t0_bar
        record[0, 1] = v
        record[0, 2] = psi
        record[0, 3] = gamma
        record[0, 4] = x
        record[0, 5] = y
        record[0, 6] = h
        record[0, 7] = ev[6]
        record[0, 8] = ev[7]
        record[0, 9] = ev[8]

    integral = 0.0
    half = 0.5 * h_step
    sixth = h_step / 6.0
    for i in range(n_steps):
        k1 = ev
        e2 = evaluate(
            v + half * k1[0],
            psi + half * k1[1],
            gamma + half * k1[2],
            x + half * k1[3],
            y + half * k1[4],
        )
        if e2 is None:
            guard_step = i
            break
        e3 = evaluate(
            v + half * e2[0],
            psi + half * e2[1],
            gamma + half * e2[2],
            x + half * e2[3],
            y + half * e2[4],
        )
        if e3 is None:
            guard_step = i
            break
        e4 = evaluate(
            v + h_step * e3[0],
            psi + h_step * e3[1],
            gamma + h_step * e3[2],
            x + h_step * e3[3],
            y + h_step * e3[4],
        )
        if e4 is None:
            guard_step = i
            break
        v += sixth * (k1[0] + 2.0 * (e2[0] + e3[0]) + e4[0])
        psi += sixth * (k1[1] + 2.0 * (e2[1] + e3[1]) + e4[1])
        gamma += sixth * (k1[2] + 2.0 * (e2[2] + e3[2]) + e4[2])
        x += sixth * (k1[3] + 2.0 * (e2[3] + e3[3]) + e4[3])
        y += sixth * (k1[4] + 2.0 * (e2[4] + e3[4]) + e4[4])
        h += sixth * (k1[5] + 2.0 * (e2[5] + e3[5]) + e4[5])
        psi = fmod(psi, _TWO_PI)
        if psi < 0.0:
            psi += _TWO_PI

        ev = evaluate(v, psi, gamma, x, y)
        if ev is None:
            guard_step = i
            break
        integral += half * (p_prev + ev[6])
        p_prev = ev[6]
        if record is not None:
            record[i + 1, 0] = t0_bar + (i + 1) * h_step
            record[i + 1, 1] = v
            record[i + 1, 2] = psi
            record[i + 1, 3] = gamma
            record[i + 1, 4] = x
            record[i + 1, 5] = y
            record[i + 1, 6] = h
            record[i + 1, 7] = ev[6]
            record[i + 1, 8] = ev[7]
            record[i + 1, 9] = ev[8]

    stats = (
        n_cl_lo,
        n_cl_hi,
        n_mu,
        n_p_lo,
        n_p_hi,
        min_cl,
        max_cl,
        max_mu_abs,
        guard_step,
    )
    return (v, psi, gamma, x, y, h), integral, stats
