# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-loop integration kernel.

Line-for-line twin of _kernel_py.py (same arguments, same return shape,
same arithmetic); see that module for documentation.  Keep the two in
sync: the test suite cross-checks their trajectories.
"""

from libc.math cimport INFINITY, atan2, cos, fabs, fmod, sin, sqrt

BACKEND = "compiled"

cdef double TWO_PI = 6.283185307179586476925287
cdef double PI = 3.141592653589793238462643


cdef struct Model:
    double v_c, psi_c, gamma_c
    double wm0_bar, a_x, a_y, om_x, om_y, sin_psi_w, cos_psi_w
    double rho_bar, c_d0, k_ind
    double kv_tn, kpsi_tn, kgam_tn
    double c_l_min, c_l_max, mu_max
    double p_min_bar, p_max_bar
    double v_guard


cdef struct Stats:
    long n_cl_lo, n_cl_hi, n_mu, n_p_lo, n_p_hi
    double min_cl, max_cl, max_mu_abs


cdef inline bint _evaluate(double v, double psi, double gamma, double x, double y,
                           Model* m, Stats* st, double* out) nogil:
    """Fill out[0..8] = (dv, dpsi, dgamma, dx, dy, dh, p, c_l, mu).

    Returns False when the airspeed guard trips.
    """
    cdef double wm, wx, wy, dwm_dx, dwm_dy, gxx, gxy, gyx, gyy
    cdef double sp, cp, sg, cg, xd, yd, hd, wdx, wdy, wvr, wpsir, wgamr
    cdef double err, num, den, mu, c_l, drag, thrust, p, lift

    if v < m.v_guard:
        return False

    wm = m.wm0_bar * (1.0 + m.a_x * sin(m.om_x * x) + m.a_y * sin(m.om_y * y))
    wx = wm * m.sin_psi_w
    wy = wm * m.cos_psi_w
    dwm_dx = m.wm0_bar * m.a_x * m.om_x * cos(m.om_x * x)
    dwm_dy = m.wm0_bar * m.a_y * m.om_y * cos(m.om_y * y)
    gxx = dwm_dx * m.sin_psi_w
    gxy = dwm_dy * m.sin_psi_w
    gyx = dwm_dx * m.cos_psi_w
    gyy = dwm_dy * m.cos_psi_w

    sp = sin(psi)
    cp = cos(psi)
    sg = sin(gamma)
    cg = cos(gamma)

    xd = v * cg * sp + wx
    yd = v * cg * cp + wy
    hd = v * sg
    wdx = gxx * xd + gxy * yd
    wdy = gyx * xd + gyy * yd
    wvr = wdx * cg * sp + wdy * cg * cp
    wpsir = wdx * cp - wdy * sp
    wgamr = wdx * sg * sp + wdy * sg * cp

    err = fmod(psi - m.psi_c + PI, TWO_PI)
    if err <= 0.0:
        err += TWO_PI
    err -= PI
    num = wpsir - v * cg * m.kpsi_tn * err
    den = cg - wgamr - v * m.kgam_tn * (gamma - m.gamma_c)
    mu = atan2(num, den)
    c_l = sqrt(num * num + den * den) / (m.rho_bar * v * v)

    if c_l < m.c_l_min:
        c_l = m.c_l_min
        st.n_cl_lo += 1
    elif c_l > m.c_l_max:
        c_l = m.c_l_max
        st.n_cl_hi += 1
    if mu < -m.mu_max:
        mu = -m.mu_max
        st.n_mu += 1
    elif mu > m.mu_max:
        mu = m.mu_max
        st.n_mu += 1
    if c_l < st.min_cl:
        st.min_cl = c_l
    if c_l > st.max_cl:
        st.max_cl = c_l
    if fabs(mu) > st.max_mu_abs:
        st.max_mu_abs = fabs(mu)

    drag = m.rho_bar * v * v * (m.c_d0 + m.k_ind * c_l * c_l)
    thrust = -m.kv_tn * (v - m.v_c) + drag + sg + wvr
    p = thrust * v
    if p < m.p_min_bar:
        p = m.p_min_bar
        st.n_p_lo += 1
    elif p > m.p_max_bar:
        p = m.p_max_bar
        st.n_p_hi += 1

    lift = m.rho_bar * v * c_l
    out[0] = p / v - drag - sg - wvr
    out[1] = lift * sin(mu) / cg - wpsir / (v * cg)
    out[2] = lift * cos(mu) - cg / v + wgamr / v
    out[3] = xd
    out[4] = yd
    out[5] = hd
    out[6] = p
    out[7] = c_l
    out[8] = mu
    return True


def integrate_interval(
    double v,
    double psi,
    double gamma,
    double x,
    double y,
    double h,
    double v_c,
    double psi_c,
    double gamma_c,
    long n_steps,
    double h_step,
    double t0_bar,
    double wm0_bar,
    double a_x,
    double a_y,
    double om_x,
    double om_y,
    double sin_psi_w,
    double cos_psi_w,
    double rho_bar,
    double c_d0,
    double k_ind,
    double kv_tn,
    double kpsi_tn,
    double kgam_tn,
    double c_l_min,
    double c_l_max,
    double mu_max,
    double p_min_bar,
    double p_max_bar,
    double v_guard,
    record=None,
):
    """See _kernel_py.integrate_interval."""
    cdef Model m
    m.v_c = v_c
    m.psi_c = psi_c
    m.gamma_c = gamma_c
    m.wm0_bar = wm0_bar
    m.a_x = a_x
    m.a_y = a_y
    m.om_x = om_x
    m.om_y = om_y
    m.sin_psi_w = sin_psi_w
    m.cos_psi_w = cos_psi_w
    m.rho_bar = rho_bar
    m.c_d0 = c_d0
    m.k_ind = k_ind
    m.kv_tn = kv_tn
    m.kpsi_tn = kpsi_tn
    m.kgam_tn = kgam_tn
    m.c_l_min = c_l_min
    m.c_l_max = c_l_max
    m.mu_max = mu_max
    m.p_min_bar = p_min_bar
    m.p_max_bar = p_max_bar
    m.v_guard = v_guard

    cdef Stats st
    st.n_cl_lo = 0
    st.n_cl_hi = 0
    st.n_mu = 0
    st.n_p_lo = 0
    st.n_p_hi = 0
    st.min_cl = INFINITY
    st.max_cl = -INFINITY
    st.max_mu_abs = 0.0

    cdef long guard_step = -1
    cdef double integral = 0.0
    cdef double half = 0.5 * h_step
    cdef double sixth = h_step / 6.0
    cdef double p_prev
    cdef double k1[9]
    cdef double e2[9]
    cdef double e3[9]
    cdef double e4[9]
    cdef long i
    cdef bint recording = record is not None
    cdef double[:, ::1] rec
    if recording:
        rec = record

    if not _evaluate(v, psi, gamma, x, y, &m, &st, k1):
        return (
            (v, psi, gamma, x, y, h),
            0.0,
            (st.n_cl_lo, st.n_cl_hi, st.n_mu, st.n_p_lo, st.n_p_hi,
             st.min_cl, st.max_cl, st.max_mu_abs, 0),
        )
    p_prev = k1[6]
    if recording:
        rec[0, 0] = t0_bar
        rec[0, 1] = v
        rec[0, 2] = psi
        rec[0, 3] = gamma
        rec[0, 4] = x
        rec[0, 5] = y
        rec[0, 6] = h
        rec[0, 7] = k1[6]
        rec[0, 8] = k1[7]
        rec[0, 9] = k1[8]

    for i in range(n_steps):
        if not _evaluate(v + half * k1[0], psi + half * k1[1],
                         gamma + half * k1[2], x + half * k1[3],
                         y + half * k1[4], &m, &st, e2):
            guard_step = i
            break
        if not _evaluate(v + half * e2[0], psi + half * e2[1],
                         gamma + half * e2[2], x + half * e2[3],
                         y + half * e2[4], &m, &st, e3):
            guard_step = i
            break
        if not _evaluate(v + h_step * e3[0], psi + h_step * e3[1],
                         gamma + h_step * e3[2], x + h_step * e3[3],
                         y + h_step * e3[4], &m, &st, e4):
            guard_step = i
            break
        v += sixth * (k1[0] + 2.0 * (e2[0] + e3[0]) + e4[0])
        psi += sixth * (k1[1] + 2.0 * (e2[1] + e3[1]) + e4[1])
        gamma += sixth * (k1[2] + 2.0 * (e2[2] + e3[2]) + e4[2])
        x += sixth * (k1[3] + 2.0 * (e2[3] + e3[3]) + e4[3])
        y += sixth * (k1[4] + 2.0 * (e2[4] + e3[4]) + e4[4])
        h += sixth * (k1[5] + 2.0 * (e2[5] + e3[5]) + e4[5])
        psi = fmod(psi, TWO_PI)
        if psi < 0.0:
            psi += TWO_PI

        if not _evaluate(v, psi, gamma, x, y, &m, &st, k1):
            guard_step = i
            break
        integral += half * (p_prev + k1[6])
        p_prev = k1[6]
        if recording:
            rec[i + 1, 0] = t0_bar + (i + 1) * h_step
            rec[i + 1, 1] = v
            rec[i + 1, 2] = psi
            rec[i + 1, 3] = gamma
            rec[i + 1, 4] = x
            rec[i + 1, 5] = y
            rec[i + 1, 6] = h
            rec[i + 1, 7] = k1[6]
            rec[i + 1, 8] = k1[7]
            rec[i + 1, 9] = k1[8]

    return (
        (v, psi, gamma, x, y, h),
        integral,
        (st.n_cl_lo, st.n_cl_hi, st.n_mu, st.n_p_lo, st.n_p_hi,
         st.min_cl, st.max_cl, st.max_mu_abs, guard_step),
    )
