"""Compiled integration kernels.

Everything in here is numba-jitted and operates on plain float64 arrays: an
embedded Dormand-Prince 5(4) stepper (FSAL) with a PI step-size controller,
the free 4th-order dense interpolant, bracketed false-position/bisection event
refinement, and a tangent-frame driver for finite-time Lyapunov exponents.

The vector field is compiled in (selected by an integer code) so that whole
sweeps run without returning to Python:

    RHS_FLOW     : the 3-d Lorenz-like flow
    RHS_VAR      : the 12-d joint flow + three tangent columns
    RHS_FLOW_REV : the time-reversed 3-d flow (for reversibility checks)
"""

import math

import numpy as np
from numba import njit

RHS_FLOW = 0
RHS_VAR = 1
RHS_FLOW_REV = 2

EV_SPHERE = 0
EV_PLANE = 1

DIR_ANY = 0
DIR_RISING = 1
DIR_FALLING = -1

STATUS_TIME = 0
STATUS_EVENT = 1
STATUS_UNDERFLOW = 2
STATUS_NONFINITE = 3
STATUS_MAXSTEPS = 4
STATUS_ESCAPE = 5

# Dormand-Prince 5(4) tableau and the standard free quartic interpolant.
_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1.0 / 5.0
_A[2, :2] = (3.0 / 40.0, 9.0 / 40.0)
_A[3, :3] = (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0)
_A[4, :4] = (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0)
_A[5, :5] = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0)
_B = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0])
_E = np.array(
    [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ]
)
_P = np.array(
    [
        [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
        [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
        [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
        [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
        [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
    ]
)

_SAFETY = 0.9
_BETA_PI = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA_PI
_FAC_MIN = 0.2
_FAC_MAX = 10.0


@njit(cache=True, nogil=True)
def _eval_rhs(code, lam, alpha, beta, y, out):
    x = y[0]
    v = y[1]
    u = y[2]
    fx = v
    fv = -lam * v - x * u + x - x * x * x
    fu = -alpha * u - beta * x * v
    if code == 2:
        out[0] = -fx
        out[1] = -fv
        out[2] = -fu
        return
    out[0] = fx
    out[1] = fv
    out[2] = fu
    if code == 1:
        j10 = 1.0 - u - 3.0 * x * x
        for k in range(3):
            o = 3 + 3 * k
            a = y[o]
            b = y[o + 1]
            c = y[o + 2]
            out[o] = b
            out[o + 1] = j10 * a - lam * b - x * c
            out[o + 2] = -beta * v * a - beta * x * b - alpha * c
    return


@njit(cache=True, nogil=True)
def _error_norm(e, y_old, y_new, rtol, atol):
    dim = e.shape[0]
    acc = 0.0
    for i in range(dim):
        ay = abs(y_old[i])
        by = abs(y_new[i])
        sc = atol + rtol * (ay if ay > by else by)
        q = e[i] / sc
        acc += q * q
    return math.sqrt(acc / dim)


@njit(cache=True, nogil=True)
def _try_step(code, lam, alpha, beta, y, f0, h, K, y_stage, y_new):
    """One trial step of size h.  Fills K (7, dim) and y_new; returns the
    unscaled error vector implicitly via K and the 5th-order solution in
    y_new; the caller computes the error norm."""
    dim = y.shape[0]
    for i in range(dim):
        K[0, i] = f0[i]
    for s in range(1, 6):
        for i in range(dim):
            acc = 0.0
            for j in range(s):
                acc += _A[s, j] * K[j, i]
            y_stage[i] = y[i] + h * acc
        _eval_rhs(code, lam, alpha, beta, y_stage, K[s])
    for i in range(dim):
        acc = 0.0
        for j in range(6):
            acc += _B[j] * K[j, i]
        y_new[i] = y[i] + h * acc
    _eval_rhs(code, lam, alpha, beta, y_new, K[6])


@njit(cache=True, nogil=True)
def _step_error(K, h, y, y_new, rtol, atol, e_work):
    dim = y.shape[0]
    for i in range(dim):
        acc = 0.0
        for j in range(7):
            acc += _E[j] * K[j, i]
        e_work[i] = h * acc
    return _error_norm(e_work, y, y_new, rtol, atol)


@njit(cache=True, nogil=True)
def _dense_Q(K, Q):
    dim = Q.shape[0]
    for i in range(dim):
        for c in range(4):
            acc = 0.0
            for s in range(7):
                acc += K[s, i] * _P[s, c]
            Q[i, c] = acc


@njit(cache=True, nogil=True)
def _dense_eval_into(y0, h, Q, theta, out):
    t1 = theta
    t2 = t1 * theta
    t3 = t2 * theta
    t4 = t3 * theta
    for i in range(y0.shape[0]):
        out[i] = y0[i] + h * (Q[i, 0] * t1 + Q[i, 1] * t2 + Q[i, 2] * t3 + Q[i, 3] * t4)


@njit(cache=True, nogil=True)
def _initial_step(code, lam, alpha, beta, y0, f0, t_span, rtol, atol, max_step):
    dim = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y0[i])
        q0 = y0[i] / sc
        q1 = f0[i] / sc
        d0 += q0 * q0
        d1 += q1 * q1
    d0 = math.sqrt(d0 / dim)
    d1 = math.sqrt(d1 / dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = np.empty(dim)
    f1 = np.empty(dim)
    for i in range(dim):
        y1[i] = y0[i] + h0 * f0[i]
    _eval_rhs(code, lam, alpha, beta, y1, f1)
    d2 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y0[i])
        q = (f1[i] - f0[i]) / sc
        d2 += q * q
    d2 = math.sqrt(d2 / dim) / h0
    dm = d1 if d1 > d2 else d2
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h = min(100.0 * h0, h1)
    if h > max_step:
        h = max_step
    if h > t_span:
        h = t_span
    return h


@njit(cache=True, nogil=True)
def _event_value(kind, par, y):
    if kind == 0:  # sphere: |y - c| - R
        dx = y[0] - par[0]
        dy = y[1] - par[1]
        du = y[2] - par[2]
        return math.sqrt(dx * dx + dy * dy + du * du) - par[3]
    # plane: n . y - c
    return par[0] * y[0] + par[1] * y[1] + par[2] * y[2] - par[3]


@njit(cache=True, nogil=True)
def _event_root(kind, par, y0, h, Q, ga_in, gb_in, tol_t, y_work):
    """Locate the sign change of the event function over one step on the
    dense interpolant.  False position with Illinois weighting, clamped to
    the midpoint when the secant point leaves the bracket.  Returns theta."""
    a = 0.0
    b = 1.0
    ga = ga_in
    gb = gb_in
    true_ga = ga_in
    true_gb = gb_in
    tol_theta = tol_t / h if h > tol_t else 1.0e-15
    side = 0
    for _ in range(120):
        if (b - a) <= tol_theta:
            break
        denom = gb - ga
        if denom != 0.0:
            c = (a * gb - b * ga) / denom
        else:
            c = 0.5 * (a + b)
        if c <= a or c >= b or not math.isfinite(c):
            c = 0.5 * (a + b)
        _dense_eval_into(y0, h, Q, c, y_work)
        gc = _event_value(kind, par, y_work)
        if gc == 0.0:
            return c
        if (gc > 0.0) == (true_gb > 0.0):
            b = c
            gb = gc
            true_gb = gc
            if side == -1:
                ga *= 0.5
            side = -1
        else:
            a = c
            ga = gc
            true_ga = gc
            if side == 1:
                gb *= 0.5
            side = 1
    if abs(true_ga) < abs(true_gb):
        return a
    return b


@njit(cache=True, nogil=True)
def _grow2(arr, dim):
    out = np.empty((arr.shape[0] * 2, dim))
    for i in range(arr.shape[0]):
        for j in range(dim):
            out[i, j] = arr[i, j]
    return out


@njit(cache=True, nogil=True)
def _grow1(arr):
    out = np.empty(arr.shape[0] * 2)
    for i in range(arr.shape[0]):
        out[i] = arr[i]
    return out


@njit(cache=True, nogil=True)
def _grow1i(arr):
    out = np.empty(arr.shape[0] * 2, dtype=np.int64)
    for i in range(arr.shape[0]):
        out[i] = arr[i]
    return out


@njit(cache=True, nogil=True)
def _grow3(arr, dim):
    out = np.empty((arr.shape[0] * 2, dim, 4))
    for i in range(arr.shape[0]):
        for j in range(dim):
            for c in range(4):
                out[i, j, c] = arr[i, j, c]
    return out


@njit(cache=True, nogil=True)
def drive(
    code,
    lam,
    alpha,
    beta,
    y0,
    t_end,
    rtol,
    atol,
    max_step,
    h0,
    ev_kind,
    ev_dir,
    ev_term,
    ev_par,
    store_mode,
    max_steps,
    event_tol_t,
):
    """Integrate the compiled vector field on [0, t_end] with event location.

    store_mode: 0 keep first/last node only, 1 keep all nodes, 2 keep nodes
    plus dense coefficients.  Returns
    (status, ts, ys, d_t0, d_h, d_y0, d_Q, ev_t, ev_y, ev_id, n_accept,
     n_reject, h_last).
    """
    dim = y0.shape[0]
    m = ev_kind.shape[0]

    K = np.empty((7, dim))
    y_stage = np.empty(dim)
    y_new = np.empty(dim)
    e_work = np.empty(dim)
    y_ev = np.empty(dim)
    Q = np.empty((dim, 4))
    f0 = np.empty(dim)

    y = y0.copy()
    t = 0.0
    _eval_rhs(code, lam, alpha, beta, y, f0)

    cap = 4096 if store_mode >= 1 else 2
    ts = np.empty(cap)
    ys = np.empty((cap, dim))
    n_nodes = 0
    ts[0] = 0.0
    for i in range(dim):
        ys[0, i] = y[i]
    n_nodes = 1

    store_dense = store_mode == 2
    dcap = 4096 if store_dense else 1
    d_t0 = np.empty(dcap)
    d_h = np.empty(dcap)
    d_y0 = np.empty((dcap, dim))
    d_Q = np.empty((dcap, dim, 4))
    n_dense = 0

    ecap = 64
    ev_t = np.empty(ecap)
    ev_y = np.empty((ecap, dim))
    ev_id = np.empty(ecap, dtype=np.int64)
    n_ev = 0

    g_prev = np.empty(m)
    armed = np.empty(m, dtype=np.int64)
    for i in range(m):
        g_prev[i] = _event_value(ev_kind[i], ev_par[i], y)
        armed[i] = 1 if g_prev[i] != 0.0 else 0

    cand_t = np.empty(m)
    cand_i = np.empty(m, dtype=np.int64)
    cand_th = np.empty(m)

    if h0 > 0.0:
        h = min(h0, max_step, t_end)
    else:
        h = _initial_step(code, lam, alpha, beta, y, f0, t_end, rtol, atol, max_step)
    facold = 1e-4
    status = STATUS_TIME
    n_accept = 0
    n_reject = 0
    just_rejected = False

    while t < t_end:
        hmin = 16.0 * 2.220446049250313e-16 * max(abs(t), 1.0)
        if h < hmin:
            status = STATUS_UNDERFLOW
            break
        if n_accept + n_reject >= max_steps:
            status = STATUS_MAXSTEPS
            break
        last = False
        h_step = h
        if t + h_step >= t_end:
            h_step = t_end - t
            last = True
        _try_step(code, lam, alpha, beta, y, f0, h_step, K, y_stage, y_new)
        err = _step_error(K, h_step, y, y_new, rtol, atol, e_work)
        finite = True
        for i in range(dim):
            if not math.isfinite(y_new[i]):
                finite = False
                break
        if not math.isfinite(err):
            finite = False
        if not finite:
            n_reject += 1
            just_rejected = True
            h = 0.5 * h_step
            if h < hmin:
                status = STATUS_NONFINITE
                break
            continue
        if err > 1.0:
            n_reject += 1
            just_rejected = True
            fac = _SAFETY * err ** (-0.2)
            if fac < 0.1:
                fac = 0.1
            if fac > 1.0:
                fac = 1.0
            h = h_step * fac
            continue

        # accepted
        n_accept += 1
        t_new = t_end if last else t + h_step

        need_q = store_dense or m > 0
        if need_q:
            _dense_Q(K, Q)

        if store_dense:
            if n_dense >= dcap:
                d_t0 = _grow1(d_t0)
                d_h = _grow1(d_h)
                d_y0 = _grow2(d_y0, dim)
                d_Q = _grow3(d_Q, dim)
                dcap *= 2
            d_t0[n_dense] = t
            d_h[n_dense] = h_step
            for i in range(dim):
                d_y0[n_dense, i] = y[i]
                for c in range(4):
                    d_Q[n_dense, i, c] = Q[i, c]
            n_dense += 1

        # events
        n_cand = 0
        terminal_hit = False
        for i in range(m):
            g_new = _event_value(ev_kind[i], ev_par[i], y_new)
            crossing = False
            if armed[i] == 1:
                d = ev_dir[i]
                if d >= 0 and g_prev[i] < 0.0 and g_new >= 0.0:
                    crossing = True
                elif d <= 0 and g_prev[i] > 0.0 and g_new <= 0.0:
                    crossing = True
            if crossing:
                if g_new == 0.0:
                    theta = 1.0
                else:
                    theta = _event_root(
                        ev_kind[i], ev_par[i], y, h_step, Q, g_prev[i], g_new, event_tol_t, y_ev
                    )
                cand_t[n_cand] = t + theta * h_step
                cand_i[n_cand] = i
                cand_th[n_cand] = theta
                n_cand += 1
            g_prev[i] = g_new
            armed[i] = 1 if g_new != 0.0 else 0

        if n_cand > 0:
            # insertion sort by (time, event index)
            for a_ in range(1, n_cand):
                tt = cand_t[a_]
                ii = cand_i[a_]
                th = cand_th[a_]
                b_ = a_ - 1
                while b_ >= 0 and (
                    cand_t[b_] > tt or (cand_t[b_] == tt and cand_i[b_] > ii)
                ):
                    cand_t[b_ + 1] = cand_t[b_]
                    cand_i[b_ + 1] = cand_i[b_]
                    cand_th[b_ + 1] = cand_th[b_]
                    b_ -= 1
                cand_t[b_ + 1] = tt
                cand_i[b_ + 1] = ii
                cand_th[b_ + 1] = th
            for k in range(n_cand):
                i = cand_i[k]
                theta = cand_th[k]
                if theta >= 1.0:
                    for q_ in range(dim):
                        y_ev[q_] = y_new[q_]
                else:
                    _dense_eval_into(y, h_step, Q, theta, y_ev)
                if n_ev >= ecap:
                    ev_t = _grow1(ev_t)
                    ev_y = _grow2(ev_y, dim)
                    ev_id = _grow1i(ev_id)
                    ecap *= 2
                ev_t[n_ev] = cand_t[k]
                for q_ in range(dim):
                    ev_y[n_ev, q_] = y_ev[q_]
                ev_id[n_ev] = i
                n_ev += 1
                if ev_term[i] == 1:
                    terminal_hit = True
                    # truncate at the event
                    t_new = cand_t[k]
                    for q_ in range(dim):
                        y_new[q_] = y_ev[q_]
                    break

        # append node
        if store_mode >= 1:
            if n_nodes >= cap:
                ts = _grow1(ts)
                ys = _grow2(ys, dim)
                cap *= 2
            ts[n_nodes] = t_new
            for i in range(dim):
                ys[n_nodes, i] = y_new[i]
            n_nodes += 1
        else:
            ts[1] = t_new
            for i in range(dim):
                ys[1, i] = y_new[i]
            n_nodes = 2

        if terminal_hit:
            status = STATUS_EVENT
            break

        # step-size controller (PI); a step clipped to land on t_end keeps
        # the working size so the controller state is not polluted
        if not last:
            if err == 0.0:
                fac = _FAC_MAX
            else:
                fac = _SAFETY * err ** (-_EXPO1) * facold ** _BETA_PI
                if fac < _FAC_MIN:
                    fac = _FAC_MIN
                if fac > _FAC_MAX:
                    fac = _FAC_MAX
            if just_rejected and fac > 1.0:
                fac = 1.0
            facold = err if err > 1e-4 else 1e-4
            h = h_step * fac
            if h > max_step:
                h = max_step
        just_rejected = False

        t = t_new
        for i in range(dim):
            y[i] = y_new[i]
            f0[i] = K[6, i]
        if t >= t_end:
            break

    return (
        status,
        ts[:n_nodes].copy(),
        ys[:n_nodes].copy(),
        d_t0[:n_dense].copy(),
        d_h[:n_dense].copy(),
        d_y0[:n_dense].copy(),
        d_Q[:n_dense].copy(),
        ev_t[:n_ev].copy(),
        ev_y[:n_ev].copy(),
        ev_id[:n_ev].copy(),
        n_accept,
        n_reject,
        h,
    )


@njit(cache=True, nogil=True)
def step_once(code, lam, alpha, beta, y, f0, h, rtol, atol):
    """Single trial step for the Python-level reference loop.  Returns
    (err, y_new, f_new, Q)."""
    dim = y.shape[0]
    K = np.empty((7, dim))
    y_stage = np.empty(dim)
    y_new = np.empty(dim)
    e_work = np.empty(dim)
    _try_step(code, lam, alpha, beta, y, f0, h, K, y_stage, y_new)
    err = _step_error(K, h, y, y_new, rtol, atol, e_work)
    Q = np.empty((dim, 4))
    _dense_Q(K, Q)
    f_new = K[6].copy()
    return err, y_new, f_new, Q


@njit(cache=True, nogil=True)
def rhs_eval(code, lam, alpha, beta, y):
    out = np.empty(y.shape[0])
    _eval_rhs(code, lam, alpha, beta, y, out)
    return out


@njit(cache=True, nogil=True)
def initial_step(code, lam, alpha, beta, y0, t_span, rtol, atol, max_step):
    f0 = np.empty(y0.shape[0])
    _eval_rhs(code, lam, alpha, beta, y0, f0)
    return _initial_step(code, lam, alpha, beta, y0, f0, t_span, rtol, atol, max_step)


@njit(cache=True, nogil=True)
def dense_eval_single(y0, h, Q, theta):
    out = np.empty(y0.shape[0])
    _dense_eval_into(y0, h, Q, theta, out)
    return out


@njit(cache=True, nogil=True)
def drive_ftle(lam, alpha, beta, y0, t_end, reorth_dt, rtol, atol, max_step, r_inf, max_steps, burn_t):
    """Joint 12-d flow/tangent integration with modified Gram-Schmidt
    re-orthonormalization every reorth_dt time units.

    y0 is the 12-vector (state, then three tangent columns).  Growth factors
    accumulate only at boundaries past burn_t, so the tangent frame can align
    before measurement starts.  Returns (status, sums, t_reached, y_final,
    n_reorth) where sums are the accumulated log norms of the three tangent
    directions.
    """
    dim = 12
    K = np.empty((7, dim))
    y_stage = np.empty(dim)
    y_new = np.empty(dim)
    e_work = np.empty(dim)
    f0 = np.empty(dim)

    y = y0.copy()
    t = 0.0
    _eval_rhs(RHS_VAR, lam, alpha, beta, y, f0)
    sums = np.zeros(3)
    n_reorth = 0
    r2_limit = r_inf * r_inf

    h = _initial_step(RHS_VAR, lam, alpha, beta, y, f0, t_end, rtol, atol, max_step)
    facold = 1e-4
    status = STATUS_TIME
    n_accept = 0
    n_reject = 0
    just_rejected = False

    n_bounds = int(math.ceil(t_end / reorth_dt))
    k_bound = 1
    t_bound = reorth_dt if reorth_dt < t_end else t_end

    while t < t_end:
        hmin = 16.0 * 2.220446049250313e-16 * max(abs(t), 1.0)
        if h < hmin:
            status = STATUS_UNDERFLOW
            break
        if n_accept + n_reject >= max_steps:
            status = STATUS_MAXSTEPS
            break
        last = False
        h_step = h
        if t + h_step >= t_bound:
            h_step = t_bound - t
            last = True
        _try_step(RHS_VAR, lam, alpha, beta, y, f0, h_step, K, y_stage, y_new)
        err = _step_error(K, h_step, y, y_new, rtol, atol, e_work)
        finite = True
        for i in range(dim):
            if not math.isfinite(y_new[i]):
                finite = False
                break
        if not math.isfinite(err):
            finite = False
        if not finite:
            n_reject += 1
            just_rejected = True
            h = 0.5 * h_step
            if h < hmin:
                status = STATUS_NONFINITE
                break
            continue
        if err > 1.0:
            n_reject += 1
            just_rejected = True
            fac = _SAFETY * err ** (-0.2)
            if fac < 0.1:
                fac = 0.1
            if fac > 1.0:
                fac = 1.0
            h = h_step * fac
            continue

        n_accept += 1
        t_new = t_bound if last else t + h_step

        # steps clipped to a re-orthonormalization boundary keep the working
        # step size; otherwise standard PI update
        if not last:
            if err == 0.0:
                fac = _FAC_MAX
            else:
                fac = _SAFETY * err ** (-_EXPO1) * facold ** _BETA_PI
                if fac < _FAC_MIN:
                    fac = _FAC_MIN
                if fac > _FAC_MAX:
                    fac = _FAC_MAX
            if just_rejected and fac > 1.0:
                fac = 1.0
            facold = err if err > 1e-4 else 1e-4
            h = h_step * fac
            if h > max_step:
                h = max_step
        just_rejected = False

        t = t_new
        for i in range(dim):
            y[i] = y_new[i]
            f0[i] = K[6, i]

        if y[0] * y[0] + y[1] * y[1] + y[2] * y[2] > r2_limit:
            status = STATUS_ESCAPE
            break

        if last:
            # modified Gram-Schmidt on the three tangent columns
            ok = True
            for col in range(3):
                o = 3 + 3 * col
                for prev in range(col):
                    po = 3 + 3 * prev
                    dot = y[o] * y[po] + y[o + 1] * y[po + 1] + y[o + 2] * y[po + 2]
                    y[o] -= dot * y[po]
                    y[o + 1] -= dot * y[po + 1]
                    y[o + 2] -= dot * y[po + 2]
                r = math.sqrt(y[o] * y[o] + y[o + 1] * y[o + 1] + y[o + 2] * y[o + 2])
                if r <= 0.0 or not math.isfinite(r):
                    ok = False
                    break
                inv = 1.0 / r
                y[o] *= inv
                y[o + 1] *= inv
                y[o + 2] *= inv
                if t > burn_t:
                    sums[col] += math.log(r)
            if not ok:
                status = STATUS_NONFINITE
                break
            n_reorth += 1
            _eval_rhs(RHS_VAR, lam, alpha, beta, y, f0)
            if k_bound >= n_bounds:
                break
            k_bound += 1
            t_bound = k_bound * reorth_dt
            if t_bound > t_end:
                t_bound = t_end

    return status, sums, t, y, n_reorth
