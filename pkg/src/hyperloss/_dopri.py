"""Dormand-Prince 5(4) integrator for one mode ``u'' + c(t) rho^2 u = 0``.

The state is scaled as ``y1 = rho * u``, ``y2 = u'`` so that

    y1' = rho * y2,    y2' = -c(t) * rho * y1,

and the mode energy ``rho^2 u^2 + u'^2`` is simply ``y1^2 + y2^2``.

The driver is compiled with numba.  The coefficient is passed in as a
compiled scalar kernel ``ckern(t, cargs)``; for a plain Python callable the
uncompiled ``py_func`` of the driver is used instead (slow, but exact same
arithmetic).
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

# status codes
OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2
NONFINITE = 3

# Per-step error floor.  Below about this many ulps the embedded estimate is
# roundoff noise, so a step whose estimate sits under the floor is accepted
# even when ``tol * h`` is smaller still (high frequencies at tight tol).
ROUNDOFF_FLOOR = 32 * 2.220446049250313e-16

# stats slots
S_ACCEPTED, S_REJECTED, S_LAST_T, S_STATUS, S_MAX_ERR, S_EVALS = range(6)


@njit(nogil=True, cache=True)
def integrate(ckern, cargs, rho, t0, y10, y20, t_report, tol, hmax, h0,
              fixed_step, max_steps):
    """Integrate from ``t0`` through the monotone sequence ``t_report``.

    Steps are clipped so every report time is hit exactly.  With
    ``fixed_step`` the step is ``h0`` throughout (clipped at report times)
    and no error control is applied.  Error control is per unit step: a
    step of length ``h`` is accepted when its embedded error estimate is at
    most ``max(tol * |h|, ROUNDOFF_FLOOR) * max(|y_old|, |y_new|)``.

    Returns ``(Y, stats)`` with ``Y[i] = (y1, y2)`` at ``t_report[i]``.
    """
    n = t_report.shape[0]
    Y = np.full((n, 2), np.nan)
    stats = np.zeros(6)
    if n == 0:
        stats[S_LAST_T] = t0
        return Y, stats
    direction = 1.0 if t_report[n - 1] >= t0 else -1.0
    hmax = abs(hmax)
    h = min(abs(h0), hmax) * direction
    t = t0
    y1 = y10
    y2 = y20
    c = ckern(t, cargs)
    k1a = rho * y2
    k1b = -c * rho * y1
    evals = 1
    errold = 1e-4
    accepted = 0
    rejected = 0
    max_err = 0.0
    status = OK
    idx = 0
    while idx < n and (t_report[idx] - t) * direction <= 0.0:
        Y[idx, 0] = y1
        Y[idx, 1] = y2
        idx += 1
    while idx < n:
        if accepted + rejected >= max_steps:
            status = MAX_STEPS
            break
        target = t_report[idx]
        hstep = h
        clipped = False
        if (t + hstep - target) * direction >= 0.0:
            hstep = target - t
            clipped = True
        if abs(hstep) < 1e-15 * max(abs(t), 1e-300) and not clipped:
            status = STEP_UNDERFLOW
            break

        c = ckern(t + C2 * hstep, cargs)
        ya = y1 + hstep * A21 * k1a
        yb = y2 + hstep * A21 * k1b
        k2a = rho * yb
        k2b = -c * rho * ya
        c = ckern(t + C3 * hstep, cargs)
        ya = y1 + hstep * (A31 * k1a + A32 * k2a)
        yb = y2 + hstep * (A31 * k1b + A32 * k2b)
        k3a = rho * yb
        k3b = -c * rho * ya
        c = ckern(t + C4 * hstep, cargs)
        ya = y1 + hstep * (A41 * k1a + A42 * k2a + A43 * k3a)
        yb = y2 + hstep * (A41 * k1b + A42 * k2b + A43 * k3b)
        k4a = rho * yb
        k4b = -c * rho * ya
        c = ckern(t + C5 * hstep, cargs)
        ya = y1 + hstep * (A51 * k1a + A52 * k2a + A53 * k3a + A54 * k4a)
        yb = y2 + hstep * (A51 * k1b + A52 * k2b + A53 * k3b + A54 * k4b)
        k5a = rho * yb
        k5b = -c * rho * ya
        tn = target if clipped else t + hstep
        c = ckern(tn, cargs)
        ya = y1 + hstep * (A61 * k1a + A62 * k2a + A63 * k3a + A64 * k4a + A65 * k5a)
        yb = y2 + hstep * (A61 * k1b + A62 * k2b + A63 * k3b + A64 * k4b + A65 * k5b)
        k6a = rho * yb
        k6b = -c * rho * ya
        n1 = y1 + hstep * (B1 * k1a + B3 * k3a + B4 * k4a + B5 * k5a + B6 * k6a)
        n2 = y2 + hstep * (B1 * k1b + B3 * k3b + B4 * k4b + B5 * k5b + B6 * k6b)
        k7a = rho * n2
        k7b = -c * rho * n1
        evals += 6

        if not (math.isfinite(n1) and math.isfinite(n2)):
            status = NONFINITE
            break

        if fixed_step:
            err = 0.0
        else:
            ea = hstep * (E1 * k1a + E3 * k3a + E4 * k4a + E5 * k5a + E6 * k6a + E7 * k7a)
            eb = hstep * (E1 * k1b + E3 * k3b + E4 * k4b + E5 * k5b + E6 * k6b + E7 * k7b)
            scale = max(tol * abs(hstep), ROUNDOFF_FLOOR) * max(
                math.sqrt(y1 * y1 + y2 * y2), math.sqrt(n1 * n1 + n2 * n2))
            err = math.sqrt(ea * ea + eb * eb) / max(scale, 1e-300)

        if err <= 1.0:
            accepted += 1
            if err > max_err:
                max_err = err
            t = tn
            y1 = n1
            y2 = n2
            k1a = k7a
            k1b = k7b
            if not fixed_step:
                fac = 0.9 * max(err, 1e-10) ** -0.17 * errold ** 0.08
                fac = min(5.0, max(0.2, fac))
                hnew = abs(hstep) * fac
                if clipped:
                    # a clipped step says nothing new about the attainable step
                    hnew = max(hnew, abs(h))
                h = min(hnew, hmax) * direction
                errold = max(err, 1e-4)
            while idx < n and (t_report[idx] - t) * direction <= 0.0:
                Y[idx, 0] = y1
                Y[idx, 1] = y2
                idx += 1
        else:
            rejected += 1
            h = hstep * max(0.2, 0.9 * err ** -0.2)

    stats[S_ACCEPTED] = accepted
    stats[S_REJECTED] = rejected
    stats[S_LAST_T] = t
    stats[S_STATUS] = status
    stats[S_MAX_ERR] = max_err * tol
    stats[S_EVALS] = evals
    return Y, stats


def run(ckern, cargs, rho, t0, y0, t_report, tol, hmax, h0, fixed_step=False,
        max_steps=10**10):
    """Dispatch to the compiled driver, or its Python body for plain callables."""
    t_report = np.ascontiguousarray(t_report, dtype=float)
    cargs = np.ascontiguousarray(cargs, dtype=float)
    fn = integrate if hasattr(ckern, "py_func") else integrate.py_func
    return fn(ckern, cargs, float(rho), float(t0), float(y0[0]), float(y0[1]), t_report,
              float(tol), float(hmax), float(h0), bool(fixed_step), int(max_steps))
