"""Inner integration loop of the planar quadruped.

Kept free of Python objects so it can be compiled with numba when
available (set PMTG_PURE_PYTHON=1 to force the interpreted fallback).
Both paths run the same source, so numerics are identical per build.

State vector layout (float64, length 31):
    0:x  1:z  2:pitch  3:xd  4:zd  5:pitch_rate  6:sim_time
    7..10  swing joint positions (rad)      11..14 extension joint positions
    15..18 previous foot x                  19..22 previous foot z
    23..26 friction anchor x                27..30 contact flag (0/1)

Parameter vector layout (float64, length 18):
    0:mass 1:inertia 2:leg_length 3:extension_gain 4:extension_reference
    5..8:hip offsets 9:k_normal 10:c_normal 11:k_tangent 12:c_tangent
    13:friction 14:gravity 15:dt 16:servo_rate 17:min_leg_length
"""

from __future__ import annotations

import math
import os

STATE_SIZE = 31
PARAM_SIZE = 18

I_X, I_Z, I_PITCH, I_XD, I_ZD, I_PITCHD, I_TIME = 0, 1, 2, 3, 4, 5, 6
I_S, I_E, I_PFX, I_PFZ, I_ANCHOR, I_CONTACT = 7, 11, 15, 19, 23, 27


def _step_physics(state, params, s_targets, e_targets, fx_ext, fz_ext, n_sub, forces_out):
    """Advance `n_sub` substeps with semi-implicit Euler; returns a status code.

    0: ok. 2: a commanded leg length dropped to or below the minimum
    (configuration inconsistency). forces_out[leg] holds the (normal,
    tangential) contact force of the last substep.
    """
    mass = params[0]
    inertia = params[1]
    l0 = params[2]
    ce = params[3]
    eref = params[4]
    kn = params[9]
    cn = params[10]
    kt = params[11]
    ct = params[12]
    mu = params[13]
    g = params[14]
    dt = params[15]
    max_step = params[16] * dt
    min_len = params[17]

    for _ in range(n_sub):
        x = state[0]
        z = state[1]
        th = state[2]
        xd = state[3]
        zd = state[4]
        thd = state[5]

        for i in range(4):
            ds = s_targets[i] - state[7 + i]
            if ds > max_step:
                ds = max_step
            elif ds < -max_step:
                ds = -max_step
            state[7 + i] += ds
            de = e_targets[i] - state[11 + i]
            if de > max_step:
                de = max_step
            elif de < -max_step:
                de = -max_step
            state[11 + i] += de

        cth = math.cos(th)
        sth = math.sin(th)
        fx_tot = fx_ext
        fz_tot = fz_ext - mass * g
        tau = 0.0
        for i in range(4):
            leg = l0 + ce * (eref - state[11 + i])
            if leg <= min_len:
                return 2
            s_i = state[7 + i]
            bx = params[5 + i] + leg * math.sin(s_i)
            bz = -leg * math.cos(s_i)
            foot_x = x + cth * bx - sth * bz
            foot_z = z + sth * bx + cth * bz
            vfx = (foot_x - state[15 + i]) / dt
            vfz = (foot_z - state[19 + i]) / dt
            state[15 + i] = foot_x
            state[19 + i] = foot_z

            fn = 0.0
            ft = 0.0
            if foot_z < 0.0:
                fn = -kn * foot_z - cn * vfz
                if fn < 0.0:
                    fn = 0.0
                if state[27 + i] == 0.0:
                    state[23 + i] = foot_x
                    state[27 + i] = 1.0
                if kt > 0.0:
                    ft = -kt * (foot_x - state[23 + i]) - ct * vfx
                    lim = mu * fn
                    if ft > lim:
                        ft = lim
                        state[23 + i] = foot_x + (ft + ct * vfx) / kt
                    elif ft < -lim:
                        ft = -lim
                        state[23 + i] = foot_x + (ft + ct * vfx) / kt
                else:
                    ft = -ct * vfx
                    lim = mu * fn
                    if ft > lim:
                        ft = lim
                    elif ft < -lim:
                        ft = -lim
            else:
                state[27 + i] = 0.0
            forces_out[i, 0] = fn
            forces_out[i, 1] = ft

            fx_tot += ft
            fz_tot += fn
            # reaction applied to the body at the hip point
            tau += cth * params[5 + i] * fn - sth * params[5 + i] * ft

        xd += fx_tot / mass * dt
        zd += fz_tot / mass * dt
        thd += tau / inertia * dt
        state[0] = x + xd * dt
        state[1] = z + zd * dt
        state[2] = th + thd * dt
        state[3] = xd
        state[4] = zd
        state[5] = thd
        state[6] += dt
    return 0


if os.environ.get("PMTG_PURE_PYTHON"):
    step_physics = _step_physics
    JIT_ENABLED = False
else:
    try:
        from numba import njit

        step_physics = njit(cache=True)(_step_physics)
        JIT_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        step_physics = _step_physics
        JIT_ENABLED = False
