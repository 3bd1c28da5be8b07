"""Compiled inner loops.

Everything here works on plain floats and preallocated arrays; the public
modules wrap these with validation, chunking and RNG handling.
"""

import math

import numba as nb
import numpy as np

from .model import friction_term

_friction = nb.njit(cache=True, inline="always")(friction_term)


@nb.njit(cache=True, inline="always")
def _accel(q, v, alpha):
    return -q + _friction(q, v, alpha)


@nb.njit(cache=True)
def rk4(q, v, alpha, h):
    """One classical RK4 step of ``q' = v, v' = -q + friction``."""
    k1q = v
    k1v = _accel(q, v, alpha)
    q2 = q + 0.5 * h * k1q
    v2 = v + 0.5 * h * k1v
    k2q = v2
    k2v = _accel(q2, v2, alpha)
    q3 = q + 0.5 * h * k2q
    v3 = v + 0.5 * h * k2v
    k3q = v3
    k3v = _accel(q3, v3, alpha)
    q4 = q + h * k3q
    v4 = v + h * k3v
    k4q = v4
    k4v = _accel(q4, v4, alpha)
    qn = q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return qn, vn


@nb.njit(cache=True)
def rk4_chunk(q, v, alpha, h, kicks, out_q, out_v):
    """Advance ``len(out_q)`` steps, storing the state after every step.

    ``kicks`` is either empty or holds one velocity increment per step.
    Returns the final ``(q, v)`` and the index of the first non-finite step
    (-1 if none); on failure the outputs past that index are garbage.
    """
    n = out_q.shape[0]
    noisy = kicks.shape[0] > 0
    for i in range(n):
        q, v = rk4(q, v, alpha, h)
        if noisy:
            v += kicks[i]
        if not (math.isfinite(q) and math.isfinite(v)):
            return q, v, i
        out_q[i] = q
        out_v[i] = v
    return q, v, -1


@nb.njit(cache=True, inline="always")
def _leak(t, kind, rate):
    # 1 - zeta(t): fraction of the radiated power the electron misses
    if kind == 0:
        return 0.0
    return -math.expm1(-rate * t)


@nb.njit(cache=True)
def rk4_coupled(q, v, lost, t, alpha, h, kind, rate):
    """RK4 step of the oscillator plus the radiated energy the electron misses.

    ``lost`` integrates ``(1 - zeta(t))`` times the power radiated by the
    oscillator.  ``kind`` 0 is the stepwise window (``zeta == 1`` inside it,
    so ``lost`` stays put), 1 is ``zeta = exp(-rate * t)``.
    """
    f1 = _friction(q, v, alpha)
    k1q = v
    k1v = -q + f1
    q2 = q + 0.5 * h * k1q
    v2 = v + 0.5 * h * k1v
    f2 = _friction(q2, v2, alpha)
    k2q = v2
    k2v = -q2 + f2
    q3 = q + 0.5 * h * k2q
    v3 = v + 0.5 * h * k2v
    f3 = _friction(q3, v3, alpha)
    k3q = v3
    k3v = -q3 + f3
    q4 = q + h * k3q
    v4 = v + h * k3v
    f4 = _friction(q4, v4, alpha)
    k4q = v4
    k4v = -q4 + f4
    w = h / 6.0
    if kind != 0:
        th = t + 0.5 * h
        lost += w * (-_leak(t, kind, rate) * v * f1
                     - 2.0 * _leak(th, kind, rate) * (v2 * f2 + v3 * f3)
                     - _leak(t + h, kind, rate) * v4 * f4)
    return (
        q + w * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        v + w * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        lost,
    )


@nb.njit(cache=True)
def coupled_run(q, v, e, alpha, h, n_steps, h_last, kicks, kind, rate, every, out):
    """Co-evolve oscillator and electron for ``n_steps`` full steps plus one
    optional trailing step of length ``h_last``.

    The electron energy follows from the energy balance
    ``e = e0 + (E_osc0 - E_osc) + kick_work - lost``: it receives whatever the
    oscillator radiates while the window is open, but none of the work done
    on the oscillator by the velocity kicks.

    ``out`` (shape ``(k, 4)``, rows ``t, q, v, e``) receives every
    ``every``-th state; pass a zero-row array to skip recording.
    Returns ``(q, v, e, lost, clamps, bad)`` where ``bad`` is the failing
    step or -1.
    """
    noisy = kicks.shape[0] > 0
    record = out.shape[0] > 0
    clamps = 0
    row = 0
    budget = e + 0.5 * (q * q + v * v)
    kick_work = 0.0
    lost = 0.0
    total = n_steps + (1 if h_last > 0.0 else 0)
    for i in range(total):
        if i < n_steps:
            q, v, lost = rk4_coupled(q, v, lost, i * h, alpha, h, kind, rate)
            t_next = (i + 1) * h
        else:
            t = n_steps * h
            q, v, lost = rk4_coupled(q, v, lost, t, alpha, h_last, kind, rate)
            t_next = t + h_last
        if noisy:
            v_new = v + kicks[i]
            kick_work += 0.5 * (v_new * v_new - v * v)
            v = v_new
        if not (math.isfinite(q) and math.isfinite(v) and math.isfinite(lost)):
            return q, v, e, lost, clamps, i
        e = budget + kick_work - lost - 0.5 * (q * q + v * v)
        if e < 0.0:
            e = 0.0
            clamps += 1
        if record and (i + 1) % every == 0 and row < out.shape[0]:
            out[row, 0] = t_next
            out[row, 1] = q
            out[row, 2] = v
            out[row, 3] = e
            row += 1
    return q, v, e, lost, clamps, -1


def warmup():
    """Compile the kernels up front (first call otherwise pays the JIT cost)."""
    empty = np.empty(0)
    rk4(0.0, 1.0, 0.1, 1e-3)
    rk4_chunk(0.0, 1.0, 0.1, 1e-3, empty, np.empty(1), np.empty(1))
    coupled_run(0.0, 1.0, 0.0, 0.1, 1e-3, 1, 0.0, empty, 0, 0.0, 1, np.empty((0, 4)))
