"""Oscillator with quantum friction, in nondimensional variables.

Time is measured in units of 1/omega, energy in units of hbar*omega and the
coordinate in units of sqrt(hbar/(m*omega)).  In these units the equation of
motion reads::

    q'' + q = -alpha * q' * (q**2 + q'**2 - 1) * cos(pi/2 * (q**2 + q'**2))**2

and the stationary energies are the half-integers n + 1/2.

Every function here accepts an :class:`OscState` whose fields are either
floats or equally shaped numpy arrays, so a batch of phase points can be
evaluated in one call.
"""

from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class OscState:
    """Phase point ``(q, v)`` of the oscillator at time ``t``."""

    q: float
    v: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("q", "v", "t"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"OscState.{name} must be finite, got {getattr(self, name)!r}")

    @property
    def energy(self):
        return total_energy(self)


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional friction strength.

    ``alpha == 0`` switches the friction off and leaves a pure harmonic
    oscillator; this is only meant for integrator checks.
    """

    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha!r}")


@dataclass(frozen=True)
class DimensionalParams:
    """Dimensional constants: mass, angular frequency, action quantum and the
    (constant) friction coefficient ``a0``."""

    m: float
    omega: float
    hbar: float
    a0: float

    def __post_init__(self):
        for name in ("m", "omega", "hbar", "a0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")


class Level(NamedTuple):
    n: int
    energy: float


def friction_term(q, v, alpha):
    """Raw friction acceleration on plain floats/arrays (also jitted)."""
    # s is 2E; the cosine takes s directly, never a separately rounded E
    s = q * q + v * v
    c = np.cos(HALF_PI * s)
    return -alpha * v * (s - 1.0) * c * c


def total_energy(state):
    """Return ``(q**2 + v**2) / 2``."""
    return 0.5 * (state.q * state.q + state.v * state.v)


def stationary_level_energy(n):
    """Energy ``n + 1/2`` of the stationary level with quantum number ``n``."""
    if n < 0:
        raise ValueError(f"quantum number must be >= 0, got {n!r}")
    return n + 0.5


def level(n):
    return Level(int(n), stationary_level_energy(int(n)))


def nearest_level(E):
    """Closest stationary level to energy ``E`` and the signed offset.

    Midpoints between two levels (integer ``E``) resolve to the lower level,
    which is the one the flow is heading for.

    Returns
    -------
    (Level, float)
        The level and ``E - level.energy``.
    """
    if E < 0:
        raise ValueError(f"energy must be >= 0, got {E!r}")
    n = math.ceil(E - 1.0)  # ties E == n + 1 go down
    n = max(n, 0)
    lvl = level(n)
    return lvl, E - lvl.energy


def friction_accel(state, p):
    """Quantum-friction acceleration ``-alpha v (q^2+v^2-1) cos^2(pi/2 (q^2+v^2))``."""
    return friction_term(state.q, state.v, p.alpha)


def deriv(state, p):
    """Right-hand side ``(dq/dt, dv/dt)`` of the first-order system."""
    return state.v, -state.q + friction_accel(state, p)


def energy_rate(state, p):
    """Rate of change of the oscillator energy, ``v * friction_accel``.

    Written out this is ``-2 alpha v^2 (E - 1/2) cos^2(pi E)``: negative above
    the ground level, positive below it and zero on every level.
    """
    return state.v * friction_accel(state, p)


def alpha_from_dimensional(d):
    """Map dimensional constants onto the single model parameter ``a0*hbar/2``."""
    return ModelParams(alpha=0.5 * d.a0 * d.hbar)
