"""Classical Franck-Hertz scattering off the quantum-friction oscillator.

An electron of energy ``E0`` hits the oscillator, which sits on its ground
level at a random phase.  The collision is instantaneous, one-dimensional
and elastic between equal masses; the coordinate of the oscillator is not
changed by it.  Afterwards the oscillator relaxes under quantum friction
and the electron absorbs the radiated power for as long as the interaction
window ``zeta(t)`` stays open.

Excess energy that the oscillator dumps into a long-lived excited level is
lost to the electron, which gives the inelastic dips of the mean electron
energy at multiples of the level spacing.
"""

from dataclasses import dataclass, field
import math
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import NonFiniteState
from .integrator import IntegratorConfig, step_plan
from .model import ModelParams, OscState

TWO_PI = 2.0 * math.pi
WINDOW_LIMIT_E0 = 4.0
ELASTIC_TOL = 0.05
# left open: zeta below this no longer changes the electron energy
_EXP_WINDOW_CUTOFF = 1e-12


@dataclass(frozen=True)
class InteractionWindow:
    """Time the electron keeps absorbing radiation after the collision.

    ``stepwise``: ``zeta = 1`` up to ``t_int`` and 0 afterwards.
    ``exponential``: ``zeta = exp(-rate * t)``; there is no default rate.
    """

    kind: str = "stepwise"
    t_int: float = 200.0
    rate: float = None

    def __post_init__(self):
        if self.kind == "stepwise":
            if not (math.isfinite(self.t_int) and self.t_int > 0):
                raise ValueError(f"t_int must be > 0, got {self.t_int!r}")
        elif self.kind == "exponential":
            if self.rate is None or not (math.isfinite(self.rate) and self.rate > 0):
                raise ValueError("exponential window needs an explicit rate > 0")
        else:
            raise ValueError(f"unknown window kind {self.kind!r}")

    @property
    def duration(self):
        """How long the coupled system has to be integrated."""
        if self.kind == "stepwise":
            return self.t_int
        return -math.log(_EXP_WINDOW_CUTOFF) / self.rate

    def zeta(self, t):
        if self.kind == "stepwise":
            return np.where(np.asarray(t) <= self.t_int, 1.0, 0.0)
        return np.exp(-self.rate * np.asarray(t))


@dataclass(frozen=True)
class ScatterConfig:
    p: ModelParams = field(default_factory=lambda: ModelParams(10.0))
    window: InteractionWindow = field(default_factory=InteractionWindow)
    integrator: IntegratorConfig = field(
        default_factory=lambda: IntegratorConfig(noise_sigma=1e-8))
    trials: int = 200
    seed: int = 0
    elastic_tol: float = ELASTIC_TOL

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if not self.elastic_tol > 0:
            raise ValueError("elastic_tol must be > 0")


@dataclass(frozen=True)
class ScatterResult:
    E0: float
    phase: float
    Ee_final: float
    Eosc_final: float
    elastic: bool
    clamps: int = 0


class SweepRow(NamedTuple):
    E0: float
    mean_Ee: float
    mean_Ve: float
    stddev_Ee: float
    window_limited: bool


class ScatterTrace(NamedTuple):
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    Ee: np.ndarray

    @property
    def Eosc(self):
        return 0.5 * (self.q * self.q + self.v * self.v)


def ground_state_at_phase(phi):
    """Oscillator on the ground level at phase ``phi``: ``(sin phi, cos phi)``."""
    if not 0.0 <= phi < TWO_PI:
        raise ValueError(f"phase must lie in [0, 2*pi), got {phi!r}")
    return OscState(math.sin(phi), math.cos(phi), 0.0)


def collide(v_osc_before, v_e_before):
    """Equal-mass elastic collision; the oscillator leaves with the larger
    of the two velocities and the electron with the smaller."""
    mean = 0.5 * (v_osc_before + v_e_before)
    half_gap = 0.5 * abs(v_osc_before - v_e_before)
    return mean + half_gap, mean - half_gap


def electron_energy_rate(state, p, zeta):
    """Power absorbed by the electron, ``zeta`` times the oscillator's loss."""
    q, v = state.q, state.v
    s = q * q + v * v
    c = np.cos(0.5 * math.pi * s)
    return zeta * p.alpha * v * v * (s - 1.0) * c * c


def _run(E0, cfg, phi, seed, record_every=0):
    if not (math.isfinite(E0) and E0 >= 0):
        raise ValueError(f"E0 must be >= 0, got {E0!r}")
    osc = ground_state_at_phase(phi)
    v_osc, v_e = collide(osc.v, math.sqrt(2.0 * E0))
    integ = cfg.integrator
    h = integ.h
    n_full, h_last = step_plan(0.0, cfg.window.duration, h)
    total = n_full + (1 if h_last > 0 else 0)
    sigma = integ.noise_sigma
    if sigma > 0:
        kicks = np.random.default_rng(seed).normal(0.0, sigma, total)
    else:
        kicks = np.empty(0)
    kind = 0 if cfg.window.kind == "stepwise" else 1
    rate = cfg.window.rate or 0.0
    if record_every:
        out = np.empty((total // record_every, 4))
    else:
        out = np.empty((0, 4))
    q, v, Ee, _, clamps, bad = _kernels.coupled_run(
        osc.q, v_osc, 0.5 * v_e * v_e, float(cfg.p.alpha), h, n_full, h_last,
        kicks, kind, rate, max(int(record_every), 1), out)
    if bad >= 0:
        raise NonFiniteState("scattering run produced a non-finite state",
                             t=min((bad + 1) * h, cfg.window.duration))
    Eosc = 0.5 * (q * q + v * v)
    result = ScatterResult(float(E0), float(phi), float(Ee), float(Eosc),
                           abs(Ee - E0) < cfg.elastic_tol, int(clamps))
    return result, out


def scatter_once(E0, cfg, phi, seed=None):
    """Single collision at phase ``phi`` followed by co-evolution over the
    interaction window.

    The electron starts with ``+sqrt(2 E0)``; its post-collision energy is
    ``V_e**2 / 2`` regardless of the sign of ``V_e``.  ``seed`` drives the
    velocity noise and defaults to ``cfg.integrator.seed``.
    """
    if seed is None:
        seed = cfg.integrator.seed
    return _run(E0, cfg, phi, seed)[0]


def scatter_trace(E0, cfg, phi, seed=None, sample_every=100):
    """Like :func:`scatter_once` but also returns sampled ``(t, q, v, Ee)``."""
    if seed is None:
        seed = cfg.integrator.seed
    result, out = _run(E0, cfg, phi, seed, record_every=int(sample_every))
    trace = ScatterTrace(out[:, 0].copy(), out[:, 1].copy(), out[:, 2].copy(), out[:, 3].copy())
    return result, trace


def trial_draws(seed, trials):
    """Collision phases and per-trial noise seeds of one ensemble."""
    ss = np.random.SeedSequence(int(seed))
    phase_seq, noise_seq = ss.spawn(2)
    phases = np.random.default_rng(phase_seq).uniform(0.0, TWO_PI, trials)
    seeds = [int(c.generate_state(1, np.uint64)[0]) for c in noise_seq.spawn(trials)]
    return phases, seeds


def summarize(E0, results):
    Ee = np.array([r.Ee_final for r in results])
    return SweepRow(float(E0), float(Ee.mean()), float(np.sqrt(2.0 * Ee).mean()),
                    float(Ee.std()), E0 > WINDOW_LIMIT_E0)


def scatter_ensemble(E0, cfg):
    """``cfg.trials`` collisions at uniformly random phases, averaged.

    ``mean_Ve`` is the mean of the per-trial speeds ``sqrt(2 Ee)``, and
    ``stddev_Ee`` the population standard deviation.
    """
    phases, seeds = trial_draws(cfg.seed, cfg.trials)
    results = [scatter_once(E0, cfg, float(phi), seed) for phi, seed in zip(phases, seeds)]
    return summarize(E0, results), results


def fh_sweep(E0_grid, cfg):
    """One ensemble per initial electron energy, each with its own sub-seed.

    Rows are ordered by ``E0``; rows with ``E0 > 4`` are flagged as limited
    by the interaction window.
    """
    grid = sorted(float(e) for e in E0_grid)
    if not grid:
        raise ValueError("E0 grid is empty")
    children = np.random.SeedSequence(int(cfg.seed)).spawn(len(grid))
    rows = []
    for E0, child in zip(grid, children):
        sub = int(child.generate_state(1, np.uint64)[0])
        row, _ = scatter_ensemble(E0, _with_seed(cfg, sub))
        rows.append(row)
    return rows


def _with_seed(cfg, seed):
    return ScatterConfig(cfg.p, cfg.window, cfg.integrator, cfg.trials, seed, cfg.elastic_tol)


def local_minima(values):
    """Indices ``i`` with ``values[i]`` strictly below both neighbours."""
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        return np.empty(0, dtype=int)
    inner = (x[1:-1] < x[:-2]) & (x[1:-1] < x[2:])
    return np.flatnonzero(inner) + 1
