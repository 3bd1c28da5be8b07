"""Batch experiments on the quantum-friction oscillator.

* settle sweeps: energy reached at a fixed time as a function of the
  initial velocity (level capture, correspondence with ``E = v0**2 / 2``);
* relaxation traces with residence tracking (ground-state approach and
  noise-driven cascades);
* lifetime statistics of excited levels and their power-law fits.
"""

from collections import defaultdict
from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInput, EmptySeries, NonFiniteState, NoTransitions, SignChange
from .integrator import (
    DEFAULT_MIN_DWELL,
    DEFAULT_TOL,
    TWO_PI,
    IntegratorConfig,
    ResidenceTracker,
    Trajectory,
    integrate,
)
from .model import OscState, nearest_level

LIFETIME_SIGMA = 1e-8


@dataclass(frozen=True)
class SettleRow:
    v0: float
    E_final: float
    level: int
    classical_E: float


def settle_sweep(v0_grid, q0, p, cfg, t_end=100.0):
    """Integrate from ``(q0, v0)`` to ``t_end`` for every ``v0`` in the grid.

    Rows come back ordered by ``v0``.  A blow-up is re-raised as
    :class:`NonFiniteState` carrying the offending ``v0``.
    """
    grid = sorted(float(v) for v in v0_grid)
    if not grid:
        raise ValueError("v0 grid is empty")
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end!r}")
    rows = []
    for v0 in grid:
        try:
            final = integrate(OscState(q0, v0), p, cfg, t_end)
        except NonFiniteState as exc:
            raise NonFiniteState("settle run blew up", t=exc.t, v0=v0) from exc
        E = final.energy
        rows.append(SettleRow(v0, E, nearest_level(E)[0].n, 0.5 * v0 * v0))
    return rows


class RelaxResult(NamedTuple):
    trajectory: Trajectory
    residences: list


def relax_trace(q0, v0, p, cfg, t_end, tol=DEFAULT_TOL, min_dwell=DEFAULT_MIN_DWELL):
    """Trajectory samples (decimated by ``cfg.sample_every``) plus the
    residence segments detected on the full-rate energy series."""
    traj = Trajectory()
    tracker = ResidenceTracker(tol, min_dwell)
    integrate(OscState(q0, v0), p, cfg, t_end, traj, monitor=tracker)
    return RelaxResult(traj, tracker.finish())


def transit_times(segments):
    """Time spent between consecutive residences.

    Returns a list of ``(from_level, to_level, duration)`` with duration
    ``next.t_enter - previous.t_exit``: the time the energy spent outside
    both tolerance bands while moving from one level to the next.
    """
    out = []
    for a, b in zip(segments, segments[1:]):
        out.append((a.level.n, b.level.n, b.t_enter - a.t_exit))
    return out


def period_average(t, x, period=TWO_PI):
    """Average ``x`` over consecutive, complete windows of length ``period``.

    Returns the window-mean times and the window-mean values.  The trailing
    partial window is dropped.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.size == 0:
        raise EmptySeries("nothing to average")
    idx = np.floor((t - t[0]) / period).astype(np.int64)
    # window idx[-1] is never complete: its right edge lies past t[-1]
    n_full = int(idx[-1])
    keep = idx < n_full
    if not np.any(keep):
        raise EmptySeries(f"series shorter than one window of length {period}")
    counts = np.bincount(idx[keep], minlength=n_full)
    tm = np.bincount(idx[keep], weights=t[keep], minlength=n_full) / counts
    xm = np.bincount(idx[keep], weights=x[keep], minlength=n_full) / counts
    return tm, xm


def ground_asymptote_exponent(t, E, window, period=TWO_PI):
    """Log-log slope of ``|E - 1/2|`` against ``t`` inside ``window``.

    Near the ground level the deviation obeys ``d eps/dt ~ -eps**3`` so the
    expected slope is -1/2.  The energy is averaged over windows of length
    ``period`` first to remove the in-period ripple; ``period=None`` fits the
    raw samples.

    Raises
    ------
    SignChange
        If ``E - 1/2`` is not of one strict sign throughout the window.
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    t_lo, t_hi = window
    if not 0 < t_lo < t_hi:
        raise ValueError(f"bad window {window!r}")
    sel = (t >= t_lo) & (t <= t_hi)
    if np.count_nonzero(sel) < 2:
        raise EmptySeries("fewer than two samples inside the window")
    ts, Es = t[sel], E[sel]
    eps = Es - 0.5
    if not (np.all(eps > 0) or np.all(eps < 0)):
        raise SignChange("E - 1/2 changes sign (or touches zero) inside the window")
    if period is not None:
        ts, Es = period_average(ts, Es, period)
        eps = Es - 0.5
        if ts.size < 2:
            raise EmptySeries("fewer than two averaging windows inside the fit window")
    slope, _ = np.polyfit(np.log(ts), np.log(np.abs(eps)), 1)
    return float(slope)


@dataclass(frozen=True)
class LifetimeRecord:
    """Residence durations on one level, pooled over the repeats of a study.

    ``tau`` averages the uncensored durations only (NaN if there are none).
    """

    alpha: float
    E_n: float
    durations: tuple
    censored: int

    @property
    def n(self):
        return int(round(self.E_n - 0.5))

    @property
    def n_obs(self):
        return len(self.durations)

    @property
    def tau(self):
        return float(np.mean(self.durations)) if self.durations else math.nan


def _sub_seeds(seed, count):
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def lifetime_study(p, start_level, cfg=None, t_max=1e5, repeats=20,
                   tol=DEFAULT_TOL, min_dwell=DEFAULT_MIN_DWELL):
    """Pool residence durations of a noisy cascade started on ``start_level``.

    Each repeat starts at ``(q=0, v=sqrt(2n+1))`` with its own sub-seed
    derived from ``cfg.seed`` and runs until ``t_max`` or until the ground
    level has been occupied for ``min_dwell`` (it is never left again).

    Returns one :class:`LifetimeRecord` per visited level, ordered by
    energy.  Censored residences (the one open at the end of a repeat) are
    counted but not averaged.
    """
    if cfg is None:
        cfg = IntegratorConfig(noise_sigma=LIFETIME_SIGMA)
    if not cfg.noise_sigma > 0:
        raise ValueError("lifetime studies need noise_sigma > 0; without noise the "
                         "lifetimes are set by the RK4 truncation error")
    if int(start_level) != start_level or start_level < 0:
        raise ValueError(f"start_level must be a nonnegative integer, got {start_level!r}")
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats!r}")
    if not t_max > 0:
        raise ValueError(f"t_max must be > 0, got {t_max!r}")

    durations = defaultdict(list)
    censored = defaultdict(int)
    v0 = math.sqrt(2 * start_level + 1)
    for seed in _sub_seeds(cfg.seed, repeats):
        tracker = ResidenceTracker(tol, min_dwell)
        integrate(OscState(0.0, v0), p, cfg.replace(seed=seed), t_max,
                  monitor=tracker, until=lambda tr=tracker: tr.current_level == 0)
        for seg in tracker.finish():
            if seg.censored:
                censored[seg.level.n] += 1
            else:
                durations[seg.level.n].append(seg.duration)
    levels = sorted(set(durations) | set(censored))
    return [LifetimeRecord(float(p.alpha), n + 0.5, tuple(durations[n]), censored[n])
            for n in levels]


def lifetime_points(records, min_obs=1):
    """``(E_n, tau)`` pairs of the records with at least ``min_obs`` exits.

    Raises :class:`NoTransitions` (carrying the records) if no level was
    ever left.
    """
    pts = [(r.E_n, r.tau) for r in records if r.n_obs >= max(min_obs, 1)]
    if not pts:
        raise NoTransitions("no level exit was observed", records)
    return pts


class PowerLawFit(NamedTuple):
    """``tau = exp(ln_A) * E**(-beta)`` fitted in log-log space."""

    ln_A: float
    beta: float
    r2: float
    n_points: int

    def predict(self, E):
        return np.exp(self.ln_A - self.beta * np.log(E))


def _ols(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_power_law(points):
    """Least-squares fit of ``ln tau = ln_A - beta * ln E``.

    Parameters
    ----------
    points : iterable of (E, tau)
        At least three points, all positive, not all with the same ``E``.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise DegenerateInput(f"need at least 3 (E, tau) points, got {len(pts)}")
    E, tau = pts[:, 0], pts[:, 1]
    if np.any(E <= 0) or np.any(tau <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("E and tau must be finite and positive")
    if np.all(E == E[0]):
        raise DegenerateInput("all E values are equal")
    slope, intercept, r2 = _ols(np.log(E), np.log(tau))
    return PowerLawFit(intercept, -slope, r2, len(E))


class AlphaScaling(NamedTuple):
    """``ln A = ln_A0 + exponent * ln alpha``."""

    ln_A0: float
    exponent: float
    r2: float


def fit_A_vs_alpha(fits):
    """Regress the power-law prefactor on alpha in log space.

    ``fits`` holds ``(alpha, ln_A)`` pairs for at least three distinct alpha.
    """
    pts = np.asarray(list(fits), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or np.unique(pts[:, 0]).size < 3:
        raise DegenerateInput("need (alpha, ln_A) pairs for at least 3 distinct alpha")
    if np.any(pts[:, 0] <= 0):
        raise ValueError("alpha must be > 0")
    slope, intercept, r2 = _ols(np.log(pts[:, 0]), pts[:, 1])
    return AlphaScaling(intercept, slope, r2)
