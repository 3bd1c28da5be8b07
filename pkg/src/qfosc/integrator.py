"""Fixed-step RK4 integration with optional seeded velocity noise.

The integrator runs the compiled kernel in chunks.  After each chunk the
samples are handed to observers (decimated by ``sample_every``) and to an
optional full-rate monitor, typically a :class:`ResidenceTracker`.

Examples
--------
>>> from qfosc.model import OscState, ModelParams
>>> rec = Trajectory()
>>> final = integrate(OscState(0.0, 1.6), ModelParams(0.1),
...                   IntegratorConfig(sample_every=1000), 10.0, rec)
>>> len(rec), round(final.t, 12)
(10, 10.0)
"""

from dataclasses import dataclass, field
import math
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .errors import EmptySeries, NonFiniteState
from .model import Level, OscState, level

CHUNK = 1 << 16
TWO_PI = 2.0 * math.pi

DEFAULT_TOL = 0.02
DEFAULT_MIN_DWELL = TWO_PI


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    mode: str = "off"

    def __post_init__(self):
        if self.mode not in ("off", "per_step_gaussian"):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma!r}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size, noise level, RNG seed and output decimation.

    ``noise_sigma`` is the standard deviation of the Gaussian velocity kick
    added after every step.  ``h`` has to stay at or below 0.01 to resolve
    the ~0.006 long transitions between levels.
    """

    h: float = 1e-3
    noise_sigma: float = 0.0
    seed: int = 0
    sample_every: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.h) and 0.0 < self.h <= 0.01):
            raise ValueError(f"step size must satisfy 0 < h <= 0.01, got {self.h!r}")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0.0):
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError(f"sample_every must be a positive integer, got {self.sample_every!r}")

    @property
    def noise(self):
        if self.noise_sigma > 0.0:
            return NoiseSpec(self.noise_sigma, "per_step_gaussian")
        return NoiseSpec()

    def replace(self, **changes):
        fields = dict(h=self.h, noise_sigma=self.noise_sigma, seed=self.seed,
                      sample_every=self.sample_every)
        fields.update(changes)
        return IntegratorConfig(**fields)


class TrajectorySample(NamedTuple):
    t: float
    q: float
    v: float
    E: float


class Trajectory:
    """Observer that keeps every sample it is given."""

    def __init__(self):
        self._chunks = []

    def __call__(self, t, q, v, E):
        self._chunks.append((t.copy(), q.copy(), v.copy(), E.copy()))

    def _column(self, i):
        if not self._chunks:
            return np.empty(0)
        return np.concatenate([c[i] for c in self._chunks])

    @property
    def t(self):
        return self._column(0)

    @property
    def q(self):
        return self._column(1)

    @property
    def v(self):
        return self._column(2)

    @property
    def E(self):
        return self._column(3)

    def __len__(self):
        return sum(len(c[0]) for c in self._chunks)

    def __iter__(self):
        for t, q, v, E in zip(self.t, self.q, self.v, self.E):
            yield TrajectorySample(float(t), float(q), float(v), float(E))


@dataclass(frozen=True)
class ResidenceSegment:
    """Interval during which the energy stayed within tolerance of one level.

    A censored segment was still open when the series ended; its
    ``t_exit`` is the last sample time.
    """

    level: Level
    t_enter: float
    t_exit: float
    censored: bool = False

    @property
    def duration(self):
        return self.t_exit - self.t_enter


@dataclass
class ResidenceTracker:
    """Streaming detector of residences on stationary levels.

    Feed it time-ordered ``(t, E)`` chunks (it is a valid observer or
    monitor for :func:`integrate`) and call :meth:`finish` at the end.
    """

    tol: float = DEFAULT_TOL
    min_dwell: float = DEFAULT_MIN_DWELL
    segments: list = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.tol < 0.5:
            raise ValueError(f"tol must be in (0, 0.5), got {self.tol!r}")
        if not self.min_dwell > 0.0:
            raise ValueError(f"min_dwell must be > 0, got {self.min_dwell!r}")
        self._key = -1
        self._start = math.nan
        self._last = math.nan
        self._seen = 0
        self._finished = False

    def __call__(self, t, q, v, E):
        self.feed(t, E)

    def feed(self, t, E):
        t = np.asarray(t, dtype=float)
        E = np.asarray(E, dtype=float)
        if t.size == 0:
            return
        if self._finished:
            raise RuntimeError("tracker already finished")
        n = np.floor(E)
        inband = np.abs(E - (n + 0.5)) < self.tol
        keys = np.where(inband, n, -1.0).astype(np.int64)
        cuts = np.flatnonzero(keys[1:] != keys[:-1]) + 1
        starts = np.concatenate(([0], cuts))
        ends = np.concatenate((cuts, [keys.size]))
        for a, b in zip(starts, ends):
            key = int(keys[a])
            if key == self._key:
                self._last = t[b - 1]
                continue
            self._close(t[a])
            self._key = key
            self._start = t[a]
            self._last = t[b - 1]
        self._seen += t.size

    def _close(self, t_exit, censored=False):
        if self._key >= 0 and self._last - self._start >= self.min_dwell:
            self.segments.append(ResidenceSegment(level(self._key), float(self._start),
                                                  float(t_exit), censored))
        self._key = -1

    @property
    def current_level(self):
        """Level index of a qualifying open residence, else ``None``."""
        if self._key >= 0 and self._last - self._start >= self.min_dwell:
            return self._key
        return None

    def finish(self):
        if not self._finished:
            if self._seen == 0:
                raise EmptySeries("no samples were fed to the residence tracker")
            self._close(self._last, censored=True)
            self._finished = True
        return self.segments


def track_residences(t, E, tol=DEFAULT_TOL, min_dwell=DEFAULT_MIN_DWELL):
    """Residence segments of an energy series.

    A segment opens once ``|E - (n + 1/2)| < tol`` has held for at least
    ``min_dwell`` and closes at the first sample outside the band.  The last
    segment is returned censored if the series ends inside it.
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    if t.size == 0:
        raise EmptySeries("empty energy series")
    if t.shape != E.shape:
        raise ValueError("t and E must have the same shape")
    if np.any(np.diff(t) < 0):
        raise ValueError("samples must be time-ordered")
    tracker = ResidenceTracker(tol, min_dwell)
    tracker.feed(t, E)
    return tracker.finish()


def rk4_step(state, h, p):
    """Advance ``state`` by one classical RK4 step of length ``h``."""
    if not h > 0:
        raise ValueError(f"step must be > 0, got {h!r}")
    q, v = _kernels.rk4(float(state.q), float(state.v), float(p.alpha), float(h))
    t = state.t + h
    if not (math.isfinite(q) and math.isfinite(v)):
        raise NonFiniteState("RK4 step produced a non-finite state", t=t)
    return OscState(q, v, t)


Observer = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], None]


def _as_list(obs):
    if obs is None:
        return []
    if callable(obs):
        return [obs]
    return list(obs)


def step_plan(t0, t_end, h):
    """Number of full steps and the length of the trailing partial step."""
    span = t_end - t0
    n_full = int(math.floor(span / h + 1e-9))
    rest = span - n_full * h
    if rest <= 1e-9 * h:
        rest = 0.0
    return n_full, rest


def integrate(state0, p, cfg, t_end, observer: Union[Observer, Sequence[Observer], None] = None,
              *, monitor: Union[Observer, Sequence[Observer], None] = None,
              until: Optional[Callable[[], bool]] = None):
    """Integrate from ``state0`` up to ``t_end``.

    Parameters
    ----------
    state0 : OscState
    p : ModelParams
    cfg : IntegratorConfig
    t_end : float
        Final time.  The run takes fixed steps of ``cfg.h`` and, if the span
        is not a multiple of ``h``, one shorter last step landing on
        ``t_end``.
    observer : callable or sequence of callables, optional
        Called as ``observer(t, q, v, E)`` with arrays holding every
        ``cfg.sample_every``-th state, plus the final one.
    monitor : callable or sequence of callables, optional
        Same signature, but receives every step.
    until : callable, optional
        Checked between chunks; returning True stops the run early.

    Returns
    -------
    OscState
        The final state.

    Raises
    ------
    NonFiniteState
        If the state blows up; ``t`` is the time of the failing step.
    """
    t0 = float(state0.t)
    if not t_end > t0:
        raise ValueError(f"t_end={t_end!r} must exceed the initial time {t0!r}")
    observers = _as_list(observer)
    monitors = _as_list(monitor)
    h = cfg.h
    alpha = float(p.alpha)
    sigma = cfg.noise_sigma
    every = int(cfg.sample_every)
    rng = np.random.default_rng(cfg.seed) if sigma > 0.0 else None
    empty = np.empty(0)

    n_full, h_last = step_plan(t0, t_end, h)
    q, v = float(state0.q), float(state0.v)
    done = 0
    last_pushed = 0
    stopped = False
    while done < n_full:
        m = min(CHUNK, n_full - done)
        kicks = rng.normal(0.0, sigma, m) if rng is not None else empty
        qs = np.empty(m)
        vs = np.empty(m)
        q, v, bad = _kernels.rk4_chunk(q, v, alpha, h, kicks, qs, vs)
        if bad >= 0:
            raise NonFiniteState("integration produced a non-finite state",
                                 t=t0 + (done + bad + 1) * h)
        steps = np.arange(done + 1, done + m + 1)
        ts = t0 + steps * h
        Es = 0.5 * (qs * qs + vs * vs)
        for mon in monitors:
            mon(ts, qs, vs, Es)
        if observers:
            sel = steps % every == 0
            if np.any(sel):
                last_pushed = int(steps[sel][-1])
                for obs in observers:
                    obs(ts[sel], qs[sel], vs[sel], Es[sel])
        done += m
        if until is not None and done < n_full and until():
            stopped = True
            break

    t = t0 + done * h
    if not stopped and h_last > 0.0:
        q, v = _kernels.rk4(q, v, alpha, h_last)
        if rng is not None:
            v += rng.normal(0.0, sigma)
        t = float(t_end)
        if not (math.isfinite(q) and math.isfinite(v)):
            raise NonFiniteState("integration produced a non-finite state", t=t)
        sample = tuple(np.array([x]) for x in (t, q, v, 0.5 * (q * q + v * v)))
        for mon in monitors:
            mon(*sample)
        for obs in observers:
            obs(*sample)
    elif observers and last_pushed != done:
        sample = tuple(np.array([x]) for x in (t, q, v, 0.5 * (q * q + v * v)))
        for obs in observers:
            obs(*sample)
    return OscState(q, v, t)
