import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qfosc.franckhertz import (
    InteractionWindow,
    ScatterConfig,
    collide,
    electron_energy_rate,
    fh_sweep,
    ground_state_at_phase,
    local_minima,
    scatter_ensemble,
    scatter_once,
    scatter_trace,
    trial_draws,
)
from qfosc.integrator import IntegratorConfig
from qfosc.model import ModelParams, OscState, energy_rate

QUIET = ScatterConfig(integrator=IntegratorConfig())


def reference_scatter(E0, phi, alpha=10.0, t_end=200.0, rate=None):
    """Adaptive solve of oscillator plus absorbed power, a route independent
    of the energy-balance bookkeeping used by the package."""
    from scipy.integrate import solve_ivp

    v_osc, v_e = collide(math.cos(phi), math.sqrt(2.0 * E0))

    def rhs(t, y):
        q, v, _ = y
        s = q * q + v * v
        c = math.cos(0.5 * math.pi * s)
        zeta = 1.0 if rate is None else math.exp(-rate * t)
        return [v, -q - alpha * v * (s - 1.0) * c * c, zeta * alpha * v * v * (s - 1.0) * c * c]

    sol = solve_ivp(rhs, (0.0, t_end), [math.sin(phi), v_osc, 0.5 * v_e * v_e],
                    method="DOP853", rtol=1e-11, atol=1e-13)
    return sol.y[2, -1]


# collision and phase


def test_ground_state_at_phase():
    s = ground_state_at_phase(0.0)
    assert (s.q, s.v) == (0.0, 1.0)
    s = ground_state_at_phase(math.pi / 2)
    assert s.q == 1.0 and abs(s.v) < 1e-16
    for phi in np.linspace(0, 2 * math.pi, 50, endpoint=False):
        assert abs(ground_state_at_phase(phi).energy - 0.5) <= 1e-15
    with pytest.raises(ValueError):
        ground_state_at_phase(2 * math.pi)


@pytest.mark.parametrize("before,after", [
    ((0.0, 2.0), (2.0, 0.0)),
    ((1.0, 1.0), (1.0, 1.0)),
    ((0.6, -0.4), (0.6, -0.4)),
])
def test_collide_examples(before, after):
    assert collide(*before) == pytest.approx(after, abs=1e-15)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_collide_conserves(a, b):
    va, vb = collide(a, b)
    assert va >= vb
    assert va + vb == pytest.approx(a + b, rel=1e-12, abs=1e-12)
    assert va * va + vb * vb == pytest.approx(a * a + b * b, rel=1e-12, abs=1e-12)


def test_electron_rate_examples():
    p = ModelParams(0.1)
    assert electron_energy_rate(OscState(0.0, 2.0), p, 1.0) == pytest.approx(1.2)
    assert electron_energy_rate(OscState(0.0, 2.0), p, 0.0) == 0.0
    for n in range(6):
        v = math.sqrt(2 * n + 1)
        assert abs(electron_energy_rate(OscState(0.0, v), p, 1.0)) < 1e-12


@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(0, 1))
def test_electron_gains_what_oscillator_loses(q, v, zeta):
    s = OscState(q, v)
    p = ModelParams(10.0)
    assert electron_energy_rate(s, p, zeta) == pytest.approx(-zeta * energy_rate(s, p), rel=1e-12, abs=1e-12)


def test_window_validation():
    with pytest.raises(ValueError):
        InteractionWindow("stepwise", t_int=0.0)
    with pytest.raises(ValueError):
        InteractionWindow("exponential")
    with pytest.raises(ValueError):
        InteractionWindow("gaussian")
    w = InteractionWindow("exponential", rate=0.5)
    assert w.zeta(0.0) == 1.0
    assert InteractionWindow().zeta(200.0) == 1.0 and InteractionWindow().zeta(200.1) == 0.0


# single trials


def test_sub_threshold_is_elastic():
    r = scatter_once(0.2, ScatterConfig(), 1.0)
    assert r.elastic
    assert abs(r.Ee_final - 0.2) < 0.05


def test_above_threshold_strands_a_quantum():
    cfg = ScatterConfig()
    phases, seeds = trial_draws(3, 40)
    hits = [abs(scatter_once(1.8, cfg, float(p), s).Ee_final - 0.8) < 0.1
            for p, s in zip(phases, seeds)]
    assert np.mean(hits) > 0.5


def test_zero_energy_electron():
    r = scatter_once(0.0, QUIET, math.pi / 2)
    assert r.Ee_final == 0.0
    assert r.Eosc_final == pytest.approx(0.5)


@pytest.mark.parametrize("E0,phi", [(1.8, 0.0), (0.2, 1.0), (2.7, 0.3), (3.5, 2.0), (1.3, 4.0)])
def test_matches_adaptive_reference(E0, phi):
    r = scatter_once(E0, QUIET, phi)
    assert r.Ee_final == pytest.approx(reference_scatter(E0, phi), abs=1e-6)


def test_exponential_window_matches_reference():
    cfg = ScatterConfig(window=InteractionWindow("exponential", rate=0.05), integrator=IntegratorConfig())
    r = scatter_once(2.7, cfg, 0.3)
    assert r.Ee_final == pytest.approx(reference_scatter(2.7, 0.3, t_end=cfg.window.duration, rate=0.05), abs=1e-6)


def test_bookkeeping_inside_window():
    res, tr = scatter_trace(3.1, QUIET, 2.5, sample_every=50)
    total = tr.Ee + tr.Eosc
    E_start = 3.1 + 0.5
    assert np.max(np.abs(total - E_start)) < 1e-5
    assert tr.t[-1] == pytest.approx(200.0)
    assert res.Ee_final >= 0 and res.Eosc_final >= 0


def test_scatter_is_reproducible():
    cfg = ScatterConfig()
    assert scatter_once(2.2, cfg, 1.1, seed=5) == scatter_once(2.2, cfg, 1.1, seed=5)


def test_scatter_rejects_negative_energy():
    with pytest.raises(ValueError):
        scatter_once(-0.1, QUIET, 0.0)


# ensembles


def test_ensemble_sub_threshold():
    row, results = scatter_ensemble(0.5, ScatterConfig(trials=40))
    assert 0.45 <= row.mean_Ee <= 0.55
    assert len(results) == 40
    assert row.mean_Ve == pytest.approx(np.mean([math.sqrt(2 * r.Ee_final) for r in results]))


def test_first_inelastic_dip():
    cfg = ScatterConfig(trials=60)
    low, _ = scatter_ensemble(0.9, cfg)
    high, _ = scatter_ensemble(1.5, cfg)
    assert abs(low.mean_Ee - 0.9) < 0.1
    assert high.mean_Ee - 1.5 < -0.2


def test_single_trial_ensemble_is_scatter_once():
    cfg = ScatterConfig(trials=1, seed=11)
    row, (r,) = scatter_ensemble(1.7, cfg)
    (phi,), (seed,) = trial_draws(11, 1)
    assert r == scatter_once(1.7, cfg, float(phi), seed)
    assert row.mean_Ee == r.Ee_final and row.stddev_Ee == 0.0


def test_sweep_shapes_and_flags():
    cfg = ScatterConfig(trials=2)
    (row,) = fh_sweep([0.7], cfg)
    assert row.E0 == 0.7 and not row.window_limited
    rows = fh_sweep([4.5, 3.9], cfg)
    assert [r.E0 for r in rows] == [3.9, 4.5]
    assert [r.window_limited for r in rows] == [False, True]
    with pytest.raises(ValueError):
        fh_sweep([], cfg)


def test_local_minima():
    assert list(local_minima([3, 1, 2, 2, 0, 5])) == [1, 4]
    assert list(local_minima([1, 1, 1])) == []
    assert list(local_minima([1, 2])) == []


def test_config_validation():
    with pytest.raises(ValueError):
        ScatterConfig(trials=0)
    with pytest.raises(ValueError):
        ScatterConfig(seed=-1)
