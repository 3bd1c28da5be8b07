"""Shared long-running simulations and the acceptance report hook."""

import time

import numpy as np
import pytest

from qfosc import _kernels
from qfosc.experiments import lifetime_study
from qfosc.integrator import IntegratorConfig
from qfosc.model import ModelParams

ACCEPTANCE = {}


def pytest_sessionstart(session):
    _kernels.warmup()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def report():
    def record(key, ok, detail=""):
        ACCEPTANCE[key] = (bool(ok), detail)
        print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


@pytest.fixture(scope="session")
def noisy_lifetimes_timed():
    """Lifetime studies at the documented noise floor sigma=1e-8, with wall time."""
    cfg = IntegratorConfig(noise_sigma=1e-8, seed=0)
    start = time.perf_counter()
    studies = {a: lifetime_study(ModelParams(a), 12, cfg, t_max=1e5, repeats=20)
               for a in (5.0, 7.0, 10.0)}
    return studies, time.perf_counter() - start


@pytest.fixture(scope="session")
def noisy_lifetimes(noisy_lifetimes_timed):
    return noisy_lifetimes_timed[0]


@pytest.fixture(scope="session")
def truncation_lifetimes():
    """Lifetime studies where integrator truncation, not noise, sets the lifetimes."""
    cfg = IntegratorConfig(noise_sigma=1e-12, seed=0)
    return {a: lifetime_study(ModelParams(a), 12, cfg, t_max=3e5, repeats=2)
            for a in (5.0, 7.0, 10.0)}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
