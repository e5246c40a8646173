import numpy as np
import pytest

from uavjam.scenario import Scenario

# lines collected by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_instance(rng, m=None, k=None, aimed=False):
    """Scenario plus a deployment with no UAV near the vertical of a target.

    With ``aimed`` every UAV sits 1.8-3 km from a random target and points
    roughly at it, so jamming dominates the noise and gradients are well
    conditioned for finite differences.
    """
    m = int(rng.integers(1, 5)) if m is None else m
    k = int(rng.integers(1, 4)) if k is None else k
    targets = np.column_stack([rng.uniform(1800, 4000, k), rng.uniform(-1200, 1200, k), np.zeros(k)])
    center = np.array([targets[:, 0].max() + 800.0, rng.uniform(-300, 300), 20.0])
    s = Scenario(num_uavs=m, target_positions=targets, control_center=center)
    if aimed:
        pick = rng.integers(0, k, m)
        r = rng.uniform(1800, 3000, m)
        beta = rng.uniform(-0.6, 0.6, m)
        xy = targets[pick, :2] - r[:, None] * np.column_stack([np.cos(beta), np.sin(beta)])
        psi = beta + rng.normal(0.0, 0.15, m)
    else:
        xy = np.column_stack([rng.uniform(-500, 1600, m), rng.uniform(-1500, 1500, m)])
        psi = rng.uniform(-np.pi, np.pi, m)
    return s, xy, psi


def central_diff(f, x, h):
    x = np.array(x, dtype=float)
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        out[idx] = (f(xp) - f(xm)) / (2 * h)
    return out


def rel_err(analytic, numeric):
    """Componentwise relative error with a floor at 1e-6 of the largest entry."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    floor = 1e-6 * max(np.abs(a).max(), np.abs(n).max(), 1e-300)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


@pytest.fixture
def default_scenario():
    return Scenario(num_uavs=2, target_positions=[[2500.0, 300.0, 0.0], [3000.0, -400.0, 0.0]],
                    control_center=[4000.0, 0.0, 20.0])
