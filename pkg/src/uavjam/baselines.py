"""Reference schemes for comparison with the ADMM solver.

``baseline1`` parks every UAV at the feasible point nearest to a target and
only tunes the antennas; ``baseline2`` also moves the UAVs. Both minimize the
hard-lobe average SINR by block coordinate descent without derivatives.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .admm import SolverReport, is_feasible, report_for
from .scenario import Scenario, wrap_angle
from .signalmodel import AzimuthObjective, GainMode, evaluate

__all__ = [
    "BcdConfig",
    "PlacementError",
    "nearest_feasible_point",
    "baseline1_placement",
    "lobe_coverage",
    "minimize_azimuth",
    "baseline1",
    "baseline2",
]

_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class BcdConfig:
    max_rounds: int = 100
    coord_tol: float = 1e-9
    angle_grid: int = 360
    position_step: float = 10.0
    golden_iters: int = 40
    max_moves: int = 500

    def __post_init__(self):
        if min(self.max_rounds, self.angle_grid, self.golden_iters, self.max_moves) < 1:
            raise ValueError("counts must be positive")
        if not (self.coord_tol > 0 and self.position_step > 0):
            raise ValueError("coord_tol and position_step must be positive")

    def replace(self, **changes) -> "BcdConfig":
        return replace(self, **changes)


def _hard(s: Scenario, xy, psi) -> float:
    return evaluate(s, xy, psi, GainMode.HARD, strict=False).avg


def _position_ok(s: Scenario, p, others) -> bool:
    if p[0] > s.deploy_x_max:
        return False
    q = np.array([p[0], p[1], s.altitude])
    if np.any(np.linalg.norm(s.target_positions - q, axis=1) < s.min_target_sep):
        return False
    if len(others) and np.any(np.hypot(*(np.asarray(others) - p).T) < s.min_uav_sep):
        return False
    return True


def nearest_feasible_point(s: Scenario, k: int) -> np.ndarray:
    """Closest deployable horizontal point to target ``k`` that keeps ``S_l``.

    The target's horizontal position is clamped into ``x <= x_max`` and, if
    still too close, pushed away from the target (along ``-x`` when the
    clamp did not move it) until the 3-D separation equals ``S_l``.
    """
    t = s.target_positions[k]
    p = np.array([min(t[0], s.deploy_x_max), t[1]])
    dz = s.altitude - t[2]
    need = np.sqrt(max(s.min_target_sep**2 - dz**2, 0.0))
    off = p - t[:2]
    cur = float(np.hypot(*off))
    if cur < need:
        direction = off / cur if cur > 0 else np.array([-1.0, 0.0])
        h = need
        p = t[:2] + direction * h
        while np.linalg.norm(np.array([p[0], p[1], s.altitude]) - t) < s.min_target_sep:
            h = np.nextafter(h, np.inf)
            p = t[:2] + direction * h
        p[0] = min(p[0], s.deploy_x_max)
    return p


def baseline1_placement(s: Scenario) -> np.ndarray:
    """Round-robin target assignment, nearest point, then y-offsets of ``R_l``
    multiples until every pairwise and target separation holds."""
    xy = []
    for i in range(s.num_uavs):
        base = nearest_feasible_point(s, i % s.num_targets)
        for n in range(0, 4 * s.num_uavs + 8):
            mult = (n + 1) // 2 * (1 if n % 2 else -1)
            cand = base + np.array([0.0, mult * s.min_uav_sep])
            if _position_ok(s, cand, xy):
                xy.append(cand)
                break
        else:
            raise PlacementError(f"could not place UAV {i}")
    return np.array(xy)


def lobe_coverage(s: Scenario, xy_i, psi_grid) -> np.ndarray:
    """Number of targets strictly inside the hard main lobe for each heading."""
    t = s.target_positions
    dx = t[:, 0] - xy_i[0]
    dy = t[:, 1] - xy_i[1]
    dz = t[:, 2] - s.altitude
    d = np.sqrt(dx * dx + dy * dy + dz * dz)
    c = (np.cos(psi_grid)[:, None] * dx + np.sin(psi_grid)[:, None] * dy) / d
    return np.sum(c > np.cos(s.half_beamwidth), axis=1)


def _angle_to(xy_i, target) -> float:
    return float(np.arctan2(target[1] - xy_i[1], target[0] - xy_i[0]))


def _initial_azimuths(s: Scenario, xy, cfg: BcdConfig) -> np.ndarray:
    grid = -np.pi + 2.0 * np.pi * (np.arange(cfg.angle_grid) + 1) / cfg.angle_grid
    psi = np.empty(s.num_uavs)
    for i in range(s.num_uavs):
        aim = _angle_to(xy[i], s.target_positions[i % s.num_targets])
        count = lobe_coverage(s, xy[i], grid)
        if count.max() == 0:
            psi[i] = aim
            continue
        cands = grid[count == count.max()]
        miss = np.abs(wrap_angle(cands - aim))
        psi[i] = cands[int(np.argmin(miss))]
    return wrap_angle(psi)


def minimize_azimuth(f: AzimuthObjective, psi, i: int, cfg: BcdConfig):
    """Grid search plus golden-section refinement of ``psi[i]`` alone.

    Returns ``(psi_new, value)``; ``psi`` is returned unchanged unless the
    objective strictly decreases.
    """
    psi = np.array(psi, dtype=float)
    current = float(f(psi[None, :], grad=False)[0][0])
    h = 2.0 * np.pi / cfg.angle_grid
    grid = psi[i] + h * np.arange(cfg.angle_grid)
    batch = np.repeat(psi[None, :], cfg.angle_grid, axis=0)
    batch[:, i] = grid
    vals, _ = f(batch, grad=False)
    j = int(np.argmin(vals))
    best_a, best_v = grid[j], float(vals[j])

    def at(a):
        trial = psi.copy()
        trial[i] = a
        return float(f(trial[None, :], grad=False)[0][0])

    lo, hi = best_a - h, best_a + h
    x1, x2 = hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo)
    f1, f2 = at(x1), at(x2)
    for _ in range(cfg.golden_iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = at(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = at(x2)
        for a, v in ((x1, f1), (x2, f2)):
            if v < best_v:
                best_a, best_v = a, v
    if best_v < current:
        psi[i] = wrap_angle(best_a)
        return psi, best_v
    return psi, current


def _azimuth_round(s, xy, psi, cfg):
    f = AzimuthObjective(s, xy, GainMode.HARD)
    val = None
    for i in range(s.num_uavs):
        psi, val = minimize_azimuth(f, psi, i, cfg)
    return psi, val


_MOVES = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


def _position_block(s, xy, psi, i, cfg, current):
    """Pattern search on UAV ``i``: take the best strictly improving axis
    move of ``position_step`` until none is left."""
    xy = xy.copy()
    moved = 0
    for _ in range(cfg.max_moves):
        others = np.delete(xy, i, axis=0)
        best = None
        for mv in _MOVES:
            cand = xy[i] + cfg.position_step * mv
            if not _position_ok(s, cand, others):
                continue
            trial = xy.copy()
            trial[i] = cand
            v = _hard(s, trial, psi)
            if v < current and (best is None or v < best[1]):
                best = (cand, v)
        if best is None:
            break
        xy[i], current = best
        moved += 1
    return xy, current, moved


def _run(s, xy, psi, cfg, move_positions):
    rounds = 0
    converged = False
    current = _hard(s, xy, psi)
    history = [current]
    for rounds in range(1, cfg.max_rounds + 1):
        start = current
        psi, current = _azimuth_round(s, xy, psi, cfg)
        if move_positions:
            for i in range(s.num_uavs):
                xy, current, _ = _position_block(s, xy, psi, i, cfg, current)
        history.append(current)
        if start - current <= cfg.coord_tol * abs(start):
            converged = True
            break
    return xy, psi, converged, rounds, history


def _check(s: Scenario):
    if s.num_targets < 1:
        raise PlacementError("need at least one target")


def baseline1(s: Scenario, cfg: BcdConfig | None = None) -> SolverReport:
    """Nearest-point placement, coverage-maximizing headings, then BCD on headings."""
    cfg = BcdConfig() if cfg is None else cfg
    _check(s)
    t0 = time.perf_counter()
    xy = baseline1_placement(s)
    psi = _initial_azimuths(s, xy, cfg)
    xy, psi, converged, rounds, history = _run(s, xy, psi, cfg, move_positions=False)
    d = s.deployment(xy, psi)
    assert is_feasible(s, d, rtol=0.0)
    return report_for(s, d, "baseline1", converged=converged, iterations=rounds,
                      final_residual=0.0, wall_time=time.perf_counter() - t0,
                      objective_history=history)


def baseline2(s: Scenario, cfg: BcdConfig | None = None) -> SolverReport:
    """Alternating BCD over headings and positions, started from baseline 1."""
    cfg = BcdConfig() if cfg is None else cfg
    _check(s)
    t0 = time.perf_counter()
    start = baseline1(s, cfg).deployment
    xy, psi, converged, rounds, history = _run(s, start.xy.copy(), start.azimuths.copy(), cfg,
                                               move_positions=True)
    d = s.deployment(xy, psi)
    assert is_feasible(s, d, rtol=0.0)
    return report_for(s, d, "baseline2", converged=converged, iterations=rounds,
                      final_residual=0.0, wall_time=time.perf_counter() - t0,
                      objective_history=history)
