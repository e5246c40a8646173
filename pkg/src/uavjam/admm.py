"""ADMM solver for joint UAV placement and antenna orientation.

Each outer iteration runs four steps:

1. project the shifted consensus copies ``B`` and ``C`` onto their
   separation constraints (closed form, :mod:`uavjam.constraints`);
2. update the horizontal UAV coordinates by hybrid gradient projection on
   the augmented Lagrangian (:mod:`uavjam.gradproj`);
3. update the azimuths by multi-start gradient descent on the SINR;
4. update the scaled multipliers, rescaling them when they grow too large.

The loop stops once the primal residual drops below ``eta``.

Consensus variables, multipliers and the residual are expressed in units of
``length_unit`` meters. The optimized objective is the average SINR under a
differentiable gain surrogate; everything reported uses the hard lobe.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .constraints import (
    AuxState,
    ConstraintMaps,
    build_maps,
    consensus_aux,
    primal_residual,
    step1_update,
    target_differences,
    uav_differences,
)
from .gradproj import GradProjConfig, NumericalFailure, gradient_projection
from .scenario import Deployment, Scenario, wrap_angle
from .signalmodel import AzimuthObjective, GainMode, evaluate, to_db

__all__ = [
    "AdmmConfig",
    "AdmmState",
    "SolverReport",
    "InfeasibleInitError",
    "SolverFailure",
    "constraint_slack",
    "is_feasible",
    "default_initial_deployment",
    "initial_state",
    "augmented_lagrangian",
    "augmented_lagrangian_grad_xy",
    "update_q",
    "update_psi",
    "update_multipliers",
    "solve",
    "report_for",
]

FEASIBILITY_RTOL = 1e-6


class InfeasibleInitError(ValueError):
    pass


class SolverFailure(RuntimeError):
    """The inner solver failed; ``outer_iter`` is the ADMM iteration index."""

    def __init__(self, message: str, outer_iter: int):
        super().__init__(f"{message} (outer iteration {outer_iter})")
        self.outer_iter = outer_iter


@dataclass(frozen=True)
class AdmmConfig:
    """Outer-loop controls.

    The surrogate gain is ``surrogate``; for the masked surrogate the mask
    width shrinks geometrically from ``mask_width_start`` to
    ``mask_width_end`` (factor ``mask_decay`` per outer iteration) and the
    loop may only stop once the final width is reached.

    ``clip_mode="rescale"`` divides a multiplier matrix by its largest
    absolute entry once that entry reaches ``omega``; ``"clamp"`` instead
    clips entries to ``[-omega, omega]``.
    """

    rho1: float = 0.01
    rho2: float = 0.01
    eta: float = 1e-3
    omega_chi: float = 200.0
    omega_mu: float = 200.0
    max_outer_iters: int = 300
    psi_starts: int = 12
    psi_step: float = 0.2
    psi_iters: int = 60
    psi_tol: float = 1e-9
    gradproj: GradProjConfig = field(default_factory=lambda: GradProjConfig(alpha_nag=20.0, max_iters=200))
    clip_mode: str = "rescale"
    length_unit: float = 100.0
    surrogate: GainMode = GainMode.MASKED
    mask_width_start: float = 0.2
    mask_width_end: float = 0.005
    mask_decay: float = 0.85

    def __post_init__(self):
        positive = ("eta", "omega_chi", "omega_mu", "psi_step", "length_unit",
                    "mask_width_start", "mask_width_end")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.rho1 < 0 or self.rho2 < 0:
            raise ValueError("penalties must be nonnegative")
        if self.max_outer_iters < 1 or self.psi_starts < 1 or self.psi_iters < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.clip_mode not in ("rescale", "clamp"):
            raise ValueError("clip_mode must be 'rescale' or 'clamp'")
        if not 0.0 < self.mask_decay <= 1.0:
            raise ValueError("mask_decay must lie in (0, 1]")
        object.__setattr__(self, "surrogate", GainMode(self.surrogate))

    def replace(self, **changes) -> "AdmmConfig":
        return replace(self, **changes)

    def mask_width_at(self, outer_iter: int) -> float:
        return max(self.mask_width_end, self.mask_width_start * self.mask_decay**outer_iter)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, GradProjConfig):
                out[k] = dict(v.__dict__)
            elif isinstance(v, GainMode):
                out[k] = v.value
            else:
                out[k] = v
        return out


@dataclass(frozen=True)
class AdmmState:
    deployment: Deployment
    aux: AuxState
    mask_width: float
    residual_history: tuple = ()
    objective_history: tuple = ()
    surrogate_history: tuple = ()
    iter: int = 0

    def replace(self, **changes) -> "AdmmState":
        return replace(self, **changes)


@dataclass
class SolverReport:
    """Outcome of one solve (or baseline run); metrics use the hard lobe."""

    scheme: str
    deployment: Deployment
    sinr: np.ndarray
    avg_sinr: float
    converged: bool
    iterations: int
    final_residual: float
    wall_time: float
    residual_history: list = field(default_factory=list)
    objective_history: list = field(default_factory=list)
    surrogate_history: list = field(default_factory=list)
    slack: dict = field(default_factory=dict)

    @property
    def sinr_db(self) -> np.ndarray:
        return to_db(self.sinr)

    @property
    def avg_sinr_db(self) -> float:
        return float(to_db(self.avg_sinr))

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "scheme": self.scheme,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "avg_sinr_linear": self.avg_sinr,
            "avg_sinr_db": self.avg_sinr_db,
            "sinr_linear": [float(v) for v in self.sinr],
            "sinr_db": [float(v) for v in self.sinr_db],
            "positions_m": [[float(c) for c in row] for row in self.deployment.positions],
            "azimuths_rad": [float(v) for v in self.deployment.azimuths],
            "constraint_slack_m": self.slack,
            "residual_history": [float(v) for v in self.residual_history],
            "objective_history": [float(v) for v in self.objective_history],
            "surrogate_history": [float(v) for v in self.surrogate_history],
        }
        if timing:
            out["wall_time_s"] = self.wall_time
        return out


# ---------------------------------------------------------------------------
# feasibility helpers


def constraint_slack(s: Scenario, d: Deployment) -> dict:
    """Worst-case slack of every deployment constraint (negative = violated)."""
    q = d.positions
    sep = np.linalg.norm(q[:, None, :] - s.target_positions[None, :, :], axis=2)
    out = {
        "deploy_x": float(s.deploy_x_max - q[:, 0].max()),
        "target_separation": float(sep.min() - s.min_target_sep),
        "uav_separation": None,
        "altitude": float(np.abs(q[:, 2] - s.altitude).max()),
    }
    if s.num_uavs > 1:
        iu = np.triu_indices(s.num_uavs, 1)
        dd = np.linalg.norm(q[:, None, :] - q[None, :, :], axis=2)[iu]
        out["uav_separation"] = float(dd.min() - s.min_uav_sep)
    return out


def is_feasible(s: Scenario, d: Deployment, rtol: float = FEASIBILITY_RTOL) -> bool:
    sl = constraint_slack(s, d)
    ok = sl["deploy_x"] >= 0.0 and sl["altitude"] == 0.0
    ok = ok and sl["target_separation"] >= -rtol * s.min_target_sep
    if sl["uav_separation"] is not None:
        ok = ok and sl["uav_separation"] >= -rtol * s.min_uav_sep
    return bool(ok)


def default_initial_deployment(s: Scenario) -> Deployment:
    """UAVs on the line ``x = x_max - S_l``, spread over the targets' y-range,
    each pointing at its nearest target."""
    m = s.num_uavs
    ys = s.target_positions[:, 1]
    lo, hi = float(ys.min()), float(ys.max())
    span = max(hi - lo, 1.5 * s.min_uav_sep * m)
    mid = 0.5 * (lo + hi)
    y = mid + (np.arange(m) + 0.5 - 0.5 * m) * (span / m)
    x = np.full(m, s.deploy_x_max - s.min_target_sep)
    xy = np.column_stack([x, y])
    dxy = s.target_positions[None, :, :2] - xy[:, None, :]
    nearest = np.argmin(np.sum(dxy**2, axis=2), axis=1)
    pick = dxy[np.arange(m), nearest]
    psi = np.arctan2(pick[:, 1], pick[:, 0])
    return s.deployment(xy, psi)


def _scaled(s: Scenario, cfg: AdmmConfig, positions):
    return np.asarray(positions, dtype=float) / cfg.length_unit, s.target_positions / cfg.length_unit


def initial_state(s: Scenario, cfg: AdmmConfig, init: Deployment | None = None) -> AdmmState:
    d = default_initial_deployment(s) if init is None else init
    if d.positions.shape != (s.num_uavs, 3):
        raise InfeasibleInitError("initial deployment has the wrong shape")
    if not is_feasible(s, d, rtol=0.0):
        raise InfeasibleInitError(f"initial deployment violates constraints: {constraint_slack(s, d)}")
    maps = build_maps(s.num_uavs, s.num_targets)
    Q, Qt = _scaled(s, cfg, d.positions)
    aux = consensus_aux(maps, Q, Qt, s.min_target_sep / cfg.length_unit, s.min_uav_sep / cfg.length_unit)
    width = cfg.mask_width_at(0)
    return AdmmState(deployment=d, aux=aux, mask_width=width)


# ---------------------------------------------------------------------------
# augmented Lagrangian


def _penalty_terms(s, cfg, maps, positions, aux):
    Q, Qt = _scaled(s, cfg, positions)
    rb = target_differences(maps, Q, Qt) - aux.B + aux.chi
    rc = uav_differences(maps, Q) - aux.C + aux.mu
    return rb, rc


def augmented_lagrangian(s: Scenario, st: AdmmState, cfg: AdmmConfig,
                         maps: ConstraintMaps | None = None) -> float:
    """Scaled-form augmented Lagrangian at the state's primal and dual values."""
    maps = build_maps(s.num_uavs, s.num_targets) if maps is None else maps
    d = st.deployment
    aux = st.aux
    obj = evaluate(s, d.xy, d.azimuths, cfg.surrogate, mask_width=st.mask_width).avg
    rb, rc = _penalty_terms(s, cfg, maps, d.positions, aux)
    return (obj
            + 0.5 * cfg.rho1 * float(np.sum(rb * rb)) - 0.5 * cfg.rho1 * float(np.sum(aux.chi**2))
            + 0.5 * cfg.rho2 * float(np.sum(rc * rc)) - 0.5 * cfg.rho2 * float(np.sum(aux.mu**2)))


def _penalty_grad(maps, rb, rc, m, rho1, rho2, unit):
    g = np.zeros((m, 3))
    if len(rb):
        np.add.at(g, maps.tp_uav, rho1 * rb)
    if len(rc):
        np.add.at(g, maps.up_first, rho2 * rc)
        np.add.at(g, maps.up_second, -rho2 * rc)
    return g[:, :2] / unit


def augmented_lagrangian_grad_xy(s: Scenario, st: AdmmState, cfg: AdmmConfig,
                                 maps: ConstraintMaps | None = None) -> np.ndarray:
    """Gradient of :func:`augmented_lagrangian` w.r.t. UAV x, y (per meter)."""
    maps = build_maps(s.num_uavs, s.num_targets) if maps is None else maps
    d = st.deployment
    ev = evaluate(s, d.xy, d.azimuths, cfg.surrogate, mask_width=st.mask_width, grad_xy=True)
    rb, rc = _penalty_terms(s, cfg, maps, d.positions, st.aux)
    return ev.grad_xy + _penalty_grad(maps, rb, rc, s.num_uavs, cfg.rho1, cfg.rho2, cfg.length_unit)


def _q_objective(s, cfg, maps, st):
    psi = st.deployment.azimuths
    aux = st.aux
    unit = cfg.length_unit
    Qt = s.target_positions / unit
    z = np.full((s.num_uavs, 1), s.altitude / unit)
    const = 0.5 * cfg.rho1 * float(np.sum(aux.chi**2)) + 0.5 * cfg.rho2 * float(np.sum(aux.mu**2))

    def objective(xy, grad=True):
        ev = evaluate(s, xy, psi, cfg.surrogate, mask_width=st.mask_width, grad_xy=grad)
        Q = np.hstack([xy / unit, z])
        rb = target_differences(maps, Q, Qt) - aux.B + aux.chi
        rc = uav_differences(maps, Q) - aux.C + aux.mu
        val = ev.avg + 0.5 * cfg.rho1 * float(np.sum(rb * rb)) + 0.5 * cfg.rho2 * float(np.sum(rc * rc)) - const
        if not grad:
            return val, None
        return val, ev.grad_xy + _penalty_grad(maps, rb, rc, s.num_uavs, cfg.rho1, cfg.rho2, unit)

    return objective


# ---------------------------------------------------------------------------
# the four steps


def update_q(s: Scenario, st: AdmmState, cfg: AdmmConfig, maps: ConstraintMaps | None = None) -> AdmmState:
    """Minimize the augmented Lagrangian over UAV x, y with everything else fixed."""
    maps = build_maps(s.num_uavs, s.num_targets) if maps is None else maps
    objective = _q_objective(s, cfg, maps, st)
    try:
        xy, _ = gradient_projection(objective, st.deployment.xy, cfg.gradproj, x_max=s.deploy_x_max)
    except NumericalFailure as exc:
        raise SolverFailure(str(exc), st.iter) from exc
    return st.replace(deployment=s.deployment(xy, st.deployment.azimuths))


def _descend_psi(f, starts, cfg: AdmmConfig):
    """Batched gradient descent with backtracking, one row per start."""
    psi = np.array(starts, dtype=float)
    val, grad = f(psi)
    active = np.ones(len(psi), dtype=bool)
    for _ in range(cfg.psi_iters):
        gmax = np.abs(grad).max(axis=1)
        active &= gmax > 0
        if not active.any():
            break
        step = np.where(active, cfg.psi_step / np.where(gmax > 0, gmax, 1.0), 0.0)
        g2 = np.sum(grad * grad, axis=1)
        done = ~active
        new_psi, new_val = psi.copy(), val.copy()
        for _ in range(40):
            trial = psi - step[:, None] * grad
            tval, _ = f(trial, grad=False)
            ok = ~done & (tval <= val - 1e-4 * step * g2) & (tval < val)
            new_psi[ok], new_val[ok] = trial[ok], tval[ok]
            done |= ok
            if done.all():
                break
            step = np.where(done, step, 0.5 * step)
        moved = done & active
        rel = np.abs(val - new_val) <= cfg.psi_tol * np.abs(val)
        active &= moved & ~rel
        psi, val = new_psi, new_val
        if active.any():
            _, grad = f(psi)
    return psi, val


def update_psi(s: Scenario, st: AdmmState, cfg: AdmmConfig) -> AdmmState:
    """Multi-start gradient descent on the surrogate SINR over the azimuths."""
    d = st.deployment
    m = s.num_uavs
    f = AzimuthObjective(s, d.xy, cfg.surrogate, st.mask_width)
    grid = np.pi * (2.0 * np.arange(cfg.psi_starts) + 1.0 - cfg.psi_starts) / cfg.psi_starts
    starts = np.vstack([d.azimuths[None, :], np.repeat(grid[:, None], m, axis=1)])
    psi, val = _descend_psi(f, starts, cfg)
    best = int(np.argmin(val))
    return st.replace(deployment=s.deployment(d.xy, wrap_angle(psi[best])))


def _clip(M: np.ndarray, omega: float, mode: str) -> np.ndarray:
    if M.size == 0:
        return M
    peak = float(np.abs(M).max())
    if peak < omega:
        return M
    if mode == "clamp":
        return np.clip(M, -omega, omega)
    return M / peak


def update_multipliers(st: AdmmState, cfg: AdmmConfig, maps: ConstraintMaps, Q_t) -> AdmmState:
    """Dual ascent on the scaled multipliers, with the large-value safeguard.

    ``Q_t`` and the state's positions are in meters; the consensus gaps are
    formed in ``cfg.length_unit`` units.
    """
    unit = cfg.length_unit
    Q = st.deployment.positions / unit
    aux = st.aux
    chi = aux.chi + (target_differences(maps, Q, np.asarray(Q_t) / unit) - aux.B)
    mu = aux.mu + (uav_differences(maps, Q) - aux.C)
    return st.replace(aux=aux.replace(chi=_clip(chi, cfg.omega_chi, cfg.clip_mode),
                                      mu=_clip(mu, cfg.omega_mu, cfg.clip_mode)))


# ---------------------------------------------------------------------------


def report_for(s: Scenario, d: Deployment, scheme: str, **extra) -> SolverReport:
    ev = evaluate(s, d.xy, d.azimuths, GainMode.HARD, strict=False)
    return SolverReport(scheme=scheme, deployment=d, sinr=ev.sinr, avg_sinr=ev.avg,
                        slack=constraint_slack(s, d), **extra)


def solve(s: Scenario, init: Deployment | None = None, cfg: AdmmConfig | None = None) -> SolverReport:
    """Run the ADMM loop and report the best feasible deployment seen.

    The report is flagged non-converged when ``max_outer_iters`` is reached
    before the residual criterion holds.
    """
    cfg = AdmmConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    maps = build_maps(s.num_uavs, s.num_targets)
    st = initial_state(s, cfg, init)
    unit = cfg.length_unit
    b_rad, c_rad = s.min_target_sep / unit, s.min_uav_sep / unit

    def hard(d):
        return evaluate(s, d.xy, d.azimuths, GainMode.HARD).avg

    best_d, best_val = st.deployment, hard(st.deployment)
    converged = False
    residual = float("nan")
    res_hist, obj_hist, sur_hist = [], [], []
    for it in range(cfg.max_outer_iters):
        st = st.replace(iter=it, mask_width=cfg.mask_width_at(it))
        Q, Qt = _scaled(s, cfg, st.deployment.positions)
        st = st.replace(aux=step1_update(maps, Q, Qt, st.aux, b_rad, c_rad))
        st = update_q(s, st, cfg, maps)
        st = update_psi(s, st, cfg)
        Q, Qt = _scaled(s, cfg, st.deployment.positions)
        residual = primal_residual(maps, Q, Qt, st.aux)
        st = update_multipliers(st, cfg, maps, s.target_positions)

        d = st.deployment
        val = hard(d)
        res_hist.append(residual)
        obj_hist.append(val)
        sur_hist.append(evaluate(s, d.xy, d.azimuths, cfg.surrogate, mask_width=st.mask_width).avg)
        if val < best_val and is_feasible(s, d):
            best_d, best_val = d, val
        if residual <= cfg.eta and st.mask_width <= cfg.mask_width_end:
            converged = True
            break

    st = st.replace(residual_history=tuple(res_hist), objective_history=tuple(obj_hist),
                    surrogate_history=tuple(sur_hist), iter=len(res_hist))
    return report_for(s, best_d, "proposed", converged=converged, iterations=len(res_hist),
                      final_residual=residual, wall_time=time.perf_counter() - t0,
                      residual_history=res_hist, objective_history=obj_hist,
                      surrogate_history=sur_hist)
