"""Gradient projection with a hybrid Nesterov / RMSProp direction.

The descent direction mixes a Nesterov-style momentum term with per-axis
RMSProp scaling. The x and y axes each keep a single scalar second-moment
accumulator built from the squared norm of all x (resp. y) gradient
components, and the bias-corrected value is what gets carried to the next
iteration. The feasible set is the half-plane ``x <= x_max``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

__all__ = [
    "GradProjConfig",
    "GradProjState",
    "NumericalFailure",
    "hybrid_step",
    "project_deploy",
    "gradient_projection",
]

Objective = Callable[..., tuple]


class NumericalFailure(ArithmeticError):
    """Objective or gradient became non-finite; ``iterate`` holds the point."""

    def __init__(self, message: str, iterate: np.ndarray):
        super().__init__(message)
        self.iterate = iterate


@dataclass(frozen=True)
class GradProjConfig:
    """Inner-solver controls.

    ``alpha_nag`` is in meters: with RMSProp scaling the largest per-axis
    move of a plain step is about ``alpha_nag``. ``alpha_search`` is the
    (initial) step along ``Q_proj - Q``; with ``line_search`` it is halved
    until the objective decreases, otherwise it is used as is. ``tol`` is a
    relative objective-change threshold.
    """

    beta_nag: float = 0.9
    rho_rms: float = 0.9
    eps_rms: float = 1e-8
    alpha_nag: float = 1.0
    alpha_search: float = 1.0
    max_iters: int = 500
    tol: float = 1e-6
    line_search: bool = True
    armijo: float = 1e-4
    max_backtracks: int = 30

    def __post_init__(self):
        if not 0.0 <= self.beta_nag < 1.0:
            raise ValueError("beta_nag must lie in [0, 1)")
        if not 0.0 < self.rho_rms < 1.0:
            raise ValueError("rho_rms must lie in (0, 1)")
        if self.eps_rms <= 0 or self.alpha_nag <= 0:
            raise ValueError("eps_rms and alpha_nag must be positive")
        if not 0.0 < self.alpha_search <= 1.0:
            raise ValueError("alpha_search must lie in (0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")

    def replace(self, **changes) -> "GradProjConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class GradProjState:
    D_last: np.ndarray
    G_last: np.ndarray
    v_x: float = 0.0
    v_y: float = 0.0
    t: int = 1
    t_last: int = 0  # tracked for completeness, never read

    @classmethod
    def initial(cls, m: int) -> "GradProjState":
        return cls(np.zeros((m, 2)), np.zeros((m, 2)))


def hybrid_step(Q, G, st: GradProjState, cfg: GradProjConfig):
    """One hybrid descent step (before projection).

    Returns ``(Q_bar, new_state)``.
    """
    Q = np.asarray(Q, dtype=float)
    G = np.asarray(G, dtype=float)
    beta, rho = cfg.beta_nag, cfg.rho_rms
    D = beta * st.D_last + G + beta * (G - st.G_last)
    corr = 1.0 - rho**st.t
    v_x = (rho * st.v_x + (1.0 - rho) * float(np.sum(G[:, 0] ** 2))) / corr
    v_y = (rho * st.v_y + (1.0 - rho) * float(np.sum(G[:, 1] ** 2))) / corr
    Q_bar = np.empty_like(Q)
    Q_bar[:, 0] = Q[:, 0] - cfg.alpha_nag * D[:, 0] / (np.sqrt(v_x) + cfg.eps_rms)
    Q_bar[:, 1] = Q[:, 1] - cfg.alpha_nag * D[:, 1] / (np.sqrt(v_y) + cfg.eps_rms)
    new = GradProjState(D, G.copy(), v_x, v_y, st.t + 1, st.t)
    return Q_bar, new


def project_deploy(Q_bar, x_max: float) -> np.ndarray:
    """Projection onto the deployable half-plane ``x <= x_max``."""
    out = np.array(Q_bar, dtype=float)
    out[:, 0] = np.minimum(out[:, 0], x_max)
    return out


def _check(f, G, Q):
    if not np.isfinite(f) or (G is not None and not np.all(np.isfinite(G))):
        raise NumericalFailure("non-finite objective or gradient", np.array(Q))


def gradient_projection(objective: Objective, Q0, cfg: GradProjConfig | None = None,
                        x_max: float = np.inf):
    """Minimize ``objective`` over ``{Q : Q[:, 0] <= x_max}``.

    ``objective(Q)`` must return ``(value, gradient)``; when called as
    ``objective(Q, grad=False)`` it may return ``(value, None)``.

    Returns ``(Q_best, trace)`` where ``trace`` lists the objective value of
    the start point and of every accepted iterate; ``Q_best`` is the iterate
    with the lowest value seen.
    """
    cfg = GradProjConfig() if cfg is None else cfg
    Q = np.array(Q0, dtype=float)
    if np.any(Q[:, 0] > x_max):
        raise ValueError("starting point violates x <= x_max")
    f, G = objective(Q)
    _check(f, G, Q)
    st = GradProjState.initial(Q.shape[0])
    best_f, best_Q = f, Q.copy()
    trace = [f]

    for _ in range(cfg.max_iters):
        Q_bar, st_next = hybrid_step(Q, G, st, cfg)
        direction = project_deploy(Q_bar, x_max) - Q
        if not np.any(direction):
            break
        a = cfg.alpha_search
        if cfg.line_search:
            slope = float(np.sum(G * direction))
            accepted = False
            for _ in range(cfg.max_backtracks):
                trial = Q + a * direction
                trial[:, 0] = np.minimum(trial[:, 0], x_max)
                f_trial, _ = objective(trial, grad=False)
                if np.isfinite(f_trial) and f_trial < f and f_trial <= f + cfg.armijo * a * min(slope, 0.0):
                    accepted = True
                    break
                a *= 0.5
            if not accepted:
                if np.any(st.D_last) or np.any(st.G_last):
                    # momentum pointed uphill: restart from a plain step
                    st = GradProjState(np.zeros_like(Q), np.zeros_like(Q), st.v_x, st.v_y, st.t, st.t_last)
                    continue
                break
        Q_new = Q + a * direction
        Q_new[:, 0] = np.minimum(Q_new[:, 0], x_max)
        f_new, G_new = objective(Q_new)
        _check(f_new, G_new, Q_new)
        trace.append(f_new)
        st = st_next
        change = abs(f - f_new)
        Q, f, G = Q_new, f_new, G_new
        if f < best_f:
            best_f, best_Q = f, Q.copy()
        if change <= cfg.tol * max(abs(best_f), 1e-300):
            break
    return best_Q, trace
