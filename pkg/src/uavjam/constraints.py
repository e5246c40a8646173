"""Auxiliary-variable splitting of the separation constraints.

UAV-target differences ``q_i - q_t,k`` are copied into the rows of ``B`` and
UAV-UAV differences ``q_i - q_j`` into the rows of ``C``. The coefficient
operators that build these differences from ``Q`` are represented by index
lists (:class:`ConstraintMaps`) instead of dense matrices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ZeroVectorError",
    "ConstraintMaps",
    "AuxState",
    "build_maps",
    "target_differences",
    "uav_differences",
    "project_min_norm",
    "project_rows",
    "consensus_aux",
    "step1_update",
    "primal_residual",
]

log = logging.getLogger(__name__)


class ZeroVectorError(ValueError):
    """Projection onto a ball exterior is undefined for the zero vector."""


@dataclass(frozen=True)
class ConstraintMaps:
    """Row layout of ``B`` and ``C``.

    ``target_pairs[v] = (i, k)`` for row ``v`` of ``B`` and
    ``uav_pairs[v] = (i, j)``, ``i < j``, for row ``v`` of ``C``. Both are
    ordered by UAV index first, then by the second index.
    """

    num_uavs: int
    num_targets: int
    target_pairs: tuple[tuple[int, int], ...]
    uav_pairs: tuple[tuple[int, int], ...]

    @property
    def tp_uav(self) -> np.ndarray:
        return np.array([p[0] for p in self.target_pairs], dtype=int)

    @property
    def tp_target(self) -> np.ndarray:
        return np.array([p[1] for p in self.target_pairs], dtype=int)

    @property
    def up_first(self) -> np.ndarray:
        return np.array([p[0] for p in self.uav_pairs], dtype=int)

    @property
    def up_second(self) -> np.ndarray:
        return np.array([p[1] for p in self.uav_pairs], dtype=int)


@dataclass(frozen=True)
class AuxState:
    """Consensus copies ``B``, ``C`` and their scaled multipliers."""

    B: np.ndarray
    C: np.ndarray
    chi: np.ndarray
    mu: np.ndarray

    def replace(self, **changes) -> "AuxState":
        return replace(self, **changes)


def build_maps(m: int, k: int) -> ConstraintMaps:
    if m < 1 or k < 0:
        raise ValueError("need m >= 1 and k >= 0")
    tp = tuple((i, t) for i in range(m) for t in range(k))
    up = tuple((i, j) for i in range(m) for j in range(i + 1, m))
    return ConstraintMaps(m, k, tp, up)


def target_differences(maps: ConstraintMaps, Q, Q_t) -> np.ndarray:
    """Rows ``q_i - q_t,k`` in ``target_pairs`` order (the ``A1 Q - A2 Q_t`` map)."""
    Q = np.asarray(Q, dtype=float)
    Q_t = np.asarray(Q_t, dtype=float)
    if not maps.target_pairs:
        return np.zeros((0, Q.shape[1]))
    return Q[maps.tp_uav] - Q_t[maps.tp_target]


def uav_differences(maps: ConstraintMaps, Q) -> np.ndarray:
    """Rows ``q_i - q_j`` in ``uav_pairs`` order (the ``A3 Q`` map)."""
    Q = np.asarray(Q, dtype=float)
    if not maps.uav_pairs:
        return np.zeros((0, Q.shape[1]))
    return Q[maps.up_first] - Q[maps.up_second]


def _row_norms(v: np.ndarray) -> np.ndarray:
    # scaled so tiny or huge rows neither underflow nor overflow
    peak = np.max(np.abs(v), axis=-1, keepdims=True)
    safe = np.where(peak > 0, peak, 1.0)
    return peak[..., 0] * np.sqrt(np.sum((v / safe) ** 2, axis=-1))


def project_min_norm(v, radius: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x : ||x|| >= radius}``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    n = float(_row_norms(v))
    if n == 0.0:
        raise ZeroVectorError("cannot project the zero vector: direction undefined")
    if n >= radius:
        return v.copy()
    return (v / n) * radius


def project_rows(V, radius: float) -> np.ndarray:
    """Apply :func:`project_min_norm` to every row of ``V``.

    A zero row has no unique projection; it is sent to ``(radius, 0, ...)``
    with a warning so that the result stays deterministic.
    """
    V = np.asarray(V, dtype=float)
    n = _row_norms(V)
    zero = n == 0.0
    safe = np.where(zero, 1.0, n)
    out = np.where((n >= radius)[:, None], V, V / safe[:, None] * radius)
    if np.any(zero):
        log.warning("zero-length consensus row(s) %s displaced along +x", np.flatnonzero(zero).tolist())
        out[zero] = 0.0
        out[zero, 0] = radius
    return out


def consensus_aux(maps: ConstraintMaps, Q, Q_t, min_target_sep: float, min_uav_sep: float) -> AuxState:
    """Auxiliaries at their (projected) consensus values with zero multipliers."""
    B = project_rows(target_differences(maps, Q, Q_t), min_target_sep)
    C = project_rows(uav_differences(maps, Q), min_uav_sep)
    return AuxState(B, C, np.zeros_like(B), np.zeros_like(C))


def step1_update(maps: ConstraintMaps, Q, Q_t, aux: AuxState, min_target_sep: float,
                 min_uav_sep: float) -> AuxState:
    """Closed-form minimization over ``B`` and ``C`` (multipliers unchanged).

    Each row is an independent projection of the shifted consensus value
    onto the exterior of the corresponding separation ball.
    """
    B = project_rows(target_differences(maps, Q, Q_t) + aux.chi, min_target_sep)
    C = project_rows(uav_differences(maps, Q) + aux.mu, min_uav_sep)
    return aux.replace(B=B, C=C)


def primal_residual(maps: ConstraintMaps, Q, Q_t, aux: AuxState) -> float:
    """Sum of the Frobenius norms of both consensus gaps."""
    gap_b = target_differences(maps, Q, Q_t) - aux.B
    gap_c = uav_differences(maps, Q) - aux.C
    return float(np.sqrt(np.sum(gap_b * gap_b)) + np.sqrt(np.sum(gap_c * gap_c)))
