"""Directional antenna gain, free-space channels, SINR and its gradients.

The boresight offset between UAV ``i`` and target ``k`` is the angle between
the horizontal antenna heading ``(cos psi, sin psi, 0)`` and the line of sight
``q_t - q_i``. Writing ``dot`` for their inner product and ``d`` for the
distance, ``cos(alpha) = dot / d``, which equals ``cos(phi - psi) cos(pitch)``.
Vectorized code uses this form; :func:`boresight_offset` keeps the angular one.

Three gain models are available:

* ``HARD``: ``exp(-alpha^2 / (2 theta^2))`` inside the main lobe, 0 outside.
* ``SMOOTH``: the same Gaussian lobe without the cutoff.
* ``MASKED``: the Gaussian lobe times a logistic mask in ``alpha^2`` that
  falls from 1 to 0 across the lobe edge over roughly ``mask_width`` radians.
  Unlike ``SMOOTH``, its optimum distance for a single target stays inside
  the hard main lobe, which makes it the surrogate used by the solver.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .scenario import Deployment, Scenario

__all__ = [
    "GainMode",
    "DegenerateGeometryError",
    "UnsupportedModeError",
    "AngleGeometry",
    "DEFAULT_MASK_WIDTH",
    "angles",
    "boresight_offset",
    "gain",
    "channel_gain_ctrl",
    "sinr_target",
    "sinr_targets",
    "avg_sinr",
    "grad_avg_sinr_q",
    "grad_avg_sinr_psi",
    "evaluate",
    "to_db",
    "Evaluation",
    "AzimuthObjective",
]

DEFAULT_MASK_WIDTH = 0.01


class GainMode(enum.Enum):
    HARD = "hard"
    SMOOTH = "smooth"
    MASKED = "masked"


class DegenerateGeometryError(ValueError):
    """Two points that must be separated coincide."""


class UnsupportedModeError(ValueError):
    """The hard gain model has no gradient."""


@dataclass(frozen=True)
class AngleGeometry:
    azimuth_to_target: float
    pitch_to_target: float
    boresight_offset: float | None = None


def to_db(x):
    return 10.0 * np.log10(x)


def angles(uav_pos, target_pos, strict: bool = True) -> AngleGeometry:
    """Azimuth (from +x, counterclockwise) and pitch from a UAV to a target.

    With ``strict=False`` a target directly below the UAV gets azimuth 0 and
    pitch -pi/2 instead of raising.
    """
    delta = np.asarray(target_pos, dtype=float) - np.asarray(uav_pos, dtype=float)
    horiz = float(np.hypot(delta[0], delta[1]))
    if horiz == 0.0:
        if strict:
            raise DegenerateGeometryError("UAV and target coincide in the horizontal plane")
        return AngleGeometry(0.0, float(np.copysign(np.pi / 2, delta[2])))
    return AngleGeometry(float(np.arctan2(delta[1], delta[0])), float(np.arctan2(delta[2], horiz)))


def boresight_offset(geom: AngleGeometry, azimuth_heading: float) -> float:
    c = np.cos(geom.azimuth_to_target - azimuth_heading) * np.cos(geom.pitch_to_target)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _gain_sq(a, theta, mode: GainMode, mask_width: float, with_derivative: bool = False):
    """Gain and dG/da as functions of the squared offset ``a = alpha**2``."""
    g = np.exp(-a / (2.0 * theta**2))
    if mode is GainMode.HARD:
        g = np.where(a < theta**2, g, 0.0)
        if with_derivative:
            raise UnsupportedModeError("the hard gain model is not differentiable")
        return g, None
    if mode is GainMode.MASKED:
        mask = _sigmoid((theta**2 - a) / (2.0 * theta * mask_width))
        if with_derivative:
            dg = g * mask * (-1.0 / (2.0 * theta**2) - (1.0 - mask) / (2.0 * theta * mask_width))
        g = g * mask
    elif with_derivative:
        dg = -g / (2.0 * theta**2)
    return g, (dg if with_derivative else None)


def gain(offset, half_beamwidth: float, mode: GainMode = GainMode.HARD,
         mask_width: float = DEFAULT_MASK_WIDTH):
    """Linear antenna gain for boresight offset(s) ``offset`` (radians)."""
    if half_beamwidth <= 0:
        raise ValueError("half_beamwidth must be positive")
    a = np.asarray(offset, dtype=float) ** 2
    g, _ = _gain_sq(a, half_beamwidth, GainMode(mode), mask_width)
    return float(g) if np.ndim(g) == 0 else g


def channel_gain_ctrl(target_pos, s: Scenario) -> float:
    """Free-space power gain from the control center to a target."""
    d2 = float(np.sum((np.asarray(target_pos, dtype=float) - s.control_center) ** 2))
    if d2 == 0.0:
        raise DegenerateGeometryError("target coincides with the control center")
    return s.channel_ref_gain / d2


# ---------------------------------------------------------------------------
# vectorized evaluation


@dataclass
class Evaluation:
    """Objective pieces for one (positions, azimuths) pair.

    ``sinr`` holds per-target SINR; the gradients are of the average SINR
    and are only present when requested.
    """

    sinr: np.ndarray
    avg: float
    grad_xy: np.ndarray | None = None
    grad_psi: np.ndarray | None = None


def evaluate(s: Scenario, xy, psi, mode: GainMode = GainMode.HARD, *,
             mask_width: float = DEFAULT_MASK_WIDTH, grad_xy: bool = False,
             grad_psi: bool = False, strict: bool = True) -> Evaluation:
    """Per-target SINR, the average and optionally its gradients.

    ``xy`` is ``M x 2`` (the altitude comes from the scenario) and ``psi``
    has length ``M``.
    """
    mode = GainMode(mode)
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    psi = np.asarray(psi, dtype=float).reshape(-1)
    theta = s.half_beamwidth
    tgt = s.target_positions

    dx = tgt[None, :, 0] - xy[:, 0, None]
    dy = tgt[None, :, 1] - xy[:, 1, None]
    dz = np.broadcast_to(tgt[None, :, 2] - s.altitude, dx.shape)
    if strict and np.any((dx == 0.0) & (dy == 0.0)):
        raise DegenerateGeometryError("a UAV is horizontally coincident with a target")
    d2 = dx * dx + dy * dy + dz * dz
    if np.any(d2 == 0.0):
        raise DegenerateGeometryError("a UAV coincides with a target")
    d = np.sqrt(d2)

    cpsi = np.cos(psi)[:, None]
    spsi = np.sin(psi)[:, None]
    dot = dx * cpsi + dy * spsi
    lateral = dx * spsi - dy * cpsi
    cross = np.sqrt(dz * dz + lateral * lateral)
    alpha = np.arctan2(cross, dot)
    a = alpha * alpha

    want_grad = grad_xy or grad_psi
    g, dg_da = _gain_sq(a, theta, mode, mask_width, with_derivative=want_grad)

    coef = (s.channel_ref_gain * s.jam_power * s.antenna_elements)[:, None]
    w = coef * g / d2
    jam = w.sum(axis=0)
    signal = s.signal_power()
    denom = jam + s.noise_power
    sinr = signal / denom
    k = s.num_targets
    out = Evaluation(sinr=sinr, avg=float(sinr.mean()))
    if not want_grad:
        return out

    # d(avg)/d(w_ik)
    dgam_dw = (-signal / denom**2 / k)[None, :]
    sin_alpha = np.maximum(cross / d, 1e-300)
    ratio = np.where(alpha < 1e-8, 1.0, alpha / sin_alpha)
    da_dc = -2.0 * ratio
    dw_dc = coef * dg_da * da_dc / d2
    if grad_xy:
        d4 = d2 * d2
        dc_dx = -cpsi / d + dot * dx / (d2 * d)
        dc_dy = -spsi / d + dot * dy / (d2 * d)
        dw_dx = dw_dc * dc_dx + coef * g * 2.0 * dx / d4
        dw_dy = dw_dc * dc_dy + coef * g * 2.0 * dy / d4
        out.grad_xy = np.column_stack([(dgam_dw * dw_dx).sum(axis=1), (dgam_dw * dw_dy).sum(axis=1)])
    if grad_psi:
        dc_dpsi = (-dx * spsi + dy * cpsi) / d
        out.grad_psi = (dgam_dw * dw_dc * dc_dpsi).sum(axis=1)
    return out


def sinr_targets(s: Scenario, d: Deployment, mode: GainMode = GainMode.HARD, **kw) -> np.ndarray:
    return evaluate(s, d.xy, d.azimuths, mode, **kw).sinr


def sinr_target(s: Scenario, d: Deployment, k: int, mode: GainMode = GainMode.HARD, **kw) -> float:
    """Linear SINR at target ``k``."""
    return float(sinr_targets(s, d, mode, **kw)[k])


def avg_sinr(s: Scenario, d: Deployment, mode: GainMode = GainMode.HARD, **kw) -> float:
    """Average linear SINR over all targets."""
    return evaluate(s, d.xy, d.azimuths, mode, **kw).avg


def grad_avg_sinr_q(s: Scenario, d: Deployment, mode: GainMode = GainMode.SMOOTH, **kw) -> np.ndarray:
    """Gradient of the average SINR w.r.t. UAV horizontal coordinates, ``M x 2``."""
    return evaluate(s, d.xy, d.azimuths, mode, grad_xy=True, **kw).grad_xy


def grad_avg_sinr_psi(s: Scenario, d: Deployment, mode: GainMode = GainMode.SMOOTH, **kw) -> np.ndarray:
    """Gradient of the average SINR w.r.t. antenna azimuths, length ``M``."""
    return evaluate(s, d.xy, d.azimuths, mode, grad_psi=True, **kw).grad_psi


class AzimuthObjective:
    """Average SINR as a function of azimuths only, for fixed positions.

    Geometry is computed once; calls accept a batch of azimuth vectors of
    shape ``(..., M)`` and return one value (and gradient row) per vector.
    """

    def __init__(self, s: Scenario, xy, mode: GainMode = GainMode.HARD,
                 mask_width: float = DEFAULT_MASK_WIDTH):
        self.mode = GainMode(mode)
        self.mask_width = mask_width
        self.theta = s.half_beamwidth
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        tgt = s.target_positions
        self.dx = tgt[None, :, 0] - xy[:, 0, None]
        self.dy = tgt[None, :, 1] - xy[:, 1, None]
        self.dz2 = (tgt[None, :, 2] - s.altitude) ** 2 + np.zeros_like(self.dx)
        self.d2 = self.dx**2 + self.dy**2 + self.dz2
        if np.any(self.d2 == 0.0):
            raise DegenerateGeometryError("a UAV coincides with a target")
        self.d = np.sqrt(self.d2)
        self.coef = (s.channel_ref_gain * s.jam_power * s.antenna_elements)[:, None] / self.d2
        self.signal = s.signal_power()
        self.noise = s.noise_power

    def contributions(self, psi, with_grad: bool = False):
        """Jamming power ``w[..., i, k]`` and, optionally, ``dw/dpsi_i``."""
        psi = np.asarray(psi, dtype=float)[..., :, None]
        cpsi, spsi = np.cos(psi), np.sin(psi)
        dot = self.dx * cpsi + self.dy * spsi
        lateral = self.dx * spsi - self.dy * cpsi
        cross = np.sqrt(self.dz2 + lateral * lateral)
        alpha = np.arctan2(cross, dot)
        g, dg = _gain_sq(alpha * alpha, self.theta, self.mode, self.mask_width, with_derivative=with_grad)
        w = self.coef * g
        if not with_grad:
            return w, None
        ratio = np.where(alpha < 1e-8, 1.0, alpha / np.maximum(cross / self.d, 1e-300))
        # dc/dpsi = -lateral / d
        dw = self.coef * dg * (-2.0 * ratio) * (-lateral / self.d)
        return w, dw

    def value_from_contributions(self, w):
        return (self.signal / (w.sum(axis=-2) + self.noise)).mean(axis=-1)

    def __call__(self, psi, grad: bool = True):
        w, dw = self.contributions(psi, with_grad=grad)
        denom = w.sum(axis=-2) + self.noise
        val = (self.signal / denom).mean(axis=-1)
        if not grad:
            return val, None
        k = self.signal.shape[0]
        dgam = (-self.signal / denom**2 / k)[..., None, :]
        return val, (dgam * dw).sum(axis=-1)
