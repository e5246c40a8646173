"""Problem instances: physical constants, validation, parsing and generation.

A :class:`Scenario` is immutable once built and carries every quantity in
linear units (watts, linear gains, meters, radians). Decibel values from a
scenario document are converted exactly once, in :func:`parse_scenario`.
"""

from __future__ import annotations

import math
from dataclasses import MISSING, dataclass, field, fields
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

__all__ = [
    "ALTITUDE_M",
    "DEPLOY_X_MAX_M",
    "MIN_TARGET_SEP_M",
    "MIN_UAV_SEP_M",
    "HALF_BEAMWIDTH_RAD",
    "ANTENNA_ELEMENTS",
    "REF_GAIN_DB",
    "NOISE_DBM",
    "JAM_POWER_W",
    "CTRL_POWER_W",
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "Scenario",
    "Deployment",
    "ScenarioBounds",
    "db_to_linear",
    "dbm_to_watts",
    "wrap_angle",
    "validate_scenario",
    "parse_scenario",
    "serialize_scenario",
    "load_scenario",
    "random_scenario",
]

# Default physical setup.
ALTITUDE_M = 600.0
DEPLOY_X_MAX_M = 1600.0
MIN_TARGET_SEP_M = 500.0
MIN_UAV_SEP_M = 50.0
HALF_BEAMWIDTH_RAD = math.radians(15.0)  # full beamwidth of 30 degrees
ANTENNA_ELEMENTS = 5
REF_GAIN_DB = -30.0
NOISE_DBM = -110.0
JAM_POWER_W = 4e-3
CTRL_POWER_W = 2e-2


class ScenarioError(ValueError):
    """Base class for scenario problems."""


class ScenarioParseError(ScenarioError):
    """The scenario document could not be read.

    Attributes:
        field: dotted path of the offending key, if known.
        line: 1-based line number in the document, if known.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.field = field
        self.line = line


class ScenarioValidationError(ScenarioError):
    """A scenario violates one or more invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def wrap_angle(angle):
    """Map angles onto the half-open interval (-pi, pi]."""
    a = np.asarray(angle, dtype=float)
    # in-range values pass through untouched, keeping the map exactly odd there
    inside = (a > -np.pi) & (a <= np.pi)
    wrapped = np.where(inside, a, np.pi - np.mod(np.pi - a, 2.0 * np.pi))
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def _frozen(a, shape=None) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if shape is not None:
        arr = np.broadcast_to(arr, shape).copy()
    arr.setflags(write=False)
    return arr


def _violations(v: Mapping[str, Any]) -> list[str]:
    out: list[str] = []

    def positive(name):
        val = np.asarray(v[name], dtype=float)
        if val.size == 0 or not np.all(np.isfinite(val)) or np.any(val <= 0):
            out.append(f"{name} must be finite and > 0")

    m = v["num_uavs"]
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 1:
        out.append("num_uavs must be ≥ 1")
        m = None

    tp = np.asarray(v["target_positions"], dtype=float)
    k = None
    if tp.ndim != 2 or tp.shape[1] != 3:
        out.append("target_positions must be a K x 3 array")
    elif tp.shape[0] < 1:
        out.append("num_targets must be ≥ 1")
    elif not np.all(np.isfinite(tp)):
        out.append("target_positions must be finite")
    else:
        k = tp.shape[0]

    cc = np.asarray(v["control_center"], dtype=float)
    if cc.shape != (3,) or not np.all(np.isfinite(cc)):
        out.append("control_center must be a finite 3-vector")

    for name in ("altitude", "tx_power_ctrl", "channel_ref_gain", "min_target_sep", "min_uav_sep"):
        positive(name)
    if not np.isfinite(v["deploy_x_max"]):
        out.append("deploy_x_max must be finite")

    theta = v["half_beamwidth"]
    if not (np.isfinite(theta) and 0.0 < theta < np.pi / 2):
        out.append("half_beamwidth must lie in (0, pi/2)")

    for name, n in (("jam_power", m), ("antenna_elements", m), ("noise_power", k)):
        arr = np.asarray(v[name], dtype=float)
        if n is not None and arr.ndim == 1 and arr.shape[0] != n:
            out.append(f"{name} must have length {n}")
        elif arr.ndim > 1:
            out.append(f"{name} must be a scalar or a vector")
        else:
            positive(name)
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    """An immutable jamming problem instance (SI units throughout).

    Per-UAV quantities (``jam_power``, ``antenna_elements``) and the
    per-target ``noise_power`` may be given as scalars; they are broadcast
    to vectors. Construction raises :class:`ScenarioValidationError` listing
    every violated invariant.
    """

    num_uavs: int
    target_positions: np.ndarray
    control_center: np.ndarray
    altitude: float = ALTITUDE_M
    tx_power_ctrl: float = CTRL_POWER_W
    jam_power: np.ndarray = JAM_POWER_W
    antenna_elements: np.ndarray = ANTENNA_ELEMENTS
    half_beamwidth: float = HALF_BEAMWIDTH_RAD
    channel_ref_gain: float = field(default_factory=lambda: db_to_linear(REF_GAIN_DB))
    noise_power: np.ndarray = field(default_factory=lambda: dbm_to_watts(NOISE_DBM))
    min_target_sep: float = MIN_TARGET_SEP_M
    min_uav_sep: float = MIN_UAV_SEP_M
    deploy_x_max: float = DEPLOY_X_MAX_M

    def __post_init__(self):
        problems = validate_scenario(self._raw())
        if problems:
            raise ScenarioValidationError(problems)
        m, k = self.num_uavs, len(self.target_positions)
        set_ = object.__setattr__
        set_(self, "num_uavs", int(m))
        set_(self, "target_positions", _frozen(self.target_positions))
        set_(self, "control_center", _frozen(self.control_center))
        set_(self, "jam_power", _frozen(self.jam_power, (m,)))
        set_(self, "antenna_elements", _frozen(self.antenna_elements, (m,)))
        set_(self, "noise_power", _frozen(self.noise_power, (k,)))
        for name in ("altitude", "tx_power_ctrl", "half_beamwidth", "channel_ref_gain",
                     "min_target_sep", "min_uav_sep", "deploy_x_max"):
            set_(self, name, float(getattr(self, name)))

    def _raw(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def num_targets(self) -> int:
        return self.target_positions.shape[0]

    def replace(self, **changes) -> "Scenario":
        """Return a validated copy with some fields changed."""
        raw = self._raw()
        raw.update(changes)
        if "num_uavs" in changes:
            for name in ("jam_power", "antenna_elements"):
                if name not in changes and np.unique(raw[name]).size == 1:
                    raw[name] = float(raw[name][0])
        if "target_positions" in changes and "noise_power" not in changes:
            if np.unique(raw["noise_power"]).size == 1:
                raw["noise_power"] = float(raw["noise_power"][0])
        return Scenario(**raw)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None

    def signal_power(self) -> np.ndarray:
        """Received control-link power ``P_s * h_{s,k}`` at every target."""
        d2 = np.sum((self.target_positions - self.control_center) ** 2, axis=1)
        if np.any(d2 == 0.0):
            from .signalmodel import DegenerateGeometryError

            raise DegenerateGeometryError("a target coincides with the control center")
        return self.tx_power_ctrl * self.channel_ref_gain / d2

    def deployment(self, xy, azimuths) -> "Deployment":
        """Build a :class:`Deployment` at this scenario's altitude."""
        return Deployment.from_xy(xy, azimuths, self.altitude)


@dataclass(frozen=True, eq=False)
class Deployment:
    """UAV positions (M x 3, fixed altitude) and antenna azimuths (M,)."""

    positions: np.ndarray
    azimuths: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        psi = np.array(self.azimuths, dtype=float).reshape(-1)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("positions must be an M x 3 array")
        if psi.shape[0] != pos.shape[0]:
            raise ValueError("need one azimuth per UAV")
        if not (np.all(psi > -np.pi) and np.all(psi <= np.pi)):
            raise ValueError("azimuths must lie in (-pi, pi]")
        pos.setflags(write=False)
        psi.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "azimuths", psi)

    @classmethod
    def from_xy(cls, xy, azimuths, altitude: float) -> "Deployment":
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        pos = np.column_stack([xy, np.full(len(xy), float(altitude))])
        return cls(pos, wrap_angle(np.asarray(azimuths, dtype=float).reshape(-1)))

    @property
    def xy(self) -> np.ndarray:
        return self.positions[:, :2]

    def __eq__(self, other):
        if not isinstance(other, Deployment):
            return NotImplemented
        return (np.array_equal(self.positions, other.positions)
                and np.array_equal(self.azimuths, other.azimuths))

    __hash__ = None


def validate_scenario(s: Scenario | Mapping[str, Any]) -> list[str]:
    """Return every invariant violation of a scenario (empty when valid).

    Accepts a :class:`Scenario` or a mapping of its constructor fields, so
    that candidate values can be checked before construction.
    """
    if isinstance(s, Scenario):
        raw = s._raw()
    else:
        raw = {}
        for f in fields(Scenario):
            if f.default is not MISSING:
                raw[f.name] = f.default
            elif f.default_factory is not MISSING:
                raw[f.name] = f.default_factory()
        raw.update(s)
        missing = [f.name for f in fields(Scenario) if f.name not in raw]
        if missing:
            return [f"{name} is required" for name in missing]
    return _violations(raw)


# ---------------------------------------------------------------------------
# document format

_SECTIONS = {
    "uavs": {"count", "altitude_m", "jam_power_w", "antenna_elements",
             "half_beamwidth_deg", "half_beamwidth_rad"},
    "targets": {"positions_m"},
    "control_center": {"position_m", "tx_power_w"},
    "channel": {"ref_gain_db", "ref_gain_linear", "noise_dbm", "noise_w"},
    "geometry": {"min_target_sep_m", "min_uav_sep_m", "deploy_x_max_m"},
}


class _LineLoader(yaml.SafeLoader):
    pass


def _mapping_with_lines(loader, node):
    mapping = loader.construct_mapping(node, deep=True)
    lines = {}
    for key_node, _ in node.value:
        lines[loader.construct_object(key_node)] = key_node.start_mark.line + 1
    mapping["__lines__"] = lines
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _mapping_with_lines)


def _number(value, path, line, allow_list=False):
    if allow_list and isinstance(value, list):
        return [_number(v, path, line) for v in value]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"expected a number, got {value!r}", path, line)
    return float(value)


def parse_scenario(text: str) -> Scenario:
    """Parse a YAML scenario document into a validated :class:`Scenario`.

    Raises:
        ScenarioParseError: malformed YAML, unknown keys, or wrong types.
        ScenarioValidationError: the values violate a scenario invariant.
    """
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ScenarioParseError(f"malformed document: {exc.problem}", line=line) from exc
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"malformed document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioParseError("document must be a mapping")

    top_lines = doc.pop("__lines__", {})
    for key in doc:
        if key not in _SECTIONS:
            raise ScenarioParseError("unknown section", str(key), top_lines.get(key))
    for required in ("uavs", "targets", "control_center"):
        if required not in doc:
            raise ScenarioParseError("missing section", required)

    sec = {}
    for name, allowed in _SECTIONS.items():
        body = doc.get(name, {})
        if body is None:
            body = {}
        if not isinstance(body, dict):
            raise ScenarioParseError("section must be a mapping", name, top_lines.get(name))
        lines = body.pop("__lines__", {})
        for key in body:
            if key not in allowed:
                raise ScenarioParseError("unknown key", f"{name}.{key}", lines.get(key))
        sec[name] = (body, lines)

    def get(section, key, default=None, allow_list=False):
        body, lines = sec[section]
        if key not in body:
            return default
        return _number(body[key], f"{section}.{key}", lines.get(key), allow_list)

    def either(section, a, b, convert):
        body, lines = sec[section]
        if a in body and b in body:
            raise ScenarioParseError(f"give only one of '{a}' and '{b}'", f"{section}.{b}", lines.get(b))
        if a in body:
            val = get(section, a, allow_list=True)
            return [convert(v) for v in val] if isinstance(val, list) else convert(val)
        if b in body:
            return get(section, b, allow_list=True)
        return None

    ubody, ulines = sec["uavs"]
    if "count" not in ubody:
        raise ScenarioParseError("missing key", "uavs.count")
    count = ubody["count"]
    if isinstance(count, bool) or not isinstance(count, int):
        raise ScenarioParseError(f"expected an integer, got {count!r}", "uavs.count", ulines.get("count"))

    tbody, tlines = sec["targets"]
    if "positions_m" not in tbody:
        raise ScenarioParseError("missing key", "targets.positions_m")
    raw_pos = tbody["positions_m"]
    pline = tlines.get("positions_m")
    if not isinstance(raw_pos, list) or not all(isinstance(p, list) and len(p) == 3 for p in raw_pos):
        raise ScenarioParseError("expected a list of [x, y, z] triples", "targets.positions_m", pline)
    positions = [[_number(c, "targets.positions_m", pline) for c in p] for p in raw_pos]

    cbody, clines = sec["control_center"]
    if "position_m" not in cbody:
        raise ScenarioParseError("missing key", "control_center.position_m")
    cpos = cbody["position_m"]
    if not isinstance(cpos, list) or len(cpos) != 3:
        raise ScenarioParseError("expected [x, y, z]", "control_center.position_m", clines.get("position_m"))
    center = [_number(c, "control_center.position_m", clines.get("position_m")) for c in cpos]

    theta = either("uavs", "half_beamwidth_deg", "half_beamwidth_rad", math.radians)
    ref_gain = either("channel", "ref_gain_db", "ref_gain_linear", db_to_linear)
    noise = either("channel", "noise_dbm", "noise_w", dbm_to_watts)

    kwargs = dict(
        num_uavs=count,
        target_positions=np.array(positions, dtype=float).reshape(-1, 3),
        control_center=np.array(center, dtype=float),
        altitude=get("uavs", "altitude_m", ALTITUDE_M),
        tx_power_ctrl=get("control_center", "tx_power_w", CTRL_POWER_W),
        jam_power=get("uavs", "jam_power_w", JAM_POWER_W, allow_list=True),
        antenna_elements=get("uavs", "antenna_elements", ANTENNA_ELEMENTS, allow_list=True),
        half_beamwidth=HALF_BEAMWIDTH_RAD if theta is None else theta,
        channel_ref_gain=db_to_linear(REF_GAIN_DB) if ref_gain is None else ref_gain,
        noise_power=dbm_to_watts(NOISE_DBM) if noise is None else noise,
        min_target_sep=get("geometry", "min_target_sep_m", MIN_TARGET_SEP_M),
        min_uav_sep=get("geometry", "min_uav_sep_m", MIN_UAV_SEP_M),
        deploy_x_max=get("geometry", "deploy_x_max_m", DEPLOY_X_MAX_M),
    )
    return Scenario(**kwargs)


def _scalar_or_list(arr: np.ndarray):
    if np.all(arr == arr[0]):
        return float(arr[0])
    return [float(v) for v in arr]


def serialize_scenario(s: Scenario) -> str:
    """Write a scenario document that parses back to an equal scenario.

    Linear-unit keys are used so that the round trip is exact.
    """
    doc = {
        "uavs": {
            "count": s.num_uavs,
            "altitude_m": s.altitude,
            "jam_power_w": _scalar_or_list(s.jam_power),
            "antenna_elements": _scalar_or_list(s.antenna_elements),
            "half_beamwidth_rad": s.half_beamwidth,
        },
        "targets": {"positions_m": [[float(c) for c in row] for row in s.target_positions]},
        "control_center": {
            "position_m": [float(c) for c in s.control_center],
            "tx_power_w": s.tx_power_ctrl,
        },
        "channel": {
            "ref_gain_linear": s.channel_ref_gain,
            "noise_w": _scalar_or_list(s.noise_power),
        },
        "geometry": {
            "min_target_sep_m": s.min_target_sep,
            "min_uav_sep_m": s.min_uav_sep,
            "deploy_x_max_m": s.deploy_x_max,
        },
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# ---------------------------------------------------------------------------
# random instances


@dataclass(frozen=True)
class ScenarioBounds:
    """Region in which :func:`random_scenario` draws targets.

    Target x offsets are measured from the deployable boundary ``x_max``,
    so every target lies outside the deployable half-plane. The control
    center sits ``center_offset_m`` behind the farthest target.
    """

    x_offset_m: tuple[float, float] = (500.0, 4000.0)
    y_m: tuple[float, float] = (-1500.0, 1500.0)
    target_z_m: float = 0.0
    center_offset_m: tuple[float, float] = (500.0, 1500.0)
    center_z_m: float = 20.0

    def check(self):
        for name in ("x_offset_m", "y_m", "center_offset_m"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                raise ScenarioError(f"bounds.{name} is empty or inverted: {(lo, hi)}")
        if self.x_offset_m[0] <= 0:
            raise ScenarioError("bounds.x_offset_m must place targets outside the deployable region")
        if self.center_offset_m[0] < 0:
            raise ScenarioError("bounds.center_offset_m must be nonnegative")


def random_scenario(seed: int, m: int, k: int, bounds: ScenarioBounds | None = None,
                    **overrides) -> Scenario:
    """Draw a reproducible scenario with default physical constants.

    Target and control-center placement depend only on ``seed``, ``k`` and
    ``bounds``, so scenarios that differ only in ``m`` share their targets.
    """
    if m < 1 or k < 1:
        raise ScenarioError("m and k must be ≥ 1")
    bounds = ScenarioBounds() if bounds is None else bounds
    bounds.check()
    x_max = overrides.get("deploy_x_max", DEPLOY_X_MAX_M)
    rng = np.random.default_rng(np.uint64(seed % 2**64))
    xs = x_max + rng.uniform(*bounds.x_offset_m, size=k)
    ys = rng.uniform(*bounds.y_m, size=k)
    targets = np.column_stack([xs, ys, np.full(k, bounds.target_z_m)])
    cx = xs.max() + rng.uniform(*bounds.center_offset_m)
    center = np.array([cx, ys.mean(), bounds.center_z_m])
    return Scenario(num_uavs=m, target_positions=targets, control_center=center, **overrides)
