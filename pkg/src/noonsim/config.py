"""Experiment configuration files (TOML).

Blocks and keys, with defaults in ``data/default.toml``:

``[source]``     state (two_pair | single_pair), path
``[elements]``   chain (list of element tables), herald_path, signal_path,
                 arm_a, arm_b, qwp_angle_deg, converter_phase_deg
``[detectors]``  efficiency, trigger_efficiency, tree or routing, pattern, single_pattern
``[geometry]``   d_mm, beam_diameter_mm, wavelength_nm, focal_length_mm, mfd_um
``[scan]``       temporal/spatial/profile grids, integration times and rate scales
``[noise]``      visibility, temporal_visibility, p_false_trigger, phase_deg
``[output]``     dir, seed

Element tables take ``kind`` plus ``path``, ``angle_deg``, ``pol``,
``path_refl``, ``path_trans``, ``path_a``, ``path_b``, ``r_v``, ``r_h``, ``loss_path``.
"""
from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .detection import DetectorSpec
from .elements import ELEMENT_KINDS, ElementSpec
from .spatial import ExperimentGeometry


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field or line."""


def default_config_text() -> str:
    return resources.files("noonsim").joinpath("data/default.toml").read_text()


DEFAULTS = tomllib.loads(default_config_text())

_ELEMENT_KEYS = {"kind", "path", "angle_deg", "pol", "path_refl", "path_trans", "path_a", "path_b",
                 "r_v", "r_h", "loss_path"}


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        name = f"{where}.{key}" if where else key
        if key not in base:
            raise ConfigError(f"unknown field [{name}]")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"[{name}] must be a table")
            out[key] = _merge(base[key], val, name)
        else:
            out[key] = val
    return out


def parse_config(text: str, source: str = "<config>") -> dict:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    data = _merge(DEFAULTS, raw)
    validate(data)
    return data


def load_config(path=None) -> dict:
    if path is None:
        return parse_config(default_config_text(), "default.toml")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def _number(data, block, key, positive=False, nonneg=False, unit=False, integer=False):
    val = data[block][key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"field [{block}].{key}: expected a number, got {val!r}")
    if integer and not isinstance(val, int):
        raise ConfigError(f"field [{block}].{key}: expected an integer")
    if not math.isfinite(val):
        raise ConfigError(f"field [{block}].{key}: must be finite")
    if positive and val <= 0:
        raise ConfigError(f"field [{block}].{key}: must be positive")
    if nonneg and val < 0:
        raise ConfigError(f"field [{block}].{key}: must be non-negative")
    if unit and not 0 <= val <= 1:
        raise ConfigError(f"field [{block}].{key}: must lie in [0, 1]")
    return val


def validate(data: dict) -> None:
    if data["source"]["state"] not in ("two_pair", "single_pair"):
        raise ConfigError("field [source].state: expected 'two_pair' or 'single_pair'")
    chain = data["elements"]["chain"]
    if not isinstance(chain, list) or not chain:
        raise ConfigError("field [elements].chain: expected a non-empty list of element tables")
    for i, el in enumerate(chain):
        if not isinstance(el, dict):
            raise ConfigError(f"field [elements].chain[{i}]: expected a table")
        unknown = set(el) - _ELEMENT_KEYS
        if unknown:
            raise ConfigError(f"field [elements].chain[{i}]: unknown keys {sorted(unknown)}")
        if str(el.get("kind", "")).upper() not in ELEMENT_KINDS:
            raise ConfigError(f"field [elements].chain[{i}].kind: expected one of {ELEMENT_KINDS}")
        try:
            element_spec(el)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"field [elements].chain[{i}]: {exc}") from None
    for key in ("qwp_angle_deg", "converter_phase_deg"):
        _number(data, "elements", key)
    for key in ("efficiency", "trigger_efficiency"):
        _number(data, "detectors", key, unit=True)
    try:
        spec = detector_spec(data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"field [detectors].tree/routing: {exc}") from None
    for key in ("pattern", "single_pattern"):
        bad = [p for p in data["detectors"][key] if p not in spec.ids]
        if bad:
            raise ConfigError(f"field [detectors].{key}: unknown detectors {bad}")
    for key in ("d_mm", "beam_diameter_mm", "wavelength_nm", "focal_length_mm"):
        _number(data, "geometry", key, positive=True)
    _number(data, "geometry", "mfd_um", nonneg=True)
    scan = data["scan"]
    for prefix in ("chi", "x", "profile_x"):
        a = _number(data, "scan", f"{prefix}_start" + ("_deg" if prefix == "chi" else "_um"))
        b = _number(data, "scan", f"{prefix}_stop" + ("_deg" if prefix == "chi" else "_um"))
        n = _number(data, "scan", f"{prefix}_points", integer=True)
        if n < 2 or not b > a:
            raise ConfigError(f"field [scan].{prefix}_*: need stop > start and at least 2 points")
    for key in scan:
        if key.endswith("_time_s") or key.endswith("_rate"):
            _number(data, "scan", key, positive=True)
    _number(data, "noise", "visibility", unit=True)
    _number(data, "noise", "temporal_visibility", unit=True)
    _number(data, "noise", "p_false_trigger", unit=True)
    _number(data, "noise", "phase_deg")
    seed = data["output"]["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("field [output].seed: expected an unsigned 64-bit integer")


def element_spec(table: dict) -> ElementSpec:
    kw = {k: v for k, v in table.items() if k not in ("angle_deg",)}
    kw["angle"] = math.radians(table.get("angle_deg", 0.0))
    if str(table.get("kind", "")).upper() == "MODE_CONVERTER" and "angle_deg" not in table:
        kw["angle"] = 0.0
    return ElementSpec(**kw)


def detector_spec(data: dict) -> DetectorSpec:
    d = data["detectors"]
    if d.get("routing"):
        ids = d["ids"]
        if len(ids) != len(d["routing"]):
            raise ValueError("routing needs one probability per entry of ids")
        from .detection import Detector
        return DetectorSpec(tuple(Detector(i, d["efficiency"]) for i in ids), tuple(d["routing"]))
    return DetectorSpec.from_tree(_tuplify(d["tree"]), d["efficiency"])


def _tuplify(tree):
    if isinstance(tree, str):
        return tree
    return tuple(_tuplify(t) for t in tree)


def geometry(data: dict) -> ExperimentGeometry:
    g = data["geometry"]
    return ExperimentGeometry(
        d=g["d_mm"] * 1e-3,
        beam_diameter=g["beam_diameter_mm"] * 1e-3,
        wavelength=g["wavelength_nm"] * 1e-9,
        focal_length=g["focal_length_mm"] * 1e-3,
        mfd=g["mfd_um"] * 1e-6,
    )


@dataclass(frozen=True)
class Paths:
    source: str
    herald: str
    signal: str
    arm_a: str
    arm_b: str


def paths(data: dict) -> Paths:
    e = data["elements"]
    return Paths(data["source"]["path"], e["herald_path"], e["signal_path"], e["arm_a"], e["arm_b"])
