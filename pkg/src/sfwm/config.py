"""Config ingestion: schema validation, unit parsing, canonical hashing.

Run configs and sweep specs are JSON documents.  Frequency-like values are
"quantities": either bare numbers (Gamma units) or strings like "0.48 GHz"
or "380 Gamma" (ordinary-frequency units pick up the 2*pi factor on the way
in, see :mod:`sfwm.units`).  Operating points give either the laser
detunings or the velocity-group frame, never both.

All validation failures raise :class:`ConfigError` carrying the offending
field path, which the CLI maps to exit code 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .cache import canonical_hash
from .doppler import GridSpec, QuadratureSpec
from .params import (
    DEFAULT_GAMMA2,
    DEFAULT_GAMMA3,
    DEFAULT_GAMMA4,
    DEFAULT_GAMMA_DOPPLER,
    DEFAULT_K_RATIO_PC,
    DEFAULT_K_RATIO_SC,
    FrameParams,
    ParameterError,
    PhysicalParams,
    detunings_from_frame,
)
from .spectrum import EtalonModel
from .sweep import DEFAULT_OD_MODEL, OdModel, SweepSpec
from .units import parse_quantity


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_QUANTITY = {"anyOf": [{"type": "number"}, {"type": "string"}]}
_RATES = {
    "type": "object",
    "additionalProperties": False,
    "properties": {name: _QUANTITY for name in ("gamma2", "gamma3", "gamma4", "gamma_dec")},
}
_FIELDS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["omega_c", "omega_p"],
    "properties": {"omega_c": _QUANTITY, "omega_p": _QUANTITY},
}
_FRAME = {
    "type": "object",
    "additionalProperties": False,
    "required": ["omega_d0", "delta_atom"],
    "properties": {"omega_d0": _QUANTITY, "delta_atom": _QUANTITY},
}
_DETUNINGS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["delta_c", "delta_p"],
    "properties": {"delta_c": _QUANTITY, "delta_p": _QUANTITY},
}
_MEDIUM = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "alpha": {"type": "number", "minimum": 0},
        "gamma_doppler": _QUANTITY,
        "k_ratio_pc": {"type": "number"},
        "k_ratio_sc": {"type": "number"},
    },
}
_GRID = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "span": _QUANTITY,
        "nodes": {"type": "integer", "minimum": 2},
        "center": {"anyOf": [{"type": "number"}, {"type": "string"}, {"type": "null"}]},
    },
}
_QUADRATURE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "global_panels": {"type": "integer", "minimum": 1},
        "window_panels": {"type": "integer", "minimum": 1},
        "nodes_per_panel": {"type": "integer", "minimum": 1},
        "max_doublings": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
}
_ETALON = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "enabled": {"type": "boolean"},
        "t_p": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "gamma_e": _QUANTITY,
        "center": {"anyOf": [{"type": "number"}, {"type": "string"}, {"type": "null"}]},
    },
}
_OUTPUT = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "window_ns": {"anyOf": [{"type": "number", "exclusiveMinimum": 0}, {"type": "null"}]},
        "mirror_time": {"type": "boolean"},
    },
}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["fields"],
    "properties": {
        "rates": _RATES,
        "fields": _FIELDS,
        "frame": _FRAME,
        "detunings": _DETUNINGS,
        "medium": _MEDIUM,
        "grid": _GRID,
        "quadrature": _QUADRATURE,
        "etalon": _ETALON,
        "output": _OUTPUT,
        "rate_proportionality": {"type": "number"},
        "seed": {"type": "integer"},
    },
}

SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["frames", "od", "fields"],
    "properties": {
        "frames": {"type": "array", "minItems": 1, "items": _FRAME},
        "od": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "fixed": {"type": "number", "minimum": 0},
                "model": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["base", "amplitude", "center", "width"],
                    "properties": {
                        "base": {"type": "number"},
                        "amplitude": {"type": "number"},
                        "center": _QUANTITY,
                        "width": _QUANTITY,
                    },
                },
            },
        },
        "etalon": {"type": "boolean"},
        "etalon_model": _ETALON,
        "fields": _FIELDS,
        "rates": _RATES,
        "medium": _MEDIUM,
        "grid": _GRID,
        "quadrature": _QUADRATURE,
        "output": _OUTPUT,
        "rate_proportionality": {"type": "number"},
        "seed": {"type": "integer"},
    },
}


def _load_document(source, what: str) -> dict:
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read {what}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(str(path), f"{what} must be a JSON object")
    return doc


def _validate_schema(doc: dict, schema: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = "/".join(str(p) for p in err.absolute_path) or "(top level)"
        raise ConfigError(path, err.message)


def _quantity(doc: dict, section: str, name: str, default: float) -> float:
    sub = doc.get(section)
    if sub is None or name not in sub:
        return default
    try:
        return parse_quantity(sub[name], where=f"{section}/{name}")
    except ValueError as exc:
        raise ConfigError(f"{section}/{name}", str(exc)) from None


def _build_params(doc: dict, frame: FrameParams | None = None) -> PhysicalParams:
    medium = doc.get("medium", {})
    k_ratio_pc = float(medium.get("k_ratio_pc", DEFAULT_K_RATIO_PC))
    k_ratio_sc = float(medium.get("k_ratio_sc", DEFAULT_K_RATIO_SC))

    if frame is None:
        has_frame = "frame" in doc
        has_detunings = "detunings" in doc
        if has_frame == has_detunings:
            raise ConfigError("frame", "provide exactly one of 'frame' or 'detunings'")
        if has_frame:
            frame = FrameParams(
                omega_d0=_quantity(doc, "frame", "omega_d0", 0.0),
                delta_atom=_quantity(doc, "frame", "delta_atom", 0.0),
            )
            delta_c, delta_p = detunings_from_frame(frame, k_ratio_pc)
        else:
            delta_c = _quantity(doc, "detunings", "delta_c", 0.0)
            delta_p = _quantity(doc, "detunings", "delta_p", 0.0)
    else:
        delta_c, delta_p = detunings_from_frame(frame, k_ratio_pc)

    try:
        return PhysicalParams(
            gamma2=_quantity(doc, "rates", "gamma2", DEFAULT_GAMMA2),
            gamma3=_quantity(doc, "rates", "gamma3", DEFAULT_GAMMA3),
            gamma4=_quantity(doc, "rates", "gamma4", DEFAULT_GAMMA4),
            gamma_dec=_quantity(doc, "rates", "gamma_dec", 0.4),
            omega_c=_quantity(doc, "fields", "omega_c", 0.0),
            omega_p=_quantity(doc, "fields", "omega_p", 0.0),
            delta_c=delta_c,
            delta_p=delta_p,
            k_ratio_pc=k_ratio_pc,
            k_ratio_sc=k_ratio_sc,
            gamma_doppler=_quantity(doc, "medium", "gamma_doppler", DEFAULT_GAMMA_DOPPLER),
            alpha=float(medium.get("alpha", 420.0)),
        )
    except ParameterError as exc:
        raise ConfigError("(params)", str(exc)) from None


def _build_grid(doc: dict) -> GridSpec:
    grid = doc.get("grid", {})
    center_raw = grid.get("center")
    center = None
    if center_raw is not None:
        try:
            center = parse_quantity(center_raw, where="grid/center")
        except ValueError as exc:
            raise ConfigError("grid/center", str(exc)) from None
    try:
        return GridSpec(
            span=_quantity(doc, "grid", "span", GridSpec.span),
            nodes=int(grid.get("nodes", GridSpec.nodes)),
            center=center,
        )
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None


def _build_quadrature(doc: dict) -> QuadratureSpec:
    quad = doc.get("quadrature", {})
    try:
        return QuadratureSpec(
            global_panels=int(quad.get("global_panels", QuadratureSpec.global_panels)),
            window_panels=int(quad.get("window_panels", QuadratureSpec.window_panels)),
            nodes_per_panel=int(quad.get("nodes_per_panel", QuadratureSpec.nodes_per_panel)),
            max_doublings=int(quad.get("max_doublings", QuadratureSpec.max_doublings)),
            tol=float(quad.get("tol", QuadratureSpec.tol)),
        )
    except ValueError as exc:
        raise ConfigError("quadrature", str(exc)) from None


def _build_etalon(doc: dict, section: str = "etalon") -> tuple[EtalonModel, bool]:
    etalon = doc.get(section, {})
    center_raw = etalon.get("center")
    center = None
    if center_raw is not None:
        try:
            center = parse_quantity(center_raw, where=f"{section}/center")
        except ValueError as exc:
            raise ConfigError(f"{section}/center", str(exc)) from None
    try:
        model = EtalonModel(
            t_p=float(etalon.get("t_p", 0.29)),
            gamma_e=_quantity(doc, section, "gamma_e", EtalonModel.gamma_e),
            center=center,
        )
    except ValueError as exc:
        raise ConfigError(section, str(exc)) from None
    return model, bool(etalon.get("enabled", True))


def _build_output(doc: dict) -> tuple[float | None, bool]:
    output = doc.get("output", {})
    window = output.get("window_ns", 400.0)
    return (None if window is None else float(window)), bool(output.get("mirror_time", False))


@dataclass
class RunConfig:
    """A fully resolved single-point run."""

    params: PhysicalParams
    grid: GridSpec
    quad: QuadratureSpec
    etalon: EtalonModel
    etalon_enabled: bool
    window_ns: float | None
    mirror_time: bool
    seed: int
    rate_proportionality: float
    resolved: dict = field(repr=False, default_factory=dict)

    @property
    def config_hash(self) -> str:
        return canonical_hash(self.resolved)


def load_run_config(source) -> RunConfig:
    """Parse and validate a run config (path or dict)."""
    doc = _load_document(source, "run config")
    _validate_schema(doc, RUN_SCHEMA)
    params = _build_params(doc)
    grid = _build_grid(doc)
    quad = _build_quadrature(doc)
    etalon, enabled = _build_etalon(doc)
    window_ns, mirror_time = _build_output(doc)
    seed = int(doc.get("seed", 0))
    proportionality = float(doc.get("rate_proportionality", 1.0))
    resolved = {
        "kind": "run",
        "params": params.as_dict(),
        "grid": {"span": grid.span, "nodes": grid.nodes, "center": grid.center},
        "quad": {
            "global_panels": quad.global_panels,
            "window_panels": quad.window_panels,
            "nodes_per_panel": quad.nodes_per_panel,
            "max_doublings": quad.max_doublings,
            "tol": quad.tol,
        },
        "etalon": {
            "enabled": enabled,
            "t_p": etalon.t_p,
            "gamma_e": etalon.gamma_e,
            "center": etalon.center,
        },
        "output": {"window_ns": window_ns, "mirror_time": mirror_time},
        "seed": seed,
        "rate_proportionality": proportionality,
    }
    return RunConfig(
        params=params,
        grid=grid,
        quad=quad,
        etalon=etalon,
        etalon_enabled=enabled,
        window_ns=window_ns,
        mirror_time=mirror_time,
        seed=seed,
        rate_proportionality=proportionality,
        resolved=resolved,
    )


@dataclass
class SweepConfig:
    """A fully resolved sweep specification."""

    spec: SweepSpec
    seed: int
    resolved: dict = field(repr=False, default_factory=dict)

    @property
    def config_hash(self) -> str:
        return canonical_hash(self.resolved)


def load_sweep_config(source) -> SweepConfig:
    """Parse and validate a sweep spec (path or dict)."""
    doc = _load_document(source, "sweep spec")
    _validate_schema(doc, SWEEP_SCHEMA)

    frames = []
    for i, item in enumerate(doc["frames"]):
        try:
            frames.append(
                FrameParams(
                    omega_d0=parse_quantity(item["omega_d0"], where=f"frames/{i}/omega_d0"),
                    delta_atom=parse_quantity(item["delta_atom"], where=f"frames/{i}/delta_atom"),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"frames/{i}", str(exc)) from None

    od = doc["od"]
    od_fixed = None
    od_model = None
    if "fixed" in od:
        od_fixed = float(od["fixed"])
    else:
        model = od["model"]
        try:
            od_model = OdModel(
                base=float(model["base"]),
                amplitude=float(model["amplitude"]),
                center=parse_quantity(model["center"], where="od/model/center"),
                width=parse_quantity(model["width"], where="od/model/width"),
            )
        except ValueError as exc:
            raise ConfigError("od/model", str(exc)) from None

    base_params = _build_params(doc, frame=frames[0])
    grid = _build_grid(doc)
    quad = _build_quadrature(doc)
    etalon, _ = _build_etalon(doc, "etalon_model")
    etalon_enabled = bool(doc.get("etalon", True))
    window_ns, _ = _build_output(doc)
    proportionality = float(doc.get("rate_proportionality", 1.0))
    seed = int(doc.get("seed", 0))

    try:
        spec = SweepSpec(
            frames=tuple(frames),
            base_params=base_params,
            od_fixed=od_fixed,
            od_model=od_model,
            etalon_enabled=etalon_enabled,
            etalon=etalon,
            grid=grid,
            quad=quad,
            window_ns=window_ns,
            rate_proportionality=proportionality,
        )
    except ValueError as exc:
        raise ConfigError("(sweep)", str(exc)) from None

    resolved = {
        "kind": "sweep",
        "frames": [{"omega_d0": f.omega_d0, "delta_atom": f.delta_atom} for f in frames],
        "od": {"fixed": od_fixed}
        if od_model is None
        else {"model": {"base": od_model.base, "amplitude": od_model.amplitude, "center": od_model.center, "width": od_model.width}},
        "etalon": etalon_enabled,
        "etalon_model": {"t_p": etalon.t_p, "gamma_e": etalon.gamma_e, "center": etalon.center},
        "params": base_params.as_dict(),
        "grid": {"span": grid.span, "nodes": grid.nodes, "center": grid.center},
        "quad": {
            "global_panels": quad.global_panels,
            "window_panels": quad.window_panels,
            "nodes_per_panel": quad.nodes_per_panel,
            "max_doublings": quad.max_doublings,
            "tol": quad.tol,
        },
        "output": {"window_ns": window_ns},
        "rate_proportionality": proportionality,
        "seed": seed,
    }
    return SweepConfig(spec=spec, seed=seed, resolved=resolved)


def default_od_model_doc() -> dict:
    """The default depth model in config form (Gamma units)."""
    m = DEFAULT_OD_MODEL
    return {"base": m.base, "amplitude": m.amplitude, "center": m.center, "width": m.width}
