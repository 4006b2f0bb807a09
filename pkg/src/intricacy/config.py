"""Run configuration: JSON schema, validation and resolution to live objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .complexity_engine import RunOptions
from .cover_algebra import CylinderCover, symbol_partition, trivial_cover, validate_cover
from .errors import ValidationError
from .group_model import CoefficientSystem, LatticeWindow
from .measure_entropy import Bernoulli, Markov, check_support, mixture_combine
from .symbolic_space import (
    ShiftSpace,
    SlidingBlockCode,
    constant_code,
    full_shift,
    golden_mean_shift,
    identity_code,
    xor_code,
)

QUANTITIES = (
    "asc_top", "int_top", "h_top", "asc_mu", "int_mu",
    "asc_mu_minus", "asc_mu_plus", "asc_minus_anchored",
)

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_nrange = {
    "oneOf": [
        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        {"type": "object", "required": ["start", "stop"], "additionalProperties": False,
         "properties": {"start": {"type": "integer", "minimum": 1},
                        "stop": {"type": "integer", "minimum": 1},
                        "step": {"type": "integer", "minimum": 1}}},
    ]
}

SCHEMA = {
    "type": "object",
    "required": ["shifts"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "shifts": {
            "type": "object", "minProperties": 1,
            "additionalProperties": {
                "type": "object", "required": ["type"], "additionalProperties": False,
                "properties": {
                    "type": {"enum": ["full", "golden_mean", "sft"]},
                    "k": {"type": "integer", "minimum": 1},
                    "dimension": {"enum": [1, 2]},
                    "transitions": _matrix,
                    "vertical": _matrix,
                    "halo": {"type": "integer", "minimum": 0},
                },
            },
        },
        "covers": {
            "type": "object",
            "additionalProperties": {
                "type": "object", "required": ["shift"], "additionalProperties": False,
                "properties": {
                    "shift": {"type": "string"},
                    "kind": {"enum": ["symbols", "trivial", "explicit"]},
                    "window": {"type": "array", "items": {"type": ["integer", "array"]}, "minItems": 1},
                    "elements": {"type": "array", "minItems": 1,
                                 "items": {"type": "array", "minItems": 1, "items": {"type": "string"}}},
                },
            },
        },
        "measures": {
            "type": "object",
            "additionalProperties": {
                "type": "object", "required": ["type"], "additionalProperties": False,
                "properties": {
                    "type": {"enum": ["bernoulli", "markov", "mixture"]},
                    "p": {"type": "array", "items": {"type": "number", "minimum": 0}},
                    "P": _matrix,
                    "pi": {"type": "array", "items": {"type": "number", "minimum": 0}},
                    "components": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
                },
            },
        },
        "codes": {
            "type": "object",
            "additionalProperties": {
                "type": "object", "required": ["type"], "additionalProperties": False,
                "properties": {
                    "type": {"enum": ["identity", "constant", "xor", "table"]},
                    "k": {"type": "integer", "minimum": 1},
                    "target_k": {"type": "integer", "minimum": 1},
                    "radius": {"type": "integer", "minimum": 1},
                    "rule": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                },
            },
        },
        "tasks": {
            "type": "array",
            "items": {
                "type": "object", "required": ["quantity", "shift", "cover", "n"],
                "additionalProperties": False,
                "properties": {
                    "quantity": {"enum": list(QUANTITIES)},
                    "shift": {"type": "string"},
                    "cover": {"type": "string"},
                    "measure": {"type": "string"},
                    "code": {"type": "string"},
                    "coeffs": {"type": ["string", "array", "object"]},
                    "n": _nrange,
                    "extend": {"type": "integer", "minimum": 1},
                },
            },
        },
        "margins": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "mode": {"enum": ["exact", "mc"]},
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "budgets": {
            "type": "object", "additionalProperties": False,
            "properties": {"nodes": {"type": "integer", "minimum": 1},
                           "seconds": {"type": ["number", "null"], "exclusiveMinimum": 0},
                           "exact_subsets": {"type": "integer", "minimum": 1, "maximum": 24}},
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "csv": {"type": "string"},
                           "report": {"type": "string"}},
        },
        "verify": {
            "type": "object", "additionalProperties": False,
            "properties": {"n_max": {"type": "integer", "minimum": 1, "maximum": 16},
                           "tolerance_scale": {"type": "number", "minimum": 0},
                           "coefficients": {"type": "array"}},
        },
    },
}


def n_values(spec) -> list[int]:
    if isinstance(spec, list):
        return sorted(set(spec))
    return list(range(spec["start"], spec["stop"] + 1, spec.get("step", 1)))


def _window(points, dimension: int) -> LatticeWindow:
    pts = tuple((p,) if isinstance(p, int) else tuple(p) for p in points)
    return LatticeWindow(dimension, pts)


def build_shift(spec: dict) -> ShiftSpace:
    dim = spec.get("dimension", 1)
    kind = spec["type"]
    if kind == "full":
        return full_shift(spec.get("k", 2), dim)
    if kind == "golden_mean":
        return golden_mean_shift(dim, spec.get("halo", 2))
    if "transitions" not in spec:
        raise ValidationError("an 'sft' shift needs a transition matrix")
    T = np.asarray(spec["transitions"], dtype=np.int64)
    k = spec.get("k", T.shape[0])
    vert = None
    if dim == 2:
        vert = np.asarray(spec.get("vertical", spec["transitions"]), dtype=np.int64)
    return ShiftSpace(k, T, dim, vert, halo=spec.get("halo", 2), name="sft")


def build_cover(spec: dict, shift: ShiftSpace) -> CylinderCover:
    kind = spec.get("kind", "explicit")
    if kind == "symbols":
        return symbol_partition(shift)
    if kind == "trivial":
        return trivial_cover(shift)
    if "window" not in spec or "elements" not in spec:
        raise ValidationError("an explicit cover needs 'window' and 'elements'")
    W = _window(spec["window"], shift.dimension)
    cover = CylinderCover.from_strings(W, spec["elements"])
    report = validate_cover(shift, cover)
    if not report.valid:
        raise ValidationError(report.message)
    return cover


def build_measure(name: str, specs: dict, seen: tuple = ()):
    if name in seen:
        raise ValidationError(f"measure {name!r} refers to itself")
    if name not in specs:
        raise ValidationError(f"unknown measure {name!r}")
    spec = specs[name]
    if spec["type"] == "bernoulli":
        return Bernoulli(spec["p"])
    if spec["type"] == "markov":
        if "pi" in spec:
            return Markov(spec["pi"], spec["P"])
        return Markov.from_matrix(spec["P"])
    comps = [build_measure(c, specs, seen + (name,)) for c in spec["components"]]
    return mixture_combine(comps, spec.get("weights", [1.0 / len(comps)] * len(comps)))


def build_code(spec: dict, shift: ShiftSpace) -> SlidingBlockCode:
    kind = spec["type"]
    k = spec.get("k", shift.k)
    if kind == "identity":
        return identity_code(k)
    if kind == "constant":
        return constant_code(k, spec.get("radius", 1))
    if kind == "xor":
        return xor_code()
    return SlidingBlockCode(k, spec["target_k"], spec["radius"], np.asarray(spec["rule"]), name="table")


@dataclass
class Task:
    quantity: str
    shift: str
    cover: str
    n: list[int]
    coeffs: CoefficientSystem
    measure: str | None = None
    code: str | None = None
    extend: int = 1


@dataclass
class RunConfiguration:
    """Validated run description; objects are resolved lazily by name."""

    raw: dict
    shifts: dict = field(default_factory=dict)
    covers: dict = field(default_factory=dict)
    measures: dict = field(default_factory=dict)
    codes: dict = field(default_factory=dict)
    tasks: list[Task] = field(default_factory=list)
    margins: list[int] = field(default_factory=lambda: [0])
    mode: str = "exact"
    samples: int = 10_000
    seed: int = 0
    budget_nodes: int = 1_000_000
    time_budget: float | None = None
    exact_subsets: int = 20
    out_dir: str = "out"
    csv_name: str = "results.csv"
    report_name: str = "report.json"
    verify: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfiguration":
        validator = jsonschema.Draft202012Validator(SCHEMA)
        errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ValidationError(f"configuration invalid at {where}: {e.message}")
        budgets = raw.get("budgets", {})
        out = raw.get("output", {})
        cfg = cls(
            raw=raw,
            shifts=raw["shifts"],
            covers=raw.get("covers", {}),
            measures=raw.get("measures", {}),
            codes=raw.get("codes", {}),
            margins=raw.get("margins", [0]),
            mode=raw.get("mode", "exact"),
            samples=raw.get("samples", 10_000),
            seed=raw.get("seed", 0),
            budget_nodes=budgets.get("nodes", 1_000_000),
            time_budget=budgets.get("seconds"),
            exact_subsets=budgets.get("exact_subsets", 20),
            out_dir=out.get("dir", "out"),
            csv_name=out.get("csv", "results.csv"),
            report_name=out.get("report", "report.json"),
            verify=raw.get("verify", {}),
        )
        for t in raw.get("tasks", []):
            ns = n_values(t["n"])
            if not ns:
                raise ValidationError(f"task {t['quantity']!r}: empty n range")
            cfg.tasks.append(Task(t["quantity"], t["shift"], t["cover"], ns,
                                  CoefficientSystem.parse(t.get("coeffs", "uniform")),
                                  t.get("measure"), t.get("code"), t.get("extend", 1)))
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfiguration":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read configuration {path}: {exc}") from exc
        return cls.from_dict(raw)

    def check(self) -> None:
        """Resolve every referenced name; raise on the first failure."""
        if self.mode == "mc" and self.samples < 100:
            raise ValidationError("mc mode requires at least 100 samples")
        for name, c in self.covers.items():
            if c["shift"] not in self.shifts:
                raise ValidationError(f"cover {name!r} refers to unknown shift {c['shift']!r}")
        for name, m in self.measures.items():
            for c in m.get("components", []):
                if c not in self.measures:
                    raise ValidationError(f"measure {name!r} refers to unknown measure {c!r}")
        for t in self.tasks:
            if t.shift not in self.shifts:
                raise ValidationError(f"task {t.quantity}: unknown shift {t.shift!r}")
            if t.cover not in self.covers:
                raise ValidationError(f"task {t.quantity}: unknown cover {t.cover!r}")
            if self.covers[t.cover]["shift"] != t.shift:
                raise ValidationError(f"task {t.quantity}: cover {t.cover!r} lives on another shift")
            if t.measure is not None and t.measure not in self.measures:
                raise ValidationError(f"task {t.quantity}: unknown measure {t.measure!r}")
            if t.code is not None and t.code not in self.codes:
                raise ValidationError(f"task {t.quantity}: unknown code {t.code!r}")
            needs_measure = t.quantity in ("asc_mu", "int_mu", "asc_mu_minus", "asc_mu_plus",
                                           "asc_minus_anchored")
            if needs_measure and t.measure is None:
                raise ValidationError(f"task {t.quantity}: a measure is required")

    def resolve_all(self) -> None:
        """Build every named object once so malformed input fails before any output."""
        try:
            for name in self.shifts:
                self.shift(name)
            for name in self.covers:
                self.cover(name)
            for name in self.measures:
                self.measure(name)
            for name in self.codes:
                owners = [t.shift for t in self.tasks if t.code == name] or list(self.shifts)[:1]
                self.code(name, self.shift(owners[0]))
            for t in self.tasks:
                if t.measure is not None:
                    check_support(self.shift(t.shift), self.measure(t.measure))
        except ValidationError:
            raise
        except (ValueError, TypeError, IndexError) as exc:
            raise ValidationError(f"configuration object is malformed: {exc}") from exc

    def shift(self, name: str) -> ShiftSpace:
        return build_shift(self.shifts[name])

    def cover(self, name: str) -> CylinderCover:
        spec = self.covers[name]
        return build_cover(spec, self.shift(spec["shift"]))

    def measure(self, name: str):
        return build_measure(name, self.measures)

    def code(self, name: str, shift: ShiftSpace) -> SlidingBlockCode:
        return build_code(self.codes[name], shift)

    def options(self, deadline: float | None = None, margin: int = 0) -> RunOptions:
        return RunOptions(self.mode, self.samples, self.seed, self.budget_nodes,
                          self.exact_subsets, deadline, margin)
