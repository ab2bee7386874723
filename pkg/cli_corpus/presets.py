"""
Preset registry.

Presets are JSON files in PRESET_DIR. Each has a kind (algebra, module,
cohomology or twist-scenario), a payload describing how to build the
object, and an expected-results block whose values carry provenance tags.
"""
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, SchemaError, UnknownPresetError, ValidationError
from fp_linalg.matrix import DTYPE
from graded_algebra.algebra import FiniteGradedAlgebra
from graded_algebra.catalog import standard_algebra
from graded_module.module import (GradedModule, cyclic_module, direct_sum_all, free_module, suspend,
                                  tensor_product, trivial_module, truncate, validate_module)
from twist_builder.cohomology import CohomologyPresentation, consistency_check, polynomial_presentation

logger = logging.getLogger("corpus")

# Configuration
PRESET_DIR = Path(os.getenv("PRESET_DIR", str(Path(__file__).parent / "presets")))

KINDS = ("algebra", "module", "cohomology", "twist-scenario")
PROVENANCE_TAGS = ("PAPER", "DERIVED", "TRIVIAL", "REGRESSION")


@dataclass
class ExpectedValue:
    value: Any
    provenance: str
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        data = {"value": self.value, "provenance": self.provenance}
        if self.params:
            data["params"] = self.params
        return data


@dataclass
class Preset:
    name: str
    kind: str
    payload: Dict[str, Any]
    expected: Dict[str, ExpectedValue] = field(default_factory=dict)
    description: str = ""

    @classmethod
    def from_dict(cls, data: dict, path: str = "$") -> "Preset":
        """Create from dictionary."""
        for key in ("name", "kind", "payload"):
            if key not in data:
                raise SchemaError(f"{path}.{key}", "missing field")
        if data["kind"] not in KINDS:
            raise SchemaError(f"{path}.kind", f"unknown kind {data['kind']!r}; expected one of {list(KINDS)}")
        expected = {}
        for key, entry in data.get("expected", {}).items():
            where = f"{path}.expected.{key}"
            if not isinstance(entry, dict) or "value" not in entry:
                raise SchemaError(where, "expected values need a 'value' field")
            provenance = entry.get("provenance", "")
            if provenance.split(":")[0].strip() not in PROVENANCE_TAGS:
                raise SchemaError(f"{where}.provenance", f"provenance must start with one of {list(PROVENANCE_TAGS)}")
            expected[key] = ExpectedValue(entry["value"], provenance, dict(entry.get("params", {})))
        return cls(data["name"], data["kind"], data["payload"], expected, data.get("description", ""))


def preset_dir() -> Path:
    return PRESET_DIR


@lru_cache(maxsize=None)
def _registry(directory: str) -> Dict[str, Path]:
    registry = {}
    for path in sorted(Path(directory).glob("*.json")):
        registry[path.stem] = path
    logger.debug("found %d presets in %s", len(registry), directory)
    return registry


def preset_names(kind: Optional[str] = None) -> List[str]:
    names = sorted(_registry(str(preset_dir())))
    if kind is None:
        return names
    return [n for n in names if get_preset(n).kind == kind]


@lru_cache(maxsize=None)
def _read(path: str) -> Preset:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"{path} is not valid JSON: {e.msg} at line {e.lineno}") from e
    preset = Preset.from_dict(data)
    if preset.name != Path(path).stem:
        raise SchemaError("$.name", f"preset name {preset.name!r} does not match file {Path(path).name}")
    return preset


def get_preset(name: str) -> Preset:
    """Preset metadata and payload, without building anything."""
    registry = _registry(str(preset_dir()))
    if name not in registry:
        raise UnknownPresetError(f"unknown preset {name!r}; known: {', '.join(sorted(registry))}")
    return _read(str(registry[name]))


# -- builders ------------------------------------------------------------------

def _algebra(payload: dict) -> FiniteGradedAlgebra:
    if "algebra" not in payload:
        raise SchemaError("$.payload.algebra", "missing field")
    return standard_algebra(payload["algebra"])


def _explicit_module(alg: FiniteGradedAlgebra, payload: dict, name: str) -> GradedModule:
    basis = payload.get("basis", [])
    labels = [str(b[0]) for b in basis]
    degrees = [int(b[1]) for b in basis]
    n = len(labels)
    actions = {}
    for g_name, images in payload.get("actions", {}).items():
        matrix = np.zeros((n, n), dtype=DTYPE)
        for src, image in images.items():
            if src not in labels:
                raise InputError(f"{name}: action of {g_name} on unknown basis element {src!r}")
            col = labels.index(src)
            if isinstance(image, str):
                image = {image: 1}
            for tgt, coeff in image.items():
                if tgt not in labels:
                    raise InputError(f"{name}: {g_name}({src}) names unknown basis element {tgt!r}")
                matrix[labels.index(tgt), col] = coeff
        actions[g_name] = matrix
    return GradedModule(alg, labels, degrees, actions, payload.get("truncation"), name)


def build_module(payload: dict, name: str = "") -> GradedModule:
    """Module from a payload; nested summands use the same format."""
    kind = payload.get("type", "explicit")
    if kind == "preset":
        module = load_preset(payload["preset"])
        if not isinstance(module, GradedModule):
            raise InputError(f"preset {payload['preset']} is not a module")
    else:
        alg = _algebra(payload)
        if kind == "trivial":
            module = trivial_module(alg, int(payload.get("degree", 0)), name=name or f"F{alg.prime}")
        elif kind == "free":
            module = free_module(alg, int(payload.get("degree", 0)), name=name)
        elif kind == "cyclic":
            module = cyclic_module(alg, payload["annihilators"], payload.get("d_max"), name)
        elif kind == "explicit":
            module = _explicit_module(alg, payload, name)
        elif kind == "sum":
            summands = [build_module(s) for s in payload["summands"]]
            module = direct_sum_all(summands, name=name)
        elif kind == "tensor":
            left, right = (build_module(s) for s in payload["factors"])
            module = tensor_product(left, right, name)
        else:
            raise InputError(f"unknown module type {kind!r}")
    if payload.get("shift"):
        module = suspend(module, int(payload["shift"]))
    if payload.get("truncation") is not None and kind != "explicit":
        module = truncate(module, int(payload["truncation"]))
    if name:
        module.name = name
    return module


def build_cohomology(payload: dict, name: str = "") -> CohomologyPresentation:
    generators = [tuple(g) for g in payload["generators"]]
    return polynomial_presentation(int(payload["prime"]), generators, payload.get("operations"),
                                   payload.get("truncation"), name)


def load_preset(name: str):
    """Build and validate the object a preset describes.

    Returns an algebra, a module or a cohomology presentation; scenario
    presets are returned as Preset records for the scenario runner.

    Raises:
        UnknownPresetError: name not registered
        ValidationError: the built object fails validation (a corpus bug)
    """
    preset = get_preset(name)
    payload = preset.payload
    if preset.kind == "algebra":
        return _algebra(payload)
    if preset.kind == "module":
        module = build_module(payload, payload.get("name", name))
        report = validate_module(module)
        if not report.valid and not payload.get("expect_invalid", False):
            raise ValidationError(f"preset {name}: {report.summary()[1]}", report)
        return module
    if preset.kind == "cohomology":
        pres = build_cohomology(payload, payload.get("name", name))
        problems = consistency_check(pres)
        if problems:
            raise ValidationError(f"preset {name}: {problems[0]} ({len(problems)} problems)")
        return pres
    return preset
