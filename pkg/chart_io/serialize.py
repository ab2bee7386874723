"""
Versioned JSON documents for algebras, modules, presentations, twists,
resolutions and charts.

Every document is {"format": 1, "kind": ..., "data": ...}. Modules and
resolutions also carry their algebra, so a document can be read back
without the catalog. Schema problems raise SchemaError with a JSON path.
"""
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Union

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, SchemaError, SteenrodLabError
from graded_algebra.algebra import FiniteGradedAlgebra
from graded_module.module import GradedModule
from resolution_engine.chart import ExtChart
from resolution_engine.resolution import FreeResolution
from twist_builder.cohomology import CohomologyPresentation
from twist_builder.twists import TwistData

logger = logging.getLogger("corpus")

FORMAT_VERSION = 1

Serializable = Union[FiniteGradedAlgebra, GradedModule, FreeResolution, ExtChart, CohomologyPresentation, TwistData]

# kind -> fields required in "data"
REQUIRED_FIELDS: Dict[str, List[str]] = {
    "algebra": ["prime", "name", "basis", "generators", "generator_names", "products"],
    "module": ["algebra", "basis", "actions"],
    "resolution": ["s_max", "t_max", "module", "stages"],
    "chart": ["prime", "window", "ranks"],
    "cohomology": ["prime", "basis", "products"],
    "twist": ["target", "classes"],
}


def kind_of(obj: Serializable) -> str:
    if isinstance(obj, FiniteGradedAlgebra):
        return "algebra"
    if isinstance(obj, GradedModule):
        return "module"
    if isinstance(obj, FreeResolution):
        return "resolution"
    if isinstance(obj, ExtChart):
        return "chart"
    if isinstance(obj, CohomologyPresentation):
        return "cohomology"
    if isinstance(obj, TwistData):
        return "twist"
    raise InputError(f"cannot serialize {type(obj).__name__}")


def _algebra_of(obj: Serializable) -> FiniteGradedAlgebra:
    return obj.algebra if isinstance(obj, GradedModule) else obj.module.algebra


def serialize(obj: Serializable) -> dict:
    """Wrap an object's dictionary in a versioned document."""
    kind = kind_of(obj)
    document = {"format": FORMAT_VERSION, "kind": kind, "data": obj.to_dict()}
    if kind in ("module", "resolution"):
        document["algebra"] = _algebra_of(obj).to_dict()
    return document


def _require(data: Any, path: str, fields: List[str]):
    if not isinstance(data, dict):
        raise SchemaError(path, f"expected an object, got {type(data).__name__}")
    for name in fields:
        if name not in data:
            raise SchemaError(f"{path}.{name}", "missing field")


def _check_list(data: dict, path: str, name: str, item_fields: List[str] = ()):
    value = data[name]
    if not isinstance(value, list):
        raise SchemaError(f"{path}.{name}", f"expected a list, got {type(value).__name__}")
    for i, item in enumerate(value):
        if item_fields:
            _require(item, f"{path}.{name}[{i}]", list(item_fields))


def check_document(document: Any, kind: str = None):
    """Raise SchemaError at the first problem found in a document."""
    _require(document, "$", ["format", "kind", "data"])
    if document["format"] != FORMAT_VERSION:
        raise SchemaError("$.format", f"unsupported format {document['format']!r}, expected {FORMAT_VERSION}")
    if document["kind"] not in REQUIRED_FIELDS:
        raise SchemaError("$.kind", f"unknown kind {document['kind']!r}")
    if kind is not None and document["kind"] != kind:
        raise SchemaError("$.kind", f"expected a {kind} document, got {document['kind']}")
    kind = document["kind"]
    data = document["data"]
    _require(data, "$.data", REQUIRED_FIELDS[kind])
    if kind in ("algebra", "module", "cohomology"):
        _check_list(data, "$.data", "basis", ["label", "degree"])
    if kind == "resolution":
        _check_list(data, "$.data", "stages", ["generators"])
        for s, stage in enumerate(data["stages"]):
            _check_list(stage, f"$.data.stages[{s}]", "generators", ["label", "degree"])
        _require(data["module"], "$.data.module", REQUIRED_FIELDS["module"])
    if kind == "chart":
        _require(data["window"], "$.data.window", ["s_max", "t_max"])
        _check_list(data, "$.data", "ranks")
    if kind in ("module", "resolution"):
        _require(document.get("algebra"), "$.algebra", REQUIRED_FIELDS["algebra"])


def deserialize(document: Any, kind: str = None) -> Serializable:
    """Rebuild an object from a document written by serialize."""
    check_document(document, kind)
    kind = document["kind"]
    data = document["data"]
    try:
        if kind == "algebra":
            return FiniteGradedAlgebra.from_dict(data)
        if kind == "module":
            return GradedModule.from_dict(data, FiniteGradedAlgebra.from_dict(document["algebra"]))
        if kind == "resolution":
            algebra = FiniteGradedAlgebra.from_dict(document["algebra"])
            return FreeResolution.from_dict(data, GradedModule.from_dict(data["module"], algebra))
        if kind == "chart":
            return ExtChart.from_dict(data)
        if kind == "cohomology":
            return CohomologyPresentation.from_dict(data)
        return TwistData.from_dict(data)
    except SteenrodLabError:
        raise
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise SchemaError("$.data", f"malformed {kind} data: {e!r}") from e


def dumps(obj: Serializable) -> str:
    return json.dumps(serialize(obj), sort_keys=True, indent=1)


def loads(text: str, kind: str = None) -> Serializable:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"not valid JSON: {e.msg} at line {e.lineno}") from e
    return deserialize(document, kind)


def save(obj: Serializable, path: Union[str, Path]):
    Path(path).write_text(dumps(obj))
    logger.info("saved %s to %s", kind_of(obj), path)


def load(path: Union[str, Path], kind: str = None) -> Serializable:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    return loads(path.read_text(), kind)


def roundtrip(obj: Serializable) -> Serializable:
    """Serialize to JSON text and read it back."""
    return loads(dumps(obj))


def structurally_equal(a: Serializable, b: Serializable) -> bool:
    """Equality of the serialized forms."""
    return kind_of(a) == kind_of(b) and serialize(a) == serialize(b)
