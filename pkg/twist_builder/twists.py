"""
Twisted Thom modules.

The Thom class U sits in degree 0 and the module is free of rank one over
the cohomology ring, with basis U*x for the basis classes x. Twists by fake
vector bundle data change how the algebra generators act on U*x.
"""
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, ValidationError
from fp_linalg.matrix import DTYPE
from graded_algebra.algebra import FiniteGradedAlgebra
from graded_algebra.catalog import standard_algebra
from graded_module.module import GradedModule, validate_module
from twist_builder.cohomology import CohomologyPresentation, Element, consistency_check

logger = logging.getLogger("twist")

# target -> (prime, default algebra, generator names, class degrees)
TARGETS = {
    "HZ": (2, "A(0)", ("Sq1",), {"a": 1}),
    "ku": (2, "E(1)", ("Q0", "Q1"), {"a": 1, "c2": 3}),
    "ko": (2, "A(1)", ("Sq1", "Sq2"), {"a": 1, "b": 2}),
    "tmf2": (2, "A(2)", ("Sq1", "Sq2", "Sq4"), {"a": 1, "gw": 2, "delta4": 4}),
    "tmf3": (3, "Atmf", ("beta", "P1"), {"d3": 4}),
}


@dataclass
class TwistData:
    """Twist classes for one target; absent classes are zero."""
    target: str
    classes: Dict[str, Element] = field(default_factory=dict)

    def __post_init__(self):
        if self.target not in TARGETS:
            raise InputError(f"unknown twist target {self.target!r}; expected one of {sorted(TARGETS)}")
        allowed = TARGETS[self.target][3]
        unknown = set(self.classes) - set(allowed)
        if unknown:
            raise InputError(f"twist target {self.target} takes classes {sorted(allowed)}, got {sorted(unknown)}")

    def resolve(self, pres: CohomologyPresentation) -> Dict[str, np.ndarray]:
        """Class vectors over the presentation, checked against the expected degrees."""
        resolved = {}
        for class_name, degree in TARGETS[self.target][3].items():
            vector = pres.element(self.classes.get(class_name))
            actual = pres.element_degree(vector)
            if actual is not None and actual != degree:
                raise InputError(f"twist class {class_name} has degree {actual}, expected {degree}")
            resolved[class_name] = vector
        return resolved

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "target": self.target,
            "classes": {k: v if isinstance(v, str) or v is None else [int(x) for x in v]
                        for k, v in self.classes.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TwistData":
        """Create from dictionary."""
        return cls(target=data["target"], classes=dict(data.get("classes", {})))


@dataclass
class SwClassData:
    """Stiefel-Whitney classes w_1, w_2, ... of a vector bundle; w_0 = 1."""
    classes: Dict[int, Element] = field(default_factory=dict)

    def resolve(self, pres: CohomologyPresentation, upto: int = 4) -> List[np.ndarray]:
        values = [pres.unit()]
        for i in range(1, upto + 1):
            vector = pres.element(self.classes.get(i))
            actual = pres.element_degree(vector)
            if actual is not None and actual != i:
                raise InputError(f"w{i} has degree {actual}")
            values.append(vector)
        return values


def _check_algebra(alg: FiniteGradedAlgebra, target: str, prime: int):
    expected = TARGETS[target][2]
    if alg.prime != prime:
        raise InputError(f"{alg.name} is over F_{alg.prime}, the presentation over F_{prime}")
    if tuple(alg.generator_names) != expected:
        raise InputError(f"target {target} needs an algebra generated by {expected}, "
                         f"{alg.name} is generated by {tuple(alg.generator_names)}")


def thom_labels(pres: CohomologyPresentation) -> List[str]:
    return ["U" if label == "1" else f"U·{label}" for label in pres.labels]


def _finish(pres: CohomologyPresentation, alg: FiniteGradedAlgebra, actions: Dict[str, np.ndarray],
            name: str) -> GradedModule:
    module = GradedModule(alg, thom_labels(pres), list(pres.degrees), actions, pres.truncation, name)
    report = validate_module(module)
    is_valid, message = report.summary()
    if not is_valid:
        raise ValidationError(f"twisted module {name} violates the relations of {alg.name}: {message}", report)
    return module


def _require_consistent(pres: CohomologyPresentation):
    problems = consistency_check(pres)
    if problems:
        raise ValidationError(f"inconsistent Steenrod tables in {pres.name}: {problems[0]}", problems)


def build_twisted_module(pres: CohomologyPresentation, twist: TwistData,
                         alg: Optional[FiniteGradedAlgebra] = None, name: str = "") -> GradedModule:
    """Thom module of the cohomology twisted by fake vector bundle data.

    Args:
        pres: cohomology of the base
        twist: target and twist classes
        alg: algebra to act by; defaults to the standard algebra of the target

    Returns:
        Validated GradedModule with basis U*x

    Raises:
        InputError: on class-degree, prime or algebra mismatch
        ValidationError: when the tables are inconsistent or the result fails validation
    """
    prime, default_algebra, _, _ = TARGETS[twist.target]
    if pres.prime != prime:
        raise InputError(f"target {twist.target} lives at p = {prime}, {pres.name} at p = {pres.prime}")
    alg = alg or standard_algebra(default_algebra)
    _check_algebra(alg, twist.target, prime)
    _require_consistent(pres)
    c = twist.resolve(pres)
    p = prime
    mult = pres.mult_matrix

    if p == 2:
        S1, S2, S3, S4 = (pres.op(f"Sq{k}") for k in range(1, 5))
        A = mult(c["a"])
        sq1 = (A + S1) % p
        if twist.target == "HZ":
            actions = {"Sq1": sq1}
        elif twist.target == "ku":
            cube = pres.multiply(pres.multiply(c["a"], c["a"]), c["a"])
            q1 = (mult((c["c2"] + cube) % p) + S1 @ S2 + S2 @ S1) % p
            actions = {"Q0": sq1, "Q1": q1}
        elif twist.target == "ko":
            sq2 = (mult(c["b"]) + A @ S1 + S2) % p
            actions = {"Sq1": sq1, "Sq2": sq2}
        else:
            G = mult(c["gw"])
            sq2 = (G + A @ S1 + S2) % p
            w3 = (pres.multiply(c["gw"], c["a"]) + pres.apply("Sq1", c["gw"])) % p
            sq4 = (mult(c["delta4"]) + mult(w3) @ S1 + G @ S2 + A @ S3 + S4) % p
            actions = {"Sq1": sq1, "Sq2": sq2, "Sq4": sq4}
    else:
        actions = {"beta": pres.op("beta").copy(), "P1": (mult(c["d3"]) + pres.op("P1")) % p}

    name = name or f"M_{twist.target}({pres.name})"
    logger.info("built twisted module %s over %s", name, alg.name)
    return _finish(pres, alg, actions, name)


def thom_module_from_sw(pres: CohomologyPresentation, sw: SwClassData,
                        alg: Optional[FiniteGradedAlgebra] = None, name: str = "") -> GradedModule:
    """Thom module of a vector bundle: Sq^n(U*x) = sum over i + j = n of U*w_i*Sq^j(x)."""
    if pres.prime != 2:
        raise InputError("Stiefel-Whitney Thom modules are built at p = 2")
    alg = alg or standard_algebra("A(1)")
    if alg.prime != 2:
        raise InputError(f"{alg.name} is not a mod 2 algebra")
    _require_consistent(pres)
    w = sw.resolve(pres)
    p = 2
    S = [np.eye(pres.dim, dtype=DTYPE)] + [pres.op(f"Sq{k}") for k in range(1, 5)]
    T = [None] + [sum(pres.mult_matrix(w[i]) @ S[n - i] for i in range(n + 1)) % p for n in range(1, 5)]
    available = {
        "Sq1": T[1], "Sq2": T[2], "Sq4": T[4],
        "Q0": T[1], "Q1": (T[1] @ T[2] + T[2] @ T[1]) % p,
    }
    missing = [g for g in alg.generator_names if g not in available]
    if missing:
        raise InputError(f"no Stiefel-Whitney formula for generators {missing} of {alg.name}")
    actions = {g: available[g] for g in alg.generator_names}
    return _finish(pres, alg, actions, name or f"Thom({pres.name})")


def total_sw_class(pres: CohomologyPresentation, factors: Sequence[Element]) -> SwClassData:
    """Stiefel-Whitney classes of a sum of bundles with total classes 1 + c.

    A real line bundle contributes its w_1, a complex line bundle its c_1 mod 2.
    """
    total = pres.unit()
    for factor in factors:
        total = pres.multiply(total, (pres.unit() + pres.element(factor)) % 2)
    classes = {}
    for d in range(1, pres.top_degree + 1):
        part = np.zeros(pres.dim, dtype=DTYPE)
        part[pres.degree_indices(d)] = total[pres.degree_indices(d)]
        if part.any():
            classes[d] = part
    return SwClassData(classes)


def twist_from_sw(pres: CohomologyPresentation, sw: SwClassData, target: str) -> TwistData:
    """Fake twist data that a genuine vector bundle induces for a mod 2 target."""
    w = sw.resolve(pres)
    if target == "HZ":
        classes = {"a": w[1]}
    elif target == "ku":
        classes = {"a": w[1], "c2": (pres.multiply(w[1], w[2]) + w[3]) % 2}
    elif target == "ko":
        classes = {"a": w[1], "b": w[2]}
    elif target == "tmf2":
        classes = {"a": w[1], "gw": w[2], "delta4": w[4]}
    else:
        raise InputError(f"target {target} has no Stiefel-Whitney twist")
    return TwistData(target, classes)


def alternate_identification(pres: CohomologyPresentation, twist: TwistData) -> TwistData:
    """The same twist read through the other splitting, replacing b by b + a^2."""
    key = {"ko": "b", "tmf2": "gw"}.get(twist.target)
    if key is None:
        raise InputError(f"target {twist.target} has no alternate identification")
    c = twist.resolve(pres)
    classes = dict(twist.classes)
    classes[key] = (c[key] + pres.multiply(c["a"], c["a"])) % 2
    return replace(twist, classes=classes)
