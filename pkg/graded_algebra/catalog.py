"""Shipped algebras, built on first use and cached for the process."""
import sys
from functools import lru_cache
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError
from graded_algebra.algebra import FiniteGradedAlgebra
from graded_algebra.milnor import MilnorProfile, build_milnor_subalgebra
from graded_algebra.presented import AlgebraPresentation, build_presented_algebra

PROFILES = {
    "A(0)": MilnorProfile((1,), name="A(0)"),
    "E(1)": MilnorProfile((1, 1), name="E(1)", generator_names=("Q0", "Q1")),
    "A(1)": MilnorProfile((2, 1), name="A(1)"),
    "A(2)": MilnorProfile((3, 2, 1), name="A(2)"),
}

ATMF_PRESENTATION = AlgebraPresentation(
    prime=3,
    generators=[("beta", 1), ("P1", 4)],
    relations=[
        "beta*beta",
        "beta*P1*P1*beta - beta*P1*beta*P1 - P1*beta*P1*beta",
        "P1*P1*P1",
    ],
    max_degree=28,
    name="Atmf",
)

E1_PRESENTATION = AlgebraPresentation(
    prime=2,
    generators=[("Q0", 1), ("Q1", 3)],
    relations=["Q0*Q0", "Q1*Q1", "Q0*Q1 + Q1*Q0"],
    max_degree=7,
    name="E(1)-presented",
)

PRESENTATIONS = {
    "Atmf": ATMF_PRESENTATION,
    "E(1)-presented": E1_PRESENTATION,
}

ALIASES = {
    "a0": "A(0)", "a(0)": "A(0)",
    "e1": "E(1)", "e(1)": "E(1)",
    "a1": "A(1)", "a(1)": "A(1)",
    "a2": "A(2)", "a(2)": "A(2)",
    "atmf": "Atmf", "a^tmf": "Atmf",
    "e1-presented": "E(1)-presented", "e(1)-presented": "E(1)-presented",
}


def canonical_name(name: str) -> str:
    if name in PROFILES or name in PRESENTATIONS:
        return name
    key = name.strip().lower()
    if key in ALIASES:
        return ALIASES[key]
    raise InputError(f"unknown algebra {name!r}; known: {', '.join(available_algebras())}")


def available_algebras():
    return list(PROFILES) + list(PRESENTATIONS)


def standard_algebra(name: str) -> FiniteGradedAlgebra:
    """Build (once) one of A(0), E(1), A(1), A(2), E(1)-presented, Atmf."""
    return _build(canonical_name(name))


@lru_cache(maxsize=None)
def _build(name: str) -> FiniteGradedAlgebra:
    if name in PROFILES:
        return build_milnor_subalgebra(PROFILES[name])
    return build_presented_algebra(PRESENTATIONS[name])
