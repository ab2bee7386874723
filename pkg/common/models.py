from dataclasses import dataclass, field
from typing import List, Optional, Tuple


@dataclass
class ModuleViolation:
    """One relation that fails to act as zero on a module."""
    relation: str
    source_degree: int
    witness: str

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "relation": self.relation,
            "source_degree": self.source_degree,
            "witness": self.witness,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModuleViolation":
        """Create from dictionary."""
        return cls(
            relation=data["relation"],
            source_degree=int(data["source_degree"]),
            witness=data["witness"],
        )


@dataclass
class ValidationReport:
    """Result of checking a module against its algebra's relations."""
    module_name: str
    method: str
    checked: int = 0
    violations: List[ModuleViolation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def summary(self) -> tuple[bool, Optional[str]]:
        """Returns:
            Tuple of (is_valid, error_message)
        """
        if self.valid:
            return True, None
        first = self.violations[0]
        return False, (f"{len(self.violations)} violation(s); first: {first.relation} "
                       f"acts nonzero on {first.witness} (degree {first.source_degree})")

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "module": self.module_name,
            "method": self.method,
            "checked": self.checked,
            "valid": self.valid,
            "violations": [v.to_dict() for v in self.violations],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValidationReport":
        """Create from dictionary."""
        return cls(
            module_name=data["module"],
            method=data["method"],
            checked=int(data["checked"]),
            violations=[ModuleViolation.from_dict(v) for v in data["violations"]],
        )


@dataclass
class SesDegreeCheck:
    """Exactness data for a short exact sequence in one degree."""
    degree: int
    injective: bool
    surjective: bool
    composite_zero: bool
    exact: bool

    @property
    def passed(self) -> bool:
        return self.injective and self.surjective and self.composite_zero and self.exact


@dataclass
class SesReport:
    """Degreewise verdict on a candidate short exact sequence."""
    degrees: List[SesDegreeCheck] = field(default_factory=list)
    inclusion_commutes: bool = True
    quotient_commutes: bool = True
    problems: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.inclusion_commutes and self.quotient_commutes and not self.problems
                and all(d.passed for d in self.degrees))

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "passed": self.passed,
            "inclusion_commutes": self.inclusion_commutes,
            "quotient_commutes": self.quotient_commutes,
            "problems": list(self.problems),
            "degrees": [
                {
                    "degree": d.degree,
                    "injective": d.injective,
                    "surjective": d.surjective,
                    "composite_zero": d.composite_zero,
                    "exact": d.exact,
                }
                for d in self.degrees
            ],
        }


@dataclass
class LesCell:
    """Ranks around one (s, t) segment of a long exact sequence in Ext."""
    s: int
    t: int
    rank_sub: int
    rank_mid: int
    rank_quot: int
    rank_inclusion: int  # rank of Ext(mid) -> Ext(sub)
    rank_quotient: int  # rank of Ext(quot) -> Ext(mid)
    connecting_rank: int  # forced rank of Ext^{s,t}(sub) -> Ext^{s+1,t}(quot)
    consistent: bool = True


@dataclass
class LesReport:
    """Exactness audit of the long exact sequence induced by a short exact sequence."""
    cells: List[LesCell] = field(default_factory=list)
    problems: List[str] = field(default_factory=list)
    s_max: int = 0
    t_max: int = 0

    @property
    def passed(self) -> bool:
        return not self.problems and all(c.consistent for c in self.cells)

    def connecting_rank(self, s: int, t: int) -> int:
        for cell in self.cells:
            if cell.s == s and cell.t == t:
                return cell.connecting_rank
        return 0

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "passed": self.passed,
            "window": {"s_max": self.s_max, "t_max": self.t_max},
            "problems": list(self.problems),
            "cells": [c.__dict__.copy() for c in self.cells if c.rank_sub or c.rank_mid or c.rank_quot],
        }


@dataclass
class PossibleDifferential:
    """A d_r that bidegree arithmetic alone does not rule out."""
    r: int
    source: Tuple[int, int]  # (stem, s)
    target: Tuple[int, int]

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {"r": self.r, "source": list(self.source), "target": list(self.target)}


@dataclass
class AbelianGroupDescriptor:
    """Group read off from one stem of an Adams chart."""
    prime: int
    stem: int
    free_rank: int = 0
    torsion: List[int] = field(default_factory=list)  # exponents l of Z/p^l summands
    caveat: str = "assumes collapse and no hidden extensions"

    def render(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        for exponent in sorted(self.torsion):
            parts.append(f"Z/{self.prime ** exponent}")
        return " + ".join(parts) if parts else "0"

    def __str__(self) -> str:
        return self.render()

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "prime": self.prime,
            "stem": self.stem,
            "free_rank": self.free_rank,
            "torsion": sorted(self.torsion),
            "group": self.render(),
            "caveat": self.caveat,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AbelianGroupDescriptor":
        """Create from dictionary."""
        return cls(
            prime=int(data["prime"]),
            stem=int(data["stem"]),
            free_rank=int(data["free_rank"]),
            torsion=[int(e) for e in data["torsion"]],
            caveat=data.get("caveat", ""),
        )


@dataclass
class CheckResult:
    """One expected-versus-computed comparison inside a scenario run."""
    name: str
    expected: object
    actual: object
    provenance: str
    passed: bool

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "name": self.name,
            "expected": self.expected,
            "actual": self.actual,
            "provenance": self.provenance,
            "passed": self.passed,
        }


@dataclass
class ScenarioResult:
    """Outcome of running a scenario preset."""
    name: str
    checks: List[CheckResult] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "scenario": self.name,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "notes": self.notes,
        }
