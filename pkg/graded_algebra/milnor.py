"""
Sub-Hopf algebras of the mod 2 Steenrod algebra cut out by a Milnor profile.

Sq(r_1, ..., r_k) is admitted by the profile (e_1, ..., e_k) iff r_i < 2^{e_i}.
Products use the Milnor matrix formula, coproducts the Milnor diagonal
Delta Sq(R) = sum over R' + R'' = R of Sq(R') (x) Sq(R'').
"""
import itertools
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import AlgebraError, InputError
from common.telemetry import tracer
from fp_linalg.matrix import DTYPE, EchelonForm
from graded_algebra.algebra import FiniteGradedAlgebra

logger = logging.getLogger("algebra")

Milnor = Tuple[int, ...]


@dataclass(frozen=True)
class MilnorProfile:
    """Profile bounds (e_1, ..., e_k); A(n) is (n+1, n, ..., 1) and E(1) is (1, 1)."""
    bounds: Tuple[int, ...]
    name: str = ""
    generator_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if not self.bounds or any(int(e) < 1 for e in self.bounds):
            raise InputError(f"profile bounds must be a nonempty list of positive integers, got {self.bounds}")

    def admits(self, r: Sequence[int]) -> bool:
        r = strip(r)
        if len(r) > len(self.bounds):
            return False
        return all(x < 2 ** e for x, e in zip(r, self.bounds))

    def tuples(self) -> List[Milnor]:
        ranges = [range(2 ** e) for e in self.bounds]
        return [strip(r) for r in itertools.product(*ranges)]


def strip(r: Sequence[int]) -> Milnor:
    r = list(r)
    while r and r[-1] == 0:
        r.pop()
    return tuple(r)


def milnor_degree(r: Sequence[int]) -> int:
    return sum(x * (2 ** (i + 1) - 1) for i, x in enumerate(r))


def milnor_label(r: Sequence[int]) -> str:
    r = strip(r)
    if not r:
        return "1"
    return "Sq(" + ",".join(str(x) for x in r) + ")"


def milnor_product(r: Sequence[int], s: Sequence[int]) -> Dict[Milnor, int]:
    """Product Sq(r) * Sq(s) in the mod 2 Steenrod algebra.

    Sums over matrices x_ij (i, j >= 0, x_00 omitted) with row weights
    sum_j 2^j x_ij = r_i and column sums sum_i x_ij = s_j. A matrix
    contributes Sq(t) with t_n = sum_{i+j=n} x_ij when the entries on each
    antidiagonal have pairwise disjoint binary digits (the multinomial
    coefficient is odd exactly then).
    """
    r, s = list(strip(r)), list(strip(s))
    rows, cols = len(r), len(s)
    cells = [(i, j) for i in range(1, rows + 1) for j in range(1, cols + 1)]
    result: Dict[Milnor, int] = {}
    row_left = list(r)
    col_left = list(s)
    chosen: Dict[Tuple[int, int], int] = {}

    def finish():
        diagonals: Dict[int, int] = {}

        def deposit(n, value):
            if value == 0:
                return True
            acc = diagonals.get(n, 0)
            if acc & value:
                return False
            diagonals[n] = acc | value
            return True

        for i in range(1, rows + 1):
            if not deposit(i, row_left[i - 1]):
                return
        for j in range(1, cols + 1):
            if not deposit(j, col_left[j - 1]):
                return
        for (i, j), x in chosen.items():
            if not deposit(i + j, x):
                return
        length = max(diagonals) if diagonals else 0
        t = strip(diagonals.get(n, 0) for n in range(1, length + 1))
        result[t] = result.get(t, 0) ^ 1

    def place(index):
        if index == len(cells):
            finish()
            return
        i, j = cells[index]
        limit = min(row_left[i - 1] >> j, col_left[j - 1])
        for x in range(limit + 1):
            row_left[i - 1] -= x << j
            col_left[j - 1] -= x
            chosen[(i, j)] = x
            place(index + 1)
            row_left[i - 1] += x << j
            col_left[j - 1] += x
        chosen.pop((i, j), None)

    place(0)
    return {t: 1 for t, c in result.items() if c}


def milnor_coproduct(r: Sequence[int]) -> List[Tuple[Milnor, Milnor]]:
    r = strip(r)
    terms = []
    for left in itertools.product(*[range(x + 1) for x in r]):
        right = tuple(x - y for x, y in zip(r, left))
        terms.append((strip(left), strip(right)))
    return terms


def _sort_key(r: Milnor, width: int):
    padded = list(r) + [0] * (width - len(r))
    return (milnor_degree(r), tuple(-x for x in padded))


def _default_generator_name(r: Milnor) -> str:
    if len(r) == 1:
        return f"Sq{r[0]}"
    return milnor_label(r)


def build_milnor_subalgebra(profile: MilnorProfile) -> FiniteGradedAlgebra:
    """Build the subalgebra of the mod 2 Steenrod algebra admitted by a profile.

    Generators are chosen degree by degree as the basis elements (in basis
    order) that are independent of the decomposables and of earlier choices.

    Raises:
        AlgebraError: when a product of admitted elements is not admitted
    """
    width = len(profile.bounds)
    name = profile.name or "A" + str(tuple(profile.bounds))
    with tracer.start_as_current_span("build_milnor_subalgebra") as span:
        span.set_attribute("algebra", name)
        tuples = sorted(set(profile.tuples()), key=lambda r: _sort_key(r, width))
        index = {r: i for i, r in enumerate(tuples)}
        n = len(tuples)
        span.set_attribute("dimension", n)
        structure = np.zeros((n, n, n), dtype=DTYPE)
        for i, r in enumerate(tuples):
            for j, s in enumerate(tuples):
                for t in milnor_product(r, s):
                    if t not in index:
                        raise AlgebraError(
                            f"{name}: {milnor_label(r)} * {milnor_label(s)} contains {milnor_label(t)}, "
                            f"which the profile {tuple(profile.bounds)} does not admit")
                    structure[i, j, index[t]] = 1
        degrees = [milnor_degree(r) for r in tuples]
        labels = [milnor_label(r) for r in tuples]

        generators = _choose_generators(structure, degrees)
        if profile.generator_names is not None:
            if len(profile.generator_names) != len(generators):
                raise AlgebraError(f"{name}: {len(generators)} generators found, "
                                   f"{len(profile.generator_names)} names given")
            generator_names = list(profile.generator_names)
        else:
            generator_names = [_default_generator_name(tuples[g]) for g in generators]

        coproducts = {}
        for g, g_name in zip(generators, generator_names):
            coproducts[g_name] = [(index[left], index[right], 1)
                                  for left, right in milnor_coproduct(tuples[g])
                                  if left in index and right in index]

    logger.info("built %s: dimension %d, top degree %d", name, n, max(degrees))
    return FiniteGradedAlgebra(
        prime=2,
        name=name,
        labels=labels,
        degrees=degrees,
        structure=structure,
        generators=generators,
        generator_names=generator_names,
        coproducts=coproducts,
    )


def _choose_generators(structure: np.ndarray, degrees: List[int]) -> List[int]:
    generators = []
    by_degree: Dict[int, List[int]] = {}
    for i, d in enumerate(degrees):
        by_degree.setdefault(d, []).append(i)
    for d in sorted(by_degree):
        if d == 0:
            continue
        target = by_degree[d]
        echelon = EchelonForm(len(target), 2)
        for i in range(1, len(degrees)):
            if degrees[i] >= d:
                break
            for j in by_degree.get(d - degrees[i], []):
                echelon.add(structure[i, j][target])
        for position, k in enumerate(target):
            unit = np.zeros(len(target), dtype=DTYPE)
            unit[position] = 1
            if echelon.add(unit):
                generators.append(k)
    return generators
