"""
Truncated cohomology rings with Steenrod operation tables.

A presentation stores a monomial basis sorted by degree (basis element 0 is
the unit class), a graded-commutative product table and one matrix per
stored operation: Sq1..Sq4 at p = 2, beta and P1 at p = 3. Columns of an
operation matrix are the images of basis elements.
"""
import logging
import re
import sys
from dataclasses import dataclass, field
from itertools import product as cartesian
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError
from fp_linalg.matrix import DTYPE, check_prime
from graded_algebra.algebra import parse_terms

logger = logging.getLogger("twist")

OPERATION_DEGREES = {
    2: {"Sq1": 1, "Sq2": 2, "Sq3": 3, "Sq4": 4},
    3: {"beta": 1, "P1": 4},
}

_FACTOR = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(\d+))?$")

Element = Union[str, np.ndarray, None]


@dataclass(eq=False)
class CohomologyPresentation:
    """Cohomology of a space through degree ``truncation`` (None: complete)."""
    prime: int
    labels: List[str]
    degrees: List[int]
    products: np.ndarray
    operations: Dict[str, np.ndarray] = field(default_factory=dict)
    truncation: Optional[int] = None
    generator_names: List[str] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        p = check_prime(self.prime)
        n = len(self.labels)
        self.degrees = [int(d) for d in self.degrees]
        if n == 0 or self.degrees[0] != 0:
            raise InputError(f"{self.name}: basis element 0 must be the unit class in degree 0")
        if self.degrees != sorted(self.degrees):
            raise InputError(f"{self.name}: basis must be sorted by degree")
        if self.truncation is not None and self.degrees[-1] > self.truncation:
            raise InputError(f"{self.name}: class {self.labels[-1]} lies above truncation {self.truncation}")
        self.products = np.asarray(self.products, dtype=DTYPE) % p
        if self.products.shape != (n, n, n):
            raise InputError(f"{self.name}: product table has shape {self.products.shape}, expected {(n, n, n)}")
        allowed = OPERATION_DEGREES[p]
        unknown = set(self.operations) - set(allowed)
        if unknown:
            raise InputError(f"{self.name}: operations {sorted(unknown)} are not stored at p = {p}")
        degrees = np.array(self.degrees, dtype=int)
        operations = {}
        for op_name, shift in allowed.items():
            matrix = self.operations.get(op_name)
            matrix = np.zeros((n, n), dtype=DTYPE) if matrix is None else np.asarray(matrix, dtype=DTYPE) % p
            if matrix.shape != (n, n):
                raise InputError(f"{self.name}: table for {op_name} has shape {matrix.shape}")
            rows, cols = np.nonzero(matrix)
            if (degrees[rows] != degrees[cols] + shift).any():
                raise InputError(f"{self.name}: table for {op_name} does not raise degree by {shift}")
            operations[op_name] = matrix
        self.operations = operations
        self._label_index = {label: i for i, label in enumerate(self.labels)}
        self._by_degree: Dict[int, List[int]] = {}
        for i, d in enumerate(self.degrees):
            self._by_degree.setdefault(d, []).append(i)

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def top_degree(self) -> int:
        """Largest degree in which the ring is known."""
        return self.truncation if self.truncation is not None else self.degrees[-1]

    def degree_indices(self, d: int) -> List[int]:
        return self._by_degree.get(d, [])

    def dims(self, upto: Optional[int] = None) -> List[int]:
        upto = self.top_degree if upto is None else upto
        return [len(self.degree_indices(d)) for d in range(upto + 1)]

    def index_of(self, label: str) -> int:
        if label not in self._label_index:
            raise InputError(f"{self.name}: unknown class {label!r}")
        return self._label_index[label]

    def basis_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=DTYPE)
        v[i] = 1
        return v

    def unit(self) -> np.ndarray:
        return self.basis_vector(0)

    def element_degree(self, x) -> Optional[int]:
        support = np.flatnonzero(np.asarray(x) % self.prime)
        if support.size == 0:
            return None
        degrees = {self.degrees[i] for i in support}
        if len(degrees) > 1:
            raise InputError(f"{self.name}: class {self.format_element(x)} is not homogeneous")
        return degrees.pop()

    def mult_matrix(self, x) -> np.ndarray:
        """Matrix of left multiplication by x."""
        x = np.asarray(x, dtype=DTYPE) % self.prime
        return np.einsum("i,ijk->kj", x, self.products) % self.prime

    def multiply(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", np.asarray(x, dtype=DTYPE), np.asarray(y, dtype=DTYPE),
                         self.products) % self.prime

    def op(self, name: str) -> np.ndarray:
        if name not in self.operations:
            raise InputError(f"{self.name}: no operation {name!r} at p = {self.prime}")
        return self.operations[name]

    def apply(self, name: str, x) -> np.ndarray:
        return self.op(name) @ np.asarray(x, dtype=DTYPE) % self.prime

    def element(self, value: Element) -> np.ndarray:
        """Coerce an expression, vector or None into a class vector."""
        if value is None:
            return np.zeros(self.dim, dtype=DTYPE)
        if isinstance(value, str):
            return self.parse(value)
        v = np.asarray(value, dtype=DTYPE) % self.prime
        if v.shape != (self.dim,):
            raise InputError(f"{self.name}: class vector has length {v.shape}, expected {self.dim}")
        return v

    def parse(self, text: str) -> np.ndarray:
        """Class from text such as ``"x*y^3 + b*beta"``, ``"2*x"`` or ``"0"``."""
        total = np.zeros(self.dim, dtype=DTYPE)
        if text.strip() == "0":
            return total
        for coeff, factors in parse_terms(text):
            value = self.unit() * coeff
            for factor in factors:
                match = _FACTOR.match(factor)
                if not match:
                    raise InputError(f"{self.name}: cannot parse factor {factor!r}")
                base = self.basis_vector(self.index_of(match.group(1)))
                for _ in range(int(match.group(2) or 1)):
                    value = self.multiply(value, base)
            total = (total + value) % self.prime
        return total

    def format_element(self, x) -> str:
        x = np.asarray(x) % self.prime
        terms = []
        for i in np.flatnonzero(x):
            c = int(x[i])
            terms.append(self.labels[i] if c == 1 else f"{c}*{self.labels[i]}")
        return " + ".join(terms) if terms else "0"

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        products = []
        for i in range(self.dim):
            for j in range(self.dim):
                entries = [[int(k), int(self.products[i, j, k])] for k in np.flatnonzero(self.products[i, j])]
                if entries:
                    products.append([i, j, entries])
        operations = {}
        for op_name, matrix in self.operations.items():
            rows, cols = np.nonzero(matrix)
            operations[op_name] = [[int(r), int(c), int(matrix[r, c])] for r, c in zip(rows, cols)]
        return {
            "prime": self.prime,
            "name": self.name,
            "truncation": self.truncation,
            "generators": list(self.generator_names),
            "basis": [{"label": l, "degree": d} for l, d in zip(self.labels, self.degrees)],
            "products": products,
            "operations": operations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CohomologyPresentation":
        """Create from dictionary."""
        basis = data["basis"]
        n = len(basis)
        products = np.zeros((n, n, n), dtype=DTYPE)
        for i, j, entries in data["products"]:
            for k, c in entries:
                products[i, j, k] = c
        operations = {}
        for op_name, entries in data.get("operations", {}).items():
            matrix = np.zeros((n, n), dtype=DTYPE)
            for r, c, v in entries:
                matrix[r, c] = v
            operations[op_name] = matrix
        return cls(
            prime=int(data["prime"]),
            labels=[b["label"] for b in basis],
            degrees=[int(b["degree"]) for b in basis],
            products=products,
            operations=operations,
            truncation=data.get("truncation"),
            generator_names=list(data.get("generators", [])),
            name=data.get("name", ""),
        )


# -- building from a compact description ----------------------------------------

GeneratorSpec = Union[Tuple[str, int], Tuple[str, int, Optional[int]]]


def _monomial_label(names: Sequence[str], exponents: Sequence[int]) -> str:
    factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, exponents) if e]
    return "*".join(factors) if factors else "1"


def polynomial_presentation(prime: int, generators: Sequence[GeneratorSpec],
                            operations: Optional[Dict[str, Dict[str, str]]] = None,
                            truncation: Optional[int] = None, name: str = "") -> CohomologyPresentation:
    """Expand generators and their operations into full tables.

    Args:
        prime: 2 or 3
        generators: (name, degree) or (name, degree, height) entries; a class
            of height h satisfies x^h = 0, None means polynomial
        operations: {operation: {generator: expression}}; Sq1, Sq2, Sq3, Sq4
            at p = 2, beta and P1 at p = 3. Unlisted values follow the
            unstable rules (Sq^{|x|} x = x^2, Sq^i x = 0 above |x|,
            Sq3 = Sq1 Sq2, P1 x = x^3 for |x| = 2) or are zero.
        truncation: largest trusted degree, or None when every height is finite
        name: presentation name

    Returns:
        CohomologyPresentation with operations on all monomials from the
        Cartan formula (p = 2) or the derivation rules for beta and P1 (p = 3)
    """
    p = check_prime(prime)
    operations = operations or {}
    names, gen_degrees, heights = [], [], []
    for spec in generators:
        g_name, degree = str(spec[0]), int(spec[1])
        height = spec[2] if len(spec) > 2 else None
        if degree < 1:
            raise InputError(f"{name}: generator {g_name} must have positive degree")
        if g_name in names:
            raise InputError(f"{name}: duplicate generator {g_name}")
        if truncation is not None and degree > truncation:
            raise InputError(f"{name}: generator {g_name} lies above truncation {truncation}")
        if height is not None and int(height) < 2:
            raise InputError(f"{name}: generator {g_name} needs height at least 2")
        if p == 3 and degree % 2:
            # odd classes square to zero by graded commutativity
            height = 2
        names.append(g_name)
        gen_degrees.append(degree)
        heights.append(None if height is None else int(height))
    if truncation is None and any(h is None for h in heights):
        raise InputError(f"{name}: a polynomial generator needs a truncation degree")
    bound = truncation if truncation is not None else sum(d * (h - 1) for d, h in zip(gen_degrees, heights))

    ranges = []
    for d, h in zip(gen_degrees, heights):
        top = bound // d
        ranges.append(range(min(top, h - 1) + 1 if h is not None else top + 1))
    monomials = [e for e in cartesian(*ranges) if sum(x * d for x, d in zip(e, gen_degrees)) <= bound]
    monomials.sort(key=lambda e: (sum(x * d for x, d in zip(e, gen_degrees)), tuple(-x for x in e)))
    index = {e: i for i, e in enumerate(monomials)}
    degrees = [sum(x * d for x, d in zip(e, gen_degrees)) for e in monomials]
    labels = [_monomial_label(names, e) for e in monomials]
    odd = [p == 3 and d % 2 == 1 for d in gen_degrees]

    n = len(monomials)
    table = np.zeros((n, n, n), dtype=DTYPE)
    for i, left in enumerate(monomials):
        for j, right in enumerate(monomials):
            combined = tuple(a + b for a, b in zip(left, right))
            if combined not in index:
                continue
            swaps = sum(left[a] * right[b] for a in range(len(names)) for b in range(a)
                        if odd[a] and odd[b])
            table[i, j, index[combined]] = (-1) ** swaps % p
    bare = CohomologyPresentation(p, labels, degrees, table, {}, truncation, names, name)

    unknown = set(operations) - set(OPERATION_DEGREES[p])
    if unknown:
        raise InputError(f"{name}: operations {sorted(unknown)} are not stored at p = {p}")
    for op_name, values in operations.items():
        missing = set(values) - set(names)
        if missing:
            raise InputError(f"{name}: {op_name} given on unknown generators {sorted(missing)}")

    builder = _OperationBuilder(bare, monomials, index, gen_degrees, operations, bound)
    tables = {op_name: builder.table(op_name) for op_name in OPERATION_DEGREES[p]}
    logger.debug("presentation %s: %d classes through degree %d", name, n, bound)
    return CohomologyPresentation(p, labels, degrees, table, tables, truncation, names, name)


class _OperationBuilder:
    """Memoized operation values on monomials, split off the first generator."""

    def __init__(self, bare: CohomologyPresentation, monomials, index, gen_degrees, given, bound):
        self.bare = bare
        self.p = bare.prime
        self.monomials = monomials
        self.index = index
        self.gen_degrees = gen_degrees
        self.given = given
        self.bound = bound
        self._on_generator: Dict[Tuple[str, int], np.ndarray] = {}
        self._on_monomial: Dict[Tuple[str, int], np.ndarray] = {}

    def zero(self) -> np.ndarray:
        return np.zeros(self.bare.dim, dtype=DTYPE)

    def table(self, op_name: str) -> np.ndarray:
        columns = [self.on_monomial(op_name, i) for i in range(self.bare.dim)]
        return np.array(columns, dtype=DTYPE).T.reshape(self.bare.dim, self.bare.dim)

    def apply(self, op_name: str, v: np.ndarray) -> np.ndarray:
        total = self.zero()
        for i in np.flatnonzero(v):
            total = (total + v[i] * self.on_monomial(op_name, int(i))) % self.p
        return total

    def on_generator(self, op_name: str, q: int) -> np.ndarray:
        key = (op_name, q)
        if key in self._on_generator:
            return self._on_generator[key]
        g_name = self.bare.generator_names[q]
        d = self.gen_degrees[q]
        shift = OPERATION_DEGREES[self.p][op_name]
        generator = self.bare.basis_vector(self.bare.index_of(g_name))
        text = self.given.get(op_name, {}).get(g_name)
        if d + shift > self.bound:
            value = self.zero()
        elif text is not None:
            value = self.bare.parse(text)
            if value.any() and self.bare.element_degree(value) != d + shift:
                raise InputError(f"{self.bare.name}: {op_name}({g_name}) = {text} has the wrong degree")
        elif self.p == 2 and shift == d:
            value = self.bare.multiply(generator, generator)
        elif self.p == 2 and op_name == "Sq3" and d > 3:
            value = self.apply("Sq1", self.on_generator("Sq2", q))
        elif self.p == 3 and op_name == "P1" and d == 2:
            value = self.bare.multiply(self.bare.multiply(generator, generator), generator)
        else:
            value = self.zero()
        self._on_generator[key] = value
        return value

    def on_monomial(self, op_name: str, i: int) -> np.ndarray:
        key = (op_name, i)
        if key in self._on_monomial:
            return self._on_monomial[key]
        exponents = self.monomials[i]
        if not any(exponents):
            value = self.zero()
        else:
            q = next(k for k, e in enumerate(exponents) if e)
            rest = list(exponents)
            rest[q] -= 1
            rest_index = self.index[tuple(rest)]
            g_vector = self.bare.basis_vector(self.bare.index_of(self.bare.generator_names[q]))
            rest_vector = self.bare.basis_vector(rest_index)
            if self.p == 2:
                k = OPERATION_DEGREES[2][op_name]
                value = self.zero()
                for a in range(k + 1):
                    left = g_vector if a == 0 else self.on_generator(f"Sq{a}", q)
                    right = rest_vector if a == k else self.on_monomial(f"Sq{k - a}", rest_index)
                    value = (value + self.bare.multiply(left, right)) % self.p
            else:
                sign = -1 if (op_name == "beta" and self.gen_degrees[q] % 2) else 1
                value = (self.bare.multiply(self.on_generator(op_name, q), rest_vector)
                         + sign * self.bare.multiply(g_vector, self.on_monomial(op_name, rest_index))) % self.p
        self._on_monomial[key] = value
        return value


# -- consistency ----------------------------------------------------------------

def consistency_check(pres: CohomologyPresentation) -> List[str]:
    """Problems with the operation tables of a presentation (empty when consistent).

    Checks the low Adem relations, the unstable conditions and the Cartan
    formula (derivation rules at p = 3) against the product table, in every
    degree that stays inside the trusted range.
    """
    p = pres.prime
    top = pres.top_degree
    problems: List[str] = []
    ops = pres.operations
    n = pres.dim
    identity = np.eye(n, dtype=DTYPE)

    def fits(i: int, shift: int) -> bool:
        return pres.degrees[i] + shift <= top

    def compare(label: str, lhs: np.ndarray, rhs: np.ndarray, shift: int):
        difference = (lhs - rhs) % p
        for i in range(n):
            if fits(i, shift) and difference[:, i].any():
                problems.append(f"{label} fails on {pres.labels[i]}")
                return

    if p == 2:
        S = {0: identity, 1: ops["Sq1"], 2: ops["Sq2"], 3: ops["Sq3"], 4: ops["Sq4"]}
        zero = np.zeros((n, n), dtype=DTYPE)
        compare("Sq1 Sq1 = 0", S[1] @ S[1] % p, zero, 2)
        compare("Sq1 Sq2 = Sq3", S[1] @ S[2] % p, S[3], 3)
        compare("Sq1 Sq3 = 0", S[1] @ S[3] % p, zero, 4)
        compare("Sq2 Sq2 = Sq3 Sq1", S[2] @ S[2] % p, S[3] @ S[1] % p, 4)
        for i in range(n):
            d = pres.degrees[i]
            for k in range(1, 5):
                if not fits(i, k):
                    continue
                column = S[k][:, i]
                if k > d and column.any():
                    problems.append(f"Sq{k} is nonzero on {pres.labels[i]} of degree {d}")
                if k == d and not np.array_equal(column, pres.multiply(pres.basis_vector(i), pres.basis_vector(i))):
                    problems.append(f"Sq{k} of {pres.labels[i]} is not its square")
        for i in range(n):
            for j in range(n):
                for k in range(1, 5):
                    if pres.degrees[i] + pres.degrees[j] + k > top:
                        continue
                    lhs = S[k] @ pres.products[i, j] % p
                    rhs = sum(pres.multiply(S[a][:, i], S[k - a][:, j]) for a in range(k + 1)) % p
                    if not np.array_equal(lhs, rhs):
                        problems.append(f"Cartan formula for Sq{k} fails on {pres.labels[i]} * {pres.labels[j]}")
    else:
        beta, power = ops["beta"], ops["P1"]
        compare("beta beta = 0", beta @ beta % p, np.zeros((n, n), dtype=DTYPE), 2)
        for i in range(n):
            d = pres.degrees[i]
            if d == 2 and fits(i, 4):
                cube = pres.multiply(pres.multiply(pres.basis_vector(i), pres.basis_vector(i)), pres.basis_vector(i))
                if not np.array_equal(power[:, i], cube):
                    problems.append(f"P1 of {pres.labels[i]} is not its cube")
            if d < 2 and power[:, i].any():
                problems.append(f"P1 is nonzero on {pres.labels[i]} of degree {d}")
        for i in range(n):
            for j in range(n):
                di = pres.degrees[i]
                if di + pres.degrees[j] + 1 <= top:
                    lhs = beta @ pres.products[i, j] % p
                    rhs = (pres.multiply(beta[:, i], pres.basis_vector(j))
                           + (-1) ** di * pres.multiply(pres.basis_vector(i), beta[:, j])) % p
                    if not np.array_equal(lhs, rhs):
                        problems.append(f"beta derivation rule fails on {pres.labels[i]} * {pres.labels[j]}")
                if di + pres.degrees[j] + 4 <= top:
                    lhs = power @ pres.products[i, j] % p
                    rhs = (pres.multiply(power[:, i], pres.basis_vector(j))
                           + pres.multiply(pres.basis_vector(i), power[:, j])) % p
                    if not np.array_equal(lhs, rhs):
                        problems.append(f"P1 derivation rule fails on {pres.labels[i]} * {pres.labels[j]}")
    if problems:
        logger.warning("presentation %s: %d consistency problems", pres.name, len(problems))
    return problems
