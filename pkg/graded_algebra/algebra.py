"""
Finite graded algebras over F_p with explicit bases and structure constants.
"""
import hashlib
import json
import logging
import random
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import AlgebraError, InputError
from fp_linalg.matrix import DTYPE, FpMatrix, kernel_array, solve_array

logger = logging.getLogger("algebra")

_TERM_SPLIT = re.compile(r"\s*([+-])\s*")


def parse_terms(text: str) -> List[Tuple[int, List[str]]]:
    """Split ``"2*a*b - c + 1"`` into signed coefficient / factor-list pairs.

    A leading integer factor is taken as the coefficient.
    """
    text = text.strip()
    if not text:
        raise InputError("empty expression")
    if text[0] not in "+-":
        text = "+" + text
    pieces = _TERM_SPLIT.split(text)
    terms = []
    # split() yields ["", sign, term, sign, term, ...]
    for i in range(1, len(pieces), 2):
        sign = -1 if pieces[i] == "-" else 1
        body = pieces[i + 1].strip()
        if not body:
            raise InputError(f"dangling sign in expression {text!r}")
        factors = [f.strip() for f in body.split("*")]
        if any(not f for f in factors):
            raise InputError(f"empty factor in expression {text!r}")
        coeff = sign
        if factors[0].isdigit():
            coeff *= int(factors[0])
            factors = factors[1:]
        terms.append((coeff, factors))
    return terms


@dataclass(eq=False)
class FiniteGradedAlgebra:
    """A finite-dimensional graded algebra over F_p.

    ``structure[i, j, k]`` is the coefficient of basis element k in the
    product of basis elements i and j. Basis element 0 is the unit and
    basis elements are sorted by degree. ``generators`` holds basis indices
    of the distinguished algebra generators, named by ``generator_names``.
    Coproducts map each generator name to ``(left, right, coeff)`` triples.
    """
    prime: int
    name: str
    labels: List[str]
    degrees: List[int]
    structure: np.ndarray
    generators: List[int]
    generator_names: List[str]
    coproducts: Dict[str, List[Tuple[int, int, int]]] = field(default_factory=dict)
    truncated: bool = False
    max_degree: Optional[int] = None

    def __post_init__(self):
        self.structure = np.asarray(self.structure, dtype=DTYPE) % self.prime
        if self.degrees and self.degrees[0] != 0:
            raise AlgebraError(f"{self.name}: basis element 0 must be the unit in degree 0")
        if list(self.degrees) != sorted(self.degrees):
            raise AlgebraError(f"{self.name}: basis must be sorted by degree")
        self._by_degree: Dict[int, List[int]] = {}
        for i, d in enumerate(self.degrees):
            self._by_degree.setdefault(d, []).append(i)
        self._label_index = {label: i for i, label in enumerate(self.labels)}
        self._generator_position = {name: q for q, name in enumerate(self.generator_names)}
        self._factorizations: Dict[int, List[Tuple[int, int, int]]] = {}
        self._functionals: Dict[int, np.ndarray] = {}
        self._hash: Optional[str] = None

    # -- basic queries -------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def top_degree(self) -> int:
        return max(self.degrees) if self.degrees else 0

    def degree_indices(self, d: int) -> List[int]:
        return self._by_degree.get(d, [])

    def dims_by_degree(self, upto: Optional[int] = None) -> List[int]:
        upto = self.top_degree if upto is None else upto
        return [len(self.degree_indices(d)) for d in range(upto + 1)]

    def index_of(self, label: str) -> int:
        if label in self._label_index:
            return self._label_index[label]
        if label in self._generator_position:
            return self.generators[self._generator_position[label]]
        raise InputError(f"{self.name}: unknown basis label or generator {label!r}")

    def generator_position(self, name: str) -> int:
        if name not in self._generator_position:
            raise InputError(f"{self.name}: unknown generator {name!r}")
        return self._generator_position[name]

    def generator_degree(self, name: str) -> int:
        return self.degrees[self.generators[self.generator_position(name)]]

    def basis_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=DTYPE)
        v[i] = 1
        return v

    def zero(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=DTYPE)

    def element_degree(self, x) -> Optional[int]:
        support = np.flatnonzero(np.asarray(x) % self.prime)
        if support.size == 0:
            return None
        degrees = {self.degrees[i] for i in support}
        if len(degrees) > 1:
            raise InputError(f"{self.name}: element is not homogeneous (degrees {sorted(degrees)})")
        return degrees.pop()

    # -- multiplication ------------------------------------------------

    def multiply_checked(self, x, y) -> Tuple[np.ndarray, bool]:
        """Product of two homogeneous elements.

        Returns:
            (product, overflow) where overflow marks a product whose degree
            lies past the construction bound of a truncated algebra.
        """
        x = np.asarray(x, dtype=DTYPE) % self.prime
        y = np.asarray(y, dtype=DTYPE) % self.prime
        if self.truncated:
            dx, dy = self.element_degree(x), self.element_degree(y)
            if dx is not None and dy is not None and dx + dy > self.max_degree:
                return self.zero(), True
        product = np.einsum("i,j,ijk->k", x, y, self.structure) % self.prime
        return product, False

    def multiply(self, x, y) -> np.ndarray:
        return self.multiply_checked(x, y)[0]

    def left_matrix(self, i: int) -> np.ndarray:
        """Matrix of left multiplication by basis element i (column j = e_i e_j)."""
        return self.structure[i].T.copy()

    def evaluate_word(self, word: Sequence[int]) -> np.ndarray:
        """Evaluate a word given as generator positions."""
        value = self.basis_vector(0)
        for q in reversed(list(word)):
            value = self.structure[self.generators[q]].T @ value % self.prime
        return value

    def generator_words(self, d: int) -> List[Tuple[int, ...]]:
        """All words in the generators of total degree d, in lexicographic order."""
        if d == 0:
            return [()]
        words = []
        for q, g in enumerate(self.generators):
            dg = self.degrees[g]
            if dg <= d:
                words.extend((q,) + rest for rest in self.generator_words(d - dg))
        return words

    def word_label(self, word: Sequence[int]) -> str:
        if not word:
            return "1"
        return "*".join(self.generator_names[q] for q in word)

    def parse(self, text: str) -> np.ndarray:
        """Element from text such as ``"Sq(3) + Sq(0,1)"`` or ``"beta*P1*P1"``."""
        total = self.zero()
        for coeff, factors in parse_terms(text):
            value = self.basis_vector(0) * coeff
            for factor in factors:
                value = self.multiply(value, self.basis_vector(self.index_of(factor)))
            total = (total + value) % self.prime
        return total

    def format_element(self, x) -> str:
        x = np.asarray(x) % self.prime
        terms = []
        for i in np.flatnonzero(x):
            c = int(x[i])
            terms.append(self.labels[i] if c == 1 else f"{c}*{self.labels[i]}")
        return " + ".join(terms) if terms else "0"

    def label_of(self, i: int) -> str:
        """Generator name when basis element i is a generator, else its label."""
        if i in self.generators:
            return self.generator_names[self.generators.index(i)]
        return self.labels[i]

    # -- derived structure ---------------------------------------------

    def factorization(self, j: int) -> List[Tuple[int, int, int]]:
        """Fixed expression e_j = sum c * g_q * e_i over generators.

        Returns:
            List of (generator position q, basis index i, coefficient c)
        """
        if j in self._factorizations:
            return self._factorizations[j]
        d = self.degrees[j]
        if d == 0:
            raise AlgebraError(f"{self.name}: the unit has no generator factorization")
        target = self.degree_indices(d)
        columns, keys = [], []
        for q, g in enumerate(self.generators):
            dg = self.degrees[g]
            if dg > d:
                continue
            for i in self.degree_indices(d - dg):
                columns.append(self.structure[g, i][target])
                keys.append((q, i))
        rhs = self.basis_vector(j)[target]
        solution = None
        if columns:
            solution = solve_array(np.array(columns).T, rhs, self.prime)
        if solution is None:
            raise AlgebraError(f"{self.name}: basis element {self.labels[j]} is not generated by the generators")
        result = [(q, i, int(c)) for (q, i), c in zip(keys, solution) if c]
        self._factorizations[j] = result
        return result

    def decomposables(self, d: int) -> np.ndarray:
        """Rows spanning the degree-d part of I*I, restricted to degree-d coordinates."""
        target = self.degree_indices(d)
        rows = []
        for i in range(1, self.dim):
            di = self.degrees[i]
            if di >= d:
                break
            for j in self.degree_indices(d - di):
                rows.append(self.structure[i, j][target])
        if not rows:
            return np.zeros((0, len(target)), dtype=DTYPE)
        return np.array(rows, dtype=DTYPE)

    def indecomposable_functional(self, q: int) -> np.ndarray:
        """Functional on the algebra that is 1 on generator q and vanishes on
        decomposables and on the other generators of the same degree."""
        if q in self._functionals:
            return self._functionals[q]
        g = self.generators[q]
        d = self.degrees[g]
        target = self.degree_indices(d)
        constraints = [self.decomposables(d)]
        for other_q, other in enumerate(self.generators):
            if other_q != q and self.degrees[other] == d:
                constraints.append(self.basis_vector(other)[target][None, :])
        stacked = np.vstack(constraints)
        position = target.index(g)
        functional = None
        for row in kernel_array(stacked, self.prime):
            if row[position] % self.prime:
                inv = pow(int(row[position]), self.prime - 2, self.prime)
                functional = row * inv % self.prime
                break
        if functional is None:
            raise AlgebraError(f"{self.name}: generator {self.generator_names[q]} is decomposable")
        full = self.zero()
        full[target] = functional
        self._functionals[q] = full
        return full

    # -- persistence -----------------------------------------------------

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        products = []
        for i in range(self.dim):
            for j in range(self.dim):
                entries = [[int(k), int(self.structure[i, j, k])] for k in np.flatnonzero(self.structure[i, j])]
                if entries:
                    products.append([i, j, entries])
        return {
            "prime": self.prime,
            "name": self.name,
            "basis": [{"label": l, "degree": d} for l, d in zip(self.labels, self.degrees)],
            "generators": list(self.generators),
            "generator_names": list(self.generator_names),
            "products": products,
            "coproducts": {name: [[l, r, c] for l, r, c in terms] for name, terms in self.coproducts.items()},
            "truncated": self.truncated,
            "max_degree": self.max_degree,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteGradedAlgebra":
        """Create from dictionary."""
        basis = data["basis"]
        n = len(basis)
        structure = np.zeros((n, n, n), dtype=DTYPE)
        for i, j, entries in data["products"]:
            for k, c in entries:
                structure[i, j, k] = c
        return cls(
            prime=int(data["prime"]),
            name=data["name"],
            labels=[b["label"] for b in basis],
            degrees=[int(b["degree"]) for b in basis],
            structure=structure,
            generators=[int(g) for g in data["generators"]],
            generator_names=list(data["generator_names"]),
            coproducts={name: [tuple(int(x) for x in t) for t in terms]
                        for name, terms in data.get("coproducts", {}).items()},
            truncated=bool(data.get("truncated", False)),
            max_degree=data.get("max_degree"),
        )

    def content_hash(self) -> str:
        if self._hash is None:
            canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
            self._hash = hashlib.sha256(canonical.encode()).hexdigest()
        return self._hash

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteGradedAlgebra):
            return NotImplemented
        return (self.prime == other.prime and self.name == other.name and self.labels == other.labels
                and list(self.degrees) == list(other.degrees)
                and np.array_equal(self.structure, other.structure)
                and list(self.generators) == list(other.generators)
                and self.generator_names == other.generator_names
                and {k: [tuple(t) for t in v] for k, v in self.coproducts.items()}
                == {k: [tuple(t) for t in v] for k, v in other.coproducts.items()}
                and self.truncated == other.truncated and self.max_degree == other.max_degree)

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return f"FiniteGradedAlgebra({self.name}, p={self.prime}, dim={self.dim})"


def multiply(alg: FiniteGradedAlgebra, x, y) -> Tuple[np.ndarray, bool]:
    """Bilinear product with the overflow flag of truncated algebras."""
    return alg.multiply_checked(x, y)


def word_kernel(alg: FiniteGradedAlgebra, degree: int) -> FpMatrix:
    """Linear relations among the degree-d generator words.

    Columns follow ``alg.generator_words(degree)``.
    """
    words = alg.generator_words(degree)
    if alg.truncated and degree > alg.max_degree:
        raise InputError(f"{alg.name}: degree {degree} lies past the construction bound {alg.max_degree}")
    evaluations = np.array([alg.evaluate_word(w) for w in words], dtype=DTYPE).reshape(len(words), alg.dim)
    return FpMatrix(kernel_array(evaluations.T, alg.prime), alg.prime)


def check_associativity(alg: FiniteGradedAlgebra, samples: Optional[int] = None,
                        seed: int = 0) -> List[Tuple[int, int, int]]:
    """Basis triples where (e_i e_j) e_k != e_i (e_j e_k).

    Args:
        alg: algebra to check
        samples: number of random triples, or None for every triple
        seed: random seed for sampling

    Returns:
        The failing triples (empty when associative)
    """
    C = alg.structure
    p = alg.prime
    n = alg.dim
    if samples is None:
        triples = ((i, j, k) for i in range(n) for j in range(n) for k in range(n))
    else:
        rng = random.Random(seed)
        triples = ((rng.randrange(n), rng.randrange(n), rng.randrange(n)) for _ in range(samples))
    failures = []
    for i, j, k in triples:
        if alg.truncated and alg.degrees[i] + alg.degrees[j] + alg.degrees[k] > alg.max_degree:
            continue
        left = C[i, j] @ C[:, k, :] % p
        right = C[j, k] @ C[i, :, :] % p
        if not np.array_equal(left, right):
            failures.append((i, j, k))
    if failures:
        logger.warning("%s: %d non-associative triples", alg.name, len(failures))
    return failures
