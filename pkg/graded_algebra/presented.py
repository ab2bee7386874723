"""
Finite graded algebras given by generators and homogeneous relations.

The quotient of the free algebra by the two-sided ideal of the relations is
built one degree at a time. In degree d every element is a combination of
words g * a with g a generator and a a basis word of degree d - |g|, and the
ideal in degree d is spanned by those words' images of r * y for relations r
and basis words y. Eliminating with the columns in reverse lexicographic
order leaves the lexicographically earliest words as basis representatives.
"""
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError
from common.telemetry import tracer
from fp_linalg.matrix import DTYPE, check_prime, rref_array
from graded_algebra.algebra import FiniteGradedAlgebra, parse_terms

logger = logging.getLogger("algebra")

Word = Tuple[int, ...]
Polynomial = List[Tuple[int, Word]]


@dataclass
class AlgebraPresentation:
    """Generators with positive degrees, relations as text polynomials in them."""
    prime: int
    generators: List[Tuple[str, int]]
    relations: List[str]
    max_degree: int
    name: str = ""
    # Generators with a primitive coproduct; None means all of them
    primitive: Optional[List[str]] = None

    def __post_init__(self):
        check_prime(self.prime)
        if not self.generators:
            raise InputError("a presentation needs at least one generator")
        for gen_name, degree in self.generators:
            if int(degree) <= 0:
                raise InputError(f"generator {gen_name} must have positive degree, got {degree}")
        self._names = [g for g, _ in self.generators]
        self._degrees = [int(d) for _, d in self.generators]

    def word_degree(self, word: Word) -> int:
        return sum(self._degrees[q] for q in word)

    def parse_relation(self, text: str) -> Polynomial:
        """Parse a relation into (coefficient, word) terms.

        Raises:
            InputError: unknown generator or inhomogeneous relation
        """
        terms: Dict[Word, int] = {}
        for coeff, factors in parse_terms(text):
            word = []
            for factor in factors:
                if factor not in self._names:
                    raise InputError(f"relation {text!r}: unknown generator {factor!r}")
                word.append(self._names.index(factor))
            word = tuple(word)
            terms[word] = (terms.get(word, 0) + coeff) % self.prime
        polynomial = [(c, w) for w, c in terms.items() if c]
        degrees = {self.word_degree(w) for _, w in polynomial}
        if len(degrees) > 1:
            raise InputError(f"relation {text!r} is not homogeneous (degrees {sorted(degrees)})")
        if any(not w for _, w in polynomial):
            raise InputError(f"relation {text!r} has a constant term")
        return polynomial

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "prime": self.prime,
            "name": self.name,
            "generators": [[g, d] for g, d in self.generators],
            "relations": list(self.relations),
            "max_degree": self.max_degree,
            "primitive": self.primitive,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AlgebraPresentation":
        """Create from dictionary."""
        return cls(
            prime=int(data["prime"]),
            generators=[(g, int(d)) for g, d in data["generators"]],
            relations=list(data.get("relations", [])),
            max_degree=int(data["max_degree"]),
            name=data.get("name", ""),
            primitive=data.get("primitive"),
        )


class _DegreeData:
    """Basis words of one degree with the reduction that maps V_d onto them."""

    def __init__(self, words: List[Word], columns: List[Tuple[int, int]],
                 reduced: np.ndarray, pivots: List[int], order: np.ndarray):
        self.words = words  # basis representatives, lexicographic
        self.columns = columns  # (generator position, lower basis position) per column of V_d
        self.column_index = {c: i for i, c in enumerate(columns)}
        self.reduced = reduced  # rref of the ideal, columns permuted by order
        self.pivots = pivots
        self.order = order
        pivot_set = set(pivots)
        self.free = [k for k in range(len(columns)) if k not in pivot_set]
        # (generator position, lower basis position) of each basis word
        self.basis_columns: List[Tuple[int, int]] = []

    def reduce(self, v: np.ndarray, p: int) -> np.ndarray:
        """Coordinates in the basis words of a vector over the V_d columns."""
        if not self.columns:
            return np.zeros(0, dtype=DTYPE)
        vp = np.asarray(v, dtype=DTYPE)[self.order] % p
        if self.pivots:
            vp = (vp - vp[self.pivots] @ self.reduced) % p
        return vp[self.free]


def build_presented_algebra(presentation: AlgebraPresentation) -> FiniteGradedAlgebra:
    """Degreewise quotient of the free algebra by the relations.

    When the dimensions vanish in as many consecutive degrees as the largest
    generator degree, every higher degree vanishes too and the algebra is
    complete. Otherwise the result is flagged truncated at ``max_degree``.
    """
    p = presentation.prime
    gen_degrees = [int(d) for _, d in presentation.generators]
    names = [g for g, _ in presentation.generators]
    relations = [presentation.parse_relation(r) for r in presentation.relations]
    relation_degrees = [presentation.word_degree(r[0][1]) for r in relations if r]
    relations = [r for r in relations if r]
    max_degree = presentation.max_degree
    if any(d > max_degree for d in relation_degrees):
        raise InputError(f"relation degree exceeds max_degree {max_degree}")
    span_needed = max(gen_degrees)

    with tracer.start_as_current_span("build_presented_algebra") as span:
        span.set_attribute("algebra", presentation.name)
        span.set_attribute("max_degree", max_degree)

        data: Dict[int, _DegreeData] = {}
        # products[(d1, d2)][i, j] -> coordinate vector in degree d1 + d2
        products: Dict[Tuple[int, int], np.ndarray] = {}

        def dim(d: int) -> int:
            return len(data[d].words) if d in data else 0

        def product(d1: int, i: int, d2: int, j: int) -> np.ndarray:
            if d1 == 0:
                return _unit(dim(d2), j)
            if d2 == 0:
                return _unit(dim(d1), i)
            table = products.get((d1, d2))
            if table is None:
                return np.zeros(dim(d1 + d2), dtype=DTYPE)
            return table[i, j]

        def embed(d: int, g: int, coords: np.ndarray) -> np.ndarray:
            """Vector over the V_d columns for g * (element of degree d - |g|)."""
            v = np.zeros(len(data[d].columns), dtype=DTYPE)
            for a in np.flatnonzero(coords):
                v[data[d].column_index[(g, int(a))]] = coords[a]
            return v

        word_cache: Dict[Word, np.ndarray] = {(): _unit(1, 0)}

        def evaluate(word: Word) -> np.ndarray:
            if word in word_cache:
                return word_cache[word]
            g, rest = word[0], word[1:]
            d = presentation.word_degree(word)
            if d not in data or not data[d].columns:
                value = np.zeros(dim(d), dtype=DTYPE)
            else:
                tail = evaluate(rest)
                value = data[d].reduce(embed(d, g, tail), p) if tail.any() else np.zeros(dim(d), dtype=DTYPE)
            word_cache[word] = value
            return value

        zero_run = 0
        complete = False
        top = 0
        for d in range(max_degree + 1):
            if d == 0:
                data[0] = _DegreeData([()], [], np.zeros((0, 0), dtype=DTYPE), [], np.zeros(0, dtype=int))
                top = 0
                continue
            columns = []
            words = []
            for g, dg in enumerate(gen_degrees):
                if dg <= d:
                    for a, w in enumerate(data[d - dg].words):
                        columns.append((g, a))
                        words.append((g,) + w)
            # columns are already in lexicographic word order
            column_index = {c: i for i, c in enumerate(columns)}
            ideal_rows = []
            for rel, rd in zip(relations, relation_degrees):
                if rd > d:
                    continue
                for y in range(dim(d - rd)):
                    row = np.zeros(len(columns), dtype=DTYPE)
                    for coeff, word in rel:
                        h, tail = word[0], word[1:]
                        tail_degree = presentation.word_degree(tail)
                        tail_value = evaluate(tail)
                        lower = d - gen_degrees[h]
                        acc = np.zeros(dim(lower), dtype=DTYPE)
                        for a in np.flatnonzero(tail_value):
                            acc = (acc + tail_value[a] * product(tail_degree, int(a), d - rd, y)) % p
                        for b in np.flatnonzero(acc):
                            row[column_index[(h, int(b))]] += coeff * acc[b]
                    ideal_rows.append(row % p)
            order = np.arange(len(columns))[::-1].copy()
            if ideal_rows:
                ideal = np.array(ideal_rows, dtype=DTYPE)[:, order]
                reduced, pivots = rref_array(ideal, p)
                reduced = reduced[:len(pivots)]
            else:
                reduced, pivots = np.zeros((0, len(columns)), dtype=DTYPE), []
            pivot_set = set(pivots)
            free = [k for k in range(len(columns)) if k not in pivot_set]
            basis_words = sorted(words[order[k]] for k in free)
            degree_data = _DegreeData(basis_words, columns, reduced, pivots, order)
            # reorder the free coordinates to match the sorted words
            permuted_words = [words[order[k]] for k in free]
            sort_perm = [permuted_words.index(w) for w in basis_words]
            degree_data.free = [free[k] for k in sort_perm]
            degree_data.basis_columns = [columns[order[k]] for k in degree_data.free]
            data[d] = degree_data

            # structure constants with total degree d
            for d1 in range(1, d):
                d2 = d - d1
                n1, n2 = dim(d1), dim(d2)
                if n1 == 0 or n2 == 0:
                    continue
                table = np.zeros((n1, n2, dim(d)), dtype=DTYPE)
                for i, (g, a) in enumerate(data[d1].basis_columns):
                    lower = d1 - gen_degrees[g]
                    for j in range(n2):
                        inner = product(lower, a, d2, j)
                        if inner.any():
                            table[i, j] = degree_data.reduce(embed(d, g, inner), p)
                products[(d1, d2)] = table

            if dim(d):
                top = d
                zero_run = 0
            else:
                zero_run += 1
                if zero_run >= span_needed:
                    complete = True
                    break

        span.set_attribute("complete", complete)

    algebra = _assemble(presentation, names, gen_degrees, data, products, top, complete)
    logger.info("built %s: dimension %d, dims %s%s", algebra.name, algebra.dim,
                algebra.dims_by_degree(), "" if complete else f" (truncated at {max_degree})")
    return algebra


def _unit(n: int, i: int) -> np.ndarray:
    v = np.zeros(n, dtype=DTYPE)
    v[i] = 1
    return v


def _assemble(presentation: AlgebraPresentation, names: List[str], gen_degrees: List[int],
              data: Dict[int, _DegreeData], products: Dict[Tuple[int, int], np.ndarray],
              top: int, complete: bool) -> FiniteGradedAlgebra:
    p = presentation.prime
    offsets = {}
    labels, degrees = [], []
    for d in range(top + 1):
        dd = data.get(d)
        offsets[d] = len(labels)
        for word in (dd.words if dd else []):
            labels.append("*".join(names[q] for q in word) if word else "1")
            degrees.append(d)
    n = len(labels)
    structure = np.zeros((n, n, n), dtype=DTYPE)
    for i in range(n):
        structure[0, i, i] = 1
        structure[i, 0, i] = 1
    for (d1, d2), table in products.items():
        if d1 + d2 > top:
            continue
        n1, n2, _ = table.shape
        for i in range(n1):
            for j in range(n2):
                structure[offsets[d1] + i, offsets[d2] + j, offsets[d1 + d2]:offsets[d1 + d2] + table.shape[2]] = table[i, j]

    generators = []
    for q, dg in enumerate(gen_degrees):
        if dg > top:
            raise InputError(f"generator {names[q]} vanishes in the quotient")
        word = (q,)
        words = data[dg].words
        if word not in words:
            raise InputError(f"generator {names[q]} is not a basis representative of the quotient")
        generators.append(offsets[dg] + words.index(word))

    primitive = names if presentation.primitive is None else presentation.primitive
    coproducts = {}
    for q, gen_name in enumerate(names):
        if gen_name in primitive:
            coproducts[gen_name] = [(generators[q], 0, 1), (0, generators[q], 1)]

    return FiniteGradedAlgebra(
        prime=p,
        name=presentation.name or "presented",
        labels=labels,
        degrees=degrees,
        structure=structure % p,
        generators=generators,
        generator_names=list(names),
        coproducts=coproducts,
        truncated=not complete,
        max_degree=None if complete else presentation.max_degree,
    )
