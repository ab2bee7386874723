"""
Finite-type graded modules over a FiniteGradedAlgebra.

A module is a graded basis plus one matrix per algebra generator. Action
matrices act on column vectors over the whole basis: column j of the
matrix for g is the image of basis element j.
"""
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError
from common.models import ModuleViolation, ValidationReport
from common.telemetry import MODULE_VALIDATIONS, MODULE_VALIDATION_FAILURES
from fp_linalg.matrix import DTYPE, rref_array
from graded_algebra.algebra import FiniteGradedAlgebra, word_kernel

logger = logging.getLogger("module")


@dataclass(eq=False)
class GradedModule:
    """Graded module with labeled basis sorted by degree."""
    algebra: FiniteGradedAlgebra
    labels: List[str]
    degrees: List[int]
    actions: Dict[str, np.ndarray] = field(default_factory=dict)
    # Largest degree in which the module is known; None for a complete module
    truncation_degree: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        alg = self.algebra
        n = len(self.labels)
        if len(self.degrees) != n:
            raise InputError(f"module {self.name}: {n} labels but {len(self.degrees)} degrees")
        self.degrees = [int(d) for d in self.degrees]
        if self.degrees != sorted(self.degrees):
            raise InputError(f"module {self.name}: basis must be sorted by degree")
        if self.truncation_degree is not None and self.degrees and self.degrees[-1] > self.truncation_degree:
            raise InputError(f"module {self.name}: basis element in degree {self.degrees[-1]} "
                             f"above truncation {self.truncation_degree}")
        unknown = set(self.actions) - set(alg.generator_names)
        if unknown:
            raise InputError(f"module {self.name}: actions for unknown generators {sorted(unknown)}")
        actions = {}
        degrees = np.array(self.degrees, dtype=int)
        for g_name in alg.generator_names:
            matrix = self.actions.get(g_name)
            matrix = np.zeros((n, n), dtype=DTYPE) if matrix is None else np.asarray(matrix, dtype=DTYPE) % alg.prime
            if matrix.shape != (n, n):
                raise InputError(f"module {self.name}: action of {g_name} has shape {matrix.shape}, expected {(n, n)}")
            shift = alg.generator_degree(g_name)
            rows, cols = np.nonzero(matrix)
            bad = degrees[rows] != degrees[cols] + shift
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                raise InputError(f"module {self.name}: {g_name} maps {self.labels[cols[k]]} "
                                 f"(degree {degrees[cols[k]]}) to {self.labels[rows[k]]} (degree {degrees[rows[k]]})")
            actions[g_name] = matrix
        self.actions = actions
        self._by_degree: Dict[int, List[int]] = {}
        for i, d in enumerate(self.degrees):
            self._by_degree.setdefault(d, []).append(i)
        self._basis_actions: Dict[int, np.ndarray] = {}

    # -- queries -----------------------------------------------------------

    @property
    def prime(self) -> int:
        return self.algebra.prime

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def min_degree(self) -> Optional[int]:
        return self.degrees[0] if self.degrees else None

    @property
    def max_degree(self) -> Optional[int]:
        return self.degrees[-1] if self.degrees else None

    def degree_indices(self, d: int) -> List[int]:
        return self._by_degree.get(d, [])

    def dims(self, lo: int, hi: int) -> List[int]:
        return [len(self.degree_indices(d)) for d in range(lo, hi + 1)]

    def dims_by_degree(self) -> Dict[int, int]:
        return {d: len(idx) for d, idx in sorted(self._by_degree.items())}

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"module {self.name}: unknown basis label {label!r}") from None

    def basis_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=DTYPE)
        v[i] = 1
        return v

    def action_of_basis(self, k: int) -> np.ndarray:
        """Matrix of algebra basis element k, built from its generator factorization."""
        if k in self._basis_actions:
            return self._basis_actions[k]
        alg = self.algebra
        if k == 0:
            matrix = np.eye(self.dim, dtype=DTYPE)
        elif k in alg.generators:
            matrix = self.actions[alg.generator_names[alg.generators.index(k)]]
        else:
            matrix = np.zeros((self.dim, self.dim), dtype=DTYPE)
            for q, i, c in alg.factorization(k):
                g_matrix = self.actions[alg.generator_names[q]]
                matrix = (matrix + c * (g_matrix @ self.action_of_basis(i))) % alg.prime
        self._basis_actions[k] = matrix
        return matrix

    def act(self, element, v) -> np.ndarray:
        """Apply an algebra element (coefficient vector) to a module vector."""
        result = np.zeros(self.dim, dtype=DTYPE)
        element = np.asarray(element) % self.prime
        for k in np.flatnonzero(element):
            result = (result + element[k] * (self.action_of_basis(int(k)) @ v)) % self.prime
        return result

    def word_matrix(self, word: Sequence[int]) -> np.ndarray:
        matrix = np.eye(self.dim, dtype=DTYPE)
        for q in word:
            matrix = self.actions[self.algebra.generator_names[q]] @ matrix % self.prime
        return matrix

    def format_vector(self, v) -> str:
        v = np.asarray(v) % self.prime
        terms = []
        for i in np.flatnonzero(v):
            c = int(v[i])
            terms.append(self.labels[i] if c == 1 else f"{c}*{self.labels[i]}")
        return " + ".join(terms) if terms else "0"

    def image(self, generator: str, label: str) -> str:
        """Readable image of a basis element under a generator."""
        return self.format_vector(self.actions[generator][:, self.index_of(label)])

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        actions = {}
        for g_name, matrix in self.actions.items():
            rows, cols = np.nonzero(matrix)
            actions[g_name] = [[int(r), int(c), int(matrix[r, c])] for r, c in zip(rows, cols)]
        return {
            "algebra": self.algebra.name,
            "algebra_hash": self.algebra.content_hash(),
            "name": self.name,
            "truncation_degree": self.truncation_degree,
            "basis": [{"label": l, "degree": d} for l, d in zip(self.labels, self.degrees)],
            "actions": actions,
        }

    @classmethod
    def from_dict(cls, data: dict, algebra: Optional[FiniteGradedAlgebra] = None) -> "GradedModule":
        """Create from dictionary."""
        if algebra is None:
            from graded_algebra.catalog import standard_algebra
            algebra = standard_algebra(data["algebra"])
        basis = data["basis"]
        n = len(basis)
        actions = {}
        for g_name, entries in data.get("actions", {}).items():
            matrix = np.zeros((n, n), dtype=DTYPE)
            for r, c, v in entries:
                matrix[r, c] = v
            actions[g_name] = matrix
        return cls(
            algebra=algebra,
            labels=[b["label"] for b in basis],
            degrees=[int(b["degree"]) for b in basis],
            actions=actions,
            truncation_degree=data.get("truncation_degree"),
            name=data.get("name", ""),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedModule):
            return NotImplemented
        return (self.algebra == other.algebra and self.labels == other.labels
                and self.degrees == other.degrees and self.truncation_degree == other.truncation_degree
                and all(np.array_equal(self.actions[g], other.actions[g]) for g in self.actions))

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return f"GradedModule({self.name or 'unnamed'} over {self.algebra.name}, dims {self.dims_by_degree()})"


# -- constructors ------------------------------------------------------------

def zero_module(alg: FiniteGradedAlgebra, name: str = "0") -> GradedModule:
    return GradedModule(alg, [], [], {}, None, name)


def trivial_module(alg: FiniteGradedAlgebra, degree: int = 0, label: str = "1",
                   name: str = "") -> GradedModule:
    """The ground field F_p concentrated in one degree."""
    return GradedModule(alg, [label], [degree], {}, None, name or f"F{alg.prime}")


def free_module(alg: FiniteGradedAlgebra, degree: int = 0, name: str = "") -> GradedModule:
    """The algebra itself as a rank-one free module on a generator in ``degree``."""
    if alg.truncated:
        raise InputError(f"{alg.name} is truncated; its free module is not finite")
    actions = {g_name: alg.left_matrix(g) for g, g_name in zip(alg.generators, alg.generator_names)}
    return GradedModule(alg, list(alg.labels), [d + degree for d in alg.degrees], actions, None,
                        name or alg.name)


def suspend(m: GradedModule, k: int) -> GradedModule:
    """Shift every degree (and the truncation) by k."""
    if k == 0:
        return m
    truncation = None if m.truncation_degree is None else m.truncation_degree + k
    name = f"S^{k}{m.name}" if m.name else ""
    return GradedModule(m.algebra, list(m.labels), [d + k for d in m.degrees],
                        {g: a.copy() for g, a in m.actions.items()}, truncation, name)


def truncate(m: GradedModule, d: int) -> GradedModule:
    """Forget everything above degree d."""
    keep = [i for i, deg in enumerate(m.degrees) if deg <= d]
    truncation = d if m.truncation_degree is None else min(d, m.truncation_degree)
    actions = {g: a[np.ix_(keep, keep)] for g, a in m.actions.items()}
    return GradedModule(m.algebra, [m.labels[i] for i in keep], [m.degrees[i] for i in keep],
                        actions, truncation, m.name)


def _same_algebra(a: GradedModule, b: GradedModule):
    if a.algebra is not b.algebra and a.algebra != b.algebra:
        raise InputError(f"modules over different algebras: {a.algebra.name} and {b.algebra.name}")


def _min_truncation(*values: Optional[int]) -> Optional[int]:
    known = [v for v in values if v is not None]
    return min(known) if known else None


def direct_sum(a: GradedModule, b: GradedModule, tags: Optional[Tuple[str, str]] = None,
               name: str = "") -> GradedModule:
    """Block-diagonal sum; labels are prefixed with the summand tags.

    A complete zero-dimensional summand is dropped and the other one is
    returned unchanged.
    """
    if b.dim == 0 and b.truncation_degree is None:
        _same_algebra(a, b)
        return a
    if a.dim == 0 and a.truncation_degree is None:
        _same_algebra(a, b)
        return b
    if tags is None:
        tags = (a.name or "a", b.name or "b")
        if tags[0] == tags[1]:
            tags = (tags[0] + "1", tags[1] + "2")
    return direct_sum_all([a, b], tags=list(tags), name=name or f"{a.name}+{b.name}")


def direct_sum_all(modules: Sequence[GradedModule], tags: Optional[Sequence[str]] = None,
                   name: str = "") -> GradedModule:
    """Sum of several modules; summand k is tagged ``tags[k]`` (default its index)."""
    modules = list(modules)
    if not modules:
        raise InputError("direct sum of an empty list")
    for m in modules[1:]:
        _same_algebra(modules[0], m)
    tags = [str(k) for k in range(len(modules))] if tags is None else list(tags)
    if len(tags) != len(modules):
        raise InputError(f"{len(tags)} tags for {len(modules)} summands")
    entries = sorted((d, s, i) for s, m in enumerate(modules) for i, d in enumerate(m.degrees))
    position = {(s, i): k for k, (_, s, i) in enumerate(entries)}
    n = len(entries)
    labels = [f"{tags[s]}:{modules[s].labels[i]}" for _, s, i in entries]
    degrees = [d for d, _, _ in entries]
    actions = {}
    for g_name in modules[0].algebra.generator_names:
        matrix = np.zeros((n, n), dtype=DTYPE)
        for s, summand in enumerate(modules):
            block = summand.actions[g_name]
            for r, c in zip(*np.nonzero(block)):
                matrix[position[(s, r)], position[(s, c)]] = block[r, c]
        actions[g_name] = matrix
    result = GradedModule(modules[0].algebra, labels, degrees, actions, None, name)
    truncation = _min_truncation(*(m.truncation_degree for m in modules))
    return result if truncation is None else truncate(result, truncation)


def tensor_product(a: GradedModule, b: GradedModule, name: str = "") -> GradedModule:
    """Tensor product with generators acting through their coproducts.

    A coproduct term l (x) r acts on m (x) n as (-1)^{|r||m|} l m (x) r n.
    """
    _same_algebra(a, b)
    alg = a.algebra
    p = alg.prime
    entries = sorted((a.degrees[i] + b.degrees[j], i, j) for i in range(a.dim) for j in range(b.dim))
    n = len(entries)
    labels = [f"{a.labels[i]}(x){b.labels[j]}" for _, i, j in entries]
    degrees = [d for d, _, _ in entries]
    # kron index i * b.dim + j -> sorted position
    order = np.array([i * b.dim + j for _, i, j in entries], dtype=int)
    a_degrees = np.array(a.degrees, dtype=int)
    actions = {}
    for g_name in alg.generator_names:
        total = np.zeros((a.dim * b.dim, a.dim * b.dim), dtype=DTYPE)
        for left, right, coeff in alg.coproducts.get(g_name, []):
            left_matrix = a.action_of_basis(left)
            if alg.degrees[right] % 2 and p != 2:
                signs = np.where(a_degrees % 2 == 1, p - 1, 1)
                left_matrix = left_matrix * signs[None, :]
            total = (total + coeff * np.kron(left_matrix, b.action_of_basis(right))) % p
        actions[g_name] = total[np.ix_(order, order)] if n else np.zeros((0, 0), dtype=DTYPE)
    truncation = None
    if a.truncation_degree is not None or b.truncation_degree is not None:
        candidates = []
        if a.truncation_degree is not None and b.min_degree is not None:
            candidates.append(a.truncation_degree + b.min_degree)
        if b.truncation_degree is not None and a.min_degree is not None:
            candidates.append(b.truncation_degree + a.min_degree)
        truncation = min(candidates) if candidates else None
    result = GradedModule(alg, labels, degrees, actions, None, name or f"{a.name}(x){b.name}")
    return result if truncation is None else truncate(result, truncation)


def cyclic_module(alg: FiniteGradedAlgebra, annihilators: Sequence[Union[str, np.ndarray]],
                  d_max: Optional[int] = None, name: str = "") -> GradedModule:
    """alg / (left ideal generated by the annihilators), on one generator in degree 0.

    Surviving basis elements are the earliest algebra basis elements in each
    degree; they keep the algebra's labels.
    """
    p = alg.prime
    elements = [alg.parse(x) if isinstance(x, str) else np.asarray(x, dtype=DTYPE) % p for x in annihilators]
    element_degrees = [alg.element_degree(x) for x in elements]
    reductions = {}
    survivors: List[int] = []
    top = alg.top_degree if d_max is None else min(alg.top_degree, d_max)
    for d in range(top + 1):
        idx = alg.degree_indices(d)
        if not idx:
            continue
        rows = []
        for x, dx in zip(elements, element_degrees):
            if dx is None or dx > d:
                continue
            for y in alg.degree_indices(d - dx):
                rows.append(alg.multiply(alg.basis_vector(y), x)[idx])
        order = np.arange(len(idx))[::-1].copy()
        if rows:
            reduced, pivots = rref_array(np.array(rows, dtype=DTYPE)[:, order], p)
            reduced = reduced[:len(pivots)]
        else:
            reduced, pivots = np.zeros((0, len(idx)), dtype=DTYPE), []
        pivot_set = set(pivots)
        free = sorted((k for k in range(len(idx)) if k not in pivot_set), key=lambda k: order[k])
        reductions[d] = (idx, order, reduced, pivots, free)
        survivors.extend(idx[order[k]] for k in free)

    position = {s: k for k, s in enumerate(survivors)}
    n = len(survivors)

    def coordinates(v: np.ndarray, d: int) -> np.ndarray:
        out = np.zeros(n, dtype=DTYPE)
        if d not in reductions:
            return out
        idx, order, reduced, pivots, free = reductions[d]
        vp = v[idx][order] % p
        if pivots:
            vp = (vp - vp[pivots] @ reduced) % p
        for k in free:
            out[position[idx[order[k]]]] = vp[k]
        return out

    actions = {}
    for g, g_name in zip(alg.generators, alg.generator_names):
        matrix = np.zeros((n, n), dtype=DTYPE)
        dg = alg.degrees[g]
        for col, s in enumerate(survivors):
            target_degree = alg.degrees[s] + dg
            if target_degree > top:
                continue
            matrix[:, col] = coordinates(alg.multiply(alg.basis_vector(g), alg.basis_vector(s)), target_degree)
        actions[g_name] = matrix
    truncation = d_max if d_max is not None and d_max < alg.top_degree else None
    if alg.truncated:
        truncation = _min_truncation(truncation, alg.max_degree)
    return GradedModule(alg, [alg.labels[s] for s in survivors], [alg.degrees[s] for s in survivors],
                        actions, truncation, name)


# -- validation ----------------------------------------------------------------

def validate_module(m: GradedModule, method: str = "factorized") -> ValidationReport:
    """Check that every relation of the algebra acts as zero on the module.

    Args:
        m: module to check
        method: "factorized" checks g * rho(e_j) = rho(g e_j) for every
            generator g and basis element e_j, with rho(e_j) built from a
            fixed generator factorization of e_j; this holds iff every linear
            relation among generator words acts as zero. "words" enumerates
            the word kernel in each degree span explicitly.

    Returns:
        ValidationReport listing every violation
    """
    if method not in ("factorized", "words"):
        raise InputError(f"unknown validation method {method!r}")
    MODULE_VALIDATIONS.inc()
    report = ValidationReport(module_name=m.name or "module", method=method)
    if m.dim:
        if method == "factorized":
            _validate_factorized(m, report)
        else:
            _validate_words(m, report)
    if report.violations:
        MODULE_VALIDATION_FAILURES.inc()
        logger.info("module %s: %d violations", report.module_name, len(report.violations))
    return report


def _first_witness(m: GradedModule, difference: np.ndarray) -> Tuple[int, str]:
    col = int(np.flatnonzero(difference.any(axis=0))[0])
    return m.degrees[col], m.labels[col]


def _validate_factorized(m: GradedModule, report: ValidationReport):
    alg = m.algebra
    p = alg.prime
    span = m.max_degree - m.min_degree
    for g, g_name in zip(alg.generators, alg.generator_names):
        dg = alg.degrees[g]
        if dg > span:
            continue
        for j in range(alg.dim):
            if dg + alg.degrees[j] > span:
                continue
            if alg.truncated and dg + alg.degrees[j] > alg.max_degree:
                continue
            lhs = m.actions[g_name] @ m.action_of_basis(j) % p
            rhs = np.zeros_like(lhs)
            for k in np.flatnonzero(alg.structure[g, j]):
                rhs = (rhs + alg.structure[g, j, k] * m.action_of_basis(int(k))) % p
            report.checked += 1
            difference = (lhs - rhs) % p
            if difference.any():
                degree, witness = _first_witness(m, difference)
                relation = f"{g_name}*{alg.label_of(j)} = {alg.format_element(alg.structure[g, j])}"
                report.violations.append(ModuleViolation(relation, degree, witness))


def _validate_words(m: GradedModule, report: ValidationReport):
    alg = m.algebra
    p = alg.prime
    span = m.max_degree - m.min_degree
    for k in range(1, span + 1):
        if alg.truncated and k > alg.max_degree:
            break
        words = alg.generator_words(k)
        if not words:
            continue
        kernel = word_kernel(alg, k).data
        if not kernel.shape[0]:
            continue
        matrices = [m.word_matrix(w) for w in words]
        for row in kernel:
            total = np.zeros((m.dim, m.dim), dtype=DTYPE)
            for c, matrix in zip(row, matrices):
                if c:
                    total = (total + c * matrix) % p
            report.checked += 1
            if total.any():
                degree, witness = _first_witness(m, total)
                relation = " + ".join(
                    (alg.word_label(w) if c == 1 else f"{c}*{alg.word_label(w)}")
                    for c, w in zip(row, words) if c)
                report.violations.append(ModuleViolation(relation + " = 0", degree, witness))


# -- maps ----------------------------------------------------------------------

Assignment = Union[None, int, str, Dict[str, int]]


@dataclass(eq=False)
class ModuleMap:
    """Degree-preserving (up to ``shift``) linear map between modules.

    ``matrix`` has one row per target basis element and one column per
    source basis element.
    """
    source: GradedModule
    target: GradedModule
    matrix: np.ndarray
    shift: int = 0
    name: str = ""

    def __post_init__(self):
        _same_algebra(self.source, self.target)
        self.matrix = np.asarray(self.matrix, dtype=DTYPE).reshape(self.target.dim, self.source.dim) % self.prime
        rows, cols = np.nonzero(self.matrix)
        for r, c in zip(rows, cols):
            if self.target.degrees[r] != self.source.degrees[c] + self.shift:
                raise InputError(f"map {self.name}: {self.source.labels[c]} (degree {self.source.degrees[c]}) "
                                 f"sent to {self.target.labels[r]} (degree {self.target.degrees[r]})")

    @property
    def prime(self) -> int:
        return self.source.algebra.prime

    @classmethod
    def from_assignments(cls, source: GradedModule, target: GradedModule,
                         assignments: Dict[str, Assignment], shift: int = 0, name: str = "") -> "ModuleMap":
        """Build a map from images of source basis labels; unlisted labels map to 0.

        An image is a target label, a {label: coefficient} dict, or 0/None.
        """
        matrix = np.zeros((target.dim, source.dim), dtype=DTYPE)
        for src_label, image in assignments.items():
            col = source.index_of(src_label)
            if image in (None, 0, "0"):
                continue
            if isinstance(image, str):
                image = {image: 1}
            for tgt_label, coeff in image.items():
                matrix[target.index_of(tgt_label), col] = coeff
        return cls(source, target, matrix, shift, name)

    @classmethod
    def from_generator(cls, source: GradedModule, target: GradedModule, image: Union[str, np.ndarray],
                       shift: int = 0, name: str = "") -> "ModuleMap":
        """Map out of a cyclic module, fixed by the image of its generator.

        The source basis must carry algebra labels (as cyclic_module and
        trivial_module produce); basis element a goes to a * image.
        """
        alg = source.algebra
        if isinstance(image, str):
            image = target.basis_vector(target.index_of(image))
        image = np.asarray(image, dtype=DTYPE) % alg.prime
        matrix = np.zeros((target.dim, source.dim), dtype=DTYPE)
        for col, label in enumerate(source.labels):
            matrix[:, col] = target.act(alg.basis_vector(alg.index_of(label)), image)
        return cls(source, target, matrix, shift, name)

    @classmethod
    def identity(cls, m: GradedModule) -> "ModuleMap":
        return cls(m, m, np.eye(m.dim, dtype=DTYPE), 0, "id")

    @classmethod
    def zero(cls, source: GradedModule, target: GradedModule) -> "ModuleMap":
        return cls(source, target, np.zeros((target.dim, source.dim), dtype=DTYPE), 0, "0")

    def block(self, d: int) -> np.ndarray:
        """Matrix from source degree d to target degree d + shift."""
        return self.matrix[np.ix_(self.target.degree_indices(d + self.shift), self.source.degree_indices(d))]

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=DTYPE) % self.prime

    def commutes(self) -> Tuple[bool, Optional[str]]:
        """Check that the map commutes with every generator action.

        Returns:
            Tuple of (commutes, error_message)
        """
        p = self.prime
        for g_name in self.source.algebra.generator_names:
            lhs = self.target.actions[g_name] @ self.matrix % p
            rhs = self.matrix @ self.source.actions[g_name] % p
            difference = (lhs - rhs) % p
            if difference.any():
                col = int(np.flatnonzero(difference.any(axis=0))[0])
                return False, f"{g_name} does not commute with the map on {self.source.labels[col]}"
        return True, None
