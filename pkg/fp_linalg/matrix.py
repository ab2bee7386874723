"""
Exact linear algebra over the prime fields F_2 and F_3.

Matrices are dense numpy integer arrays with entries reduced into [0, p).
Elimination is deterministic (leftmost pivot column, first nonzero row), so
every consumer that picks basis vectors from a reduced form picks the same
ones on every run.
"""
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError

logger = logging.getLogger("linalg")

SUPPORTED_PRIMES = (2, 3)
DTYPE = np.int64


def check_prime(p: int) -> int:
    if p not in SUPPORTED_PRIMES:
        raise InputError(f"unsupported prime {p}; expected one of {SUPPORTED_PRIMES}")
    return p


def inverse_mod(x: int, p: int) -> int:
    """Multiplicative inverse of a nonzero residue."""
    x %= p
    if x == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {p}")
    return pow(int(x), p - 2, p)


def as_fp(a, p: int) -> np.ndarray:
    """Copy of ``a`` as an integer array reduced mod p."""
    return np.asarray(a, dtype=DTYPE) % p


def rref_array(a, p: int) -> Tuple[np.ndarray, List[int]]:
    """Reduced row-echelon form of a 2-d array.

    Returns:
        (reduced copy, pivot column list)
    """
    m = as_fp(a, p)
    if m.ndim != 2:
        raise InputError(f"expected a 2-d array, got shape {m.shape}")
    n_rows, n_cols = m.shape
    pivots: List[int] = []
    row = 0
    for col in range(n_cols):
        if row >= n_rows:
            break
        nonzero = np.flatnonzero(m[row:, col])
        if nonzero.size == 0:
            continue
        pivot_row = row + int(nonzero[0])
        if pivot_row != row:
            m[[row, pivot_row]] = m[[pivot_row, row]]
        if p == 2:
            others = np.flatnonzero(m[:, col])
            others = others[others != row]
            if others.size:
                m[others] ^= m[row]
        else:
            lead = int(m[row, col])
            if lead != 1:
                m[row] = (m[row] * inverse_mod(lead, p)) % p
            others = np.flatnonzero(m[:, col])
            others = others[others != row]
            if others.size:
                factors = m[others, col]
                m[others] = (m[others] - factors[:, None] * m[row]) % p
        pivots.append(col)
        row += 1
    return m, pivots


def rank_array(a, p: int) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    return len(rref_array(a, p)[1])


def kernel_array(a, p: int) -> np.ndarray:
    """Rows spanning {v : a @ v = 0}, one per non-pivot column in increasing order."""
    a = np.asarray(a, dtype=DTYPE)
    n_cols = a.shape[1]
    reduced, pivots = rref_array(a, p)
    pivot_set = set(pivots)
    free = [j for j in range(n_cols) if j not in pivot_set]
    kernel = np.zeros((len(free), n_cols), dtype=DTYPE)
    if not free:
        return kernel
    kernel[np.arange(len(free)), free] = 1
    if pivots:
        kernel[:, pivots] = (-reduced[:len(pivots)][:, free].T) % p
    return kernel


def solve_array(a, b, p: int) -> Optional[np.ndarray]:
    """Some x with a @ x = b, or None when b is outside the column space."""
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE).reshape(-1)
    if a.ndim != 2 or a.shape[0] != b.shape[0]:
        raise InputError(f"dimension mismatch: matrix {a.shape} against vector of length {b.shape[0]}")
    n_cols = a.shape[1]
    augmented = np.hstack([a % p, (b % p)[:, None]])
    reduced, pivots = rref_array(augmented, p)
    if pivots and pivots[-1] == n_cols:
        return None
    x = np.zeros(n_cols, dtype=DTYPE)
    for i, col in enumerate(pivots):
        x[col] = reduced[i, n_cols]
    return x


def matmul_mod(a, b, p: int) -> np.ndarray:
    return (np.asarray(a, dtype=DTYPE) @ np.asarray(b, dtype=DTYPE)) % p


class EchelonForm:
    """Incrementally grown, fully reduced row space.

    Every stored row has a 1 in its pivot column and zeros in the pivot
    columns of all other rows, so reduction is a single matrix product.
    """

    def __init__(self, width: int, p: int):
        self.width = width
        self.p = check_prime(p)
        self.rows = np.zeros((0, width), dtype=DTYPE)
        self.pivots: List[int] = []

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, v) -> np.ndarray:
        v = as_fp(v, self.p)
        if self.pivots:
            v = (v - v[self.pivots] @ self.rows) % self.p
        return v

    def contains(self, v) -> bool:
        return not self.reduce(v).any()

    def add(self, v) -> bool:
        """Add v to the span; returns False when v was already in it."""
        r = self.reduce(v)
        nonzero = np.flatnonzero(r)
        if nonzero.size == 0:
            return False
        lead = int(nonzero[0])
        r = (r * inverse_mod(int(r[lead]), self.p)) % self.p
        if self.pivots:
            self.rows = (self.rows - np.outer(self.rows[:, lead], r)) % self.p
        self.rows = np.vstack([self.rows, r])
        self.pivots.append(lead)
        return True

    def extend(self, vectors) -> int:
        """Add several vectors; returns how many enlarged the span."""
        return sum(1 for v in vectors if self.add(v))


@dataclass(frozen=True)
class FpScalar:
    """An element of F_p."""
    value: int
    p: int

    def __post_init__(self):
        check_prime(self.p)
        object.__setattr__(self, "value", self.value % self.p)

    def _other(self, other) -> int:
        if isinstance(other, FpScalar):
            if other.p != self.p:
                raise InputError(f"cannot combine scalars over F_{self.p} and F_{other.p}")
            return other.value
        return int(other)

    def __add__(self, other) -> "FpScalar":
        return FpScalar(self.value + self._other(other), self.p)

    __radd__ = __add__

    def __sub__(self, other) -> "FpScalar":
        return FpScalar(self.value - self._other(other), self.p)

    def __rsub__(self, other) -> "FpScalar":
        return FpScalar(self._other(other) - self.value, self.p)

    def __mul__(self, other) -> "FpScalar":
        return FpScalar(self.value * self._other(other), self.p)

    __rmul__ = __mul__

    def __neg__(self) -> "FpScalar":
        return FpScalar(-self.value, self.p)

    def inverse(self) -> "FpScalar":
        return FpScalar(inverse_mod(self.value, self.p), self.p)

    def __truediv__(self, other) -> "FpScalar":
        return self * FpScalar(self._other(other), self.p).inverse()

    def __int__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0


class FpMatrix:
    """Dense matrix over F_p with value semantics."""

    def __init__(self, data, p: int):
        self.p = check_prime(p)
        array = np.asarray(data, dtype=DTYPE)
        if array.ndim == 1 and array.size == 0:
            array = array.reshape(0, 0)
        if array.ndim != 2:
            raise InputError(f"matrix data must be 2-d, got shape {array.shape}")
        self.data = array % p
        self.data.setflags(write=False)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], p: int, cols: Optional[int] = None) -> "FpMatrix":
        rows = [list(r) for r in rows]
        if not rows:
            return cls(np.zeros((0, cols or 0), dtype=DTYPE), p)
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise InputError("ragged rows: every row must have the same length")
        return cls(np.array(rows, dtype=DTYPE), p)

    @classmethod
    def zeros(cls, rows: int, cols: int, p: int) -> "FpMatrix":
        return cls(np.zeros((rows, cols), dtype=DTYPE), p)

    @classmethod
    def identity(cls, n: int, p: int) -> "FpMatrix":
        return cls(np.eye(n, dtype=DTYPE), p)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def entry(self, i: int, j: int) -> FpScalar:
        return FpScalar(int(self.data[i, j]), self.p)

    def row(self, i: int) -> np.ndarray:
        return self.data[i].copy()

    def to_list(self) -> List[List[int]]:
        return self.data.tolist()

    def __matmul__(self, other):
        if isinstance(other, FpMatrix):
            if other.p != self.p:
                raise InputError("matrices over different primes")
            return FpMatrix(matmul_mod(self.data, other.data, self.p), self.p)
        return matmul_mod(self.data, other, self.p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FpMatrix):
            return NotImplemented
        return self.p == other.p and self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"FpMatrix(p={self.p}, shape={self.data.shape}, rows={self.to_list()})"


def rref(m: FpMatrix) -> Tuple[FpMatrix, List[int], int]:
    """Reduced row-echelon form.

    Returns:
        (reduced matrix, strictly increasing pivot columns, rank)
    """
    reduced, pivots = rref_array(m.data, m.p)
    return FpMatrix(reduced, m.p), pivots, len(pivots)


def rank(m: FpMatrix) -> int:
    return rank_array(m.data, m.p)


def kernel_basis(m: FpMatrix) -> FpMatrix:
    """Null-space basis as the rows of a matrix with ``m.cols`` columns."""
    return FpMatrix(kernel_array(m.data, m.p), m.p)


def solve(m: FpMatrix, b) -> Optional[np.ndarray]:
    """Solve m @ x = b.

    Args:
        m: coefficient matrix
        b: right-hand side with ``m.rows`` entries

    Returns:
        A solution vector, or None when b is not in the column space.
    """
    b = np.asarray(b, dtype=DTYPE).reshape(-1)
    if b.shape[0] != m.rows:
        raise InputError(f"right-hand side has length {b.shape[0]}, matrix has {m.rows} rows")
    return solve_array(m.data, b, m.p)
