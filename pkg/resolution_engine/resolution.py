"""
Minimal free resolutions over a FiniteGradedAlgebra.

Stage s of a resolution is a free module on generators x with internal
degrees t_x. An element of stage s is stored as an array X with one row per
generator and one column per algebra basis element: X[y, a] is the
coefficient of e_a * y. The boundary of a stage-0 generator is a vector of
the resolved module; the boundary of a stage-s generator (s >= 1) is an
element of stage s - 1.

Cells (s, t) are computed in order of t, then s. Cell (s, t) reads the
finished cells (s - 1, t) and (s, t') for t' < t.
"""
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, SchemaError, WindowError
from common.telemetry import RESOLUTION_CELLS, RESOLUTION_GENERATORS, tracer
from fp_linalg.matrix import DTYPE, EchelonForm, kernel_array, rank_array
from graded_module.module import GradedModule

logger = logging.getLogger("resolution")

# Configuration
RESOLUTION_THREADS = int(os.getenv("RESOLUTION_THREADS", "1"))


def module_hash(module: GradedModule) -> str:
    """Content hash of a module together with its algebra."""
    payload = json.dumps(module.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256((module.algebra.content_hash() + payload).encode()).hexdigest()


class FreeResolution:
    """A minimal free resolution computed through the window s <= s_max, t <= t_max."""

    def __init__(self, module: GradedModule):
        self.module = module
        self.algebra = module.algebra
        self.s_max = -1
        self.t_max = self.t_min - 1
        self.degrees: List[List[int]] = []
        self.labels: List[List[str]] = []
        self.boundaries: List[List[np.ndarray]] = []
        self._matrices: Dict[Tuple[int, int], np.ndarray] = {}
        self._positions: Dict[Tuple[int, int, int], np.ndarray] = {}
        self._hash: Optional[str] = None

    # -- queries -----------------------------------------------------------

    @property
    def prime(self) -> int:
        return self.algebra.prime

    @property
    def t_min(self) -> int:
        return self.module.min_degree if self.module.dim else 0

    def covers(self, s: int, t: int) -> bool:
        return 0 <= s <= self.s_max and t <= self.t_max

    def require(self, s: int, t: int):
        if s > self.s_max or t > self.t_max:
            raise WindowError(f"cell (s={s}, t={t}) lies outside the computed window "
                              f"s <= {self.s_max}, t <= {self.t_max}")

    def generators(self, s: int, t: Optional[int] = None) -> List[int]:
        """Indices of the stage-s generators, optionally only those in degree t."""
        if s < 0 or s >= len(self.degrees):
            return []
        if t is None:
            return list(range(len(self.degrees[s])))
        return [y for y, d in enumerate(self.degrees[s]) if d == t]

    def rank(self, s: int, t: int) -> int:
        """Dimension of Ext^{s,t}, the number of generators at (s, t)."""
        return len(self.generators(s, t))

    def ranks(self) -> Dict[Tuple[int, int], int]:
        ranks: Dict[Tuple[int, int], int] = {}
        for s, degrees in enumerate(self.degrees):
            for t in degrees:
                ranks[(s, t)] = ranks.get((s, t), 0) + 1
        return ranks

    def content_hash(self) -> str:
        if self._hash is None:
            self._hash = module_hash(self.module)
        return self._hash

    # -- coordinates -------------------------------------------------------

    def positions(self, s: int, t: int) -> np.ndarray:
        """Coordinates of stage s in degree t.

        For s >= 0 these are flat indices into the (generators x algebra)
        array; for s = -1 they are the module's degree-t basis indices.
        """
        if s < 0:
            return np.array(self.module.degree_indices(t), dtype=int)
        n = len(self.degrees[s]) if s < len(self.degrees) else 0
        key = (s, t, n)
        if key not in self._positions:
            dim = self.algebra.dim
            parts = [z * dim + np.array(self.algebra.degree_indices(t - d), dtype=int)
                     for z, d in enumerate(self.degrees[s] if n else []) if d <= t]
            parts = [q for q in parts if q.size]
            self._positions[key] = np.concatenate(parts) if parts else np.zeros(0, dtype=int)
        return self._positions[key]

    def dimension(self, s: int, t: int) -> int:
        return len(self.positions(s, t))

    def flatten(self, s: int, t: int, X: np.ndarray) -> np.ndarray:
        """Degree-t coordinates of an element of stage s (a module vector for s = -1)."""
        if s < 0:
            return np.asarray(X, dtype=DTYPE)[self.positions(s, t)]
        return self.pad(s, X).reshape(-1)[self.positions(s, t)]

    def unflatten(self, s: int, t: int, v: np.ndarray) -> np.ndarray:
        if s < 0:
            out = np.zeros(self.module.dim, dtype=DTYPE)
            out[self.positions(s, t)] = v
            return out
        out = np.zeros(len(self.degrees[s]) * self.algebra.dim, dtype=DTYPE)
        out[self.positions(s, t)] = v
        return out.reshape(len(self.degrees[s]), self.algebra.dim)

    def pad(self, s: int, X: np.ndarray) -> np.ndarray:
        """Element of stage s padded with zero rows for later generators."""
        n = len(self.degrees[s])
        X = np.asarray(X, dtype=DTYPE)
        if X.shape[0] == n:
            return X
        out = np.zeros((n, self.algebra.dim), dtype=DTYPE)
        out[:X.shape[0]] = X
        return out

    def zero(self, s: int) -> np.ndarray:
        if s < 0:
            return np.zeros(self.module.dim, dtype=DTYPE)
        return np.zeros((len(self.degrees[s]), self.algebra.dim), dtype=DTYPE)

    def generator_element(self, s: int, y: int) -> np.ndarray:
        X = self.zero(s)
        X[y, 0] = 1
        return X

    def boundary(self, s: int, y: int) -> np.ndarray:
        """d(y) for generator y of stage s, padded to the current stage s - 1."""
        if s == 0:
            return self.boundaries[0][y]
        return self.pad(s - 1, self.boundaries[s][y])

    # -- differentials -------------------------------------------------------

    def act(self, a: int, X: np.ndarray) -> np.ndarray:
        """e_a * X for an element X of some stage."""
        return X @ self.algebra.structure[a] % self.prime

    def apply_differential(self, s: int, X: np.ndarray) -> np.ndarray:
        """d(X) for an element X of stage s."""
        p = self.prime
        C = self.algebra.structure
        result = self.zero(s - 1)
        X = np.asarray(X, dtype=DTYPE)
        for y in np.flatnonzero(X.any(axis=1)):
            if s == 0:
                result = (result + self.module.act(X[y], self.boundaries[0][y])) % p
            else:
                B = np.tensordot(X[y], C, axes=(0, 0)) % p
                result = (result + self.boundary(s, int(y)) @ B) % p
        return result

    def _generator_columns(self, s: int, t: int, y: int) -> np.ndarray:
        """Coordinates of e_a * d(y) in stage s - 1, degree t, one row per a."""
        alg = self.algebra
        p = self.prime
        idx = alg.degree_indices(t - self.degrees[s][y])
        if not idx:
            return np.zeros((0, self.dimension(s - 1, t)), dtype=DTYPE)
        if s == 0:
            target = self.positions(-1, t)
            m_y = self.boundaries[0][y]
            return np.array([self.module.action_of_basis(a) @ m_y % p for a in idx],
                            dtype=DTYPE).reshape(len(idx), -1)[:, target]
        X = self.boundary(s, y)
        products = np.einsum("zb,abk->azk", X, alg.structure[idx]) % p
        return products.reshape(len(idx), -1)[:, self.positions(s - 1, t)]

    def _columns(self, s: int, t: int, gens: Sequence[int], executor=None) -> np.ndarray:
        height = self.dimension(s - 1, t)
        if executor is not None and len(gens) > 1:
            blocks = list(executor.map(lambda y: self._generator_columns(s, t, y), gens))
        else:
            blocks = [self._generator_columns(s, t, y) for y in gens]
        blocks = [b for b in blocks if b.shape[0]]
        if not blocks:
            return np.zeros((height, 0), dtype=DTYPE)
        return np.vstack(blocks).T.copy()

    def differential_matrix(self, s: int, t: int) -> np.ndarray:
        """Matrix of d from stage s to stage s - 1 (the module for s = 0) in degree t."""
        key = (s, t)
        if key not in self._matrices:
            self.require(s, t)
            gens = [y for y, d in enumerate(self.degrees[s]) if d <= t]
            self._matrices[key] = self._columns(s, t, gens)
        return self._matrices[key]

    # -- construction ----------------------------------------------------------

    def _compute_cell(self, s: int, t: int, executor=None) -> int:
        p = self.prime
        old = [y for y, d in enumerate(self.degrees[s]) if d < t]
        columns = self._columns(s, t, old, executor)
        if s == 0:
            width = len(self.positions(-1, t))
            candidates = np.eye(width, dtype=DTYPE)
        else:
            previous = self.differential_matrix(s - 1, t)
            width = previous.shape[1]
            candidates = kernel_array(previous, p) if width else np.zeros((0, 0), dtype=DTYPE)
        echelon = EchelonForm(width, p)
        echelon.extend(columns.T)
        new = [v for v in candidates if echelon.add(v)]
        for k, v in enumerate(new):
            self.degrees[s].append(t)
            self.labels[s].append(f"{s}_{t}_{k}")
            self.boundaries[s].append(self.unflatten(s - 1, t, v))
        if new:
            columns = np.hstack([columns, np.array(new, dtype=DTYPE).T])
        self._matrices[(s, t)] = columns
        RESOLUTION_CELLS.inc()
        if new:
            RESOLUTION_GENERATORS.inc(len(new))
            logger.debug("cell (%d, %d): %d new generators", s, t, len(new))
        return len(new)

    def extend(self, s_max: int, t_max: int, threads: Optional[int] = None):
        """Grow the computed window to s <= s_max, t <= t_max."""
        if s_max < 0:
            raise InputError(f"s_max must be nonnegative, got {s_max}")
        truncation = self.module.truncation_degree
        if truncation is not None and max(t_max, self.t_max) > truncation:
            raise WindowError(f"t_max = {t_max} exceeds the truncation degree {truncation} of "
                              f"{self.module.name or 'the module'}; raise the truncation or lower t_max")
        old_s, old_t = self.s_max, self.t_max
        while len(self.degrees) <= max(s_max, old_s):
            self.degrees.append([])
            self.labels.append([])
            self.boundaries.append([])
        # cells read s_max/t_max through require(), so widen first
        self.s_max, self.t_max = max(s_max, old_s), max(t_max, old_t)
        threads = threads or RESOLUTION_THREADS
        executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        try:
            for t in range(self.t_min, self.t_max + 1):
                for s in range(self.s_max + 1):
                    if s <= old_s and t <= old_t:
                        continue
                    self._compute_cell(s, t, executor)
        finally:
            if executor is not None:
                executor.shutdown()

    # -- checks ------------------------------------------------------------------

    def audit(self) -> List[str]:
        """d o d = 0, minimality and exactness problems in the computed window."""
        p = self.prime
        problems = []
        for s in range(self.s_max + 1):
            if s >= 1:
                for y, X in enumerate(self.boundaries[s]):
                    if np.asarray(X)[:, 0].any():
                        problems.append(f"generator {self.labels[s][y]} has a unit coefficient in its boundary")
            for t in range(self.t_min, self.t_max + 1):
                D = self.differential_matrix(s, t)
                if s == 0:
                    if rank_array(D, p) != D.shape[0]:
                        problems.append(f"augmentation is not onto in degree {t}")
                    continue
                previous = self.differential_matrix(s - 1, t)
                if D.size and previous.size and (previous @ D % p).any():
                    problems.append(f"d o d != 0 at (s={s}, t={t})")
                kernel_dim = previous.shape[1] - rank_array(previous, p)
                if kernel_dim != rank_array(D, p):
                    problems.append(f"not exact at (s={s - 1}, t={t})")
        return problems

    # -- persistence ---------------------------------------------------------------

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        stages = []
        for s in range(self.s_max + 1):
            entries = []
            for y, X in enumerate(self.boundaries[s]):
                X = np.asarray(X)
                if s == 0:
                    entries.extend([y, int(i), int(X[i])] for i in np.flatnonzero(X))
                else:
                    rows, cols = np.nonzero(X)
                    entries.extend([y, int(r), int(c), int(X[r, c])] for r, c in zip(rows, cols))
            stage = {"generators": [{"label": l, "degree": d} for l, d in zip(self.labels[s], self.degrees[s])]}
            stage["augmentation" if s == 0 else "boundaries"] = entries
            stages.append(stage)
        return {
            "content_hash": self.content_hash(),
            "s_max": self.s_max,
            "t_max": self.t_max,
            "module": self.module.to_dict(),
            "stages": stages,
        }

    @classmethod
    def from_dict(cls, data: dict, module: Optional[GradedModule] = None) -> "FreeResolution":
        """Create from dictionary."""
        module = module or GradedModule.from_dict(data["module"])
        resolution = cls(module)
        if data.get("content_hash") not in (None, resolution.content_hash()):
            raise SchemaError("content_hash", "saved resolution belongs to a different module or algebra")
        dim = module.algebra.dim
        for s, stage in enumerate(data["stages"]):
            degrees = [int(g["degree"]) for g in stage["generators"]]
            resolution.degrees.append(degrees)
            resolution.labels.append([g["label"] for g in stage["generators"]])
            if s == 0:
                vectors = [np.zeros(module.dim, dtype=DTYPE) for _ in degrees]
                for y, i, c in stage.get("augmentation", []):
                    vectors[y][i] = c
            else:
                rows = len(resolution.degrees[s - 1])
                vectors = [np.zeros((rows, dim), dtype=DTYPE) for _ in degrees]
                for y, r, a, c in stage.get("boundaries", []):
                    vectors[y][r, a] = c
            resolution.boundaries.append(vectors)
        resolution.s_max = int(data["s_max"])
        resolution.t_max = int(data["t_max"])
        return resolution

    def __repr__(self) -> str:
        return (f"FreeResolution({self.module.name or 'module'} over {self.algebra.name}, "
                f"s <= {self.s_max}, t <= {self.t_max})")


def minimal_resolution(m: GradedModule, s_max: int, t_max: int,
                       resume: Optional[FreeResolution] = None,
                       threads: Optional[int] = None) -> FreeResolution:
    """Minimal free resolution of m through s <= s_max, t <= t_max.

    Args:
        m: module to resolve (validate it first)
        s_max: last homological stage
        t_max: last internal degree; must not exceed m.truncation_degree
        resume: an earlier resolution of the same module, extended in place
        threads: worker threads for the columns of one cell

    Raises:
        WindowError: when t_max exceeds the module's truncation degree
        InputError: when resume belongs to a different module
    """
    with tracer.start_as_current_span("minimal_resolution") as span:
        span.set_attribute("module", m.name or "module")
        span.set_attribute("algebra", m.algebra.name)
        span.set_attribute("s_max", s_max)
        span.set_attribute("t_max", t_max)
        if resume is not None:
            if resume.content_hash() != module_hash(m):
                raise InputError("saved resolution belongs to a different module or algebra")
            resolution = resume
        else:
            resolution = FreeResolution(m)
        resolution.extend(s_max, t_max, threads)
        total = sum(len(d) for d in resolution.degrees)
        span.set_attribute("generators", total)
    logger.info("resolved %s over %s: %d generators in s <= %d, t <= %d",
                m.name or "module", m.algebra.name, total, resolution.s_max, resolution.t_max)
    return resolution
