"""
Chain maps between resolutions, Yoneda products and induced maps on Ext.

A chain map sends stage offset + j of the source resolution to stage j of
the target and shifts internal degrees by ``shift``. It is stored by the
images of source generators; images of other elements follow by linearity
over the algebra.
"""
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, LiftError, WindowError
from common.telemetry import CHAIN_MAP_LIFTS, tracer
from fp_linalg.matrix import DTYPE, solve_array
from graded_module.module import ModuleMap
from resolution_engine.resolution import FreeResolution

logger = logging.getLogger("resolution")

# (s, t, coefficients over the generators at (s, t))
ExtClass = Tuple[int, int, np.ndarray]


@dataclass
class ChainMap:
    source: FreeResolution
    target: FreeResolution
    shift: int = 0
    offset: int = 0
    t_limit: int = 0
    images: List[Dict[int, np.ndarray]] = field(default_factory=list)

    @property
    def stages(self) -> int:
        return len(self.images) - 1

    def image(self, j: int, x: int) -> Optional[np.ndarray]:
        if x not in self.images[j]:
            if self.source.degrees[self.offset + j][x] > self.t_limit:
                raise WindowError(f"generator {self.source.labels[self.offset + j][x]} lies above the lifted "
                                  f"window t <= {self.t_limit}")
            return None
        return self.images[j][x]

    def apply(self, j: int, X: np.ndarray) -> np.ndarray:
        """Image of an element of source stage offset + j."""
        p = self.target.prime
        C = self.target.algebra.structure
        result = self.target.zero(j)
        X = np.asarray(X, dtype=DTYPE)
        for y in np.flatnonzero(X.any(axis=1)):
            image = self.image(j, int(y))
            if image is None:
                continue
            B = np.tensordot(X[y], C, axes=(0, 0)) % p
            result = (result + self.target.pad(j, image) @ B) % p
        return result

    def unit_matrix(self, j: int, t: int) -> np.ndarray:
        """U[x, g]: coefficient of target generator g (unit part) in the image of source generator x."""
        source_gens = self.source.generators(self.offset + j, t)
        target_gens = self.target.generators(j, t + self.shift)
        matrix = np.zeros((len(source_gens), len(target_gens)), dtype=DTYPE)
        for row, x in enumerate(source_gens):
            image = self.image(j, x)
            if image is None:
                continue
            image = self.target.pad(j, image)
            matrix[row] = image[target_gens, 0]
        return matrix


def _solve_image(target: FreeResolution, j: int, degree: int, rhs: np.ndarray, what: str) -> Optional[np.ndarray]:
    if not rhs.any():
        return None
    D = target.differential_matrix(j, degree)
    solution = solve_array(D, rhs, target.prime) if D.shape[1] else None
    if solution is None:
        raise LiftError(f"cannot lift {what} to stage {j}, degree {degree}")
    CHAIN_MAP_LIFTS.inc()
    return target.unflatten(j, degree, solution)


def _extend(chain: ChainMap, stages: int):
    F, G = chain.source, chain.target
    for j in range(len(chain.images), stages + 1):
        s = chain.offset + j
        images = {}
        for x, t_x in enumerate(F.degrees[s]):
            if t_x > chain.t_limit:
                continue
            degree = t_x + chain.shift
            rhs = G.flatten(j - 1, degree, chain.apply(j - 1, F.boundary(s, x)))
            image = _solve_image(G, j, degree, rhs, F.labels[s][x])
            if image is not None:
                images[x] = image
        chain.images.append(images)


def _check_window(F: FreeResolution, G: FreeResolution, top_stage: int, stages: int, t_limit: int, shift: int):
    if top_stage > F.s_max or t_limit > F.t_max:
        raise WindowError(f"source resolution covers s <= {F.s_max}, t <= {F.t_max}; "
                          f"need s <= {top_stage}, t <= {t_limit}")
    if stages > G.s_max or t_limit + shift > G.t_max:
        raise WindowError(f"target resolution covers s <= {G.s_max}, t <= {G.t_max}; "
                          f"need s <= {stages}, t <= {t_limit + shift}")


def lift_chain_map(f: ModuleMap, r_src: FreeResolution, r_tgt: FreeResolution,
                   s_max: Optional[int] = None, t_max: Optional[int] = None) -> ChainMap:
    """Lift a module map to a chain map between resolutions.

    Each generator image is found by solving d(z) = Phi(d(x)) degree by
    degree; stage 0 solves eps(z) = f(eps(x)).

    Raises:
        LiftError: when a system has no solution inside the window
        WindowError: when the resolutions do not cover the requested window
    """
    if f.source != r_src.module or f.target != r_tgt.module:
        raise InputError("module map does not connect the resolved modules")
    s_max = min(r_src.s_max, r_tgt.s_max) if s_max is None else s_max
    t_max = min(r_src.t_max, r_tgt.t_max - f.shift) if t_max is None else t_max
    _check_window(r_src, r_tgt, s_max, s_max, t_max, f.shift)
    with tracer.start_as_current_span("lift_chain_map") as span:
        span.set_attribute("map", f.name or "map")
        span.set_attribute("s_max", s_max)
        span.set_attribute("t_max", t_max)
        chain = ChainMap(r_src, r_tgt, f.shift, 0, t_max)
        base = {}
        for x, t_x in enumerate(r_src.degrees[0]):
            if t_x > t_max:
                continue
            degree = t_x + f.shift
            rhs = r_tgt.flatten(-1, degree, f.apply(r_src.boundaries[0][x]))
            image = _solve_image(r_tgt, 0, degree, rhs, r_src.labels[0][x])
            if image is not None:
                base[x] = image
        chain.images.append(base)
        _extend(chain, s_max)
    return chain


def _check_ground(ground: FreeResolution):
    m = ground.module
    if m.dim != 1 or m.degrees[0] != 0:
        raise InputError("the ground resolution must resolve the trivial module in degree 0")


def _coefficients(r: FreeResolution, cls: ExtClass, what: str) -> Tuple[int, int, np.ndarray]:
    s, t, vector = cls
    vector = np.asarray(vector, dtype=DTYPE) % r.prime
    if vector.shape != (r.rank(s, t),):
        raise InputError(f"{what} at (s={s}, t={t}) needs {r.rank(s, t)} coefficients, got {vector.shape[0]}")
    return s, t, vector


def ext_class(r: FreeResolution, s: int, t: int, index: int = 0) -> ExtClass:
    """The dual class of the index-th generator at (s, t)."""
    r.require(s, t)
    rank = r.rank(s, t)
    if index >= rank:
        raise InputError(f"Ext^{{{s},{t}}} has rank {rank}; no class number {index}")
    vector = np.zeros(rank, dtype=DTYPE)
    vector[index] = 1
    return s, t, vector


def yoneda_product(r: FreeResolution, ground: FreeResolution, cls: ExtClass, target_cls: ExtClass) -> ExtClass:
    """Product of a class of Ext(F_p) with a class of Ext(M).

    The cocycle of target_cls is lifted to a chain map from the resolution
    of M into the ground resolution; cls is then evaluated on the composite.

    Args:
        r: resolution of M
        ground: resolution of the trivial module
        cls: (k, u, coefficients) in Ext^{k,u}(F_p)
        target_cls: (s, t, coefficients) in Ext^{s,t}(M)

    Returns:
        (s + k, t + u, coefficients)
    """
    _check_ground(ground)
    k, u, c = _coefficients(ground, cls, "class")
    s, t, x = _coefficients(r, target_cls, "target class")
    ground.require(k, u)
    r.require(s + k, t + u)
    with tracer.start_as_current_span("yoneda_product") as span:
        span.set_attribute("class", f"({k},{u})")
        span.set_attribute("target", f"({s},{t})")
        chain = ChainMap(r, ground, -t, s, t + u)
        base = {}
        at_t = r.generators(s, t)
        for position, y in enumerate(at_t):
            if x[position]:
                image = ground.zero(0)
                image[0, 0] = x[position]
                base[y] = image
        chain.images.append(base)
        _extend(chain, k)
        product = np.zeros(r.rank(s + k, t + u), dtype=DTYPE)
        ground_gens = ground.generators(k, u)
        for position, y in enumerate(r.generators(s + k, t + u)):
            image = chain.image(k, y)
            if image is None:
                continue
            product[position] = int(ground.pad(k, image)[ground_gens, 0] @ c) % r.prime
    return s + k, t + u, product


def induced_ext_map(f: ModuleMap, r_src: FreeResolution, r_tgt: FreeResolution,
                    s_max: Optional[int] = None, t_max: Optional[int] = None,
                    chain: Optional[ChainMap] = None) -> Dict[Tuple[int, int], np.ndarray]:
    """Matrices of f^*: Ext^{s,t}(target) -> Ext^{s,t}(source) in the window.

    The matrix at (s, t) has one row per source generator and one column per
    target generator, so it maps target-class coefficients to source-class
    coefficients.
    """
    chain = chain or lift_chain_map(f, r_src, r_tgt, s_max, t_max)
    maps = {}
    for s in range(chain.stages + 1):
        for t in range(r_src.t_min, chain.t_limit + 1):
            maps[(s, t)] = chain.unit_matrix(s, t)
    return maps


def apply_ext_map(matrix: np.ndarray, coefficients, p: int) -> np.ndarray:
    return matrix @ np.asarray(coefficients, dtype=DTYPE) % p
