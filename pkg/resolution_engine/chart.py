"""
Ext charts: ranks per (s, t) plus product edges.

Filtration-one products (h0, h1, h2, v1, alpha) come straight from the
resolution: for a minimal resolution, the coefficient of h_g x* in y* is the
indecomposable part along g of the x-component of d(y). Higher named classes
go through Yoneda products against a resolution of the ground field.
"""
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError
from fp_linalg.matrix import DTYPE, EchelonForm, rank_array
from resolution_engine.chain_maps import ext_class, yoneda_product
from resolution_engine.resolution import FreeResolution

logger = logging.getLogger("resolution")

# product name -> algebra generators it is dual to
PRODUCT_GENERATORS = {
    "h0": ("Sq1", "Q0", "beta"),
    "h1": ("Sq2",),
    "h2": ("Sq4",),
    "v1": ("Q1",),
    "alpha": ("P1",),
}

# product name -> (prime, s, t) of a named class of Ext(F_p)
HIGHER_PRODUCTS = {
    "beta": (3, 2, 12),
    "c4": (3, 2, 10),
}

Cell = Tuple[int, int]


@dataclass(frozen=True)
class ProductEdge:
    name: str
    source: Tuple[int, int, int]  # (s, t, index)
    target: Tuple[int, int, int]
    coeff: int = 1

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {"name": self.name, "source": list(self.source), "target": list(self.target), "coeff": self.coeff}

    @classmethod
    def from_dict(cls, data: dict) -> "ProductEdge":
        """Create from dictionary."""
        return cls(data["name"], tuple(data["source"]), tuple(data["target"]), int(data.get("coeff", 1)))


@dataclass
class ExtChart:
    """Ranks of Ext^{s,t} in the window s <= s_max, t <= t_max; other cells are unknown."""
    prime: int
    ranks: Dict[Cell, int] = field(default_factory=dict)
    edges: List[ProductEdge] = field(default_factory=list)
    s_max: int = 0
    t_max: int = 0
    t_min: int = 0
    name: str = ""
    labels: Dict[Cell, List[str]] = field(default_factory=dict)
    products: List[str] = field(default_factory=list)  # requested, even when no edge results

    def masked(self, s: int, t: int) -> bool:
        return s > self.s_max or t > self.t_max or s < 0

    def rank(self, s: int, t: int) -> int:
        return self.ranks.get((s, t), 0)

    def at(self, stem: int, s: int) -> int:
        return self.rank(s, stem + s)

    def cells(self) -> List[Cell]:
        return sorted(c for c, n in self.ranks.items() if n)

    def stems(self) -> range:
        return range(self.t_min - self.s_max, self.t_max + 1)

    def total_rank(self) -> int:
        return sum(self.ranks.values())

    def product_names(self) -> List[str]:
        return sorted({e.name for e in self.edges} | set(self.products))

    def product_matrix(self, name: str, s: int, t: int, target: Cell) -> np.ndarray:
        """Matrix of a named product from cell (s, t) to the target cell."""
        matrix = np.zeros((self.rank(*target), self.rank(s, t)), dtype=DTYPE)
        for edge in self.edges:
            if edge.name == name and edge.source[:2] == (s, t) and edge.target[:2] == target:
                matrix[edge.target[2], edge.source[2]] = edge.coeff
        return matrix % self.prime

    def h0_power(self, stem: int, s: int, steps: int) -> np.ndarray:
        """Composite of `steps` h0 multiplications starting at (stem, s)."""
        matrix = np.eye(self.at(stem, s), dtype=DTYPE)
        for k in range(steps):
            step = self.product_matrix("h0", s + k, stem + s + k, (s + k + 1, stem + s + k + 1))
            matrix = step @ matrix % self.prime
        return matrix

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "prime": self.prime,
            "name": self.name,
            "window": {"s_max": self.s_max, "t_max": self.t_max, "t_min": self.t_min},
            "ranks": [[s, t, n] for (s, t), n in sorted(self.ranks.items()) if n],
            "edges": [e.to_dict() for e in self.edges],
            "labels": [[s, t, names] for (s, t), names in sorted(self.labels.items())],
            "products": list(self.products),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExtChart":
        """Create from dictionary."""
        window = data["window"]
        return cls(
            prime=int(data["prime"]),
            ranks={(int(s), int(t)): int(n) for s, t, n in data["ranks"]},
            edges=[ProductEdge.from_dict(e) for e in data.get("edges", [])],
            s_max=int(window["s_max"]),
            t_max=int(window["t_max"]),
            t_min=int(window.get("t_min", 0)),
            name=data.get("name", ""),
            labels={(int(s), int(t)): list(names) for s, t, names in data.get("labels", [])},
            products=list(data.get("products", [])),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExtChart):
            return NotImplemented
        return (self.prime == other.prime and self.s_max == other.s_max and self.t_max == other.t_max
                and {c: n for c, n in self.ranks.items() if n} == {c: n for c, n in other.ranks.items() if n}
                and sorted(self.edges, key=repr) == sorted(other.edges, key=repr))


def available_products(r: FreeResolution) -> List[str]:
    names = r.algebra.generator_names
    found = [name for name, gens in PRODUCT_GENERATORS.items() if any(g in names for g in gens)]
    found += [name for name, (p, _, _) in HIGHER_PRODUCTS.items() if p == r.prime]
    return found


def _filtration_one_edges(r: FreeResolution, name: str) -> List[ProductEdge]:
    alg = r.algebra
    candidates = [g for g in PRODUCT_GENERATORS[name] if g in alg.generator_names]
    q = alg.generator_position(candidates[0])
    degree = alg.generator_degree(candidates[0])
    functional = alg.indecomposable_functional(q)
    p = r.prime
    edges = []
    for s in range(r.s_max):
        for y, t_y in enumerate(r.degrees[s + 1]):
            boundary = r.boundary(s + 1, y)
            values = boundary @ functional % p
            for x in np.flatnonzero(values):
                if r.degrees[s][x] + degree != t_y:
                    continue
                t_x = r.degrees[s][x]
                edges.append(ProductEdge(name, (s, t_x, r.generators(s, t_x).index(int(x))),
                                         (s + 1, t_y, r.generators(s + 1, t_y).index(y)), int(values[x])))
    return edges


def _higher_edges(r: FreeResolution, ground: FreeResolution, name: str) -> List[ProductEdge]:
    prime, k, u = HIGHER_PRODUCTS[name]
    if ground.rank(k, u) != 1:
        raise InputError(f"class {name} expects Ext^{{{k},{u}}}(F_{prime}) of rank 1, "
                         f"found {ground.rank(k, u)}")
    cls = ext_class(ground, k, u)
    edges = []
    for (s, t), n in sorted(r.ranks().items()):
        if s + k > r.s_max or t + u > r.t_max:
            continue
        for i in range(n):
            _, _, product = yoneda_product(r, ground, cls, ext_class(r, s, t, i))
            for j in np.flatnonzero(product):
                edges.append(ProductEdge(name, (s, t, i), (s + k, t + u, int(j)), int(product[j])))
    return edges


def ext_ranks(r: FreeResolution, products: Optional[Sequence[str]] = None,
              ground: Optional[FreeResolution] = None, name: str = "") -> ExtChart:
    """Chart of a resolution with the requested product edges.

    Args:
        r: resolution
        products: product names; None means every filtration-one product the
            algebra supports
        ground: resolution of F_p, needed for higher named products
    """
    if products is None:
        products = [n for n in available_products(r) if n in PRODUCT_GENERATORS]
    ranks = {cell: n for cell, n in r.ranks().items() if cell[0] <= r.s_max and cell[1] <= r.t_max}
    edges: List[ProductEdge] = []
    for product in products:
        if product in PRODUCT_GENERATORS:
            if product not in available_products(r):
                raise InputError(f"{r.algebra.name} has no generator dual to {product}")
            edges.extend(_filtration_one_edges(r, product))
        elif product in HIGHER_PRODUCTS:
            if HIGHER_PRODUCTS[product][0] != r.prime:
                raise InputError(f"class {product} lives at another prime")
            if ground is None:
                raise InputError(f"product {product} needs a resolution of F_{r.prime}")
            edges.extend(_higher_edges(r, ground, product))
        else:
            raise InputError(f"unknown product {product!r}; known: {sorted(PRODUCT_GENERATORS) + sorted(HIGHER_PRODUCTS)}")
    labels = {}
    for s, stage_labels in enumerate(r.labels[:r.s_max + 1]):
        for label, t in zip(stage_labels, r.degrees[s]):
            labels.setdefault((s, t), []).append(label)
    return ExtChart(r.prime, ranks, edges, r.s_max, r.t_max, r.t_min, name or r.module.name, labels,
                    list(products))


def ext_generators(chart: ExtChart, ring: bool = False) -> Dict[Cell, int]:
    """Per cell, the number of classes outside the span of incoming product edges.

    With ring=True the chart is read as Ext of the ground field itself:
    products out of the unit class are skipped, so the named classes count
    as generators, and the unit itself is not reported.
    """
    unit = (0, chart.t_min)
    incoming: Dict[Cell, Dict[Tuple[str, Tuple[int, int, int]], np.ndarray]] = {}
    for edge in chart.edges:
        if ring and edge.source[:2] == unit:
            continue
        cell = edge.target[:2]
        key = (edge.name, edge.source)
        vectors = incoming.setdefault(cell, {})
        if key not in vectors:
            vectors[key] = np.zeros(chart.rank(*cell), dtype=DTYPE)
        vectors[key][edge.target[2]] = edge.coeff
    result = {}
    for cell in chart.cells():
        if ring and cell == unit:
            continue
        echelon = EchelonForm(chart.rank(*cell), chart.prime)
        echelon.extend(incoming.get(cell, {}).values())
        count = chart.rank(*cell) - echelon.rank
        if count:
            result[cell] = count
    return result


def h0_failures(chart: ExtChart, stem_max: int) -> List[Cell]:
    """In-window cells with stem <= stem_max where h0 is not injective."""
    failures = []
    for s, t in chart.cells():
        if t - s > stem_max or chart.masked(s + 1, t + 1):
            continue
        matrix = chart.product_matrix("h0", s, t, (s + 1, t + 1))
        if rank_array(matrix, chart.prime) != chart.rank(s, t):
            failures.append((s, t))
    return failures


def h0_unchecked(chart: ExtChart, stem_max: int) -> List[Cell]:
    """Nonzero cells with stem <= stem_max that h0_failures skips because h0 leaves the window."""
    return [(s, t) for s, t in chart.cells() if t - s <= stem_max and chart.masked(s + 1, t + 1)]


def sum_charts(charts: Iterable[ExtChart]) -> ExtChart:
    """Cellwise sum of ranks, on the common window."""
    charts = list(charts)
    if not charts:
        raise InputError("no charts to add")
    s_max = min(c.s_max for c in charts)
    t_max = min(c.t_max for c in charts)
    ranks: Dict[Cell, int] = {}
    for chart in charts:
        for (s, t), n in chart.ranks.items():
            if s <= s_max and t <= t_max:
                ranks[(s, t)] = ranks.get((s, t), 0) + n
    return ExtChart(charts[0].prime, ranks, [], s_max, t_max, min(c.t_min for c in charts))


def shift_chart(chart: ExtChart, k: int) -> ExtChart:
    """Chart of a k-fold suspension."""
    ranks = {(s, t + k): n for (s, t), n in chart.ranks.items()}
    edges = [ProductEdge(e.name, (e.source[0], e.source[1] + k, e.source[2]),
                         (e.target[0], e.target[1] + k, e.target[2]), e.coeff) for e in chart.edges]
    return ExtChart(chart.prime, ranks, edges, chart.s_max, chart.t_max + k, chart.t_min + k, chart.name,
                    products=list(chart.products))
