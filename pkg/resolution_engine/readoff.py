"""
Reading homotopy groups off an Ext chart, and listing the Adams
differentials that bidegrees (and optionally h0-linearity) still allow.
"""
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, WindowError
from common.models import AbelianGroupDescriptor, PossibleDifferential
from fp_linalg.matrix import rank_array
from resolution_engine.chart import ExtChart

logger = logging.getLogger("resolution")


def s_bound(chart: ExtChart, stem: int) -> int:
    """Largest filtration whose cell in this stem lies inside the window."""
    return min(chart.s_max, chart.t_max - stem)


def _power_rank(chart: ExtChart, stem: int, s: int, steps: int) -> int:
    matrix = chart.h0_power(stem, s, steps)
    return rank_array(matrix, chart.prime) if matrix.size else 0


def _string_ranks(chart: ExtChart, stem: int, top: int) -> Dict[Tuple[int, int], int]:
    """r[(i, j)] = rank of h0^j out of filtration i, for i + j <= top."""
    ranks = {}
    for i in range(top + 1):
        for j in range(top - i + 1):
            ranks[(i, j)] = _power_rank(chart, stem, i, j)
    return ranks


def read_off_groups(chart: ExtChart, stem: int) -> AbelianGroupDescriptor:
    """Group in one stem, assuming collapse and no hidden extensions.

    h0-strings are found from the ranks of powers of h0. A string still
    alive at the top trusted filtration is read as a tower (a Z_p summand);
    a string of length l that dies inside the window gives Z/p^l.

    Raises:
        WindowError: when the stem has no trusted cell
        InputError: when the chart has classes in the stem but no h0 edges
    """
    if stem > chart.t_max or s_bound(chart, stem) < 0:
        raise WindowError(f"stem {stem} lies outside the window t <= {chart.t_max}; raise t_max")
    top = s_bound(chart, stem)
    descriptor = AbelianGroupDescriptor(prime=chart.prime, stem=stem)
    if not any(chart.at(stem, s) for s in range(top + 1)):
        return descriptor
    if "h0" not in chart.product_names() and any(chart.at(stem, s) for s in range(top)):
        raise InputError("reading off groups needs the h0 products in the chart")
    r = _string_ranks(chart, stem, top)

    def rank(i: int, j: int) -> int:
        if i < 0 or i + j > top:
            return 0
        return r[(i, j)]

    for i in range(top + 1):
        for j in range(top - i + 1):
            # strings born at filtration i that die exactly at i + j
            count = rank(i, j) - rank(i - 1, j + 1) - rank(i, j + 1) + rank(i - 1, j + 2)
            if count <= 0:
                continue
            if i + j == top:
                descriptor.free_rank += count
            else:
                descriptor.torsion.extend([j + 1] * count)
    logger.debug("stem %d: %s", stem, descriptor.render())
    return descriptor


def _nilpotence_order(chart: ExtChart, stem: int, s: int) -> Optional[int]:
    """Smallest k with h0^k = 0 on the cell, or None when it survives to the window edge."""
    top = s_bound(chart, stem)
    for k in range(1, top - s + 1):
        if _power_rank(chart, stem, s, k) == 0:
            return k
    return None


def _h0_injective_to_order(chart: ExtChart, stem: int, s: int, k: int) -> bool:
    steps = min(k, s_bound(chart, stem) - s)
    return _power_rank(chart, stem, s, steps) == chart.at(stem, s)


def _h0_divisible(chart: ExtChart, stem: int, s: int) -> Optional[bool]:
    """True when h0 maps onto the cell, False when it misses it entirely."""
    if s == 0:
        return False
    incoming = chart.product_matrix("h0", s - 1, stem + s - 1, (s, stem + s))
    incoming_rank = rank_array(incoming, chart.prime) if incoming.size else 0
    if incoming_rank == chart.at(stem, s):
        return True
    if incoming_rank == 0:
        return False
    return None


def _pruned(chart: ExtChart, source: Tuple[int, int], target: Tuple[int, int]) -> bool:
    (stem, s), (target_stem, target_s) = source, target
    order = _nilpotence_order(chart, stem, s)
    if order is not None and _h0_injective_to_order(chart, target_stem, target_s, order):
        return True
    return _h0_divisible(chart, stem, s) is True and _h0_divisible(chart, target_stem, target_s) is False


def collapse_check(chart: ExtChart, r_max: int = 5, use_h0_linearity: bool = False,
                   stem_max: Optional[int] = None) -> List[PossibleDifferential]:
    """Possible d_r (2 <= r <= r_max) from (stem, s) to (stem - 1, s + r).

    Both cells must be nonzero and inside the window. With h0-linearity a
    candidate is dropped when every class in the target survives more h0
    multiplications than any source class (strings reaching the window edge
    count as infinite), or when the source cell is h0-divisible while no
    target class is.
    """
    if r_max < 2:
        raise InputError(f"r_max must be at least 2, got {r_max}")
    if use_h0_linearity and "h0" not in chart.product_names() and chart.total_rank():
        raise InputError("h0-linearity pruning needs the h0 products in the chart")
    possible = []
    for s, t in chart.cells():
        stem = t - s
        if stem_max is not None and stem > stem_max:
            continue
        for r in range(2, r_max + 1):
            target_s, target_t = s + r, t + r - 1
            if chart.masked(target_s, target_t) or not chart.rank(target_s, target_t):
                continue
            if use_h0_linearity and _pruned(chart, (stem, s), (stem - 1, target_s)):
                continue
            possible.append(PossibleDifferential(r, (stem, s), (stem - 1, target_s)))
    return possible
