"""Rank audit of the long exact sequence in Ext induced by a short exact sequence."""
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.models import LesCell, LesReport
from fp_linalg.matrix import rank_array
from graded_module.module import ModuleMap
from resolution_engine.chain_maps import induced_ext_map
from resolution_engine.resolution import FreeResolution

logger = logging.getLogger("resolution")


def _lookup(maps, r_src: FreeResolution, r_tgt: FreeResolution, s: int, t: int) -> np.ndarray:
    if (s, t) in maps:
        return maps[(s, t)]
    return np.zeros((r_src.rank(s, t), r_tgt.rank(s, t)), dtype=int)


def les_rank_check(i: ModuleMap, q: ModuleMap, r_sub: FreeResolution, r_mid: FreeResolution,
                   r_quot: FreeResolution, s_max: Optional[int] = None,
                   t_max: Optional[int] = None) -> LesReport:
    """Check exactness of ... -> Ext(C) -> Ext(B) -> Ext(A) -> Ext^{s+1}(C) -> ...

    For 0 -> A -> B -> C -> 0 with maps i and q, verifies i* q* = 0 and
    dim ker i* = rank q* in every cell, and reports the connecting rank
    dim coker i* forced by exactness. Where the cell (s + 1, t) is inside the
    window it must match dim ker q* there; at s = 0, q* must be injective.
    """
    resolutions = (r_sub, r_mid, r_quot)
    s_max = min(r.s_max for r in resolutions) if s_max is None else s_max
    t_max = min(r.t_max for r in resolutions) if t_max is None else t_max
    p = r_mid.prime
    report = LesReport(s_max=s_max, t_max=t_max)
    inclusion = induced_ext_map(i, r_sub, r_mid, s_max, t_max)
    quotient = induced_ext_map(q, r_mid, r_quot, s_max, t_max)
    t_min = min(r.t_min for r in resolutions)

    def rank(matrix: np.ndarray) -> int:
        return rank_array(matrix, p) if matrix.size else 0

    for s in range(s_max + 1):
        for t in range(t_min, t_max + 1):
            U_i = _lookup(inclusion, r_sub, r_mid, s, t)  # Ext(B) -> Ext(A)
            U_q = _lookup(quotient, r_mid, r_quot, s, t)  # Ext(C) -> Ext(B)
            cell = LesCell(s, t, r_sub.rank(s, t), r_mid.rank(s, t), r_quot.rank(s, t),
                           rank(U_i), rank(U_q), 0)
            cell.connecting_rank = cell.rank_sub - cell.rank_inclusion
            if U_i.size and U_q.size and (U_i @ U_q % p).any():
                cell.consistent = False
                report.problems.append(f"i* q* != 0 at (s={s}, t={t})")
            if cell.rank_mid - cell.rank_inclusion != cell.rank_quotient:
                cell.consistent = False
                report.problems.append(f"not exact at Ext(mid) in (s={s}, t={t}): "
                                       f"kernel {cell.rank_mid - cell.rank_inclusion}, image {cell.rank_quotient}")
            if s == 0 and cell.rank_quotient != cell.rank_quot:
                cell.consistent = False
                report.problems.append(f"Hom(quot) -> Hom(mid) is not injective in degree {t}")
            if s + 1 <= s_max:
                next_quotient = _lookup(quotient, r_mid, r_quot, s + 1, t)
                kernel = r_quot.rank(s + 1, t) - rank(next_quotient)
                if kernel != cell.connecting_rank:
                    cell.consistent = False
                    report.problems.append(f"connecting rank {cell.connecting_rank} at (s={s}, t={t}) "
                                           f"does not match kernel {kernel} at (s={s + 1}, t={t})")
            report.cells.append(cell)
    if report.problems:
        logger.warning("long exact sequence check: %d problems", len(report.problems))
    return report
