"""Degreewise checks of candidate short exact sequences 0 -> A -> B -> C -> 0."""
import logging
import sys
from pathlib import Path

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.models import SesDegreeCheck, SesReport
from fp_linalg.matrix import rank_array
from graded_module.module import ModuleMap

logger = logging.getLogger("module")


def check_ses(i: ModuleMap, q: ModuleMap) -> SesReport:
    """Verify that i is injective, q surjective and im(i) = ker(q) in every degree.

    Both maps must also commute with every generator action. Failures are
    recorded in the report, never raised.
    """
    report = SesReport()
    if i.target is not q.source and i.target != q.source:
        report.problems.append("target of the inclusion is not the source of the quotient map")
        return report
    if i.shift or q.shift:
        report.problems.append("maps of nonzero degree cannot form a short exact sequence")
        return report

    report.inclusion_commutes, message = i.commutes()
    if message:
        report.problems.append(f"inclusion: {message}")
    report.quotient_commutes, message = q.commutes()
    if message:
        report.problems.append(f"quotient: {message}")

    p = i.prime
    sub, mid, quot = i.source, i.target, q.target
    degrees = sorted(set(sub.degrees) | set(mid.degrees) | set(quot.degrees))
    for d in degrees:
        inc = i.block(d)
        proj = q.block(d)
        dim_sub = len(sub.degree_indices(d))
        dim_mid = len(mid.degree_indices(d))
        dim_quot = len(quot.degree_indices(d))
        rank_inc = rank_array(inc, p) if inc.size else 0
        rank_proj = rank_array(proj, p) if proj.size else 0
        composite = (proj @ inc) % p if proj.size and inc.size else np.zeros((dim_quot, dim_sub))
        check = SesDegreeCheck(
            degree=d,
            injective=rank_inc == dim_sub,
            surjective=rank_proj == dim_quot,
            composite_zero=not composite.any(),
            exact=rank_inc == dim_mid - rank_proj,
        )
        if not check.passed:
            logger.info("exactness fails in degree %d: %s", d, check)
        report.degrees.append(check)
    return report
