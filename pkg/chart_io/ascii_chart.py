"""
Plain-text Adams charts.

Layout: one row per filtration s (top row = s_max), one column per stem
t - s starting at the chart's t_min. A cell shows its rank: blank for 0, a
digit for 1-9, '#' above 9 and '?' where the cell lies outside the window.
"""
import re
import sys
from pathlib import Path
from typing import Dict, Optional, Tuple

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError
from resolution_engine.chart import ExtChart

HEADER = re.compile(r"^# chart (?P<name>.*?) prime=(?P<prime>\d+) s_max=(?P<s_max>\d+) "
                    r"t_max=(?P<t_max>-?\d+) t_min=(?P<t_min>-?\d+)$")
ROW = re.compile(r"^\s*(?P<s>\d+) \|(?P<cells>.*)$")

OVERFLOW = "#"
MASKED = "?"


def cell_symbol(chart: ExtChart, s: int, stem: int) -> str:
    if chart.masked(s, stem + s):
        return MASKED
    rank = chart.at(stem, s)
    if rank == 0:
        return " "
    return str(rank) if rank <= 9 else OVERFLOW


def stem_range(chart: ExtChart) -> range:
    return range(chart.t_min, chart.t_max + 1)


def emit_ascii(chart: ExtChart) -> str:
    """Render the rank function of a chart as a text grid."""
    stems = stem_range(chart)
    lines = [f"# chart {chart.name or '-'} prime={chart.prime} s_max={chart.s_max} "
             f"t_max={chart.t_max} t_min={chart.t_min}"]
    for s in range(chart.s_max, -1, -1):
        cells = "".join(f" {cell_symbol(chart, s, stem)}" for stem in stems)
        lines.append(f"{s:>3} |{cells}".rstrip())
    lines.append("    +" + "--" * len(stems))
    lines.append("     " + "".join(f" {stem % 10}" for stem in stems))
    return "\n".join(lines) + "\n"


def parse_ascii(text: str) -> Tuple[Dict[Tuple[int, int], Optional[int]], dict]:
    """Read ranks back from emit_ascii output.

    Returns:
        ({(s, t): rank}, window) where rank is None for cells shown as '#'.
        Zero and masked cells are left out.
    """
    lines = text.splitlines()
    if not lines:
        raise InputError("empty chart text")
    header = HEADER.match(lines[0])
    if not header:
        raise InputError("chart text does not start with a '# chart' header")
    window = {k: int(header.group(k)) for k in ("prime", "s_max", "t_max", "t_min")}
    window["name"] = header.group("name")
    ranks: Dict[Tuple[int, int], Optional[int]] = {}
    for line in lines[1:]:
        row = ROW.match(line)
        if not row:
            continue
        s = int(row.group("s"))
        symbols = row.group("cells")[1::2]
        for offset, symbol in enumerate(symbols):
            stem = window["t_min"] + offset
            if symbol in (" ", MASKED):
                continue
            if symbol == OVERFLOW:
                ranks[(s, stem + s)] = None
            elif symbol.isdigit():
                ranks[(s, stem + s)] = int(symbol)
            else:
                raise InputError(f"unexpected symbol {symbol!r} at s={s}, stem={stem}")
    return ranks, window
