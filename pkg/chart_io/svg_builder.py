"""
SVG Adams charts.

Dots sit at x = stem, y = filtration; a cell of rank n gets n dots side by
side. Product edges join the dots they connect. Cells outside the computed
window are hatched.
"""
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple
from xml.sax.saxutils import escape

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from resolution_engine.chart import ExtChart, ProductEdge
from chart_io.ascii_chart import stem_range

logger = logging.getLogger("resolution")

# (stem shift, filtration shift) of each named product
EDGE_SHIFTS = {
    "h0": (0, 1),
    "h1": (1, 1),
    "h2": (3, 1),
    "v1": (2, 1),
    "alpha": (3, 1),
    "beta": (10, 2),
    "c4": (8, 2),
}

EDGE_COLORS = {
    "h0": "#000000",
    "h1": "#1f77b4",
    "h2": "#2ca02c",
    "v1": "#d62728",
    "alpha": "#9467bd",
    "beta": "#ff7f0e",
    "c4": "#8c564b",
}


@dataclass
class ChartStyle:
    cell_size: int = 40
    dot_radius: float = 3.0
    dot_spacing: float = 7.0
    margin: int = 40
    edge_shifts: Dict[str, Tuple[int, int]] = field(default_factory=lambda: dict(EDGE_SHIFTS))
    edge_colors: Dict[str, str] = field(default_factory=lambda: dict(EDGE_COLORS))
    mask_color: str = "#bbbbbb"

    def edge_matches(self, edge: ProductEdge) -> bool:
        """Whether an edge's bidegree shift agrees with the style for its product."""
        if edge.name not in self.edge_shifts:
            return False
        (s, t, _), (s2, t2, _) = edge.source, edge.target
        return ((t2 - s2) - (t - s), s2 - s) == self.edge_shifts[edge.name]


class SVG:
    def __init__(self):
        self.svg = ""

    def header(self, width, height):
        self.svg += f"""<?xml version="1.0" standalone="no"?>
<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">
<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" xmlns="http://www.w3.org/2000/svg">
"""

    def hatch_pattern(self, pattern_id, color):
        self.svg += (f'<defs><pattern id="{pattern_id}" width="6" height="6" patternUnits="userSpaceOnUse" '
                     f'patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" '
                     f'stroke="{color}" stroke-width="2"/></pattern></defs>\n')

    def group_start(self, attr):
        g_attr = [f'{key}="{escape(str(value))}"' for key, value in attr.items() if key in ['id', 'class']]
        self.svg += f'<g {" ".join(g_attr)}>\n'
        if 'title' in attr:
            self.svg += f'<title>{escape(attr["title"])}</title>\n'

    def group_end(self):
        self.svg += '</g>\n'

    def filled_rectangle(self, x1, y1, x2, y2, fill, extra=""):
        width = x2 - x1
        height = y2 - y1
        self.svg += f'<rect x="{x1:.1f}" y="{y1:.1f}" width="{width:.1f}" height="{height:.1f}" fill="{fill}" {extra}/>\n'

    def line(self, x1, y1, x2, y2, stroke, extra=""):
        self.svg += (f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
                     f'stroke="{stroke}" {extra}/>\n')

    def circle(self, cx, cy, r, extra=""):
        self.svg += f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{r:.1f}" {extra}/>\n'

    def string_ttf(self, id, x, y, string, extra=""):
        id_attr = f'id="{id}" ' if id else ''
        self.svg += f'<text {id_attr}x="{x:.2f}" y="{y}" {extra}>{escape(string)}</text>\n'

    def get_svg(self):
        return f"{self.svg}</svg>\n"


class _Layout:
    def __init__(self, chart: ExtChart, style: ChartStyle):
        self.chart = chart
        self.style = style
        self.stems = stem_range(chart)
        self.width = 2 * style.margin + style.cell_size * max(len(self.stems), 1)
        self.height = 2 * style.margin + style.cell_size * (chart.s_max + 1)

    def cell_origin(self, stem: int, s: int) -> Tuple[float, float]:
        """Bottom-left corner of a cell."""
        x = self.style.margin + (stem - self.chart.t_min) * self.style.cell_size
        y = self.height - self.style.margin - s * self.style.cell_size
        return x, y

    def dot(self, s: int, t: int, index: int) -> Tuple[float, float]:
        stem = t - s
        x, y = self.cell_origin(stem, s)
        rank = self.chart.rank(s, t)
        spacing = min(self.style.dot_spacing, 0.8 * self.style.cell_size / max(rank, 1))
        cx = x + self.style.cell_size / 2 + (index - (rank - 1) / 2) * spacing
        cy = y - self.style.cell_size / 2
        return cx, cy


def _draw_axes(svg: SVG, layout: _Layout):
    style, chart = layout.style, layout.chart
    left, bottom = layout.cell_origin(chart.t_min, 0)
    right = left + style.cell_size * len(layout.stems)
    top = bottom - style.cell_size * (chart.s_max + 1)
    svg.group_start({"class": "axes"})
    svg.line(left, bottom, right, bottom, "#000000")
    svg.line(left, bottom, left, top, "#000000")
    for stem in layout.stems:
        x, _ = layout.cell_origin(stem, 0)
        svg.string_ttf(None, x + style.cell_size / 2, f"{bottom + 15:.1f}", str(stem),
                       'text-anchor="middle" font-size="10"')
    for s in range(chart.s_max + 1):
        _, y = layout.cell_origin(chart.t_min, s)
        svg.string_ttf(None, left - 8, f"{y - style.cell_size / 2 + 4:.1f}", str(s),
                       'text-anchor="end" font-size="10"')
    svg.group_end()


def _draw_mask(svg: SVG, layout: _Layout):
    chart, size = layout.chart, layout.style.cell_size
    svg.group_start({"class": "mask", "title": f"outside the window t <= {chart.t_max}"})
    for s in range(chart.s_max + 1):
        for stem in layout.stems:
            if chart.masked(s, stem + s):
                x, y = layout.cell_origin(stem, s)
                svg.filled_rectangle(x, y - size, x + size, y, "url(#masked)",
                                     f'class="masked" data-stem="{stem}" data-s="{s}"')
    svg.group_end()


def _draw_edges(svg: SVG, layout: _Layout):
    chart, style = layout.chart, layout.style
    edges: List[ProductEdge] = sorted(chart.edges, key=lambda e: (e.name, e.source, e.target))
    svg.group_start({"class": "edges"})
    for edge in edges:
        (s, t, i), (s2, t2, j) = edge.source, edge.target
        if chart.masked(s2, t2) or i >= chart.rank(s, t) or j >= chart.rank(s2, t2):
            continue
        if not style.edge_matches(edge):
            logger.warning("edge %s from %s to %s does not match its style shift", edge.name,
                           edge.source, edge.target)
        x1, y1 = layout.dot(s, t, i)
        x2, y2 = layout.dot(s2, t2, j)
        color = style.edge_colors.get(edge.name, "#777777")
        svg.line(x1, y1, x2, y2, color, f'class="edge {edge.name}" stroke-width="1"')
    svg.group_end()


def _draw_dots(svg: SVG, layout: _Layout):
    chart, style = layout.chart, layout.style
    svg.group_start({"class": "dots"})
    for s, t in chart.cells():
        if chart.masked(s, t):
            continue
        labels = chart.labels.get((s, t), [])
        for index in range(chart.rank(s, t)):
            cx, cy = layout.dot(s, t, index)
            extra = f'class="dot" data-stem="{t - s}" data-s="{s}" data-index="{index}" fill="#000000"'
            if index < len(labels):
                extra += f' data-label="{escape(labels[index])}"'
            svg.circle(cx, cy, style.dot_radius, extra)
    svg.group_end()


def emit_svg(chart: ExtChart, style: ChartStyle = None) -> str:
    """SVG document for a chart. Output depends only on the chart and style."""
    style = style or ChartStyle()
    layout = _Layout(chart, style)
    svg = SVG()
    svg.header(layout.width, layout.height)
    svg.hatch_pattern("masked", style.mask_color)
    if chart.name:
        svg.string_ttf("title", style.margin, style.margin / 2, chart.name, 'font-size="12"')
    _draw_axes(svg, layout)
    _draw_mask(svg, layout)
    _draw_edges(svg, layout)
    _draw_dots(svg, layout)
    return svg.get_svg()
