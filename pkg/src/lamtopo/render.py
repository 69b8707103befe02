"""Standalone SVG output for element fields, fiber glyphs and convergence curves.

Every function returns the document as a string and depends only on its
arguments, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .laminate import fiber_angle_field

TARGETS = ("density", "v1", "v3", "fiber_r", "fiber_l", "convergence")

# Linear two-endpoint ramps (value at lower bound -> value at upper bound).
RAMP_BLUE_RED = ("#2166ac", "#b2182b")
RAMP_GRAY = ("#d9d9d9", "#252525")
GLYPH_COLOR = "#202020"
SERIES_COLORS = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d")


@dataclass(frozen=True)
class RenderSpec:
    target: str
    lower: float = -1.0
    upper: float = 1.0
    cell: float = 8.0  # pixels per element
    stride: int = 3  # glyph subsampling in elements
    glyph_length: float = 0.8  # in element units

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"render target must be one of {TARGETS}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)) or self.lower >= self.upper:
            raise ValueError("color scale needs finite lower < upper")
        if self.target in ("v1", "v3") and (self.lower, self.upper) != (-1.0, 1.0):
            raise ValueError("lamination-parameter maps use the fixed scale [-1, 1]")
        if self.cell <= 0 or self.stride < 1 or self.glyph_length <= 0:
            raise ValueError("cell, stride and glyph length must be positive")

    @classmethod
    def default(cls, target: str) -> "RenderSpec":
        if target == "density":
            return cls(target, 0.0, 1.0)
        return cls(target)


def _num(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _hex_to_rgb(h: str) -> np.ndarray:
    return np.array([int(h[i:i + 2], 16) for i in (1, 3, 5)], dtype=float)


def ramp_color(value: float, lower: float, upper: float, ramp: tuple[str, str]) -> str:
    t = min(max((value - lower) / (upper - lower), 0.0), 1.0)
    a, b = _hex_to_rgb(ramp[0]), _hex_to_rgb(ramp[1])
    r, g, bl = np.rint(a + t * (b - a)).astype(int)
    return f"#{r:02x}{g:02x}{bl:02x}"


def _document(width: float, height: float, body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" '
            f'height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}">')
    return "\n".join(['<?xml version="1.0" encoding="UTF-8"?>', head,
                      f"<title>{escape(title)}</title>",
                      f'<rect x="0" y="0" width="{_num(width)}" height="{_num(height)}" fill="#ffffff"/>']
                     + body + ["</svg>", ""])


def render_field(values, solid, spec: RenderSpec) -> str:
    """One filled square per solid element; ``values`` and ``solid`` are (nx, ny) grids."""
    values = np.asarray(values, dtype=float)
    solid = np.asarray(solid, dtype=bool)
    if values.shape != solid.shape or values.ndim != 2:
        raise ValueError("values and solid mask must be matching 2-D grids")
    ramp = RAMP_GRAY if spec.target == "density" else RAMP_BLUE_RED
    nx, ny = values.shape
    c = spec.cell
    body = []
    for ix in range(nx):
        for iy in range(ny):
            if not solid[ix, iy]:
                continue
            color = ramp_color(values[ix, iy], spec.lower, spec.upper, ramp)
            body.append(f'<rect x="{_num(ix * c)}" y="{_num((ny - 1 - iy) * c)}" '
                        f'width="{_num(c)}" height="{_num(c)}" fill="{color}"/>')
    return _document(nx * c, ny * c, body, spec.target)


def render_fiber_field(alpha, solid, spec: RenderSpec) -> str:
    """Crossed glyphs at +/- alpha (radians from the x axis) on every ``stride``-th solid element."""
    alpha = np.asarray(alpha, dtype=float)
    solid = np.asarray(solid, dtype=bool)
    if alpha.shape != solid.shape or alpha.ndim != 2:
        raise ValueError("angles and solid mask must be matching 2-D grids")
    nx, ny = alpha.shape
    c = spec.cell
    half = 0.5 * spec.glyph_length * c
    off = spec.stride // 2
    body = [f'<g stroke="{GLYPH_COLOR}" stroke-width="{_num(0.12 * c)}" stroke-linecap="round">']
    for ix in range(off, nx, spec.stride):
        for iy in range(off, ny, spec.stride):
            if not solid[ix, iy]:
                continue
            cx, cy = (ix + 0.5) * c, (ny - iy - 0.5) * c
            for a in (alpha[ix, iy], -alpha[ix, iy]):
                dx, dy = half * math.cos(a), -half * math.sin(a)
                body.append(f'<line x1="{_num(cx - dx)}" y1="{_num(cy - dy)}" '
                            f'x2="{_num(cx + dx)}" y2="{_num(cy + dy)}"/>')
    body.append("</g>")
    outline = (f'<rect x="0" y="0" width="{_num(nx * c)}" height="{_num(ny * c)}" '
               f'fill="none" stroke="#999999" stroke-width="1"/>')
    return _document(nx * c, ny * c, [outline] + body, spec.target)


@dataclass(frozen=True)
class Series:
    """Mean best-so-far curve for one (label, mode) group of traces."""

    label: str
    mode: str
    values: np.ndarray
    stage_boundary: int | None = None


def series_from_traces(label: str, mode: str, traces) -> Series:
    if not traces:
        raise ValueError("need at least one trace")
    n = min(len(t) for t in traces)
    mean = np.mean([t.best[:n] for t in traces], axis=0)
    return Series(label, mode, mean, traces[0].stage_boundary())


def render_convergence(series: list[Series], width: float = 720.0, height: float = 420.0,
                       title: str = "convergence") -> str:
    """Log-scale mean best-so-far against evaluation index."""
    if not series:
        raise ValueError("need at least one series")
    left, right, top, bottom = 70.0, 160.0, 20.0, 45.0
    pw, ph = width - left - right, height - top - bottom
    tiny = 1e-300
    all_v = np.concatenate([np.maximum(s.values, tiny) for s in series])
    lo, hi = math.log10(all_v.min()), math.log10(all_v.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    n_max = max(len(s.values) for s in series)
    x_span = max(n_max - 1, 1)

    def px(i):
        return left + pw * i / x_span

    def py(v):
        return top + ph * (hi - math.log10(max(v, tiny))) / (hi - lo)

    body = [f'<rect x="{_num(left)}" y="{_num(top)}" width="{_num(pw)}" height="{_num(ph)}" '
            'fill="none" stroke="#000000" stroke-width="1"/>']
    for e in range(math.ceil(lo), math.floor(hi) + 1):
        y = py(10.0 ** e)
        body.append(f'<line x1="{_num(left - 4)}" y1="{_num(y)}" x2="{_num(left)}" y2="{_num(y)}" '
                    'stroke="#000000"/>')
        body.append(f'<text x="{_num(left - 6)}" y="{_num(y + 4)}" font-size="11" '
                    f'text-anchor="end">1e{e}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        i = round(frac * x_span)
        body.append(f'<text x="{_num(px(i))}" y="{_num(top + ph + 16)}" font-size="11" '
                    f'text-anchor="middle">{i}</text>')
    body.append(f'<text x="{_num(left + pw / 2)}" y="{_num(height - 8)}" font-size="12" '
                'text-anchor="middle">evaluation</text>')
    boundaries = sorted({s.stage_boundary for s in series if s.stage_boundary is not None})
    for b in boundaries:
        body.append(f'<line x1="{_num(px(b))}" y1="{_num(top)}" x2="{_num(px(b))}" '
                    f'y2="{_num(top + ph)}" stroke="#777777" stroke-dasharray="2,3" '
                    'class="stage-boundary"/>')
    for k, s in enumerate(series):
        color = SERIES_COLORS[k % len(SERIES_COLORS)]
        dash = ' stroke-dasharray="6,4"' if s.mode == "sequential" else ""
        pts = " ".join(f"{_num(px(i))},{_num(py(v))}" for i, v in enumerate(s.values))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                    f'stroke-width="1.5"{dash}/>')
        ly = top + 14 + 16 * k
        body.append(f'<line x1="{_num(width - right + 10)}" y1="{_num(ly)}" '
                    f'x2="{_num(width - right + 34)}" y2="{_num(ly)}" stroke="{color}" '
                    f'stroke-width="1.5"{dash}/>')
        body.append(f'<text x="{_num(width - right + 40)}" y="{_num(ly + 4)}" font-size="11">'
                    f'{escape(s.label)} ({escape(s.mode)})</text>')
    return _document(width, height, body, title)


def design_fields(problem, x) -> dict[str, np.ndarray]:
    """Element grids for a physical design vector: solid mask, density, V1, V3 and fiber angles."""
    from .evaluation import N_MMC

    x = np.asarray(x, dtype=float)
    _, spec = problem.decode(x)
    frozen = problem.freeze(x[:N_MMC])
    v1, v3 = problem.lp_field(spec)
    alpha_r, alpha_l = fiber_angle_field(v3)
    return {"solid": frozen.density.solid, "density": frozen.density.rho,
            "v1": v1, "v3": v3, "fiber_r": alpha_r, "fiber_l": alpha_l}


def render_design(problem, x, target: str, spec: RenderSpec | None = None) -> str:
    spec = spec or RenderSpec.default(target)
    fields = design_fields(problem, x)
    if target in ("fiber_r", "fiber_l"):
        return render_fiber_field(fields[target], fields["solid"], spec)
    if target == "convergence":
        raise ValueError("convergence plots are rendered from traces")
    return render_field(fields[target], fields["solid"], spec)


def write(document: str, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document)
    return path
