import math
import re
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from lamtopo import campaign as cp
from lamtopo import render
from lamtopo.evaluation import CantileverProblem
from lamtopo.render import RenderSpec

GOLDEN = Path(__file__).parent / "golden"
CROSS = [50, 25, 0.46, 100, 12, 50, 25, 0, 100, 8, 50, 25, 0, 100, 8, 0.3, -0.6, 0.8]
NS = "{http://www.w3.org/2000/svg}"


def parse(doc):
    return ET.fromstring(doc.encode())


def element_rects(doc):
    # skip the background rectangle
    return parse(doc).findall(f"{NS}rect")[1:]


@pytest.fixture(scope="module")
def problem():
    return CantileverProblem(20, 10)


class TestField:
    def test_constant_field_single_color(self):
        doc = render.render_field(np.full((6, 3), 0.4), np.ones((6, 3), bool), RenderSpec("v1"))
        rects = element_rects(doc)
        assert len(rects) == 18 and len({r.get("fill") for r in rects}) == 1

    def test_void_omitted(self):
        solid = np.zeros((6, 3), bool)
        solid[2, 1] = True
        rects = element_rects(render.render_field(np.zeros((6, 3)), solid, RenderSpec("v3")))
        assert len(rects) == 1
        assert (rects[0].get("x"), rects[0].get("y")) == ("16", "8")

    def test_quasi_isotropic_v1_at_midpoint(self, problem):
        x = CROSS[:15] + [0.5, 0.0, 0.0]
        fills = {r.get("fill") for r in element_rects(render.render_design(problem, x, "v1"))}
        assert fills == {render.ramp_color(0.0, -1.0, 1.0, render.RAMP_BLUE_RED)}

    def test_ramp_endpoints(self):
        assert render.ramp_color(-1, -1, 1, render.RAMP_BLUE_RED) == render.RAMP_BLUE_RED[0]
        assert render.ramp_color(1, -1, 1, render.RAMP_BLUE_RED) == render.RAMP_BLUE_RED[1]
        assert render.ramp_color(5, -1, 1, render.RAMP_BLUE_RED) == render.RAMP_BLUE_RED[1]
        # midpoint of #2166ac and #b2182b, channel by channel
        assert render.ramp_color(0, -1, 1, render.RAMP_BLUE_RED) == "#6a3f6c"

    def test_scale_rules(self):
        with pytest.raises(ValueError):
            RenderSpec("v1", 0.0, 1.0)
        with pytest.raises(ValueError):
            RenderSpec("density", 1.0, 1.0)
        with pytest.raises(ValueError):
            RenderSpec("heat")

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            render.render_field(np.zeros((3, 3)), np.ones((3, 2), bool), RenderSpec("v1"))


class TestFiber:
    def glyph_angles(self, doc):
        out = []
        for line in parse(doc).iter(f"{NS}line"):
            x1, y1, x2, y2 = (float(line.get(k)) for k in ("x1", "y1", "x2", "y2"))
            out.append(math.degrees(math.atan2(-(y2 - y1), x2 - x1)))
        return np.array(out)

    def test_zero_angle_horizontal(self):
        doc = render.render_fiber_field(np.zeros((6, 6)), np.ones((6, 6), bool), RenderSpec("fiber_r"))
        assert np.allclose(self.glyph_angles(doc), 0.0, atol=1e-9)

    def test_quarter_pi_crosses(self):
        doc = render.render_fiber_field(np.full((6, 6), math.pi / 4), np.ones((6, 6), bool),
                                        RenderSpec("fiber_l"))
        ang = self.glyph_angles(doc)
        assert len(ang) == 2 * 4 and np.allclose(np.sort(np.abs(ang)), 45.0, atol=0.1)
        assert np.sum(ang > 0) == np.sum(ang < 0)

    def test_glyph_length(self):
        doc = render.render_fiber_field(np.full((3, 3), 0.3), np.ones((3, 3), bool), RenderSpec("fiber_r"))
        line = next(parse(doc).iter(f"{NS}line"))
        x1, y1, x2, y2 = (float(line.get(k)) for k in ("x1", "y1", "x2", "y2"))
        assert math.hypot(x2 - x1, y2 - y1) == pytest.approx(0.8 * 8, abs=2e-3)

    def test_stride(self):
        doc = render.render_fiber_field(np.zeros((9, 9)), np.ones((9, 9), bool),
                                        RenderSpec("fiber_r", stride=1))
        assert len(self.glyph_angles(doc)) == 2 * 81


class TestConvergence:
    def test_structure(self):
        rows = [cp.run(cp.RunConfig(strategy=cp.StrategySpec(m, 24), algorithm="random", nx=20, ny=10))
                for m in ("concurrent", "sequential")]
        series = [render.series_from_traces("random", "concurrent", [rows[0]]),
                  render.series_from_traces("random", "sequential", [rows[1]])]
        doc = render.render_convergence(series)
        root = parse(doc)
        lines = root.findall(f"{NS}polyline")
        assert len(lines) == 2 and lines[0].get("stroke-dasharray") is None
        assert lines[1].get("stroke-dasharray") == "6,4"
        assert len([e for e in root.iter(f"{NS}line") if e.get("class") == "stage-boundary"]) == 1
        assert any(t.text.startswith("1e") for t in root.iter(f"{NS}text"))

    def test_log_axis(self):
        s = render.Series("a", "concurrent", np.array([100.0, 10.0, 1.0]))
        pts = parse(render.render_convergence([s])).find(f"{NS}polyline").get("points").split()
        ys = [float(p.split(",")[1]) for p in pts]
        assert ys[1] - ys[0] == pytest.approx(ys[2] - ys[1], abs=2e-3)

    def test_empty(self):
        with pytest.raises(ValueError):
            render.render_convergence([])


class TestDocuments:
    @pytest.mark.parametrize("target", ["density", "v1", "v3", "fiber_r", "fiber_l"])
    def test_well_formed_and_deterministic(self, problem, target):
        a = render.render_design(problem, CROSS, target)
        b = render.render_design(CantileverProblem(20, 10), CROSS, target)
        assert a == b
        root = parse(a)
        assert root.tag == f"{NS}svg" and root.get("viewBox") == "0 0 160 80"

    @pytest.mark.parametrize("target", ["v3", "fiber_r"])
    def test_golden(self, problem, target):
        expected = (GOLDEN / f"{target}_cross_20x10.svg").read_text()
        assert render.render_design(problem, CROSS, target) == expected

    def test_numbers_are_short(self, problem):
        doc = render.render_design(problem, CROSS, "fiber_l")
        assert not re.search(r"\d\.\d{4,}", doc)

    def test_write(self, tmp_path):
        p = render.write("<svg/>", tmp_path / "a" / "b.svg")
        assert p.read_text() == "<svg/>"
