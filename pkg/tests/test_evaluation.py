import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from lamtopo import evaluation as ev
from lamtopo.evaluation import CantileverProblem, OutOfBoundsError, PenaltyConfig
from lamtopo.geometry import DesignTopology

QI = [0.5, 0.0, 0.0]
BEAM = [50, 25, 0, 100, 10] * 3
TWO_FRAGMENTS = [20, 25, 0, 40, 10, 80, 25, 0, 40, 10, 20, 25, 0, 40, 10]
THICK = [50, 25, 0, 100, 25, 50, 12, 0, 100, 25, 50, 25, 0, 100, 25]
CROSS = [50, 25, 0.46, 100, 12, 50, 25, 0, 100, 8, 50, 25, 0, 100, 8]


@pytest.fixture(scope="module")
def problem():
    return CantileverProblem()


class TestBounds:
    @given(st.lists(st.floats(0, 1), min_size=18, max_size=18))
    def test_round_trip(self, z):
        b = ev.DEFAULT_BOUNDS
        assert np.allclose(b.normalize(b.denormalize(z)), z, rtol=0, atol=1e-14)

    def test_out_of_bounds_lists_indices(self):
        x = np.array(BEAM + QI, dtype=float)
        x[3], x[16] = 200.0, -2.0
        with pytest.raises(OutOfBoundsError) as err:
            ev.decode(x)
        assert list(err.value.indices) == [3, 16]

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            ev.decode(np.zeros(17))


class TestDecode:
    def test_midpoint(self):
        topo, spec = ev.decode(ev.DEFAULT_BOUNDS.denormalize(np.full(18, 0.5)))
        assert len(set(topo.components)) == 1 and topo.components[0].xc == 50
        assert spec.rr == 0.5 and topo.mirror

    def test_master_nodes(self):
        _, spec = ev.decode(np.array(BEAM + QI, dtype=float))
        assert (spec.node1, spec.node1_mirror, spec.node2) == ((0.0, 0.0), (0.0, 50.0), (100.0, 25.0))

    @given(st.lists(st.floats(0, 1), min_size=18, max_size=18))
    def test_encode_inverse(self, z):
        x = ev.DEFAULT_BOUNDS.denormalize(z)
        assert np.array_equal(ev.encode(*ev.decode(x)), x)

    def test_quasi_isotropic_field(self, problem):
        _, spec = problem.decode(np.array(BEAM + QI, dtype=float))
        v1, v3 = problem.lp_field(spec)
        assert np.all(v1 == 0) and np.all(v3 == 0)


class TestBranches:
    def test_disconnected_skips_solver(self, problem):
        before = problem.n_fe_solves
        r = problem.evaluate(TWO_FRAGMENTS + QI)
        mask = np.asarray(problem.freeze(TWO_FRAGMENTS).density.solid)
        assert oracles.flood_fill_count(mask) == 2
        assert not r.fe_solved and r.compliance is None
        assert r.volume_count <= 2500
        assert r.objective == pytest.approx(200 * r.psi, rel=1e-15)
        assert r.psi > 0 and problem.n_fe_solves == before

    def test_connected_feasible_has_no_penalty(self, problem):
        r = problem.evaluate(BEAM + QI)
        assert r.fe_solved and r.psi == 0 and r.volume_count <= 2500
        assert r.objective == r.compliance

    def test_over_volume_adds_count_excess(self, problem):
        r = problem.evaluate(THICK + QI)
        assert r.fe_solved and r.volume_count > 2500
        assert r.objective - r.compliance == pytest.approx(0.02 * (r.volume_count - 2500), rel=1e-12)

    def test_hundred_elements_over_cap(self, problem):
        v = problem.evaluate(CROSS + QI).volume_count
        capped = CantileverProblem(penalty=PenaltyConfig(v_max_fraction=(v - 100) / 5000))
        r = capped.evaluate(CROSS + QI)
        assert r.objective == pytest.approx(r.compliance + 2.0, rel=1e-14)

    def test_exactly_at_cap(self):
        v = CantileverProblem().evaluate(CROSS + QI).volume_count
        r = CantileverProblem(penalty=PenaltyConfig(v_max_fraction=v / 5000)).evaluate(CROSS + QI)
        assert r.objective == r.compliance

    def test_fraction_basis(self):
        r = CantileverProblem(penalty=PenaltyConfig(volume_basis="fraction")).evaluate(THICK + QI)
        assert r.objective - r.compliance == pytest.approx(0.02 * (r.volume_count / 5000 - 0.5), rel=1e-12)

    @settings(max_examples=15)
    @given(st.lists(st.floats(0, 1), min_size=18, max_size=18))
    def test_branch_exclusivity(self, z):
        p = CantileverProblem(40, 20)
        r = p.evaluate_unit(z)
        assert r.fe_solved == (r.psi == 0) and np.isfinite(r.objective)
        assert p.n_fe_solves == int(r.fe_solved)

    def test_deterministic(self, problem):
        assert problem.evaluate(CROSS + QI) == problem.evaluate(CROSS + QI)

    def test_penalty_config_validation(self):
        with pytest.raises(ValueError):
            PenaltyConfig(gamma1=0)
        with pytest.raises(ValueError):
            PenaltyConfig(volume_basis="area")


class TestLpOnly:
    @pytest.mark.parametrize("rr", [0.0, 0.5, 1.0])
    def test_matches_full_pipeline(self, problem, rr):
        frozen = problem.freeze(CROSS)
        x_lp = [rr, -0.4, 0.7]
        assert problem.evaluate_lp_only(x_lp, frozen) == problem.evaluate(CROSS + x_lp)

    def test_qi_matches_stage_one(self, problem):
        assert problem.evaluate_lp_only(QI, problem.freeze(BEAM)) == problem.evaluate(BEAM + QI)

    def test_repeatable(self, problem):
        frozen = problem.freeze(BEAM)
        assert problem.evaluate_lp_only([0.2, 0.3, -0.1], frozen) == problem.evaluate_lp_only([0.2, 0.3, -0.1], frozen)

    def test_unimodal_along_node_one(self, problem):
        frozen = problem.freeze(BEAM)
        f = np.array([problem.evaluate_lp_only([0.3, v, 0.2], frozen).objective for v in np.linspace(-1, 1, 201)])
        d = np.diff(f)
        s = np.sign(np.where(np.abs(d) <= 1e-9, 0.0, d))
        s = s[s != 0]
        # unimodal: no rise followed by a fall
        assert not np.any((s[:-1] > 0) & (s[1:] < 0))


def test_module_level_evaluate():
    r = ev.evaluate(BEAM + QI, nx=40, ny=20)
    assert r.fe_solved and r.compliance > 0


def test_record_dict():
    d = CantileverProblem(40, 20).evaluate(BEAM + QI).to_dict()
    assert {"compliance", "volume_count", "volume_fraction", "objective", "fe_solved", "wall_time"} <= set(d)
    assert d["connectivity"]["psi_total"] == 0.0


def test_mirror_flag_on_decoded_topology():
    topo, _ = ev.decode(np.array(BEAM + QI, dtype=float))
    assert isinstance(topo, DesignTopology) and topo.m == 6
