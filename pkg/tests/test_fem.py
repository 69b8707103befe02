import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lamtopo import fem
from lamtopo.geometry import Domain
from lamtopo.laminate import BENCHMARK_INVARIANTS, LaminationPoint, a_matrix

A_QI = a_matrix(BENCHMARK_INVARIANTS, LaminationPoint(0.0, 0.0))
NODE_X = np.array([0.0, 1.0, 1.0, 0.0])
NODE_Y = np.array([0.0, 0.0, 1.0, 1.0])


def solid(nx, ny, a=A_QI, scale=1.0):
    return np.broadcast_to(scale * a, (nx, ny, 3, 3))


def isotropic(e, nu):
    c = e / (1 - nu**2)
    return c * np.array([[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]])


def rigid_modes():
    tx = np.tile([1.0, 0.0], 4)
    ty = np.tile([0.0, 1.0], 4)
    rot = np.stack([-NODE_Y, NODE_X], axis=1).ravel()
    return [tx, ty, rot]


spd = st.lists(st.floats(-1, 1), min_size=6, max_size=6).map(
    lambda v: (lambda m: m @ m.T + 0.1 * np.eye(3))(np.array(v[:3] + v[3:] + [0.5, 0.2, 0.7]).reshape(3, 3)))


class TestElement:
    @given(spd)
    def test_rigid_modes(self, a):
        ke = fem.element_stiffness(a)
        for mode in rigid_modes():
            assert np.max(np.abs(ke @ mode)) <= 1e-12 * np.max(np.abs(ke))

    @given(spd)
    def test_exactly_three_zero_modes(self, a):
        w = np.linalg.eigvalsh(fem.element_stiffness(a))
        assert np.sum(w < 1e-9 * w.max()) == 3 and w.min() > -1e-12 * w.max()

    @pytest.mark.parametrize("e,nu", [(1.0, 0.3), (7.5, 0.0), (2.0, 0.45)])
    def test_closed_form_isotropic(self, e, nu):
        assert np.allclose(fem.element_stiffness(isotropic(e, nu)), oracles.q4_isotropic_stiffness(e, nu),
                           rtol=0, atol=1e-14 * e)

    def test_symmetric_and_linear(self):
        ke = fem.element_stiffness(A_QI)
        assert np.array_equal(ke, ke.T)
        assert np.allclose(fem.element_stiffness(2 * A_QI), 2 * ke, rtol=1e-15)


class TestAssembly:
    def test_single_element(self):
        mesh = fem.Mesh(Domain(1.0, 1.0, 1, 1))
        k = fem.assemble(mesh, [A_QI]).toarray()
        ke = fem.element_stiffness(A_QI)
        # node order in the mesh: (0,0), (0,1), (1,0), (1,1); element order: (0,0), (1,0), (1,1), (0,1)
        perm = np.array([0, 1, 4, 5, 6, 7, 2, 3])
        assert np.allclose(k[np.ix_(perm, perm)], ke, atol=1e-15)

    def test_two_elements(self):
        mesh = fem.Mesh(Domain(2.0, 1.0, 2, 1))
        a1, a2 = A_QI, isotropic(3.0, 0.2)
        k = fem.assemble(mesh, [a1, a2]).toarray()
        ref = np.zeros((12, 12))
        # hand-placed nodes: id = ix * 2 + iy
        for ke, nodes in ((fem.element_stiffness(a1), [0, 2, 3, 1]), (fem.element_stiffness(a2), [2, 4, 5, 3])):
            dofs = np.array([[2 * n, 2 * n + 1] for n in nodes]).ravel()
            for i in range(8):
                for j in range(8):
                    ref[dofs[i], dofs[j]] += ke[i, j]
        assert np.allclose(k, ref, atol=1e-15)
        shared = [4, 5, 6, 7]
        ke1, ke2 = fem.element_stiffness(a1), fem.element_stiffness(a2)
        assert k[4, 4] == pytest.approx(ke1[2, 2] + ke2[0, 0])
        assert k[shared][:, shared].any()

    def test_global_properties(self):
        mesh = fem.Mesh(Domain.with_mesh(12, 6))
        rng = np.random.default_rng(0)
        k = fem.assemble(mesh, solid(12, 6) * rng.random((12, 6, 1, 1)))
        assert k.shape == (2 * 13 * 7,) * 2
        assert abs(k - k.T).max() == 0
        for d in (0, 1):
            t = np.zeros(k.shape[0])
            t[d::2] = 1.0
            assert np.max(np.abs(k @ t)) < 1e-12 * abs(k).max()

    def test_element_count_check(self):
        with pytest.raises(ValueError):
            fem.assemble(fem.Mesh(Domain.with_mesh(4, 2)), solid(4, 3))


class TestSolve:
    def test_timoshenko(self):
        c = fem.solve_cantilever(fem.Mesh(Domain()), solid(100, 50)).compliance
        ref = oracles.timoshenko_tip_compliance(A_QI)
        assert abs(c - ref) / ref < 0.15

    def test_work_identity(self):
        mesh = fem.Mesh(Domain.with_mesh(40, 20))
        rng = np.random.default_rng(1)
        rho = np.where(rng.random((40, 20)) > 0.3, 1.0, 1e-9)
        per = rho[..., None, None] * A_QI
        sol = fem.solve_cantilever(mesh, per)
        k = fem.assemble(mesh, per)
        assert abs(sol.u @ (k @ sol.u) - sol.compliance) / sol.compliance < 1e-8
        assert sol.compliance > 0

    def test_compliance_is_load_times_deflection(self):
        mesh = fem.Mesh(Domain())
        sol = fem.solve_cantilever(mesh, solid(100, 50))
        tip = 2 * int(mesh.node_id(100, 25)) + 1
        assert sol.compliance == pytest.approx(abs(sol.u[tip]), rel=1e-14)

    def test_clamp(self):
        mesh = fem.Mesh(Domain.with_mesh(20, 10))
        sol = fem.solve_cantilever(mesh, solid(20, 10))
        assert np.all(sol.u[mesh.clamped_dofs()] == 0)
        assert mesh.clamped_dofs().size == 2 * 11

    def test_zero_load(self):
        mesh = fem.Mesh(Domain.with_mesh(20, 10))
        sol = fem.solve_cantilever(mesh, solid(20, 10), load=[fem.PointLoad((20, 5), 1, 0.0)])
        assert sol.compliance == 0 and not sol.u.any()

    def test_half_density_doubles_compliance(self):
        mesh = fem.Mesh(Domain.with_mesh(30, 15))
        c1 = fem.solve_cantilever(mesh, solid(30, 15)).compliance
        c2 = fem.solve_cantilever(mesh, solid(30, 15, scale=0.5)).compliance
        assert c2 == pytest.approx(2 * c1, rel=1e-12)

    def test_odd_ny_splits_load(self):
        loads = fem.tip_load(fem.Mesh(Domain.with_mesh(10, 5)))
        assert [(ld.node, ld.magnitude) for ld in loads] == [((10, 2), -0.5), ((10, 3), -0.5)]

    def test_refinement(self):
        cs = [fem.solve_cantilever(fem.Mesh(Domain.with_mesh(nx, nx // 2)), solid(nx, nx // 2)).compliance
              for nx in (50, 100, 200)]
        assert (cs[0] < cs[1] < cs[2]) or (cs[0] > cs[1] > cs[2])
        assert abs(cs[2] - cs[1]) / cs[2] < 0.02

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_half_model(self, seed):
        rng = np.random.default_rng(seed)
        upper = np.where(rng.random((100, 25)) > 0.4, 1.0, 1e-9)
        upper[:, :3] = 1.0
        rho = np.concatenate([upper[:, ::-1], upper], axis=1)
        full = fem.solve_cantilever(fem.Mesh(Domain()), rho[..., None, None] * A_QI).compliance
        # upper half: midline row becomes iy = 0 with u_x = 0 there
        half_mesh = fem.Mesh(Domain(100.0, 25.0, 100, 25))
        k = fem.assemble(half_mesh, upper[..., None, None] * A_QI)
        f = fem.load_vector(half_mesh, fem.PointLoad((100, 0), 1, -0.5))
        mid_x = 2 * half_mesh.node_id(np.arange(101), 0)
        fixed = np.union1d(half_mesh.clamped_dofs(), mid_x)
        u, _ = fem.solve_constrained(k, f, fixed)
        assert 2 * (f @ u) == pytest.approx(full, rel=1e-8)

    def test_deterministic(self):
        mesh = fem.Mesh(Domain.with_mesh(40, 20))
        a = fem.solve_cantilever(mesh, solid(40, 20)).u
        b = fem.solve_cantilever(mesh, solid(40, 20)).u
        assert np.array_equal(a, b)

    def test_full_mesh_under_one_second(self):
        mesh = fem.Mesh(Domain())
        fem.solve_cantilever(mesh, solid(100, 50))
        t0 = time.perf_counter()
        fem.solve_cantilever(mesh, solid(100, 50))
        assert time.perf_counter() - t0 < 1.0

    def test_dumps(self, tmp_path):
        mesh = fem.Mesh(Domain.with_mesh(4, 2))
        k = fem.assemble(mesh, solid(4, 2))
        fem.dump_triplets(k, tmp_path / "k.txt")
        rows = np.loadtxt(tmp_path / "k.txt")
        rebuilt = np.zeros(k.shape)
        rebuilt[rows[:, 0].astype(int), rows[:, 1].astype(int)] = rows[:, 2]
        assert np.array_equal(rebuilt, k.toarray())
        u = fem.solve_cantilever(mesh, solid(4, 2)).u
        fem.dump_vector(u, tmp_path / "u.txt")
        assert np.array_equal(np.loadtxt(tmp_path / "u.txt"), u)
