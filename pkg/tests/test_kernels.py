import math

import numpy as np
import pytest

import oracles
from conftest import gyre_grid
from ftlekit import (
    DEGENERACY_FLOOR,
    DataParallel,
    DegenerateStencilError,
    FlowmapField,
    HorizonError,
    Jacobian,
    SinglePass,
    SymmetricTensor,
    ValidationError,
    cauchy_green,
    compute_ftle_field,
    flowmap_gradient,
    ftle_point,
    make_structured_grid,
    make_unstructured_mesh,
    max_eigenvalue,
    max_eigenvalue_sym2,
    max_eigenvalue_sym3,
)


def identity_flowmap(mesh, T=1.0):
    return FlowmapField(
        dim=mesh.dim, npoints=mesh.npoints, values=mesh.coords.copy(), t0=0.0, T=T
    )


def affine_flowmap(mesh, matrix, offset=None, T=1.0):
    matrix = np.asarray(matrix, dtype=np.float64)
    values = mesh.coords @ matrix.T
    if offset is not None:
        values = values + np.asarray(offset)
    return FlowmapField(dim=mesh.dim, npoints=mesh.npoints, values=values, t0=0.0, T=T)


def interior_points(mesh):
    both = (mesh.forward >= 0) & (mesh.backward >= 0)
    return np.flatnonzero(both.all(axis=1))


class TestFlowmapGradient:
    def test_identity_interior(self):
        mesh = make_structured_grid((5, 4), (0.5, 0.25), (0.0, 0.0))
        field = identity_flowmap(mesh)
        jac = flowmap_gradient(field, mesh, 6)
        assert np.array_equal(jac.entries, np.eye(2))

    def test_linear_stretch_exact(self):
        mesh = make_structured_grid((5, 5), (1.0, 1.0), (0.0, 0.0))
        field = affine_flowmap(mesh, [[2.0, 0.0], [0.0, 1.0]])
        jac = flowmap_gradient(field, mesh, 12)
        assert np.array_equal(jac.entries, np.array([[2.0, 0.0], [0.0, 1.0]]))

    def test_double_gyre_matches_naive_oracle(self, dg_small):
        field, mesh = dg_small
        rng = np.random.default_rng(7)
        points = rng.choice(mesh.npoints, size=60, replace=False)
        for p in points:
            jac = flowmap_gradient(field, mesh, int(p))
            ref = oracles.naive_jacobian(
                field.values, mesh.coords, mesh.forward, mesh.backward, int(p), 2
            )
            assert np.allclose(jac.entries, ref, rtol=1e-12, atol=0.0)

    def test_boundary_one_sided(self):
        mesh = make_structured_grid((4, 3), (1.0, 1.0), (0.0, 0.0))
        field = affine_flowmap(mesh, [[3.0, 0.0], [0.0, 2.0]])
        # corner point: one-sided in both axes, still exact for affine maps
        jac = flowmap_gradient(field, mesh, 0)
        assert np.allclose(jac.entries, [[3.0, 0.0], [0.0, 2.0]], rtol=1e-15)

    def test_isolated_axis_raises(self):
        mesh = make_structured_grid((3, 3), (1.0, 1.0), (0.0, 0.0))
        fwd = mesh.forward.copy()
        bwd = mesh.backward.copy()
        fwd[4, 1] = -1
        bwd[4, 1] = -1
        broken = make_unstructured_mesh(mesh.coords, fwd, bwd)
        field = identity_flowmap(broken)
        with pytest.raises(DegenerateStencilError) as err:
            flowmap_gradient(field, broken, 4)
        assert err.value.point == 4
        assert err.value.axis == 1

    def test_out_of_range_point(self, dg_small):
        field, mesh = dg_small
        with pytest.raises(ValidationError):
            flowmap_gradient(field, mesh, mesh.npoints)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_affine_exact_everywhere_interior(self, dim):
        rng = np.random.default_rng(dim)
        dims = (6, 5) if dim == 2 else (5, 4, 4)
        mesh = make_structured_grid(dims, (0.3,) * dim, (0.0,) * dim)
        a = rng.standard_normal((dim, dim))
        field = affine_flowmap(mesh, a, offset=rng.standard_normal(dim))
        for p in interior_points(mesh)[:40]:
            jac = flowmap_gradient(field, mesh, int(p))
            assert np.allclose(jac.entries, a, rtol=1e-12, atol=1e-12)

    def test_spacing_halving_second_order(self):
        # smooth synthetic flowmap with a known jacobian
        def phi(x, y):
            return x + 0.1 * np.sin(np.pi * x) * np.cos(np.pi * y), \
                   y - 0.1 * np.cos(np.pi * x) * np.sin(np.pi * y)

        def jac(x, y):
            return np.array([
                [1 + 0.1 * np.pi * np.cos(np.pi * x) * np.cos(np.pi * y),
                 -0.1 * np.pi * np.sin(np.pi * x) * np.sin(np.pi * y)],
                [0.1 * np.pi * np.sin(np.pi * x) * np.sin(np.pi * y),
                 1 - 0.1 * np.pi * np.cos(np.pi * x) * np.cos(np.pi * y)],
            ])

        def max_interior_err(n):
            mesh = make_structured_grid((n + 1, n + 1), (1.0 / n, 1.0 / n), (0.0, 0.0))
            fx, fy = phi(mesh.coords[:, 0], mesh.coords[:, 1])
            field = FlowmapField(dim=2, npoints=mesh.npoints,
                                 values=np.column_stack([fx, fy]), t0=0.0, T=1.0)
            worst = 0.0
            for p in interior_points(mesh):
                j = flowmap_gradient(field, mesh, int(p)).entries
                ref = jac(mesh.coords[p, 0], mesh.coords[p, 1])
                worst = max(worst, np.abs(j - ref).max())
            return worst

        e1 = max_interior_err(16)
        e2 = max_interior_err(32)
        assert e1 / e2 >= 3.5


class TestCauchyGreen:
    def test_identity(self):
        t = cauchy_green(Jacobian(dim=2, entries=np.eye(2)))
        assert np.array_equal(t.entries, np.eye(2))

    def test_diagonal_stretch(self):
        t = cauchy_green(Jacobian(dim=2, entries=np.array([[2.0, 0.0], [0.0, 1.0]])))
        assert np.array_equal(t.entries, np.diag([4.0, 1.0]))

    def test_shear_by_hand(self):
        t = cauchy_green(Jacobian(dim=2, entries=np.array([[1.0, 1.0], [0.0, 1.0]])))
        assert np.array_equal(t.entries, np.array([[1.0, 1.0], [1.0, 2.0]]))

    @pytest.mark.parametrize("dim", [2, 3])
    def test_exact_symmetry_and_psd(self, dim):
        rng = np.random.default_rng(31 + dim)
        for _ in range(200):
            j = rng.standard_normal((dim, dim)) * 10.0 ** rng.uniform(-3, 3)
            t = cauchy_green(Jacobian(dim=dim, entries=j))
            for a in range(dim):
                for b in range(dim):
                    assert t.entries[a, b] == t.entries[b, a]
            lam = max_eigenvalue(t)
            norm = np.linalg.norm(t.entries)
            assert lam >= -1e-12 * norm


class TestEigenvalues:
    def test_sym2_examples(self):
        assert max_eigenvalue_sym2(SymmetricTensor(2, np.array([[2.0, 1.0], [1.0, 2.0]]))) == 3.0
        assert max_eigenvalue_sym2(SymmetricTensor(2, np.eye(2))) == 1.0
        assert max_eigenvalue_sym2(SymmetricTensor(2, np.diag([4.0, 1.0]))) == 4.0

    def test_sym3_examples(self):
        assert max_eigenvalue_sym3(SymmetricTensor(3, np.diag([1.0, 4.0, 9.0]))) == pytest.approx(9.0, rel=1e-12)
        assert max_eigenvalue_sym3(SymmetricTensor(3, np.eye(3))) == 1.0
        block = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]])
        assert max_eigenvalue_sym3(SymmetricTensor(3, block)) == pytest.approx(5.0, rel=1e-12)

    def test_sym3_against_bisection_oracle(self):
        rng = np.random.default_rng(101)
        for _ in range(300):
            s = oracles.random_spd_separated(rng, 3)
            lam = max_eigenvalue_sym3(SymmetricTensor(3, s))
            ref = oracles.bisect_max_eig3(s)
            assert lam == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_residual_bound(self, dim):
        rng = np.random.default_rng(202 + dim)
        for _ in range(500):
            s = oracles.random_spd(rng, dim)
            t = SymmetricTensor(dim, s)
            lam = max_eigenvalue(t)
            bound = 1e-8 * max(1.0, np.linalg.norm(t.entries) ** dim)
            assert abs(oracles.det_shifted(t.entries, lam)) <= bound

    def test_dim_dispatch_guards(self):
        with pytest.raises(ValidationError):
            max_eigenvalue_sym2(SymmetricTensor(3, np.eye(3)))
        with pytest.raises(ValidationError):
            max_eigenvalue_sym3(SymmetricTensor(2, np.eye(2)))

    def test_tensor_mirrors_upper_triangle(self):
        t = SymmetricTensor(2, np.array([[1.0, 5.0], [99.0, 2.0]]))
        assert t.entries[1, 0] == 5.0
        with pytest.raises(ValidationError):
            SymmetricTensor(2, np.array([[1.0, np.nan], [np.nan, 2.0]]))


class TestFtlePoint:
    def test_undeformed_is_zero(self):
        assert ftle_point(1.0, 1.0) == 0.0

    def test_ln2(self):
        assert ftle_point(4.0, 1.0) == pytest.approx(math.log(2.0), rel=1e-15)

    def test_backward_time_uses_magnitude(self):
        assert ftle_point(4.0, -1.0) == ftle_point(4.0, 1.0)

    def test_zero_horizon_raises(self):
        with pytest.raises(HorizonError):
            ftle_point(4.0, 0.0)

    def test_degeneracy_floor(self):
        assert math.isnan(ftle_point(DEGENERACY_FLOOR / 2.0, 1.0))
        assert math.isnan(ftle_point(0.0, 1.0))
        assert math.isfinite(ftle_point(DEGENERACY_FLOOR, 1.0))

    def test_horizon_scaling(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            lam = 10.0 ** rng.uniform(-20, 20)
            T = rng.uniform(0.1, 50.0)
            assert ftle_point(lam, 2.0 * T) == ftle_point(lam, T) / 2.0


class TestComputeFtleField:
    @pytest.mark.parametrize("strategy", [SinglePass(), DataParallel(workers=2, chunk=7)])
    def test_identity_all_zero(self, strategy):
        mesh = make_structured_grid((6, 5), (0.3, 0.2), (0.0, 0.0))
        out = compute_ftle_field(identity_flowmap(mesh), mesh, strategy)
        assert np.array_equal(out.values, np.zeros(mesh.npoints))
        assert out.degenerate_count == 0

    @pytest.mark.parametrize("dim", [2, 3])
    def test_linear_stretch_gives_ln2(self, dim):
        dims = (8, 6) if dim == 2 else (6, 5, 4)
        mesh = make_structured_grid(dims, (0.25,) * dim, (0.0,) * dim)
        stretch = np.eye(dim)
        stretch[0, 0] = 2.0
        out = compute_ftle_field(affine_flowmap(mesh, stretch), mesh, SinglePass())
        for p in interior_points(mesh):
            assert out.values[p] == pytest.approx(math.log(2.0), abs=1e-12)

    def test_strategy_equivalence_bitwise(self, dg_small):
        field, mesh = dg_small
        ref = compute_ftle_field(field, mesh, SinglePass())
        assert ref.degenerate_count == 0
        for workers in (1, 2, 4, 8):
            for chunk in (1, 64, 4096):
                out = compute_ftle_field(field, mesh, DataParallel(workers, chunk))
                assert out.values.tobytes() == ref.values.tobytes(), (workers, chunk)
                assert out.degenerate_count == ref.degenerate_count

    def test_collapsed_flowmap_counts_degenerates(self):
        mesh = make_structured_grid((4, 4), (1.0, 1.0), (0.0, 0.0))
        values = np.full((16, 2), 0.5)
        field = FlowmapField(dim=2, npoints=16, values=values, t0=0.0, T=2.0)
        out = compute_ftle_field(field, mesh, SinglePass())
        assert out.degenerate_count == 16
        assert np.isnan(out.values).all()

    def test_matches_per_point_pipeline(self, dg_small):
        field, mesh = dg_small
        out = compute_ftle_field(field, mesh, SinglePass())
        rng = np.random.default_rng(3)
        for p in rng.choice(mesh.npoints, size=40, replace=False):
            jac = flowmap_gradient(field, mesh, int(p))
            lam = max_eigenvalue(cauchy_green(jac))
            assert out.values[p] == ftle_point(lam, field.T)

    def test_zero_horizon_raises(self):
        mesh = make_structured_grid((3, 3), (1.0, 1.0), (0.0, 0.0))
        field = FlowmapField(dim=2, npoints=9, values=mesh.coords.copy(), t0=0.0, T=0.0)
        with pytest.raises(HorizonError):
            compute_ftle_field(field, mesh, SinglePass())

    def test_isolated_axis_names_point(self):
        mesh = make_structured_grid((3, 3), (1.0, 1.0), (0.0, 0.0))
        fwd = mesh.forward.copy()
        bwd = mesh.backward.copy()
        fwd[7, 0] = -1
        bwd[7, 0] = -1
        broken = make_unstructured_mesh(mesh.coords, fwd, bwd)
        with pytest.raises(DegenerateStencilError) as err:
            compute_ftle_field(identity_flowmap(broken), broken, SinglePass())
        assert err.value.point == 7
        assert err.value.axis == 0

    def test_mismatched_mesh_rejected(self, dg_small):
        field, _ = dg_small
        other = make_structured_grid((3, 3), (1.0, 1.0), (0.0, 0.0))
        with pytest.raises(ValidationError):
            compute_ftle_field(field, other, SinglePass())

    def test_bad_strategy_rejected(self, dg_small):
        field, mesh = dg_small
        with pytest.raises(ValidationError):
            compute_ftle_field(field, mesh, "fast please")

    def test_strategy_validation(self):
        with pytest.raises(ValidationError):
            DataParallel(workers=0)
        with pytest.raises(ValidationError):
            DataParallel(workers=2, chunk=0)

    def test_residuals_along_gradient_path(self, dg_small):
        field, mesh = dg_small
        rng = np.random.default_rng(5)
        for p in rng.choice(mesh.npoints, size=30, replace=False):
            t = cauchy_green(flowmap_gradient(field, mesh, int(p)))
            lam = max_eigenvalue(t)
            bound = 1e-8 * max(1.0, np.linalg.norm(t.entries) ** t.dim)
            assert abs(oracles.det_shifted(t.entries, lam)) <= bound
