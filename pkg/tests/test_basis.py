import numpy as np
import pytest

from ppmhd import physics as ph
from ppmhd.basis import (DGField, build_divfree_basis, build_scalar_basis,
                         build_tables, project_cell, scalar_dim, vector_dim)
from ppmhd.mesh import build_mesh
from ppmhd.quadrature import gauss_legendre

RNG = np.random.default_rng(42)


def quad_grid(nq=6):
    gl = gauss_legendre(nq)
    X, Y = np.meshgrid(gl.nodes, gl.nodes, indexing="ij")
    w = np.outer(gl.weights, gl.weights).ravel()
    return X.ravel(), Y.ravel(), w


class TestScalarBasis:
    @pytest.mark.parametrize("k,n", [(0, 1), (1, 3), (2, 6)])
    def test_count(self, k, n):
        assert build_scalar_basis(k).n == n == scalar_dim(k)

    def test_k0_constant(self):
        sb = build_scalar_basis(0)
        x, y, _ = quad_grid()
        assert np.allclose(sb.values(x, y), 1.0)

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_orthonormal(self, k):
        sb = build_scalar_basis(k)
        x, y, w = quad_grid()
        v = sb.values(x, y)
        gram = (v * w) @ v.T
        assert np.allclose(gram, np.eye(sb.n), atol=1e-12)

    def test_k1_spans_linears(self):
        sb = build_scalar_basis(1)
        x, y, w = quad_grid()
        for target in (np.ones_like(x), x, y):
            v = sb.values(x, y)
            coef = v @ (w * target)
            assert np.allclose(v.T @ coef, target, atol=1e-13)

    def test_k2_zero_means_except_constant(self):
        sb = build_scalar_basis(2)
        x, y, w = quad_grid()
        means = sb.values(x, y) @ w
        assert means[0] == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(means[1:], 0.0, atol=1e-15)

    def test_unsupported_degree(self):
        with pytest.raises(ValueError):
            build_scalar_basis(3)


class TestDivFreeBasis:
    @pytest.mark.parametrize("k,n", [(0, 2), (1, 5), (2, 9)])
    def test_count(self, k, n):
        assert build_divfree_basis(k).n == n == vector_dim(k)

    def test_member_evaluation(self):
        vb = build_divfree_basis(1)
        b1, b2 = vb.values(np.array(0.25), np.array(0.5))
        # member 4 is (x, -y)
        assert b1[4] == pytest.approx(0.25)
        assert b2[4] == pytest.approx(-0.5)

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_divergence_free(self, k):
        vb = build_divfree_basis(k)
        x = RNG.uniform(-0.5, 0.5, 20)
        y = RNG.uniform(-0.5, 0.5, 20)
        assert np.abs(vb.divergence(x, y)).max() <= 1e-13

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_linear_independence(self, k):
        vb = build_divfree_basis(k)
        x, y, w = quad_grid()
        b1, b2 = vb.values(x, y)
        gram = (b1 * w) @ b1.T + (b2 * w) @ b2.T
        assert np.linalg.cond(gram) < 1e3

    def test_k1_span(self):
        # span must equal span{(1,0),(0,1),(y,0),(0,x),(x,-y)}
        vb = build_divfree_basis(1)
        x, y, _ = quad_grid()
        ref = np.stack([
            np.concatenate([np.ones_like(x), np.zeros_like(x)]),
            np.concatenate([np.zeros_like(x), np.ones_like(x)]),
            np.concatenate([y, np.zeros_like(x)]),
            np.concatenate([np.zeros_like(x), x]),
            np.concatenate([x, -y]),
        ])
        b1, b2 = vb.values(x, y)
        got = np.concatenate([b1, b2], axis=1)
        combined = np.vstack([ref, got])
        assert np.linalg.matrix_rank(ref, tol=1e-10) == 5
        assert np.linalg.matrix_rank(combined, tol=1e-10) == 5

    def test_k2_span(self):
        vb = build_divfree_basis(2)
        x, y, _ = quad_grid()

        def pair(f1, f2):
            return np.concatenate([f1, f2])

        z = np.zeros_like(x)
        o = np.ones_like(x)
        ref = np.stack([
            pair(o, z), pair(z, o), pair(y, z), pair(z, x), pair(x, -y),
            pair(x * x, -2 * x * y), pair(2 * x * y, -y * y),
            pair(y * y, z), pair(z, x * x),
        ])
        b1, b2 = vb.values(x, y)
        got = np.concatenate([b1, b2], axis=1)
        assert np.linalg.matrix_rank(ref, tol=1e-10) == 9
        assert np.linalg.matrix_rank(np.vstack([ref, got]), tol=1e-10) == 9

    def test_constant_mode_isolation(self):
        # cell averages must live in the first two coefficients alone
        vb = build_divfree_basis(2)
        x, y, w = quad_grid()
        b1, b2 = vb.values(x, y)
        assert np.allclose(b1 @ w, np.eye(9)[0], atol=1e-15)
        assert np.allclose(b2 @ w, np.eye(9)[1], atol=1e-15)


class TestProjection:
    def setup_method(self):
        self.mesh = build_mesh(4, 4, 0.0, 1.0, 0.0, 1.0)
        self.tables = build_tables(2)

    def test_constant_projects_to_constant_mode(self):
        def f(x, y):
            one = np.ones(np.broadcast(x, y).shape)
            return np.stack([1.0 * one, 0.1 * one, 0.2 * one, 0.3 * one,
                             0.4 * one, 0.5 * one, 0.6 * one, 2.0 * one], axis=-1)

        dof = project_cell(f, 0.125, 0.125, 0.25, 0.25, self.tables)
        expect = np.zeros_like(dof)
        expect[self.tables.const_dofs] = [1.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 2.0]
        assert np.allclose(dof, expect, atol=1e-14)

    def test_in_space_field_reproduced(self):
        # B = (x, -y) in cell-local coordinates is inside the K>=1 space
        mesh = self.mesh

        def f(x, y):
            xi = (x - 0.125) / mesh.dx
            eta = (y - 0.125) / mesh.dy
            z = np.zeros(np.broadcast(x, y).shape)
            return np.stack([1 + z, z, z, z, xi, -eta, z, 2 + z], axis=-1)

        dof = project_cell(f, 0.125, 0.125, mesh.dx, mesh.dy, self.tables)
        fld = DGField(mesh, 2)
        fld.coef[1, 1] = dof
        xi = RNG.uniform(-0.5, 0.5, 30)
        eta = RNG.uniform(-0.5, 0.5, 30)
        u = fld.evaluate(0, 0, xi, eta)
        assert np.abs(u[:, 4] - xi).max() < 1e-13
        assert np.abs(u[:, 5] + eta).max() < 1e-13

    def test_non_divfree_projection_matches_least_squares(self):
        # B = (xi, 0) is outside the space; compare against the dense
        # least-squares solution on the K=1 span
        tables = build_tables(1)

        def f(x, y):
            xi = (x - 0.125) / 0.25
            z = np.zeros(np.broadcast(x, y).shape)
            return np.stack([1 + z, z, z, z, xi, z, z, 2 + z], axis=-1)

        dof = project_cell(f, 0.125, 0.125, 0.25, 0.25, tables)
        gl = gauss_legendre(4)
        X, Y = np.meshgrid(gl.nodes, gl.nodes, indexing="ij")
        w = np.outer(gl.weights, gl.weights).ravel()
        xs, ys = X.ravel(), Y.ravel()
        from ppmhd.basis import build_divfree_basis
        vb = build_divfree_basis(1)
        b1, b2 = vb.values(xs, ys)
        A = np.concatenate([b1 * np.sqrt(w), b2 * np.sqrt(w)], axis=1).T
        rhs = np.concatenate([xs * np.sqrt(w), 0 * ys])
        coef_ls, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        assert np.allclose(dof[6 * tables.ns:], coef_ls, atol=1e-12)
        # the projection of (xi, 0) keeps zero divergence by construction
        fld = DGField(build_mesh(4, 4, 0, 1, 0, 1), 1)
        fld.coef[1, 1] = dof
        pts = RNG.uniform(-0.5, 0.5, (2, 25))
        assert np.abs(fld.divergence_b(0, 0, pts[0], pts[1])).max() <= 1e-13

    def test_projection_idempotent(self):
        mesh = self.mesh
        fld = DGField.project(mesh, 2, _random_smooth_state)
        xc, yc = mesh.cell_centers_x(), mesh.cell_centers_y()

        def resample(x, y):
            # x, y broadcast over (nx, ny, q); evaluate the field per cell
            out = np.empty(np.broadcast(x, y).shape + (8,))
            for i in range(mesh.nx):
                for j in range(mesh.ny):
                    xi = (x[i, 0] - xc[i]) / mesh.dx
                    eta = (y[0, j] - yc[j]) / mesh.dy
                    out[i, j] = fld.evaluate(i, j, xi, eta)
            return out

        fld2 = DGField.project(mesh, 2, resample)
        assert np.allclose(fld2.interior, fld.interior, atol=1e-12)


def _random_smooth_state(x, y):
    rho = 1.2 + 0.3 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
    p = 1.0 + 0.2 * np.cos(2 * np.pi * x)
    w = np.stack(np.broadcast_arrays(rho, 0.3, -0.1, 0.2, 0.25, -0.4, 0.15, p),
                 axis=-1)
    return ph.cons_from_prim_arr(np.asarray(w, dtype=float), 5.0 / 3.0)


class TestDGField:
    def test_requires_square_cells(self):
        with pytest.raises(ValueError):
            DGField(build_mesh(4, 4, 0, 1, 0, 2), 1)

    def test_cell_average_is_constant_mode(self):
        mesh = build_mesh(3, 3, 0, 1, 0, 1)
        fld = DGField.project(mesh, 2, _random_smooth_state)
        avg = fld.cell_averages()
        assert avg.shape == (3, 3, 8)
        assert np.array_equal(avg, fld.interior[:, :, fld.tables.const_dofs])

    def test_constant_field_everywhere(self):
        mesh = build_mesh(3, 3, 0, 1, 0, 1)

        def f(x, y):
            one = np.ones(np.broadcast(x, y).shape)
            return np.stack([one, 0 * one, 0 * one, 0 * one, one, one,
                             0 * one, 3 * one], axis=-1)

        fld = DGField.project(mesh, 1, f)
        xi = RNG.uniform(-0.5, 0.5, 10)
        u = fld.evaluate(1, 1, xi, xi)
        assert np.allclose(u, np.array([1, 0, 0, 0, 1, 1, 0, 3.0]), atol=1e-14)

    def test_single_vector_mode_evaluation(self):
        mesh = build_mesh(3, 3, 0, 1, 0, 1)
        fld = DGField(mesh, 1)
        fld.coef[2, 2, 6 * fld.tables.ns + 4] = 1.0   # the (x, -y) member
        u = fld.evaluate(1, 1, 0.5, -0.5)
        assert u[4] == pytest.approx(0.5)
        assert u[5] == pytest.approx(0.5)

    def test_out_of_cell_rejected(self):
        mesh = build_mesh(3, 3, 0, 1, 0, 1)
        fld = DGField(mesh, 1)
        with pytest.raises(ValueError):
            fld.evaluate(0, 0, 0.6, 0.0)

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_divergence_identically_zero(self, k):
        mesh = build_mesh(4, 4, 0, 0.4, 0, 0.4)
        fld = DGField(mesh, k)
        fld.coef[...] = RNG.normal(0, 5, fld.coef.shape)
        xi = RNG.uniform(-0.5, 0.5, 40)
        eta = RNG.uniform(-0.5, 0.5, 40)
        worst = max(np.abs(fld.divergence_b(i, j, xi, eta)).max()
                    for i in range(4) for j in range(4))
        assert worst <= 1e-12

    def test_divergence_finite_difference_oracle(self):
        mesh = build_mesh(4, 4, 0, 1, 0, 1)
        fld = DGField(mesh, 2)
        fld.coef[...] = RNG.normal(0, 2, fld.coef.shape)
        h = 1e-6
        for _ in range(5):
            xi, eta = RNG.uniform(-0.4, 0.4, 2)
            up = fld.evaluate(2, 2, xi + h, eta)
            um = fld.evaluate(2, 2, xi - h, eta)
            vp = fld.evaluate(2, 2, xi, eta + h)
            vm = fld.evaluate(2, 2, xi, eta - h)
            div_fd = ((up[4] - um[4]) / (2 * h) / mesh.dx
                      + (vp[5] - vm[5]) / (2 * h) / mesh.dy)
            assert div_fd == pytest.approx(0.0, abs=1e-6)


class TestTables:
    @pytest.mark.parametrize("k,npts", [(0, 4), (1, 8), (2, 17)])
    def test_pp_point_count(self, k, npts):
        t = build_tables(k)
        assert t.pp_x.size == npts

    def test_pp_points_cover_faces(self):
        from ppmhd.limiters import pp_point_set
        t = build_tables(2)
        ps = pp_point_set(t)
        assert ps.contains_face_nodes(t.face_nodes)

    def test_gram_inverse(self):
        t = build_tables(2)
        assert np.allclose(t.gram @ t.gram_inv, np.eye(t.nv), atol=1e-13)

    def test_reflect_signs_square(self):
        for k in (0, 1, 2):
            t = build_tables(k)
            assert np.all(np.abs(t.reflect_sign_x) == 1.0)
            assert np.all(np.abs(t.reflect_sign_y) == 1.0)

    def test_reflect_signs_match_pointwise_mirror(self):
        # reflecting the coefficients must equal mirroring the polynomial
        mesh = build_mesh(3, 3, 0, 1, 0, 1)
        fld = DGField(mesh, 2)
        t = fld.tables
        fld.coef[2, 2] = RNG.normal(0, 1, t.ndof)
        xi = RNG.uniform(-0.5, 0.5, 15)
        eta = RNG.uniform(-0.5, 0.5, 15)
        u = fld.evaluate(1, 1, xi, eta)
        mirrored = DGField(mesh, 2)
        mirrored.coef[2, 2] = fld.coef[2, 2] * t.reflect_sign_x
        um = mirrored.evaluate(1, 1, -xi, eta)
        flip = np.array([1, -1, 1, 1, -1, 1, 1, 1.0])
        assert np.allclose(um, u * flip, atol=1e-13)
        mirrored.coef[2, 2] = fld.coef[2, 2] * t.reflect_sign_y
        um = mirrored.evaluate(1, 1, xi, -eta)
        flip = np.array([1, 1, -1, 1, 1, -1, 1, 1.0])
        assert np.allclose(um, u * flip, atol=1e-13)
