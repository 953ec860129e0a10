"""
Tests for src.numerics: composite Gauss-Legendre grids, sampled functions and Nyström kernels.

Every expected value is an integral known in closed form; piecewise polynomial integrands with a
kink on the diagonal are integrated exactly by the split panels.
"""
import numpy as np
import pandas as pd
import pytest
import sympy as sp

from src.errors import InvalidArgumentError, PreconditionError
from src.numerics import (X, Y, BranchKernel, KernelOperator, SampledFunction, apply_kernel,
                          apply_kernel_at, apply_kernel_derivative, dump_kernel_csv,
                          hermitian_defect_matrix, hs_norm, identity, inner_product,
                          interpolation_matrix, make_grid, min_matrix_eigenvalue,
                          min_symmetric_eigenvalue, reference_rule)

RNG = np.random.default_rng(0)

RTOL = 1e-12
ATOL = 1e-12


@pytest.fixture(scope="module")
def grid():
    return make_grid(1.0, 4, 8)


def _abs_kernel():
    return KernelOperator(lambda x, y: np.abs(x - y), jump_on_diagonal=True, hermitian=True,
                          name="abs")


class TestQuadratureGrid:
    def test_sizes(self, grid):
        assert grid.size == 32
        assert grid.n_panels == 4
        np.testing.assert_allclose(grid.edges, [-1.0, -0.5, 0.0, 0.5, 1.0], atol=ATOL)

    def test_nodes_strictly_inside(self, grid):
        assert np.all(np.abs(grid.nodes) < grid.a)

    @pytest.mark.parametrize("degree", range(0, 16))
    def test_polynomials_integrated_exactly(self, grid, degree):
        exact = (1.0 - (-1.0) ** (degree + 1)) / (degree + 1)
        assert grid.integrate(grid.nodes ** degree).real == pytest.approx(exact, abs=ATOL)

    def test_mirror(self, grid):
        perm = grid.mirror()
        np.testing.assert_allclose(grid.nodes[perm], -grid.nodes, atol=ATOL)
        np.testing.assert_allclose(grid.weights[perm], grid.weights, rtol=RTOL)

    def test_same_as(self, grid):
        assert grid.same_as(make_grid(1.0, 4, 8))
        assert not grid.same_as(make_grid(1.0, 4, 6))

    @pytest.mark.parametrize("a, panels, order", [(0.0, 4, 8), (-1.0, 4, 8), (1.0, 0, 8),
                                                  (1.0, 2.5, 8), (1.0, 4, 1)])
    def test_invalid(self, a, panels, order):
        with pytest.raises(InvalidArgumentError):
            make_grid(a, panels, order)

    def test_interpolation_matrix_reproduces_nodes(self):
        t, _ = reference_rule(6)
        np.testing.assert_allclose(interpolation_matrix(6, t), np.eye(6), atol=1e-13)


class TestSampledFunction:
    def test_shape_checked(self, grid):
        with pytest.raises(InvalidArgumentError):
            SampledFunction(grid, np.ones(grid.size + 1))

    def test_derivative_shape_checked(self, grid):
        with pytest.raises(InvalidArgumentError):
            SampledFunction(grid, np.ones(grid.size), np.ones(3))

    def test_evaluate_polynomial(self, grid):
        coefficients = RNG.standard_normal(8)
        f = SampledFunction.from_callable(grid, lambda x: np.polyval(coefficients, x))
        points = RNG.uniform(-1.0, 1.0, 25)
        np.testing.assert_allclose(f.evaluate(points), np.polyval(coefficients, points),
                                   atol=1e-11)

    def test_boundary_values(self, grid):
        f = SampledFunction.from_callable(grid, lambda x: np.exp(x))
        lo, hi = f.boundary_values()
        assert lo == pytest.approx(np.exp(-1.0), rel=RTOL)
        assert hi == pytest.approx(np.exp(1.0), rel=RTOL)
        g = f.with_values(f.values)
        lo, hi = g.boundary_values()
        assert hi == pytest.approx(np.exp(1.0), rel=1e-9)

    def test_evaluate_derivative_needs_samples(self, grid):
        with pytest.raises(InvalidArgumentError):
            SampledFunction.from_callable(grid, np.sin).evaluate_derivative(0.0)

    def test_inner_product_is_antilinear_in_first_slot(self, grid):
        f = SampledFunction.from_callable(grid, lambda x: x + 1j * x ** 2)
        g = f.with_values(1j * f.values)
        norm2 = 2.0 / 3.0 + 2.0 / 5.0
        assert inner_product(f, f) == pytest.approx(norm2, rel=RTOL)
        assert inner_product(g, f) == pytest.approx(-1j * norm2, rel=RTOL)
        assert inner_product(f, g) == pytest.approx(1j * norm2, rel=RTOL)
        assert f.norm() == pytest.approx(np.sqrt(norm2), rel=RTOL)

    def test_inner_product_needs_same_grid(self, grid):
        f = SampledFunction.from_callable(grid, np.cos)
        g = SampledFunction.from_callable(make_grid(1.0, 2, 8), np.cos)
        with pytest.raises(InvalidArgumentError):
            inner_product(f, g)


class TestKernelApplication:
    def test_abs_kernel_on_constant(self, grid):
        # int_{-1}^{1} |x - y| dy = x^2 + 1
        f = SampledFunction.from_callable(grid, np.ones_like)
        Kf = apply_kernel(_abs_kernel(), f)
        np.testing.assert_allclose(Kf.values, grid.nodes ** 2 + 1.0, atol=ATOL)

    def test_abs_kernel_at_end_points(self, grid):
        f = SampledFunction.from_callable(grid, np.ones_like)
        np.testing.assert_allclose(apply_kernel_at(_abs_kernel(), f, [-1.0, 0.3, 1.0]),
                                   [2.0, 1.09, 2.0], atol=ATOL)

    def test_volterra_branch_kernel(self, grid):
        # lower branch 1 on y < x: (Kf)(x) = int_{-1}^{x} f
        K = BranchKernel(sp.Integer(1), sp.Integer(0), name="volterra")
        f = SampledFunction.from_callable(grid, lambda y: y)
        np.testing.assert_allclose(apply_kernel(K, f).values, (grid.nodes ** 2 - 1.0) / 2.0,
                                   atol=ATOL)
        np.testing.assert_allclose(K.jump(grid.nodes), np.ones(grid.size), atol=ATOL)

    def test_derivative_carries_jump(self, grid):
        K = BranchKernel(sp.Integer(1), sp.Integer(0), name="volterra")
        f = SampledFunction.from_callable(grid, lambda y: y ** 3)
        dKf = apply_kernel_derivative(K, f)
        np.testing.assert_allclose(dKf.values, grid.nodes ** 3, atol=ATOL)

    def test_derivative_of_abs_kernel(self, grid):
        K = BranchKernel(X - Y, Y - X, hermitian=True, name="abs")
        f = SampledFunction.from_callable(grid, np.ones_like)
        np.testing.assert_allclose(apply_kernel_derivative(K, f).values, 2.0 * grid.nodes,
                                   atol=ATOL)

    def test_derivative_needs_branches(self, grid):
        f = SampledFunction.from_callable(grid, np.ones_like)
        with pytest.raises(InvalidArgumentError):
            apply_kernel_derivative(_abs_kernel(), f)

    def test_antidiagonal_kernel(self, grid):
        # lower branch 1 on y < -x: (Kf)(x) = int_{-1}^{-x} f = 1 - x for f = 1
        K = BranchKernel(sp.Integer(1), sp.Integer(0), antidiagonal=True, name="reflect")
        f = SampledFunction.from_callable(grid, np.ones_like)
        np.testing.assert_allclose(apply_kernel(K, f).values, 1.0 - grid.nodes, atol=ATOL)

    def test_derivative_is_cached(self):
        K = BranchKernel(X * Y, Y ** 2, name="k")
        assert K.derivative("x") is K.derivative("x")
        assert K.derivative("x") is not K.derivative("y")

    def test_adjoint(self):
        K = BranchKernel(sp.I * X * Y ** 2, X + sp.I * Y, name="k")
        adjoint = K.adjoint()
        x, y = RNG.uniform(-1, 1, 40), RNG.uniform(-1, 1, 40)
        np.testing.assert_allclose(adjoint(x, y), np.conj(K(y, x)), atol=ATOL)

    def test_sum_of_branch_kernels(self):
        first = BranchKernel(X, Y, name="a")
        second = BranchKernel(Y, X, name="b")
        total = first + second
        x, y = RNG.uniform(-1, 1, 10), RNG.uniform(-1, 1, 10)
        np.testing.assert_allclose(total(x, y), x + y, atol=ATOL)


class TestNorms:
    def test_hs_norm_of_abs_kernel(self, grid):
        # int int (x - y)^2 = 8/3 on (-1, 1)^2
        assert hs_norm(_abs_kernel(), grid) == pytest.approx(np.sqrt(8.0 / 3.0), rel=RTOL)

    def test_zero_kernel_positivity(self, grid):
        zero = KernelOperator(lambda x, y: 0.0 * x, hermitian=True)
        assert min_symmetric_eigenvalue(zero, grid) == pytest.approx(1.0, abs=ATOL)

    def test_non_hermitian_kernel_rejected(self, grid):
        K = BranchKernel(sp.Integer(1), sp.Integer(0), name="volterra")
        with pytest.raises(PreconditionError):
            min_symmetric_eigenvalue(K, grid)

    def test_rank_one_kernel_positivity(self, grid):
        # I + x y has the eigenvalue 1 - 2/3 on span{x} when the sign is negative
        K = KernelOperator(lambda x, y: -x * y, hermitian=True)
        assert min_symmetric_eigenvalue(K, grid) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_min_matrix_eigenvalue_of_identity(self, grid):
        assert min_matrix_eigenvalue(identity(grid), grid) == pytest.approx(1.0, abs=ATOL)

    def test_weighted_hermitian_defect(self, grid):
        K = KernelOperator(lambda x, y: np.exp(-(x - y) ** 2), hermitian=True)
        assert hermitian_defect_matrix(K.matrix(grid), grid) < 1e-14
        assert K.hermitian_defect(grid) == 0.0


class TestDump:
    def test_dump_kernel_csv(self, tmp_path):
        grid = make_grid(1.0, 2, 3)
        path = tmp_path / "k.csv"
        dump_kernel_csv(_abs_kernel(), grid, path)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["x", "y", "re", "im"]
        assert len(frame) == grid.size ** 2
        np.testing.assert_allclose(frame["re"], np.abs(frame["x"] - frame["y"]), atol=ATOL)
        np.testing.assert_allclose(frame["im"], 0.0, atol=ATOL)
