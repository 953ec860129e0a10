"""
Tests for src.metric: closed metric kernels, truncated series, the composed metric
and the C operator.
"""
import numpy as np
import pytest

from src.errors import DegeneracyWarning, InvalidArgumentError
from src.laplacian import CoefficientSequence, ModeFunction, chi, j_operator
from src.metric import (COperator, MetricSpec, c_operator_kernel, cchoice_j_operators, d_constants,
                        hs_norm_closed, kernel_c_operator, kernel_cchoice, kernel_constant,
                        kernel_general, metric_cchoice, metric_constant, metric_from_kernel,
                        metric_general, series_closed_max_entry, theta_prop41, theta_series,
                        verify_pde_system, verify_quasi_hermiticity)
from src.numerics import KernelOperator, SampledFunction, hs_norm, identity, make_grid
from src.spectrum import BoundaryParams, PTParams, biorthonormalize, find_eigenvalues

RNG = np.random.default_rng(0)

HALF_PI = np.pi / 2
ALPHA = 0.5
RESIDUAL_TOL = 1e-7
PDE_TOL = 1e-6
SERIES_TRUNCATIONS = (100, 400, 1600)
SERIES_TOL = 1e-3


@pytest.fixture(scope="module")
def grid():
    return make_grid(HALF_PI)


@pytest.fixture(scope="module")
def triples():
    p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
    return biorthonormalize(find_eigenvalues(p, 12))


@pytest.fixture(scope="module")
def many_triples():
    p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
    return biorthonormalize(find_eigenvalues(p, max(SERIES_TRUNCATIONS)))


def _smooth_functions(grid, count=10):
    """Random combinations of low-degree polynomials and a Gaussian bump."""
    functions = []
    for _ in range(count):
        coefficients = RNG.standard_normal(5) + 1j * RNG.standard_normal(5)
        centre = RNG.uniform(-0.5, 0.5)

        def sample(x, c=coefficients, m=centre):
            return np.polyval(c, x / grid.a) + np.exp(-(x - m) ** 2)

        functions.append(SampledFunction.from_callable(grid, sample))
    return functions


def _monomials(grid, degree=4):
    return [SampledFunction(grid, (grid.nodes / grid.a) ** k + 0j) for k in range(degree + 1)]


def _action_gap(T, S, grid):
    """max ||(T - S) tau|| / ||tau|| over monomials tau."""
    gaps = [tau.with_values((T - S) @ tau.values).norm() / tau.norm() for tau in _monomials(grid)]
    return max(gaps)


class TestClosedKernels:
    def test_constant_kernel_jump_and_diagonal(self, grid):
        K = kernel_constant(ALPHA, HALF_PI)
        x = grid.nodes
        np.testing.assert_allclose(K.jump(x), 2j * ALPHA, atol=1e-12)
        np.testing.assert_allclose(K(x, x), ALPHA ** 2 / (2 * HALF_PI) * (HALF_PI ** 2 - x ** 2),
                                   atol=1e-12)

    @pytest.mark.parametrize("K", [
        kernel_constant(ALPHA, HALF_PI),
        kernel_cchoice(ALPHA, HALF_PI),
        kernel_general(1.0, 0.5, 0.3, HALF_PI),
    ], ids=["constant", "cchoice", "general"])
    def test_hermitian(self, grid, K):
        assert K.hermitian
        assert K.hermitian_defect(grid) < 1e-12

    def test_zero_parameters_give_zero_kernel(self, grid):
        np.testing.assert_allclose(kernel_constant(0.0, HALF_PI).node_values(grid), 0.0)
        np.testing.assert_allclose(kernel_general(0.0, 0.7, 0.0, HALF_PI).node_values(grid), 0.0)

    def test_general_kernel_reduces_to_cchoice(self, grid):
        general = kernel_general(ALPHA, 0.0, ALPHA * np.tan(ALPHA * HALF_PI), HALF_PI)
        cchoice = kernel_cchoice(ALPHA, HALF_PI)
        x, y = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
        np.testing.assert_allclose(general(x, y), cchoice(x, y), atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, -0.2, 1.0, 1.3])
    def test_cchoice_range(self, alpha):
        with pytest.raises(InvalidArgumentError):
            kernel_cchoice(alpha, HALF_PI)
        with pytest.raises(InvalidArgumentError):
            c_operator_kernel(alpha, HALF_PI)

    def test_general_kernel_needs_real_constant(self):
        with pytest.raises(InvalidArgumentError):
            kernel_general(1.0, 0.5, 0.3 + 0.1j, 1.0)


class TestDConstants:
    def test_values(self):
        assert d_constants(0, ALPHA, HALF_PI) == pytest.approx(2 / np.pi, rel=1e-12)
        assert d_constants(1, ALPHA, HALF_PI) == pytest.approx(-0.75, rel=1e-12)
        assert d_constants(2, ALPHA, HALF_PI) == pytest.approx((4 - 0.25) / 4, rel=1e-12)
        assert d_constants(0, 0.0, HALF_PI) == 1.0

    def test_invalid_index(self):
        with pytest.raises(InvalidArgumentError):
            d_constants(-1, ALPHA, HALF_PI)

    def test_parity_relation(self, grid, triples):
        x = grid.nodes
        for t in triples[:7]:
            np.testing.assert_allclose(t.phi(-x), d_constants(t.n, ALPHA, HALF_PI) * t.psi(x),
                                       atol=1e-9)


class TestHilbertSchmidt:
    def test_closed_value(self):
        assert hs_norm_closed(1.0, 1.0, 0.0, 1.0) ** 2 == pytest.approx(1.509158, abs=1e-6)
        assert hs_norm_closed(1.0, 1.0, 0.0, 1.0) == pytest.approx(np.sqrt((3 + np.exp(-4)) / 2))

    def test_zero(self):
        assert hs_norm_closed(0.0, 0.4, 0.0, 1.0) == 0.0

    def test_beta_zero_limit(self):
        expected = 4 * (0.04 + 0.49)
        assert hs_norm_closed(0.7, 0.0, 0.2, 1.0) ** 2 == pytest.approx(expected, rel=1e-12)
        grid = make_grid(1.0)
        quadrature = hs_norm(kernel_general(0.7, 1e-4, 0.2, 1.0), grid)
        closed = hs_norm_closed(0.7, 1e-4, 0.2, 1.0)
        assert abs(quadrature - closed) <= 1e-6 * (1 + closed)

    @pytest.mark.parametrize("alpha", [0.25, 0.625, 1.0])
    @pytest.mark.parametrize("beta", [0.25, 0.625, 1.0])
    @pytest.mark.parametrize("c", [0.25, 0.625, 1.0])
    def test_quadrature_agrees(self, alpha, beta, c):
        grid = make_grid(1.0)
        closed = hs_norm_closed(alpha, beta, c, 1.0)
        quadrature = hs_norm(kernel_general(alpha, beta, c, 1.0), grid)
        assert abs(quadrature - closed) <= 1e-6 * (1 + closed)


class TestQuasiHermiticity:
    def test_constant_metric(self, grid, triples):
        p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
        report = verify_quasi_hermiticity(metric_constant(ALPHA, HALF_PI), p, triples, grid,
                                          n_test=11, tol=RESIDUAL_TOL)
        assert report["passed"], report["failing"]
        assert report["max_residual"] <= RESIDUAL_TOL
        assert report["positivity_margin"] > 0
        assert report["grid"]["nodes"] == grid.size

    def test_cchoice_metric(self, grid, triples):
        p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
        theta = metric_cchoice(ALPHA, HALF_PI)
        assert theta.coefficient(3) == pytest.approx(9 / (9 - 0.25))
        report = verify_quasi_hermiticity(theta, p, triples, grid, n_test=11, tol=RESIDUAL_TOL)
        assert report["passed"], report["failing"]

    def test_identity_metric_for_neumann(self, grid):
        p = BoundaryParams(HALF_PI, 0.0, 0.0)
        theta = metric_from_kernel(KernelOperator(lambda x, y: 0.0 * x, hermitian=True), "identity",
                                   coefficients=lambda n: 1.0)
        triples = biorthonormalize(find_eigenvalues(p, 6))
        report = verify_quasi_hermiticity(theta, p, triples, grid)
        assert report["max_residual"] < 1e-10
        assert report["positivity_margin"] == pytest.approx(1.0)

    def test_fitted_coefficients(self, grid, triples):
        p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
        theta = metric_from_kernel(kernel_constant(ALPHA, HALF_PI), "constant_alpha")
        report = verify_quasi_hermiticity(theta, p, triples, grid, n_test=5)
        assert report["passed"]
        for re, im in report["coefficients"].values():
            assert re == pytest.approx(1.0, abs=1e-7)
            assert abs(im) < 1e-7

    def test_complex_pair_is_flagged(self):
        p = PTParams(1.0, -1.0, HALF_PI).boundary()
        grid = make_grid(HALF_PI)
        triples = biorthonormalize(find_eigenvalues(p, 6))
        report = verify_quasi_hermiticity(metric_general(1.0, -1.0, 0.0, HALF_PI), p, triples, grid,
                                          n_test=6)
        assert not report["passed"]
        assert report["failing"]


class TestPdeSystem:
    def test_general_kernel(self):
        grid = make_grid(1.0)
        residuals = verify_pde_system(kernel_general(1.0, 0.5, 0.3, 1.0), 1.0, 0.5, 1.0, grid)
        assert max(residuals.values()) <= PDE_TOL

    def test_constant_kernel(self, grid):
        residuals = verify_pde_system(kernel_constant(ALPHA, HALF_PI), ALPHA, 0.0, HALF_PI, grid)
        assert max(residuals.values()) <= PDE_TOL

    def test_zero_kernel(self):
        grid = make_grid(1.0, 4, 6)
        residuals = verify_pde_system(kernel_general(0.0, 0.8, 0.0, 1.0), 0.0, 0.8, 1.0, grid)
        assert residuals == {"wave": 0.0, "y_boundary": 0.0, "x_boundary": 0.0}

    def test_wrong_alpha_is_detected(self):
        grid = make_grid(1.0)
        residuals = verify_pde_system(kernel_general(1.0, 0.5, 0.3, 1.0), 1.2, 0.5, 1.0, grid)
        assert residuals["y_boundary"] > 0.05

    def test_needs_branches(self, grid):
        with pytest.raises(InvalidArgumentError):
            verify_pde_system(KernelOperator(lambda x, y: 0 * x), ALPHA, 0.0, HALF_PI, grid)


class TestSeriesMetric:
    def test_neumann_series_is_projection(self):
        grid = make_grid(1.0, 8, 12)
        theta = theta_series(BoundaryParams(1.0, 0.0, 0.0), CoefficientSequence.unit(), 12, grid)
        for m in range(15):
            mode = ModeFunction("N", m, 1.0).sample(grid)
            expected = mode.values if m < 12 else 0.0
            np.testing.assert_allclose(theta.apply(mode).values, expected, atol=1e-8)

    def test_hermitian(self, grid):
        p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
        theta = theta_series(p, CoefficientSequence.unit(), 10, grid)
        assert theta.hermitian_defect(grid) < 1e-10

    def test_other_grid_rejected(self, grid):
        p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
        theta = theta_series(p, CoefficientSequence.unit(), 4, grid)
        with pytest.raises(InvalidArgumentError):
            theta.theta_matrix(make_grid(HALF_PI, 8, 8))

    @pytest.mark.parametrize("N", [0, -2])
    def test_invalid_truncation(self, grid, N):
        p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
        with pytest.raises(InvalidArgumentError):
            theta_series(p, CoefficientSequence.unit(), N, grid)

    @pytest.mark.parametrize("coefficients, closed", [
        (CoefficientSequence.unit(), kernel_constant(ALPHA, HALF_PI)),
        (CoefficientSequence.cchoice(ALPHA, HALF_PI), kernel_cchoice(ALPHA, HALF_PI)),
    ], ids=["constant", "cchoice"])
    def test_converges_to_closed_kernel(self, many_triples, coefficients, closed):
        grid = make_grid(HALF_PI, 32, 16)
        p = PTParams(ALPHA, 0.0, HALF_PI).boundary()
        gaps = [series_closed_max_entry(theta_series(p, coefficients, N, grid, many_triples).kernel,
                                        closed, grid)
                for N in SERIES_TRUNCATIONS]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] <= SERIES_TOL


class TestComposedMetric:
    def test_identity_series_gives_constant_metric(self, grid):
        theta = theta_prop41(ALPHA, HALF_PI, grid=grid)
        expected = identity(grid) + kernel_constant(ALPHA, HALF_PI).matrix(grid)
        np.testing.assert_allclose(theta.theta_matrix(grid), expected, atol=1e-10)
        assert theta.kernel is not None
        assert theta.claims_metric

    def test_cchoice_series(self):
        grid = make_grid(HALF_PI, 24, 16)
        J_N, J_D, C0 = cchoice_j_operators(ALPHA, HALF_PI, 60, grid)
        assert C0 ** 2 == pytest.approx(2 * ALPHA * HALF_PI / np.sin(2 * ALPHA * HALF_PI))
        theta = theta_prop41(ALPHA, HALF_PI, C0, J_N, J_D, grid)
        closed = identity(grid) + kernel_cchoice(ALPHA, HALF_PI).matrix(grid)
        assert _action_gap(theta.theta_matrix(grid), closed, grid) < 1e-4

    def test_theta4_variant_agrees(self):
        grid = make_grid(HALF_PI, 24, 16)
        J_N, J_D, C0 = cchoice_j_operators(ALPHA, HALF_PI, 30, grid)
        first = theta_prop41(ALPHA, HALF_PI, C0, J_N, J_D, grid)
        second = theta_prop41(ALPHA, HALF_PI, C0, J_N, J_D, grid, variant="theta4")
        assert _action_gap(first.theta_matrix(grid), second.theta_matrix(grid), grid) < 1e-7

    def test_self_adjoint_limit(self, grid):
        C = CoefficientSequence(lambda n: 1.0 + 1.0 / (1.0 + n), 0.5, 2.0, "decay")
        J_N = j_operator("N", C, 6, grid)
        theta = theta_prop41(0.0, HALF_PI, J_N=J_N, grid=grid)
        for m in range(8):
            mode = ModeFunction("N", m, HALF_PI).sample(grid)
            factor = 1.0 + 1.0 / (1.0 + m) if m < 6 else 1.0
            np.testing.assert_allclose(theta.apply(mode).values, factor * mode.values, atol=1e-10)

    @pytest.mark.parametrize("fraction", [0.1, 0.5, 0.9])
    def test_cchoice_positivity(self, grid, fraction):
        assert metric_cchoice(fraction, HALF_PI).positivity_margin(grid) > 0

    def test_degeneracy_warning(self, grid):
        with pytest.warns(DegeneracyWarning):
            theta = theta_prop41(1.0, HALF_PI, grid=grid)
        assert not theta.claims_metric

    def test_invalid_arguments(self, grid):
        with pytest.raises(InvalidArgumentError):
            theta_prop41(ALPHA, HALF_PI)
        with pytest.raises(InvalidArgumentError):
            theta_prop41(ALPHA, HALF_PI, grid=grid, variant="theta5")
        with pytest.raises(InvalidArgumentError):
            theta_prop41(ALPHA, HALF_PI, C0=0.0, grid=grid)

    def test_metric_spec_without_matrix(self, grid):
        theta = MetricSpec(source="zero", params={}, kernel=KernelOperator(lambda x, y: 0 * x,
                                                                           hermitian=True))
        assert theta.coefficient(0) is None
        assert theta.positivity_margin(grid) == pytest.approx(1.0)


class TestCOperator:
    @pytest.fixture(scope="class")
    def C(self):
        return kernel_c_operator(ALPHA, HALF_PI)

    def test_involution(self, grid, C):
        assert isinstance(C, COperator)
        assert C.involution_residual(_smooth_functions(grid)) <= 1e-6

    def test_parity_times_metric(self, grid, C):
        theta = metric_cchoice(ALPHA, HALF_PI)
        np.testing.assert_allclose(C.parity_matrix(grid) @ theta.theta_matrix(grid), C.matrix(grid),
                                   atol=1e-12)

    def test_constant_metric_is_not_an_involution(self, grid):
        P = COperator(ALPHA, HALF_PI, kernel_cchoice(ALPHA, HALF_PI)).parity_matrix(grid)
        PT = P @ metric_constant(ALPHA, HALF_PI).theta_matrix(grid)
        worst = 0.0
        for f in _smooth_functions(grid, 4):
            g = f.with_values(PT @ (PT @ f.values) - f.values)
            worst = max(worst, g.norm() / f.norm())
        assert worst > 0.1

    def test_eigenfunctions_are_eigenvectors(self, grid, C, triples):
        for t in triples[:7]:
            psi = t.sample_psi(grid)
            np.testing.assert_allclose(C.apply(psi).values, (-1) ** t.n * psi.values, atol=1e-6)

    def test_commutes_with_h(self, grid, C, triples):
        assert C.commutator_residual(triples[:8], grid) <= 1e-6

    def test_parity_matrix_is_reflection(self, grid, C):
        P = C.parity_matrix(grid)
        np.testing.assert_allclose(P @ chi("D", 1, grid.nodes, HALF_PI) + 0j,
                                   chi("D", 1, -grid.nodes, HALF_PI), atol=1e-14)
