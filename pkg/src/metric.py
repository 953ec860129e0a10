# src/metric.py
"""
metric.py: A module that builds metric operators Theta for H and checks them.

A metric operator is a bounded, positive operator with bounded inverse satisfying
Theta H = H* Theta. Spectrally it is Theta = sum C_n^2 phi_n <phi_n, .> for a bounded positive
sequence C_n. This module realises

    - the truncated series (any BoundaryParams, any CoefficientSequence),
    - the composed form Theta = J^N + C_0^2 theta_1 + J^N theta_2 + J^D theta_3 for c_+- = i alpha
      (and its variant with p* J^N theta_4),
    - the closed kernels K of Theta = I + K: constant coefficients, the C-operator choice and the
      one-parameter family for c_+- = i alpha +- beta,
    - the C operator C = P + L with C^2 = I,

together with positivity margins, Hilbert-Schmidt norms, the spectral quasi-Hermiticity test
Theta psi_n = C_n^2 phi_n and the residuals of the kernel boundary-value problem.

Closed kernels are written once as sympy expressions in x, y, s = sgn and d = |.|; the two smooth
branches on either side of the jump line are obtained by substitution, and all derivatives used by
the checks are symbolic.

Example usage:

    from src.metric import kernel_constant, metric_from_kernel, verify_quasi_hermiticity
    from src.numerics import make_grid

    grid = make_grid(1.5707963267948966)
    theta = metric_from_kernel(kernel_constant(0.5, grid.a), "constant_alpha", alpha=0.5)
    print(theta.positivity_margin(grid))
"""
import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import sympy as sp
from numpy import ndarray

from src.errors import DegeneracyWarning, InvalidArgumentError
from src.laplacian import (CoefficientSequence, SeriesOperator, j_operator, mode_matrix,
                           wavenumber)
from src.numerics import (X, Y, BranchKernel, KernelOperator, QuadratureGrid,
                          SampledFunction, hermitian_defect_matrix,
                          identity, inner_product, min_matrix_eigenvalue,
                          min_symmetric_eigenvalue)
from src.spectrum import (BoundaryParams, EigenTriple, biorthonormalize,
                          find_eigenvalues)

logger = logging.getLogger(__name__)

# placeholders for sgn and |.| of y - x (y + x for anti-diagonal kernels)
SGN, DIST = sp.symbols("s d", real=True)

DEGENERACY_TOL = 1e-10
RESIDUAL_TOL = 1e-7
PDE_TEST_DEGREE = 4


def _jump_kernel(expr: sp.Expr, name: str, antidiagonal: bool = False,
                 hermitian: bool = True) -> BranchKernel:
    """Split an expression in X, Y, SGN, DIST into the branches below and above the jump line."""
    line = Y + X if antidiagonal else Y - X
    lower = expr.subs({SGN: -1, DIST: -line}, simultaneous=True)
    upper = expr.subs({SGN: 1, DIST: line}, simultaneous=True)
    return BranchKernel(lower, upper, antidiagonal=antidiagonal, hermitian=hermitian, name=name)


def _check_k_degeneracy(alpha: float, a: float) -> Optional[int]:
    n = int(round(abs(alpha) * 2.0 * a / np.pi))
    if n >= 1 and abs(abs(alpha) - wavenumber(n, a)) < DEGENERACY_TOL:
        return n
    return None


def theta1_expr(alpha: float, a: float) -> sp.Expr:
    return sp.I / a * sp.exp(sp.I * alpha * (X - Y) / 2) * sp.sin(alpha * (X - Y) / 2)


def theta2_expr(alpha: float, a: float) -> sp.Expr:
    return sp.I * alpha / (2 * a) * (Y - a * SGN)


def theta3_expr(alpha: float, a: float) -> sp.Expr:
    return (alpha ** 2 / (2 * a) * (a ** 2 - X * Y) - sp.I * alpha / (2 * a) * X
            - sp.I * alpha / 2 * (1 - sp.I * alpha * (Y - X)) * SGN)


def theta4_expr(alpha: float, a: float) -> sp.Expr:
    smooth = alpha / (12 * a) * (Y ** 2 * (3 - sp.I * alpha * Y)
                                 + 3 * X ** 2 * (1 - sp.I * alpha * Y)
                                 + 2 * a ** 2 * (1 + sp.I * alpha * (3 * X - Y)))
    return smooth - alpha / 4 * (2 - sp.I * alpha * (Y - X)) * (Y - X) * SGN


def kernel_constant(alpha: float, a: float) -> BranchKernel:
    """
    Kernel of Theta = I + K for C_n = 1 and c_+- = i alpha.

    Args:
        alpha (float): PT parameter.
        a (float): Half-width.

    Returns:
        BranchKernel: Hermitian, jump 2 i alpha across y = x, diagonal (alpha^2/2a)(a^2 - x^2).
    """
    expr = (theta1_expr(alpha, a)
            + sp.I * alpha / (2 * a) * (DIST - 2 * a) * SGN
            + alpha ** 2 / (2 * a) * (a ** 2 - X * Y - a * DIST))
    return _jump_kernel(expr, f"K_const(alpha={alpha})")


def _check_cchoice_range(alpha: float, a: float) -> None:
    if not 0.0 < alpha < wavenumber(1, a):
        raise InvalidArgumentError(
            f"the C-operator kernels need alpha in (0, k_1) = (0, {wavenumber(1, a):.6g}), "
            f"got {alpha}")


def kernel_cchoice(alpha: float, a: float) -> BranchKernel:
    """
    Kernel alpha e^{-i alpha (y-x)} [tan(alpha a) - i sgn(y-x)] of the metric with (P Theta)^2 = I.

    Raises:
        InvalidArgumentError: alpha outside (0, k_1).
    """
    _check_cchoice_range(alpha, a)
    expr = alpha * sp.exp(-sp.I * alpha * (Y - X)) * (sp.tan(alpha * a) - sp.I * SGN)
    return _jump_kernel(expr, f"K_C(alpha={alpha})")


def kernel_general(alpha: float, beta: float, c: float, a: float) -> BranchKernel:
    """
    One-parameter family e^{i alpha (x-y) - beta |x-y|} [c + i alpha sgn(x-y)]
    for c_+- = i alpha +- beta.

    Args:
        alpha, beta (float): PT parameters.
        c (float): Free real constant; c = alpha tan(alpha a) at beta = 0 is the C-operator kernel.
        a (float): Half-width.

    Returns:
        BranchKernel: Hermitian; positivity of I + K is not implied and must be checked.
    """
    if np.iscomplexobj(c) and np.imag(c) != 0:
        raise InvalidArgumentError(f"c must be real, got {c}")
    # sgn(x - y) = -SGN
    expr = sp.exp(sp.I * alpha * (X - Y) - beta * DIST) * (float(np.real(c)) - sp.I * alpha * SGN)
    return _jump_kernel(expr, f"K_general(alpha={alpha}, beta={beta}, c={c})")


def c_operator_kernel(alpha: float, a: float) -> BranchKernel:
    _check_cchoice_range(alpha, a)
    expr = alpha * sp.exp(-sp.I * alpha * (Y + X)) * (sp.tan(alpha * a) - sp.I * SGN)
    return _jump_kernel(expr, f"L_C(alpha={alpha})", antidiagonal=True, hermitian=False)


def d_constants(n: int, alpha: float, a: float) -> float:
    """
    D_n with P phi_n = D_n psi_n for c_+- = i alpha.

    Args:
        n (int): Index, n >= 0.
        alpha (float): PT parameter.
        a (float): Half-width.

    Returns:
        float: sin(2 alpha a)/(2 alpha a) for n = 0 (1 at alpha = 0),
        (-1)^n (k_n^2 - alpha^2)/k_n^2 otherwise.
    """
    if n < 0:
        raise InvalidArgumentError(f"index must be non-negative, got {n}")
    if n == 0:
        return float(np.sinc(2.0 * alpha * a / np.pi))
    k2 = float(wavenumber(n, a)) ** 2
    return float((-1) ** n * (k2 - alpha ** 2) / k2)


def hs_norm_closed(alpha: float, beta: float, c: float, a: float) -> float:
    """
    Hilbert-Schmidt norm of the general kernel,
    ||K||^2 = (c^2+alpha^2)(4a beta + e^{-4a beta} - 1)/(2 beta^2).

    The bracket is evaluated by its Taylor series for small 4 a beta;
    beta = 0 gives 4a^2(c^2+alpha^2).
    """
    z = 4.0 * a * beta
    if abs(z) < 1e-3:
        # (z + e^{-z} - 1) / z^2
        ratio = 0.5 - z / 6.0 + z ** 2 / 24.0 - z ** 3 / 120.0
    else:
        ratio = (z + np.expm1(-z)) / z ** 2
    squared = (c ** 2 + alpha ** 2) * 8.0 * a ** 2 * ratio
    return float(np.sqrt(max(squared, 0.0)))


@dataclass
class MetricSpec:
    """
    A metric candidate Theta, either I + K with a kernel K or a matrix assembled on `grid`.

    For truncated series `matrix` is the rank-N truncation itself and `kernel` the same expansion
    with the Neumann identity subtracted (pointwise convergent), so Theta ~ I + kernel.
    """
    source: str
    params: Dict[str, Any]
    kernel: Optional[KernelOperator] = None
    matrix: Optional[ndarray] = None
    grid: Optional[QuadratureGrid] = None
    coefficients: Optional[Callable[[int], float]] = None
    claims_metric: bool = True
    triples: List[EigenTriple] = field(default_factory=list)

    def theta_matrix(self, grid: QuadratureGrid) -> ndarray:
        if self.matrix is not None:
            if not grid.same_as(self.grid):
                raise InvalidArgumentError(f"{self.source} metric was assembled on another grid")
            return self.matrix
        return identity(grid) + self.kernel.matrix(grid)

    def apply(self, f: SampledFunction) -> SampledFunction:
        return f.with_values(self.theta_matrix(f.grid) @ f.values)

    def positivity_margin(self, grid: QuadratureGrid) -> float:
        """Smallest eigenvalue of the symmetrised discretisation of Theta (I + K given a kernel)."""
        if self.kernel is not None and self.matrix is None:
            return min_symmetric_eigenvalue(self.kernel, grid)
        if self.kernel is not None:
            return min_matrix_eigenvalue(identity(grid) + self.kernel.matrix(grid), grid)
        return min_matrix_eigenvalue(self.theta_matrix(grid), grid)

    def hermitian_defect(self, grid: QuadratureGrid) -> float:
        return hermitian_defect_matrix(self.theta_matrix(grid), grid)

    def coefficient(self, n: int) -> Optional[float]:
        return None if self.coefficients is None else float(self.coefficients(n))


def metric_from_kernel(K: KernelOperator, source: str, coefficients=None, **params) -> MetricSpec:
    """Theta = I + K for a closed kernel."""
    return MetricSpec(source=source, params=params, kernel=K, coefficients=coefficients)


def metric_constant(alpha: float, a: float) -> MetricSpec:
    return metric_from_kernel(kernel_constant(alpha, a), "constant_alpha",
                              coefficients=lambda n: 1.0, alpha=alpha, a=a)


def metric_cchoice(alpha: float, a: float) -> MetricSpec:
    seq = CoefficientSequence.cchoice(alpha, a)
    return metric_from_kernel(kernel_cchoice(alpha, a), "cchoice",
                              coefficients=lambda n: float(seq.values([n])[0]), alpha=alpha, a=a)


def metric_general(alpha: float, beta: float, c: float, a: float) -> MetricSpec:
    return metric_from_kernel(kernel_general(alpha, beta, c, a), "general_beta",
                              alpha=alpha, beta=beta, c=c, a=a)


def _series_triples(p: BoundaryParams, N: int) -> List[EigenTriple]:
    n_max = max(1, int(N))
    for _ in range(3):
        triples = find_eigenvalues(p, n_max)
        if len(triples) >= N:
            return biorthonormalize(triples[:N])
        n_max += 2
    raise InvalidArgumentError(f"only {len(triples)} eigenvalues found for a truncation of {N}")


def theta_series(p: BoundaryParams, C: CoefficientSequence, N: int, grid: QuadratureGrid,
                 triples: Optional[Sequence[EigenTriple]] = None) -> MetricSpec:
    """
    Rank-N truncation Theta_N = sum_{n<N} C_n^2 phi_n <phi_n, .>.

    Args:
        p (BoundaryParams): Boundary data.
        C (CoefficientSequence): C_n^2.
        N (int): Truncation.
        grid (QuadratureGrid): Grid of the assembled matrix.
        triples (list of EigenTriple, optional): Biorthonormalised eigentriples, found when omitted.

    Returns:
        MetricSpec: `matrix` is the truncation; `kernel` is sum C_n^2 phi_n phi_n* - chi_n chi_n.

    Raises:
        DegeneratePairError: one of the first N eigenvalues is not simple.
    """
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"truncation must be a positive integer, got {N}")
    N = int(N)
    triples = list(triples)[:N] if triples is not None else _series_triples(p, N)
    if len(triples) < N:
        raise InvalidArgumentError(f"{N} modes requested, {len(triples)} triples supplied")
    squares = C.values(np.arange(N))
    indices = np.arange(N)
    a = p.a

    def phis(x):
        return np.column_stack([t.phi(np.asarray(x, dtype=float)) * np.ones(np.size(x))
                                for t in triples])

    def factors(x):
        return np.hstack([phis(x), mode_matrix("N", indices, x, a)])

    K = SeriesOperator(factors, factors, np.concatenate([squares, -np.ones(N)]),
                       name=f"K_series[{C.name}, N={N}]", hermitian=True)
    F = phis(grid.nodes)
    matrix = (F * squares[None, :]) @ F.conj().T * grid.weights[None, :]
    logger.debug("series metric with %d modes on %d nodes", N, grid.size)
    return MetricSpec(source="series", params={"C": C.name, "N": N, **p.as_dict()}, kernel=K,
                      matrix=matrix, grid=grid,
                      coefficients=lambda n: float(C.values([n])[0]), triples=triples)


def _identity_defect(J: SeriesOperator) -> SeriesOperator:
    """J - I restricted to the modes of J (C_n^2 - 1); the identity is implied beyond them."""
    return SeriesOperator(J.left, J.right, J.coefficients - 1.0, name=f"{J.name}-I",
                          hermitian=True, left_derivative=J.left_derivative)


def theta_prop41(alpha: float, a: float, C0: float = 1.0, J_N: Optional[SeriesOperator] = None,
                 J_D: Optional[SeriesOperator] = None, grid: Optional[QuadratureGrid] = None,
                 variant: str = "theta3") -> MetricSpec:
    """
    Theta = J^N + C_0^2 theta_1 + J^N theta_2 + J^D theta_3 for c_+- = i alpha.

    Args:
        alpha (float): PT parameter.
        a (float): Half-width.
        C0 (float): C_0 > 0.
        J_N, J_D (SeriesOperator, optional): Neumann/Dirichlet series; None stands for the identity.
        Both are taken as the identity beyond their last mode.
        grid (QuadratureGrid): Grid of the composed matrix.
        variant (str): "theta3", or "theta4" for J^N + C_0^2 theta_1 + J^N theta_2 + p* J^N theta_4.

    Returns:
        MetricSpec: With `kernel` set when both J are the identity.

    Warns:
        DegeneracyWarning: alpha = k_n; Theta is assembled but is not a metric.
    """
    if grid is None:
        raise InvalidArgumentError("theta_prop41 needs a grid")
    if variant not in ("theta3", "theta4"):
        raise InvalidArgumentError(f"variant must be 'theta3' or 'theta4', got {variant!r}")
    if not C0 > 0:
        raise InvalidArgumentError(f"C_0 must be positive, got {C0}")
    hit = _check_k_degeneracy(alpha, a)
    if hit is not None:
        message = f"alpha = k_{hit}: eigenvalue k_{hit}^2 is double, Theta is not a metric"
        logger.warning(message)
        warnings.warn(message, DegeneracyWarning, stacklevel=2)

    theta1 = _jump_kernel(C0 ** 2 * theta1_expr(alpha, a), "C0^2 theta_1")
    theta2 = _jump_kernel(theta2_expr(alpha, a), "theta_2")
    theta3 = _jump_kernel(theta3_expr(alpha, a), "theta_3")
    eye = identity(grid)
    T2 = theta2.matrix(grid)
    # with J = I, p* theta_4 reduces to theta_3
    matrix = eye + theta1.matrix(grid) + T2 + theta3.matrix(grid)
    if J_N is not None:
        dN = _identity_defect(J_N)
        matrix = matrix + dN.matrix(grid) + dN.matrix(grid) @ T2
        if variant == "theta4":
            theta4 = _jump_kernel(theta4_expr(alpha, a), "theta_4")
            matrix = matrix - 1j * dN.derivative_matrix(grid) @ theta4.matrix(grid)
    if J_D is not None and variant == "theta3":
        matrix = matrix + _identity_defect(J_D).matrix(grid) @ theta3.matrix(grid)

    kernel = theta1 + theta2 + theta3 if J_N is None and J_D is None else None
    params = {"alpha": alpha, "a": a, "C0": C0, "variant": variant}
    return MetricSpec(source="prop41", params=params,
                      kernel=kernel, matrix=matrix, grid=grid, claims_metric=hit is None)


def cchoice_j_operators(alpha: float, a: float, N: int, grid: QuadratureGrid):
    """J^N and J^D for the C-operator coefficients, together with C_0."""
    seq = CoefficientSequence.cchoice(alpha, a)
    return (j_operator("N", seq, N, grid), j_operator("D", seq, N, grid),
            float(np.sqrt(seq.values([0])[0])))


class COperator:
    """C = P + L with (Pf)(x) = f(-x) and L the anti-diagonal jump kernel."""

    def __init__(self, alpha: float, a: float, kernel: BranchKernel):
        self.alpha = alpha
        self.a = a
        self.kernel = kernel

    def parity_matrix(self, grid: QuadratureGrid) -> ndarray:
        P = np.zeros((grid.size, grid.size), dtype=complex)
        P[np.arange(grid.size), grid.mirror()] = 1.0
        return P

    def matrix(self, grid: QuadratureGrid) -> ndarray:
        return self.parity_matrix(grid) + self.kernel.matrix(grid)

    def apply(self, f: SampledFunction) -> SampledFunction:
        return f.with_values(self.matrix(f.grid) @ f.values)

    def involution_residual(self, functions: Sequence[SampledFunction]) -> float:
        """max ||C^2 f - f|| / ||f|| over the given samples."""
        worst = 0.0
        for f in functions:
            Cf = self.apply(self.apply(f))
            worst = max(worst, Cf.with_values(Cf.values - f.values).norm() / f.norm())
        return worst

    def commutator_residual(self, triples: Sequence[EigenTriple], grid: QuadratureGrid,
                            weights: Optional[ndarray] = None) -> float:
        """
        ||C H f - H C f|| for f = sum w_n psi_n, with H applied through the eigen-expansion.

        Args:
            triples (list of EigenTriple): Biorthonormalised triples, all used to expand Cf.
            grid (QuadratureGrid): Discretisation.
            weights (ndarray, optional): Coefficients w_n, default all ones.

        Returns:
            float: L2 norm of the commutator on f.
        """
        psis = [t.sample_psi(grid) for t in triples]
        phis = [t.sample_phi(grid) for t in triples]
        lam = np.array([t.lam for t in triples])
        w = np.ones(len(triples), dtype=complex) if weights is None \
            else np.asarray(weights, dtype=complex)
        C_psi = [self.apply(psi) for psi in psis]
        CH = sum(w[n] * lam[n] * C_psi[n].values for n in range(w.size))
        Cf = sum(w[n] * C_psi[n].values for n in range(w.size))
        Cf = psis[0].with_values(Cf)
        HC = sum(lam[m] * inner_product(phis[m], Cf) * psis[m].values for m in range(len(triples)))
        return Cf.with_values(CH - HC).norm()


def kernel_c_operator(alpha: float, a: float) -> COperator:
    """
    C = P + L for the C-operator metric,
    L(x, y) = alpha e^{-i alpha (y+x)} [tan(alpha a) - i sgn(y+x)].

    Raises:
        InvalidArgumentError: alpha outside (0, k_1).
    """
    return COperator(alpha, a, c_operator_kernel(alpha, a))


def _grid_info(grid: QuadratureGrid) -> Dict[str, Any]:
    return {"a": grid.a, "panels": grid.n_panels, "order": grid.order, "nodes": grid.size}


def verify_quasi_hermiticity(theta: MetricSpec, p: BoundaryParams, triples: Sequence[EigenTriple],
                             grid: QuadratureGrid, n_test: int = 10,
                             tol: float = RESIDUAL_TOL) -> Dict[str, Any]:
    """
    Spectral test of Theta H = H* Theta: ||Theta psi_n - C_n^2 phi_n|| for n < n_test.

    Without a coefficient sequence, C_n^2 is the best fit <phi_n, Theta psi_n>/||phi_n||^2;
    a fit that is not real and positive counts as a failure.

    Returns:
        dict: JSON-ready {name, residuals, coefficients, failing, positivity_margin, grid, passed}.
    """
    residuals, fitted, failing = {}, {}, []
    for t in list(triples)[:n_test]:
        psi = t.sample_psi(grid)
        phi = t.sample_phi(grid)
        image = theta.apply(psi)
        c2 = theta.coefficient(t.n)
        if c2 is None:
            c2 = inner_product(phi, image) / inner_product(phi, phi)
        c2 = complex(c2)
        residual = image.with_values(image.values - c2 * phi.values).norm()
        residuals[str(t.n)] = residual
        fitted[str(t.n)] = [c2.real, c2.imag]
        if residual > tol or c2.real <= 0 or abs(c2.imag) > tol * max(1.0, abs(c2)):
            failing.append(t.n)
    margin = theta.positivity_margin(grid)
    report = {
        "name": theta.source,
        "params": {k: v for k, v in theta.params.items() if isinstance(v, (int, float, str))},
        "boundary": p.as_dict(),
        "residuals": residuals,
        "max_residual": max(residuals.values(), default=0.0),
        "coefficients": fitted,
        "failing": failing,
        "positivity_margin": margin,
        "grid": _grid_info(grid),
    }
    report["passed"] = not failing and margin > 0
    logger.debug("quasi-Hermiticity of %s: max residual %.3e, margin %.3e",
                 theta.source, report["max_residual"], margin)
    return report


def _monomials(degree: int) -> List[Callable[[ndarray], ndarray]]:
    return [lambda y, j=j: np.asarray(y, dtype=float) ** j for j in range(degree + 1)]


def verify_pde_system(K: BranchKernel, alpha: float, beta: float, a: float,
                      grid: QuadratureGrid) -> Dict[str, float]:
    """
    Residuals of the kernel problem for c_+- = i alpha +- beta.

    Args:
        K (BranchKernel): Candidate kernel of Theta = I + K.
        alpha, beta (float): PT parameters.
        a (float): Half-width.
        grid (QuadratureGrid): Nodes for the pointwise checks and quadrature for the weak one.

    Returns:
        dict: `wave` = max off-diagonal |(d_x^2 - d_y^2) K|; `y_boundary` = max over x
        of |d_y K(x, +-a) + (i alpha +- beta) K(x, +-a)|; `x_boundary` = max over monomials
        tau of degree <= 4 of
        |d/dx (K tau)(+-a) + (-i alpha +- beta)(K tau)(+-a) - 2 i alpha tau(+-a)|,
        where d/dx (K tau) includes the jump across y = x.
    """
    if not isinstance(K, BranchKernel) or K.antidiagonal:
        raise InvalidArgumentError("the PDE checks need symbolic branches across y = x")
    nodes = grid.nodes
    xx, yy = np.meshgrid(nodes, nodes, indexing="ij")
    wave = K.derivative("x", 2)
    wave_y = K.derivative("y", 2)
    off = ~np.eye(grid.size, dtype=bool)
    lower = wave.branch("lower", xx, yy) - wave_y.branch("lower", xx, yy)
    upper = wave.branch("upper", xx, yy) - wave_y.branch("upper", xx, yy)
    pointwise = np.where(yy < xx, lower, upper)
    r_wave = float(np.abs(pointwise[off]).max(initial=0.0))

    dy = K.derivative("y")
    at_top = dy.branch("upper", nodes, a) + (1j * alpha + beta) * K.branch("upper", nodes, a)
    at_bottom = dy.branch("lower", nodes, -a) + (1j * alpha - beta) * K.branch("lower", nodes, -a)
    r_y = float(max(np.abs(at_top).max(), np.abs(at_bottom).max()))

    dx = K.derivative("x")
    r_x = 0.0
    for tau in _monomials(PDE_TEST_DEGREE):
        for end, side, sign in ((a, "lower", 1.0), (-a, "upper", -1.0)):
            robin = -1j * alpha + sign * beta
            values = dx.branch(side, end, nodes) + robin * K.branch(side, end, nodes)
            weak = np.dot(grid.weights, values * tau(nodes))
            weak += (K.jump(end) - 2j * alpha) * tau(end)
            r_x = max(r_x, float(abs(weak)))
    return {"wave": r_wave, "y_boundary": r_y, "x_boundary": r_x}


def series_closed_max_entry(series: KernelOperator, closed: KernelOperator,
                            grid: QuadratureGrid) -> float:
    """
    Entrywise gap max_ij w_j |K_series(x_i, x_j) - K_closed(x_i, x_j)| of the two plain Nyström
    matrices.

    On the jump line the closed kernel takes the mean of its branches, which is also the limit of
    the truncated series there. Works for `theta_series(...).kernel` against `kernel_constant` or
    the L part of `omega_series` against `l_kernel`.
    """
    difference = (series.node_values(grid) - closed.node_values(grid)) * grid.weights[None, :]
    return float(np.abs(difference).max())
