# src/similarity.py
"""
similarity.py: A module that maps H onto a similar self-adjoint operator.

With the Neumann basis e_n = chi_n^N the map Omega = sum e_n <phi_n, .> sends psi_n to chi_n^N, and
its inverse is Omega^{-1} = sum psi_n <e_n, .>. Both are identity plus a Hilbert-Schmidt part:
Omega = I + L, Omega^{-1} = I + M. For c_+- = i alpha the kernels of L and M are closed jump
kernels, and h = Omega H Omega^{-1} is the Neumann Laplacian plus the rank-one term
alpha^2 chi_0^N <chi_0^N, .>. For other boundary constants L and M are available as truncated
series.

The form of h is evaluated as t_h(u, v) = t_H(u + L* u, v + M v), where
t_H(f, g) = <f', g'> + c_+ conj(f(a)) g(a) - c_- conj(f(-a)) g(-a) is the form of H.

Example usage:

    from src.similarity import omega_kernels, similar_operator
    from src.numerics import make_grid

    grid = make_grid(1.5707963267948966)
    maps = omega_kernels(0.5, grid.a)
    print(maps.composition_residual(grid))
    print(similar_operator(0.5, grid.a).spectrum(5))
"""
import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import sympy as sp
from numpy import ndarray
from scipy.linalg import eigvals

from src.errors import DegeneratePairError, InvalidArgumentError
from src.laplacian import ModeFunction, SeriesOperator, chi, mode_matrix, wavenumber
from src.metric import SGN, _jump_kernel, metric_constant
from src.numerics import (X, Y, BranchKernel, KernelOperator, QuadratureGrid,
                          SampledFunction, apply_kernel, apply_kernel_at,
                          apply_kernel_derivative, hs_norm, identity, inner_product,
                          make_grid)
from src.spectrum import (BoundaryParams, EigenTriple, PTParams, _sin_over, biorthonormalize,
                          find_eigenvalues, find_eigenvalues_certified)

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-10
DEGENERACY_MATCH = 1e-8
# Neumann modes in the Galerkin check of h
GALERKIN_SIZE = 24


@dataclass
class SimilarityMaps:
    """Omega = I + L and Omega^{-1} = I + M for the basis chi_n^N (so the unitary part is I)."""
    L: KernelOperator
    M: KernelOperator
    alpha: Optional[float] = None
    a: Optional[float] = None
    basis: str = "neumann"
    triples: Optional[List[EigenTriple]] = None
    basis_fn: Optional[Callable[[ndarray], ndarray]] = None

    def omega_matrix(self, grid: QuadratureGrid) -> ndarray:
        return identity(grid) + self.L.matrix(grid)

    def inverse_matrix(self, grid: QuadratureGrid) -> ndarray:
        return identity(grid) + self.M.matrix(grid)

    def apply(self, f: SampledFunction) -> SampledFunction:
        return f.with_values(f.values + apply_kernel(self.L, f).values)

    def apply_inverse(self, f: SampledFunction) -> SampledFunction:
        return f.with_values(f.values + apply_kernel(self.M, f).values)

    def composition_residual(self, grid: QuadratureGrid) -> float:
        """Max entry of (I + L)(I + M) - I."""
        product = self.omega_matrix(grid) @ self.inverse_matrix(grid)
        return float(np.abs(product - identity(grid)).max())

    def lm_identity_residual(self, grid: QuadratureGrid) -> float:
        """Max entry of LM + L + M, which vanishes when Omega^{-1} inverts Omega."""
        L, M = self.L.matrix(grid), self.M.matrix(grid)
        return float(np.abs(L @ M + L + M).max())

    def adjoint_product(self, grid: QuadratureGrid) -> ndarray:
        """Omega* Omega as a Nyström matrix; the adjoint is taken in the weighted inner product."""
        W = grid.weights
        omega = self.omega_matrix(grid)
        return (omega.conj().T * W[None, :]) @ omega / W[:, None]

    def factorization_residual(self, theta_matrix: ndarray, grid: QuadratureGrid) -> float:
        """Max entry of Omega* Omega - Theta."""
        return float(np.abs(self.adjoint_product(grid) - theta_matrix).max())

    def mapping_residuals(self, triples: Sequence[EigenTriple],
                          grid: QuadratureGrid) -> Dict[str, float]:
        """max ||Omega psi_n - chi_n^N|| and max ||Omega^{-1} chi_n^N - psi_n|| over the triples."""
        forward, backward = 0.0, 0.0
        for t in triples:
            psi = t.sample_psi(grid)
            e = ModeFunction("N", t.n, grid.a).sample(grid)
            image = self.apply(psi)
            forward = max(forward, image.with_values(image.values - e.values).norm())
            back = self.apply_inverse(e)
            backward = max(backward, back.with_values(back.values - psi.values).norm())
        return {"omega": forward, "omega_inverse": backward}

    def hs_norms(self, grid: QuadratureGrid) -> Dict[str, float]:
        return {"L": hs_norm(self.L, grid), "M": hs_norm(self.M, grid)}


def l_kernel(alpha: float, a: float) -> BranchKernel:
    expr = (sp.I * alpha / (2 * a) * (Y - a * SGN)
            + (sp.exp(-sp.I * alpha * (Y + a)) - 1) / (2 * a))
    return _jump_kernel(expr, f"L(alpha={alpha})", hermitian=False)


def m_kernel(alpha: float, a: float) -> BranchKernel:
    s = np.sin(2.0 * alpha * a)
    cot = np.cos(2.0 * alpha * a) / s
    expr = (alpha * sp.exp(sp.I * alpha * (a - X)) / s
            - alpha / 2 * sp.exp(-sp.I * alpha * (X - Y)) * (cot - sp.I * SGN)
            - alpha * sp.exp(-sp.I * alpha * (X + Y)) / (2 * s))
    return _jump_kernel(expr, f"M(alpha={alpha})", hermitian=False)


def omega_kernels(alpha: float, a: float) -> SimilarityMaps:
    """
    Closed kernels of Omega = I + L and Omega^{-1} = I + M for c_+- = i alpha.

    Args:
        alpha (float): PT parameter.
        a (float): Half-width.

    Returns:
        SimilarityMaps: Jump kernels across y = x.

    Raises:
        DegeneratePairError: |sin(2 alpha a)| < 1e-10, the poles of M (alpha = k_n or 0).
    """
    s = np.sin(2.0 * alpha * a)
    if abs(s) < SINGULAR_TOL:
        n = int(round(abs(alpha) * 2.0 * a / np.pi))
        raise DegeneratePairError(
            f"sin(2 alpha a) = {s:.3e}: Omega is not invertible at alpha = k_{n}", n)
    return SimilarityMaps(l_kernel(alpha, a), m_kernel(alpha, a), alpha=alpha, a=a)


def omega_series(p: BoundaryParams, triples: Sequence[EigenTriple], N: int,
                 basis: Optional[Callable[[ndarray], ndarray]] = None) -> SimilarityMaps:
    """
    Rank-N expansions L_N = sum e_n phi_n* - e_n e_n* and M_N = sum psi_n e_n* - e_n e_n*.

    Args:
        p (BoundaryParams): Boundary data, any constants.
        triples (list of EigenTriple): Biorthonormalised, at least N of them.
        N (int): Truncation.
        basis (callable, optional): x -> (len(x), N) samples of an orthonormal family;
            chi_n^N by default.

    Returns:
        SimilarityMaps: With SeriesOperator parts.
    """
    triples = list(triples)
    if int(N) != N or N < 1 or len(triples) < N:
        raise InvalidArgumentError(
            f"need N >= 1 biorthonormal triples, got N={N}, {len(triples)} triples")
    N = int(N)
    triples = triples[:N]
    if any(t.multiplicity != 1 for t in triples):
        bad = next(t for t in triples if t.multiplicity != 1)
        raise DegeneratePairError(f"lambda = {bad.lam} is not simple", bad.n)
    indices = np.arange(N)
    e = basis if basis is not None else (lambda x: mode_matrix("N", indices, x, p.a))

    def sampled(attr):
        return lambda x: np.column_stack([getattr(t, attr)(np.asarray(x, dtype=float))
                                          * np.ones(np.size(x)) for t in triples])

    phis, psis = sampled("phi"), sampled("psi")
    ones = np.ones(N)
    L = SeriesOperator(lambda x: np.hstack([e(x), e(x)]), lambda x: np.hstack([phis(x), e(x)]),
                       np.concatenate([ones, -ones]), name=f"L_N[N={N}]")
    M = SeriesOperator(lambda x: np.hstack([psis(x), e(x)]), lambda x: np.hstack([e(x), e(x)]),
                       np.concatenate([ones, -ones]), name=f"M_N[N={N}]")
    return SimilarityMaps(L, M, a=p.a, basis="neumann" if basis is None else "custom",
                          triples=triples, basis_fn=e)


def series_hs_norm(maps: SimilarityMaps, panels: Optional[int] = None) -> float:
    """
    ||Omega_N - I||_HS = (sum ||phi_n - e_n||^2)^(1/2) for series maps, on a grid resolving mode N.
    """
    triples = maps.triples
    if triples is None:
        raise InvalidArgumentError("Hilbert-Schmidt tail needs series maps")
    N = len(triples)
    grid = make_grid(maps.a, panels or max(16, N), 16)
    E = maps.basis_fn(grid.nodes)
    total = 0.0
    for n, t in enumerate(triples):
        diff = t.phi(grid.nodes) - E[:, n]
        total += float(np.dot(grid.weights, np.abs(diff) ** 2))
    return float(np.sqrt(total))


@dataclass(frozen=True)
class SimilarOperatorH:
    """h f = -f'' + alpha^2 chi_0^N <chi_0^N, f> with Neumann conditions."""
    alpha: float
    a: float

    def eigenvalue(self, n: int) -> float:
        return self.alpha ** 2 if n == 0 else float(wavenumber(n, self.a)) ** 2

    def spectrum(self, count: int) -> List[float]:
        """Eigenvalues of chi_0^N, ..., chi_{count-1}^N in index order."""
        return [self.eigenvalue(n) for n in range(count)]

    def apply_mode(self, n: int) -> Callable[[ndarray], ndarray]:
        """h chi_n^N, from the analytic second derivative."""
        value = self.eigenvalue(n)
        return lambda x: value * chi("N", n, x, self.a)

    def apply(self, f: SampledFunction, n_modes: Optional[int] = None) -> SampledFunction:
        """
        Spectral action sum mu_n <chi_n^N, f> chi_n^N over the first n_modes modes.

        The default, a sixth of the node count, keeps every mode resolved by the panels.
        """
        n_modes = n_modes or f.grid.size // 6
        modes = mode_matrix("N", np.arange(n_modes), f.grid.nodes, self.a)
        coefficients = modes.T @ (f.grid.weights * f.values)
        mu = np.array(self.spectrum(n_modes))
        return f.with_values(modes @ (mu * coefficients))

    def form(self, psi: SampledFunction) -> float:
        """t_h[psi] = ||psi'||^2 + alpha^2 |<chi_0^N, psi>|^2."""
        if psi.derivative is None:
            raise InvalidArgumentError("the form needs derivative samples")
        grid = psi.grid
        gradient = float(np.dot(grid.weights, np.abs(psi.derivative) ** 2))
        mean = np.dot(grid.weights, psi.values) / np.sqrt(2.0 * self.a)
        return gradient + self.alpha ** 2 * float(abs(mean) ** 2)

    def galerkin_matrix(self, size: int) -> ndarray:
        return np.diag(self.spectrum(size)).astype(float)


def similar_operator(alpha: float, a: float) -> SimilarOperatorH:
    if not a > 0:
        raise InvalidArgumentError(f"half-width must be positive, got {a}")
    return SimilarOperatorH(float(alpha), float(a))


def _form_factor(u: SampledFunction, K: BranchKernel):
    """Values, derivative and endpoint values of u + K u."""
    if u.derivative is None:
        raise InvalidArgumentError("the form needs derivative samples")
    Ku = apply_kernel(K, u)
    dKu = apply_kernel_derivative(K, u)
    ends = apply_kernel_at(K, u, [-u.grid.a, u.grid.a])
    lo, hi = u.boundary_values()
    return (u.values + Ku.values, u.derivative + dKu.values,
            np.array([lo + ends[0], hi + ends[1]]))


def _t_h_matrix(us: Sequence[SampledFunction], vs: Sequence[SampledFunction],
                maps: SimilarityMaps, p: BoundaryParams) -> ndarray:
    if not isinstance(maps.L, BranchKernel) or not isinstance(maps.M, BranchKernel):
        raise InvalidArgumentError("the form of h needs closed kernels for L and M")
    L_star = maps.L.adjoint()
    left = [_form_factor(u, L_star) for u in us]
    right = [_form_factor(v, maps.M) for v in vs]
    w = us[0].grid.weights
    dF = np.array([f[1] for f in left])
    dG = np.array([g[1] for g in right])
    eF = np.array([f[2] for f in left])
    eG = np.array([g[2] for g in right])
    gradient = (dF.conj() * w[None, :]) @ dG.T
    boundary = (p.c_plus * np.outer(eF[:, 1].conj(), eG[:, 1])
                - p.c_minus * np.outer(eF[:, 0].conj(), eG[:, 0]))
    return gradient + boundary


def th_sesquilinear(u: SampledFunction, v: SampledFunction, maps: SimilarityMaps,
                    p: BoundaryParams) -> complex:
    """
    t_h(u, v) = t_H(u + L* u, v + M v).

    Args:
        u, v (SampledFunction): Samples with derivative samples.
        maps (SimilarityMaps): Closed kernels L, M.
        p (BoundaryParams): Boundary constants of H.

    Returns:
        complex: The form value; derivatives of L* u and M v carry the jumps of the kernels.
    """
    return complex(_t_h_matrix([u], [v], maps, p)[0, 0])


def th_form_general(psi: SampledFunction, maps: SimilarityMaps, p: BoundaryParams) -> complex:
    """
    t_h[psi] from the similarity maps, with the c_+- boundary products.

    For c_+- = i alpha it reduces to ||psi'||^2 + alpha^2 |<chi_0^N, psi>|^2.
    """
    return th_sesquilinear(psi, psi, maps, p)


def similar_galerkin_matrix(maps: SimilarityMaps, p: BoundaryParams, size: int,
                            grid: QuadratureGrid) -> ndarray:
    """[t_h(chi_m^N, chi_n^N)] for m, n < size; diagonal {alpha^2, k_n^2} when h is self-adjoint."""
    modes = [ModeFunction("N", n, grid.a).sample(grid) for n in range(size)]
    return _t_h_matrix(modes, modes, maps, p)


def intertwining_residual(maps: SimilarityMaps, h: SimilarOperatorH, triples: Sequence[EigenTriple],
                          grid: QuadratureGrid, weights: Optional[ndarray] = None) -> float:
    """||Omega H f - h Omega f|| for f = sum w_n psi_n, with H acting spectrally."""
    w = np.ones(len(triples)) if weights is None else weights
    w = np.asarray(w, dtype=complex)
    psis = [t.sample_psi(grid) for t in triples]
    f = psis[0].with_values(sum(w[n] * psis[n].values for n in range(w.size)))
    Hf = f.with_values(sum(w[n] * triples[n].lam * psis[n].values for n in range(w.size)))
    lhs = maps.apply(Hf)
    rhs = h.apply(maps.apply(f), n_modes=max(len(triples) + 8, 16))
    return lhs.with_values(lhs.values - rhs.values).norm()


def _bc_matrix(p: BoundaryParams, l: complex) -> ndarray:
    """Boundary conditions on A cos(l u) + B sin(l u)/l, u = x + a, as a 2x2 matrix."""
    u = 2.0 * p.a
    return np.array([
        [p.c_minus, 1.0],
        [-(l ** 2) * _sin_over(l, u) + p.c_plus * np.cos(l * u),
         np.cos(l * u) + p.c_plus * _sin_over(l, u)],
    ], dtype=complex)


def geometric_multiplicity(p: BoundaryParams, lam: complex, tol: float = 1e-8) -> int:
    """Nullity of the boundary-condition matrix at lambda."""
    s = np.linalg.svd(_bc_matrix(p, complex(np.sqrt(complex(lam)))), compute_uv=False)
    return int(np.sum(s <= tol * max(1.0, s[0])))


def jordan_vector(t: EigenTriple) -> Dict[str, Callable[[ndarray], ndarray]]:
    """
    Generalised eigenvector d psi_hat / d lambda = (1/2l) d psi_hat / dl and its x-derivative.

    At a double root it lies in the domain of H and satisfies (H - lambda) v = psi_hat.
    """
    a, c = t.params.a, t.params.c_minus
    l, s = t.l, t.prefactor

    def value(x):
        u = np.asarray(x, dtype=float) + a
        dl = -u * np.sin(l * u) - c * (u * np.cos(l * u) / l - np.sin(l * u) / l ** 2)
        return s * dl / (2.0 * l)

    def slope(x):
        u = np.asarray(x, dtype=float) + a
        dl = -np.sin(l * u) - l * u * np.cos(l * u) + c * u * np.sin(l * u)
        return s * dl / (2.0 * l)

    return {"value": value, "slope": slope}


def degeneracy_report(alpha: float, a: float,
                      grid: Optional[QuadratureGrid] = None) -> Dict[str, Any]:
    """
    Multiplicities of H and h at lambda = k_m^2 when alpha = k_m.

    Args:
        alpha (float): Must equal some k_m, m >= 1, within 1e-8.
        a (float): Half-width.
        grid (QuadratureGrid, optional): Grid for the pairing <phi, psi_hat> of the double root.

    Returns:
        dict: JSON-ready report with the H and h multiplicities and the Jordan chain residuals.

    Raises:
        InvalidArgumentError: alpha is not a degeneracy point.
    """
    m = int(round(abs(alpha) * 2.0 * a / np.pi))
    if m < 1 or abs(abs(alpha) - wavenumber(m, a)) > DEGENERACY_MATCH:
        raise InvalidArgumentError(f"alpha = {alpha} is not a Neumann wavenumber k_m")
    grid = grid or make_grid(a)
    km2 = float(wavenumber(m, a)) ** 2
    p = PTParams(alpha, 0.0, a).boundary()
    found = find_eigenvalues_certified(p, m + 1).triples
    double = min(found, key=lambda t: abs(t.lam - km2))
    if double.multiplicity != 2 or abs(double.lam - km2) > 1e-6 * (1.0 + km2):
        logger.warning("expected a double root at %g, found %s (multiplicity %d)",
                       km2, double.lam, double.multiplicity)

    exact = replace(double, l=complex(wavenumber(m, a)), lam=complex(km2))
    chain = jordan_vector(exact)
    right = chain["slope"](a) + p.c_plus * chain["value"](a)
    left = chain["slope"](-a) + p.c_minus * chain["value"](-a)
    pairing = inner_product(exact.sample_phi(grid),
                            SampledFunction.from_callable(grid, exact.psi_hat))

    h = similar_operator(alpha, a)
    h_vectors = [n for n in range(m + 2) if abs(h.eigenvalue(n) - km2) <= 1e-10 * (1.0 + km2)]
    return {
        "alpha": alpha,
        "a": a,
        "eigenvalue": km2,
        "H": {
            "lambda": [double.lam.real, double.lam.imag],
            "algebraic_multiplicity": double.multiplicity,
            "geometric_multiplicity": geometric_multiplicity(p, km2),
            "jordan_boundary_residuals": [float(abs(left)), float(abs(right))],
            "pairing": float(abs(pairing)),
        },
        "h": {
            "eigenfunctions": [f"chi_{n}^N" for n in h_vectors],
            "geometric_multiplicity": len(h_vectors),
        },
        "omega_invertible": False,
    }


def similarity_report(alpha: float, a: float, grid: QuadratureGrid,
                      n_test: int = 10) -> Dict[str, Any]:
    """
    JSON-ready summary {omega_residuals, factorization_residual, h_spectrum, degeneracy}.

    The Galerkin block of h on the first GALERKIN_SIZE Neumann modes is checked for being diagonal,
    real and Hermitian, and its eigenvalues are compared with the roots of Phi.
    """
    maps = omega_kernels(alpha, a)
    p = PTParams(alpha, 0.0, a).boundary()
    triples = biorthonormalize(find_eigenvalues(p, n_test))[:n_test + 1]
    theta = metric_constant(alpha, a).theta_matrix(grid)
    h = similar_operator(alpha, a)
    galerkin = similar_galerkin_matrix(maps, p, GALERKIN_SIZE, grid)
    count = min(len(triples), GALERKIN_SIZE)
    eigenvalues = np.sort_complex(eigvals(galerkin))[:count]
    roots = np.array([t.lam for t in triples[:count]])
    diagonal_error = np.abs(np.diag(galerkin) - h.spectrum(GALERKIN_SIZE)).max()
    return {
        "alpha": alpha,
        "a": a,
        "omega_residuals": maps.mapping_residuals(triples, grid),
        "composition_residual": maps.composition_residual(grid),
        "lm_identity_residual": maps.lm_identity_residual(grid),
        "factorization_residual": maps.factorization_residual(theta, grid),
        "galerkin_offdiagonal": float(np.abs(galerkin - np.diag(np.diag(galerkin))).max()),
        "galerkin_spectrum_error": float(diagonal_error),
        "galerkin_eigenvalue_error": float(np.abs(eigenvalues - roots).max()),
        "galerkin_hermitian_residual": float(np.abs(galerkin - galerkin.conj().T).max()),
        "galerkin_imaginary": float(np.abs(galerkin.imag).max()),
        "h_spectrum": h.spectrum(n_test),
        "hs_norms": maps.hs_norms(grid),
        "degeneracy": None,
    }
