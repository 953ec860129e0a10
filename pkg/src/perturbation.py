# src/perturbation.py
"""
perturbation.py: A module that treats H + V for bounded potentials V and coefficients rho.

H + V is represented by its finite section in the Neumann basis: with t_H the form of H,

    A_mn = k_n^2 delta_mn + c_+ chi_m(a) chi_n(a) - c_- chi_m(-a) chi_n(-a) + <chi_m, V chi_n>.

Eigenfunctions of H do not satisfy the Neumann conditions, so their cosine coefficients decay like
n^-2 and the plain section converges slowly. Adding the two quadratics b_+ = (x+a)^2/(4a) and
b_- = -(x-a)^2/(4a) (unit slope at one end, zero slope at the other) to the basis turns the
problem into A xi = lambda B xi with a Gram matrix B and makes the eigenvalues converge fast. The
map Omega_V : xi_n -> e_n is defined on the plain section, where it is the inverse of the matrix of
right eigenvectors.

The Liouville transform maps -(rho psi')' = lambda psi with rho psi'(+-a) + c_+- psi(+-a) = 0 onto
-phi'' + W phi = lambda phi on a symmetric interval, so the same Galerkin path applies. A
second-order finite-volume discretisation with Richardson extrapolation serves as an independent
oracle for both.

Example usage:

    from src.perturbation import galerkin_matrix, named_potential, omega_v
    from src.spectrum import PTParams

    p = PTParams(0.5, 0.0, 1.5707963267948966).boundary()
    system = galerkin_matrix(p, named_potential("sin3"), 40)
    print(system.eigenvalues[:4])
    print(omega_v(system).shape)
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

import numpy as np
import pandas as pd
import sympy as sp
from numpy import ndarray
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.linalg import eig
from scipy.sparse import diags
from scipy.sparse.linalg import eigs

from src.errors import DegenerateSystemError, InvalidArgumentError, PreconditionError
from src.laplacian import mode_matrix, wavenumber
from src.numerics import X, QuadratureGrid, make_grid
from src.spectrum import BoundaryParams

logger = logging.getLogger(__name__)

# constants
MIN_DIMENSION = 4
COLLISION_TOL = 1e-9
BISECTION_STEPS = 200
FD_CELLS = 2000


@dataclass(frozen=True)
class Potential:
    """A bounded potential V(x), vectorised over numpy arrays."""
    name: str
    func: Callable[[ndarray], ndarray]
    is_zero: bool = False

    def __call__(self, x) -> ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.func(x), dtype=complex) * np.ones(x.shape)

    @classmethod
    def zero(cls) -> "Potential":
        return cls("zero", lambda x: np.zeros_like(x), is_zero=True)

    @classmethod
    def constant(cls, value: complex) -> "Potential":
        return cls(f"constant({value})", lambda x: np.full(x.shape, value, dtype=complex),
                   is_zero=value == 0)

    @classmethod
    def from_expression(cls, text: str) -> "Potential":
        """Any sympy expression in x, e.g. "x**2" or "sin(3*x)"."""
        try:
            expr = sp.sympify(text, locals={"x": X})
        except (sp.SympifyError, TypeError) as err:
            raise InvalidArgumentError(f"cannot parse potential {text!r}: {err}") from err
        if expr.free_symbols - {X}:
            raise InvalidArgumentError(f"potential {text!r} depends on more than x")
        fn = sp.lambdify(X, expr, modules="numpy")
        return cls(str(expr), fn, is_zero=expr == 0)

    @classmethod
    def from_csv(cls, path) -> "Potential":
        """Tabulated `x,value` samples, interpolated by a cubic spline."""
        frame = _read_table(path)
        spline = CubicSpline(frame["x"].to_numpy(), frame["value"].to_numpy())
        return cls(Path(path).name, spline)


def named_potential(spec: Union[str, complex, None]) -> Potential:
    """
    Resolve "zero", "constant:<v>", "linear", "sin3", a sympy expression in x, or a CSV path.

    Args:
        spec: Name, expression, number or path.

    Returns:
        Potential: The sampler.
    """
    if spec is None:
        return Potential.zero()
    if isinstance(spec, (int, float, complex)):
        return Potential.constant(complex(spec))
    text = str(spec).strip()
    if text in ("", "0", "zero"):
        return Potential.zero()
    if text.startswith("constant:"):
        return Potential.constant(complex(text.split(":", 1)[1].replace(" ", "").replace("i", "j")))
    if text == "linear":
        return Potential("linear", lambda x: x)
    if text == "sin3":
        return Potential("sin3", lambda x: np.sin(3.0 * x))
    if text.endswith(".csv"):
        return Potential.from_csv(text)
    return Potential.from_expression(text)


def _read_table(path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as err:
        raise InvalidArgumentError(f"cannot read table {path}: {err}") from err
    if not {"x", "value"} <= set(frame.columns):
        raise InvalidArgumentError(f"{path} needs columns x,value[,d1,d2]")
    return frame.sort_values("x")


@dataclass
class GalerkinSystem:
    """Finite section of H + V, with biorthonormal eigenvectors (Y^H B Xi = I)."""
    params: BoundaryParams
    dimension: int
    matrix: ndarray
    gram: ndarray
    enriched: bool
    potential: Potential
    eigenvalues: ndarray
    right: ndarray
    left: ndarray

    def biorthogonality_residual(self) -> float:
        product = self.left.conj().T @ self.gram @ self.right
        return float(np.abs(product - np.eye(product.shape[0])).max())

    def lowest(self, count: int) -> ndarray:
        return self.eigenvalues[:count]


def _bump(x: ndarray, a: float, side: int) -> ndarray:
    return side * (x + side * a) ** 2 / (4.0 * a)


def _bump_slope(x: ndarray, a: float, side: int) -> ndarray:
    return (x + side * a) / (2.0 * a)


def _basis(a: float, M: int, enrich: bool):
    indices = np.arange(M)

    def values(x):
        E = mode_matrix("N", indices, x, a)
        if not enrich:
            return E
        return np.column_stack([E, _bump(x, a, 1), _bump(x, a, -1)])

    def slopes(x):
        E = mode_matrix("N", indices, x, a, derivative=True)
        if not enrich:
            return E
        return np.column_stack([E, _bump_slope(x, a, 1), _bump_slope(x, a, -1)])

    return values, slopes


def galerkin_grid(a: float, M: int) -> QuadratureGrid:
    """Quadrature that resolves products of the first M Neumann modes."""
    return make_grid(a, max(16, M // 2), 16)


def galerkin_matrix(p: BoundaryParams, V: Optional[Potential] = None, M: int = 40,
                    grid: Optional[QuadratureGrid] = None, enrich: bool = False) -> GalerkinSystem:
    """
    Finite section of H + V in the Neumann basis chi_0^N, ..., chi_{M-1}^N.

    Args:
        p (BoundaryParams): Boundary data.
        V (Potential, optional): Bounded potential; zero by default.
        M (int): Number of Neumann modes, M >= 4.
        grid (QuadratureGrid, optional): Quadrature for the potential (and enrichment) entries.
        enrich (bool): Add the two boundary quadratics and solve A xi = lambda B xi.

    Returns:
        GalerkinSystem: Eigenvalues sorted by (Re, Im), right vectors with unit n-th coordinate.
    """
    if int(M) != M or M < MIN_DIMENSION:
        raise InvalidArgumentError(f"dimension must be an integer >= {MIN_DIMENSION}, got {M}")
    M = int(M)
    V = V if V is not None else Potential.zero()
    a = p.a
    grid = grid or galerkin_grid(a, M)
    values, slopes = _basis(a, M, enrich)
    E = values(grid.nodes)
    w = grid.weights
    ends = values(np.array([-a, a]))
    boundary = p.c_plus * np.outer(ends[1], ends[1]) - p.c_minus * np.outer(ends[0], ends[0])

    if enrich:
        D = slopes(grid.nodes)
        stiffness = (D.T * w[None, :]) @ D
        gram = (E.T * w[None, :]) @ E
    else:
        stiffness = np.diag(wavenumber(np.arange(M), a) ** 2)
        gram = np.eye(M)
    A = stiffness.astype(complex) + boundary
    if not V.is_zero:
        A = A + (E.T * (w * V(grid.nodes))[None, :]) @ E

    if enrich:
        lam, vl, vr = eig(A, gram, left=True, right=True)
    else:
        lam, vl, vr = eig(A, left=True, right=True)
    order = np.lexsort((lam.imag, lam.real))
    lam, vl, vr = lam[order], vl[:, order], vr[:, order]

    for n in range(lam.size):
        pivot = vr[n, n] if n < M else 0.0
        if abs(pivot) > 1e-8 * np.linalg.norm(vr[:, n]):
            vr[:, n] /= pivot
        pairing = vl[:, n].conj() @ gram @ vr[:, n]
        if abs(pairing) < 1e-14:
            logger.warning("left/right pairing of eigenvalue %s vanishes", lam[n])
            continue
        vl[:, n] /= np.conj(pairing)
    logger.debug("galerkin section of size %d (enriched=%s), lowest %s", A.shape[0], enrich,
                 lam[:3])
    return GalerkinSystem(p, M, A, gram, enrich, V, lam, vr, vl)


def _check_collisions(lam: ndarray) -> None:
    gaps = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(gaps, np.inf)
    i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
    if gaps[i, j] <= COLLISION_TOL:
        raise DegenerateSystemError(f"eigenvalues {lam[i]} and {lam[j]} collide")


def omega_v(system: GalerkinSystem) -> ndarray:
    """
    Omega_V = Xi^{-1} in the Neumann basis, so that Omega_V xi_n = e_n.

    Raises:
        DegenerateSystemError: two Galerkin eigenvalues are closer than 1e-9.
        InvalidArgumentError: the system is enriched (the map is defined on the Neumann section).
    """
    if system.enriched:
        raise InvalidArgumentError("Omega_V needs the plain Neumann section (enrich=False)")
    _check_collisions(system.eigenvalues)
    return system.left.conj().T


def omega_v_hs(system: GalerkinSystem) -> float:
    """||Omega_V - I||_HS, the Frobenius norm in the orthonormal Neumann coordinates."""
    omega = omega_v(system)
    return float(np.linalg.norm(omega - np.eye(omega.shape[0])))


def omega_v_stabilization(p: BoundaryParams, V: Optional[Potential], M: int) -> Dict[str, Any]:
    """HS norms of Omega_V - I at M and 2M and their relative change."""
    first = omega_v_hs(galerkin_matrix(p, V, M))
    second = omega_v_hs(galerkin_matrix(p, V, 2 * M))
    change = abs(second - first) / max(second, np.finfo(float).tiny)
    return {"M": M, "hs_norm_M": first, "hs_norm_2M": second, "relative_change": change}


def asymptotic_gap(system: GalerkinSystem) -> ndarray:
    """
    lambda_n - k_n^2 for n <= M/2; tends to (c_+ - c_-)/a.

    Raises:
        PreconditionError: the system carries a potential.
    """
    if not system.potential.is_zero:
        raise PreconditionError("the asymptotic gap is defined for V = 0")
    count = system.dimension // 2 + 1
    n = np.arange(count)
    return system.eigenvalues[:count] - wavenumber(n, system.params.a) ** 2


def galerkin_projection(K_matrix: ndarray, grid: QuadratureGrid, M: int) -> ndarray:
    """[<chi_m, (I + K) chi_n>] for m, n < M from a Nyström matrix of K on `grid`."""
    E = mode_matrix("N", np.arange(M), grid.nodes, grid.a)
    return np.eye(M) + (E.T * grid.weights[None, :]) @ K_matrix @ E


@dataclass(frozen=True)
class RhoProfile:
    """Coefficient rho with its first two derivatives."""
    name: str
    rho: Callable[[ndarray], ndarray]
    d1: Callable[[ndarray], ndarray]
    d2: Callable[[ndarray], ndarray]

    @classmethod
    def constant(cls, value: float) -> "RhoProfile":
        return cls(f"constant({value})", lambda x: np.full(np.shape(x), float(value)),
                   lambda x: np.zeros(np.shape(x)), lambda x: np.zeros(np.shape(x)))

    @classmethod
    def from_expression(cls, text: str) -> "RhoProfile":
        try:
            expr = sp.sympify(text, locals={"x": X})
        except (sp.SympifyError, TypeError) as err:
            raise InvalidArgumentError(f"cannot parse rho {text!r}: {err}") from err

        def vectorised(e):
            fn = sp.lambdify(X, e, modules="numpy")
            return lambda x: (np.asarray(fn(np.asarray(x, dtype=float)), dtype=float)
                              * np.ones(np.shape(x)))

        return cls(str(expr), vectorised(expr), vectorised(sp.diff(expr, X)),
                   vectorised(sp.diff(expr, X, 2)))

    @classmethod
    def from_csv(cls, path) -> "RhoProfile":
        """`x,value[,d1,d2]` samples; missing derivatives come from the cubic spline."""
        frame = _read_table(path)
        x = frame["x"].to_numpy()
        spline = CubicSpline(x, frame["value"].to_numpy())
        d1 = CubicSpline(x, frame["d1"].to_numpy()) if "d1" in frame else spline.derivative(1)
        d2 = CubicSpline(x, frame["d2"].to_numpy()) if "d2" in frame else spline.derivative(2)
        return cls(Path(path).name, spline, d1, d2)


@dataclass
class LiouvilleData:
    """-(rho psi')' problem rewritten as -phi'' + W phi on (-half_width, half_width)."""
    profile: RhoProfile
    params: BoundaryParams
    f: Callable[[ndarray], ndarray]
    f_inverse: Callable[[ndarray], ndarray]
    f_minus: float
    f_plus: float
    c_minus: complex
    c_plus: complex

    @property
    def half_width(self) -> float:
        return 0.5 * (self.f_plus - self.f_minus)

    @property
    def centre(self) -> float:
        return 0.5 * (self.f_plus + self.f_minus)

    def w_original(self, x) -> ndarray:
        """W o f, as a function of the original variable."""
        x = np.asarray(x, dtype=float)
        r, r1, r2 = self.profile.rho(x), self.profile.d1(x), self.profile.d2(x)
        return 0.25 * r2 - r1 ** 2 / (16.0 * r)

    def potential(self) -> Potential:
        """W on the recentred interval."""
        return Potential(f"W[{self.profile.name}]",
                         lambda s: self.w_original(self.f_inverse(np.asarray(s) + self.centre)))


def _gl_from_zero(func: Callable[[ndarray], ndarray], x: ndarray, panels: int = 8,
                  order: int = 24) -> ndarray:
    """int_0^x func for every entry of x, by a composite Gauss-Legendre rule on [0, x]."""
    t, w = leggauss(order)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    total = np.zeros(flat.size)
    for k in range(panels):
        lo, hi = flat * k / panels, flat * (k + 1) / panels
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        nodes = mid[:, None] + half[:, None] * t[None, :]
        total += half * np.sum(w[None, :] * func(nodes), axis=1)
    return total.reshape(x.shape)


def liouville_transform(profile: RhoProfile, p: BoundaryParams, bound: float) -> LiouvilleData:
    """
    Liouville change of variables t = f(x) = int_0^x rho^{-1/2}, psi = rho^{-1/4} phi.

    The boundary conditions rho psi' + c psi = 0 become phi' + c~ phi = 0 with
    c~ = (c - rho'/4) / sqrt(rho) at the end points, and W = rho''/4 - rho'^2/(16 rho).

    Args:
        profile (RhoProfile): rho and its derivatives.
        p (BoundaryParams): Interval and Robin constants of the rho-problem.
        bound (float): C with 1/C <= rho <= C.

    Returns:
        LiouvilleData: The transformed problem.

    Raises:
        InvalidArgumentError: rho leaves [1/C, C] at some sample.
    """
    a = p.a
    samples = np.linspace(-a, a, 2001)
    r = profile.rho(samples)
    if not bound >= 1 or np.any(r < 1.0 / bound) or np.any(r > bound):
        raise InvalidArgumentError(f"rho leaves [1/{bound}, {bound}] on [-{a}, {a}]")

    def f(x):
        return _gl_from_zero(lambda y: 1.0 / np.sqrt(profile.rho(y)), x)

    f_minus, f_plus = float(f(np.array(-a))), float(f(np.array(a)))

    def f_inverse(t):
        t = np.asarray(t, dtype=float)
        lo, hi = np.full(t.shape, -a), np.full(t.shape, a)
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            below = f(mid) < t
            lo, hi = np.where(below, mid, lo), np.where(below, hi, mid)
            if np.all(hi - lo <= 4e-16 * a):
                break
        return 0.5 * (lo + hi)

    ends = np.array([-a, a])
    r, r1 = profile.rho(ends), profile.d1(ends)
    c_t = (np.array([p.c_minus, p.c_plus]) - r1 / 4.0) / np.sqrt(r)
    return LiouvilleData(profile, p, f, f_inverse, f_minus, f_plus,
                         complex(c_t[0]), complex(c_t[1]))


def transformed_params(data: LiouvilleData) -> BoundaryParams:
    """Boundary data of the transformed problem on (-half_width, half_width)."""
    return BoundaryParams(data.half_width, data.c_minus, data.c_plus)


def _fd_matrix(p: BoundaryParams, V: Potential, profile: Optional[RhoProfile], cells: int):
    a = p.a
    h = 2.0 * a / cells
    centres = -a + (np.arange(cells) + 0.5) * h
    faces = -a + np.arange(cells + 1) * h
    rho = profile.rho(faces) if profile is not None else np.ones(cells + 1)
    inner = rho[1:-1] / h ** 2
    main = np.zeros(cells, dtype=complex)
    main[:-1] += inner
    main[1:] += inner
    # boundary fluxes rho psi' = -c psi, with psi at the wall extrapolated by half a cell
    main[0] -= p.c_minus / (h * (1.0 - h * p.c_minus / (2.0 * rho[0])))
    main[-1] += p.c_plus / (h * (1.0 + h * p.c_plus / (2.0 * rho[-1])))
    main += V(centres)
    return diags([-inner, main, -inner], [-1, 0, 1], format="csc")


def _fd_eigenvalues(p, V, profile, cells, count, shift):
    A = _fd_matrix(p, V, profile, cells)
    lam = eigs(A, k=min(count + 4, cells - 2), sigma=shift, which="LM", return_eigenvectors=False)
    return lam[np.lexsort((lam.imag, lam.real))][:count]


def finite_difference_spectrum(p: BoundaryParams, V: Optional[Potential] = None,
                               profile: Optional[RhoProfile] = None, count: int = 8,
                               cells: int = FD_CELLS) -> ndarray:
    """
    Lowest eigenvalues of -(rho psi')' + V psi with rho psi' + c psi = 0, by finite volumes.

    Args:
        p (BoundaryParams): Interval and Robin constants.
        V (Potential, optional): Potential on the cell centres.
        profile (RhoProfile, optional): Coefficient rho (1 when omitted).
        count (int): Number of eigenvalues.
        cells (int): Cells of the coarse mesh; the result extrapolates `cells` and 2 `cells`.

    Returns:
        ndarray: Richardson-extrapolated eigenvalues sorted by (Re, Im).
    """
    V = V if V is not None else Potential.zero()
    scale = abs(p.c_minus) + abs(p.c_plus) + 1.0
    r_min = 1.0
    if profile is not None:
        r_min = float(profile.rho(np.linspace(-p.a, p.a, 257)).min())
    v_min = float(np.real(V(np.linspace(-p.a, p.a, 257))).min())
    shift = -(scale ** 2) / min(r_min, 1.0) + min(v_min, 0.0) - 1.0
    coarse = _fd_eigenvalues(p, V, profile, cells, count, shift)
    fine = _fd_eigenvalues(p, V, profile, 2 * cells, count, shift)
    return (4.0 * fine - coarse) / 3.0
