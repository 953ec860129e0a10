# src/laplacian.py
"""
laplacian.py: A module that implements the self-adjoint reference objects on (-a, a).

This module contains the Dirichlet and Neumann eigenbases chi_n^D, chi_n^N with k_n = n pi / (2a),
their Green's functions (resolvent kernels) for k^2 off the spectrum, the k = 0 Dirichlet kernel,
the reduced Neumann resolvent that annihilates constants, and the truncated series operators
J^D, J^N = sum C_n^2 chi_n <chi_n, .> used to assemble metric operators.

Conventions: chi_0^D is identically zero and chi_0^N = 1/sqrt(2a). With p = -i d/dx the momentum
identities read i p chi_n^D = k_n chi_n^N and i p chi_n^N = -k_n chi_n^D.

Example usage:

    from src.laplacian import chi, green, j_operator, CoefficientSequence
    from src.numerics import make_grid

    value = chi("N", 0, 0.3, 1.0)          # 1/sqrt(2)
    g = green("D", 1.0, 0.0, 0.0, 1.0)     # sin(1)**2 / sin(2)

    grid = make_grid(1.0)
    JN = j_operator("N", CoefficientSequence.unit(), 200, grid)
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy import ndarray

from src.errors import InvalidArgumentError, SpectralPointError
from src.numerics import KernelOperator, QuadratureGrid, SampledFunction

logger = logging.getLogger(__name__)

# |sin(2ka)| below this means k^2 is treated as a Neumann/Dirichlet eigenvalue
SPECTRAL_GUARD = 1e-12


def wavenumber(n, a: float):
    """k_n = n pi / (2a)."""
    return np.asarray(n) * np.pi / (2.0 * a)


def _check_kind(kind: str) -> str:
    kind = str(kind).upper()
    if kind not in ("D", "N"):
        raise InvalidArgumentError(f"kind must be 'D' or 'N', got {kind!r}")
    return kind


def chi(kind: str, n: int, x, a: float):
    """
    Dirichlet/Neumann eigenfunction chi_n^kind(x).

    Args:
        kind (str): "D" or "N".
        n (int): Mode index, n >= 0.
        x: Point(s) in [-a, a].
        a (float): Half-width.

    Returns:
        Real value(s): (1/sqrt a) sin k_n(x+a), (1/sqrt a) cos k_n(x+a), or 1/sqrt(2a) for N, n = 0.
    """
    kind = _check_kind(kind)
    if n < 0:
        raise InvalidArgumentError(f"mode index must be non-negative, got {n}")
    x = np.asarray(x, dtype=float)
    if kind == "D":
        return np.sin(wavenumber(n, a) * (x + a)) / np.sqrt(a)
    if n == 0:
        return np.full(x.shape, 1.0 / np.sqrt(2.0 * a))[()]
    return np.cos(wavenumber(n, a) * (x + a)) / np.sqrt(a)


def chi_prime(kind: str, n: int, x, a: float):
    """Analytic x-derivative of chi_n^kind."""
    kind = _check_kind(kind)
    x = np.asarray(x, dtype=float)
    k = wavenumber(n, a)
    if kind == "D":
        return k * np.cos(k * (x + a)) / np.sqrt(a)
    return -k * np.sin(k * (x + a)) / np.sqrt(a)


def mode_matrix(kind: str, indices: Sequence[int], x, a: float,
                derivative: bool = False) -> ndarray:
    """Samples chi_n(x_i) (or their derivatives) as a (len(x), len(indices)) matrix."""
    kind = _check_kind(kind)
    x = np.asarray(x, dtype=float).ravel()
    n = np.asarray(indices, dtype=float)
    k = wavenumber(n, a)[None, :]
    u = (x + a)[:, None]
    if kind == "D":
        out = k * np.cos(k * u) if derivative else np.sin(k * u)
        return out / np.sqrt(a)
    out = -k * np.sin(k * u) if derivative else np.cos(k * u)
    out = out / np.sqrt(a)
    if not derivative:
        out[:, n == 0] = 1.0 / np.sqrt(2.0 * a)
    return out


@dataclass(frozen=True)
class ModeFunction:
    """chi_n^kind on (-a, a)."""
    kind: str
    n: int
    a: float

    @property
    def k(self) -> float:
        return float(wavenumber(self.n, self.a))

    def __call__(self, x):
        return chi(self.kind, self.n, x, self.a)

    def derivative(self, x):
        return chi_prime(self.kind, self.n, x, self.a)

    def sample(self, grid: QuadratureGrid) -> SampledFunction:
        return SampledFunction.from_callable(grid, self, self.derivative)


@dataclass(frozen=True)
class CoefficientSequence:
    """Coefficients C_n^2 of a series operator with bounds 0 < m1 < C_n < m2."""
    squares: Callable[[ndarray], ndarray]
    m1: float
    m2: float
    name: str = "custom"

    def values(self, indices) -> ndarray:
        """C_n^2 at the given indices, checked against the bounds."""
        sq = np.asarray(self.squares(np.asarray(indices, dtype=float)), dtype=float)
        sq = sq * np.ones(np.shape(indices))
        c = np.sqrt(np.abs(sq))
        if np.any(sq <= 0) or np.any(c <= self.m1) or np.any(c >= self.m2):
            raise InvalidArgumentError(
                f"coefficients {self.name} leave ({self.m1}, {self.m2})")
        return sq

    @classmethod
    def unit(cls) -> "CoefficientSequence":
        return cls(lambda n: np.ones_like(n), 0.5, 2.0, "unit")

    @classmethod
    def cchoice(cls, alpha: float, a: float) -> "CoefficientSequence":
        """
        C_0^2 = 2|alpha| a / |sin 2 alpha a| and C_n^2 = k_n^2 / |k_n^2 - alpha^2|.

        Raises:
            InvalidArgumentError: alpha equals some k_n, where the sequence blows up.
        """
        n_hit = round(abs(alpha) * 2.0 * a / np.pi)
        if n_hit >= 1 and abs(abs(alpha) - wavenumber(n_hit, a)) < 1e-10:
            raise InvalidArgumentError(f"alpha = k_{n_hit}: C_{n_hit} is unbounded")

        def squares(n):
            n = np.asarray(n, dtype=float)
            k = wavenumber(n, a)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = k ** 2 / np.abs(k ** 2 - alpha ** 2)
                zero = 2.0 * abs(alpha) * a / abs(np.sin(2.0 * alpha * a)) if alpha != 0 else 1.0
            return np.where(n == 0, zero, out)

        # C_n -> 1 and every C_n with k_n > 2|alpha| lies in (1, sqrt(4/3)]
        head = squares(np.arange(0, int(np.ceil(4.0 * abs(alpha) * a / np.pi)) + 2))
        c = np.sqrt(head)
        return cls(squares, 0.5 * min(1.0, c.min()), 2.0 * max(np.sqrt(4.0 / 3.0), c.max()),
                    f"cchoice(alpha={alpha})")


def momentum_identity_check(n: int, a: float, grid: QuadratureGrid) -> Tuple[float, float]:
    """
    Residuals of i p chi_n^D = k_n chi_n^N and i p chi_n^N = -k_n chi_n^D with p = -i d/dx.

    Args:
        n (int): Mode index (n = 0 checks the constant mode only).
        a (float): Half-width.
        grid (QuadratureGrid): Quadrature for the L2 norms.

    Returns:
        (float, float): The two L2 residual norms, computed with analytic derivatives.
    """
    x = grid.nodes
    k = wavenumber(n, a)
    p_dirichlet = -1j * chi_prime("D", n, x, a)
    p_neumann = -1j * chi_prime("N", n, x, a)
    first = 1j * p_dirichlet - k * chi("N", n, x, a) if n > 0 else 1j * p_dirichlet
    second = 1j * p_neumann + k * chi("D", n, x, a)
    return (float(np.sqrt(np.dot(grid.weights, np.abs(first) ** 2))),
            float(np.sqrt(np.dot(grid.weights, np.abs(second) ** 2))))


def _guard(kind: str, k: complex, a: float) -> complex:
    if k == 0:
        raise InvalidArgumentError(
            "k = 0: use green_zero_dirichlet or green_neumann_reduced")
    s = np.sin(2.0 * k * a)
    if abs(s) <= SPECTRAL_GUARD:
        n = int(round((2.0 * k * a / np.pi).real))
        eigenvalue = float(wavenumber(n, a) ** 2)
        raise SpectralPointError(
            f"k^2 = {k ** 2} is the {kind}-eigenvalue k_{n}^2 = {eigenvalue}", eigenvalue)
    return s


def green(kind: str, k: complex, x, y, a: float):
    """
    Green's function of -Delta_kind - k^2 on (-a, a).

    Args:
        kind (str): "D" or "N".
        k (complex): Spectral parameter root, k^2 off the spectrum.
        x, y: Points (broadcast).
        a (float): Half-width.

    Returns:
        Complex value(s); symmetric in x and y.

    Raises:
        SpectralPointError: |sin 2ka| <= 1e-12; carries the nearest eigenvalue k_n^2.
    """
    kind = _check_kind(kind)
    k = complex(k)
    s = _guard(kind, k, a)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    if kind == "D":
        out = -np.sin(k * (lo + a)) * np.sin(k * (hi - a)) / (k * s)
    else:
        out = -np.cos(k * (lo + a)) * np.cos(k * (hi - a)) / (k * s)
    return out[()]


def green_zero_dirichlet(x, y, a: float):
    """Kernel (x+a)(a-y)/(2a) (x <= y) of the inverse Dirichlet Laplacian."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    return ((lo + a) * (a - hi) / (2.0 * a))[()]


def green_neumann_reduced(x, y, a: float):
    """Kernel (x+a)^2/(4a) + (y-a)^2/(4a) - a/3 (x <= y) of the reduced Neumann resolvent."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    return ((lo + a) ** 2 / (4.0 * a) + (hi - a) ** 2 / (4.0 * a) - a / 3.0)[()]


def green_kernel(kind: str, k: complex, a: float) -> KernelOperator:
    """Green's function as a kernel; the kink on the diagonal gets split panels."""
    kind = _check_kind(kind)
    _guard(kind, complex(k), a)
    return KernelOperator(lambda x, y: green(kind, k, x, y, a), jump_on_diagonal=True,
                          hermitian=complex(k ** 2).imag == 0, name=f"G_{kind}^{k}")


def green_zero_dirichlet_kernel(a: float) -> KernelOperator:
    return KernelOperator(lambda x, y: green_zero_dirichlet(x, y, a), jump_on_diagonal=True,
                          hermitian=True, name="G_D^0")


def green_neumann_reduced_kernel(a: float) -> KernelOperator:
    return KernelOperator(lambda x, y: green_neumann_reduced(x, y, a), jump_on_diagonal=True,
                          hermitian=True, name="G_N^perp")


class SeriesOperator(KernelOperator):
    """
    Truncated expansion sum_n c_n f_n <g_n, .> with smooth f_n, g_n.

    `left(x)` and `right(x)` return sample matrices of shape (len(x), N). The Nyström matrix is
    exact for the truncation: F diag(c) G^H W.
    """

    def __init__(self, left: Callable[[ndarray], ndarray], right: Callable[[ndarray], ndarray],
                 coefficients, name: str = "series", hermitian: bool = False,
                 left_derivative: Optional[Callable[[ndarray], ndarray]] = None):
        self.left = left
        self.right = right
        self.coefficients = np.asarray(coefficients, dtype=complex)
        self.left_derivative = left_derivative
        super().__init__(self._evaluate, hermitian=hermitian, name=name)

    @property
    def order(self) -> int:
        return self.coefficients.size

    def _evaluate(self, x: ndarray, y: ndarray) -> ndarray:
        shape = np.broadcast(x, y).shape
        xf, yf = (np.broadcast_to(v, shape).ravel() for v in (x, y))
        weighted = self.left(xf) * self.coefficients[None, :]
        values = np.sum(weighted * np.conj(self.right(yf)), axis=1)
        return values.reshape(shape)

    def node_values(self, grid: QuadratureGrid) -> ndarray:
        F = self.left(grid.nodes)
        G = self.right(grid.nodes)
        return (F * self.coefficients[None, :]) @ G.conj().T

    def matrix(self, grid: QuadratureGrid, method: Optional[str] = None) -> ndarray:
        key = (grid.key(), "series")
        if key not in self._matrices:
            self._matrices[key] = self.node_values(grid) * grid.weights[None, :]
        return self._matrices[key]

    def derivative_matrix(self, grid: QuadratureGrid) -> ndarray:
        """Matrix of f -> d/dx sum c_n f_n <g_n, f>, from the analytic derivatives of f_n."""
        if self.left_derivative is None:
            raise InvalidArgumentError(f"{self.name} carries no derivative of its left factors")
        F = self.left_derivative(grid.nodes)
        G = self.right(grid.nodes)
        return (F * self.coefficients[None, :]) @ G.conj().T * grid.weights[None, :]


def j_operator(kind: str, C: CoefficientSequence, N: int, grid: QuadratureGrid) -> SeriesOperator:
    """
    J^kind = sum_{n < N} C_n^2 chi_n^kind <chi_n^kind, .> materialised on the grid.

    Args:
        kind (str): "D" or "N".
        C (CoefficientSequence): Coefficients, bounds checked.
        N (int): Truncation, N >= 1; modes 0..N-1 (chi_0^D = 0 is skipped).
        grid (QuadratureGrid): Grid the matrix is cached on.

    Returns:
        SeriesOperator: Hermitian by construction.
    """
    kind = _check_kind(kind)
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"truncation must be a positive integer, got {N}")
    a = grid.a
    indices = np.arange(1 if kind == "D" else 0, int(N))
    coefficients = C.values(indices) if indices.size else np.zeros(0)
    op = SeriesOperator(
        lambda x: mode_matrix(kind, indices, x, a),
        lambda x: mode_matrix(kind, indices, x, a),
        coefficients,
        name=f"J^{kind}[{C.name}, N={N}]",
        hermitian=True,
        left_derivative=lambda x: mode_matrix(kind, indices, x, a, derivative=True),
    )
    op.kind = kind
    op.indices = indices
    op.matrix(grid)
    logger.debug("materialised %s with %d modes", op.name, indices.size)
    return op
