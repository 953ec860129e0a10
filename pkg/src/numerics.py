# src/numerics.py
"""
numerics.py: A module that discretises L2(-a, a) with composite Gauss-Legendre quadrature.

This module contains the quadrature grid, sampled functions, kernel operators and the Nyström
machinery the rest of the package builds on. Kernels of the metric and similarity operators carry
sgn(x - y) and |x - y| factors, so a row of the Nyström matrix whose node sits inside a panel gets
that panel re-integrated on two sub-panels split at the node; the sampled function is carried
across the cut by the panel's Legendre interpolant. Off the split panels the plain weights are used.

Matrix assembly itself is delegated to one of the strategies in `src/methods` (see
`utils.assembly_method`); all of them call `nystrom_row`/`row_corrections` from here and return the
same matrix.

Example usage:

    from src.numerics import make_grid, SampledFunction, KernelOperator, apply_kernel

    grid = make_grid(1.0, 16, 12)
    f = SampledFunction.from_callable(grid, lambda x: x ** 2)
    K = KernelOperator(lambda x, y: abs(x - y), jump_on_diagonal=True)
    Kf = apply_kernel(K, f)

    # Positivity of I + K on the weighted-symmetrised grid
    margin = min_symmetric_eigenvalue(K, grid)
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from numpy import ndarray
from numpy.polynomial.legendre import leggauss, legvander
from scipy.linalg import eigh

import src.utils as utils
from src.errors import InvalidArgumentError, PreconditionError

logger = logging.getLogger(__name__)

# symbols every closed-form kernel is written in
X, Y = sp.symbols("x y", real=True)

HERMITIAN_TOL = 1e-10


@lru_cache(maxsize=None)
def reference_rule(order: int) -> Tuple[ndarray, ndarray]:
    """Gauss-Legendre nodes and weights on (-1, 1)."""
    return leggauss(order)


@lru_cache(maxsize=None)
def _vandermonde(order: int) -> ndarray:
    return legvander(reference_rule(order)[0], order - 1)


def interpolation_matrix(order: int, t: ndarray) -> ndarray:
    """
    Matrix taking values at the `order` reference nodes to values of their interpolant at `t`.

    Args:
        order (int): Nodes per panel.
        t (ndarray): Reference coordinates in [-1, 1].

    Returns:
        ndarray: Shape (len(t), order).
    """
    vander = _vandermonde(order)
    return np.linalg.solve(vander.T, legvander(np.asarray(t, dtype=float), order - 1).T).T


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Composite Gauss-Legendre rule on (-a, a) with `order` nodes on each panel."""
    a: float
    panels: ndarray
    nodes: ndarray
    weights: ndarray
    order: int

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def n_panels(self) -> int:
        return len(self.panels)

    @property
    def edges(self) -> ndarray:
        return np.append(self.panels[:, 0], self.panels[-1, 1])

    def same_as(self, other: "QuadratureGrid") -> bool:
        return self is other or (
            self.a == other.a and self.order == other.order
            and self.n_panels == other.n_panels and np.array_equal(self.panels, other.panels)
        )

    def panel_index(self, x) -> ndarray:
        idx = np.searchsorted(self.edges, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.n_panels - 1)

    def integrate(self, values) -> complex:
        return complex(np.dot(self.weights, values))

    def mirror(self) -> ndarray:
        """Index permutation j(i) with nodes[j(i)] == -nodes[i]; requires a symmetric grid."""
        perm = np.argsort(-self.nodes, kind="stable")
        if not np.allclose(self.nodes[perm], -self.nodes, rtol=0.0, atol=1e-13 * self.a):
            raise PreconditionError("grid is not symmetric about 0")
        return perm

    def key(self) -> Tuple[float, int, int]:
        return (self.a, self.n_panels, self.order)


def make_grid(a: float, n_panels: int = utils.DEFAULT_PANELS,
              order: int = utils.DEFAULT_ORDER) -> QuadratureGrid:
    """
    Build a composite Gauss-Legendre grid of equal panels on (-a, a).

    Args:
        a (float): Half-width, positive.
        n_panels (int): Number of panels, at least 1.
        order (int): Nodes per panel, at least 2.

    Returns:
        QuadratureGrid: n_panels * order nodes, all strictly inside (-a, a).
    """
    if not a > 0:
        raise InvalidArgumentError(f"half-width must be positive, got {a}")
    if int(n_panels) != n_panels or n_panels < 1:
        raise InvalidArgumentError(f"n_panels must be a positive integer, got {n_panels}")
    if int(order) != order or order < 2:
        raise InvalidArgumentError(f"order must be an integer >= 2, got {order}")
    n_panels, order = int(n_panels), int(order)
    edges = np.linspace(-a, a, n_panels + 1)
    edges[0], edges[-1] = -a, a
    panels = np.column_stack([edges[:-1], edges[1:]])
    t, w = reference_rule(order)
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    mid = 0.5 * (panels[:, 1] + panels[:, 0])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return QuadratureGrid(float(a), panels, nodes, weights, order)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of a function at the grid nodes, optionally with its derivative."""
    grid: QuadratureGrid
    values: ndarray
    derivative: Optional[ndarray] = None
    endpoints: Optional[Tuple[complex, complex]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.size,):
            raise InvalidArgumentError(
                f"expected {self.grid.size} samples, got shape {values.shape}")
        if self.derivative is not None:
            derivative = np.asarray(self.derivative, dtype=complex)
            if derivative.shape != values.shape:
                raise InvalidArgumentError("derivative samples do not match the value count")
            object.__setattr__(self, "derivative", derivative)

    @classmethod
    def from_callable(cls, grid: QuadratureGrid, func: Callable[[ndarray], ndarray],
                      derivative: Optional[Callable[[ndarray], ndarray]] = None
                      ) -> "SampledFunction":
        ends = np.asarray(func(np.array([-grid.a, grid.a])), dtype=complex) * np.ones(2)
        return cls(
            grid,
            np.asarray(func(grid.nodes), dtype=complex) * np.ones(grid.size),
            None if derivative is None
            else np.asarray(derivative(grid.nodes), dtype=complex) * np.ones(grid.size),
            (complex(ends[0]), complex(ends[1])),
        )

    def evaluate(self, x) -> ndarray:
        """Evaluate the panel-wise Legendre interpolant at arbitrary points of [-a, a]."""
        return _panel_interpolate(self.grid, self.values, x)

    def evaluate_derivative(self, x) -> ndarray:
        if self.derivative is None:
            raise InvalidArgumentError("no derivative samples attached")
        return _panel_interpolate(self.grid, self.derivative, x)

    def boundary_values(self) -> Tuple[complex, complex]:
        if self.endpoints is not None:
            return self.endpoints
        ends = self.evaluate(np.array([-self.grid.a, self.grid.a]))
        return complex(ends[0]), complex(ends[1])

    def norm(self) -> float:
        return float(np.sqrt(abs(inner_product(self, self))))

    def with_values(self, values, derivative=None, endpoints=None) -> "SampledFunction":
        return SampledFunction(self.grid, values, derivative, endpoints)


def _panel_interpolate(grid: QuadratureGrid, values: ndarray, x) -> ndarray:
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    order = grid.order
    coeffs = np.linalg.solve(_vandermonde(order), values.reshape(grid.n_panels, order).T)
    idx = grid.panel_index(flat)
    lo, hi = grid.panels[idx, 0], grid.panels[idx, 1]
    t = (2.0 * flat - lo - hi) / (hi - lo)
    out = np.sum(legvander(t, order - 1) * coeffs.T[idx], axis=1)
    return out.reshape(x.shape)


def inner_product(f: SampledFunction, g: SampledFunction) -> complex:
    """
    <f, g> = sum_i w_i conj(f_i) g_i, antilinear in the first slot.

    Args:
        f (SampledFunction): First factor (conjugated).
        g (SampledFunction): Second factor.

    Returns:
        complex: The quadrature value.
    """
    if not f.grid.same_as(g.grid):
        raise InvalidArgumentError("inner product of samples on different grids")
    return complex(np.sum(f.grid.weights * np.conj(f.values) * g.values))


class KernelOperator:
    """
    Integral operator f -> int K(x, y) f(y) dy with a complex kernel.

    `kernel(x, y)` must broadcast over numpy arrays. A jump across y = x (or y = -x) is declared
    through the flags; the Nyström matrix then splits the panel holding the jump in every row.
    """

    def __init__(self, kernel: Callable[[ndarray, ndarray], ndarray],
                 jump_on_diagonal: bool = False, jump_on_antidiagonal: bool = False,
                 hermitian: bool = False, name: str = "kernel"):
        self.kernel = kernel
        self.jump_on_diagonal = jump_on_diagonal
        self.jump_on_antidiagonal = jump_on_antidiagonal
        self.hermitian = hermitian
        self.name = name
        self._matrices = {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"

    def __call__(self, x, y) -> ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.asarray(self.kernel(x, y), dtype=complex) * np.ones(x.shape)

    def breaks(self, x: float) -> List[float]:
        cuts = []
        if self.jump_on_diagonal:
            cuts.append(float(x))
        if self.jump_on_antidiagonal:
            cuts.append(-float(x))
        return cuts

    def node_values(self, grid: QuadratureGrid) -> ndarray:
        return self(grid.nodes[:, None], grid.nodes[None, :])

    def matrix(self, grid: QuadratureGrid, method: Optional[str] = None) -> ndarray:
        """Cached Nyström matrix; entries w_j K(x_i, x_j) off the split panels."""
        key = (grid.key(), method)
        if key not in self._matrices:
            logger.debug("assembling %s on %d nodes", self.name, grid.size)
            self._matrices[key] = nystrom_matrix(self, grid, method)
        return self._matrices[key]

    def hermitian_defect(self, grid: QuadratureGrid) -> float:
        values = self.node_values(grid)
        defect = np.abs(values - values.conj().T)
        np.fill_diagonal(defect, 0.0)
        return float(defect.max()) if defect.size else 0.0


class BranchKernel(KernelOperator):
    """
    Kernel given by two smooth sympy branches in the symbols X, Y.

    `lower` holds on y < x (y < -x for an anti-diagonal jump) and `upper` on the other side;
    on the jump line the kernel takes the mean of the two one-sided limits.
    """

    def __init__(self, lower: sp.Expr, upper: sp.Expr, antidiagonal: bool = False,
                 hermitian: bool = False, name: str = "kernel"):
        self.lower = sp.sympify(lower)
        self.upper = sp.sympify(upper)
        self.antidiagonal = antidiagonal
        self._lower_fn = sp.lambdify((X, Y), self.lower, modules="numpy")
        self._derivatives = {}
        self._upper_fn = sp.lambdify((X, Y), self.upper, modules="numpy")
        super().__init__(self._evaluate, jump_on_diagonal=not antidiagonal,
                         jump_on_antidiagonal=antidiagonal, hermitian=hermitian, name=name)

    def _side(self, x: ndarray, y: ndarray) -> ndarray:
        return y + x if self.antidiagonal else y - x

    def _evaluate(self, x: ndarray, y: ndarray) -> ndarray:
        shape = np.broadcast(x, y).shape
        lo = np.asarray(self._lower_fn(x, y), dtype=complex) * np.ones(shape)
        up = np.asarray(self._upper_fn(x, y), dtype=complex) * np.ones(shape)
        side = self._side(x, y)
        return np.where(side < 0, lo, np.where(side > 0, up, 0.5 * (lo + up)))

    def branch(self, which: str, x, y) -> ndarray:
        fn = self._lower_fn if which == "lower" else self._upper_fn
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.asarray(fn(x, y), dtype=complex) * np.ones(x.shape)

    def derivative(self, variable: str = "x", times: int = 1) -> "BranchKernel":
        """Branch-wise derivative, built once per (variable, times) so its matrix stays cached."""
        key = (variable, times)
        if key not in self._derivatives:
            symbol = X if variable == "x" else Y
            self._derivatives[key] = BranchKernel(
                sp.diff(self.lower, symbol, times), sp.diff(self.upper, symbol, times),
                self.antidiagonal, name=f"d{variable}^{times} {self.name}")
        return self._derivatives[key]

    def adjoint(self) -> "BranchKernel":
        """K*(x, y) = conj(K(y, x)); the sides swap for a diagonal jump."""
        swap = {X: Y, Y: X}
        lower = sp.conjugate(self.upper.xreplace(swap)) if not self.antidiagonal \
            else sp.conjugate(self.lower.xreplace(swap))
        upper = sp.conjugate(self.lower.xreplace(swap)) if not self.antidiagonal \
            else sp.conjugate(self.upper.xreplace(swap))
        return BranchKernel(lower, upper, self.antidiagonal, self.hermitian,
                            name=f"{self.name}*")

    def jump(self, x) -> ndarray:
        """lower - upper on the jump line, as a function of x."""
        x = np.asarray(x, dtype=float)
        y = -x if self.antidiagonal else x
        return self.branch("lower", x, y) - self.branch("upper", x, y)

    def __add__(self, other: "BranchKernel") -> "BranchKernel":
        if not isinstance(other, BranchKernel) or other.antidiagonal != self.antidiagonal:
            return NotImplemented
        return BranchKernel(self.lower + other.lower, self.upper + other.upper,
                            self.antidiagonal, self.hermitian and other.hermitian,
                            name=f"{self.name}+{other.name}")


def _panel_split(grid: QuadratureGrid, panel: int, cuts: Sequence[float]):
    """GL nodes/weights on the pieces of `panel` cut at `cuts`, plus the interpolation matrix."""
    lo, hi = grid.panels[panel]
    points = np.concatenate([[lo], np.sort(np.asarray(cuts, dtype=float)), [hi]])
    t, w = reference_rule(grid.order)
    half = 0.5 * np.diff(points)
    mid = 0.5 * (points[1:] + points[:-1])
    y = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wy = (half[:, None] * w[None, :]).ravel()
    ref = (2.0 * y - lo - hi) / (hi - lo)
    return y, wy, interpolation_matrix(grid.order, ref)


def _interior_cuts(grid: QuadratureGrid, cuts: Sequence[float]):
    """Group cut points by panel, dropping those that fall on panel edges or outside."""
    grouped = {}
    tol = 1e-14 * grid.a
    for c in cuts:
        if not (-grid.a < c < grid.a):
            continue
        p = int(grid.panel_index(c))
        lo, hi = grid.panels[p]
        if c - lo <= tol or hi - c <= tol:
            continue
        grouped.setdefault(p, []).append(c)
    return grouped


def row_corrections(kernel: KernelOperator, grid: QuadratureGrid,
                    i: int) -> Iterator[Tuple[int, int, ndarray]]:
    """
    Replacement blocks for row i of the Nyström matrix on the panels cut by the kernel's jumps.

    Yields:
        (start, stop, block): columns start:stop of row i are to be set to `block`.
    """
    x = grid.nodes[i]
    for panel, cuts in _interior_cuts(grid, kernel.breaks(x)).items():
        y, wy, interp = _panel_split(grid, panel, cuts)
        block = (wy * kernel(x, y)) @ interp
        start = panel * grid.order
        yield start, start + grid.order, block


def nystrom_row(kernel: KernelOperator, grid: QuadratureGrid, i: int) -> ndarray:
    """Row i of the corrected Nyström matrix."""
    row = grid.weights * kernel(grid.nodes[i], grid.nodes)
    for start, stop, block in row_corrections(kernel, grid, i):
        row[start:stop] = block
    return row


def nystrom_matrix(kernel: KernelOperator, grid: QuadratureGrid,
                   method: Optional[str] = None) -> ndarray:
    """Assemble the corrected Nyström matrix with the configured strategy."""
    return np.asarray(utils.assembly_method(method).process(kernel, grid), dtype=complex)


def row_rule(grid: QuadratureGrid, cuts: Sequence[float]) -> Tuple[ndarray, ndarray]:
    """Nodes and weights covering (-a, a) with every panel holding a cut split at it."""
    grouped = _interior_cuts(grid, cuts)
    ys, ws = [], []
    order = grid.order
    for p in range(grid.n_panels):
        if p in grouped:
            y, wy, _ = _panel_split(grid, p, grouped[p])
        else:
            y, wy = grid.nodes[p * order:(p + 1) * order], grid.weights[p * order:(p + 1) * order]
        ys.append(y)
        ws.append(wy)
    return np.concatenate(ys), np.concatenate(ws)


def apply_kernel(K: KernelOperator, f: SampledFunction) -> SampledFunction:
    """
    Nyström application (Kf)(x_i) = int K(x_i, y) f(y) dy.

    Args:
        K (KernelOperator): The kernel; jumps are integrated with split panels.
        f (SampledFunction): Samples on the grid.

    Returns:
        SampledFunction: Samples of Kf on the same grid.
    """
    return f.with_values(K.matrix(f.grid) @ f.values)


def apply_kernel_at(K: KernelOperator, f: SampledFunction, x) -> ndarray:
    """(Kf) at arbitrary points of [-a, a], e.g. the endpoints."""
    out = []
    for xi in np.atleast_1d(np.asarray(x, dtype=float)):
        y, w = row_rule(f.grid, K.breaks(xi))
        out.append(np.sum(w * K(xi, y) * f.evaluate(y)))
    return np.asarray(out, dtype=complex)


def apply_kernel_derivative(K: BranchKernel, f: SampledFunction) -> SampledFunction:
    """
    d/dx of (Kf) at the nodes: the x-derivative kernel plus the jump carried across the cut.

    Args:
        K (BranchKernel): Kernel with symbolic branches.
        f (SampledFunction): Samples on the grid.

    Returns:
        SampledFunction: Samples of (Kf)'.
    """
    if not isinstance(K, BranchKernel):
        raise InvalidArgumentError("derivative application needs a kernel with symbolic branches")
    nodes = f.grid.nodes
    values = K.derivative("x").matrix(f.grid) @ f.values
    if K.antidiagonal:
        values = values - K.jump(nodes) * f.evaluate(-nodes)
    else:
        values = values + K.jump(nodes) * f.values
    return f.with_values(values)


def hs_norm(K: KernelOperator, grid: QuadratureGrid) -> float:
    """
    Hilbert-Schmidt norm (int int |K|^2)^(1/2) with the inner integral split at the jumps.

    Args:
        K (KernelOperator): The kernel.
        grid (QuadratureGrid): Outer rule; the inner rule is the grid split per row.

    Returns:
        float: The norm.
    """
    inner = np.empty(grid.size)
    for i, x in enumerate(grid.nodes):
        y, w = row_rule(grid, K.breaks(x))
        inner[i] = np.sum(w * np.abs(K(x, y)) ** 2)
    return float(np.sqrt(np.dot(grid.weights, inner)))


def min_matrix_eigenvalue(T: ndarray, grid: QuadratureGrid) -> float:
    """
    Smallest eigenvalue of the Hermitian part of W^(1/2) T W^(-1/2).

    W^(1/2) maps node values to the weighted l2 coordinates in which the quadrature inner product
    is Euclidean, so this is the discrete counterpart of inf <f, T f> / <f, f>.
    """
    sw = np.sqrt(grid.weights)
    S = sw[:, None] * np.asarray(T, dtype=complex) / sw[None, :]
    H = 0.5 * (S + S.conj().T)
    return float(eigh(H, eigvals_only=True, subset_by_index=[0, 0])[0])


def hermitian_defect_matrix(T: ndarray, grid: QuadratureGrid) -> float:
    """max |S - S^H| for S = W^(1/2) T W^(-1/2)."""
    sw = np.sqrt(grid.weights)
    S = sw[:, None] * np.asarray(T, dtype=complex) / sw[None, :]
    return float(np.abs(S - S.conj().T).max(initial=0.0))


def min_symmetric_eigenvalue(K: KernelOperator, grid: QuadratureGrid) -> float:
    """
    Smallest eigenvalue of the weighted-symmetrised discretisation of I + K.

    Args:
        K (KernelOperator): Hermitian kernel.
        grid (QuadratureGrid): Discretisation.

    Returns:
        float: Positive iff I + K is discretely positive.
    """
    scale = max(1.0, float(np.abs(K.node_values(grid)).max(initial=0.0)))
    defect = K.hermitian_defect(grid)
    if defect > HERMITIAN_TOL * scale:
        raise PreconditionError(f"{K.name} is not Hermitian (defect {defect:.3e})")
    return min_matrix_eigenvalue(np.eye(grid.size) + K.matrix(grid), grid)


def identity(grid: QuadratureGrid) -> ndarray:
    return np.eye(grid.size, dtype=complex)


def dump_kernel_csv(K: KernelOperator, grid: QuadratureGrid, path) -> None:
    """Write `x,y,re,im` rows of K at the node pairs, row-major."""
    utils.write_csv(utils.kernel_frame(grid.nodes, K.node_values(grid)), path)
