# src/spectrum.py
"""
spectrum.py: A module that computes the spectrum of -psi'' with complex Robin conditions.

The operator H acts as -psi'' on (-a, a) with psi'(+-a) + c_+- psi(+-a) = 0. Its eigenvalues
lambda = l^2 are the zeros of

    Phi(lambda) = (c_- c_+ + lambda) sin(2 a l) / l + (c_- - c_+) cos(2 a l),

which is the usual characteristic determinant divided by l. Phi is even in l and therefore a
single-valued entire function of lambda, so the search runs in the lambda-plane: the region of
interest is covered by rectangles (one block for the low modes, one strip per higher mode), every
rectangle gets an argument-principle count, rectangles are bisected until each holds one root (or
shrinks around a multiple root), and every root is polished by Newton's method. The sum of the
located multiplicities must equal the sum of the winding counts, otherwise the result is not
certified.

Eigenfunctions follow from the left boundary condition,

    psi_n(x) = A_n s_n (cos l_n(x+a) - (c_-/l_n) sin l_n(x+a)),
    phi_n(x) =     s_n (cos conj(l_n)(x+a) - (conj(c_-)/conj(l_n)) sin conj(l_n)(x+a)),

with s_0 = 1/sqrt(2a) for the lowest root and s_n = 1/sqrt(a) otherwise, so c_+- = 0 gives the
Neumann basis. biorthonormalize sets A_n = 1/<phi_n, psi_hat_n>.

Example usage:

    from src.spectrum import PTParams, find_eigenvalues, biorthonormalize

    p = PTParams(alpha=0.5, beta=0.0, a=1.5707963267948966).boundary()
    triples = biorthonormalize(find_eigenvalues(p, n_max=6))
    print([t.lam for t in triples])    # 0.25, 1, 4, ..., 36
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize_scalar

import src.utils as utils
from src.errors import (CertificationError, ContourError, DegeneratePairError,
                        InvalidArgumentError)
from src.laplacian import wavenumber
from src.numerics import QuadratureGrid, SampledFunction, inner_product

logger = logging.getLogger(__name__)

# constants
RESIDUAL_TOL = 1e-10
CONTOUR_HIT_TOL = 1e-13
NEWTON_STEP = 1e-7
NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 60
DOUBLE_ROOT_RADIUS = 1e-5
DEDUP_TOL = 1e-9
PAIR_TOL = 1e-10
MAX_RETRIES = 5
MAX_DEPTH = 80
EDGE_POINTS = 33
MAX_EDGE_POINTS = 1 << 16
SPLIT_FRACTIONS = (0.4713, 0.5287, 0.4119, 0.5881, 0.3607)
REAL_AXIS_SAMPLES = 40001
# |Phi| at a refined real minimum below which the dip is a double root
TANGENT_TOL = 1e-9

Rectangle = Tuple[float, float, float, float]


@dataclass(frozen=True)
class BoundaryParams:
    """Half-width a and Robin constants c_-, c_+."""
    a: float
    c_minus: complex
    c_plus: complex

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidArgumentError(f"half-width must be positive, got {self.a}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "c_minus", complex(self.c_minus))
        object.__setattr__(self, "c_plus", complex(self.c_plus))

    @property
    def self_adjoint(self) -> bool:
        return self.c_minus.imag == 0 and self.c_plus.imag == 0

    @property
    def pt_symmetric(self) -> bool:
        return abs(self.c_minus + np.conj(self.c_plus)) <= 1e-12 * (1 + abs(self.c_plus))

    def adjoint(self) -> "BoundaryParams":
        """Parameters of H*: complex conjugate constants."""
        return BoundaryParams(self.a, np.conj(self.c_minus), np.conj(self.c_plus))

    def as_dict(self) -> Dict[str, object]:
        return {"a": self.a,
                "c_minus": [self.c_minus.real, self.c_minus.imag],
                "c_plus": [self.c_plus.real, self.c_plus.imag]}


@dataclass(frozen=True)
class PTParams:
    """PT-symmetric family c_+- = i alpha +- beta."""
    alpha: float
    beta: float
    a: float

    def boundary(self) -> BoundaryParams:
        return BoundaryParams(self.a, 1j * self.alpha - self.beta, 1j * self.alpha + self.beta)

    @classmethod
    def from_boundary(cls, p: BoundaryParams) -> "PTParams":
        if not p.pt_symmetric:
            raise InvalidArgumentError("boundary constants are not of the form i alpha +- beta")
        return cls(p.c_plus.imag, p.c_plus.real, p.a)


def _sin_over(l, u):
    """sin(l u) / l, continued to l = 0 by its Taylor series."""
    l = np.asarray(l, dtype=complex)
    u = np.asarray(u, dtype=float)
    z = l * u
    small = np.abs(z) < 1e-4
    safe = np.where(l == 0, 1.0, l)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sin(z) / safe
    return np.where(small, u * (1.0 - z ** 2 / 6.0 + z ** 4 / 120.0), direct)


def char_fn(lam, p: BoundaryParams):
    """
    Characteristic function Phi(lambda) = F(l) / l at l = sqrt(lambda).

    Args:
        lam: Complex lambda (scalar or array).
        p (BoundaryParams): Boundary data.

    Returns:
        Complex value(s); Phi(0) = 2a c_- c_+ + c_- - c_+.
    """
    lam = np.asarray(lam, dtype=complex)
    l = np.sqrt(lam)
    two_a = 2.0 * p.a
    out = (p.c_minus * p.c_plus + lam) * _sin_over(l, two_a) \
        + (p.c_minus - p.c_plus) * np.cos(two_a * l)
    return out[()]


def char_fn_pt(lam, q: PTParams):
    """Phi for c_+- = i alpha +- beta: (lambda - alpha^2 - beta^2) sin(2al)/l - 2 beta cos(2al)."""
    lam = np.asarray(lam, dtype=complex)
    l = np.sqrt(lam)
    two_a = 2.0 * q.a
    out = ((lam - q.alpha ** 2 - q.beta ** 2) * _sin_over(l, two_a)
           - 2.0 * q.beta * np.cos(two_a * l))
    return out[()]


def char_fn_derivative(lam: complex, p: BoundaryParams) -> complex:
    """Central difference of Phi with step 1e-7 (1 + |lambda|)."""
    h = NEWTON_STEP * (1.0 + abs(lam))
    return complex((char_fn(lam + h, p) - char_fn(lam - h, p)) / (2.0 * h))


@dataclass(frozen=True)
class EigenTriple:
    """Eigenvalue lambda = l^2 of H with its eigenfunction samplers."""
    n: int
    l: complex
    lam: complex
    multiplicity: int
    params: BoundaryParams
    A: complex = 1.0
    epsilon: complex = 0.0
    char_residual: float = 0.0

    @property
    def prefactor(self) -> float:
        return 1.0 / np.sqrt(2.0 * self.params.a) if self.n == 0 else 1.0 / np.sqrt(self.params.a)

    def _profile(self, l, c, x):
        u = np.asarray(x, dtype=float) + self.params.a
        return self.prefactor * (np.cos(l * u) - c * _sin_over(l, u))

    def _profile_prime(self, l, c, x):
        u = np.asarray(x, dtype=float) + self.params.a
        return self.prefactor * (-(l ** 2) * _sin_over(l, u) - c * np.cos(l * u))

    def psi_hat(self, x):
        return self._profile(self.l, self.params.c_minus, x)

    def psi(self, x):
        return self.A * self._profile(self.l, self.params.c_minus, x)

    def dpsi(self, x):
        return self.A * self._profile_prime(self.l, self.params.c_minus, x)

    def phi(self, x):
        return self._profile(np.conj(self.l), np.conj(self.params.c_minus), x)

    def dphi(self, x):
        return self._profile_prime(np.conj(self.l), np.conj(self.params.c_minus), x)

    def sample_psi(self, grid: QuadratureGrid) -> SampledFunction:
        return SampledFunction.from_callable(grid, self.psi, self.dpsi)

    def sample_phi(self, grid: QuadratureGrid) -> SampledFunction:
        return SampledFunction.from_callable(grid, self.phi, self.dphi)

    def boundary_residuals(self) -> Tuple[float, float]:
        """|psi'(+-a) + c_+- psi(+-a)| with analytic derivatives."""
        a, p = self.params.a, self.params
        left = self.dpsi(-a) + p.c_minus * self.psi(-a)
        right = self.dpsi(a) + p.c_plus * self.psi(a)
        return float(abs(left)), float(abs(right))


@dataclass
class SpectrumResult:
    """Located eigenvalues together with the rectangles that certify them."""
    triples: List[EigenTriple]
    rectangles: List[Rectangle] = field(default_factory=list)
    winding_counts: List[int] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return sum(self.winding_counts) == sum(t.multiplicity for t in self.triples)


class _ContourHit(Exception):
    """A counting contour came too close to a root."""


def _edge_phase(func: Callable, z0: complex, z1: complex) -> float:
    n = EDGE_POINTS
    while True:
        z = z0 + (z1 - z0) * np.linspace(0.0, 1.0, n)
        v = np.asarray(func(z), dtype=complex)
        if not np.all(np.isfinite(v)) or np.any(np.abs(v) < CONTOUR_HIT_TOL * (1.0 + np.abs(z))):
            raise _ContourHit
        steps = np.angle(v[1:] / v[:-1])
        if np.max(np.abs(steps)) < np.pi / 4:
            return float(steps.sum())
        if n >= MAX_EDGE_POINTS:
            raise _ContourHit
        n = 2 * n - 1


def winding_number(func: Callable, rect: Rectangle) -> int:
    """
    Argument-principle count of zeros of an entire `func` inside an axis-parallel rectangle.

    Raises:
        _ContourHit: the boundary passes (numerically) through a zero.
    """
    re0, re1, im0, im1 = rect
    corners = [complex(re0, im0), complex(re1, im0), complex(re1, im1), complex(re0, im1)]
    total = sum(_edge_phase(func, corners[i], corners[(i + 1) % 4]) for i in range(4))
    turns = total / (2.0 * np.pi)
    count = int(round(turns))
    if abs(turns - count) > 0.1:
        raise _ContourHit
    return count


def _newton(p: BoundaryParams, z0: complex, multiplicity: int = 1) -> Tuple[complex, bool]:
    z = complex(z0)
    for _ in range(NEWTON_MAX_ITER):
        d = char_fn_derivative(z, p)
        if d == 0 or not np.isfinite(d):
            break
        step = multiplicity * complex(char_fn(z, p)) / d
        if not np.isfinite(step):
            break
        z -= step
        if abs(step) <= NEWTON_TOL * (1.0 + abs(z)):
            break
    ok = np.isfinite(z) and abs(char_fn(z, p)) <= RESIDUAL_TOL * max(1.0, abs(z))
    return z, bool(ok)


def _inside(z: complex, rect: Rectangle) -> bool:
    re0, re1, im0, im1 = rect
    return re0 <= z.real <= re1 and im0 <= z.imag <= im1


def _split(rect: Rectangle, fraction: float) -> Tuple[Rectangle, Rectangle]:
    re0, re1, im0, im1 = rect
    if re1 - re0 >= im1 - im0:
        cut = re0 + fraction * (re1 - re0)
        return (re0, cut, im0, im1), (cut, re1, im0, im1)
    cut = im0 + fraction * (im1 - im0)
    return (re0, re1, im0, cut), (re0, re1, cut, im1)


class _RectangleSolver:
    """Roots of Phi inside one covering rectangle, by bisection and Newton polishing."""

    def __init__(self, p: BoundaryParams):
        self.p = p
        self.func = lambda z: char_fn(z, p)
        self.leaves: List[Tuple[Rectangle, int]] = []

    def solve(self, rect: Rectangle,
              seed: Optional[complex]) -> Tuple[int, List[Tuple[complex, int]]]:
        count = winding_number(self.func, rect)
        return count, self._locate(rect, count, seed, 0)

    def _locate(self, rect, count, seed, depth) -> List[Tuple[complex, int]]:
        if count == 0:
            self.leaves.append((rect, 0))
            return []
        re0, re1, im0, im1 = rect
        guess = seed if seed is not None and _inside(seed, rect) \
            else complex(0.5 * (re0 + re1), 0.5 * (im0 + im1))
        z, ok = _newton(self.p, guess)
        if ok and _inside(z, rect):
            if count == 1:
                self.leaves.append((rect, 1))
                return [(z, 1)]
            multiple = self._multiplicity(z)
            if multiple == count:
                z, _ = _newton(self.p, z, multiplicity=count)
                self.leaves.append((rect, count))
                return [(z, count)]
        if depth >= MAX_DEPTH:
            raise CertificationError(f"bisection depth exhausted around {guess}")
        for fraction in SPLIT_FRACTIONS:
            first, second = _split(rect, fraction)
            try:
                c1 = winding_number(self.func, first)
                c2 = winding_number(self.func, second)
            except _ContourHit:
                continue
            if c1 + c2 != count:
                continue
            return (self._locate(first, c1, seed, depth + 1)
                    + self._locate(second, c2, seed, depth + 1))
        raise _ContourHit

    def _multiplicity(self, z: complex) -> int:
        r = DOUBLE_ROOT_RADIUS * (1.0 + abs(z))
        try:
            return winding_number(self.func, (z.real - r, z.real + r, z.imag - r, z.imag + r))
        except _ContourHit:
            return 0


def _solve_rectangle(p: BoundaryParams, rect: Rectangle, seed: Optional[complex]):
    solver = _RectangleSolver(p)
    count, roots = solver.solve(rect, seed)
    return rect, count, roots, solver.leaves


def search_rectangles(p: BoundaryParams, n_max: int,
                      shift: float = 0.0) -> List[Tuple[Rectangle, Optional[complex]]]:
    """
    Covering of the search region: a block for the low modes and one strip per higher mode.

    Strip n spans Re lambda between the squared midpoints of (k_{n-1}, k_n) and (k_n, k_{n+1}) and
    |Im lambda| <= 4 (|c_-| + |c_+| + 1) k_{n+1}; its Newton seed is (k_n + (c_+ - c_-)/(2a k_n))^2.
    `shift` moves every boundary by a relative amount for contour-perturbation retries.
    """
    scale = abs(p.c_minus) + abs(p.c_plus) + 1.0
    k = wavenumber(np.arange(n_max + 2), p.a)
    mids = ((k[:-1] + k[1:]) / 2.0) ** 2 * (1.0 + shift)
    lower = -(scale ** 2) * (1.0 + shift)
    n_lead = int(min(n_max, max(1, np.ceil(scale) + 1)))

    def height(n):
        return 4.0 * scale * max(k[n + 1], 1.0) * (1.0 + shift)

    cover = [((lower, mids[n_lead], -height(n_lead), height(n_lead)), None)]
    for n in range(n_lead + 1, n_max + 1):
        seed = (k[n] + (p.c_plus - p.c_minus) / (2.0 * p.a * k[n])) ** 2
        cover.append(((mids[n - 1], mids[n], -height(n), height(n)), complex(seed)))
    return cover


def _dedup(roots: List[Tuple[complex, int]]) -> List[Tuple[complex, int]]:
    kept: List[Tuple[complex, int]] = []
    for z, m in sorted(roots, key=lambda r: (r[0].real, r[0].imag)):
        if kept and abs(z - kept[-1][0]) <= DEDUP_TOL * (1.0 + abs(z)):
            continue
        kept.append((z, m))
    return kept


def find_eigenvalues_certified(p: BoundaryParams, n_max: int) -> SpectrumResult:
    """
    All eigenvalues in the covering of `search_rectangles`, with the certifying counts.

    Raises:
        ContourError: every retry left a contour on top of a root.
        CertificationError: located multiplicities disagree with the winding counts.
    """
    if int(n_max) != n_max or n_max < 1:
        raise InvalidArgumentError(f"n_max must be a positive integer, got {n_max}")
    n_max = int(n_max)
    for attempt in range(MAX_RETRIES + 1):
        shift = attempt * 1.618e-7
        cover = search_rectangles(p, n_max, shift)
        try:
            pieces = Parallel(n_jobs=min(utils.n_jobs(), len(cover)), prefer="threads")(
                delayed(_solve_rectangle)(p, rect, seed) for rect, seed in cover
            )
            break
        except _ContourHit:
            logger.warning("contour touched a root, perturbing the covering (retry %d)",
                           attempt + 1)
    else:
        raise ContourError(f"contours kept hitting roots after {MAX_RETRIES} retries")

    roots, rectangles, counts = [], [], []
    for rect, count, found, leaves in pieces:
        roots.extend(found)
        rectangles.extend(leaf for leaf, _ in leaves)
        counts.extend(c for _, c in leaves)
        if sum(m for _, m in found) != count:
            raise CertificationError(f"rectangle {rect}: {count} roots counted, "
                                     f"{sum(m for _, m in found)} located")
    roots = _dedup(roots)
    if sum(m for _, m in roots) != sum(counts):
        raise CertificationError("duplicate roots across covering rectangles")
    logger.debug("located %d eigenvalues in %d rectangles", len(roots), len(rectangles))

    triples, index = [], 0
    for z, m in roots:
        l = complex(np.sqrt(complex(z)))
        triples.append(EigenTriple(
            n=index, l=l, lam=complex(z), multiplicity=m, params=p,
            epsilon=l - float(wavenumber(index, p.a)),
            char_residual=float(abs(char_fn(z, p))),
        ))
        index += m
    return SpectrumResult(triples, rectangles, counts)


def find_eigenvalues(p: BoundaryParams, n_max: int) -> List[EigenTriple]:
    """
    Certified eigenvalues with Re lambda below the squared midpoint of (k_nmax, k_nmax+1).

    Args:
        p (BoundaryParams): Boundary data.
        n_max (int): Highest mode index whose strip is searched, n_max >= 1.

    Returns:
        list of EigenTriple: Sorted by (Re, Im); A_n = 1 until biorthonormalize.
    """
    return find_eigenvalues_certified(p, n_max).triples


def count_roots(p: BoundaryParams, re_range: Sequence[float], im_range: Sequence[float]) -> int:
    """
    Argument-principle count of eigenvalues in a rectangle.

    The rectangle is enlarged by a relative 1e-7 per retry when its boundary touches a root.
    """
    re0, re1 = map(float, re_range)
    im0, im1 = map(float, im_range)
    func = lambda z: char_fn(z, p)  # noqa: E731
    for attempt in range(MAX_RETRIES + 1):
        pad = attempt * 1e-7 * (1.0 + max(abs(re0), abs(re1), abs(im0), abs(im1)))
        try:
            return winding_number(func, (re0 - pad, re1 + pad, im0 - pad, im1 + pad))
        except _ContourHit:
            logger.warning("count contour touched a root, enlarging (retry %d)", attempt + 1)
    raise ContourError("count contour kept hitting roots")


def count_real_roots(p: BoundaryParams, re_range: Sequence[float],
                     samples: int = REAL_AXIS_SAMPLES) -> int:
    """
    Real eigenvalues in [re0, re1], with multiplicity, for PT-symmetric constants.

    Phi is real on the real axis in that case. Simple roots are sign changes of the samples; a
    sampled dip of |Phi| without a sign change is refined and counted twice if Phi vanishes there.

    Raises:
        InvalidArgumentError: the constants are not PT-symmetric.
    """
    if not p.pt_symmetric:
        raise InvalidArgumentError("Phi is real on the real axis only for c_- = -conj(c_+)")
    re0, re1 = map(float, re_range)
    lam = np.linspace(re0, re1, int(samples))
    values = np.real(char_fn(lam, p))
    signs = np.sign(values)
    count = int(np.count_nonzero(signs == 0) + np.count_nonzero(signs[:-1] * signs[1:] < 0))

    size = np.abs(values)
    same_side = (signs[:-2] == signs[1:-1]) & (signs[1:-1] == signs[2:]) & (signs[1:-1] != 0)
    dips = np.flatnonzero(same_side & (size[1:-1] < size[:-2]) & (size[1:-1] <= size[2:])) + 1
    for i in dips:
        best = minimize_scalar(lambda z: abs(float(np.real(char_fn(z, p)))),
                               bounds=(lam[i - 1], lam[i + 1]), method="bounded",
                               options={"xatol": 1e-13 * (1.0 + abs(lam[i]))})
        if best.fun <= TANGENT_TOL * (1.0 + abs(best.x)):
            logger.debug("double real root near lambda = %.12g", best.x)
            count += 2
    return count


def count_non_real(p: BoundaryParams, re_range: Sequence[float],
                   im_range: Sequence[float]) -> Dict[str, int]:
    """
    Exact count of non-real eigenvalues in a rectangle straddling the real axis.

    The winding count of the whole rectangle minus the real roots of `count_real_roots`, so a
    conjugate pair arbitrarily close to the axis is still counted.

    Raises:
        CertificationError: the difference is negative or odd, which conjugation symmetry forbids.
    """
    total = count_roots(p, re_range, im_range)
    real = count_real_roots(p, re_range)
    non_real = total - real
    if non_real < 0 or non_real % 2:
        raise CertificationError(f"{total} roots counted, {real} on the real axis")
    return {"total": total, "real": real, "non_real": non_real}


def eigenfunctions(p: BoundaryParams, t: EigenTriple) -> Tuple[Callable, Callable]:
    """
    Samplers (psi_n, phi_n) for an eigenvalue of H.

    For l = 0 the samplers reduce to the linear profile 1 - c_-(x + a).
    """
    if t.params != p:
        t = replace(t, params=p)
    return t.psi, t.phi


def _pair_integral(t: EigenTriple) -> complex:
    """<phi, psi_hat> = s^2 int_0^{2a} g(u)^2 du with g = cos(l u) - (c_-/l) sin(l u)."""
    L = 2.0 * t.params.a
    l, c = t.l, t.params.c_minus
    s2 = t.prefactor ** 2
    if abs(l * L) < 1e-8:
        return s2 * (L - c * L ** 2 + c ** 2 * L ** 3 / 3.0)
    z = 2.0 * l * L
    if abs(z) < 1e-2:
        # L/2 - sin(2lL)/(4l) without cancellation
        tail = (z ** 3 / 6.0 - z ** 5 / 120.0 + z ** 7 / 5040.0) / (4.0 * l)
    else:
        tail = L / 2.0 - np.sin(z) / (4.0 * l)
    cos_sq = L / 2.0 + np.sin(z) / (4.0 * l)
    sin_cos = np.sin(l * L) ** 2 / (2.0 * l)
    return complex(s2 * (cos_sq - 2.0 * c / l * sin_cos + (c / l) ** 2 * tail))


def biorthonormalize(triples: Sequence[EigenTriple],
                     grid: Optional[QuadratureGrid] = None) -> List[EigenTriple]:
    """
    Set A_n = 1 / <phi_n, psi_hat_n> so that <psi_n, phi_m> = delta_nm.

    Args:
        triples (list of EigenTriple): Simple eigenvalues.
        grid (QuadratureGrid, optional): Quadrature for the pairing; closed-form integrals
        otherwise (needed for modes the grid cannot resolve).

    Raises:
        DegeneratePairError: a double eigenvalue or |<phi_n, psi_hat_n>| < 1e-10 (Jordan block).
    """
    out = []
    for t in triples:
        if t.multiplicity != 1:
            raise DegeneratePairError(
                f"lambda = {t.lam} has algebraic multiplicity {t.multiplicity}", t.n)
        if grid is not None:
            pairing = inner_product(t.sample_phi(grid),
                                    SampledFunction.from_callable(grid, t.psi_hat))
        else:
            pairing = _pair_integral(t)
        if abs(pairing) < PAIR_TOL:
            raise DegeneratePairError(f"<phi_{t.n}, psi_{t.n}> = {pairing:.3e} vanishes", t.n)
        out.append(replace(t, A=1.0 / pairing))
    return out


def symmetry_report(p: BoundaryParams) -> Dict[str, bool]:
    """Self-adjointness (c_+- real) and PT-symmetry (c_- = -conj(c_+), i.e. P-self-adjointness)."""
    pt = p.pt_symmetric
    return {"self_adjoint": p.self_adjoint, "pt_symmetric": pt, "p_self_adjoint": pt}


def zero_eigenvalue_predicate(p: BoundaryParams, tol: float = 1e-12) -> bool:
    """
    True iff Phi(0) = 2a c_- c_+ + c_- - c_+ vanishes, i.e. psi = 1 - c_-(x+a) is an eigenfunction.
    """
    return abs(2.0 * p.a * p.c_minus * p.c_plus + p.c_minus - p.c_plus) <= tol


def complex_pair_distance(q: PTParams, triples: Sequence[EigenTriple]) -> List[float]:
    """Distance of every non-real eigenvalue to alpha^2 + beta^2 (reported, never asserted)."""
    centre = q.alpha ** 2 + q.beta ** 2
    return [float(abs(t.lam - centre)) for t in triples
            if abs(t.lam.imag) > DEDUP_TOL * (1.0 + abs(t.lam))]
