# src/errors.py
"""
errors.py: A module that collects the exceptions raised by the quasispec library.

Every error derives from `QuasispecError`, so callers that only care about "the computation
did not produce a trustworthy answer" can catch a single type. The command-line front end maps
the subclasses onto exit codes (see `src/cli.py`).

Example usage:

    from src.errors import SpectralPointError

    try:
        value = green("D", k, x, y, a)
    except SpectralPointError as err:
        print(err.eigenvalue)
"""


class QuasispecError(Exception):
    """Base class of all library errors."""


class InvalidArgumentError(QuasispecError, ValueError):
    """An argument is outside the documented domain of an operation."""


class PreconditionError(QuasispecError):
    """An input violates a structural precondition (e.g. a non-Hermitian kernel)."""


class SpectralPointError(QuasispecError):
    """The spectral parameter k**2 hits an eigenvalue of the reference Laplacian."""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DegeneratePairError(QuasispecError):
    """An eigenfunction pair cannot be normalised: <phi_n, psi_n> vanishes (Jordan block)."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class DegenerateSystemError(QuasispecError):
    """Two eigenvalues of a finite-section matrix collide."""


class ContourError(QuasispecError):
    """A counting contour keeps passing through a root after all retries."""


class CertificationError(QuasispecError):
    """Winding counts and located roots disagree, so completeness is not certified."""


class DegeneracyWarning(UserWarning):
    """alpha sits on a Neumann eigenvalue k_n; the result is assembled but not a metric."""
