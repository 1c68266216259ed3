"""Mathieu characteristic values a_nu(q) for real fractional order nu.

Two methods:

* ``char_value_series`` -- the second-order expansion
  a = nu^2 + q^2 / (2*(nu^2 - 1)), with documented O(q^4) error.  Singular
  at nu^2 = 1, where the expansion's denominator vanishes.

* ``char_value_matrix`` -- the Floquet-coefficient eigenproblem.  Writing
  y(z) = exp(i*nu*z) * sum_m c_2m exp(2i*m*z), the Mathieu equation
  y'' + (a - 2q cos 2z) y = 0 becomes a symmetric tridiagonal eigenproblem
  with diagonal (nu + 2m)^2 and off-diagonal q, m = -M..M.  The branch that
  connects continuously to a(q=0) = nu^2 is followed by continuation in q
  (steps <= 0.5) with eigenvector-overlap tracking, and M is doubled until
  the value is stable to 1e-10.

The matrix method serves as the in-repo oracle for the series' validity
region; it is exact up to truncation for any q.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import BranchAmbiguityError, DomainError, NumericError, SingularOrderError

_MAX_TRUNCATION = 512
_CONTINUATION_STEP = 0.5
_CONVERGENCE_TOL = 1e-10
_OVERLAP_FLOOR = 0.6  # squared overlap below this means the branch was lost


@dataclass(frozen=True)
class MathieuCharacteristic:
    """A computed characteristic value with its provenance."""

    nu: float
    q: float
    a: float
    method: str  # "Series" | "Matrix"
    truncation: int | None = None
    near_singular: bool = False  # |nu - odd integer| < 1e-3 (matrix method flag)


def char_value_series(nu: float, q: float, tol: float = 1e-6) -> float:
    """Second-order series a_nu(q) = nu^2 + q^2/(2*(nu^2 - 1)).

    Raises:
        SingularOrderError: if |nu^2 - 1| <= tol (the q^2 term blows up).
    """
    nu2 = nu * nu
    if abs(nu2 - 1.0) <= tol:
        raise SingularOrderError(
            f"nu = {nu}: characteristic-value series is singular at nu^2 = 1")
    return nu2 + q * q / (2.0 * (nu2 - 1.0))


def _branch_value(nu: float, q: float, M: int) -> float:
    """Eigenvalue at truncation M connected by q-continuation to nu^2."""
    m = np.arange(-M, M + 1)
    diag0 = (nu + 2.0 * m) ** 2
    v_prev = np.zeros(2 * M + 1)
    v_prev[M] = 1.0  # q = 0 eigenvector of the nu^2 branch
    n_steps = max(1, int(np.ceil(abs(q) / _CONTINUATION_STEP)))
    a = nu * nu
    for qk in np.linspace(q / n_steps, q, n_steps):
        w, V = eigh_tridiagonal(diag0, np.full(2 * M, qk))
        overlap = V.T @ v_prev
        i = int(np.argmax(np.abs(overlap)))
        if overlap[i] ** 2 < _OVERLAP_FLOOR:
            raise BranchAmbiguityError(
                f"branch tracking lost at nu={nu}, q={qk:.4g} "
                f"(best overlap^2 = {overlap[i]**2:.3f}); "
                "reduce the continuation step or avoid the degeneracy")
        a = float(w[i])
        v_prev = V[:, i]
    return a


def char_value_matrix(nu: float, q: float, truncation: int = 64) -> float:
    """Characteristic value by truncated-matrix continuation.

    ``truncation`` is the starting half-bandwidth M; it is doubled until the
    result changes by < 1e-10, up to M = 512.

    Raises:
        DomainError: truncation < 10.
        NumericError: no convergence at maximum truncation.
        BranchAmbiguityError: continuation hit a near-degeneracy it could
            not track through.
    """
    if truncation < 10:
        raise DomainError(f"truncation must be >= 10, got {truncation}")
    M = int(truncation)
    a_prev = _branch_value(nu, q, M)
    while M <= _MAX_TRUNCATION:
        M2 = 2 * M
        a_next = _branch_value(nu, q, M2)
        if abs(a_next - a_prev) < _CONVERGENCE_TOL:
            return a_next
        a_prev, M = a_next, M2
    raise NumericError(
        f"matrix characteristic value did not converge by M = {_MAX_TRUNCATION} "
        f"(nu={nu}, q={q})")


def characteristic(nu: float, q: float, method: str = "Series",
                   truncation: int = 64) -> MathieuCharacteristic:
    """Convenience wrapper returning a MathieuCharacteristic record."""
    if method == "Series":
        return MathieuCharacteristic(nu=nu, q=q, a=char_value_series(nu, q),
                                     method="Series")
    if method == "Matrix":
        a = char_value_matrix(nu, q, truncation=truncation)
        near = min(abs(abs(nu) - 1.0), abs(abs(nu) - 3.0)) < 1e-3
        return MathieuCharacteristic(nu=nu, q=q, a=a, method="Matrix",
                                     truncation=truncation, near_singular=near)
    raise DomainError(f"unknown method {method!r} (expected 'Series' or 'Matrix')")
