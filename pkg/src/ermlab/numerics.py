"""Self-contained dense linear algebra for symmetric matrices.

Everything the rest of the package needs: eigendecomposition via cyclic
Jacobi rotations, SPD solves via Cholesky, power iteration for the largest
eigenvalue and condition numbers. No LAPACK-backed routine is used; numpy
provides storage and elementwise arithmetic only.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import ConvergenceError, DomainError, ShapeError, SingularMatrixError

# eigenvalues below RANK_RTOL * lambda_max count as zero ("singular")
RANK_RTOL = 1e-10

_SYM_RTOL = 1e-12


@dataclass(frozen=True)
class SymmetricEvd:
    """Eigendecomposition A = V diag(lambda) V^T of a symmetric matrix.

    ``eigenvalues`` are sorted descending; column ``i`` of ``eigenvectors``
    pairs with ``eigenvalues[i]``. Columns are orthonormal and sign-fixed so
    the first component of magnitude above 1e-12 of the column maximum is
    positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square_symmetric(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError(f"{name} contains non-finite entries")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > _SYM_RTOL * max(scale, 1e-300):
        raise ShapeError(
            f"{name} is not symmetric: max|A - A^T| = {asym:.3e} "
            f"exceeds {_SYM_RTOL:.0e} of scale {scale:.3e}"
        )
    return a


def _fix_signs(v):
    n = v.shape[0]
    for j in range(n):
        col = v[:, j]
        top = np.max(np.abs(col))
        if top == 0.0:
            continue
        nz = np.nonzero(np.abs(col) > 1e-12 * top)[0]
        if nz.size and col[nz[0]] < 0.0:
            v[:, j] = -col
    return v


def sym_evd(a, tol=1e-13, max_sweeps=60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Raises ShapeError for non-square or asymmetric input and
    ConvergenceError if the sweep cap is hit (practically unreachable:
    Jacobi converges unconditionally for symmetric input).
    """
    a = _as_square_symmetric(a)
    n = a.shape[0]
    work = 0.5 * (a + a.T)  # exact symmetry for the rotation loop
    work = np.ascontiguousarray(work)
    v = np.eye(n)
    sweeps, converged = _accel.jacobi_evd(work, v, tol, max_sweeps)
    if not converged:
        raise ConvergenceError(
            f"Jacobi eigendecomposition did not converge in {max_sweeps} sweeps"
        )
    lam = np.diagonal(work).copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    v = _fix_signs(v[:, order])
    return SymmetricEvd(eigenvalues=lam, eigenvectors=v)


def _power_iterate(a, v0, tol, max_iters, scale):
    v = v0 / math.sqrt(float(v0 @ v0))
    lam = float(v @ (a @ v))
    floor = max(abs(lam), tol * max(scale, 1e-300))
    for _ in range(max_iters):
        av = a @ v
        norm = math.sqrt(float(av @ av))
        if norm <= 1e-300 * max(scale, 1.0):
            return 0.0, True
        v = av / norm
        new = float(v @ (a @ v))
        if new < -tol * max(scale, 1e-300):
            raise DomainError(
                f"negative Rayleigh quotient {new:.3e}: matrix is not positive "
                "semi-definite"
            )
        if abs(new - lam) <= tol * max(abs(new), floor):
            return new, True
        lam = new
    return lam, False


def max_eigenvalue(a, tol=1e-10, max_iters=20000):
    """Largest eigenvalue of a symmetric psd matrix by power iteration.

    Deterministic: starts from the all-ones vector, then from a fixed
    alternating-sign vector (which covers starts accidentally orthogonal to
    the top eigenspace), and returns the larger of the two estimates.
    """
    a = _as_square_symmetric(a)
    n = a.shape[0]
    if n == 0:
        raise ShapeError("matrix is empty")
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0.0
    tol = max(float(tol), 1e-15)
    starts = [np.ones(n)]
    if n > 1:
        alt = np.ones(n)
        alt[1::2] = -1.0
        starts.append(alt)
    best = -math.inf
    any_converged = False
    for v0 in starts:
        lam, converged = _power_iterate(a, v0, tol, max_iters, scale)
        any_converged = any_converged or converged
        best = max(best, lam)
    if not any_converged:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iters} iterations"
        )
    return best


def cholesky(a):
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises SingularMatrixError carrying the failing pivot index when the
    matrix is singular or indefinite to working precision.
    """
    a = _as_square_symmetric(a)
    l = np.zeros_like(a)
    fail = _accel.cholesky_factor(a, l)
    if fail >= 0:
        raise SingularMatrixError(
            f"matrix is not positive definite: non-positive pivot at index {fail}",
            pivot=int(fail),
        )
    return l


def solve_spd(a, b):
    """Solve A x = b for symmetric positive-definite A via Cholesky."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.ndim != 1:
        raise ShapeError(f"right-hand side must be a vector, got shape {b.shape}")
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise ShapeError(f"incompatible shapes {a.shape} and {b.shape}")
    l = cholesky(a)
    y = _accel.forward_solve(l, b)
    return _accel.back_solve(l, y)


def condition_number(a):
    """Ratio of largest to smallest eigenvalue of a symmetric psd matrix.

    Returns ``math.inf`` when the smallest eigenvalue is below
    ``RANK_RTOL`` times the largest (rank-deficient to working precision).
    """
    evd = sym_evd(a)
    lam_max = float(evd.eigenvalues[0])
    lam_min = float(evd.eigenvalues[-1])
    if lam_max <= 0.0:
        return math.inf
    if lam_min <= RANK_RTOL * lam_max:
        return math.inf
    return lam_max / lam_min
