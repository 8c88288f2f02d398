"""Dense symmetric linear algebra built from scratch.

Everything here is self-contained: the eigensolver is a cyclic Jacobi
iteration and tangent bases come from a single Householder reflector, so no
factorization is delegated to an external numerical library.  numpy is used
as the array container and for BLAS-1 style arithmetic only.

The three building blocks are

* :func:`sym_eigh` -- full eigendecomposition A = Q diag(w) Q^T,
* :func:`tangent_basis` -- an exactly orthonormal basis of the hyperplane
  orthogonal to a unit vector x (the tangent space of the unit sphere at x),
* :func:`restrict_to_tangent` -- the (n-1)x(n-1) quadratic form B^T M B of a
  symmetric M on that tangent space.

All outputs are deterministic functions of their inputs and are returned as
read-only arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Relative gap below which two eigenvalues are treated as one cluster; the
# secular-equation hard-case branch downstream relies on this grouping.
CLUSTER_RTOL = 1e-9

_JACOBI_MAX_SWEEPS = 30
_DEFAULT_EIG_TOL = 1e-12


class JacobiConvergenceError(RuntimeError):
    """Jacobi sweeps hit the cap before the off-diagonal norm dropped enough."""

    def __init__(self, residual: float, target: float, sweeps: int):
        self.residual = residual
        self.target = target
        self.sweeps = sweeps
        super().__init__(
            f"Jacobi eigensolver did not converge in {sweeps} sweeps: "
            f"off-diagonal norm {residual:.3e} > target {target:.3e}"
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix with exact symmetry enforced at construction.

    The input is symmetrized as (M + M^T)/2, so ``mat[i, j] == mat[j, i]``
    holds bitwise.  Entries must be finite.
    """

    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "mat", _readonly((m + m.T) / 2.0))

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def fro_norm(self) -> float:
        return float(np.linalg.norm(self.mat, "fro"))


@dataclass(frozen=True)
class EigenDecomp:
    """Eigendecomposition with eigenvalues ascending and signed eigenvectors.

    Column ``eigvecs[:, i]`` pairs with ``eigvals[i]``.  Each eigenvector is
    flipped so its component of largest absolute value is nonnegative, which
    makes repeated runs (and golden files) reproducible.
    """

    eigvals: np.ndarray
    eigvecs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigvals", _readonly(self.eigvals))
        object.__setattr__(self, "eigvecs", _readonly(self.eigvecs))

    @property
    def n(self) -> int:
        return self.eigvals.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.eigvecs * self.eigvals) @ self.eigvecs.T

    def clusters(self, scale: float) -> list[np.ndarray]:
        """Group indices of equal eigenvalues, gap tolerance CLUSTER_RTOL*scale."""
        tol = CLUSTER_RTOL * (1.0 + scale)
        groups: list[np.ndarray] = []
        start = 0
        for i in range(1, self.n + 1):
            if i == self.n or self.eigvals[i] - self.eigvals[i - 1] > tol:
                groups.append(np.arange(start, i))
                start = i
        return groups


@dataclass(frozen=True)
class TangentBasis:
    """Orthonormal basis of the hyperplane orthogonal to a unit vector.

    ``basis`` is n x (n-1) with exactly orthonormal columns (they are columns
    of a Householder reflector), each orthogonal to ``base``; together with
    ``base`` they span R^n, so basis @ basis.T == I - base base^T.
    """

    base: np.ndarray
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "base", _readonly(self.base))
        object.__setattr__(self, "basis", _readonly(self.basis))


def _offdiag_norm(a: np.ndarray) -> float:
    # Computed from the off-diagonal entries themselves; the textbook
    # ||A||_F^2 - ||diag||^2 difference cancels catastrophically once the
    # matrix is nearly diagonal.
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off, "fro"))


def sym_eigh(a: SymMatrix | np.ndarray, tol: float = _DEFAULT_EIG_TOL) -> EigenDecomp:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps rotate away each off-diagonal pair in row order, skipping entries
    already below the per-element threshold; convergence is declared when the
    off-diagonal Frobenius norm is <= tol * ||A||_F.  The rotation product is
    accumulated, so the returned eigenvector matrix is orthogonal to rounding
    error regardless of eigenvalue clustering.

    Raises JacobiConvergenceError (carrying the residual achieved) if 30 full
    sweeps do not reach the target.
    """
    if not (0.0 < tol <= 1e-6):
        raise ValueError(f"tol must lie in (0, 1e-6], got {tol}")
    if isinstance(a, SymMatrix):
        work = a.mat.copy()
    else:
        work = SymMatrix(np.asarray(a)).mat.copy()
    n = work.shape[0]
    q = np.eye(n)
    fro = np.linalg.norm(work, "fro")
    if fro == 0.0:
        return _sorted_decomp(np.zeros(n), q)
    target = tol * fro
    off = _offdiag_norm(work)
    sweeps = 0
    while off > target:
        if sweeps >= _JACOBI_MAX_SWEEPS:
            raise JacobiConvergenceError(off, target, sweeps)
        # If every |a_pq| <= target/n then off <= target already, so skipping
        # small entries cannot mask non-convergence.
        skip = target / n
        for p in range(n - 1):
            for q_i in range(p + 1, n):
                apq = work[p, q_i]
                if abs(apq) <= skip:
                    continue
                tau = (work[q_i, q_i] - work[p, p]) / (2.0 * apq)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                _rotate(work, q, p, q_i, c, s)
        off = _offdiag_norm(work)
        sweeps += 1
    return _sorted_decomp(np.diag(work).copy(), q)


def _rotate(a: np.ndarray, q: np.ndarray, p: int, r: int, c: float, s: float):
    # A <- J^T A J and Q <- Q J for the (p, r) rotation [[c, s], [-s, c]].
    ap = a[:, p].copy()
    ar = a[:, r].copy()
    a[:, p] = c * ap - s * ar
    a[:, r] = s * ap + c * ar
    ap = a[p, :].copy()
    ar = a[r, :].copy()
    a[p, :] = c * ap - s * ar
    a[r, :] = s * ap + c * ar
    qp = q[:, p].copy()
    qr = q[:, r].copy()
    q[:, p] = c * qp - s * qr
    q[:, r] = s * qp + c * qr


def _sorted_decomp(vals: np.ndarray, vecs: np.ndarray) -> EigenDecomp:
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    # Sign convention: component of largest magnitude (first on ties) >= 0.
    for i in range(vecs.shape[1]):
        col = vecs[:, i]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0.0:
            vecs[:, i] = -col
    return EigenDecomp(vals, vecs)


def tangent_basis(x: np.ndarray) -> TangentBasis:
    """Orthonormal basis of {v : v^T x = 0} for a unit vector x.

    Uses the Householder reflector H = I - 2 v v^T / (v^T v) with
    v = x + sign(x_k) e_k and k = argmax |x_k|; H maps x to -sign(x_k) e_k,
    so the remaining n-1 columns of H are exactly orthonormal and orthogonal
    to x.  Rejects inputs with | ||x|| - 1 | > 1e-12.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("x must be a vector of dimension >= 2")
    nrm = float(np.linalg.norm(x))
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"x must be a unit vector, got norm {nrm!r}")
    n = x.shape[0]
    k = int(np.argmax(np.abs(x)))
    sign = 1.0 if x[k] >= 0.0 else -1.0
    v = x.copy()
    v[k] += sign
    h = np.eye(n) - (2.0 / np.dot(v, v)) * np.outer(v, v)
    cols = [j for j in range(n) if j != k]
    return TangentBasis(base=x, basis=h[:, cols])


def restrict_to_tangent(m: SymMatrix | np.ndarray, x: np.ndarray) -> SymMatrix:
    """Quadratic form of a symmetric matrix on the tangent space at x.

    Returns B^T M B for B = tangent_basis(x).basis; its spectrum equals the
    spectrum of (I - x x^T) M (I - x x^T) with the artificial zero along x
    removed.
    """
    mat = m.mat if isinstance(m, SymMatrix) else np.asarray(m, dtype=float)
    b = tangent_basis(x).basis
    return SymMatrix(b.T @ mat @ b)
