"""Exact enumeration and classification of sphere stationary points.

A point x on the unit sphere is stationary for f(x) = 1/2 x^T A x + g^T x iff
A x + g = lambda x for some multiplier lambda.  Working in the eigenbasis
A = Q diag(w) Q^T with ghat = Q^T g, the coordinates obey
(w_i - lambda) xhat_i = -ghat_i, so away from the spectrum

    xhat_i = ghat_i / (lambda - w_i),

and the feasibility constraint ||xhat|| = 1 becomes the secular equation

    psi(lambda) = sum_i ghat_i^2 / (lambda - w_i)^2 = 1.

psi is strictly convex between consecutive poles (eigenvalues with nonzero
ghat weight), which gives 0, 1 or 2 roots per bounded pole gap and exactly
one root beyond each end of the spectrum.  Eigenvalue clusters whose ghat
coordinates all vanish contribute the degenerate branch: lambda equals the
cluster eigenvalue, the coordinates off the cluster are fixed, and whatever
norm is left over can point anywhere inside the cluster eigenspace -- a
continuum of stationary points when the cluster has dimension >= 2.

Classification attaches the spectrum of the shifted matrix
Phi = A - lambda I at each point: whether Phi is singular, its extreme
singular values, whether the tangent-restricted quadratic form is definite,
and the predicted inequality exponent (1/2 in the benign regimes, 3/4
otherwise).

Brute-force oracles for n = 2 (angle scan) and n = 3 (spherical-grid scan)
provide an independent cross-check of the enumeration; they never touch the
secular equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SymMatrix, restrict_to_tangent, sym_eigh, tangent_basis
from .problem import Problem, SpherePoint, multiplier, objective

CASE_I = "CaseI"
CASE_III_POSSIBLE = "CaseIII_possible"
CASE_G_ZERO = "g_zero"

KKT_RTOL = 1e-9
DEDUP_TOL = 1e-6
_GHAT_RTOL = 1e-10
_POLE_GUARD = 1e-12


class SecularRootError(RuntimeError):
    """Root refinement failed to converge on a pole interval."""

    def __init__(self, interval: tuple[float, float], detail: str):
        self.interval = interval
        super().__init__(
            f"secular root search failed on interval ({interval[0]!r}, {interval[1]!r}): {detail}"
        )


@dataclass(frozen=True)
class StationaryPoint:
    """A stationary point with its multiplier and shifted-spectrum summary.

    ``sigma_plus`` / ``sigma_max`` are the smallest nonzero and largest
    singular values of Phi = A - lambda I (both 0.0 when Phi vanishes);
    ``corollary2_holds`` records whether the tangent restriction of Phi is
    definite; ``predicted_theta`` is 1/2 when Phi is nonsingular, g == 0, or
    the tangent restriction is definite, and 3/4 otherwise.
    """

    point: SpherePoint
    lam: float
    f_value: float
    sigma_plus: float
    sigma_max: float
    phi_singular: bool
    case_tag: str
    corollary2_holds: bool
    predicted_theta: float
    is_isolated: bool

    @property
    def x(self) -> np.ndarray:
        return self.point.x


@dataclass(frozen=True)
class ContinuumFamily:
    """A degenerate family: fixed component plus a sphere inside an eigenspace.

    Members are Q @ (fixed_hat + radius * u) over unit u in the span of the
    cluster columns; ``basis`` holds those columns in original coordinates.
    """

    lam: float
    radius: float
    fixed: np.ndarray
    basis: np.ndarray
    dimension: int

    def distance(self, x: np.ndarray) -> float:
        """Distance-like residual of x from the family (0 for members)."""
        in_plane = self.basis.T @ x
        fixed_residual = x - self.basis @ in_plane - self.fixed
        radial_residual = np.linalg.norm(in_plane) - self.radius
        return float(np.hypot(np.linalg.norm(fixed_residual), radial_residual))


@dataclass(frozen=True)
class StationarySet:
    points: list[StationaryPoint]
    has_continuum: bool
    continuum_families: list[ContinuumFamily]

    def global_minimizer(self) -> StationaryPoint:
        return self.points[0]


def tol_singular(problem: Problem) -> float:
    """Threshold separating 'Phi singular' from numerically nonsingular."""
    return 1e-8 * (1.0 + problem.A.fro_norm())


def classify(
    problem: Problem, x: SpherePoint, is_isolated: bool = True
) -> StationaryPoint:
    """Complete a stationary point: spectrum summary, case tag, exponent.

    x must already satisfy the stationarity residual
    ||A x + g - lambda x|| <= 1e-9 * (1 + ||A||_F + ||g||) with the
    multiplier lambda = x^T (A x + g), which is also the value stored.
    """
    lam = multiplier(problem, x)
    residual = float(np.linalg.norm(problem.A.mat @ x.x + problem.g - lam * x.x))
    scale = problem.scale()
    if residual > KKT_RTOL * scale:
        raise ValueError(
            f"point is not stationary: residual {residual:.3e} > {KKT_RTOL * scale:.3e}"
        )
    tol = tol_singular(problem)
    shifts = np.abs(problem.eigendecomposition().eigvals - lam)
    phi_singular = bool(shifts.min() <= tol)
    nonzero = shifts[shifts > tol]
    sigma_plus = float(nonzero.min()) if nonzero.size else 0.0
    sigma_max = float(shifts.max())
    g_zero = problem.g_is_zero()

    phi = SymMatrix(problem.A.mat - lam * np.eye(problem.n))
    restricted = sym_eigh(restrict_to_tangent(phi, x.x)).eigvals
    corollary2 = bool(
        np.abs(restricted).min() > tol
        and (np.all(restricted > 0.0) or np.all(restricted < 0.0))
    )

    if g_zero:
        tag = CASE_G_ZERO
    elif not phi_singular:
        tag = CASE_I
    else:
        tag = CASE_III_POSSIBLE
    predicted = 0.5 if ((not phi_singular) or g_zero or corollary2) else 0.75
    return StationaryPoint(
        point=x,
        lam=lam,
        f_value=objective(problem, x),
        sigma_plus=sigma_plus,
        sigma_max=sigma_max,
        phi_singular=phi_singular,
        case_tag=tag,
        corollary2_holds=corollary2,
        predicted_theta=predicted,
        is_isolated=is_isolated,
    )


def designated_case3_point(problem: Problem, x_star: SpherePoint) -> StationaryPoint:
    """Classify the designated point returned alongside a make_case3 instance."""
    return classify(problem, x_star)


# ---------------------------------------------------------------------------
# Secular equation machinery
# ---------------------------------------------------------------------------


def _psi(lam: float, poles: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(weights / (lam - poles) ** 2))


def _psi_prime(lam: float, poles: np.ndarray, weights: np.ndarray) -> float:
    return float(-2.0 * np.sum(weights / (lam - poles) ** 3))


def _refine_root(
    lo: float,
    hi: float,
    poles: np.ndarray,
    weights: np.ndarray,
    interval: tuple[float, float],
) -> float:
    """Safeguarded Newton for psi(lambda) = 1 on a sign-changing bracket."""
    f_lo = _psi(lo, poles, weights) - 1.0
    f_hi = _psi(hi, poles, weights) - 1.0
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise SecularRootError(interval, "no sign change in bracket")
    lam = 0.5 * (lo + hi)
    best = lam
    best_val = np.inf
    for _ in range(200):
        val = _psi(lam, poles, weights) - 1.0
        if abs(val) < best_val:
            best, best_val = lam, abs(val)
        if abs(val) <= 5e-14:
            return lam
        if (val > 0.0) == (f_lo > 0.0):
            lo = lam
        else:
            hi = lam
        if hi - lo <= 4.0 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi)):
            return best
        slope = _psi_prime(lam, poles, weights)
        step_ok = slope != 0.0 and np.isfinite(slope)
        nxt = lam - val / slope if step_ok else lam
        if not step_ok or not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        lam = nxt
    return best


def _interval_minimum(
    a: float, b: float, poles: np.ndarray, weights: np.ndarray
) -> float:
    """Minimizer of the strictly convex psi on [a, b] via bisection on psi'."""
    da = _psi_prime(a, poles, weights)
    db = _psi_prime(b, poles, weights)
    if da >= 0.0:
        return a
    if db <= 0.0:
        return b
    lo, hi = a, b
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _psi_prime(mid, poles, weights) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def _secular_multipliers(poles: np.ndarray, weights: np.ndarray) -> list[float]:
    """All solutions of psi(lambda) = 1 given pole locations and weights."""
    order = np.argsort(poles)
    poles = poles[order]
    weights = weights[order]
    guard = _POLE_GUARD * (1.0 + np.abs(poles))
    total = float(np.sum(weights))
    roots: list[float] = []

    # Left of the spectrum: psi increases from 0 to +inf, exactly one root.
    a = poles[0] - max(1.0, 2.0 * np.sqrt(total))
    b = poles[0] - guard[0]
    if _psi(a, poles, weights) >= 1.0 or _psi(b, poles, weights) <= 1.0:
        raise SecularRootError((a, b), "unbounded-left bracket failed")
    roots.append(_refine_root(a, b, poles, weights, (-np.inf, poles[0])))

    # Right of the spectrum: mirror image.
    a = poles[-1] + guard[-1]
    b = poles[-1] + max(1.0, 2.0 * np.sqrt(total))
    if _psi(a, poles, weights) <= 1.0 or _psi(b, poles, weights) >= 1.0:
        raise SecularRootError((a, b), "unbounded-right bracket failed")
    roots.append(_refine_root(a, b, poles, weights, (poles[-1], np.inf)))

    # Bounded gaps: psi is convex with psi -> +inf at both ends, so the
    # interior minimum decides between zero, one (tangency) and two roots.
    for i in range(poles.size - 1):
        a = poles[i] + guard[i]
        b = poles[i + 1] - guard[i + 1]
        if a >= b:
            continue
        interval = (poles[i], poles[i + 1])
        m = _interval_minimum(a, b, poles, weights)
        pm = _psi(m, poles, weights)
        if pm > 1.0 + 1e-12:
            continue
        if pm >= 1.0 - 1e-12:
            roots.append(m)
            continue
        if _psi(a, poles, weights) <= 1.0 or _psi(b, poles, weights) <= 1.0:
            raise SecularRootError(interval, "pole-adjacent value not above 1")
        roots.append(_refine_root(a, m, poles, weights, interval))
        roots.append(_refine_root(m, b, poles, weights, interval))
    return roots


def enumerate_stationary(problem: Problem, tol: float = 1e-8) -> StationarySet:
    """All stationary points of the instance, via the secular equation.

    ``tol`` controls the degenerate branch: a cluster family is admitted when
    its leftover squared radius is >= -tol, and counts as a continuum when
    the radius exceeds tol and the cluster eigenspace has dimension >= 2.
    Eigenbasis coordinates of g below 1e-10 * (1 + ||g||) are treated as
    exact zeros, which routes their eigenvalue cluster to the degenerate
    branch.
    """
    if not (0.0 < tol <= 1e-6):
        raise ValueError(f"tol must lie in (0, 1e-6], got {tol}")
    eig = problem.eigendecomposition()
    q = eig.eigvecs
    ghat = q.T @ problem.g
    gtol = _GHAT_RTOL * (1.0 + float(np.linalg.norm(problem.g)))
    ghat = np.where(np.abs(ghat) > gtol, ghat, 0.0)

    clusters = eig.clusters(problem.A.fro_norm())
    candidates: list[tuple[np.ndarray, bool, bool]] = []  # (xhat, isolated, droppable)
    families: list[ContinuumFamily] = []

    pole_vals = []
    pole_weights = []
    zero_clusters = []
    for idx in clusters:
        w = float(np.sum(ghat[idx] ** 2))
        lam_c = float(np.mean(eig.eigvals[idx]))
        if w > 0.0:
            pole_vals.append(lam_c)
            pole_weights.append(w)
        else:
            zero_clusters.append((lam_c, idx))

    # Non-degenerate branch: secular roots between/beyond the poles.
    if pole_vals:
        poles = np.array(pole_vals)
        weights = np.array(pole_weights)
        for lam in _secular_multipliers(poles, weights):
            denom = lam - eig.eigvals
            xhat = np.zeros(problem.n)
            nz = ghat != 0.0
            xhat[nz] = ghat[nz] / denom[nz]
            candidates.append((xhat, True, False))

    # Degenerate branch: clusters invisible to g.
    for lam_c, idx in zero_clusters:
        fixed = np.zeros(problem.n)
        nz = ghat != 0.0
        fixed[nz] = ghat[nz] / (lam_c - eig.eigvals[nz])
        r_sq = 1.0 - float(np.sum(fixed**2))
        if r_sq < -tol:
            continue
        r = float(np.sqrt(max(r_sq, 0.0)))
        isolated = r <= tol or idx.size == 1
        spurious_tangency = r_sq < 0.0
        for i in idx:
            for sign in (1.0, -1.0):
                xhat = fixed.copy()
                xhat[i] += sign * r
                candidates.append((xhat, isolated, spurious_tangency))
        if r > tol and idx.size >= 2:
            families.append(
                ContinuumFamily(
                    lam=lam_c,
                    radius=r,
                    fixed=q @ fixed,
                    basis=q[:, idx],
                    dimension=int(idx.size),
                )
            )

    points: list[StationaryPoint] = []
    for xhat, isolated, droppable in candidates:
        x = SpherePoint.project(q @ xhat)
        try:
            sp = classify(problem, x, is_isolated=isolated)
        except ValueError:
            if droppable:
                # nearly tangent family with r^2 slightly negative: the true
                # stationary points are the adjacent secular roots
                continue
            raise
        points.append(sp)

    points = _dedup(points)
    points.sort(key=lambda p: (p.f_value, p.lam, tuple(p.x)))
    return StationarySet(
        points=points,
        has_continuum=bool(families),
        continuum_families=families,
    )


def _dedup(points: list[StationaryPoint]) -> list[StationaryPoint]:
    kept: list[StationaryPoint] = []
    for p in points:
        if all(np.linalg.norm(p.x - k.x) > DEDUP_TOL for k in kept):
            kept.append(p)
    return kept


# ---------------------------------------------------------------------------
# Brute-force oracles (independent of the secular equation)
# ---------------------------------------------------------------------------


def brute_force_stationary(problem: Problem, grid_density: int = 10000) -> StationarySet:
    """Grid-scan oracle for n in {2, 3}; raises for larger dimensions.

    n = 2 scans the angle parametrization x(t) = (cos t, sin t) for sign
    changes of d/dt f(x(t)) and bisects each to width 1e-10.  n = 3 scans a
    spherical-coordinate grid for local minima of the projected-gradient norm
    and refines each candidate by projected descent on that norm followed by
    a two-variable tangent-coordinate Newton polish.
    """
    if problem.n == 2:
        points = _brute_force_circle(problem, grid_density)
    elif problem.n == 3:
        points = _brute_force_sphere(problem, grid_density)
    else:
        raise ValueError(f"brute force supports n in {{2, 3}}, got n={problem.n}")
    points = _dedup(points)
    points.sort(key=lambda p: (p.f_value, p.lam, tuple(p.x)))
    return StationarySet(points=points, has_continuum=False, continuum_families=[])


def _brute_force_circle(problem: Problem, grid_density: int) -> list[StationaryPoint]:
    a = problem.A.mat
    g = problem.g

    def dfdt(t: np.ndarray) -> np.ndarray:
        ct, st = np.cos(t), np.sin(t)
        x = np.stack([ct, st], axis=-1)
        tangent = np.stack([-st, ct], axis=-1)
        grad = x @ a + g
        return np.sum(grad * tangent, axis=-1)

    ts = np.linspace(0.0, 2.0 * np.pi, grid_density, endpoint=False)
    vals = dfdt(ts)
    roots = []
    for i in range(grid_density):
        j = (i + 1) % grid_density
        lo, hi = ts[i], ts[i] + (2.0 * np.pi / grid_density)
        flo, fhi = vals[i], vals[j]
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi >= 0.0:
            continue
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            fm = float(dfdt(np.array([mid]))[0])
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0.0) == (flo > 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    out = []
    for t in roots:
        x = SpherePoint(np.array([np.cos(t), np.sin(t)]))
        out.append(classify(problem, x))
    return out


def _brute_force_sphere(problem: Problem, grid_density: int) -> list[StationaryPoint]:
    a = problem.A.mat
    g = problem.g

    def residual(x: np.ndarray) -> np.ndarray:
        grad = x @ a + g
        s = np.sum(x * grad, axis=-1, keepdims=True)
        return grad - s * x

    nu = max(12, int(np.sqrt(grid_density / 2.0)))
    nv = 2 * nu
    us = (np.arange(nu) + 0.5) * (np.pi / nu)
    vs = np.arange(nv) * (2.0 * np.pi / nv)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    grid = np.stack(
        [np.sin(uu) * np.cos(vv), np.sin(uu) * np.sin(vv), np.cos(uu)], axis=-1
    )
    norms = np.linalg.norm(residual(grid.reshape(-1, 3)), axis=-1).reshape(nu, nv)

    starts = []
    for i in range(nu):
        for j in range(nv):
            val = norms[i, j]
            neighbors = []
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ii = i + di
                    jj = (j + dj) % nv
                    if 0 <= ii < nu:
                        neighbors.append(norms[ii, jj])
            if val <= min(neighbors):
                starts.append(grid[i, j])
    starts.append(np.array([0.0, 0.0, 1.0]))
    starts.append(np.array([0.0, 0.0, -1.0]))

    out = []
    for x0 in starts:
        x = _refine_on_sphere(problem, x0)
        if x is None:
            continue
        sp_x = SpherePoint(x)
        if np.linalg.norm(residual(x)) <= 1e-9 * problem.scale():
            out.append(classify(problem, sp_x))
    return out


def _refine_on_sphere(problem: Problem, x0: np.ndarray) -> np.ndarray | None:
    """Drive the projected-gradient norm to ~0 from a grid candidate.

    Projected descent on h(x) = 0.5 ||r(x)||^2 handles the approach; a
    2-variable Newton iteration in tangent coordinates (finite-difference
    Jacobian, so still independent of any eigendecomposition) polishes the
    final digits.  Returns None when the candidate does not converge, which
    discards spurious positive local minima of the norm surface.
    """
    a = problem.A.mat
    g = problem.g

    def r(x: np.ndarray) -> np.ndarray:
        grad = a @ x + g
        return grad - x * float(x @ grad)

    def h(x: np.ndarray) -> float:
        return 0.5 * float(np.sum(r(x) ** 2))

    x = x0 / np.linalg.norm(x0)
    step = 1.0 / (1.0 + float(np.linalg.norm(a, "fro")) ** 2)
    for _ in range(200):
        res = r(x)
        if np.linalg.norm(res) <= 1e-12 * problem.scale():
            break
        grad_f = a @ x + g
        s = float(x @ grad_f)
        jac = a - s * np.eye(3) - np.outer(x, 2.0 * a @ x + g)
        grad_h = jac.T @ res
        grad_h -= x * float(x @ grad_h)
        if np.linalg.norm(grad_h) == 0.0:
            break
        alpha = step
        base = h(x)
        for _ in range(40):
            trial = x - alpha * grad_h
            trial /= np.linalg.norm(trial)
            if h(trial) < base:
                x = trial
                break
            alpha *= 0.5
        else:
            break

    # Newton polish in tangent coordinates.
    for _ in range(40):
        res = r(x)
        if np.linalg.norm(res) <= 1e-12 * problem.scale():
            return x
        basis = tangent_basis(x).basis
        f0 = basis.T @ res

        def f_local(y: np.ndarray) -> np.ndarray:
            trial = x + basis @ y
            trial = trial / np.linalg.norm(trial)
            return basis.T @ r(trial)

        eps = 1e-7
        jac = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = eps
            jac[:, k] = (f_local(e) - f_local(-e)) / (2.0 * eps)
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        if det == 0.0 or not np.isfinite(det):
            return None
        dy = np.array(
            [
                (-f0[0] * jac[1, 1] + f0[1] * jac[0, 1]) / det,
                (-f0[1] * jac[0, 0] + f0[0] * jac[1, 0]) / det,
            ]
        )
        if not np.all(np.isfinite(dy)) or np.linalg.norm(dy) > 0.5:
            return None
        x = x + basis @ dy
        x = x / np.linalg.norm(x)
    res = r(x)
    if np.linalg.norm(res) <= 1e-10 * problem.scale():
        return x
    return None


def nearest_stationary_point(
    stationary_set: StationarySet, x: np.ndarray
) -> StationaryPoint:
    """The enumerated point closest to x in Euclidean distance."""
    dists = [np.linalg.norm(sp.x - x) for sp in stationary_set.points]
    return stationary_set.points[int(np.argmin(dists))]


def match_point_sets(
    left: StationarySet, right: StationarySet, tol: float = DEDUP_TOL
) -> bool:
    """True when the two sets match one-to-one within tol."""
    if len(left.points) != len(right.points):
        return False
    remaining = list(right.points)
    for p in left.points:
        hit = next(
            (q for q in remaining if np.linalg.norm(p.x - q.x) <= tol), None
        )
        if hit is None:
            return False
        remaining.remove(hit)
    return True
