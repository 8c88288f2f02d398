"""Gradient-inequality measurement near stationary points.

Near a stationary point x* the inequality of interest bounds the objective
gap by the projected-gradient norm,

    |f(x) - f(x*)|^theta <= C * ||(I - x x^T)(A x + g)||,

for all feasible x close to x*.  This module samples sphere caps around x*,
computes the pair (L, R) = (objective gap, projected-gradient norm) for each
sample, and estimates the binding exponent from the lower envelope of the
(log L, log R) cloud: within each log-L bin only the direction with the
smallest gradient norm can saturate the inequality, so the envelope slope a
of log L = a log R + b gives theta = 1/a.

The objective gap is evaluated through the exact quadratic identity

    f(x) - f(x*) = 1/2 (x - x*)^T (A - lambda* I) (x - x*),

which is free of the catastrophic cancellation a naive subtraction suffers
at small radii.

For points where Phi = A - lambda* I is singular, the module also splits
x - x* into null-space and range-space components of Phi, extracts the
collinearity coefficient xi when Phi eta is parallel to x*, and evaluates
the closed-form bounds (sigma_max/2)||eta||^2 on the gap and
sqrt(2) sigma_+^{3/2} / sigma_max ||eta||^{3/2} on the gradient norm that
hold in that regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import _readonly, tangent_basis
from .problem import (
    Problem,
    SpherePoint,
    _seeded_rng,
    min_norm_subgradient,
    riemannian_grad,
)
from .stationary import StationaryPoint, tol_singular

DEFAULT_RADII = tuple(np.geomspace(1e-1, 1e-4, 7))
CULL_THRESHOLD = 1e-15


class InsufficientDataError(RuntimeError):
    """Too few envelope points survived culling to fit an exponent."""


class NotApplicableError(ValueError):
    """The requested decomposition/bounds need a singular shifted matrix."""


@dataclass(frozen=True)
class LojaSample:
    """One measurement: objective gap L, gradient norms, distance from x*."""

    point: SpherePoint
    L: float
    R: float
    R_subgrad: float
    radius: float


@dataclass(frozen=True)
class LojaEstimate:
    """Fitted exponent and constant from the sampled lower envelope.

    ``envelope`` holds the (log10 L, log10 R) pairs kept per bin; ``C_hat``
    is max over every retained sample of L^theta_hat / R, so
    L^theta_hat <= C_hat * R holds on the whole sample set by construction.
    """

    theta_hat: float
    C_hat: float
    slope_stderr: float
    envelope: np.ndarray
    radii_schedule: tuple[float, ...]
    n_samples: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "envelope", _readonly(self.envelope))


@dataclass(frozen=True)
class CaseDecomposition:
    """Split of the displacement x - x* against the spectrum of Phi.

    delta lies in the null space of Phi, eta in its range space;
    residual_perp = ||(I - x* x*^T) Phi eta|| measures how far Phi eta is
    from the span of x*, and xi = x*^T Phi eta is recorded when that
    residual is negligible (Phi eta = xi x*).
    """

    delta_cap: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    xi: float | None
    residual_perp: float

    def __post_init__(self):
        object.__setattr__(self, "delta_cap", _readonly(self.delta_cap))
        object.__setattr__(self, "delta", _readonly(self.delta))
        object.__setattr__(self, "eta", _readonly(self.eta))


@dataclass(frozen=True)
class TheoreticalBounds:
    upper_L: float
    lower_R: float
    delta_sq_bounds: tuple[float, float]


@dataclass(frozen=True)
class SampleBatch:
    """Vectorized cap measurements (before culling)."""

    L: np.ndarray
    R: np.ndarray
    R_subgrad: np.ndarray
    radius: np.ndarray


def sample_cap(
    x_star: SpherePoint, radius: float, m: int, seed: int
) -> list[SpherePoint]:
    """m feasible points within chord distance ``radius`` of x*.

    Each sample is cos(t) x* + sin(t) d with d uniform on the unit sphere of
    the tangent space at x* and the chord ||x - x*|| uniform on (0, radius].
    Deterministic for a fixed seed.
    """
    xs = _sample_cap_array(x_star, radius, m, _seeded_rng(seed, 10))
    return [SpherePoint(row) for row in xs]


def _sample_cap_array(
    x_star: SpherePoint, radius: float, m: int, rng: np.random.Generator
) -> np.ndarray:
    if not (0.0 < radius <= 1.0):
        raise ValueError(f"radius must lie in (0, 1], got {radius}")
    if m < 1:
        raise ValueError("need at least one sample")
    n = x_star.n
    basis = tangent_basis(x_star.x).basis
    z = rng.standard_normal((m, n - 1))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    dirs = z @ basis.T
    chords = radius * (1.0 - rng.random(m))  # uniform on (0, radius]
    t = 2.0 * np.arcsin(chords / 2.0)
    return np.cos(t)[:, None] * x_star.x[None, :] + np.sin(t)[:, None] * dirs


def _phi_of(problem: Problem, sp: StationaryPoint) -> np.ndarray:
    return problem.A.mat - sp.lam * np.eye(problem.n)


def _measure_batch(
    problem: Problem, sp: StationaryPoint, xs: np.ndarray
) -> SampleBatch:
    phi = _phi_of(problem, sp)
    delta = xs - sp.x[None, :]
    l_vals = np.abs(0.5 * np.sum((delta @ phi) * delta, axis=1))
    grads = xs @ problem.A.mat + problem.g[None, :]
    s = np.sum(xs * grads, axis=1)
    proj = grads - s[:, None] * xs
    r_vals = np.linalg.norm(proj, axis=1)
    full = np.linalg.norm(grads, axis=1)
    r_sub = np.where(s <= 0.0, r_vals, full)
    radii = np.linalg.norm(delta, axis=1)
    return SampleBatch(L=l_vals, R=r_vals, R_subgrad=r_sub, radius=radii)


def measure(problem: Problem, sp: StationaryPoint, x: SpherePoint) -> LojaSample:
    """The (L, R) pair at a single feasible point.

    L is the objective gap |f(x) - f(x*)| computed through the quadratic
    displacement identity; R is the projected-gradient norm evaluated
    directly; R_subgrad is the minimum-norm-subgradient norm (>= R always).
    """
    phi = _phi_of(problem, sp)
    d = x.x - sp.x
    l_val = abs(0.5 * float(d @ (phi @ d)))
    r_val = riemannian_grad(problem, x).norm
    r_sub = min_norm_subgradient(problem, x).norm
    return LojaSample(
        point=x, L=l_val, R=r_val, R_subgrad=r_sub, radius=float(np.linalg.norm(d))
    )


def tangent_null_directions(problem: Problem, sp: StationaryPoint) -> np.ndarray:
    """Unit tangent directions spanning null(Phi) projected to the tangent space.

    These are the only directions along which the objective gap can shrink
    like the fourth power of the step while the gradient norm shrinks like
    the third, i.e. the directions that realize the 3/4 exponent.
    """
    eig = problem.eigendecomposition()
    tol = tol_singular(problem)
    null_cols = eig.eigvecs[:, np.abs(eig.eigvals - sp.lam) <= tol]
    dirs = []
    for k in range(null_cols.shape[1]):
        v = null_cols[:, k]
        v = v - sp.x * float(sp.x @ v)
        nrm = float(np.linalg.norm(v))
        if nrm > 1e-8:
            dirs.append(v / nrm)
    return np.array(dirs) if dirs else np.empty((0, problem.n))


def collect_samples(
    problem: Problem,
    sp: StationaryPoint,
    radii: tuple[float, ...] = DEFAULT_RADII,
    m_per_radius: int = 2000,
    seed: int = 0,
    sampling: str = "caps",
) -> SampleBatch:
    """Measured samples over the whole radius schedule, concatenated.

    sampling="caps" draws m_per_radius random cap points per radius level.
    sampling="null_probes" instead walks the geodesics along each tangent
    null direction of Phi with log-spaced chords spanning the schedule's
    range; random cap directions essentially never align with those worst
    directions once the sphere dimension exceeds 2, so this mode is how the
    3/4 regime is actually observed there.
    """
    radii = tuple(float(r) for r in radii)
    if not radii or any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("radii must be nonempty and strictly decreasing")
    if max(radii) > 0.5:
        raise ValueError("radii must not exceed 0.5")
    batches = []
    if sampling == "caps":
        for level, radius in enumerate(radii):
            xs = _sample_cap_array(
                SpherePoint(sp.x), radius, m_per_radius, _seeded_rng(seed, 10, level)
            )
            batches.append(_measure_batch(problem, sp, xs))
    elif sampling == "null_probes":
        dirs = tangent_null_directions(problem, sp)
        if dirs.size == 0:
            raise NotApplicableError(
                "no tangent null directions: Phi is nonsingular or its null "
                "space is radial"
            )
        t = np.geomspace(
            2.0 * np.arcsin(min(radii) / 2.0),
            2.0 * np.arcsin(max(radii) / 2.0),
            m_per_radius,
        )
        for k in range(dirs.shape[0]):
            for sgn in (1.0, -1.0):
                xs = (
                    np.cos(t)[:, None] * sp.x[None, :]
                    + np.sin(t)[:, None] * (sgn * dirs[k])[None, :]
                )
                batches.append(_measure_batch(problem, sp, xs))
    else:
        raise ValueError(f"unknown sampling mode {sampling!r}")
    return SampleBatch(
        L=np.concatenate([b.L for b in batches]),
        R=np.concatenate([b.R for b in batches]),
        R_subgrad=np.concatenate([b.R_subgrad for b in batches]),
        radius=np.concatenate([b.radius for b in batches]),
    )


def _retained(batch: SampleBatch) -> SampleBatch:
    keep = (batch.L > CULL_THRESHOLD) & (batch.R > CULL_THRESHOLD)
    return SampleBatch(
        L=batch.L[keep],
        R=batch.R[keep],
        R_subgrad=batch.R_subgrad[keep],
        radius=batch.radius[keep],
    )


def lower_envelope(batch: SampleBatch, n_bins: int = 20) -> np.ndarray:
    """Per log-L bin, the (log10 L, log10 R) pair with the smallest R."""
    log_l = np.log10(batch.L)
    log_r = np.log10(batch.R)
    lo, hi = log_l.min(), log_l.max()
    if hi <= lo:
        return np.column_stack([log_l[:1], log_r[:1]])
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.digitize(log_l, edges) - 1, 0, n_bins - 1)
    rows = []
    for b in range(n_bins):
        mask = idx == b
        if not np.any(mask):
            continue
        k = np.argmin(log_r[mask])
        rows.append((log_l[mask][k], log_r[mask][k]))
    return np.array(rows)


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope, intercept, and slope standard error."""
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    dof = max(n - 2, 1)
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx))
    return slope, intercept, stderr


def estimate_exponent(
    problem: Problem,
    sp: StationaryPoint,
    radii: tuple[float, ...] = DEFAULT_RADII,
    m_per_radius: int = 2000,
    seed: int = 0,
    n_bins: int = 20,
    sampling: str = "caps",
) -> LojaEstimate:
    """Exponent and constant of the inequality from the sampled envelope.

    Samples with L or R below 1e-15 are discarded; the rest are binned by
    log L into ``n_bins`` equal-width bins, the smallest-R sample per bin is
    kept, and log L = a log R + b is fitted by least squares over those
    envelope points.  theta_hat = 1/a; C_hat = max L^theta_hat / R over all
    retained samples.  Raises InsufficientDataError when fewer than 5
    envelope points survive.
    """
    if n_bins < 20:
        raise ValueError("use at least 20 log-L bins")
    batch = _retained(
        collect_samples(problem, sp, radii, m_per_radius, seed, sampling)
    )
    if batch.L.size < 5:
        raise InsufficientDataError(
            f"only {batch.L.size} samples survived culling; increase samples or radii"
        )
    env = lower_envelope(batch, n_bins)
    if env.shape[0] < 5:
        raise InsufficientDataError(
            f"only {env.shape[0]} envelope points; increase samples or radii"
        )
    slope, _, stderr = _ols(env[:, 1], env[:, 0])
    if not np.isfinite(slope) or slope <= 1.0:
        raise InsufficientDataError(f"degenerate envelope slope {slope!r}")
    theta = 1.0 / slope
    c_hat = float(np.max(batch.L**theta / batch.R))
    return LojaEstimate(
        theta_hat=float(theta),
        C_hat=c_hat,
        slope_stderr=float(stderr),
        envelope=env,
        radii_schedule=tuple(float(r) for r in radii),
        n_samples=int(batch.L.size),
        seed=int(seed),
    )


def trial_ratio_by_radius(
    batch: SampleBatch, trial_theta: float, n_bins: int = 7
) -> np.ndarray:
    """Max L^theta / R per log-spaced radius bin, ordered large to small radius.

    For the true exponent the ratios stay bounded as the radius shrinks; for
    a trial exponent below it they blow up, so ratio[last] / ratio[first]
    measures how decisively the trial exponent fails.
    """
    batch = _retained(batch)
    if batch.L.size == 0:
        raise InsufficientDataError("no samples survived culling")
    log_rad = np.log10(batch.radius)
    lo, hi = log_rad.min(), log_rad.max()
    if hi <= lo:
        return np.array([np.max(batch.L**trial_theta / batch.R)])
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.digitize(log_rad, edges) - 1, 0, n_bins - 1)
    ratios = []
    for b in range(n_bins - 1, -1, -1):
        mask = idx == b
        if not np.any(mask):
            continue
        ratios.append(float(np.max(batch.L[mask] ** trial_theta / batch.R[mask])))
    return np.array(ratios)


def trial_ratio_growth(batch: SampleBatch, trial_theta: float) -> float:
    """ratio(smallest radii) / ratio(largest radii) for a trial exponent."""
    ratios = trial_ratio_by_radius(batch, trial_theta)
    return float(ratios[-1] / ratios[0])


def directional_probe(
    problem: Problem,
    sp: StationaryPoint,
    d: np.ndarray,
    t_schedule: np.ndarray,
) -> list[LojaSample]:
    """Measurements along the geodesic x(t) = cos(t) x* + sin(t) d.

    d must be a unit tangent direction at x* (|d^T x*| <= 1e-10) and every t
    must lie in (0, pi/2).  Samples are returned in schedule order.
    """
    d = np.asarray(d, dtype=float)
    if abs(float(np.linalg.norm(d)) - 1.0) > 1e-10:
        raise ValueError("probe direction must be a unit vector")
    if abs(float(d @ sp.x)) > 1e-10:
        raise ValueError("probe direction must be tangent at the stationary point")
    t_schedule = np.asarray(t_schedule, dtype=float)
    if np.any(t_schedule <= 0.0) or np.any(t_schedule >= np.pi / 2.0):
        raise ValueError("t values must lie in (0, pi/2)")
    out = []
    for t in t_schedule:
        x = SpherePoint(np.cos(t) * sp.x + np.sin(t) * d)
        out.append(measure(problem, sp, x))
    return out


def samples_to_batch(samples: list[LojaSample]) -> SampleBatch:
    return SampleBatch(
        L=np.array([s.L for s in samples]),
        R=np.array([s.R for s in samples]),
        R_subgrad=np.array([s.R_subgrad for s in samples]),
        radius=np.array([s.radius for s in samples]),
    )


def case3_decompose(
    problem: Problem, sp: StationaryPoint, x: SpherePoint
) -> CaseDecomposition:
    """Split x - x* into null(Phi) and range(Phi) components.

    Only defined when Phi = A - lambda* I is singular.  When the projection
    of Phi eta off the x* axis is negligible (<= 1e-8 ||Phi eta||), the
    collinearity coefficient xi = x*^T Phi eta is extracted.
    """
    if not sp.phi_singular:
        raise NotApplicableError("Phi is nonsingular at this point")
    tol = tol_singular(problem)
    eig = problem.eigendecomposition()
    null_mask = np.abs(eig.eigvals - sp.lam) <= tol
    q_null = eig.eigvecs[:, null_mask]
    d = x.x - sp.x
    delta = q_null @ (q_null.T @ d)
    eta = d - delta
    phi = _phi_of(problem, sp)
    phi_eta = phi @ eta
    along = sp.x * float(sp.x @ phi_eta)
    residual_perp = float(np.linalg.norm(phi_eta - along))
    xi: float | None = None
    if residual_perp <= 1e-8 * max(np.linalg.norm(phi_eta), 1e-300):
        xi = float(sp.x @ phi_eta)
    return CaseDecomposition(
        delta_cap=d, delta=delta, eta=eta, xi=xi, residual_perp=residual_perp
    )


def theoretical_bounds(
    problem: Problem, sp: StationaryPoint, decomp: CaseDecomposition
) -> TheoreticalBounds:
    """Closed-form gap/gradient bounds in the singular-collinear regime.

    Requires Phi eta = xi x* with xi != 0 (the regime where the exponent
    degrades to 3/4).  Returns

        upper_L       = (sigma_max / 2) ||eta||^2        >= |f(x) - f(x*)|
        lower_R       = sqrt(2) sigma_+^{3/2} / sigma_max ||eta||^{3/2},
                        the leading-order floor of the projected-gradient norm
        delta_sq_bounds = (2 sigma_+ / sigma_max ||eta||, 2 ||eta||),
                        bracketing ||x - x*||^2.
    """
    if decomp.xi is None:
        raise NotApplicableError("Phi eta is not collinear with x* at this sample")
    if abs(decomp.xi) <= 1e-12 * max(sp.sigma_max, 1e-300):
        raise NotApplicableError("xi is numerically zero (degenerate direction)")
    eta_norm = float(np.linalg.norm(decomp.eta))
    upper_l = 0.5 * sp.sigma_max * eta_norm**2
    lower_r = np.sqrt(2.0) * sp.sigma_plus**1.5 / sp.sigma_max * eta_norm**1.5
    return TheoreticalBounds(
        upper_L=float(upper_l),
        lower_R=float(lower_r),
        delta_sq_bounds=(
            float(2.0 * sp.sigma_plus / sp.sigma_max * eta_norm),
            float(2.0 * eta_norm),
        ),
    )
