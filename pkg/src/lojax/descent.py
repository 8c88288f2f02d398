"""Retracted gradient descent on the sphere and convergence-rate analysis.

The solver is projected gradient descent with renormalization retraction and
Armijo backtracking:

    x+ = (x - alpha r) / ||x - alpha r||,   r = (I - x x^T)(A x + g),

accepting alpha once f(x) - f(x+) >= c alpha ||r||^2.  Acceptance is decided
on the exact quadratic difference

    f(x) - f(x+) = 1/2 (x - x+)^T A (x + x+) + g^T (x - x+),

which stays accurate long after the naive subtraction of two nearly equal
objective values has drowned in rounding noise; objective values along the
trace are accumulated from those differences so the recorded sequence is
strictly decreasing by construction.

Two per-step conditions certify that a trace is rate-analyzable:

    (H1)  f(x_k) - f(x_{k+1}) >= C1 ||x_k - x_{k+1}||^2
    (H2)  ||(I - x_k x_k^T) grad f(x_k)|| <= C2 ||x_{k-1} - x_k||

:func:`verify_conditions` recomputes both ratios from a trace.  Under these
conditions the iterates converge, and the local gradient-inequality exponent
theta dictates the rate: finite termination at theta = 0, Q-linear for
theta in (0, 1/2], and a power law k^{-(1-theta)/(2 theta - 1)} for theta in
(1/2, 1) -- 1/sqrt(k) at theta = 3/4.  :func:`classify_rate` fits both the
linear and power models to the distance tail of a trace and picks the better
one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .problem import Problem, SpherePoint, riemannian_grad

_MAX_BACKTRACKS = 60
_THIN_AFTER = 10_000
_THIN_STRIDE = 10
_DISTANCE_FLOOR = 1e-14


class StopReason(enum.Enum):
    GRADIENT_TOLERANCE = "gradient_tolerance"
    MAX_ITERATIONS = "max_iterations"
    STALLED_STEP = "stalled_step"


class Regime(enum.Enum):
    FINITE = "finite"
    LINEAR = "linear"
    SUBLINEAR_POWER = "sublinear_power"


class NotConvergedError(RuntimeError):
    """The trace did not settle near the given point; rate fit refused."""


@dataclass(frozen=True)
class DescentTrace:
    """Full scalar history plus (possibly thinned) iterates of one solve.

    ``f_values``, ``grad_norms`` cover every visited iterate (length
    n_steps + 1); ``step_norms`` and ``decreases`` cover every accepted step
    (length n_steps).  ``decreases`` is the primary record of per-step
    progress, computed from the exact quadratic difference; ``f_values`` is
    its running sum and can stop moving once decreases fall below the
    floating-point granularity of the objective value itself.  ``iterates``
    stores rows for the step indices in ``stored_steps``: every iterate up to
    10^4 steps, then every 10th.
    """

    iterates: np.ndarray
    stored_steps: np.ndarray
    f_values: np.ndarray
    grad_norms: np.ndarray
    step_norms: np.ndarray
    decreases: np.ndarray
    C1_hat: float
    C2_hat: float
    stop_reason: StopReason
    options: dict

    @property
    def n_steps(self) -> int:
        return int(self.step_norms.size)

    def final_point(self) -> SpherePoint:
        return SpherePoint(self.iterates[-1])


@dataclass(frozen=True)
class ConditionReport:
    C1_hat: float
    C2_hat: float
    violations: list[int]


@dataclass(frozen=True)
class RegimeDescriptor:
    regime: Regime
    power: float | None


@dataclass(frozen=True)
class RateReport:
    regime: Regime
    fitted_Q: float | None
    fitted_power: float | None
    C3_hat: float | None
    fit_window: tuple[int, int]
    residual: float
    linear_residual: float
    sublinear_residual: float


def rgd_step(problem: Problem, x: SpherePoint, alpha: float) -> SpherePoint:
    """One retracted gradient step with fixed step size."""
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    r = riemannian_grad(problem, x).value
    return SpherePoint.project(x.x - alpha * r)


def _exact_decrease(problem: Problem, x: np.ndarray, x_new: np.ndarray) -> float:
    d = x - x_new
    return 0.5 * float(d @ (problem.A.mat @ (x + x_new))) + float(problem.g @ d)


def default_alpha0(problem: Problem) -> float:
    return 1.0 / (problem.A.fro_norm() + 1.0)


def solve_rgd(
    problem: Problem,
    x0: SpherePoint,
    max_iters: int = 10_000,
    grad_tol: float = 1e-10,
    alpha0: float | None = None,
    backtrack_ratio: float = 0.5,
    armijo_c: float = 1e-4,
) -> DescentTrace:
    """Armijo-backtracked retracted gradient descent from x0.

    Every accepted step strictly decreases the objective, so condition (H1)
    holds per trace with some positive constant; both binding constants are
    recorded.  Stops on the gradient tolerance, the iteration cap, or when
    60 halvings fail to produce decrease (stalled step; reported, not an
    error).
    """
    if not (0.0 < backtrack_ratio < 1.0):
        raise ValueError("backtrack_ratio must lie in (0, 1)")
    if not (0.0 < armijo_c < 1.0):
        raise ValueError("armijo_c must lie in (0, 1)")
    if grad_tol < 0.0 or max_iters < 0:
        raise ValueError("grad_tol and max_iters must be nonnegative")
    if alpha0 is None:
        alpha0 = default_alpha0(problem)
    if alpha0 <= 0.0:
        raise ValueError("alpha0 must be positive")
    options = {
        "max_iters": int(max_iters),
        "grad_tol": float(grad_tol),
        "alpha0": float(alpha0),
        "backtrack_ratio": float(backtrack_ratio),
        "armijo_c": float(armijo_c),
    }

    a = problem.A.mat
    g = problem.g
    x = x0.x.copy()
    f_curr = 0.5 * float(x @ (a @ x)) + float(g @ x) + problem.offset

    stored = [x.copy()]
    stored_steps = [0]
    f_values = [f_curr]
    grad_norms = []
    step_norms = []
    decreases = []

    def grad_at(v: np.ndarray) -> np.ndarray:
        grad = a @ v + g
        r = grad - v * float(v @ grad)
        return r - v * float(v @ r)

    stop = StopReason.MAX_ITERATIONS
    k = 0
    while True:
        r = grad_at(x)
        rnorm = float(np.linalg.norm(r))
        grad_norms.append(rnorm)
        if rnorm <= grad_tol:
            stop = StopReason.GRADIENT_TOLERANCE
            break
        if k >= max_iters:
            stop = StopReason.MAX_ITERATIONS
            break
        alpha = alpha0
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            trial = x - alpha * r
            trial /= np.linalg.norm(trial)
            decrease = _exact_decrease(problem, x, trial)
            if decrease >= armijo_c * alpha * rnorm * rnorm:
                accepted = True
                break
            alpha *= backtrack_ratio
        if not accepted:
            stop = StopReason.STALLED_STEP
            break
        step = float(np.linalg.norm(x - trial))
        x = trial
        f_curr = f_curr - decrease
        k += 1
        f_values.append(f_curr)
        step_norms.append(step)
        decreases.append(decrease)
        if k <= _THIN_AFTER or k % _THIN_STRIDE == 0:
            stored.append(x.copy())
            stored_steps.append(k)

    if stored_steps[-1] != k:
        stored.append(x.copy())
        stored_steps.append(k)

    f_arr = np.array(f_values)
    step_arr = np.array(step_norms)
    grad_arr = np.array(grad_norms)
    dec_arr = np.array(decreases)
    c1, c2 = _condition_constants(dec_arr, grad_arr, step_arr)
    return DescentTrace(
        iterates=np.array(stored),
        stored_steps=np.array(stored_steps, dtype=int),
        f_values=f_arr,
        grad_norms=grad_arr,
        step_norms=step_arr,
        decreases=dec_arr,
        C1_hat=c1,
        C2_hat=c2,
        stop_reason=stop,
        options=options,
    )


def _condition_constants(
    decreases: np.ndarray, grad_norms: np.ndarray, step_norms: np.ndarray
) -> tuple[float, float]:
    if step_norms.size == 0:
        return np.inf, 0.0
    nonzero = step_norms > 0.0
    c1 = float(np.min(decreases[nonzero] / step_norms[nonzero] ** 2)) if np.any(nonzero) else np.inf
    if step_norms.size >= 1 and grad_norms.size >= 2:
        prev = step_norms[: grad_norms.size - 1]
        ok = prev > 0.0
        c2 = float(np.max(grad_norms[1:][ok] / prev[ok])) if np.any(ok) else 0.0
    else:
        c2 = 0.0
    return c1, c2


def verify_conditions(trace: DescentTrace) -> ConditionReport:
    """Recompute both per-step condition ratios and flag bad steps.

    A step index lands in ``violations`` when its decrease ratio is
    nonpositive or either ratio is non-finite.  Zero-length steps are
    excluded from the ratios (they cannot bind either constant).
    """
    if trace.n_steps < 2:
        raise ValueError("trace too short: need at least 2 steps")
    decreases = trace.decreases
    steps = trace.step_norms
    violations: list[int] = []
    c1 = np.inf
    for k in range(steps.size):
        if steps[k] == 0.0:
            violations.append(k)
            continue
        ratio = decreases[k] / steps[k] ** 2
        if not np.isfinite(ratio) or ratio <= 0.0:
            violations.append(k)
        else:
            c1 = min(c1, ratio)
    c2 = 0.0
    for k in range(1, trace.grad_norms.size):
        prev = steps[k - 1]
        if prev == 0.0:
            continue
        ratio = trace.grad_norms[k] / prev
        if not np.isfinite(ratio):
            violations.append(k)
        else:
            c2 = max(c2, ratio)
    return ConditionReport(C1_hat=float(c1), C2_hat=float(c2), violations=violations)


def theta_to_regime(theta: float) -> RegimeDescriptor:
    """Map a gradient-inequality exponent to its convergence regime.

    theta = 0 gives finite termination; theta in (0, 1/2] gives Q-linear
    convergence; theta in (1/2, 1) gives the power law with exponent
    (1 - theta) / (2 theta - 1).
    """
    if not (0.0 <= theta < 1.0):
        raise ValueError(f"theta must lie in [0, 1), got {theta}")
    if theta == 0.0:
        return RegimeDescriptor(Regime.FINITE, None)
    if theta <= 0.5:
        return RegimeDescriptor(Regime.LINEAR, None)
    return RegimeDescriptor(
        Regime.SUBLINEAR_POWER, (1.0 - theta) / (2.0 * theta - 1.0)
    )


def classify_rate(
    trace: DescentTrace,
    x_star: SpherePoint,
    fit_skip_fraction: float = 0.1,
    converge_tol: float = 0.05,
) -> RateReport:
    """Fit linear vs power-law decay of d_k = ||x_k - x*|| and pick the winner.

    Both models are fitted by least squares in base-10 logs over the stored
    iterates, excluding the first ``fit_skip_fraction`` of the step range and
    distances at the floating-point floor.  Refuses (NotConvergedError) when
    the final iterate is farther than ``converge_tol`` from x*, since the
    tail then says nothing about the approach rate.
    """
    dists = np.linalg.norm(trace.iterates - x_star.x[None, :], axis=1)
    final = float(dists[-1])
    if final > converge_tol:
        raise NotConvergedError(
            f"final iterate is {final:.3e} from the target point "
            f"(> {converge_tol:.1e}); run longer or check the basin"
        )
    ks = trace.stored_steps.astype(float)
    k_min = fit_skip_fraction * float(trace.n_steps)
    mask = (ks > max(k_min, 0.0)) & (ks >= 1.0) & (dists > _DISTANCE_FLOOR)
    if int(np.sum(mask)) < 5:
        raise NotConvergedError(
            "fewer than 5 usable points in the fit window; run longer"
        )
    k_fit = ks[mask]
    log_d = np.log10(dists[mask])

    slope_lin, _, _ = _ols_line(k_fit, log_d)
    resid_lin = _ols_residual(k_fit, log_d)
    log_k = np.log10(k_fit)
    slope_pow, _, _ = _ols_line(log_k, log_d)
    resid_pow = _ols_residual(log_k, log_d)

    window = (int(k_fit[0]), int(k_fit[-1]))
    if resid_lin <= resid_pow:
        q = 10.0**slope_lin
        return RateReport(
            regime=Regime.LINEAR,
            fitted_Q=float(q),
            fitted_power=None,
            C3_hat=None,
            fit_window=window,
            residual=float(resid_lin),
            linear_residual=float(resid_lin),
            sublinear_residual=float(resid_pow),
        )
    power = -slope_pow
    c3 = float(np.max(dists[mask] * np.sqrt(k_fit)))
    return RateReport(
        regime=Regime.SUBLINEAR_POWER,
        fitted_Q=None,
        fitted_power=float(power),
        C3_hat=c3,
        fit_window=window,
        residual=float(resid_pow),
        linear_residual=float(resid_lin),
        sublinear_residual=float(resid_pow),
    )


def tail_step_fraction(trace: DescentTrace, tail_fraction: float = 0.1) -> float:
    """Share of the total step-length sum contributed by the last steps.

    A summable step sequence has a vanishing tail, so this ratio being small
    is the finite-horizon signature of step summability.
    """
    steps = trace.step_norms
    if steps.size == 0:
        return 0.0
    cut = int(np.floor((1.0 - tail_fraction) * steps.size))
    total = float(np.sum(steps))
    if total == 0.0:
        return 0.0
    return float(np.sum(steps[cut:]) / total)


def _ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    return slope, intercept, sxx


def _ols_residual(x: np.ndarray, y: np.ndarray) -> float:
    slope, intercept, _ = _ols_line(x, y)
    r = y - (slope * x + intercept)
    return float(np.sqrt(np.mean(r**2)))
