"""Quadratic objectives on the unit sphere and their gradient measures.

A problem instance is

    minimize  f(x) = 1/2 x^T A x + g^T x   subject to  x^T x = 1,

with A symmetric.  This module owns the instance type, feasible points, the
objective and its Euclidean / projected (Riemannian) gradients, the minimum
norm subgradient of the constraint-penalized form, the stationarity
multiplier, the shifted matrix A - lambda*I whose spectrum controls the local
exponent, and seeded instance generators.

Stationarity on the sphere means (I - x x^T)(A x + g) = 0, equivalently
A x + g = lambda x with lambda = x^T (A x + g).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import EigenDecomp, SymMatrix, _readonly, sym_eigh

SPHERE_NORM_SLACK = 1e-8


class GradientKind(enum.Enum):
    EUCLIDEAN = "euclidean"
    PROJECTED = "projected"
    MIN_NORM_SUBGRADIENT = "min_norm_subgradient"


@dataclass(frozen=True)
class SpherePoint:
    """A feasible point: unit 2-norm to machine precision.

    The constructor accepts vectors with norm within 1e-8 of one and
    renormalizes them; anything farther off the sphere is rejected.  Use
    :meth:`project` to map an arbitrary nonzero vector onto the sphere first.
    """

    x: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.x, dtype=float)
        if v.ndim != 1 or v.shape[0] < 2:
            raise ValueError("a sphere point needs dimension >= 2")
        if not np.all(np.isfinite(v)):
            raise ValueError("sphere point entries must be finite")
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > SPHERE_NORM_SLACK:
            raise ValueError(f"norm {nrm!r} is farther than {SPHERE_NORM_SLACK} from 1")
        object.__setattr__(self, "x", _readonly(v / nrm))

    @classmethod
    def project(cls, v: np.ndarray) -> "SpherePoint":
        v = np.asarray(v, dtype=float)
        nrm = float(np.linalg.norm(v))
        if not np.isfinite(nrm) or nrm <= 1e-12:
            raise ValueError("cannot project a (near-)zero vector onto the sphere")
        return cls(v / nrm)

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class GradientMeasure:
    value: np.ndarray
    kind: GradientKind

    def __post_init__(self):
        object.__setattr__(self, "value", _readonly(self.value))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.value))


@dataclass(frozen=True)
class Problem:
    """Instance (A, g) of the sphere-constrained quadratic program.

    ``offset`` is an additive constant reported with objective values so that
    instances stated in a shifted form (e.g. 1/2 (x_2 - 1)^2) print their
    familiar values; it never affects gradients, multipliers, or differences
    f(x) - f(x*).
    """

    A: SymMatrix
    g: np.ndarray
    offset: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)
    _eig_cache: Optional[EigenDecomp] = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 1:
            raise ValueError("g must be a vector")
        if g.shape[0] != self.A.n:
            raise ValueError(
                f"dimension mismatch: A is {self.A.n}x{self.A.n}, g has length {g.shape[0]}"
            )
        if self.A.n < 2:
            raise ValueError("dimension must be >= 2")
        if not np.all(np.isfinite(g)) or not np.isfinite(self.offset):
            raise ValueError("g and offset must be finite")
        object.__setattr__(self, "g", _readonly(g))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.A.n

    def scale(self) -> float:
        return 1.0 + self.A.fro_norm() + float(np.linalg.norm(self.g))

    def g_is_zero(self) -> bool:
        return float(np.linalg.norm(self.g)) <= 1e-12 * (1.0 + self.A.fro_norm())

    def eigendecomposition(self) -> EigenDecomp:
        if self._eig_cache is None:
            object.__setattr__(self, "_eig_cache", sym_eigh(self.A))
        return self._eig_cache

    def _check_point(self, x: SpherePoint):
        if x.n != self.n:
            raise ValueError(f"point has dimension {x.n}, problem has {self.n}")


def objective(problem: Problem, x: SpherePoint) -> float:
    """f(x) = 1/2 x^T A x + g^T x (+ offset), evaluated in this fixed order."""
    problem._check_point(x)
    v = x.x
    return 0.5 * float(v @ (problem.A.mat @ v)) + float(problem.g @ v) + problem.offset


def euclidean_grad(problem: Problem, x: SpherePoint) -> GradientMeasure:
    """Unconstrained gradient A x + g."""
    problem._check_point(x)
    return GradientMeasure(problem.A.mat @ x.x + problem.g, GradientKind.EUCLIDEAN)


def riemannian_grad(problem: Problem, x: SpherePoint) -> GradientMeasure:
    """Projected gradient (I - x x^T)(A x + g), the sphere stationarity measure."""
    problem._check_point(x)
    v = x.x
    grad = problem.A.mat @ v + problem.g
    proj = grad - v * float(v @ grad)
    # One re-projection removes the O(eps) residual along x.
    proj = proj - v * float(v @ proj)
    return GradientMeasure(proj, GradientKind.PROJECTED)


def min_norm_subgradient(problem: Problem, x: SpherePoint) -> GradientMeasure:
    """Minimum-norm subgradient of f + (indicator of the sphere) at x.

    Equals the projected gradient when x^T grad f(x) <= 0 and the full
    gradient A x + g otherwise.  Note the second branch can be nonzero at a
    constrained-stationary point (e.g. a sphere maximizer); the projected
    gradient is the measure used by the analysis tooling, this one is
    reported alongside it.
    """
    problem._check_point(x)
    v = x.x
    grad = problem.A.mat @ v + problem.g
    if float(v @ grad) <= 0.0:
        proj = grad - v * float(v @ grad)
        proj = proj - v * float(v @ proj)
        return GradientMeasure(proj, GradientKind.MIN_NORM_SUBGRADIENT)
    return GradientMeasure(grad, GradientKind.MIN_NORM_SUBGRADIENT)


def multiplier(problem: Problem, x: SpherePoint) -> float:
    """Stationarity multiplier estimate lambda(x) = x^T (A x + g)."""
    problem._check_point(x)
    v = x.x
    return float(v @ (problem.A.mat @ v + problem.g))


def phi_matrix(problem: Problem, lam: float) -> SymMatrix:
    """Shifted matrix A - lambda I."""
    return SymMatrix(problem.A.mat - lam * np.eye(problem.n))


def make_example1() -> Problem:
    """The n=2 instance with objective 1/2 (x_2 - 1)^2 on the circle.

    Expanded: A = diag(0, 1), g = (0, -1), constant offset 1/2.  Its global
    minimizer is (0, 1); the antipode (0, -1) is the global maximizer.
    """
    return Problem(
        A=SymMatrix(np.diag([0.0, 1.0])),
        g=np.array([0.0, -1.0]),
        offset=0.5,
        meta={"kind": "example1", "seed": 0},
    )


def _seeded_rng(seed: int, *labels: int) -> np.random.Generator:
    # All randomness flows from one seed; sub-streams are fixed labeled splits.
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(labels)))


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix as a product of n-1 Householder reflectors.

    Each reflector is exactly orthogonal, so the product is orthogonal to
    rounding error; the construction is reproducible from the generator state.
    """
    q = np.eye(n)
    for _ in range(n - 1):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        q = q - 2.0 * np.outer(q @ v, v)
    return q


def make_random(
    n: int,
    seed: int,
    eigenvalue_range: tuple[float, float] = (-1.0, 1.0),
    g_scale: float = 1.0,
) -> Problem:
    """Seeded dense instance A = Q diag(w) Q^T with ||g|| = g_scale.

    Eigenvalues are uniform on ``eigenvalue_range``; Q is a seeded random
    orthogonal matrix; g is a uniformly random direction scaled to g_scale
    (exactly zero when g_scale == 0, which produces an instance whose
    stationary points are exactly the eigenvector pairs).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    lo, hi = float(eigenvalue_range[0]), float(eigenvalue_range[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise ValueError(f"invalid eigenvalue range ({lo}, {hi})")
    rng = _seeded_rng(seed, 1)
    w = rng.uniform(lo, hi, size=n)
    q = random_orthogonal(n, _seeded_rng(seed, 2))
    a = (q * w) @ q.T
    if g_scale == 0.0:
        g = np.zeros(n)
    else:
        d = _seeded_rng(seed, 3).standard_normal(n)
        g = (g_scale / np.linalg.norm(d)) * d
    return Problem(
        A=SymMatrix(a),
        g=g,
        meta={"kind": "gzero" if g_scale == 0.0 else "random", "seed": int(seed)},
    )


def _case3_from_frame(
    frame: np.ndarray, lambda_star: float, shifted_eigs: np.ndarray
) -> tuple[Problem, SpherePoint]:
    """Assemble the designated-singular-shift instance in a given frame.

    frame columns u_1..u_n are orthonormal; A gets eigenvalue lambda_star on
    u_1 and shifted_eigs[i-2] on u_i for i >= 2; the designated stationary
    point is x* = u_n with g = (lambda_star - a_n) u_n, which makes
    A x* + g = lambda_star x* hold by construction while A - lambda_star I
    stays singular exactly along u_1 (a tangent direction at x*).
    """
    n = frame.shape[0]
    eigs = np.concatenate(([lambda_star], shifted_eigs))
    a = (frame * eigs) @ frame.T
    x_star = frame[:, n - 1]
    g = (lambda_star - eigs[n - 1]) * x_star
    problem = Problem(A=SymMatrix(a), g=g, meta={"kind": "case3", "seed": -1})
    return problem, SpherePoint(x_star)


def make_case3(
    n: int, seed: int, lambda_star: float = 0.0
) -> tuple[Problem, SpherePoint]:
    """Instance with a designated stationary point in the singular-shift regime.

    In a seeded random orthonormal frame {u_1, ..., u_n}: u_1 carries
    eigenvalue lambda_star, u_2..u_n carry distinct eigenvalues a_i with
    |a_i - lambda_star| >= 0.5 and pairwise gaps >= 0.1, x* = u_n, and
    g = (lambda_star - a_n) u_n != 0.  Then x* is stationary with multiplier
    lambda_star, A - lambda_star I is singular with its null direction u_1
    tangent at x*, and the tangent form vanishes along u_1, so the local
    exponent prediction at x* is 3/4.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = _seeded_rng(seed, 4)
    frame = random_orthogonal(n, rng)
    # Alternating-side offsets keep |a_i - lambda_star| >= 0.5 and pairwise
    # gaps >= 0.1 so the smallest nonzero shift stays well away from 0.
    jitter = rng.uniform(0.0, 0.02, size=n - 1)
    magnitudes = 0.5 + 0.15 * np.arange(n - 1) + jitter
    signs = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(n - 1)])
    shifted = lambda_star + signs * magnitudes
    problem, x_star = _case3_from_frame(frame, float(lambda_star), shifted)
    problem.meta["seed"] = int(seed)
    return problem, x_star
