"""Synthetic strongly convex finite-sum problems with certified constants.

A problem is f(x) = (1/n) * sum_i f_i(x) where every component is either a
quadratic  f_i(x) = 0.5 x'A_i x - b_i'x  or a ridge-regularized logistic loss
f_i(x) = log(1 + exp(-y_i a_i'x)) + 0.5*ridge*||x||^2.  All gradients are
analytic; smoothness and strong-convexity constants are computed exactly
(quadratic) or from certified closed forms (logistic).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMMETRY_ATOL = 1e-12
OPT_GRAD_RTOL = 1e-10
LOGISTIC_OPT_TOL = 1e-12
LOGISTIC_OPT_MAX_ITER = 10**6


class ProblemError(ValueError):
    """Invalid or rejected problem (e.g. not strongly convex)."""


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    # tanh form is stable for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class FiniteSumProblem:
    """Base class; concrete families are QuadraticSum and LogisticSum."""

    n: int
    d: int
    family: str

    def eval_f(self, x: np.ndarray) -> float:
        """Objective value f(x) = (1/n) sum_i f_i(x)."""
        self._check_dim(x)
        return float(np.mean([self._component_value(i, x) for i in range(self.n)]))

    def eval_grad_i(self, i: int, x: np.ndarray) -> np.ndarray:
        """Analytic gradient of the i-th component at x."""
        if not 0 <= i < self.n:
            raise IndexError(f"component index {i} out of range [0, {self.n})")
        self._check_dim(x)
        return self._component_grad(i, x)

    def eval_full_grad(self, x: np.ndarray) -> np.ndarray:
        """Exact average of all component gradients (fixed reduction order)."""
        self._check_dim(x)
        return self.component_grads(x).sum(axis=0) / self.n

    def component_grads(self, x: np.ndarray) -> np.ndarray:
        """All component gradients stacked into an (n, d) array."""
        raise NotImplementedError

    def _component_value(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def _component_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_dim(self, x: np.ndarray) -> None:
        if np.shape(x) != (self.d,):
            raise ValueError(f"expected a vector of dimension {self.d}, got shape {np.shape(x)}")


@dataclass
class QuadraticSum(FiniteSumProblem):
    """Average of quadratics 0.5 x'A_i x - b_i'x with symmetric PSD A_i."""

    A: np.ndarray  # (n, d, d)
    b: np.ndarray  # (n, d)
    family: str = field(default="quadratic", init=False)

    def __post_init__(self) -> None:
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.A.ndim != 3 or self.A.shape[1] != self.A.shape[2]:
            raise ProblemError(f"A must be (n, d, d), got {self.A.shape}")
        if self.b.shape != self.A.shape[:2]:
            raise ProblemError(f"b must be (n, d) = {self.A.shape[:2]}, got {self.b.shape}")
        self.n, self.d = self.b.shape
        if self.n < 1 or self.d < 1:
            raise ProblemError("need n >= 1 and d >= 1")
        skew = np.abs(self.A - self.A.transpose(0, 2, 1)).max()
        if skew > SYMMETRY_ATOL:
            raise ProblemError(f"component matrices not symmetric (max |A - A'| = {skew:g})")
        # cached averages for fast full-gradient / single-coordinate access
        self._A_mean = self.A.sum(axis=0) / self.n
        self._b_mean = self.b.sum(axis=0) / self.n

    def _component_value(self, i: int, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.A[i] @ x) - self.b[i] @ x)

    def _component_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.A[i] @ x - self.b[i]

    def eval_f(self, x: np.ndarray) -> float:
        self._check_dim(x)
        return float(0.5 * x @ (self._A_mean @ x) - self._b_mean @ x)

    def eval_full_grad(self, x: np.ndarray) -> np.ndarray:
        self._check_dim(x)
        return self._A_mean @ x - self._b_mean

    def full_grad_coord(self, i: int, x: np.ndarray) -> float:
        """Single coordinate of the full gradient, O(d) instead of O(n d)."""
        return float(self._A_mean[i] @ x - self._b_mean[i])

    def component_grads(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x - self.b


@dataclass
class LogisticSum(FiniteSumProblem):
    """Average of logistic losses on (a_i, y_i) with an L2 ridge term."""

    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,), entries in {-1, +1}
    ridge: float

    family: str = field(default="logistic", init=False)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2:
            raise ProblemError(f"features must be (n, d), got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ProblemError("labels must be a vector of length n")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ProblemError("labels must be -1 or +1")
        if self.ridge < 0:
            raise ProblemError("ridge coefficient must be >= 0")
        self.ridge = float(self.ridge)
        self.n, self.d = self.features.shape

    def _margins(self, x: np.ndarray) -> np.ndarray:
        return self.labels * (self.features @ x)

    def _component_value(self, i: int, x: np.ndarray) -> float:
        t = self.labels[i] * (self.features[i] @ x)
        return float(np.logaddexp(0.0, -t) + 0.5 * self.ridge * (x @ x))

    def _component_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        t = self.labels[i] * (self.features[i] @ x)
        return -self.labels[i] * _sigmoid(-t) * self.features[i] + self.ridge * x

    def eval_f(self, x: np.ndarray) -> float:
        self._check_dim(x)
        t = self._margins(x)
        return float(np.mean(np.logaddexp(0.0, -t)) + 0.5 * self.ridge * (x @ x))

    def eval_full_grad(self, x: np.ndarray) -> np.ndarray:
        self._check_dim(x)
        coef = -self.labels * _sigmoid(-self._margins(x))
        return (coef[:, None] * self.features).sum(axis=0) / self.n + self.ridge * x

    def full_grad_coord(self, i: int, x: np.ndarray) -> float:
        return float(self.eval_full_grad(x)[i])

    def component_grads(self, x: np.ndarray) -> np.ndarray:
        coef = -self.labels * _sigmoid(-self._margins(x))
        return coef[:, None] * self.features + self.ridge * x[None, :]


@dataclass(frozen=True)
class ProblemConstants:
    """Certified constants of a problem: smoothness, curvature, optimum.

    sigma_star_sq = (1/n) sum_i ||grad f_i(x*)||^2 is the sampling variance at
    the optimum; zeta_star_sq is the same quantity under the name used by the
    compressed-gradient methods.  grads_at_star caches every component
    gradient at x* for estimators that need them.
    """

    L: float
    mu: float
    L_i: np.ndarray
    L_max: float
    x_star: np.ndarray
    f_star: float
    sigma_star_sq: float
    zeta_star_sq: float
    grads_at_star: np.ndarray  # (n, d)
    min_curv_dir: np.ndarray | None = None  # unit eigenvector of the smallest average curvature


def _eigh_solve(evals: np.ndarray, evecs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # solve (V diag(evals) V') x = rhs via the eigendecomposition
    return evecs @ ((evecs.T @ rhs) / evals)


def _logistic_optimum(problem: LogisticSum, L: float) -> np.ndarray:
    """Full-gradient descent with stepsize 1/L down to ||grad|| <= 1e-12 max(1, ||x||)."""
    x = np.zeros(problem.d)
    step = 1.0 / L
    for _ in range(LOGISTIC_OPT_MAX_ITER):
        g = problem.eval_full_grad(x)
        if np.linalg.norm(g) <= LOGISTIC_OPT_TOL * max(1.0, float(np.linalg.norm(x))):
            return x
        x = x - step * g
    raise ProblemError(
        f"logistic optimum solver did not reach tolerance {LOGISTIC_OPT_TOL:g} "
        f"within {LOGISTIC_OPT_MAX_ITER} iterations"
    )


def compute_constants(problem: FiniteSumProblem) -> ProblemConstants:
    """Certify L, mu, per-component L_i, L_max, and the optimum of a problem.

    Quadratic: eigenvalues of the component and average matrices; x* solved
    through the eigendecomposition of the average matrix.  Logistic: L_i =
    0.25 ||a_i||^2 + ridge, L = 0.25 lmax((1/n) sum a_i a_i') + ridge, and
    mu = ridge (the only globally valid curvature lower bound); x* found by
    deterministic full-gradient descent.

    Raises ProblemError when the certified mu is not strictly positive.
    """
    if isinstance(problem, QuadraticSum):
        L_i = np.array([np.linalg.eigvalsh(problem.A[k])[-1] for k in range(problem.n)])
        evals, evecs = np.linalg.eigh(problem._A_mean)
        mu = float(evals[0])
        L = float(evals[-1])
        if mu <= 0:
            raise ProblemError(f"average curvature mu = {mu:g} is not strictly positive")
        x_star = _eigh_solve(evals, evecs, problem._b_mean)
        min_curv_dir = evecs[:, 0].copy()
        first = np.flatnonzero(min_curv_dir)[0]
        if min_curv_dir[first] < 0:
            min_curv_dir = -min_curv_dir
    elif isinstance(problem, LogisticSum):
        if problem.ridge <= 0:
            raise ProblemError("logistic problems need ridge > 0 for strong convexity")
        sq_norms = np.sum(problem.features**2, axis=1)
        L_i = 0.25 * sq_norms + problem.ridge
        gram = problem.features.T @ problem.features / problem.n
        L = float(0.25 * np.linalg.eigvalsh(gram)[-1] + problem.ridge)
        mu = problem.ridge
        x_star = _logistic_optimum(problem, L)
        min_curv_dir = None
    else:
        raise TypeError(f"unsupported problem type {type(problem).__name__}")

    L_max = float(np.max(L_i))
    grads_at_star = problem.component_grads(x_star)
    grad_norm = float(np.linalg.norm(grads_at_star.sum(axis=0) / problem.n))
    if grad_norm > OPT_GRAD_RTOL * max(1.0, float(np.linalg.norm(x_star))):
        raise ProblemError(f"optimum certificate failed: ||grad f(x*)|| = {grad_norm:g}")
    sigma_star_sq = float(np.mean(np.sum(grads_at_star**2, axis=1)))
    return ProblemConstants(
        L=L,
        mu=mu,
        L_i=L_i,
        L_max=L_max,
        x_star=x_star,
        f_star=problem.eval_f(x_star),
        sigma_star_sq=sigma_star_sq,
        zeta_star_sq=sigma_star_sq,
        grads_at_star=grads_at_star,
        min_curv_dir=min_curv_dir,
    )


def _random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    # Haar-ish orthogonal matrix: QR of a Gaussian with sign-fixed diagonal
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_quadratic(
    n: int,
    d: int,
    *,
    eig_lo: float = 1.0,
    eig_hi: float = 3.0,
    shift_scale: float = 1.0,
    seed: int = 0,
) -> QuadraticSum:
    """Seeded random quadratic sum with prescribed per-component spectrum.

    Every A_i is Q' diag(linspace(eig_lo, eig_hi, d)) Q with an independent
    random rotation Q, so L_i = eig_hi for all i and the condition number of
    each component is eig_hi/eig_lo.  b_i = shift_scale * standard normal;
    shift_scale = 0 gives b = 0, i.e. all components share the minimizer 0
    (interpolation regime).
    """
    if n < 1 or d < 1:
        raise ProblemError("need n >= 1 and d >= 1")
    if not 0 < eig_lo <= eig_hi:
        raise ProblemError("need 0 < eig_lo <= eig_hi")
    rng = np.random.default_rng(seed)
    spectrum = np.linspace(eig_lo, eig_hi, d) if d > 1 else np.array([eig_hi])
    A = np.empty((n, d, d))
    for i in range(n):
        Q = _random_rotation(d, rng)
        A[i] = (Q * spectrum) @ Q.T
        A[i] = 0.5 * (A[i] + A[i].T)  # kill round-off asymmetry
    b = shift_scale * rng.standard_normal((n, d)) if shift_scale != 0 else np.zeros((n, d))
    return QuadraticSum(A=A, b=b)


def random_logistic(
    n: int,
    d: int,
    *,
    ridge: float = 0.1,
    feature_scale: float = 1.0,
    seed: int = 0,
) -> LogisticSum:
    """Seeded random logistic problem with planted labels."""
    if n < 1 or d < 1:
        raise ProblemError("need n >= 1 and d >= 1")
    rng = np.random.default_rng(seed)
    feats = feature_scale * rng.standard_normal((n, d))
    planted = rng.standard_normal(d)
    labels = np.where(feats @ planted >= 0, 1.0, -1.0)
    # flip a few labels so the data is not perfectly separable
    flips = rng.random(n) < 0.1
    labels[flips] = -labels[flips]
    return LogisticSum(features=feats, labels=labels, ridge=ridge)
