"""Unbiased gradient estimators, their variance trackers, and parameter certificates.

Each estimator produces g with E[g | x, state] = grad f(x) and carries a
certificate (A, B, C, D1, D2, rho) such that

    E||g||^2          <= 2A (f(x) - f*) + B sigma_k^2 + D1
    E[sigma_{k+1}^2]  <= (1 - rho) sigma_k^2 + 2C (f(x) - f*) + D2

where sigma_k^2 is the estimator's shift-quality tracker (identically zero for
estimators without variance reduction).  The exact_* methods evaluate the
left-hand sides by enumerating the finite outcome space where possible; they
are the oracles used by the assumption verifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .compressor import Compressor, Identity, UnsupportedSizeError
from .problem import FiniteSumProblem, ProblemConstants, QuadraticSum


@dataclass(frozen=True)
class Certificate:
    """Parameter tuple certifying the two estimator inequalities above."""

    A: float
    B: float
    C: float
    D1: float
    D2: float
    rho: float
    has_sigma: bool

    def __post_init__(self) -> None:
        for name in ("A", "B", "C", "D1", "D2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"certificate constant {name} must be finite and >= 0, got {v}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"certificate rho must be in (0, 1], got {self.rho}")
        if not self.has_sigma and (self.B != 0 or self.C != 0 or self.D2 != 0):
            raise ValueError("B, C, D2 must be 0 when the sigma sequence is identically zero")

    def scaled_A(self, factor: float) -> "Certificate":
        """Copy with A scaled; used by mutation tests of the verifier."""
        return replace(self, A=self.A * factor)


def rwgc_certificate(rho_growth: float, L: float, sigma_sq: float) -> Certificate:
    """Certificate preset for the relaxed weak growth condition.

    A growth bound E||g||^2 = 2 rho_growth L (f - f*) + sigma^2 maps to
    (A = rho_growth * L, D1 = sigma^2) with no variance-reduction sequence.
    rho_growth is the growth parameter, distinct from the certificate's rho.
    """
    return Certificate(A=rho_growth * L, B=0.0, C=0.0, D1=sigma_sq, D2=0.0, rho=1.0, has_sigma=False)


def rsgc_certificate(rho_growth: float, L: float, sigma_sq: float) -> Certificate:
    """Certificate preset for the relaxed strong growth condition.

    For an L-smooth objective the strong growth bound implies the weak one
    with the same parameters, so the preset coincides with rwgc_certificate.
    """
    return rwgc_certificate(rho_growth, L, sigma_sq)


@dataclass
class EstimatorState:
    """Mutable per-trajectory estimator state.

    w / grad_w / full_grad_w belong to LSVRG (reference point and cached
    gradients there); h holds the DIANA shift vectors.  sigma_sq always equals
    the tracker value recomputed from the state fields.
    """

    sigma_sq: float = 0.0
    w: np.ndarray | None = None
    grad_w: np.ndarray | None = None
    full_grad_w: np.ndarray | None = None
    h: np.ndarray | None = None

    def copy(self) -> "EstimatorState":
        cp = lambda a: None if a is None else a.copy()
        return EstimatorState(
            sigma_sq=self.sigma_sq,
            w=cp(self.w),
            grad_w=cp(self.grad_w),
            full_grad_w=cp(self.full_grad_w),
            h=cp(self.h),
        )


def _shift_quality(shifts: np.ndarray, constants: ProblemConstants) -> float:
    # (1/n) sum_i ||shift_i - grad f_i(x*)||^2
    diff = shifts - constants.grads_at_star
    return float(np.mean(np.sum(diff**2, axis=1)))


class Estimator:
    """Base class; subclasses implement one sampling rule each."""

    name: str = "base"
    has_sigma: bool = False

    def init_state(
        self, problem: FiniteSumProblem, constants: ProblemConstants, x0: np.ndarray
    ) -> EstimatorState:
        return EstimatorState()

    def sample(
        self,
        problem: FiniteSumProblem,
        constants: ProblemConstants,
        state: EstimatorState,
        x: np.ndarray,
        rng: np.random.Generator,
    ) -> tuple[np.ndarray, EstimatorState]:
        """Draw g and advance the state in place; returns (g, state)."""
        raise NotImplementedError

    def certificate(self, problem: FiniteSumProblem, constants: ProblemConstants) -> Certificate:
        raise NotImplementedError

    # --- exact oracles (None where the outcome space does not enumerate) ---

    def exact_mean(self, problem, constants, state, x) -> np.ndarray | None:
        return None

    def exact_second_moment(self, problem, constants, state, x) -> float | None:
        return None

    def exact_sigma_next(self, problem, constants, state, x) -> float | None:
        return None

    def describe(self) -> str:
        return self.name


@dataclass
class FullGradient(Estimator):
    """Deterministic gradient descent: g = grad f(x)."""

    name: str = field(default="gd", init=False)

    def sample(self, problem, constants, state, x, rng):
        return problem.eval_full_grad(x), state

    def certificate(self, problem, constants):
        return Certificate(A=constants.L, B=0.0, C=0.0, D1=0.0, D2=0.0, rho=1.0, has_sigma=False)

    def exact_mean(self, problem, constants, state, x):
        return problem.eval_full_grad(x)

    def exact_second_moment(self, problem, constants, state, x):
        g = problem.eval_full_grad(x)
        return float(g @ g)

    def describe(self) -> str:
        return "full gradient descent"


@dataclass
class UniformSGD(Estimator):
    """g = grad f_i(x) with i uniform; certified via expected smoothness L_max."""

    name: str = field(default="sgd", init=False)

    def sample(self, problem, constants, state, x, rng):
        i = int(rng.integers(problem.n))
        return problem.eval_grad_i(i, x), state

    def certificate(self, problem, constants):
        return Certificate(
            A=2.0 * constants.L_max,
            B=0.0,
            C=0.0,
            D1=2.0 * constants.sigma_star_sq,
            D2=0.0,
            rho=1.0,
            has_sigma=False,
        )

    def exact_mean(self, problem, constants, state, x):
        return problem.component_grads(x).sum(axis=0) / problem.n

    def exact_second_moment(self, problem, constants, state, x):
        grads = problem.component_grads(x)
        return float(np.mean(np.sum(grads**2, axis=1)))

    def describe(self) -> str:
        return "uniform-sampling SGD"


@dataclass
class NoisyGradient(Estimator):
    """g = grad f(x) + sigma * z with z standard Gaussian per coordinate.

    Total injected variance is d * sigma^2, which is the D1 constant.
    """

    sigma: float = 0.1
    name: str = field(default="noisy_gd", init=False)

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("noise level sigma must be >= 0")

    def sample(self, problem, constants, state, x, rng):
        g = problem.eval_full_grad(x) + self.sigma * rng.standard_normal(problem.d)
        return g, state

    def certificate(self, problem, constants):
        return Certificate(
            A=constants.L,
            B=0.0,
            C=0.0,
            D1=problem.d * self.sigma**2,
            D2=0.0,
            rho=1.0,
            has_sigma=False,
        )

    def exact_mean(self, problem, constants, state, x):
        return problem.eval_full_grad(x)

    def describe(self) -> str:
        return f"gradient descent with Gaussian noise (sigma = {self.sigma:g})"


@dataclass
class SGDStar(Estimator):
    """Idealized variance reduction: g = grad f_i(x) - grad f_i(x*)."""

    name: str = field(default="sgd_star", init=False)

    def sample(self, problem, constants, state, x, rng):
        i = int(rng.integers(problem.n))
        return problem.eval_grad_i(i, x) - constants.grads_at_star[i], state

    def certificate(self, problem, constants):
        return Certificate(
            A=constants.L_max, B=0.0, C=0.0, D1=0.0, D2=0.0, rho=1.0, has_sigma=False
        )

    def exact_mean(self, problem, constants, state, x):
        rows = problem.component_grads(x) - constants.grads_at_star
        return rows.sum(axis=0) / problem.n

    def exact_second_moment(self, problem, constants, state, x):
        rows = problem.component_grads(x) - constants.grads_at_star
        return float(np.mean(np.sum(rows**2, axis=1)))

    def describe(self) -> str:
        return "SGD shifted by the optimal gradients (not implementable in practice)"


@dataclass
class LSVRG(Estimator):
    """Loopless SVRG: g = grad f_i(x) - grad f_i(w) + grad f(w).

    The reference point w is refreshed to the current iterate with probability
    p each step.  Randomness order is fixed: the component index is drawn
    first, the refresh coin second, both from the same stream.
    """

    p: float = 0.1
    name: str = field(default="lsvrg", init=False)
    has_sigma: bool = field(default=True, init=False)

    def __post_init__(self) -> None:
        if not 0 < self.p <= 1:
            raise ValueError(f"refresh probability p must be in (0, 1], got {self.p}")

    def init_state(self, problem, constants, x0):
        grad_w = problem.component_grads(x0)
        return EstimatorState(
            sigma_sq=_shift_quality(grad_w, constants),
            w=np.array(x0, dtype=float, copy=True),
            grad_w=grad_w,
            full_grad_w=problem.eval_full_grad(x0),
        )

    def sample(self, problem, constants, state, x, rng):
        i = int(rng.integers(problem.n))
        g = problem.eval_grad_i(i, x) - state.grad_w[i] + state.full_grad_w
        if rng.random() < self.p:
            state.w = np.array(x, dtype=float, copy=True)
            state.grad_w = problem.component_grads(state.w)
            state.full_grad_w = problem.eval_full_grad(state.w)
            state.sigma_sq = _shift_quality(state.grad_w, constants)
        return g, state

    def certificate(self, problem, constants):
        return Certificate(
            A=2.0 * constants.L_max,
            B=2.0,
            C=self.p * constants.L_max,
            D1=0.0,
            D2=0.0,
            rho=self.p,
            has_sigma=True,
        )

    def exact_mean(self, problem, constants, state, x):
        rows = problem.component_grads(x) - state.grad_w + state.full_grad_w
        return rows.sum(axis=0) / problem.n

    def exact_second_moment(self, problem, constants, state, x):
        rows = problem.component_grads(x) - state.grad_w + state.full_grad_w
        return float(np.mean(np.sum(rows**2, axis=1)))

    def exact_sigma_next(self, problem, constants, state, x):
        # two-branch expectation over the refresh coin
        sigma_at_x = _shift_quality(problem.component_grads(x), constants)
        return (1.0 - self.p) * state.sigma_sq + self.p * sigma_at_x

    def describe(self) -> str:
        return f"loopless SVRG (refresh probability p = {self.p:g})"


@dataclass
class CDGD(Estimator):
    """Compressed distributed GD: g = (1/n) sum_i Q(grad f_i(x)).

    Workers compress independently; no shift learning, so heterogeneous optima
    leave a compression-noise floor proportional to omega * zeta*^2 / n.
    """

    compressor: Compressor = field(default_factory=Identity)
    name: str = field(default="cdgd", init=False)

    def sample(self, problem, constants, state, x, rng):
        grads = problem.component_grads(x)
        g = self.compressor.compress_batch(grads, rng).sum(axis=0) / problem.n
        return g, state

    def certificate(self, problem, constants):
        omega = self.compressor.omega(problem.d)
        return Certificate(
            A=constants.L + 2.0 * omega * constants.L_max / problem.n,
            B=0.0,
            C=0.0,
            D1=2.0 * omega * constants.zeta_star_sq / problem.n,
            D2=0.0,
            rho=1.0,
            has_sigma=False,
        )

    def exact_mean(self, problem, constants, state, x):
        try:
            means = [self.compressor.exact_moments(v)[0] for v in problem.component_grads(x)]
        except UnsupportedSizeError:
            return None
        return np.sum(means, axis=0) / problem.n

    def exact_second_moment(self, problem, constants, state, x):
        # independent workers: E||g||^2 = ||grad f(x)||^2 + (1/n^2) sum_i mse_i
        grads = problem.component_grads(x)
        try:
            mse = [self.compressor.exact_moments(v)[1] for v in grads]
        except UnsupportedSizeError:
            return None
        full = grads.sum(axis=0) / problem.n
        return float(full @ full + sum(mse) / problem.n**2)

    def describe(self) -> str:
        return f"compressed distributed gradient descent [{self.compressor.describe()}]"


@dataclass
class DIANA(Estimator):
    """Distributed compression with learned shifts h_i.

    Per worker: Delta_i = Q(grad f_i(x) - h_i), g_i = h_i + Delta_i, and
    h_i <- h_i + alpha * Delta_i.  alpha = None resolves to 1/(1 + omega).
    """

    compressor: Compressor = field(default_factory=Identity)
    alpha: float | None = None
    name: str = field(default="diana", init=False)
    has_sigma: bool = field(default=True, init=False)

    def resolved_alpha(self, d: int) -> float:
        omega = self.compressor.omega(d)
        alpha = 1.0 / (1.0 + omega) if self.alpha is None else self.alpha
        if not 0 < alpha <= 1.0 / (1.0 + omega):
            raise ValueError(f"alpha must be in (0, 1/(1+omega)] = (0, {1.0/(1.0+omega):g}], got {alpha}")
        return alpha

    def init_state(self, problem, constants, x0):
        h = np.zeros((problem.n, problem.d))
        return EstimatorState(sigma_sq=_shift_quality(h, constants), h=h)

    def sample(self, problem, constants, state, x, rng):
        alpha = self.resolved_alpha(problem.d)
        grads = problem.component_grads(x)
        delta = self.compressor.compress_batch(grads - state.h, rng)
        g = (state.h + delta).sum(axis=0) / problem.n
        state.h += alpha * delta
        state.sigma_sq = _shift_quality(state.h, constants)
        return g, state

    def certificate(self, problem, constants):
        omega = self.compressor.omega(problem.d)
        alpha = self.resolved_alpha(problem.d)
        return Certificate(
            A=2.0 * constants.L + 2.0 * omega * constants.L_max / problem.n,
            B=2.0 + 2.0 * omega / problem.n,
            C=alpha * constants.L_max,
            D1=0.0,
            D2=0.0,
            rho=alpha,
            has_sigma=True,
        )

    def exact_mean(self, problem, constants, state, x):
        grads = problem.component_grads(x)
        try:
            means = [self.compressor.exact_moments(v)[0] for v in grads - state.h]
        except UnsupportedSizeError:
            return None
        return (state.h + np.asarray(means)).sum(axis=0) / problem.n

    def exact_second_moment(self, problem, constants, state, x):
        grads = problem.component_grads(x)
        try:
            mse = [self.compressor.exact_moments(v)[1] for v in grads - state.h]
        except UnsupportedSizeError:
            return None
        full = grads.sum(axis=0) / problem.n
        return float(full @ full + sum(mse) / problem.n**2)

    def exact_sigma_next(self, problem, constants, state, x):
        alpha = self.resolved_alpha(problem.d)
        u = problem.component_grads(x) - state.h
        e = state.h - constants.grads_at_star
        try:
            mse = np.array([self.compressor.exact_moments(v)[1] for v in u])
        except UnsupportedSizeError:
            return None
        # E||e_i + alpha Delta_i||^2 with E[Delta_i] = u_i, E||Delta_i||^2 = ||u_i||^2 + mse_i
        per_worker = (
            np.sum(e**2, axis=1)
            + 2.0 * alpha * np.sum(e * u, axis=1)
            + alpha**2 * (np.sum(u**2, axis=1) + mse)
        )
        return float(np.mean(per_worker))

    def describe(self) -> str:
        alpha = "auto" if self.alpha is None else f"{self.alpha:g}"
        return f"DIANA shifted compression [{self.compressor.describe()}, alpha = {alpha}]"


@dataclass
class RCD(Estimator):
    """Randomized coordinate descent: g = d * (grad f(x))_i e_i, i uniform."""

    name: str = field(default="rcd", init=False)

    def sample(self, problem, constants, state, x, rng):
        i = int(rng.integers(problem.d))
        g = np.zeros(problem.d)
        if isinstance(problem, QuadraticSum):
            g[i] = problem.d * problem.full_grad_coord(i, x)
        else:
            g[i] = problem.d * problem.eval_full_grad(x)[i]
        return g, state

    def certificate(self, problem, constants):
        return Certificate(
            A=problem.d * constants.L, B=0.0, C=0.0, D1=0.0, D2=0.0, rho=1.0, has_sigma=False
        )

    def exact_mean(self, problem, constants, state, x):
        return problem.eval_full_grad(x)

    def exact_second_moment(self, problem, constants, state, x):
        g = problem.eval_full_grad(x)
        return float(problem.d * (g @ g))

    def describe(self) -> str:
        return "randomized coordinate descent (uniform coordinates)"


ESTIMATORS: dict[str, type[Estimator]] = {
    "gd": FullGradient,
    "sgd": UniformSGD,
    "noisy_gd": NoisyGradient,
    "sgd_star": SGDStar,
    "lsvrg": LSVRG,
    "cdgd": CDGD,
    "diana": DIANA,
    "rcd": RCD,
}

CERTIFICATE_FORMULAS: dict[str, str] = {
    "gd": "A=L, B=0, C=0, D1=0, D2=0, rho=1",
    "sgd": "A=2*L_max, B=0, C=0, D1=2*sigma_star^2, D2=0, rho=1",
    "noisy_gd": "A=L, B=0, C=0, D1=d*sigma^2, D2=0, rho=1",
    "sgd_star": "A=L_max, B=0, C=0, D1=0, D2=0, rho=1",
    "lsvrg": "A=2*L_max, B=2, C=p*L_max, D1=0, D2=0, rho=p",
    "cdgd": "A=L+2*omega*L_max/n, B=0, C=0, D1=2*omega*zeta_star^2/n, D2=0, rho=1",
    "diana": "A=2*L+2*omega*L_max/n, B=2+2*omega/n, C=alpha*L_max, D1=0, D2=0, rho=alpha",
    "rcd": "A=d*L, B=0, C=0, D1=0, D2=0, rho=1",
}
