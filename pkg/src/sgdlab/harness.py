"""Trajectory simulation, Monte-Carlo aggregation, and certificate verification.

Runs x <- x - gamma*g trajectories for any registered estimator, aggregates
the Lyapunov value V_k = ||x^k - x*||^2 + M gamma^2 sigma_k^2 over independent
trials, and checks (a) that the estimator's certificate inequalities hold at
randomly explored states and (b) that the empirical mean trajectory is
dominated by the closed-form bound.

Randomness is organized in counter-derived streams so results are bitwise
reproducible regardless of how trials are scheduled: trial r draws from
default_rng([base_seed, 0, r]), the initial direction from
default_rng([base_seed, 1]), verification point j from
default_rng([base_seed, 2, j]).

The environment variable SGDLAB_THREADS caps trial parallelism (0 = auto,
1 = serial); trials are distributed over worker processes and folded back in
trial-index order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimator import Certificate, Estimator, EstimatorState
from .problem import FiniteSumProblem, ProblemConstants, compute_constants
from .theory import BoundCurve, bound_curve, default_M, max_stepsize

TRIAL_STREAM = 0
INIT_STREAM = 1
VERIFY_STREAM = 2

DEFAULT_SLACK_REL = 0.1
DEFAULT_SLACK_STAT = 4.0
EXACT_MARGIN_RTOL = 1e-10


class TrajectoryError(RuntimeError):
    """A trajectory produced a non-finite iterate."""


def thread_count() -> int:
    """Trial parallelism from SGDLAB_THREADS (0 or unset = auto)."""
    raw = os.environ.get("SGDLAB_THREADS", "0").strip()
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"SGDLAB_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"SGDLAB_THREADS must be >= 0, got {value}")
    if value == 0:
        return os.cpu_count() or 1
    return value


@dataclass
class ExperimentConfig:
    """One experiment: problem + estimator + run parameters.

    gamma, lyapunov_m, and record_every accept "auto" (resolved against the
    certificate: gamma = max admissible stepsize, M = 2B/rho, record stride =
    max(1, K // 1000)).
    """

    problem: FiniteSumProblem
    estimator: Estimator
    gamma: float | str = "auto"
    lyapunov_m: float | str = "auto"
    steps: int = 1000
    trials: int = 1
    base_seed: int = 0
    record_every: int | str = "auto"
    x0_radius: float = 1.0
    x0_mode: str = "random"

    def validate(self) -> None:
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.x0_radius < 0:
            raise ValueError(f"x0_radius must be >= 0, got {self.x0_radius}")
        if self.x0_mode not in ("random", "min_curvature"):
            raise ValueError(f"x0_mode must be 'random' or 'min_curvature', got {self.x0_mode!r}")
        if isinstance(self.gamma, str) and self.gamma != "auto":
            raise ValueError(f"gamma must be a number or 'auto', got {self.gamma!r}")
        if isinstance(self.lyapunov_m, str) and self.lyapunov_m != "auto":
            raise ValueError(f"lyapunov_m must be a number or 'auto', got {self.lyapunov_m!r}")
        if isinstance(self.record_every, str) and self.record_every != "auto":
            raise ValueError(f"record_every must be an integer or 'auto', got {self.record_every!r}")
        if not isinstance(self.record_every, str) and self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")

    def resolve(self) -> "ResolvedExperiment":
        """Materialize all 'auto' fields against the problem's certificate."""
        self.validate()
        constants = compute_constants(self.problem)
        cert = self.estimator.certificate(self.problem, constants)
        M = default_M(cert) if self.lyapunov_m == "auto" else float(self.lyapunov_m)
        gmax = max_stepsize(cert, constants.mu, M)
        gamma = gmax if self.gamma == "auto" else float(self.gamma)

        if self.x0_mode == "min_curvature":
            if constants.min_curv_dir is None:
                raise ValueError("x0_mode='min_curvature' is only available for quadratic problems")
            u = constants.min_curv_dir
        else:
            raw = np.random.default_rng([self.base_seed, INIT_STREAM]).standard_normal(self.problem.d)
            u = raw / np.linalg.norm(raw)
        x0 = constants.x_star + self.x0_radius * u

        state0 = self.estimator.init_state(self.problem, constants, x0)
        diff0 = x0 - constants.x_star
        V0 = float(diff0 @ diff0) + M * gamma**2 * state0.sigma_sq
        curve = bound_curve(cert, constants.mu, gamma, M, V0)

        stride = max(1, self.steps // 1000) if self.record_every == "auto" else int(self.record_every)
        ks = list(range(0, self.steps + 1, stride))
        if ks[-1] != self.steps:
            ks.append(self.steps)

        return ResolvedExperiment(
            problem=self.problem,
            estimator=self.estimator,
            constants=constants,
            certificate=cert,
            gamma=gamma,
            M=M,
            steps=self.steps,
            trials=self.trials,
            base_seed=self.base_seed,
            record_ks=np.array(ks, dtype=np.int64),
            x0=x0,
            sigma0_sq=state0.sigma_sq,
            curve=curve,
        )


@dataclass
class ResolvedExperiment:
    """ExperimentConfig with every derived quantity materialized."""

    problem: FiniteSumProblem
    estimator: Estimator
    constants: ProblemConstants
    certificate: Certificate
    gamma: float
    M: float
    steps: int
    trials: int
    base_seed: int
    record_ks: np.ndarray
    x0: np.ndarray
    sigma0_sq: float
    curve: BoundCurve


@dataclass
class TrajectoryStats:
    """Monte-Carlo summaries per recorded iteration, plus the theory bound."""

    ks: np.ndarray
    mean_dist_sq: np.ndarray
    mean_sigma_sq: np.ndarray
    mean_V: np.ndarray
    std_V: np.ndarray
    bound_V: np.ndarray
    trials: int
    gamma: float
    M: float


def run_trajectory(resolved: ResolvedExperiment, trial_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Run one seeded trajectory; returns (dist_sq, sigma_sq) at the record grid."""
    problem, est, constants = resolved.problem, resolved.estimator, resolved.constants
    gamma, x_star = resolved.gamma, resolved.constants.x_star
    rng = np.random.default_rng([resolved.base_seed, TRIAL_STREAM, trial_index])
    x = resolved.x0.copy()
    state = est.init_state(problem, constants, x)

    ks = resolved.record_ks
    dist = np.empty(len(ks))
    sig = np.empty(len(ks))
    ptr = 0
    if ks[0] == 0:
        diff = x - x_star
        dist[0], sig[0] = diff @ diff, state.sigma_sq
        ptr = 1
    sample = est.sample
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for k in range(1, resolved.steps + 1):
            g, state = sample(problem, constants, state, x, rng)
            x -= gamma * g
            if ptr < len(ks) and ks[ptr] == k:
                diff = x - x_star
                d2 = diff @ diff
                if not math.isfinite(d2):
                    raise TrajectoryError(
                        f"non-finite iterate at iteration {k} in trial {trial_index}"
                    )
                dist[ptr], sig[ptr] = d2, state.sigma_sq
                ptr += 1
    return dist, sig


def _trial_block(resolved: ResolvedExperiment, indices: list[int]) -> tuple[np.ndarray, np.ndarray]:
    nrec = len(resolved.record_ks)
    dist = np.empty((len(indices), nrec))
    sig = np.empty((len(indices), nrec))
    for row, trial in enumerate(indices):
        dist[row], sig[row] = run_trajectory(resolved, trial)
    return dist, sig


def run_monte_carlo(config: ExperimentConfig | ResolvedExperiment) -> TrajectoryStats:
    """Run all trials (possibly in parallel) and aggregate in trial order."""
    resolved = config.resolve() if isinstance(config, ExperimentConfig) else config
    R = resolved.trials
    nrec = len(resolved.record_ks)

    workers = min(thread_count(), R)
    if workers <= 1:
        dist, sig = _trial_block(resolved, list(range(R)))
    else:
        dist = np.empty((R, nrec))
        sig = np.empty((R, nrec))
        blocks = [list(b) for b in np.array_split(np.arange(R), workers * 4) if len(b)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_trial_block, [resolved] * len(blocks), blocks)
            for block, (dist_b, sig_b) in zip(blocks, results):
                dist[block[0] : block[0] + len(block)] = dist_b
                sig[block[0] : block[0] + len(block)] = sig_b

    V = dist + resolved.M * resolved.gamma**2 * sig
    with np.errstate(under="ignore"):
        std_V = V.std(axis=0, ddof=1) if R > 1 else np.zeros(nrec)
        bound_V = np.asarray(resolved.curve.bound_at(resolved.record_ks), dtype=float)
        return TrajectoryStats(
            ks=resolved.record_ks.copy(),
            mean_dist_sq=dist.mean(axis=0),
            mean_sigma_sq=sig.mean(axis=0),
            mean_V=V.mean(axis=0),
            std_V=std_V,
            bound_V=bound_V,
            trials=R,
            gamma=resolved.gamma,
            M=resolved.M,
        )


def tail_mean(values: np.ndarray, fraction: float = 0.1) -> float:
    """Mean over the trailing fraction of the recorded values (>= 1 entry)."""
    n = max(1, int(math.ceil(fraction * len(values))))
    return float(np.mean(values[-n:]))


# --------------------------------------------------------------------------
# verification


@dataclass
class Check:
    """One verified inequality: PASS iff margin >= -tol."""

    name: str
    margin: float
    tol: float
    exact: bool
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        mode = "exact" if self.exact else "sampled"
        extra = f" {self.detail}" if self.detail else ""
        return f"{status} {self.name} margin={self.margin:.6e} tol={self.tol:.3e} [{mode}]{extra}"


@dataclass
class Report:
    """A list of checks with an overall verdict."""

    title: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def worst(self) -> Check | None:
        if not self.checks:
            return None
        return min(self.checks, key=lambda c: c.margin - (-c.tol))

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = self.worst()
        where = f" worst={worst.name} margin={worst.margin:.6e}" if worst else ""
        return f"{status} {self.title} checks={len(self.checks)}{where}"


def _mc_second_moment(est, problem, constants, state, x, rng, samples):
    vals = np.empty(samples)
    for s in range(samples):
        g, _ = est.sample(problem, constants, state.copy(), x, rng)
        vals[s] = g @ g
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def _mc_sigma_next(est, problem, constants, state, x, rng, samples):
    vals = np.empty(samples)
    for s in range(samples):
        _, nxt = est.sample(problem, constants, state.copy(), x, rng)
        vals[s] = nxt.sigma_sq
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def _perturbed_state(est, problem, constants, base: EstimatorState, rng, scale: float):
    """Randomly re-anchor the estimator state around its ideal shifts."""
    state = base.copy()
    mode = int(rng.integers(3))
    if state.w is not None:
        if mode == 1:
            radius = 10.0 ** rng.uniform(-3, 1) * scale
            u = rng.standard_normal(problem.d)
            state.w = constants.x_star + radius * u / np.linalg.norm(u)
        elif mode == 2:
            c = rng.uniform(-2.0, 2.0)
            state.w = constants.x_star + c * (base.w - constants.x_star)
        state.grad_w = problem.component_grads(state.w)
        state.full_grad_w = problem.eval_full_grad(state.w)
        diff = state.grad_w - constants.grads_at_star
        state.sigma_sq = float(np.mean(np.sum(diff**2, axis=1)))
    elif state.h is not None:
        gscale = max(1.0, math.sqrt(constants.sigma_star_sq))
        if mode == 1:
            radius = 10.0 ** rng.uniform(-3, 1) * gscale
            state.h = constants.grads_at_star + radius * rng.standard_normal(state.h.shape)
        elif mode == 2:
            c = rng.uniform(-2.0, 2.0)
            state.h = constants.grads_at_star + c * (base.h - constants.grads_at_star)
        diff = state.h - constants.grads_at_star
        state.sigma_sq = float(np.mean(np.sum(diff**2, axis=1)))
    return state


def verify_assumption(
    problem: FiniteSumProblem,
    constants: ProblemConstants,
    estimator: Estimator,
    num_points: int = 100,
    samples_per_point: int = 10000,
    seed: int = 0,
    certificate: Certificate | None = None,
    warmup_steps: int = 64,
) -> Report:
    """Check the two certificate inequalities at randomly explored states.

    States are drawn from a short warm-up trajectory plus random
    perturbations: iterates at log-spread radii around x*, points along the
    warm-up line (including reflections), and re-anchored shift states.  The
    left-hand sides are evaluated exactly where the outcome space enumerates,
    otherwise by samples_per_point Monte-Carlo draws; exact margins must be
    >= -1e-10 * RHS, sampled margins >= -4 standard errors.

    Passing a certificate overrides the estimator's own; this is how mutation
    tests inject corrupted constants.
    """
    if num_points < 1:
        raise ValueError(f"num_points must be >= 1, got {num_points}")
    cert = certificate if certificate is not None else estimator.certificate(problem, constants)
    scale = max(1.0, float(np.linalg.norm(constants.x_star)))

    # short warm-up run caching (iterate, state) pairs
    warm_rng = np.random.default_rng([seed, VERIFY_STREAM, 2**32])
    u = warm_rng.standard_normal(problem.d)
    x = constants.x_star + scale * u / np.linalg.norm(u)
    own_cert = estimator.certificate(problem, constants)
    gamma = 0.5 * max_stepsize(own_cert, constants.mu, default_M(own_cert))
    state = estimator.init_state(problem, constants, x)
    warm: list[tuple[np.ndarray, EstimatorState]] = [(x.copy(), state.copy())]
    for _ in range(warmup_steps):
        g, state = estimator.sample(problem, constants, state, x, warm_rng)
        x = x - gamma * g
        warm.append((x.copy(), state.copy()))

    report = Report(title=f"assumption[{estimator.name}]")
    for j in range(num_points):
        rng = np.random.default_rng([seed, VERIFY_STREAM, j])
        xw, sw = warm[int(rng.integers(len(warm)))]
        radius = 10.0 ** rng.uniform(-3, 1) * scale
        udir = rng.standard_normal(problem.d)
        udir /= np.linalg.norm(udir)
        mode = int(rng.integers(3))
        if mode == 0:
            xp = constants.x_star + radius * udir
        elif mode == 1:
            xp = xw + radius * udir
        else:
            c = rng.uniform(-2.0, 2.0)
            xp = constants.x_star + c * (xw - constants.x_star) + 1e-3 * radius * udir
        sp = _perturbed_state(estimator, problem, constants, sw, rng, scale)

        gap = problem.eval_f(xp) - constants.f_star
        rhs = 2.0 * cert.A * gap + cert.B * sp.sigma_sq + cert.D1
        lhs = estimator.exact_second_moment(problem, constants, sp, xp)
        if lhs is not None:
            report.checks.append(
                Check(
                    name=f"second_moment[{j}]",
                    margin=rhs - lhs,
                    tol=EXACT_MARGIN_RTOL * abs(rhs),
                    exact=True,
                )
            )
        else:
            est_lhs, se = _mc_second_moment(
                estimator, problem, constants, sp, xp, rng, samples_per_point
            )
            report.checks.append(
                Check(name=f"second_moment[{j}]", margin=rhs - est_lhs, tol=4.0 * se, exact=False)
            )

        if cert.has_sigma:
            rhs2 = (1.0 - cert.rho) * sp.sigma_sq + 2.0 * cert.C * gap + cert.D2
            lhs2 = estimator.exact_sigma_next(problem, constants, sp, xp)
            if lhs2 is not None:
                report.checks.append(
                    Check(
                        name=f"sigma_recursion[{j}]",
                        margin=rhs2 - lhs2,
                        tol=EXACT_MARGIN_RTOL * abs(rhs2),
                        exact=True,
                    )
                )
            else:
                est_lhs2, se2 = _mc_sigma_next(
                    estimator, problem, constants, sp, xp, rng, samples_per_point
                )
                report.checks.append(
                    Check(
                        name=f"sigma_recursion[{j}]", margin=rhs2 - est_lhs2, tol=4.0 * se2, exact=False
                    )
                )
    return report


def verify_bound(
    stats: TrajectoryStats,
    slack_rel: float = DEFAULT_SLACK_REL,
    slack_stat: float = DEFAULT_SLACK_STAT,
) -> Report:
    """Check mean_V(k) <= bound_V(k)*(1+slack_rel) + slack_stat*std_V(k)/sqrt(R)."""
    report = Report(title="bound_domination")
    se = stats.std_V / math.sqrt(stats.trials)
    limit = stats.bound_V * (1.0 + slack_rel) + slack_stat * se
    margins = limit - stats.mean_V
    worst = int(np.argmin(margins))
    for idx in range(len(stats.ks)):
        if idx == worst or margins[idx] < 0:
            report.checks.append(
                Check(
                    name=f"bound[k={stats.ks[idx]}]",
                    margin=float(margins[idx]),
                    tol=0.0,
                    exact=False,
                    detail=f"mean_V={stats.mean_V[idx]:.6e} bound_V={stats.bound_V[idx]:.6e}",
                )
            )
    if np.all(margins >= 0) and len(report.checks) <= 1:
        report.checks.append(
            Check(
                name="bound[all recorded k]",
                margin=float(margins[worst]),
                tol=0.0,
                exact=False,
                detail=f"checked {len(stats.ks)} recorded iterations",
            )
        )
    return report


def verify_compressor(compressor, d: int, seed: int = 0, num_vectors: int = 5) -> Report:
    """Check unbiasedness and the omega variance certificate on probe vectors.

    Uses exact enumeration when supported, otherwise 10^5 sampled
    compressions with a 4-standard-error slack.
    """
    from .compressor import UnsupportedSizeError

    rng = np.random.default_rng([seed, VERIFY_STREAM, 2**33])
    omega = compressor.omega(d)
    report = Report(title=f"compressor[{compressor.name}]")
    probes = [rng.standard_normal(d) for _ in range(num_vectors - 1)]
    probes.append(np.ones(d))
    for idx, x in enumerate(probes):
        norm_sq = float(x @ x)
        try:
            mean, mse = compressor.exact_moments(x)
            bias = float(np.max(np.abs(mean - x)))
            report.checks.append(
                Check(
                    name=f"unbiased[{idx}]",
                    margin=1e-12 * max(1.0, norm_sq) - bias,
                    tol=0.0,
                    exact=True,
                )
            )
            report.checks.append(
                Check(
                    name=f"variance[{idx}]",
                    margin=omega * norm_sq * (1.0 + 1e-12) - mse,
                    tol=0.0,
                    exact=True,
                )
            )
        except UnsupportedSizeError:
            samples = 10**5
            draws = compressor.compress_batch(np.tile(x, (samples, 1)), rng)
            se_mean = draws.std(axis=0, ddof=1) / math.sqrt(samples)
            bias = np.abs(draws.mean(axis=0) - x)
            report.checks.append(
                Check(
                    name=f"unbiased[{idx}]",
                    margin=float(np.min(4.0 * se_mean - bias)),
                    tol=0.0,
                    exact=False,
                )
            )
            err = np.sum((draws - x) ** 2, axis=1)
            se_mse = float(err.std(ddof=1) / math.sqrt(samples))
            report.checks.append(
                Check(
                    name=f"variance[{idx}]",
                    margin=omega * norm_sq - float(err.mean()),
                    tol=4.0 * se_mse,
                    exact=False,
                )
            )
    return report
