"""Experiment configuration files and run manifests.

Configs are flat INI documents with three sections:

    [problem]    family = quadratic | logistic, then either generator
                 parameters (n, d, seed, ...) or explicit JSON arrays
                 (matrices/offsets, features/labels)
    [estimator]  kind = gd | sgd | noisy_gd | sgd_star | lsvrg | cdgd |
                 diana | rcd, plus kind-specific parameters
    [run]        gamma, lyapunov_m, steps, trials, seed, record_every,
                 x0_radius, x0_mode

Unknown sections or keys are errors.  A manifest written by `sgdlab run` is
itself a valid config (the extra [certificate] and [tool] sections are
ignored on load), with every "auto" materialized to 17 significant digits so
re-running it reproduces the outputs bitwise.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .compressor import BernoulliScale, Compressor, Identity, RandK
from .estimator import CDGD, DIANA, LSVRG, Estimator, ESTIMATORS, NoisyGradient
from .harness import ExperimentConfig, ResolvedExperiment
from .problem import (
    FiniteSumProblem,
    LogisticSum,
    QuadraticSum,
    random_logistic,
    random_quadratic,
)

FLOAT_FMT = "%.17g"
IGNORED_SECTIONS = ("certificate", "tool")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


def _fmt(value: float) -> str:
    return FLOAT_FMT % value


class _Section:
    """One INI section with typed, consumed-key access."""

    def __init__(self, name: str, values: dict[str, str]):
        self.name = name
        self.values = dict(values)
        self.seen: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.values

    def _raw(self, key: str, default):
        self.seen.add(key)
        if key not in self.values:
            if default is _REQUIRED:
                raise ConfigError(f"[{self.name}] is missing required key '{key}'")
            return default
        return self.values[key]

    def get_str(self, key: str, default=None) -> str:
        return self._raw(key, default)

    def get_int(self, key: str, default=None) -> int:
        v = self._raw(key, default)
        if isinstance(v, int):
            return v
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be an integer, got {v!r}") from None

    def get_float(self, key: str, default=None) -> float:
        v = self._raw(key, default)
        if isinstance(v, (int, float)):
            return float(v)
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be a number, got {v!r}") from None

    def get_auto(self, key: str, default="auto") -> float | str:
        v = self._raw(key, default)
        if isinstance(v, str) and v.strip() == "auto":
            return "auto"
        return self.get_float_value(key, v)

    def get_float_value(self, key: str, v) -> float:
        if isinstance(v, (int, float)):
            return float(v)
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be a number or 'auto', got {v!r}") from None

    def get_json(self, key: str, default=None):
        v = self._raw(key, default)
        if not isinstance(v, str):
            return v
        try:
            return json.loads(v)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"[{self.name}] {key} is not valid JSON: {exc}") from None

    def reject_unknown(self) -> None:
        unknown = set(self.values) - self.seen
        if unknown:
            raise ConfigError(f"[{self.name}] has unknown keys: {', '.join(sorted(unknown))}")


_REQUIRED = object()


def build_problem(section: _Section) -> FiniteSumProblem:
    family = section.get_str("family", _REQUIRED)
    if family == "quadratic":
        if section.has("matrices") or section.has("offsets"):
            A = np.asarray(section.get_json("matrices", _REQUIRED), dtype=float)
            b = np.asarray(section.get_json("offsets", _REQUIRED), dtype=float)
            section.reject_unknown()
            return QuadraticSum(A=A, b=b)
        n = section.get_int("n", _REQUIRED)
        d = section.get_int("d", _REQUIRED)
        seed = section.get_int("seed", 0)
        eig_lo = section.get_float("eig_lo", 1.0)
        eig_hi = section.get_float("eig_hi", 3.0)
        shift_scale = section.get_float("shift_scale", 1.0)
        section.reject_unknown()
        return random_quadratic(
            n, d, eig_lo=eig_lo, eig_hi=eig_hi, shift_scale=shift_scale, seed=seed
        )
    if family == "logistic":
        if section.has("features") or section.has("labels"):
            feats = np.asarray(section.get_json("features", _REQUIRED), dtype=float)
            labels = np.asarray(section.get_json("labels", _REQUIRED), dtype=float)
            ridge = section.get_float("ridge", _REQUIRED)
            section.reject_unknown()
            return LogisticSum(features=feats, labels=labels, ridge=ridge)
        n = section.get_int("n", _REQUIRED)
        d = section.get_int("d", _REQUIRED)
        seed = section.get_int("seed", 0)
        ridge = section.get_float("ridge", 0.1)
        feature_scale = section.get_float("feature_scale", 1.0)
        section.reject_unknown()
        return random_logistic(n, d, ridge=ridge, feature_scale=feature_scale, seed=seed)
    raise ConfigError(f"[problem] family must be 'quadratic' or 'logistic', got {family!r}")


def _build_compressor(section: _Section) -> Compressor:
    kind = section.get_str("compressor", "identity")
    if kind == "identity":
        return Identity()
    if kind == "rand_k":
        return RandK(k=section.get_int("k", _REQUIRED))
    if kind == "bernoulli":
        return BernoulliScale(q=section.get_float("q", _REQUIRED))
    raise ConfigError(f"[estimator] unknown compressor {kind!r}")


def build_estimator(section: _Section) -> Estimator:
    kind = section.get_str("kind", _REQUIRED)
    if kind not in ESTIMATORS:
        raise ConfigError(f"[estimator] unknown kind {kind!r}; available: {', '.join(sorted(ESTIMATORS))}")
    try:
        if kind == "lsvrg":
            est: Estimator = LSVRG(p=section.get_float("p", _REQUIRED))
        elif kind == "noisy_gd":
            est = NoisyGradient(sigma=section.get_float("sigma", _REQUIRED))
        elif kind == "cdgd":
            est = CDGD(compressor=_build_compressor(section))
        elif kind == "diana":
            alpha = section.get_auto("alpha", "auto")
            est = DIANA(
                compressor=_build_compressor(section),
                alpha=None if alpha == "auto" else alpha,
            )
        else:
            est = ESTIMATORS[kind]()
    except ValueError as exc:
        raise ConfigError(f"[estimator] {exc}") from None
    section.reject_unknown()
    return est


@dataclass
class LoadedConfig:
    """Parsed experiment plus the raw sections (echoed into manifests)."""

    experiment: ExperimentConfig
    sections: dict[str, dict[str, str]]


def parse_config_text(text: str) -> LoadedConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    for name in list(sections):
        if name in IGNORED_SECTIONS:
            del sections[name]
    unknown = set(sections) - {"problem", "estimator", "run"}
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    for required in ("problem", "estimator"):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")

    problem = build_problem(_Section("problem", sections["problem"]))
    estimator = build_estimator(_Section("estimator", sections["estimator"]))

    run = _Section("run", sections.get("run", {}))
    experiment = ExperimentConfig(
        problem=problem,
        estimator=estimator,
        gamma=run.get_auto("gamma", "auto"),
        lyapunov_m=run.get_auto("lyapunov_m", "auto"),
        steps=run.get_int("steps", 1000),
        trials=run.get_int("trials", 1),
        base_seed=run.get_int("seed", 0),
        record_every=(
            "auto" if run.get_str("record_every", "auto") == "auto" else run.get_int("record_every", 0)
        ),
        x0_radius=run.get_float("x0_radius", 1.0),
        x0_mode=run.get_str("x0_mode", "random"),
    )
    run.reject_unknown()
    try:
        experiment.validate()
    except ValueError as exc:
        raise ConfigError(f"[run] {exc}") from None
    return LoadedConfig(experiment=experiment, sections=sections)


def parse_config(path: str | Path) -> LoadedConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text())


def manifest_text(loaded: LoadedConfig, resolved: ResolvedExperiment, version: str) -> str:
    """Render the resolved run as a reloadable INI manifest."""
    out = configparser.ConfigParser(interpolation=None)
    out["problem"] = dict(loaded.sections["problem"])
    est_section = dict(loaded.sections["estimator"])
    if isinstance(resolved.estimator, DIANA):
        est_section["alpha"] = _fmt(resolved.estimator.resolved_alpha(resolved.problem.d))
    out["estimator"] = est_section

    stride = int(np.diff(resolved.record_ks).max()) if len(resolved.record_ks) > 1 else 1
    out["run"] = {
        "gamma": _fmt(resolved.gamma),
        "lyapunov_m": _fmt(resolved.M),
        "steps": str(resolved.steps),
        "trials": str(resolved.trials),
        "seed": str(resolved.base_seed),
        "record_every": str(stride),
        "x0_radius": _fmt(loaded.experiment.x0_radius),
        "x0_mode": loaded.experiment.x0_mode,
    }
    cert = resolved.certificate
    out["certificate"] = {
        "a": _fmt(cert.A),
        "b": _fmt(cert.B),
        "c": _fmt(cert.C),
        "d1": _fmt(cert.D1),
        "d2": _fmt(cert.D2),
        "rho": _fmt(cert.rho),
        "gamma": _fmt(resolved.gamma),
        "m": _fmt(resolved.M),
        "contraction": _fmt(resolved.curve.contraction),
        "floor": _fmt(resolved.curve.floor),
    }
    out["tool"] = {"name": "sgdlab", "version": version}

    import io

    buf = io.StringIO()
    out.write(buf)
    return buf.getvalue()


def stats_csv_text(stats) -> str:
    """Render TrajectoryStats as a deterministic CSV (17 significant digits)."""
    lines = ["k,mean_dist_sq,mean_sigma_sq,mean_V,std_V,bound_V"]
    for i, k in enumerate(stats.ks):
        row = [
            str(int(k)),
            _fmt(stats.mean_dist_sq[i]),
            _fmt(stats.mean_sigma_sq[i]),
            _fmt(stats.mean_V[i]),
            _fmt(stats.std_V[i]),
            _fmt(stats.bound_V[i]),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
