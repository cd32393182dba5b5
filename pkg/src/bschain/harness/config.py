"""Experiment spec files: a small YAML schema with per-experiment params.

A spec file names one experiment (E1-E9), a master seed, and optional
parameter overrides. Profiles are given as Fourier harmonic lists
``[[k, a_k, b_k], ...]`` meaning a_k cos(2 pi k u) + b_k sin(2 pi k u)
on top of a mean, which guarantees smooth initial data. Validation
errors name the offending field path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..continuum import SpectralProfile
from ..errors import ConfigError

DEFAULT_BUDGET_EVENTS = 5.0e9
PROFILE_GRID = 4096


@dataclass
class ExperimentSpec:
    experiment: str
    seed: int
    params: dict
    output: str | None = None
    workers: int | None = None
    budget_max_events: float = DEFAULT_BUDGET_EVENTS
    source: dict = field(default_factory=dict)


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def parse_profile(node, path: str, cutoff: int = 64) -> SpectralProfile:
    """Build a profile from {mean: float, harmonics: [[k, a, b], ...]}."""
    _require(isinstance(node, dict), path, "expected a mapping with mean/harmonics")
    unknown = set(node) - {"mean", "harmonics"}
    _require(not unknown, path, f"unknown keys {sorted(unknown)}")
    mean = node.get("mean", 0.0)
    _require(isinstance(mean, (int, float)), f"{path}.mean", "expected a number")
    harmonics = node.get("harmonics", [])
    _require(isinstance(harmonics, list), f"{path}.harmonics", "expected a list of [k, a, b]")
    triples = []
    for i, item in enumerate(harmonics):
        _require(
            isinstance(item, (list, tuple)) and len(item) == 3,
            f"{path}.harmonics[{i}]",
            "expected [k, a, b]",
        )
        k, a, b = item
        _require(isinstance(k, int) and k >= 1, f"{path}.harmonics[{i}][0]", "k must be an int >= 1")
        _require(
            all(isinstance(v, (int, float)) for v in (a, b)),
            f"{path}.harmonics[{i}]",
            "amplitudes must be numbers",
        )
        triples.append((k, float(a), float(b)))
    try:
        return SpectralProfile.from_harmonics(float(mean), triples, cutoff=cutoff)
    except Exception as exc:  # re-tag with the field path
        raise ConfigError(f"{path}: {exc}") from exc


def check_profile_pair_positive(v0: SpectralProfile, e0: SpectralProfile, path: str):
    """Variance profile e0 - v0^2 must be strictly positive on a fine grid."""
    u = np.arange(PROFILE_GRID) / PROFILE_GRID
    chi = e0.value(u) - v0.value(u) ** 2
    i = int(np.argmin(chi))
    _require(chi[i] > 0, path, f"variance profile e0 - v0^2 is {chi[i]:g} at u={u[i]:g}; must be > 0")


def validate_spec(raw: dict, known_experiments) -> ExperimentSpec:
    _require(isinstance(raw, dict), "<root>", "spec must be a mapping")
    unknown = set(raw) - {"experiment", "seed", "params", "output", "workers", "budget_max_events"}
    _require(not unknown, "<root>", f"unknown keys {sorted(unknown)}")
    exp = raw.get("experiment")
    _require(isinstance(exp, str), "experiment", "expected a string like E1")
    _require(exp in known_experiments, "experiment", f"unknown id {exp!r}; see list-experiments")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int) and seed >= 0, "seed", "expected a nonnegative integer")
    params = raw.get("params", {}) or {}
    _require(isinstance(params, dict), "params", "expected a mapping")
    output = raw.get("output")
    _require(output is None or isinstance(output, str), "output", "expected a string path")
    workers = raw.get("workers")
    _require(
        workers is None or (isinstance(workers, int) and workers >= 1),
        "workers",
        "expected an integer >= 1",
    )
    budget = raw.get("budget_max_events", DEFAULT_BUDGET_EVENTS)
    _require(isinstance(budget, (int, float)) and budget > 0, "budget_max_events", "expected > 0")
    return ExperimentSpec(
        experiment=exp,
        seed=seed,
        params=params,
        output=output,
        workers=workers,
        budget_max_events=float(budget),
        source=raw,
    )


def load_spec(path, known_experiments) -> ExperimentSpec:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"<file>: not valid YAML: {exc}") from exc
    return validate_spec(raw, known_experiments)


def merge_params(defaults: dict, overrides: dict, allowed: set, exp_id: str) -> dict:
    for key in overrides:
        _require(key in allowed, f"params.{key}", f"not a parameter of {exp_id}")
    merged = dict(defaults)
    merged.update(overrides)
    return merged
