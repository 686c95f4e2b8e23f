"""Experiment configuration: one JSON document per run."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .compound import MultiObjectSpec
from .single import GivenExponents, HypothesisSet


class ConfigError(ValueError):
    pass


FIELDS = {
    "alphabet_size", "log_base", "distributions", "objects", "given", "pairs", "n_grid",
    "trials", "seed", "workers", "methods", "entries", "dense", "family_c", "sweep",
}


def _grid(spec, name: str) -> list[float]:
    if isinstance(spec, list):
        return [float(v) for v in spec]
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "step"}
        if unknown:
            raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except KeyError as e:
            raise ConfigError(f"{name}: missing {e.args[0]!r}") from None
        return axis_values(start, stop, step, name)
    raise ConfigError(f"{name} must be a list or a {{start, stop, step}} object")


def axis_values(start: float, stop: float, step: float, name: str = "axis") -> list[float]:
    if not step > 0:
        raise ConfigError(f"{name}: step must be positive")
    if stop < start:
        raise ConfigError(f"{name}: stop is below start")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + k * step, 12) for k in range(n + 1)]


@dataclass
class SweepAxis:
    hypothesis: int
    start: float
    stop: float
    step: float
    obj: int = 1

    def values(self) -> list[float]:
        return axis_values(self.start, self.stop, self.step, f"sweep axis {self.obj}/{self.hypothesis}")


@dataclass
class ExperimentConfig:
    distributions: list[list[float]]
    log_base: float = 2.0
    objects: int = 1
    given: Any = None
    alphabet_size: int | None = None
    pairs: list = field(default_factory=list)
    n_grid: list[int] = field(default_factory=list)
    trials: int = 0
    seed: int = 0
    workers: int = 1
    methods: list[str] = field(default_factory=lambda: ["exact"])
    entries: list = field(default_factory=list)
    dense: bool = False
    family_c: dict | None = None
    sweep: dict | None = None

    # validated views, filled by load
    H: HypothesisSet | None = None
    slices: list[list[float]] = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.objects

    def single_given(self) -> GivenExponents:
        return GivenExponents(tuple(self.slices[0]))

    def multi_spec(self) -> MultiObjectSpec:
        return MultiObjectSpec.from_slices(self.H, self.slices)

    def sweep_axes(self) -> list[SweepAxis]:
        axes = []
        for j, a in enumerate((self.sweep or {}).get("axes", [])):
            unknown = set(a) - {"object", "hypothesis", "start", "stop", "step"}
            if unknown:
                raise ConfigError(f"sweep axis {j}: unknown keys {sorted(unknown)}")
            try:
                axes.append(SweepAxis(int(a["hypothesis"]), float(a["start"]), float(a["stop"]),
                                      float(a["step"]), int(a.get("object", 1))))
            except KeyError as e:
                raise ConfigError(f"sweep axis {j}: missing {e.args[0]!r}") from None
        return axes


def _slices(raw, K: int, M: int) -> list[list[float]]:
    if raw is None:
        raise ConfigError("missing 'given' exponents")
    if K == 1:
        if isinstance(raw, list) and raw and isinstance(raw[0], list):
            raise ConfigError("single object expects a flat list of given exponents")
        out = [raw]
    elif isinstance(raw, dict):
        try:
            out = [raw[str(i)] for i in range(1, K + 1)]
        except KeyError as e:
            raise ConfigError(f"given: no entry for object {e.args[0]}") from None
        if len(raw) != K:
            raise ConfigError(f"given: expected objects 1..{K}")
    elif isinstance(raw, list):
        out = raw
    else:
        raise ConfigError("given must be a list or an object keyed by object index")
    if len(out) != K:
        raise ConfigError(f"given: expected {K} per-object lists, got {len(out)}")
    for i, s in enumerate(out, start=1):
        if not isinstance(s, list) or len(s) != M - 1:
            raise ConfigError(f"given for object {i}: expected a list of {M - 1} exponents")
        if any(not isinstance(v, (int, float)) or isinstance(v, bool) for v in s):
            raise ConfigError(f"given for object {i}: exponents must be numbers")
    return [[float(v) for v in s] for s in out]


def from_dict(doc: dict, log_base: float | None = None, seed: int | None = None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if "distributions" not in doc:
        raise ConfigError("missing 'distributions'")
    cfg = ExperimentConfig(**{k: v for k, v in doc.items()})
    if log_base is not None:
        cfg.log_base = log_base
    if seed is not None:
        cfg.seed = seed
    dists = cfg.distributions
    if not isinstance(dists, list) or len(dists) < 2 or not all(isinstance(d, list) for d in dists):
        raise ConfigError("'distributions' must list at least two probability vectors")
    sizes = {len(d) for d in dists}
    if len(sizes) != 1:
        raise ConfigError(f"distributions have different lengths: {sorted(sizes)}")
    if cfg.alphabet_size is not None and cfg.alphabet_size not in sizes:
        raise ConfigError(f"alphabet_size {cfg.alphabet_size} does not match distributions")
    try:
        cfg.H = HypothesisSet(tuple(dists), cfg.log_base)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None
    if not isinstance(cfg.objects, int) or cfg.objects < 1:
        raise ConfigError("'objects' must be a positive integer")
    cfg.slices = _slices(cfg.given, cfg.objects, cfg.H.M)
    try:
        if cfg.objects == 1:
            cfg.single_given()
        else:
            cfg.multi_spec()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if cfg.n_grid:
        cfg.n_grid = [int(n) for n in _grid(cfg.n_grid, "n_grid")]
    if not isinstance(cfg.trials, int) or cfg.trials < 0:
        raise ConfigError("'trials' must be a nonnegative integer")
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("'seed' must be a nonnegative integer")
    bad = set(cfg.methods) - {"exact", "monte_carlo"}
    if bad:
        raise ConfigError(f"unknown methods {sorted(bad)}")
    return cfg


def load_config(path: str | Path, log_base: float | None = None, seed: int | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    return from_dict(doc, log_base, seed)


def read_samples(path: str | Path, K: int, alphabet_size: int) -> list[np.ndarray]:
    """K lines of whitespace-separated 0-based symbols, all of one length."""
    try:
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError as e:
        raise ConfigError(f"cannot read data file: {e}") from None
    if not lines:
        raise ConfigError("data file is empty")
    if len(lines) != K:
        raise ConfigError(f"data file has {len(lines)} sequences, expected {K}")
    try:
        seqs = [np.array([int(tok) for tok in ln.split()], dtype=np.int64) for ln in lines]
    except ValueError:
        raise ConfigError("data file holds a non-integer symbol") from None
    if len({len(s) for s in seqs}) != 1:
        raise ConfigError("sequences in the data file differ in length")
    for s in seqs:
        if s.min() < 0 or s.max() >= alphabet_size:
            raise ConfigError(f"symbol out of range for alphabet of size {alphabet_size}")
    return seqs
