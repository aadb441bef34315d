"""Experiment configuration: one JSON document, with command-line flags taking precedence."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..fractal.triplet import RenormTriplet, scales, validate_triplet
from ..kernels import CovarianceKernel
from ..sampler import MAX_H

MAX_KMAX_UNIT_BRANCHING = 20


@dataclass
class FractalSettings:
    triplet: tuple = (1, 1.2, 1.05)
    k0: int = 2
    tube_factor: float = 9.0
    check_sparsity: bool = True


@dataclass
class JointSettings:
    lengths: tuple = (8.0, 12.0, 16.0)
    aspect: float = 2.0
    gap_factor: float = 2.0


@dataclass
class ExperimentConfig:
    kernel: object = "BargmannFock"
    h: float = 0.25
    lambdas: list = field(default_factory=lambda: [32.0])
    replicas: int = 100
    seed: int = 0
    aspect: float = 1.0
    level: float = 0.0
    crossing: bool = True
    shortest_crossing: bool = False
    box_count: bool = False
    one_arm_s: float = 1.0
    one_arm_ts: list = field(default_factory=list)
    chemical_boxes: int = 0
    fractal: FractalSettings | None = None
    joint: JointSettings | None = None
    nodal: bool = True
    out_dir: str = "runs"
    threads: int = 1

    def validate(self) -> "ExperimentConfig":
        CovarianceKernel.from_spec(self.kernel)
        if not (0 < self.h <= MAX_H):
            raise ConfigError(f"h must lie in (0, {MAX_H}], got {self.h}")
        if not self.lambdas:
            raise ConfigError("lambda list is empty")
        for lam in self.lambdas:
            if not lam >= 8:
                raise ConfigError(f"lambda must be >= 8, got {lam}")
        if int(self.replicas) != self.replicas or self.replicas < 1:
            raise ConfigError(f"replica count must be a positive integer, got {self.replicas}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.aspect >= 1:
            raise ConfigError(f"rectangle aspect must be >= 1, got {self.aspect}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if any(not t > self.one_arm_s for t in self.one_arm_ts) or self.one_arm_s < 1:
            raise ConfigError("one-arm scales must satisfy 1 <= s < t")
        if self.fractal is not None:
            m, gamma, s = self.fractal.triplet
            check = validate_triplet(m, gamma, s)
            if not check:
                raise ConfigError("invalid triplet: " + "; ".join(check.violations))
            trip = RenormTriplet(m, gamma, s)
            for lam in self.lambdas:
                k_max = scales(trip, lam)[1]
                if trip.m == 1 and k_max > MAX_KMAX_UNIT_BRANCHING:
                    raise ConfigError(f"k_max = {k_max} > {MAX_KMAX_UNIT_BRANCHING} at m = 1 (lambda = {lam})")
            if self.fractal.k0 < 0:
                raise ConfigError("k0 must be non-negative")
        if self.joint is not None:
            ls = list(self.joint.lengths)
            if any(b <= a for a, b in zip(ls, ls[1:])):
                raise ConfigError("joint-crossing lengths must be increasing")
            if self.joint.gap_factor < 1:
                raise ConfigError("gap factor below 1 does not give well-separated rectangles")
        return self

    @property
    def kernel_obj(self) -> CovarianceKernel:
        return CovarianceKernel.from_spec(self.kernel)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["kernel"] = self.kernel_obj.to_spec()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if data.get("fractal") is not None:
            data["fractal"] = _sub(FractalSettings, data["fractal"])
        if data.get("joint") is not None:
            data["joint"] = _sub(JointSettings, data["joint"])
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc

    def with_overrides(self, **flags) -> "ExperimentConfig":
        """Copy with every non-None flag replacing the config value."""
        return dataclasses.replace(self, **{k: v for k, v in flags.items() if v is not None})


def _sub(kind, value):
    if isinstance(value, kind):
        return value
    if value is True:
        return kind()
    if not isinstance(value, dict):
        raise ConfigError(f"{kind.__name__} expects an object, got {value!r}")
    known = {f.name for f in dataclasses.fields(kind)}
    if set(value) - known:
        raise ConfigError(f"unknown keys for {kind.__name__}: {sorted(set(value) - known)}")
    out = dict(value)
    for key in ("triplet", "lengths"):
        if key in out:
            out[key] = tuple(out[key])
    return kind(**out)
