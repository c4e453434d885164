"""Pipeline configuration: nested dataclasses loaded from a YAML file.

Every section is optional; unknown keys anywhere are rejected.
"""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .active_subspaces import ParameterDomain
from .dmd import RankSpec
from .errors import ConfigError, LiftromError
from .fom_surrogate import (
    DEFAULT_COUPLING,
    DEFAULT_SINE,
    DEFAULT_STEADY,
    DEFAULT_TRANSIENT,
    SurrogateSpec,
)
from .rbf_morph import CutoffConfig
from .shape_param import DEFAULT_EXPONENT, DEFAULT_PEAKS, BumpBasis


@dataclass
class DomainConfig:
    lower: typing.Any = 0.0
    upper: typing.Any = 0.03
    dimension: int = 10

    def build(self) -> ParameterDomain:
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dimension,))
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dimension,))
        return ParameterDomain(lo, hi)


@dataclass
class FomConfig:
    window: list = field(default_factory=lambda: [12.0, 20.0])
    dt: float = 0.001


@dataclass
class DmdConfig:
    rank_mode: str = "fixed"
    rank: int = 10
    energy: float = 1.0 - 1e-6

    def build(self) -> RankSpec:
        if self.rank_mode == "fixed":
            return RankSpec.fixed(self.rank)
        return RankSpec(self.rank_mode, self.energy)


@dataclass
class DyasConfig:
    times: list = field(default_factory=lambda: [6.0, 10.0, 14.0, 18.0])
    freeze_threshold: float = 0.1
    gradient_provider: str = "surrogate"


@dataclass
class GprConfig:
    optimize: bool = False
    lengthscale: float = 1.0
    signal_variance: typing.Optional[float] = None
    noise_variance: float = 0.0
    n_restarts: int = 8
    center_targets: bool = True


@dataclass
class SurrogateConfig:
    baseline: float = 0.355
    steady_weights: list = field(default_factory=lambda: list(DEFAULT_STEADY))
    transient_weights: list = field(default_factory=lambda: list(DEFAULT_TRANSIENT))
    sine_weights: list = field(default_factory=lambda: list(DEFAULT_SINE))
    coupling_weights: list = field(default_factory=lambda: list(DEFAULT_COUPLING))
    tau1: float = 3.0
    tau2: float = 5.0
    omega: float = 1.0
    # 1-based, as written in reports
    frozen_indices: list = field(default_factory=lambda: [1, 5, 6, 10])

    def build(self) -> SurrogateSpec:
        return SurrogateSpec(
            baseline=self.baseline,
            steady_weights=tuple(self.steady_weights),
            transient_weights=tuple(self.transient_weights),
            sine_weights=tuple(self.sine_weights),
            coupling_weights=tuple(self.coupling_weights),
            tau1=self.tau1,
            tau2=self.tau2,
            omega=self.omega,
            frozen_indices=tuple(int(i) - 1 for i in self.frozen_indices),
        )


@dataclass
class GeometryConfig:
    naca: str = "4412"
    n_points: int = 200
    closed_te: bool = True
    peaks: list = field(default_factory=lambda: list(DEFAULT_PEAKS))
    exponent: float = DEFAULT_EXPONENT
    chord: float = 1.0
    leading_edge: list = field(default_factory=lambda: [0.0, 0.0])
    kernel_radius: float = 0.1
    r_inner: float = 1.5
    r_out: float = 7.0
    focal_point: typing.Optional[list] = None
    mesh: typing.Optional[str] = None
    outer_radius: float = 10.0
    n_rings: int = 40
    n_theta: int = 120

    def basis(self) -> BumpBasis:
        return BumpBasis(tuple(self.peaks), self.exponent)

    def focal(self) -> tuple:
        if self.focal_point is not None:
            return tuple(float(v) for v in self.focal_point)
        return (self.leading_edge[0] + 0.5 * self.chord, float(self.leading_edge[1]))

    def cutoff(self) -> CutoffConfig:
        return CutoffConfig(self.focal(), self.r_inner, self.r_out)


@dataclass
class SweepConfig:
    dt_values: list = field(default_factory=lambda: [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2])
    train_sizes: list = field(default_factory=lambda: [1, 5, 10, 20, 30, 40, 50, 60, 70])


@dataclass
class PipelineConfig:
    seed: int = 0
    sampling: str = "uniform"
    n_train: int = 70
    n_test: int = 100
    eval_times: list = field(default_factory=lambda: [float(t) for t in range(1, 31)])
    output_dir: str = "out"
    domain: DomainConfig = field(default_factory=DomainConfig)
    fom: FomConfig = field(default_factory=FomConfig)
    dmd: DmdConfig = field(default_factory=DmdConfig)
    dyas: DyasConfig = field(default_factory=DyasConfig)
    gpr: GprConfig = field(default_factory=GprConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    sweeps: SweepConfig = field(default_factory=SweepConfig)

    @property
    def t_a(self) -> float:
        return float(self.fom.window[0])

    @property
    def t_b(self) -> float:
        return float(self.fom.window[1])

    def validate(self) -> "PipelineConfig":
        """Check cross-field invariants and that every section builds."""
        try:
            if len(self.fom.window) != 2 or not self.t_a < self.t_b:
                raise ConfigError("fom.window must be [t_a, t_b] with t_a < t_b")
            if not self.fom.dt > 0:
                raise ConfigError("fom.dt must be positive")
            if round((self.t_b - self.t_a) / self.fom.dt) < 2:
                raise ConfigError("fom.window must contain at least two instants")
            if self.n_train < 1 or self.n_test < 1:
                raise ConfigError("n_train and n_test must be at least 1")
            if self.sampling not in ("uniform", "latin-hypercube"):
                raise ConfigError(f"unknown sampling strategy {self.sampling!r}")
            if not self.eval_times or any(t <= 0 for t in self.eval_times):
                raise ConfigError("eval_times must be a non-empty list of positive times")
            if not self.dyas.times or any(t < 0 for t in self.dyas.times):
                raise ConfigError("dyas.times must be a non-empty list of non-negative times")
            if self.dyas.freeze_threshold < 0:
                raise ConfigError("dyas.freeze_threshold must be non-negative")
            if self.dyas.gradient_provider not in ("surrogate", "gpr"):
                raise ConfigError("dyas.gradient_provider must be 'surrogate' or 'gpr'")
            if self.gpr.lengthscale <= 0 or self.gpr.noise_variance < 0:
                raise ConfigError("gpr.lengthscale must be positive and noise_variance >= 0")
            dom = self.domain.build()
            spec = self.surrogate.build()
            if spec.dimension != dom.dimension:
                raise ConfigError("surrogate weight length must equal domain.dimension")
            self.dmd.build()
            self.geometry.basis()
            self.geometry.cutoff()
        except ConfigError:
            raise
        except (LiftromError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _from_mapping(cls, data, path: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section '{path or '<root>'}' must be a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = f" in section '{path}'" if path else ""
        raise ConfigError(f"unknown config key(s){where}: {', '.join(map(str, unknown))}")
    kwargs = {}
    for key, value in data.items():
        hint = hints[key]
        sub = f"{path}.{key}" if path else key
        if dataclasses.is_dataclass(hint):
            kwargs[key] = _from_mapping(hint, value, sub)
        else:
            kwargs[key] = _coerce(hint, value, sub)
    return cls(**kwargs)


def _coerce(hint, value, path):
    if hint is typing.Any:
        return value
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        if value is None:
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"'{path}' must be true or false")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{path}' must be an integer")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{path}' must be a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"'{path}' must be a string")
        return value
    if hint is list:
        if not isinstance(value, list):
            raise ConfigError(f"'{path}' must be a list")
        return value
    return value


def config_from_dict(data: dict) -> PipelineConfig:
    return _from_mapping(PipelineConfig, data, "").validate()


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(data or {})


def dump_config(config: PipelineConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)

