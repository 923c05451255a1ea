"""JSON scenario files.

A scenario file holds one shot-noise or network model plus optional job
parameters. Unknown keys are rejected, and every physical parameter is
checked by constructing the corresponding domain object at load time.
:func:`dump_scenario_file` writes a canonical form (fixed key order), so a
load/dump round trip is value-identical.
"""
from __future__ import annotations

import json
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .campbell import BoundedPowerLaw, PowerLaw, ShotNoiseScenario
from .distributions import Deterministic, Erlang, Exponential, GeneralPhaseType, PhaseType
from .oracle import McConfig
from .quadrature import QuadratureConfig
from .sinr import NetworkScenario, OuterQuadrature

__all__ = [
    "SCHEMA_VERSION",
    "ScenarioFile",
    "ShotNoiseFile",
    "NetworkFile",
    "JobSpec",
    "load_scenario_file",
    "parse_scenario_file",
    "dump_scenario_file",
]

SCHEMA_VERSION = "1.0"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PowerLawSpec(_Strict):
    kind: Literal["power_law"]
    K: float = 1.0
    alpha: float = 4.0
    exclusion: float = 0.0

    def build(self):
        return PowerLaw(self.K, self.alpha, self.exclusion)


class BoundedPowerLawSpec(_Strict):
    kind: Literal["bounded_power_law"]
    K: float = 1.0
    alpha: float = 4.0

    def build(self):
        return BoundedPowerLaw(self.K, self.alpha)


PathLossSpec = Annotated[Union[PowerLawSpec, BoundedPowerLawSpec], Field(discriminator="kind")]


class DeterministicSpec(_Strict):
    kind: Literal["deterministic"]
    c: float = 1.0

    def build(self):
        return Deterministic(self.c)


class ExponentialSpec(_Strict):
    kind: Literal["exponential"]
    rate: float = 1.0

    def build(self):
        return Exponential(self.rate)


class ErlangSpec(_Strict):
    kind: Literal["erlang"]
    shape: int
    rate: float

    def build(self):
        return Erlang(self.shape, self.rate)


class PhaseTypeSpec(_Strict):
    kind: Literal["phase_type"]
    negated_subgenerator: list[list[float]]
    sub_pmf: list[float]

    def build(self):
        return GeneralPhaseType(PhaseType(np.array(self.negated_subgenerator), np.array(self.sub_pmf)))


FadingSpec = Annotated[
    Union[DeterministicSpec, ExponentialSpec, ErlangSpec, PhaseTypeSpec], Field(discriminator="kind")
]


class TermSpec(_Strict):
    weight: float = 1.0
    point: tuple[float, float] = (0.0, 0.0)


class HoleSpec(_Strict):
    center: tuple[float, float] = (0.0, 0.0)
    radius: float


class QuadratureSpec(_Strict):
    abs_tol: float = QuadratureConfig.abs_tol
    rel_tol: float = QuadratureConfig.rel_tol
    max_subdivisions: int = QuadratureConfig.max_subdivisions
    tail_truncation_tol: float = QuadratureConfig.tail_truncation_tol

    def build(self):
        return QuadratureConfig(**self.model_dump())


class OuterSpec(_Strict):
    nodes: int = OuterQuadrature.nodes
    tail_mass: float = OuterQuadrature.tail_mass

    def build(self):
        return OuterQuadrature(**self.model_dump())


class McSpec(_Strict):
    seed: int = 0
    trials: int = 100_000
    truncation_radius: Optional[float] = None

    def build(self, threads: int = 1):
        return McConfig(self.seed, self.trials, self.truncation_radius, threads)


class JobSpec(_Strict):
    tau: list[float] = [1.0]
    zeta: list[float] = [0.25, 0.5, 0.75]
    order: int = 64
    epsilon: float = 1e-3
    max_order: int = 4
    quadrature: QuadratureSpec = QuadratureSpec()
    outer: OuterSpec = OuterSpec()
    mc: McSpec = McSpec()

    @model_validator(mode="after")
    def _check(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")
        self.quadrature.build()
        self.outer.build()
        self.mc.build()
        return self


class ShotNoiseFile(_Strict):
    schema_version: Literal["1.0"]
    kind: Literal["shot_noise"]
    intensity: float
    path_loss: PathLossSpec
    fading: FadingSpec
    combination: list[TermSpec] = [TermSpec()]
    hole: Optional[HoleSpec] = None
    job: JobSpec = JobSpec()

    @model_validator(mode="after")
    def _check(self):
        self.build()
        return self

    def build(self) -> ShotNoiseScenario:
        hole = None if self.hole is None else (self.hole.center, self.hole.radius)
        return ShotNoiseScenario(
            self.intensity,
            self.path_loss.build(),
            self.fading.build(),
            tuple((t.weight, t.point) for t in self.combination),
            hole=hole,
        )


class NetworkFile(_Strict):
    schema_version: Literal["1.0"]
    kind: Literal["network"]
    bs_intensity: float
    path_loss: PathLossSpec
    interferer_fading: FadingSpec
    signal_power: FadingSpec
    noise_power: float = 0.0
    user_location: tuple[float, float] = (0.0, 0.0)
    job: JobSpec = JobSpec()

    @model_validator(mode="after")
    def _check(self):
        self.build()
        return self

    def build(self) -> NetworkScenario:
        return NetworkScenario(
            self.bs_intensity,
            self.path_loss.build(),
            self.interferer_fading.build(),
            self.signal_power.build(),
            self.noise_power,
            self.user_location,
        )


class ScenarioFile(_Strict):
    """Wrapper used only for discriminated parsing."""

    root: Annotated[Union[ShotNoiseFile, NetworkFile], Field(discriminator="kind")]


def parse_scenario_file(text: str) -> ShotNoiseFile | NetworkFile:
    """Parse and validate JSON text.

    Raises
    ------
    json.JSONDecodeError
        Malformed JSON; carries line and column.
    pydantic.ValidationError
        Schema or physical-parameter violation; carries the field path.
    """
    data = json.loads(text)
    return ScenarioFile.model_validate({"root": data}).root


def load_scenario_file(path) -> ShotNoiseFile | NetworkFile:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario_file(fh.read())


def dump_scenario_file(cfg: ShotNoiseFile | NetworkFile) -> str:
    """Canonical JSON text: declared field order, all defaults explicit."""
    return json.dumps(cfg.model_dump(mode="json"), indent=2) + "\n"
