"""Experiment configuration files (JSON) and their validation."""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ErrorCode, HeatflowError

Mode = Literal["STATE", "HEAT", "SCALING", "VERIFY"]
RegimeName = Literal["FINITE_CUTOFF", "INFINITE_CUTOFF", "WEAK"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeSource(StrictModel):
    dim: Literal[1, 2, 3]
    N: int = Field(default=4, ge=2)
    k0: float = Field(default=10.0, ge=0)
    coupling: float = 1.0
    mass_mean: float = Field(default=1.0, gt=0)
    mass_spread: float = Field(default=0.0, ge=0)
    boundary: Literal["FIXED", "FREE"] = "FIXED"


class MatrixSource(StrictModel):
    mass_path: str
    potential_path: str


class RandomSource(StrictModel):
    K: int = Field(ge=1)


class NetworkConfig(StrictModel):
    lattice: Optional[LatticeSource] = None
    matrices: Optional[MatrixSource] = None
    random: Optional[RandomSource] = None

    @model_validator(mode="after")
    def exactly_one_source(self) -> "NetworkConfig":
        given = [name for name in ("lattice", "matrices", "random") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError(f"network needs exactly one of lattice, matrices, random (got {given or 'none'})")
        return self


class ReservoirConfig(StrictModel):
    contacts: Optional[List[List[int]]] = None
    temperatures: List[float] = Field(default_factory=lambda: [1.05, 0.95])
    gamma0: float = Field(default=0.1, gt=0)
    cutoff: Union[float, Literal["inf"]] = "inf"

    @property
    def cutoff_value(self) -> float:
        return math.inf if self.cutoff == "inf" else float(self.cutoff)


class EnsembleConfig(StrictModel):
    realizations: int = Field(default=1, ge=1)
    master_seed: int = Field(default=0, ge=0)


class SweepConfig(StrictModel):
    sizes: List[int] = Field(default_factory=list)
    gamma0s: List[float] = Field(default_factory=list)
    fit_min_N: Optional[int] = None


class OutputConfig(StrictModel):
    path: Optional[str] = None
    format: Literal["csv", "json", "both"] = "both"


class TransmissionConfig(StrictModel):
    omega_min: float = Field(default=0.01, gt=0)
    omega_max: float = Field(default=10.0, gt=0)
    points: int = Field(default=400, ge=2)


class OptionsConfig(StrictModel):
    # None: classical for scaling runs, quantum otherwise
    classical: Optional[bool] = None
    quantum_weak: bool = False
    transmission: Optional[TransmissionConfig] = None
    classicality_factor: float = 10.0
    verify_tolerance: float = 1e-6
    quadrature_rel_tol: float = 1e-10
    deterministic: Optional[bool] = None
    threads: Optional[int] = Field(default=None, ge=1)


class ExperimentConfig(StrictModel):
    mode: Mode
    network: NetworkConfig
    reservoirs: ReservoirConfig = Field(default_factory=ReservoirConfig)
    regime: RegimeName = "INFINITE_CUTOFF"
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    options: OptionsConfig = Field(default_factory=OptionsConfig)

    @model_validator(mode="after")
    def consistent(self) -> "ExperimentConfig":
        finite = self.reservoirs.cutoff != "inf"
        if self.regime == "FINITE_CUTOFF" and not finite:
            raise ValueError("regime FINITE_CUTOFF needs a numeric reservoirs.cutoff")
        if self.regime == "INFINITE_CUTOFF" and finite:
            raise ValueError('regime INFINITE_CUTOFF needs reservoirs.cutoff = "inf"')
        if self.network.matrices is not None and self.reservoirs.contacts is None:
            raise ValueError("reservoirs.contacts is required for a network read from matrix files")
        if self.mode == "SCALING":
            if self.network.lattice is None:
                raise ValueError("SCALING needs a lattice network")
            if len(self.reservoirs.temperatures) != 2:
                raise ValueError("SCALING needs exactly two reservoir temperatures")
            if not self.sweep.sizes:
                raise ValueError("SCALING needs sweep.sizes")
        if self.mode == "VERIFY" and self.regime == "WEAK":
            raise ValueError("VERIFY compares pole sums with quadrature; use FINITE_CUTOFF or INFINITE_CUTOFF")
        return self

    @property
    def classical(self) -> bool:
        if self.options.classical is None:
            return self.mode == "SCALING"
        return self.options.classical

    @property
    def gamma0s(self) -> List[float]:
        return self.sweep.gamma0s or [self.reservoirs.gamma0]


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors())
        raise HeatflowError(ErrorCode.CONFIG_ERROR, f"invalid experiment config: {problems}")


def load_config(path: str) -> ExperimentConfig:
    config_path = Path(path)
    if not config_path.exists():
        raise HeatflowError(ErrorCode.CONFIG_ERROR, f"config file not found: {path}")
    try:
        data = json.loads(config_path.read_text())
    except json.JSONDecodeError as e:
        raise HeatflowError(ErrorCode.CONFIG_ERROR, f"config file is not valid JSON: {e}", path=str(path))
    if not isinstance(data, dict):
        raise HeatflowError(ErrorCode.CONFIG_ERROR, "config file must hold a JSON object", path=str(path))
    return config_from_dict(data)


def apply_overrides(
    config: ExperimentConfig,
    mode: Optional[str] = None,
    out: Optional[str] = None,
    threads: Optional[int] = None,
    deterministic: Optional[bool] = None,
    seed: Optional[int] = None,
) -> ExperimentConfig:
    """Command-line flags win over the file; the result is validated again."""
    data = config.model_dump()
    if mode is not None:
        data["mode"] = mode.upper()
    if out is not None:
        data["output"]["path"] = out
    if threads is not None:
        data["options"]["threads"] = threads
    if deterministic:
        data["options"]["deterministic"] = True
    if seed is not None:
        data["ensemble"]["master_seed"] = seed
    return config_from_dict(data)
