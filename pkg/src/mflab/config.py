"""Run configuration: YAML parsing, validation and hashing."""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from .errors import MflabError

EXPERIMENTS = ("n_rate", "h_rate", "coupled_kac", "sensitivity_scaling", "mixed_rate", "equivalence")

DEFAULT_LADDERS = {
    "n_rate": [64, 256, 1024, 4096],
    "h_rate": [0.2, 0.1, 0.05, 0.025],
    "coupled_kac": [64, 128, 256, 512, 1024],
    "sensitivity_scaling": [8, 32, 128, 512],
    "mixed_rate": [0.2, 0.1, 0.05, 0.025],
    "equivalence": [0.2, 0.1, 0.05, 0.025],
}


class ConfigError(MflabError):
    """Invalid or unreadable configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PotentialSpec(_Strict):
    kind: Literal["gaussian", "zero", "harmonic", "constant"] = "gaussian"
    amplitude: float = 1.0
    width: PositiveFloat = 1.0


class PhaseSpec(_Strict):
    """sigma0: sine (amplitude sin(wavenumber x)), linear, quadratic or zero."""

    kind: Literal["sine", "linear", "quadratic", "zero"] = "sine"
    amplitude: float = 0.2
    wavenumber: PositiveFloat = 1.0
    velocity: float = 0.0
    curvature: float = -1.0


class AmplitudeSpec(_Strict):
    """Gaussian amplitude of unit mass with a quadratic chirp."""

    width: PositiveFloat = 1.0
    chirp: float = 1.0


class MixedSpec(_Strict):
    w_center: float = 0.2
    w_width: PositiveFloat = 0.3
    n_nodes: PositiveInt = 24
    support: PositiveFloat = 5.0


class TimeSpec(_Strict):
    """Target time: ``t_final`` if set, else ``caustic_fraction`` times the hydro caustic time."""

    t_final: Optional[float] = Field(default=None, ge=0.0)
    caustic_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)
    t_max_search: PositiveFloat = 10.0


class SolverSpec(_Strict):
    classical_dt: PositiveFloat = 0.02
    classical_scheme: Literal["verlet", "yoshida4"] = "yoshida4"
    monte_carlo_dt: PositiveFloat = 0.05
    quantum_dt: PositiveFloat = 0.002
    hartree_order: Literal[2, 4] = 2
    domain_length: PositiveFloat = 6 * math.pi
    v_window: PositiveFloat = 10.0
    reference_markers: PositiveInt = 256
    reference_half_width: PositiveFloat = 8.0
    reference_dt: PositiveFloat = 0.005
    caustic_threshold: float = Field(default=0.05, gt=0.0, lt=1.0)
    pic_cells: PositiveInt = 512
    pic_dt: PositiveFloat = 0.005
    sensitivity_dt: PositiveFloat = 0.01
    sensitivity_time: PositiveFloat = 1.0
    kac_hbar: PositiveFloat = 1.0
    max_grid_points: PositiveInt = 65536


class RunConfig(_Strict):
    experiment: Literal["n_rate", "h_rate", "coupled_kac", "sensitivity_scaling", "mixed_rate", "equivalence"]
    potential: PotentialSpec = PotentialSpec()
    amplitude: AmplitudeSpec = AmplitudeSpec()
    phase: PhaseSpec = PhaseSpec()
    mixed: MixedSpec = MixedSpec()
    time: TimeSpec = TimeSpec()
    solver: SolverSpec = SolverSpec()
    ladder: Optional[list[PositiveFloat]] = None
    init_mode: Literal["quadrature", "monte-carlo"] = "quadrature"
    n_seeds: PositiveInt = 16
    seed: int = 12345
    threads: PositiveInt = 1
    figures: bool = True
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.ladder is not None:
            if len(self.ladder) < 2:
                raise ValueError("ladder needs at least 2 points")
            if len(set(self.ladder)) != len(self.ladder):
                raise ValueError("ladder values must be distinct")
        return self

    @property
    def ladder_values(self) -> list:
        vals = self.ladder if self.ladder is not None else DEFAULT_LADDERS[self.experiment]
        if self.experiment in ("n_rate", "coupled_kac", "sensitivity_scaling"):
            if any(v != int(v) for v in vals):
                raise ConfigError(f"ladder for {self.experiment} must hold integers")
            return [int(v) for v in vals]
        return [float(v) for v in vals]

    def canonical(self) -> dict:
        """Full configuration with defaults, minus the output location."""
        return self.model_dump(mode="json", exclude={"output_dir"})

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def canonical_yaml(self) -> str:
        return yaml.safe_dump(self.canonical(), sort_keys=True)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=True)


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def parse_config(path) -> RunConfig:
    """Read and validate a YAML configuration file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"malformed YAML in {p}: {err}") from None
    return config_from_dict(data or {})


def config_schema() -> dict:
    return RunConfig.model_json_schema()
