"""Run configuration: a pydantic tree parsed from JSON"""

import json
import math
import os
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError
from core.flow import FlowSpec
from core.surface import MIN_NODES, RoundGrid, build_grid
from core.xi import DEFAULT_KNOTS
from verify.experiments import DEFAULT_TOLERANCE, ShapeFamily
from verify.suite import SuiteSettings

WORKERS_ENV = "QF_WORKERS"


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["axisym", "full2d"] = "axisym"
    resolution: Union[int, List[int]] = 256

    @field_validator("resolution")
    @classmethod
    def _positive(cls, value):
        counts = value if isinstance(value, list) else [value]
        if not 1 <= len(counts) <= 2 or any(c < MIN_NODES for c in counts):
            raise ValueError(f"resolution needs one or two node counts >= {MIN_NODES}")
        return value

    def build(self, n: int) -> RoundGrid:
        return build_grid(self.mode, n, self.resolution)


class ShapeConfig(BaseModel):
    """Initial hypersurface: sphere, perturbed sphere or a saved radial graph"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["sphere", "perturbed", "file"] = "perturbed"
    rho0: float = Field(math.pi / 4, gt=0.0, lt=math.pi / 2)
    eps: float = 0.05
    ell: int = Field(2, ge=1)
    order: int = Field(0, ge=0)
    path: Optional[Path] = None

    @model_validator(mode="after")
    def _file_needs_path(self):
        if self.kind == "file" and self.path is None:
            raise ValueError("shape kind 'file' needs a path")
        return self


class XiConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = 1
    l: int = -1
    kind: Literal["parametric", "closed_minkowski_sq", "closed_20", "ode"] = "parametric"
    knots: int = Field(DEFAULT_KNOTS, ge=200)
    variant: Literal["sphere", "printed"] = "sphere"
    reading: Literal["printed", "factored"] = "factored"
    samples: int = Field(1000, ge=2)
    margin: float = Field(0.0, ge=0.0, lt=0.5)


class ConvergenceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    check: Literal["minkowski_residual", "support_gradient_residual", "rate_check"]
    resolutions: List[int] = Field(default_factory=lambda: [64, 128, 256])
    k: Optional[int] = None


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Path = Path("out")
    stem: Optional[str] = None
    formats: List[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])
    save_shape: bool = False

    def path(self, default_stem: str, suffix: str) -> Path:
        return self.directory / f"{self.stem or default_stem}.{suffix}"

    def check_writable(self):
        target = self.directory
        while not target.exists():
            target = target.parent
        if not target.is_dir() or not os.access(target, os.W_OK):
            raise ConfigError(
                f"output directory {self.directory} is not writable", ["output.directory"]
            )


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid")

    inequality: float = Field(DEFAULT_TOLERANCE, gt=0.0)


class RunConfig(BaseModel):
    """Top-level config; `command` selects the pipeline"""

    model_config = ConfigDict(extra="forbid")

    command: Literal["shape", "flow", "xi", "verify", "suite"]
    n: int = Field(2, ge=1)
    grid: GridConfig = Field(default_factory=GridConfig)
    shape: ShapeConfig = Field(default_factory=ShapeConfig)
    flow: FlowSpec = Field(default_factory=FlowSpec)
    xi: XiConfig = Field(default_factory=XiConfig)
    family: Optional[ShapeFamily] = None
    convergence: Optional[ConvergenceConfig] = None
    suite: SuiteSettings = Field(default_factory=SuiteSettings)
    output: OutputConfig = Field(default_factory=OutputConfig)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    workers: int = Field(1, ge=1)

    def effective_workers(self) -> int:
        """`workers`, overridden by the QF_WORKERS environment variable"""
        raw = os.environ.get(WORKERS_ENV)
        if raw is None:
            return self.workers
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV}={raw!r} is not an integer", [WORKERS_ENV]) from exc
        if value < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {value}", [WORKERS_ENV])
        return value


def _field_path(loc) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def parse_config(text: Union[str, bytes]) -> RunConfig:
    """Validate a JSON config, filling defaults; errors name the offending fields"""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not UTF-8: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        where = f"line {exc.lineno} column {exc.colno}"
        raise ConfigError(f"malformed JSON at {where}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        paths = [_field_path(err["loc"]) for err in exc.errors()]
        lines = [f"{_field_path(err['loc'])}: {err['msg']}" for err in exc.errors()]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines), paths) from exc


def load_config(path: Path) -> RunConfig:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)


def config_schema() -> dict:
    return RunConfig.model_json_schema()
