"""Pydantic request/response models for the HTTP service.

The request side mirrors the YAML config one-to-one; semantic validation
stays in :func:`jumptel.config.parse_config` so the CLI and the service
cannot drift apart.  ``extra="forbid"`` everywhere gives the same
unknown-key rejection the YAML loader performs.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

_FORBID = ConfigDict(extra="forbid", populate_by_name=True)


class JumpModel(BaseModel):
    model_config = _FORBID

    kind: Literal["negative_power", "positive_power", "point_mass", "discrete"]
    params: dict[str, Any] = Field(default_factory=dict)


class RegimeModel(BaseModel):
    model_config = _FORBID

    r: float
    mu: float
    intensity: float = Field(alias="lambda")
    jump: JumpModel


class MarketModel(BaseModel):
    model_config = _FORBID

    regimes: list[RegimeModel]
    transition: Optional[list[list[float]]] = None
    horizon: float
    s0: float = 1.0


class UtilityModel(BaseModel):
    model_config = _FORBID

    kind: Literal["log", "power"] = "log"
    alpha: Optional[float] = None


class McModel(BaseModel):
    model_config = _FORBID

    n_paths: int = 20000
    seed: int = 0
    workers: int = 1


class ConfigModel(BaseModel):
    model_config = _FORBID

    market: MarketModel
    utility: UtilityModel = Field(default_factory=UtilityModel)
    x0: float = 1.0
    mc: McModel = Field(default_factory=McModel)
    output: Optional[str] = None
    intervals: Optional[list[tuple[float, float]]] = None

    def to_config_dict(self) -> dict:
        """The plain mapping :func:`jumptel.config.parse_config` accepts."""
        data = self.model_dump(by_alias=True, exclude_none=True)
        # exclude_none would also drop an explicit transition: null, which is
        # fine -- absent and null both mean "use the default matrix".
        return data


# ---------------------------------------------------------------------
# Requests
# ---------------------------------------------------------------------

class SimulateRequest(BaseModel):
    model_config = _FORBID

    config: ConfigModel
    n_paths: int = 1
    grid_dt: Optional[float] = None
    start_regime: int = 0


class SolveRequest(BaseModel):
    model_config = _FORBID

    config: ConfigModel
    utility: Optional[UtilityModel] = None  # overrides config.utility


class RangeModel(BaseModel):
    model_config = _FORBID

    start: float
    stop: float
    n: int = Field(ge=0)


class FigureDataRequest(BaseModel):
    model_config = _FORBID

    config: ConfigModel
    figure: Literal["g-curves", "pi-vs-mu"]
    range: RangeModel


class VerifyRequest(BaseModel):
    model_config = _FORBID

    config: ConfigModel
    suite: Literal["moments", "martingale", "budget", "value", "all"] = "all"


# ---------------------------------------------------------------------
# Responses
# ---------------------------------------------------------------------

class TableResponse(BaseModel):
    """A generic table: fixed column names plus row values.

    Cells are numbers, strings (diagnostic notes), or null (rendered as NaN
    in CSV output).
    """

    columns: list[str]
    rows: list[list[Any]]


class SimulateResponse(TableResponse):
    n_paths: int
    seed: int


class FigureDataResponse(TableResponse):
    figure: str


class RegimeSolutionModel(BaseModel):
    index: int
    fraction: float
    residual: float
    bracket_lo: float
    bracket_hi: float
    consistent_drift: Optional[float] = None
    drift_residual: Optional[float] = None
    value_at_x0: Optional[float] = None


class SolveResponse(BaseModel):
    utility: str
    alpha: Optional[float] = None
    x0: float
    fractions: list[float]
    regimes: list[RegimeSolutionModel]
    consumption_rule: str
    consistent: Optional[bool] = None
    pair_value: Optional[float] = None


class CheckModel(BaseModel):
    suite: str
    name: str
    reference: float
    estimate: float
    stderr: float
    tolerance: float
    measure: str
    passed: bool
    se_multiples: Optional[float] = None
    elapsed_seconds: float
    note: str = ""


class VerifyResponse(BaseModel):
    suite: str
    passed: bool
    n_failed: int
    elapsed_seconds: float
    checks: list[CheckModel]


class HealthResponse(BaseModel):
    status: str
    version: str
