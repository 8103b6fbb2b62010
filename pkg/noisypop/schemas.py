"""
Pydantic models for run configuration, recovery reports and population files
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from noisypop.config import DEFAULT_MAX_R, DEFAULT_SEED, DEFAULT_WORKERS, FAR_CONSTANT, SAMPLE_CAP

Construction = Literal["ell", "ell0"]
GapPolicy = Literal["filter", "fail"]


class RecoveryConfig(BaseModel):
    """Parameters of one recovery run; overrides replace the derived defaults."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float = Field(gt=0.0, lt=1.0)
    kappa: float = Field(gt=0.0, lt=1.0)
    delta_override: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    eta_override: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    r_override: Optional[int] = Field(default=None, ge=0)
    far_constant: float = Field(default=FAR_CONSTANT, gt=0.0)
    gap_policy: GapPolicy = "filter"
    max_r: int = Field(default=DEFAULT_MAX_R, ge=0)
    seed: int = DEFAULT_SEED
    workers: int = Field(default=DEFAULT_WORKERS, ge=1)
    sample_cap: Optional[int] = Field(default=SAMPLE_CAP, ge=1)
    construction: Construction = "ell"
    normalize: bool = False

    def check_dimension(self, n: int) -> None:
        if self.r_override is not None and self.r_override > n:
            raise ValueError(f"r_override = {self.r_override} exceeds n = {n}")


class PointReport(BaseModel):
    """One row of the report: the estimate for a support point and how it was made."""

    point: str
    estimate: Optional[float] = None
    normalized: Optional[float] = None
    truth: Optional[float] = None
    status: Literal["ok", "failed"] = "ok"
    error: Optional[str] = None
    upsilon: Optional[float] = None
    inner_product: Optional[float] = None
    ell_l1: Optional[float] = None
    downset_size: Optional[int] = None
    r: Optional[int] = None
    r_uncapped: Optional[int] = None
    delta: Optional[float] = None
    eta: Optional[float] = None
    samples: Optional[int] = None
    samples_required: Optional[int] = None
    far_points: Optional[int] = None
    gap_points: Optional[int] = None
    audit_bound: Optional[float] = None

    @field_validator("estimate", "normalized")
    @classmethod
    def _in_unit_interval(cls, value):
        if value is not None and not 0.0 <= value <= 1.0:
            raise ValueError(f"estimate {value} outside [0, 1]")
        return value


class RecoveryReport(BaseModel):
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    mu: float = Field(gt=0.0, le=1.0)
    config: RecoveryConfig
    points: List[PointReport]
    estimate_sum: float
    backend: Literal["samples", "live", "exact"] = "live"

    @property
    def failures(self) -> int:
        return sum(1 for p in self.points if p.status != "ok")

    @property
    def max_error(self) -> Optional[float]:
        errors = [abs(p.estimate - p.truth) for p in self.points if p.estimate is not None and p.truth is not None]
        return max(errors) if errors else None


class PopulationFile(BaseModel):
    """Header "n=<n> k=<k> [mu=<mu>]" followed by "<bitstring> <weight>" rows."""

    n: int = Field(ge=1)
    k: int = Field(ge=1)
    mu: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    rows: List[Tuple[str, float]]

    @model_validator(mode="after")
    def _check_rows(self):
        from noisypop.files import validate_population

        is_valid, message = validate_population(self.rows, self.n, self.k)
        if not is_valid:
            raise ValueError(message)
        return self
