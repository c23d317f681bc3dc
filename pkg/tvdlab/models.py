import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class LossKind(str, Enum):
    KLD = "KLD"
    TAILR = "TaiLr"
    ADATAILR = "AdaTaiLr"
    LOSS_TRUNCATION = "LossTruncation"
    GMM_REWEIGHT = "GmmReweight"


class LossSpec(BaseModel):
    """
    Selects a token loss and its parameters.

    Parameters irrelevant to `kind` are ignored but still range-checked.
    `lam` is read and written under the key "lambda".
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    kind: LossKind = LossKind.ADATAILR
    gamma: float = Field(0.1, ge=0.0, le=1.0)
    lam: float = Field(1.0, gt=0.0, alias="lambda")
    delta: float = Field(0.1, ge=0.0, le=1.0)
    trunc_frac: float = Field(0.2, ge=0.0, lt=1.0)
    gmm_components: int = Field(2, ge=2)


def check_mixture_batch(kind: LossKind, batch_size: int, components: int):
    """A GmmReweight batch must hold at least two losses per mixture component."""
    if kind == LossKind.GMM_REWEIGHT and batch_size < 2 * components:
        raise ValueError(f"batch_size {batch_size} is below 2 x gmm_components ({components})")


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    loss: LossSpec = LossSpec()
    steps: int = Field(5000, ge=1)
    batch_size: int = Field(256, ge=1)
    learning_rate: float = 0.5
    warmup_steps: int = Field(0, ge=0)
    anneal_delta: bool = False
    seed: int = Field(0, ge=0)
    eval_every: int = Field(100, ge=1)

    @model_validator(mode="after")
    def _check_mixture_batch(self) -> "TrainConfig":
        check_mixture_batch(self.loss.kind, self.batch_size, self.loss.gmm_components)
        return self


class TheoremReport(BaseModel):
    """
    Outcome of one numerical verification.

    max_violation is the largest (measured − allowed) over all trials, so a
    non-positive value means every trial held; bound is the tolerance it is
    compared against.
    """

    model_config = ConfigDict(populate_by_name=True)

    name: str
    trials: int
    seed: int
    bound: float
    max_violation: float
    passed: bool = Field(alias="pass")
    details: Dict[str, Any] = {}

    @classmethod
    def build(cls, name: str, trials: int, seed: int, max_violation: float,
              bound: float = 0.0, details: Optional[Dict[str, Any]] = None) -> "TheoremReport":
        return cls(
            name=name,
            trials=trials,
            seed=seed,
            bound=bound,
            max_violation=max_violation,
            passed=bool(max_violation <= bound + 1e-9),
            details=details or {},
        )

    def to_record(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)


class CellSummary(BaseModel):
    loss: LossKind
    rho: float
    seed: int
    # AdaTaiLr lambda of a sweep cell, None outside a sweep
    lam: Optional[float] = None
    final_tvd_to_clean: float
    final_weight_auc: Optional[float] = None
    final_mean_gamma: Optional[float] = None
    final_d_hat: float
    metrics_path: str
    model_path: str


class BenchSummary(BaseModel):
    cells: List[CellSummary] = []
    expected_cells: int = 0
    interrupted: bool = False
    # (loss, rho) -> mean over seeds
    mean_tvd_to_clean: Dict[str, float] = {}
    mean_weight_auc: Dict[str, Optional[float]] = {}
    # "lambda=..@rho=.." -> mean over seeds of the AdaTaiLr sweep cells
    mean_tvd_by_lambda: Dict[str, float] = {}
    checks: Dict[str, Optional[bool]] = {}


class DiversityReport(BaseModel):
    tokenizer_tag: str
    total_tokens: int
    unique_total: int
    unique_in_reference: int
    histogram: Dict[int, int]
    sample_sizes: List[int]
    counts: List[int]


def finite_or_none(value: float) -> Optional[float]:
    """NaN/inf become None so JSON output stays standard."""
    if value is None or not math.isfinite(value):
        return None
    return float(value)
