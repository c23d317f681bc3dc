"""
Config - Flat key=value run configuration with typed validation

    # comment
    losses = KLD,TaiLr,AdaTaiLr
    rhos = 0,0.4
    lambda = 2.0

List keys take comma-separated values. Unknown keys, duplicates and values
that fail validation raise ConfigError.
"""

from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .models import LossKind, LossSpec, TrainConfig, check_mixture_batch
from .synth import NoiseKind


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    # grid
    losses: List[LossKind] = list(LossKind)
    rhos: List[float] = [0.0, 0.2, 0.4]
    seed: int = Field(0, ge=0)
    num_seeds: int = Field(5, ge=1)

    # task / noise
    contexts: int = Field(32, ge=1)
    vocab: int = Field(32, ge=2)
    concentration: float = Field(0.3, gt=0.0)
    samples_per_context: int = Field(2000, ge=1)
    noise_kind: NoiseKind = NoiseKind.UNIFORM

    # training
    steps: int = Field(5000, ge=1)
    batch_size: int = Field(256, ge=1)
    learning_rate: float = Field(0.5, gt=0.0)
    warmup_steps: int = Field(0, ge=0)
    anneal_delta: bool = False
    eval_every: int = Field(100, ge=1)

    # loss parameters
    lam: float = Field(1.0, gt=0.0, alias="lambda")
    # AdaTaiLr sweep: when non-empty, AdaTaiLr cells run once per value instead of at `lambda`
    lambdas: List[float] = []
    delta: float = Field(0.1, ge=0.0, le=1.0)
    gamma: float = Field(0.1, ge=0.0, le=1.0)
    trunc_frac: float = Field(0.2, ge=0.0, lt=1.0)
    gmm_components: int = Field(2, ge=2)

    # output
    output_dir: str = "runs/bench"
    workers: int = Field(1, ge=1)

    @field_validator("losses", "rhos", "lambdas", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("rhos")
    @classmethod
    def _check_rates(cls, value: List[float]) -> List[float]:
        for rho in value:
            if not 0.0 <= rho <= 1.0:
                raise ValueError(f"noise rate {rho} outside [0, 1]")
        return value

    @field_validator("lambdas")
    @classmethod
    def _check_lambdas(cls, value: List[float]) -> List[float]:
        for lam in value:
            if not lam > 0:
                raise ValueError(f"lambda {lam} must be > 0")
        if len(set(value)) != len(value):
            raise ValueError("duplicate lambda in sweep")
        return value

    @model_validator(mode="after")
    def _check_mixture_batch(self) -> "RunConfig":
        if LossKind.GMM_REWEIGHT in self.losses:
            check_mixture_batch(LossKind.GMM_REWEIGHT, self.batch_size, self.gmm_components)
        return self

    @property
    def seeds(self) -> List[int]:
        return list(range(self.seed, self.seed + self.num_seeds))

    def loss_spec(self, kind: LossKind, lam: Optional[float] = None) -> LossSpec:
        return LossSpec(kind=kind, gamma=self.gamma, lam=self.lam if lam is None else lam, delta=self.delta,
                        trunc_frac=self.trunc_frac, gmm_components=self.gmm_components)

    def train_config(self, kind: LossKind, seed: int, lam: Optional[float] = None) -> TrainConfig:
        return TrainConfig(
            loss=self.loss_spec(kind, lam),
            steps=self.steps,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            warmup_steps=self.warmup_steps,
            anneal_delta=self.anneal_delta,
            seed=seed,
            eval_every=self.eval_every,
        )

    def to_text(self) -> str:
        """Resolved config in the same key=value format, keys sorted."""
        lines = []
        for key, value in sorted(self.model_dump(by_alias=True, mode="json").items()):
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def config_keys() -> List[str]:
    """Every key accepted in a config file, as written there."""
    return [info.alias or name for name, info in RunConfig.model_fields.items()]


def parse_config_text(text: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def validate_config(values: Dict[str, str]) -> Tuple[bool, str]:
    """
    Returns:
        Tuple (is_valid: bool, message: str)
    """
    unknown = sorted(set(values) - set(config_keys()))
    if unknown:
        return False, f"Invalid: unknown config key(s) {', '.join(unknown)}"
    try:
        RunConfig.model_validate(values)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "config"
        return False, f"Invalid: {where}: {first['msg']}"
    return True, "Valid config"


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """Merge a config file (optional) with command-line overrides and validate."""
    values: Dict[str, str] = {}
    if path is not None:
        try:
            values = parse_config_text(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values.update(overrides or {})
    ok, message = validate_config(values)
    if not ok:
        raise ConfigError(message)
    return RunConfig.model_validate(values)
