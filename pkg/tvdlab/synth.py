"""
Synth - Noisy conditional-token datasets with known clean distributions

A CleanTask holds one clean conditional per context. corrupt() draws tokens
from it, replacing each draw with a draw from a noise distribution with
probability rho and recording which branch produced the token.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .errors import BadShape, DimMismatch, EmptyContext, MissingNoiseRows, NonPositiveConcentration
from .simplex import SIMPLEX_ATOL

logger = logging.getLogger(__name__)


def _check_rows(rows: np.ndarray, what: str):
    if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 2:
        raise BadShape(f"{what} must be C×N with C >= 1 and N >= 2, got {rows.shape}")
    if np.any(rows < 0) or np.max(np.abs(rows.sum(axis=1) - 1.0)) > SIMPLEX_ATOL:
        raise BadShape(f"{what} rows are not distributions")


@dataclass
class CleanTask:
    conditionals: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.conditionals = np.asarray(self.conditionals, dtype=np.float64)
        _check_rows(self.conditionals, "conditionals")

    @property
    def num_contexts(self) -> int:
        return self.conditionals.shape[0]

    @property
    def vocab(self) -> int:
        return self.conditionals.shape[1]

    def to_record(self) -> Dict[str, Any]:
        return {"C": self.num_contexts, "N": self.vocab, "rows": self.conditionals.tolist(), "seed": self.seed}

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "CleanTask":
        task = cls(np.array(record["rows"], dtype=np.float64), int(record["seed"]))
        if task.num_contexts != record["C"] or task.vocab != record["N"]:
            raise BadShape("task record shape does not match its rows")
        return task


class NoiseKind(str, Enum):
    UNIFORM = "uniform"
    SHUFFLED_TASK = "shuffled-task"
    FIXED = "fixed-distribution"


@dataclass
class NoiseModel:
    """
    Args:
        rate: probability rho that a token comes from the noise distribution
        kind: uniform, shuffled-task (clean row of another context) or fixed-distribution
        noise_conditionals: C×N rows, required for fixed-distribution
    """

    rate: float
    kind: NoiseKind = NoiseKind.UNIFORM
    noise_conditionals: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise BadShape(f"noise rate {self.rate} outside [0, 1]")
        self.kind = NoiseKind(self.kind)
        if self.noise_conditionals is not None:
            self.noise_conditionals = np.asarray(self.noise_conditionals, dtype=np.float64)
            _check_rows(self.noise_conditionals, "noise_conditionals")

    def rows_for(self, task: CleanTask, seed: int) -> np.ndarray:
        """Noise distribution of every context of `task`."""
        if self.kind == NoiseKind.UNIFORM:
            return np.full(task.conditionals.shape, 1.0 / task.vocab)
        if self.kind == NoiseKind.SHUFFLED_TASK:
            perm = np.random.default_rng(seed).permutation(task.num_contexts)
            return task.conditionals[perm]
        if self.noise_conditionals is None:
            raise MissingNoiseRows("fixed-distribution noise needs noise_conditionals")
        if self.noise_conditionals.shape != task.conditionals.shape:
            raise DimMismatch(f"noise rows {self.noise_conditionals.shape} vs task {task.conditionals.shape}")
        return self.noise_conditionals


@dataclass(frozen=True)
class TokenExample:
    context: int
    target: int
    clean: bool


@dataclass
class Dataset:
    contexts: np.ndarray
    targets: np.ndarray
    clean: np.ndarray
    task: CleanTask
    noise: NoiseModel
    noise_rows: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return int(self.targets.size)

    @property
    def examples(self) -> Iterator[TokenExample]:
        for c, y, ok in zip(self.contexts.tolist(), self.targets.tolist(), self.clean.tolist()):
            yield TokenExample(c, y, ok)

    @property
    def noisy_fraction(self) -> float:
        return float(1.0 - self.clean.mean()) if len(self) else 0.0

    def counts(self) -> np.ndarray:
        table = np.zeros(self.task.conditionals.shape, dtype=np.int64)
        np.add.at(table, (self.contexts, self.targets), 1)
        return table

    def empirical_conditionals(self) -> np.ndarray:
        table = self.counts().astype(np.float64)
        totals = table.sum(axis=1, keepdims=True)
        if np.any(totals == 0):
            raise EmptyContext("a context has no examples")
        return table / totals

    def population_conditionals(self) -> np.ndarray:
        """(1 − rho)·clean + rho·noise for every context."""
        rho = self.noise.rate
        return (1.0 - rho) * self.task.conditionals + rho * self.noise_rows

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"c": ex.context, "y": ex.target, "clean": ex.clean}) + "\n" for ex in self.examples
        )

    @classmethod
    def from_jsonl(cls, text: str, task: CleanTask, noise: NoiseModel, noise_seed: int = 0) -> "Dataset":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        data = cls(
            contexts=np.array([r["c"] for r in records], dtype=np.int64),
            targets=np.array([r["y"] for r in records], dtype=np.int64),
            clean=np.array([r["clean"] for r in records], dtype=bool),
            task=task,
            noise=noise,
            noise_rows=noise.rows_for(task, noise_seed),
        )
        ok, message = validate_dataset(data, task)
        if not ok:
            raise BadShape(message)
        return data


def validate_dataset(data: Dataset, task: CleanTask) -> Tuple[bool, str]:
    """
    Check that a dataset fits a task.

    Returns:
        Tuple (is_valid: bool, message: str)
    """
    if data.contexts.shape != data.targets.shape or data.targets.shape != data.clean.shape:
        return False, "Invalid: contexts, targets and clean flags differ in length"
    if data.task.conditionals.shape != task.conditionals.shape:
        return False, f"Invalid: dataset built for {data.task.conditionals.shape}, task is {task.conditionals.shape}"
    if len(data) and (data.contexts.min() < 0 or data.contexts.max() >= task.num_contexts):
        return False, "Invalid: context id out of range"
    if len(data) and (data.targets.min() < 0 or data.targets.max() >= task.vocab):
        return False, "Invalid: target token out of range"
    return True, f"Valid dataset: {len(data)} examples"


def make_task(num_contexts: int, vocab: int, concentration: float, seed: int = 0) -> CleanTask:
    """Draw every clean conditional from a symmetric Dirichlet."""
    if num_contexts < 1 or vocab < 2:
        raise BadShape(f"need C >= 1 and N >= 2, got C={num_contexts}, N={vocab}")
    if not concentration > 0:
        raise NonPositiveConcentration(f"concentration must be > 0, got {concentration}")
    rng = np.random.default_rng(seed)
    rows = rng.dirichlet(np.full(vocab, float(concentration)), size=num_contexts)
    # renormalize away the last-ulp drift of the sampler
    rows = rows / rows.sum(axis=1, keepdims=True)
    return CleanTask(rows, seed)


def corrupt(task: CleanTask, noise: NoiseModel, samples_per_context: int, seed: int = 0) -> Dataset:
    """
    Draw `samples_per_context` tokens per context, each independently from the
    noise distribution with probability rho and from the clean conditional
    otherwise. Every context uses its own generator seeded from (seed, context).
    """
    if samples_per_context < 1:
        raise BadShape(f"samples_per_context must be >= 1, got {samples_per_context}")
    noise_rows = noise.rows_for(task, seed)
    n = samples_per_context
    contexts: List[np.ndarray] = []
    targets: List[np.ndarray] = []
    flags: List[np.ndarray] = []
    for c in range(task.num_contexts):
        rng = np.random.default_rng([seed, c])
        is_noisy = rng.random(n) < noise.rate
        clean_draws = rng.choice(task.vocab, size=n, p=task.conditionals[c])
        noise_draws = rng.choice(task.vocab, size=n, p=noise_rows[c])
        contexts.append(np.full(n, c, dtype=np.int64))
        targets.append(np.where(is_noisy, noise_draws, clean_draws).astype(np.int64))
        flags.append(~is_noisy)
    data = Dataset(
        contexts=np.concatenate(contexts),
        targets=np.concatenate(targets),
        clean=np.concatenate(flags),
        task=task,
        noise=noise,
        noise_rows=noise_rows,
    )
    logger.debug("corrupted %d examples, noisy fraction %.4f", len(data), data.noisy_fraction)
    return data


def exact_model_tvd(model_conditionals: np.ndarray, task: CleanTask) -> float:
    """Mean over contexts of the TVD between model and clean conditionals."""
    model = np.asarray(model_conditionals, dtype=np.float64)
    if model.shape != task.conditionals.shape:
        raise DimMismatch(f"model {model.shape} vs task {task.conditionals.shape}")
    per_row = 0.5 * np.abs(model - task.conditionals).sum(axis=1)
    return float(np.clip(per_row.mean(), 0.0, 1.0))
