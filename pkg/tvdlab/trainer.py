"""
Trainer - Deterministic gradient descent on a tabular conditional softmax model

One row of logits per context. Metrics rows are emitted at step 0, every
eval_every steps and at the final step, always over the full dataset.
"""

import csv
import io
import logging
from dataclasses import astuple, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import softmax
from scipy.stats import rankdata
from tqdm import tqdm

from .errors import EmptyContext, NonPositiveLearningRate, OneClassOnly, ShapeMismatch, TooFewSamples
from .losses import delta_schedule, nll, token_weights
from .models import LossKind, LossSpec, TrainConfig
from .synth import CleanTask, Dataset, exact_model_tvd, validate_dataset

logger = logging.getLogger(__name__)

MLE_SMOOTHING = 1e-9


@dataclass
class LogitModel:
    logits: np.ndarray

    @classmethod
    def zeros(cls, num_contexts: int, vocab: int) -> "LogitModel":
        return cls(np.zeros((num_contexts, vocab)))

    def conditionals(self) -> np.ndarray:
        return softmax(self.logits, axis=1)

    def to_record(self) -> Dict[str, Any]:
        return {
            "C": int(self.logits.shape[0]),
            "N": int(self.logits.shape[1]),
            "logits": self.logits.tolist(),
            "conditionals": self.conditionals().tolist(),
        }


@dataclass
class MetricsRow:
    step: int
    train_loss: float
    mean_gamma: float
    mean_weight: float
    tvd_to_clean: float
    weight_auc: float
    d_hat: float


METRIC_FIELDS = tuple(f.name for f in fields(MetricsRow))


@dataclass
class RunMetrics:
    rows: List[MetricsRow] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows], dtype=np.float64)

    @property
    def final(self) -> MetricsRow:
        return self.rows[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(METRIC_FIELDS)
        for row in self.rows:
            step, *values = astuple(row)
            writer.writerow([step] + [f"{v:.9g}" for v in values])
        return buf.getvalue()


def weight_auc(weights, clean_flags) -> float:
    """
    Mann-Whitney AUC of the weights as a score for clean tokens.

    Tied weights count one half.
    """
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    flags = np.asarray(clean_flags, dtype=bool).reshape(-1)
    n_clean = int(flags.sum())
    n_noisy = flags.size - n_clean
    if n_clean == 0 or n_noisy == 0:
        raise OneClassOnly(f"{n_clean} clean and {n_noisy} noisy examples")
    ranks = rankdata(w)
    u = ranks[flags].sum() - n_clean * (n_clean + 1) / 2.0
    return float(u / (n_clean * n_noisy))


def closed_form_mle(data: Dataset) -> np.ndarray:
    """Per-context empirical frequencies with additive smoothing 1e-9."""
    counts = data.counts().astype(np.float64)
    if np.any(counts.sum(axis=1) == 0):
        raise EmptyContext("every context needs at least one example")
    counts += MLE_SMOOTHING
    return counts / counts.sum(axis=1, keepdims=True)


def evaluate(model: LogitModel, task: CleanTask, data: Dataset, spec: LossSpec,
             step: int = 0, delta: Optional[float] = None, seed: int = 0) -> MetricsRow:
    """Loss, mean trade-off factor, mean weight and clean-distance over the full dataset."""
    conditionals = model.conditionals()
    probs = conditionals[data.contexts]
    weights, gammas = token_weights(probs, data.targets, spec, delta=delta, seed=seed)
    losses = weights * nll(probs[np.arange(len(data)), data.targets])

    if spec.kind in (LossKind.LOSS_TRUNCATION, LossKind.GMM_REWEIGHT):
        mean_gamma = float("nan")
    else:
        mean_gamma = float(gammas.mean())
    try:
        auc = weight_auc(weights, data.clean)
    except OneClassOnly:
        auc = float("nan")

    return MetricsRow(
        step=step,
        train_loss=float(losses.mean()),
        mean_gamma=mean_gamma,
        mean_weight=float(weights.mean()),
        tvd_to_clean=exact_model_tvd(conditionals, task),
        weight_auc=auc,
        d_hat=float(np.mean(0.5 * np.abs(conditionals - task.conditionals).sum(axis=1))),
    )


def context_grad(conditionals: np.ndarray, ctx: np.ndarray, labels: np.ndarray,
                 weights: np.ndarray) -> np.ndarray:
    """
    Per-context mean of w_i·(p_c − e_{y_i}) over the batch rows of context c.

    Contexts absent from the batch get a zero row, so every present context
    steps at the full learning rate whatever its share of the batch.
    """
    num_contexts, vocab = conditionals.shape
    counts = np.bincount(ctx, minlength=num_contexts)
    weight_sums = np.bincount(ctx, weights=weights, minlength=num_contexts)
    target = np.bincount(ctx * vocab + labels, weights=weights, minlength=num_contexts * vocab)
    grad = weight_sums[:, None] * conditionals - target.reshape(num_contexts, vocab)
    present = counts > 0
    grad[present] /= counts[present, None]
    return grad


def train(task: CleanTask, data: Dataset, config: TrainConfig,
          progress: bool = False) -> Tuple[LogitModel, RunMetrics]:
    """
    Train zero-initialized logits by plain gradient descent.

    Each step draws batch_size examples with replacement (or uses the whole
    dataset when batch_size >= len(data)), computes detached per-token
    weights, and moves every context row present in the batch by
    −lr · Σ_{i∈c} w_i(p_c − e_{y_i}) / n_c, n_c being its batch count.

    Raises:
        ShapeMismatch: data was not generated for this task's shape
        NonPositiveLearningRate: learning_rate <= 0
        TooFewSamples: GmmReweight batches smaller than two rows per component
    """
    ok, message = validate_dataset(data, task)
    if not ok:
        raise ShapeMismatch(message)
    if not config.learning_rate > 0:
        raise NonPositiveLearningRate(f"learning rate must be > 0, got {config.learning_rate}")

    spec = config.loss
    model = LogitModel.zeros(task.num_contexts, task.vocab)
    metrics = RunMetrics()
    rng = np.random.default_rng(config.seed)
    n = len(data)
    full_batch = config.batch_size >= n
    all_idx = np.arange(n)
    if spec.kind == LossKind.GMM_REWEIGHT and min(config.batch_size, n) < 2 * spec.gmm_components:
        raise TooFewSamples(f"{min(config.batch_size, n)} rows per batch for {spec.gmm_components} components")

    def floor_at(step: int) -> float:
        return delta_schedule(step, config.warmup_steps, spec.delta, config.anneal_delta)

    metrics.rows.append(evaluate(model, task, data, spec, 0, floor_at(0), config.seed))
    for step in tqdm(range(1, config.steps + 1), disable=not progress, desc=spec.kind.value, leave=False):
        idx = all_idx if full_batch else rng.integers(0, n, size=config.batch_size)
        ctx = data.contexts[idx]
        labels = data.targets[idx]
        conditionals = model.conditionals()
        weights, _ = token_weights(conditionals[ctx], labels, spec, delta=floor_at(step), seed=config.seed)
        model.logits -= config.learning_rate * context_grad(conditionals, ctx, labels, weights)

        if step % config.eval_every == 0 or step == config.steps:
            row = evaluate(model, task, data, spec, step, floor_at(step), config.seed)
            metrics.rows.append(row)
            logger.debug("step %d: loss=%.6f tvd=%.6f gamma=%.4f", step, row.train_loss,
                         row.tvd_to_clean, row.mean_gamma)

    final = metrics.final
    logger.info("trained %s for %d steps: tvd_to_clean=%.4f weight_auc=%.4f",
                spec.kind.value, config.steps, final.tvd_to_clean, final.weight_auc)
    return model, metrics
