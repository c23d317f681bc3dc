"""
Bench - Runs the (loss, rho, seed) grid of the synthetic noisy benchmark

Each cell generates its task and dataset from the cell seed, trains, and
writes its metrics CSV and final model. summary.json is rewritten after every
finished cell so an interrupted run keeps what it completed. A non-empty
`lambdas` list turns the AdaTaiLr cells into a lambda sweep.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .config import RunConfig
from .models import BenchSummary, CellSummary, LossKind, finite_or_none
from .storage import ArtifactStore
from .synth import NoiseModel, corrupt, make_task
from .trainer import train

logger = logging.getLogger(__name__)

# (loss, rho, seed, sweep lambda or None)
Cell = Tuple[LossKind, float, int, Optional[float]]
GroupKey = Tuple[LossKind, float, Optional[float]]

CLEAN_TVD_TARGET = 0.05
TAILR_SLACK = 0.005
AUC_SLACK = 0.02


def cell_name(kind: LossKind, rho: float, seed: int, lam: Optional[float] = None) -> str:
    sweep = "" if lam is None else f"_lam{lam:g}"
    return f"{kind.value}{sweep}_rho{rho:g}_seed{seed}"


def group_key(kind: LossKind, rho: float, lam: Optional[float] = None) -> str:
    sweep = "" if lam is None else f"(lambda={lam:g})"
    return f"{kind.value}{sweep}@rho={rho:g}"


@dataclass
class CellResult:
    summary: CellSummary
    metrics_csv: str
    model_record: Dict[str, Any]


def run_cell(config: RunConfig, cell: Cell) -> CellResult:
    kind, rho, seed, lam = cell
    name = cell_name(kind, rho, seed, lam)
    task = make_task(config.contexts, config.vocab, config.concentration, seed)
    data = corrupt(task, NoiseModel(rho, config.noise_kind), config.samples_per_context, seed)
    model, metrics = train(task, data, config.train_config(kind, seed, lam))
    final = metrics.final
    summary = CellSummary(
        loss=kind,
        rho=rho,
        seed=seed,
        lam=lam,
        final_tvd_to_clean=final.tvd_to_clean,
        final_weight_auc=finite_or_none(final.weight_auc),
        final_mean_gamma=finite_or_none(final.mean_gamma),
        final_d_hat=final.d_hat,
        metrics_path=f"metrics/{name}.csv",
        model_path=f"models/{name}.json",
    )
    return CellResult(summary, metrics.to_csv(), model.to_record())


def _run_cell_args(args: Tuple[RunConfig, Cell]) -> CellResult:
    return run_cell(*args)


def _mean(values: List[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def _sort_key(key: GroupKey):
    kind, rho, lam = key
    return kind.value, rho, -1.0 if lam is None else lam


class BenchService:
    def __init__(self, store: ArtifactStore):
        self.store = store

    @staticmethod
    def cells(config: RunConfig) -> List[Cell]:
        cells = []
        for kind in config.losses:
            lams = config.lambdas if kind == LossKind.ADATAILR and config.lambdas else [None]
            cells.extend((kind, rho, seed, lam) for lam in lams for rho in config.rhos for seed in config.seeds)
        return cells

    @staticmethod
    def reference_lambda(config: RunConfig) -> Optional[float]:
        """Sweep value the ordering checks read AdaTaiLr from; None outside a sweep."""
        return config.lam if config.lambdas else None

    def _results(self, config: RunConfig, cells: List[Cell], progress: bool) -> Iterator[CellResult]:
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                yield from tqdm(pool.map(_run_cell_args, [(config, c) for c in cells]),
                                total=len(cells), disable=not progress, desc="cells")
        else:
            for cell in tqdm(cells, disable=not progress, desc="cells"):
                yield run_cell(config, cell)

    def record(self, summary: BenchSummary, result: CellResult, reference_lam: Optional[float] = None):
        cell = result.summary
        self.store.write_text(cell.metrics_path, result.metrics_csv)
        self.store.write_json(cell.model_path, result.model_record)
        summary.cells.append(cell)
        self.aggregate(summary, reference_lam)
        self.store.write_json("summary.json", summary.model_dump(mode="json"))
        logger.info("cell %s: tvd_to_clean=%.4f", cell.metrics_path, cell.final_tvd_to_clean)

    @staticmethod
    def aggregate(summary: BenchSummary, reference_lam: Optional[float] = None):
        """Means over seeds per (loss, rho[, lambda]) and the ordering checks between losses."""
        groups: Dict[GroupKey, List[CellSummary]] = {}
        for cell in summary.cells:
            groups.setdefault((cell.loss, cell.rho, cell.lam), []).append(cell)
        tvd = {}
        auc = {}
        for key, members in sorted(groups.items(), key=lambda item: _sort_key(item[0])):
            tvd[key] = _mean([c.final_tvd_to_clean for c in members])
            auc[key] = _mean([c.final_weight_auc for c in members])
        summary.mean_tvd_to_clean = {group_key(*key): value for key, value in tvd.items()}
        summary.mean_weight_auc = {group_key(*key): value for key, value in auc.items()}
        summary.mean_tvd_by_lambda = {
            f"lambda={lam:g}@rho={rho:g}": value
            for (kind, rho, lam), value in tvd.items()
            if kind == LossKind.ADATAILR and lam is not None
        }

        checks: Dict[str, Optional[bool]] = {}
        clean_cells = [c for c in summary.cells if c.rho == 0.0]
        checks["clean_cells_converged"] = (
            all(c.final_tvd_to_clean < CLEAN_TVD_TARGET for c in clean_cells) if clean_cells else None
        )
        noisy_rhos = [rho for (_, rho, _) in groups if rho > 0]
        if noisy_rhos:
            rho = max(noisy_rhos)
            ada_tvd = tvd.get((LossKind.ADATAILR, rho, reference_lam))
            kld_tvd = tvd.get((LossKind.KLD, rho, None))
            tailr_tvd = tvd.get((LossKind.TAILR, rho, None))
            ada_auc = auc.get((LossKind.ADATAILR, rho, reference_lam))
            tailr_auc = auc.get((LossKind.TAILR, rho, None))
            checks["adatailr_below_kld"] = None if None in (ada_tvd, kld_tvd) else ada_tvd < kld_tvd
            checks["adatailr_within_tailr"] = (
                None if None in (ada_tvd, tailr_tvd) else ada_tvd <= tailr_tvd + TAILR_SLACK
            )
            checks["adatailr_auc_above_half"] = None if ada_auc is None else ada_auc > 0.5
            checks["adatailr_auc_vs_tailr"] = (
                None if None in (ada_auc, tailr_auc) else ada_auc >= tailr_auc - AUC_SLACK
            )
        summary.checks = checks

    def run(self, config: RunConfig, progress: bool = False) -> BenchSummary:
        cells = self.cells(config)
        self.store.write_text("resolved_config.txt", config.to_text())
        summary = BenchSummary(expected_cells=len(cells))
        logger.info("bench: %d cells, %d workers", len(cells), config.workers)
        try:
            for result in self._results(config, cells, progress):
                self.record(summary, result, self.reference_lambda(config))
        except KeyboardInterrupt:
            summary.interrupted = True
            self.store.write_json("summary.json", summary.model_dump(mode="json"))
            logger.warning("interrupted after %d of %d cells", len(summary.cells), len(cells))
            raise
        if not cells:
            self.store.write_json("summary.json", summary.model_dump(mode="json"))
        return summary
