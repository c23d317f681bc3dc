import pytest

from tvdlab import bench
from tvdlab.bench import BenchService, cell_name, run_cell
from tvdlab.config import RunConfig
from tvdlab.models import LossKind
from tvdlab.storage import get_store, init_store


def _tiny(**overrides) -> RunConfig:
    values = dict(
        losses=[LossKind.KLD, LossKind.ADATAILR],
        rhos=[0.0, 0.4],
        num_seeds=1,
        contexts=2,
        vocab=4,
        samples_per_context=50,
        steps=20,
        batch_size=32,
        eval_every=10,
    )
    values.update(overrides)
    return RunConfig(**values)


def test_default_grid_has_75_cells():
    assert len(BenchService.cells(RunConfig())) == 75


def test_cell_name():
    assert cell_name(LossKind.ADATAILR, 0.4, 2) == "AdaTaiLr_rho0.4_seed2"
    assert cell_name(LossKind.KLD, 0.0, 0) == "KLD_rho0_seed0"


def test_run_writes_every_cell():
    init_store()
    service = BenchService(get_store())
    config = _tiny()
    summary = service.run(config)

    store = get_store()
    assert len(summary.cells) == summary.expected_cells == 4
    assert not summary.interrupted
    assert len(store.list("metrics/")) == 4
    assert len(store.list("models/")) == 4
    assert store.read_json("summary.json")["expected_cells"] == 4
    assert "lambda=1.0\n" in store.read_text("resolved_config.txt")
    assert set(summary.mean_tvd_to_clean) == {"KLD@rho=0", "KLD@rho=0.4", "AdaTaiLr@rho=0", "AdaTaiLr@rho=0.4"}
    assert set(summary.checks) >= {"clean_cells_converged", "adatailr_below_kld"}
    # clean cells hold a single class, so no AUC
    assert summary.mean_weight_auc["KLD@rho=0"] is None


def test_cells_are_reproducible():
    config = _tiny(losses=[LossKind.TAILR], rhos=[0.4])
    cell = (LossKind.TAILR, 0.4, 0, None)
    a = run_cell(config, cell)
    b = run_cell(config, cell)
    assert a.metrics_csv == b.metrics_csv
    assert a.model_record == b.model_record


def test_worker_pool_gives_same_summary():
    init_store()
    serial = BenchService(get_store()).run(_tiny())
    init_store()
    pooled = BenchService(get_store()).run(_tiny(workers=2))
    assert serial.model_dump() == pooled.model_dump()


def test_interrupt_keeps_finished_cells(monkeypatch):
    calls = []
    real = bench.run_cell

    def flaky(config, cell):
        calls.append(cell)
        if len(calls) == 2:
            raise KeyboardInterrupt
        return real(config, cell)

    monkeypatch.setattr(bench, "run_cell", flaky)
    init_store()
    with pytest.raises(KeyboardInterrupt):
        BenchService(get_store()).run(_tiny())
    summary = get_store().read_json("summary.json")
    assert summary["interrupted"] is True
    assert len(summary["cells"]) == 1
    assert summary["expected_cells"] == 4


def test_lambda_sweep_expands_adatailr_cells():
    config = _tiny(rhos=[0.4], lambdas=[0.5, 2.0])
    cells = BenchService.cells(config)
    assert cells == [
        (LossKind.KLD, 0.4, 0, None),
        (LossKind.ADATAILR, 0.4, 0, 0.5),
        (LossKind.ADATAILR, 0.4, 0, 2.0),
    ]

    init_store()
    summary = BenchService(get_store()).run(config)
    store = get_store()
    assert store.exists("metrics/AdaTaiLr_lam0.5_rho0.4_seed0.csv")
    assert store.exists("models/AdaTaiLr_lam2_rho0.4_seed0.json")
    assert "lambdas=0.5,2.0\n" in store.read_text("resolved_config.txt")
    assert set(summary.mean_tvd_by_lambda) == {"lambda=0.5@rho=0.4", "lambda=2@rho=0.4"}
    assert set(summary.mean_tvd_to_clean) == {
        "KLD@rho=0.4", "AdaTaiLr(lambda=0.5)@rho=0.4", "AdaTaiLr(lambda=2)@rho=0.4",
    }
    assert [c.lam for c in summary.cells] == [None, 0.5, 2.0]
    # lambda=1.0 is outside the sweep, so there is no AdaTaiLr group to order
    assert summary.checks["adatailr_below_kld"] is None


def test_sweep_reads_checks_at_configured_lambda():
    config = _tiny(rhos=[0.4], lambdas=[1.0, 4.0])
    init_store()
    summary = BenchService(get_store()).run(config)
    assert summary.checks["adatailr_below_kld"] is not None
    assert summary.mean_tvd_by_lambda["lambda=1@rho=0.4"] == summary.mean_tvd_to_clean["AdaTaiLr(lambda=1)@rho=0.4"]
