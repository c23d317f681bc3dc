import json
from pathlib import Path

from tvdlab.cli import EXIT_OK, EXIT_USAGE, main

DATA = Path(__file__).parent / "data"

TINY_BENCH = [
    "--losses", "KLD,AdaTaiLr",
    "--rhos", "0,0.4",
    "--num-seeds", "1",
    "--contexts", "2",
    "--vocab", "4",
    "--samples-per-context", "50",
    "--steps", "20",
    "--batch-size", "32",
    "--eval-every", "10",
    "--lambda", "2.0",
]


def _files(root: Path):
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())


def test_verify_all_defaults(tmp_path):
    assert main(["verify", "--out", str(tmp_path)]) == EXIT_OK
    reports = [f for f in _files(tmp_path) if f.endswith(".json")]
    assert len(reports) == 7
    for name in reports:
        assert json.loads((tmp_path / name).read_text())["pass"] is True
    assert (tmp_path / "resolved_config.txt").exists()


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--suite", "lemmas", "--trials", "20", "--seed", "3", "--out", str(a)]) == EXIT_OK
    assert main(["verify", "--suite", "lemmas", "--trials", "20", "--seed", "3", "--out", str(b)]) == EXIT_OK
    assert _files(a) == _files(b)
    for name in _files(a):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_usage_errors(tmp_path):
    assert main(["verify", "--suite", "nonexistent"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["bench", "--config", str(tmp_path / "missing.conf")]) == EXIT_USAGE
    bad = tmp_path / "bad.conf"
    bad.write_text("epochs = 3\n")
    assert main(["bench", "--config", str(bad)]) == EXIT_USAGE
    assert main(["bench", "--steps", "zero"]) == EXIT_USAGE
    # GmmReweight is in the default grid and needs 4 rows per batch
    assert main(["bench", "--batch-size", "2"]) == EXIT_USAGE
    assert main(["bench", "--lambdas", "1,0"]) == EXIT_USAGE


def test_grad_check(tmp_path):
    assert main(["grad-check", "--trials", "10", "--out", str(tmp_path)]) == EXIT_OK
    record = json.loads((tmp_path / "grad_check.json").read_text())
    assert record["pass"] is True
    assert record["trials"] == 50


def test_tiny_bench(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["bench", *TINY_BENCH, "--output-dir", str(a)]) == EXIT_OK
    assert main(["bench", *TINY_BENCH, "--output_dir", str(b)]) == EXIT_OK

    assert len(_files(a / "metrics")) == 4
    assert "lambda=2.0\n" in (a / "resolved_config.txt").read_text()
    summary = json.loads((a / "summary.json").read_text())
    assert len(summary["cells"]) == 4
    for name in _files(a):
        if name != "resolved_config.txt":
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_bench_config_file_with_override(tmp_path):
    conf = tmp_path / "tiny.conf"
    conf.write_text("losses = TaiLr\nrhos = 0.2\nnum_seeds = 1\ncontexts = 2\nvocab = 4\n"
                    "samples_per_context = 20\nsteps = 5\neval_every = 5\n")
    out = tmp_path / "out"
    assert main(["bench", "--config", str(conf), "--gamma", "0.3", "--output-dir", str(out)]) == EXIT_OK
    assert "gamma=0.3\n" in (out / "resolved_config.txt").read_text()
    assert _files(out / "models") == ["TaiLr_rho0.2_seed0.json"]


def test_diversity_on_fixtures(tmp_path):
    args = ["diversity", str(DATA / "toy_corpus.txt"), str(DATA / "toy_reference.txt"), "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    report = json.loads((tmp_path / "diversity.json").read_text())
    assert report["unique_in_reference"] == 7
    assert report["total_tokens"] == 20
    histogram = (tmp_path / "histogram.csv").read_text().splitlines()
    assert histogram[0] == "token,count" and len(histogram) == 12
    saturation = (tmp_path / "saturation.csv").read_text().splitlines()
    assert saturation[0] == "size,unique" and saturation[-1] == "4,7"


def test_diversity_errors(tmp_path):
    corpus = str(DATA / "toy_corpus.jsonl")
    reference = str(DATA / "toy_reference_ids.txt")
    assert main(["diversity", str(tmp_path / "none.txt"), reference]) == EXIT_USAGE
    assert main(["diversity", corpus, reference, "--sizes", "1,9", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["diversity", corpus, reference, "--sizes", "a,b", "--out", str(tmp_path)]) == EXIT_USAGE


def test_gen_data(tmp_path):
    args = ["gen-data", "--contexts", "2", "--vocab", "4", "--samples-per-context", "10",
            "--rhos", "0,0.5", "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert _files(tmp_path) == ["dataset_rho0.5.jsonl", "dataset_rho0.jsonl", "resolved_config.txt", "task.json"]
    task = json.loads((tmp_path / "task.json").read_text())
    assert task["C"] == 2 and task["N"] == 4
    lines = (tmp_path / "dataset_rho0.jsonl").read_text().splitlines()
    assert len(lines) == 20
    assert all(json.loads(line)["clean"] for line in lines)
