"""
tvdlab - Command line entry point

Subcommands:
    verify      numerical checks of the trade-off optimality results
    bench       loss x noise-rate x seed grid on the synthetic benchmark
    diversity   unique-token diversity, histogram and saturation curve
    gen-data    write a synthetic task and its noisy datasets
    grad-check  finite-difference check of every loss gradient

Exit codes: 0 success, 1 failed check, 2 usage or configuration error.
"""

import argparse
import csv
import io
import logging
import sys
from typing import Dict, List, Optional

from . import storage
from .bench import BenchService
from .config import config_keys, load_config
from .corpus import diversity_report, load_corpus, load_reference
from .errors import ConfigError, SizeExceedsCorpus
from .gradcheck import check_gradients
from .models import TheoremReport
from .synth import NoiseModel, corrupt, make_task
from .theorems import SUITES, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _banner(title: str):
    print("\n" + "=" * 60)
    print(f"=== {title} ===")
    print("=" * 60)


def _print_reports(reports: List[TheoremReport]):
    for report in reports:
        mark = "✓" if report.passed else "✗"
        print(f"{mark} {report.name:<20} trials={report.trials:<7} max_violation={report.max_violation:.3e}")


def _write_settings(store: storage.ArtifactStore, settings: Dict[str, object]):
    store.write_text("resolved_config.txt", "".join(f"{k}={v}\n" for k, v in sorted(settings.items())))


def cmd_verify(args) -> int:
    store = storage.init_store(args.out)
    _write_settings(store, {"suite": args.suite, "trials": args.trials or "default", "seed": args.seed})
    _banner(f"Verify: {args.suite}")
    reports = run_suite(args.suite, trials=args.trials, seed=args.seed)
    for report in reports:
        store.write_json(f"{report.name}.json", report.to_record())
    _print_reports(reports)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_grad_check(args) -> int:
    store = storage.init_store(args.out)
    _write_settings(store, {"trials": args.trials, "seed": args.seed})
    _banner("Gradient check")
    report = check_gradients(trials=args.trials, seed=args.seed)
    store.write_json(f"{report.name}.json", report.to_record())
    _print_reports([report])
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_bench(args, overrides: Dict[str, str]) -> int:
    config = load_config(args.config, overrides)
    store = storage.init_store(config.output_dir)
    _banner(f"Bench: {len(BenchService.cells(config))} cells -> {config.output_dir}")
    summary = BenchService(store).run(config, progress=args.progress)
    for key, value in summary.mean_tvd_to_clean.items():
        print(f"  {key:<28} tvd_to_clean={value:.4f}")
    for name, ok in summary.checks.items():
        print(f"{'-' if ok is None else ('✓' if ok else '✗')} {name}")
    return EXIT_OK


def cmd_gen_data(args, overrides: Dict[str, str]) -> int:
    config = load_config(args.config, overrides)
    store = storage.init_store(config.output_dir)
    store.write_text("resolved_config.txt", config.to_text())
    task = make_task(config.contexts, config.vocab, config.concentration, config.seed)
    store.write_json("task.json", task.to_record())
    for rho in config.rhos:
        data = corrupt(task, NoiseModel(rho, config.noise_kind), config.samples_per_context, config.seed)
        store.write_text(f"dataset_rho{rho:g}.jsonl", data.to_jsonl())
        print(f"✓ rho={rho:g}: {len(data)} examples, noisy fraction {data.noisy_fraction:.4f}")
    return EXIT_OK


def cmd_diversity(args) -> int:
    try:
        corpus, tokenizer = load_corpus(args.corpus)
        reference = load_reference(args.reference, tokenizer)
    except (OSError, ValueError) as exc:
        print(f"✗ cannot read input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sizes = None
    if args.sizes:
        try:
            sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        except ValueError:
            print(f"✗ bad --sizes {args.sizes!r}", file=sys.stderr)
            return EXIT_USAGE
    try:
        report = diversity_report(corpus, reference, sizes, seed=args.seed)
    except (SizeExceedsCorpus, ValueError) as exc:
        print(f"✗ {exc}", file=sys.stderr)
        return EXIT_USAGE

    store = storage.init_store(args.out)
    _write_settings(store, {"corpus": args.corpus, "reference": args.reference,
                            "sizes": args.sizes or "default", "seed": args.seed})
    store.write_json("diversity.json", report.model_dump(mode="json"))
    store.write_text("histogram.csv", _csv(["token", "count"], report.histogram.items()))
    store.write_text("saturation.csv", _csv(["size", "unique"], zip(report.sample_sizes, report.counts)))
    _banner("Diversity")
    print(f"Unique tokens:            {report.unique_total}")
    print(f"Unique in reference:      {report.unique_in_reference}")
    print(f"Total tokens:             {report.total_tokens}")
    return EXIT_OK


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", default=None, help="key=value config file")
    group = parser.add_argument_group("config overrides")
    for key in config_keys():
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        group.add_argument(*flags, dest=f"override_{key}", default=None, metavar="VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvdlab", description="Noise-robust token losses toolkit")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run numerical bound checks")
    verify.add_argument("--suite", default="all", choices=sorted(SUITES))
    verify.add_argument("--trials", type=int, default=None, help="override every check's trial count")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out", default="runs/verify")

    bench = sub.add_parser("bench", help="run the synthetic benchmark grid")
    _add_config_flags(bench)
    bench.add_argument("--progress", action="store_true")

    gen = sub.add_parser("gen-data", help="write a synthetic task and datasets")
    _add_config_flags(gen)

    div = sub.add_parser("diversity", help="corpus diversity metrics")
    div.add_argument("corpus", help=".txt (one document per line) or .jsonl ({\"tokens\": [...]})")
    div.add_argument("reference", help="newline-delimited reference tokens or ids")
    div.add_argument("--sizes", default=None, help="comma-separated document counts (default: 10 log-spaced)")
    div.add_argument("--seed", type=int, default=0)
    div.add_argument("--out", default="runs/diversity")

    grad = sub.add_parser("grad-check", help="finite-difference gradient check")
    grad.add_argument("--trials", type=int, default=100)
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--out", default="runs/grad-check")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    overrides = {
        key[len("override_"):]: value
        for key, value in vars(args).items()
        if key.startswith("override_") and value is not None
    }
    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "grad-check":
            return cmd_grad_check(args)
        if args.command == "bench":
            return cmd_bench(args, overrides)
        if args.command == "gen-data":
            return cmd_gen_data(args, overrides)
        return cmd_diversity(args)
    except ConfigError as exc:
        print(f"✗ config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("✗ interrupted; completed cells are kept", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
