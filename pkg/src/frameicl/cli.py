"""Command line interface: ``frameicl <command>``.

Exit codes: 0 ok, 1 verification failure, 2 configuration or input error,
3 provider error, 4 prompt over budget.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import acceptance
from .config import load_config
from .dataset import DatasetSplit, SplitConfig, stratified_split
from .errors import (
    BudgetExceeded,
    ConfigError,
    FrameICLError,
    InsufficientExamples,
    NOutOfRange,
    ProviderError,
    ProviderExhausted,
    ShotFrameMismatch,
    StoreError,
)
from .fixtures import example_config_path
from .framenet_xml import import_framenet
from .prompts import AblationLevel, PromptConfig, render_prompt
from .reporting import report
from .runner import RunRecord, run_experiment
from .store import export_normalized
from .wire import TaskKind

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PROVIDER, EXIT_BUDGET = 0, 1, 2, 3, 4

log = logging.getLogger("frameicl")


def _config(args):
    config = load_config(args.config or example_config_path())
    if args.seed is not None:
        config.defaults["seed"] = args.seed
    return config


def _split_for(config, name: str, out: Path, store, seed=None) -> DatasetSplit:
    """Load ``out/splits/<name>.json`` if it matches the config, else draw and save it."""
    cfg = config.split_config(name)
    if seed is not None:
        cfg = SplitConfig(cfg.frame_names, cfg.n_icl, cfg.n_eval, seed)
    path = out / "splits" / f"{name}.json"
    if path.exists():
        split = DatasetSplit.load(path)
        if split.config == cfg:
            return split
        log.warning("%s was drawn with a different configuration; redrawing", path)
    split = stratified_split(store, cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    split.save(path)
    return split


def _cache_dir(config, args):
    if args.cache_dir:
        return Path(args.cache_dir)
    default = config.defaults.get("cache_dir")
    return Path(args.out) / default if default else None


# -- commands ------------------------------------------------------------------

def cmd_ingest(args) -> int:
    root = Path(args.framenet_dir) if args.framenet_dir else None
    frame_dir = Path(args.frames_dir) if args.frames_dir else root / "frame"
    lu_dir = Path(args.lu_dir) if args.lu_dir else root / "lu"
    store = import_framenet(frame_dir, lu_dir, args.frame or None)
    export_normalized(store, args.output)
    rep = store.report
    print(
        f"{rep.frames_loaded} frames, {rep.lexical_units_loaded} lexical units, "
        f"{rep.examples_loaded} examples written to {args.output}; {rep.examples_skipped} skipped",
        file=sys.stderr,
    )
    for reason, n in sorted(rep.skipped.items()):
        print(f"  skipped {n}: {reason}", file=sys.stderr)
    return EXIT_OK


def cmd_split(args) -> int:
    config = _config(args)
    store = config.load_store()
    split = _split_for(config, args.name, Path(args.out), store, args.seed)
    if args.output:
        split.save(args.output)
    else:
        print(json.dumps(split.to_dict(), indent=2))
    return EXIT_OK


def cmd_prompt(args) -> int:
    config = _config(args)
    store = config.load_store()
    if args.split:
        split = _split_for(config, args.split, Path(args.out), store, args.seed)
        pool = split.icl_pool
        frames = tuple(args.frames or split.config.frame_names)
    else:
        if not args.frames:
            raise ConfigError("give --frames or --split")
        frames = tuple(args.frames)
        pool = ()
        if args.shots:
            seed = args.seed if args.seed is not None else config.defaults.get("seed", 0)
            pool = stratified_split(store, SplitConfig(frames, args.shots, 1, seed)).icl_pool
    if args.shots > len(pool):
        raise NOutOfRange(f"{args.shots} shots requested but the ICL pool has {len(pool)}")
    cfg = PromptConfig(TaskKind(args.task), frames, pool[: args.shots], AblationLevel(args.ablation),
                       core_only=not args.all_elements)
    sys.stdout.write(render_prompt(store, cfg).text + "\n")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config(args)
    names = args.experiments or list(config.experiments)
    specs = [config.experiment(n) for n in names]
    if args.offline:
        network = sorted({m for s in specs for m in s.model_ids if config.provider(m).network})
        if network:
            raise ConfigError(f"--offline refuses network providers: {', '.join(network)}")
    store = config.load_store()
    out = Path(args.out)
    records = []
    for spec in specs:
        split = _split_for(config, spec.split, out, store, args.seed)
        clients = config.build_clients(spec.model_ids, store, _cache_dir(config, args), args.seed, spec.core_only)
        stage1 = None
        if spec.stage1_from:
            prior = out / "runs" / spec.stage1_from
            if not (prior / "record.json").exists():
                raise ConfigError(f"{spec.name}: stage1_from needs {prior}/record.json; run {spec.stage1_from} first")
            stage1 = RunRecord.load(prior)
        print(f"running {spec.name} ({spec.task_mode.value}, models: {', '.join(spec.model_ids)})", file=sys.stderr)
        record = run_experiment(spec, store, clients, split, config.max_prompt_chars, args.jobs, stage1)
        record.save(out / "runs" / spec.name)
        records.append(record)
        t = record.totals
        print(f"  {t['items']} items, {t['cached_items']} from cache, {t['wall_clock_s']}s", file=sys.stderr)
    for path in report(records, out / "reports"):
        print(path)
    return EXIT_OK


def cmd_report(args) -> int:
    runs = [Path(p) for p in args.runs] or sorted((Path(args.out) / "runs").glob("*/record.json"))
    if not runs:
        raise ConfigError(f"no run records found under {Path(args.out) / 'runs'}")
    records = [RunRecord.load(p) for p in runs]
    for path in report(records, args.report_dir or Path(args.out) / "reports"):
        print(path)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = acceptance.run_all()
    for r in results:
        print(r.line())
    failed = [r for r in results if r.passed is False]
    skipped = [r for r in results if r.passed is None]
    print(f"{len(results) - len(failed) - len(skipped)} passed, {len(failed)} failed, {len(skipped)} skipped")
    return EXIT_FAIL if failed else EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frameicl", description="Frame semantic parsing with in-context learning.")
    p.add_argument("--config", help="experiment config (YAML); defaults to the bundled fixture config")
    p.add_argument("--cache-dir", help="response cache directory (overrides the config)")
    p.add_argument("--seed", type=int, help="seed for splits and retry jitter (overrides the config)")
    p.add_argument("--offline", action="store_true", help="refuse any network provider")
    p.add_argument("--jobs", type=int, default=1, help="concurrent requests per cell; 1 is fully serial")
    p.add_argument("--out", default=".", help="directory holding splits/, runs/ and reports/")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="convert FrameNet XML into a normalized JSONL corpus")
    s.add_argument("framenet_dir", nargs="?", help="FrameNet data directory with frame/ and lu/")
    s.add_argument("--frames-dir")
    s.add_argument("--lu-dir")
    s.add_argument("--frame", action="append", help="only import this frame (repeatable)")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("split", help="draw (or load) a configured split and print it")
    s.add_argument("name")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("prompt", help="print a rendered prompt")
    s.add_argument("--task", choices=[t.value for t in TaskKind], required=True)
    s.add_argument("--frames", nargs="+")
    s.add_argument("--shots", type=int, default=0)
    s.add_argument("--split", help="take shots from this configured split")
    s.add_argument("--ablation", choices=[a.value for a in AblationLevel], default=AblationLevel.FULL_FRAME_INFO.value)
    s.add_argument("--all-elements", action="store_true", help="include non-core frame elements")
    s.set_defaults(func=cmd_prompt)

    s = sub.add_parser("run", help="run configured experiments (all by default)")
    s.add_argument("experiments", nargs="*")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("report", help="write report tables from saved run records")
    s.add_argument("runs", nargs="*", help="run directories or record.json files (default: <out>/runs/*)")
    s.add_argument("--report-dir")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("verify", help="run the fixture-based acceptance checks")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ProviderError, ProviderExhausted) as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (ConfigError, StoreError, InsufficientExamples, NOutOfRange, ShotFrameMismatch, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FrameICLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
