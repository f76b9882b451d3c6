"""Command-line entry point.

Subcommands mirror the pipeline stages so each is independently
invokable: ingest, segment, transform, features, classify, run, render.
Every subcommand reads the same flat key = value config file; --out,
--seed, and --workers override it.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline as pl
from . import report as report_mod
from .classify import ConfusionMatrix

_LOG = logging.getLogger(__name__)


def _setup_logging(out_dir: Path, verbose: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    logs = out_dir / "logs"
    logs.mkdir(exist_ok=True)
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    fmt = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
    file_handler = logging.FileHandler(logs / "run.log")
    file_handler.setFormatter(fmt)
    stream = logging.StreamHandler(sys.stderr)
    stream.setLevel(logging.INFO)
    stream.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    root.addHandler(file_handler)
    root.addHandler(stream)


def _load_config(args: argparse.Namespace) -> pl.PipelineConfig:
    config = pl.load_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = Path(args.out)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        config = replace(config, **overrides)
    return config


def _cmd_ingest(config: pl.PipelineConfig, args: argparse.Namespace) -> int:
    records = pl.ingest(config)
    manifest = [
        {
            "case_id": r.case_id,
            "image": str(r.image_path),
            "mask": None if r.mask_path is None else str(r.mask_path),
            "label": r.label,
        }
        for r in records
    ]
    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / "manifest.json"
    report_mod.write_report({"cases": manifest}, path)
    print(f"{len(records)} cases -> {path}")
    return 0


def _cmd_stage(config: pl.PipelineConfig, stage: str) -> int:
    result = pl.run_pipeline(config, stage=stage)
    if stage in ("segment", "transform"):
        print(f"stage {stage} artifacts under {config.output_dir}")
        return 0
    if result.features_path is not None:
        print(f"features: {result.features_path}")
    if result.report_path is not None:
        print(f"report:   {result.report_path}")
    if result.failures:
        print(f"{len(result.failures)} case(s) failed; see logs/run.log", file=sys.stderr)
        return 1
    if not result.ok:
        print("classification failed; see report.json", file=sys.stderr)
        return 1
    return 0


def _cmd_classify(config: pl.PipelineConfig, args: argparse.Namespace) -> int:
    features_path = config.output_dir / "features.csv"
    if not features_path.is_file():
        print(f"no {features_path}; run the features stage first", file=sys.stderr)
        return 1
    data = report_mod.read_features_csv(features_path)
    try:
        classification = pl.classify_dataset(data, config)
    except ValueError as exc:
        classification = {"error": str(exc)}
    report = pl.build_report(config, [], [], classification)
    report["cases"] = {"total": data.size, "ok": data.size, "failed": []}
    report_path = config.output_dir / "report.json"
    report_mod.write_report(report, report_path)
    matrices = {
        name: ConfusionMatrix(**entry["confusion"])
        for name, entry in classification.items()
        if isinstance(entry, dict) and "confusion" in entry
    }
    if matrices:
        maps_dir = config.output_dir / "maps"
        maps_dir.mkdir(exist_ok=True)
        report_mod.render_confusion(matrices, maps_dir / "confusion.png")
    print(f"report:   {report_path}")
    if "error" in classification:
        print(f"classification failed: {classification['error']}", file=sys.stderr)
        return 1
    print(json.dumps({k: v["metrics"] for k, v in classification.items()}, indent=2))
    return 0


def _cmd_render(config: pl.PipelineConfig, args: argparse.Namespace) -> int:
    records = pl.ingest(config)
    pl._render_all_maps(records, config)
    print(f"maps under {config.output_dir / 'maps'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="buscad",
        description="Breast-ultrasound contourlet feature pipeline",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("ingest", "validate the dataset and write the case manifest"),
        ("segment", "write lesion masks per case"),
        ("transform", "write subband, CP, and WCP rasters per case"),
        ("features", "write features.csv"),
        ("classify", "cross-validate an existing features.csv"),
        ("run", "full pipeline"),
        ("render", "false-color CP/WCP map PNGs"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--workers", type=int, default=None, help="worker override")
        if name == "run":
            p.add_argument(
                "--stage",
                default="classify",
                choices=("segment", "transform", "features", "classify"),
                help="stop after this stage",
            )

    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _setup_logging(config.output_dir, args.verbose)

    try:
        if args.command == "ingest":
            return _cmd_ingest(config, args)
        if args.command == "segment":
            return _cmd_stage(config, "segment")
        if args.command == "transform":
            return _cmd_stage(config, "transform")
        if args.command == "features":
            return _cmd_stage(config, "features")
        if args.command == "classify":
            return _cmd_classify(config, args)
        if args.command == "run":
            return _cmd_stage(config, args.stage)
        if args.command == "render":
            return _cmd_render(config, args)
    except pl.IngestError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
