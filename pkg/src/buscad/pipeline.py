"""Batch orchestration: ingest a dataset, run every stage per case,
persist artifacts, and classify the pooled feature table.

The per-case path is despeckle, normalize, segment (or load a provided
mask), contourlet decomposition, parametric maps, weighted maps, feature
extraction.  Case failures are collected, logged, and reported; the run
continues past them.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import csv
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import report as report_mod
from .classify import ClassifierConfig, ConfusionMatrix, Dataset, cross_validate, metrics
from .contourlet import (
    NAMED_SUBBAND_KEYS,
    NamedSubbandSet,
    contourlet_decompose,
    select_named_subbands,
)
from .features import CaseImages, FeatureVector, extract_all
from .imagecore import DespeckleConfig, ImageGrid, despeckle, load_image, normalize, save_image, write_raster
from .parametric import cp_image, wcp_image
from .segmentation import LesionRegion, binarize, region_from_mask

__all__ = [
    "CaseRecord",
    "CaseArtifacts",
    "IngestError",
    "PipelineConfig",
    "RunResult",
    "build_report",
    "ingest",
    "load_config",
    "process_case",
    "run_pipeline",
]

_LOG = logging.getLogger(__name__)

_IMAGE_SUFFIXES = (".png", ".bmp")
_MODEL_TAGS = {"riig": "riig-delta", "nakagami": "nakagami-m"}


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved run parameters; every path is checked at validation."""

    dataset_root: Path
    output_dir: Path = Path("out")
    labels_csv: Path | None = None
    mask_dir: Path | None = None
    despeckle: str = "lee"
    levels: tuple[int, ...] = (8, 8, 16, 32)
    window: int = 13
    model: str = "riig"
    refine: str = "moment"
    include_bmode: bool = False
    psd_axis: str = "vertical"
    select_k: int = 30
    knn_k: int = 5
    svm_c: float = 1.0
    tree_depth: int = 10
    folds: int = 10
    seed: int = 0
    workers: int = 1
    holdout: bool = False
    render_maps: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "dataset_root", Path(self.dataset_root))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.labels_csv is not None:
            object.__setattr__(self, "labels_csv", Path(self.labels_csv))
        if self.mask_dir is not None:
            object.__setattr__(self, "mask_dir", Path(self.mask_dir))
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        if self.model not in _MODEL_TAGS:
            raise ValueError(f"model must be one of {sorted(_MODEL_TAGS)}")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be odd and positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def validate_paths(self) -> None:
        if not self.dataset_root.is_dir():
            raise ValueError(f"dataset root does not exist: {self.dataset_root}")
        if self.labels_csv is not None and not self.labels_csv.is_file():
            raise ValueError(f"labels manifest does not exist: {self.labels_csv}")
        if self.mask_dir is not None and not self.mask_dir.is_dir():
            raise ValueError(f"mask folder does not exist: {self.mask_dir}")

    def echo(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                out[f.name] = ",".join(str(x) for x in v)
            else:
                out[f.name] = str(v)
        return out


_BOOL_KEYS = ("include_bmode", "holdout", "render_maps")
_INT_KEYS = ("window", "select_k", "knn_k", "tree_depth", "folds", "seed", "workers")
_FLOAT_KEYS = ("svm_c",)
_PATH_KEYS = ("dataset_root", "output_dir", "labels_csv", "mask_dir")


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a flat key = value config file."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser()
    parser.read_string("[config]\n" + text)
    raw = dict(parser["config"])
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    kwargs: dict = {}
    for key, value in raw.items():
        if key in _BOOL_KEYS:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"{key} must be a boolean, got {value!r}")
            kwargs[key] = value.lower() in ("true", "1", "yes")
        elif key in _INT_KEYS:
            kwargs[key] = int(value)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(value)
        elif key == "levels":
            kwargs[key] = tuple(int(v) for v in value.replace(" ", "").split(","))
        elif key in _PATH_KEYS:
            kwargs[key] = Path(value)
        else:
            kwargs[key] = value
    if "dataset_root" not in kwargs:
        raise ValueError("config must set dataset_root")
    return PipelineConfig(**kwargs)


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    image_path: Path
    mask_path: Path | None
    label: str


class IngestError(ValueError):
    """Itemized dataset problems found during ingestion."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__(
            "dataset ingestion failed:\n" + "\n".join(f"  - {p}" for p in problems)
        )


def _mask_for(image_path: Path, mask_dir: Path | None, problems: list[str]) -> Path | None:
    if mask_dir is None:
        return None
    candidate = mask_dir / image_path.name
    if not candidate.is_file():
        problems.append(f"missing mask for {image_path.name}: {candidate}")
        return None
    return candidate


def ingest(config: PipelineConfig) -> list[CaseRecord]:
    """Build the case manifest from a folder convention or a CSV.

    With labels_csv set, rows are id,label and the image lives at
    dataset_root/id.  Otherwise images under benign/ and malignant/
    subfolders carry their folder's label.
    """
    config.validate_paths()
    problems: list[str] = []
    records: list[CaseRecord] = []
    if config.labels_csv is not None:
        with open(config.labels_csv, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows and [c.strip().lower() for c in rows[0][:2]] == ["id", "label"]:
            rows = rows[1:]
        for lineno, row in enumerate(rows, start=1):
            if len(row) < 2:
                problems.append(f"manifest row {lineno}: expected id,label")
                continue
            case_id, label = row[0].strip(), row[1].strip().lower()
            image_path = config.dataset_root / case_id
            if label not in ("benign", "malignant"):
                problems.append(f"manifest row {lineno}: unknown label {label!r}")
                continue
            if not image_path.is_file():
                problems.append(f"manifest row {lineno}: missing image {image_path}")
                continue
            mask = _mask_for(image_path, config.mask_dir, problems)
            records.append(CaseRecord(case_id, image_path, mask, label))
    else:
        for label in ("benign", "malignant"):
            folder = config.dataset_root / label
            if not folder.is_dir():
                problems.append(f"missing class folder: {folder}")
                continue
            for image_path in sorted(folder.iterdir()):
                if image_path.suffix.lower() not in _IMAGE_SUFFIXES:
                    continue
                mask = _mask_for(image_path, config.mask_dir, problems)
                records.append(
                    CaseRecord(f"{label}/{image_path.name}", image_path, mask, label)
                )
    if problems:
        raise IngestError(problems)
    if not records:
        raise IngestError(["no cases found under " + str(config.dataset_root)])
    counts = {"benign": 0, "malignant": 0}
    for r in records:
        counts[r.label] += 1
    _LOG.info(
        "ingested %d cases (%d benign, %d malignant)",
        len(records), counts["benign"], counts["malignant"],
    )
    return records


@dataclass
class CaseArtifacts:
    """Everything one case produces, for staged output and rendering."""

    record: CaseRecord
    normalized: ImageGrid
    region: LesionRegion
    subbands: NamedSubbandSet
    cps: dict[str, ImageGrid] = field(default_factory=dict)
    wcps: dict[str, ImageGrid] = field(default_factory=dict)
    vector: FeatureVector | None = None


def _load_mask(path: Path, shape: tuple[int, int]) -> np.ndarray:
    grid = load_image(path)
    if grid.shape != shape:
        raise ValueError(
            f"mask {path.name} is {grid.shape}, image is {shape}"
        )
    return grid.data > 0


def process_case(
    record: CaseRecord, config: PipelineConfig, stage: str = "features"
) -> CaseArtifacts:
    """Run one case through the pipeline up to the requested stage."""
    img = load_image(record.image_path)
    smooth = despeckle(img, DespeckleConfig(method=config.despeckle))
    norm = normalize(smooth)
    if record.mask_path is not None:
        mask = _load_mask(record.mask_path, norm.shape)
    else:
        mask = binarize(norm)
    region = region_from_mask(mask)
    dec = contourlet_decompose(norm, config.levels)
    subbands = select_named_subbands(dec)
    art = CaseArtifacts(record=record, normalized=norm, region=region, subbands=subbands)
    if stage == "segment":
        return art
    for key in NAMED_SUBBAND_KEYS:
        cp = cp_image(
            subbands[key],
            window=config.window,
            model=_MODEL_TAGS[config.model],
            refine=config.refine,
        )
        art.cps[key] = cp.grid
        art.wcps[key] = wcp_image(cp, subbands[key])
    if stage == "transform":
        return art
    case = CaseImages(case_id=record.case_id, bmode=norm, label=record.label)
    art.vector = extract_all(
        case,
        region,
        subbands,
        art.wcps,
        include_bmode=config.include_bmode,
        psd_axis=config.psd_axis,
    )
    return art


def _case_worker(args: tuple[CaseRecord, PipelineConfig]) -> tuple[str, FeatureVector | str]:
    record, config = args
    try:
        art = process_case(record, config, stage="features")
        assert art.vector is not None
        return ("ok", art.vector)
    except Exception as exc:  # noqa: BLE001 - per-case isolation is the contract
        return ("err", f"{record.case_id}: {exc}")


@dataclass
class RunResult:
    vectors: list[FeatureVector]
    failures: list[str]
    report: dict
    features_path: Path | None
    report_path: Path | None

    @property
    def ok(self) -> bool:
        return not self.failures and "error" not in self.report.get("classification", {})


def _extract_features(
    records: Sequence[CaseRecord], config: PipelineConfig
) -> tuple[list[FeatureVector], list[str]]:
    jobs = [(r, config) for r in records]
    results: list[tuple[str, FeatureVector | str]]
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_case_worker, jobs, chunksize=1))
    else:
        results = [_case_worker(j) for j in jobs]
    vectors: list[FeatureVector] = []
    failures: list[str] = []
    for status, payload in results:
        if status == "ok":
            vectors.append(payload)  # type: ignore[arg-type]
        else:
            failures.append(payload)  # type: ignore[arg-type]
            _LOG.error("case failed: %s", payload)
    return vectors, failures


def _dataset_from_vectors(vectors: Sequence[FeatureVector]) -> Dataset:
    names = tuple(vectors[0].values.keys())
    matrix = np.array([[v.values[n] for n in names] for v in vectors])
    return Dataset(
        matrix,
        tuple(v.label for v in vectors),
        names,
        tuple(v.case_id for v in vectors),
    )


def classify_dataset(data: Dataset, config: PipelineConfig) -> dict:
    """Cross-validate all three classifiers and package the outcome."""
    out: dict = {}
    for name in ("svm", "knn", "tree"):
        clf = ClassifierConfig(
            name=name,
            knn_k=config.knn_k,
            svm_c=config.svm_c,
            tree_depth=config.tree_depth,
            select_k=config.select_k,
            sequential_holdout=config.holdout,
        )
        cm, chosen = cross_validate(data, clf, folds=config.folds, seed=config.seed)
        out[name] = {
            "confusion": {"tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn},
            "metrics": metrics(cm),
            "chosen_features": list(chosen),
        }
    return out


def build_report(
    config: PipelineConfig,
    vectors: Sequence[FeatureVector],
    failures: Sequence[str],
    classification: Mapping,
) -> dict:
    return {
        "config": config.echo(),
        "seed": config.seed,
        "cases": {
            "total": len(vectors) + len(failures),
            "ok": len(vectors),
            "failed": list(failures),
        },
        "classification": dict(classification),
    }


def run_pipeline(config: PipelineConfig, stage: str = "classify") -> RunResult:
    """Full batch run; artifacts land under config.output_dir.

    stage limits how far the run goes: segment, transform, features, or
    classify (default, everything).
    """
    if stage not in ("segment", "transform", "features", "classify"):
        raise ValueError(f"unknown stage {stage!r}")
    records = ingest(config)
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)

    if stage in ("segment", "transform"):
        _run_staged(records, config, stage)
        return RunResult([], [], {}, None, None)

    vectors, failures = _extract_features(records, config)
    features_path = None
    if vectors:
        features_path = out / "features.csv"
        report_mod.write_features_csv(vectors, features_path)
        _LOG.info("wrote %s (%d cases)", features_path, len(vectors))
    if config.render_maps and vectors:
        _render_all_maps(records, config)

    classification: dict = {}
    report_path = None
    if stage == "classify":
        if vectors:
            try:
                classification = classify_dataset(_dataset_from_vectors(vectors), config)
            except ValueError as exc:
                classification = {"error": str(exc)}
                _LOG.error("classification failed: %s", exc)
        else:
            classification = {"error": "no cases survived feature extraction"}
        report = build_report(config, vectors, failures, classification)
        report_path = out / "report.json"
        report_mod.write_report(report, report_path)
        _LOG.info("wrote %s", report_path)
        matrices = {
            name: ConfusionMatrix(**entry["confusion"])
            for name, entry in classification.items()
            if isinstance(entry, dict) and "confusion" in entry
        }
        if matrices:
            maps_dir = out / "maps"
            maps_dir.mkdir(exist_ok=True)
            report_mod.render_confusion(matrices, maps_dir / "confusion.png")
    else:
        report = build_report(config, vectors, failures, {})
    return RunResult(list(vectors), list(failures), report, features_path, report_path)


def _run_staged(records: Sequence[CaseRecord], config: PipelineConfig, stage: str) -> None:
    out = config.output_dir
    masks_dir = out / "masks"
    masks_dir.mkdir(parents=True, exist_ok=True)
    transforms_dir = out / "transforms"
    for record in records:
        try:
            art = process_case(record, config, stage=stage)
        except Exception as exc:  # noqa: BLE001 - per-case isolation
            _LOG.error("case failed: %s: %s", record.case_id, exc)
            continue
        safe = record.case_id.replace("/", "_")
        mask_img = ImageGrid(art.region.mask.astype(float) * 255.0, "raw-u8")
        save_image(mask_img, masks_dir / f"{safe}.png")
        if stage == "transform":
            case_dir = transforms_dir / safe
            case_dir.mkdir(parents=True, exist_ok=True)
            for key in NAMED_SUBBAND_KEYS:
                write_raster(art.subbands[key], case_dir / f"{key}.subband.wcpg")
                write_raster(art.cps[key], case_dir / f"{key}.cp.wcpg")
                write_raster(art.wcps[key], case_dir / f"{key}.wcp.wcpg")


def _render_all_maps(records: Sequence[CaseRecord], config: PipelineConfig) -> None:
    maps_dir = config.output_dir / "maps"
    maps_dir.mkdir(parents=True, exist_ok=True)
    for record in records:
        try:
            art = process_case(record, config, stage="transform")
        except Exception as exc:  # noqa: BLE001 - per-case isolation
            _LOG.error("render failed: %s: %s", record.case_id, exc)
            continue
        safe = record.case_id.replace("/", "_")
        for key in NAMED_SUBBAND_KEYS:
            report_mod.render_map(
                art.cps[key], maps_dir / f"{safe}.{key}.cp.png", f"{record.case_id} {key} CP"
            )
            report_mod.render_map(
                art.wcps[key], maps_dir / f"{safe}.{key}.wcp.png", f"{record.case_id} {key} WCP"
            )
