"""Shared fixtures: synthetic phantom cases and datasets.

A phantom is a speckle-textured B-mode image with a darker elliptical
lesion; benign and malignant classes differ in the lesion texture's RiIG
dispersion (delta 1.5 vs 0.7 at alpha = 2), keeping every window
comfortably inside the estimator's identifiable range.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from buscad import statmodel
from buscad.imagecore import ImageGrid, save_image

BENIGN_DELTA = 1.5
MALIGNANT_DELTA = 0.7
BACKGROUND_DELTA = 3.0


def make_phantom(case_seed: int, malignant: bool, size: int = 640):
    """One synthetic case: (raw-u8 pixel array, ground-truth lesion mask)."""
    rng_seed = 10_000 + case_seed * 7 + (1 if malignant else 0)
    rng = np.random.default_rng(rng_seed)
    bg = statmodel.riig_sample(
        statmodel.RiIGParams(2.0, 0.0, BACKGROUND_DELTA), size * size, seed=rng_seed
    ).reshape(size, size)
    delta = MALIGNANT_DELTA if malignant else BENIGN_DELTA
    lesion = statmodel.riig_sample(
        statmodel.RiIGParams(2.0, 0.0, delta), size * size, seed=rng_seed + 1
    ).reshape(size, size)
    cx = size / 2 + rng.uniform(-15, 15)
    cy = size / 2 + rng.uniform(-15, 15)
    a = rng.uniform(170, 200) * size / 640
    b = rng.uniform(140, 160) * size / 640
    theta = rng.uniform(0, np.pi)
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    xr = (xx - cx) * np.cos(theta) + (yy - cy) * np.sin(theta)
    yr = -(xx - cx) * np.sin(theta) + (yy - cy) * np.cos(theta)
    inside = (xr / a) ** 2 + (yr / b) ** 2 <= 1.0
    img = np.where(inside, lesion * 19.0, bg * 38.0)
    return np.clip(np.floor(img + 0.5), 0.0, 255.0), inside


def write_phantom_dataset(root: Path, per_class: int, start: int = 0, size: int = 640) -> Path:
    """Folder-convention dataset: root/benign/*.png + root/malignant/*.png."""
    for label, malignant in (("benign", False), ("malignant", True)):
        folder = root / label
        folder.mkdir(parents=True, exist_ok=True)
        for i in range(start, start + per_class):
            pixels, _ = make_phantom(i, malignant, size=size)
            save_image(ImageGrid(pixels, "raw-u8"), folder / f"{label[0]}{i:02d}.png")
    return root


@pytest.fixture(scope="session")
def phantom_case_artifacts(tmp_path_factory):
    """One fully processed benign case (segmentation through WCP grids)."""
    from buscad.pipeline import CaseRecord, PipelineConfig, process_case

    root = tmp_path_factory.mktemp("one_case")
    pixels, _ = make_phantom(0, malignant=False)
    path = root / "case.png"
    save_image(ImageGrid(pixels, "raw-u8"), path)
    config = PipelineConfig(dataset_root=root, output_dir=root / "out")
    record = CaseRecord("benign/case.png", path, None, "benign")
    return process_case(record, config, stage="features")


@pytest.fixture(scope="session")
def phantom_dataset_6(tmp_path_factory) -> Path:
    """Six-case on-disk dataset (3 per class) for pipeline tests."""
    return write_phantom_dataset(tmp_path_factory.mktemp("phantom6"), per_class=3)
