"""Attention maps, mask diagnostics, robustness and sensitivity sweeps.

The attention map is gradient-weighted class activation mapping taken at the
feature map the classifier actually pools: the post-mask map for masked
models (so the learned gating shows up in the explanation) and the raw
encoder output for baselines.  Sweeps emit plain CSV rows in a fixed
(model, level, seed) order so output never depends on scheduling.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import os
from dataclasses import dataclass

import numpy as np

from .checkpoint import load_checkpoint
from .data import (
    DatasetManifest,
    add_gaussian_noise,
    add_salt_pepper_noise,
    load_split_pixels,
)
from .errors import ConfigError
from .masking import apply_mask, mask_from_logits
from .model import ModelParams, encode
from .netpbm import nearest_resize, quantize
from .rng import derive_seed
from .tensor import Tensor, backward, gap, linear, pick, softmax_values
from .train import TrainConfig, evaluate, evaluate_pixels, train

SUPPRESSED_THRESHOLD = 0.05

_NOISE_FNS = {"gaussian": add_gaussian_noise, "salt_pepper": add_salt_pepper_noise}
_NOISE_TAGS = {"gaussian": 11, "salt_pepper": 12}


@dataclass
class Heatmap:
    grid: np.ndarray  # nonnegative, max-normalized, feature-grid resolution
    upsampled: np.ndarray  # uint8, input resolution, nearest-neighbor
    target_class: int
    confidence: float


@dataclass
class RunReport:
    variant: str
    config_digest: str
    accuracies: list
    mean: float
    std: float
    min: float


def grad_cam(params: ModelParams, image: Tensor, target_class: int) -> Heatmap:
    """Class-specific attention heatmap over the pooled feature map.

    Channel weights are the spatial means of the target logit's gradient;
    the grid is the ReLU of the weighted channel sum, normalized by its max
    when positive.
    """
    if not 0 <= target_class < params.n_classes:
        raise ValueError(f"target class {target_class} out of range")
    if params.mask is not None:
        tap = apply_mask(encode(params, image), mask_from_logits(params.mask))
    else:
        tap = encode(params, image)
    logits = linear(gap(tap), params.head_weights, params.head_bias)
    backward(pick(logits, target_class))

    alpha = tap.grad.mean(axis=(1, 2))
    grid = np.maximum(np.einsum("c,cij->ij", alpha, tap.data), 0.0)
    peak = grid.max()
    if peak > 0:
        grid = grid / peak
    upsampled = quantize(nearest_resize(grid, (image.shape[1], image.shape[2])))
    confidence = float(softmax_values(logits.data)[target_class])
    return Heatmap(grid, upsampled, target_class, confidence)


def mask_report(params: ModelParams) -> str:
    """CSV text with per-cell mask values, their mean, and the count of
    suppressed cells (value below the reporting threshold)."""
    if params.mask is None:
        raise ConfigError("model has no mask")
    values = mask_from_logits(params.mask).data
    lines = ["stat,row,col,value"]
    for r in range(values.shape[0]):
        for c in range(values.shape[1]):
            lines.append(f"cell,{r},{c},{float(values[r, c])!r}")
    lines.append(f"mean,,,{float(values.mean())!r}")
    lines.append(f"suppressed_count,,,{int((values < SUPPRESSED_THRESHOLD).sum())}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def robustness_sweep(
    checkpoint_paths: list,
    kind: str,
    levels: list,
    manifest: DatasetManifest,
    images_root,
    n_seeds: int = 5,
    base_seed: int = 0,
    levels_are_stddev: bool = False,
) -> list:
    """Accuracy of each checkpointed model on the noise-corrupted test split.

    Every (level, seed) pair corrupts the same test images for all models via
    a seed derived from (base_seed, kind, level index, seed, image index).
    Returns rows [model, variant, noise_kind, level, seed, accuracy].
    """
    if kind not in _NOISE_FNS:
        raise ConfigError(f"unknown noise kind '{kind}'")
    noise_fn = _NOISE_FNS[kind]
    tag = _NOISE_TAGS[kind]
    models = []
    for path in checkpoint_paths:
        name = os.path.splitext(os.path.basename(path))[0]
        params = load_checkpoint(path)
        models.append((name, params))
    test_set = load_split_pixels(manifest, images_root, "test")

    results = {}
    for li, level in enumerate(levels):
        effective = float(level) ** 2 if (levels_are_stddev and kind == "gaussian") else level
        for seed in range(n_seeds):
            corrupted = [
                (noise_fn(px, effective, derive_seed(base_seed, tag, li, seed, i)), label)
                for i, (px, label) in enumerate(test_set)
            ]
            for name, params in models:
                accuracy, _ = evaluate_pixels(params, corrupted)
                results[(name, li, seed)] = accuracy

    rows = []
    for name, params in models:
        for li, level in enumerate(levels):
            for seed in range(n_seeds):
                rows.append([name, params.variant, kind, level, seed, results[(name, li, seed)]])
    return rows


def sensitivity_sweep(
    lrs: list,
    lams: list,
    manifest: DatasetManifest,
    images_root,
    template: TrainConfig | None = None,
    n_seeds: int = 5,
    encoder=None,
) -> list:
    """Train one masked model per (learning rate, lam, seed) grid cell.

    Returns rows [lr, lambda, seed, test_accuracy] in fixed grid order.
    """
    if not lrs or not lams:
        raise ConfigError("sensitivity grid must be nonempty")
    if template is None:
        template = TrainConfig()
    rows = []
    for lr in lrs:
        for lam in lams:
            for seed in range(n_seeds):
                config = dataclasses.replace(
                    template, learning_rate=lr, lam=lam, seed=seed, variant="masked"
                )
                params, _ = train(config, manifest, images_root, encoder)
                accuracy, _ = evaluate(params, manifest, "test", images_root)
                rows.append([lr, lam, seed, accuracy])
    return rows


def aggregate_report(accuracies: list, variant: str = "", config_digest: str = "") -> RunReport:
    """Mean, population standard deviation, and minimum over the 5 run seeds."""
    if len(accuracies) != 5:
        raise ValueError(f"expected 5 per-seed accuracies, got {len(accuracies)}")
    if any(not 0.0 <= a <= 1.0 for a in accuracies):
        raise ValueError("accuracies must lie in [0, 1]")
    arr = np.asarray(accuracies, dtype=np.float64)
    return RunReport(
        variant=variant,
        config_digest=config_digest,
        accuracies=list(map(float, accuracies)),
        mean=float(arr.mean()),
        std=float(arr.std()),
        min=float(arr.min()),
    )


def format_report(report: RunReport) -> str:
    """Render a report row as ``mean ± std | min``, e.g. ``0.900 ± 7.5e-4 | 0.900``."""
    return f"{report.mean:.3f} ± {_format_std(report.std)} | {report.min:.3f}"


def _format_std(std: float) -> str:
    if std == 0:
        return "0"
    mantissa, exponent = f"{std:.1e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def config_digest(config: TrainConfig) -> str:
    return hashlib.sha256(repr(config).encode()).hexdigest()[:12]


def write_csv(rows: list, header: list, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
