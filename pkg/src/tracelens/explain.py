"""Local surrogate explanation of tile classifiers.

A g x g region grid is laid over the tile. N random binary masks switch
regions off (replaced by a baseline value), the model is queried on each
perturbed tile, and a locally weighted ridge regression from mask
indicators to the malicious-class probability yields one weight per
region. Positive weights render green in the heatmap, negative red.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import imaging, models
from .henet import HenetModel

RIDGE_LAMBDA = 1e-6


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ExplanationMap:
    grid: int
    weights: np.ndarray  # (g*g,), region-major row order
    intercept: float
    samples: int
    seed: int
    kernel_width: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "samples": self.samples,
            "seed": self.seed,
            "kernel_width": self.kernel_width,
            "degenerate": self.degenerate,
        }


def _malicious_proba(model, batch: np.ndarray) -> np.ndarray:
    if isinstance(model, HenetModel):
        return models.predict_proba_batch(model.tile_model, batch)[:, model.malicious_class]
    if isinstance(model, models.TrainedModel):
        return models.predict_proba_batch(model, batch)[:, -1]
    # any callable mapping an (n, m*m) batch to n scores works too
    return np.asarray(model(batch), dtype=np.float64)


def _region_view(grid_values: np.ndarray, g: int) -> np.ndarray:
    """(g*g, block, block) view of an (m, m) grid, regions in row order."""
    m = grid_values.shape[0]
    block = m // g
    return (
        grid_values.reshape(g, block, g, block)
        .transpose(0, 2, 1, 3)
        .reshape(g * g, block, block)
    )


def explain_tile(
    model,
    tile: imaging.ImageTile,
    g: int = 4,
    samples: int = 1000,
    seed: int = 0,
    kernel_width: float = 0.25,
    baseline: str = "tile-mean",
) -> ExplanationMap:
    """Fit the surrogate and return per-region weights.

    ``baseline`` selects the fill value for masked-off regions: the mean
    pixel value of the tile, or zero.
    """
    if tile.channels != 1:
        raise GridMismatch("explanation operates on single-channel tiles")
    m = tile.side
    if g < 1 or m % g != 0:
        raise GridMismatch(f"grid {g} does not divide tile side {m}")
    if samples < g * g + 1:
        raise ValueError(f"need at least g^2+1 = {g * g + 1} samples, got {samples}")
    if baseline not in ("tile-mean", "zero"):
        raise ValueError(f"baseline must be 'tile-mean' or 'zero', got {baseline!r}")
    if kernel_width <= 0:
        raise ValueError("kernel width must be > 0")

    base_value = float(tile.values.mean()) if baseline == "tile-mean" else 0.0
    rng = np.random.default_rng(seed)
    n_regions = g * g
    masks = rng.integers(0, 2, size=(samples, n_regions))  # 1 = region kept

    grid = tile.values[0].astype(np.float64)
    block = m // g
    perturbed = np.empty((samples, m * m))
    for i, mask in enumerate(masks):
        region_vals = _region_view(grid, g).copy()
        region_vals[mask == 0] = base_value
        restored = (
            region_vals.reshape(g, g, block, block)
            .transpose(0, 2, 1, 3)
            .reshape(m, m)
        )
        perturbed[i] = np.clip(np.round(restored), 0, 255).reshape(-1) / 255.0

    y = _malicious_proba(model, perturbed)
    off_fraction = 1.0 - masks.mean(axis=1)
    sample_weights = np.exp(-(off_fraction**2) / kernel_width**2)

    # weighted ridge: (A' W A + lambda I) beta = A' W y, with intercept column
    A = np.hstack([masks.astype(np.float64), np.ones((samples, 1))])
    W = sample_weights[:, np.newaxis]
    lhs = A.T @ (W * A) + RIDGE_LAMBDA * np.eye(n_regions + 1)
    rhs = A.T @ (sample_weights * y)
    degenerate = False
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
        degenerate = True
    return ExplanationMap(
        grid=g,
        weights=beta[:-1],
        intercept=float(beta[-1]),
        samples=samples,
        seed=seed,
        kernel_width=kernel_width,
        degenerate=degenerate,
    )


def render_heatmap(tile: imaging.ImageTile, ex: ExplanationMap) -> imaging.ImageTile:
    """Blend the grayscale tile with green (positive) / red (negative) regions.

    Region intensity is proportional to |weight| / max|weight|; the blend
    factor is 0.5 and outputs are clamped to [0, 255].
    """
    if tile.channels != 1:
        raise GridMismatch("heatmaps render over single-channel tiles")
    m = tile.side
    g = ex.grid
    if m % g != 0:
        raise GridMismatch(f"grid {g} does not divide tile side {m}")
    rgb = np.repeat(tile.values.astype(np.float64), 3, axis=0)
    peak = float(np.max(np.abs(ex.weights)))
    if peak > 0:
        block = m // g
        intensity = (np.abs(ex.weights) / peak).reshape(g, g)
        sign = np.sign(ex.weights).reshape(g, g)
        boost = np.kron(intensity, np.ones((block, block))) * 255.0 * 0.5
        sign_full = np.kron(sign, np.ones((block, block)))
        rgb[1] += np.where(sign_full > 0, boost, 0.0)  # green
        rgb[0] += np.where(sign_full < 0, boost, 0.0)  # red
    return imaging.ImageTile(
        np.clip(np.round(rgb), 0, 255).astype(np.uint8), index=tile.index
    )
