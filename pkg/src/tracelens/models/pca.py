"""Principal component analysis via covariance eigendecomposition.

Deterministic sign convention: the largest-magnitude entry of each
component is made positive (first occurrence on magnitude ties).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch

VARIANCE_EPS = 1e-12


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (r, d), orthonormal rows
    explained_variance: np.ndarray  # (r,), nonincreasing
    rank_deficient: bool = False

    @property
    def dim(self) -> int:
        return self.components.shape[1]

    @property
    def rank(self) -> int:
        return self.components.shape[0]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for row in out:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return out


def pca_fit(data, r: int) -> PcaModel:
    """Top-r principal directions of the mean-centered data.

    If fewer than r directions carry variance above 1e-12, the achievable
    count is returned with ``rank_deficient`` set.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("pca_fit needs a 2-D matrix with at least 2 samples")
    n, d = X.shape
    if not 1 <= r <= min(d, n):
        raise ValueError(f"r must be in [1, min(d, n)] = [1, {min(d, n)}], got {r}")
    mean = X.mean(axis=0)
    Xc = X - mean
    if d <= n:
        cov = Xc.T @ Xc / (n - 1)
        eigvals, eigvecs = np.linalg.eigh(cov)
    else:
        # wide data: eigendecompose the n x n Gram matrix instead and map
        # its eigenvectors back (identical nonzero spectrum)
        gram = Xc @ Xc.T / (n - 1)
        eigvals, u = np.linalg.eigh(gram)
        scale = np.sqrt(np.maximum(eigvals, VARIANCE_EPS) * (n - 1))
        eigvecs = Xc.T @ (u / scale)
    order = np.argsort(eigvals, kind="stable")[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]
    usable = int(np.sum(eigvals > VARIANCE_EPS))
    r_eff = min(r, usable) if usable else min(r, 1)
    return PcaModel(
        mean=mean,
        components=_fix_signs(eigvecs[:, :r_eff].T),
        explained_variance=eigvals[:r_eff],
        rank_deficient=r_eff < r,
    )


def pca_transform(model: PcaModel, v) -> np.ndarray:
    """Project v (vector or matrix of rows) onto the components."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.dim:
        raise DimensionMismatch(f"expected dimension {model.dim}, got {v.shape[-1]}")
    return (v - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.rank:
        raise DimensionMismatch(f"expected rank {model.rank}, got {z.shape[-1]}")
    return z @ model.components + model.mean
