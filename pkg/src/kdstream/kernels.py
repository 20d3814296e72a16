"""Tensor-product kernel over (instance, single-label) points and empirical MMD.

All functions are pure; per-concept evaluations can run in parallel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist


class KernelError(ValueError):
    """Raised on invalid kernel configuration or incompatible points."""


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian width over instance features; the label kernel is a fixed delta."""

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise KernelError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class ExamplePoint:
    """Per-concept restriction of an example: features plus one binary label.

    ``t`` is the arrival iteration, ``example_id`` a stream-wide identity used
    for recency tie-breaks and window bookkeeping, and ``origin`` marks points
    copied from another concept's window during adaptation.
    """

    x: tuple[float, ...]
    y: int
    t: int = 0
    example_id: int = -1
    origin: str | None = None

    @staticmethod
    def make(x, y, t=0, example_id=-1, origin=None) -> "ExamplePoint":
        return ExamplePoint(tuple(float(v) for v in np.asarray(x).ravel()), int(y), t, example_id, origin)


def _feature_matrix(points) -> np.ndarray:
    X = np.asarray([p.x for p in points], dtype=float)
    return X


def _label_vector(points) -> np.ndarray:
    return np.asarray([p.y for p in points], dtype=int)


def gram(A, B, cfg: KernelConfig) -> np.ndarray:
    """Pairwise product-kernel matrix between two point lists."""
    Xa, Xb = _feature_matrix(A), _feature_matrix(B)
    if Xa.shape[1] != Xb.shape[1]:
        raise KernelError(f"feature dimension mismatch: {Xa.shape[1]} vs {Xb.shape[1]}")
    kx = np.exp(-cdist(Xa, Xb, "sqeuclidean") / (2.0 * cfg.bandwidth**2))
    ky = _label_vector(A)[:, None] == _label_vector(B)[None, :]
    return kx * ky


def product_kernel(z: ExamplePoint, zp: ExamplePoint, cfg: KernelConfig) -> float:
    """Gaussian kernel on features times delta kernel on the label; in [0, 1]."""
    if len(z.x) != len(zp.x):
        raise KernelError(f"feature dimension mismatch: {len(z.x)} vs {len(zp.x)}")
    if z.y != zp.y:
        return 0.0
    d2 = float(np.sum((np.asarray(z.x) - np.asarray(zp.x)) ** 2))
    return float(np.exp(-d2 / (2.0 * cfg.bandwidth**2)))


def mmd_squared(A, B, cfg: KernelConfig) -> float:
    """Biased (V-statistic) squared-MMD estimate between two windows.

    Includes self-pairs, so the estimate is nonnegative and identically zero
    when the windows hold the same multiset.
    """
    if len(A) == 0 or len(B) == 0:
        raise KernelError("MMD requires non-empty windows")
    kaa = gram(A, A, cfg).mean()
    kbb = gram(B, B, cfg).mean()
    kab = gram(A, B, cfg).mean()
    return max(0.0, float(kaa - 2.0 * kab + kbb))


def witness_values(points, w_old, w_cur, cfg: KernelConfig) -> np.ndarray:
    """Empirical witness: mean kernel to the current window minus to the old one."""
    return gram(points, w_cur, cfg).mean(axis=1) - gram(points, w_old, cfg).mean(axis=1)


def witness_examples(w_old, w_cur, cfg: KernelConfig, m: int):
    """Pick the m points most characteristic of each window.

    Returns (top_old, top_cur): the m points of w_old with smallest witness
    value and the m points of w_cur with largest. If m exceeds a window's
    size, the whole window is returned.
    """
    if m < 1:
        raise KernelError(f"witness count must be >= 1, got {m}")
    if len(w_old) == 0 or len(w_cur) == 0:
        raise KernelError("witness selection requires non-empty windows")
    v_old = witness_values(w_old, w_old, w_cur, cfg)
    v_cur = witness_values(w_cur, w_old, w_cur, cfg)
    old_idx = np.argsort(v_old, kind="stable")[:m]
    cur_idx = np.argsort(-v_cur, kind="stable")[:m]
    return [w_old[i] for i in old_idx], [w_cur[i] for i in cur_idx]


def median_heuristic_bandwidth(points) -> float:
    """Median pairwise Euclidean distance, falling back to the smallest
    nonzero distance when the median is zero."""
    X = np.asarray([np.asarray(p, dtype=float).ravel() for p in points])
    if X.shape[0] < 2:
        raise KernelError("median heuristic needs at least 2 points")
    dists = pdist(X)
    med = float(np.median(dists))
    if med > 0:
        return med
    nonzero = dists[dists > 0]
    if nonzero.size == 0:
        raise KernelError("all points identical; bandwidth undefined")
    return float(nonzero.min())
