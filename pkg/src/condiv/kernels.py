"""Gaussian kernel primitives shared by every divergence estimator.

All estimators in this package reduce to ratios of sums of Gaussian kernel
evaluations, so the kernel layer stays deliberately small: a scalar kernel,
a Gram-matrix assembler, and the median-distance bandwidth rule.

The kernel is the unnormalised exponential exp(-||u - v||^2 / (2 sigma^2)).
Every consumer divides sums of kernel values by other sums of kernel values,
so the 1/((2 pi)^(d/2) sigma^d) constant cancels exactly; dropping it keeps
values in (0, 1] and avoids underflow in high dimension. A regression test
asserts this invariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

# A Gram matrix is a plain float ndarray of kernel evaluations.
GramMatrix = np.ndarray


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidth for one variable block.

    ``width`` is the Gaussian sigma in the units of the input coordinates.
    ``selection_mode`` records whether the caller fixed the width or it was
    resolved by the median heuristic; the resolved value is stored either way.
    """

    width: float
    selection_mode: str = "fixed"

    def __post_init__(self):
        if not np.isfinite(self.width) or self.width <= 0:
            raise ValueError(f"kernel width must be positive, got {self.width}")
        if self.selection_mode not in ("fixed", "median_heuristic"):
            raise ValueError(f"unknown selection_mode {self.selection_mode!r}")


def as_sample_matrix(a, name: str = "samples") -> np.ndarray:
    """Coerce input to an n x d float matrix; 1-d input becomes a column."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be 1-d or 2-d, got shape {a.shape}")
    if a.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def _check_width(width: float) -> float:
    width = float(width)
    if not np.isfinite(width) or width <= 0:
        raise ValueError(f"kernel width must be positive, got {width}")
    return width


def gaussian_kernel(u, v, width: float) -> float:
    """Evaluate the unnormalised Gaussian kernel between two points.

    Parameters
    ----------
    u, v : array_like, shape (d,)
        Input vectors; scalars are treated as 1-d points.
    width : float
        Bandwidth sigma, > 0.

    Returns
    -------
    float
        exp(-||u - v||^2 / (2 width^2)), in (0, 1]; 1 iff u == v.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    width = _check_width(width)
    sq = float(np.sum((u - v) ** 2))
    return float(np.exp(-sq / (2.0 * width * width)))


def gram(a, b, width: float) -> GramMatrix:
    """Assemble the Gram matrix with entry (i, j) = kernel(a_i, b_j).

    Parameters
    ----------
    a : array_like, shape (m, d)
    b : array_like, shape (n, d)
    width : float

    Returns
    -------
    ndarray, shape (m, n)
        Entries in (0, 1]. Symmetric with unit diagonal when ``a`` and ``b``
        hold the same samples.
    """
    a = as_sample_matrix(a, "a")
    b = as_sample_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"column dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    width = _check_width(width)
    sq = cdist(a, b, "sqeuclidean")
    return np.exp(sq / (-2.0 * width * width))


def median_bandwidth(pooled) -> float:
    """Median of the pairwise Euclidean distances of a pooled sample set.

    Zero-distance pairs are excluded so duplicated samples cannot collapse
    the bandwidth to 0. Cost is the exact O(n^2) distance enumeration.
    """
    x = as_sample_matrix(pooled, "pooled")
    if x.shape[0] < 2:
        raise ValueError("median bandwidth needs at least 2 samples")
    d = pdist(x)
    d = d[d > 0.0]
    if d.size == 0:
        raise ValueError("all samples identical: no positive pairwise distance")
    return float(np.median(d))


def product_kernel_check(xi, xj, yi, yj, width: float) -> tuple[float, float]:
    """Evaluate both sides of the concatenation identity.

    The Gaussian kernel factorises over concatenated blocks that share one
    width: kernel([x; y]_i - [x; y]_j) = kernel(x_i - x_j) * kernel(y_i - y_j).
    Returns (joint value, product of marginal values); equal by construction,
    exposed so the test suite can assert it on random inputs.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xj = np.atleast_1d(np.asarray(xj, dtype=float))
    yi = np.atleast_1d(np.asarray(yi, dtype=float))
    yj = np.atleast_1d(np.asarray(yj, dtype=float))
    joint = gaussian_kernel(
        np.concatenate([xi, yi]), np.concatenate([xj, yj]), width
    )
    marginal = gaussian_kernel(xi, xj, width) * gaussian_kernel(yi, yj, width)
    return joint, marginal
