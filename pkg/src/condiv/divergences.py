"""Divergences between distributions and between conditional distributions.

The Cauchy-Schwarz (CS) family is the core of the package:

* ``cs_divergence``: the marginal CS divergence between two sample sets,
  estimated by resubstitution kernel density estimation.
* ``conditional_cs``: the CS divergence between the conditional laws
  p(y|x) and q(y|x) of two paired datasets, a four-log-term Gram expression.
* ``conditional_cs_shared_x``: special case for two response sets that share
  one conditioning set (e.g. observed vs. predicted responses).
* ``conditional_cs_nested``: special case comparing conditioning on x1 alone
  against conditioning on (x1, x2); the building block of the causal score.

Baselines with the same calling conventions: squared MMD (V/U statistics),
conditional MMD in its ridge-regularised trace form, a k-nearest-neighbor
KL estimator with the chain-rule conditional version, and the von Neumann
matrix divergence on covariance summaries.

All kernel evaluations use the unnormalised Gaussian kernel from
:mod:`condiv.kernels`; the dropped constant cancels in every ratio here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial import cKDTree

from .kernels import as_sample_matrix, gram

# Positive floor for cross-distribution sums inside logs and denominators.
# Within-set row sums never need it: their diagonal kernel entry is 1.
_FLOOR = 1e-300

# Floor for k-NN distances when duplicate points produce exact zeros.
_KNN_FLOOR = 1e-30


class DisjointSupportError(ValueError):
    """Cross-kernel mass underflowed to zero.

    The two sample sets share no kernel-scale overlap at the chosen width;
    the log terms of the estimator would be infinite. Raised instead of
    returning +/-inf so callers can report the condition.
    """


@dataclass(frozen=True)
class PairedDataset:
    """Aligned (x, y) sample matrices drawn from one joint distribution.

    ``x`` holds the conditioning variable, ``y`` the response, one row per
    observation. Rows are treated as i.i.d. draws. Two or more rows are
    needed for any estimate to be meaningful; single-row datasets are
    accepted for degenerate hand-checks.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_sample_matrix(self.x, "x"))
        object.__setattr__(self, "y", as_sample_matrix(self.y, "y"))
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"x and y row counts differ: {self.x.shape[0]} vs "
                f"{self.y.shape[0]}"
            )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dx(self) -> int:
        return self.x.shape[1]

    @property
    def dy(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class CmmdConfig:
    """Conditional-MMD settings: kernel width and ridge strength lambda."""

    width: float = 1.0
    ridge: float = 1e-3

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.ridge <= 0:
            raise ValueError(f"ridge must be positive, got {self.ridge}")


@dataclass(frozen=True)
class KnnConfig:
    """Neighbor count for the k-NN KL estimator."""

    neighbors: int = 3

    def __post_init__(self):
        if self.neighbors < 1:
            raise ValueError(f"neighbors must be >= 1, got {self.neighbors}")


@dataclass(frozen=True)
class CovarianceSummary:
    """Ridge-stabilised sample covariances of a paired dataset.

    ``joint_cov`` covers the concatenated (x, y) rows, ``marginal_cov`` the
    x rows alone. Both are symmetric with strictly positive spectra after
    stabilisation.
    """

    joint_cov: np.ndarray
    marginal_cov: np.ndarray


def _guarded_log(value: float, what: str) -> float:
    if value < _FLOOR:
        raise DisjointSupportError(
            f"{what} underflowed ({value!r}): samples have disjoint support "
            "at this kernel width"
        )
    return math.log(value)


def _check_pair(s: PairedDataset, t: PairedDataset) -> None:
    if s.dx != t.dx:
        raise ValueError(f"x dimension mismatch: {s.dx} vs {t.dx}")
    if s.dy != t.dy:
        raise ValueError(f"y dimension mismatch: {s.dy} vs {t.dy}")


def cs_divergence(ys, yt, width: float) -> float:
    """CS divergence between the sample sets ``ys`` (M x d) and ``yt`` (N x d).

    Resubstitution estimator: log of the mean within-set Gram of each set,
    minus twice the log mean cross Gram. Nonnegative by the Cauchy-Schwarz
    inequality on the empirical mean kernel embeddings, and exactly 0 on
    identical sample sets.
    """
    ys = as_sample_matrix(ys, "ys")
    yt = as_sample_matrix(yt, "yt")
    within_s = float(gram(ys, ys, width).mean())
    within_t = float(gram(yt, yt, width).mean())
    cross = float(gram(ys, yt, width).mean())
    log_cross = _guarded_log(cross, "cross-set kernel mean")
    # Grouped so that identical inputs cancel exactly in floating point.
    return (math.log(within_s) - log_cross) + (math.log(within_t) - log_cross)


def _ratio_sum(knum, lnum, den_a, den_b, what: str) -> float:
    """Sum over rows j of (sum_i K_ji L_ji) / (den_a_j * den_b_j)."""
    den = den_a * den_b
    if np.any(den < _FLOOR):
        raise DisjointSupportError(
            f"{what}: a conditioning-variable row sum underflowed; samples "
            "have disjoint support at this kernel width"
        )
    return float(((knum * lnum).sum(axis=1) / den).sum())


def conditional_cs(
    s: PairedDataset, t: PairedDataset, width_x: float, width_y: float
) -> float:
    """Conditional CS divergence between p(y|x) of ``s`` and q(y|x) of ``t``.

    Four log terms over Gram matrices: two within-distribution terms that
    weight response similarities by normalised conditioning similarities,
    minus the two cross-distribution terms. Symmetric in (s, t), exactly 0
    when both arguments hold the same data, and finite whenever the
    conditioning samples overlap at the chosen widths.

    Parameters
    ----------
    s, t : PairedDataset
        The two joint samples; row counts may differ.
    width_x, width_y : float
        Kernel bandwidths for the conditioning block and the response block.
    """
    _check_pair(s, t)
    kp = gram(s.x, s.x, width_x)
    lp = gram(s.y, s.y, width_y)
    kq = gram(t.x, t.x, width_x)
    lq = gram(t.y, t.y, width_y)
    kpq = gram(s.x, t.x, width_x)
    lpq = gram(s.y, t.y, width_y)

    # The q-to-p Gram matrices are exact transposes of the p-to-q ones.
    # They are materialized contiguously so every reduction below runs along
    # axis 1 with one summation order; mixing axis-0 and axis-1 sums rounds
    # differently and would break the exact-zero identity in the last bit.
    kqp = np.ascontiguousarray(kpq.T)
    lqp = np.ascontiguousarray(lpq.T)

    rp = kp.sum(axis=1)
    rq = kq.sum(axis=1)
    rpq = kpq.sum(axis=1)
    rqp = kqp.sum(axis=1)

    term1 = _ratio_sum(kp, lp, rp, rp, "within-s term")
    term2 = _ratio_sum(kq, lq, rq, rq, "within-t term")
    den3 = rp * rpq
    den4 = rqp * rq
    if np.any(den3 < _FLOOR) or np.any(den4 < _FLOOR):
        raise DisjointSupportError(
            "cross-set conditioning row sum underflowed: samples have "
            "disjoint support at this kernel width"
        )
    term3 = float(((kpq * lpq).sum(axis=1) / den3).sum())
    term4 = float(((kqp * lqp).sum(axis=1) / den4).sum())

    log3 = _guarded_log(term3, "cross term (s to t)")
    log4 = _guarded_log(term4, "cross term (t to s)")
    # Grouped so s == t cancels exactly: term3 == term1 and term4 == term2.
    return (math.log(term1) - log3) + (math.log(term2) - log4)


def conditional_cs_shared_x(
    x, y1, y2, width_x: float, width_y: float
) -> float:
    """Conditional CS divergence of p(y1|x) vs. p(y2|x) on one shared x set.

    The single conditioning Gram K weights all three response terms, so the
    estimator reduces to three logs: the two within-response terms minus
    twice a cross term built from the Gram between y2 and y1. Exactly 0 when
    ``y1`` and ``y2`` are identical.

    Note the finite-sample cross term is not perfectly symmetric in (y1, y2):
    averaging the two orderings reproduces ``conditional_cs`` on the shared
    conditioning set exactly, which the test suite asserts.
    """
    x = as_sample_matrix(x, "x")
    y1 = as_sample_matrix(y1, "y1")
    y2 = as_sample_matrix(y2, "y2")
    if not (x.shape[0] == y1.shape[0] == y2.shape[0]):
        raise ValueError("x, y1, y2 must have equal row counts")
    if y1.shape[1] != y2.shape[1]:
        raise ValueError("y1 and y2 must share their column dimension")

    k = gram(x, x, width_x)
    r = k.sum(axis=1)
    den = r * r

    def term(lmat) -> float:
        return float(((k * lmat).sum(axis=1) / den).sum())

    t_first = term(gram(y1, y1, width_y))
    t_second = term(gram(y2, y2, width_y))
    log_cross = _guarded_log(term(gram(y2, y1, width_y)), "cross term")
    return (math.log(t_first) - log_cross) + (math.log(t_second) - log_cross)


def conditional_cs_nested(
    x1, x2, y, width_x: float, width_y: float
) -> float:
    """Conditional CS divergence of p(y|x1) vs. p(y|x1, x2).

    Measures how much the extra conditioning block ``x2`` changes the
    conditional law of ``y``; near 0 when y is independent of x2 given x1,
    and exactly 0 when x2 is constant. The joint-conditioning Gram is the
    entry-wise product of the x1 and x2 Grams (Gaussian product property),
    and the cross term keeps the x1-only Gram in its numerator while mixing
    both row sums in its denominator.
    """
    x1 = as_sample_matrix(x1, "x1")
    x2 = as_sample_matrix(x2, "x2")
    y = as_sample_matrix(y, "y")
    if not (x1.shape[0] == x2.shape[0] == y.shape[0]):
        raise ValueError("x1, x2, y must have equal row counts")

    k1 = gram(x1, x1, width_x)
    k2 = gram(x2, x2, width_x)
    lmat = gram(y, y, width_y)
    return _nested_from_grams(k1, k2, lmat)


def _nested_from_grams(k1, k2, lmat) -> float:
    """Nested-conditioning divergence from precomputed same-set Grams.

    Shared with the causal scorer, which slices these Grams out of larger
    precomputed matrices instead of rebuilding them per window.
    """
    k12 = k1 * k2
    r1 = k1.sum(axis=1)
    r12 = k12.sum(axis=1)
    kl1 = (k1 * lmat).sum(axis=1)

    term1 = float((kl1 / (r1 * r1)).sum())
    term2 = float(((k12 * lmat).sum(axis=1) / (r12 * r12)).sum())
    term3 = float((kl1 / (r1 * r12)).sum())
    log3 = _guarded_log(term3, "cross term")
    return (math.log(term1) - log3) + (math.log(term2) - log3)


def mmd(ys, yt, width: float, statistic: str = "v") -> float:
    """Squared maximum mean discrepancy between two sample sets.

    ``statistic="v"`` is the biased V-statistic (all pairs, >= 0, exactly 0
    on identical sets); ``statistic="u"`` excludes the diagonal within-set
    pairs and is unbiased but can go negative.
    """
    ys = as_sample_matrix(ys, "ys")
    yt = as_sample_matrix(yt, "yt")
    m, n = ys.shape[0], yt.shape[0]
    ks = gram(ys, ys, width)
    kt = gram(yt, yt, width)
    cross = float(gram(ys, yt, width).mean())
    if statistic == "v":
        return float(ks.mean()) + float(kt.mean()) - 2.0 * cross
    if statistic != "u":
        raise ValueError(f"statistic must be 'v' or 'u', got {statistic!r}")
    if m < 2 or n < 2:
        raise ValueError("u-statistic needs at least 2 samples per set")
    off_s = ks.copy()
    np.fill_diagonal(off_s, 0.0)
    off_t = kt.copy()
    np.fill_diagonal(off_t, 0.0)
    return (
        float(off_s.sum()) / (m * (m - 1))
        + float(off_t.sum()) / (n * (n - 1))
        - 2.0 * cross
    )


def conditional_mmd(
    s: PairedDataset, t: PairedDataset, cfg: CmmdConfig = CmmdConfig()
) -> float:
    """Conditional MMD between two paired datasets (trace form).

    tr(Ks Ks~^-1 Ls Ks~^-1) + tr(Kt Kt~^-1 Lt Kt~^-1)
    - 2 tr(Kst Kt~^-1 Lts Ks~^-1), with K~ = K + ridge * I. Evaluated with
    symmetric (Cholesky) solves rather than explicit inverses.
    """
    _check_pair(s, t)
    w = cfg.width
    ks = gram(s.x, s.x, w)
    ls = gram(s.y, s.y, w)
    kt = gram(t.x, t.x, w)
    lt = gram(t.y, t.y, w)
    kst = gram(s.x, t.x, w)
    lts = gram(t.y, s.y, w)

    try:
        fs = scipy.linalg.cho_factor(ks + cfg.ridge * np.eye(s.n))
        ft = scipy.linalg.cho_factor(kt + cfg.ridge * np.eye(t.n))
        ps = scipy.linalg.cho_solve(fs, ks)
        qs = scipy.linalg.cho_solve(fs, ls)
        pt = scipy.linalg.cho_solve(ft, kt)
        qt = scipy.linalg.cho_solve(ft, lt)
        # tr(Kst Kt~^-1 Lts Ks~^-1) = tr((Ks~^-1 Kst) (Kt~^-1 Lts))
        u = scipy.linalg.cho_solve(ft, lts)
        v = scipy.linalg.cho_solve(fs, kst)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError(
            f"conditional MMD solve failed despite ridge {cfg.ridge}: {exc}"
        ) from exc

    within_s = float((qs * ps.T).sum())
    within_t = float((qt * pt.T).sum())
    cross = float((v * u.T).sum())
    return within_s + within_t - 2.0 * cross


def kl_knn(ys, yt, cfg: KnnConfig = KnnConfig()) -> float:
    """KL divergence estimate via k-nearest-neighbor distance ratios.

    (d/M) sum_i log(nu_k(i) / rho_k(i)) + log(N / (M-1)), where rho_k is the
    k-th neighbor distance of ys_i within ``ys`` (itself excluded) and nu_k
    its k-th neighbor distance into ``yt``. Can be negative at finite sample
    sizes. Duplicate points would give zero distances; those are floored at
    a tiny constant and a warning is emitted.
    """
    ys = as_sample_matrix(ys, "ys")
    yt = as_sample_matrix(yt, "yt")
    m, d = ys.shape
    n = yt.shape[0]
    k = cfg.neighbors
    if k >= m or k >= n:
        raise ValueError(f"neighbors={k} must be < min(M, N) = {min(m, n)}")

    rho = cKDTree(ys).query(ys, k=k + 1)[0][:, k]
    nu = cKDTree(yt).query(ys, k=k)[0]
    if k > 1:
        nu = nu[:, k - 1]
    nu = np.atleast_1d(nu)
    if np.any(rho <= 0.0) or np.any(nu <= 0.0):
        warnings.warn(
            "duplicate points produced zero neighbor distances; flooring",
            RuntimeWarning,
            stacklevel=2,
        )
        rho = np.maximum(rho, _KNN_FLOOR)
        nu = np.maximum(nu, _KNN_FLOOR)
    return float(d / m * np.log(nu / rho).sum() + math.log(n / (m - 1)))


def conditional_kl(
    s: PairedDataset, t: PairedDataset, cfg: KnnConfig = KnnConfig()
) -> float:
    """Conditional KL divergence by the chain rule.

    KL(p(x,y) || q(x,y)) - KL(p(x) || q(x)), both terms estimated with
    ``kl_knn`` on the joint rows and on the conditioning rows.
    """
    _check_pair(s, t)
    joint_s = np.hstack([s.x, s.y])
    joint_t = np.hstack([t.x, t.y])
    return kl_knn(joint_s, joint_t, cfg) - kl_knn(s.x, t.x, cfg)


def _symmetric_eig(mat: np.ndarray, name: str):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise ValueError(f"{name} is not symmetric")
    vals, vecs = np.linalg.eigh(mat)
    if np.any(vals <= 0.0):
        raise ValueError(
            f"{name} has non-positive eigenvalue {vals.min()!r}; "
            "stabilise it before calling"
        )
    return vals, vecs


def von_neumann(sigma, rho) -> float:
    """Von Neumann (Bregman log-det-entropy) divergence between SPD matrices.

    tr(sigma log sigma - sigma log rho - sigma + rho), evaluated through
    eigendecompositions. Nonnegative, 0 iff sigma == rho.
    """
    vals_s, vecs_s = _symmetric_eig(sigma, "sigma")
    vals_r, vecs_r = _symmetric_eig(rho, "rho")
    sigma = np.asarray(sigma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    log_rho = (vecs_r * np.log(vals_r)) @ vecs_r.T
    tr_s_log_s = float((vals_s * np.log(vals_s)).sum())
    tr_s_log_r = float((sigma * log_rho).sum())
    return tr_s_log_s - tr_s_log_r - float(np.trace(sigma)) + float(np.trace(rho))


def covariance_summary(ds: PairedDataset, ridge_scale: float = 1e-8) -> CovarianceSummary:
    """Sample covariances of the joint (x, y) rows and of the x rows.

    Each covariance gets ridge_scale * trace / dim added to its diagonal so
    downstream eigendecompositions see strictly positive spectra.
    """
    joint = np.hstack([ds.x, ds.y])

    def stabilised(block: np.ndarray) -> np.ndarray:
        cov = np.atleast_2d(np.cov(block, rowvar=False))
        dim = cov.shape[0]
        return cov + (ridge_scale * np.trace(cov) / dim) * np.eye(dim)

    return CovarianceSummary(
        joint_cov=stabilised(joint), marginal_cov=stabilised(ds.x)
    )


def conditional_von_neumann(s: PairedDataset, t: PairedDataset) -> float:
    """Conditional von Neumann divergence between two paired datasets.

    Decomposes as the joint-covariance divergence minus the x-marginal one.
    Not faithful: it only sees second moments, so distinct conditional laws
    with matching covariances are invisible to it, and finite-sample values
    can be negative.
    """
    _check_pair(s, t)
    cov_s = covariance_summary(s)
    cov_t = covariance_summary(t)
    return von_neumann(cov_s.joint_cov, cov_t.joint_cov) - von_neumann(
        cov_s.marginal_cov, cov_t.marginal_cov
    )
