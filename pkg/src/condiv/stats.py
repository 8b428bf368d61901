"""Permutation testing, synthetic benchmarks, and graph-recovery metrics.

This module wraps the divergence estimators into two evaluation pipelines:

* conditional two-sample testing by permutation, with the five regression
  families used to build power matrices, and
* task-relatedness recovery, where a collection of regression tasks on a
  ring is embedded from its pairwise dissimilarity matrix and compared to
  the ground-truth neighbourhood structure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .divergences import (
    CmmdConfig,
    KnnConfig,
    PairedDataset,
    conditional_cs,
    conditional_kl,
    conditional_mmd,
    conditional_von_neumann,
)
from .kernels import median_bandwidth

Measure = Callable[[PairedDataset, PairedDataset], float]

SIM1_SETS = ("a", "b", "c", "d", "e")


@dataclass(frozen=True)
class PermutationConfig:
    """Settings for a permutation two-sample test."""

    permutations: int = 100
    significance: float = 0.05
    seed: int | None = 0

    def __post_init__(self) -> None:
        if self.permutations < 1:
            raise ValueError("permutations must be a positive integer")
        if not 0.0 < self.significance < 1.0:
            raise ValueError("significance must lie strictly between 0 and 1")


@dataclass
class PowerMatrix:
    """Rejection rates for every ordered pair of generator sets."""

    entries: np.ndarray
    set_ids: tuple[str, ...]
    measure_name: str
    trials: int

    def entry(self, row: str, col: str) -> float:
        return float(self.entries[self.set_ids.index(row), self.set_ids.index(col)])


@dataclass
class TaskCollection:
    """Regression tasks sharing an input space, plus their true weights."""

    tasks: list[PairedDataset]
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.tasks)


class MedianWidthMeasure:
    """Divergence adapter that resolves kernel widths by the median rule.

    Widths are taken over the pooled x rows and pooled y rows of the pair.
    ``freeze`` pins them once so a permutation loop does not pay the O(n^2)
    median scan on every re-split; the pool is identical across splits, so
    freezing changes nothing statistically.
    """

    def __init__(self, fn: Callable[..., float], name: str):
        self.fn = fn
        self.name = name

    def freeze(self, s: PairedDataset, t: PairedDataset) -> Measure:
        width_x = median_bandwidth(np.vstack([s.x, t.x]))
        width_y = median_bandwidth(np.vstack([s.y, t.y]))
        return lambda a, b: self.fn(a, b, width_x, width_y)

    def __call__(self, s: PairedDataset, t: PairedDataset) -> float:
        return self.freeze(s, t)(s, t)


class _JointMedianCmmd:
    """Regularised conditional MMD with a single joint-row median width."""

    name = "cond-mmd"

    def __init__(self, ridge: float = 1e-3):
        self.ridge = ridge

    def freeze(self, s: PairedDataset, t: PairedDataset) -> Measure:
        pooled = np.vstack([
            np.hstack([s.x, s.y]),
            np.hstack([t.x, t.y]),
        ])
        cfg = CmmdConfig(width=median_bandwidth(pooled), ridge=self.ridge)
        return lambda a, b: conditional_mmd(a, b, cfg)

    def __call__(self, s: PairedDataset, t: PairedDataset) -> float:
        return self.freeze(s, t)(s, t)


def resolve_measure(name: str) -> Measure:
    """Map a measure name to a conditional-divergence callable.

    Recognised names: ``cond-cs``, ``cond-mmd``, ``cond-kl`` and ``cond-vn``.
    The kernel-based measures pick their widths from the data via the median
    rule; the kNN and covariance-operator measures need no width.
    """

    if name == "cond-cs":
        return MedianWidthMeasure(conditional_cs, name)
    if name == "cond-mmd":
        return _JointMedianCmmd()
    if name == "cond-kl":
        return lambda s, t: conditional_kl(s, t, KnnConfig())
    if name == "cond-vn":
        return conditional_von_neumann
    raise ValueError(
        f"unknown measure {name!r}; expected one of "
        "'cond-cs', 'cond-mmd', 'cond-kl', 'cond-vn'"
    )


def permutation_test(
    s: PairedDataset,
    t: PairedDataset,
    measure: Measure,
    cfg: PermutationConfig = PermutationConfig(),
) -> tuple[float, bool]:
    """Test whether two paired samples share a conditional law.

    The pooled rows are re-split ``cfg.permutations`` times into groups of
    the original sizes, keeping each (x, y) row intact, and the observed
    statistic is ranked against the permutation statistics:

        p = (1 + #{m : d_0 <= d_m}) / (1 + P)

    Returns ``(p_value, reject)`` with rejection at ``p <= significance``.
    """

    if hasattr(measure, "freeze"):
        measure = measure.freeze(s, t)
    observed = measure(s, t)

    pooled_x = np.vstack([s.x, t.x])
    pooled_y = np.vstack([s.y, t.y])
    total = pooled_x.shape[0]
    m = s.n

    rng = np.random.default_rng(cfg.seed)
    exceed = 0
    for _ in range(cfg.permutations):
        order = rng.permutation(total)
        left, right = order[:m], order[m:]
        stat = measure(
            PairedDataset(pooled_x[left], pooled_y[left]),
            PairedDataset(pooled_x[right], pooled_y[right]),
        )
        if observed <= stat:
            exceed += 1

    p_value = (1.0 + exceed) / (1.0 + cfg.permutations)
    return p_value, p_value <= cfg.significance


def sim1_response(set_id: str, x: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Deterministic response map for the five regression families.

    (a) y = 1 + sum(x) + noise      (b) y = 4 + sum(x) + noise
    (c) as (a) with logistic noise  (d) y = 1 + sum(x^2) + noise
    (e) as (d) with logistic noise
    """

    if set_id in ("a", "c"):
        return 1.0 + x.sum(axis=1) + noise
    if set_id == "b":
        return 4.0 + x.sum(axis=1) + noise
    if set_id in ("d", "e"):
        return 1.0 + (x * x).sum(axis=1) + noise
    raise ValueError(f"unknown set id {set_id!r}; expected one of {SIM1_SETS}")


def sim1_generate(
    set_id: str,
    n: int = 500,
    p: int = 10,
    seed: int | np.random.SeedSequence | None = 0,
) -> PairedDataset:
    """Draw one sample from regression family ``set_id``.

    Inputs are n x p standard normal.  Sets a, b, d use standard normal
    noise; sets c and e use Logistic(1, 1) noise.  The input block is drawn
    before the noise, so two sets that share a seed see identical inputs.
    """

    if set_id not in SIM1_SETS:
        raise ValueError(f"unknown set id {set_id!r}; expected one of {SIM1_SETS}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    if set_id in ("c", "e"):
        noise = rng.logistic(loc=1.0, scale=1.0, size=n)
    else:
        noise = rng.standard_normal(n)
    y = sim1_response(set_id, x, noise)
    return PairedDataset(x, y[:, None])


def power_matrix(
    measure: Measure | str,
    n: int = 500,
    p: int = 10,
    cfg: PermutationConfig = PermutationConfig(),
    trials: int = 10,
    seed: int = 0,
    set_ids: Sequence[str] = SIM1_SETS,
) -> PowerMatrix:
    """Rejection-rate matrix of a permutation test over generator pairs.

    Entry (i, j) is the fraction of ``trials`` independent draws of
    (set_i, set_j) for which the test rejects.  Diagonal entries estimate
    the size of the test, off-diagonal entries its power.  Each trial seeds
    its generators and its permutation stream from (seed, row id, col id,
    trial), so a run over any subset of sets reproduces the corresponding
    entries of the full matrix.
    """

    if isinstance(measure, str):
        measure_name = measure
        measure = resolve_measure(measure)
    else:
        measure_name = getattr(measure, "name", getattr(measure, "__name__", "custom"))
    if trials < 1:
        raise ValueError("trials must be a positive integer")

    ids = tuple(set_ids)
    entries = np.zeros((len(ids), len(ids)))
    for i, row in enumerate(ids):
        for j, col in enumerate(ids):
            rejections = 0
            for trial in range(trials):
                root = np.random.SeedSequence((seed, ord(row), ord(col), trial))
                seed_s, seed_t, seed_perm = root.spawn(3)
                s = sim1_generate(row, n, p, seed=seed_s)
                t = sim1_generate(col, n, p, seed=seed_t)
                trial_cfg = PermutationConfig(
                    permutations=cfg.permutations,
                    significance=cfg.significance,
                    seed=seed_perm,
                )
                _, reject = permutation_test(s, t, measure, trial_cfg)
                rejections += int(reject)
            entries[i, j] = rejections / trials
    return PowerMatrix(entries=entries, set_ids=ids, measure_name=measure_name, trials=trials)


def sim2_generate(
    n_tasks: int = 15,
    d: int = 20,
    n_per_task: int = 200,
    input_dist: str = "gaussian",
    seed: int | np.random.SeedSequence | None = 0,
) -> TaskCollection:
    """Linear regression tasks whose weights walk a planar ring.

    A base weight vector w_1 ~ N(0, I_d) is rotated in its first two
    coordinates by theta_k = 2*pi*(k-1)/(n_tasks-1), so the first and last
    tasks coincide and consecutive tasks are nearest neighbours.  All tasks
    share one input sample (standard normal, or uniform on [0, 1] per
    coordinate) and respond with y = x @ w_k + eps, eps standard normal
    drawn independently per task.  Sharing the conditioning points keeps
    pairwise divergences comparable: what differs between two tasks is then
    only the conditional law, never the luck of separate input draws.
    """

    if n_tasks < 2:
        raise ValueError("n_tasks must be at least 2")
    if input_dist not in ("gaussian", "uniform"):
        raise ValueError("input_dist must be 'gaussian' or 'uniform'")

    rng = np.random.default_rng(seed)
    w1 = rng.standard_normal(d)
    weights = np.tile(w1, (n_tasks, 1))
    for k in range(n_tasks):
        theta = 2.0 * np.pi * k / (n_tasks - 1)
        c, s = np.cos(theta), np.sin(theta)
        weights[k, 0] = c * w1[0] - s * w1[1]
        weights[k, 1] = s * w1[0] + c * w1[1]

    if input_dist == "gaussian":
        x = rng.standard_normal((n_per_task, d))
    else:
        x = rng.uniform(0.0, 1.0, size=(n_per_task, d))
    tasks = []
    for k in range(n_tasks):
        y = x @ weights[k] + rng.standard_normal(n_per_task)
        tasks.append(PairedDataset(x, y[:, None]))
    return TaskCollection(tasks=tasks, weights=weights)


def collection_widths(tc: TaskCollection) -> tuple[float, float]:
    """Median-rule kernel widths over the pooled rows of every task.

    Using one width pair for a whole collection keeps pairwise divergences
    on a common scale, so their ordering reflects the tasks rather than
    per-pair bandwidth fluctuations.
    """

    width_x = median_bandwidth(np.vstack([t.x for t in tc.tasks]))
    width_y = median_bandwidth(np.vstack([t.y for t in tc.tasks]))
    return width_x, width_y


def task_dissimilarity(tc: TaskCollection, measure: Measure) -> np.ndarray:
    """Pairwise divergence matrix over a task collection.

    Both orientations of each pair are evaluated and averaged, so measures
    that are not exactly symmetric still yield a symmetric matrix.  The
    diagonal is zero by construction.
    """

    n = len(tc)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            forward = measure(tc.tasks[i], tc.tasks[j])
            backward = measure(tc.tasks[j], tc.tasks[i])
            out[i, j] = out[j, i] = 0.5 * (forward + backward)
    return out


def classical_mds(D: np.ndarray, dims: int = 2) -> np.ndarray:
    """Embed a dissimilarity matrix by double centering its squared entries.

    Returns an n x dims coordinate array with zero column means.  If fewer
    than ``dims`` eigenvalues of the centered matrix are positive, the
    missing coordinates are zero and a warning is issued.
    """

    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("D must be a square matrix")
    if not np.allclose(D, D.T):
        raise ValueError("D must be symmetric")
    n = D.shape[0]
    if not 1 <= dims <= n:
        raise ValueError("dims must lie in [1, n]")

    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * centering @ (D * D) @ centering
    vals, vecs = np.linalg.eigh(B)
    order = np.argsort(vals)[::-1][:dims]
    vals, vecs = vals[order], vecs[:, order]
    # sign convention: largest-magnitude coordinate positive, so permuting
    # the input rows permutes the output rows instead of flipping axes
    for c in range(vecs.shape[1]):
        pivot = np.argmax(np.abs(vecs[:, c]))
        if vecs[pivot, c] < 0:
            vecs[:, c] = -vecs[:, c]

    positive = vals > 0
    if not positive.all():
        warnings.warn(
            f"only {int(positive.sum())} of {dims} requested dimensions have "
            "positive eigenvalues; the rest are zero-padded",
            RuntimeWarning,
        )
    coords = np.zeros((n, dims))
    coords[:, positive] = vecs[:, positive] * np.sqrt(vals[positive])
    return coords


def knn_graph(D: np.ndarray, k: int = 3) -> np.ndarray:
    """Symmetrised k-nearest-neighbour adjacency from a dissimilarity matrix.

    Each node is linked to its k closest others; the union of directed
    links gives an undirected 0/1 adjacency with a zero diagonal.
    """

    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if not 1 <= k < n:
        raise ValueError("k must lie in [1, n - 1]")
    adj = np.zeros((n, n), dtype=int)
    masked = D.copy()
    np.fill_diagonal(masked, np.inf)
    for i in range(n):
        adj[i, np.argsort(masked[i], kind="stable")[:k]] = 1
    return np.maximum(adj, adj.T)


def ring_adjacency(n: int) -> np.ndarray:
    """Adjacency of an n-cycle: node i linked to i +/- 1 modulo n."""

    if n < 3:
        raise ValueError("a ring needs at least 3 nodes")
    adj = np.zeros((n, n), dtype=int)
    idx = np.arange(n)
    adj[idx, (idx + 1) % n] = 1
    adj[idx, (idx - 1) % n] = 1
    return adj


def graph_laplacian(A: np.ndarray) -> np.ndarray:
    """Unnormalised Laplacian L = diag(degrees) - A."""

    A = np.asarray(A, dtype=float)
    return np.diag(A.sum(axis=1)) - A


def fiedler_vector(L: np.ndarray) -> np.ndarray:
    """Unit eigenvector of the second-smallest Laplacian eigenvalue."""

    vals, vecs = np.linalg.eigh(np.asarray(L, dtype=float))
    return vecs[:, np.argsort(vals)[1]]


def adjacency_error(A_true: np.ndarray, A_est: np.ndarray) -> float:
    """Fraction of off-diagonal entries on which two adjacencies disagree."""

    A_true = np.asarray(A_true)
    A_est = np.asarray(A_est)
    if A_true.shape != A_est.shape or A_true.ndim != 2:
        raise ValueError("adjacency matrices must share a square shape")
    n = A_true.shape[0]
    if A_true.shape[1] != n:
        raise ValueError("adjacency matrices must be square")
    off = ~np.eye(n, dtype=bool)
    return float(np.mean(A_true[off] != A_est[off]))


def geodesic_distance(L_true: np.ndarray, L_est: np.ndarray, x: np.ndarray) -> float:
    """Hyperbolic distance between two graph Laplacians evaluated at x.

        d = arccosh(1 + ||(L_true - L_est) x||^2 ||x||^2
                        / (2 (x' L_true x)(x' L_est x)))

    Both quadratic forms must be positive at x.  The value is zero exactly
    when the Laplacians agree on x, and is invariant to rescaling x.
    """

    L_true = np.asarray(L_true, dtype=float)
    L_est = np.asarray(L_est, dtype=float)
    x = np.asarray(x, dtype=float).ravel()
    p = float(x @ L_true @ x)
    q = float(x @ L_est @ x)
    if p <= 0 or q <= 0:
        raise ValueError("both Laplacian quadratic forms must be positive at x")
    diff = (L_true - L_est) @ x
    num = float(diff @ diff) * float(x @ x)
    return float(np.arccosh(1.0 + num / (2.0 * p * q)))
