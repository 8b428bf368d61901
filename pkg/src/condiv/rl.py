"""Reward-free exploration by divergence-to-go.

The intrinsic signal is a conditional divergence over a transition replay
buffer: each step is scored by how far it moves the buffer's belief about
its own state-action pair (TransitionNovelty), so transitions the buffer
already predicts teach nothing and unfamiliar ones pay out. A kernel
temporal-difference value function bootstraps that signal through the
usual Bellman recursion, so dtg(s, a) estimates the divergence still to
be collected from (s, a) onward, and acting greedily on it steers the
agent toward regions whose dynamics it has not absorbed yet. The
dataset-level complement (buffer_divergence) compares the buffer's newer
half against its older one. No environment reward is read anywhere; goal
flags are only logged.

States and action indices are mapped onto the unit box before they touch a
kernel (see ``state_action_vector``), which is what lets one kernel width
serve every environment.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .divergences import (
    CmmdConfig,
    PairedDataset,
    conditional_cs,
    conditional_kl,
    conditional_mmd,
)
from .kernels import gram

__all__ = [
    "DtgConfig",
    "EpisodeLog",
    "KernelValueFunction",
    "ReplayBuffer",
    "TransitionNovelty",
    "buffer_divergence",
    "dtg_step",
    "log_probabilities",
    "occupancy_grid",
    "run_dtg",
    "run_qlearning",
    "run_random",
    "state_action_vector",
    "visitation_entropy",
]

_DIVERGENCE_KINDS = ("cs", "kl", "mmd")

# Exploration ratio for the reward-based tabular baseline. The sparse goal
# reward gives the greedy arm nothing to work with for a long time, so the
# baseline leans on a much larger epsilon than the divergence-driven runs.
_QLEARNING_EPSILON = 0.5


@dataclass(frozen=True)
class DtgConfig:
    """Knobs for divergence-to-go runs.

    Defaults match the regime the estimator is tuned for: unit-box features
    with kernel width 0.1, a 2000-trio buffer, and a slow kernel
    temporal-difference learning rate. ``dictionary_threshold`` (default:
    half the kernel width) bounds the value-function dictionary by merging
    updates into an existing center when one is that close.
    ``refresh_interval`` trades divergence freshness for speed; set it to 1
    to rebuild the divergence machinery on every step.

    ``divergence_kind`` selects the intrinsic signal: "cs" (default) and
    "mmd" score each visited state-action with the pointwise
    TransitionNovelty, while "kl" has no pointwise form (its estimator
    works through nearest neighbors) and uses the dataset-level divergence
    between the buffer halves instead. ``divergence_widths`` sets the
    (conditioning, response) kernel widths of that signal separately from
    the value-function feature kernel; both default to ``kernel_width``.

    ``novelty_bonus`` adds that much predicted novelty (the belief's
    unfamiliarity score) to each candidate action's greedy score. Without
    it the greedy step ranks untried actions at dtg 0, below any
    backed-up value, so an agent at the edge of known territory prefers
    turning back and the frontier only advances on epsilon luck. The
    default 0 keeps the plain update rule; the exploration pipeline runs
    with a bonus on the scale of a first-visit divergence.
    """

    discount: float = 0.99
    learning_rate: float = 1e-3
    epsilon: float = 0.1
    rollout_steps: int = 1000
    buffer_capacity: int = 2000
    kernel_width: float = 0.1
    divergence_kind: str = "cs"
    dictionary_threshold: float | None = None
    refresh_interval: int = 10
    divergence_widths: tuple[float, float] | None = None
    novelty_bonus: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        if self.learning_rate <= 0:
            raise ValueError(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.rollout_steps < 1:
            raise ValueError(
                f"rollout_steps must be >= 1, got {self.rollout_steps}"
            )
        if self.buffer_capacity < 2:
            raise ValueError(
                f"buffer_capacity must be >= 2, got {self.buffer_capacity}"
            )
        if self.kernel_width <= 0:
            raise ValueError(
                f"kernel_width must be positive, got {self.kernel_width}"
            )
        if self.divergence_kind not in _DIVERGENCE_KINDS:
            raise ValueError(
                f"divergence_kind must be one of {_DIVERGENCE_KINDS}, "
                f"got {self.divergence_kind!r}"
            )
        if self.dictionary_threshold is None:
            object.__setattr__(
                self, "dictionary_threshold", self.kernel_width / 2.0
            )
        elif self.dictionary_threshold < 0:
            raise ValueError(
                f"dictionary_threshold must be >= 0, "
                f"got {self.dictionary_threshold}"
            )
        if self.refresh_interval < 1:
            raise ValueError(
                f"refresh_interval must be >= 1, got {self.refresh_interval}"
            )
        if self.novelty_bonus < 0:
            raise ValueError(
                f"novelty_bonus must be >= 0, got {self.novelty_bonus}"
            )
        if self.divergence_widths is None:
            object.__setattr__(
                self,
                "divergence_widths",
                (self.kernel_width, self.kernel_width),
            )
        else:
            width_x, width_y = self.divergence_widths
            if width_x <= 0 or width_y <= 0:
                raise ValueError(
                    f"divergence_widths must be positive, "
                    f"got {self.divergence_widths}"
                )
            object.__setattr__(
                self, "divergence_widths", (float(width_x), float(width_y))
            )


class ReplayBuffer:
    """FIFO store of (next_state, state, action) transition trios.

    The halves split the entries by insertion age: ``old_half`` holds the
    earlier-inserted floor(n/2) trios, ``new_half`` the rest, so the two
    always partition the buffer. Entries are stored as given; the runners
    push unit-box features so the divergence sees the same scale as the
    value function.
    """

    def __init__(self, capacity: int = 2000):
        if not isinstance(capacity, (int, np.integer)) or capacity < 2:
            raise ValueError(f"capacity must be an integer >= 2, got {capacity!r}")
        self._entries: deque = deque(maxlen=int(capacity))

    @property
    def capacity(self) -> int:
        return self._entries.maxlen

    def __len__(self) -> int:
        return len(self._entries)

    def push(self, next_state, state, action) -> None:
        self._entries.append(
            (
                np.array(next_state, dtype=float, ndmin=1),
                np.array(state, dtype=float, ndmin=1),
                float(action),
            )
        )

    def old_half(self) -> list:
        entries = list(self._entries)
        return entries[: len(entries) // 2]

    def new_half(self) -> list:
        entries = list(self._entries)
        return entries[len(entries) // 2 :]


class KernelValueFunction:
    """Weighted sum of Gaussian bumps over visited state-action vectors.

    dtg(z) = sum_j coeff_j * kappa(z; z_j). An update lands on the nearest
    stored center when one lies within ``threshold`` of the new point and
    adds a fresh center otherwise, so the dictionary stops growing once the
    reachable set is covered and repeat visits accumulate in place.
    """

    def __init__(self, width: float, threshold: float):
        if width <= 0:
            raise ValueError(f"width must be positive, got {width}")
        if threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {threshold}")
        self.width = float(width)
        self.threshold = float(threshold)
        self._centers: np.ndarray | None = None
        self._coeffs: np.ndarray | None = None
        self._count = 0

    def __len__(self) -> int:
        return self._count

    @property
    def centers(self) -> np.ndarray:
        if self._count == 0:
            return np.zeros((0, 0))
        return self._centers[: self._count].copy()

    @property
    def coefficients(self) -> np.ndarray:
        if self._count == 0:
            return np.zeros(0)
        return self._coeffs[: self._count].copy()

    def values(self, points) -> np.ndarray:
        """Evaluate dtg at each row of ``points`` (a single vector works too)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if self._count == 0:
            return np.zeros(pts.shape[0])
        kmat = gram(pts, self._centers[: self._count], self.width)
        return kmat @ self._coeffs[: self._count]

    def value(self, z) -> float:
        return float(self.values(z)[0])

    def update(self, z, amount: float) -> None:
        z = np.asarray(z, dtype=float).ravel()
        if self._count:
            if z.size != self._centers.shape[1]:
                raise ValueError(
                    f"feature size changed: {z.size} vs {self._centers.shape[1]}"
                )
            sq = cdist(z[None, :], self._centers[: self._count], "sqeuclidean")[0]
            nearest = int(np.argmin(sq))
            if float(np.sqrt(sq[nearest])) <= self.threshold:
                self._coeffs[nearest] += amount
                return
        self._append(z, float(amount))

    def _append(self, z: np.ndarray, amount: float) -> None:
        if self._centers is None:
            self._centers = np.zeros((32, z.size))
            self._coeffs = np.zeros(32)
        elif self._count == self._centers.shape[0]:
            self._centers = np.concatenate(
                [self._centers, np.zeros_like(self._centers)]
            )
            self._coeffs = np.concatenate([self._coeffs, np.zeros_like(self._coeffs)])
        self._centers[self._count] = z
        self._coeffs[self._count] = amount
        self._count += 1


@dataclass(frozen=True)
class EpisodeLog:
    """Trajectory record for one exploration run.

    ``states`` holds every state the agent occupied, starting state
    included, so histogram counts over it sum to the trajectory length.
    ``steps_to_goal`` counts environment steps up to the first goal hit and
    is None when the run exhausted its budget. ``bounds`` carries the
    environment's state box so occupancy grids bin consistently across runs.
    """

    steps_to_goal: int | None
    success: bool
    states: np.ndarray
    bounds: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ValueError(
                f"states must be a non-empty 2-D array, got shape {states.shape}"
            )
        object.__setattr__(self, "states", states)
        low = np.asarray(self.bounds[0], dtype=float)
        high = np.asarray(self.bounds[1], dtype=float)
        object.__setattr__(self, "bounds", (low, high))
        if self.success and self.steps_to_goal is None:
            raise ValueError("a successful run must record steps_to_goal")
        if self.steps_to_goal is not None and self.steps_to_goal < 1:
            raise ValueError(f"steps_to_goal must be >= 1, got {self.steps_to_goal}")


def state_action_vector(env, state, action: int) -> np.ndarray:
    """Unit-box feature vector shared by the value function and the divergence.

    State coordinates are rescaled by the environment bounds and the action
    index by the largest index, so every feature lives in [0, 1] and one
    kernel width suits every environment.
    """
    low, high = env.bounds
    scaled = (np.asarray(state, dtype=float) - low) / (high - low)
    return np.append(scaled, action / (len(env.actions) - 1))


def _unit_state(env, state) -> np.ndarray:
    low, high = env.bounds
    return (np.asarray(state, dtype=float) - low) / (high - low)


def _paired(trios) -> PairedDataset:
    x = np.stack([np.concatenate((s, np.atleast_1d(a))) for _, s, a in trios])
    y = np.stack([nxt for nxt, _, _ in trios])
    return PairedDataset(x=x, y=y)


def buffer_divergence(buffer: ReplayBuffer, widths, kind: str = "cs") -> float:
    """Conditional divergence between the buffer's newer and older halves.

    Each trio contributes a conditioning row [state, action] and a response
    row next_state; the result is the divergence of the newer half from the
    older one under the chosen backend. ``widths`` is (conditioning,
    response) for the cs backend and may be a single scalar for both; the
    mmd backend uses the first width only, and the kl backend estimates
    through neighbor distances, ignoring widths (it also needs more than 4
    trios per half for its default neighbor count). A buffer smaller than 4
    cannot populate both halves, so the value is 0 and a RuntimeWarning
    marks the warm-up.
    """
    if kind not in _DIVERGENCE_KINDS:
        raise ValueError(f"kind must be one of {_DIVERGENCE_KINDS}, got {kind!r}")
    try:
        width_x, width_y = widths
    except TypeError:
        width_x = width_y = float(widths)
    if len(buffer) < 4:
        warnings.warn(
            "replay buffer warming up: fewer than 4 trios, divergence is 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0
    new = _paired(buffer.new_half())
    old = _paired(buffer.old_half())
    if kind == "cs":
        return conditional_cs(new, old, width_x, width_y)
    if kind == "kl":
        return conditional_kl(new, old)
    return conditional_mmd(new, old, CmmdConfig(width=width_x))


class TransitionNovelty:
    """Surprise of one observed transition against recorded experience.

    The buffer induces a belief about the outcome of any state-action z by
    kernel regression: recorded outcomes weighted by how close their
    conditioning vectors sit to z. Appending the transition just observed
    gives the updated belief, and the divergence between the two (the
    conditional Cauchy-Schwarz construction collapsed onto a single
    conditioning point, in closed Gram form) says how much that one
    transition taught:

    - a pair whose outcome the buffer already predicts scores ~0 from its
      second visit on, so saturated regions (wall presses included) stop
      earning value no matter when they were learned;
    - a first-visit pair concentrates the updated belief on its observed
      outcome while the prior stays a broad mixture, scoring O(1)-O(100).

    The snapshot is taken at construction and extended in place through
    ``observe``; the runner re-instantiates every ``refresh_interval``
    steps, which also accounts for evictions from a full buffer. Fewer
    than 4 recorded rows score 0 everywhere (warm-up). ``kind`` picks how
    the beliefs are compared: "cs" takes the log ratio, "mmd" the squared
    embedding distance, over identical Gram forms. The k-NN conditional KL
    estimator has no such pointwise collapse, so "kl" is not accepted
    here; the runner keeps that variant on the dataset-level divergence
    between buffer halves instead.

    Each query keeps only the ``max_neighbors`` rows nearest to z in the
    conditioning space. The regression weights of farther rows are
    exponentially negligible, and heavily repeated pairs contribute
    duplicate rows with identical outcomes, so the truncation leaves the
    beliefs essentially unchanged while the per-query cost stays flat.
    """

    def __init__(
        self,
        buffer: ReplayBuffer,
        widths,
        kind: str = "cs",
        max_neighbors: int = 128,
    ):
        if kind not in ("cs", "mmd"):
            raise ValueError(f'kind must be "cs" or "mmd", got {kind!r}')
        if max_neighbors < 2:
            raise ValueError(f"max_neighbors must be >= 2, got {max_neighbors}")
        try:
            width_x, width_y = widths
        except TypeError:
            width_x = width_y = float(widths)
        if width_x <= 0 or width_y <= 0:
            raise ValueError(f"widths must be positive, got {widths!r}")
        self.kind = kind
        self.width_x = float(width_x)
        self.width_y = float(width_y)
        self.max_neighbors = int(max_neighbors)
        self._x: np.ndarray | None = None
        self._y: np.ndarray | None = None
        self._rows = 0
        if len(buffer) > 0:
            data = _paired(buffer.old_half() + buffer.new_half())
            self._rows = len(data.x)
            self._x = np.vstack([data.x, np.empty((64, data.x.shape[1]))])
            self._y = np.vstack([data.y, np.empty((64, data.y.shape[1]))])

    def observe(self, z, next_state) -> None:
        """Fold one recorded (state-action -> outcome) row into the belief.

        Keeps the belief current between the runner's periodic rebuilds,
        so a pair stops scoring as novel from its second visit on rather
        than from the next rebuild.
        """
        z = np.asarray(z, dtype=float).ravel()
        y = np.asarray(next_state, dtype=float).ravel()
        if self._x is None:
            self._x = np.empty((64, z.size))
            self._y = np.empty((64, y.size))
        elif self._rows == len(self._x):
            self._x = np.vstack([self._x, np.empty_like(self._x)])
            self._y = np.vstack([self._y, np.empty_like(self._y)])
        self._x[self._rows] = z
        self._y[self._rows] = y
        self._rows += 1

    def unfamiliarity(self, points) -> np.ndarray:
        """How untouched each state-action row is, in (0, 1].

        The conditioning kernel's mass at a row (its responses to recorded
        experience, summed) is an effective visit count, so the reciprocal
        root 1/sqrt(1 + mass) is 1 for a pair nothing resembles and decays
        like one over the square root of the visit count for repeated
        pairs. This is the belief's own forecast of which actions still
        have novelty to pay out, usable before taking them, and it stays
        monotone over already-visited ground rather than flatlining at 0.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if self._rows == 0:
            return np.ones(len(pts))
        sq = cdist(pts, self._x[: self._rows], "sqeuclidean")
        mass = np.exp(-sq / (2.0 * self.width_x * self.width_x)).sum(axis=1)
        return 1.0 / np.sqrt(1.0 + mass)

    def at(self, z, next_state) -> float:
        """Belief divergence at state-action ``z`` with observed outcome.

        ``next_state`` joins the recorded experience as one more
        (z -> outcome) row and the updated belief is compared against the
        prior one. Non-negative; 0 when the buffer already predicts the
        outcome exactly.
        """
        if self._rows < 4:
            return 0.0
        z = np.asarray(z, dtype=float).ravel()
        y = np.asarray(next_state, dtype=float).ravel()
        logits = -cdist(z[None, :], self._x[: self._rows], "sqeuclidean")[0] / (
            2.0 * self.width_x * self.width_x
        )
        if logits.size > self.max_neighbors:
            keep = np.argpartition(logits, -self.max_neighbors)
            keep = keep[-self.max_neighbors :]
            logits, ys = logits[keep], self._y[keep]
        else:
            ys = self._y[: self._rows]
        # Prior weights shift by their own maximum (softmax is invariant);
        # the updated belief adds the observed row at logit 0, already the
        # maximum since squared distances cannot be negative.
        prior = np.exp(logits - logits.max())
        v = prior / prior.sum()
        wt = np.exp(logits)
        scale = wt.sum() + 1.0
        head, tail = wt / scale, 1.0 / scale
        # Products of two width-w kernel densities integrate to a single
        # Gaussian of width sqrt(2)*w; the shared normalisation cancels in
        # the divergence, so plain exp(-d^2 / (4 w^2)) Grams suffice.
        four_wy2 = 4.0 * self.width_y * self.width_y
        gram = np.exp(-cdist(ys, ys, "sqeuclidean") / four_wy2)
        obs = np.exp(-((ys - y) ** 2).sum(axis=1) / four_wy2)
        gram_v = gram @ v
        pp = head @ gram @ head + 2.0 * tail * (head @ obs) + tail * tail
        qq = v @ gram_v
        pq = head @ gram_v + tail * (obs @ v)
        if self.kind == "mmd":
            return float(pp + qq - 2.0 * pq)
        return float(
            np.log(pp) + np.log(qq) - 2.0 * np.log(max(pq, 1e-300))
        )


def dtg_step(
    vf: KernelValueFunction,
    buffer: ReplayBuffer,
    env,
    state,
    cfg: DtgConfig,
    rng,
    divergence=None,
):
    """Advance one step of divergence-to-go control.

    Order of operations: pick the action (epsilon-random override of the
    greedy argmax; numpy's argmax breaks ties toward the lowest index, and
    a positive ``novelty_bonus`` adds each action's predicted novelty to
    its greedy score), step the environment, record the trio, then apply
    one temporal-difference update

        delta = D + discount * max_a' dtg(next, a') - dtg(state, action)

    where D is the transition-novelty divergence at the visited pair: the
    just-recorded outcome updates the buffer's belief about that pair and D
    compares it with the prior one (see TransitionNovelty). ``divergence``
    may be None (take the divergence fresh right here), a TransitionNovelty
    (the runner's cached snapshot), or a bare number, which is used
    verbatim as D - that last form is the hook tests use to stub the
    signal out. Under
    ``divergence_kind="kl"`` the fresh path falls back to the dataset-level
    buffer divergence, which has no pointwise form. Returns (next_state,
    at_goal, divergence_used); ``vf`` and ``buffer`` mutate in place.
    """
    n_actions = len(env.actions)
    if rng.random() < cfg.epsilon:
        action = int(rng.integers(n_actions))
    else:
        feats = np.stack(
            [state_action_vector(env, state, a) for a in range(n_actions)]
        )
        scores = vf.values(feats)
        if cfg.novelty_bonus > 0 and isinstance(divergence, TransitionNovelty):
            scores = scores + cfg.novelty_bonus * divergence.unfamiliarity(feats)
        action = int(np.argmax(scores))
    next_state, at_goal = env.step(state, action)

    if divergence is None and cfg.divergence_kind != "kl":
        divergence = TransitionNovelty(
            buffer, cfg.divergence_widths, cfg.divergence_kind
        )
    z = state_action_vector(env, state, action)
    next_unit = _unit_state(env, next_state)
    if isinstance(divergence, TransitionNovelty):
        novelty = divergence
        divergence = novelty.at(z, next_unit)
        novelty.observe(z, next_unit)
    buffer.push(next_unit, _unit_state(env, state), action / (n_actions - 1))
    if divergence is None:
        # kl fresh path: aggregate over the buffer including this trio.
        divergence = (
            buffer_divergence(buffer, cfg.divergence_widths, "kl")
            if len(buffer) >= 10
            else 0.0
        )

    next_feats = np.stack(
        [state_action_vector(env, next_state, a) for a in range(n_actions)]
    )
    bootstrap = float(vf.values(next_feats).max())
    delta = divergence + cfg.discount * bootstrap - vf.value(z)
    vf.update(z, cfg.learning_rate * delta)
    return next_state, at_goal, float(divergence)


def run_dtg(env, cfg: DtgConfig, max_steps: int, seed=None) -> EpisodeLog:
    """Explore reward-free until the goal or the step budget runs out.

    A single generator drives both epsilon draws and environment resets, so
    one (seed, config) pair fixes the whole trajectory. The divergence
    machinery is refreshed every ``cfg.refresh_interval`` steps: the
    pointwise kinds rebuild their TransitionNovelty snapshot (extended in
    place by each step in between), "kl" recomputes its dataset-level
    value and reuses it. The environment is re-seated at its start state
    every ``cfg.rollout_steps`` steps while the value function and buffer
    persist across rollouts.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    rng = np.random.default_rng(seed)
    vf = KernelValueFunction(cfg.kernel_width, cfg.dictionary_threshold)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    state = env.reset(rng)
    visited = [np.asarray(state, dtype=float).copy()]
    steps_to_goal = None
    success = False
    cached = None
    for t in range(int(max_steps)):
        if t % cfg.refresh_interval == 0:
            if cfg.divergence_kind == "kl":
                cached = (
                    buffer_divergence(buffer, cfg.divergence_widths, "kl")
                    if len(buffer) >= 10
                    else 0.0
                )
            else:
                cached = TransitionNovelty(
                    buffer, cfg.divergence_widths, cfg.divergence_kind
                )
        state, at_goal, _ = dtg_step(
            vf, buffer, env, state, cfg, rng, divergence=cached
        )
        visited.append(np.asarray(state, dtype=float).copy())
        if at_goal:
            success = True
            steps_to_goal = t + 1
            break
        if (t + 1) % cfg.rollout_steps == 0:
            state = env.reset(rng)
            visited.append(np.asarray(state, dtype=float).copy())
    return EpisodeLog(
        steps_to_goal=steps_to_goal,
        success=success,
        states=np.stack(visited),
        bounds=(env.bounds[0].copy(), env.bounds[1].copy()),
    )


def run_qlearning(env, cfg: DtgConfig, max_steps: int, seed=None) -> EpisodeLog:
    """Sparse-reward tabular baseline on a discretized state grid.

    Reward is 1 on reaching the goal and 0 elsewhere, so the value table
    stays empty until the first success. States collapse to cells: the
    maze's own grid when the environment declares a native ``grid_shape``,
    20 x 20 bins over the first two state coordinates otherwise (a
    reproduction choice for the continuous tasks). Exploration keeps a
    constant epsilon of 0.5; discount and learning rate come from ``cfg``.
    Reset cadence and logging mirror ``run_dtg``.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    rng = np.random.default_rng(seed)
    shape = tuple(getattr(env, "grid_shape", (20, 20)))
    low, high = env.bounds
    span = high[:2] - low[:2]
    qtable = np.zeros(shape + (len(env.actions),))

    def cell(s) -> tuple[int, int]:
        frac = (np.asarray(s, dtype=float)[:2] - low[:2]) / span
        idx = np.minimum((frac * shape).astype(int), np.array(shape) - 1)
        return int(idx[0]), int(idx[1])

    state = env.reset(rng)
    visited = [np.asarray(state, dtype=float).copy()]
    steps_to_goal = None
    success = False
    for t in range(int(max_steps)):
        here = cell(state)
        if rng.random() < _QLEARNING_EPSILON:
            action = int(rng.integers(len(env.actions)))
        else:
            action = int(np.argmax(qtable[here]))
        next_state, at_goal = env.step(state, action)
        reward = 1.0 if at_goal else 0.0
        there = cell(next_state)
        qtable[here + (action,)] += cfg.learning_rate * (
            reward + cfg.discount * qtable[there].max() - qtable[here + (action,)]
        )
        state = next_state
        visited.append(np.asarray(state, dtype=float).copy())
        if at_goal:
            success = True
            steps_to_goal = t + 1
            break
        if (t + 1) % cfg.rollout_steps == 0:
            state = env.reset(rng)
            visited.append(np.asarray(state, dtype=float).copy())
    return EpisodeLog(
        steps_to_goal=steps_to_goal,
        success=success,
        states=np.stack(visited),
        bounds=(env.bounds[0].copy(), env.bounds[1].copy()),
    )


def run_random(env, max_steps: int, seed=None) -> EpisodeLog:
    """Uniform-random baseline: one uninterrupted walk, no resets."""
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    rng = np.random.default_rng(seed)
    state = env.reset(rng)
    visited = [np.asarray(state, dtype=float).copy()]
    steps_to_goal = None
    success = False
    for t in range(int(max_steps)):
        action = int(rng.integers(len(env.actions)))
        state, at_goal = env.step(state, action)
        visited.append(np.asarray(state, dtype=float).copy())
        if at_goal:
            success = True
            steps_to_goal = t + 1
            break
    return EpisodeLog(
        steps_to_goal=steps_to_goal,
        success=success,
        states=np.stack(visited),
        bounds=(env.bounds[0].copy(), env.bounds[1].copy()),
    )


def occupancy_grid(log: EpisodeLog, bins=20) -> np.ndarray:
    """Visit counts over the first two state coordinates.

    ``bins`` is an int or a (bins_x, bins_y) pair. Bin edges span the
    recorded environment bounds, so grids from runs on the same environment
    are directly comparable, and the counts sum to len(log.states).
    """
    states = log.states
    if states.shape[1] < 2:
        raise ValueError(
            f"need at least two state coordinates, got {states.shape[1]}"
        )
    if isinstance(bins, (int, np.integer)):
        bins_x, bins_y = int(bins), int(bins)
    else:
        bins_x, bins_y = (int(b) for b in bins)
    low, high = log.bounds
    counts, _, _ = np.histogram2d(
        states[:, 0],
        states[:, 1],
        bins=(bins_x, bins_y),
        range=((low[0], high[0]), (low[1], high[1])),
    )
    return counts.astype(np.int64)


def log_probabilities(counts) -> np.ndarray:
    """Additively smoothed log-occupancy, log((c+1) / sum(c+1)).

    The +1 keeps never-visited cells finite for plotting.
    """
    smoothed = np.asarray(counts, dtype=float) + 1.0
    return np.log(smoothed / smoothed.sum())


def visitation_entropy(counts) -> float:
    """Shannon entropy (nats) of the empirical visit distribution.

    Empty cells contribute zero; higher means coverage is spread more
    evenly over the grid.
    """
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("counts must contain at least one visit")
    probs = counts[counts > 0] / total
    return float(-(probs * np.log(probs)).sum())
