"""Exploration testbeds with a small shared interface.

Every environment exposes an ordered finite action set and a functional
``step(state, action_index) -> (next_state, at_goal)``; the caller owns the
state. Only the pendulum keeps internal bookkeeping (its goal must be held
for several consecutive steps), so maze and mountain-car steps are pure
functions of their arguments. States stay inside the rectangular ``bounds``
each environment declares, which is what lets downstream code map them onto
the unit box before kernel evaluation.
"""

from __future__ import annotations

import math
from typing import Protocol

import numpy as np

__all__ = [
    "Environment",
    "MazeEnv",
    "MountainCarEnv",
    "PendulumEnv",
    "maze_env",
    "mountain_car_env",
    "pendulum_env",
]


class Environment(Protocol):
    """Contract shared by the exploration testbeds."""

    state_dim: int
    actions: tuple
    bounds: tuple[np.ndarray, np.ndarray]

    def reset(self, seed=None) -> np.ndarray: ...

    def step(self, state, action: int) -> tuple[np.ndarray, bool]: ...


def _as_state(state, dim: int) -> np.ndarray:
    out = np.asarray(state, dtype=float)
    if out.shape != (dim,):
        raise ValueError(f"state must have shape ({dim},), got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("state must be finite")
    return out


def _check_action(env, action) -> int:
    if not isinstance(action, (int, np.integer)):
        raise ValueError(f"action must be an integer index, got {action!r}")
    if not 0 <= action < len(env.actions):
        raise ValueError(
            f"action index out of range [0, {len(env.actions)}): {action}"
        )
    return int(action)


# Moves as (dcol, drow); row grows downward, so "up" decreases the row.
_MAZE_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))


class MazeEnv:
    """Perfect maze over a width x height grid of cells.

    The layout is carved once by a seeded depth-first search, which yields a
    spanning tree over the cells: every cell is reachable from every other,
    so a start-to-exit path always exists by construction. States are
    (column, row) float pairs; the agent starts at the top-left cell and the
    exit sits at the bottom-right. Moving into a wall (or off the border)
    leaves the state unchanged.
    """

    actions = ("left", "right", "up", "down")

    def __init__(self, width: int = 20, height: int = 20, layout_seed=0):
        if width < 2 or height < 2:
            raise ValueError(
                f"maze needs width, height >= 2, got {width} x {height}"
            )
        self.width = int(width)
        self.height = int(height)
        self.state_dim = 2
        self.bounds = (
            np.zeros(2),
            np.array([self.width - 1, self.height - 1], dtype=float),
        )
        # Native cell resolution, picked up by tabular baselines and
        # occupancy grids so binning recovers the exact cells.
        self.grid_shape = (self.width, self.height)
        self.start = np.zeros(2)
        self.goal = np.array([self.width - 1, self.height - 1], dtype=float)
        self._open_east, self._open_south = self._carve(layout_seed)

    def _carve(self, layout_seed):
        """Depth-first search over cells, knocking down one wall per visit."""
        east = np.zeros((self.height, self.width), dtype=bool)
        south = np.zeros((self.height, self.width), dtype=bool)
        visited = np.zeros((self.height, self.width), dtype=bool)
        rng = np.random.default_rng(layout_seed)
        stack = [(0, 0)]
        visited[0, 0] = True
        while stack:
            col, row = stack[-1]
            options = []
            for dcol, drow in _MAZE_MOVES:
                c, r = col + dcol, row + drow
                if 0 <= c < self.width and 0 <= r < self.height:
                    if not visited[r, c]:
                        options.append((c, r))
            if not options:
                stack.pop()
                continue
            c, r = options[rng.integers(len(options))]
            if c != col:
                east[row, min(col, c)] = True
            else:
                south[min(row, r), col] = True
            visited[r, c] = True
            stack.append((c, r))
        return east, south

    def reset(self, seed=None) -> np.ndarray:
        # The start is fixed; the argument mirrors the shared interface so
        # runners can thread a single generator through every environment.
        return self.start.copy()

    def step(self, state, action: int) -> tuple[np.ndarray, bool]:
        action = _check_action(self, action)
        col, row = self._cell(state)
        dcol, drow = _MAZE_MOVES[action]
        if self._passable(col, row, col + dcol, row + drow):
            col, row = col + dcol, row + drow
        nxt = np.array([col, row], dtype=float)
        return nxt, bool(col == self.width - 1 and row == self.height - 1)

    def _cell(self, state) -> tuple[int, int]:
        state = _as_state(state, 2)
        col, row = int(round(state[0])), int(round(state[1]))
        if (
            abs(state[0] - col) > 1e-9
            or abs(state[1] - row) > 1e-9
            or not (0 <= col < self.width and 0 <= row < self.height)
        ):
            raise ValueError(f"state {state} is not a maze cell")
        return col, row

    def _passable(self, col, row, ncol, nrow) -> bool:
        if not (0 <= ncol < self.width and 0 <= nrow < self.height):
            return False
        if ncol != col:
            return bool(self._open_east[row, min(col, ncol)])
        return bool(self._open_south[min(row, nrow), col])


class MountainCarEnv:
    """Underpowered car in a valley; the goal is the right hilltop.

    Classic tabular-benchmark dynamics and constants (engine force 1e-3,
    gravity scale 2.5e-3, hillside cos(3p)): the thrust is weaker than
    gravity on the slope, so reaching position >= 0.5 requires rocking
    backwards first. The left wall absorbs momentum.
    """

    actions = (-1, 0, 1)

    FORCE = 1e-3
    GRAVITY = 2.5e-3
    GOAL_POSITION = 0.5

    def __init__(self):
        self.state_dim = 2
        self.bounds = (np.array([-1.2, -0.07]), np.array([0.6, 0.07]))

    def reset(self, seed=None) -> np.ndarray:
        # Start pocket near the valley bottom, always at rest.
        rng = np.random.default_rng(seed)
        return np.array([rng.uniform(-0.6, -0.4), 0.0])

    def step(self, state, action: int) -> tuple[np.ndarray, bool]:
        action = _check_action(self, action)
        state = _as_state(state, 2)
        pos, vel = float(state[0]), float(state[1])
        vel += self.FORCE * self.actions[action] - self.GRAVITY * math.cos(3.0 * pos)
        vel = min(max(vel, -0.07), 0.07)
        pos += vel
        if pos < -1.2:
            pos, vel = -1.2, 0.0
        elif pos > 0.6:
            pos = 0.6
        return np.array([pos, vel]), pos >= self.GOAL_POSITION


class PendulumEnv:
    """Damped pendulum driven by a discretized torque in [-1, 1].

    The angle is measured from upright, so hanging rest is theta = pi and
    the goal band is |theta| < 0.1 held for GOAL_HOLD_STEPS consecutive
    steps. That hold counter is the only internal state any environment
    here carries; ``reset`` clears it. Unit mass and length, g = 10,
    semi-implicit Euler at dt = 0.05, and light viscous damping so free
    swings lose energy; angular velocity saturates at +/-8.
    """

    GRAVITY = 10.0
    DAMPING = 0.05
    TIME_STEP = 0.05
    MAX_SPEED = 8.0
    GOAL_ANGLE = 0.1
    GOAL_HOLD_STEPS = 10

    def __init__(self, torque_levels: int = 3):
        if not isinstance(torque_levels, (int, np.integer)) or torque_levels < 2:
            raise ValueError(
                f"torque_levels must be an integer >= 2, got {torque_levels!r}"
            )
        self.actions = tuple(
            float(u) for u in np.linspace(-1.0, 1.0, int(torque_levels))
        )
        self.state_dim = 3
        self.bounds = (
            np.array([-1.0, -1.0, -self.MAX_SPEED]),
            np.array([1.0, 1.0, self.MAX_SPEED]),
        )
        self._hold = 0

    def reset(self, seed=None) -> np.ndarray:
        self._hold = 0
        return np.array([-1.0, 0.0, 0.0])  # cos(pi), sin(pi), at rest

    def step(self, state, action: int) -> tuple[np.ndarray, bool]:
        action = _check_action(self, action)
        state = _as_state(state, 3)
        theta = math.atan2(state[1], state[0])
        omega = float(state[2])
        torque = self.actions[action]
        accel = self.GRAVITY * math.sin(theta) + torque - self.DAMPING * omega
        omega += self.TIME_STEP * accel
        omega = min(max(omega, -self.MAX_SPEED), self.MAX_SPEED)
        theta += self.TIME_STEP * omega
        # Wrap to (-pi, pi] so the goal band test reads directly off theta.
        theta = math.atan2(math.sin(theta), math.cos(theta))
        self._hold = self._hold + 1 if abs(theta) < self.GOAL_ANGLE else 0
        nxt = np.array([math.cos(theta), math.sin(theta), omega])
        return nxt, self._hold >= self.GOAL_HOLD_STEPS


def maze_env(width: int = 20, height: int = 20, layout_seed=0) -> MazeEnv:
    """Seeded perfect maze with fixed start (top-left) and exit (bottom-right)."""
    return MazeEnv(width=width, height=height, layout_seed=layout_seed)


def mountain_car_env() -> MountainCarEnv:
    """Classic underpowered-car task; goal at position >= 0.5."""
    return MountainCarEnv()


def pendulum_env(torque_levels: int = 3) -> PendulumEnv:
    """Swing-up task with ``torque_levels`` evenly spaced torques in [-1, 1]."""
    return PendulumEnv(torque_levels=torque_levels)
