"""Non-learned selection baselines over the 5N candidate set.

A policy returns the index of a feasible unit, or None when nothing it is
allowed to pick is feasible (the episode then terminates early). All
policies are deterministic given the state and, where applicable, the rng.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .env import (
    EnvConfig,
    EnvState,
    PreferenceVector,
    VectorReward,
    feasible_actions,
    scalarize,
    step,
)
from .items import Face


class SelectionPolicy:
    name: str = "base"
    face_mask: Optional[frozenset[Face]] = None

    def select(self, cfg: EnvConfig, state: EnvState, rng: np.random.Generator) -> Optional[int]:
        raise NotImplementedError

    def _allowed(self, state: EnvState) -> list[int]:
        return feasible_actions(state, faces=self.face_mask)


class TopFacePolicy(SelectionPolicy):
    """Top face of the first feasible item; cannot reorient, so it terminates
    when no top-face placement exists."""

    name = "top-face"
    face_mask = frozenset({Face.TOP})

    def select(self, cfg, state, rng):
        allowed = self._allowed(state)
        return allowed[0] if allowed else None


class TimeGreedyPolicy(SelectionPolicy):
    name = "time-greedy"

    def __init__(self, face_mask: Optional[frozenset[Face]] = None):
        self.face_mask = face_mask

    def select(self, cfg, state, rng):
        allowed = self._allowed(state)
        if not allowed:
            return None
        return min(allowed, key=lambda i: (state.units[i].time_cost, i))


class SpaceGreedyPolicy(SelectionPolicy):
    """One-step space heuristic: lowest resulting stack height, then least
    volume wasted beneath the box, then cheapest grasp."""

    name = "space-greedy"

    def __init__(self, face_mask: Optional[frozenset[Face]] = None):
        self.face_mask = face_mask

    def select(self, cfg, state, rng):
        allowed = self._allowed(state)
        if not allowed:
            return None
        hm = state.bin.height_map
        current_max = int(hm.max())

        def score(i):
            u = state.units[i]
            dx, dy, dz = u.placed_dims
            x, y, z = u.flb
            new_max = max(current_max, z + dz)
            wasted = int((z - hm[y : y + dy, x : x + dx]).sum())
            return (new_max, wasted, u.time_cost, i)

        return min(allowed, key=score)


class ScalarGreedyPolicy(SelectionPolicy):
    """Argmax of the immediate scalarized reward under the episode preference."""

    name = "scalar-greedy"

    def __init__(self, face_mask: Optional[frozenset[Face]] = None):
        self.face_mask = face_mask

    def select(self, cfg, state, rng):
        allowed = self._allowed(state)
        if not allowed:
            return None
        omega = state.omega

        def value(i):
            u = state.units[i]
            dx, dy, dz = u.eff_dims
            r = VectorReward(dx * dy * dz / cfg.bin_dims.volume, -u.time_cost / cfg.t_ref)
            return scalarize(omega, r)

        return max(allowed, key=lambda i: (value(i), -i))


class RandomPolicy(SelectionPolicy):
    name = "random"

    def select(self, cfg, state, rng):
        allowed = self._allowed(state)
        if not allowed:
            return None
        return int(rng.choice(allowed))


# --- MCTS ---


@dataclass
class MctsConfig:
    simulations: int = 50
    uct_c: float = math.sqrt(2)
    rollout_depth: int = 5
    rollout: str = "scalar_greedy"  # or "random"

    def __post_init__(self):
        if self.simulations < 1 or self.uct_c <= 0:
            raise ValueError("simulations >= 1 and uct_c > 0 required")


class _Node:
    __slots__ = ("state", "prefix", "untried", "children", "visits", "value_sum")

    def __init__(self, state: EnvState, prefix: float, rng: np.random.Generator):
        self.state = state
        self.prefix = prefix  # scalarized return accumulated from the root
        self.untried = feasible_actions(state)
        rng.shuffle(self.untried)
        self.children: dict[int, _Node] = {}
        self.visits = 0
        self.value_sum = 0.0

    def mean(self) -> float:
        return self.value_sum / self.visits if self.visits else 0.0


def _rollout_return(
    cfg: EnvConfig,
    state: EnvState,
    omega: PreferenceVector,
    depth: int,
    kind: str,
    rng: np.random.Generator,
) -> float:
    policy = ScalarGreedyPolicy() if kind == "scalar_greedy" else RandomPolicy()
    total = 0.0
    for _ in range(depth):
        if state.done:
            break
        action = policy.select(cfg, state, rng)
        if action is None:
            break
        state, r, _ = step(cfg, state, action)
        total += scalarize(omega, r)
    return total


def mcts_select(
    cfg: EnvConfig,
    state: EnvState,
    omega: PreferenceVector,
    mcfg: MctsConfig,
    rng: np.random.Generator,
) -> Optional[int]:
    """UCT over item-face actions; simulations replay the seeded stream held
    by the copied state, so lookahead sees the true upcoming items."""
    root_actions = feasible_actions(state)
    if not root_actions:
        return None
    if len(root_actions) == 1:
        return root_actions[0]

    root = _Node(state, prefix=0.0, rng=rng)
    for _ in range(mcfg.simulations):
        node = root
        path = [node]
        # selection
        while not node.untried and node.children:
            log_n = math.log(max(node.visits, 1))
            node = max(
                node.children.values(),
                key=lambda ch: ch.mean() + mcfg.uct_c * math.sqrt(log_n / ch.visits),
            )
            path.append(node)
        # expansion
        if node.untried and not node.state.done:
            action = node.untried.pop()
            child_state, r, _ = step(cfg, node.state, action)
            child = _Node(child_state, prefix=node.prefix + scalarize(omega, r), rng=rng)
            node.children[action] = child
            node = child
            path.append(node)
        # rollout and backup
        total = node.prefix + _rollout_return(
            cfg, node.state, omega, mcfg.rollout_depth, mcfg.rollout, rng
        )
        for n in path:
            n.visits += 1
            n.value_sum += total

    best = max(root.children.items(), key=lambda kv: (kv[1].visits, kv[1].mean(), -kv[0]))
    return best[0]


class MctsPolicy(SelectionPolicy):
    name = "mcts"

    def __init__(self, mcfg: Optional[MctsConfig] = None):
        self.mcfg = mcfg or MctsConfig()

    def select(self, cfg, state, rng):
        return mcts_select(cfg, state, state.omega, self.mcfg, rng)


def make_policy(name: str, **kwargs) -> SelectionPolicy:
    registry = {
        "top-face": TopFacePolicy,
        "space-greedy": SpaceGreedyPolicy,
        "time-greedy": TimeGreedyPolicy,
        "scalar-greedy": ScalarGreedyPolicy,
        "random": RandomPolicy,
        "mcts": MctsPolicy,
    }
    try:
        cls = registry[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; known: {sorted(registry)}") from None
    if name == "mcts":
        mcts_keys = {k: kwargs.pop(k) for k in list(kwargs) if k in MctsConfig.__annotations__}
        return cls(MctsConfig(**mcts_keys), **kwargs)
    return cls(**kwargs)
