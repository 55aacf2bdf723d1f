"""Population view of FP/AFP: opponent samplers, meta-matrices and a
policy-store loop with an exact best-response oracle.

Agents are numbered from 1 as in a population (agent t is trained at
iteration t); distributions are exact ``Fraction`` values.
"""
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import TiebreakRule, select
from .rng import SplitMix64


@dataclass(frozen=True)
class SamplerSpec:
    """``fp``, ``afp`` or ``afp`` preceded by ``fp_init`` FP agents."""

    kind: str = "fp"
    fp_init: int = 0

    def __post_init__(self):
        if self.kind not in ("fp", "afp"):
            raise ValueError(f"unknown sampler {self.kind!r}")
        if self.fp_init < 0:
            raise ValueError("fp_init must be >= 0")

    @classmethod
    def parse(cls, text):
        """``fp``, ``afp`` or ``afp-init:K``."""
        head, _, k = text.partition(":")
        if head == "afp-init" and k:
            return cls("afp", int(k))
        if head in ("fp", "afp") and not k:
            return cls(head)
        raise ValueError(f"bad sampler {text!r}")

    def __str__(self):
        if self.kind == "afp" and self.fp_init:
            return f"afp-init:{self.fp_init}"
        return self.kind

    def kept(self, j):
        """Whether agent ``j`` stays in the opponent pool of later agents.

        Under AFP the agents trained as anticipated responses (every second
        one after the FP prefix) are forgotten.
        """
        if self.kind == "fp":
            return True
        head = self.fp_init + 1
        return j <= head or (j - head) % 2 == 0


def opponent_distribution(spec, t):
    """Distribution over agents ``1..t-1`` faced by learner ``t``.

    FP: uniform over all earlier agents.  AFP: uniform over the kept agents
    before t plus agent t-1 (counted once).
    """
    if t < 2:
        raise ValueError("learner index must be >= 2")
    support = {j for j in range(1, t) if spec.kept(j)}
    support.add(t - 1)
    p = Fraction(1, len(support))
    return {j: p for j in sorted(support)}


@dataclass
class MetaMatrix:
    n: int
    probs: list  # n rows of n Fractions

    def as_array(self):
        return np.array([[float(p) for p in row] for row in self.probs])

    def to_json(self):
        return {"n": self.n, "rows": [[float(p) for p in row] for row in self.probs]}

    def dumps(self):
        return json.dumps(self.to_json())


def meta_matrix(spec, n):
    """Row t holds the opponent distribution of learner t; row 1 is zero."""
    if n < 2:
        raise ValueError("population size must be >= 2")
    rows = [[Fraction(0)] * n for _ in range(n)]
    for t in range(2, n + 1):
        for j, p in opponent_distribution(spec, t).items():
            rows[t - 1][j - 1] = p
    return MetaMatrix(n, rows)


@dataclass
class PopulationStore:
    """Policy store of one player: pure strategies as indices, oldest first.

    ``agents`` carries the 1-based agent number of each stored policy.
    """

    policies: list
    agents: list
    mode: str
    t: int = 1

    def __len__(self):
        return len(self.policies)

    def remove_agent(self, agent):
        k = self.agents.index(agent)
        del self.policies[k]
        del self.agents[k]


@dataclass
class PopulationResult:
    stores: tuple
    trained: tuple          # every trained policy per player, agent order
    history: tuple = field(default=())  # store snapshots (agent lists) per iteration

    @property
    def store(self):
        return self.stores[0]

    @property
    def kept(self):
        """Policies left in the row player's store, oldest first."""
        return list(self.stores[0].policies)


def _mixture_payoffs(a, store, player):
    """Payoff of each pure strategy against the uniform mixture of ``store``.

    Returned unnormalized (a sum over the store, accumulated oldest first)
    since best responses are scale invariant.
    """
    if player == "row":
        acc = a[:, store.policies[0]].copy()
        for j in store.policies[1:]:
            acc += a[:, j]
    else:
        acc = a[store.policies[0], :].copy()
        for i in store.policies[1:]:
            acc += a[i, :]
    return acc


def _best_response(a, store, player, rule, rng):
    v = _mixture_payoffs(a, store, player)
    target = v.max() if player == "row" else v.min()
    return select(rule, np.flatnonzero(v == target), rng)


def population_run(game, mode, iterations, tiebreak=None, seed=0, init=(0, 0),
                   symmetric=True, keep_history=False):
    """FP/AFP as a policy-store loop with an exact best-response oracle.

    Starting from stores holding policy 1, iteration t trains policy t+1 as a
    best response to the uniform mixture of the opponent's store and adds it;
    under AFP, policy t is removed afterwards whenever t is odd.  Both
    players train against the stores as they were at the start of the
    iteration.  With ``symmetric`` (square games only) one store serves both
    roles.
    """
    mode = mode.value if hasattr(mode, "value") else mode
    if mode not in ("fp", "afp"):
        raise ValueError("mode must be 'fp' or 'afp'")
    if symmetric and not game.is_square:
        raise ValueError("symmetric population play needs a square game")
    rule = tiebreak or TiebreakRule()
    rng = SplitMix64(seed)
    a = game.payoffs
    i0, j0 = init
    if symmetric:
        j0 = i0
    row = PopulationStore([i0], [1], mode)
    col = row if symmetric else PopulationStore([j0], [1], mode)
    trained_row, trained_col = [i0], [j0]
    history = []
    for t in range(1, iterations + 1):
        new_row = _best_response(a, col, "row", rule, rng)
        new_col = new_row if symmetric else _best_response(a, row, "col", rule, rng)
        row.policies.append(new_row)
        row.agents.append(t + 1)
        trained_row.append(new_row)
        if not symmetric:
            col.policies.append(new_col)
            col.agents.append(t + 1)
            trained_col.append(new_col)
        if mode == "afp" and t % 2 == 1:
            row.remove_agent(t)
            if not symmetric:
                col.remove_agent(t)
        row.t = col.t = t + 1
        if keep_history:
            history.append(list(row.agents))
    stores = (row,) if symmetric else (row, col)
    trained = (trained_row,) if symmetric else (trained_row, trained_col)
    return PopulationResult(stores, trained, tuple(history))


def kept_sequence(result, player=0):
    """Plays that survive pruning, in training order.

    Under AFP with this store schedule the surviving policies are the even
    agents, which are the actual (non-anticipated) plays; the final agent may
    still be an anticipated one and is then excluded.
    """
    trained = result.trained[player]
    store = result.stores[player]
    if store.mode == "fp":
        return list(trained)
    n_agents = len(trained)
    return [trained[k - 1] for k in range(2, n_agents + 1, 2)]


def sampler_run(game, spec, n, tiebreak=None, seed=0, init=0):
    """Symmetric population of ``n`` agents trained through a sampler.

    Agent 1 plays ``init``; agent t >= 2 is the exact best response to its
    opponent distribution.  Returns the pure strategy of every agent.
    """
    if not game.is_square:
        raise ValueError("sampler runs need a square game")
    rule = tiebreak or TiebreakRule()
    rng = SplitMix64(seed)
    a = game.payoffs
    agents = [init]
    for t in range(2, n + 1):
        support = list(opponent_distribution(spec, t))
        store = PopulationStore([agents[j - 1] for j in support], support, str(spec))
        agents.append(_best_response(a, store, "row", rule, rng))
    return agents


def sampler_plays(spec, agents):
    """Agents that count as plays (the kept ones), in order."""
    return [p for j, p in enumerate(agents, start=1) if spec.kept(j)]
