"""Fictitious play (FP), anticipatory FP (AFP) and naive AFP.

State is kept as integer play counts plus the accumulating payoff vectors

    V(t) = A @ col_counts   (t * A ybar_t, row player's payoffs)
    U(t) = row_counts @ A   (t * xbar_t^T A, column player's payoffs)

so a step costs O(m + n) for the responses plus one row and one column of
``A`` for the update.  ``fp_step`` / ``afp_step`` / ``naive_afp_step`` are
the readable reference; ``run`` drives the compiled kernel in ``_kernel`` and
produces bit-identical traces.
"""
import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .game import MatrixGame
from .generators import GameSpec, SpecError
from .rng import SplitMix64


class Algorithm(enum.Enum):
    FP = "fp"
    AFP = "afp"
    NAIVE_AFP = "naive-afp"


class Mode(enum.Enum):
    SYMMETRIC = "symmetric"
    TWO_PLAYER = "two-player"


_ALGO_CODE = {Algorithm.FP: _kernel.FP, Algorithm.AFP: _kernel.AFP,
              Algorithm.NAIVE_AFP: _kernel.NAIVE}


@dataclass(frozen=True)
class TiebreakRule:
    """How one index is picked from a tied best-response set.

    ``kind`` is ``first``, ``last``, ``order`` or ``random``.  ``order`` holds
    the preference permutation (earliest wins) for ``kind == "order"``; the
    random stream is supplied separately so a rule can be reused across runs.
    """

    kind: str = "first"
    order: tuple = ()

    KINDS = ("first", "last", "order", "random")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown tiebreak {self.kind!r}")
        if self.kind == "order":
            object.__setattr__(self, "order", tuple(int(i) for i in self.order))
            if sorted(self.order) != list(range(len(self.order))):
                raise ValueError(f"order {self.order} is not a permutation of 0..k-1")

    @classmethod
    def first(cls):
        return cls("first")

    @classmethod
    def last(cls):
        return cls("last")

    @classmethod
    def fixed_order(cls, order):
        return cls("order", tuple(order))

    @classmethod
    def random(cls):
        return cls("random")

    @classmethod
    def parse(cls, text):
        """``first``, ``last``, ``random`` or ``order:2,0,1``."""
        kind, _, rest = text.strip().partition(":")
        if kind == "order":
            try:
                return cls.fixed_order(int(v) for v in rest.split(","))
            except ValueError as exc:
                raise SpecError(f"bad tiebreak {text!r}: {exc}") from None
        if rest or kind not in cls.KINDS:
            raise SpecError(f"bad tiebreak {text!r}")
        return cls(kind)

    def __str__(self):
        if self.kind == "order":
            return "order:" + ",".join(map(str, self.order))
        return self.kind

    def ranks(self, k):
        """Preference rank per index for a player with ``k`` strategies."""
        if self.kind != "order":
            return np.arange(k, dtype=np.int64)
        if len(self.order) != k:
            raise ValueError(f"order has {len(self.order)} entries, player has {k}")
        r = np.empty(k, dtype=np.int64)
        r[list(self.order)] = np.arange(k)
        return r


def select(rule, candidates, rng=None):
    """Pick one index from a non-empty candidate collection.

    A random rule draws from ``rng`` only when there are at least two
    candidates, so runs without ties do not depend on the seed.
    """
    cands = sorted(candidates)
    if not cands:
        raise ValueError("empty candidate set")
    if len(cands) == 1 or rule.kind == "first":
        return cands[0]
    if rule.kind == "last":
        return cands[-1]
    if rule.kind == "order":
        pos = {idx: p for p, idx in enumerate(rule.order)}
        return min(cands, key=pos.__getitem__)
    return cands[rng.index(len(cands))]


def _argmax_set(v):
    return np.flatnonzero(v == v.max())


def _argmin_set(v):
    return np.flatnonzero(v == v.min())


@dataclass
class StepRecord:
    t: int
    br: int
    row: int
    col: int
    ant_row: int = -1
    ant_col: int = -1
    wc_row: float = 0.0
    wc_col: float = 0.0
    gap: float = 0.0


@dataclass
class DynamicsState:
    """Mutable state of one FP/AFP/naive-AFP run.

    In symmetric mode a single shared count vector is used for both roles and
    ``row_counts is col_counts``.  ``fp_init`` steps of FP are taken before
    switching to the state's own algorithm.
    """

    game: MatrixGame
    algorithm: Algorithm
    mode: Mode
    tiebreak: TiebreakRule = field(default_factory=TiebreakRule)
    rng: SplitMix64 = field(default_factory=SplitMix64)
    fp_init: int = 0
    t: int = 0
    row_counts: np.ndarray = None
    col_counts: np.ndarray = None
    V: np.ndarray = None
    U: np.ndarray = None
    br: int = 0

    @classmethod
    def start(cls, game, algorithm, mode, tiebreak=None, seed=0, init=(0, 0), fp_init=0):
        """State after the initial pure strategies have been played (t = 1)."""
        mode = Mode(mode)
        algorithm = Algorithm(algorithm)
        if mode is Mode.SYMMETRIC and not game.is_square:
            raise SpecError("symmetric mode needs a square game")
        i, j = init
        if mode is Mode.SYMMETRIC:
            j = i
        if not (0 <= i < game.rows and 0 <= j < game.cols):
            raise SpecError(f"initial indices {init} out of range for {game.shape}")
        a = game.payoffs
        row_counts = np.zeros(game.rows, dtype=np.int64)
        row_counts[i] = 1
        if mode is Mode.SYMMETRIC:
            col_counts = row_counts
        else:
            col_counts = np.zeros(game.cols, dtype=np.int64)
            col_counts[j] = 1
        state = cls(game, algorithm, mode, tiebreak or TiebreakRule(), SplitMix64(seed),
                    int(fp_init), 1, row_counts, col_counts, a[:, j].copy(), a[i, :].copy())
        state.br = _step_cost(state, 1)
        return state

    @property
    def symmetric(self):
        return self.mode is Mode.SYMMETRIC

    def record(self, row, col, ant_row=-1, ant_col=-1):
        t = self.t
        vmax, umin = self.V.max(), self.U.min()
        return StepRecord(t, self.br, row, col, ant_row, ant_col,
                          umin / t, -vmax / t, (vmax - umin) / t)

    def row_average(self):
        return self.row_counts / self.t

    def col_average(self):
        return self.col_counts / self.t


def _step_cost(state, t):
    """Best responses per player spent producing play ``t``."""
    if state.algorithm is Algorithm.FP:
        return 1
    if state.fp_init > 0 and t <= state.fp_init + 1:
        return 1
    return 2


def _phase(state):
    """Algorithm used for the next step (FP during the initialization phase)."""
    if state.t <= state.fp_init:
        return Algorithm.FP
    return state.algorithm


def _apply(state, i, j):
    a = state.game.payoffs
    state.row_counts[i] += 1
    if not state.symmetric:
        state.col_counts[j] += 1
    state.V += a[:, j]
    state.U += a[i, :]
    state.t += 1
    state.br += _step_cost(state, state.t)


def fp_step(state):
    """One simultaneous FP step; mutates ``state`` and returns the new record.

    Row plays from argmax V(t), column from argmin U(t).
    """
    rule, rng = state.tiebreak, state.rng
    i = select(rule, _argmax_set(state.V), rng)
    j = i if state.symmetric else select(rule, _argmin_set(state.U), rng)
    _apply(state, i, j)
    return state.record(i, j)


def afp_step(state):
    """One AFP step.

    Each player first computes the response FP would play, adds it to the
    opponent's anticipated history, and plays the best response to that.
    Anticipated plays are recorded but never accumulated.  Random draws are
    consumed in the order anticipated-row, anticipated-col, final-row,
    final-col.
    """
    rule, rng, a = state.tiebreak, state.rng, state.game.payoffs
    ai = select(rule, _argmax_set(state.V), rng)
    if state.symmetric:
        i = select(rule, _argmax_set(state.V + a[:, ai]), rng)
        _apply(state, i, i)
        return state.record(i, i, ai, ai)
    aj = select(rule, _argmin_set(state.U), rng)
    i = select(rule, _argmax_set(state.V + a[:, aj]), rng)
    j = select(rule, _argmin_set(state.U + a[ai, :]), rng)
    _apply(state, i, j)
    return state.record(i, j, ai, aj)


def naive_afp_step(state):
    """Best response to the opponent's pure anticipated best response."""
    rule, rng, a = state.tiebreak, state.rng, state.game.payoffs
    ai = select(rule, _argmax_set(state.V), rng)
    if state.symmetric:
        i = select(rule, _argmax_set(a[:, ai]), rng)
        _apply(state, i, i)
        return state.record(i, i, ai, ai)
    aj = select(rule, _argmin_set(state.U), rng)
    i = select(rule, _argmax_set(a[:, aj]), rng)
    j = select(rule, _argmin_set(a[ai, :]), rng)
    _apply(state, i, j)
    return state.record(i, j, ai, aj)


_STEP = {Algorithm.FP: fp_step, Algorithm.AFP: afp_step, Algorithm.NAIVE_AFP: naive_afp_step}


def step(state):
    """Advance by the step function of the state's current phase."""
    return _STEP[_phase(state)](state)


TRACE_COLUMNS = ("t", "br_per_player", "row_idx", "col_idx", "ant_row_idx",
                 "ant_col_idx", "wc_row", "wc_col", "gap")


@dataclass
class RunTrace:
    """Per-step metrics of a run; record k describes time ``t = k + 1``."""

    algorithm: Algorithm
    mode: Mode
    shape: tuple
    br: np.ndarray
    row_idx: np.ndarray
    col_idx: np.ndarray
    ant_row: np.ndarray
    ant_col: np.ndarray
    wc_row: np.ndarray
    wc_col: np.ndarray
    gap: np.ndarray
    row_counts: np.ndarray
    col_counts: np.ndarray
    fp_init: int = 0

    def __len__(self):
        return len(self.br)

    @property
    def t(self):
        return np.arange(1, len(self) + 1)

    @property
    def row_strategy(self):
        return self.row_counts / len(self)

    @property
    def col_strategy(self):
        return self.col_counts / len(self)

    @classmethod
    def from_records(cls, state, records):
        recs = list(records)
        get = lambda name, dt: np.array([getattr(r, name) for r in recs], dtype=dt)
        return cls(state.algorithm, state.mode, state.game.shape,
                   get("br", np.int64), get("row", np.int64), get("col", np.int64),
                   get("ant_row", np.int64), get("ant_col", np.int64),
                   get("wc_row", np.float64), get("wc_col", np.float64), get("gap", np.float64),
                   state.row_counts.copy(), state.col_counts.copy(), state.fp_init)

    def at_best_responses(self, r):
        """Index of the last record whose BR count does not exceed ``r``.

        Returns -1 when even the first record cost more than ``r``.
        """
        return int(np.searchsorted(self.br, r, side="right")) - 1

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for k in range(len(self)):
            ant_r = "" if self.ant_row[k] < 0 else int(self.ant_row[k])
            ant_c = "" if self.ant_col[k] < 0 else int(self.ant_col[k])
            w.writerow((k + 1, int(self.br[k]), int(self.row_idx[k]), int(self.col_idx[k]),
                        ant_r, ant_c, repr(float(self.wc_row[k])),
                        repr(float(self.wc_col[k])), repr(float(self.gap[k]))))

    def to_csv(self):
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


@dataclass(frozen=True)
class Steps:
    count: int


@dataclass(frozen=True)
class BestResponses:
    count: int


def steps_for_budget(algorithm, budget, fp_init=0):
    """Number of plays (including the initial one) that a budget allows."""
    algorithm = Algorithm(algorithm)
    if isinstance(budget, Steps):
        if budget.count < 1:
            raise SpecError("need at least one step")
        return budget.count
    r = budget.count
    if r < 1:
        raise SpecError("need at least one best response")
    if algorithm is Algorithm.FP:
        return r
    if fp_init == 0:
        if r % 2:
            raise SpecError(f"{algorithm.value} spends two best responses per step; budget {r} is odd")
        return r // 2
    head = fp_init + 1
    if r <= head:
        return r
    if (r - head) % 2:
        raise SpecError(f"budget {r} does not align with {fp_init} FP initialization steps")
    return head + (r - head) // 2


def simulate(game, algorithm, mode, steps, tiebreak=None, seed=0, init=(0, 0), fp_init=0):
    """Run ``steps`` plays (t = 1..steps) with the compiled kernel."""
    algorithm, mode = Algorithm(algorithm), Mode(mode)
    tiebreak = tiebreak or TiebreakRule()
    if mode is Mode.SYMMETRIC and not game.is_square:
        raise SpecError("symmetric mode needs a square game")
    i, j = init
    if mode is Mode.SYMMETRIC:
        j = i
    if not (0 <= i < game.rows and 0 <= j < game.cols):
        raise SpecError(f"initial indices {init} out of range for {game.shape}")
    if algorithm is Algorithm.FP:
        fp_init = 0
    row_ranks = tiebreak.ranks(game.rows)
    col_ranks = row_ranks if mode is Mode.SYMMETRIC else tiebreak.ranks(game.cols)
    out = _kernel.simulate(
        np.ascontiguousarray(game.payoffs), _ALGO_CODE[algorithm], mode is Mode.SYMMETRIC,
        int(steps), int(fp_init), _kernel.TIEBREAK_CODE[tiebreak.kind],
        row_ranks, col_ranks, np.uint64(int(seed) & (2 ** 64 - 1)), i, j)
    br, row, col, ant_r, ant_c, wc_r, wc_c, gap, rc, cc = out
    return RunTrace(algorithm, mode, game.shape, br, row, col, ant_r, ant_c,
                    wc_r, wc_c, gap, rc, cc, int(fp_init))


def simulate_reference(game, algorithm, mode, steps, tiebreak=None, seed=0, init=(0, 0),
                       fp_init=0):
    """Same contract as ``simulate`` but stepping the pure-numpy functions."""
    state = DynamicsState.start(game, algorithm, mode, tiebreak, seed, init,
                                0 if Algorithm(algorithm) is Algorithm.FP else fp_init)
    i, j = int(np.argmax(state.row_counts)), int(np.argmax(state.col_counts))
    records = [state.record(i, j)]
    for _ in range(steps - 1):
        records.append(step(state))
    return RunTrace.from_records(state, records)


def run(spec, algorithm, mode, budget, tiebreak=None, seed=0, init=(0, 0), fp_init=0,
        scaled=False):
    """Build the game from ``spec`` and run it under a step or BR budget.

    A best-response budget of R gives R plays of FP and R/2 of AFP or naive
    AFP; the result is deterministic in all arguments.
    """
    game = spec.build(scaled=scaled) if isinstance(spec, GameSpec) else spec
    steps = steps_for_budget(algorithm, budget, fp_init)
    return simulate(game, algorithm, mode, steps, tiebreak, seed, init, fp_init)


def replay_accumulators(trace, game):
    """Recompute V(t) for every t from the recorded column plays.

    Returns an array of shape (len(trace), m).  Used as an independent check
    on the accumulators; exact for integer-valued games.
    """
    a = game.payoffs
    cols = trace.col_idx
    return np.cumsum(a[:, cols].T, axis=0)


def eligibility_violations(trace, game):
    """Plays that are not E-eligible: ``V_i(t) < max V(t) - 2a``.

    Checks both players (the column condition is ``U_j(t) <= min U(t) + 2a``)
    and returns a list of ``(t, player, index)`` for every violation, where
    ``t`` is the time of the state the play responded to.
    """
    a = game.payoffs
    bound = 2.0 * game.max_abs
    V = replay_accumulators(trace, game)
    U = np.cumsum(a[trace.row_idx, :], axis=0)
    bad = []
    for k in range(1, len(trace)):
        v, u = V[k - 1], U[k - 1]
        i, j = trace.row_idx[k], trace.col_idx[k]
        if v[i] < v.max() - bound:
            bad.append((k, "row", int(i)))
        if u[j] > u.min() + bound:
            bad.append((k, "col", int(j)))
    return bad


RATE_CONSTANT = 16.0
LOOSE_RATE_CONSTANT = 8.0


@dataclass
class BoundCheck:
    holds: bool
    flagged: list
    worst_ratio: float

    def __bool__(self):
        return self.holds


def theorem1_bound_check(trace, game, constant=RATE_CONSTANT):
    """Check ``gap(t) <= c * a * t^(-1/(m+n-2))`` at every recorded t.

    Times where the gap lies between the 8a and 16a envelopes are reported
    in ``flagged`` without failing the check.  A 1x1 game has zero gap.
    """
    m, n = game.shape
    a = game.max_abs
    gap = trace.gap
    if m + n - 2 == 0:
        return BoundCheck(bool(np.all(gap <= 0.0)), [], 0.0)
    decay = trace.t.astype(np.float64) ** (-1.0 / (m + n - 2))
    envelope = constant * a * decay
    loose = LOOSE_RATE_CONSTANT * a * decay
    ok = gap <= envelope
    flagged = np.flatnonzero(ok & (gap > loose)) + 1
    ratio = float(np.max(gap / envelope)) if a > 0 else 0.0
    return BoundCheck(bool(np.all(ok)), flagged.tolist(), ratio)


@dataclass
class DeltaStats:
    """Max entry of ``Delta_t = t C^n xbar_t`` plus derived change points.

    ``max_delta[k]`` belongs to ``t = k + 1``.  ``tau`` lists times t > 1 at
    which the played index differs from the previous one; ``first_reach``
    maps m to the first t with ``max Delta_t = m``.
    """

    max_delta: np.ndarray
    tau: list
    first_reach: dict

    @property
    def t(self):
        return np.arange(1, len(self.max_delta) + 1)


def delta_stats(trace, game):
    """Replay the integer Delta update from the played indices of a C^n run.

    ``Delta_{t+1}`` is ``Delta_t`` with +1 at ``i+1`` and -1 at ``i-1``
    (mod n) for the index ``i`` played at t+1.  The entry sum is asserted to
    stay zero.
    """
    if trace.mode is not Mode.SYMMETRIC or game.rows != game.cols:
        raise ValueError("delta_stats needs a symmetric run on a square game")
    n = game.rows
    idx = trace.row_idx.astype(np.int64)
    steps = np.arange(len(idx))
    inc = np.zeros((len(idx), n), dtype=np.int64)
    inc[steps, (idx + 1) % n] += 1
    inc[steps, (idx - 1) % n] -= 1
    delta = np.cumsum(inc, axis=0)
    if np.any(delta.sum(axis=1) != 0):
        raise AssertionError("Delta entries no longer sum to zero")
    out = delta.max(axis=1)
    vals, where = np.unique(out, return_index=True)
    first = {int(v): int(k) + 1 for v, k in zip(vals, where)}
    tau = (np.flatnonzero(np.diff(idx) != 0) + 2).tolist()
    return DeltaStats(out, tau, first)


def first_play_times(trace):
    """``tau_k``: first time each index was played, keyed by index."""
    first = {}
    for k, i in enumerate(trace.row_idx):
        first.setdefault(int(i), k + 1)
    return first


def scaled_max_payoff(trace, game):
    """``max A xbar_t`` per t for a symmetric run, from replayed counts."""
    V = replay_accumulators(trace, game)
    return V.max(axis=1) / trace.t


def log_spaced_times(lo, hi, count):
    """Distinct integer times geometrically spaced on [lo, hi]."""
    pts = np.geomspace(lo, hi, count)
    return np.unique(np.round(pts).astype(np.int64))
