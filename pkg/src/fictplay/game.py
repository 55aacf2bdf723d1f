"""Matrix games, strategies, best responses and the exact game value.

The row player maximizes ``x^T A y`` and the column player minimizes it.
Indices are 0-based throughout the package.
"""
import enum
import json
from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
STRATEGY_TOL = 1e-12


class Player(enum.Enum):
    ROW = "row"
    COL = "col"


@dataclass(frozen=True, eq=False)
class MatrixGame:
    """Dense payoff matrix for the row player.

    The array is copied on construction and marked read-only.
    """

    payoffs: np.ndarray

    def __post_init__(self):
        a = np.array(self.payoffs, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"payoffs must be a non-empty 2-d array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("payoffs must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "payoffs", a)

    @property
    def rows(self):
        return self.payoffs.shape[0]

    @property
    def cols(self):
        return self.payoffs.shape[1]

    @property
    def shape(self):
        return self.payoffs.shape

    @property
    def max_abs(self):
        """``a = max |A_ij|``, the per-step payoff bound."""
        return float(np.max(np.abs(self.payoffs)))

    @property
    def is_square(self):
        return self.rows == self.cols

    def __eq__(self, other):
        if not isinstance(other, MatrixGame):
            return NotImplemented
        return np.array_equal(self.payoffs, other.payoffs)

    def __hash__(self):
        return hash((self.shape, self.payoffs.tobytes()))

    def to_json(self):
        return {"rows": self.rows, "cols": self.cols,
                "payoffs": [float(v) for v in self.payoffs.ravel()]}

    @classmethod
    def from_json(cls, data):
        try:
            m, n = int(data["rows"]), int(data["cols"])
            flat = list(data["payoffs"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed game document: {exc}") from None
        if m < 1 or n < 1 or len(flat) != m * n:
            raise ValueError(f"expected {m}x{n}={m * n} payoffs, got {len(flat)}")
        return cls(np.asarray(flat, dtype=np.float64).reshape(m, n))


def load_game(path):
    with open(path) as fh:
        return MatrixGame.from_json(json.load(fh))


def dump_game(game, fh):
    json.dump(game.to_json(), fh)


def as_strategy(probs, size=None):
    """Validate a probability vector and return it as a float array."""
    s = np.asarray(probs, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("strategy must be a non-empty vector")
    if size is not None and s.size != size:
        raise ValueError(f"strategy has length {s.size}, expected {size}")
    if np.any(s < 0) or abs(s.sum() - 1.0) > STRATEGY_TOL:
        raise ValueError("strategy must be nonnegative and sum to 1")
    return s


def pure(k, i):
    e = np.zeros(k)
    e[i] = 1.0
    return e


def uniform(k):
    return np.full(k, 1.0 / k)


def _check_len(vec, size, what):
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (size,):
        raise ValueError(f"{what} has shape {vec.shape}, expected ({size},)")
    return vec


def row_payoff_vector(game, y):
    """``A y``: the row player's payoff for each pure row against ``y``."""
    return game.payoffs @ _check_len(y, game.cols, "column strategy")


def col_payoff_vector(game, x):
    """``x^T A``: the payoff conceded by each pure column against ``x``."""
    return _check_len(x, game.rows, "row strategy") @ game.payoffs


def best_response_set(game, player, opponent):
    """All pure best responses of ``player`` to the opponent's strategy.

    Membership is decided by exact float comparison with the optimum; breaking
    ties is the caller's responsibility.
    """
    if player is Player.ROW:
        payoff = row_payoff_vector(game, opponent)
        return frozenset(np.flatnonzero(payoff == payoff.max()).tolist())
    payoff = col_payoff_vector(game, opponent)
    return frozenset(np.flatnonzero(payoff == payoff.min()).tolist())


def worst_case_payoff(game, player, s):
    """Guaranteed payoff of ``s``; higher is better for both players.

    For the column player this is the negated payoff the row player can
    extract, so it is comparable with ``-v*``.
    """
    if player is Player.ROW:
        return float(col_payoff_vector(game, s).min())
    return -float(row_payoff_vector(game, s).max())


def duality_gap(game, x, y):
    return float(row_payoff_vector(game, y).max() - col_payoff_vector(game, x).min())


def exploitability(game, player, s, v_star):
    if player is Player.ROW:
        return v_star - worst_case_payoff(game, Player.ROW, s)
    return float(row_payoff_vector(game, s).max()) - v_star


@dataclass(frozen=True)
class ValueResult:
    value: float
    row_nash: np.ndarray
    col_nash: np.ndarray


PURE_TOL = 1e-12


def exact_value(game):
    """Value and a Nash pair via a dense simplex with Bland's rule.

    Payoffs are shifted by ``a + 1`` so every entry is at least 1.  The column
    player's LP ``max 1^T w  s.t.  A' w <= 1, w >= 0`` starts feasible at the
    slack basis; the optimal row strategy is read off the slack reduced costs
    (the dual).  ``v' = 1 / sum(w)``.

    When a pure strategy already guarantees the value (within ``PURE_TOL``)
    the first such one is reported instead of the LP vertex, so games with
    a pure optimal strategy get a canonical answer.
    """
    shift = game.max_abs + 1.0
    a = game.payoffs + shift
    w, u = _simplex_max_ones(a)
    total = w.sum()
    v_shifted = 1.0 / total
    y = np.clip(w * v_shifted, 0.0, None)
    x = np.clip(u * v_shifted, 0.0, None)
    x /= x.sum()
    y /= y.sum()
    value = float(v_shifted - shift)
    p = game.payoffs
    secure_rows = np.flatnonzero(p.min(axis=1) >= value - PURE_TOL)
    if secure_rows.size:
        x = np.zeros(game.rows)
        x[secure_rows[0]] = 1.0
    secure_cols = np.flatnonzero(p.max(axis=0) <= value + PURE_TOL)
    if secure_cols.size:
        y = np.zeros(game.cols)
        y[secure_cols[0]] = 1.0
    return ValueResult(value=value, row_nash=x, col_nash=y)


def _simplex_max_ones(a):
    """Solve ``max 1^T w s.t. a w <= 1, w >= 0`` for a positive matrix ``a``.

    Returns the primal optimum ``w`` and the dual optimum ``u`` (one entry per
    row of ``a``).
    """
    m, n = a.shape
    # columns: w_0..w_{n-1}, s_0..s_{m-1}, rhs; last row holds reduced costs
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = 1.0
    tab[m, :n] = -1.0
    basis = list(range(n, n + m))

    while True:
        entering = next((j for j in range(n + m) if tab[m, j] < -PIVOT_TOL), None)
        if entering is None:
            break
        col = tab[:m, entering]
        best = None
        for i in range(m):
            if col[i] > PIVOT_TOL:
                key = (tab[i, -1] / col[i], basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            # a' > 0 bounds every w, so this cannot happen for a valid game
            raise ArithmeticError("LP unbounded")
        r = best[1]
        tab[r] /= tab[r, entering]
        for i in range(m + 1):
            if i != r and tab[i, entering] != 0.0:
                tab[i] -= tab[i, entering] * tab[r]
        basis[r] = entering

    w = np.zeros(n)
    for i, b in enumerate(basis):
        if b < n:
            w[b] = tab[i, -1]
    u = tab[m, n:n + m].copy()
    return w, u
