"""Named games and seeded random games, plus the game-spec string grammar.

Grammar: ``cyclic:N``, ``transitive:N``, ``rps``, ``rps-saferock``,
``gauss:MxN:SEED`` and ``file:PATH``.
"""
from dataclasses import dataclass

import numpy as np

from .game import MatrixGame, load_game
from .rng import SplitMix64


class SpecError(ValueError):
    """Malformed game spec or invalid run configuration."""


def cyclic_game(n):
    """``C^n``: strategy i beats i-1 and loses to i+1, cyclically.

    ``C^3`` is Rock Paper Scissors.
    """
    if n < 3:
        raise ValueError("cyclic game needs n >= 3")
    a = np.zeros((n, n))
    for j in range(n):
        a[(j + 1) % n, j] = 1.0
        a[(j - 1) % n, j] = -1.0
    return MatrixGame(a)


def transitive_game(n, scaled=False):
    """``T^n`` with entries ``+-(n - i + 2) / n`` next to the diagonal.

    With 1-based row index i: ``T_{i,i-1} = (n-i+2)/n`` and
    ``T_{i,i+1} = -(n-i+2)/n``.  ``scaled=True`` returns ``n * T^n``, whose
    integer entries keep accumulators exact; best responses are unchanged.
    """
    if n < 3:
        raise ValueError("transitive game needs n >= 3")
    a = np.zeros((n, n))
    for i in range(1, n + 1):
        w = float(n - i + 2)
        if i >= 2:
            a[i - 1, i - 2] = w
        if i <= n - 1:
            a[i - 1, i] = -w
    if not scaled:
        a /= n
    return MatrixGame(a)


def rps():
    return cyclic_game(3)


def rps_saferock():
    """Rock Paper Scissors with a fourth row, SafeRock, for the row player."""
    return MatrixGame([[0.0, -1.0, 1.0],
                       [1.0, 0.0, -1.0],
                       [-1.0, 1.0, 0.0],
                       [0.0, 0.0, 0.99]])


def random_gaussian(m, n, seed):
    """i.i.d. standard normal payoffs, row-major from a SplitMix64 stream."""
    if m < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    draws = SplitMix64(seed).gaussians(m * n)
    return MatrixGame(np.asarray(draws).reshape(m, n))


@dataclass(frozen=True)
class GameSpec:
    kind: str
    n: int = 0
    m: int = 0
    seed: int = 0
    path: str = ""

    KINDS = ("cyclic", "transitive", "rps", "rps-saferock", "gauss", "file")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise SpecError(f"unknown game kind {self.kind!r}")
        if self.kind in ("cyclic", "transitive") and self.n < 3:
            raise SpecError(f"{self.kind} games need n >= 3, got {self.n}")
        if self.kind == "gauss" and (self.m < 1 or self.n < 1):
            raise SpecError("gauss games need positive dimensions")
        if self.kind == "gauss" and not 0 <= self.seed < 2 ** 64:
            raise SpecError("gauss seed must fit in 64 bits")

    def __str__(self):
        if self.kind in ("cyclic", "transitive"):
            return f"{self.kind}:{self.n}"
        if self.kind == "gauss":
            return f"gauss:{self.m}x{self.n}:{self.seed}"
        if self.kind == "file":
            return f"file:{self.path}"
        return self.kind

    def build(self, scaled=False):
        """Materialize the game; ``scaled`` only affects ``transitive``."""
        if self.kind == "cyclic":
            return cyclic_game(self.n)
        if self.kind == "transitive":
            return transitive_game(self.n, scaled=scaled)
        if self.kind == "rps":
            return rps()
        if self.kind == "rps-saferock":
            return rps_saferock()
        if self.kind == "gauss":
            return random_gaussian(self.m, self.n, self.seed)
        return load_game(self.path)


def parse_game_spec(text):
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind in ("cyclic", "transitive"):
            return GameSpec(kind, n=int(rest))
        if kind in ("rps", "rps-saferock") and not rest:
            return GameSpec(kind)
        if kind == "gauss":
            dims, _, seed = rest.partition(":")
            m, _, n = dims.lower().partition("x")
            return GameSpec(kind, m=int(m), n=int(n), seed=int(seed) if seed else 0)
        if kind == "file" and rest:
            return GameSpec(kind, path=rest)
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"bad game spec {text!r}: {exc}") from None
    raise SpecError(f"bad game spec {text!r}")
