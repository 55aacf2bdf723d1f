"""SplitMix64 stream, seed derivation and Box-Muller Gaussians.

Everything random in the package flows through this module so that a seed
reproduces the same numbers on every platform.  The generator is the
standard SplitMix64 (Steele, Lea & Flood 2014); uniform doubles take the top
53 bits of each output.
"""
import math
import zlib

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
TWO_POW_M53 = 2.0 ** -53


def mix64(z):
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Mutable SplitMix64 stream.

    ``state`` is exposed so that callers (and the compiled kernel) can hand
    the exact stream position back and forth.
    """

    __slots__ = ("state",)

    def __init__(self, seed=0):
        self.state = int(seed) & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def uniform(self):
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * TWO_POW_M53

    def index(self, k):
        """Uniform integer in ``range(k)``."""
        if k < 1:
            raise ValueError("k must be positive")
        return int(self.uniform() * k)

    def gaussians(self, count):
        """``count`` standard normal draws via Box-Muller.

        Each pair of uniforms yields the cosine and then the sine variate; an
        odd ``count`` discards the final sine.
        """
        out = []
        while len(out) < count:
            u1 = 1.0 - self.uniform()  # (0, 1], keeps log finite
            u2 = self.uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            theta = 2.0 * math.pi * u2
            out.append(r * math.cos(theta))
            out.append(r * math.sin(theta))
        return out[:count]


def tag_hash(tag):
    return zlib.crc32(str(tag).encode("utf-8"))


def derive_seed(base_seed, replicate, tag=""):
    """Seed for replicate ``replicate`` under stream ``tag``.

    ``base_seed XOR mix64(replicate * GOLDEN_GAMMA + crc32(tag))``.  Seeds of
    existing replicates never change when more replicates are added.
    """
    key = (int(replicate) * GOLDEN_GAMMA + tag_hash(tag)) & MASK64
    return (int(base_seed) ^ mix64(key)) & MASK64
