"""Fixed cross-implementation PRNG: splitmix64 seeding, xoshiro256** stream.

Pinning concrete algorithms (rather than a library default) makes pair
sampling reproducible across languages and library versions. Index draws
use plain modulo; the bias is irrelevant at manifest scales.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class SplitMix64:
    """splitmix64 stream; also the canonical seeder for xoshiro."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def splitmix64(seed: int) -> int:
    """First output of the splitmix64 stream started at ``seed``."""
    return SplitMix64(seed).next_u64()


class Xoshiro256StarStar:
    """xoshiro256** as published; state must not be all zero."""

    def __init__(self, s0: int, s1: int, s2: int, s3: int):
        self.s = [s0 & _MASK64, s1 & _MASK64, s2 & _MASK64, s3 & _MASK64]
        if not any(self.s):
            raise ValueError("xoshiro256** state must not be all zero")

    @classmethod
    def from_seed(cls, seed: int) -> "Xoshiro256StarStar":
        sm = SplitMix64(seed)
        return cls(sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64())

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def below(self, n: int) -> int:
        """Uniform-ish index draw: next_u64 mod n."""
        if n <= 0:
            raise ValueError("modulus must be positive")
        return self.next_u64() % n


def pair_rng(master_seed: int, pair_index: int) -> Xoshiro256StarStar:
    """Per-pair generator: xoshiro seeded by splitmix64 from seed XOR index."""
    return Xoshiro256StarStar.from_seed((master_seed ^ pair_index) & _MASK64)
