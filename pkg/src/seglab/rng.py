"""Seedable, splittable pseudo-random generator shared by both kernels.

PCG32 (pcg32_xsh_rr_64_32) with splitmix64 seed derivation. The compiled
kernel re-implements exactly these recurrences in C, so a run produces the
same trajectory bit for bit whichever kernel executes it; parity is enforced
by tests against the published reference vectors and against the C twin.

Draw discipline (must stay in lockstep with the compiled kernel): a bounded
draw with bound <= 1 consumes nothing from the stream.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1

_PCG_MULT = 6364136223846793005
_SM_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new state, output)."""
    state = (state + _SM_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def split_seed(master: int, index: int) -> int:
    """Derive the `index`-th child seed from a master seed, O(1) per index."""
    state = (master + (index & MASK64) * _SM_GAMMA) & MASK64
    _, out = splitmix64(state)
    return out


class Pcg32:
    """Minimal PCG32: 64-bit state, 32-bit output, selectable stream."""

    __slots__ = ("state", "inc")

    def __init__(self, seed: int, stream: int = 0):
        self.inc = (((stream & MASK64) << 1) | 1) & MASK64
        self.state = 0
        self.next_u32()
        self.state = (self.state + (seed & MASK64)) & MASK64
        self.next_u32()

    def next_u32(self) -> int:
        old = self.state
        self.state = (old * _PCG_MULT + self.inc) & MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & MASK32
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & MASK32

    def randbelow(self, bound: int) -> int:
        """Uniform integer in [0, bound); bound <= 1 consumes no draw."""
        if bound <= 1:
            return 0
        # rejection below the bias threshold, as in arc4random_uniform
        threshold = (1 << 32) % bound
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % bound

    def coin(self) -> int:
        return self.randbelow(2)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates using the kernel draw discipline."""
        n = len(items)
        for i in range(n - 1):
            j = i + self.randbelow(n - i)
            items[i], items[j] = items[j], items[i]

    def choice(self, items):
        return items[self.randbelow(len(items))]

    def sample_cells(self, n_cells: int, k: int) -> list[int]:
        """First k entries of a partial Fisher-Yates over range(n_cells)."""
        pool = list(range(n_cells))
        for i in range(k):
            j = i + self.randbelow(n_cells - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
