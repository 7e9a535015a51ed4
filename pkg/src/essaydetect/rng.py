"""Deterministic 64-bit randomness primitives.

Every seeded operation in the toolkit draws from the splitmix64 stream below,
so artifacts are bit-reproducible across platforms and Python versions.
Stage seeds are derived, never shared: ``derive_seed(global_seed, name)``.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 step seeded at ``x``: golden-ratio increment, then finalizer."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def token_id64(token: str) -> int:
    """Stable 64-bit id for a token string (FNV-1a over UTF-8 bytes)."""
    return fnv1a64(token.encode("utf-8"))


def derive_seed(global_seed: int, name: str) -> int:
    """Per-stage seed: splitmix64(global XOR fnv1a64(stage name))."""
    return splitmix64((global_seed & MASK64) ^ fnv1a64(name.encode("utf-8")))


class SplitMix64:
    """splitmix64 sequence generator.

    Draw order is part of each artifact's reproducibility contract, so
    callers document which draws they make and in what order.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        # modulo bias is ~n/2^64, irrelevant at our scales
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        return lo + self.randbelow(hi - lo + 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates from the highest index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items, n: int) -> list:
        """First n elements of a shuffled copy."""
        pool = list(items)
        self.shuffle(pool)
        return pool[:n]

    def choice(self, items):
        return items[self.randbelow(len(items))]
