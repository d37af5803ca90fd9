"""Deterministic random substreams keyed by (master seed, purpose, trial index).

Every stochastic quantity in the simulator (channel coefficients, data bits,
receiver noise) is drawn from a substream derived here, so each Monte Carlo
result is a pure function of the run configuration: trials can execute in any
order, on any number of workers, and still reproduce bit for bit.
"""

import numpy as np

PURPOSES = ("channel", "noise", "data")

# Fixed purpose -> integer tags. These are part of the stream-derivation
# contract: changing them changes every simulated result.
_PURPOSE_TAG = {name: i for i, name in enumerate(PURPOSES)}

_SEED_MASK = (1 << 64) - 1


class StreamKey:
    """Identity of one independent substream.

    Two keys that differ in any field yield statistically independent
    streams; identical keys always yield the identical stream.
    """

    __slots__ = ("master_seed", "purpose", "trial_index")

    def __init__(self, master_seed: int, purpose: str, trial_index: int = 0):
        if purpose not in _PURPOSE_TAG:
            raise ValueError(f"unknown stream purpose {purpose!r}; expected one of {PURPOSES}")
        if trial_index < 0:
            raise ValueError("trial_index must be >= 0")
        self.master_seed = int(master_seed) & _SEED_MASK
        self.purpose = purpose
        self.trial_index = int(trial_index)

    def __repr__(self):
        return f"StreamKey({self.master_seed}, {self.purpose!r}, {self.trial_index})"

    def __eq__(self, other):
        return (
            isinstance(other, StreamKey)
            and self.master_seed == other.master_seed
            and self.purpose == other.purpose
            and self.trial_index == other.trial_index
        )

    def __hash__(self):
        return hash((self.master_seed, self.purpose, self.trial_index))


def derive_stream(key: StreamKey) -> np.random.Generator:
    """Return the PCG64 generator for ``key``.

    The key tuple is hashed through numpy's SeedSequence (stable across numpy
    versions by explicit numpy policy), so derivation is keyed rather than
    sequential: no generator state is shared between trials or purposes.
    """
    ss = np.random.SeedSequence(
        [key.master_seed, _PURPOSE_TAG[key.purpose], key.trial_index]
    )
    return np.random.Generator(np.random.PCG64(ss))


def uniform_words(stream: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. uniform 64-bit words from the stream."""
    return stream.integers(0, 1 << 64, size=n, dtype=np.uint64)


def complex_normal(stream, shape, var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples, E[x]=0, E[|x|^2]=var.

    Uses the Box-Muller transform on the uniform stream: with u1, u2 uniform
    on [0, 1), x = sqrt(-var*log(1-u1)) * exp(2j*pi*u2). Real and imaginary
    parts are each N(0, var/2). Box-Muller has no rejection step, so the
    number of uniforms consumed depends only on ``shape``, which keeps draw
    sequences aligned across detector variants run on the same substream.
    """
    u1 = stream.random(shape)
    u2 = stream.random(shape)
    mag = np.sqrt(-var * np.log1p(-u1))
    return mag * np.exp(2j * np.pi * u2)


class _ZeroStream:
    """Test stub standing in for a Generator: every uniform draw is 0.

    Feeding zeros through the Box-Muller transform makes complex_normal
    return exactly zero, which turns any noise injection into a noise-free
    path without touching the code under test.
    """

    def random(self, size=None):
        if size is None:
            return 0.0
        return np.zeros(size)


def zeros_stream() -> _ZeroStream:
    """An all-zeros uniform stream (noise-free test hook)."""
    return _ZeroStream()
