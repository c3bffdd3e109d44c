"""Counter-based random streams.

Every stochastic routine draws from ``generator(seed, stream, index)``: a
Philox generator keyed on ``(seed, stream)`` whose counter is advanced by
``index * 2**64`` blocks.  Chunks with different ``index`` never overlap, so
Monte Carlo batches can run in any order and still reproduce bit-for-bit.
"""

import numpy as np

_MASK = (1 << 64) - 1

# named streams keep unrelated consumers from sharing randomness
STREAM_FIELD = 1
STREAM_KERNEL = 2
STREAM_OU = 3
STREAM_TARGET = 4
STREAM_CN = 5


def generator(seed: int, stream: int = 0, index: int = 0) -> np.random.Generator:
    bitgen = np.random.Philox(key=[seed & _MASK, stream & _MASK])
    if index:
        bitgen = bitgen.advance(index << 64)
    return np.random.Generator(bitgen)


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Centered circular complex Gaussians with ``E|Z|^2 = 1``."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) * np.sqrt(0.5)
