import numpy as np
import pytest

from jncld import ParityCheckMatrix, construct_regular, derive_encoder

# standard (7,4) Hamming code: column j+1 is the binary expansion of j+1
HAMMING_H = np.array(
    [
        [1, 0, 1, 0, 1, 0, 1],
        [0, 1, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ],
    dtype=np.uint8,
)


@pytest.fixture(scope="session")
def hamming():
    return ParityCheckMatrix.from_dense(HAMMING_H)


@pytest.fixture(scope="session")
def hamming_encoder(hamming):
    return derive_encoder(hamming)


@pytest.fixture(scope="session")
def hamming_codewords(hamming):
    """All 16 codewords, found by exhaustive search over GF(2)^7."""
    words = []
    for v in range(128):
        bits = np.array([(v >> i) & 1 for i in range(7)], dtype=np.uint8)
        if not (HAMMING_H @ bits % 2).any():
            words.append(bits)
    out = np.stack(words)
    assert out.shape == (16, 7)
    return out


@pytest.fixture(scope="session")
def small_code():
    """A compact regular code for fast end-to-end simulation tests."""
    pcm = construct_regular(120, 3, 6, seed=5)
    return pcm, derive_encoder(pcm)
