import numpy as np
from hypothesis import strategies as st

from tvdlab.simplex import normalize

_unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def simplices(draw, dim=None, min_dim=2, max_dim=16):
    """A valid Simplex; entries may be exactly zero."""
    n = dim if dim is not None else draw(st.integers(min_dim, max_dim))
    raw = draw(st.lists(_unit, min_size=n, max_size=n))
    raw[draw(st.integers(0, n - 1))] += 0.01
    return normalize(raw)


@st.composite
def simplex_pairs(draw, min_dim=2, max_dim=16):
    n = draw(st.integers(min_dim, max_dim))
    return draw(simplices(dim=n)), draw(simplices(dim=n))


@st.composite
def prob_batches(draw, max_len=8, max_vocab=12):
    """(probs, labels) with every row a distribution."""
    length = draw(st.integers(1, max_len))
    vocab = draw(st.integers(2, max_vocab))
    rows = [draw(simplices(dim=vocab)).probs for _ in range(length)]
    labels = draw(st.lists(st.integers(0, vocab - 1), min_size=length, max_size=length))
    return np.array(rows), np.array(labels)
