"""Hypothesis strategies for small coefficient vectors."""

from hypothesis import strategies as st

from greedylab.core import Vec

coeff = st.one_of(st.integers(-3, 3).map(float),
                  st.floats(-3, 3, allow_nan=False, allow_infinity=False).map(lambda v: round(v, 3)))


@st.composite
def vecs(draw, min_dim=1, max_dim=6, dim=None):
    d = dim if dim is not None else draw(st.integers(min_dim, max_dim))
    vals = draw(st.lists(coeff, min_size=d, max_size=d))
    return Vec({i + 1: v for i, v in enumerate(vals) if v != 0.0}, dim=d)


@st.composite
def vec_and_set(draw, max_dim=6):
    x = draw(vecs(max_dim=max_dim))
    A = draw(st.sets(st.integers(1, x.dim)))
    return x, tuple(sorted(A))


distinct_moduli = st.integers(1, 6).flatmap(
    lambda d: st.tuples(
        st.permutations([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).map(lambda p: p[:d]),
        st.lists(st.sampled_from([1.0, -1.0]), min_size=d, max_size=d)))
