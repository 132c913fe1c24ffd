import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from spectopo.complex import SurfaceComplex


@st.composite
def random_complexes(draw, max_vertices=9, max_edges=40):
    """Small complexes: some triangles, some extra edges, maybe isolated vertices."""
    n = draw(st.integers(2, max_vertices))
    pairs = list(itertools.combinations(range(n), 2))
    triples = list(itertools.combinations(range(n), 3))
    faces = draw(st.lists(st.sampled_from(triples), max_size=min(6, len(triples)), unique=True)) if triples else []
    extra = draw(st.lists(st.sampled_from(pairs), max_size=min(12, len(pairs)), unique=True))
    cx = SurfaceComplex.from_simplices(n, extra, faces)
    if cx.n_edges > max_edges:
        cx = SurfaceComplex.from_simplices(n, extra[: max_edges // 2])
    return cx


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def hollow_triangle():
    return SurfaceComplex.from_simplices(3, [(0, 1), (1, 2), (0, 2)])


def filled_triangle():
    return SurfaceComplex.from_simplices(3, faces=[(0, 1, 2)])
