import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_minimal
from roundwalk.lattice import (
    Lattice,
    LatticeError,
    enumerate_short,
    lll,
    minimal_vectors,
    random_unimodular,
    reduce_basis,
    well_rounded,
)
from roundwalk.lattice.core import is_lll_reduced

HEX = Lattice((2 / math.sqrt(3)) ** 0.5 * np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]]))


def _same_lattice(a: Lattice, b: Lattice) -> bool:
    T = np.linalg.solve(a.basis, b.basis)
    R = np.rint(T)
    return np.allclose(T, R, atol=1e-8) and round(abs(np.linalg.det(R))) == 1


def test_rejects_singular_basis():
    with pytest.raises(LatticeError, match="degenerate basis"):
        Lattice(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_rejects_non_unimodular():
    with pytest.raises(LatticeError):
        Lattice(np.diag([2.0, 2.0]))


def test_json_round_trip():
    lat = random_unimodular(3, np.random.default_rng(0))
    back = Lattice.from_json(lat.to_json())
    assert np.array_equal(back.basis, lat.basis)
    assert lat.to_dict()["n"] == 3


def test_reduce_identity():
    out = reduce_basis(Lattice(np.eye(2)))
    assert np.allclose(np.abs(out.basis), np.eye(2))


def test_reduce_one_size_step():
    out = reduce_basis(Lattice(np.array([[1.0, 0.0], [100.0, 1.0]])))
    cols = sorted(tuple(np.abs(c)) for c in out.basis.T)
    assert np.allclose(cols, [(0.0, 1.0), (1.0, 0.0)])


def test_reduce_random_5d_same_lattice():
    rng = np.random.default_rng(11)
    for _ in range(10):
        lat = random_unimodular(5, rng)
        out = reduce_basis(lat)
        assert _same_lattice(lat, out)
        assert is_lll_reduced(out.basis)


def test_lll_returns_unimodular_transform():
    rng = np.random.default_rng(3)
    B = random_unimodular(4, rng).basis
    red, U = lll(B)
    assert np.allclose(B @ U, red)
    assert round(abs(np.linalg.det(U))) == 1


def test_minimal_vectors_z2():
    M = minimal_vectors(Lattice(np.eye(2)))
    assert M.m == pytest.approx(1.0)
    assert len(M) == 2 and M.rank == 2


def test_minimal_vectors_diag():
    M = minimal_vectors(Lattice(np.diag([0.5, 2.0])))
    assert M.m == pytest.approx(0.25)
    assert [list(v) for v in M.vectors] == [[1, 0]]
    assert M.rank == 1


def test_minimal_vectors_hexagonal():
    M = minimal_vectors(HEX)
    assert M.m == pytest.approx(2 / math.sqrt(3), rel=1e-12)
    assert len(M) == 3 and M.rank == 2
    # brute force over |c_i| <= 3
    coeffs = np.array([c for c in np.ndindex(7, 7)]) - 3
    norms = np.array([HEX.sqnorm(c) for c in coeffs if np.any(c)])
    assert norms.min() == pytest.approx(M.m, rel=1e-12)
    assert np.sum(np.abs(norms - M.m) < 1e-9) == 6


def test_minimal_vectors_have_equal_norm():
    lat = random_unimodular(4, np.random.default_rng(8))
    M = minimal_vectors(lat)
    for v in M.vectors:
        assert lat.sqnorm(v) == pytest.approx(M.m, rel=1e-9)


def test_well_rounded_examples():
    assert well_rounded(Lattice(np.eye(4)))
    assert not well_rounded(Lattice(np.diag([0.5, 2.0])))
    assert well_rounded(HEX)


def _box_oracle(lat: Lattice, bound: int = 10):
    """Literal brute force over |c_i| <= bound after reduction."""
    red = reduce_basis(lat)
    n = lat.n
    rng = np.arange(-bound, bound + 1)
    grids = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), -1).reshape(-1, n)
    grids = grids[np.any(grids != 0, axis=1)]
    pts = grids @ red.basis.T
    norms = np.einsum("ij,ij->i", pts, pts)
    m = norms.min()
    mins = pts[norms <= m * (1 + 1e-9)]
    return m, len(mins) // 2, np.linalg.matrix_rank(mins, tol=1e-9)


@pytest.mark.parametrize("n", [2, 3])
def test_enumeration_complete_against_box(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(15):
        lat = random_unimodular(n, rng)
        M = minimal_vectors(lat)
        m, count, rank = _box_oracle(lat)
        assert M.m == pytest.approx(m, rel=1e-9)
        assert len(M) == count
        assert M.rank == rank


def _point_set(lat: Lattice, coeffs) -> set:
    out = set()
    for c in coeffs:
        v = lat.vector(c)
        v = v if v[np.argmax(np.abs(v) > 1e-9)] > 0 else -v
        out.add(tuple(np.round(v, 8)))
    return out


def test_invariant_under_reduction():
    rng = np.random.default_rng(5)
    for n in (2, 3, 4, 5):
        lat = random_unimodular(n, rng)
        a, b = minimal_vectors(lat), minimal_vectors(reduce_basis(lat))
        assert a.m == pytest.approx(b.m, rel=1e-12)
        assert a.rank == b.rank and len(a) == len(b)
        red = reduce_basis(lat)
        assert _point_set(lat, a.vectors) == _point_set(red, b.vectors)


def test_enumerate_short_counts_points():
    pts = enumerate_short(np.eye(2), 1.0 + 1e-9)
    assert len(pts) == 2  # one per +- pair: e1, e2


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=4), st.integers(min_value=0, max_value=10**6))
def test_minimum_matches_brute_force(n, seed):
    lat = random_unimodular(n, np.random.default_rng(seed))
    M = minimal_vectors(lat)
    m, mins, rank = brute_minimal(lat.basis)
    assert M.m == pytest.approx(m, rel=1e-9)
    assert len(M) == len(mins) // 2
    assert M.rank == rank
