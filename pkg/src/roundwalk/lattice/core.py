"""Unimodular lattices, LLL reduction and short-vector enumeration.

A lattice is stored as an ``n x n`` matrix whose *columns* are the basis
vectors.  Lattice points are addressed by integer coefficient vectors with
respect to that basis, so membership is always exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

DET_TOL = 1e-9
NORM_RTOL = 1e-9
RANK_TOL = 1e-9
LLL_DELTA = 0.99


class LatticeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Lattice:
    basis: np.ndarray
    det_tol: float = field(default=DET_TOL, repr=False)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] < 2:
            raise LatticeError("basis must be a square matrix of size >= 2")
        if not np.all(np.isfinite(b)):
            raise LatticeError("degenerate basis")
        det = np.linalg.det(b)
        if not np.isfinite(np.linalg.cond(b)) or abs(det) < 1e-300:
            raise LatticeError("degenerate basis")
        if abs(abs(det) - 1.0) > self.det_tol:
            raise LatticeError(f"basis is not unimodular (|det| = {abs(det):.12g})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def gram(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def vector(self, coeffs) -> np.ndarray:
        return self.basis @ np.asarray(coeffs, dtype=float)

    def sqnorm(self, coeffs) -> float:
        v = self.vector(coeffs)
        return float(v @ v)

    def to_dict(self) -> dict:
        return {"n": self.n, "basis": self.basis.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, det_tol: float = DET_TOL) -> "Lattice":
        basis = np.array(data["basis"], dtype=float)
        if "n" in data and basis.shape[0] != int(data["n"]):
            raise LatticeError("dimension field does not match basis")
        return cls(basis, det_tol=det_tol)

    @classmethod
    def from_json(cls, text: str) -> "Lattice":
        return cls.from_dict(json.loads(text))

    @classmethod
    def normalized(cls, basis) -> "Lattice":
        """Rescale an arbitrary nonsingular basis to covolume one."""
        b = np.array(basis, dtype=float)
        det = np.linalg.det(b)
        if not np.isfinite(det) or abs(det) < 1e-300:
            raise LatticeError("degenerate basis")
        return cls(b / abs(det) ** (1.0 / b.shape[0]))


@dataclass(frozen=True, eq=False)
class MinimalVectorSet:
    """Minimal vectors of a lattice, one per +/- pair.

    ``vectors`` holds integer coefficient vectors relative to the basis of the
    lattice they were computed for; the first nonzero entry is positive.
    """

    m: float
    vectors: np.ndarray
    rank: int

    def __len__(self):
        return len(self.vectors)

    def span(self, lattice: Lattice) -> np.ndarray:
        """Orthonormal basis (columns) of the real span of the vectors."""
        pts = lattice.basis @ self.vectors.T
        u, s, _ = np.linalg.svd(pts, full_matrices=False)
        return u[:, : self.rank]


def _gram_schmidt(b: np.ndarray):
    n = b.shape[1]
    bstar = np.zeros_like(b)
    mu = np.zeros((n, n))
    for i in range(n):
        v = b[:, i].copy()
        for j in range(i):
            mu[i, j] = b[:, i] @ bstar[:, j] / (bstar[:, j] @ bstar[:, j])
            v -= mu[i, j] * bstar[:, j]
        bstar[:, i] = v
    return bstar, mu


def lll(basis: np.ndarray, delta: float = LLL_DELTA):
    """LLL-reduce the columns of ``basis``.

    Returns ``(reduced, U)`` with ``reduced = basis @ U`` and ``U`` an integer
    matrix of determinant +-1.
    """
    b = np.array(basis, dtype=float)
    n = b.shape[1]
    U = np.eye(n, dtype=np.int64)
    bstar, mu = _gram_schmidt(b)
    norms = np.einsum("ij,ij->j", bstar, bstar)
    if np.any(norms <= 1e-300):
        raise LatticeError("degenerate basis")
    k = 1
    iters = 0
    while k < n:
        iters += 1
        if iters > 100000:
            raise LatticeError("LLL failed to converge")
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[:, k] -= q * b[:, j]
                U[:, k] -= q * U[:, j]
                mu[k, : j + 1] -= q * np.append(mu[j, :j], 1.0)
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            U[:, [k - 1, k]] = U[:, [k, k - 1]]
            # cheap enough at these sizes; keeps mu exact to rounding
            bstar, mu = _gram_schmidt(b)
            norms = np.einsum("ij,ij->j", bstar, bstar)
            k = max(k - 1, 1)
    return b, U


def reduce_basis(lattice: Lattice) -> Lattice:
    """LLL-reduced basis (delta = 0.99) of the same lattice."""
    reduced, _ = lll(lattice.basis)
    return Lattice(reduced, det_tol=max(lattice.det_tol, DET_TOL))


def is_lll_reduced(basis: np.ndarray, delta: float = LLL_DELTA, tol: float = 1e-9) -> bool:
    bstar, mu = _gram_schmidt(np.asarray(basis, dtype=float))
    norms = np.einsum("ij,ij->j", bstar, bstar)
    n = basis.shape[1]
    for i in range(n):
        for j in range(i):
            if abs(mu[i, j]) > 0.5 + tol:
                return False
    for k in range(1, n):
        if norms[k] < (delta - mu[k, k - 1] ** 2) * norms[k - 1] * (1 - tol):
            return False
    return True


def enumerate_short(gram: np.ndarray, radius_sq: float) -> np.ndarray:
    """All nonzero integer x with x^T G x <= radius_sq, one per +/- pair.

    Fincke-Pohst enumeration over the Cholesky factor of ``gram``.  Works best
    when ``gram`` comes from a reduced basis.
    """
    G = np.asarray(gram, dtype=float)
    n = G.shape[0]
    R = np.linalg.cholesky(G).T  # upper triangular, G = R^T R
    diag = np.diag(R) ** 2
    # q[i, j] = R[i, j] / R[i, i] so that ||R x||^2 = sum_i d_i (x_i + sum_{j>i} q_ij x_j)^2
    q = R / np.diag(R)[:, None]
    out = []
    x = np.zeros(n, dtype=np.int64)
    slack = radius_sq * (1 + 1e-12) + 1e-300

    def rec(i, remaining):
        centre = -float(q[i, i + 1 :] @ x[i + 1 :])
        half = np.sqrt(max(remaining, 0.0) / diag[i])
        lo = int(np.ceil(centre - half - 1e-12))
        hi = int(np.floor(centre + half + 1e-12))
        for xi in range(lo, hi + 1):
            x[i] = xi
            r = remaining - diag[i] * (xi - centre) ** 2
            if r < -1e-12 * slack:
                continue
            if i == 0:
                out.append(x.copy())
            else:
                rec(i - 1, r)
        x[i] = 0

    rec(n - 1, slack)
    pts = [p for p in out if np.any(p)]
    return np.array([_canonical_sign(p) for p in pts if _first_nonzero(p) > 0], dtype=np.int64).reshape(-1, n)


def _first_nonzero(v) -> int:
    for a in v:
        if a:
            return int(np.sign(a))
    return 0


def _canonical_sign(v):
    return v if _first_nonzero(v) >= 0 else -v


def numerical_rank(points: np.ndarray, tol: float = RANK_TOL) -> int:
    """Rank of a set of column vectors, singular values cut at tol * s_max."""
    if points.size == 0:
        return 0
    s = np.linalg.svd(points, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def minimal_vectors(lattice: Lattice, rtol: float = NORM_RTOL) -> MinimalVectorSet:
    """All minimal vectors of ``lattice`` (one per +/- pair) and the rank of their span."""
    reduced, U = lll(lattice.basis)
    G = reduced.T @ reduced
    # the shortest reduced basis vector bounds the minimum from above
    bound = float(np.min(np.diag(G)))
    pts = enumerate_short(G, bound * (1 + rtol))
    norms = np.einsum("ij,jk,ik->i", pts, G, pts)
    m = float(norms.min())
    keep = pts[norms <= m * (1 + rtol)]
    coeffs = np.array([_canonical_sign(U @ p) for p in keep], dtype=np.int64)
    coeffs = coeffs[np.lexsort(coeffs.T[::-1])]
    rank = numerical_rank(lattice.basis @ coeffs.T)
    return MinimalVectorSet(m=m, vectors=coeffs, rank=rank)


def well_rounded(lattice: Lattice) -> bool:
    return minimal_vectors(lattice).rank == lattice.n


def random_unimodular(n: int, rng: np.random.Generator) -> Lattice:
    """Gaussian random basis rescaled to covolume one (positive orientation)."""
    while True:
        b = rng.standard_normal((n, n))
        det = np.linalg.det(b)
        if abs(det) > 1e-3:
            break
    if det < 0:
        b[:, 0] *= -1
    return Lattice.normalized(b)
