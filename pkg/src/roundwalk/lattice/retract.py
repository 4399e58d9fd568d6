"""Well-rounded deformation retraction of unimodular lattices.

Let ``M`` be the minimal vectors of a lattice, ``V`` their real span of
dimension ``d < n``, ``P`` the orthogonal projection onto ``V`` and
``Q = I - P``.  The deformed inner product is

    <v, v>_t = t |Pv|^2 + t^(-d/(n-d)) |Qv|^2,      t >= 1,

which keeps the covolume equal to one.  Identifying ``(R^n, <,>_t)`` with the
standard space through ``A_t = t^(1/2) P + t^(-d/(2(n-d))) Q`` gives the lattice
``A_t L``.  Old minimal vectors have squared norm ``t m``.  A vector ``v`` with
``|Pv|^2 < m`` reaches that value when

    t |Pv|^2 + t^(-d/(n-d)) |Qv|^2 = t m
    <=>  t^(n/(n-d)) = |Qv|^2 / (m - |Pv|^2),

so its catch time is ``(|Qv|^2 / (m - |Pv|^2))^((n-d)/n)``.  Vectors with
``|Pv|^2 >= m`` never catch up.  For any ``T``, every ``v`` with catch time at
most ``T`` has ``|v|_T^2 <= T m`` (the gap ``|v|_t^2 - t m`` decreases in ``t``),
so candidates come from a Fincke-Pohst search of the ellipsoid at time ``T``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import (
    NORM_RTOL,
    Lattice,
    LatticeError,
    MinimalVectorSet,
    enumerate_short,
    lll,
    minimal_vectors,
    numerical_rank,
)

UNIMODULAR_TOL = 1e-8


class AlreadyWellRounded(LatticeError):
    def __init__(self):
        super().__init__("already well-rounded")


@dataclass(frozen=True)
class CatchEvent:
    t_star: float
    new_vectors: np.ndarray
    rank_before: int
    rank_after: int

    def to_dict(self) -> dict:
        return {
            "t_star": float(self.t_star),
            "rank_before": int(self.rank_before),
            "rank_after": int(self.rank_after),
            "new_vectors": [[int(c) for c in v] for v in self.new_vectors],
        }


@dataclass
class LatticeTrajectory:
    states: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def final(self) -> Lattice:
        return self.states[-1]

    def to_dict(self) -> dict:
        return {
            "states": [s.to_dict() for s in self.states],
            "events": [e.to_dict() for e in self.events],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _projectors(lattice: Lattice, M: MinimalVectorSet):
    span = M.span(lattice)
    P = span @ span.T
    return P, np.eye(lattice.n) - P


def _check_rank(lattice: Lattice, M: MinimalVectorSet) -> int:
    d = M.rank
    if d >= lattice.n:
        raise AlreadyWellRounded()
    if d < 1:
        raise LatticeError("minimal vector set is empty")
    return d


def deformation_matrix(P: np.ndarray, Q: np.ndarray, d: int, t: float) -> np.ndarray:
    n = P.shape[0]
    return np.sqrt(t) * P + t ** (-d / (2.0 * (n - d))) * Q


def scaled_norm(lattice: Lattice, M: MinimalVectorSet, v, t: float) -> float:
    """Squared norm of the lattice point with coefficients ``v`` in <,>_t."""
    d = _check_rank(lattice, M)
    if t < 1:
        raise ValueError("t must be >= 1")
    n = lattice.n
    P, Q = _projectors(lattice, M)
    x = lattice.vector(v)
    px, qx = P @ x, Q @ x
    return float(t * (px @ px) + t ** (-d / (n - d)) * (qx @ qx))


def catch_time(lattice: Lattice, M: MinimalVectorSet | None = None, rtol: float = NORM_RTOL) -> CatchEvent:
    """First t > 1 at which a vector outside span(M) becomes minimal."""
    if M is None:
        M = minimal_vectors(lattice)
    d = _check_rank(lattice, M)
    n, m = lattice.n, M.m
    P, Q = _projectors(lattice, M)
    T = 4.0
    while True:
        A = deformation_matrix(P, Q, d, T)
        reduced, U = lll(A @ lattice.basis)
        pts = enumerate_short(reduced.T @ reduced, T * m * (1 + rtol))
        found = []
        if len(pts):
            coeffs = (U @ pts.T).T
            vecs = lattice.basis @ coeffs.T
            p2 = np.einsum("ij,ij->j", P @ vecs, P @ vecs)
            q2 = np.einsum("ij,ij->j", Q @ vecs, Q @ vecs)
            ok = p2 < m * (1 - rtol)
            if np.any(ok):
                ts = (q2[ok] / (m - p2[ok])) ** ((n - d) / n)
                found = list(zip(ts, coeffs[ok]))
        found = [(t, c) for t, c in found if t <= T * (1 + rtol)]
        if found:
            break
        T *= 2.0
        if T > 1e12:
            raise LatticeError("catch time search diverged")
    t_star = min(t for t, _ in found)
    new = [c for t, c in found if t <= t_star * (1 + rtol)]
    new = np.array(sorted(tuple(int(a) for a in c) for c in new), dtype=np.int64)
    allv = np.vstack([M.vectors, new])
    rank_after = numerical_rank(lattice.basis @ allv.T)
    return CatchEvent(t_star=float(t_star), new_vectors=new, rank_before=d, rank_after=rank_after)


def deform_step(lattice: Lattice, M: MinimalVectorSet | None = None) -> tuple[Lattice, CatchEvent]:
    """Deform to the first catch time; the basis (marking) is carried along."""
    if M is None:
        M = minimal_vectors(lattice)
    event = catch_time(lattice, M)
    P, Q = _projectors(lattice, M)
    A = deformation_matrix(P, Q, M.rank, event.t_star)
    b = A @ lattice.basis
    # A has determinant one; strip the rounding drift
    b /= abs(np.linalg.det(b)) ** (1.0 / lattice.n)
    return Lattice(b, det_tol=UNIMODULAR_TOL), event


def retract(lattice: Lattice) -> LatticeTrajectory:
    """Iterate ``deform_step`` until the lattice is well-rounded."""
    traj = LatticeTrajectory(states=[lattice])
    current = lattice
    for _ in range(lattice.n):
        M = minimal_vectors(current)
        if M.rank == current.n:
            return traj
        current, event = deform_step(current, M)
        traj.states.append(current)
        traj.events.append(event)
    if minimal_vectors(current).rank != current.n:
        raise LatticeError("retraction did not terminate in n - 1 steps")
    return traj


def lattice_distance(a: Lattice, b: Lattice) -> float:
    """Operator-norm distance between bases after the best rotation of ``a``.

    The rotation is the Frobenius-optimal element of SO(n) (Kabsch); markings
    are compared column by column.
    """
    A, B = a.basis, b.basis
    u, _, vt = np.linalg.svd(B @ A.T)
    D = np.eye(A.shape[0])
    D[-1, -1] = np.sign(np.linalg.det(u @ vt))
    R = u @ D @ vt
    return float(np.linalg.norm(R @ A - B, 2))


# -- the n = 2 case: upper half-plane -------------------------------------


def h2_point_to_lattice(z: complex) -> Lattice:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("point must lie in the upper half-plane")
    s = z.imag ** -0.5
    return Lattice(s * np.array([[1.0, z.real], [0.0, z.imag]]))


def lattice_to_h2_point(lattice: Lattice) -> complex:
    if lattice.n != 2:
        raise ValueError("only defined for n = 2")
    v1 = complex(*lattice.basis[:, 0])
    v2 = complex(*lattice.basis[:, 1])
    z = v2 / v1
    return z if z.imag > 0 else z.conjugate()


def in_fundamental_domain(z: complex, tol: float = 1e-12) -> bool:
    return z.imag > 0 and abs(z.real) <= 0.5 + tol and abs(z) >= 1 - tol


def reduce_h2(z: complex) -> tuple[complex, np.ndarray]:
    """Move z into the standard fundamental domain of SL(2, Z).

    Returns the reduced point and the integer matrix ``g`` with ``g.z`` equal to it.
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("point must lie in the upper half-plane")
    g = np.eye(2, dtype=np.int64)
    for _ in range(10000):
        k = int(np.floor(z.real + 0.5))
        if k:
            z -= k
            g = np.array([[1, -k], [0, 1]]) @ g
        if abs(z) < 1 - 1e-15:
            z = -1 / z
            g = np.array([[0, -1], [1, 0]]) @ g
        else:
            return z, g
    raise ValueError("reduction did not converge")


def retract_h2(z: complex) -> complex:
    """Closed form of the retraction on the fundamental domain.

    With ``d = 1`` the catch time is ``y / sqrt(1 - x^2)``: the real part is kept
    and the point drops onto the unit circle.
    """
    z = complex(z)
    if not in_fundamental_domain(z):
        raise ValueError("reduce first")
    x = z.real
    return complex(x, np.sqrt(max(1.0 - x * x, 0.0)))
