"""Isometries of the upper half-plane and genus-2 Fuchsian groups.

The genus-2 surface is glued from two pairs of pants along three cuffs
``c1, c2, c3``.  The first pants group is ``<X1, Y1>`` with ``X1 Y1 Z1 = 1``;
``X1, Y1, Z1`` translate along the three cuff axes.  The second pants is the
mirror image of the first across ``axis(X1)``, slid along that axis by the first
twist.  Stable letters ``T2``, ``T3`` carry ``axis(Y1)`` and ``axis(Z1)`` onto their
mirror images, flipping sides and sliding by the remaining twists.  Writing
``Y2 = T2 Y1 T2^-1`` and ``Z2 = T3 Z1 T3^-1`` one gets ``X1 Y2 Z2 = 1``, and the
standard generators

    a1 = T3,  b1 = Z1,  a2 = Y1^-1,  b2 = T2

satisfy ``[a1, b1][a2, b2] = 1``.  The cuffs are the words ``b1^-1 a2`` (c1),
``a2`` (c2) and ``b1`` (c3).

Twist convention: a positive twist slides the far side along the cuff towards
the attracting endpoint of its generator (``X1``, ``Y1``, ``Z1`` respectively).
A full twist ``tau_i -> tau_i + l_i`` gives the same group with new generators.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

HYPERBOLIC_TOL = 1e-10
DET_TOL = 1e-12
RELATION_TOL = 1e-8

LETTERS = "abcdABCD"
# letter k has inverse (k + 4) % 8; 0..3 are a1, b1, a2, b2
CUFF_WORDS = ((5, 2), (2,), (1,))


class GeometryError(ValueError):
    pass


def _normalize(m: np.ndarray) -> np.ndarray:
    det = np.linalg.det(m)
    if det <= 0:
        raise GeometryError("matrix must have positive determinant")
    return m / math.sqrt(det)


@dataclass(frozen=True, eq=False)
class Isometry:
    """Orientation-preserving isometry of H^2; +-M are identified."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(2, 2)
        if abs(np.linalg.det(m) - 1.0) > DET_TOL * max(1.0, float(np.abs(m).max()) ** 2):
            raise GeometryError("isometry must have determinant 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def is_hyperbolic(self) -> bool:
        return abs(self.trace) > 2 + HYPERBOLIC_TOL

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        a, b, c, d = self.matrix.ravel()
        return Isometry(np.array([[d, -b], [-c, a]]))

    def __call__(self, z: complex) -> complex:
        a, b, c, d = self.matrix.ravel()
        return (a * z + b) / (c * z + d)


@dataclass(frozen=True)
class GeodesicAxis:
    """Oriented geodesic given by its endpoints on R u {inf}, attracting first."""

    attracting: float
    repelling: float

    def __post_init__(self):
        if self.attracting == self.repelling:
            raise GeometryError("axis endpoints must be distinct")

    @property
    def endpoints(self) -> tuple[float, float]:
        return (self.attracting, self.repelling)

    def angles(self) -> tuple[float, float]:
        return (_boundary_angle(self.attracting), _boundary_angle(self.repelling))

    def crosses(self, other: "GeodesicAxis", tol: float = 1e-12) -> bool:
        """True iff the endpoint pairs separate each other on the circle at infinity."""
        p1, p2 = self.angles()
        q1, q2 = other.angles()
        if min(_circ_dist(p, q) for p in (p1, p2) for q in (q1, q2)) < tol:
            return False
        return _on_arc(p1, p2, q1) != _on_arc(p1, p2, q2)

    def distance_to_i(self) -> float:
        """Hyperbolic distance from i to the geodesic."""
        a, b = self.attracting, self.repelling
        if math.isinf(a) or math.isinf(b):
            x = b if math.isinf(a) else a
            # vertical line through x
            return math.asinh(abs(x))
        c, r = (a + b) / 2, abs(a - b) / 2
        # distance from i to the semicircle with centre c and radius r
        return abs(math.asinh((c * c + 1 - r * r) / (2 * r)))


def _boundary_angle(x: float) -> float:
    if math.isinf(x):
        return 0.0
    w = complex(x, -1) / complex(x, 1)
    return math.atan2(w.imag, w.real) % (2 * math.pi)


def _circ_dist(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def _on_arc(a: float, b: float, x: float) -> bool:
    """x strictly inside the counterclockwise arc from a to b."""
    span = (b - a) % (2 * math.pi)
    return 0 < (x - a) % (2 * math.pi) < span


def translation_length(g: Isometry | np.ndarray) -> float:
    tr = abs(np.trace(g.matrix if isinstance(g, Isometry) else g))
    if tr <= 2 + HYPERBOLIC_TOL:
        raise GeometryError("not hyperbolic")
    return 2.0 * math.acosh(tr / 2.0)


def axis(g: Isometry | np.ndarray) -> GeodesicAxis:
    m = g.matrix if isinstance(g, Isometry) else np.asarray(g)
    a, b, c, d = (float(x) for x in m.ravel())
    if abs(a + d) <= 2 + HYPERBOLIC_TOL:
        raise GeometryError("not hyperbolic")
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if abs(c) <= 1e-15 * scale:
        finite = b / (d - a)
        return GeodesicAxis(math.inf, finite) if abs(a) > abs(d) else GeodesicAxis(finite, math.inf)
    B = d - a
    disc = math.sqrt(B * B + 4 * b * c)
    q = -0.5 * (B + math.copysign(disc, B)) if B != 0 else 0.5 * disc
    roots = [q / c, -b / q] if q != 0 else [disc / (2 * c), -disc / (2 * c)]
    # attracting fixed point has |derivative| = 1/(cx+d)^2 < 1
    roots.sort(key=lambda x: -abs(c * x + d))
    return GeodesicAxis(roots[0], roots[1])


def _frame(ax: GeodesicAxis) -> np.ndarray:
    """Matrix sending 0 to the repelling and inf to the attracting endpoint."""
    p, q = ax.repelling, ax.attracting
    if math.isinf(q):
        return np.array([[1.0, p], [0.0, 1.0]])
    if math.isinf(p):
        return np.array([[q, -1.0], [1.0, 0.0]])
    return np.array([[q, p], [1.0, 1.0]])


def translation_along(ax: GeodesicAxis, t: float) -> np.ndarray:
    """Translation by distance t towards the attracting endpoint of ``ax``."""
    F = _frame(ax)
    D = np.diag([math.exp(t / 2), math.exp(-t / 2)])
    return _normalize(F @ D @ np.linalg.inv(F))


def reflection_in(ax: GeodesicAxis) -> np.ndarray:
    """Determinant -1 matrix of the reflection in ``ax`` (acts on conj(z))."""
    F = _frame(ax)
    R = F @ np.diag([-1.0, 1.0]) @ np.linalg.inv(F)
    return R / math.sqrt(abs(np.linalg.det(R)))


def pants_generators(L1: float, L2: float, L3: float) -> tuple[Isometry, Isometry]:
    """Pants group <X, Y> with boundary lengths L1 (X), L2 (Y), L3 (XY).

    X translates along the imaginary axis.  The axis of Y is the perpendicular
    translate of it at distance s along the unit circle, where s is the seam of
    the right-angled hexagon with alternate sides L1/2, L2/2, L3/2:

        cosh s = (cosh(L3/2) + cosh(L1/2) cosh(L2/2)) / (sinh(L1/2) sinh(L2/2)).

    The orientation of Y is chosen so that trace(XY) = -2 cosh(L3/2).
    """
    if min(L1, L2, L3) <= 0:
        raise GeometryError("pants lengths must be positive")
    c1, c2, c3 = (math.cosh(L / 2) for L in (L1, L2, L3))
    s1, s2 = math.sinh(L1 / 2), math.sinh(L2 / 2)
    s = math.acosh((c3 + c1 * c2) / (s1 * s2))
    X = np.diag([math.exp(L1 / 2), math.exp(-L1 / 2)])
    K = np.array([[math.cosh(s / 2), math.sinh(s / 2)], [math.sinh(s / 2), math.cosh(s / 2)]])
    Kinv = np.array([[K[1, 1], -K[0, 1]], [-K[1, 0], K[0, 0]]])
    Y = K @ np.diag([math.exp(-L2 / 2), math.exp(L2 / 2)]) @ Kinv
    if np.trace(X @ Y) > 0:
        Y = K @ np.diag([math.exp(L2 / 2), math.exp(-L2 / 2)]) @ Kinv
    return Isometry(X), Isometry(Y)


@dataclass(frozen=True)
class FNPoint:
    """Fenchel-Nielsen coordinates (lengths, twists) for the fixed pants decomposition."""

    lengths: tuple
    twists: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.lengths)
        twists = tuple(float(x) for x in self.twists)
        if len(lengths) != 3 or len(twists) != 3:
            raise ValueError("need three lengths and three twists")
        if not all(math.isfinite(x) for x in lengths + twists):
            raise ValueError("coordinates must be finite")
        if min(lengths) <= 0:
            raise ValueError("Fenchel-Nielsen lengths must be positive")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "twists", twists)

    def as_array(self) -> np.ndarray:
        return np.array(self.lengths + self.twists)

    @classmethod
    def from_array(cls, x) -> "FNPoint":
        x = [float(v) for v in x]
        return cls(tuple(x[:3]), tuple(x[3:]))

    def dehn_twist(self, i: int, power: int = 1) -> "FNPoint":
        tw = list(self.twists)
        tw[i] += power * self.lengths[i]
        return FNPoint(self.lengths, tuple(tw))

    def to_dict(self) -> dict:
        return {"lengths": list(self.lengths), "twists": list(self.twists)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "FNPoint":
        if isinstance(data, (list, tuple)):
            return cls(tuple(data[0]), tuple(data[1]))
        return cls(tuple(data["lengths"]), tuple(data.get("twists", (0, 0, 0))))


@dataclass(frozen=True, eq=False)
class FuchsianGroup:
    """Genus-2 surface group on generators a1, b1, a2, b2."""

    generators: tuple
    relation_residual: float = field(default=0.0)
    fn: FNPoint | None = None

    def __post_init__(self):
        gens = tuple(g if isinstance(g, Isometry) else Isometry(g) for g in self.generators)
        if len(gens) != 4:
            raise GeometryError("a genus-2 group has four generators")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "relation_residual", relation_residual(gens))

    @property
    def alphabet(self) -> np.ndarray:
        """(8, 2, 2) array: a1, b1, a2, b2 followed by their inverses."""
        mats = [g.matrix for g in self.generators]
        mats += [g.inverse().matrix for g in self.generators]
        return np.array(mats)

    def word_matrix(self, word) -> np.ndarray:
        alph = self.alphabet
        m = np.eye(2)
        for k in parse_word(word):
            m = m @ alph[k]
        return m

    def element(self, word) -> Isometry:
        return Isometry(self.word_matrix(word))

    def conjugate(self, h: Isometry | np.ndarray) -> "FuchsianGroup":
        """The group h G h^-1 (same labels)."""
        H = h.matrix if isinstance(h, Isometry) else np.asarray(h, dtype=float)
        Hi = np.linalg.inv(H)
        return FuchsianGroup(tuple(Isometry(_normalize(H @ g.matrix @ Hi)) for g in self.generators), fn=self.fn)

    def balanced(self) -> "FuchsianGroup":
        """Conjugate so that i minimises the summed cosh-displacement of the generators."""
        return self.conjugate(np.linalg.inv(centering_matrix(self.alphabet[:4])))

    def cuff_lengths(self) -> tuple[float, float, float]:
        return tuple(translation_length(self.word_matrix(w)) for w in CUFF_WORDS)


def centering_matrix(mats: np.ndarray) -> np.ndarray:
    """Matrix H with H(i) = o, where o minimises sum_g cosh d(o, g o).

    ``|H^-1 g H|_F^2 = 2 cosh d(o, g o)``, and the objective is strictly convex on
    H^2 for a non-elementary set, so the minimiser is unique.
    """
    from scipy.optimize import minimize

    mats = np.asarray(mats, dtype=float)

    def conj(x):
        u, v = x
        y = math.exp(v)
        H = np.array([[math.sqrt(y), u / math.sqrt(y)], [0.0, 1.0 / math.sqrt(y)]])
        Hi = np.array([[H[1, 1], -H[0, 1]], [0.0, H[0, 0]]])
        return H, Hi

    def f(x):
        H, Hi = conj(x)
        c = Hi @ mats @ H
        return float(np.log(np.sum(c * c)))

    x = np.zeros(2)
    for _ in range(3):
        res = minimize(f, x, method="BFGS", options={"gtol": 1e-10})
        x = res.x
    return conj(x)[0]


def _adj(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=m.dtype)


def relation_residual(gens) -> float:
    """max |[a1, b1][a2, b2] -+ I|, evaluated in long double.

    The commutators are long separating curves, so float64 evaluation alone
    loses several digits to cancellation.
    """
    a1, b1, a2, b2 = (np.asarray(g.matrix if isinstance(g, Isometry) else g, dtype=np.longdouble) for g in gens)
    R = a1 @ b1 @ _adj(a1) @ _adj(b1) @ a2 @ b2 @ _adj(a2) @ _adj(b2)
    I = np.eye(2, dtype=np.longdouble)
    return float(min(np.abs(R - I).max(), np.abs(R + I).max()))


def _mp_fixed_points(m):
    """Attracting and repelling fixed points of a hyperbolic mpmath 2x2 matrix."""
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    if c == 0:
        finite = b / (d - a)
        return (mpmath.inf, finite) if abs(a) > abs(d) else (finite, mpmath.inf)
    disc = mpmath.sqrt((d - a) ** 2 + 4 * b * c)
    roots = sorted([((a - d) + disc) / (2 * c), ((a - d) - disc) / (2 * c)], key=lambda x: -abs(c * x + d))
    return roots[0], roots[1]


def _mp_frame(m):
    q, p = _mp_fixed_points(m)
    if mpmath.isinf(q):
        return mpmath.matrix([[1, p], [0, 1]])
    if mpmath.isinf(p):
        return mpmath.matrix([[q, -1], [1, 0]])
    return mpmath.matrix([[q, p], [1, 1]])


def _mp_unit(m):
    return m / mpmath.sqrt(abs(mpmath.det(m)))


def _mp_glue(p: FNPoint, dps: int = 40):
    """Generators a1, b1, a2, b2 at high precision (see module docstring)."""
    with mpmath.workdps(dps):
        l1, l2, l3 = (mpmath.mpf(x) for x in p.lengths)
        t1, t2, t3 = (mpmath.mpf(x) for x in p.twists)
        c1, c2, c3 = mpmath.cosh(l1 / 2), mpmath.cosh(l2 / 2), mpmath.cosh(l3 / 2)
        s = mpmath.acosh((c3 + c1 * c2) / (mpmath.sinh(l1 / 2) * mpmath.sinh(l2 / 2)))
        X1 = mpmath.diag([mpmath.exp(l1 / 2), mpmath.exp(-l1 / 2)])
        K = mpmath.matrix([[mpmath.cosh(s / 2), mpmath.sinh(s / 2)], [mpmath.sinh(s / 2), mpmath.cosh(s / 2)]])
        Y1 = K * mpmath.diag([mpmath.exp(-l2 / 2), mpmath.exp(l2 / 2)]) * K ** -1
        if X1[0, 0] * Y1[0, 0] + X1[1, 1] * Y1[1, 1] > 0:
            Y1 = K * mpmath.diag([mpmath.exp(l2 / 2), mpmath.exp(-l2 / 2)]) * K ** -1
        Z1 = (X1 * Y1) ** -1
        J = mpmath.diag([-1, 1])

        def slide(m, t):
            F = _mp_frame(m)
            return F * mpmath.diag([mpmath.exp(t / 2), mpmath.exp(-t / 2)]) * F ** -1

        def mirror(m):
            F = _mp_frame(m)
            return _mp_unit(F * J * F ** -1)

        AJ = slide(X1, t1) * J
        T2 = _mp_unit(AJ * mirror(Y1) * slide(Y1, t2))
        T3 = _mp_unit(AJ * mirror(Z1) * slide(Z1, t3))
        return [T3, Z1, Y1 ** -1, T2]


def fn_to_group(p: FNPoint, tol: float = RELATION_TOL) -> FuchsianGroup:
    """Glue two pants with the given lengths and twists into a genus-2 group.

    The generators are built in extended precision, conjugated so that i is a
    balanced base point (generators plus one separating commutator), and only
    then rounded.
    """
    dps = 40
    gens = _mp_glue(p, dps)
    rough = np.array([[[float(g[i, j]) for j in range(2)] for i in range(2)] for g in gens])
    # the separating curve [a1, b1] dominates the rounding error of the relation
    a1, b1 = rough[0], rough[1]
    H = centering_matrix(np.vstack([rough, [a1 @ b1 @ _adj(a1) @ _adj(b1)]]))
    with mpmath.workdps(dps):
        Hm = mpmath.matrix(H.tolist())
        Hm = _mp_unit(Hm)
        Hi = Hm ** -1
        out = []
        for g in gens:
            c = Hi * g * Hm
            out.append(np.array([[float(c[i, j]) for j in range(2)] for i in range(2)]))
    group = FuchsianGroup(tuple(Isometry(m) for m in out), fn=p)
    if not group.relation_residual <= tol:
        raise GeometryError(f"gluing failed (relation residual {group.relation_residual:.3g})")
    return group


def glue_alphabet(p: FNPoint) -> np.ndarray:
    """Float64 alphabet (a1, b1, a2, b2 and inverses) of the uncentred gluing.

    Cheap path for length evaluation, where conjugation does not matter.
    """
    X1, Y1 = pants_generators(*p.lengths)
    Z1 = (X1 @ Y1).inverse()
    t1, t2, t3 = p.twists
    AJ = translation_along(axis(X1), t1) @ np.diag([-1.0, 1.0])
    T2 = AJ @ reflection_in(axis(Y1)) @ translation_along(axis(Y1), t2)
    T3 = AJ @ reflection_in(axis(Z1)) @ translation_along(axis(Z1), t3)
    gens = [_normalize(T3), Z1.matrix, Y1.inverse().matrix, _normalize(T2)]
    return np.array(gens + [_adj(g) for g in gens])


def word_lengths(p: FNPoint, words) -> np.ndarray:
    """Translation lengths of the given words on the surface ``p``."""
    alph = glue_alphabet(p)
    out = np.empty(len(words))
    for i, w in enumerate(words):
        m = np.eye(2)
        for k in parse_word(w):
            m = m @ alph[k]
        out[i] = translation_length(m)
    return out


# -- words -------------------------------------------------------------------


def parse_word(word) -> tuple:
    if isinstance(word, str):
        try:
            return tuple(LETTERS.index(ch) for ch in word)
        except ValueError:
            raise ValueError(f"bad word {word!r}; letters are {LETTERS}") from None
    return tuple(int(k) for k in word)


def word_str(word) -> str:
    return "".join(LETTERS[k] for k in word)


def invert_word(word) -> tuple:
    return tuple((k + 4) % 8 for k in reversed(word))
