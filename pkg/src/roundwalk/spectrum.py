"""Closed-geodesic length spectra, systoles and intersection of closed geodesics.

Words are tuples over the letters ``0..7`` (``a1 b1 a2 b2`` and inverses, see
:mod:`roundwalk.hyperbolic`).  A conjugacy class is represented by the
lexicographically least cyclic rotation of the word or of its inverse.

Enumeration walks reduced words breadth first over a copy of the group
conjugated so that ``i`` is a balanced base point.  A prefix ``p`` is dropped
once ``d(i, p i)`` exceeds ``cutoff + slack``: a word whose closed geodesic
passes near the base point never strays far from its axis.  Two different free
words can still name the same surface class because of the surface relation;
such duplicates (and hidden proper powers) are merged by comparing length
functions: at the surface itself and at two fixed probe surfaces.
"""

from __future__ import annotations

import csv
import io
import json
import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from .hyperbolic import (
    FNPoint,
    FuchsianGroup,
    GeodesicAxis,
    Isometry,
    axis,
    centering_matrix,
    fn_to_group,
    glue_alphabet,
    invert_word,
    parse_word,
    translation_length,
    word_str,
)

EPS0 = 2.0 * math.asinh(1.0)
TOL_SYS = 1e-8
HARD_CAP = 16
INTERSECT_WORD_CAP = 10
BALL_DEPTH = 24
SYSTOLE_MARGIN = 0.5
_MATCH_RTOL = 1e-7
_PROBE_RTOL = 1e-8
# generic surfaces on which length functions are compared
PROBES = (
    FNPoint((1.13, 1.71, 2.29), (0.37, -0.61, 0.23)),
    FNPoint((1.97, 1.31, 0.83), (-0.29, 0.47, 0.71)),
)
_PROBE_ALPH = None
_PROBE_WS = None
# conjugators up to this word length are tried before the geometric search
CONJ_WORD_CAP = 4
_CONJ_TOL = 1e-6
# (word, word, power) -> conjugate?  Conjugacy does not depend on the surface.
_conj_cache: dict = {}
# |trace| below 2 + this is treated as the identity (relators evaluate to it up to rounding)
_TRACE_FLOOR = 1e-7


class SpectrumError(ValueError):
    pass


# -- words -------------------------------------------------------------------


def is_reduced(w) -> bool:
    return all((w[i] - w[i + 1]) % 8 != 4 for i in range(len(w) - 1))


def is_cyclically_reduced(w) -> bool:
    return len(w) > 0 and is_reduced(w) and (len(w) == 1 or (w[0] - w[-1]) % 8 != 4)


def canonical_word(w) -> tuple:
    """Least rotation of ``w`` or of its inverse."""
    w = tuple(w)
    inv = invert_word(w)
    n = len(w)
    return min(min(w[i:] + w[:i], inv[i:] + inv[:i]) for i in range(n))


def primitive_period(w) -> int:
    """Length of the shortest u with w = u^k."""
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and tuple(w) == tuple(w[:p]) * (n // p):
            return p
    return n


# -- classes -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeodesicClass:
    word: tuple
    length: float
    axis: GeodesicAxis
    matrix: Isometry

    @property
    def name(self) -> str:
        return word_str(self.word)

    @property
    def trace(self) -> float:
        return self.matrix.trace

    def to_dict(self) -> dict:
        return {"word": self.name, "length": self.length, "trace": abs(self.trace)}


def make_class(group: FuchsianGroup, word) -> GeodesicClass:
    w = canonical_word(parse_word(word))
    m = group.element(w)
    return GeodesicClass(word=w, length=translation_length(m), axis=axis(m), matrix=m)


@dataclass
class SystoleSet:
    classes: list
    systole: float
    next_length: float
    intersection_pairs: list = field(default_factory=list)
    next_is_bound: bool = False
    tol_sys: float = TOL_SYS

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def words(self) -> list:
        return [c.word for c in self.classes]

    @property
    def spread(self) -> float:
        lengths = [c.length for c in self.classes]
        return max(lengths) - min(lengths)

    @property
    def degenerate(self) -> bool:
        """Gap to the next length is within 10 tol_sys: multiplicity is a coin toss."""
        return self.next_length - self.systole < 10 * self.tol_sys

    def to_dict(self) -> dict:
        return {
            "systole": self.systole,
            "k": self.k,
            "classes": [c.to_dict() for c in self.classes],
            "next_length": None if math.isinf(self.next_length) else self.next_length,
            "next_length_is_lower_bound": self.next_is_bound,
            "intersection_pairs": [list(p) for p in self.intersection_pairs],
            "degenerate": self.degenerate,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# -- the centred working copy ---------------------------------------------------


def _sqnorm(mats: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", mats, mats)


def _displacement(mats: np.ndarray) -> np.ndarray:
    """d(i, g i) for det-1 matrices: cosh d = |g|_F^2 / 2."""
    return np.arccosh(np.maximum(_sqnorm(mats) / 2.0, 1.0))


_HASH = np.array([0x9E3779B97F4A7C15, 0xC2B2AE3D27D4EB4F, 0x165667B19E3779F9, 0xD6E8FEB86659FD93], dtype=np.uint64)


def _key(mats: np.ndarray) -> np.ndarray:
    """64-bit sign-independent hashes of det-1 matrices (entries quantised to 1e-7)."""
    s = np.where(mats[:, 0, 0] + mats[:, 1, 1] < 0, -1.0, 1.0)
    q = np.round(mats.reshape(-1, 4) * s[:, None] * 1e7).astype(np.int64).view(np.uint64)
    with np.errstate(over="ignore"):
        return (q * _HASH).sum(axis=1)


def _times_letters(A: np.ndarray, L: np.ndarray) -> np.ndarray:
    """All products A[n] @ L[k], shape (n, k, 2, 2)."""
    a, b, c, d = (A[:, i, j, None] for i in (0, 1) for j in (0, 1))
    e, f, g, h = (L[None, :, i, j] for i in (0, 1) for j in (0, 1))
    out = np.empty((A.shape[0], L.shape[0], 2, 2))
    out[..., 0, 0] = a * e + b * g
    out[..., 0, 1] = a * f + b * h
    out[..., 1, 0] = c * e + d * g
    out[..., 1, 1] = c * f + d * h
    return out


@dataclass
class _Orbit:
    """Elements found by a search, stored as a tree of (parent, letter)."""

    radius: float
    depth: int
    mats: np.ndarray
    parent: np.ndarray
    letter: np.ndarray
    level: np.ndarray

    def word(self, i: int) -> tuple:
        out = []
        while i > 0:
            out.append(int(self.letter[i]))
            i = int(self.parent[i])
        return tuple(reversed(out))

    def __post_init__(self):
        self.disp = _displacement(self.mats)

    def select(self, radius: float, depth: int) -> np.ndarray:
        return np.nonzero((self.disp <= radius * (1 + 1e-12)) & (self.level <= depth))[0]


class _Workspace:
    """Group conjugated to a balanced base point, plus a cached orbit ball."""

    def __init__(self, group: FuchsianGroup):
        H = centering_matrix(group.alphabet[:4])
        Hi = np.linalg.inv(H)
        self.H, self.Hi = H, Hi
        self.alphabet = np.einsum("ij,kjl,lm->kim", Hi, group.alphabet, H)
        self.max_gen_disp = float(_displacement(self.alphabet).max())
        self._orbits = []
        self._lambda = None

    def word_matrix(self, w) -> np.ndarray:
        m = np.eye(2)
        for k in w:
            m = m @ self.alphabet[k]
        return m

    @property
    def lambda_min(self) -> float:
        """Least translation length per letter over generators and reduced 2-letter words."""
        if self._lambda is None:
            best = math.inf
            for a in range(8):
                best = min(best, translation_length(self.alphabet[a]))
                for b in range(8):
                    if (a - b) % 8 != 4:
                        best = min(best, translation_length(self.alphabet[a] @ self.alphabet[b]) / 2)
            self._lambda = best
        return self._lambda

    def orbit(self, radius: float, depth: int) -> tuple[_Orbit, np.ndarray]:
        """Elements g (up to sign) with d(i, g i) <= radius and a word of length <= depth.

        Breadth-first search over the Cayley graph, keeping only elements that
        displace i by at most ``radius``.  Each element keeps the first (hence
        shortest, reduced) word reaching it.  Returns the search tree and the
        indices of the requested elements.
        """
        for orb in self._orbits:
            if orb.radius >= radius and orb.depth >= depth:
                return orb, orb.select(radius, depth)
        # a little headroom saves repeated searches for creeping radii
        grown = radius + 0.5 if math.isfinite(radius) else radius
        orb = self._search(grown, depth)
        self._orbits = [o for o in self._orbits if o.radius > grown or o.depth > depth]
        self._orbits.append(orb)
        return orb, orb.select(radius, depth)

    def _search(self, radius: float, depth: int) -> _Orbit:
        bound = 2.0 * math.cosh(radius) * (1 + 1e-12) if math.isfinite(radius) else math.inf
        eye = np.eye(2)[None]
        mats, parents, letters, levels = [eye], [np.array([-1])], [np.array([-1])], [np.array([0])]
        seen = _key(eye)
        front, front_idx, total = eye, np.array([0]), 1
        for level in range(1, depth + 1):
            new = _times_letters(front, self.alphabet)
            idx, letter = np.nonzero(_sqnorm(new) <= bound)
            if len(idx) == 0:
                break
            cand = new[idx, letter]
            keys = _key(cand)
            _, first = np.unique(keys, return_index=True)
            first = np.sort(first)
            first = first[~np.isin(keys[first], seen)]
            if len(first) == 0:
                break
            seen = np.concatenate([seen, keys[first]])
            front = cand[first]
            mats.append(front)
            parents.append(front_idx[idx[first]])
            letters.append(letter[first])
            levels.append(np.full(len(first), level))
            front_idx = np.arange(total, total + len(first))
            total += len(first)
        return _Orbit(
            radius,
            depth,
            np.concatenate(mats),
            np.concatenate(parents),
            np.concatenate(letters),
            np.concatenate(levels),
        )

    def ball(self, radius: float, depth: int = BALL_DEPTH) -> np.ndarray:
        """Group elements with d(i, g i) <= radius, found within the given word depth.

        The search may pass through elements up to one generator displacement
        further out.
        """
        orb, _ = self.orbit(radius + self.max_gen_disp, depth)
        return orb.mats[orb.select(radius, depth)]

    def axis_distance(self, m: np.ndarray, length: float) -> float:
        """Distance from i to the axis of m (sinh(d/2) = cosh(r) sinh(l/2))."""
        d = float(_displacement(m))
        return math.acosh(max(math.sinh(d / 2) / math.sinh(length / 2), 1.0))


_workspaces: "weakref.WeakKeyDictionary[FuchsianGroup, _Workspace]" = weakref.WeakKeyDictionary()


def _workspace(group: FuchsianGroup) -> _Workspace:
    ws = _workspaces.get(group)
    if ws is None:
        ws = _workspaces[group] = _Workspace(group)
    return ws


# -- enumeration ----------------------------------------------------------------


@dataclass
class _Candidate:
    word: tuple
    length: float


def cyclic_reduction(w) -> tuple:
    w = tuple(w)
    while len(w) > 1 and (w[0] - w[-1]) % 8 == 4:
        w = w[1:-1]
    return w


def _collect(ws: _Workspace, max_len: int, radius: float, cutoff: float) -> dict:
    """Canonical primitive words of length <= cutoff among the orbit elements."""
    orb, sel = ws.orbit(radius, max_len)
    mats = orb.mats[sel]
    tr = np.abs(mats[:, 0, 0] + mats[:, 1, 1])
    ch_cut = 2.0 * math.cosh(cutoff / 2.0) * (1 + 1e-12) if math.isfinite(cutoff) else math.inf
    cands: dict = {}
    for j in np.nonzero((tr > 2.0 + _TRACE_FLOOR) & (tr <= ch_cut))[0]:
        c = canonical_word(cyclic_reduction(orb.word(sel[j])))
        if c in cands or primitive_period(c) != len(c):
            continue
        cands[c] = _Candidate(c, 2.0 * math.acosh(tr[j] / 2.0))
    return cands


def _tie_order(items, length, rtol=1e-9):
    """Sort by length, treating lengths within rtol as equal (then shortest word first)."""
    items = sorted(items, key=length)
    out, block = [], []
    for it in items:
        if block and length(it) - length(block[0]) > rtol * length(block[0]):
            out.extend(sorted(block, key=lambda c: (len(c.word), c.word)))
            block = []
        block.append(it)
    out.extend(sorted(block, key=lambda c: (len(c.word), c.word)))
    return out


def _probe_alphabets() -> list:
    global _PROBE_ALPH
    if _PROBE_ALPH is None:
        _PROBE_ALPH = [glue_alphabet(p) for p in PROBES]
    return _PROBE_ALPH


def probe_lengths(word) -> np.ndarray:
    """Lengths of ``word`` on the fixed probe surfaces."""
    out = []
    for alph in _probe_alphabets():
        m = np.eye(2)
        for k in word:
            m = m @ alph[k]
        out.append(2.0 * math.acosh(max(abs(m[0, 0] + m[1, 1]) / 2.0, 1.0)))
    return np.array(out)


def _same_length_function(la: float, pa: np.ndarray, lc: float, pc: np.ndarray, k: int = 1) -> bool:
    if abs(lc - k * la) > _MATCH_RTOL * lc:
        return False
    return bool(np.all(np.abs(pc - k * pa) <= _PROBE_RTOL * pc))


def _probe_workspace() -> "_Workspace":
    global _PROBE_WS
    if _PROBE_WS is None:
        _PROBE_WS = _Workspace(fn_to_group(PROBES[0]))
    return _PROBE_WS


def _adj(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def _conjugated_into(H: np.ndarray, A: np.ndarray, C: np.ndarray) -> bool:
    """Is h A h^-1 = +-C or +-C^-1 for some h in H?"""
    Hi = np.empty_like(H)
    Hi[:, 0, 0], Hi[:, 1, 1] = H[:, 1, 1], H[:, 0, 0]
    Hi[:, 0, 1], Hi[:, 1, 0] = -H[:, 0, 1], -H[:, 1, 0]
    X = H @ A @ Hi
    tol = _CONJ_TOL * max(1.0, float(np.abs(C).max()))
    for T in (C, _adj(C)):
        for s in (1.0, -1.0):
            if np.any(np.abs(X - s * T).max(axis=(1, 2)) <= tol):
                return True
    return False


def _rotations(ws: "_Workspace", w: tuple, k: int) -> list:
    """(matrix of rotation^k, distance from i to its axis) for every rotation of w."""
    out = []
    for i in range(len(w)):
        m = np.linalg.matrix_power(ws.word_matrix(w[i:] + w[:i]), k)
        out.append((m, ws.axis_distance(m, translation_length(m))))
    return out


def conjugate_words(a, c, k: int = 1, group: FuchsianGroup | None = None) -> bool:
    """Is the closed curve of ``c`` the k-th power of that of ``a`` (orientation ignored)?

    First tries short conjugators (after cyclic rotation of ``a``); failing that,
    searches the ball of radius r_a + r_c + l/2 around the base point, which
    contains a conjugator whenever one exists (r: distance from the base point
    to the axis, l: translation length of c).  The ball is taken on whichever of
    ``group`` and a fixed thick surface makes it smallest.
    """
    a, c = tuple(a), tuple(c)
    key = (a, c, k)
    hit = _conj_cache.get(key)
    if hit is not None:
        return hit
    pws = _probe_workspace()
    orb, sel = pws.orbit(math.inf, CONJ_WORD_CAP)
    short = orb.mats[sel]
    C = pws.word_matrix(c)
    found = any(_conjugated_into(short, m, C) for m, _ in _rotations(pws, a, k))
    if not found:
        best = None
        for ws in [pws] + ([_workspace(group)] if group is not None else []):
            ra = min(_rotations(ws, a, k), key=lambda t: t[1])
            rc = min(_rotations(ws, c, 1), key=lambda t: t[1])
            radius = ra[1] + rc[1] + translation_length(rc[0]) / 2 + 1e-6
            if best is None or radius < best[0]:
                best = (radius, ws, ra[0], rc[0])
        radius, ws, A, Cs = best
        found = _conjugated_into(ws.ball(radius), A, Cs)
    _conj_cache[key] = found
    return found


def _merge_surface_duplicates(cands, group: FuchsianGroup | None = None) -> list:
    """Drop candidates that are the same surface class as, or a power of, an accepted one.

    Matching lengths, here and on the probe surfaces, is necessary for
    c ~ a^k; different free homotopy classes can still share a length function
    (the hyperelliptic involution swaps such pairs), so a match is confirmed by
    finding a conjugating group element.
    """
    ordered = _tie_order(cands, lambda c: c.length)
    accepted: list = []
    probes: list = []
    for c in ordered:
        pc = None
        dup = False
        for a, pa in zip(accepted, probes):
            k = round(c.length / a.length)
            if k < 1 or abs(c.length - k * a.length) > _MATCH_RTOL * c.length:
                continue
            if pc is None:
                pc = probe_lengths(c.word)
            if _same_length_function(a.length, pa, c.length, pc, k) and conjugate_words(a.word, c.word, k, group):
                dup = True
                break
        if not dup:
            accepted.append(c)
            probes.append(probe_lengths(c.word) if pc is None else pc)
    return accepted


def _to_classes(group: FuchsianGroup, cands) -> list:
    out = []
    for c in cands:
        m = group.element(c.word)
        out.append(GeodesicClass(word=c.word, length=translation_length(m), axis=axis(m), matrix=m))
    return _tie_order(out, lambda g: g.length)


def word_bound(group: FuchsianGroup, cutoff: float) -> int:
    """Heuristic word-length bound ceil(cutoff / lambda_min) + 4."""
    # rounding noise must not push an exact integer ratio up by one
    return int(math.ceil(cutoff / _workspace(group).lambda_min - 1e-9)) + 4


def enumerate_classes(group: FuchsianGroup, max_word_length: int) -> list:
    """One class per conjugacy class among cyclically reduced words up to the given length."""
    if max_word_length < 1:
        raise ValueError("max_word_length must be >= 1")
    ws = _workspace(group)
    cands = _collect(ws, max_word_length, math.inf, math.inf)
    return _to_classes(group, _merge_surface_duplicates(cands.values(), group))


def length_spectrum(
    group: FuchsianGroup,
    cutoff: float,
    *,
    hard_cap: int = HARD_CAP,
    word_cap: int | None = None,
    slack: float | None = None,
) -> list:
    """Primitive closed geodesics of length <= cutoff, sorted by (length, word).

    ``word_cap`` defaults to :func:`word_bound`; ``slack`` (extra displacement
    allowed to prefixes) defaults to the largest generator displacement.
    """
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    ws = _workspace(group)
    W = word_bound(group, cutoff) if word_cap is None else int(word_cap)
    if word_cap is None and W > hard_cap:
        raise SpectrumError(f"cutoff too deep (word bound {W} > cap {hard_cap})")
    if slack is None:
        slack = ws.max_gen_disp
    cands = _collect(ws, W, cutoff + slack, cutoff)
    return _to_classes(group, _merge_surface_duplicates(cands.values(), group))


def spectrum_csv(classes) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["word", "length", "trace"])
    for c in classes:
        w.writerow([c.name, repr(c.length), repr(abs(c.trace))])
    return buf.getvalue()


# -- intersections --------------------------------------------------------------


def same_class(g1: GeodesicClass, g2: GeodesicClass, group: FuchsianGroup | None = None) -> bool:
    """Do two classes name the same unoriented closed geodesic?"""
    if g1.word == g2.word:
        return True
    if not _same_length_function(g1.length, probe_lengths(g1.word), g2.length, probe_lengths(g2.word)):
        return False
    return conjugate_words(g1.word, g2.word, 1, group)


def _best_rotation(ws: _Workspace, word) -> tuple:
    """Centred matrix of the rotation of ``word`` whose axis is closest to i, and that distance."""
    best = None
    for i in range(len(word)):
        w = word[i:] + word[:i]
        m = ws.word_matrix(w)
        length = translation_length(m)
        r = ws.axis_distance(m, length)
        if best is None or r < best[1]:
            best = (m, r, length)
    return best


def _ends(m: np.ndarray) -> np.ndarray:
    ax = axis(m)
    return np.array(ax.angles())


def _moebius_boundary(B: np.ndarray, x: float) -> np.ndarray:
    a, b, c, d = B[:, 0, 0], B[:, 0, 1], B[:, 1, 0], B[:, 1, 1]
    if math.isinf(x):
        num, den = a, c
    else:
        num, den = a * x + b, c * x + d
    return num, den


def _angles_of(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # boundary point num/den (den may vanish) mapped to the unit circle
    w = (num - 1j * den) / (num + 1j * den)
    return np.mod(np.angle(w), 2 * np.pi)


def _interleaved(p1, p2, q1, q2, tol=1e-12) -> np.ndarray:
    two_pi = 2 * np.pi
    span = np.mod(p2 - p1, two_pi)
    in1 = (np.mod(q1 - p1, two_pi) > 0) & (np.mod(q1 - p1, two_pi) < span)
    in2 = (np.mod(q2 - p1, two_pi) > 0) & (np.mod(q2 - p1, two_pi) < span)

    def near(a, b):
        d = np.mod(np.abs(a - b), two_pi)
        return np.minimum(d, two_pi - d) < tol

    touching = near(q1, p1) | near(q1, p2) | near(q2, p1) | near(q2, p2)
    return (in1 != in2) & ~touching


def intersects(
    group: FuchsianGroup,
    g1: GeodesicClass,
    g2: GeodesicClass,
    *,
    word_cap: int = INTERSECT_WORD_CAP,
    collar: bool = True,
) -> bool:
    """Do the closed geodesics of two distinct classes meet on the surface?

    Looks for a translate x.axis(g2) crossing axis(g1).  Taking the crossing
    point within half a period of the foot of i on axis(g1), and its preimage
    within half a period of the foot of i on axis(g2), forces
    ``d(i, x i) <= r1 + r2 + (l1 + l2) / 2`` where ``r`` is the distance from i to
    the axis; only that ball is searched.
    """
    if collar and g1.length <= EPS0 and g2.length <= EPS0:
        if g1.word == g2.word:
            raise ValueError("same class")
        return False
    ws = _workspace(group)
    if same_class(g1, g2, group):
        raise ValueError("same class")
    m1, r1, l1 = _best_rotation(ws, g1.word)
    m2, r2, l2 = _best_rotation(ws, g2.word)
    B = ws.ball(r1 + r2 + (l1 + l2) / 2 + 1e-6, depth=word_cap)
    p1, p2 = _ends(m1)
    ax2 = axis(m2)
    n1, d1 = _moebius_boundary(B, ax2.attracting)
    n2, d2 = _moebius_boundary(B, ax2.repelling)
    q1, q2 = _angles_of(n1, d1), _angles_of(n2, d2)
    return bool(np.any(_interleaved(p1, p2, q1, q2)))


# -- systoles ---------------------------------------------------------------------


def _first_length(group: FuchsianGroup) -> float:
    ws = _workspace(group)
    best = math.inf
    for a in range(8):
        best = min(best, translation_length(ws.alphabet[a]))
        for b in range(8):
            if (a - b) % 8 != 4:
                best = min(best, translation_length(ws.alphabet[a] @ ws.alphabet[b]))
    return best


def systole_set(
    group: FuchsianGroup,
    tol_sys: float = TOL_SYS,
    *,
    margin: float = SYSTOLE_MARGIN,
    hard_cap: int = HARD_CAP,
    intersections: bool = True,
) -> SystoleSet:
    """Systoles of the surface: all classes within tol_sys of the shortest length."""
    cutoff = _first_length(group) * (1 + margin)
    spec = length_spectrum(group, cutoff, hard_cap=hard_cap)
    if not spec:
        raise SpectrumError("no closed geodesic found below the first-found length")
    sys_len = spec[0].length
    classes = [c for c in spec if c.length - sys_len <= tol_sys]
    rest = [c for c in spec if c.length - sys_len > tol_sys]
    next_is_bound = False
    while not rest:
        cutoff *= 1 + margin
        try:
            spec = length_spectrum(group, cutoff, hard_cap=hard_cap)
        except SpectrumError:
            next_is_bound = True
            break
        rest = [c for c in spec if c.length - sys_len > tol_sys]
    next_length = rest[0].length if rest else cutoff / (1 + margin)
    out = SystoleSet(classes, sys_len, next_length, next_is_bound=next_is_bound, tol_sys=tol_sys)
    if intersections:
        out.intersection_pairs = [
            (i, j)
            for i in range(len(classes))
            for j in range(i + 1, len(classes))
            if intersects(group, classes[i], classes[j])
        ]
    return out
