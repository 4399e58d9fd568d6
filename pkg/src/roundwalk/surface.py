"""Systole-equalizing flow on genus-2 Teichmuller space.

The flow raises the lengths of all current systoles at one common rate.  When
another closed geodesic catches up it joins the set (a stratum-growth event)
and the flow continues on the smaller stratum.  It stops in the thick part
(systole >= eps), on the spine S (at least two systoles, two of which
intersect), or on S'' (spine with at least three systoles).

Gradients are taken with respect to the Euclidean metric in the chart
``(l_1, l_2, l_3, theta_1, theta_2, theta_3)`` with ``theta_i = tau_i / l_i``.
A full Dehn twist about cuff i is the translation ``theta_i -> theta_i + 1``
there, so the flow commutes with twists about the pants curves.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hyperbolic import FNPoint, fn_to_group, parse_word, word_lengths, word_str
from .spectrum import (
    EPS0,
    TOL_SYS,
    GeodesicClass,
    SystoleSet,
    canonical_word,
    length_spectrum,
    probe_lengths,
    systole_set,
)

FD_STEP = 1e-5
FD_FLOOR = 1e-6
INITIAL_STEP = 1e-2
MIN_STEP = 1e-10
COND_LIMIT = 1e10
MAX_STEPS = 20000
STOP_KINDS = ("thick", "spine", "s2")


class FlowError(RuntimeError):
    pass


# -- chart ----------------------------------------------------------------------


def to_chart(p: FNPoint) -> np.ndarray:
    L = np.asarray(p.lengths, dtype=float)
    return np.concatenate([L, np.asarray(p.twists, dtype=float) / L])


def from_chart(x: np.ndarray) -> FNPoint:
    L = np.asarray(x[:3], dtype=float)
    return FNPoint(tuple(float(v) for v in L), tuple(float(v) for v in x[3:] * L))


def _lengths_at(x: np.ndarray, words) -> np.ndarray:
    if np.any(x[:3] <= 0):
        raise FlowError("left Teichmuller space (nonpositive length)")
    return word_lengths(from_chart(x), words)


def _words(curves) -> list:
    out = []
    for c in curves:
        if isinstance(c, GeodesicClass):
            out.append(c.word)
        else:
            out.append(canonical_word(parse_word(c)))
    return out


# -- records --------------------------------------------------------------------


@dataclass
class Stratum:
    curves: list

    @property
    def k(self) -> int:
        return len(self.curves)

    def to_dict(self) -> dict:
        return {"k": self.k, "curves": [word_str(w) for w in self.curves]}


@dataclass
class FlowEvent:
    kind: str
    time: float
    systole_before: float
    systole_after: float
    k_before: int
    k_after: int
    curves: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "time": self.time,
            "systole_before": self.systole_before,
            "systole_after": self.systole_after,
            "k_before": self.k_before,
            "k_after": self.k_after,
            "curves": [word_str(w) for w in self.curves],
        }


@dataclass
class Classification:
    eps: float
    systoles: SystoleSet
    in_thick: bool
    in_S: bool
    in_S_prime: bool
    in_S_doubleprime: bool

    @property
    def k(self) -> int:
        return self.systoles.k

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "in_thick": self.in_thick,
            "in_S": self.in_S,
            "in_S_prime": self.in_S_prime,
            "in_S_doubleprime": self.in_S_doubleprime,
            "systoles": self.systoles.to_dict(),
        }


@dataclass
class SurfaceTrajectory:
    states: list = field(default_factory=list)
    times: list = field(default_factory=list)
    systoles: list = field(default_factory=list)  # per state: (systole, k, spread)
    events: list = field(default_factory=list)
    terminal_class: str | None = None
    stop: str = "thick"
    eps: float = 1.0

    @property
    def final(self) -> FNPoint:
        return self.states[-1]

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    def to_dict(self) -> dict:
        return {
            "stop": self.stop,
            "eps": self.eps,
            "terminal_class": self.terminal_class,
            "states": [
                {"time": t, "fn": p.to_dict(), "systole": s, "k": k, "spread": d}
                for p, t, (s, k, d) in zip(self.states, self.times, self.systoles)
            ],
            "events": [e.to_dict() for e in self.events],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "systole", "k"])
        for t, (s, k, _) in zip(self.times, self.systoles):
            w.writerow([repr(t), repr(s), k])
        return buf.getvalue()


# -- classification --------------------------------------------------------------


def _check_eps(eps: float) -> None:
    if not (0 < eps <= EPS0):
        raise ValueError(f"eps must lie in (0, {EPS0:.6g}]")


def _classify_set(s: SystoleSet, eps: float, tol_sys: float) -> Classification:
    in_S = s.k >= 2 and bool(s.intersection_pairs)
    return Classification(
        eps=eps,
        systoles=s,
        in_thick=s.systole >= eps - tol_sys,
        in_S=in_S,
        in_S_prime=s.k == 2 and bool(s.intersection_pairs),
        in_S_doubleprime=in_S and s.k >= 3,
    )


def classify(p: FNPoint, eps: float = 1.0, tol_sys: float = TOL_SYS) -> Classification:
    """Thick-part and spine membership of the surface ``p``."""
    _check_eps(eps)
    return _classify_set(systole_set(fn_to_group(p), tol_sys), eps, tol_sys)


# -- gradients ------------------------------------------------------------------


def _fd_steps(x: np.ndarray, h: float) -> np.ndarray:
    return np.maximum(h * np.abs(x), FD_FLOOR)


def _gradients(x: np.ndarray, words, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradients (k x 6) of the word lengths at chart point x."""
    steps = _fd_steps(x, h)
    G = np.empty((len(words), 6))
    for j in range(6):
        e = np.zeros(6)
        e[j] = steps[j]
        G[:, j] = (_lengths_at(x + e, words) - _lengths_at(x - e, words)) / (2 * steps[j])
    return G


def length_gradient(p: FNPoint, c, h: float = FD_STEP, chart: str = "fn") -> np.ndarray:
    """Gradient of the length of ``c`` (class or word).

    ``chart="fn"`` differentiates in (l, tau); ``chart="flow"`` in (l, tau/l),
    the coordinates the flow uses.
    """
    (w,) = _words([c])
    if chart == "flow":
        return _gradients(to_chart(p), [w], h)[0]
    if chart != "fn":
        raise ValueError("chart must be 'fn' or 'flow'")
    x = p.as_array()
    steps = _fd_steps(x, h)
    g = np.empty(6)
    for j in range(6):
        e = np.zeros(6)
        e[j] = steps[j]
        hi = word_lengths(FNPoint.from_array(x + e), [w])[0]
        lo = word_lengths(FNPoint.from_array(x - e), [w])[0]
        g[j] = (hi - lo) / (2 * steps[j])
    return g


def _direction(G: np.ndarray) -> np.ndarray:
    GG = G @ G.T
    if np.linalg.cond(GG) > COND_LIMIT:
        raise FlowError("degenerate stratum")
    v = G.T @ np.linalg.solve(GG, np.ones(len(G)))
    return v / np.linalg.norm(v)


def stratum_direction(p: FNPoint, s) -> np.ndarray:
    """Unit direction (flow chart) raising all systole lengths at one common rate.

    ``s`` is a SystoleSet or a list of classes/words.  Returns the normalised
    minimum-norm solution of G v = 1.
    """
    curves = s.classes if isinstance(s, SystoleSet) else s
    if not 1 <= len(curves) <= 6:
        raise ValueError("need between 1 and 6 curves")
    return _direction(_gradients(to_chart(p), _words(curves)))


# -- the flow ---------------------------------------------------------------------


def _project(x: np.ndarray, words, G: np.ndarray, tol: float, iters: int = 30) -> np.ndarray | None:
    """Newton (minimum-norm) projection onto l_i = l_1 for all i."""
    if len(words) == 1:
        return x
    J = G[1:] - G[0]
    for _ in range(iters):
        ell = _lengths_at(x, words)
        r = ell[1:] - ell[0]
        if np.max(np.abs(r)) <= tol:
            return x
        x = x - J.T @ np.linalg.solve(J @ J.T, r)
    ell = _lengths_at(x, words)
    return x if np.max(np.abs(ell[1:] - ell[0])) <= tol else None


def _same(fa: np.ndarray, fb: np.ndarray) -> bool:
    return bool(np.all(np.abs(fa - fb) <= 1e-8 * fa))


class _Flow:
    """State of one trajectory; see :func:`flow`."""

    def __init__(self, p: FNPoint, stop: str, eps: float, tol_sys: float, step: float, max_steps: int):
        self.stop, self.eps, self.tol = stop, eps, tol_sys
        self.step0 = step
        self.max_steps = max_steps
        self.x = to_chart(p)
        self.time = 0.0
        self.traj = SurfaceTrajectory(stop=stop, eps=eps)
        self.info = self._classify(self.x)
        self.words = list(self.info.systoles.words)
        self.prints = [probe_lengths(w) for w in self.words]
        self._record()

    # helpers
    def _classify(self, x) -> Classification:
        s = systole_set(fn_to_group(from_chart(x)), self.tol, intersections=self.stop != "thick")
        return _classify_set(s, self.eps, self.tol)

    def _common(self, x) -> float:
        return float(_lengths_at(x, self.words).mean())

    def _in_stratum(self, w) -> bool:
        f = probe_lengths(w)
        return any(_same(f, g) for g in self.prints)

    def _record(self):
        ell = _lengths_at(self.x, self.words)
        self.traj.states.append(from_chart(self.x))
        self.traj.times.append(self.time)
        self.traj.systoles.append((float(ell.min()), len(self.words), float(ell.max() - ell.min())))

    def done(self) -> bool:
        c = self.info
        if self.stop == "thick":
            # a start within tol_sys of eps counts as arrived; a moving flow lands at or above eps
            return c.in_thick if self.time == 0.0 else self._common(self.x) >= self.eps
        if self.stop == "spine":
            return c.in_S
        return c.in_S_doubleprime

    def _trial(self, h: float, v: np.ndarray, G: np.ndarray):
        x = self.x + h * v
        if np.any(x[:3] <= 0):
            return None
        return _project(x, self.words, G, 0.1 * self.tol)

    def _newcomers(self, x, L: float) -> list:
        """Words of classes outside the stratum with length <= L + tol at x."""
        spec = length_spectrum(fn_to_group(from_chart(x)), L + self.tol)
        return [c.word for c in spec if not self._in_stratum(c.word)]

    def _gap(self, x, others) -> float:
        """Event function: positive once past the first event."""
        L = self._common(x)
        g = -math.inf
        if others:
            g = L - float(_lengths_at(x, others).min())
        if self.stop == "thick":
            # aim slightly above eps so the terminal systole is never below it
            g = max(g, L - self.eps - 0.5 * self.tol)
        return g

    # main loop
    def run(self) -> SurfaceTrajectory:
        h = self.step0
        steps = 0
        while not self.done():
            steps += 1
            if steps > self.max_steps:
                raise FlowError(f"no arrival after {self.max_steps} steps at {from_chart(self.x).to_json()}")
            G = _gradients(self.x, self.words)
            v = _direction(G)
            L0 = self._common(self.x)
            while True:
                if h < MIN_STEP:
                    raise FlowError(f"stalled at {from_chart(self.x).to_json()}")
                x = self._trial(h, v, G)
                if x is None or not self._common(x) > L0:
                    h /= 2
                    continue
                break
            L1 = self._common(x)
            info = self._classify(x)
            others = []
            if info.systoles.systole < L1 - self.tol:
                others = self._newcomers(x, L1)
            past_eps = self.stop == "thick" and L1 > self.eps + 0.5 * self.tol
            if others or past_eps:
                x, h_used = self._locate(v, G, h, others)
                self._accept(x, h_used, self._classify(x))
            else:
                self._accept(x, h, info)
                h = min(2 * h, self.step0)
        self.traj.terminal_class = {"thick": "thick", "spine": "spine-S", "s2": "spine-S2"}[self.stop]
        return self.traj

    def _locate(self, v, G, h, others):
        """Bisect the step down onto the first event (a class catching up, or eps)."""
        lo, hi = 0.0, h
        x_lo = self.x
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            x = self._trial(mid, v, G)
            if x is None:
                hi = mid
                continue
            g = self._gap(x, others)
            if g > 0:
                hi = mid
            else:
                lo, x_lo = mid, x
                if g >= -0.25 * self.tol:
                    break
            if hi - lo <= 1e-15 * max(1.0, h):
                break
        if lo == 0.0:
            raise FlowError(f"stalled at {from_chart(self.x).to_json()}")
        return x_lo, lo

    def _accept(self, x, dh: float, info: Classification):
        k_before = len(self.words)
        sys_before = self._common(self.x)
        self.x = x
        self.time += float(dh)
        self.info = info
        L = self._common(x)
        grown = [w for w in info.systoles.words if not self._in_stratum(w)]
        if grown and info.systoles.systole >= L - self.tol:
            self.words += grown
            self.prints += [probe_lengths(w) for w in grown]
            self.traj.events.append(
                FlowEvent("stratum-growth", self.time, sys_before, self._common(x), k_before, len(self.words), grown)
            )
        self._record()
        if self.done():
            kind = {"thick": "thick-arrival", "spine": "spine-arrival", "s2": "s2-arrival"}[self.stop]
            self.traj.events.append(FlowEvent(kind, self.time, sys_before, L, k_before, len(self.words)))


def flow(
    p: FNPoint,
    stop: str = "thick",
    eps: float = 1.0,
    tol_sys: float = TOL_SYS,
    step: float = INITIAL_STEP,
    max_steps: int = MAX_STEPS,
) -> SurfaceTrajectory:
    """Run the equal-rate systole flow from ``p`` until the stopping rule holds."""
    if stop not in STOP_KINDS:
        raise ValueError(f"stop must be one of {STOP_KINDS}")
    _check_eps(eps)
    f = _Flow(p, stop, eps, tol_sys, step, max_steps)
    return f.run()
