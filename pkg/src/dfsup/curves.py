"""Evaluating and comparing runs by their proximity-target behavior.

A slice of a trace whose proximity strictly decreases defines a piecewise
linear curve in the (proximity, target) plane.  One run is better targeted
than another when, over the proximity range both curves cover, its curve is
nowhere above the other's.  Since both curves are piecewise linear, checking
the union of their breakpoints inside the shared range decides the relation
exactly; extra uniform samples are redundancy only.
"""

from dataclasses import dataclass

import numpy as np


class NonMonotoneError(ValueError):
    """Raised when a slice fails strict proximity decrease; .index is the
    first offending iteration."""

    def __init__(self, index):
        super().__init__(f"proximity does not strictly decrease at iteration {index}")
        self.index = index


@dataclass(frozen=True)
class TraceRecord:
    k: int
    proximity: float
    target: float


def _check_slice(trace, lo, hi):
    last = int(trace.k[-1])
    if not (0 <= lo < hi <= last):
        raise ValueError(f"bad slice bounds [{lo}, {hi}] for a trace over k=0..{last}")


def epsilon_output(trace, eps):
    """First recorded iterate whose proximity is at or below eps, or None.

    Every earlier record has proximity strictly above eps; that makes the
    returned record the run's output under an eps stopping rule.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    for i in range(len(trace)):
        if trace.proximity[i] <= eps:
            return TraceRecord(int(trace.k[i]), float(trace.proximity[i]), float(trace.target[i]))
    return None


def is_monotone_proximity(trace, lo, hi):
    """True when proximity strictly decreases at every step of [lo, hi]."""
    _check_slice(trace, lo, hi)
    p = trace.proximity
    return bool(np.all(p[lo:hi] > p[lo + 1 : hi + 1]))


class ProximityTargetCurve:
    """Piecewise-linear curve through (proximity, target) vertices with
    strictly decreasing proximity."""

    def __init__(self, vertices):
        vertices = np.asarray(vertices, dtype=np.float64)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or vertices.shape[0] < 1:
            raise ValueError("need an (n, 2) array of (proximity, target) vertices")
        if np.any(np.diff(vertices[:, 0]) >= 0):
            bad = int(np.flatnonzero(np.diff(vertices[:, 0]) >= 0)[0]) + 1
            raise NonMonotoneError(bad)
        self.vertices = vertices

    def __len__(self):
        return self.vertices.shape[0]

    @property
    def start_proximity(self):
        return float(self.vertices[0, 0])

    @property
    def end_proximity(self):
        return float(self.vertices[-1, 0])

    def breakpoints(self):
        return self.vertices[:, 0].copy()


def build_curve(trace, lo, hi):
    """Curve of the trace slice [lo, hi]; the slice must be of monotone
    proximity (the first offending index is reported otherwise)."""
    _check_slice(trace, lo, hi)
    p = trace.proximity
    worse = np.flatnonzero(p[lo:hi] <= p[lo + 1 : hi + 1])
    if worse.size:
        raise NonMonotoneError(lo + int(worse[0]) + 1)
    return ProximityTargetCurve(
        np.column_stack([p[lo : hi + 1], trace.target[lo : hi + 1]])
    )


def curve_value(curve, h):
    """Target value of the curve at proximity h.

    Exact at vertices, linear interpolation between them; h outside the
    curve's proximity range is an error.
    """
    p = curve.vertices[:, 0]
    t = curve.vertices[:, 1]
    if h > p[0] or h < p[-1]:
        raise ValueError(f"proximity {h} outside the curve range [{p[-1]}, {p[0]}]")
    # first vertex (in decreasing-proximity order) with proximity <= h
    i = p.size - int(np.searchsorted(p[::-1], h, side="right"))
    if p[i] == h:
        return float(t[i])
    # h lies strictly between vertices i-1 (above) and i (below)
    p_hi, t_hi = p[i - 1], t[i - 1]
    p_lo, t_lo = p[i], t[i]
    return float(t_lo + (h - p_lo) * (t_hi - t_lo) / (p_hi - p_lo))


@dataclass(frozen=True)
class Verdict:
    better: bool
    t: float
    u: float
    witness: float | None = None
    reason: str = ""

    def report(self):
        verdict = "better" if self.better else "not-better"
        witness = "" if self.witness is None else repr(self.witness)
        return f"t={self.t!r} u={self.u!r} verdict={verdict} witness={witness}"


def better_targeted(curve_p, curve_q, samples=100):
    """Is curve P at or below curve Q over their shared proximity range?

    t is the larger of the two ending proximities, u the smaller of the two
    starting ones.  When t > u the ranges do not overlap and the verdict is
    not-better with that reason (the relation is undefined there).  The
    comparison runs at the union of both curves' breakpoints inside [t, u]
    plus `samples` uniform points, with a 1e-12 relative tolerance.
    """
    t = max(curve_p.end_proximity, curve_q.end_proximity)
    u = min(curve_p.start_proximity, curve_q.start_proximity)
    if t > u:
        return Verdict(False, t, u, None, "no overlap")
    points = [np.array([t, u])]
    for curve in (curve_p, curve_q):
        b = curve.breakpoints()
        points.append(b[(b >= t) & (b <= u)])
    if samples >= 2:
        points.append(np.linspace(t, u, samples))
    checks = np.unique(np.concatenate(points))
    scale = max(
        1.0,
        float(np.max(np.abs(curve_p.vertices[:, 1]))),
        float(np.max(np.abs(curve_q.vertices[:, 1]))),
    )
    tol = 1e-12 * scale
    for h in checks:
        v = curve_value(curve_p, float(h))
        w = curve_value(curve_q, float(h))
        if v > w + tol:
            return Verdict(False, t, u, float(h), "curve above at witness")
    return Verdict(True, t, u)
