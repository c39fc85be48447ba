"""Target functions reduced by the perturbation steps.

The main target sums sqrt(|x_j - med(x_j, right, below)|) over every pixel
outside the last column/row.  Its partial derivatives are not usable, but a
single-pixel change touches at most three terms, so probes re-evaluate in
O(1) against a cached term table.  A smooth half-squared-norm target ships
alongside for exercising the gradient-based machinery in tests.
"""

import numpy as np

from ._backend import kernels
from ._kernels_py import probe_phi
from .system import ImageVector


class TargetCache:
    """Per-term values plus their running total."""

    __slots__ = ("terms", "total")

    def __init__(self, terms, total):
        self.terms = terms
        self.total = total


class ProbeResult:
    __slots__ = ("value", "updates", "term_evals")

    def __init__(self, value, updates, term_evals):
        self.value = value
        self.updates = updates
        self.term_evals = term_evals


def _values(x):
    return x.values if isinstance(x, ImageVector) else x


class MedianRoughnessTarget:
    """Median-deviation roughness over the W x H pixel grid."""

    def __init__(self, width, height):
        if width < 1 or height < 1:
            raise ValueError("grid dimensions must be positive")
        self.width = width
        self.height = height
        self.size = width * height

    @property
    def term_count(self):
        return (self.width - 1) * (self.height - 1)

    def _check(self, values):
        if values.size != self.size:
            raise ValueError(f"dimension mismatch: expected {self.size} values")

    def full(self, x):
        """Evaluate from scratch; returns (value, cache)."""
        values = _values(x)
        self._check(values)
        terms = np.zeros(self.size)
        total = kernels().median_terms(values, self.width, self.height, terms)
        return total, TargetCache(terms, total)

    def refresh(self, cache, x):
        """Recompute the cache in place after x changed arbitrarily."""
        values = _values(x)
        self._check(values)
        cache.total = kernels().median_terms(values, self.width, self.height, cache.terms)
        return cache.total

    def probe(self, cache, x, j, new_value):
        """Candidate value after setting x[j] = new_value; touches <= 3 terms."""
        values = _values(x)
        if not 0 <= j < self.size:
            raise IndexError(f"pixel index {j} out of range")
        phi_z, nterms, updates = probe_phi(
            values, cache.terms, cache.total, j, new_value, self.width, self.height
        )
        return ProbeResult(float(phi_z), updates, nterms)

    def commit(self, cache, x, j, new_value, result):
        values = _values(x)
        for t, nv in result.updates:
            cache.terms[t] = nv
        values[j] = new_value
        cache.total = result.value

    def update(self, cache, x, j, new_value):
        """Apply a single-pixel change and return the new value (O(1))."""
        result = self.probe(cache, x, j, new_value)
        self.commit(cache, x, j, new_value, result)
        return result.value

    gradient = None  # no usable derivatives; that is the point of this target


class HalfSquaredNorm:
    """0.5*||x||^2: a smooth convex stand-in used by the gradient-provider
    and nonascent property tests."""

    def __init__(self, size):
        self.size = size

    def full(self, x):
        values = _values(x)
        if values.size != self.size:
            raise ValueError(f"dimension mismatch: expected {self.size} values")
        total = 0.5 * float(np.dot(values, values))
        return total, TargetCache(None, total)

    def refresh(self, cache, x):
        cache.total = self.full(x)[0]
        return cache.total

    def probe(self, cache, x, j, new_value):
        values = _values(x)
        xj = values[j]
        phi_z = cache.total + 0.5 * (new_value * new_value - xj * xj)
        return ProbeResult(float(phi_z), (), 0)

    def commit(self, cache, x, j, new_value, result):
        _values(x)[j] = new_value
        cache.total = result.value

    def update(self, cache, x, j, new_value):
        result = self.probe(cache, x, j, new_value)
        self.commit(cache, x, j, new_value, result)
        return result.value

    def gradient(self, x):
        return _values(x).copy()


class DomainSpec:
    """Membership test for the perturbation domain: all of space, or a box."""

    def __init__(self, kind, lo=None, hi=None):
        if kind not in ("all", "box"):
            raise ValueError(f"unknown domain kind {kind!r}")
        self.kind = kind
        if kind == "box":
            self.lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
            self.hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
            if self.lo.shape != self.hi.shape:
                raise ValueError("box bounds must have matching shapes")
            if np.any(self.lo > self.hi):
                raise ValueError("box lower bounds must not exceed upper bounds")
        else:
            self.lo = self.hi = None

    @classmethod
    def all_space(cls):
        return cls("all")

    @classmethod
    def box(cls, lo, hi):
        return cls("box", lo, hi)

    def contains(self, x):
        values = _values(x)
        if self.kind == "all":
            return True
        lo, hi = np.broadcast_to(self.lo, values.shape), np.broadcast_to(self.hi, values.shape)
        return bool(np.all((values >= lo) & (values <= hi)))

    def probe_state(self, x):
        """O(1)-checkable form for single-pixel probes from base x: None for
        all-of-space, else (lo, hi, n_outside, offending_index)."""
        if self.kind == "all":
            return None
        values = _values(x)
        lo = np.ascontiguousarray(np.broadcast_to(self.lo, values.shape), dtype=np.float64)
        hi = np.ascontiguousarray(np.broadcast_to(self.hi, values.shape), dtype=np.float64)
        bad = np.flatnonzero((values < lo) | (values > hi))
        bad_j = int(bad[0]) if bad.size == 1 else -1
        return (lo, hi, int(bad.size), bad_j)


def in_domain(spec, x):
    return spec.contains(x)
