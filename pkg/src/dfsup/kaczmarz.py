"""Row-action feasibility seeking: relaxed Kaczmarz sweeps and plain ART.

One sweep visits every row once in the configured order; each visit moves the
iterate toward that row's hyperplane by the relaxation factor.  Updates are
strictly sequential (row i+1 sees row i's move), which is why processing
order matters and why a sweep is not parallelized internally.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .system import ImageVector, proximity
from .trace import IterateTrace


def _bit_reversed(n, bits):
    out = 0
    for _ in range(bits):
        out = (out << 1) | (n & 1)
        n >>= 1
    return out


@dataclass
class RowOrdering:
    """Row processing order; resolves to a permutation of the system's rows.

    Schemes: "sequential" (storage order), "bit-reversal" (projections
    visited in bit-reversed index order, rays inside a projection in natural
    order; this spreads consecutively processed projections far apart), or an
    explicit permutation.  Bit-reversal is defined over the candidate ray
    slots before zero-row dropping; dropped slots are skipped.
    """

    scheme: str
    projections: int = 0
    rays_per_projection: int = 0
    permutation: np.ndarray | None = None

    def __post_init__(self):
        if self.scheme not in ("sequential", "bit-reversal", "explicit"):
            raise ValueError(f"unknown ordering scheme {self.scheme!r}")
        if self.scheme == "bit-reversal" and (self.projections < 1 or self.rays_per_projection < 1):
            raise ValueError("bit-reversal ordering needs positive projection/ray counts")
        if self.scheme == "explicit":
            if self.permutation is None:
                raise ValueError("explicit ordering needs a permutation")
            self.permutation = np.asarray(self.permutation, dtype=np.int64)

    def resolve(self, system):
        I = system.I
        if self.scheme == "sequential":
            return np.arange(I, dtype=np.int64)
        if self.scheme == "explicit":
            perm = self.permutation
            if perm.size != I or not np.array_equal(np.sort(perm), np.arange(I)):
                raise ValueError("explicit permutation must be a bijection on the rows")
            return perm.copy()
        # bit-reversal over projection indices, padded to the next power of two
        P, M = self.projections, self.rays_per_projection
        if system.ray_ids.size and int(system.ray_ids.max()) >= P * M:
            raise ValueError("system ray ids exceed the declared projection/ray layout")
        bits = max(1, (P - 1).bit_length())
        row_of_slot = np.full(P * M, -1, dtype=np.int64)
        row_of_slot[system.ray_ids] = np.arange(I, dtype=np.int64)
        order = []
        for v in range(1 << bits):
            pr = _bit_reversed(v, bits)
            if pr >= P:
                continue
            for r in range(M):
                row = row_of_slot[pr * M + r]
                if row >= 0:
                    order.append(row)
        order = np.asarray(order, dtype=np.int64)
        if order.size != I:
            raise ValueError("ordering did not cover every row; ray ids inconsistent")
        return order


def make_ordering(scheme, projections=0, rays_per_projection=0, permutation=None):
    return RowOrdering(scheme, projections, rays_per_projection, permutation)


@dataclass
class FeasibilityConfig:
    relaxation: float
    ordering: RowOrdering = field(default_factory=lambda: RowOrdering("sequential"))

    def __post_init__(self):
        if not 0.0 < self.relaxation < 2.0:
            warnings.warn(
                f"relaxation {self.relaxation} outside (0, 2); convergence not expected",
                stacklevel=3,
            )


def kaczmarz_sweep(system, config, x):
    """One full relaxed sweep through all rows; the feasibility-seeking step.

    Pure from the caller's view: returns a new ImageVector.
    """
    values = x.values.copy()
    order = config.ordering.resolve(system)
    kernels().kaczmarz_sweep(
        system.indptr, system.indices, system.data, system.rhs, system.norms_sq,
        order, config.relaxation, values,
    )
    return ImageVector(values, x.width, x.height)


def art_run(system, config, start, sweeps, target, metadata=None):
    """Repeated sweeps from `start`; the unperturbed basic algorithm.

    The trace records proximity and the target value at every iterate
    (target values are reported only; they do not influence the updates).
    """
    if sweeps < 1:
        raise ValueError("need at least one sweep")
    if system.J != len(start):
        raise ValueError("dimension mismatch between system and start vector")
    x = start.values.copy()
    order = config.ordering.resolve(system)
    total, cache = target.full(x)

    ks = [0]
    prox = [proximity(system, x)]
    phis = [total]
    kern = kernels()
    for k in range(sweeps):
        kern.kaczmarz_sweep(
            system.indptr, system.indices, system.data, system.rhs, system.norms_sq,
            order, config.relaxation, x,
        )
        ks.append(k + 1)
        prox.append(proximity(system, x))
        phis.append(target.refresh(cache, x))
    n = sweeps + 1
    trace = IterateTrace(
        ks, prox, phis,
        gamma_consumed=np.zeros(n),
        probes_accepted=np.zeros(n, dtype=np.int64),
        probes_rejected=np.zeros(n, dtype=np.int64),
        metadata=metadata,
    )
    trace.final = x.copy()
    return trace
