"""Exterior-penalty baseline: coordinate search on psi = target + eta*proximity.

The point of the work counters: a single-pixel probe on the roughness target
alone touches at most 3 terms, but through the penalty term it must also
revisit every constraint whose row meets that pixel (one entry per ray
through it), which is what makes this baseline expensive on scan-like
systems.  Residuals and the proximity total are cached and updated
incrementally, with a periodic full refresh to bound drift.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from ._kernels_py import probe_phi
from .system import residuals
from .superiorize import DirectionSequence, StepSchedule
from .target import MedianRoughnessTarget
from .trace import IterateTrace


@dataclass
class WorkCounters:
    probes: int = 0
    phi_terms: int = 0
    residual_updates: int = 0

    def report(self):
        return f"probes={self.probes} phi_terms={self.phi_terms} residual_updates={self.residual_updates}"


@dataclass
class PenaltyConfig:
    eta: float
    refresh_every: int = 10**4

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("penalty weight must be nonnegative")
        if self.refresh_every < 1:
            raise ValueError("refresh interval must be positive")


class PenalizedObjective:
    """psi(x) = target(x) + eta * proximity(x) with incremental re-evaluation.

    attach() binds the caches to a point; probe()/update() then evaluate
    single-pixel changes by touching <= 3 target terms plus the changed
    pixel's constraint column.  Counters record the actual term and
    residual-entry work.
    """

    def __init__(self, system, target, eta, refresh_every=10**4):
        if not isinstance(target, MedianRoughnessTarget):
            raise TypeError("the penalized search is built around the roughness target")
        if target.size != system.J:
            raise ValueError("target grid does not match the system dimension")
        PenaltyConfig(eta, refresh_every)  # validation
        self.system = system
        self.target = target
        self.eta = eta
        self.refresh_every = refresh_every
        self.counters = WorkCounters()
        self.x = None
        self.cache = None
        self.r = None
        self.prox = None
        self._last_refresh = 0

    def attach(self, x):
        """Bind caches to (a copy of) x and return psi there."""
        self.x = np.array(x.values if hasattr(x, "values") else x, dtype=np.float64)
        phi, self.cache = self.target.full(self.x)
        self.r = residuals(self.system, self.x)
        self.prox = float(np.sum(self.r * self.r))
        self._last_refresh = self.counters.probes
        return phi + self.eta * self.prox

    def psi(self):
        return self.cache.total + self.eta * self.prox

    def full(self, x):
        """psi from scratch (also re-binds the caches)."""
        return self.attach(x)

    def _column(self, j):
        a, b = self.system.col_indptr[j], self.system.col_indptr[j + 1]
        return self.system.col_rows[a:b], self.system.col_data[a:b]

    def probe(self, j, new_value):
        """Candidate psi after x[j] = new_value, without committing."""
        rows, coeffs = self._column(j)
        phi_z, nterms, updates = probe_phi(
            self.x, self.cache.terms, self.cache.total, j, new_value,
            self.target.width, self.target.height,
        )
        dv = new_value - self.x[j]
        rv = self.r[rows]
        nv = rv + coeffs * dv
        dprox = float(np.sum(nv * nv - rv * rv))
        prox_z = self.prox + dprox
        self.counters.probes += 1
        self.counters.phi_terms += nterms
        self.counters.residual_updates += rows.size
        return phi_z + self.eta * prox_z, (phi_z, prox_z, nv, rows, updates)

    def commit(self, j, new_value, details):
        phi_z, prox_z, nv, rows, updates = details
        for t, tv in updates:
            self.cache.terms[t] = tv
        self.cache.total = phi_z
        self.x[j] = new_value
        self.r[rows] = nv
        self.prox = prox_z
        self._maybe_refresh()

    def update(self, j, new_value):
        """Probe and commit in one step; returns the new psi."""
        psi_z, details = self.probe(j, new_value)
        self.commit(j, new_value, details)
        return psi_z

    def refresh_caches(self):
        """Recompute residuals, proximity and target terms from the current x."""
        self.r = residuals(self.system, self.x)
        self.prox = float(np.sum(self.r * self.r))
        self.cache.total = self.target.refresh(self.cache, self.x)
        self._last_refresh = self.counters.probes

    def _maybe_refresh(self):
        if self.counters.probes - self._last_refresh >= self.refresh_every:
            self.refresh_caches()


def ep_coordinate_search(objective, schedule, directions, start, iterations,
                         domain=None, metadata=None):
    """Coordinate search on the penalized objective (the EP baseline).

    Per iteration: draw one step size, probe signed coordinate directions in
    cyclic order, accept the first strict psi improvement (if any).  There is
    no feasibility operator; constraint violation only enters through the
    penalty term.  The trace carries proximity, target and psi per iterate
    (the cached values the accept/reject decisions actually saw).
    """
    if iterations < 1:
        raise ValueError("need at least one iteration")
    if not isinstance(schedule, StepSchedule):
        raise TypeError("schedule must be a StepSchedule")
    if directions is None:
        directions = DirectionSequence(objective.system.J)
    if directions.dim != objective.system.J:
        raise ValueError("direction sequence dimension does not match the system")

    system = objective.system
    objective.attach(start)
    dom_state = None if domain is None else domain.probe_state(objective.x)
    kern = kernels()

    ks = [0]
    prox = [objective.prox]
    phis = [objective.cache.total]
    psis = [objective.psi()]
    gammas = [0.0]
    accs = [0]
    rejs = [0]

    for k in range(iterations):
        gamma = schedule.next_gamma()
        if objective.counters.probes - objective._last_refresh >= objective.refresh_every:
            objective.refresh_caches()
        offset, phi_total, prox_total, probes, nterms, nresid = kern.ep_probe_scan(
            objective.x, objective.cache.terms, objective.cache.total,
            objective.r, objective.prox, objective.eta, gamma, directions.cursor,
            objective.target.width, objective.target.height,
            system.col_indptr, system.col_rows, system.col_data, dom_state,
        )
        directions.cursor += probes
        objective.cache.total = phi_total
        objective.prox = prox_total
        objective.counters.probes += probes
        objective.counters.phi_terms += nterms
        objective.counters.residual_updates += nresid
        if offset >= 0:
            acc, rej = 1, probes - 1
            if dom_state is not None:
                dom_state = (dom_state[0], dom_state[1], 0, -1)
        else:
            acc, rej = 0, probes
        ks.append(k + 1)
        prox.append(objective.prox)
        phis.append(objective.cache.total)
        psis.append(objective.psi())
        gammas.append(gamma)
        accs.append(acc)
        rejs.append(rej)

    meta = dict(metadata or {})
    meta.setdefault("work_counters", objective.counters.report())
    trace = IterateTrace(ks, prox, phis, gammas, accs, rejs, psi=psis, metadata=meta)
    trace.final = objective.x.copy()
    return trace
