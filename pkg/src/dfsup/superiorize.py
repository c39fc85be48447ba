"""Superiorized runs: target-reducing perturbations between feasibility sweeps.

Two perturbation styles share the step-size schedule and the outer loop:

* component-wise (derivative-free): each phase draws one step size, then
  probes signed coordinate directions in cyclic order, accepting the first
  strict target improvement.  At most 2J probes per phase; the direction
  cursor persists across phases and sweeps.
* nonascending-vector: each phase asks a provider for a direction with
  ||v|| <= 1 and shrinks the step until the displaced point does not exceed
  the target value of the current outer iterate (non-strict test, and no a
  priori bound on the number of trials, hence the probe budget).

Both consume the schedule monotonically; the per-sweep gamma totals recorded
in the trace let the summability premise of bounded perturbations be audited.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .system import proximity
from .target import DomainSpec, MedianRoughnessTarget
from .trace import IterateTrace


class StepSchedule:
    """Geometric perturbation sizes initial*ratio^l; the cursor only ever
    advances, so the emitted total stays below initial/(1-ratio)."""

    def __init__(self, initial, ratio):
        if initial <= 0:
            raise ValueError("initial step must be positive")
        if not 0.0 < ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        self.initial = initial
        self.ratio = ratio
        self.cursor = -1

    def next_gamma(self):
        self.cursor += 1
        return self.initial * self.ratio**self.cursor

    @property
    def total_bound(self):
        return self.initial / (1.0 - self.ratio)


def direction_at(m, dim):
    """Direction emitted at cursor m: (pixel index, sign)."""
    p = m % (2 * dim)
    if p < dim:
        return p, 1
    return p - dim, -1


class DirectionSequence:
    """Cyclic signed coordinate directions (+e_1..+e_J, -e_1..-e_J); every
    window of 2J consecutive emissions contains each direction exactly once."""

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self.cursor = -1

    def next_direction(self):
        self.cursor += 1
        return direction_at(self.cursor, self.dim)


@dataclass
class SuperiorizationConfig:
    perturbations: int
    sweeps: int
    gamma_initial: float = 0.02
    gamma_ratio: float = 0.99999
    domain: DomainSpec = field(default_factory=DomainSpec.all_space)
    probe_budget: int = 10**6
    record_phase_targets: bool = False
    record_probes: bool = False
    record_snapshots: bool = False

    def __post_init__(self):
        if self.perturbations < 0:
            raise ValueError("perturbation count must be nonnegative")
        if self.sweeps < 1:
            raise ValueError("need at least one sweep")
        if self.probe_budget < 1:
            raise ValueError("probe budget must be positive")


@dataclass
class ProbeEvent:
    """One accepted coordinate probe, kept only when recording is requested."""

    sweep: int
    phase: int
    pixel: int
    sign: int
    gamma: float
    base: np.ndarray | None


def _probe_in_domain(dom_state, j, v):
    if dom_state is None:
        return True
    lo, hi, n_bad, bad_j = dom_state
    return (n_bad == 0 or (n_bad == 1 and bad_j == j)) and lo[j] <= v <= hi[j]


def _check_dims(system, target, start):
    if getattr(target, "size", system.J) != system.J or len(start) != system.J:
        raise ValueError("system, target and start vector dimensions disagree")


def superiorize_cw(system, target, config, feas, start, metadata=None):
    """Component-wise derivative-free superiorization.

    With perturbations=0 the run reduces exactly to the unperturbed sweeps of
    art_run.  The returned trace also carries per-phase target values, probe
    events, or iterate snapshots when the config asks for them.
    """
    _check_dims(system, target, start)
    J = system.J
    x = start.values.copy()
    order = feas.ordering.resolve(system)
    schedule = StepSchedule(config.gamma_initial, config.gamma_ratio)
    total, cache = target.full(x)
    m_cursor = -1
    dom_state = config.domain.probe_state(x)
    kern = kernels()
    fast = isinstance(target, MedianRoughnessTarget) and not config.record_probes

    ks = [0]
    prox = [proximity(system, x)]
    phis = [total]
    gammas = [0.0]
    accs = [0]
    rejs = [0]
    term_evals = 0
    phase_log = [] if config.record_phase_targets else None
    events = [] if config.record_probes else None
    snapshots = [x.copy()] if config.record_snapshots else None

    for k in range(config.sweeps):
        gamma_sum = 0.0
        acc = 0
        rej = 0
        if phase_log is not None:
            per_phase = [total]
        for n in range(config.perturbations):
            gamma = schedule.next_gamma()
            gamma_sum += gamma
            if fast:
                offset, total, probes, nterms = kern.cw_probe_phase(
                    x, cache.terms, total, gamma, m_cursor,
                    target.width, target.height, dom_state,
                )
                m_cursor += probes
                term_evals += nterms
                if offset >= 0:
                    acc += 1
                    rej += probes - 1
                    cache.total = total
                    if dom_state is not None:
                        dom_state = (dom_state[0], dom_state[1], 0, -1)
                else:
                    rej += probes
            else:
                for _ in range(2 * J):
                    m_cursor += 1
                    j, sign = direction_at(m_cursor, J)
                    v = x[j] + gamma if sign > 0 else x[j] - gamma
                    result = target.probe(cache, x, j, v)
                    term_evals += result.term_evals
                    if _probe_in_domain(dom_state, j, v) and result.value < total:
                        base = x.copy() if events is not None else None
                        target.commit(cache, x, j, v, result)
                        total = result.value
                        acc += 1
                        if dom_state is not None:
                            dom_state = (dom_state[0], dom_state[1], 0, -1)
                        if events is not None:
                            events.append(ProbeEvent(k, n, j, sign, gamma, base))
                        break
                    rej += 1
            if phase_log is not None:
                per_phase.append(total)
        kern.kaczmarz_sweep(
            system.indptr, system.indices, system.data, system.rhs, system.norms_sq,
            order, feas.relaxation, x,
        )
        total = target.refresh(cache, x)
        dom_state = config.domain.probe_state(x)
        ks.append(k + 1)
        prox.append(proximity(system, x))
        phis.append(total)
        gammas.append(gamma_sum)
        accs.append(acc)
        rejs.append(rej)
        if phase_log is not None:
            phase_log.append(np.asarray(per_phase))
        if snapshots is not None:
            snapshots.append(x.copy())

    trace = IterateTrace(ks, prox, phis, gammas, accs, rejs, metadata=metadata)
    trace.phase_targets = phase_log
    trace.probe_events = events
    trace.snapshots = snapshots
    trace.final = x.copy()
    trace.term_evals = term_evals
    return trace


class ZeroProvider:
    """Always emits the zero vector: valid but useless (never reduces)."""

    def __call__(self, x):
        return np.zeros(x.size)


class GradientDescentProvider:
    """Normalized negative gradient, for targets with usable derivatives."""

    def __init__(self, target):
        if getattr(target, "gradient", None) is None:
            raise ValueError("target has no gradient; use the component-wise search instead")
        self.target = target

    def __call__(self, x):
        g = self.target.gradient(x)
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            return np.zeros(x.size)
        return -g / norm


def superiorize_nonascent(system, target, provider, config, feas, start, metadata=None):
    """Superiorization driven by a nonascending-vector provider.

    Each probe draws a fresh (smaller) step; acceptance compares against the
    outer iterate's target value, non-strictly.  A provider that never
    produces an acceptable point exhausts the per-phase probe budget, which
    is reported as an error rather than a hang.
    """
    _check_dims(system, target, start)
    x = start.values.copy()
    order = feas.ordering.resolve(system)
    schedule = StepSchedule(config.gamma_initial, config.gamma_ratio)
    total = target.full(x)[0]
    kern = kernels()

    ks = [0]
    prox = [proximity(system, x)]
    phis = [total]
    gammas = [0.0]
    accs = [0]
    rejs = [0]
    phase_log = [] if config.record_phase_targets else None

    for k in range(config.sweeps):
        gamma_sum = 0.0
        acc = 0
        rej = 0
        phi_outer = total
        if phase_log is not None:
            per_phase = [total]
        for n in range(config.perturbations):
            v = np.asarray(provider(x), dtype=np.float64)
            if v.size != system.J:
                raise ValueError("provider returned a vector of the wrong length")
            if float(np.linalg.norm(v)) > 1.0 + 1e-12:
                raise ValueError("provider must emit directions with norm at most 1")
            trials = 0
            while True:
                trials += 1
                if trials > config.probe_budget:
                    raise RuntimeError(
                        f"probe budget {config.probe_budget} exhausted in sweep {k} "
                        f"phase {n}: the nonascent provider appears invalid"
                    )
                gamma = schedule.next_gamma()
                gamma_sum += gamma
                z = x + gamma * v
                phi_z = target.full(z)[0]
                if config.domain.contains(z) and phi_z <= phi_outer:
                    x = z
                    total = phi_z
                    acc += 1
                    break
                rej += 1
            if phase_log is not None:
                per_phase.append(total)
        kern.kaczmarz_sweep(
            system.indptr, system.indices, system.data, system.rhs, system.norms_sq,
            order, feas.relaxation, x,
        )
        total = target.full(x)[0]
        ks.append(k + 1)
        prox.append(proximity(system, x))
        phis.append(total)
        gammas.append(gamma_sum)
        accs.append(acc)
        rejs.append(rej)
        if phase_log is not None:
            phase_log.append(np.asarray(per_phase))

    trace = IterateTrace(ks, prox, phis, gammas, accs, rejs, metadata=metadata)
    trace.phase_targets = phase_log
    trace.final = x.copy()
    return trace
