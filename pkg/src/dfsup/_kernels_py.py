"""Pure-numpy implementations of the hot kernels.

These serve as the fallback when the compiled extension is unavailable and
as the reference the extension is checked against.  The per-probe arithmetic
(median-of-three selection, term sums, candidate target value) follows the
exact operation order of the compiled kernels, so accept/reject decisions on
the component-wise probe path agree bit for bit between backends.  Reductions
over whole rows/columns (Kaczmarz row dots, penalty column sums) use numpy
and may differ from the compiled scalar loops in the last ulp.
"""

import numpy as np

NAME = "python"

# static per-grid masks for the vectorized probe scan, keyed by (W, H)
_GRID_CACHE = {}


def _med3(a, b, c):
    if a < b:
        if b < c:
            return b
        if a < c:
            return c
        return a
    if a < c:
        return a
    if b < c:
        return c
    return b


def _term(a, b, c):
    # roughness term of the pixel valued `a` whose right/below neighbors are b, c
    return np.sqrt(np.abs(a - _med3(a, b, c)))


def _med3_vec(a, b, c):
    # same comparison tree as _med3, elementwise
    alt_lt = np.where(b < c, b, np.where(a < c, c, a))
    alt_ge = np.where(a < c, a, np.where(b < c, c, b))
    return np.where(a < b, alt_lt, alt_ge)


def _term_vec(a, b, c):
    return np.sqrt(np.abs(a - _med3_vec(a, b, c)))


def _grid_masks(W, H):
    key = (W, H)
    cached = _GRID_CACHE.get(key)
    if cached is not None:
        return cached
    J = W * H
    j = np.arange(J)
    col = j % W
    row = j // W
    theta = (col < W - 1) & (row < H - 1)
    has_up = np.zeros(J, dtype=bool)
    has_up[W:] = theta[:-W] if J > W else False
    has_left = np.zeros(J, dtype=bool)
    has_left[1:] = theta[:-1]
    has_left &= col >= 1
    nterms = has_up.astype(np.int64) + has_left.astype(np.int64) + theta.astype(np.int64)
    # prefix sums of the doubled direction cycle, for wrap-around window sums
    cycle = np.concatenate([nterms, nterms])
    cyc_cum = np.zeros(4 * J + 1, dtype=np.int64)
    cyc_cum[1:] = np.cumsum(np.concatenate([cycle, cycle]))
    cached = (theta, has_up, has_left, cyc_cum)
    _GRID_CACHE[key] = cached
    return cached


def median_terms(x, W, H, terms):
    """Fill the per-pixel roughness terms for a W*H image; return their sum.

    terms[j] is zero for pixels in the last column/row.  The total is a plain
    sequential sum in index order (pinned across backends).
    """
    J = W * H
    theta, _, _, _ = _grid_masks(W, H)
    right = np.zeros(J)
    right[: J - 1] = x[1:]
    below = np.zeros(J)
    if J > W:
        below[: J - W] = x[W:]
    np.copyto(terms, np.where(theta, _term_vec(x, right, below), 0.0))
    total = 0.0
    for t in terms.tolist():
        total += t
    return total


def probe_phi(x, terms, total, j, v, W, H):
    """Candidate target value after setting pixel j to v, touching <= 3 terms.

    Returns (phi_z, n_new_terms, updates) where updates lists (index, value)
    pairs for the recomputed terms.  Pure scalar; this is the pinned formula
    every other probe path replicates.
    """
    theta, _, _, _ = _grid_masks(W, H)
    new_sum = 0.0
    old_sum = 0.0
    updates = []
    t = j - W
    if t >= 0 and theta[t]:
        nv = _term(x[t], x[t + 1], v)
        new_sum += nv
        old_sum += terms[t]
        updates.append((t, nv))
    t = j - 1
    if (j % W) >= 1 and theta[t]:
        nv = _term(x[t], v, x[t + W])
        new_sum += nv
        old_sum += terms[t]
        updates.append((t, nv))
    if theta[j]:
        nv = _term(v, x[j + 1], x[j + W])
        new_sum += nv
        old_sum += terms[j]
        updates.append((j, nv))
    phi_z = total + (new_sum - old_sum)
    return phi_z, len(updates), updates


def _domain_masks(J, vplus, vminus, dom):
    if dom is None:
        ok = np.ones(J, dtype=bool)
        return ok, ok
    lo, hi, base_bad, base_bad_j = dom
    okp = (vplus >= lo) & (vplus <= hi)
    okm = (vminus >= lo) & (vminus <= hi)
    if base_bad == 1:
        sel = np.zeros(J, dtype=bool)
        sel[base_bad_j] = True
        okp = okp & sel
        okm = okm & sel
    elif base_bad > 1:
        okp = np.zeros(J, dtype=bool)
        okm = okp
    return okp, okm


def cw_probe_phase(x, terms, total, gamma, m0, W, H, dom):
    """One perturbation phase: scan up to 2J signed coordinate probes.

    Probes start at direction cursor m0+1 and accept the first candidate z
    with z in the domain and target(z) < target(x).  On acceptance x and the
    term cache are updated in place.

    Returns (accept_offset, new_total, probes, term_evals); accept_offset is
    -1 when every probe in the window is rejected.  term_evals counts the
    candidate terms the scalar algorithm would have computed up to and
    including the deciding probe.
    """
    J = W * H
    theta, has_up, has_left, cyc_cum = _grid_masks(W, H)

    vplus = x + gamma
    vminus = x - gamma
    okp, okm = _domain_masks(J, vplus, vminus, dom)

    # shifted copies of x used by the three affected terms of a probe at j
    a_up = np.zeros(J)
    b_up = np.zeros(J)
    if J > W:
        a_up[W:] = x[:-W]
        b_up[W:] = x[1 : J - W + 1]
    a_lf = np.zeros(J)
    c_lf = np.zeros(J)
    a_lf[1:] = x[:-1]
    if J >= W:
        c_lf[1 : J - W + 1] = x[W:]
    b_sf = np.zeros(J)
    b_sf[: J - 1] = x[1:]
    c_sf = np.zeros(J)
    if J > W:
        c_sf[: J - W] = x[W:]

    old_sum = (
        np.where(has_up, np.concatenate([np.zeros(W), terms[:-W]]) if J > W else 0.0, 0.0)
        + np.where(has_left, np.concatenate([[0.0], terms[:-1]]), 0.0)
        + np.where(theta, terms, 0.0)
    )

    def phi_candidates(v):
        nu = np.where(has_up, _term_vec(a_up, b_up, v), 0.0)
        nl = np.where(has_left, _term_vec(a_lf, v, c_lf), 0.0)
        ns = np.where(theta, _term_vec(v, b_sf, c_sf), 0.0)
        new_sum = nu + nl + ns
        return total + (new_sum - old_sum), nu, nl, ns

    phi_p, nu_p, nl_p, ns_p = phi_candidates(vplus)
    phi_m, nu_m, nl_m, ns_m = phi_candidates(vminus)

    accept = np.concatenate([okp & (phi_p < total), okm & (phi_m < total)])

    p0 = (m0 + 1) % (2 * J)
    window = np.roll(accept, -p0)
    if not window.any():
        nterms = int(cyc_cum[p0 + 2 * J] - cyc_cum[p0])
        return -1, total, 2 * J, nterms

    offset = int(np.argmax(window))
    probes = offset + 1
    nterms = int(cyc_cum[p0 + probes] - cyc_cum[p0])
    p = (p0 + offset) % (2 * J)
    if p < J:
        j, v = p, vplus[p]
        nu, nl, ns, phi_z = nu_p[p], nl_p[p], ns_p[p], phi_p[p]
    else:
        j = p - J
        v = vminus[j]
        nu, nl, ns, phi_z = nu_m[j], nl_m[j], ns_m[j], phi_m[j]
    if has_up[j]:
        terms[j - W] = nu
    if has_left[j]:
        terms[j - 1] = nl
    if theta[j]:
        terms[j] = ns
    x[j] = v
    return offset, float(phi_z), probes, nterms


def kaczmarz_sweep(indptr, indices, data, rhs, norms_sq, order, relaxation, x):
    """One relaxed Kaczmarz pass over all rows in `order`, updating x in place.

    Row i+1 sees row i's update; the pass is inherently sequential.
    """
    for i in order:
        a, b = indptr[i], indptr[i + 1]
        idx = indices[a:b]
        d = data[a:b]
        dot = np.dot(d, x[idx])
        coef = relaxation * ((dot - rhs[i]) / norms_sq[i])
        x[idx] -= coef * d


def ep_probe_scan(
    x, terms, phi_total, r, prox, eta, gamma, m0, W, H, col_indptr, col_rows, col_data, dom
):
    """One penalized coordinate-search scan: up to 2J probes on psi = phi + eta*prox.

    Residuals r and the proximity total are cached; a probe at pixel j costs
    one pass over column j (every constraint through that pixel).  Mutates
    x/terms/r on acceptance.  Returns (accept_offset, phi_total, prox,
    probes, term_evals, residual_updates).
    """
    J = W * H
    psi_cur = phi_total + eta * prox
    probes = 0
    nterms = 0
    nresid = 0
    if dom is not None:
        lo, hi, base_bad, base_bad_j = dom
    for L in range(2 * J):
        m = m0 + 1 + L
        p = m % (2 * J)
        if p < J:
            j = p
            v = x[j] + gamma
        else:
            j = p - J
            v = x[j] - gamma
        probes += 1
        phi_z, nt, updates = probe_phi(x, terms, phi_total, j, v, W, H)
        nterms += nt
        a, b = col_indptr[j], col_indptr[j + 1]
        rows = col_rows[a:b]
        dv = v - x[j]
        rv = r[rows]
        nv = rv + col_data[a:b] * dv
        nresid += b - a
        dprox = float(np.sum(nv * nv - rv * rv))
        prox_z = prox + dprox
        psi_z = phi_z + eta * prox_z
        if dom is None:
            ok = True
        else:
            ok = (base_bad == 0 or (base_bad == 1 and base_bad_j == j)) and lo[j] <= v <= hi[j]
        if ok and psi_z < psi_cur:
            for t, nvt in updates:
                terms[t] = nvt
            x[j] = v
            r[rows] = nv
            return L, float(phi_z), prox_z, probes, nterms, nresid
    return -1, phi_total, prox, probes, nterms, nresid
