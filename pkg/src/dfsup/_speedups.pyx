# cython: boundscheck=False, wraparound=False, cdivision=True
# Compiled twins of the kernels in _kernels_py.  The probe arithmetic keeps
# the exact operation order of the reference (see -ffp-contract=off in
# setup.py) so accept/reject decisions agree bit for bit.

from libc.math cimport sqrt, fabs

NAME = "compiled"


cdef inline double med3(double a, double b, double c) nogil:
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


cdef inline double term_val(double a, double b, double c) nogil:
    return sqrt(fabs(a - med3(a, b, c)))


def median_terms(double[::1] x, Py_ssize_t W, Py_ssize_t H, double[::1] terms):
    cdef Py_ssize_t J = W * H
    cdef Py_ssize_t j, col, row
    cdef double total = 0.0
    for j in range(J):
        col = j % W
        row = j // W
        if col < W - 1 and row < H - 1:
            terms[j] = term_val(x[j], x[j + 1], x[j + W])
        else:
            terms[j] = 0.0
        total += terms[j]
    return total


cdef inline double probe_delta(double[::1] x, double[::1] terms,
                               Py_ssize_t j, double v,
                               Py_ssize_t W, Py_ssize_t H,
                               double* nu, double* nl, double* ns,
                               int* have, int* nterms) nogil:
    # candidate new-term values for a probe setting pixel j to v; have[0..2]
    # flags the up/left/self terms, n* receive the recomputed values
    cdef Py_ssize_t col = j % W
    cdef Py_ssize_t row = j // W
    cdef double new_sum = 0.0
    cdef double old_sum = 0.0
    have[0] = 0
    have[1] = 0
    have[2] = 0
    nterms[0] = 0
    if row >= 1 and col < W - 1:
        nu[0] = term_val(x[j - W], x[j - W + 1], v)
        new_sum += nu[0]
        old_sum += terms[j - W]
        have[0] = 1
        nterms[0] += 1
    if col >= 1 and row < H - 1:
        nl[0] = term_val(x[j - 1], v, x[j - 1 + W])
        new_sum += nl[0]
        old_sum += terms[j - 1]
        have[1] = 1
        nterms[0] += 1
    if col < W - 1 and row < H - 1:
        ns[0] = term_val(v, x[j + 1], x[j + W])
        new_sum += ns[0]
        old_sum += terms[j]
        have[2] = 1
        nterms[0] += 1
    return new_sum - old_sum


def cw_probe_phase(double[::1] x, double[::1] terms, double total, double gamma,
                   long long m0, Py_ssize_t W, Py_ssize_t H, dom):
    cdef Py_ssize_t J = W * H
    cdef Py_ssize_t twoJ = 2 * J
    cdef double[::1] lo = None
    cdef double[::1] hi = None
    cdef long long base_bad = 0
    cdef long long base_bad_j = -1
    cdef int has_dom = 0
    if dom is not None:
        has_dom = 1
        lo = dom[0]
        hi = dom[1]
        base_bad = dom[2]
        base_bad_j = dom[3]

    cdef Py_ssize_t L, j, p
    cdef long long m
    cdef double v, phi_z, delta
    cdef double nu = 0.0, nl = 0.0, ns = 0.0
    cdef int have[3]
    cdef int nt
    cdef long long probes = 0
    cdef long long nterms = 0
    cdef bint ok

    for L in range(twoJ):
        m = m0 + 1 + L
        p = <Py_ssize_t> (m % twoJ)
        if p < J:
            j = p
            v = x[j] + gamma
        else:
            j = p - J
            v = x[j] - gamma
        probes += 1
        delta = probe_delta(x, terms, j, v, W, H, &nu, &nl, &ns, have, &nt)
        nterms += nt
        phi_z = total + delta
        if has_dom:
            ok = (base_bad == 0 or (base_bad == 1 and base_bad_j == j)) \
                 and lo[j] <= v and v <= hi[j]
        else:
            ok = True
        if ok and phi_z < total:
            if have[0]:
                terms[j - W] = nu
            if have[1]:
                terms[j - 1] = nl
            if have[2]:
                terms[j] = ns
            x[j] = v
            return L, phi_z, probes, nterms
    return -1, total, probes, nterms


def kaczmarz_sweep(long long[::1] indptr, long long[::1] indices, double[::1] data,
                   double[::1] rhs, double[::1] norms_sq, long long[::1] order,
                   double relaxation, double[::1] x):
    cdef Py_ssize_t oi, t, a, b
    cdef long long i
    cdef double dot, coef
    with nogil:
        for oi in range(order.shape[0]):
            i = order[oi]
            a = indptr[i]
            b = indptr[i + 1]
            dot = 0.0
            for t in range(a, b):
                dot += data[t] * x[indices[t]]
            coef = relaxation * ((dot - rhs[i]) / norms_sq[i])
            for t in range(a, b):
                x[indices[t]] -= coef * data[t]


def ep_probe_scan(double[::1] x, double[::1] terms, double phi_total,
                  double[::1] r, double prox, double eta, double gamma,
                  long long m0, Py_ssize_t W, Py_ssize_t H,
                  long long[::1] col_indptr, long long[::1] col_rows,
                  double[::1] col_data, dom):
    cdef Py_ssize_t J = W * H
    cdef Py_ssize_t twoJ = 2 * J
    cdef double[::1] lo = None
    cdef double[::1] hi = None
    cdef long long base_bad = 0
    cdef long long base_bad_j = -1
    cdef int has_dom = 0
    if dom is not None:
        has_dom = 1
        lo = dom[0]
        hi = dom[1]
        base_bad = dom[2]
        base_bad_j = dom[3]

    cdef double psi_cur = phi_total + eta * prox
    cdef Py_ssize_t L, j, p, t, a, b
    cdef long long m
    cdef double v, dv, phi_z, delta, dprox, prox_z, psi_z, rv, nv
    cdef double nu = 0.0, nl = 0.0, ns = 0.0
    cdef int have[3]
    cdef int nt
    cdef long long probes = 0
    cdef long long nterms = 0
    cdef long long nresid = 0
    cdef bint ok

    for L in range(twoJ):
        m = m0 + 1 + L
        p = <Py_ssize_t> (m % twoJ)
        if p < J:
            j = p
            v = x[j] + gamma
        else:
            j = p - J
            v = x[j] - gamma
        probes += 1
        delta = probe_delta(x, terms, j, v, W, H, &nu, &nl, &ns, have, &nt)
        nterms += nt
        phi_z = phi_total + delta
        a = col_indptr[j]
        b = col_indptr[j + 1]
        dv = v - x[j]
        dprox = 0.0
        for t in range(a, b):
            rv = r[col_rows[t]]
            nv = rv + col_data[t] * dv
            dprox += nv * nv - rv * rv
        nresid += b - a
        prox_z = prox + dprox
        psi_z = phi_z + eta * prox_z
        if has_dom:
            ok = (base_bad == 0 or (base_bad == 1 and base_bad_j == j)) \
                 and lo[j] <= v and v <= hi[j]
        else:
            ok = True
        if ok and psi_z < psi_cur:
            if have[0]:
                terms[j - W] = nu
            if have[1]:
                terms[j - 1] = nl
            if have[2]:
                terms[j] = ns
            for t in range(a, b):
                r[col_rows[t]] = r[col_rows[t]] + col_data[t] * dv
            x[j] = v
            return L, phi_z, prox_z, probes, nterms, nresid
    return -1, phi_total, prox, probes, nterms, nresid
