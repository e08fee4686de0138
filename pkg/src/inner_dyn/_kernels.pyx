# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit kernel: Birkhoff sums of a trigonometric observable.

Mirrors ``_kernels_py.birkhoff_sums``. Each trial owns a SplitMix64 stream
keyed by the caller, so the output does not depend on the thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sin, cos, tan, atan2, floor, fabs, M_PI

cnp.import_array()

ctypedef unsigned long long u64

cdef double DITHER = 8.881784197001252e-16   # 2**-50
cdef double ATOM_EPS = 1e-12
cdef double NUDGE = 1e-9
cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline u64 mix64(u64 z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double unit(u64 bits) noexcept nogil:
    return <double>(bits >> 11) * 1.1102230246251565e-16   # 2**-53


cdef inline double wrap_signed(double d) noexcept nogil:
    d = d + 0.5
    d = d - floor(d)
    return d - 0.5


cdef inline double step_map(double theta, double offset,
                            const double[::1] zre, const double[::1] zim,
                            const double[::1] zmult,
                            const double[::1] atom_t, const double[::1] atom_mass,
                            long *events) noexcept nogil:
    cdef Py_ssize_t i
    cdef double lift = offset, d, c, s, re, im, out
    for i in range(atom_t.shape[0]):
        d = wrap_signed(theta - atom_t[i])
        if fabs(d) < ATOM_EPS:
            theta = theta + NUDGE
            events[0] += 1
    c = cos(2.0 * M_PI * theta)
    s = sin(2.0 * M_PI * theta)
    for i in range(zre.shape[0]):
        if zre[i] == 0.0 and zim[i] == 0.0:
            lift += zmult[i] * theta
        else:
            re = 1.0 - (zre[i] * c + zim[i] * s)
            im = -(zim[i] * c - zre[i] * s)
            lift += zmult[i] * (theta + atan2(im, re) / M_PI)
    for i in range(atom_t.shape[0]):
        d = wrap_signed(theta - atom_t[i])
        lift -= atom_mass[i] / (2.0 * M_PI * tan(M_PI * d))
    out = lift - floor(lift)
    if out >= 1.0:
        out = 0.0
    return out


cdef inline double psi_eval(double theta, double psi0,
                            const double[::1] pc, const double[::1] ps) noexcept nogil:
    cdef Py_ssize_t n
    cdef double val = psi0, arg
    for n in range(pc.shape[0]):
        arg = 2.0 * M_PI * (n + 1) * theta
        if pc[n] != 0.0:
            val += pc[n] * cos(arg)
        if ps[n] != 0.0:
            val += ps[n] * sin(arg)
    return val


def birkhoff_sums(theta0, keys, long n_steps, double offset,
                  zero_re, zero_im, zero_mult, atom_t, atom_mass,
                  double psi0, psi_cos, psi_sin, bint dither=True, int threads=1):
    """Return ``(sums, events)`` with ``sums[i] = sum_{j<n} psi(tau^j theta0[i])``."""
    cdef const double[::1] th0 = np.ascontiguousarray(theta0, dtype=np.float64)
    cdef const u64[::1] kk = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef const double[::1] zre = np.ascontiguousarray(zero_re, dtype=np.float64)
    cdef const double[::1] zim = np.ascontiguousarray(zero_im, dtype=np.float64)
    cdef const double[::1] zm = np.ascontiguousarray(zero_mult, dtype=np.float64)
    cdef const double[::1] at = np.ascontiguousarray(atom_t, dtype=np.float64)
    cdef const double[::1] am = np.ascontiguousarray(atom_mass, dtype=np.float64)
    cdef const double[::1] pc = np.ascontiguousarray(psi_cos, dtype=np.float64)
    cdef const double[::1] ps = np.ascontiguousarray(psi_sin, dtype=np.float64)
    cdef Py_ssize_t ntr = th0.shape[0]
    out = np.empty(ntr, dtype=np.float64)
    ev_arr = np.zeros(ntr, dtype=np.int64)
    cdef double[::1] res = out
    cdef long[::1] evs = ev_arr
    cdef Py_ssize_t i
    cdef long j
    cdef double theta, acc
    cdef long ev
    cdef u64 key
    if threads < 1:
        threads = 1
    for i in prange(ntr, nogil=True, num_threads=threads, schedule="static"):
        theta = th0[i]
        key = kk[i]
        acc = 0.0
        ev = 0
        for j in range(n_steps):
            acc = acc + psi_eval(theta, psi0, pc, ps)
            if j == n_steps - 1:
                break
            theta = step_map(theta, offset, zre, zim, zm, at, am, &ev)
            if dither:
                theta = theta + (unit(mix64(key + <u64>(j + 1) * GOLDEN)) - 0.5) * DITHER
                theta = theta - floor(theta)
        res[i] = acc
        evs[i] = ev
    return out, int(ev_arr.sum())
