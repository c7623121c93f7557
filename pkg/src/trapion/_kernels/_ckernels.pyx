# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the loops in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, ceil, fabs

cnp.import_array()

DEF TAYLOR_TOL = 1e-17
DEF MAX_TAYLOR_TERMS = 40
DEF SUBSTEP_NORM = 0.5
DEF PI = 3.141592653589793

DEF NEED_MORE = 0
DEF HIT_MAX_EVENTS = 1
DEF STALLED = 2


cdef inline double cabs_max(double complex z) nogil:
    cdef double a = fabs(z.real)
    cdef double b = fabs(z.imag)
    return a if a > b else b


cdef void apply_h(const double complex[:, :] src, double complex[:, :] dst, int d,
                  double complex cg, double complex rg, double complex bg,
                  const double[:] sq) noexcept nogil:
    # dst = G @ src with G = -i h H(t); cg/rg/bg already carry -i h and the coupling scale.
    # Layout: row = g-block [0, d) then e-block [d, 2d); columns are batch members.
    cdef int n, col
    cdef int ncol = src.shape[1]
    cdef double complex acc
    cdef double complex cgc = -cg.conjugate()
    cdef double complex rgc = -rg.conjugate()
    cdef double complex bgc = -bg.conjugate()
    for col in range(ncol):
        for n in range(d):
            # g row: conj couplings pull from the e-block
            acc = cgc * src[d + n, col]
            if n + 1 < d:
                acc = acc + bgc * sq[n + 1] * src[d + n + 1, col]
            if n >= 1:
                acc = acc + rgc * sq[n] * src[d + n - 1, col]
            dst[n, col] = acc
            # e row
            acc = cg * src[n, col]
            if n + 1 < d:
                acc = acc + rg * sq[n + 1] * src[n + 1, col]
            if n >= 1:
                acc = acc + bg * sq[n] * src[n - 1, col]
            dst[d + n, col] = acc


def propagate_batch(psi, double omega_rabi, double eta, double omega_z, double detuning,
                    double phase, double dt, long n_steps, double t0=0.0):
    cdef int batch = psi.shape[0]
    cdef int d = psi.shape[2]
    cdef double complex[:, :] vec = np.ascontiguousarray(psi.reshape(batch, 2 * d).T)
    cdef double complex[:, :] acc = np.empty_like(vec)
    cdef double complex[:, :] term = np.empty_like(vec)
    cdef double complex[:, :] nxt = np.empty_like(vec)
    cdef double[:] sq = np.sqrt(np.arange(d, dtype=float))
    cdef double phase_sb = phase + 0.5 * PI
    cdef double bound = 0.5 * omega_rabi + eta * omega_rabi * sqrt(d - 1)
    cdef long n_sub = <long>ceil(bound * dt / SUBSTEP_NORM)
    if n_sub < 1:
        n_sub = 1
    cdef double h = dt / n_sub
    cdef double half_c = 0.5 * omega_rabi
    cdef double half_sb = 0.5 * eta * omega_rabi
    cdef double complex minus_ih = -1j * h
    cdef long k, s
    cdef int j, r, col
    cdef double t, arg_r, arg_b, biggest, m
    cdef double complex cg, rg, bg, z
    cdef int rows = 2 * d
    cdef int ncol = batch
    with nogil:
        for k in range(n_steps):
            t = t0 + (k + 0.5) * dt
            cg = minus_ih * half_c * (cos(detuning * t - phase) - 1j * sin(detuning * t - phase))
            arg_r = -(detuning + omega_z) * t + phase_sb
            arg_b = -(detuning - omega_z) * t + phase_sb
            rg = minus_ih * half_sb * (cos(arg_r) + 1j * sin(arg_r))
            bg = minus_ih * half_sb * (cos(arg_b) + 1j * sin(arg_b))
            for s in range(n_sub):
                for r in range(rows):
                    for col in range(ncol):
                        acc[r, col] = vec[r, col]
                        term[r, col] = vec[r, col]
                for j in range(1, MAX_TAYLOR_TERMS + 1):
                    apply_h(term, nxt, d, cg, rg, bg, sq)
                    biggest = 0.0
                    for r in range(rows):
                        for col in range(ncol):
                            z = nxt[r, col] / j
                            term[r, col] = z
                            acc[r, col] = acc[r, col] + z
                            m = cabs_max(z)
                            if m > biggest:
                                biggest = m
                    if biggest < TAYLOR_TOL:
                        break
                for r in range(rows):
                    for col in range(ncol):
                        vec[r, col] = acc[r, col]
    psi[...] = np.asarray(vec).T.reshape(batch, 2, d)


def doppler_events(double v, long reject_run, const double[:] uniforms, double[:] out_v,
                   signed char[:] out_type, long n_rec, long max_events, double recoil_v,
                   double k, double half_gamma, double detuning, long max_rejects,
                   bint counter_only):
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t n_u = uniforms.shape[0]
    cdef double g2 = half_gamma * half_gamma
    cdef double x, p_abs, u
    cdef int status
    with nogil:
        while True:
            if n_rec >= max_events:
                status = HIT_MAX_EVENTS
                break
            if reject_run >= max_rejects:
                status = STALLED
                break
            if pos + 2 > n_u:
                status = NEED_MORE
                break
            x = k * v - detuning
            if counter_only and v <= 0.0:
                p_abs = 0.0
            else:
                p_abs = g2 / (x * x + g2)
            u = uniforms[pos]
            pos += 1
            if u >= p_abs:
                reject_run += 1
                continue
            reject_run = 0
            v -= recoil_v
            out_v[n_rec] = v
            out_type[n_rec] = 0
            n_rec += 1
            if n_rec >= max_events:
                status = HIT_MAX_EVENTS
                break
            v += recoil_v * (2.0 * uniforms[pos] - 1.0)
            pos += 1
            out_v[n_rec] = v
            out_type[n_rec] = 1
            n_rec += 1
    return v, reject_run, n_rec, pos, status
