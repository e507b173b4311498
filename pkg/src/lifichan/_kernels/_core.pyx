# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False
"""Compiled kernels for the per-frequency hot loops.

The phasor matrix is never materialized: gain and delay matrices are read
once per frequency and the complex exponential is fused into the
matrix-vector product. Frequencies are distributed over OpenMP threads;
within one frequency the accumulation order is fixed (patch-index order),
so results are bit-identical for any thread count.
"""

import numpy as np

cimport openmp
from cython.parallel cimport prange
from libc.math cimport cos, sin, sqrt
from libc.stdlib cimport free, malloc
from libc.string cimport memset

NAME = "compiled"

cdef double SPEED_OF_LIGHT = 299792458.0
cdef double TWO_PI = 6.283185307179586476925287


cdef inline int _thread_count(int requested) noexcept:
    if requested > 0:
        return requested
    return openmp.omp_get_max_threads()


def intrinsic_matrices(const double[:, ::1] centers, const double[:, ::1] normals, const double[::1] areas):
    cdef Py_ssize_t n = centers.shape[0]
    gain_arr = np.zeros((n, n))
    delay_arr = np.zeros((n, n))
    cdef double[:, ::1] gain = gain_arr
    cdef double[:, ::1] delay = delay_arr
    cdef Py_ssize_t i, k
    cdef double dx, dy, dz, d2, d, inv_d, cs, cd
    cdef double inv_pi = 1.0 / 3.14159265358979323846
    cdef int nt = _thread_count(0)

    for i in prange(n, nogil=True, schedule="static", num_threads=nt):
        for k in range(n):
            if k == i:
                continue
            dx = centers[i, 0] - centers[k, 0]
            dy = centers[i, 1] - centers[k, 1]
            dz = centers[i, 2] - centers[k, 2]
            d2 = dx * dx + dy * dy + dz * dz
            d = sqrt(d2)
            delay[i, k] = d / SPEED_OF_LIGHT
            inv_d = 1.0 / d
            cs = (dx * normals[k, 0] + dy * normals[k, 1] + dz * normals[k, 2]) * inv_d
            if cs <= 0.0:
                continue
            cd = -(dx * normals[i, 0] + dy * normals[i, 1] + dz * normals[i, 2]) * inv_d
            if cd <= 0.0:
                continue
            gain[i, k] = cs * cd * areas[i] * inv_pi / d2
    return gain_arr, delay_arr


def source_field_sweep(
    const double[:, ::1] gain,
    const double[:, ::1] delay,
    const double[::1] rho,
    const double[:, ::1] t_gains,
    const double[:, ::1] t_delays,
    const double[::1] freqs,
    int bounces,
    int num_threads,
):
    cdef Py_ssize_t n = gain.shape[0]
    cdef Py_ssize_t n_f = freqs.shape[0]
    cdef Py_ssize_t n_e = t_gains.shape[1]
    out_arr = np.empty((n_f, n, n_e), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef Py_ssize_t fi, i, k, e, b, row
    cdef double omega, ang, g, pr, pim
    cdef double complex ph
    cdef double complex *u
    cdef double complex *w
    cdef double complex *wn
    cdef double complex *tmp
    cdef Py_ssize_t stride = n * n_e
    cdef size_t nbytes = stride * sizeof(double complex)
    cdef int nt = _thread_count(num_threads)
    # one (u, w, wn) triple per thread, carved from a single allocation
    cdef double complex *work = <double complex *> malloc(3 * nt * nbytes)
    if work == NULL:
        raise MemoryError("could not allocate per-thread work buffers")

    try:
        for fi in prange(n_f, nogil=True, schedule="static", num_threads=nt):
            u = work + 3 * stride * openmp.omp_get_thread_num()
            w = u + stride
            wn = w + stride
            omega = -TWO_PI * freqs[fi]
            # first bounce: u = rho * t(f)
            for k in range(n):
                for e in range(n_e):
                    ang = omega * t_delays[k, e]
                    u[k * n_e + e] = rho[k] * t_gains[k, e] * (cos(ang) + 1j * sin(ang))
                    w[k * n_e + e] = u[k * n_e + e]
            # higher bounces: w <- rho * H(f) w, accumulated into u
            for b in range(bounces - 1):
                memset(wn, 0, nbytes)
                for i in range(n):
                    row = i * n_e
                    for k in range(n):
                        g = gain[i, k]
                        if g != 0.0:
                            ang = omega * delay[i, k]
                            pr = g * cos(ang)
                            pim = g * sin(ang)
                            ph = pr + 1j * pim
                            for e in range(n_e):
                                wn[row + e] = wn[row + e] + ph * w[k * n_e + e]
                    for e in range(n_e):
                        wn[row + e] = rho[i] * wn[row + e]
                        u[row + e] = u[row + e] + wn[row + e]
                tmp = w
                w = wn
                wn = tmp
            for k in range(n):
                for e in range(n_e):
                    out[fi, k, e] = u[k * n_e + e]
    finally:
        free(work)
    return out_arr


def receive_sweep(
    const double complex[:, :, ::1] fields,
    const double[::1] r_gains,
    const double[::1] r_delays,
    const double[::1] freqs,
    int num_threads,
):
    cdef Py_ssize_t n_f = fields.shape[0]
    cdef Py_ssize_t n = fields.shape[1]
    cdef Py_ssize_t n_e = fields.shape[2]
    out_arr = np.zeros((n_f, n_e), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t fi, k, e
    cdef double omega, ang, g
    cdef double complex ph
    cdef int nt = _thread_count(num_threads)

    for fi in prange(n_f, nogil=True, schedule="static", num_threads=nt):
        omega = -TWO_PI * freqs[fi]
        for k in range(n):
            g = r_gains[k]
            if g != 0.0:
                ang = omega * r_delays[k]
                ph = g * cos(ang) + 1j * (g * sin(ang))
                for e in range(n_e):
                    out[fi, e] = out[fi, e] + ph * fields[fi, k, e]
    return out_arr
