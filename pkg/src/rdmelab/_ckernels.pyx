# cython: language_level=3
"""Compiled hot loops: exact-SSA pair trajectories, Brownian-dynamics capture
times and the lattice neighbour sum used by the matrix-free solver.

Every trajectory draws from its own Philox stream keyed by ``(seed, index)`` so
results do not depend on how samples are split across threads.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport sqrt, floor, INFINITY
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_uniform, random_standard_exponential, random_standard_normal)

cnp.import_array()

from numpy.random import Philox

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef inline bitgen_t *_bitgen(object bg) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(bg.capsule, CAPSULE_NAME)


def _stream(cnp.uint64_t seed, cnp.uint64_t index, cnp.uint64_t stream):
    key = np.array([seed, index], dtype=np.uint64)
    counter = np.array([0, 0, 0, stream], dtype=np.uint64)
    return Philox(key=key, counter=counter)


def neighbor_sum(const cnp.intp_t[:, ::1] nb, const double[::1] x, double[::1] out):
    cdef Py_ssize_t i, j, n = nb.shape[0], m = nb.shape[1]
    cdef double s
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(m):
                s = s + x[nb[i, j]]
            out[i] = s
    return np.asarray(out)


cdef int _ssa_one(bitgen_t *rng, const cnp.intp_t[:, ::1] nb, Py_ssize_t target,
                  double tau_j, double k_meso, int init_mode, Py_ssize_t init_voxel,
                  long long max_events, double *t_out) noexcept nogil:
    cdef Py_ssize_t n = nb.shape[0], n_dirs = nb.shape[1], pos, d
    cdef double t = 0.0, rate, u
    cdef long long events = 0
    cdef bint instant = k_meso == INFINITY

    if init_mode == 0:
        pos = <Py_ssize_t>(random_standard_uniform(rng) * n)
    elif init_mode == 1:
        pos = <Py_ssize_t>(random_standard_uniform(rng) * (n - 1))
        if pos >= target:
            pos += 1
    else:
        pos = init_voxel

    while True:
        if pos == target:
            if instant:
                t_out[0] = t
                return 0
            rate = tau_j + k_meso
            t += random_standard_exponential(rng) / rate
            events += 1
            if random_standard_uniform(rng) * rate < k_meso:
                t_out[0] = t
                return 0
        else:
            t += random_standard_exponential(rng) / tau_j
            events += 1
        if events >= max_events:
            return 1
        u = random_standard_uniform(rng)
        d = <Py_ssize_t>(u * n_dirs)
        pos = nb[pos, d]


def ssa_batch(const cnp.intp_t[:, ::1] nb, Py_ssize_t target, double tau_j, double k_meso,
              int init_mode, Py_ssize_t init_voxel, cnp.uint64_t seed,
              const cnp.int64_t[::1] indices, long long max_events):
    """Reaction times for the given sample indices; returns ``(times, failed_index)``.

    ``failed_index`` is -1 unless a trajectory hit the event budget.
    """
    cdef Py_ssize_t s, ns = indices.shape[0]
    cdef double[::1] times = np.empty(ns)
    cdef bitgen_t *rng
    cdef int status
    for s in range(ns):
        bg = _stream(seed, <cnp.uint64_t> indices[s], 0)
        rng = _bitgen(bg)
        with nogil:
            status = _ssa_one(rng, nb, target, tau_j, k_meso, init_mode, init_voxel,
                              max_events, &times[s])
        if status:
            return np.asarray(times[:s]), int(indices[s])
    return np.asarray(times), -1


cdef inline double _wrap(double x, double L, int reflective) noexcept nogil:
    cdef double y
    if reflective:
        y = x - 2.0 * L * floor(x / (2.0 * L))
        if y > L:
            y = 2.0 * L - y
        return y
    return x - L * floor(x / L)


cdef inline double _dist(double *x, double c, int dim) noexcept nogil:
    cdef double s = 0.0, dx
    cdef int a
    for a in range(dim):
        dx = x[a] - c
        s = s + dx * dx
    return sqrt(s)


cdef int _bd_one(bitgen_t *rng, int dim, double L, double rho, double D, double dt,
                 int reflective, double safety, const double *start, bint has_start,
                 long long max_steps, double *t_out) noexcept nogil:
    cdef double x[3]
    cdef double c = 0.5 * L, t = 0.0, d, d_new, gap, step_dt, sd
    cdef double sigma_near = sqrt(2.0 * D * dt)
    cdef long long steps = 0
    cdef int a

    if has_start:
        for a in range(dim):
            x[a] = start[a]
    else:
        while True:
            for a in range(dim):
                x[a] = random_standard_uniform(rng) * L
            if _dist(x, c, dim) > rho:
                break
    d = _dist(x, c, dim)
    if d <= rho:
        t_out[0] = 0.0
        return 0

    while True:
        gap = d - rho
        if gap > safety * sigma_near:
            step_dt = (gap / safety) * (gap / safety) / (2.0 * D)
        else:
            step_dt = dt
        sd = sqrt(2.0 * D * step_dt)
        for a in range(dim):
            x[a] = _wrap(x[a] + sd * random_standard_normal(rng), L, reflective)
        d_new = _dist(x, c, dim)
        steps += 1
        if d_new <= rho:
            t_out[0] = t + step_dt * (d - rho) / (d - d_new)
            return 0
        t += step_dt
        d = d_new
        if steps >= max_steps:
            return 1


def bd_batch(int dim, double L, double rho, double D, double dt, int reflective, double safety,
             cnp.uint64_t seed, cnp.uint64_t stream, const cnp.int64_t[::1] indices,
             start, long long max_steps):
    """Capture times of the relative coordinate at the contact sphere; ``(times, failed_index)``."""
    cdef Py_ssize_t s, ns = indices.shape[0]
    cdef double[::1] times = np.empty(ns)
    cdef double x0[3]
    cdef bint has_start = start is not None
    cdef bitgen_t *rng
    cdef int status, a
    if has_start:
        for a in range(dim):
            x0[a] = float(start[a])
    for s in range(ns):
        bg = _stream(seed, <cnp.uint64_t> indices[s], stream)
        rng = _bitgen(bg)
        with nogil:
            status = _bd_one(rng, dim, L, rho, D, dt, reflective, safety, x0, has_start,
                             max_steps, &times[s])
        if status:
            return np.asarray(times[:s]), int(indices[s])
    return np.asarray(times), -1
