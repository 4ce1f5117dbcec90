"""Pure-Python twins of the compiled kernels in ``_ckernels.pyx``.

Same arguments, same draw order, same floating-point operations: for a given
seed both backends return identical arrays. Used when the extension is not
built, and as the reference side of the kernel benchmark.
"""

import math

import numpy as np
from numpy.random import Generator, Philox


def _stream(seed, index, stream):
    key = np.array([seed, index], dtype=np.uint64)
    counter = np.array([0, 0, 0, stream], dtype=np.uint64)
    return Generator(Philox(key=key, counter=counter))


def neighbor_sum(nb, x, out):
    np.sum(x[nb], axis=1, out=out)
    return out


def _ssa_one(g, nb, target, tau_j, k_meso, init_mode, init_voxel, max_events):
    n, n_dirs = nb.shape
    nb = nb.tolist()
    instant = k_meso == math.inf
    if init_mode == 0:
        pos = int(g.random() * n)
    elif init_mode == 1:
        pos = int(g.random() * (n - 1))
        if pos >= target:
            pos += 1
    else:
        pos = init_voxel

    t = 0.0
    events = 0
    while True:
        if pos == target:
            if instant:
                return t
            rate = tau_j + k_meso
            t += g.standard_exponential() / rate
            events += 1
            if g.random() * rate < k_meso:
                return t
        else:
            t += g.standard_exponential() / tau_j
            events += 1
        if events >= max_events:
            return None
        pos = nb[pos][int(g.random() * n_dirs)]


def ssa_batch(nb, target, tau_j, k_meso, init_mode, init_voxel, seed, indices, max_events):
    times = np.empty(len(indices))
    for s, idx in enumerate(indices):
        g = _stream(seed, int(idx), 0)
        t = _ssa_one(g, nb, target, tau_j, k_meso, init_mode, init_voxel, max_events)
        if t is None:
            return times[:s], int(idx)
        times[s] = t
    return times, -1


def _wrap(x, L, reflective):
    if reflective:
        y = x - 2.0 * L * math.floor(x / (2.0 * L))
        if y > L:
            y = 2.0 * L - y
        return y
    return x - L * math.floor(x / L)


def _dist(x, c):
    s = 0.0
    for xa in x:
        dx = xa - c
        s = s + dx * dx
    return math.sqrt(s)


def _bd_one(g, dim, L, rho, D, dt, reflective, safety, start, max_steps):
    c = 0.5 * L
    sigma_near = math.sqrt(2.0 * D * dt)
    if start is not None:
        x = [float(v) for v in start]
    else:
        while True:
            x = [g.random() * L for _ in range(dim)]
            if _dist(x, c) > rho:
                break
    d = _dist(x, c)
    if d <= rho:
        return 0.0

    t = 0.0
    steps = 0
    while True:
        gap = d - rho
        if gap > safety * sigma_near:
            step_dt = (gap / safety) * (gap / safety) / (2.0 * D)
        else:
            step_dt = dt
        sd = math.sqrt(2.0 * D * step_dt)
        x = [_wrap(xa + sd * g.standard_normal(), L, reflective) for xa in x]
        d_new = _dist(x, c)
        steps += 1
        if d_new <= rho:
            return t + step_dt * (d - rho) / (d - d_new)
        t += step_dt
        d = d_new
        if steps >= max_steps:
            return None


def bd_batch(dim, L, rho, D, dt, reflective, safety, seed, stream, indices, start, max_steps):
    times = np.empty(len(indices))
    for s, idx in enumerate(indices):
        g = _stream(seed, int(idx), stream)
        t = _bd_one(g, dim, L, rho, D, dt, reflective, safety, start, max_steps)
        if t is None:
            return times[:s], int(idx)
        times[s] = t
    return times, -1
