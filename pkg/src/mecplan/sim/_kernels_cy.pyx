# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled queue kernels (hot path).

Mirrors ``_kernels_py`` exactly: same algorithms, same float-operation
order, compiled with -ffp-contract=off so results stay bit-identical to
the pure-Python backend.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def lindley_fcfs(double[::1] times, double[::1] service):
    cdef Py_ssize_t n = times.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] sojourn = out
    cdef double free = 0.0
    cdef double ta, start
    cdef Py_ssize_t i
    for i in range(n):
        ta = times[i]
        start = ta if ta > free else free
        free = start + service[i]
        sojourn[i] = free - ta
    return out


cdef inline bint _heap_less(double* th, long* ix, Py_ssize_t a, Py_ssize_t b):
    # total order matching Python's (theta, idx) tuple comparison
    if th[a] != th[b]:
        return th[a] < th[b]
    return ix[a] < ix[b]


cdef void _heap_swap(double* th, long* ix, Py_ssize_t a, Py_ssize_t b):
    cdef double td = th[a]
    cdef long ti = ix[a]
    th[a] = th[b]
    ix[a] = ix[b]
    th[b] = td
    ix[b] = ti


cdef void _heap_push(double* th, long* ix, Py_ssize_t size, double theta, long idx):
    cdef Py_ssize_t child = size
    cdef Py_ssize_t parent
    th[child] = theta
    ix[child] = idx
    while child > 0:
        parent = (child - 1) >> 1
        if _heap_less(th, ix, child, parent):
            _heap_swap(th, ix, child, parent)
            child = parent
        else:
            break


cdef void _heap_pop(double* th, long* ix, Py_ssize_t size):
    # move last element to the root and sift down; caller decrements size
    cdef Py_ssize_t node = 0
    cdef Py_ssize_t left, right, best
    th[0] = th[size - 1]
    ix[0] = ix[size - 1]
    size -= 1
    while True:
        left = 2 * node + 1
        right = left + 1
        best = node
        if left < size and _heap_less(th, ix, left, best):
            best = left
        if right < size and _heap_less(th, ix, right, best):
            best = right
        if best == node:
            break
        _heap_swap(th, ix, node, best)
        node = best


def ps_sojourn(double[::1] times, double[::1] works, double rate):
    cdef Py_ssize_t n = times.shape[0]
    out_soj = np.empty(n, dtype=np.float64)
    out_seen = np.empty(n, dtype=np.int64)
    cdef double[::1] sojourn = out_soj
    cdef long[::1] seen = out_seen
    heap_theta = np.empty(n, dtype=np.float64)
    heap_idx = np.empty(n, dtype=np.int64)
    cdef double[::1] th_view = heap_theta
    cdef long[::1] ix_view = heap_idx
    cdef double* th = &th_view[0] if n > 0 else NULL
    cdef long* ix = &ix_view[0] if n > 0 else NULL

    cdef Py_ssize_t size = 0
    cdef double v = 0.0
    cdef double t = 0.0
    cdef Py_ssize_t i = 0
    cdef double theta, t_complete, ta
    cdef long idx
    while i < n or size > 0:
        if size == 0:
            t = times[i]
            v = 0.0  # rebase at idle so theta - v never loses precision
            seen[i] = 0
            _heap_push(th, ix, size, v + works[i], i)
            size += 1
            i += 1
            continue
        theta = th[0]
        idx = ix[0]
        t_complete = t + (theta - v) * size / rate
        if i < n and times[i] <= t_complete:
            ta = times[i]
            v = v + (ta - t) * (rate / size)
            t = ta
            seen[i] = size
            _heap_push(th, ix, size, v + works[i], i)
            size += 1
            i += 1
        else:
            v = theta
            t = t_complete
            _heap_pop(th, ix, size)
            size -= 1
            sojourn[idx] = t - times[idx]
    return out_soj, out_seen
