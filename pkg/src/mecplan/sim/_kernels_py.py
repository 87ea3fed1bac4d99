"""Pure-Python queue kernels (fallback backend).

Same algorithms and float-operation order as the compiled twin in
``_kernels_cy.pyx``; outputs are bit-identical between backends.
"""

import heapq

import numpy as np

BACKEND = "python"


def lindley_fcfs(times, service):
    """Sojourn times of a single FCFS queue.

    ``times`` must be sorted ascending; ``service`` is per-packet service
    duration. Returns sojourn (wait + service) per packet.
    """
    n = len(times)
    sojourn = np.empty(n, dtype=np.float64)
    free = 0.0
    for i in range(n):
        ta = times[i]
        start = ta if ta > free else free
        free = start + service[i]
        sojourn[i] = free - ta
    return sojourn


def ps_sojourn(times, works, rate):
    """Sojourn times of an egalitarian processor-sharing queue.

    Event-driven on the equal-share virtual time V (dV/dt = rate/n while n
    jobs are resident): the job arriving at V_a with work w completes when
    V reaches V_a + w. Returns (sojourn, seen) where seen[i] is the number
    of resident jobs found by arrival i.
    """
    n = len(times)
    sojourn = np.empty(n, dtype=np.float64)
    seen = np.empty(n, dtype=np.int64)
    heap = []  # (completion threshold in V, arrival index)
    v = 0.0
    t = 0.0
    i = 0
    while i < n or heap:
        if not heap:
            t = times[i]
            v = 0.0  # rebase at idle so theta - v never loses precision
            seen[i] = 0
            heapq.heappush(heap, (v + works[i], i))
            i += 1
            continue
        m = len(heap)
        theta, idx = heap[0]
        t_complete = t + (theta - v) * m / rate
        if i < n and times[i] <= t_complete:
            ta = times[i]
            v = v + (ta - t) * (rate / m)
            t = ta
            seen[i] = m
            heapq.heappush(heap, (v + works[i], i))
            i += 1
        else:
            v = theta
            t = t_complete
            heapq.heappop(heap)
            sojourn[idx] = t - times[idx]
    return sojourn, seen
