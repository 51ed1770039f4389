"""Compiled inner loops for toppling and burning.

All kernels work on flat int64 arrays and a neighbour table where ``-1``
stands for the sink.  Counters are checked against int64 overflow.
"""
import numpy as np
from numba import njit

INT64_MAX = np.iinfo(np.int64).max


@njit(cache=True)
def stabilize_batched(grains, nbr, deg, odo):
    """Stabilize ``grains`` in place, adding topplings into ``odo``.

    A vertex holding ``s >= deg`` grains fires ``s // deg`` times in one go.
    Returns the number of grains that reached the sink.
    """
    size = grains.shape[0]
    queue = np.empty(size, dtype=np.int64)
    queued = np.zeros(size, dtype=np.bool_)
    head = 0
    count = 0
    for v in range(size):
        if grains[v] >= deg:
            queue[(head + count) % size] = v
            queued[v] = True
            count += 1
    lost = 0
    while count > 0:
        v = queue[head]
        head = (head + 1) % size
        count -= 1
        queued[v] = False
        q = grains[v] // deg
        if q == 0:
            continue
        grains[v] -= q * deg
        if odo[v] > INT64_MAX - q:
            raise OverflowError("odometer counter overflow")
        odo[v] += q
        for j in range(nbr.shape[1]):
            w = nbr[v, j]
            if w < 0:
                if lost > INT64_MAX - q:
                    raise OverflowError("sink counter overflow")
                lost += q
                continue
            if grains[w] > INT64_MAX - q:
                raise OverflowError("grain counter overflow")
            grains[w] += q
            if grains[w] >= deg and not queued[w]:
                queue[(head + count) % size] = w
                queued[w] = True
                count += 1
    return lost


@njit(cache=True)
def stabilize_random_order(grains, nbr, deg, odo, seed):
    """Random legal toppling sequence.

    Each step picks a random unstable vertex and fires it ``r`` times in a
    row, ``r`` uniform in ``1 .. grains // deg``; this is a sequence of single
    topplings, only shorter to drive.  Picks come from an inline splitmix64
    stream: the variety of orders matters here, not statistical quality.
    """
    state = np.uint64(seed)
    size = grains.shape[0]
    pool = np.empty(size, dtype=np.int64)
    where = np.full(size, -1, dtype=np.int64)
    count = 0
    for v in range(size):
        if grains[v] >= deg:
            pool[count] = v
            where[v] = count
            count += 1
    lost = 0
    while count > 0:
        state += np.uint64(0x9E3779B97F4A7C15)
        z = state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        k = np.int64(((z >> np.uint64(32)) * np.uint64(count)) >> np.uint64(32))
        v = pool[k]
        q = grains[v] // deg
        r = 1 + np.int64(((z & np.uint64(0xFFFFFFFF)) * np.uint64(q)) >> np.uint64(32))
        grains[v] -= r * deg
        odo[v] += r
        if grains[v] < deg:
            last = pool[count - 1]
            pool[k] = last
            where[last] = k
            where[v] = -1
            count -= 1
        for j in range(nbr.shape[1]):
            w = nbr[v, j]
            if w < 0:
                lost += r
                continue
            grains[w] += r
            if grains[w] >= deg and where[w] < 0:
                pool[count] = w
                where[w] = count
                count += 1
    return lost


@njit(cache=True)
def burn(grains, nbr, deg):
    """Burning test; returns the number of vertices that burn.

    The sink starts burnt.  A vertex burns once its grain count is at least
    its degree minus the number of its edges leading to burnt vertices.
    """
    size = grains.shape[0]
    burnt_edges = np.zeros(size, dtype=np.int64)
    for v in range(size):
        for j in range(nbr.shape[1]):
            if nbr[v, j] < 0:
                burnt_edges[v] += 1
    burnt = np.zeros(size, dtype=np.bool_)
    stack = np.empty(size, dtype=np.int64)
    top = 0
    for v in range(size):
        if grains[v] >= deg - burnt_edges[v]:
            burnt[v] = True
            stack[top] = v
            top += 1
    total = top
    while top > 0:
        top -= 1
        v = stack[top]
        for j in range(nbr.shape[1]):
            w = nbr[v, j]
            if w < 0 or burnt[w]:
                continue
            burnt_edges[w] += 1
            if grains[w] >= deg - burnt_edges[w]:
                burnt[w] = True
                stack[top] = w
                top += 1
                total += 1
    return total


@njit(cache=True)
def successor_table(states, radix, nbr, deg):
    """For encoded stable states, the encoded result of adding one grain at each vertex."""
    size = nbr.shape[0]
    out = np.empty((states.shape[0], size), dtype=np.int64)
    grains = np.empty(size, dtype=np.int64)
    odo = np.zeros(size, dtype=np.int64)
    for s in range(states.shape[0]):
        for v in range(size):
            code = states[s]
            for u in range(size):
                grains[u] = code % radix
                code //= radix
            grains[v] += 1
            stabilize_batched(grains, nbr, deg, odo)
            code = 0
            for u in range(size - 1, -1, -1):
                code = code * radix + grains[u]
            out[s, v] = code
    return out
