"""Compiled inner loops for the cover-entropy minimization.

An assignment maps every atom to one of its admissible cells. Atom ``a``
carries masses ``ymass[yptr[a]:yptr[a+1]]`` on factor labels
``ylab[yptr[a]:yptr[a+1]]`` (a single label 0 in the unconditional case);
cell masses live in a flat ``cell * ny + label`` array.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _plogp(x):
    if x <= 0.0:
        return 0.0
    return -x * np.log(x)


@njit(cache=True)
def cell_masses(assign, yptr, ylab, ymass, ncells, ny):
    q = np.zeros(ncells * ny)
    for a in range(assign.shape[0]):
        c = assign[a]
        for t in range(yptr[a], yptr[a + 1]):
            q[c * ny + ylab[t]] += ymass[t]
    return q


@njit(cache=True)
def joint_entropy(assign, yptr, ylab, ymass, ncells, ny):
    q = cell_masses(assign, yptr, ylab, ymass, ncells, ny)
    # pairwise-style accumulation via numpy sum over the term vector
    terms = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        terms[i] = _plogp(q[i])
    return np.sum(terms)


@njit(cache=True)
def _move_delta(q, a, src, dst, yptr, ylab, ymass, ny):
    d = 0.0
    for t in range(yptr[a], yptr[a + 1]):
        m = ymass[t]
        i = src * ny + ylab[t]
        j = dst * ny + ylab[t]
        d += _plogp(q[i] - m) - _plogp(q[i]) + _plogp(q[j] + m) - _plogp(q[j])
    return d


@njit(cache=True)
def _apply_move(q, a, src, dst, yptr, ylab, ymass, ny):
    for t in range(yptr[a], yptr[a + 1]):
        q[src * ny + ylab[t]] -= ymass[t]
        q[dst * ny + ylab[t]] += ymass[t]


@njit(cache=True)
def local_search(assign, cptr, cset, yptr, ylab, ymass, ncells, ny, max_passes, tol):
    """First-improvement single-atom moves until a full pass finds none."""
    q = cell_masses(assign, yptr, ylab, ymass, ncells, ny)
    passes = 0
    improved = True
    while improved and passes < max_passes:
        improved = False
        passes += 1
        for a in range(assign.shape[0]):
            if cptr[a + 1] - cptr[a] < 2:
                continue
            cur = assign[a]
            for t in range(cptr[a], cptr[a + 1]):
                c = cset[t]
                if c == cur:
                    continue
                if _move_delta(q, a, cur, c, yptr, ylab, ymass, ny) < -tol:
                    _apply_move(q, a, cur, c, yptr, ylab, ymass, ny)
                    assign[a] = c
                    cur = c
                    improved = True
    return passes


@njit(cache=True)
def exhaustive(multi, cptr, cset, base_assign, yptr, ylab, ymass, ncells, ny):
    """Odometer over the choices of the multi-choice atoms ``multi``.

    Returns the assignment with the smallest joint entropy; the running
    entropy is updated incrementally and only used for comparisons.
    """
    assign = base_assign.copy()
    for i in range(multi.shape[0]):
        a = multi[i]
        assign[a] = cset[cptr[a]]
    q = cell_masses(assign, yptr, ylab, ymass, ncells, ny)
    h = 0.0
    for i in range(q.shape[0]):
        h += _plogp(q[i])
    best_h = h
    best = assign.copy()
    digit = np.zeros(multi.shape[0], dtype=np.int64)
    while True:
        pos = 0
        while pos < multi.shape[0]:
            a = multi[pos]
            radix = cptr[a + 1] - cptr[a]
            old = assign[a]
            digit[pos] += 1
            carry = digit[pos] == radix
            if carry:
                digit[pos] = 0
            new = cset[cptr[a] + digit[pos]]
            h += _move_delta(q, a, old, new, yptr, ylab, ymass, ny)
            _apply_move(q, a, old, new, yptr, ylab, ymass, ny)
            assign[a] = new
            if not carry:
                break
            pos += 1
        if pos == multi.shape[0]:
            break
        if h < best_h - 1e-13:
            best_h = h
            best[:] = assign
    return best


@njit(cache=True)
def set_greedy(sptr, satoms, cptr, cset, atom_mass, tie, rtol):
    """Give every unassigned atom of the heaviest join element to it, repeatedly.

    Masses within ``rtol`` (relative) count as ties, broken by the smaller
    ``tie`` key.
    """
    ns = sptr.shape[0] - 1
    na = cptr.shape[0] - 1
    rem = np.zeros(ns)
    cnt = np.zeros(ns, dtype=np.int64)
    for j in range(ns):
        for t in range(sptr[j], sptr[j + 1]):
            rem[j] += atom_mass[satoms[t]]
        cnt[j] = sptr[j + 1] - sptr[j]
    assign = np.full(na, -1, dtype=np.int64)
    left = na
    while left > 0:
        best = -1
        for j in range(ns):
            if cnt[j] == 0:
                continue
            if best < 0:
                best = j
                continue
            scale = max(abs(rem[j]), abs(rem[best]), 1e-300)
            if rem[j] > rem[best] + rtol * scale:
                best = j
            elif abs(rem[j] - rem[best]) <= rtol * scale and tie[j] < tie[best]:
                best = j
        for t in range(sptr[best], sptr[best + 1]):
            a = satoms[t]
            if assign[a] >= 0:
                continue
            assign[a] = best
            left -= 1
            for u in range(cptr[a], cptr[a + 1]):
                c = cset[u]
                rem[c] -= atom_mass[a]
                cnt[c] -= 1
    return assign
