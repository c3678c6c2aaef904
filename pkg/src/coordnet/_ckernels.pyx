# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled implementations of the hot loops; see ``_pykernels`` for the contract."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector
from libcpp.algorithm cimport sort as cpp_sort

cnp.import_array()

DEF MAXP = 10
MAX_PROVENANCE = MAXP

cdef struct EdgeAcc:
    int64_t count
    int nprov
    int64_t prov[MAXP]


cdef inline int64_t floordiv(int64_t a, int64_t b) nogil:
    cdef int64_t q = a / b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


def sync_pairs(value_ids, times, users, window, bucketed=False, max_prov=MAXP):
    cdef int64_t[::1] v = np.ascontiguousarray(value_ids, dtype=np.int64)
    cdef int64_t[::1] t = np.ascontiguousarray(times, dtype=np.int64)
    cdef int64_t[::1] u = np.ascontiguousarray(users, dtype=np.int64)
    cdef int64_t W = window
    cdef bint bucket = bucketed
    cdef int mp = min(int(max_prov), MAXP)
    cdef Py_ssize_t n = t.shape[0]
    cdef int64_t nu = 1
    if n:
        nu = max(int(np.max(u)) + 1, 1)
    cdef unordered_map[int64_t, EdgeAcc] acc
    cdef EdgeAcc* slot
    cdef EdgeAcc fresh
    cdef Py_ssize_t start = 0, end, i, j
    cdef int64_t val, ti, ui, uj, bi, key

    with nogil:
        while start < n:
            val = v[start]
            end = start + 1
            while end < n and v[end] == val:
                end += 1
            for i in range(start, end - 1):
                ti = t[i]
                ui = u[i]
                bi = floordiv(ti, W)
                j = i + 1
                while j < end:
                    if bucket:
                        if floordiv(t[j], W) != bi:
                            break
                    elif t[j] - ti > W:
                        break
                    uj = u[j]
                    if uj != ui:
                        if ui < uj:
                            key = ui * nu + uj
                        else:
                            key = uj * nu + ui
                        if acc.count(key) == 0:
                            fresh.count = 1
                            fresh.nprov = 0
                            if mp > 0:
                                fresh.prov[0] = val
                                fresh.nprov = 1
                            acc[key] = fresh
                        else:
                            slot = &acc[key]
                            slot.count += 1
                            if slot.nprov < mp and slot.prov[slot.nprov - 1] != val:
                                slot.prov[slot.nprov] = val
                                slot.nprov += 1
                    j += 1
            start = end

    cdef vector[int64_t] keys
    keys.reserve(acc.size())
    for item in acc:
        keys.push_back(item.first)
    cpp_sort(keys.begin(), keys.end())
    cdef Py_ssize_t m = keys.size(), row, k
    a_out = np.empty(m, dtype=np.int64)
    b_out = np.empty(m, dtype=np.int64)
    w_out = np.empty(m, dtype=np.int64)
    p_out = np.full((m, mp), -1, dtype=np.int64)
    cdef int64_t[::1] av = a_out, bv = b_out, wv = w_out
    cdef int64_t[:, ::1] pv = p_out
    for row in range(m):
        key = keys[row]
        slot = &acc[key]
        av[row] = key // nu
        bv[row] = key % nu
        wv[row] = slot.count
        for k in range(slot.nprov):
            pv[row, k] = slot.prov[k]
    return a_out, b_out, w_out, p_out


def local_move(indptr, indices, weights, degree, comm, tot, size, order, double m2):
    cdef int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] deg = np.ascontiguousarray(degree, dtype=np.float64)
    cdef int64_t[::1] c = comm
    cdef double[::1] tt = tot
    cdef int64_t[::1] sz = size
    cdef int64_t[::1] od = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t n = deg.shape[0], no = od.shape[0]
    cdef double[::1] link = np.zeros(n, dtype=np.float64)
    cdef unsigned char[::1] seen = np.zeros(n, dtype=np.uint8)
    cdef vector[int64_t] touched
    cdef Py_ssize_t q, p
    cdef int64_t i, j, ci, cj, cc, best, target
    cdef double ki, eps, stay_gain, best_gain, g
    cdef long moves = 0, sweep_moves

    with nogil:
        while True:
            sweep_moves = 0
            for q in range(no):
                i = od[q]
                ci = c[i]
                ki = deg[i]
                for p in range(ip[i], ip[i + 1]):
                    j = ix[p]
                    if j == i:
                        continue
                    cj = c[j]
                    if not seen[cj]:
                        seen[cj] = 1
                        touched.push_back(cj)
                    link[cj] += wt[p]
                tt[ci] -= ki
                sz[ci] -= 1
                eps = 1e-12 * (1.0 + ki)
                stay_gain = link[ci] - tt[ci] * ki / m2
                best = -1
                best_gain = 0.0
                for p in range(<Py_ssize_t>touched.size()):
                    cc = touched[p]
                    if cc == ci:
                        continue
                    g = link[cc] - tt[cc] * ki / m2
                    if best < 0 or g > best_gain + eps or (g >= best_gain - eps and cc < best):
                        best = cc
                        best_gain = g
                target = ci
                if best >= 0:
                    if best_gain > stay_gain + eps:
                        target = best
                    elif best_gain >= stay_gain - eps and sz[ci] == 0:
                        target = best
                tt[target] += ki
                sz[target] += 1
                if target != ci:
                    c[i] = target
                    sweep_moves += 1
                for p in range(<Py_ssize_t>touched.size()):
                    cc = touched[p]
                    link[cc] = 0.0
                    seen[cc] = 0
                touched.clear()
            moves += sweep_moves
            if sweep_moves == 0:
                break
    return moves
