"""Pure-Python implementations of the hot loops.

Semantics must match ``_ckernels.pyx`` exactly, including floating-point
evaluation order in :func:`local_move`, so both backends give identical
partitions.
"""

import numpy as np

MAX_PROVENANCE = 10


def sync_pairs(value_ids, times, users, window, bucketed=False, max_prov=MAX_PROVENANCE):
    """Count synchronized event pairs per unordered user pair.

    Inputs are parallel integer arrays sorted by (value, time). Two events
    of the same value by different users are synchronized when their times
    differ by at most ``window`` (or, with ``bucketed``, fall in the same
    ``time // window`` bucket).

    Returns ``(a, b, weight, prov)``: edge endpoints with ``a < b`` sorted
    lexicographically, weights, and an ``(E, max_prov)`` array of the first
    distinct value ids seen on each edge, padded with -1.
    """
    max_prov = min(max_prov, MAX_PROVENANCE)
    value_ids = [int(x) for x in value_ids]
    times = [int(x) for x in times]
    users = [int(x) for x in users]
    window = int(window)
    n = len(times)
    acc = {}
    start = 0
    while start < n:
        v = value_ids[start]
        end = start + 1
        while end < n and value_ids[end] == v:
            end += 1
        for i in range(start, end - 1):
            ti = times[i]
            ui = users[i]
            bi = ti // window
            j = i + 1
            while j < end:
                tj = times[j]
                if bucketed:
                    if tj // window != bi:
                        break
                elif tj - ti > window:
                    break
                uj = users[j]
                if uj != ui:
                    key = (ui, uj) if ui < uj else (uj, ui)
                    slot = acc.get(key)
                    if slot is None:
                        acc[key] = [1, [v]] if max_prov > 0 else [1, []]
                    else:
                        slot[0] += 1
                        prov = slot[1]
                        if len(prov) < max_prov and prov[-1] != v:
                            prov.append(v)
                j += 1
        start = end

    keys = sorted(acc)
    m = len(keys)
    a = np.fromiter((k[0] for k in keys), dtype=np.int64, count=m)
    b = np.fromiter((k[1] for k in keys), dtype=np.int64, count=m)
    w = np.fromiter((acc[k][0] for k in keys), dtype=np.int64, count=m)
    prov = np.full((m, max_prov), -1, dtype=np.int64)
    for row, k in enumerate(keys):
        vals = acc[k][1]
        prov[row, : len(vals)] = vals
    return a, b, w, prov


def local_move(indptr, indices, weights, degree, comm, tot, size, order, m2):
    """One Louvain local-moving phase; mutates ``comm``, ``tot``, ``size``.

    Each node in ``order`` is taken out of its community and placed in the
    neighbouring community of largest modularity gain. Ties go to the
    lowest community id. A move with zero gain is taken only when it
    empties the node's old community. Sweeps repeat until one makes no
    move. Returns the total number of moves.
    """
    n = len(degree)
    indptr = indptr.tolist()
    indices = indices.tolist()
    weights = weights.tolist()
    degree = degree.tolist()
    order = order.tolist()
    c = comm.tolist()
    t = tot.tolist()
    s = size.tolist()
    link = [0.0] * n
    seen = [False] * n
    touched = []
    moves = 0
    while True:
        sweep_moves = 0
        for i in order:
            ci = c[i]
            ki = degree[i]
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j == i:
                    continue
                cj = c[j]
                if not seen[cj]:
                    seen[cj] = True
                    touched.append(cj)
                link[cj] += weights[p]
            t[ci] -= ki
            s[ci] -= 1
            eps = 1e-12 * (1.0 + ki)
            stay_gain = link[ci] - t[ci] * ki / m2
            best = -1
            best_gain = 0.0
            for cc in touched:
                if cc == ci:
                    continue
                g = link[cc] - t[cc] * ki / m2
                if best < 0 or g > best_gain + eps or (g >= best_gain - eps and cc < best):
                    best = cc
                    best_gain = g
            target = ci
            if best >= 0:
                if best_gain > stay_gain + eps:
                    target = best
                elif best_gain >= stay_gain - eps and s[ci] == 0:
                    target = best
            t[target] += ki
            s[target] += 1
            if target != ci:
                c[i] = target
                sweep_moves += 1
            for cc in touched:
                link[cc] = 0.0
                seen[cc] = False
            touched.clear()
        moves += sweep_moves
        if sweep_moves == 0:
            break
    comm[:] = c
    tot[:] = t
    size[:] = s
    return moves
