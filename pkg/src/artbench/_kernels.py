"""Compiled hot paths for the small-world index.

Storage layout shared with :mod:`artbench.hnsw`:

- ``coords``   float64 (capacity, d), row i = coordinates of node i
- ``adj0``     int32 (capacity, m0), ground-layer links of node i
- ``deg0``     int32 (capacity,), ground-layer degree
- ``adj_up``   int32 (rows, m), upper-layer link blocks; a node with top
  level L owns rows ``up_row[i] .. up_row[i]+L-1`` for layers 1..L
- ``deg_up``   int32 (rows,)
- ``up_row``   int32 (capacity,), first upper block row of node i (-1 if none)
- ``visited``  int64 (capacity,) epoch stamps, one epoch per traversal

Distances are compared squared; ties broken toward the lower node id so
every traversal is deterministic.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _d2(coords, i, q):
    s = 0.0
    for j in range(q.size):
        t = coords[i, j] - q[j]
        s += t * t
    return s


@njit(cache=True, inline="always")
def _row_of(up_row, node, layer):
    # layer >= 1; ground layer is addressed directly by node id
    return up_row[node] + (layer - 1)


@njit(cache=True)
def search_layer(
    coords,
    adj0,
    deg0,
    adj_up,
    deg_up,
    up_row,
    layer,
    q,
    entry_ids,
    entry_count,
    ef,
    visited,
    epoch,
    out_id,
    out_d2,
):
    """Best-first expansion on one layer.

    Seeds from ``entry_ids[:entry_count]``, keeps the ``ef`` closest nodes
    found, and stops once the nearest unexpanded candidate cannot improve
    them.  Results land in ``out_id``/``out_d2`` sorted ascending by
    (distance, id); returns how many were found.
    """
    cap = coords.shape[0]
    cand_d2 = np.empty(cap + 1, np.float64)
    cand_id = np.empty(cap + 1, np.int32)
    ncand = 0
    wn = 0

    for s in range(entry_count):
        node = entry_ids[s]
        if visited[node] == epoch:
            continue
        visited[node] = epoch
        dist = _d2(coords, node, q)
        # push candidate (min-heap on (d2, id))
        i = ncand
        cand_d2[i] = dist
        cand_id[i] = node
        ncand += 1
        while i > 0:
            p = (i - 1) // 2
            if cand_d2[p] > cand_d2[i] or (
                cand_d2[p] == cand_d2[i] and cand_id[p] > cand_id[i]
            ):
                cand_d2[p], cand_d2[i] = cand_d2[i], cand_d2[p]
                cand_id[p], cand_id[i] = cand_id[i], cand_id[p]
                i = p
            else:
                break
        # insert into result list (sorted, capped at ef)
        pos = wn
        if wn < ef:
            wn += 1
        elif dist > out_d2[wn - 1] or (dist == out_d2[wn - 1] and node > out_id[wn - 1]):
            continue
        else:
            pos = wn - 1
        while pos > 0 and (
            out_d2[pos - 1] > dist or (out_d2[pos - 1] == dist and out_id[pos - 1] > node)
        ):
            if pos < wn:
                out_d2[pos] = out_d2[pos - 1]
                out_id[pos] = out_id[pos - 1]
            pos -= 1
        out_d2[pos] = dist
        out_id[pos] = node

    while ncand > 0:
        best_d2 = cand_d2[0]
        best_id = cand_id[0]
        # pop the min candidate
        ncand -= 1
        cand_d2[0] = cand_d2[ncand]
        cand_id[0] = cand_id[ncand]
        i = 0
        while True:
            l = 2 * i + 1
            r = l + 1
            sm = i
            if l < ncand and (
                cand_d2[l] < cand_d2[sm]
                or (cand_d2[l] == cand_d2[sm] and cand_id[l] < cand_id[sm])
            ):
                sm = l
            if r < ncand and (
                cand_d2[r] < cand_d2[sm]
                or (cand_d2[r] == cand_d2[sm] and cand_id[r] < cand_id[sm])
            ):
                sm = r
            if sm == i:
                break
            cand_d2[i], cand_d2[sm] = cand_d2[sm], cand_d2[i]
            cand_id[i], cand_id[sm] = cand_id[sm], cand_id[i]
            i = sm

        if wn >= ef and (
            best_d2 > out_d2[wn - 1]
            or (best_d2 == out_d2[wn - 1] and best_id > out_id[wn - 1])
        ):
            break

        if layer == 0:
            row = best_id
            degree = deg0[row]
        else:
            row = _row_of(up_row, best_id, layer)
            degree = deg_up[row]
        for e in range(degree):
            nb = adj0[row, e] if layer == 0 else adj_up[row, e]
            if visited[nb] == epoch:
                continue
            visited[nb] = epoch
            dist = _d2(coords, nb, q)
            if wn >= ef and (
                dist > out_d2[wn - 1] or (dist == out_d2[wn - 1] and nb > out_id[wn - 1])
            ):
                continue
            i = ncand
            cand_d2[i] = dist
            cand_id[i] = nb
            ncand += 1
            while i > 0:
                p = (i - 1) // 2
                if cand_d2[p] > cand_d2[i] or (
                    cand_d2[p] == cand_d2[i] and cand_id[p] > cand_id[i]
                ):
                    cand_d2[p], cand_d2[i] = cand_d2[i], cand_d2[p]
                    cand_id[p], cand_id[i] = cand_id[i], cand_id[p]
                    i = p
                else:
                    break
            pos = wn
            if wn < ef:
                wn += 1
            else:
                pos = wn - 1
            while pos > 0 and (
                out_d2[pos - 1] > dist
                or (out_d2[pos - 1] == dist and out_id[pos - 1] > nb)
            ):
                if pos < wn:
                    out_d2[pos] = out_d2[pos - 1]
                    out_id[pos] = out_id[pos - 1]
                pos -= 1
            out_d2[pos] = dist
            out_id[pos] = nb
    return wn


@njit(cache=True)
def greedy_descent(
    coords, adj0, deg0, adj_up, deg_up, up_row, q, entry, from_layer, to_layer
):
    """Walk layer by layer to the local minimum, strictly improving distance."""
    cur = entry
    cur_d2 = _d2(coords, cur, q)
    for layer in range(from_layer, to_layer - 1, -1):
        moved = True
        while moved:
            moved = False
            if layer == 0:
                row = cur
                degree = deg0[row]
            else:
                row = _row_of(up_row, cur, layer)
                degree = deg_up[row]
            best = cur
            best_d2 = cur_d2
            for e in range(degree):
                nb = adj0[row, e] if layer == 0 else adj_up[row, e]
                dist = _d2(coords, nb, q)
                if dist < best_d2 or (dist == best_d2 and nb < best):
                    best = nb
                    best_d2 = dist
            if best_d2 < cur_d2:
                cur = best
                cur_d2 = best_d2
                moved = True
    return cur, cur_d2


@njit(cache=True)
def nns_batch(
    coords,
    adj0,
    deg0,
    adj_up,
    deg_up,
    up_row,
    entry,
    max_layer,
    queries,
    ef,
    visited,
    epoch0,
    out_id,
    out_d2,
):
    """Approximate nearest neighbor for each query row: greedy descent to
    layer 1, then a ground-layer expansion keeping ``ef`` candidates."""
    w_id = np.empty(ef, np.int32)
    w_d2 = np.empty(ef, np.float64)
    seed = np.empty(1, np.int32)
    for i in range(queries.shape[0]):
        q = queries[i]
        cur = entry
        if max_layer > 0:
            cur, _ = greedy_descent(
                coords, adj0, deg0, adj_up, deg_up, up_row, q, entry, max_layer, 1
            )
        seed[0] = cur
        wn = search_layer(
            coords,
            adj0,
            deg0,
            adj_up,
            deg_up,
            up_row,
            0,
            q,
            seed,
            1,
            ef,
            visited,
            epoch0 + i,
            w_id,
            w_d2,
        )
        out_id[i] = w_id[0]
        out_d2[i] = w_d2[0]


@njit(cache=True)
def connect_and_shrink(
    coords, adj0, deg0, adj_up, deg_up, up_row, new_id, layer, sel_ids, sel_count, cap
):
    """Link a fresh node to its selected neighbors, both directions.

    A neighbor pushed over its cap keeps only its ``cap`` closest links
    (ties to the lower id); the dropped link is removed from both sides.
    """
    if layer == 0:
        new_row = new_id
    else:
        new_row = _row_of(up_row, new_id, layer)
    for s in range(sel_count):
        if layer == 0:
            adj0[new_row, s] = sel_ids[s]
        else:
            adj_up[new_row, s] = sel_ids[s]
    if layer == 0:
        deg0[new_row] = sel_count
    else:
        deg_up[new_row] = sel_count

    for s in range(sel_count):
        nb = sel_ids[s]
        if layer == 0:
            row = nb
            degree = deg0[row]
        else:
            row = _row_of(up_row, nb, layer)
            degree = deg_up[row]
        if degree < cap:
            if layer == 0:
                adj0[row, degree] = new_id
                deg0[row] = degree + 1
            else:
                adj_up[row, degree] = new_id
                deg_up[row] = degree + 1
            continue
        # one over cap: evict the farthest of (existing links + new node)
        worst_slot = -1  # -1 marks the new link as current worst
        worst_d2 = _d2(coords, new_id, coords[nb])
        worst_id = new_id
        for e in range(degree):
            link = adj0[row, e] if layer == 0 else adj_up[row, e]
            dist = _d2(coords, link, coords[nb])
            if dist > worst_d2 or (dist == worst_d2 and link > worst_id):
                worst_slot = e
                worst_d2 = dist
                worst_id = link
        if worst_slot < 0:
            # new link loses outright: undo it on the new node's side
            if layer == 0:
                nd = deg0[new_row]
            else:
                nd = deg_up[new_row]
            for e in range(nd):
                link = adj0[new_row, e] if layer == 0 else adj_up[new_row, e]
                if link == nb:
                    if layer == 0:
                        adj0[new_row, e] = adj0[new_row, nd - 1]
                        deg0[new_row] = nd - 1
                    else:
                        adj_up[new_row, e] = adj_up[new_row, nd - 1]
                        deg_up[new_row] = nd - 1
                    break
            continue
        # replace the evicted link and drop its reverse entry
        if layer == 0:
            adj0[row, worst_slot] = new_id
        else:
            adj_up[row, worst_slot] = new_id
        if layer == 0:
            drow = worst_id
            dd = deg0[drow]
        else:
            drow = _row_of(up_row, worst_id, layer)
            dd = deg_up[drow]
        for e in range(dd):
            link = adj0[drow, e] if layer == 0 else adj_up[drow, e]
            if link == nb:
                if layer == 0:
                    adj0[drow, e] = adj0[drow, dd - 1]
                    deg0[drow] = dd - 1
                else:
                    adj_up[drow, e] = adj_up[drow, dd - 1]
                    deg_up[drow] = dd - 1
                break
