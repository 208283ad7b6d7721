"""Minimum-weight perfect matching on general graphs (primal-dual blossom).

The core solver is the classic dense O(n^3) maximum-weight matching with
array-based blossom bookkeeping, run on transformed weights
W = 2 * (C - w) with C large enough that maximum weight implies maximum
cardinality; a perfect matching of minimum total original weight is then the
maximizer.  Integer weights only; all dual variables stay integral because
the internal weights are even.

Correctness is anchored to `brute_force_min_weight` (exhaustive over all
(n-1)!! pairings) by the test suite rather than to asymptotics.
"""

from __future__ import annotations

import numpy as np

from ._kernels import njit

INF = np.int64(1) << 60


@njit(cache=True)
def _blossom_core(W):  # noqa: C901 - dense primal-dual solver, kept in one unit
    """Maximum-weight matching over positive entries of W ((n+1,n+1), 1-indexed).

    W must be symmetric with even entries; 0 marks an absent edge.  Returns
    mate[0..n] (mate[x] = 0 means unmatched; index 0 unused).
    """
    n = W.shape[0] - 1
    NX = 2 * n + 1
    g_w = np.zeros((NX, NX), np.int64)
    g_u = np.zeros((NX, NX), np.int32)
    g_v = np.zeros((NX, NX), np.int32)
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            g_w[u, v] = W[u, v]
            g_u[u, v] = u
            g_v[u, v] = v

    lab = np.zeros(NX, np.int64)
    match = np.zeros(NX, np.int32)
    slack = np.zeros(NX, np.int32)
    st = np.zeros(NX, np.int32)
    pa = np.zeros(NX, np.int32)
    S = np.full(NX, -1, np.int8)
    vis = np.zeros(NX, np.int32)
    flower = np.zeros((NX, n + 2), np.int32)
    flower_len = np.zeros(NX, np.int32)
    flower_from = np.zeros((NX, n + 1), np.int32)
    nx = np.zeros(1, np.int32)  # current max node id (mutated inside closures)

    qcap = n * n + 8 * n + 64
    queue = np.zeros(qcap, np.int64)
    qpos = np.zeros(2, np.int64)  # head, tail
    stamp = np.zeros(1, np.int32)
    stack = np.zeros(4 * NX + 16, np.int32)
    pair_stack = np.zeros((2 * NX + 16, 2), np.int32)

    maxw = np.int64(0)
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            if W[u, v] > maxw:
                maxw = W[u, v]
    for x in range(1, n + 1):
        lab[x] = maxw // 2
        st[x] = x
        flower_from[x, x] = x
    nx[0] = n

    def e_delta(a, b):
        return lab[g_u[a, b]] + lab[g_v[a, b]] - g_w[a, b]

    def q_push(x):
        # enqueue all original leaves of x in flower order
        sp = 0
        stack[sp] = x
        sp += 1
        while sp > 0:
            sp -= 1
            y = stack[sp]
            if y <= n:
                queue[qpos[1] % qcap] = y
                qpos[1] += 1
            else:
                for i in range(flower_len[y] - 1, -1, -1):
                    stack[sp] = flower[y, i]
                    sp += 1

    def set_st(x, b):
        sp = 0
        stack[sp] = x
        sp += 1
        while sp > 0:
            sp -= 1
            y = stack[sp]
            st[y] = b
            if y > n:
                for i in range(flower_len[y]):
                    stack[sp] = flower[y, i]
                    sp += 1

    def update_slack(u, x):
        if slack[x] == 0 or e_delta(u, x) < e_delta(slack[x], x):
            slack[x] = u

    def set_slack(x):
        slack[x] = 0
        for u in range(1, n + 1):
            if g_w[u, x] > 0 and st[u] != x and S[st[u]] == 0:
                update_slack(u, x)

    def get_pr(b, xr):
        ln = flower_len[b]
        pr = 0
        for i in range(ln):
            if flower[b, i] == xr:
                pr = i
                break
        if pr % 2 == 1:
            lo, hi = 1, ln - 1
            while lo < hi:
                tmp = flower[b, lo]
                flower[b, lo] = flower[b, hi]
                flower[b, hi] = tmp
                lo += 1
                hi -= 1
            pr = ln - pr
        return pr

    def set_match(u0, v0):
        sp = 0
        pair_stack[sp, 0] = u0
        pair_stack[sp, 1] = v0
        sp += 1
        while sp > 0:
            sp -= 1
            u = pair_stack[sp, 0]
            v = pair_stack[sp, 1]
            match[u] = g_v[u, v]
            if u > n:
                xr = flower_from[u, g_u[u, v]]
                pr = get_pr(u, xr)
                for i in range(pr):
                    pair_stack[sp, 0] = flower[u, i]
                    pair_stack[sp, 1] = flower[u, i ^ 1]
                    sp += 1
                pair_stack[sp, 0] = xr
                pair_stack[sp, 1] = v
                sp += 1
                ln = flower_len[u]
                tmp = np.empty(ln, np.int32)
                for i in range(ln):
                    tmp[i] = flower[u, (pr + i) % ln]
                for i in range(ln):
                    flower[u, i] = tmp[i]

    def augment(u0, v0):
        u = u0
        v = v0
        while True:
            xnv = st[match[u]]
            set_match(u, v)
            if xnv == 0:
                return
            set_match(xnv, st[pa[xnv]])
            u = st[pa[xnv]]
            v = xnv

    def get_lca(u0, v0):
        stamp[0] += 1
        t = stamp[0]
        u = u0
        v = v0
        while u != 0 or v != 0:
            if u != 0:
                if vis[u] == t:
                    return u
                vis[u] = t
                u = st[match[u]]
                if u != 0:
                    u = st[pa[u]]
            tmp = u
            u = v
            v = tmp
        return 0

    def add_blossom(u, lca, v):
        b = n + 1
        while b <= nx[0] and st[b] != 0:
            b += 1
        if b > nx[0]:
            nx[0] = b
        lab[b] = 0
        S[b] = 0
        match[b] = match[lca]
        flower[b, 0] = lca
        ln = 1
        x = u
        while x != lca:
            y = st[match[x]]
            flower[b, ln] = x
            flower[b, ln + 1] = y
            ln += 2
            q_push(y)
            x = st[pa[y]]
        lo, hi = 1, ln - 1
        while lo < hi:
            tmp = flower[b, lo]
            flower[b, lo] = flower[b, hi]
            flower[b, hi] = tmp
            lo += 1
            hi -= 1
        x = v
        while x != lca:
            y = st[match[x]]
            flower[b, ln] = x
            flower[b, ln + 1] = y
            ln += 2
            q_push(y)
            x = st[pa[y]]
        flower_len[b] = ln
        set_st(b, b)
        for x in range(1, nx[0] + 1):
            g_w[b, x] = 0
            g_w[x, b] = 0
        for x in range(1, n + 1):
            flower_from[b, x] = 0
        for i in range(ln):
            xs = flower[b, i]
            for x in range(1, nx[0] + 1):
                if g_w[xs, x] > 0 and (g_w[b, x] == 0 or e_delta(xs, x) < e_delta(b, x)):
                    g_w[b, x] = g_w[xs, x]
                    g_u[b, x] = g_u[xs, x]
                    g_v[b, x] = g_v[xs, x]
                    g_w[x, b] = g_w[x, xs]
                    g_u[x, b] = g_u[x, xs]
                    g_v[x, b] = g_v[x, xs]
            for x in range(1, n + 1):
                if flower_from[xs, x] != 0:
                    flower_from[b, x] = xs
        set_slack(b)

    def expand_blossom(b):
        for i in range(flower_len[b]):
            set_st(flower[b, i], flower[b, i])
        xr = flower_from[b, g_u[b, pa[b]]]
        pr = get_pr(b, xr)
        i = 0
        while i < pr:
            xs = flower[b, i]
            xns = flower[b, i + 1]
            pa[xs] = g_u[xns, xs]
            S[xs] = 1
            S[xns] = 0
            slack[xs] = 0
            set_slack(xns)
            q_push(xns)
            i += 2
        S[xr] = 1
        pa[xr] = pa[b]
        for i in range(pr + 1, flower_len[b]):
            xs = flower[b, i]
            S[xs] = -1
            set_slack(xs)
        st[b] = 0

    def on_found_edge(eu, ev):
        # (eu, ev): original endpoints of a tight edge, eu on the S side
        u = st[eu]
        v = st[ev]
        if S[v] == -1:
            pa[v] = eu
            S[v] = 1
            nu = st[match[v]]
            slack[v] = 0
            slack[nu] = 0
            S[nu] = 0
            q_push(nu)
            return False
        elif S[v] == 0:
            lca = get_lca(u, v)
            if lca == 0:
                augment(u, v)
                augment(v, u)
                return True
            else:
                add_blossom(u, lca, v)
        return False

    # -- phases ------------------------------------------------------------

    while True:
        for x in range(nx[0] + 1):
            S[x] = -1
            slack[x] = 0
        qpos[0] = 0
        qpos[1] = 0
        for x in range(1, nx[0] + 1):
            if st[x] == x and match[x] == 0:
                pa[x] = 0
                S[x] = 0
                q_push(x)
        if qpos[1] == 0:
            break
        augmented = False
        running = True
        while running:
            event = 0  # 1 = augmented, 2 = dual exhausted
            while qpos[0] < qpos[1]:
                u = queue[qpos[0] % qcap]
                qpos[0] += 1
                if S[st[u]] == 1:
                    continue
                for v in range(1, n + 1):
                    if g_w[u, v] > 0 and st[u] != st[v]:
                        if e_delta(u, v) == 0:
                            if on_found_edge(u, v):
                                event = 1
                                break
                        else:
                            update_slack(u, st[v])
                if event != 0:
                    break
            if event == 1:
                augmented = True
                break
            d = INF
            for b in range(n + 1, nx[0] + 1):
                if st[b] == b and S[b] == 1:
                    half = lab[b] // 2
                    if half < d:
                        d = half
            for x in range(1, nx[0] + 1):
                if st[x] == x and slack[x] != 0:
                    if S[x] == -1:
                        dd = e_delta(slack[x], x)
                        if dd < d:
                            d = dd
                    elif S[x] == 0:
                        dd = e_delta(slack[x], x) // 2
                        if dd < d:
                            d = dd
            for u in range(1, n + 1):
                if S[st[u]] == 0 and lab[u] <= d:
                    event = 2  # no augmenting path exists anywhere
                    break
            if event == 2:
                running = False
                break
            for u in range(1, n + 1):
                s = S[st[u]]
                if s == 0:
                    lab[u] -= d
                elif s == 1:
                    lab[u] += d
            for b in range(n + 1, nx[0] + 1):
                if st[b] == b:
                    if S[b] == 0:
                        lab[b] += 2 * d
                    elif S[b] == 1:
                        lab[b] -= 2 * d
            qpos[0] = 0
            qpos[1] = 0
            for x in range(1, nx[0] + 1):
                if (
                    st[x] == x
                    and slack[x] != 0
                    and st[slack[x]] != x
                    and e_delta(slack[x], x) == 0
                ):
                    if on_found_edge(slack[x], g_v[slack[x], x]):
                        event = 1
                        break
            if event == 1:
                augmented = True
                break
            for b in range(n + 1, nx[0] + 1):
                if st[b] == b and S[b] == 1 and lab[b] == 0:
                    expand_blossom(b)
        if not augmented:
            break

    return match[: n + 1].copy()


def min_weight_perfect_matching(n: int, edges):
    """Minimum-weight perfect matching restricted to candidate edges.

    edges: iterable of (u, v, w) with 0-indexed vertices and integer w >= 0.
    Returns (pairs, total_weight), or None if no perfect matching exists
    within the candidate set.  Deterministic for a fixed input.
    """
    if n == 0:
        return [], 0
    if n % 2 == 1:
        return None
    dist = np.full((n + 1, n + 1), -1, np.int64)
    maxd = 0
    for u, v, w in edges:
        if u == v:
            continue
        w = int(w)
        if w < 0:
            raise ValueError("negative edge weight")
        a, b = u + 1, v + 1
        if dist[a, b] < 0 or w < dist[a, b]:
            dist[a, b] = w
            dist[b, a] = w
            maxd = max(maxd, w)
    C = (n // 2) * maxd + 1
    W = np.zeros((n + 1, n + 1), np.int64)
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            if a != b and dist[a, b] >= 0:
                W[a, b] = 2 * (C - dist[a, b])
    mate = _blossom_core(W)
    pairs = []
    total = 0
    for a in range(1, n + 1):
        m = int(mate[a])
        if m == 0:
            return None
        if a < m:
            pairs.append((a - 1, m - 1))
            total += int(dist[a, m])
    return pairs, total


def brute_force_min_weight(weights: np.ndarray):
    """Exhaustive minimum over all perfect pairings of a complete graph.

    weights: (n, n) symmetric integer matrix, n even and <= 12.  Returns the
    first optimum in lexicographic pairing order.
    """
    n = weights.shape[0]
    if n % 2 == 1:
        raise ValueError("odd number of nodes has no perfect matching")
    if n > 12:
        raise ValueError("brute force capped at 12 nodes")
    if n == 0:
        return [], 0
    best_pairs: list[tuple[int, int]] = []
    best = [None]

    def rec(remaining, acc, pairs):
        if best[0] is not None and acc >= best[0]:
            return
        if not remaining:
            best[0] = acc
            best_pairs.clear()
            best_pairs.extend(pairs)
            return
        a = remaining[0]
        rest = remaining[1:]
        for i, b in enumerate(rest):
            rec(
                rest[:i] + rest[i + 1 :],
                acc + int(weights[a, b]),
                pairs + [(a, b)],
            )

    rec(tuple(range(n)), 0, [])
    return best_pairs, int(best[0])


def warmup():
    """Compile the blossom core on a toy instance (call before forking)."""
    min_weight_perfect_matching(
        4, [(0, 1, 1), (2, 3, 1), (0, 2, 2), (1, 3, 2), (0, 3, 5), (1, 2, 5)]
    )
