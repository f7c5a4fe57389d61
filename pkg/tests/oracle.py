"""Brute-force reference implementations, evaluated straight from the set-builder definitions.

Deliberately naive: plain loops over the raw tuple list, no index, no
sorting tricks.  Times are seconds; windows are seconds (may be inf).
"""

import math
from itertools import product

INF = math.inf


def o_neighbors(A, v, t, sus):
    return {b for (a, b, _, t1) in A if a == v and t1 <= t and t - t1 <= sus}


def o_active_pairs(A, v, topic, t, sus, fos, constrained=True):
    """{v2: earliest (t2, t1)} over qualifying edge/adoption time pairs."""
    best = {}
    for (a, v2, _, t1) in A:
        if a != v or v2 == v:
            continue
        for (b, _, th, t2) in A:
            if b != v2 or th != topic:
                continue
            if constrained:
                ok = t1 <= t2 and t2 - t1 <= sus and t2 <= t and t - t2 <= fos
            else:
                ok = t1 <= t2 and t2 <= t
            if ok:
                key = (t2, t1)
                if v2 not in best or key < best[v2]:
                    best[v2] = key
    return best


def o_active(A, v, topic, t, sus, fos, constrained=True):
    return set(o_active_pairs(A, v, topic, t, sus, fos, constrained))


def _without_one(A, tup):
    out = list(A)
    if tup in out:
        out.remove(tup)
    return out


def _reach(nodes, edges):
    reach = {u: {u} for u in nodes}
    changed = True
    while changed:
        changed = False
        for (u, z) in edges:
            new = reach[z] - reach[u]
            if new:
                reach[u] |= new
                changed = True
    return reach


def o_scc_count(nodes, edges):
    """Component count via mutual reachability classes (no Tarjan)."""
    nodes = set(nodes)
    edges = {(u, z) for (u, z) in edges if u in nodes and z in nodes}
    reach = _reach(nodes, edges)
    classes = {frozenset(z for z in nodes if z in reach[u] and u in reach[z]) for u in nodes}
    return len(classes)


def o_features(A, ctx, sus, fos, sigma_s, gamma, mur_target="source_vprime",
               clt_pair_mode="ordered", acc_edge_scope="any_topic", constrained=True):
    v, src, topic, t = ctx
    pairs = o_active_pairs(A, v, topic, t, sus, fos, constrained)
    act = set(pairs)
    hood = o_neighbors(A, v, t, sus if constrained else INF)
    nan = len(act)
    pne = nan / len(hood) if hood else 0.0

    if act:
        tl = max(pairs[u][0] for u in act)
        cdi = math.fsum(math.exp(-(tl - pairs[u][0]) / sigma_s) for u in act)
    else:
        cdi = 0.0

    A_prev = _without_one(A, tuple(ctx))
    prr = sum(1 for u in act for (a, b, _, t1) in A_prev if a == v and b == u and t1 <= t)

    def f(u, z):
        return any(a == u and b == z and th == topic and t1 <= t for (a, b, th, t1) in A)

    if clt_pair_mode == "ordered":
        clt = sum(1 for u, z in product(act, act) if u != z and f(u, z))
    else:
        ul = sorted(act)
        clt = sum(1 for i in range(len(ul)) for j in range(i + 1, len(ul))
                  if f(ul[i], ul[j]) or f(ul[j], ul[i]))
    clc = clt / nan ** 2 if nan else 0.0

    def h(u):
        return sum(1 for (_, b, _, t1) in A_prev if b == u and t1 <= t) >= gamma

    hub = sum(1 for u in act if h(u))

    target = src if mur_target == "source_vprime" else v
    mur = sum(1 for u in act if any(a == u and b == target and th == topic and t1 <= t
                                    for (a, b, th, t1) in A))

    def edges(scope):
        return {(a, b) for (a, b, th, t1) in A
                if t1 <= t and (scope == "any_topic" or th == topic)}

    if act:
        E = edges(acc_edge_scope)
        acc = o_scc_count(act, E)
        den = o_scc_count(hood, E) if hood else 0
        acr = acc / den if den else 0.0
    else:
        acc, acr = 0, 0.0
    return dict(nan=nan, pne=pne, cdi=cdi, prr=prr, clt=clt, clc=clc,
                hub=hub, mur=mur, acc=acc, acr=acr)


def o_sigma_seconds(A):
    """Longest delay t - t_u over all records and constraint-free active neighbour adoptions."""
    best = 0
    for (v, _, topic, t) in A:
        for (a, v2, _, t1) in A:
            if a != v or v2 == v:
                continue
            for (b, _, th, t2) in A:
                if b == v2 and th == topic and t1 <= t2 <= t:
                    best = max(best, t - t2)
    return best


def o_negative_candidates(A, ego, topic, t, sus, fos, literal=False):
    users = {x for (a, b, _, _) in A for x in (a, b)}
    out = set()
    for w in users:
        if w == ego:
            continue
        act = o_active(A, w, topic, t, sus, fos)
        if ego not in act:
            continue
        if literal:
            if any(a == w and b in act and th == topic for (a, b, th, _) in A):
                continue
        elif any(a == w and th == topic for (a, _, th, _) in A):
            continue
        out.add(w)
    return out
