"""Independent brute-force reference implementation.

Everything here works on plain Python tuples with explicit loops over the
full dense category product.  It shares no code with the package.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter


def h_mbits(counts) -> float:
    counts = [c for c in counts if c > 0]
    n = sum(counts)
    h = 0.0
    for c in counts:
        p = c / n
        h -= p * math.log2(p)
    return 1000.0 * h


def dense_terms(triples, categories=None):
    """All seven entropies of a list of (x, y, z) tuples.

    Each term is evaluated by looping over every combination of the category
    sets, including the empty ones.
    """
    if categories is None:
        categories = [sorted({t[i] for t in triples}) for i in range(3)]
    cells = Counter(triples)
    xs, ys, zs = categories
    full = {(x, y, z): cells.get((x, y, z), 0) for x in xs for y in ys for z in zs}

    def marginal(dims):
        out = {}
        for combo in itertools.product(*(categories[d] for d in dims)):
            out[combo] = 0
        for key, c in full.items():
            out[tuple(key[d] for d in dims)] += c
        return list(out.values())

    names = ["x", "y", "z", "xy", "xz", "yz", "xyz"]
    dims = [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
    return {name: h_mbits(marginal(d)) for name, d in zip(names, dims)}


def dense_t3(triples, categories=None) -> float:
    h = dense_terms(triples, categories)
    return h["x"] + h["y"] + h["z"] - h["xy"] - h["xz"] - h["yz"] + h["xyz"]


def dense_t2(pairs) -> float:
    xs = sorted({p[0] for p in pairs})
    ys = sorted({p[1] for p in pairs})
    cells = Counter(pairs)
    hx = h_mbits([sum(cells.get((x, y), 0) for y in ys) for x in xs])
    hy = h_mbits([sum(cells.get((x, y), 0) for x in xs) for y in ys])
    hxy = h_mbits([cells.get((x, y), 0) for x in xs for y in ys])
    return hx + hy - hxy


def oracle_table(rows, levels):
    """Reference multilevel table.

    ``rows`` are dicts with keys ``geo``, ``size``, ``tech`` and one key per
    level (finest first, the last being the nation).  Returns the total, the
    per-level group values and the level rows.
    """
    n = len(rows)
    categories = [sorted({r[k] for r in rows}) for k in ("geo", "size", "tech")]
    total = dense_t3([(r["geo"], r["size"], r["tech"]) for r in rows], categories)
    groups = {}
    sums = {}
    for level in levels:
        members = {}
        for r in rows:
            members.setdefault(r[level], []).append((r["geo"], r["size"], r["tech"]))
        per = {}
        for gid, triples in sorted(members.items()):
            t_g = dense_t3(triples, categories)
            per[gid] = {"n": len(triples), "t_group": t_g, "delta_t": len(triples) / n * t_g}
        groups[level] = per
        sums[level] = sum(v["delta_t"] for v in per.values())
    # T0 inside each coarser group: its own T minus its children's weighted T
    for finer, coarser in zip(levels, levels[1:]):
        for gid, g in groups[coarser].items():
            inside = 0.0
            for kid_id, kid in groups[finer].items():
                parent = next(r[coarser] for r in rows if r[finer] == kid_id)
                if parent == gid:
                    inside += kid["n"] / g["n"] * kid["t_group"]
            g["between"] = g["t_group"] - inside
    increments = []
    previous = 0.0
    for level in levels[:-1]:
        increments.append(sums[level] - previous)
        previous = sums[level]
    increments.append(total - previous)
    return {"t_total": total, "groups": groups, "in_group_sums": sums, "increments": increments}
