"""Stable graphs: enumeration, canonical forms and automorphism counts.

A stable graph is stored as three tuples::

    genera  -- genus of each vertex
    legs    -- legs[i] is the vertex carrying marking i+1
    edges   -- pairs (u, v) with u <= v; u == v is a loop

Each edge has two half-edges, side 0 at ``u`` and side 1 at ``v``.

Canonical forms are computed by colour refinement of the vertices followed
by a search over the orderings that remain tied.  The same routine handles
graphs with kappa and psi decorations (see ``canonical_key``), which is what
the strata module uses for its basis.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from math import factorial
from typing import Dict, List, Optional, Tuple


class UnstableError(ValueError):
    """Raised for (g, n) pairs with 2g - 2 + n <= 0."""


def check_stable_pair(g, n):
    if g < 0 or n < 0 or 2 * g - 2 + n <= 0:
        raise UnstableError("(g, n) = (%d, %d) is not stable" % (g, n))


# ---------------------------------------------------------------------------
# canonical keys of (decorated) graphs

def _refine(genera, kappas, legs, edges):
    """Stable partition of the vertices by iterated colour refinement.

    ``legs`` is a sequence of (vertex, psi) and ``edges`` of (u, v, pu, pv).
    Returns one integer colour per vertex; colours are isomorphism invariant.
    """
    nv = len(genera)
    at_v = [[] for _ in range(nv)]
    loops = [[] for _ in range(nv)]
    nbrs = [[] for _ in range(nv)]
    for i, (v, p) in enumerate(legs):
        at_v[v].append((i, p))
    for (u, v, pu, pv) in edges:
        if u == v:
            loops[u].append((min(pu, pv), max(pu, pv)))
        else:
            nbrs[u].append((v, pu, pv))
            nbrs[v].append((u, pv, pu))
    init = [(genera[v], kappas[v], tuple(sorted(at_v[v])), tuple(sorted(loops[v])), len(nbrs[v]))
            for v in range(nv)]
    ranks = {c: i for i, c in enumerate(sorted(set(init)))}
    col = [ranks[c] for c in init]
    ncls = len(ranks)
    while ncls < nv:
        sig = [(col[v], tuple(sorted((col[w], a, b) for (w, a, b) in nbrs[v]))) for v in range(nv)]
        ranks = {c: i for i, c in enumerate(sorted(set(sig)))}
        new = [ranks[s] for s in sig]
        if len(ranks) == ncls:
            break
        col, ncls = new, len(ranks)
    return col


def _relabel(perm, genera, kappas, legs, edges):
    """Key of the graph after sending old vertex v to position perm[v]."""
    nv = len(genera)
    g2 = [0] * nv
    k2 = [()] * nv
    for v in range(nv):
        g2[perm[v]] = genera[v]
        k2[perm[v]] = kappas[v]
    l2 = tuple((perm[v], p) for (v, p) in legs)
    e2 = []
    for (u, v, pu, pv) in edges:
        a, b = perm[u], perm[v]
        if a > b or (a == b and pu > pv):
            a, b, pu, pv = b, a, pv, pu
        e2.append((a, b, pu, pv))
    e2.sort()
    return (len(edges), tuple(g2), tuple(k2), l2, tuple(e2))


def _candidate_orders(col):
    """All vertex orders compatible with the sorted colour classes."""
    classes = {}
    for v, c in enumerate(col):
        classes.setdefault(c, []).append(v)
    blocks = [classes[c] for c in sorted(classes)]
    for choice in itertools.product(*[itertools.permutations(b) for b in blocks]):
        perm = [0] * len(col)
        pos = 0
        for block in choice:
            for v in block:
                perm[v] = pos
                pos += 1
        yield perm


def canonical_key(genera, kappas, legs, edges, with_count=False):
    """Canonical key of a decorated graph.

    Arguments are sequences; ``kappas`` holds one sorted tuple per vertex,
    ``legs`` holds (vertex, psi) per marking and ``edges`` holds
    (u, v, pu, pv).  The key is the lexicographically smallest relabelled
    form ``(n_edges, genera, kappas, legs, edges)``.  With ``with_count``
    also return the number of vertex orders that realise the minimum, which
    is the order of the image of Aut in the vertex permutations.
    """
    kappas = tuple(tuple(k) for k in kappas)
    col = _refine(genera, kappas, legs, edges)
    best = None
    count = 0
    for perm in _candidate_orders(col):
        key = _relabel(perm, genera, kappas, legs, edges)
        if best is None or key < best:
            best, count = key, 1
        elif key == best:
            count += 1
    if with_count:
        return best, count
    return best


def encode_key(key):
    """Injective byte encoding of a nested tuple of small non-negative ints."""
    out = bytearray()

    def enc(x):
        if isinstance(x, tuple):
            out.append(1)
            _varint(len(x), out)
            for y in x:
                enc(y)
        else:
            out.append(0)
            _varint(x, out)

    enc(key)
    return bytes(out)


def _varint(x, out):
    if x < 0:
        raise ValueError("negative value in key")
    while True:
        b = x & 0x7F
        x >>= 7
        if x:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StableGraph:
    genera: Tuple[int, ...]
    legs: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "genera", tuple(self.genera))
        object.__setattr__(self, "legs", tuple(self.legs))
        object.__setattr__(self, "edges", tuple(tuple(sorted(e)) for e in self.edges))

    # basic numbers
    @property
    def n_vertices(self):
        return len(self.genera)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_legs(self):
        return len(self.legs)

    def h1(self):
        return self.n_edges - self.n_vertices + 1

    def genus(self):
        return sum(self.genera) + self.h1()

    def valence(self, v):
        val = sum(1 for x in self.legs if x == v)
        for (a, b) in self.edges:
            val += (a == v) + (b == v)
        return val

    def valences(self):
        val = [0] * self.n_vertices
        for x in self.legs:
            val[x] += 1
        for (a, b) in self.edges:
            val[a] += 1
            val[b] += 1
        return val

    def dims(self):
        """3g(v) - 3 + n(v) for every vertex."""
        return [3 * g - 3 + n for g, n in zip(self.genera, self.valences())]

    def is_connected(self):
        nv = self.n_vertices
        if nv == 0:
            return False
        seen = {0}
        stack = [0]
        adj = [[] for _ in range(nv)]
        for (a, b) in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == nv

    def is_stable(self):
        return all(2 * g - 2 + n > 0 for g, n in zip(self.genera, self.valences()))

    def validate(self):
        if not self.is_connected():
            raise ValueError("graph is not connected")
        if not self.is_stable():
            raise ValueError("graph has an unstable vertex")
        if self.h1() < 0:
            raise ValueError("negative first Betti number")

    def half_edges_at(self, v):
        """Half-edges at v as ('leg', i) or ('edge', e, side), in a fixed order."""
        out = [("leg", i) for i, x in enumerate(self.legs) if x == v]
        for e, (a, b) in enumerate(self.edges):
            if a == v:
                out.append(("edge", e, 0))
            if b == v:
                out.append(("edge", e, 1))
        return out

    # canonical data
    def key(self):
        nv = self.n_vertices
        return canonical_key(self.genera, [()] * nv, [(v, 0) for v in self.legs],
                             [(a, b, 0, 0) for (a, b) in self.edges])

    def code(self):
        return encode_key(self.key())

    def canonical(self):
        return graph_from_key(self.key())

    # serialisation
    def to_json(self):
        return {
            "vertices": [{"genus": g} for g in self.genera],
            "legs": {str(i + 1): v for i, v in enumerate(self.legs)},
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_json(cls, obj):
        genera = [int(v["genus"]) for v in obj["vertices"]]
        legs_map = obj.get("legs", {})
        n = len(legs_map)
        legs = []
        for i in range(1, n + 1):
            if str(i) not in legs_map:
                raise ValueError("legs must be labelled 1..n")
            legs.append(int(legs_map[str(i)]))
        edges = [tuple(int(x) for x in e) for e in obj.get("edges", [])]
        for v in legs + [x for e in edges for x in e]:
            if not 0 <= v < len(genera):
                raise ValueError("vertex index out of range")
        gr = cls(tuple(genera), tuple(legs), tuple(edges))
        gr.validate()
        return gr


def graph_from_key(key):
    _, genera, _, legs, edges = key
    return StableGraph(genera, tuple(v for v, _ in legs), tuple((a, b) for (a, b, _, _) in edges))


def smooth_graph(g, n):
    return StableGraph((g,), (0,) * n, ())


def canonical_code(graph: StableGraph) -> bytes:
    return graph.code()


def code_hex(graph: StableGraph) -> str:
    return graph.code().hex()


def automorphism_count(graph: StableGraph) -> int:
    """Order of Aut(graph), counting edge permutations and loop flips."""
    nv = graph.n_vertices
    _, vcount = canonical_key(graph.genera, [()] * nv, [(v, 0) for v in graph.legs],
                              [(a, b, 0, 0) for (a, b) in graph.edges], with_count=True)
    total = vcount
    for (a, b), m in Counter(graph.edges).items():
        total *= factorial(m)
        if a == b:
            total *= 2 ** m
    return total


# ---------------------------------------------------------------------------
# degenerations and enumeration

def one_step_degenerations(graph: StableGraph) -> List[StableGraph]:
    """Stable graphs with one more edge that contract back to ``graph``."""
    found = {}
    nv = graph.n_vertices
    for v in range(nv):
        # loop insertion
        if graph.genera[v] >= 1:
            genera = list(graph.genera)
            genera[v] -= 1
            cand = StableGraph(tuple(genera), graph.legs, graph.edges + ((v, v),))
            found.setdefault(cand.code(), cand)
        # splitting v into v and a new vertex w
        hes = graph.half_edges_at(v)
        w = nv
        for g1 in range(graph.genera[v] + 1):
            g2 = graph.genera[v] - g1
            for mask in range(1 << len(hes)):
                n2 = bin(mask).count("1")
                n1 = len(hes) - n2
                if 2 * g1 - 2 + n1 + 1 <= 0 or 2 * g2 - 2 + n2 + 1 <= 0:
                    continue
                legs = list(graph.legs)
                edges = [list(e) for e in graph.edges]
                for j, h in enumerate(hes):
                    if not mask >> j & 1:
                        continue
                    if h[0] == "leg":
                        legs[h[1]] = w
                    else:
                        edges[h[1]][h[2]] = w
                genera = list(graph.genera) + [g2]
                genera[v] = g1
                cand = StableGraph(tuple(genera), tuple(legs),
                                   tuple(tuple(e) for e in edges) + ((v, w),))
                found.setdefault(cand.code(), cand)
    return [found[c] for c in sorted(found)]


_ENUM_CACHE: Dict[Tuple[int, int], List[StableGraph]] = {}


def enumerate_stable_graphs(g: int, n: int) -> List[StableGraph]:
    """All stable graphs of genus g with n legs, sorted by canonical code."""
    check_stable_pair(g, n)
    if (g, n) in _ENUM_CACHE:
        return list(_ENUM_CACHE[(g, n)])
    seed = smooth_graph(g, n)
    found = {seed.code(): seed}
    layer = [seed]
    while layer:
        nxt = {}
        for gr in layer:
            for d in one_step_degenerations(gr):
                c = d.code()
                if c not in found and c not in nxt:
                    nxt[c] = d
        found.update(nxt)
        layer = list(nxt.values())
    out = [found[c].canonical() for c in sorted(found)]
    _ENUM_CACHE[(g, n)] = out
    return list(out)


def graphs_by_edges(g, n, max_edges: Optional[int] = None):
    out = {}
    for gr in enumerate_stable_graphs(g, n):
        if max_edges is None or gr.n_edges <= max_edges:
            out.setdefault(gr.n_edges, []).append(gr)
    return out
