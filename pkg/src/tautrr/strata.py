"""Decorated strata, the strata basis, and pushforward along gluing maps.

A decorated stratum is kept as its canonical key::

    (n_edges, genera, kappas, legs, edges)

where ``kappas[v]`` is a sorted tuple of kappa indices, ``legs[i]`` is
``(vertex, psi)`` for marking i+1 and each edge is ``(u, v, psi_u, psi_v)``.
A basis element [G, gamma] stands for the pushforward of the monomial
gamma along the gluing map of G, with no automorphism factor; so the
undecorated graph stands for its boundary stratum with coefficient 1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List

from .graphs import (
    StableGraph, canonical_key, check_stable_pair, encode_key, enumerate_stable_graphs,
    graph_from_key,
)

Key = tuple


# ---------------------------------------------------------------------------
# keys

def key_dims(key):
    """3g(v) - 3 + n(v) per vertex of a key."""
    _, genera, _, legs, edges = key
    val = [0] * len(genera)
    for v, _ in legs:
        val[v] += 1
    for (a, b, _, _) in edges:
        val[a] += 1
        val[b] += 1
    return [3 * g - 3 + n for g, n in zip(genera, val)]


def key_vertex_degrees(key):
    _, genera, kappas, legs, edges = key
    deg = [sum(k) for k in kappas]
    for v, p in legs:
        deg[v] += p
    for (a, b, pa, pb) in edges:
        deg[a] += pa
        deg[b] += pb
    return deg


def key_degree(key):
    return key[0] + sum(key_vertex_degrees(key))


def key_is_valid(key):
    return all(d <= m for d, m in zip(key_vertex_degrees(key), key_dims(key)))


def key_has_kappa(key):
    return any(key[2])


def canonicalize(genera, kappas, legs, edges):
    """Canonical key, or None when a vertex exceeds its dimension."""
    kappas = tuple(tuple(sorted(k)) for k in kappas)
    key = canonical_key(genera, kappas, legs, edges)
    if not key_is_valid(key):
        return None
    return key


def key_code(key) -> str:
    return encode_key(key).hex()


def key_sort(key):
    return (key_has_kappa(key) is False, encode_key(key))


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecoratedStratum:
    key: tuple

    @property
    def graph(self) -> StableGraph:
        return graph_from_key(self.key)

    @property
    def kappa(self):
        return self.key[2]

    @property
    def psi_legs(self):
        return tuple(p for _, p in self.key[3])

    @property
    def psi_edges(self):
        return tuple((pa, pb) for (_, _, pa, pb) in self.key[4])

    @property
    def degree(self):
        return key_degree(self.key)

    def has_kappa(self):
        return key_has_kappa(self.key)

    def code(self):
        return key_code(self.key)

    def to_json(self):
        out = self.graph.to_json()
        out["kappa"] = [list(k) for k in self.kappa]
        out["psi_half_edges"] = {"%d:%d" % (e, s): p
                                 for e, pp in enumerate(self.psi_edges)
                                 for s, p in enumerate(pp) if p}
        out["psi_legs"] = {str(i + 1): p for i, p in enumerate(self.psi_legs) if p}
        return out

    @classmethod
    def from_json(cls, obj):
        gr = StableGraph.from_json(obj)
        nv = gr.n_vertices
        kappas = [tuple(k) for k in obj.get("kappa", [[]] * nv)]
        if len(kappas) != nv or any(x <= 0 for k in kappas for x in k):
            raise ValueError("bad kappa decoration")
        pl = obj.get("psi_legs", {})
        legs = [(v, int(pl.get(str(i + 1), 0))) for i, v in enumerate(gr.legs)]
        ph = obj.get("psi_half_edges", {})
        edges = []
        for e, (a, b) in enumerate(gr.edges):
            edges.append((a, b, int(ph.get("%d:0" % e, 0)), int(ph.get("%d:1" % e, 0))))
        key = canonicalize(gr.genera, kappas, legs, edges)
        if key is None:
            raise ValueError("decoration exceeds a vertex dimension")
        return cls(key)

    @classmethod
    def from_parts(cls, genera, kappas=None, legs=(), edges=()):
        """Build from raw parts; legs are (vertex, psi), edges (u, v, pu, pv)."""
        if kappas is None:
            kappas = [()] * len(genera)
        key = canonicalize(genera, kappas, legs, edges)
        if key is None:
            raise ValueError("decoration exceeds a vertex dimension")
        return cls(key)

    def __repr__(self):
        return "DecoratedStratum(%r)" % (self.key,)


def psi_power(g, n, powers):
    """Stratum key of the smooth graph with psi_i^powers[i]."""
    return canonicalize((g,), [()], [(0, p) for p in powers], [])


# ---------------------------------------------------------------------------
# strata vectors

class StrataVector:
    """Sparse rational combination of decorated strata keys."""

    __slots__ = ("g", "n", "coeffs")

    def __init__(self, g, n, coeffs=None):
        self.g = g
        self.n = n
        self.coeffs: Dict[tuple, Fraction] = {}
        if coeffs:
            for k, c in coeffs.items():
                self.add_term(k, c)

    def add_term(self, key, c):
        if key is None or not c:
            return
        v = self.coeffs.get(key, 0) + Fraction(c)
        if v:
            self.coeffs[key] = v
        else:
            self.coeffs.pop(key, None)

    def copy(self):
        out = StrataVector(self.g, self.n)
        out.coeffs = dict(self.coeffs)
        return out

    def __add__(self, other):
        self._check(other)
        out = self.copy()
        for k, c in other.coeffs.items():
            out.add_term(k, c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        out = StrataVector(self.g, self.n)
        if c:
            out.coeffs = {k: v * c for k, v in self.coeffs.items()}
        return out

    def _check(self, other):
        if (self.g, self.n) != (other.g, other.n):
            raise ValueError("strata vectors live on different moduli spaces")

    def __eq__(self, other):
        return isinstance(other, StrataVector) and (self.g, self.n) == (other.g, other.n) \
            and self.coeffs == other.coeffs

    def __len__(self):
        return len(self.coeffs)

    def is_zero(self):
        return not self.coeffs

    def degree(self):
        degs = {key_degree(k) for k in self.coeffs}
        if len(degs) > 1:
            raise ValueError("inhomogeneous vector")
        return degs.pop() if degs else None

    def items(self):
        return sorted(self.coeffs.items(), key=lambda kv: key_sort(kv[0]))

    def to_json(self):
        return [[key_code(k), _frac_str(c)] for k, c in self.items()]

    @classmethod
    def from_json(cls, g, n, rows, decode):
        out = cls(g, n)
        for code, c in rows:
            out.add_term(decode(code), Fraction(c))
        return out

    def __repr__(self):
        return "StrataVector(%d, %d, %d terms)" % (self.g, self.n, len(self.coeffs))


def _frac_str(c):
    c = Fraction(c)
    return "%d/%d" % (c.numerator, c.denominator)


# ---------------------------------------------------------------------------
# basis

def _partitions(n, maxpart=None):
    if maxpart is None:
        maxpart = n
    if n == 0:
        yield ()
        return
    for p in range(min(n, maxpart), 0, -1):
        for rest in _partitions(n - p, p):
            yield (p,) + rest


def _compositions(total, nparts, bounds=None):
    if nparts == 0:
        if total == 0:
            yield ()
        return
    hi = total if bounds is None else min(total, bounds[0])
    for x in range(hi + 1):
        for rest in _compositions(total - x, nparts - 1, None if bounds is None else bounds[1:]):
            yield (x,) + rest


def graph_decorations(graph: StableGraph, d: int, kappa=True):
    """All decorations of total degree d on ``graph`` respecting dimensions.

    Yields raw (kappas, legs, edges) data in the graph's own labelling.
    """
    dims = graph.dims()
    nv = graph.n_vertices
    hes = [graph.half_edges_at(v) for v in range(nv)]

    def vertex_options(v, k):
        out = []
        kmax = k if kappa else 0
        for kd in range(kmax + 1):
            for part in _partitions(kd):
                for ps in _compositions(k - kd, len(hes[v])):
                    out.append((tuple(sorted(part)), ps))
        return out

    for split in _compositions(d, nv, [max(m, 0) for m in dims]):
        per = [vertex_options(v, split[v]) for v in range(nv)]
        for choice in itertools.product(*per):
            kappas = []
            legs = [[v, 0] for v in graph.legs]
            edges = [[a, b, 0, 0] for (a, b) in graph.edges]
            for v, (kap, ps) in enumerate(choice):
                kappas.append(kap)
                for h, p in zip(hes[v], ps):
                    if h[0] == "leg":
                        legs[h[1]][1] = p
                    else:
                        edges[h[1]][2 + h[2]] = p
            yield tuple(kappas), [tuple(x) for x in legs], [tuple(x) for x in edges]


@lru_cache(maxsize=None)
def _basis_keys(g, n, r, kappa=True):
    check_stable_pair(g, n)
    if not 0 <= r <= 3 * g - 3 + n:
        raise ValueError("codimension %r out of range for (%d, %d)" % (r, g, n))
    found = set()
    for gr in enumerate_stable_graphs(g, n):
        if gr.n_edges > r:
            continue
        for kappas, legs, edges in graph_decorations(gr, r - gr.n_edges, kappa):
            key = canonicalize(gr.genera, kappas, legs, edges)
            if key is not None:
                found.add(key)
    return tuple(sorted(found, key=key_sort))


def basis(g: int, n: int, r: int, kappa=True) -> List[DecoratedStratum]:
    """Ordered basis of the degree-r strata space: kappa block first."""
    return [DecoratedStratum(k) for k in _basis_keys(g, n, r, kappa)]


def basis_keys(g, n, r, kappa=True):
    return list(_basis_keys(g, n, r, kappa))


def basis_index(g, n, r):
    return {k: i for i, k in enumerate(_basis_keys(g, n, r))}


def decode_code(code: str):
    """Inverse of key_code."""
    data = bytes.fromhex(code)
    pos = 0

    def varint():
        nonlocal pos
        x, shift = 0, 0
        while True:
            b = data[pos]
            pos += 1
            x |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                return x

    def dec():
        nonlocal pos
        tag = data[pos]
        pos += 1
        if tag == 0:
            return varint()
        ln = varint()
        return tuple(dec() for _ in range(ln))

    key = dec()
    if pos != len(data):
        raise ValueError("trailing bytes in code")
    return key


# ---------------------------------------------------------------------------
# pushforward and multiplication

def _insert(inner_key, outer_genera, outer_kappas, outer_legs, outer_edges, slot, bij):
    """Substitute the decorated graph ``inner_key`` for vertex ``slot``.

    ``bij[i]`` is the outer half-edge matched with inner leg i, given as
    ('leg', m) or ('edge', e, side).  Returns raw parts of the result.
    """
    _, ig, ik, il, ie = inner_key
    nv = len(outer_genera)
    remap = {}
    pos = 0
    for v in range(nv):
        if v != slot:
            remap[v] = pos
            pos += 1
    off = pos
    genera = [outer_genera[v] for v in range(nv) if v != slot] + list(ig)
    kappas = [outer_kappas[v] for v in range(nv) if v != slot] + list(ik)
    legs = [(remap.get(v, -1), p) for (v, p) in outer_legs]
    edges = [[remap.get(a, -1), remap.get(b, -1), pa, pb] for (a, b, pa, pb) in outer_edges]
    for i, h in enumerate(bij):
        iv, ip = il[i]
        if h[0] == "leg":
            m = h[1]
            legs[m] = (off + iv, legs[m][1] + ip)
        else:
            e, s = h[1], h[2]
            edges[e][s] = off + iv
            edges[e][2 + s] += ip
    for (a, b, pa, pb) in ie:
        edges.append([off + a, off + b, pa, pb])
    return genera, kappas, legs, [tuple(e) for e in edges]


def pushforward(inner: StrataVector, outer: StableGraph, slot: int, outer_deco=None,
                bijection=None, g=None) -> StrataVector:
    """Push a class on the slot vertex's moduli space into (g, n).

    ``outer_deco`` is (kappas, psi_legs, psi_edges) on the outer graph with
    the slot's own kappa empty; ``bijection`` lists the outer half-edges at
    the slot matched with inner legs 1..n' (default: half_edges_at order).
    """
    gv = outer.genera[slot]
    hes = outer.half_edges_at(slot)
    if inner.g != gv or inner.n != len(hes):
        raise ValueError("slot has type (%d, %d) but inner class lives on (%d, %d)"
                         % (gv, len(hes), inner.g, inner.n))
    bij = list(hes) if bijection is None else list(bijection)
    if sorted(bij) != sorted(hes):
        raise ValueError("bijection does not match the slot's half-edges")
    nv = outer.n_vertices
    if outer_deco is None:
        kappas = [()] * nv
        psil = [0] * outer.n_legs
        psie = [(0, 0)] * outer.n_edges
    else:
        kappas, psil, psie = outer_deco
    if kappas[slot]:
        raise ValueError("slot vertex must not carry kappa classes")
    legs = [(v, p) for v, p in zip(outer.legs, psil)]
    edges = [(a, b, pa, pb) for (a, b), (pa, pb) in zip(outer.edges, psie)]
    out = StrataVector(outer.genus() if g is None else g, outer.n_legs)
    for k, c in inner.coeffs.items():
        parts = _insert(k, outer.genera, kappas, legs, edges, slot, bij)
        out.add_term(canonicalize(*parts), c)
    return out


def multiply_psi(vec: StrataVector, leg: int) -> StrataVector:
    """Multiply by psi at marking ``leg`` (1-based)."""
    out = StrataVector(vec.g, vec.n)
    for k, c in vec.coeffs.items():
        ne, genera, kappas, legs, edges = k
        legs = list(legs)
        v, p = legs[leg - 1]
        legs[leg - 1] = (v, p + 1)
        out.add_term(canonicalize(genera, kappas, legs, edges), c)
    return out


def multiply_kappa(vec: StrataVector, a: int) -> StrataVector:
    """Multiply by kappa_a, which pulls back to the sum over vertices."""
    out = StrataVector(vec.g, vec.n)
    for k, c in vec.coeffs.items():
        ne, genera, kappas, legs, edges = k
        for v in range(len(genera)):
            kk = list(kappas)
            kk[v] = tuple(sorted(kk[v] + (a,)))
            out.add_term(canonicalize(genera, kk, legs, edges), c)
    return out


def fundamental_class(g, n):
    return StrataVector(g, n, {canonicalize((g,), [()], [(0, 0)] * n, []): 1})
