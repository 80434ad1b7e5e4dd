"""Pixton's relations as strata vectors, and the full relation set.

``pixton_relation`` expands the sum over stable graphs term by term: on each
graph the kappa-hat factor, one C-hat factor per leg and one edge factor per
edge are multiplied out up to T-degree r - |E|, and the coefficient of the
zeta word prod_v zeta_v^(g(v)+1) is read off.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, Tuple

from .graphs import automorphism_count, canonical_key, check_stable_pair, enumerate_stable_graphs
from .series import (
    ZetaPoly, brace, brace_exp_argument, chat, edge_factor, kappa_hat_poly,
)
from .strata import (
    StrataVector, canonicalize, graph_decorations, multiply_kappa, multiply_psi, pushforward,
    _partitions,
)


@dataclass(frozen=True)
class PixtonInput:
    g: int
    n: int
    r: int
    sigma: Tuple[int, ...] = ()
    a: Tuple[int, ...] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(sorted(self.sigma, reverse=True)))
        a = (0,) * self.n if self.a is None else tuple(self.a)
        object.__setattr__(self, "a", a)

    def validate(self):
        check_stable_pair(self.g, self.n)
        if len(self.a) != self.n:
            raise ValueError("need exactly n = %d insertions, got %d" % (self.n, len(self.a)))
        for x in self.sigma:
            if x <= 0 or x % 3 == 2:
                raise ValueError("sigma parts must be positive and not 2 mod 3")
        for x in self.a:
            if x < 0 or x % 3 == 2:
                raise ValueError("insertions must be non-negative and not 2 mod 3")
        if not 0 <= self.r <= 3 * self.g - 3 + self.n:
            raise ValueError("codimension out of range")
        bound = 3 * self.r - self.g - 1
        total = sum(self.sigma) + sum(self.a)
        if total > bound:
            raise ValueError("|sigma| + sum(a) = %d exceeds 3r - g - 1 = %d" % (total, bound))
        if (bound - total) % 2:
            raise ValueError("|sigma| + sum(a) has the wrong parity")
        return self


def is_valid_input(g, n, r, sigma, a):
    try:
        PixtonInput(g, n, r, tuple(sigma), tuple(a)).validate()
    except ValueError:
        return False
    return True


def valid_inputs(g, n, r) -> List[PixtonInput]:
    """All (sigma, a) allowed at codimension r, in a fixed order."""
    bound = 3 * r - g - 1
    if bound < 0:
        return []
    parts = [x for x in range(1, bound + 1) if x % 3 != 2]
    allowed = [x for x in range(bound + 1) if x % 3 != 2]
    out = []
    for a in itertools.product(allowed, repeat=n):
        rest = bound - sum(a)
        if rest < 0:
            continue
        for s in range(rest, -1, -2):
            for sigma in _restricted_partitions(s, parts):
                out.append(PixtonInput(g, n, r, sigma, a))
    return out


def _restricted_partitions(n, parts, maxpart=None):
    if maxpart is None:
        maxpart = n
    if n == 0:
        yield ()
        return
    for p in sorted(parts, reverse=True):
        if p <= min(n, maxpart):
            for rest in _restricted_partitions(n - p, parts, p):
                yield (p,) + rest


@lru_cache(maxsize=None)
def _brace_product(sigma, order):
    """e^{1 - C-hat_0} times the brace of each C-hat_sigma_j, in brace symbols."""
    prod = brace_exp_argument(order).exp()
    for s in sigma:
        prod = prod * brace(chat(s, None, 0, order))
    return prod


@lru_cache(maxsize=4096)
def _kappa_part(sigma, order, graph, variant):
    return kappa_hat_poly(_brace_product(sigma, order), graph, variant)


def _graph_term(graph, inp: PixtonInput, variant):
    """Contribution of one stable graph, as a dict key -> coefficient."""
    D = inp.r - graph.n_edges
    target = 0
    for v, gv in enumerate(graph.genera):
        if (gv + 1) % 2:
            target |= 1 << v
    psi = ZetaPoly.const(1, D)
    for i, v in enumerate(graph.legs):
        psi = psi * chat(inp.a[i], ("L", i), v, D)
    for e, (u, v) in enumerate(graph.edges):
        psi = psi * edge_factor(("H", e, 0), ("H", e, 1), u, v, D)
        if psi.is_zero():
            return {}
    kap = _kappa_part(inp.sigma, D, graph, variant)
    # group both sides by T-degree and zeta word
    by_t = {}
    for (t, m, z), c in psi.terms.items():
        by_t.setdefault(t, []).append((m, z, c))
    nv = graph.n_vertices
    weight = Fraction(1, 2 ** graph.h1() * automorphism_count(graph))
    out = {}
    for (tk, mk, zk), ck in kap.terms.items():
        for (mp, zp, cp) in by_t.get(D - tk, ()):
            if zk ^ zp != target:
                continue
            kappas = [[] for _ in range(nv)]
            for (_, v, e), ex in mk:
                kappas[v].extend([e] * ex)
            legs = [(v, 0) for v in graph.legs]
            edges = [[a, b, 0, 0] for (a, b) in graph.edges]
            for sym, ex in mp:
                if sym[0] == "L":
                    legs[sym[1]] = (legs[sym[1]][0], ex)
                else:
                    edges[sym[1]][2 + sym[2]] = ex
            key = canonicalize(graph.genera, kappas, legs, [tuple(x) for x in edges])
            if key is None:
                continue
            out[key] = out.get(key, 0) + ck * cp * weight
    return out


_REL_CACHE = {}


def pixton_relation(inp: PixtonInput, variant="printed") -> StrataVector:
    """The relation R(g, n, r; sigma, a) in the strata basis."""
    inp.validate()
    ck = (inp, variant)
    if ck in _REL_CACHE:
        return _REL_CACHE[ck].copy()
    vec = StrataVector(inp.g, inp.n)
    for graph in enumerate_stable_graphs(inp.g, inp.n):
        if graph.n_edges > inp.r:
            continue
        for k, c in _graph_term(graph, inp, variant).items():
            vec.add_term(k, c)
    _REL_CACHE[ck] = vec
    return vec.copy()


def relations_on(g, n, d, variant="printed", derived=True, max_degree=None):
    """All relations of degree <= max_degree on (g, n) built from Pixton's.

    With ``derived`` each relation of degree d is also multiplied by every
    monomial in psi_1..psi_n and kappa classes of degree max_degree - d.
    Only the relations of total degree exactly ``max_degree`` are returned
    (``max_degree`` defaults to d).
    """
    top = d if max_degree is None else max_degree
    out = []
    for dd in range(0, top + 1):
        if dd != top and not derived:
            continue
        base = [pixton_relation(inp, variant) for inp in valid_inputs(g, n, dd)]
        base = [b for b in base if not b.is_zero()]
        if not base:
            continue
        extra = top - dd
        for mon in _interior_monomials(n, extra):
            for b in base:
                vec = b
                for kind, x in mon:
                    vec = multiply_psi(vec, x) if kind == "psi" else multiply_kappa(vec, x)
                if not vec.is_zero():
                    out.append(vec)
    return out


def _interior_monomials(n, deg):
    """Monomials in psi_1..psi_n and kappa_a of degree deg, as factor lists."""
    out = []
    for kd in range(deg + 1):
        for part in _partitions(kd):
            for ps in _compositions(deg - kd, n):
                mon = [("kappa", x) for x in part]
                for i, p in enumerate(ps):
                    mon.extend([("psi", i + 1)] * p)
                out.append(mon)
    return out


def _compositions(total, nparts):
    if nparts == 0:
        if total == 0:
            yield ()
        return
    for x in range(total + 1):
        for rest in _compositions(total - x, nparts - 1):
            yield (x,) + rest


def _vertex_orbit_reps(graph):
    """One vertex from each orbit of Aut(graph) acting on vertices."""
    seen = set()
    reps = []
    for v in range(graph.n_vertices):
        key = _individualised_key(graph, v)
        if key not in seen:
            seen.add(key)
            reps.append(v)
    return reps


def _individualised_key(graph, v):
    # v is marked by a kappa tag that never occurs in real decorations
    nv = graph.n_vertices
    kap = [()] * nv
    kap[v] = (0,)
    return canonical_key(graph.genera, kap, [(x, 0) for x in graph.legs],
                         [(a, b, 0, 0) for (a, b) in graph.edges])


def iter_relation_rows(g, n, r, variant="printed", derived=True) -> Iterator[StrataVector]:
    """Rows of the relation matrix in a deterministic order.

    For every stable graph with |E| <= r and every vertex (up to symmetry)
    the relations of the vertex's moduli space are pushed forward, tensored
    with every decoration of the complementary degree on the other vertices
    and their half-edges.
    """
    check_stable_pair(g, n)
    if not 0 <= r <= 3 * g - 3 + n:
        raise ValueError("codimension out of range")
    seen = set()
    for graph in enumerate_stable_graphs(g, n):
        if graph.n_edges > r:
            continue
        budget = r - graph.n_edges
        dims = graph.dims()
        for slot in _vertex_orbit_reps(graph):
            gv = graph.genera[slot]
            nv_ = len(graph.half_edges_at(slot))
            slot_hes = set(graph.half_edges_at(slot))
            for d in range(min(budget, dims[slot]) + 1):
                inner = relations_on(gv, nv_, d, variant, derived)
                if not inner:
                    continue
                rest = budget - d
                for deco in _outer_decorations(graph, slot, slot_hes, rest):
                    for vec in inner:
                        row = pushforward(vec, graph, slot, deco, g=g)
                        if row.is_zero():
                            continue
                        sig = _row_signature(row)
                        if sig in seen:
                            continue
                        seen.add(sig)
                        yield row


def _row_signature(row):
    items = sorted(row.coeffs.items())
    lead = items[0][1]
    return tuple((k, c / lead) for k, c in items)


def _outer_decorations(graph, slot, slot_hes, deg):
    """Decorations of degree deg avoiding the slot vertex and its half-edges."""
    for kappas, legs, edges in graph_decorations(graph, deg):
        if kappas[slot]:
            continue
        bad = False
        for i, (v, p) in enumerate(legs):
            if p and ("leg", i) in slot_hes:
                bad = True
                break
        if bad:
            continue
        for e, (a, b, pa, pb) in enumerate(edges):
            if (pa and ("edge", e, 0) in slot_hes) or (pb and ("edge", e, 1) in slot_hes):
                bad = True
                break
        if bad:
            continue
        yield (list(kappas), [p for _, p in legs], [(pa, pb) for (_, _, pa, pb) in edges])


def relation_set(g, n, r, variant="printed", derived=True) -> List[StrataVector]:
    return list(iter_relation_rows(g, n, r, variant, derived))


def write_row_stream(rows, path, start=0):
    """Write rows as JSON lines ``[index, [[code, "p/q"], ...]]``."""
    with open(path, "a" if start else "w") as fh:
        for i, row in enumerate(rows):
            if i < start:
                continue
            fh.write(json.dumps([i, row.to_json()]) + "\n")
