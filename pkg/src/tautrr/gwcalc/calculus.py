"""Derivatives, topological recursion rules and normal forms.

Every expression is kept fully flattened (see ``expr``), so a term is a
decorated stable graph whose vertices are correlators.  The calculus then
works on graphs:

* differentiating in the direction V adds V to each correlator, and every
  T^k on a slot produces the correction -sum_j T^j(T^(k-1-j)(X) o V);
* a genus-g rule with threshold p rewrites <<T^p(Z) Y1 .. Ym>>_g; the
  versions with m > 0 extra slots are obtained from the stored base rule by
  differentiation;
* ``reduce`` first applies rules until no vertex of genus <= 3 carries a
  T-power at or above its threshold, then takes the remainder modulo the
  WDVV relations among the genus-0 vertices.  WDVV is itself the difference
  of two ways of applying the genus-0 rule, so nothing beyond the rules and
  their derivatives is used.
"""
from __future__ import annotations

import itertools
import os
from fractions import Fraction
from typing import Dict, Optional

from ..graphs import canonical_key
from ..linalg import Echelon
from ..strata import _insert, key_code
from .expr import CorrelatorExpr, read_expression_file

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")

# T-power at which a slot of a genus-g correlator is rewritten
THRESHOLD = {0: 1, 1: 1, 2: 2, 3: 3, 4: 4}

RULE_FILES = {1: "genus1.txt", 2: "genus2.txt", 3: "genus3.txt"}


class ScopeError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# graph plumbing

def _points(key):
    """Per vertex the list of (half-edge id, T-power)."""
    ne, genera, _, legs, edges = key
    pts = [[] for _ in genera]
    for i, (v, p) in enumerate(legs):
        pts[v].append((("leg", i), p))
    for e, (a, b, pa, pb) in enumerate(edges):
        pts[a].append((("edge", e, 0), pa))
        pts[b].append((("edge", e, 1), pb))
    return pts


def _parts(key):
    ne, genera, kappas, legs, edges = key
    return list(genera), list(kappas), [tuple(x) for x in legs], [list(e) for e in edges]


def _canon(genera, legs, edges):
    return canonical_key(genera, [()] * len(genera), legs, [tuple(e) for e in edges])


def _set_point(legs, edges, h, v=None, p=None):
    if h[0] == "leg":
        ov, op = legs[h[1]]
        legs[h[1]] = (ov if v is None else v, op if p is None else p)
    else:
        e, s = h[1], h[2]
        if v is not None:
            edges[e][s] = v
        if p is not None:
            edges[e][2 + s] = p


def differentiate(expr: CorrelatorExpr, name: str) -> CorrelatorExpr:
    """Derivative in the direction of a new constant vector field ``name``."""
    if name in expr.legs:
        raise ValueError("field %s already occurs" % name)
    out = CorrelatorExpr(expr.legs + (name,))
    for key, c in expr.coeffs.items():
        for k2, c2 in _diff_key(key):
            out.add_term(k2, c * c2)
    return out


def _diff_key(key):
    genera, _, legs, edges = _parts(key)
    nv = len(genera)
    res = []
    for v in range(nv):
        res.append((_canon(genera, legs + [(v, 0)], edges), 1))
    for v, pts in enumerate(_points(key)):
        for h, k in pts:
            for j in range(k):
                g2 = genera + [0]
                l2 = list(legs)
                e2 = [list(e) for e in edges]
                _set_point(l2, e2, h, v=nv, p=k - 1 - j)
                l2.append((nv, 0))
                e2.append([nv, v, 0, j])
                res.append((_canon(g2, l2, e2), -1))
    return res


# ---------------------------------------------------------------------------
# rules

class Rule:
    """<<T^p(Z) Y1 .. Ym>>_g = R_m, for every m from the base rule on."""

    def __init__(self, genus, base: CorrelatorExpr, base_m=0):
        self.genus = genus
        self.p = THRESHOLD[genus]
        self.base_m = base_m
        self._cache = {base_m: base}

    def rhs(self, m) -> CorrelatorExpr:
        if m < self.base_m:
            raise ScopeError("genus-%d rule needs at least %d other slots" % (self.genus, self.base_m))
        if m not in self._cache:
            prev = self.rhs(m - 1)
            name = "Y%d" % m
            out = differentiate(prev, name)
            p, g = self.p, self.genus
            # vertex 0: genus g with Y1..Y(m-1); vertex 1: genus 0 with Z and Ym
            for j in range(p):
                legs = [(1, p - 1 - j)] + [(0, 0)] * (m - 1) + [(1, 0)]
                out.add_term(_canon([g, 0], legs, [[0, 1, j, 0]]), 1)
            self._cache[m] = out
        return self._cache[m]


def rule_names(m):
    return ("Z",) + tuple("Y%d" % (i + 1) for i in range(m))


def genus0_rule():
    return Rule(0, CorrelatorExpr(rule_names(2)), base_m=2)


def load_rule_file(path, delta="alt"):
    """Read a rule file with sections [genus] and [rhs]; the field is W."""
    sec = read_expression_file(path)
    g = int(sec["genus"])
    rhs = CorrelatorExpr.parse(sec["rhs"], delta=delta, legs=("W",))
    rhs = CorrelatorExpr(("Z",), rhs.coeffs)
    return Rule(g, rhs)


class RuleSet:
    def __init__(self, rules: Dict[int, Rule]):
        self.rules = dict(rules)

    @classmethod
    def default(cls, source="data", derived=None):
        """Rules of genus 0..3; ``derived`` may map genus -> StrataVector of
        the relation psi^p = (boundary terms) on (g, 1) to replace the files."""
        rules = {0: genus0_rule()}
        for g, fn in RULE_FILES.items():
            if derived and g in derived:
                rhs = CorrelatorExpr.from_strata(derived[g], names=("Z",))
                rules[g] = Rule(g, rhs)
            else:
                rules[g] = load_rule_file(os.path.join(DATA_DIR, fn))
        return cls(rules)

    def with_rule(self, rule: Rule):
        rules = dict(self.rules)
        rules[rule.genus] = rule
        return RuleSet(rules)

    def perturbed(self, genus, factor):
        """Copy with the base rule of one genus scaled, for sanity checks."""
        rules = dict(self.rules)
        r = rules[genus]
        rules[genus] = Rule(genus, r.rhs(r.base_m).scale(factor), r.base_m)
        return RuleSet(rules)


_DEFAULT = None


def default_rules():
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = RuleSet.default()
    return _DEFAULT


# ---------------------------------------------------------------------------
# T-reduction

def _redexes(key, rules):
    out = []
    genera = key[1]
    for v, pts in enumerate(_points(key)):
        g = genera[v]
        if g not in rules.rules:
            continue
        p = THRESHOLD[g]
        for h, k in pts:
            if k >= p:
                out.append((k, v, h))
    return out


def apply_rule(key, v, h, rules):
    """Rewrite the slot h of vertex v; returns list of (key, coeff)."""
    g = key[1][v]
    rule = rules.rules[g]
    pts = _points(key)[v]
    others = [x for x, _ in pts if x != h]
    k = dict(pts)[h]
    genera, kappas, legs, edges = _parts(key)
    _set_point(legs, edges, h, p=k - rule.p)
    rhs = rule.rhs(len(others))
    bij = [h] + others
    out = []
    for ik, c in rhs.coeffs.items():
        gg, kk, ll, ee = _insert(ik, genera, kappas, legs, [tuple(e) for e in edges], v, bij)
        out.append((_canon(gg, ll, ee), c))
    return out


class Reducer:
    """T-reduction with a memo; ``rng`` picks redexes at random instead."""

    def __init__(self, rules: Optional[RuleSet] = None, rng=None, budget=10 ** 6):
        self.rules = rules or default_rules()
        self.rng = rng
        self.budget = budget
        self.steps = 0
        self.memo = {}

    def choose(self, red):
        if self.rng is not None:
            return self.rng.choice(red)
        return max(red, key=lambda t: (t[0], -t[1], _neg(t[2])))

    def reduce_key(self, key):
        if self.rng is None and key in self.memo:
            return self.memo[key]
        red = _redexes(key, self.rules)
        if not red:
            res = {key: Fraction(1)}
        else:
            self.steps += 1
            if self.steps > self.budget:
                raise BudgetExceeded("rewrite budget exhausted at %s" % key_code(key))
            _, v, h = self.choose(red)
            res = {}
            for k2, c in apply_rule(key, v, h, self.rules):
                for k3, c3 in self.reduce_key(k2).items():
                    nv = res.get(k3, 0) + c * c3
                    if nv:
                        res[k3] = nv
                    else:
                        res.pop(k3, None)
        if self.rng is None:
            self.memo[key] = res
        return res

    def reduce(self, expr: CorrelatorExpr) -> CorrelatorExpr:
        out = CorrelatorExpr(expr.legs)
        for key, c in expr.items():
            for k2, c2 in self.reduce_key(key).items():
                out.add_term(k2, c * c2)
        return out


def _neg(h):
    return tuple(-x if isinstance(x, int) else x for x in h)


def t_reduce(expr, rules=None, rng=None):
    return Reducer(rules, rng).reduce(expr)


# ---------------------------------------------------------------------------
# WDVV

def _contractions(key):
    """Graphs with one genus-0/genus-0 non-loop edge contracted, with the
    merged vertex index."""
    genera, _, legs, edges = _parts(key)
    for e, (a, b, pa, pb) in enumerate(edges):
        if a == b or genera[a] or genera[b] or pa or pb:
            continue
        keep = [x for x in range(len(genera)) if x != b]
        remap = {x: i for i, x in enumerate(keep)}
        remap[b] = remap[a]
        g2 = [genera[x] for x in keep]
        l2 = [(remap[v], p) for v, p in legs]
        e2 = [[remap[x], remap[y], px, py] for i, (x, y, px, py) in enumerate(edges) if i != e]
        yield g2, l2, e2, remap[a]


def _split(genera, legs, edges, w, side):
    """Split vertex w: the points in ``side`` move to a new genus-0 vertex."""
    nv = len(genera)
    g2 = genera + [0]
    l2 = list(legs)
    e2 = [list(e) for e in edges]
    for h in side:
        _set_point(l2, e2, h, v=nv)
    e2.append([w, nv, 0, 0])
    return _canon(g2, l2, e2)


def _wdvv_at(genera, legs, edges, w):
    """WDVV relations (ab|cd) - (ac|bd) at a psi-free genus-0 vertex w."""
    pts_w = _points(_raw_key(genera, legs, edges))[w]
    if len(pts_w) < 4 or any(p for _, p in pts_w):
        return []
    pts = [h for h, _ in pts_w]
    n = len(pts)
    splits = {}
    for r in range(2, n - 1):
        for S in itertools.combinations(range(n), r):
            if 0 in S:
                splits[frozenset(S)] = _split(genera, legs, edges, w, [pts[i] for i in S])
    everything = frozenset(range(n))
    rels = []
    for a, b, c, d in itertools.combinations(range(n), 4):
        terms = {}
        for (x, y, u, z), sign in (((a, b, c, d), 1), ((a, c, b, d), -1)):
            for S, k in splits.items():
                side = S if x in S else everything - S
                if y in side and u not in side and z not in side:
                    terms[k] = terms.get(k, 0) + sign
        terms = {k: Fraction(v) for k, v in terms.items() if v}
        if terms:
            rels.append(terms)
    return rels


def wdvv_relations(key):
    """WDVV relations at genus-0 vertices of ``key`` and of its contractions,
    so that every relation containing ``key`` is found."""
    genera, _, legs, edges = _parts(key)
    rels = []
    for w, g in enumerate(genera):
        if g == 0:
            rels.extend(_wdvv_at(genera, legs, [list(e) for e in edges], w))
    for g2, l2, e2, w in _contractions(key):
        rels.extend(_wdvv_at(g2, l2, e2, w))
    return rels


def _raw_key(genera, legs, edges):
    return (len(edges), tuple(genera), tuple(() for _ in genera), tuple(legs),
            tuple(tuple(e) for e in edges))


def wdvv_closure(keys, limit=200000):
    """All WDVV relations reachable from ``keys``, with their support."""
    seen = set(keys)
    todo = sorted(keys, key=key_code)
    rels = []
    relseen = set()
    while todo:
        k = todo.pop()
        for rel in wdvv_relations(k):
            sig = tuple(sorted(rel.items()))
            if sig in relseen:
                continue
            relseen.add(sig)
            rels.append(rel)
            for k2 in rel:
                if k2 not in seen:
                    seen.add(k2)
                    todo.append(k2)
                    if len(seen) > limit:
                        raise BudgetExceeded("WDVV closure too large")
    return seen, rels


# ---------------------------------------------------------------------------
# normal forms

def _order(keys, prefer=()):
    pref = [k for k in prefer if k in keys]
    pset = set(pref)
    rest = sorted((k for k in keys if k not in pset), key=_term_order)
    return rest + pref


def _term_order(key):
    # graphs with many edges first, so remainders favour few edges
    return (-key[0], key_code(key))


def normal_form(expr: CorrelatorExpr, rules=None, prefer=None, rng=None, wdvv=True):
    """T-reduce ``expr`` and take its remainder modulo WDVV.

    ``prefer`` lists keys (or an expression whose keys are used) to be kept
    in the remainder when there is a choice.
    """
    red = t_reduce(expr, rules, rng)
    if not wdvv or red.is_zero():
        return red
    if isinstance(prefer, CorrelatorExpr):
        prefer = [k for k, _ in prefer.items()]
    prefer = list(prefer or [])
    keys, rels = wdvv_closure(list(red.coeffs) + prefer)
    cols = _order(keys, prefer)
    index = {k: i for i, k in enumerate(cols)}
    ech = Echelon(len(cols))
    for rel in sorted(rels, key=lambda r: sorted(index[k] for k in r)):
        ech.absorb({index[k]: c for k, c in rel.items()})
    rem = ech.reduce({index[k]: c for k, c in red.coeffs.items()})
    out = CorrelatorExpr(expr.legs)
    for i, c in rem.items():
        out.add_term(cols[i], Fraction(int(c.numerator), int(c.denominator)))
    return out


def reduce(expr, rules=None, prefer=None, rng=None):
    check_scope(expr)
    return normal_form(expr, rules, prefer, rng)


def check_scope(expr):
    for key in expr.coeffs:
        if any(g > 4 for g in key[1]):
            raise ScopeError("correlator of genus above 4 in %s" % key_code(key))


def psi_power_identity(g, r):
    """Both sides of <<T^(2g+r)(W)>>_g = sum over g1 + g2 = g, gi > 0 and
    a + b = 2g - 1 + r of (-1)^a g2/g <<W T^a(g^x)>>_g1 <<T^b(g_x)>>_g2.

    Terms whose correlators carry more T than their dimension allows are
    kept; the rules remove them."""
    if g < 1 or r < 0:
        raise ValueError("need g >= 1 and r >= 0")
    lhs = CorrelatorExpr(("W",))
    lhs.add_term(_canon([g], [(0, 2 * g + r)], []), 1)
    rhs = CorrelatorExpr(("W",))
    for g1 in range(1, g):
        g2 = g - g1
        for a in range(2 * g + r):
            b = 2 * g - 1 + r - a
            rhs.add_term(_canon([g1, g2], [(0, 0)], [[0, 1, a, b]]),
                         Fraction((-1) ** a * g2, g))
    return lhs, rhs


def verify_identity(lhs: CorrelatorExpr, rhs: CorrelatorExpr, rules=None, rng=None):
    """(holds, residual): the residual is the normal form of lhs - rhs."""
    res = reduce(lhs - rhs, rules, rng=rng)
    return res.is_zero(), res


# ---------------------------------------------------------------------------
# translation

def translate(vec, names=None) -> CorrelatorExpr:
    """Correlator form of a kappa-free strata vector (psi becomes T)."""
    return CorrelatorExpr.from_strata(vec, names)
