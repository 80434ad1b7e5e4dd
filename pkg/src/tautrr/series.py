"""Truncated power series with zeta-parity coefficients.

``ZetaPoly`` is a polynomial in a grading variable T, in named commuting
symbols (psi symbols, kappa symbols, brace symbols K_{n,a}) and in
variables zeta_v with zeta_v**2 = 1.  A zeta word is stored as a bitmask
over vertex positions, so multiplying words is an XOR.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Iterable, Tuple


class DivisionError(ArithmeticError):
    """Raised when a division that must be exact leaves a remainder."""


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for s, e in m2:
        d[s] = d.get(s, 0) + e
    return tuple(sorted(d.items()))


def mono(*pairs):
    """Monomial from (symbol, exponent) pairs, dropping zero exponents."""
    d = {}
    for s, e in pairs:
        if e:
            d[s] = d.get(s, 0) + e
    return tuple(sorted(d.items()))


class ZetaPoly:
    """Truncated polynomial; terms map (tdeg, monomial, zmask) -> Fraction."""

    __slots__ = ("terms", "order")

    def __init__(self, terms=None, order=None):
        self.order = order
        self.terms: Dict[Tuple[int, tuple, int], Fraction] = {}
        if terms:
            for k, c in terms.items():
                if c and (order is None or k[0] <= order):
                    self.terms[k] = self.terms.get(k, 0) + Fraction(c)
            self.terms = {k: c for k, c in self.terms.items() if c}

    @classmethod
    def const(cls, c, order=None):
        return cls({(0, (), 0): Fraction(c)}, order)

    @classmethod
    def monomial(cls, c, tdeg=0, m=(), zmask=0, order=None):
        return cls({(tdeg, tuple(m), zmask): Fraction(c)}, order)

    def copy(self):
        z = ZetaPoly(order=self.order)
        z.terms = dict(self.terms)
        return z

    def _order_with(self, other):
        if self.order is None:
            return other.order
        if other.order is None:
            return self.order
        return min(self.order, other.order)

    def __add__(self, other):
        if not isinstance(other, ZetaPoly):
            other = ZetaPoly.const(other)
        order = self._order_with(other)
        out = {}
        for src in (self.terms, other.terms):
            for k, c in src.items():
                if order is None or k[0] <= order:
                    out[k] = out.get(k, 0) + c
        z = ZetaPoly(order=order)
        z.terms = {k: c for k, c in out.items() if c}
        return z

    __radd__ = __add__

    def __neg__(self):
        z = ZetaPoly(order=self.order)
        z.terms = {k: -c for k, c in self.terms.items()}
        return z

    def __sub__(self, other):
        if not isinstance(other, ZetaPoly):
            other = ZetaPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = Fraction(c)
        z = ZetaPoly(order=self.order)
        if c:
            z.terms = {k: v * c for k, v in self.terms.items()}
        return z

    def __mul__(self, other):
        if not isinstance(other, ZetaPoly):
            return self.scale(other)
        order = self._order_with(other)
        out = {}
        for (t1, m1, z1), c1 in self.terms.items():
            for (t2, m2, z2), c2 in other.terms.items():
                t = t1 + t2
                if order is not None and t > order:
                    continue
                k = (t, _mono_mul(m1, m2), z1 ^ z2)
                out[k] = out.get(k, 0) + c1 * c2
        z = ZetaPoly(order=order)
        z.terms = {k: c for k, c in out.items() if c}
        return z

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, ZetaPoly):
            other = ZetaPoly.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "ZetaPoly(0)"
        parts = []
        for (t, m, z), c in sorted(self.terms.items(), key=lambda kv: (kv[0][0], repr(kv[0]))):
            s = str(c)
            if t:
                s += "*T^%d" % t
            for sym, e in m:
                s += "*%s^%d" % (sym, e) if e > 1 else "*%s" % (sym,)
            if z:
                s += "*zeta[%s]" % ",".join(str(i) for i in range(z.bit_length()) if z >> i & 1)
            parts.append(s)
        return "ZetaPoly(" + " + ".join(parts) + ")"

    def truncate(self, order):
        z = ZetaPoly(order=order if self.order is None else min(order, self.order))
        z.terms = {k: c for k, c in self.terms.items() if k[0] <= z.order}
        return z

    def degree_part(self, t):
        z = ZetaPoly(order=self.order)
        z.terms = {k: c for k, c in self.terms.items() if k[0] == t}
        return z

    def coefficient(self, tdeg, m=(), zmask=0):
        return self.terms.get((tdeg, tuple(m), zmask), Fraction(0))

    def is_zero(self):
        return not self.terms

    def tcoeffs(self, n):
        """List of coefficients of T^0..T^n for a series with no other symbols."""
        out = [Fraction(0)] * (n + 1)
        for (t, m, z), c in self.terms.items():
            if m or z:
                raise ValueError("not a plain T-series")
            if t <= n:
                out[t] += c
        return out

    def exp(self):
        """exp of a series without constant term, truncated at its order."""
        if self.order is None:
            raise ValueError("exp needs a truncation order")
        if any(k[0] == 0 for k in self.terms):
            raise ValueError("exp needs zero constant term")
        result = ZetaPoly.const(1, self.order)
        power = ZetaPoly.const(1, self.order)
        for k in range(1, self.order + 1):
            power = power * self
            if power.is_zero():
                break
            result = result + power.scale(Fraction(1, factorial(k)))
        return result


# ---------------------------------------------------------------------------
# the series A and B

@lru_cache(maxsize=None)
def a_coeff(n):
    return Fraction(factorial(6 * n), factorial(3 * n) * factorial(2 * n))


@lru_cache(maxsize=None)
def b_coeff(n):
    return Fraction(6 * n + 1, 6 * n - 1) * a_coeff(n)


def series_A(order):
    return ZetaPoly({(k, (), 0): a_coeff(k) for k in range(order + 1)}, order)


def series_B(order):
    return ZetaPoly({(k, (), 0): b_coeff(k) for k in range(order + 1)}, order)


def identity_defect(order):
    """Coefficients of A(T)B(-T) + A(-T)B(T) + 2 up to T^order."""
    out = []
    for k in range(order + 1):
        s = Fraction(0)
        for i in range(k + 1):
            j = k - i
            s += a_coeff(i) * b_coeff(j) * ((-1) ** j + (-1) ** i)
        if k == 0:
            s += 2
        out.append(s)
    return out


def _check_chat_index(a):
    if a < 0 or a % 3 == 2:
        raise ValueError("C-hat index must be non-negative and not 2 mod 3, got %r" % (a,))


def chat(a, psi_symbol, zeta_bit, order):
    """C-hat_a(psi*T, zeta) truncated at T-degree ``order``.

    ``psi_symbol`` may be None for the plain series C-hat_a(T, zeta);
    ``zeta_bit`` is the vertex position of zeta.
    """
    _check_chat_index(a)
    i, rem = divmod(a, 3)
    zb = 1 << zeta_bit
    terms = {}
    for m in range(order - i + 1):
        d = i + m
        psi = ((psi_symbol, d),) if (psi_symbol is not None and d) else ()
        if rem == 0:
            terms[(d, psi, zb if m % 2 else 0)] = a_coeff(m)
        else:
            terms[(d, psi, 0 if m % 2 else zb)] = b_coeff(m)
    return ZetaPoly(terms, order)


@lru_cache(maxsize=None)
def _edge_quotient(order):
    """Quotient coefficients for the edge factor with distinct zeta', zeta''.

    Returns {(i, j): {(x, y): c}} meaning c * psi'^i psi''^j zeta'^x zeta''^y
    with i + j <= order.
    """
    out = {}
    for D in range(order + 1):
        top = D + 1
        # numerator at total degree top: N[i] is the coefficient of psi'^i psi''^(top-i)
        N = []
        for i in range(top + 1):
            j = top - i
            c = {}
            key1 = (i % 2, (1 + j) % 2)
            c[key1] = c.get(key1, 0) + a_coeff(i) * b_coeff(j)
            key2 = ((1 + i) % 2, j % 2)
            c[key2] = c.get(key2, 0) + b_coeff(i) * a_coeff(j)
            N.append(c)
        # N_i = q_{i-1} + q_i where q_i is the coefficient of psi'^i psi''^(D-i)
        q = []
        prev = {}
        for i in range(D + 1):
            cur = dict(N[i])
            for k, v in prev.items():
                cur[k] = cur.get(k, 0) - v
            cur = {k: v for k, v in cur.items() if v}
            q.append(cur)
            prev = cur
        rem = dict(N[top])
        for k, v in prev.items():
            rem[k] = rem.get(k, 0) - v
        if any(v for v in rem.values()):
            raise DivisionError("edge factor numerator not divisible at degree %d" % top)
        for i in range(D + 1):
            if q[i]:
                out[(i, D - i)] = q[i]
    return out


def edge_factor(psi1, psi2, bit1, bit2, order):
    """The edge factor as a ZetaPoly, truncated at T-degree ``order``.

    ``psi1``/``psi2`` are the half-edge symbols and ``bit1``/``bit2`` the
    vertex positions of zeta' and zeta''; a loop has bit1 == bit2.
    """
    q = _edge_quotient(order)
    terms = {}
    for (i, j), cz in q.items():
        m = mono((psi1, i), (psi2, j))
        for (x, y), c in cz.items():
            z = ((1 << bit1) if x else 0) ^ ((1 << bit2) if y else 0)
            k = (i + j, m, z)
            terms[k] = terms.get(k, 0) + c
    return ZetaPoly(terms, order)


def edge_factor_numerator(psi1, psi2, bit1, bit2, order):
    """The undivided numerator, for testing the division."""
    za, zb = 1 << bit1, 1 << bit2
    terms = {}

    def add(k, c):
        terms[k] = terms.get(k, 0) + c

    for i in range(order + 1):
        for j in range(order + 1 - i):
            m = mono((psi1, i), (psi2, j))
            add((i + j, m, (za if i % 2 else 0) ^ (zb if (j + 1) % 2 else 0)), a_coeff(i) * b_coeff(j))
            add((i + j, m, (za if (i + 1) % 2 else 0) ^ (zb if j % 2 else 0)), b_coeff(i) * a_coeff(j))
    add((0, (), za), 1)
    add((0, (), zb), 1)
    return ZetaPoly(terms, order)


# ---------------------------------------------------------------------------
# brace symbols and kappa-hat

def K(n, a):
    return ("K", n, a)


def brace(f: ZetaPoly) -> ZetaPoly:
    """The brace map: a_n T^n -> a_n T^n K_{n,0}, b_n zeta T^n -> b_n T^n K_{n,1}.

    ``f`` must be a series in T and one zeta variable (bit 0) only.
    """
    terms = {}
    for (t, m, z), c in f.terms.items():
        if m or z not in (0, 1):
            raise ValueError("brace expects a series in T and a single zeta")
        k = (t, ((K(t, z), 1),), 0)
        terms[k] = terms.get(k, 0) + c
    return ZetaPoly(terms, f.order)


def brace_exp_argument(order):
    """{1 - C-hat_0}, a linear form in the brace symbols."""
    f = ZetaPoly.const(1, order) - chat(0, None, 0, order)
    return brace(f)


def _multiset_from_mono(m):
    out = []
    for (tag, n, a), e in m:
        if tag != "K":
            raise ValueError("kappa_hat expects brace symbols only")
        out.extend([(n, a)] * e)
    return tuple(sorted(out))


def _cycle_value(vdata, e, a, vertices=None):
    """Sum over vertices of kappa_e^(v) zeta_v^a (kappa_0 -> 2g-2+n)."""
    terms = {}
    rng = range(len(vdata)) if vertices is None else vertices
    for v in rng:
        z = (1 << v) if a % 2 else 0
        if e == 0:
            if vdata[v]:
                k = (0, (), z)
                terms[k] = terms.get(k, 0) + vdata[v]
        else:
            k = (e, ((("kappa", v, e), 1),), z)
            terms[k] = terms.get(k, 0) + 1
    return ZetaPoly(terms)


@lru_cache(maxsize=None)
def _kappa_hat_cycles(vdata, ms):
    """kappa-hat of the multiset ``ms`` of (e, a), summed over permutations.

    Recursion on the cycle through the first element: choosing k further
    elements for that cycle gives k! cyclic arrangements.
    """
    if not ms:
        return ZetaPoly.const(1)
    first, rest = ms[0], ms[1:]
    counts = {}
    for x in rest:
        counts[x] = counts.get(x, 0) + 1
    items = sorted(counts.items())
    result = ZetaPoly()
    # iterate over sub-multisets of rest
    def rec(idx, chosen, mult):
        nonlocal result
        if idx == len(items):
            size = sum(c for _, c in chosen)
            e = first[0] + sum(x[0] * c for x, c in chosen)
            a = first[1] + sum(x[1] * c for x, c in chosen)
            remaining = []
            for (x, c), (_, cc) in zip(items, chosen):
                remaining.extend([x] * (c - cc))
            val = _cycle_value(vdata, e, a) * _kappa_hat_cycles(vdata, tuple(remaining))
            result = result + val.scale(mult * factorial(size))
            return
        x, c = items[idx]
        for cc in range(c + 1):
            rec(idx + 1, chosen + [(x, cc)], mult * _binom(c, cc))

    rec(0, [], 1)
    return result


def _binom(n, k):
    return factorial(n) // (factorial(k) * factorial(n - k))


@lru_cache(maxsize=None)
def _kappa_hat_per_vertex(vdata, ms):
    """Same value computed by first distributing the symbols to vertices."""
    nv = len(vdata)
    result = ZetaPoly()
    l = len(ms)
    for assign in _assignments(l, nv):
        prod = ZetaPoly.const(1)
        for v in range(nv):
            sub = tuple(ms[i] for i in range(l) if assign[i] == v)
            single = _kappa_hat_single(vdata[v], sub)
            prod = prod * _shift_vertex(single, v)
            if prod.is_zero():
                break
        result = result + prod
    return result


def _assignments(l, nv):
    if l == 0:
        yield ()
        return
    for rest in _assignments(l - 1, nv):
        for v in range(nv):
            yield rest + (v,)


@lru_cache(maxsize=None)
def _kappa_hat_single(val, ms):
    return _kappa_hat_cycles((val,), ms)


def _shift_vertex(z, v):
    terms = {}
    for (t, m, zm), c in z.terms.items():
        m2 = tuple(((s[0], v, s[2]), e) for s, e in m)
        terms[(t, m2, zm << v)] = c
    return ZetaPoly(terms)


def vertex_data(graph):
    """Values 2g(v) - 2 + n(v) substituted for kappa_0."""
    return tuple(2 * g - 2 + n for g, n in zip(graph.genera, graph.valences()))


KAPPA_VARIANTS = ("printed", "per-vertex")


def kappa_hat(symbols: Iterable[Tuple[int, int]], graph, variant="printed") -> ZetaPoly:
    """kappa-hat of a product of brace symbols K_{e,a} on ``graph``.

    The output has symbols ("kappa", v, e) and zeta words over the vertices.
    """
    ms = tuple(sorted((int(e), int(a) % 2) for e, a in symbols))
    for e, a in ms:
        if e < 0:
            raise ValueError("negative kappa index")
    vd = vertex_data(graph)
    if variant == "printed":
        return _kappa_hat_cycles(vd, ms)
    if variant == "per-vertex":
        return _kappa_hat_per_vertex(vd, ms)
    raise ValueError("unknown kappa-hat variant %r" % (variant,))


def kappa_hat_poly(p: ZetaPoly, graph, variant="printed") -> ZetaPoly:
    """Linear extension of kappa_hat to a polynomial in brace symbols."""
    out = ZetaPoly()
    for (t, m, z), c in p.terms.items():
        if z:
            raise ValueError("brace polynomial must not carry zeta words")
        out = out + kappa_hat(_multiset_from_mono(m), graph, variant).scale(c)
    return out
