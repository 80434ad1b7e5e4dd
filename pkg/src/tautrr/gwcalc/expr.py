"""Correlator expressions: parsing, flattening, printing and JSON.

Text syntax (one expression, terms separated by + or -)::

    7/10 <<g^a>>_1 <<{g_a o W}>>_1 - 1/240 <<W {g^a o g_a}>>_1

* ``<< ... >>_g`` is a genus-g correlator;
* ``W``, ``V``, ``Y1`` ... are named vector fields (an upper-case letter
  followed by letters or digits; ``T`` and ``D`` are reserved);
* ``g^a`` / ``g_a`` are the two ends of a contracted index pair;
* ``T(x)`` and ``T^k(x)`` apply the operator T;
* ``{x o y}`` is the quantum product, ``{x o y o z}`` associates to the
  left, and ``{x y z}`` is the bracket <<x y z g^m>>_0 g_m;
* ``D`` is the quantum Euler class g^a o g_a (see ``DELTA_READINGS``).

Internally a product of correlators with all quantum products expanded is
the same thing as a stable graph: correlators are vertices, index pairs are
edges, named fields are legs, and T^k on a slot is psi^k on the matching
half-edge.  ``CorrelatorExpr`` stores canonical keys of such graphs, so it
shares its canonical form with the strata module.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict

from ..graphs import canonical_key

DELTA_READINGS = ("alt", "contraction")

_TOKEN = re.compile(r"\s*(<<|>>_(\d+)|\{|\}|\(|\)|\^|[+-]|\d+(?:/\d+)?|g\^[a-z]+\d*|g_[a-z]+\d*"
                    r"|T|D|o(?![A-Za-z0-9])|[A-Z][A-Za-z0-9]*)")


class ParseError(ValueError):
    pass


def tokenize(text):
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError("cannot parse near %r" % text[pos:pos + 20])
        tok = m.group(1)
        if m.group(2) is not None:
            out.append((">>", int(m.group(2))))
        else:
            out.append((tok, None))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


# insertion trees: ("W", name) | ("idx", name, up) | ("T", k, child)
#                  | ("o", left, right) | ("br", children) | ("D",)

class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def take(self, expect=None):
        if self.i >= len(self.toks):
            raise ParseError("unexpected end of input")
        tok = self.toks[self.i]
        if expect is not None and tok[0] != expect:
            raise ParseError("expected %r, got %r" % (expect, tok[0]))
        self.i += 1
        return tok

    def expression(self):
        terms = []
        while self.peek() is not None:
            terms.append(self.term())
        return terms

    def term(self):
        sign = 1
        while self.peek() in ("+", "-"):
            if self.take()[0] == "-":
                sign = -sign
        coef = Fraction(1)
        if self.peek() is not None and self.peek()[0].isdigit():
            coef = Fraction(self.take()[0])
        factors = []
        while self.peek() == "<<":
            factors.append(self.factor())
        if not factors:
            raise ParseError("term without correlators")
        return sign * coef, factors

    def factor(self):
        self.take("<<")
        slots = []
        while self.peek() != ">>":
            slots.append(self.insertion())
        g = self.take(">>")[1]
        return g, slots

    def insertion(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        if tok == "T":
            self.take()
            k = 1
            if self.peek() == "^":
                self.take()
                k = int(self.take()[0])
            self.take("(")
            child = self.insertion()
            self.take(")")
            return ("T", k, child)
        if tok == "D":
            self.take()
            return ("D",)
        if tok == "{":
            self.take()
            items = [self.insertion()]
            if self.peek() == "o":
                while self.peek() == "o":
                    self.take()
                    items.append(self.insertion())
                self.take("}")
                node = items[0]
                for x in items[1:]:
                    node = ("o", node, x)
                return node
            while self.peek() != "}":
                items.append(self.insertion())
            self.take("}")
            if len(items) < 2:
                raise ParseError("a bracket needs at least two entries")
            return ("br", tuple(items))
        if tok.startswith("g^") or tok.startswith("g_"):
            self.take()
            return ("idx", tok[2:], tok[1] == "^")
        if tok[0].isupper():
            self.take()
            return ("W", tok)
        raise ParseError("unexpected token %r" % tok)


def parse_terms(text):
    """Parse text into a list of (coefficient, factors) with insertion trees."""
    return _Parser(tokenize(text)).expression()


# ---------------------------------------------------------------------------
# flattening

class _Flat:
    def __init__(self, delta):
        self.genera = []
        self.legs = {}
        self.ends = {}
        self.fresh = 0
        self.delta = delta

    def vertex(self, g):
        self.genera.append(g)
        return len(self.genera) - 1

    def new_index(self):
        self.fresh += 1
        return ("#", self.fresh)

    def attach(self, node, v, t):
        kind = node[0]
        if kind == "W":
            if node[1] in self.legs:
                raise ParseError("field %s occurs twice in one term" % node[1])
            self.legs[node[1]] = (v, t)
        elif kind == "idx":
            self.ends.setdefault(("user", node[1]), []).append((v, t, node[2]))
        elif kind == "T":
            self.attach(node[2], v, t + node[1])
        elif kind in ("o", "br"):
            kids = (node[1], node[2]) if kind == "o" else node[1]
            u = self.vertex(0)
            for k in kids:
                self.attach(k, u, 0)
            idx = self.new_index()
            self.ends[idx] = [(u, 0, True), (v, t, False)]
        elif kind == "D":
            if self.delta == "alt":
                u = self.vertex(0)
                loop = self.new_index()
                self.ends[loop] = [(u, 0, True), (u, 0, False)]
                idx = self.new_index()
                self.ends[idx] = [(u, 0, True), (v, t, False)]
            elif self.delta == "contraction":
                if t:
                    raise ParseError("T applied to a contracted pair")
                loop = self.new_index()
                self.ends[loop] = [(v, 0, True), (v, 0, False)]
            else:
                raise ValueError("unknown Delta reading %r" % (self.delta,))
        else:
            raise ParseError("unknown node %r" % (node,))


def flatten_term(factors, delta="alt"):
    """Graph data (genera, legs by name, edges) of one product of correlators."""
    fl = _Flat(delta)
    for g, slots in factors:
        v = fl.vertex(g)
        for s in slots:
            fl.attach(s, v, 0)
    edges = []
    for name, ends in fl.ends.items():
        if len(ends) != 2:
            raise ParseError("index %r is not paired" % (name[1],))
        if ends[0][2] == ends[1][2] and name[0] == "user":
            raise ParseError("index %r must occur once up and once down" % (name[1],))
        (a, pa, _), (b, pb, _) = ends
        edges.append((a, b, pa, pb))
    val = [0] * len(fl.genera)
    for v, _ in fl.legs.values():
        val[v] += 1
    for a, b, _, _ in edges:
        val[a] += 1
        val[b] += 1
    for g, n in zip(fl.genera, val):
        if 2 * g - 2 + n <= 0:
            raise ParseError("unstable correlator of genus %d with %d slots" % (g, n))
    return fl.genera, fl.legs, edges


def _order_names(names):
    return tuple(sorted(set(names), key=lambda s: (s != "W", len(s), s)))


def make_key(genera, legs_by_name, edges, leg_names):
    legs = [legs_by_name[nm] for nm in leg_names]
    nv = len(genera)
    return canonical_key(genera, [()] * nv, legs, edges)


def key_genus(key):
    ne, genera, _, _, _ = key
    return sum(genera) + ne - len(genera) + 1


# ---------------------------------------------------------------------------

class CorrelatorExpr:
    """Rational combination of flattened correlator products."""

    __slots__ = ("legs", "coeffs")

    def __init__(self, legs=("W",), coeffs=None):
        self.legs = tuple(legs)
        self.coeffs: Dict[tuple, Fraction] = {}
        if coeffs:
            for k, c in coeffs.items():
                self.add_term(k, c)

    @classmethod
    def parse(cls, text, delta="alt", legs=None):
        terms = parse_terms(text)
        flat = [(c, flatten_term(f, delta)) for c, f in terms]
        names = set()
        for _, (_, lg, _) in flat:
            names.update(lg)
        if legs is None:
            legs = _order_names(names) if names else ("W",)
        out = cls(legs)
        for c, (genera, lg, edges) in flat:
            if set(lg) != set(legs):
                raise ParseError("every term must contain the fields %s once" % ", ".join(legs))
            out.add_term(make_key(genera, lg, edges, legs), c)
        return out

    @classmethod
    def from_strata(cls, vec, names=None):
        """Translate a kappa-free strata vector: each psi becomes a T."""
        names = tuple(names) if names else (("W",) if vec.n == 1 else tuple("W%d" % (i + 1) for i in range(vec.n)))
        out = cls(names)
        for k, c in vec.coeffs.items():
            if any(k[2]):
                raise ValueError("kappa classes have no correlator translation")
            out.add_term(k, c)
        return out

    def reorder(self, legs):
        """Same expression with the free fields listed in another order."""
        legs = tuple(legs)
        if sorted(legs) != sorted(self.legs):
            raise ValueError("reorder needs the same free fields")
        pos = [self.legs.index(nm) for nm in legs]
        out = CorrelatorExpr(legs)
        for (ne, genera, kappas, lg, edges), c in self.coeffs.items():
            out.add_term(canonical_key(genera, kappas, [lg[i] for i in pos], edges), c)
        return out

    def to_strata(self, g):
        """Inverse of from_strata: each T becomes a psi on the same half-edge.

        Terms whose vertices carry more psi than their dimension are zero as
        classes and are dropped.
        """
        from ..strata import StrataVector, key_is_valid
        return StrataVector(g, len(self.legs), {k: c for k, c in self.coeffs.items() if key_is_valid(k)})

    def add_term(self, key, c):
        if not c:
            return
        v = self.coeffs.get(key, 0) + Fraction(c)
        if v:
            self.coeffs[key] = v
        else:
            self.coeffs.pop(key, None)

    def copy(self):
        out = CorrelatorExpr(self.legs)
        out.coeffs = dict(self.coeffs)
        return out

    def _check(self, other):
        if self.legs != other.legs:
            raise ValueError("expressions have different free fields")

    def __add__(self, other):
        self._check(other)
        out = self.copy()
        for k, c in other.coeffs.items():
            out.add_term(k, c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        out = CorrelatorExpr(self.legs)
        c = Fraction(c)
        if c:
            out.coeffs = {k: v * c for k, v in self.coeffs.items()}
        return out

    def __eq__(self, other):
        return isinstance(other, CorrelatorExpr) and self.legs == other.legs \
            and self.coeffs == other.coeffs

    def __len__(self):
        return len(self.coeffs)

    def is_zero(self):
        return not self.coeffs

    def genera(self):
        return {key_genus(k) for k in self.coeffs}

    def items(self):
        return sorted(self.coeffs.items())

    def to_text(self, unicode=False):
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in self.items():
            s = term_text(k, self.legs, unicode)
            parts.append((c, s))
        out = []
        for i, (c, s) in enumerate(parts):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            cs = "" if a == 1 else str(a) + " "
            if i == 0:
                out.append(("-" if c < 0 else "") + cs + s)
            else:
                out.append(sign + " " + cs + s)
        return " ".join(out)

    def __repr__(self):
        return "CorrelatorExpr(%s)" % self.to_text()

    def to_json(self):
        return {"legs": list(self.legs),
                "terms": [{"coeff": "%d/%d" % (c.numerator, c.denominator),
                           "factors": term_json(k, self.legs)} for k, c in self.items()]}

    @classmethod
    def from_json(cls, obj):
        legs = tuple(obj["legs"])
        out = cls(legs)
        for t in obj["terms"]:
            genera = []
            lg = {}
            ends = {}
            for f in t["factors"]:
                v = len(genera)
                genera.append(int(f["genus"]))
                for ins in f["insertions"]:
                    tp = int(ins.get("T", 0))
                    if "field" in ins:
                        lg[ins["field"]] = (v, tp)
                    else:
                        ends.setdefault(int(ins["index"]), []).append((v, tp, bool(ins["up"])))
            edges = []
            for i, e in ends.items():
                if len(e) != 2 or e[0][2] == e[1][2]:
                    raise ParseError("index %d is not paired up/down" % i)
                edges.append((e[0][0], e[1][0], e[0][1], e[1][1]))
            out.add_term(make_key(genera, lg, edges, legs), Fraction(t["coeff"]))
        return out


_INDEX_NAMES = ["alpha", "beta", "sigma", "mu", "nu", "rho", "lambda", "tau", "kappa", "delta",
                "epsilon", "theta", "iota", "omega", "phi", "chi"]
_GREEK = {"alpha": "α", "beta": "β", "sigma": "σ", "mu": "μ", "nu": "ν", "rho": "ρ",
          "lambda": "λ", "tau": "τ", "kappa": "κ", "delta": "δ", "epsilon": "ε", "theta": "θ",
          "iota": "ι", "omega": "ω", "phi": "φ", "chi": "χ"}


def _slots(key, names):
    """Per vertex, the list of (kind, label, up, T-power) in a stable order."""
    ne, genera, _, legs, edges = key
    slots = [[] for _ in genera]
    for nm, (v, p) in zip(names, legs):
        slots[v].append(("field", nm, None, p))
    for i, (a, b, pa, pb) in enumerate(edges):
        slots[a].append(("index", i, True, pa))
        slots[b].append(("index", i, False, pb))
    return slots


def term_text(key, names, unicode=False):
    ne, genera, _, legs, edges = key
    out = []
    for v, sl in enumerate(_slots(key, names)):
        ins = []
        for kind, lab, up, p in sl:
            if kind == "field":
                base = lab
            else:
                nm = _INDEX_NAMES[lab] if lab < len(_INDEX_NAMES) else "i%d" % lab
                if unicode:
                    base = "γ" + ("^" if up else "_") + _GREEK.get(nm, nm)
                else:
                    base = "g" + ("^" if up else "_") + nm
            if p == 1:
                base = "T(%s)" % base
            elif p > 1:
                base = "T^%d(%s)" % (p, base)
            ins.append(base)
        if unicode:
            out.append("⟨⟨%s⟩⟩_%d" % (" ".join(ins), genera[v]))
        else:
            out.append("<<%s>>_%d" % (" ".join(ins), genera[v]))
    return " ".join(out)


def term_json(key, names):
    ne, genera, _, legs, edges = key
    out = []
    for v, sl in enumerate(_slots(key, names)):
        ins = []
        for kind, lab, up, p in sl:
            d = {"field": lab} if kind == "field" else {"index": lab, "up": up}
            if p:
                d["T"] = p
            ins.append(d)
        out.append({"genus": genera[v], "insertions": ins})
    return out


def read_expression_file(path, delta="alt"):
    """Read sections of a data file.

    Lines starting with '#' are comments; a line ``[name]`` starts a section
    and the remaining lines of the section are joined into one expression.
    Returns {section: text}.
    """
    sections = {}
    cur = None
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if s.startswith("[") and s.endswith("]"):
                cur = s[1:-1]
                sections[cur] = []
                continue
            if cur is None:
                raise ParseError("text outside a section in %s" % path)
            sections[cur].append(s)
    return {k: " ".join(v) for k, v in sections.items()}
