"""Exact sparse row reduction over the rationals.

Rows are dicts ``column -> rational``.  ``Echelon`` absorbs rows one at a
time and keeps its rows fully reduced (each pivot is 1 and is the only
nonzero entry in its column), so the final state is the reduced row echelon
form of the span no matter in which order the rows arrived.

When gmpy2 is importable its ``mpq`` type is used internally, which is
several times faster than ``fractions.Fraction``; results are always
handed back as Fractions.
"""
from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List

try:  # pragma: no cover - depends on the environment
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

CHECKPOINT_VERSION = 1


def _to_q(c):
    if isinstance(c, Fraction):
        return _Q(c.numerator, c.denominator)
    return _Q(c)


def _to_fraction(c):
    return Fraction(int(c.numerator), int(c.denominator))


@dataclass
class SparseMatrix:
    ncols: int
    rows: List[Dict[int, Fraction]]

    def __post_init__(self):
        clean = []
        for r in self.rows:
            row = {}
            for c, v in r.items():
                if not 0 <= c < self.ncols:
                    raise ValueError("column %r out of range" % (c,))
                if v:
                    row[c] = Fraction(v)
            clean.append(row)
        self.rows = clean

    @classmethod
    def from_dense(cls, dense):
        ncols = len(dense[0]) if dense else 0
        return cls(ncols, [{j: Fraction(x) for j, x in enumerate(r) if x} for r in dense])


@dataclass
class RREF:
    ncols: int
    rows: List[Dict[int, Fraction]]
    pivots: List[int]

    @property
    def rank(self):
        return len(self.pivots)

    def to_dense(self):
        return [[r.get(j, Fraction(0)) for j in range(self.ncols)] for r in self.rows]

    def reduce(self, row):
        """Remainder of ``row`` modulo the row space."""
        out = {c: Fraction(v) for c, v in row.items() if v}
        for p, prow in zip(self.pivots, self.rows):
            f = out.get(p)
            if f:
                for c, v in prow.items():
                    nv = out.get(c, 0) - f * v
                    if nv:
                        out[c] = nv
                    else:
                        out.pop(c, None)
        return out


class Echelon:
    """Streaming accumulator of a fully reduced echelon basis."""

    def __init__(self, ncols):
        self.ncols = ncols
        self.pivot_rows: Dict[int, Dict[int, object]] = {}
        # column -> pivots whose row has a nonzero entry there
        self.col_index: Dict[int, set] = {}
        self.absorbed = 0

    @property
    def rank(self):
        return len(self.pivot_rows)

    def reduce(self, row):
        """Reduce a row (dict of rationals) against the current pivots."""
        out = {c: _to_q(v) for c, v in row.items() if v}
        hits = [c for c in out if c in self.pivot_rows]
        for p in hits:
            f = out.get(p)
            if not f:
                continue
            for c, v in self.pivot_rows[p].items():
                nv = out.get(c, 0) - f * v
                if nv:
                    out[c] = nv
                else:
                    del out[c]
        return out

    def absorb_reduced(self, red):
        """Insert a row already reduced by ``reduce``; returns True if new."""
        self.absorbed += 1
        if not red:
            return False
        p = min(red)
        lead = red[p]
        red = {c: v / lead for c, v in red.items()}
        # clear column p from existing rows
        for q in list(self.col_index.get(p, ())):
            qrow = self.pivot_rows[q]
            f = qrow[p]
            for c, v in red.items():
                nv = qrow.get(c, 0) - f * v
                if nv:
                    if c not in qrow:
                        self.col_index.setdefault(c, set()).add(q)
                    qrow[c] = nv
                else:
                    if c in qrow:
                        del qrow[c]
                        self.col_index[c].discard(q)
        self.pivot_rows[p] = red
        for c in red:
            if c != p:
                self.col_index.setdefault(c, set()).add(p)
        self.col_index.pop(p, None)
        return True

    def absorb(self, row):
        return self.absorb_reduced(self.reduce(row))

    def absorb_many(self, rows, threads=1):
        """Absorb a batch; with threads > 1 rows are pre-reduced in parallel
        against the frozen pivots, then inserted serially in order."""
        rows = list(rows)
        if threads <= 1 or len(rows) < 2:
            for r in rows:
                self.absorb(r)
            return
        with ThreadPoolExecutor(max_workers=threads) as ex:
            pre = list(ex.map(self.reduce, rows))
        for r in pre:
            # pivots may have grown since the pre-reduction
            self.absorb_reduced(self._rereduce(r))

    def _rereduce(self, red):
        hits = [c for c in red if c in self.pivot_rows]
        for p in hits:
            f = red.get(p)
            if not f:
                continue
            for c, v in self.pivot_rows[p].items():
                nv = red.get(c, 0) - f * v
                if nv:
                    red[c] = nv
                else:
                    del red[c]
        return red

    def result(self) -> RREF:
        piv = sorted(self.pivot_rows)
        rows = [{c: _to_fraction(v) for c, v in sorted(self.pivot_rows[p].items())} for p in piv]
        return RREF(self.ncols, rows, piv)

    # checkpoints
    def save(self, path, next_index, meta=None):
        header = {"format": "tautrr-echelon", "version": CHECKPOINT_VERSION,
                  "ncols": self.ncols, "next_index": next_index, "rank": self.rank,
                  "meta": meta or {}}
        d = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".ckpt-")
        with os.fdopen(fd, "w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for p in sorted(self.pivot_rows):
                row = self.pivot_rows[p]
                fh.write(json.dumps([[c, "%d/%d" % (int(v.numerator), int(v.denominator))]
                                     for c, v in sorted(row.items())]) + "\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path, expect_meta=None):
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise CheckpointError("empty checkpoint")
        try:
            header = json.loads(lines[0])
        except ValueError as exc:
            raise CheckpointError("unreadable checkpoint header") from exc
        if header.get("format") != "tautrr-echelon" or header.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError("unknown checkpoint format")
        if expect_meta is not None and header.get("meta") != expect_meta:
            raise CheckpointError("checkpoint belongs to a different job")
        ech = cls(header["ncols"])
        body = lines[1:]
        if len(body) != header["rank"]:
            raise CheckpointError("checkpoint truncated")
        for line in body:
            row = {int(c): _to_q(Fraction(v)) for c, v in json.loads(line)}
            p = min(row)
            if row[p] != 1:
                raise CheckpointError("corrupt pivot row")
            ech.pivot_rows[p] = row
            for c in row:
                if c != p:
                    ech.col_index.setdefault(c, set()).add(p)
        return ech, header["next_index"]


class CheckpointError(RuntimeError):
    pass


def rref(matrix: SparseMatrix, threads=1) -> RREF:
    ech = Echelon(matrix.ncols)
    ech.absorb_many(matrix.rows, threads)
    return ech.result()


def dense_rref(dense):
    """Textbook Gauss-Jordan elimination on a dense list of lists."""
    m = [[Fraction(x) for x in r] for r in dense]
    if not m:
        return [], []
    nrows, ncols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        sel = None
        for i in range(r, nrows):
            if m[i][c] != 0:
                sel = i
                break
        if sel is None:
            continue
        m[r], m[sel] = m[sel], m[r]
        lead = m[r][c]
        m[r] = [x / lead for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m[:r], pivots


# ---------------------------------------------------------------------------
# modular prefilter

DEFAULT_PRIME = 4611686018427387847  # largest prime below 2**62


def _mod_row(row, p):
    out = {}
    for c, v in row.items():
        v = Fraction(v)
        x = v.numerator % p * pow(v.denominator % p, -1, p) % p
        if x:
            out[c] = x
    return out


class ModEchelon:
    """Fully reduced echelon form over GF(p)."""

    def __init__(self, ncols, p=DEFAULT_PRIME):
        self.ncols = ncols
        self.p = p
        self.pivot_rows: Dict[int, Dict[int, int]] = {}
        self.col_index: Dict[int, set] = {}

    @property
    def rank(self):
        return len(self.pivot_rows)

    def reduce(self, row):
        p = self.p
        out = dict(row)
        for q in [c for c in out if c in self.pivot_rows]:
            f = out.get(q)
            if not f:
                continue
            for c, v in self.pivot_rows[q].items():
                nv = (out.get(c, 0) - f * v) % p
                if nv:
                    out[c] = nv
                else:
                    out.pop(c, None)
        return out

    def absorb(self, row):
        p = self.p
        red = self.reduce(row)
        if not red:
            return False
        piv = min(red)
        inv = pow(red[piv], -1, p)
        red = {c: v * inv % p for c, v in red.items()}
        for q in list(self.col_index.get(piv, ())):
            qrow = self.pivot_rows[q]
            f = qrow[piv]
            for c, v in red.items():
                nv = (qrow.get(c, 0) - f * v) % p
                if nv:
                    if c not in qrow:
                        self.col_index.setdefault(c, set()).add(q)
                    qrow[c] = nv
                elif c in qrow:
                    del qrow[c]
                    self.col_index[c].discard(q)
        self.pivot_rows[piv] = red
        for c in red:
            if c != piv:
                self.col_index.setdefault(c, set()).add(piv)
        self.col_index.pop(piv, None)
        return True


def modular_select(rows, ncols, p=DEFAULT_PRIME):
    """Indices of rows that are independent of their predecessors mod p.

    Rows independent mod p are independent over the rationals, so the
    selected rows can be replayed exactly.  Rows whose denominators vanish
    mod p are always selected.
    """
    ech = ModEchelon(ncols, p)
    keep = []
    for i, row in enumerate(rows):
        if any(Fraction(v).denominator % p == 0 for v in row.values()):
            keep.append(i)
            continue
        if ech.absorb(_mod_row(row, p)):
            keep.append(i)
    return keep


def rref_modular(rows, ncols, p=DEFAULT_PRIME, check_prime=None):
    """RREF via a modular prefilter and exact replay of the selected rows.

    With ``check_prime`` every discarded row is also reduced modulo that
    second prime against the exact result, as a guard against an unlucky p.
    """
    rows = list(rows)
    keep = modular_select(rows, ncols, p)
    ech = Echelon(ncols)
    for i in keep:
        ech.absorb(rows[i])
    res = ech.result()
    if check_prime is not None:
        kept = set(keep)
        chk = ModEchelon(ncols, check_prime)
        for r in res.rows:
            chk.absorb(_mod_row(r, check_prime))
        for i, row in enumerate(rows):
            if i not in kept and chk.reduce(_mod_row(row, check_prime)):
                raise ArithmeticError("modular prefilter dropped an independent row")
    return res


# ---------------------------------------------------------------------------
# strata-level helpers

def vectors_to_rows(vectors, index):
    rows = []
    for v in vectors:
        row = {}
        for k, c in v.coeffs.items():
            if k not in index:
                raise ValueError("vector has a term outside the basis")
            row[index[k]] = c
        rows.append(row)
    return rows


def kappa_free_relations(res: RREF, basis_keys) -> list:
    """RREF rows supported on the kappa-free block, as strata vectors."""
    from .strata import StrataVector, key_has_kappa
    first_free = next((i for i, k in enumerate(basis_keys) if not key_has_kappa(k)), len(basis_keys))
    basis_keys[0][1] if basis_keys else None
    out = []
    for piv, row in zip(res.pivots, res.rows):
        if piv >= first_free:
            vec = StrataVector(_genus_of(basis_keys[piv]), len(basis_keys[piv][3]))
            for c, v in row.items():
                vec.add_term(basis_keys[c], v)
            out.append(vec)
    return out


def _genus_of(key):
    ne, genera, _, _, _ = key
    return sum(genera) + ne - len(genera) + 1


def solve_for(target, relations, allowed=None, columns=None):
    """Express ``target`` modulo ``relations``.

    Columns are ordered as: everything else, then the target, then the
    ``allowed`` keys (in the given order).  The RREF row whose pivot is the
    target then writes it in terms of allowed strata whenever that is
    possible.  Without ``allowed`` the target is put first, so it is written
    in the non-pivot strata.  Returns a StrataVector for the right hand side
    (target = result) or None.
    """
    from .strata import StrataVector, key_sort
    relations = list(relations)
    if not relations:
        return None
    g, n = relations[0].g, relations[0].n
    support = set()
    for v in relations:
        support.update(v.coeffs)
    if target not in support:
        return None
    if allowed is not None:
        allowed = [k for k in allowed]
        aset = set(allowed)
        others = sorted((k for k in support if k != target and k not in aset), key=key_sort)
        cols = others + [target] + allowed
    else:
        others = sorted((k for k in support if k != target), key=key_sort)
        cols = [target] + others
    index = {k: i for i, k in enumerate(cols)}
    tcol = index[target]
    if allowed is None:
        rows = vectors_to_rows(relations, index)
        res = rref_modular(rows, len(cols)) if len(rows) > 50 else rref(SparseMatrix(len(cols), rows))
    else:
        rows = vectors_to_rows(relations, index)
        res = rref_modular(rows, len(cols)) if len(rows) > 50 else rref(SparseMatrix(len(cols), rows))
    for piv, row in zip(res.pivots, res.rows):
        if piv == tcol:
            if allowed is not None and any(c < tcol for c in row):
                return None
            if allowed is not None and any(c != tcol and cols[c] not in aset for c in row):
                return None
            out = StrataVector(g, n)
            for c, v in row.items():
                if c != tcol:
                    out.add_term(cols[c], -v)
            return out
    return None


def membership(candidate, res: RREF, index) -> bool:
    """True when ``candidate`` lies in the row space described by ``res``."""
    row = {}
    for k, c in candidate.coeffs.items():
        if k not in index:
            raise ValueError("candidate has a term outside the basis")
        row[index[k]] = c
    return not res.reduce(row)
