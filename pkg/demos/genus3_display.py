"""Genus-3 identity for T^6: the full splitting sum verifies, two terms alone do not.

Intersection numbers give a quick independent check: multiply by psi_1 and
integrate, reading every correlator product as a boundary stratum.
"""
import os
from fractions import Fraction
from functools import lru_cache

from tautrr.gwcalc import DATA_DIR, CorrelatorExpr, psi_power_identity, read_expression_file, verify_identity


def dfact(k):
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


@lru_cache(maxsize=None)
def wk(g, ds):
    # <tau_d1 ... tau_dn>_g from the string equation and the DVV recursion
    ds = tuple(sorted(ds))
    n = len(ds)
    if g < 0 or 2 * g - 2 + n <= 0 or min(ds, default=0) < 0 or sum(ds) != 3 * g - 3 + n:
        return Fraction(0)
    if (g, ds) == (0, (0, 0, 0)):
        return Fraction(1)
    if (g, ds) == (1, (1,)):
        return Fraction(1, 24)
    if ds[0] == 0:
        rest = ds[1:]
        return sum((wk(g, rest[:j] + (d - 1,) + rest[j + 1:]) for j, d in enumerate(rest) if d),
                   Fraction(0))
    k, rest = ds[-1] - 1, ds[:-1]
    res = Fraction(0)
    for j, d in enumerate(rest):
        res += Fraction(dfact(2 * k + 2 * d + 1), dfact(2 * d - 1)) * wk(g, rest[:j] + (d + k,) + rest[j + 1:])
    for r in range(k):
        c = Fraction(dfact(2 * r + 1) * dfact(2 * (k - 1 - r) + 1), 2)
        res += c * wk(g - 1, (r, k - 1 - r) + rest)
        for mask in range(1 << len(rest)):
            I = tuple(x for i, x in enumerate(rest) if mask >> i & 1)
            J = tuple(x for i, x in enumerate(rest) if not mask >> i & 1)
            for g1 in range(g + 1):
                res += c * wk(g1, (r,) + I) * wk(g - g1, (k - 1 - r,) + J)
    return res / dfact(2 * k + 3)


def integrate(expr, extra):
    total = Fraction(0)
    for (ne, genera, _, legs, edges), c in expr.items():
        per = [[] for _ in genera]
        per[legs[0][0]].append(legs[0][1] + extra)
        for a, b, pa, pb in edges:
            per[a].append(pa)
            per[b].append(pb)
        term = c
        for g, ds in zip(genera, per):
            term *= wk(g, tuple(ds))
        total += term
    return total


sec = read_expression_file(os.path.join(DATA_DIR, "g3_identity.txt"))
lhs, two = CorrelatorExpr.parse(sec["lhs"]), CorrelatorExpr.parse(sec["rhs"])
_, full = psi_power_identity(3, 0)

print("two terms:", two.to_text())
print("full sum: ", full.to_text())
print("verify two terms:", verify_identity(lhs, two)[0])
print("verify full sum: ", verify_identity(lhs, full)[0])
print("integrals against psi_1:", integrate(lhs, 1), integrate(two, 1), integrate(full, 1))
