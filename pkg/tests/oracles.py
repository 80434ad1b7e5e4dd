"""Slow, independent reference implementations used only by the tests."""
import itertools
from fractions import Fraction


def _brute_canon(genera, legs, edges):
    """Minimum over every vertex permutation; no refinement tricks."""
    V = len(genera)
    best = None
    for perm in itertools.permutations(range(V)):
        # perm[old] = new
        gg = [None] * V
        for old, new in enumerate(perm):
            gg[new] = genera[old]
        ee = sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges)
        ll = tuple(perm[v] for v in legs)
        cand = (tuple(gg), ll, tuple(ee))
        if best is None or cand < best:
            best = cand
    return best


def brute_canon_of(graph):
    return _brute_canon(graph.genera, graph.legs, graph.edges)


def _connected(V, edges):
    seen = {0}
    todo = [0]
    while todo:
        x = todo.pop()
        for a, b in edges:
            for u, w in ((a, b), (b, a)):
                if u == x and w not in seen:
                    seen.add(w)
                    todo.append(w)
    return len(seen) == V


def brute_stable_graphs(g, n):
    """Set of brute-force canonical forms of stable graphs of type (g, n).

    Unlabelled shapes (genera and edges) are deduplicated by trying every
    vertex permutation; legs are then normalised under the permutations
    fixing the shape."""
    out = set()
    for V in range(1, max(1, 2 * g - 2 + n) + 1):
        pairs = [(a, b) for a in range(V) for b in range(a, V)]
        shapes = {}
        for genera in itertools.product(range(g + 1), repeat=V):
            h1 = g - sum(genera)
            if h1 < 0:
                continue
            for edges in itertools.combinations_with_replacement(pairs, V - 1 + h1):
                if _connected(V, edges):
                    c = _brute_canon(genera, (), edges)
                    shapes.setdefault(c, (genera, edges))
        for genera, edges in shapes.values():
            base = (tuple(genera), tuple(sorted(edges)))
            sym = []
            for perm in itertools.permutations(range(V)):
                gg = tuple(genera[perm.index(x)] for x in range(V))
                ee = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
                if (gg, ee) == base:
                    sym.append(perm)
            deg = [0] * V
            for a, b in edges:
                deg[a] += 1
                deg[b] += 1
            for legs in itertools.product(range(V), repeat=n):
                val = list(deg)
                for v in legs:
                    val[v] += 1
                if all(2 * genera[v] - 2 + val[v] > 0 for v in range(V)):
                    ll = min(tuple(perm[v] for v in legs) for perm in sym)
                    out.add((base, ll))
    return out


def brute_aut(genera, legs, edges):
    """Automorphisms as permutations of half-edges commuting with the
    edge involution, inducing a vertex map and fixing every leg."""
    hv = []      # vertex of each half-edge
    mate = []
    for a, b in edges:
        i = len(hv)
        hv.extend([a, b])
        mate.extend([i + 1, i])
    H = len(hv)
    V = len(genera)
    count = 0
    for vperm in itertools.permutations(range(V)):
        if any(genera[vperm[v]] != genera[v] for v in range(V)):
            continue
        if any(vperm[v] != v for v in legs):
            continue
        for hperm in itertools.permutations(range(H)):
            if all(hv[hperm[h]] == vperm[hv[h]] and hperm[mate[h]] == mate[hperm[h]]
                   for h in range(H)):
                count += 1
    return count


def brute_decorations(genera, legs, edges, d, kappa=True):
    """All decorations of degree d as hashable raw tuples (not deduplicated)."""
    V = len(genera)
    nh = len(legs) + 2 * len(edges)
    dims = [3 * genera[v] - 3 for v in range(V)]
    for v in legs:
        dims[v] += 1
    for a, b in edges:
        dims[a] += 1
        dims[b] += 1
    slots = [("L", i) for i in range(len(legs))] + [("H", e, s) for e in range(len(edges)) for s in (0, 1)]

    def parts(k):
        if k == 0:
            yield ()
            return
        for first in range(k, 0, -1):
            for rest in parts(k - first):
                if not rest or rest[0] <= first:
                    yield (first,) + rest

    kap_opts = []
    for v in range(V):
        opts = []
        for k in range(d + 1 if kappa else 1):
            opts.extend(parts(k))
        kap_opts.append(opts)
    for kap in itertools.product(*kap_opts):
        kd = sum(sum(p) for p in kap)
        if kd > d:
            continue
        for ps in itertools.product(range(d - kd + 1), repeat=nh):
            if sum(ps) != d - kd:
                continue
            vdeg = [sum(kap[v]) for v in range(V)]
            for (slot, p) in zip(slots, ps):
                if slot[0] == "L":
                    vdeg[legs[slot[1]]] += p
                else:
                    e, s = slot[1], slot[2]
                    vdeg[edges[e][s]] += p
            if any(vdeg[v] > dims[v] for v in range(V)):
                continue
            yield kap, ps


def _dfact(k):
    # double factorial, with (-1)!! = 1
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


_WK = {}


def wk(g, ds):
    """Witten-Kontsevich number <tau_d1 ... tau_dn>_g by string equation
    and the DVV recursion."""
    ds = tuple(sorted(ds))
    n = len(ds)
    if g < 0 or 2 * g - 2 + n <= 0 or any(d < 0 for d in ds):
        return Fraction(0)
    if sum(ds) != 3 * g - 3 + n:
        return Fraction(0)
    key = (g, ds)
    if key in _WK:
        return _WK[key]
    if (g, ds) == (0, (0, 0, 0)):
        res = Fraction(1)
    elif (g, ds) == (1, (1,)):
        res = Fraction(1, 24)
    elif ds[0] == 0:
        rest = ds[1:]
        res = Fraction(0)
        for j, d in enumerate(rest):
            if d > 0:
                res += wk(g, rest[:j] + (d - 1,) + rest[j + 1:])
    else:
        k = ds[-1] - 1
        rest = ds[:-1]
        res = Fraction(0)
        for j, d in enumerate(rest):
            res += Fraction(_dfact(2 * k + 2 * d + 1), _dfact(2 * d - 1)) * \
                wk(g, rest[:j] + (d + k,) + rest[j + 1:])
        for r in range(k):
            s = k - 1 - r
            c = Fraction(_dfact(2 * r + 1) * _dfact(2 * s + 1), 2)
            res += c * wk(g - 1, (r, s) + rest)
            m = len(rest)
            for mask in range(1 << m):
                I = tuple(rest[i] for i in range(m) if mask >> i & 1)
                J = tuple(rest[i] for i in range(m) if not mask >> i & 1)
                for g1 in range(g + 1):
                    res += c * wk(g1, (r,) + I) * wk(g - g1, (s,) + J)
        res /= _dfact(2 * k + 3)
    _WK[key] = res
    return res


def wk_kappa(g, ds, bs):
    """<kappa_b1 ... kappa_bm tau_d1 ... tau_dn>_g.

    The last kappa is pushed down from one more point, and the pullback of
    kappa_b is kappa_b - psi^b of the new point; pulled back psi agree with
    psi once multiplied by a positive power of the new psi.
    """
    if not bs:
        return wk(g, ds)
    *rest, last = bs
    out = Fraction(0)
    for mask in range(1 << len(rest)):
        keep = [b for i, b in enumerate(rest) if not mask >> i & 1]
        moved = sum(b for i, b in enumerate(rest) if mask >> i & 1)
        sign = (-1) ** bin(mask).count("1")
        out += sign * wk_kappa(g, tuple(ds) + (last + 1 + moved,), tuple(keep))
    return out


def integrate_key(key, extra_leg_psi=None):
    """Degree of a decorated stratum xi_*(prod kappa psi), optionally
    multiplied by extra psi powers on the legs (pulled back to the vertex)."""
    ne, genera, kappas, legs, edges = key
    per = [[] for _ in genera]
    for i, (v, p) in enumerate(legs):
        extra = extra_leg_psi[i] if extra_leg_psi else 0
        per[v].append(p + extra)
    for a, b, pa, pb in edges:
        per[a].append(pa)
        per[b].append(pb)
    out = Fraction(1)
    for g, ds, ks in zip(genera, per, kappas):
        out *= wk_kappa(g, tuple(ds), tuple(ks))
    return out


def integrate(vec):
    return sum((c * integrate_key(k) for k, c in vec.coeffs.items()), Fraction(0))
