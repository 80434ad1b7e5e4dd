"""Acceptance criteria 1-9, one test each; conftest prints one line per criterion.

Criterion 8 is long.  It runs in full when TAUTRR_LONG=1 or when a finished
run is already cached (TAUTRR_CACHE, default .tautrr-cache at the repo root);
otherwise it checks membership against whatever partial row space is
checkpointed there and reports the coverage.
"""
import json
import os
import random
import time
from fractions import Fraction

import pytest

from conftest import record
from tautrr.cli import JobConfig, load_cached, main
from tautrr.gwcalc import (
    DATA_DIR, CorrelatorExpr, default_rules, normal_form, psi_power_identity,
    read_expression_file, reduce, translate, verify_identity,
)
from tautrr.series import identity_defect

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
P = CorrelatorExpr.parse

# time limits in seconds; "minutes" is read as ten minutes
LIMIT = {1: 1.0, 2: 10.0, 3: 10.0, 4: 600.0, 5: 3600.0, 6: 600.0, 7: 3600.0}


def data(name):
    return read_expression_file(os.path.join(DATA_DIR, name))


def printed_terms(name):
    """[(key, coefficient)] in the order of the data file."""
    with open(os.path.join(DATA_DIR, name)) as fh:
        lines = fh.read().splitlines()
    body = lines[lines.index("[rhs]") + 1:]
    out = []
    for line in body:
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("["):
            break
        e = P(line, legs=("W",))
        assert len(e) == 1, line
        out.extend(e.items())
    return out


def derive(tmp_path, *args):
    out = tmp_path / "derive.json"
    code = main(["derive", "--output", str(out)] + list(args))
    assert code == 0
    return json.loads(out.read_text())["payload"]


def derived_expr(payload):
    from tautrr.cli import vector_from_payload
    return translate(vector_from_payload(payload["relation"]))


def check(num, ok, detail):
    record(num, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------

def test_criterion_1_series_identity():
    t = time.time()
    defect = identity_defect(50)
    dt = time.time() - t
    ok = len(defect) == 51 and all(c == 0 for c in defect) and dt < LIMIT[1]
    check(1, ok, "A(T)B(-T)+A(-T)B(T)+2 = 0 through T^50, exact, %.3fs (limit %gs)" % (dt, LIMIT[1]))


def test_criterion_2_graph_counts():
    from oracles import brute_stable_graphs
    from tautrr.graphs import enumerate_stable_graphs
    t = time.time()
    pairs = [(g, n) for g in range(3) for n in range(8)
             if 2 * g - 2 + n > 0 and 3 * g - 3 + n <= 4]
    bad = [(g, n) for g, n in pairs
           if len(enumerate_stable_graphs(g, n)) != len(brute_stable_graphs(g, n))]
    known = len(enumerate_stable_graphs(1, 1)) == 2 and len(enumerate_stable_graphs(2, 0)) == 7
    dt = time.time() - t
    check(2, not bad and known and dt < LIMIT[2],
          "%d pairs (g,n) with 3g-3+n<=4 match brute force, mismatches %s, (1,1)->2 and (2,0)->7: %s, "
          "%.1fs (limit %gs)" % (len(pairs), bad, known, dt, LIMIT[2]))


def test_criterion_3_genus1(tmp_path):
    t = time.time()
    payload = derive(tmp_path, "--g", "1", "--n", "1")
    dt = time.time() - t
    got = derived_expr(payload)
    want = P("1/24 <<W g^alpha g_alpha>>_0")
    check(3, got == want and dt < LIMIT[3],
          "<<T(W)>>_1 = %s, %.1fs (limit %gs)" % (got.to_text(), dt, LIMIT[3]))


def test_criterion_4_genus2(tmp_path):
    want = [c for _, c in printed_terms("genus2.txt")]
    assert want == [Fraction(7, 10), Fraction(1, 10), Fraction(-1, 240), Fraction(13, 240),
                    Fraction(1, 960)]
    lines = []
    ok = True
    for variant in ("printed", "per-vertex"):
        t = time.time()
        payload = derive(tmp_path, "--g", "2", "--n", "1", "--r", "2", "--kappa-variant", variant)
        dt = time.time() - t
        got = derived_expr(payload)
        vec = [got.coeffs.get(k, 0) for k, _ in printed_terms("genus2.txt")]
        this = vec == want and len(got) == len(want) and dt < LIMIT[4]
        ok = ok and this
        lines.append("%s: %s in %.1fs" % (variant, "[" + ", ".join(map(str, vec)) + "]", dt))
    check(4, ok, "; ".join(lines) + " (limit %gs)" % LIMIT[4])


def test_criterion_5_genus3(tmp_path):
    t = time.time()
    payload = derive(tmp_path, "--g", "3", "--n", "1", "--r", "3", "--support", "genus3")
    dt = time.time() - t
    got = derived_expr(payload)
    terms = printed_terms("genus3.txt")
    wrong = [(str(c), str(got.coeffs.get(k, 0))) for k, c in terms if got.coeffs.get(k, 0) != c]
    spots = [Fraction(41, 21), Fraction(-13, 168), Fraction(1, 53760), Fraction(1, 3780)]
    spot_ok = all(s in got.coeffs.values() for s in spots)
    ok = not wrong and len(got) == len(terms) and spot_ok and dt < LIMIT[5]
    check(5, ok, "%d/%d printed coefficients reproduced, spot values 41/21, -13/168, 1/53760, "
                 "1/3780 present: %s, %.0fs (limit %gs)"
          % (len(terms) - len(wrong), len(terms), spot_ok, dt, LIMIT[5]))


def test_criterion_6_theorem_genus2():
    from tautrr.linalg import membership, rref_modular, vectors_to_rows
    from tautrr.pixton import iter_relation_rows
    from tautrr.strata import basis_index, basis_keys
    t = time.time()
    keys, index = basis_keys(2, 1, 4), basis_index(2, 1, 4)
    res = rref_modular(vectors_to_rows(iter_relation_rows(2, 1, 4), index), len(keys))
    lhs, rhs = psi_power_identity(2, 0)
    member = membership(lhs.to_strata(2) - rhs.to_strata(2), res, index)
    sec = data("g2_identity.txt")
    plhs, prhs, normal = P(sec["lhs"]), P(sec["rhs"]), P(sec["normal"])
    holds, _ = verify_identity(plhs, prhs)
    common = normal_form(plhs, prefer=normal) == normal == normal_form(prhs, prefer=normal)
    coeff = list(normal.coeffs.values()) == [Fraction(1, 1152)]
    # negative control: a perturbed genus-1 coefficient must break it
    bad = default_rules().perturbed(1, Fraction(24, 23))
    control = not verify_identity(plhs, prhs, rules=bad)[0]
    dt = time.time() - t
    ok = member and holds and common and coeff and control and dt < LIMIT[6]
    check(6, ok, "membership on (2,1,4): %s (rank %d of %d); verify: %s; both sides -> "
                 "1/1152 <<D D W>>_0: %s; 1/24 -> 1/23 breaks it: %s; %.0fs (limit %gs)"
          % (member, res.rank, len(keys), holds, common and coeff, control, dt, LIMIT[6]))


def test_criterion_7_theorem_genus3():
    t = time.time()
    lhs, rhs = psi_power_identity(3, 0)
    holds, _ = verify_identity(lhs, rhs)
    sec = data("g3_identity.txt")
    normal = P(sec["normal"])
    want = [Fraction(7, 5760), Fraction(11, 2903040), Fraction(19, 967680),
            Fraction(1, 120960), Fraction(1, 60480), Fraction(1, 11520)]
    coeffs = sorted(normal.coeffs.values()) == sorted(want)
    target = normal_form(normal, prefer=normal)
    matches = normal_form(lhs, prefer=normal) == target == normal_form(rhs, prefer=normal)
    literal, _ = verify_identity(P(sec["lhs"]), P(sec["rhs"]))
    dt = time.time() - t
    ok = holds and coeffs and matches and dt < LIMIT[7]
    check(7, ok, "verify on the general splitting formula at g=3, r=0: %s; common normal form "
                 "equals that of the printed 6-term expression: %s; coefficients as printed: %s; "
                 "two-term display alone verifies: %s (see ledger); %.1fs (limit %gs)"
          % (holds, matches, coeffs, literal, dt, LIMIT[7]))


def test_criterion_8_genus4(tmp_path):
    cache = os.environ.get("TAUTRR_CACHE") or os.path.join(ROOT, ".tautrr-cache")
    argv = ["--g", "4", "--n", "1", "--r", "4", "--support", "genus4", "--cache-dir", cache,
            "--checkpoint-every", "200"]
    cfg = JobConfig(command="derive", g=4, n=1, r=4, support="genus4", cache_dir=cache)
    terms = printed_terms("genus4.txt")
    if os.environ.get("TAUTRR_LONG") == "1" or load_cached(cfg) is not None:
        t = time.time()
        payload = derive(tmp_path, *argv)
        dt = time.time() - t
        got = derived_expr(payload)
        wrong = [k for k, c in terms if got.coeffs.get(k, 0) != c]
        first = got.coeffs.get(terms[0][0]) == Fraction(-1, 20)
        last = got.coeffs.get(terms[-1][0]) == Fraction(1, 3870720)
        ok = not wrong and len(got) == len(terms) and first and last
        check(8, ok, "derived (4,1,4) relation on the printed support: %d/%d coefficients equal, "
                     "first -1/20: %s, last 1/3870720: %s; rows %s, rank %s of %s; %.0fs "
                     "(cached runs are reused)"
              % (len(terms) - len(wrong), len(terms), first, last, payload["rows"],
                 payload["rank"], payload["basis"], dt))
        return
    # fallback: the checkpointed partial row space
    from tautrr.linalg import Echelon, membership
    from tautrr.strata import basis_index, basis_keys
    ckpt = [f for f in os.listdir(cache) if f.startswith("ckpt-") and f.endswith("-r4.json")] \
        if os.path.isdir(cache) else []
    if not ckpt:
        record(8, None, "not run: no cached or checkpointed (4,1,4) row space; set TAUTRR_LONG=1")
        pytest.skip("genus-4 derivation is long; set TAUTRR_LONG=1")
    ech, nrows = Echelon.load(os.path.join(cache, ckpt[0]))
    index = basis_index(4, 1, 4)
    cand = P("<<T^4(W)>>_4").to_strata(4) - P(data("genus4.txt")["rhs"]).to_strata(4)
    member = membership(cand, ech.result(), index)
    record(8, True if member else None,
           "partial row space from checkpoint: %d rows absorbed, rank %d of %d; printed "
           "relation in span: %s" % (nrows, ech.rank, len(basis_keys(4, 1, 4)), member))
    if not member:
        pytest.skip("partial coverage only")


def test_criterion_9_properties():
    from tautrr.graphs import automorphism_count, enumerate_stable_graphs
    from tautrr.linalg import SparseMatrix, rref
    from tautrr.strata import StrataVector, basis_keys, fundamental_class, pushforward
    results = {}
    rng = random.Random(7)

    # RREF determinism across thread counts, and idempotence
    ok_det = ok_idem = True
    for _ in range(30):
        nr, nc = rng.randint(1, 12), rng.randint(1, 9)
        dense = [[Fraction(rng.randint(-3, 3), rng.randint(1, 3)) if rng.random() < .6 else 0
                  for _ in range(nc)] for _ in range(nr)]
        m = SparseMatrix.from_dense(dense)
        a = rref(m)
        for th in (2, 4, 8):
            b = rref(m, threads=th)
            ok_det &= a.rows == b.rows and a.pivots == b.pivots
        c = rref(SparseMatrix(a.ncols, a.rows))
        ok_idem &= c.rows == a.rows and c.pivots == a.pivots
    results["rref thread determinism"] = ok_det
    results["rref idempotence"] = ok_idem

    # pushforward linearity and fundamental class
    inner = basis_keys(0, 4, 1)
    loop = [x for x in enumerate_stable_graphs(1, 2) if x.n_edges == 1 and x.n_vertices == 1][0]
    ok_lin = True
    for _ in range(20):
        a = StrataVector(0, 4, {k: rng.randint(-4, 4) for k in rng.sample(inner, 2)})
        b = StrataVector(0, 4, {k: rng.randint(-4, 4) for k in rng.sample(inner, 2)})
        lam = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        ok_lin &= pushforward(a + b.scale(lam), loop, 0) == \
            pushforward(a, loop, 0) + pushforward(b, loop, 0).scale(lam)
    results["pushforward linearity"] = ok_lin
    ok_fund = True
    for gr in enumerate_stable_graphs(2, 1):
        for v in range(gr.n_vertices):
            out = pushforward(fundamental_class(gr.genera[v], len(gr.half_edges_at(v))), gr, v)
            ok_fund &= list(out.coeffs.values()) == [1]
    results["fundamental class normalization"] = ok_fund

    # canonical form idempotence and automorphism invariance
    from test_graphs import _relabel
    ok_can = True
    for g, n in [(1, 3), (2, 1), (2, 2), (3, 0)]:
        for gr in enumerate_stable_graphs(g, n):
            for _ in range(3):
                h = _relabel(gr, rng)
                ok_can &= h.key() == gr.key()
                ok_can &= automorphism_count(h) == automorphism_count(gr)
            c = gr.canonical()
            ok_can &= c.canonical() == c and c.key() == gr.key()
    results["canonical form idempotence and invariance"] = ok_can

    # rewriter invariance under index renaming and slot permutation
    a = P("<<T(g^alpha) W g^beta>>_0 <<g_alpha T^2(g_beta)>>_2")
    b = P("<<T^2(g_mu) g^nu>>_2 <<T(g_nu) g^mu W>>_0")
    c = P("<<g_beta T(g_alpha) W>>_0 <<T^2(g^beta) g^alpha>>_2")
    results["rewriter renaming and slot invariance"] = a == b == c and reduce(a) == reduce(b)

    # confluence on the corpus: random redex choices give the same normal form
    corpus = [P("<<T(W)>>_1"), P("<<T^2(W)>>_2"), P("<<T^3(W)>>_3"),
              P(data("g2_identity.txt")["lhs"]), P(data("g2_identity.txt")["rhs"]),
              P(data("g3_identity.txt")["lhs"]), P(data("g3_identity.txt")["normal"]),
              psi_power_identity(3, 0)[1]]
    ok_conf = all(normal_form(e, rng=random.Random(s)) == normal_form(e)
                  for e in corpus for s in range(4))
    results["confluence on the corpus"] = ok_conf

    # perturbation sensitivity
    bad = default_rules().perturbed(1, Fraction(24, 23))
    sec = data("g2_identity.txt")
    results["perturbation 1/24 -> 1/23 breaks criterion 6"] = \
        not verify_identity(P(sec["lhs"]), P(sec["rhs"]), rules=bad)[0]

    failed = [k for k, v in results.items() if not v]
    check(9, not failed, "%d/%d property checks hold%s (full suites in the other test files)"
          % (len(results) - len(failed), len(results),
             "; failed: " + ", ".join(failed) if failed else ""))
