"""Command line interface.

Every output is a JSON document ``{"job": ..., "version": ..., "payload": ...}``
where ``job`` is the validated JobConfig.  Exit codes: 0 success or pass,
1 failed verification, 2 invalid input, 3 internal inconsistency.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import List, Optional

from . import __version__
from .graphs import UnstableError, automorphism_count, check_stable_pair, enumerate_stable_graphs
from .linalg import (
    CheckpointError, Echelon, ModEchelon, _mod_row, kappa_free_relations, solve_for, vectors_to_rows,
)
from .series import DivisionError, KAPPA_VARIANTS
from .strata import DecoratedStratum, StrataVector, basis_keys, basis_index, decode_code, psi_power
from .pixton import PixtonInput, iter_relation_rows, pixton_relation

log = logging.getLogger("tautrr")

CACHE_ENV = "TAUTRR_CACHE"

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(ValueError):
    pass


@dataclass
class JobConfig:
    command: str
    g: Optional[int] = None
    n: Optional[int] = None
    r: Optional[int] = None
    sigma: List[int] = field(default_factory=list)
    a: List[int] = field(default_factory=list)
    input: Optional[str] = None
    support: Optional[str] = None
    output: Optional[str] = None
    cache_dir: Optional[str] = None
    checkpoint_every: int = 0
    threads: int = 1
    kappa_variant: str = "printed"
    delta_reading: str = "alt"

    def validate(self):
        if self.kappa_variant not in KAPPA_VARIANTS:
            raise InputError("unknown kappa variant %r" % self.kappa_variant)
        from .gwcalc.expr import DELTA_READINGS
        if self.delta_reading not in DELTA_READINGS:
            raise InputError("unknown Delta reading %r" % self.delta_reading)
        if self.threads < 1 or self.checkpoint_every < 0:
            raise InputError("threads must be >= 1 and checkpoint interval >= 0")
        if self.command in ("graphs", "basis", "pixton", "derive", "rank"):
            if self.g is None or self.n is None:
                raise InputError("--g and --n are required")
            try:
                check_stable_pair(self.g, self.n)
            except UnstableError as exc:
                raise InputError(str(exc))
        if self.command in ("basis", "pixton", "rank") and self.r is None:
            raise InputError("--r is required")
        if self.r is not None and self.g is not None and \
                not 0 <= self.r <= 3 * self.g - 3 + self.n:
            raise InputError("r must lie between 0 and 3g - 3 + n")
        if self.command in ("translate", "verify") and not self.input:
            raise InputError("--input is required")
        return self

    def provenance(self):
        # paths and resources do not change the mathematics
        d = asdict(self)
        for k in ("output", "cache_dir", "checkpoint_every", "threads"):
            d.pop(k)
        return d

    def cache_key(self):
        blob = json.dumps([self.provenance(), __version__], sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:24]


# ---------------------------------------------------------------------------
# io helpers

def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def document(cfg: JobConfig, payload):
    return {"job": cfg.provenance(), "version": __version__, "payload": payload}


def emit(cfg: JobConfig, payload):
    text = json.dumps(document(cfg, payload), indent=1, sort_keys=True) + "\n"
    if cfg.output:
        atomic_write(cfg.output, text)
    else:
        sys.stdout.write(text)


def cache_dir(cfg: JobConfig):
    d = cfg.cache_dir or os.environ.get(CACHE_ENV)
    if d:
        os.makedirs(d, exist_ok=True)
    return d


def load_cached(cfg):
    d = cache_dir(cfg)
    if not d:
        return None
    path = os.path.join(d, "%s-%s.json" % (cfg.command, cfg.cache_key()))
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError):
        return None
    if doc.get("version") != __version__ or doc.get("job") != cfg.provenance():
        return None
    return doc["payload"]


def store_cached(cfg, payload):
    d = cache_dir(cfg)
    if d:
        path = os.path.join(d, "%s-%s.json" % (cfg.command, cfg.cache_key()))
        atomic_write(path, json.dumps(document(cfg, payload), sort_keys=True))


def frac(c):
    c = Fraction(c)
    return "%d/%d" % (c.numerator, c.denominator)


def vector_payload(vec: StrataVector):
    return {"g": vec.g, "n": vec.n,
            "terms": [{"code": DecoratedStratum(k).code(), "coeff": frac(c),
                       "stratum": DecoratedStratum(k).to_json()} for k, c in vec.items()]}


def vector_from_payload(obj):
    vec = StrataVector(int(obj["g"]), int(obj["n"]))
    for t in obj["terms"]:
        vec.add_term(decode_code(t["code"]), Fraction(t["coeff"]))
    return vec


# ---------------------------------------------------------------------------
# commands

def cmd_graphs(cfg):
    graphs = enumerate_stable_graphs(cfg.g, cfg.n)
    recs = []
    for gr in graphs:
        rec = gr.to_json()
        rec["code"] = gr.code().hex()
        rec["aut"] = automorphism_count(gr)
        rec["edges_count"] = gr.n_edges
        recs.append(rec)
    emit(cfg, {"count": len(recs), "graphs": recs})
    return EXIT_OK


def cmd_basis(cfg):
    keys = basis_keys(cfg.g, cfg.n, cfg.r)
    recs = []
    for k in keys:
        s = DecoratedStratum(k)
        rec = s.to_json()
        rec["code"] = s.code()
        recs.append(rec)
    emit(cfg, {"count": len(recs), "kappa_free": sum(1 for k in keys if not any(k[2])),
               "basis": recs})
    return EXIT_OK


def cmd_pixton(cfg):
    inp = PixtonInput(cfg.g, cfg.n, cfg.r, tuple(cfg.sigma), tuple(cfg.a) if cfg.a else None)
    try:
        inp.validate()
    except ValueError as exc:
        raise InputError(str(exc))
    vec = pixton_relation(inp, cfg.kappa_variant)
    emit(cfg, {"sigma": list(inp.sigma), "a": list(inp.a), "relation": vector_payload(vec)})
    return EXIT_OK


def _row_space(cfg, r):
    """Fully reduced relation matrix at (g, n, r), with checkpoints.

    Rows that are dependent modulo a large prime are skipped before the
    exact elimination, as in rref_modular.
    """
    g, n = cfg.g, cfg.n
    keys = basis_keys(g, n, r)
    index = basis_index(g, n, r)
    d = cache_dir(cfg)
    meta = {"job": cfg.provenance(), "r": r, "version": __version__}
    ckpt = None
    start = 0
    ech = Echelon(len(keys))
    if d and cfg.checkpoint_every:
        ckpt = os.path.join(d, "ckpt-%s-r%d.json" % (cfg.cache_key(), r))
        if os.path.exists(ckpt):
            ech, start = Echelon.load(ckpt, expect_meta=meta)
            log.info("resuming at row %d (rank %d)", start, ech.rank)
    screen = ModEchelon(len(keys))
    for row in ech.result().rows:
        screen.absorb(_mod_row(row, screen.p))
    batch = []
    i = -1
    for i, vec in enumerate(iter_relation_rows(g, n, r, cfg.kappa_variant)):
        if i < start:
            continue
        row = vectors_to_rows([vec], index)[0]
        if any(Fraction(v).denominator % screen.p == 0 for v in row.values()) \
                or screen.absorb(_mod_row(row, screen.p)):
            batch.append(row)
        if cfg.checkpoint_every and (i + 1) % cfg.checkpoint_every == 0:
            ech.absorb_many(batch, cfg.threads)
            batch = []
            if ckpt:
                ech.save(ckpt, i + 1, meta)
                log.info("checkpoint at row %d (rank %d)", i + 1, ech.rank)
    ech.absorb_many(batch, cfg.threads)
    if ckpt:
        ech.save(ckpt, i + 1, meta)
    return keys, ech.result(), i + 1


def cmd_rank(cfg):
    keys, res, nrows = _row_space(cfg, cfg.r)
    kf = kappa_free_relations(res, keys)
    emit(cfg, {"basis": len(keys), "rows": nrows, "rank": res.rank,
               "kappa_free_relations": len(kf)})
    return EXIT_OK


def _support_keys(cfg):
    from .gwcalc.expr import CorrelatorExpr, read_expression_file
    sec = read_expression_file(_resolve_data(cfg.support))
    text = sec.get("rhs") or next(iter(sec.values()))
    expr = CorrelatorExpr.parse(text, delta=cfg.delta_reading)
    return [k for k, _ in expr.items()]


def cmd_derive(cfg):
    if cfg.r is None:
        cfg.r = cfg.g
        cfg.validate()
    cached = load_cached(cfg)
    if cached is not None:
        emit(cfg, cached)
        return EXIT_OK
    t0 = time.time()
    keys, res, nrows = _row_space(cfg, cfg.r)
    kf = kappa_free_relations(res, keys)
    target = psi_power(cfg.g, cfg.n, [cfg.r] + [0] * (cfg.n - 1))
    allowed = _support_keys(cfg) if cfg.support else None
    sol = solve_for(target, kf, allowed=allowed)
    payload = {"basis": len(keys), "rows": nrows, "rank": res.rank,
               "kappa_free_relations": len(kf),
               "target": DecoratedStratum(target).code(),
               "solved": sol is not None}
    if sol is not None:
        payload["relation"] = vector_payload(sol)
        if cfg.n == 1:
            from .gwcalc.calculus import translate
            payload["correlators"] = "%s = %s" % (_key_text(target, 1), translate(sol).to_text())
    log.info("derive finished in %.1fs", time.time() - t0)
    store_cached(cfg, payload)
    emit(cfg, payload)
    return EXIT_OK if sol is not None else EXIT_FAIL


def _resolve_data(path):
    if os.path.exists(path):
        return path
    from .gwcalc.calculus import DATA_DIR
    for cand in (os.path.join(DATA_DIR, path), os.path.join(DATA_DIR, path + ".txt")):
        if os.path.exists(cand):
            return cand
    raise InputError("no such file: %s" % path)


def cmd_translate(cfg):
    from .gwcalc.calculus import translate
    with open(_resolve_data(cfg.input)) as fh:
        doc = json.load(fh)
    payload = doc.get("payload", doc)
    rel = payload.get("relation", payload)
    vec = vector_from_payload(rel)
    if any(any(k[2]) for k in vec.coeffs):
        raise InputError("relation has kappa classes")
    expr = translate(vec)
    out = {"expression": expr.to_json(), "text": expr.to_text()}
    if "target" in payload:
        t = decode_code(payload["target"])
        out["lhs"] = _key_text(t, vec.n)
    emit(cfg, out)
    return EXIT_OK


def _key_text(key, n):
    from .gwcalc.expr import term_text
    names = ("W",) if n == 1 else tuple("W%d" % (i + 1) for i in range(n))
    return term_text(key, names)


def cmd_verify(cfg):
    from .gwcalc.calculus import normal_form, verify_identity
    from .gwcalc.expr import CorrelatorExpr, read_expression_file
    sec = read_expression_file(_resolve_data(cfg.input))
    if "lhs" not in sec or "rhs" not in sec:
        raise InputError("identity file needs [lhs] and [rhs] sections")
    lhs = CorrelatorExpr.parse(sec["lhs"], delta=cfg.delta_reading)
    rhs = CorrelatorExpr.parse(sec["rhs"], delta=cfg.delta_reading, legs=lhs.legs)
    ok, residual = verify_identity(lhs, rhs)
    report = {"holds": ok, "residual": residual.to_json(), "residual_text": residual.to_text()}
    if "normal" in sec:
        nf = CorrelatorExpr.parse(sec["normal"], delta=cfg.delta_reading, legs=lhs.legs)
        common = normal_form(lhs, prefer=nf)
        match = (normal_form(nf, prefer=nf) - common).is_zero()
        report["normal_form"] = common.to_text()
        report["normal_form_matches"] = match
        ok = ok and match
    emit(cfg, report)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"graphs": cmd_graphs, "basis": cmd_basis, "pixton": cmd_pixton, "derive": cmd_derive,
            "translate": cmd_translate, "verify": cmd_verify, "rank": cmd_rank}


def _int_list(text):
    text = text.strip()
    if not text:
        return []
    return [int(x) for x in text.replace(",", " ").split()]


def build_parser():
    p = argparse.ArgumentParser(prog="tautrr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--g", type=int)
        s.add_argument("--n", type=int)
        s.add_argument("--r", type=int)
        s.add_argument("--sigma", type=_int_list, default=[], help="parts, e.g. '1,4'")
        s.add_argument("--a", type=_int_list, default=[], help="one entry per marking")
        s.add_argument("--input", help="relation or identity file")
        s.add_argument("--support", help="expression file whose terms may be used (derive)")
        s.add_argument("--output", "-o", help="write here instead of stdout")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--cache-dir", help="defaults to $%s" % CACHE_ENV)
        s.add_argument("--checkpoint-every", type=int, default=0, metavar="ROWS")
        s.add_argument("--kappa-variant", choices=KAPPA_VARIANTS, default="printed")
        s.add_argument("--delta-reading", choices=("contraction", "alt"), default="alt")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = JobConfig(command=args.command, g=args.g, n=args.n, r=args.r, sigma=args.sigma,
                    a=args.a, input=args.input, support=args.support, output=args.output,
                    cache_dir=args.cache_dir, checkpoint_every=args.checkpoint_every,
                    threads=args.threads, kappa_variant=args.kappa_variant,
                    delta_reading=args.delta_reading)
    try:
        cfg.validate()
        return COMMANDS[cfg.command](cfg)
    except (InputError, UnstableError, FileNotFoundError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except (CheckpointError, DivisionError, ArithmeticError) as exc:
        print("internal inconsistency: %s" % exc, file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
