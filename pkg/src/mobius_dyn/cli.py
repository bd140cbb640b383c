"""Command line entry point: ``mobius-dyn <command> ...``.

Exit codes: 0 success, 2 bad input or config, 3 budget exceeded,
4 scope hypothesis violated under ``--require-scope``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from pydantic import ValidationError

from . import expsum, harness, hb, residue
from .errors import BudgetExceededError, DomainError, UnsupportedError
from .moebius import OrbitSpec, format_point, orbit_iter, parse_point, period_direct, period_spectral

EXIT_CONFIG, EXIT_BUDGET, EXIT_SCOPE = 2, 3, 4


class ScopeViolation(Exception):
    pass


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _spec(args) -> OrbitSpec:
    entries = _ints(args.matrix)
    if len(entries) != 4:
        raise DomainError("--matrix needs four comma-separated entries a,b,c,d")
    return OrbitSpec.build(args.p, entries, parse_point(args.u0, args.p))


def _add_spec_args(sp):
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--matrix", required=True, help="a,b,c,d")
    sp.add_argument("--u0", default="0", help="residue or 'inf'")


def _print(obj):
    print(json.dumps(obj, indent=1, default=str))


def read_coefficients(path) -> list[complex]:
    """Two-column file: index (1-based) and 're,im' per line; '#' starts a comment."""
    entries = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                idx, val = line.split()
                re_s, im_s = val.split(",")
                entries[int(idx)] = complex(float(re_s), float(im_s))
            except ValueError:
                raise DomainError(f"{path}:{lineno}: expected 'index re,im'") from None
    if sorted(entries) != list(range(1, len(entries) + 1)):
        raise DomainError(f"{path}: indices must run 1..K without gaps")
    return [entries[i] for i in range(1, len(entries) + 1)]


# -- commands -------------------------------------------------------------------


def cmd_orbit(args):
    spec = _spec(args)
    pts = orbit_iter(spec, args.start, args.count, args.stride)
    print(" ".join(format_point(x) for x in pts))


def cmd_period(args):
    spec = _spec(args)
    out = {"p": spec.p, "kind": spec.map.kind}
    if args.method in ("direct", "both"):
        out["direct"] = period_direct(spec)
    if args.method in ("spectral", "both"):
        out["spectral"] = period_spectral(spec)
    if args.method == "both":
        out["agree"] = out["direct"] == out["spectral"]
    _print(out)


def _h_arg(args, p):
    if args.h_all:
        return "all"
    if args.h_sample:
        count, seed = _ints(args.h_sample)
        return ("sample", count, seed)
    if args.h is None:
        raise DomainError("give one of --h, --h-all, --h-sample")
    return [args.h]


def cmd_sum(args):
    spec = _spec(args)
    fam = args.family
    if fam == "single":
        params = dict(k=args.k, K=args.K, N=args.N)
    elif fam == "coprime":
        params = dict(k=args.k, N=args.N, method=args.method)
    elif fam == "prime":
        params = dict(N=args.N)
    elif fam == "lambda":
        params = dict(N=args.N, dyadic=args.dyadic)
    elif fam == "moebius":
        params = dict(N=args.N)
    elif fam == "multi":
        params = dict(coeffs=_ints(args.coeffs), exponents=_ints(args.exps), K=args.K, N=args.N)
    elif fam == "bilinear":
        if not (args.alpha and args.beta):
            raise DomainError("bilinear needs --alpha FILE and --beta FILE")
        params = dict(alpha=read_coefficients(args.alpha), beta=read_coefficients(args.beta))
    else:
        params = dict(k=args.k, ranges=_ints(args.ranges), coprime=args.coprime)
    rep = expsum.max_scan(spec, fam, _h_arg(args, spec.p), threads=args.threads, **params)
    _print({
        "p": spec.p, "matrix": list(spec.map.entries), "u0": format_point(spec.u0),
        "t": spec.period, "family": fam, "argmax": rep.argmax, "max_abs": rep.max_abs,
        "rows": [{"h": r.h, "abs": r.abs_value, "re": r.value.real, "im": r.value.imag,
                  "terms": r.terms, "poles_skipped": r.poles_skipped} for r in rep.rows],
    })


def cmd_hb(args):
    if args.hb_cmd == "verify":
        rep = hb.hb_verify_range(args.J, args.X, args.budget)
        _print({**asdict(rep), "ok": rep.ok})
    elif args.hb_cmd == "cover":
        boxes = hb.dyadic_cover(args.N, args.J)
        _print([{"j": b.j, "sign": b.sign, "M": b.M, "N": b.N} for b in boxes])
    else:
        spec = _spec(args)
        rep = hb.hb_reconstruct(spec, args.h, args.N, args.J, args.budget)
        _print({"N": rep.N, "J": rep.J, "h": rep.h, "boxes": rep.boxes, "tuples": rep.tuples,
                "lhs": [rep.lhs.real, rep.lhs.imag], "rhs": [rep.rhs.real, rep.rhs.imag],
                "per_j": {j: [v.real, v.imag] for j, v in rep.per_j.items()},
                "diff": rep.diff, "tolerance": rep.tolerance, "ok": rep.ok})


def cmd_rt(args):
    if args.rt_cmd == "count":
        ranges = _ints(args.ranges)
        out = {"t": args.t, "ranges": ranges, "n": args.n,
               "count": residue.rt_count(args.t, ranges, args.n, args.coprime),
               "main_term": str(residue.rt_main_term(args.t, ranges))}
        if args.coprime and residue.math.gcd(args.n, args.t) == 1:
            v = residue.rt_via_characters(args.t, ranges, args.n)
            out["via_characters"] = [v.real, v.imag]
        _print(out)
    elif args.rt_cmd == "chars":
        table = residue.CharacterTable(args.t)
        out = {"t": args.t, "phi": table.phi, "orders": table.orders}
        if args.verify:
            err = table.orthogonality_error()
            out["orthogonality_error"] = err
            out["ok"] = err <= 1e-6 * table.phi
        _print(out)
    else:
        table = residue.CharacterTable(args.t)
        idx = range(table.phi) if args.all_chars else [args.char_index]
        _print([{"index": i, "order": table.order_of(i),
                 "ratio": residue.burgess_ratio(table, i, args.N)} for i in idx])


def cmd_scope(args):
    spec = _spec(args)
    rep = harness.scope_check(spec, args.eps, args.N, args.kappa, args.B)
    _print({**asdict(rep), "in_scope": rep.in_scope})
    if args.require_scope and not rep.in_scope:
        raise ScopeViolation("instance outside the theorem's hypotheses")


def cmd_experiment(args):
    cfg = harness.load_config(args.config)
    if args.require_scope:
        for p in cfg.primes():
            for spec in harness._orbits(cfg, p):
                if not harness.scope_check(spec, cfg.epsilon).in_scope:
                    raise ScopeViolation(f"orbit {spec} outside the theorem's hypotheses")
    result = harness.run_experiment(cfg, threads=args.threads)
    paths = harness.write_outputs(result, args.out, cfg.output_prefix)
    _print({"rows": len(result.rows), "partial": result.partial,
            "files": {k: str(v) for k, v in paths.items()}, "summary": result.summary})
    if result.partial:
        return EXIT_BUDGET
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mobius-dyn", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("orbit", help="print orbit points")
    _add_spec_args(sp)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--start", type=int, default=0)
    sp.set_defaults(fn=cmd_orbit)

    sp = sub.add_parser("period", help="orbit period")
    _add_spec_args(sp)
    sp.add_argument("--method", choices=["direct", "spectral", "both"], default="both")
    sp.set_defaults(fn=cmd_period)

    sp = sub.add_parser("sum", help="exponential sums, one h or a scan over h")
    sp.add_argument("family", choices=sorted(expsum.FAMILIES))
    _add_spec_args(sp)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--h", type=int)
    g.add_argument("--h-all", action="store_true")
    g.add_argument("--h-sample", metavar="COUNT,SEED")
    sp.add_argument("--N", type=int, default=1)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--K", type=int, default=1)
    sp.add_argument("--method", choices=["auto", "direct", "mobius"], default="auto")
    sp.add_argument("--dyadic", action="store_true")
    sp.add_argument("--coeffs", default="1")
    sp.add_argument("--exps", default="1")
    sp.add_argument("--ranges", default="1")
    sp.add_argument("--coprime", action="store_true")
    sp.add_argument("--alpha")
    sp.add_argument("--beta")
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(fn=cmd_sum)

    sp = sub.add_parser("hb", help="Heath-Brown identity tools")
    hsub = sp.add_subparsers(dest="hb_cmd", required=True)
    v = hsub.add_parser("verify")
    v.add_argument("--J", type=int, required=True)
    v.add_argument("--X", type=int, required=True)
    c = hsub.add_parser("cover")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--J", type=int, required=True)
    r = hsub.add_parser("reconstruct")
    _add_spec_args(r)
    r.add_argument("--h", type=int, required=True)
    r.add_argument("--N", type=int, required=True)
    r.add_argument("--J", type=int, required=True)
    for x in (v, c, r):
        x.add_argument("--budget", type=int, default=hb.DEFAULT_TUPLE_BUDGET)
    sp.set_defaults(fn=cmd_hb)

    sp = sub.add_parser("rt", help="products in residue classes and characters")
    rsub = sp.add_subparsers(dest="rt_cmd", required=True)
    c = rsub.add_parser("count")
    c.add_argument("--t", type=int, required=True)
    c.add_argument("--ranges", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--coprime", action="store_true")
    c = rsub.add_parser("chars")
    c.add_argument("--t", type=int, required=True)
    c.add_argument("--verify", action="store_true")
    c = rsub.add_parser("burgess")
    c.add_argument("--t", type=int, required=True)
    c.add_argument("--N", type=int, required=True)
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--all-chars", action="store_true")
    g.add_argument("--char-index", type=int)
    sp.set_defaults(fn=cmd_rt)

    sp = sub.add_parser("scope", help="check the theorem's hypotheses for an orbit")
    _add_spec_args(sp)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--N", type=int)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--B", type=float)
    sp.add_argument("--require-scope", action="store_true")
    sp.set_defaults(fn=cmd_scope)

    sp = sub.add_parser("experiment", help="run a configured experiment")
    esub = sp.add_subparsers(dest="exp_cmd", required=True)
    r = esub.add_parser("run")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--require-scope", action="store_true")
    sp.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args) or 0
    except ValidationError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ScopeViolation as exc:
        print(f"scope violation: {exc}", file=sys.stderr)
        return EXIT_SCOPE
    except (DomainError, UnsupportedError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
