"""Command-line front end.

    qtoroidal verify   [--n N] [--N N] [--truncation D] [--window a..b] [--relations ids] [--config file]
    qtoroidal ope      LEFT RIGHT [--n N] [--N N] [--order K]
    qtoroidal identity [--arity 3] [--v1]

Exit codes: 0 all pass, 1 any fail, 2 config or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import yaml

from . import __version__
from .cartan import AlgebraParams
from .ope import DEFAULT_K, UnrecognizedSeries, contract_pair, lemma_cases, recognize_factors
from .qscalar import render_scalar
from .vertexop import build_X_eps, build_X_long_minus, build_Y, build_Z
from .verifier import ConfigError, check_serre_polynomial, report_text, run_suite, summarize

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# JSON report layout; checked by validate_report (no schema library needed for this shape)
REPORT_SCHEMA = {
    "version": str,
    "config": dict,
    "scope": str,
    "states": list,
    "summary": {"pass": int, "fail": int, "skipped": int, "by_relation": dict},
    "entries": list,
    "timing": dict,
}
ENTRY_KEYS = {"relation", "instance", "status"}
INSTANCE_KEYS = {"i", "j", "s", "s_prime", "branch", "state"}


class UsageError(Exception):
    pass


def validate_report(report: dict) -> list:
    """Problems found in a report dict; empty when it matches REPORT_SCHEMA."""
    errs = []
    for key, typ in REPORT_SCHEMA.items():
        if key not in report:
            errs.append(f"missing {key}")
            continue
        if isinstance(typ, dict):
            for k2, t2 in typ.items():
                if not isinstance(report[key].get(k2), t2):
                    errs.append(f"{key}.{k2} is not {t2.__name__}")
        elif not isinstance(report[key], typ):
            errs.append(f"{key} is not {typ.__name__}")
    for idx, e in enumerate(report.get("entries", [])):
        if not ENTRY_KEYS <= set(e):
            errs.append(f"entry {idx} lacks {sorted(ENTRY_KEYS - set(e))}")
            continue
        if e["status"] not in ("PASS", "FAIL", "SKIPPED"):
            errs.append(f"entry {idx} has status {e['status']!r}")
        if e["relation"] != "OPE" and not INSTANCE_KEYS <= set(e["instance"]):
            errs.append(f"entry {idx} instance lacks {sorted(INSTANCE_KEYS - set(e['instance']))}")
        disc = e.get("discrepancy")
        if disc is not None and not {"exponents", "lhs", "rhs"} <= set(disc):
            errs.append(f"entry {idx} discrepancy is incomplete")
    return errs


def exit_status(report: dict) -> int:
    return EXIT_FAIL if summarize(report["entries"])["fail"] else EXIT_PASS


def dump_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# -- verify -------------------------------------------------------------------------

def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a key/value mapping")
    return data


def merged_config(args) -> dict:
    """Flags override the config file, which overrides the built-in defaults."""
    cfg = load_config_file(args.config) if args.config else {}
    flags = {
        "n": args.n,
        "N": args.N,
        "truncation": args.truncation,
        "window": args.window,
        "relations": args.relations,
        "ope_order": args.ope_order,
        "k_convention": args.k_convention,
        "phi_shift": args.phi_shift,
        "output": args.output,
        "format": args.format,
    }
    cfg.update({k: v for k, v in flags.items() if v is not None})
    return cfg


def cmd_verify(args) -> int:
    cfg = merged_config(args)
    output, fmt = cfg.get("output"), cfg.get("format") or "json"
    progress = (lambda rel: print(f"running {rel}", file=sys.stderr)) if args.verbose else None
    report = run_suite(cfg, progress=progress)
    text = dump_json(report) if fmt == "json" else report_text(report)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(report_text(report) if fmt == "json" else text, end="")
    else:
        print(text, end="")
    return exit_status(report)


# -- ope ------------------------------------------------------------------------------

SELECTOR_KINDS = ("Z", "Y", "Xeps", "Xlong-")


def parse_selector(text: str) -> tuple:
    """'Xeps+,i=1,eps=+1,s=1' -> ('Xeps', +1, {'i': 1, 'eps': 1, 's': 1})."""
    head, *fields = [p.strip() for p in text.split(",")]
    head = head.replace(" ", "")
    if head == "Xlong-":
        kind, sign = "Xlong-", -1
    elif head and head[-1] in "+-" and head[:-1] in SELECTOR_KINDS:
        kind, sign = head[:-1], 1 if head[-1] == "+" else -1
    else:
        raise UsageError(f"bad selector head {head!r}; use Z+/Z-, Y+/Y-, Xeps+/Xeps- or Xlong-")
    opts = {}
    for f in fields:
        if "=" not in f:
            raise UsageError(f"selector field {f!r} must look like key=value")
        k, v = f.split("=", 1)
        try:
            opts[k.strip()] = int(v)
        except ValueError as exc:
            raise UsageError(f"selector field {f!r} needs an integer value") from exc
    if "i" not in opts:
        raise UsageError(f"selector {text!r} needs i=")
    opts.setdefault("s", 1)
    return kind, sign, opts


def build_selected(sel: tuple, params: AlgebraParams, var: str):
    kind, sign, o = sel
    i, s, n = o["i"], o["s"], params.n
    if not 0 <= i <= n:
        raise UsageError(f"node {i} outside 0..{n}")
    if s not in params.dirs:
        raise UsageError(f"direction {s} outside 1..{params.N - 1}")
    if kind == "Z":
        return build_Z(i, s, sign, n, var)
    if kind == "Y":
        return build_Y(i, s, sign, n, var)
    if kind == "Xlong-":
        if not params.is_long(i):
            raise UsageError(f"node {i} is short; use Xeps-")
        return build_X_long_minus(i, s, params, var)
    if "eps" not in o:
        raise UsageError("Xeps selectors need eps=")
    try:
        return build_X_eps(i, o["eps"], s, sign, params, var).terms[0].factors[0]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def find_lemma_case(A, B, params: AlgebraParams):
    for case, inst, A2, B2, expected, _ in lemma_cases(params):
        if A2 == A and B2 == B:
            return case, inst, expected
    return None


def cmd_ope(args) -> int:
    if args.n < 2 or args.N < 2:
        raise ConfigError("n and N must be at least 2")
    params = AlgebraParams(args.n, args.N)
    A = build_selected(parse_selector(args.left), params, "z")
    B = build_selected(parse_selector(args.right), params, "w")
    cs = contract_pair(A, B, args.order, params.n)
    try:
        fl = recognize_factors(cs, args.order)
    except UnrecognizedSeries as exc:
        print("status: unrecognized")
        print("raw log coefficients of (w/z)^k:")
        for k, v in sorted(exc.series.items(), key=lambda kv: int(kv[0])):
            print(f"  k={k}: {v}")
        return EXIT_FAIL
    print(f"{A.name}(z) {B.name}(w) = {fl} :{A.name}(z) {B.name}(w):")
    if fl.is_trivial():
        print("  1 (normal-ordered outright)")
    print(f"  prefactor {render_scalar(fl.pre)}, factors {[(str(u), e) for u, e in fl.factors]}")
    hit = find_lemma_case(A, B, params)
    if hit is None:
        print("lemma entry: none transcribed for this pair")
        return EXIT_PASS
    case, inst, expected = hit
    ok = expected == fl
    tag = ", ".join(f"{k}={v}" for k, v in inst.items())
    print(f"lemma entry {case} [{tag}]: {'matches' if ok else 'DIFFERS, table gives ' + str(expected)}")
    return EXIT_PASS if ok else EXIT_FAIL


# -- identity -------------------------------------------------------------------------

def cmd_identity(args) -> int:
    if args.arity != 3:
        raise UsageError("the symmetrization identities live in exactly 3 variables")
    entries = check_serre_polynomial()
    if args.v1:
        entries = [e for e in entries if "v=1" in (e["instance"]["branch"] or "")]
    for e in entries:
        print(f"{e['status']}  {e['instance']['branch']}")
    return EXIT_FAIL if any(e["status"] == "FAIL" for e in entries) else EXIT_PASS


# -- entry point ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qtoroidal", description="Exact checks for the vertex representation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run the relation suite")
    v.add_argument("--n", type=int)
    v.add_argument("--N", type=int)
    v.add_argument("--truncation", "-D", type=int)
    v.add_argument("--window", help="mode window a..b, bounds in (1/4)Z")
    v.add_argument("--relations", help="comma list of relation ids or 'all'")
    v.add_argument("--ope-order", dest="ope_order", type=int)
    v.add_argument("--k-convention", dest="k_convention", choices=("q", "q_i"))
    v.add_argument("--phi-shift", dest="phi_shift", choices=("gamma", "proof"))
    v.add_argument("--config", help="YAML config file")
    v.add_argument("--output", "-o")
    v.add_argument("--format", choices=("json", "text"))
    v.add_argument("--verbose", "-v", action="store_true")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("ope", help="contraction factor of two vertex operators")
    o.add_argument("left", help="e.g. 'Xeps+,i=1,eps=1,s=1'")
    o.add_argument("right", help="e.g. 'Z-,i=1,s=1'")
    o.add_argument("--n", type=int, default=2)
    o.add_argument("--N", type=int, default=3)
    o.add_argument("--order", type=int, default=DEFAULT_K)
    o.set_defaults(func=cmd_ope)

    i = sub.add_parser("identity", help="polynomial antisymmetrization identities")
    i.add_argument("--arity", type=int, default=3)
    i.add_argument("--v1", action="store_true", help="only the v = 1 specializations")
    i.set_defaults(func=cmd_identity)
    return p


def _join_window(argv: list) -> list:
    # "--window -3..3" would otherwise be read as an option
    out, it = [], iter(argv)
    for a in it:
        if a == "--window":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--window={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    argv = _join_window(list(sys.argv[1:] if argv is None else argv))
    try:
        args = make_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"qtoroidal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
