"""Command-line front end: ``poisbin {pmf,divergence,bounds,sweep,verify}``.

Exit codes: 0 success, 1 bound violation, 2 input error, 3 precision
escalation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bounds import catalog_rows, check_instance
from .distributions import BernoulliVector, pmf_method, read_probabilities
from .divergences import DEFAULT_ALPHAS, compare, poisson_law, zero_report
from .errors import EscalationError, InputError, PoisbinError
from .harness import (
    DEFAULT_SEED,
    SUITES,
    FamilySpec,
    default_corpus,
    empirical_constants,
    fmt,
    run_suite,
    run_sweep,
    sweep_csv,
    sweep_json,
    checks_csv,
    constants_csv,
    write_table,
)
from .kernels import BACKEND
from .precision import PrecisionPolicy

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_ESCALATION = 0, 1, 2, 3
COMMANDS = ("pmf", "divergence", "bounds", "sweep", "verify")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _alpha_list(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from None
    if not vals or any(a <= 0 for a in vals):
        raise argparse.ArgumentTypeError("alphas must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the long flags")
    common.add_argument("--input", help="probability file, one p per line")
    common.add_argument("--family", action="append",
                        help="family spec kind:key=value,..., e.g. equal:n=10,p=0.1 (repeatable for sweep)")
    common.add_argument("--method", choices=("dp", "dft", "contour"), default="dp")
    common.add_argument("--alpha", type=_alpha_list, default=DEFAULT_ALPHAS, help="comma-separated alpha grid")
    common.add_argument("--precision", choices=("binary64", "extended"), default="binary64")
    common.add_argument("--digits", type=int, default=50, help="decimal digits for extended precision")
    common.add_argument("--out", help="output file (pmf/divergence/bounds/sweep) or directory (verify)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--suite", choices=SUITES, default="core")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--catalog", action="store_true", help="bounds: print the bound catalog instead")

    parser = _Parser(prog="poisbin", description="Poisson-binomial versus Poisson distances and bounds")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "pmf": "pmf of W next to the matched Poisson pmf",
        "divergence": "all distances between W and its matched Poisson law",
        "bounds": "evaluate the bound catalog on one instance",
        "sweep": "run families (default corpus) and write one row per instance",
        "verify": "run a verification suite",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    # config values become defaults; explicit flags still win
    flags = []
    for key, val in cfg.items():
        key = key.replace("_", "-")
        if key in ("command", "config"):
            continue
        if isinstance(val, bool):
            if val:
                flags.append(f"--{key}")
        elif isinstance(val, list) and key == "family":
            for v in val:
                flags += [f"--{key}", str(v)]
        elif isinstance(val, list):
            flags += [f"--{key}", ",".join(str(v) for v in val)]
        else:
            flags += [f"--{key}", str(val)]
    cmd = cfg.get("command")
    argv = list(argv)
    if argv and argv[0] in COMMANDS:
        return parser.parse_args([argv[0]] + flags + argv[1:])
    if cmd in COMMANDS:
        return parser.parse_args([cmd] + flags + argv)
    raise InputError("config has no command and none was given")


def _policy(args) -> PrecisionPolicy:
    try:
        return PrecisionPolicy(mode=args.precision, extended_digits=args.digits)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _instance(args) -> BernoulliVector:
    if args.input and args.family:
        raise InputError("give either --input or --family, not both")
    if args.input:
        return read_probabilities(args.input)
    if args.family:
        if len(args.family) != 1:
            raise InputError("this command takes a single --family")
        return FamilySpec.parse(args.family[0]).build()
    raise InputError("an instance is required: --input FILE or --family SPEC")


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        _sidecar(args.out, args)
    else:
        sys.stdout.write(text)


def _sidecar(path: str, args):
    meta = {
        "poisbin_version": __version__,
        "kernel_backend": BACKEND,
        "command": args.command,
        "argv": sys.argv[1:],
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def cmd_pmf(args) -> int:
    p = _instance(args)
    policy = _policy(args)
    w = pmf_method(p, args.method, policy)
    v = poisson_law(p.lam, len(w), policy=policy)
    ws = w.probabilities()
    vs = v.probabilities()[: len(w)]
    rows = [[k, ws[k], vs[k], ws[k] - vs[k]] for k in range(len(w))]
    if args.format == "json":
        _emit(args, _json({"schema": 1, "method": args.method, "lam": p.lam,
                           "rows": [dict(zip(("k", "w", "v", "diff"), r)) for r in rows]}))
    else:
        _emit(args, write_table(["k", "w", "v", "diff"], rows))
    return EXIT_OK


def _report(p: BernoulliVector, args):
    alphas = tuple(args.alpha)
    policy = _policy(args)
    if p.lam == 0:
        return zero_report(alphas, policy.mode), None, None
    w = pmf_method(p, args.method, policy)
    v = poisson_law(p.lam, len(w), policy=policy)
    return compare(w, v, alphas, policy), w, v


def cmd_divergence(args) -> int:
    if 1.0 in args.alpha:
        print("note: alpha = 1 is reported as the relative entropy", file=sys.stderr)
    p = _instance(args)
    rep, _, _ = _report(p, args)
    d = rep.as_dict()
    if args.format == "json":
        _emit(args, _json({"schema": 1, "lam": p.lam, "lam2": p.lam2, **d}))
    else:
        rows = [["tv", rep.tv], ["kl", rep.kl], ["chi2", rep.chi2]]
        rows += [[f"renyi_{fmt(a)}", x] for a, x in rep.renyi.items()]
        rows += [[f"tsallis_{fmt(a)}", x] for a, x in rep.tsallis.items()]
        rows += [[f"vajda_{fmt(a)}", x] for a, x in rep.vajda.items()]
        rows += [["h_w", rep.h_w], ["h_z", rep.h_z], ["h2_z", rep.h2_z], ["entropy_diff", rep.entropy_diff],
                 ["truncation_tail_budget", rep.truncation_tail_budget],
                 ["precision_mode", rep.precision_mode], ["escalated", rep.escalated]]
        _emit(args, write_table(["quantity", "value"], rows))
    return EXIT_OK


BOUND_COLUMNS = ["name", "side", "applicable", "holds", "lhs", "rhs", "lower_rhs", "margin", "precision_mode", "note"]


def cmd_bounds(args) -> int:
    if args.catalog:
        rows = catalog_rows()
        if args.format == "json":
            _emit(args, _json({"schema": 1, "catalog": rows}))
        else:
            cols = ["name", "side", "constants", "applicability", "statement", "source"]
            _emit(args, write_table(cols, ([r[c] for c in cols] for r in rows)))
        return EXIT_OK
    p = _instance(args)
    rep, w, v = _report(p, args)
    bundle = check_instance(p, rep, w, v)
    if args.format == "json":
        _emit(args, _json({"schema": 1, "checks": [c.as_row() for c in bundle.checks],
                           "ratios": [r.__dict__ for r in bundle.ratios]}))
    else:
        _emit(args, write_table(BOUND_COLUMNS, ([getattr(c, k) for k in BOUND_COLUMNS] for c in bundle.checks)))
    return EXIT_VIOLATION if bundle.violations else EXIT_OK


def cmd_sweep(args) -> int:
    if args.input:
        raise InputError("sweep takes --family specs (or none for the default corpus), not --input")
    fams = [FamilySpec.parse(f) for f in args.family] if args.family else default_corpus(args.seed)
    recs = run_sweep(fams, tuple(args.alpha), _policy(args), workers=args.workers)
    if args.format == "json":
        _emit(args, sweep_json(recs))
    else:
        _emit(args, sweep_csv(recs, tuple(args.alpha)))
        if args.out:
            base = os.path.splitext(args.out)[0]
            with open(base + ".checks.csv", "w", encoding="utf-8", newline="") as fh:
                fh.write(checks_csv(recs))
            with open(base + ".constants.csv", "w", encoding="utf-8", newline="") as fh:
                fh.write(constants_csv(empirical_constants(recs)))
    viol = sum(len(r.violations) for r in recs)
    errs = sum(bool(r.error) for r in recs)
    print(f"sweep: {len(recs)} instances, {viol} violations, {errs} errors", file=sys.stderr)
    if any(r.error.startswith("EscalationError") for r in recs):
        return EXIT_ESCALATION
    return EXIT_VIOLATION if viol else EXIT_OK


def cmd_verify(args) -> int:
    outcome = run_suite(args.suite, args.seed, args.workers, tuple(args.alpha))
    summary = outcome.summary_csv()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for name, text in [("summary.csv", summary)] + sorted(outcome.tables.items()):
            with open(os.path.join(args.out, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        _sidecar(os.path.join(args.out, "summary.csv"), args)
    sys.stdout.write(summary)
    checked = sum(int(r[2]) for r in outcome.rows)
    print(f"verify {args.suite}: {len(outcome.rows)} checks over {checked} cases, {outcome.failures} failures",
          file=sys.stderr)
    return EXIT_VIOLATION if outcome.failures else EXIT_OK


HANDLERS = {"pmf": cmd_pmf, "divergence": cmd_divergence, "bounds": cmd_bounds, "sweep": cmd_sweep,
            "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    except InputError as exc:
        print(f"poisbin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return HANDLERS[args.command](args)
    except EscalationError as exc:
        print(f"poisbin: escalation failure: {exc}", file=sys.stderr)
        return EXIT_ESCALATION
    except (InputError, PoisbinError) as exc:
        print(f"poisbin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"poisbin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
