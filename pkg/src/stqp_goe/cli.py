"""Command-line entry point: ``stqp solve|census|quad|table|check``.

Exit codes: 0 success, 1 usage error, 2 numeric non-convergence or a failed
check.  Results go to stdout (or ``--out``), logs to stderr.  ``--config``
reads ``key = value`` lines that act as defaults for the chosen subcommand;
explicit flags win.
"""

import argparse
import json
import logging
import math
import os
import sys

from . import __version__, terms
from .goe import read_matrix_csv, sample_goe
from .montecarlo import ExperimentConfig, run_census
from .quadrature import NESTED, QuadSpec
from .report import build_row, emit_table
from .rng import derive_stream
from .solver import solve_enumerate

log = logging.getLogger("stqp_goe")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive_float(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _n_grid(text):
    try:
        grid = [int(float(tok)) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --n-grid {text!r}") from None
    if not grid or min(grid) < 4:
        raise argparse.ArgumentTypeError("--n-grid needs integers >= 4")
    return grid


def _default_workers():
    env = os.environ.get("STQP_WORKERS")
    if not env:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise UsageError(f"STQP_WORKERS must be an integer, got {env!r}") from None


def build_parser():
    p = _Parser(prog="stqp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="key = value defaults for the subcommand")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    s = sub.add_parser("solve", help="solve one instance exactly")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--matrix", help="CSV file with a symmetric matrix")
    src.add_argument("--n", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sample-index", type=int, default=0)
    s.add_argument("--k-max", type=int)

    c = sub.add_parser("census", help="Monte Carlo census")
    c.add_argument("--mode", choices=["exact", "edges", "one-row", "heuristic"], required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--samples", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--start", type=int, default=0, help="first sample index (for shards)")
    c.add_argument("--workers", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--k-max", type=int)
    c.add_argument("--format", choices=["json", "csv"], default="json")
    c.add_argument("--out")

    q = sub.add_parser("quad", help="evaluate one quantity by quadrature")
    q.add_argument("--term", required=True,
                   choices=["s", "a-exact", "i", "s3", "pnk", "nvm", "betalog", "qn"])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--k", type=int)
    q.add_argument("--a", type=float)
    q.add_argument("--r", type=float, default=0.0)
    q.add_argument("--gamma", type=float, default=0.0)
    q.add_argument("--power", type=int, default=1)
    q.add_argument("--rel-tol", type=_positive_float)

    t = sub.add_parser("table", help="quadrature vs asymptote table")
    t.add_argument("--n-grid", type=_n_grid, default=_n_grid("1000,10000,100000,1000000"))
    t.add_argument("--terms", choices=["all"], default="all")
    t.add_argument("--a-source", choices=["i", "exact"], default="i")
    t.add_argument("--format", choices=["csv", "json"], default="csv")
    t.add_argument("--with-mc", type=int, metavar="SAMPLES")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--workers", type=int)
    t.add_argument("--rel-tol", type=_positive_float)
    t.add_argument("--out")

    k = sub.add_parser("check", help="run property suites")
    k.add_argument("--suite", choices=["toolbox", "solver", "events", "quadrature", "montecarlo", "all"],
                   default="all")
    return p


def _read_config(path):
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key = value")
                key, value = (part.strip() for part in line.split("=", 1))
                out[key.replace("-", "_")] = value
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return out


def _apply_config(parser, argv):
    """Install config-file values as subcommand defaults, converted by each flag's type."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    command = next((tok for tok in rest if tok in COMMANDS), None)
    if not known.config or command is None:
        return
    subparser = parser._subparsers._group_actions[0].choices[command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in _read_config(known.config).items():
        if key not in actions or key == "help":
            raise UsageError(f"config key {key!r} is not an option of '{command}'")
        action = actions[key]
        try:
            value = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"config {key}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config {key}: {value!r} not in {list(action.choices)}")
        defaults[key] = value
        action.required = False
    subparser.set_defaults(**defaults)


def _write(text, out=None):
    if not text.endswith("\n"):
        text += "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _spec(rel_tol, nested):
    if rel_tol is None:
        return NESTED if nested else QuadSpec()
    return QuadSpec(rel_tol=rel_tol)


def cmd_solve(args):
    if args.matrix:
        q = read_matrix_csv(args.matrix)
        provenance = {"matrix": args.matrix}
    elif args.n is not None:
        q = sample_goe(args.n, derive_stream(args.seed, args.sample_index))
        provenance = {"seed": args.seed, "sample_index": args.sample_index}
    else:
        raise UsageError("solve needs --n or --matrix")
    result = solve_enumerate(q, args.k_max).to_dict()
    result.update(provenance)
    _write(json.dumps(result))
    return EXIT_OK


def cmd_census(args):
    workers = args.workers if args.workers is not None else _default_workers()
    config = ExperimentConfig(n=args.n, samples=args.samples, seed=args.seed, mode=args.mode,
                              k=args.k, workers=workers, start=args.start, k_max=args.k_max)
    report = run_census(config)
    if args.format == "csv":
        _write(report.csv_header() + "\n" + report.csv_row(), args.out)
    else:
        _write(report.to_json(indent=1), args.out)
    return EXIT_OK


_NESTED_TERMS = {"a-exact", "i", "s3", "pnk"}
_TERM_PARAMS = {"pnk": ("k",), "nvm": ("a",), "betalog": ("r", "gamma"), "qn": ("power",)}


def cmd_quad(args):
    spec = _spec(args.rel_tol, args.term in _NESTED_TERMS)
    n = args.n
    asym = None
    if args.term == "s":
        res = terms.s_term(n, spec)
        asym = terms.asymptote("S", n) if n >= 3 else None
    elif args.term == "a-exact":
        res = terms.a_term_exact(n, spec)
        asym = terms.asymptote("A", n)
    elif args.term == "i":
        res = terms.i_term(n, spec)
        asym = terms.asymptote("A", n) if n >= 3 else None
    elif args.term == "s3":
        res = terms.s3_term(n, spec)
        asym = terms.asymptote("B", n)
    elif args.term == "pnk":
        if args.k is None:
            raise UsageError("--term pnk needs --k")
        res = terms.p_nk(n, args.k, spec)
        asym = terms.asymptote("PNK", n, args.k) if n >= 3 and args.k >= 2 else None
    elif args.term == "nvm":
        a = 1.0 if args.a is None else args.a
        res = terms.normal_vs_min(n, a, spec)
        asym = terms.normal_vs_min_asymptote(n, a) if n >= 2 else None
    elif args.term == "betalog":
        res = terms.beta_log(n, args.r, args.gamma, spec)
        asym = terms.beta_log_asymptote(n, args.r, args.gamma) if n >= 2 else None
    else:
        res = terms.qn_moment(n, args.power, spec)
    out = {"term": args.term, "n": n, "value": res.value, "err_est": res.err_est,
           "evals": res.evals, "converged": res.converged}
    for name in ("k", "a", "r", "gamma", "power"):
        if getattr(args, name) is not None and name in _TERM_PARAMS.get(args.term, ()):
            out[name] = getattr(args, name)
    if asym is not None:
        out["asymptote"] = asym
        out["ratio"] = res.value / asym
    out["rel_tol"] = spec.rel_tol
    _write(json.dumps(out))
    if not res.converged:
        log.error("quadrature did not reach rel_tol=%g", spec.rel_tol)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_table(args):
    spec = _spec(args.rel_tol, True)
    workers = args.workers if args.workers is not None else _default_workers()
    rows = []
    ok = True
    for n in args.n_grid:
        log.info("table row n=%d", n)
        row, conv = build_row(n, a_source=args.a_source, spec=spec, mc_samples=args.with_mc,
                              seed=args.seed, workers=workers)
        rows.append(row)
        ok = ok and conv
    _write(emit_table(rows, args.format), args.out)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_check(args):
    from .checks import run_suite
    failures = 0
    for name, passed, detail in run_suite(args.suite):
        print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
        failures += not passed
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


COMMANDS = {"solve": cmd_solve, "census": cmd_census, "quad": cmd_quad, "table": cmd_table,
            "check": cmd_check}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError) as exc:
        print(f"stqp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
