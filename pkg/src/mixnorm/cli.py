"""Command-line front end.

Subcommands::

    mixnorm sample   --model FILE --n N --seed S [--out FILE]
    mixnorm pdf      --model FILE --data FILE [--log]
    mixnorm describe --model FILE
    mixnorm fit      --family {t,sn,mmne,gh} --data FILE [--max-iter N] [--tol T]
                     [--seed S] [--fix-lambda L]

Exit codes: 0 success, 2 usage error, 3 data or model error, 4 numerical
failure. A fit that stops at ``--max-iter`` still exits 0 and prints
``converged = false``.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import math
import sys

import numpy as np

from . import __version__
from .closed_forms import GH_NORMALIZER_READING, MMNE_READING
from .estimation import FITTERS, FitConfig
from .families import MMN, UNDEFINED, dispatch_route, logpdf, moments, sample
from .mixing import mixing_mgf
from .modelio import fmt, parse_model, read_table, serialize_model, write_table

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _parser():
    top = _Parser(prog="mixnorm", description="Normal mixture distributions")
    top.add_argument("--version", action="store_true",
                     help="print the version and the formula readings in use")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("sample", help="draw rows from a model")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out")

    d = sub.add_parser("pdf", help="evaluate the density at each data row")
    d.add_argument("--model", required=True)
    d.add_argument("--data", required=True)
    d.add_argument("--log", action="store_true")

    r = sub.add_parser("describe", help="moments, mgf availability and evaluation route")
    r.add_argument("--model", required=True)

    f = sub.add_parser("fit", help="EM fit of a family to data")
    f.add_argument("--family", required=True, choices=sorted(FITTERS))
    f.add_argument("--data", required=True)
    f.add_argument("--max-iter", type=int, default=500)
    f.add_argument("--tol", type=float, default=1e-8)
    f.add_argument("--seed", type=int, default=0,
                   help="accepted for interface stability; the fitters are deterministic")
    f.add_argument("--fix-lambda", type=float, default=None)
    return top


def _read(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _vector_text(v):
    return ", ".join(fmt(x) for x in np.ravel(v))


def _mgf_note(fam):
    """Whether the mgf is finite on a neighbourhood of the origin."""
    eps = 1e-3
    if fam.kind == MMN:
        # M_W is evaluated at +-t'delta; the normal factor is always finite
        args = (eps, -eps) if np.any(fam.delta) else ()
    else:
        args = (eps,)
    finite = all(math.isfinite(mixing_mgf(fam.mixing, a)) for a in args)
    return "finite near 0" if finite else "infinite in every neighbourhood of 0"


def _describe(fam):
    mean, cov = moments(fam)
    lines = [f"kind = {fam.kind}", f"dim = {fam.p}", f"route = {dispatch_route(fam)}",
             "mean = " + ("undefined" if mean is UNDEFINED else _vector_text(mean)),
             "cov = " + ("undefined" if cov is UNDEFINED else _vector_text(cov)),
             f"mgf = {_mgf_note(fam)}",
             f"mixing = {fam.mixing.canonical()}"]
    return "\n".join(lines) + "\n"


def _dispatch(args):
    if args.command == "sample":
        if args.n < 1:
            raise _UsageError("--n must be at least 1")
        fam = parse_model(_read(args.model))
        text = write_table(sample(fam, np.random.default_rng(args.seed), args.n))
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            return ""
        return text
    if args.command == "pdf":
        fam = parse_model(_read(args.model))
        data = read_table(_read(args.data))
        if data.shape[1] != fam.p:
            raise ValueError(f"data have {data.shape[1]} columns, model dimension is {fam.p}")
        vals = np.atleast_1d(logpdf(fam, data))
        if not args.log:
            vals = np.exp(vals)
        return "".join(fmt(v) + "\n" for v in vals)
    if args.command == "describe":
        return _describe(parse_model(_read(args.model)))
    if args.command == "fit":
        if args.max_iter < 1 or not args.tol > 0:
            raise _UsageError("--max-iter must be >= 1 and --tol > 0")
        if args.fix_lambda is not None and args.family != "gh":
            raise _UsageError("--fix-lambda applies to --family gh only")
        data = read_table(_read(args.data))
        cfg = FitConfig(max_iter=args.max_iter, ll_tol=args.tol, fix_lambda=args.fix_lambda)
        res = FITTERS[args.family](data, cfg)
        out = serialize_model(res.family)
        if args.family == "t":
            out += f"nu = {fmt(2.0 * res.family.mixing.shape)}\n"
        out += (f"iterations = {res.iterations}\n"
                f"loglik = {fmt(res.loglik)}\n"
                f"converged = {'true' if res.converged else 'false'}\n")
        return out
    raise _UsageError("a subcommand is required (sample, pdf, describe, fit)")


def run(argv):
    """Execute one command; returns ``(exit_code, stdout, stderr)`` and never exits."""
    parser = _parser()
    captured = io.StringIO()
    try:
        with contextlib.redirect_stdout(captured):
            args = parser.parse_args(list(argv))
    except _UsageError as exc:
        return EXIT_USAGE, "", f"{exc}\n"
    except SystemExit as exc:  # --help
        return int(exc.code or 0), captured.getvalue(), ""
    if args.version:
        return EXIT_OK, (f"mixnorm {__version__}\n"
                         f"mmn-exponential density: {MMNE_READING}\n"
                         f"gh normalizer: {GH_NORMALIZER_READING}\n"), ""
    try:
        return EXIT_OK, _dispatch(args), ""
    except _UsageError as exc:
        return EXIT_USAGE, "", f"mixnorm: error: {exc}\n"
    except (OSError, ValueError) as exc:
        return EXIT_DATA, "", f"mixnorm: {type(exc).__name__}: {exc}\n"
    except ArithmeticError as exc:
        return EXIT_NUMERIC, "", f"mixnorm: {type(exc).__name__}: {exc}\n"


def main(argv=None):
    code, out, err = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
