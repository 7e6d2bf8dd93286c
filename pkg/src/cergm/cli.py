"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 estimation failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunConfig
from .data import load_dataset
from .errors import (
    CergmError,
    ConstraintViolation,
    DataError,
    EstimationError,
    MissingAttribute,
    NonFiniteParameter,
)
from .pipeline import batch_fit, compare_models, diagnose_term, fit_term, simulate_term
from .results import load_fit

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ESTIMATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p, *, term=True, terms=False):
    p.add_argument("--cases", required=True, help="case table CSV")
    p.add_argument("--citations", required=True, help="citation list CSV")
    p.add_argument("--config", help="run configuration (key = value text)")
    if term:
        p.add_argument("--term", type=int, help="focal term")
    if terms:
        p.add_argument("--terms", help="terms to fit: 1950..1960 or 1950,1953")
    p.add_argument("--seed", type=int, help="master seed (overrides the configuration)")
    p.add_argument("--out-dir", default=".", help="output directory (default: current directory)")
    p.add_argument("--nsim", type=int, help="MCMC sample size")
    p.add_argument("--burnin", type=int, help="MCMC burn-in proposals")
    p.add_argument("--interval", type=int, help="MCMC proposals between retained draws")
    p.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")


def _theta_source(p):
    p.add_argument("--fit", help="fit.json whose estimates to use")
    p.add_argument("--theta", help="comma-separated coefficients in model order")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cergm", description="Citation exponential random graph models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit the configured model to one term")
    _common(p)
    p = sub.add_parser("batch-fit", help="fit a range of terms")
    _common(p, term=False, terms=True)
    p.add_argument("--jobs", type=int, default=1, help="terms fitted concurrently")
    p = sub.add_parser("mple", help="maximum pseudo-likelihood fit of one term")
    _common(p)
    p = sub.add_parser("simulate", help="simulate a term's citations at given coefficients")
    _common(p)
    _theta_source(p)
    p = sub.add_parser("gof", help="goodness-of-fit and degeneracy reports")
    _common(p)
    _theta_source(p)
    p = sub.add_parser("compare", help="AIC/BIC of the full and the independent model")
    _common(p)
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    over = dict(seed=args.seed, mcmc_nsim=args.nsim, mcmc_burnin=args.burnin, mcmc_interval=args.interval)
    if getattr(args, "terms", None):
        over["terms"] = args.terms
    return replace(cfg, **{k: v for k, v in over.items() if v is not None})


def _term(args, cfg) -> int:
    if args.term is not None:
        return args.term
    if cfg.terms:
        terms = cfg.term_list()
        if len(terms) == 1:
            return terms[0]
    raise UsageError("--term is required (or a single term in the configuration)")


def _theta(args, cfg):
    if bool(args.fit) == bool(args.theta):
        raise UsageError("give exactly one of --fit and --theta")
    if args.fit:
        fit = load_fit(args.fit)
        if tuple(fit.names) != cfg.spec().names:
            raise UsageError("the fit's terms do not match the configured model")
        return fit.theta
    try:
        theta = np.array([float(x) for x in args.theta.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse --theta {args.theta!r}") from None
    if len(theta) != len(cfg.spec()):
        raise UsageError(f"--theta has {len(theta)} values, the model has {len(cfg.spec())} terms")
    return theta


def run(args) -> int:
    cfg = _config(args)
    data = load_dataset(args.cases, args.citations)
    out = args.out_dir
    cmd = args.command

    if cmd == "fit":
        t = _term(args, cfg)
        fit = fit_term(cfg, data, t, out)
        print(f"term {t}: converged={fit.converged} iterations={fit.iterations} loglik={fit.loglik!r}")
    elif cmd == "mple":
        t = _term(args, cfg)
        fit = fit_term(replace(cfg, method="mple"), data, t, out)
        print(f"term {t}: MPLE pseudo-loglik={fit.loglik!r}")
    elif cmd == "batch-fit":
        if not cfg.terms:
            raise UsageError("--terms is required (or terms in the configuration)")
        res = batch_fit(cfg, data, cfg.term_list(), out, jobs=args.jobs)
        print(f"fitted {len(res.fits)} terms, {len(res.errors)} failed")
        if not res.fits:
            return EXIT_ESTIMATION
    elif cmd == "simulate":
        t = _term(args, cfg)
        sample = simulate_term(cfg, data, t, _theta(args, cfg), out)
        print(f"term {t}: {len(sample)} draws, acceptance {sample.acceptance_rate:.3f}")
    elif cmd == "gof":
        t = _term(args, cfg)
        rep, deg = diagnose_term(cfg, data, t, _theta(args, cfg), out)
        print(f"term {t}: gof covered={rep.all_covered()} degenerate={deg.degenerate}")
    elif cmd == "compare":
        t = _term(args, cfg)
        cmp = compare_models(cfg, data, t, out_dir=out)
        for row in cmp.rows():
            print(f"{row[0]}: p={row[1]} AIC={row[4]!r} BIC={row[5]!r}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except (UsageError, ConfigError) as exc:
        print(f"cergm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, MissingAttribute, ConstraintViolation, OSError) as exc:
        print(f"cergm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EstimationError, NonFiniteParameter) as exc:
        print(f"cergm: estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except CergmError as exc:
        print(f"cergm: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
