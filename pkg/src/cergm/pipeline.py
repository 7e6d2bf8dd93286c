"""Term-by-term fitting, batch runs and model comparison with file outputs.

Every random stream is derived from ``config.seed`` and the focal term, so a
rerun with the same inputs writes byte-identical files.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import RunConfig
from .data import Dataset
from .errors import CergmError, EmptyTerm, RankDeficient, Separation
from .estimation import FitResult, annealed_start, independent_mle, mcmle, mple
from .gof import DegeneracyReport, GofReport, degeneracy_check, gof
from .model import ModelSpec
from .network import CitationNetwork
from .results import COEFFICIENT_COLUMNS, coefficient_rows, p_values, save_fit, write_table
from .sampler import SampleSet, derive_seed, simulate
from .statistics import global_stats

log = logging.getLogger(__name__)

# sub-stream keys under (seed, term)
_ANNEAL, _MCMLE, _GOF, _DEGENERACY, _SIMULATE = 1, 2, 3, 4, 5

GOF_COLUMNS = ("statistic", "value", "quantile", "count")
DEGENERACY_COLUMNS = ("statistic", "observed", "lower", "upper", "covered")
COMBINED_COLUMNS = ("term", "statistic", "estimate", "se", "p_value")
ERROR_COLUMNS = ("term", "error", "message")
COMPARISON_COLUMNS = ("model", "p", "loglik", "loglik_kind", "aic", "bic", "delta_aic", "delta_bic")


def seed_for(config: RunConfig, term: int, stream: int) -> int:
    return derive_seed(config.seed, int(term) & 0xFFFFFFFF, stream)


def term_network(config: RunConfig, dataset: Dataset, t: int) -> CitationNetwork:
    if dataset.n_cases_in(t) == 0:
        raise EmptyTerm(f"no cases decided in term {t}")
    return dataset.network(t, impute_missing=config.impute_missing)


def starting_values(config: RunConfig, net: CitationNetwork, spec: ModelSpec):
    """MPLE starting point (from an annealed network if configured).

    Coefficients whose MPLE on the observed network is infinite stay fixed at
    that value; they are inestimable for this term. When neither MPLE exists
    the observed network's failure is raised.
    """
    failure = None
    try:
        observed = mple(net, spec, on_separation="drop")
    except (Separation, RankDeficient) as exc:
        observed, failure = None, exc
    start = "mple"
    theta0 = None if observed is None else observed.theta.copy()
    if config.start == "anneal":
        ann = annealed_start(net, spec, config.anneal(seed_for(config, net.focal_term, _ANNEAL)))
        if ann.theta0 is not None:
            theta0 = ann.theta0.theta.copy()
            start = ann.theta0.start
            if not ann.exact:
                log.warning("term %s: annealing stopped without an exact match", net.focal_term)
            if observed is not None:
                inf = np.isinf(observed.theta)
                theta0[inf] = observed.theta[inf]
                fill = np.isinf(theta0) & ~inf
                theta0[fill] = observed.theta[fill]
    if theta0 is None:
        raise failure
    return theta0, start


def estimate(config: RunConfig, net: CitationNetwork, spec: ModelSpec) -> FitResult:
    """MPLE, or the MLE: exact for dyad-independent models, MCMLE otherwise."""
    if config.method == "mple":
        return mple(net, spec, on_separation="drop")
    if spec.dyad_independent:
        return independent_mle(net, spec)
    theta0, start = starting_values(config, net, spec)
    return mcmle(net, spec, theta0, config.mcmle(seed_for(config, net.focal_term, _MCMLE)), start=start)


def gof_report(config: RunConfig, net: CitationNetwork, spec: ModelSpec, theta) -> GofReport:
    ctl = replace(config.mcmc(seed_for(config, net.focal_term, _GOF)), nsim=config.gof_nsim)
    return gof(net, spec, theta, ctl, scope=config.gof_scope)


def degeneracy_report(config: RunConfig, net: CitationNetwork, spec: ModelSpec, theta) -> DegeneracyReport:
    ctl = replace(config.mcmc(seed_for(config, net.focal_term, _DEGENERACY)), nsim=config.gof_nsim)
    sample = simulate(net, spec, theta, ctl, allow_infinite=True)
    return degeneracy_check(sample, global_stats(net, spec))


def write_gof(report: GofReport, path) -> None:
    write_table(path, GOF_COLUMNS, report.table())


def write_degeneracy(report: DegeneracyReport, path) -> None:
    """Per-statistic coverage in ``path``; flags and traces in sibling files."""
    path = Path(path)
    write_table(path, DEGENERACY_COLUMNS, report.table())
    write_table(path.with_name(path.stem + "_summary.csv"), ("key", "value"), [
        ("near_empty_share", report.near_empty),
        ("near_full_share", report.near_full),
        ("collapsed", report.collapsed),
        ("degenerate", report.degenerate),
    ])
    write_table(path.with_name(path.stem + "_trace.csv"), ("draw",) + tuple(report.names),
                [(k, *row) for k, row in enumerate(report.traces)])


def fit_term(config: RunConfig, dataset: Dataset, t: int, out_dir=None) -> FitResult:
    """Fit the model for focal term ``t`` and write its outputs under ``out_dir/term_<t>``.

    Files: ``coefficients.csv``, ``fit.json``, ``config.txt`` and, when
    enabled in the configuration, ``gof.csv`` and ``degeneracy.csv``.
    """
    spec = config.spec()
    net = term_network(config, dataset, t)
    fit = estimate(config, net, spec)
    if out_dir is not None:
        d = Path(out_dir) / f"term_{t}"
        d.mkdir(parents=True, exist_ok=True)
        write_table(d / "coefficients.csv", COEFFICIENT_COLUMNS, coefficient_rows(fit, t))
        save_fit(fit, d / "fit.json", term=t)
        config.save(d / "config.txt")
        if config.gof_enabled:
            write_gof(gof_report(config, net, spec, fit.theta), d / "gof.csv")
        if config.degeneracy_enabled:
            write_degeneracy(degeneracy_report(config, net, spec, fit.theta), d / "degeneracy.csv")
    return fit


@dataclass
class BatchResult:
    fits: dict            # term -> FitResult
    errors: dict          # term -> exception

    def combined_rows(self) -> list:
        rows = []
        for t in sorted(self.fits):
            fit = self.fits[t]
            pv = p_values(fit.theta, fit.std_errors)
            for k, name in enumerate(fit.names):
                if np.isfinite(fit.theta[k]):
                    rows.append((t, name, float(fit.theta[k]), float(fit.std_errors[k]), float(pv[k])))
        return rows

    def error_rows(self) -> list:
        return [(t, type(e).__name__, str(e)) for t, e in sorted(self.errors.items())]


def batch_fit(config: RunConfig, dataset: Dataset, terms, out_dir=None, jobs: int = 1) -> BatchResult:
    """Fit every term in ``terms``; a failing term is recorded and the run goes on.

    Writes ``combined.csv`` (estimable coefficients of all terms) and
    ``errors.csv`` (one row per failed term) next to the per-term folders.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("no terms to fit")

    def one(t):
        try:
            return t, fit_term(config, dataset, t, out_dir), None
        except CergmError as exc:
            log.warning("term %s failed: %s: %s", t, type(exc).__name__, exc)
            return t, None, exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(one, terms))
    else:
        done = [one(t) for t in terms]
    res = BatchResult({t: f for t, f, e in done if e is None}, {t: e for t, _, e in done if e is not None})
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_table(Path(out_dir) / "combined.csv", COMBINED_COLUMNS, res.combined_rows())
        write_table(Path(out_dir) / "errors.csv", ERROR_COLUMNS, res.error_rows())
    return res


@dataclass
class Comparison:
    fits: dict            # model label -> FitResult

    def rows(self) -> list:
        full = self.fits["full"]
        out = []
        for label, fit in self.fits.items():
            out.append((label, fit.p, fit.loglik, fit.loglik_kind, fit.aic, fit.bic,
                        fit.aic - full.aic, fit.bic - full.bic))
        return out


def compare_models(config: RunConfig, dataset: Dataset, t: int, spec_full: ModelSpec | None = None,
                   spec_independent: ModelSpec | None = None, out_dir=None) -> Comparison:
    """Fit both models to term ``t`` and tabulate log-likelihood, AIC and BIC.

    Deltas are relative to the full model (positive: the full model is preferred).
    The log-likelihood is always computed, so bridge sampling is switched on.
    """
    spec_full = spec_full or config.spec()
    spec_independent = spec_independent or config.independent_spec()
    cfg = replace(config, bridge_enabled=True)
    net = term_network(cfg, dataset, t)
    fits = {}
    for label, spec in (("full", spec_full), ("independent", spec_independent)):
        fits[label] = estimate(cfg, net, spec)
    cmp = Comparison(fits)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_table(Path(out_dir) / f"comparison_term_{t}.csv", COMPARISON_COLUMNS, cmp.rows())
    return cmp


def simulate_term(config: RunConfig, dataset: Dataset, t: int, theta, out_dir=None) -> SampleSet:
    """Draw networks for term ``t`` at ``theta``; writes ``simulated_term_<t>.csv``."""
    spec = config.spec()
    net = term_network(config, dataset, t)
    ctl = config.mcmc(seed_for(config, t, _SIMULATE))
    sample = simulate(net, spec, theta, ctl, allow_infinite=True)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_table(Path(out_dir) / f"simulated_term_{t}.csv", ("draw", "free_edges") + spec.names,
                    [(k, int(e), *row) for k, (e, row) in enumerate(zip(sample.edge_counts, sample.stats))])
    return sample


def diagnose_term(config: RunConfig, dataset: Dataset, t: int, theta, out_dir=None):
    """GOF and degeneracy reports for term ``t`` at ``theta``."""
    spec = config.spec()
    net = term_network(config, dataset, t)
    rep = gof_report(config, net, spec, theta)
    deg = degeneracy_report(config, net, spec, theta)
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        write_gof(rep, d / f"gof_term_{t}.csv")
        write_degeneracy(deg, d / f"degeneracy_term_{t}.csv")
    return rep, deg

