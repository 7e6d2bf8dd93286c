"""Synthetic case tables and citation networks drawn from the model itself.

Used for parameter-recovery checks, model comparison on data with known
dependence, the oracle test instances and the benchmark.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .data import Dataset
from .model import ModelSpec, full_model
from .network import CaseAttributes, CitationNetwork, build
from .sampler import McmcControl, make_rng, simulate

JUSTICES = tuple(f"J{k}" for k in range(1, 10))

# a sparse, mildly clustered regime for 200-case terms (full_model order)
TRUE_THETA = np.array([
    -5.0,    # edges
    2.0,     # mutual
    -0.5,    # gwidegree(1)
    0.3,     # gwesp_osp(0.25)
    0.3,     # diff_term_transitive
    0.02,    # receiver_outdegree
    -0.3,    # mq_absdiff
    1.0,     # same_issue_area
    0.3,     # same_author
    -0.4,    # cited_age
    0.05,    # cited_age_sq
    0.1,     # cited_coalition_size
    0.1,     # cited_ideo_breadth
    -1.0,    # overruled_before
])


def random_cases(rng: np.random.Generator, n: int, term: int, overrule_rate: float = 0.1,
                 horizon: int = 3) -> list:
    cases = []
    for _ in range(n):
        over = None
        if rng.random() < overrule_rate:
            over = term + int(rng.integers(0, horizon))
        cases.append(CaseAttributes(
            decision_term=term,
            mq_median=float(np.round(rng.normal(0.0, 1.0), 6)),
            issue_area=int(rng.integers(1, 15)),
            author_id=JUSTICES[int(rng.integers(0, len(JUSTICES)))],
            coalition_size=int(rng.integers(5, 10)),
            ideo_breadth=float(np.round(rng.uniform(0.0, 3.0), 6)),
            overruled_in_term=over,
        ))
    return cases


def tiny_instance(seed: int, n_prior: int = 4, n_focal: int = 2, history_density: float = 0.4,
                  focal_density: float = 0.3, prior_terms: int = 2) -> CitationNetwork:
    """Small random network for exact-enumeration checks.

    Prior cases are spread over ``prior_terms`` earlier terms with random
    (acyclic) history citations; the focal cases cite at random.
    Free dyads: ``n_focal * (n_prior + n_focal - 1)``.
    """
    rng = make_rng(seed, 101)
    cases = []
    for k in range(n_prior):
        cases += random_cases(rng, 1, k % prior_terms)
    focal = prior_terms
    cases += random_cases(rng, n_focal, focal)
    n = len(cases)
    term = np.array([c.decision_term for c in cases])
    cit = []
    for i in range(n):
        for j in range(n):
            if i == j or term[j] > term[i]:
                continue
            if term[i] == term[j] and term[i] != focal and i < j:
                continue           # keep same-term history acyclic
            rate = focal_density if term[i] == focal else history_density
            if rng.random() < rate:
                cit.append((i, j))
    return build(cases, cit, focal)


def generate_dataset(theta=None, spec: ModelSpec | None = None, *, n_terms: int = 3,
                     cases_per_term: int = 200, seed: int = 0,
                     control: McmcControl | None = None) -> Dataset:
    """Cases and citations drawn term by term from the model at ``theta``.

    Each term's citations are one draw from the sampler conditional on all
    earlier terms, started from the empty configuration.
    """
    spec = spec or full_model()
    theta = TRUE_THETA if theta is None else np.asarray(theta, dtype=float)
    rng = make_rng(seed, 202)
    cases: list = []
    citations = np.zeros((0, 2), dtype=np.int64)
    for t in range(n_terms):
        start = len(cases)
        cases += random_cases(rng, cases_per_term, t)
        net = build(cases, citations, t)
        N = net.n_free_dyads
        ctl = control or McmcControl(burnin=20 * N, interval=1, nsim=1)
        ctl = replace(ctl, nsim=1, seed=int(rng.integers(0, 2**63 - 1)))
        sample = simulate(net, spec, theta, ctl, keep_networks=True)
        ids = sample.networks[-1]
        g = net.state
        new = np.column_stack([g.dyad_i[ids], g.dyad_j[ids]])
        assert np.all(new[:, 0] >= start)
        citations = np.concatenate([citations, new.astype(np.int64)])
    return Dataset(cases, citations)
