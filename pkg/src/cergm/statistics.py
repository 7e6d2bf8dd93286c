"""Statistic vectors and change statistics.

Two independent routes compute the same quantities:

* :func:`global_stats` recounts every statistic from the whole edge set
  (sparse matrix algebra), and :func:`batch_stats` does the same for a stack
  of dense adjacency matrices;
* :func:`change_stats` and the sampler kernels update incrementally from the
  neighbourhood of one dyad.

Statistics are evaluated on the cumulative graph C_{<=t}. Pair-based terms
(mutual, gwesp) count only pairs that involve a focal-term case; edge-sum
terms count only free edges.
"""
from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import MissingAttribute
from .model import ModelSpec, Term
from .network import CitationNetwork

log = logging.getLogger(__name__)

_CODES = {
    "mutual": _kernels.MUTUAL,
    "gwidegree": _kernels.GWIDEGREE,
    "gwesp_osp": _kernels.GWESP_OSP,
    "diff_term_transitive": _kernels.DIFF_TERM_TRANS,
}


class ModelArrays(NamedTuple):
    codes: np.ndarray   # int64[p]
    base: np.ndarray    # float64[p]: 1-1/decay (gwidegree), 1-exp(-decay) (gwesp)
    scale: np.ndarray   # float64[p]: exp(decay) for gwesp
    X: np.ndarray       # float64[N, p]: dyadic values of the edge-sum terms


def _attr(net, name):
    vals = [getattr(c, name) for c in net.cases]
    missing = np.array([v is None for v in vals])
    return vals, missing


def covariate_matrix(net: CitationNetwork, term: Term):
    """Dense ``n x n`` matrix X_ij for an edge-sum term.

    Returns ``(X, n_imputed)``; entries that need a missing attribute are 0
    and counted when ``net.impute_missing`` is set, otherwise
    :class:`MissingAttribute` is raised.
    """
    n = net.n_cases
    g = net.state
    term_of = g.term.astype(np.float64)
    kind = term.kind
    miss = np.zeros((n, n), dtype=bool)
    if kind == "edges":
        X = np.ones((n, n))
    elif kind == "receiver_outdegree":
        # history-only outdegree: citations a prior case sent at its decision
        hist = np.where(g.focal_idx < 0, g.outdeg, 0).astype(np.float64)
        X = np.broadcast_to(hist, (n, n)).copy()
    elif kind == "cited_age":
        X = term_of[:, None] - term_of[None, :]
    elif kind == "cited_age_sq":
        X = (term_of[:, None] - term_of[None, :]) ** 2
    elif kind == "overruled_before":
        over = np.array([np.inf if c.overruled_in_term is None else c.overruled_in_term
                         for c in net.cases], dtype=np.float64)
        X = (over[None, :] < term_of[:, None]).astype(np.float64)
    elif kind == "mq_absdiff":
        vals, m = _attr(net, "mq_median")
        v = np.array([0.0 if x is None else x for x in vals])
        X = np.abs(v[:, None] - v[None, :])
        miss = m[:, None] | m[None, :]
    elif kind in ("same_issue_area", "same_author"):
        vals, m = _attr(net, "issue_area" if kind == "same_issue_area" else "author_id")
        codes = {}
        v = np.array([-1 if x is None else codes.setdefault(x, len(codes)) for x in vals])
        X = (v[:, None] == v[None, :]).astype(np.float64)
        miss = m[:, None] | m[None, :]
    elif kind in ("cited_coalition_size", "cited_ideo_breadth"):
        vals, m = _attr(net, "coalition_size" if kind == "cited_coalition_size" else "ideo_breadth")
        v = np.array([0.0 if x is None else float(x) for x in vals])
        X = np.broadcast_to(v, (n, n)).copy()
        miss = np.broadcast_to(m, (n, n)).copy()
    elif kind == "user":
        if term.matrix not in net.dyad_covariates:
            raise MissingAttribute(f"no dyad covariate matrix named {term.matrix!r}")
        X = net.dyad_covariates[term.matrix].copy()
        miss = np.isnan(X)
    else:
        raise ValueError(f"{kind} is not an edge-sum term")

    # only free dyads matter
    rel = np.zeros((n, n), dtype=bool)
    rel[g.dyad_i, g.dyad_j] = True
    miss &= rel
    n_missing = int(miss.sum())
    if n_missing:
        if not net.impute_missing:
            raise MissingAttribute(f"{term.name}: {n_missing} free dyads need a missing attribute")
        X[miss] = 0.0
        log.info("%s: imputed 0 for %d dyads with missing attributes", term.name, n_missing)
    return X, n_missing


def compile_model(net: CitationNetwork, spec: ModelSpec) -> ModelArrays:
    """Kernel-ready arrays for ``spec`` on ``net`` (cached per network)."""
    cached = net._compiled.get(spec)
    if cached is not None:
        return cached
    p = len(spec)
    N = net.n_free_dyads
    codes = np.zeros(p, dtype=np.int64)
    base = np.zeros(p)
    scale = np.ones(p)
    X = np.zeros((N, p))
    di, dj = net.state.dyad_i, net.state.dyad_j
    for k, term in enumerate(spec.terms):
        if term.dependent:
            codes[k] = _CODES[term.kind]
            if term.kind == "gwidegree":
                base[k] = 1.0 - 1.0 / term.decay
            elif term.kind == "gwesp_osp":
                base[k] = 1.0 - math.exp(-term.decay)
                scale[k] = math.exp(term.decay)
        else:
            mat, _ = covariate_matrix(net, term)
            X[:, k] = mat[di, dj]
    arrays = ModelArrays(codes, base, scale, X)
    net._compiled[spec] = arrays
    return arrays


def _gw_weights(values, term: Term):
    if term.kind == "gwidegree":
        lam = term.decay
        return lam * (1.0 - np.power(1.0 - 1.0 / lam, values))
    phi = term.decay
    return math.exp(phi) * (1.0 - np.power(1.0 - math.exp(-phi), values))


def global_stats(net: CitationNetwork, spec: ModelSpec) -> np.ndarray:
    """Statistic vector h(C_t, C_{<t}) recounted from the full edge set."""
    arrays = compile_model(net, spec)
    g = net.state
    n = net.n_cases
    focal = g.focal_idx >= 0
    present = net.free_state().astype(np.float64)
    out = present @ arrays.X

    rows, cols = np.nonzero(g.adj)
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    for k, term in enumerate(spec.terms):
        if term.kind == "mutual":
            M = A.multiply(A.T).tocoo()
            M.eliminate_zeros()
            keep = (M.row < M.col) & (focal[M.row] | focal[M.col])
            out[k] = float(np.count_nonzero(keep))
        elif term.kind == "gwidegree":
            indeg = np.asarray(A.sum(axis=0)).ravel()
            out[k] = float(_gw_weights(indeg, term).sum())
        elif term.kind == "gwesp_osp":
            C = (A + A.T).tocoo()
            C.eliminate_zeros()
            keep = (C.row < C.col) & (focal[C.row] | focal[C.col])
            r, c = C.row[keep], C.col[keep]
            shared = np.asarray(A[r].multiply(A[c]).sum(axis=1)).ravel() if len(r) else np.zeros(0)
            out[k] = float(_gw_weights(shared, term).sum())
        elif term.kind == "diff_term_transitive":
            nonfocal = (~focal).astype(np.float64)
            two_paths = (A @ sp.diags(nonfocal) @ A).tocsr()
            keep = focal[rows] & (nonfocal[cols] > 0)
            r, c = rows[keep], cols[keep]
            if len(r):
                hits = np.asarray(two_paths[r, c]).ravel() > 0
                out[k] = float(np.count_nonzero(hits))
            else:
                out[k] = 0.0
    return out


def batch_stats(net: CitationNetwork, spec: ModelSpec, states: np.ndarray) -> np.ndarray:
    """Statistics for many free-dyad configurations at once (dense route).

    ``states`` is ``(B, N)`` with 0/1 entries in dyad-id order. Intended for
    small networks (enumeration oracles).
    """
    arrays = compile_model(net, spec)
    g = net.state
    n = net.n_cases
    states = np.asarray(states)
    B = states.shape[0]
    out = states.astype(np.float64) @ arrays.X

    A = np.broadcast_to(g.adj.astype(np.float64), (B, n, n)).copy()
    A[:, g.dyad_i, g.dyad_j] = states
    At = A.transpose(0, 2, 1)
    focal = g.focal_idx >= 0
    upper_pairs = np.triu(focal[:, None] | focal[None, :], 1)
    for k, term in enumerate(spec.terms):
        if term.kind == "mutual":
            out[:, k] = (A * At * upper_pairs).sum(axis=(1, 2))
        elif term.kind == "gwidegree":
            out[:, k] = _gw_weights(A.sum(axis=1), term).sum(axis=1)
        elif term.kind == "gwesp_osp":
            shared = A @ At
            connected = ((A + At) > 0) & upper_pairs
            out[:, k] = (_gw_weights(shared, term) * connected).sum(axis=(1, 2))
        elif term.kind == "diff_term_transitive":
            nonfocal = ~focal
            two_paths = (A * nonfocal[None, None, :]) @ A
            mask = focal[:, None] & nonfocal[None, :]
            out[:, k] = (A * mask * (two_paths > 0)).sum(axis=(1, 2))
    return out


def change_stats(net: CitationNetwork, spec: ModelSpec, dyad) -> np.ndarray:
    """h(with dyad) - h(without dyad), other dyads held at their current state."""
    i, j = dyad
    d = net.dyad_index(i, j)
    out = np.empty(len(spec))
    _kernels.change_into(net.state, compile_model(net, spec), d, out)
    return out


def design_matrix(net: CitationNetwork, spec: ModelSpec) -> np.ndarray:
    """Change statistics of every free dyad at the current state, ``(N, p)``."""
    out = np.empty((net.n_free_dyads, len(spec)))
    _kernels.design_matrix(net.state, compile_model(net, spec), out)
    return out
