"""Exact computations by enumerating every free-dyad configuration.

Only feasible for small networks (about 20 free dyads at most); used as the
reference for the sampler and the estimators.
"""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .errors import Separation
from .model import ModelSpec
from .network import CitationNetwork
from .statistics import batch_stats, global_stats

MAX_DYADS = 22


def all_states(n_dyads: int) -> np.ndarray:
    """Every 0/1 vector of length ``n_dyads``; row k is the binary expansion of k."""
    if n_dyads > MAX_DYADS:
        raise ValueError(f"refusing to enumerate 2^{n_dyads} configurations")
    k = np.arange(1 << n_dyads, dtype=np.int64)
    return ((k[:, None] >> np.arange(n_dyads)) & 1).astype(np.uint8)


def state_index(states: np.ndarray) -> np.ndarray:
    """Inverse of :func:`all_states` for a stack of 0/1 rows."""
    states = np.atleast_2d(states).astype(np.int64)
    return states @ (1 << np.arange(states.shape[1], dtype=np.int64))


def enumerate_stats(net: CitationNetwork, spec: ModelSpec, chunk: int = 4096) -> np.ndarray:
    """Statistic vectors of all configurations, in :func:`all_states` order."""
    states = all_states(net.n_free_dyads)
    parts = [batch_stats(net, spec, states[s:s + chunk]) for s in range(0, len(states), chunk)]
    return np.concatenate(parts)


def _log_weights(H, theta):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(H.shape[0])
    for c, th in enumerate(theta):
        if np.isinf(th):
            out += np.where(H[:, c] != 0, th * np.sign(H[:, c]), 0.0)
        elif th != 0:
            out += th * H[:, c]
    return out


def probabilities(H: np.ndarray, theta) -> np.ndarray:
    lw = _log_weights(H, theta)
    return np.exp(lw - logsumexp(lw))


def loglik(net: CitationNetwork, spec: ModelSpec, theta, H: np.ndarray | None = None) -> float:
    """log P(observed configuration) by full enumeration."""
    H = enumerate_stats(net, spec) if H is None else H
    lw = _log_weights(H, theta)
    obs = int(state_index(net.free_state())[0])
    return float(lw[obs] - logsumexp(lw))


def mean_stats(H: np.ndarray, theta) -> np.ndarray:
    return probabilities(H, theta) @ H


def mle(net: CitationNetwork, spec: ModelSpec, theta0=None, H: np.ndarray | None = None,
        max_iter: int = 200, tol: float = 1e-11) -> np.ndarray:
    """Exact MLE by damped Newton on the enumerated log-likelihood.

    Raises :class:`Separation` when the observed statistics lie on the
    boundary of their convex hull (the MLE does not exist).
    """
    H = enumerate_stats(net, spec) if H is None else H
    h_obs = global_stats(net, spec)
    lo, hi = H.min(axis=0), H.max(axis=0)
    edge = (h_obs <= lo) | (h_obs >= hi)
    if edge.any():
        raise Separation(f"observed statistics {np.flatnonzero(edge).tolist()} are extreme; "
                         "the exact MLE does not exist")
    p = H.shape[1]
    theta = np.zeros(p) if theta0 is None else np.array(theta0, dtype=float)
    Hc = H - h_obs

    def value(th):
        return -logsumexp(Hc @ th)

    f = value(theta)
    for _ in range(max_iter):
        w = probabilities(Hc, theta)
        m = w @ Hc
        C = (Hc - m).T @ ((Hc - m) * w[:, None])
        grad = -m
        try:
            step = np.linalg.solve(C, grad)
        except np.linalg.LinAlgError:
            raise Separation("information matrix is singular; the exact MLE does not exist")
        t = 1.0
        while t > 1e-12:
            cand = theta + t * step
            fc = value(cand)
            if fc >= f - 1e-14:
                break
            t *= 0.5
        theta, f = cand, fc
        if np.max(np.abs(grad)) < tol * max(1.0, np.max(np.abs(h_obs))):
            if np.max(np.abs(theta)) > 20:
                raise Separation("exact MLE diverges; observed statistics are on a hull face")
            return theta
        if np.max(np.abs(theta)) > 50:
            raise Separation("exact MLE diverges; observed statistics are on the hull boundary")
    raise Separation("exact Newton did not converge")
