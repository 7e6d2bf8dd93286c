"""Metropolis-Hastings simulation of the focal-term citations.

Random numbers come from numpy's counter-based Philox generator, drawn in
blocks outside the kernels, so a seed reproduces a chain exactly whether or
not numba is active.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from . import _kernels
from .errors import NonFiniteParameter
from .model import ModelSpec
from .network import CitationNetwork
from .statistics import change_stats, compile_model, global_stats

RNG_NAME = "numpy.Philox-4x64"
_BLOCK = 1 << 16

PROPOSALS = ("tnt", "uniform")


def make_rng(seed, *key) -> np.random.Generator:
    """Philox generator for ``seed``; ``key`` derives independent sub-streams."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key) -> int:
    """Deterministic 64-bit child seed of ``seed`` for the sub-task ``key``."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class McmcControl:
    """Chain settings. ``None`` burnin/interval resolve per network:
    interval = number of free dyads, burnin = 10 * interval."""

    burnin: int | None = None
    interval: int | None = None
    nsim: int = 10_000
    proposal: str = "tnt"
    seed: int = 0

    def __post_init__(self):
        if self.burnin is not None and self.burnin < 0:
            raise ValueError("burnin must be >= 0")
        if self.interval is not None and self.interval < 1:
            raise ValueError("interval must be >= 1")
        if self.nsim < 1:
            raise ValueError("nsim must be >= 1")
        if self.proposal not in PROPOSALS:
            raise ValueError(f"proposal must be one of {PROPOSALS}")

    def resolve(self, n_dyads: int) -> "McmcControl":
        interval = self.interval if self.interval is not None else max(1, n_dyads)
        burnin = self.burnin if self.burnin is not None else 10 * interval
        return replace(self, burnin=burnin, interval=interval)


@dataclass
class SampleSet:
    stats: np.ndarray                 # (nsim, p)
    edge_counts: np.ndarray           # free-edge count of each draw
    names: tuple
    n_free_dyads: int
    acceptance_rate: float
    control: McmcControl
    networks: list | None = field(default=None, repr=False)   # free-dyad ids per draw

    def __len__(self):
        return self.stats.shape[0]

    @property
    def density(self) -> np.ndarray:
        return self.edge_counts / max(self.n_free_dyads, 1)


def _check_theta(theta, p, allow_infinite):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (p,):
        raise ValueError(f"theta has shape {theta.shape}, model has {p} terms")
    if np.isnan(theta).any() or (not allow_infinite and not np.isfinite(theta).all()):
        raise NonFiniteParameter(f"theta must be finite: {theta}")
    return theta


def conditional_prob(net: CitationNetwork, spec: ModelSpec, theta, dyad) -> float:
    """P(dyad present | all other dyads), the logistic form of the model."""
    theta = _check_theta(theta, len(spec), allow_infinite=False)
    return float(expit(theta @ change_stats(net, spec, dyad)))


def _run_chain(net, spec, theta, ctl, stats0, rng, keep_networks):
    g = net.state
    arrays = compile_model(net, spec)
    p = len(spec)
    stats = stats0.copy()
    out = np.empty((ctl.nsim, p))
    out_edges = np.empty(ctl.nsim, dtype=np.int64)
    buf = np.empty(p)
    tnt = ctl.proposal == "tnt"
    total = ctl.burnin + ctl.nsim * ctl.interval
    countdown = ctl.burnin + ctl.interval
    pos = 0
    accepted = 0
    networks = [] if keep_networks else None
    if keep_networks:
        # advance draw by draw so the live state can be snapshotted
        segments = [ctl.burnin + ctl.interval] + [ctl.interval] * (ctl.nsim - 1)
    else:
        segments = [total]
    for seg in segments:
        remaining = seg
        while remaining > 0:
            step = min(remaining, _BLOCK)
            U = rng.random((step, 3))
            countdown, pos, acc = _kernels.mh_chain(
                g, arrays, theta, stats, U, tnt, ctl.interval, countdown, out, out_edges, pos, buf
            )
            accepted += acc
            remaining -= step
        if keep_networks:
            networks.append(np.sort(g.edge_list[: g.n_edges[0]]))
    return out, out_edges, accepted / total if total else 0.0, networks


def simulate(
    net: CitationNetwork,
    spec: ModelSpec,
    theta,
    control: McmcControl | None = None,
    *,
    keep_networks: bool = False,
    n_chains: int = 1,
    allow_infinite: bool = False,
) -> SampleSet:
    """Draw ``control.nsim`` configurations of C_t from the model at ``theta``.

    The chain runs on a canonical copy started from the network's current
    free-dyad state; the input network is left untouched. With ``n_chains > 1`` the draws are split over
    independent chains on copies of the network (seeds derived from
    ``control.seed``) and concatenated in chain order.

    ``allow_infinite`` admits +/-inf coefficients; moves that would change the
    corresponding statistic in the forbidden direction are always rejected.
    """
    control = (control or McmcControl()).resolve(net.n_free_dyads)
    theta = _check_theta(theta, len(spec), allow_infinite)
    if net.n_free_dyads == 0:
        raise ValueError("network has no free dyads to simulate")
    stats0 = global_stats(net, spec)

    if n_chains <= 1:
        out, edges, acc, nets = _run_chain(net.canonical_copy(), spec, theta, control, stats0,
                                           make_rng(control.seed), keep_networks)
        return SampleSet(out, edges, spec.names, net.n_free_dyads, acc, control, nets)

    sizes = [control.nsim // n_chains + (1 if k < control.nsim % n_chains else 0) for k in range(n_chains)]
    sizes = [s for s in sizes if s > 0]

    def one(k):
        ctl = replace(control, nsim=sizes[k])
        return _run_chain(net.canonical_copy(), spec, theta, ctl, stats0, make_rng(control.seed, k), keep_networks)

    with ThreadPoolExecutor(max_workers=len(sizes)) as pool:
        parts = list(pool.map(one, range(len(sizes))))
    total = sum(control.burnin + s * control.interval for s in sizes)
    acc = sum(a * (control.burnin + s * control.interval) for (_, _, a, _), s in zip(parts, sizes)) / total
    nets = None
    if keep_networks:
        nets = [x for part in parts for x in part[3]]
    return SampleSet(
        np.concatenate([part[0] for part in parts]),
        np.concatenate([part[1] for part in parts]),
        spec.names,
        net.n_free_dyads,
        acc,
        control,
        nets,
    )


def effective_sample_size(x: np.ndarray) -> np.ndarray:
    """Per-column ESS from the initial positive sequence of autocorrelations."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64).T).T
    n = x.shape[0]
    ess = np.empty(x.shape[1])
    for c in range(x.shape[1]):
        v = x[:, c] - x[:, c].mean()
        var = v @ v / n
        if var == 0 or n < 4:
            ess[c] = n
            continue
        f = np.fft.rfft(v, 2 * n)
        acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
        s = 0.0
        for lag in range(1, n - 1, 2):
            pair = acf[lag] + acf[lag + 1]
            if pair <= 0:
                break
            s += pair
        ess[c] = n / max(1.0, 1.0 + 2.0 * s)
    return ess
