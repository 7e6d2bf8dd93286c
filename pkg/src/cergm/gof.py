"""Goodness-of-fit and degeneracy diagnostics from simulated networks.

Reports are plain arrays plus a long-format table (statistic, value,
quantile, count) so plots can be drawn by any external tool.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .model import ModelSpec
from .network import CitationNetwork
from .sampler import McmcControl, SampleSet, simulate

DISTRIBUTIONS = ("indegree", "outdegree", "esp_otp", "esp_osp")
QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)
QUANTILE_NAMES = ("min", "q25", "median", "q75", "max")
SCOPES = ("free", "cumulative")


def network_distributions(net: CitationNetwork, scope: str = "free") -> dict:
    """Degree and edgewise shared-partner histograms of the current state.

    With ``scope="free"`` the histograms cover the modeled part: free edges
    received by every case, free edges sent by each focal case, and shared
    partners of present free edges. ``"cumulative"`` uses every case and
    every edge of C_{<=t}. Shared partners are always counted on C_{<=t}.
    """
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}")
    g = net.state
    cumulative = scope == "cumulative"
    if cumulative:
        indeg = g.indeg
        outdeg = g.outdeg
    else:
        free = g.edge_list[: g.n_edges[0]]
        indeg = np.bincount(g.dyad_j[free], minlength=net.n_cases)
        outdeg = g.outdeg[g.focal_nodes]
    size = net.n_edges if cumulative else net.n_free_edges
    otp = np.empty(size, dtype=np.int64)
    osp = np.empty(size, dtype=np.int64)
    e = _kernels.esp_counts(g, cumulative, otp, osp)
    return {
        "indegree": np.bincount(indeg),
        "outdegree": np.bincount(outdeg),
        "esp_otp": np.bincount(otp[:e], minlength=1),
        "esp_osp": np.bincount(osp[:e], minlength=1),
    }


def _pad(rows):
    width = max(len(r) for r in rows)
    out = np.zeros((len(rows), width), dtype=np.int64)
    for k, r in enumerate(rows):
        out[k, : len(r)] = r
    return out


@dataclass
class GofReport:
    observed: dict            # name -> counts per value 0..K
    simulated: dict           # name -> (nsim, K+1) counts
    quantiles: dict           # name -> (5, K+1), rows min, q25, median, q75, max
    covered: dict             # name -> bool per value
    scope: str = "free"
    model_stats: SampleSet | None = field(default=None, repr=False)

    @property
    def nsim(self) -> int:
        return next(iter(self.simulated.values())).shape[0]

    def all_covered(self) -> bool:
        return all(bool(c.all()) for c in self.covered.values())

    def table(self) -> list:
        """Long-format rows ``(statistic, value, quantile, count)``."""
        rows = []
        for name in DISTRIBUTIONS:
            q = self.quantiles[name]
            for v in range(q.shape[1]):
                rows.append((name, v, "observed", float(self.observed[name][v])))
                for k, qn in enumerate(QUANTILE_NAMES):
                    rows.append((name, v, qn, float(q[k, v])))
        return rows


def summarize(observed: dict, draws: list, scope: str = "free",
              model_stats: SampleSet | None = None) -> GofReport:
    """Quantile summary of per-draw histograms against the observed ones."""
    obs, sim, qs, cov = {}, {}, {}, {}
    for name in DISTRIBUTIONS:
        mat = _pad([observed[name]] + [d[name] for d in draws])
        obs[name] = mat[0]
        sim[name] = mat[1:]
        qs[name] = np.quantile(sim[name], QUANTILES, axis=0)
        cov[name] = (qs[name][0] <= obs[name]) & (obs[name] <= qs[name][-1])
    return GofReport(obs, sim, qs, cov, scope, model_stats)


def gof(net: CitationNetwork, spec: ModelSpec, theta, control: McmcControl | None = None,
        *, scope: str = "free", allow_infinite: bool = True) -> GofReport:
    """Simulate networks at ``theta`` and compare the four auxiliary distributions."""
    control = control or McmcControl(nsim=1000)
    observed = network_distributions(net, scope)
    sample = simulate(net, spec, theta, control, keep_networks=True, allow_infinite=allow_infinite)
    work = net.copy()
    draws = []
    for ids in sample.networks:
        work.set_free_edges(ids)
        draws.append(network_distributions(work, scope))
    sample = replace(sample, networks=None)
    return summarize(observed, draws, scope, sample)


@dataclass
class DegeneracyReport:
    names: tuple
    traces: np.ndarray         # (nsim, p) retained draws
    observed: np.ndarray
    lower: np.ndarray          # 2.5% simulated quantile
    upper: np.ndarray          # 97.5% simulated quantile
    covered: np.ndarray        # observed within [lower, upper]
    histograms: list           # (counts, bin edges) per statistic
    near_empty: float          # share of draws near the empty configuration
    near_full: float           # share of draws near the full configuration
    collapsed: bool
    degenerate: bool

    def table(self) -> list:
        """Rows ``(statistic, observed, lower, upper, covered)``."""
        return [(n, float(o), float(lo), float(hi), bool(c))
                for n, o, lo, hi, c in zip(self.names, self.observed, self.lower, self.upper, self.covered)]


def degeneracy_check(sample: SampleSet, observed, bins: int = 30, collapse_share: float = 0.5,
                     density_margin: float = 0.01, observed_density: float | None = None) -> DegeneracyReport:
    """Flag a model whose draws do not resemble the observed statistics.

    Degenerate when any observed statistic lies outside the central 95% of
    the draws, or when more than half of the draws are within 1% of the
    empty or the full free-dyad configuration.

    An observed network that is itself that sparse (or dense) would make
    every faithful draw look collapsed; the band then narrows to half the
    observed density (or half the observed share of absent dyads).
    ``observed_density`` defaults to the observed edges statistic over the
    number of free dyads when the model has an edges term.
    """
    H = np.asarray(sample.stats, dtype=float)
    if H.shape[0] == 0:
        raise ValueError("sample is empty")
    observed = np.asarray(observed, dtype=float)
    lower, upper = np.quantile(H, [0.025, 0.975], axis=0)
    covered = (lower <= observed) & (observed <= upper)
    hists = [np.histogram(H[:, c], bins=bins) for c in range(H.shape[1])]

    if observed_density is None and "edges" in sample.names:
        observed_density = observed[list(sample.names).index("edges")] / max(sample.n_free_dyads, 1)
    lo, hi = density_margin, 1.0 - density_margin
    if observed_density is not None:
        lo = min(lo, observed_density / 2)
        hi = max(hi, (1.0 + observed_density) / 2)
    dens = sample.density
    near_empty = float(np.mean(dens <= lo))
    near_full = float(np.mean(dens >= hi))
    collapsed = near_empty + near_full > collapse_share
    return DegeneracyReport(
        tuple(sample.names), H, observed, lower, upper, covered, hists,
        near_empty, near_full, collapsed, bool(collapsed or not covered.all()),
    )
