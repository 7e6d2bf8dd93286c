"""Maximum pseudo-likelihood, annealed starting networks, Monte Carlo MLE,
standard errors and bridge-sampled log-likelihoods.

Coefficients fixed at +/-inf mark terms that are inestimable for the observed
term (for example a mutual term when no two focal cases cite each other).
They are carried through every step: the sampler never moves their
statistic in the forbidden direction and they are excluded from the
optimisation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit, logsumexp

from . import _kernels
from .errors import (
    Degenerate,
    HullFailure,
    LoglikUnavailable,
    MaxIterations,
    RankDeficient,
    Separation,
    SingularInformation,
)
from .model import ModelSpec
from .network import CitationNetwork
from .sampler import McmcControl, SampleSet, derive_seed, make_rng, simulate
from .statistics import compile_model, design_matrix, global_stats

log = logging.getLogger(__name__)

SEPARATION_BOUND = 20.0


@dataclass
class FitResult:
    names: tuple
    theta: np.ndarray
    std_errors: np.ndarray
    loglik: float
    aic: float
    bic: float
    iterations: int
    converged: bool
    sample_diagnostics: np.ndarray
    method: str = "mcmle"
    loglik_kind: str = "none"        # "pseudo", "exact", "bridge" or "none"
    n_free_dyads: int = 0
    mc_std_errors: np.ndarray | None = None
    start: str = ""
    notes: list = field(default_factory=list)

    @property
    def inestimable(self) -> np.ndarray:
        return ~np.isfinite(self.theta)

    @property
    def p(self) -> int:
        return len(self.theta)

    def set_loglik(self, loglik: float, kind: str):
        self.loglik = float(loglik)
        self.loglik_kind = kind
        self.aic, self.bic = information_criteria(self.loglik, self.p, self.n_free_dyads)


def information_criteria(loglik: float, p: int, n: int):
    return 2 * p - 2 * loglik, p * math.log(n) - 2 * loglik


# ---------------------------------------------------------------------------
# MPLE
# ---------------------------------------------------------------------------

def _logit_loglik(X, y, theta):
    eta = X @ theta
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


def logistic_newton(X, y, theta0=None, max_iter=200, tol=1e-12):
    """Newton-Raphson for logistic regression with step halving.

    Returns ``(theta, iterations, converged)``.
    """
    p = X.shape[1]
    theta = np.zeros(p) if theta0 is None else np.array(theta0, dtype=float)
    ll = _logit_loglik(X, y, theta)
    for it in range(1, max_iter + 1):
        mu = expit(X @ theta)
        grad = X.T @ (y - mu)
        H = (X * (mu * (1 - mu))[:, None]).T @ X
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = theta + t * step
            new = _logit_loglik(X, y, cand)
            if new >= ll - 1e-12 * max(1.0, abs(ll)) or t < 1e-10:
                break
            t *= 0.5
        theta, ll = cand, new
        if np.max(np.abs(t * step)) < tol * max(1.0, np.max(np.abs(theta))):
            return theta, it, True
        if np.max(np.abs(theta)) > 10 * SEPARATION_BOUND:
            return theta, it, False
    return theta, max_iter, False


def _single_coordinate_separation(col, y):
    """Direction (-1/+1) in which one coefficient can diverge, else 0."""
    pos, neg = col > 0, col < 0
    if not (pos.any() or neg.any()):
        return 0
    if not y[pos].any() and y[neg].all():
        return -1
    if y[pos].all() and not y[neg].any():
        return 1
    return 0


def mple(net: CitationNetwork, spec: ModelSpec, *, on_separation: str = "raise",
         fixed=None) -> FitResult:
    """Logistic regression of observed dyad states on their change statistics.

    ``on_separation="drop"`` fixes a separated coefficient at +/-inf, removes
    the dyads it decides and fits the rest; ``"raise"`` raises
    :class:`Separation`. ``fixed`` pre-assigns infinite coefficients.
    """
    if on_separation not in ("raise", "drop"):
        raise ValueError("on_separation must be 'raise' or 'drop'")
    X = design_matrix(net, spec)
    y = net.free_state().astype(np.float64)
    p = len(spec)
    theta = np.zeros(p)
    rows = np.ones(len(y), dtype=bool)
    if fixed is not None:
        fixed = np.asarray(fixed, dtype=float)
        for c in np.flatnonzero(np.isinf(fixed)):
            theta[c] = fixed[c]
            rows &= X[:, c] == 0

    while True:
        found = False
        for c in np.flatnonzero(np.isfinite(theta)):
            direction = _single_coordinate_separation(X[rows, c], y[rows])
            if direction == 0:
                continue
            if on_separation == "raise":
                sign = "-inf" if direction < 0 else "+inf"
                raise Separation(f"MPLE of {spec.names[c]} diverges to {sign}",
                                 [spec.names[c]], [direction])
            theta[c] = direction * np.inf
            rows &= X[:, c] == 0
            found = True
        if not found:
            break

    est = np.isfinite(theta)
    if not rows.any() or not est.any():
        raise Separation("no dyads left to identify the remaining coefficients",
                         [spec.names[c] for c in np.flatnonzero(~est)])
    Xe, ye = X[rows][:, est], y[rows]
    rank = np.linalg.matrix_rank(Xe)
    if rank < Xe.shape[1]:
        zero = [spec.names[c] for c in np.flatnonzero(est) if not np.any(X[rows, c])]
        detail = f"constant-zero columns {zero}" if zero else "collinear columns"
        raise RankDeficient(f"MPLE design has rank {rank} < {Xe.shape[1]} ({detail})")

    th, iters, ok = logistic_newton(Xe, ye)
    if not ok or np.any(np.abs(th) > SEPARATION_BOUND):
        mu = expit(Xe @ th)
        grad = Xe.T @ (ye - mu)
        bad = [spec.names[c] for c, v in zip(np.flatnonzero(est), th) if abs(v) > SEPARATION_BOUND]
        if not ok or np.max(np.abs(grad)) > 1e-6:
            raise Separation(f"MPLE diverges (quasi-separation) in {bad or 'unknown terms'}", bad)
    theta[est] = th
    mu = expit(Xe @ th)
    info = (Xe * (mu * (1 - mu))[:, None]).T @ Xe
    se = np.full(p, np.nan)
    try:
        d = np.diag(np.linalg.inv(info))
        se[est] = np.where(d > 0, np.sqrt(np.abs(d)), np.nan)
    except np.linalg.LinAlgError:
        pass

    pll = _logit_loglik(Xe, ye, th)
    # dyads decided by an infinite coefficient contribute log(1) = 0
    res = FitResult(
        names=spec.names, theta=theta, std_errors=se, loglik=pll, aic=np.nan, bic=np.nan,
        iterations=iters, converged=True, sample_diagnostics=np.full(p, np.nan),
        method="mple", n_free_dyads=net.n_free_dyads, start="mple",
    )
    res.set_loglik(pll, "pseudo")
    return res



def independent_mle(net: CitationNetwork, spec: ModelSpec) -> FitResult:
    """Exact MLE of a dyad-independent model.

    Dyads are then independent Bernoulli variables, so the MPLE is the MLE,
    its inverse Fisher information gives exact asymptotic standard errors
    and the log-likelihood is the logistic one. The diagnostics are the
    exact (observed - expected) / sd ratios of each statistic.
    """
    if not spec.dyad_independent:
        raise ValueError("independent_mle needs a dyad-independent model")
    res = mple(net, spec, on_separation="drop")
    X = design_matrix(net, spec)
    y = net.free_state().astype(np.float64)
    est = np.isfinite(res.theta)
    rows = np.all(X[:, ~est] == 0, axis=1)
    Xe = X[rows][:, est]
    mu = expit(Xe @ res.theta[est])
    t = np.full(len(spec), np.nan)
    sd = np.sqrt((Xe ** 2 * (mu * (1 - mu))[:, None]).sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t[est] = np.where(sd > 0, (Xe.T @ (y[rows] - mu)) / sd, 0.0)
    res.method = "mle"
    res.start = "mple"
    res.sample_diagnostics = t
    res.set_loglik(res.loglik, "exact")
    return res

# ---------------------------------------------------------------------------
# Simulated annealing start
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnealControl:
    max_sweeps: int = 10_000
    max_proposals: int = 20_000_000
    t0: float = 1.0
    t_min: float = 1e-4              # temperature reached when the budget runs out
    swap_prob: float = 0.5           # share of paired on/off proposals
    tol: float = 1e-9
    init: str = "random"             # "random" or "observed"
    restarts: int = 20
    seed: int = 0


@dataclass
class AnnealResult:
    network: CitationNetwork
    theta0: FitResult | None
    exact: bool
    steps: int
    objective: float
    source: str = "anneal"           # "anneal", "observed" (fallback) or "best" (NonExact)

    @property
    def flag(self) -> str:
        return "exact" if self.exact else "NonExact"


def _objective(stats, target, weights):
    return float(np.sum(weights * (stats - target) ** 2))


def _try_mple(net, spec, on_separation, fixed):
    try:
        return mple(net, spec, on_separation=on_separation, fixed=fixed)
    except (Separation, RankDeficient) as exc:
        log.info("MPLE failed: %s", exc)
        return None


def _integral_coords(spec, arrays, target):
    """Coordinates whose statistic only takes integer values."""
    out = np.zeros(len(spec), dtype=np.bool_)
    for k, term in enumerate(spec.terms):
        if term.kind in ("mutual", "diff_term_transitive"):
            out[k] = True
        elif term.kind == "gwidegree":
            out[k] = term.decay == 1.0
        elif not term.dependent:
            x = arrays.X[:, k]
            out[k] = bool(np.all(x == np.round(x)))
    return out & (target == np.round(target))


def _anneal_weights(X):
    """1 / (typical size of a coordinate's change statistic)^2.

    One toggle then moves the objective by about one unit on every
    coordinate, whatever the scale of the statistic.
    """
    A = np.abs(X)
    nz = A > 0
    scale = np.ones(X.shape[1])
    for k in range(X.shape[1]):
        if nz[:, k].any():
            scale[k] = A[nz[:, k], k].mean()
    return 1.0 / scale ** 2


def _anneal_once(work, spec, target, weights, integral, control, rng, budget):
    N = work.n_free_dyads
    stats = global_stats(work, spec)
    best = np.array([_objective(stats, target, weights), float(work.n_free_edges)])
    best_edges = np.zeros(N, dtype=np.int64)
    best_edges[: work.n_free_edges] = work.state.edge_list[: work.n_free_edges]
    arrays = compile_model(work, spec)
    buf = np.empty(len(spec))
    trial = np.empty(len(spec))
    steps = 0
    log_decay = math.log(control.t_min / control.t0) / max(budget, 1)

    def is_match(h):
        return (_objective(h, target, weights) <= control.tol
                and bool(np.all(np.abs(h - target)[integral] <= 1e-9)))

    matched = is_match(stats)
    while not matched and steps < budget:
        chunk = min(1 << 16, budget - steps)
        U = rng.random((chunk, 4))
        taken, matched = _kernels.anneal_chain(
            work.state, arrays, stats, target, weights, integral, U, steps, control.t0, log_decay,
            control.swap_prob, control.tol, best, best_edges, buf, trial,
        )
        steps += taken
    if matched:
        # guard against drift in the incrementally tracked statistics
        matched = is_match(global_stats(work, spec))
    return matched, steps, best, best_edges


def annealed_start(net: CitationNetwork, spec: ModelSpec, control: AnnealControl | None = None,
                   *, target=None, on_separation: str = "drop", fixed=None) -> AnnealResult:
    """Search for C_t* with h(C_t*) = h(observed) and return its MPLE.

    The search toggles single free dyads or on/off pairs, minimising
    sum_k w_k (h_k - target_k)^2 with w_k the inverse squared mean absolute
    change statistic, while the temperature falls geometrically from
    ``control.t0`` to ``control.t_min`` over the proposal budget. It starts
    from a Bernoulli draw at the observed density and accepts the first state
    whose integer-valued coordinates match exactly and whose objective is at
    most ``control.tol``.

    A match whose MPLE has more infinite coefficients than the observed
    network's MPLE is discarded and the search restarts from a fresh random
    state (up to ``control.restarts`` times); after that the observed network
    itself, which always matches, is used.
    """
    control = control or AnnealControl()
    if control.init not in ("random", "observed"):
        raise ValueError("init must be 'random' or 'observed'")
    target = global_stats(net, spec) if target is None else np.asarray(target, dtype=float)
    N = net.n_free_dyads
    arrays = compile_model(net, spec)
    weights = _anneal_weights(design_matrix(net, spec))
    integral = _integral_coords(spec, arrays, target)
    rng = make_rng(control.seed)
    density = net.n_free_edges / N if N else 0.0
    budget = min(control.max_sweeps * max(N, 1), control.max_proposals)

    observed_fit = None
    observed_done = False
    total = 0
    best_overall = None
    for attempt in range(control.restarts + 1):
        work = net.canonical_copy()
        if control.init == "random" or attempt > 0:
            work.set_free_state(rng.random(N) < density)
        matched, steps, best, best_edges = _anneal_once(work, spec, target, weights, integral, control, rng, budget)
        total += steps
        if not matched:
            # a fresh start would face the same budget; stop here
            if not observed_done:
                best_overall = (best, best_edges, work)
            break
        theta0 = _try_mple(work, spec, on_separation, fixed)
        if not observed_done:
            observed_fit = _try_mple(net, spec, on_separation, fixed)
            observed_done = True
        allowed = np.isinf(observed_fit.theta) if observed_fit is not None else np.ones(len(spec), bool)
        if observed_fit is None or (theta0 is not None and not np.any(np.isinf(theta0.theta) & ~allowed)):
            if theta0 is not None:
                theta0.start = "anneal"
            return AnnealResult(work, theta0, True, total, 0.0)
        log.info("annealed match %d has a less finite MPLE than the observed network; restarting", attempt)

    if best_overall is None:
        if observed_fit is not None:
            observed_fit.start = "observed"
        return AnnealResult(net.copy(), observed_fit, True, total, 0.0, source="observed")

    best, best_edges, work = best_overall
    work.set_free_edges(best_edges[: int(best[1])])
    final_obj = _objective(global_stats(work, spec), target, weights)
    theta0 = _try_mple(work, spec, on_separation, fixed)
    if theta0 is not None:
        theta0.start = "anneal-nonexact"
    return AnnealResult(work, theta0, False, total, final_obj, source="best")


# ---------------------------------------------------------------------------
# MCMLE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BridgeControl:
    points: int = 16
    mcmc: McmcControl = McmcControl(nsim=2000)
    reference: str = "factorized"    # or "zero"


@dataclass(frozen=True)
class McmleControl:
    mcmc: McmcControl = McmcControl()
    max_iter: int = 40
    t_tol: float = 0.1
    ll_tol: float = 1e-4
    trust_radius: float = 3.0
    hull_margin: float = 1.05
    max_halvings: int = 10
    nsim_growth: int = 2
    nsim_max: int | None = None      # default 16 * mcmc.nsim
    floor_factor: float = 2.0
    degenerate_patience: int = 3
    bridge: BridgeControl | None = BridgeControl()


def _in_hull(points: np.ndarray, q: np.ndarray) -> bool:
    """Is ``q`` a convex combination of the rows of ``points``?"""
    pts = np.unique(points, axis=0)
    n = pts.shape[0]
    A_eq = np.vstack([pts.T, np.ones((1, n))])
    b_eq = np.concatenate([q, [1.0]])
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


def _surrogate(D, target, delta):
    return float(delta @ target - (logsumexp(D @ delta) - math.log(D.shape[0])))


def maximize_surrogate(D: np.ndarray, target: np.ndarray, radius: float, max_iter: int = 100):
    """Maximise delta' target - log mean exp(delta' D_s) inside a trust region.

    ``D`` holds simulated statistics minus observed ones; the region is
    ``delta' Cov(D) delta <= radius^2``. Returns ``(delta, improvement)``.
    """
    p = D.shape[1]
    cov = np.atleast_2d(np.cov(D, rowvar=False))
    delta = np.zeros(p)
    f = 0.0
    for _ in range(max_iter):
        z = D @ delta
        w = np.exp(z - z.max())
        w /= w.sum()
        m = w @ D
        C = (D - m).T @ ((D - m) * w[:, None])
        g = target - m
        step = np.linalg.lstsq(C + 1e-10 * np.eye(p) * max(np.trace(C), 1e-12), g, rcond=None)[0]
        t = 1.0
        improved = False
        for _ in range(40):
            cand = delta + t * step
            if cand @ cov @ cand > radius * radius:
                t *= 0.5
                continue
            fc = _surrogate(D, target, cand)
            if fc > f:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        gain = fc - f
        delta, f = cand, fc
        if gain < 1e-14:
            break
    return delta, f


def _t_ratios(D):
    mean = D.mean(axis=0)
    sd = D.std(axis=0, ddof=1) if D.shape[0] > 1 else np.zeros(D.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(sd > 0, -mean / np.where(sd > 0, sd, 1.0), np.where(mean == 0, 0.0, np.inf))
    return t


def _collapsed(sample: SampleSet) -> bool:
    dens = sample.density
    return bool(np.mean((dens <= 0.01) | (dens >= 0.99)) > 0.5)


def standard_errors(sample, spec: ModelSpec | None = None, *, coords=None) -> np.ndarray:
    """Square roots of the diagonal of the inverse simulated covariance.

    ``sample`` is a :class:`SampleSet` or an ``(nsim, p)`` array. ``coords``
    restricts the information matrix to a subset of coordinates (other
    entries come back as nan).
    """
    H = sample.stats if isinstance(sample, SampleSet) else np.asarray(sample, dtype=float)
    p = H.shape[1]
    coords = np.arange(p) if coords is None else np.asarray(coords)
    cov = np.atleast_2d(np.cov(H[:, coords], rowvar=False))
    eig = np.linalg.eigvalsh(cov)
    if eig.min() <= 1e-10 * max(eig.max(), 1e-300):
        names = spec.names if spec is not None else range(p)
        raise SingularInformation(
            f"simulated covariance is singular for terms {[names[c] for c in coords]}"
        )
    se = np.full(p, np.nan)
    se[coords] = np.sqrt(np.diag(np.linalg.inv(cov)))
    return se


def _batch_mean_cov(H: np.ndarray, n_batches: int = 20):
    """Covariance of the sample mean by non-overlapping batch means (None if too short)."""
    n = H.shape[0]
    b = n // n_batches
    if b < 2:
        return None
    means = H[: b * n_batches].reshape(n_batches, b, -1).mean(axis=1)
    return np.atleast_2d(np.cov(means, rowvar=False)) / n_batches


def mc_standard_errors(H: np.ndarray, coords, n_batches: int = 20) -> np.ndarray:
    """Monte Carlo error of the estimate, I^-1 Var(mean h) I^-1, by batch means."""
    out = np.full(H.shape[1], np.nan)
    Hc = H[:, coords]
    var_mean = _batch_mean_cov(Hc, n_batches)
    if var_mean is None:
        return out
    try:
        inv = np.linalg.inv(np.atleast_2d(np.cov(Hc, rowvar=False)))
    except np.linalg.LinAlgError:
        return out
    out[coords] = np.sqrt(np.clip(np.diag(inv @ var_mean @ inv), 0, None))
    return out


def noise_floor(D: np.ndarray, n_batches: int = 20) -> float:
    """Expected surrogate improvement from Monte Carlo error alone.

    At the MLE the sample mean of ``D`` is pure noise with covariance V, and
    the maximised surrogate is then about d' Sigma^-1 d / 2, whose
    expectation is tr(Sigma^-1 V) / 2.
    """
    V = _batch_mean_cov(D, n_batches)
    if V is None:
        return 0.0
    S = np.atleast_2d(np.cov(D, rowvar=False))
    return float(0.5 * np.trace(np.linalg.pinv(S) @ V))


def _stepping_gamma(D, margin, max_halvings):
    """Largest step fraction towards the observed statistics (Hummel et al.)."""
    mean = D.mean(axis=0)
    if _in_hull(D, mean * (1 - margin)):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(max_halvings):
        mid = 0.5 * (lo + hi)
        if _in_hull(D, mean * (1 - margin * mid)):
            lo = mid
        else:
            hi = mid
    return lo


def mcmle(net: CitationNetwork, spec: ModelSpec, theta0, control: McmleControl | None = None,
          *, start: str = "") -> FitResult:
    """Monte Carlo MLE from ``theta0`` (infinite entries stay fixed).

    Each iteration simulates at the current estimate, checks whether the
    observed statistics are inside the convex hull of the draws (partial
    stepping otherwise), and maximises the importance-sampled log-likelihood
    ratio by trust-region Newton. Convergence requires every
    |(observed - mean) / sd| < ``t_tol`` and a predicted improvement below
    ``ll_tol`` or within ``floor_factor`` times its expected Monte Carlo noise
    (:func:`noise_floor`); with many statistics the noise alone exceeds any
    fixed tolerance. The sample size grows whenever the step is
    indistinguishable from that noise.
    """
    control = control or McmleControl()
    theta = np.array(theta0, dtype=float)
    p = len(spec)
    if theta.shape != (p,) or np.isnan(theta).any():
        raise ValueError("theta0 must be a length-p vector without NaN")
    est = np.isfinite(theta)
    h_obs = global_stats(net, spec)
    nsim = control.mcmc.nsim
    nsim_max = control.nsim_max or 16 * nsim
    collapsed_run = 0
    obs_density = net.n_free_edges / max(net.n_free_dyads, 1)
    obs_extreme = obs_density <= 0.01 or obs_density >= 0.99
    t = np.full(p, np.nan)
    sample = None

    for it in range(1, control.max_iter + 1):
        ctl = replace(control.mcmc, nsim=nsim, seed=derive_seed(control.mcmc.seed, it))
        sample = simulate(net, spec, theta, ctl, allow_infinite=True)
        D = sample.stats[:, est] - h_obs[est]
        t = np.full(p, np.nan)
        t[est] = _t_ratios(D)

        if _collapsed(sample) and not obs_extreme:
            collapsed_run += 1
            if collapsed_run >= control.degenerate_patience:
                raise Degenerate(
                    f"simulated networks collapse to empty/full for {collapsed_run} iterations at theta={theta}"
                )
        else:
            collapsed_run = 0

        gamma = _stepping_gamma(D, control.hull_margin, control.max_halvings)
        if gamma <= 0.0:
            raise HullFailure(f"observed statistics outside the simulated hull at iteration {it}")
        target = (1.0 - gamma) * D.mean(axis=0)
        delta, improvement = maximize_surrogate(D, target, control.trust_radius)
        floor = noise_floor(D)
        within_noise = improvement <= control.floor_factor * floor
        t_ok = bool(np.all(np.abs(t[est]) < control.t_tol))
        log.debug("iter %d gamma=%.3f max|t|=%.3g improvement=%.3g floor=%.3g nsim=%d",
                  it, gamma, np.max(np.abs(t[est])), improvement, floor, nsim)

        if gamma == 1.0 and t_ok and (improvement < control.ll_tol or within_noise):
            theta_hat = theta.copy()
            theta_hat[est] += delta
            return _finish(net, spec, theta_hat, sample, t, it, control, start, est)
        # the step is within Monte Carlo error: only a larger sample can help
        if gamma == 1.0 and (t_ok or within_noise):
            nsim = min(nsim * control.nsim_growth, nsim_max)
        theta[est] += delta

    partial = _finish(net, spec, theta, sample, t, control.max_iter, control, start, est,
                      converged=False, loglik=False)
    raise MaxIterations(f"MCMLE did not converge in {control.max_iter} iterations", partial)


def _finish(net, spec, theta, sample, t, iters, control, start, est, converged=True, loglik=True):
    coords = np.flatnonzero(est)
    try:
        se = standard_errors(sample, spec, coords=coords)
    except SingularInformation:
        if converged:
            raise
        se = np.full(len(spec), np.nan)
    res = FitResult(
        names=spec.names, theta=theta, std_errors=se, loglik=np.nan, aic=np.nan, bic=np.nan,
        iterations=iters, converged=converged, sample_diagnostics=t, method="mcmle",
        n_free_dyads=net.n_free_dyads, mc_std_errors=mc_standard_errors(sample.stats, coords),
        start=start,
    )
    if loglik and control.bridge is not None:
        try:
            ll = loglik_and_ic(net, spec, theta, control.bridge)
            res.set_loglik(ll.loglik, ll.kind)
        except LoglikUnavailable as exc:
            res.notes.append(str(exc))
    return res


# ---------------------------------------------------------------------------
# Log-likelihood
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoglikResult:
    loglik: float
    aic: float
    bic: float
    kind: str


def _linear_predictor(X, theta, coords):
    eta = np.zeros(X.shape[0])
    for c in coords:
        x = X[:, c]
        if np.isinf(theta[c]):
            nz = x != 0
            eta[nz] += theta[c] * np.sign(x[nz])
        elif theta[c] != 0:
            eta += theta[c] * x
    return eta


def _ylogp(y, eta):
    # y * eta with 0 * inf = 0
    out = np.zeros(len(y))
    nz = y != 0
    out[nz] = y[nz] * eta[nz]
    return out


def reference_loglik(net: CitationNetwork, spec: ModelSpec, theta) -> float:
    """Exact log-likelihood of a pair-factorisable parameter vector.

    Only edge-sum terms and the mutual term may be non-zero: the model then
    factorises over single dyads and over the reciprocal pairs of focal-term
    cases.
    """
    theta = np.asarray(theta, dtype=float)
    for k, term in enumerate(spec.terms):
        if term.dependent and term.kind != "mutual" and theta[k] != 0:
            raise LoglikUnavailable(f"{term.name} is not factorisable")
    arrays = compile_model(net, spec)
    g = net.state
    y = net.free_state().astype(np.float64)
    indep = [k for k, term in enumerate(spec.terms) if not term.dependent]
    eta = _linear_predictor(arrays.X, theta, indep)
    mu = theta[spec.index("mutual")] if "mutual" in spec else 0.0

    partner = np.full(len(y), -1)
    fj = g.focal_idx[g.dyad_j]
    both = fj >= 0
    partner[both] = g.dyad_id[fj[both], g.dyad_i[both]]
    single = partner < 0
    ll = float(np.sum(_ylogp(y[single], eta[single]) - np.logaddexp(0.0, eta[single])))

    first = np.flatnonzero(~single & (np.arange(len(y)) < partner))
    second = partner[first]
    a1, a2 = eta[first], eta[second]
    y1, y2 = y[first], y[second]
    with np.errstate(invalid="ignore"):
        joint = a1 + a2 + mu
    joint = np.where(np.isnan(joint), -np.inf, joint)
    norm = logsumexp(np.stack([np.zeros_like(a1), a1, a2, joint]), axis=0)
    both_on = y1 * y2
    obs = _ylogp(y1, a1) + _ylogp(y2, a2) + _ylogp(both_on, np.full(len(both_on), mu))
    ll += float(np.sum(obs - norm))
    return ll


def loglik_and_ic(net: CitationNetwork, spec: ModelSpec, theta_hat,
                  control: BridgeControl | None = None) -> LoglikResult:
    """Log-likelihood at ``theta_hat`` with AIC and BIC.

    Bridges in ``control.points`` equal steps from a reference whose
    log-likelihood is known exactly: ``theta_hat`` with the non-factorisable
    dependence coefficients set to zero (``reference="factorized"``) or the
    zero vector (``reference="zero"``, a uniform distribution).
    """
    control = control or BridgeControl()
    theta_hat = np.asarray(theta_hat, dtype=float)
    p = len(spec)
    n = net.n_free_dyads
    inf = np.isinf(theta_hat)
    nonfactor = np.array([t.dependent and t.kind != "mutual" for t in spec.terms])
    if np.any(inf & nonfactor):
        raise LoglikUnavailable("an infinite coefficient on a non-factorisable term has no exact reference")

    if control.reference == "zero":
        if inf.any():
            raise LoglikUnavailable("zero reference cannot represent infinite coefficients")
        ref = np.zeros(p)
        ll_ref = -n * math.log(2.0)
    elif control.reference == "factorized":
        ref = np.where(nonfactor, 0.0, theta_hat)
        ll_ref = reference_loglik(net, spec, ref)
    else:
        raise ValueError("reference must be 'factorized' or 'zero'")

    if np.array_equal(ref, theta_hat):
        aic, bic = information_criteria(ll_ref, p, n)
        return LoglikResult(ll_ref, aic, bic, "exact")

    h_obs = global_stats(net, spec)
    fin = ~inf
    diff = np.zeros(p)
    diff[fin] = theta_hat[fin] - ref[fin]
    K = control.points
    grid = [np.where(fin, ref + (k / K) * diff, theta_hat) for k in range(K + 1)]
    step = diff[fin] / K
    centred = []
    for k, th in enumerate(grid):
        ctl = replace(control.mcmc, seed=derive_seed(control.mcmc.seed, 7919, k))
        s = simulate(net, spec, th, ctl, allow_infinite=True)
        centred.append(s.stats[:, fin] - h_obs[fin])
    log_ratio = 0.0
    for k in range(K):
        up = centred[k] @ (step / 2)
        down = centred[k + 1] @ (-step / 2)
        log_ratio += (logsumexp(up) - math.log(len(up))) - (logsumexp(down) - math.log(len(down)))
    ll = ll_ref - log_ratio
    aic, bic = information_criteria(ll, p, n)
    return LoglikResult(ll, aic, bic, "bridge")
