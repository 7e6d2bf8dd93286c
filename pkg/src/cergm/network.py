"""Layered citation network with a frozen past and a mutable focal term.

Cases are addressed by dense integer ids ``0..n-1``. Edges point from the
citing case to the cited case. Only dyads whose citing case is decided in the
focal term are free; every other dyad is part of the fixed history.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import ConstraintViolation, FixedDyad, UnknownCase


@dataclass(frozen=True)
class CaseAttributes:
    decision_term: int
    mq_median: float | None = None
    issue_area: int | None = None
    author_id: str | None = None
    coalition_size: int | None = None
    ideo_breadth: float | None = None
    overruled_in_term: int | None = None

    def __post_init__(self):
        if self.ideo_breadth is not None and not self.ideo_breadth >= 0:
            raise ConstraintViolation(f"ideo_breadth must be >= 0, got {self.ideo_breadth}")
        if self.coalition_size is not None and not 1 <= self.coalition_size <= 9:
            raise ConstraintViolation(f"coalition_size must be in [1, 9], got {self.coalition_size}")
        if self.issue_area is not None and not 1 <= self.issue_area <= 14:
            raise ConstraintViolation(f"issue_area must be in [1, 14], got {self.issue_area}")
        if self.overruled_in_term is not None and self.overruled_in_term < self.decision_term:
            raise ConstraintViolation(
                f"overruled_in_term {self.overruled_in_term} precedes decision term {self.decision_term}"
            )
        if self.mq_median is not None and not math.isfinite(self.mq_median):
            raise ConstraintViolation("mq_median must be finite")


class GraphState(NamedTuple):
    """Array view handed to the kernels. Mutable fields are marked (m)."""

    term: np.ndarray          # int64[n]
    focal_idx: np.ndarray     # int64[n], -1 for historical cases
    focal_nodes: np.ndarray   # int64[m]
    adj: np.ndarray           # uint8[n, n] (m)
    indeg: np.ndarray         # int64[n] (m)
    outdeg: np.ndarray        # int64[n] (m)
    fx_out_ptr: np.ndarray    # CSR of fixed edges by citing case
    fx_out_idx: np.ndarray
    fx_in_ptr: np.ndarray     # CSR of fixed edges by cited case
    fx_in_idx: np.ndarray
    fout: np.ndarray          # int64[m, n] out lists of focal cases (m)
    fout_len: np.ndarray      # (m)
    fout_pos: np.ndarray      # (m)
    fin: np.ndarray           # int64[n, m] focal citers of each case (m)
    fin_len: np.ndarray       # (m)
    fin_pos: np.ndarray       # (m)
    dyad_id: np.ndarray       # int64[m, n], -1 on the diagonal
    dyad_i: np.ndarray        # int64[N]
    dyad_j: np.ndarray        # int64[N]
    edge_list: np.ndarray     # free dyad ids of present free edges (m)
    edge_pos: np.ndarray      # (m)
    n_edges: np.ndarray       # int64[1] (m)


_MUTABLE = (
    "adj", "indeg", "outdeg", "fout", "fout_len", "fout_pos",
    "fin", "fin_len", "fin_pos", "edge_list", "edge_pos", "n_edges",
)


def _csr(rows, cols, n):
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, rows + 1, 1)
    return np.cumsum(ptr), cols.astype(np.int64)


class CitationNetwork:
    """Cumulative citation graph C_{<=t} with free dyads C_t.

    Build with :func:`build`. Readers may share one instance; :meth:`toggle`
    and the samplers mutate it, so give each writer its own :meth:`copy`.
    """

    def __init__(self, cases, focal_term, state, dyad_covariates, impute_missing):
        self.cases = tuple(cases)
        self.focal_term = focal_term
        self.state = state
        self.dyad_covariates = dyad_covariates
        self.impute_missing = impute_missing
        self._compiled = {}

    # -- sizes -----------------------------------------------------------
    @property
    def n_cases(self) -> int:
        return len(self.cases)

    @property
    def n_free_dyads(self) -> int:
        return int(self.state.dyad_i.shape[0])

    @property
    def focal_cases(self) -> np.ndarray:
        return self.state.focal_nodes.copy()

    @property
    def n_edges(self) -> int:
        """Edge count of the whole cumulative graph."""
        return int(self.state.outdeg.sum())

    @property
    def n_free_edges(self) -> int:
        return int(self.state.n_edges[0])

    @property
    def free_dyads(self) -> np.ndarray:
        """``(N, 2)`` array of the free ordered pairs (citing, cited)."""
        return np.column_stack((self.state.dyad_i, self.state.dyad_j))

    def term(self, i: int) -> int:
        self._check(i)
        return int(self.state.term[i])

    # -- queries ---------------------------------------------------------
    def _check(self, i):
        if not (isinstance(i, (int, np.integer)) and 0 <= i < self.n_cases):
            raise UnknownCase(f"unknown case id {i!r}")

    def indegree(self, j: int) -> int:
        self._check(j)
        return int(self.state.indeg[j])

    def outdegree(self, i: int) -> int:
        self._check(i)
        return int(self.state.outdeg[i])

    def out_neighbors(self, i: int) -> np.ndarray:
        self._check(i)
        g = self.state
        f = g.focal_idx[i]
        if f >= 0:
            return g.fout[f, : g.fout_len[f]].copy()
        return g.fx_out_idx[g.fx_out_ptr[i]: g.fx_out_ptr[i + 1]].copy()

    def in_neighbors(self, j: int) -> np.ndarray:
        self._check(j)
        g = self.state
        fixed = g.fx_in_idx[g.fx_in_ptr[j]: g.fx_in_ptr[j + 1]]
        return np.concatenate((fixed, g.fin[j, : g.fin_len[j]]))

    def has_edge(self, i: int, j: int) -> bool:
        self._check(i)
        self._check(j)
        return bool(self.state.adj[i, j])

    def is_free(self, i: int, j: int) -> bool:
        self._check(i)
        self._check(j)
        f = self.state.focal_idx[i]
        return bool(f >= 0 and i != j)

    def dyad_index(self, i: int, j: int) -> int:
        self._check(i)
        self._check(j)
        f = self.state.focal_idx[i]
        if f < 0 or i == j:
            raise FixedDyad(f"dyad ({i}, {j}) is not in the free set of term {self.focal_term}")
        return int(self.state.dyad_id[f, j])

    def edges(self) -> np.ndarray:
        """All edges of C_{<=t} as an ``(E, 2)`` array, sorted."""
        rows, cols = np.nonzero(self.state.adj)
        return np.column_stack((rows, cols)).astype(np.int64)

    def free_edges(self) -> np.ndarray:
        ids = np.sort(self.state.edge_list[: self.state.n_edges[0]])
        return np.column_stack((self.state.dyad_i[ids], self.state.dyad_j[ids]))

    def free_state(self) -> np.ndarray:
        """Presence indicator (uint8) of every free dyad, in dyad-id order."""
        g = self.state
        return g.adj[g.dyad_i, g.dyad_j].copy()

    # -- mutation --------------------------------------------------------
    def toggle(self, dyad) -> "CitationNetwork":
        i, j = dyad
        d = self.dyad_index(i, j)
        _kernels.toggle(self.state, d)
        return self

    def set_free_state(self, present) -> "CitationNetwork":
        """Set the free dyads to ``present`` (bool/0-1 vector in dyad-id order)."""
        present = np.asarray(present).astype(bool)
        if present.shape != (self.n_free_dyads,):
            raise ValueError(f"expected {self.n_free_dyads} dyad states, got {present.shape}")
        diff = np.flatnonzero(present != self.free_state().astype(bool))
        for d in diff:
            _kernels.toggle(self.state, d)
        return self

    def set_free_edges(self, dyad_ids) -> "CitationNetwork":
        present = np.zeros(self.n_free_dyads, dtype=bool)
        present[np.asarray(dyad_ids, dtype=np.int64)] = True
        return self.set_free_state(present)

    def copy(self) -> "CitationNetwork":
        """Independent mutable state sharing the read-only structure."""
        state = self.state._replace(**{k: getattr(self.state, k).copy() for k in _MUTABLE})
        other = CitationNetwork(self.cases, self.focal_term, state, self.dyad_covariates,
                                self.impute_missing)
        other._compiled = self._compiled
        return other

    def canonical_copy(self) -> "CitationNetwork":
        """Copy whose internal edge lists depend only on the configuration.

        Toggling leaves the edge lists in history-dependent order, and the
        tie-no-tie proposal indexes into them; chains started from a canonical
        copy are reproducible from the configuration and the seed alone.
        """
        other = self.copy()
        ids = np.sort(other.state.edge_list[: other.state.n_edges[0]])
        for d in ids[::-1]:
            _kernels.toggle(other.state, d)
        for d in ids:
            _kernels.toggle(other.state, d)
        return other

    def check_consistency(self):
        """Recompute degrees from the adjacency matrix and compare with caches."""
        g = self.state
        adj = g.adj.astype(np.int64)
        ok = (
            np.array_equal(adj.sum(0), g.indeg)
            and np.array_equal(adj.sum(1), g.outdeg)
            and int(g.n_edges[0]) == int(adj[g.dyad_i, g.dyad_j].sum())
        )
        for f, i in enumerate(g.focal_nodes):
            outs = np.sort(g.fout[f, : g.fout_len[f]])
            ok = ok and np.array_equal(outs, np.flatnonzero(adj[i]))
        for j in range(len(g.term)):
            ins = np.sort(self.in_neighbors(j))
            ok = ok and np.array_equal(ins, np.flatnonzero(adj[:, j]))
        return bool(ok)

    def __repr__(self):
        return (f"CitationNetwork(n_cases={self.n_cases}, focal_term={self.focal_term}, "
                f"free_dyads={self.n_free_dyads}, free_edges={self.n_free_edges}, "
                f"edges={self.n_edges})")


def build(
    cases: Sequence[CaseAttributes],
    citations,
    focal_term: int,
    *,
    dyad_covariates: dict | None = None,
    impute_missing: bool = False,
) -> CitationNetwork:
    """Build the network for ``focal_term``.

    Every case must be decided in or before the focal term. Citations from
    focal-term cases form the observed state of the free dyads; all others
    are fixed history.
    """
    cases = list(cases)
    n = len(cases)
    term = np.array([c.decision_term for c in cases], dtype=np.int64)
    late = np.flatnonzero(term > focal_term)
    if late.size:
        raise ConstraintViolation(
            f"case {int(late[0])} is decided in term {int(term[late[0]])}, after focal term {focal_term}"
        )

    cit = np.asarray(list(citations), dtype=np.int64).reshape(-1, 2)
    src, dst = cit[:, 0], cit[:, 1]
    bad = np.flatnonzero((src < 0) | (src >= n) | (dst < 0) | (dst >= n))
    if bad.size:
        raise ConstraintViolation(f"unknown CaseId in citation {tuple(cit[bad[0]])}")
    if np.any(src == dst):
        k = int(np.flatnonzero(src == dst)[0])
        raise ConstraintViolation(f"self-citation of case {int(src[k])}")
    fwd = np.flatnonzero(term[src] < term[dst])
    if fwd.size:
        i, j = cit[fwd[0]]
        raise ConstraintViolation(
            f"case {i} (term {term[i]}) cannot cite later case {j} (term {term[j]})"
        )
    if len(cit):
        uniq = np.unique(cit, axis=0)
        if len(uniq) != len(cit):
            raise ConstraintViolation("duplicate citation edges")

    focal_nodes = np.flatnonzero(term == focal_term).astype(np.int64)
    m = len(focal_nodes)
    focal_idx = np.full(n, -1, dtype=np.int64)
    focal_idx[focal_nodes] = np.arange(m)

    # free dyads: focal citing case, any other case
    dyad_id = np.full((m, n), -1, dtype=np.int64)
    di, dj = [], []
    for f, i in enumerate(focal_nodes):
        js = np.delete(np.arange(n, dtype=np.int64), i)
        dyad_id[f, js] = np.arange(f * (n - 1), (f + 1) * (n - 1))
        di.append(np.full(n - 1, i, dtype=np.int64))
        dj.append(js)
    dyad_i = np.concatenate(di) if di else np.zeros(0, dtype=np.int64)
    dyad_j = np.concatenate(dj) if dj else np.zeros(0, dtype=np.int64)
    n_dyads = len(dyad_i)

    free = focal_idx[src] >= 0 if len(cit) else np.zeros(0, dtype=bool)
    fx_out_ptr, fx_out_idx = _csr(src[~free], dst[~free], n)
    fx_in_ptr, fx_in_idx = _csr(dst[~free], src[~free], n)

    adj = np.zeros((n, n), dtype=np.uint8)
    adj[src[~free], dst[~free]] = 1
    indeg = np.zeros(n, dtype=np.int64)
    outdeg = np.zeros(n, dtype=np.int64)
    np.add.at(indeg, dst[~free], 1)
    np.add.at(outdeg, src[~free], 1)

    state = GraphState(
        term=term,
        focal_idx=focal_idx,
        focal_nodes=focal_nodes,
        adj=adj,
        indeg=indeg,
        outdeg=outdeg,
        fx_out_ptr=fx_out_ptr,
        fx_out_idx=fx_out_idx,
        fx_in_ptr=fx_in_ptr,
        fx_in_idx=fx_in_idx,
        fout=np.zeros((m, n), dtype=np.int64),
        fout_len=np.zeros(m, dtype=np.int64),
        fout_pos=np.zeros((m, n), dtype=np.int64),
        fin=np.zeros((n, m), dtype=np.int64),
        fin_len=np.zeros(n, dtype=np.int64),
        fin_pos=np.zeros((n, m), dtype=np.int64),
        dyad_id=dyad_id,
        dyad_i=dyad_i,
        dyad_j=dyad_j,
        edge_list=np.zeros(n_dyads, dtype=np.int64),
        edge_pos=np.zeros(n_dyads, dtype=np.int64),
        n_edges=np.zeros(1, dtype=np.int64),
    )
    # observed focal-term citations enter through the toggle path
    for i, j in zip(src[free], dst[free]):
        _kernels.toggle(state, dyad_id[focal_idx[i], j])

    covs = {}
    for name, mat in (dyad_covariates or {}).items():
        mat = np.asarray(mat, dtype=np.float64)
        if mat.shape != (n, n):
            raise ValueError(f"dyad covariate {name!r} must be {n}x{n}, got {mat.shape}")
        covs[name] = mat
    return CitationNetwork(cases, focal_term, state, covs, impute_missing)


def toggle(net: CitationNetwork, dyad) -> CitationNetwork:
    """Flip a free dyad in place (raises :class:`FixedDyad` otherwise)."""
    return net.toggle(dyad)
