"""Model terms and specifications.

A :class:`ModelSpec` is an ordered tuple of :class:`Term` objects; coordinate
``k`` of every statistic vector, design matrix row and coefficient vector
belongs to ``spec.terms[k]``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

# term kinds whose change statistic depends on the state of other dyads
DEPENDENCE_KINDS = frozenset({"mutual", "gwidegree", "gwesp_osp", "diff_term_transitive"})

COVARIATE_KINDS = (
    "mq_absdiff",
    "same_issue_area",
    "same_author",
    "cited_age",
    "cited_age_sq",
    "cited_coalition_size",
    "cited_ideo_breadth",
    "overruled_before",
)

KINDS = (
    "edges",
    "mutual",
    "gwidegree",
    "gwesp_osp",
    "diff_term_transitive",
    "receiver_outdegree",
    *COVARIATE_KINDS,
    "user",
)

_DEFAULT_DECAY = {"gwidegree": 1.0, "gwesp_osp": 0.25}


@dataclass(frozen=True)
class Term:
    kind: str
    decay: float | None = None
    matrix: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.kind in _DEFAULT_DECAY:
            if self.decay is None:
                object.__setattr__(self, "decay", _DEFAULT_DECAY[self.kind])
            decay = float(self.decay)
            if not math.isfinite(decay) or decay < 0:
                raise ValueError(f"{self.kind}: decay must be finite and >= 0, got {self.decay}")
            if self.kind == "gwidegree" and decay == 0:
                raise ValueError("gwidegree: decay must be > 0")
            object.__setattr__(self, "decay", decay)
        elif self.decay is not None:
            raise ValueError(f"{self.kind} takes no decay parameter")
        if self.kind == "user":
            if not self.matrix:
                raise ValueError("user covariate needs a matrix name")
        elif self.matrix is not None:
            raise ValueError(f"{self.kind} takes no matrix name")

    @property
    def name(self) -> str:
        if self.decay is not None:
            return f"{self.kind}({self.decay:g})"
        if self.kind == "user":
            return f"user({self.matrix})"
        return self.kind

    @property
    def dependent(self) -> bool:
        return self.kind in DEPENDENCE_KINDS

    def __str__(self):
        return self.name


def Edges() -> Term:
    return Term("edges")


def Mutual() -> Term:
    return Term("mutual")


def GwIdegree(decay: float = 1.0) -> Term:
    return Term("gwidegree", decay)


def GwespOSP(decay: float = 0.25) -> Term:
    return Term("gwesp_osp", decay)


def DiffTermTransitiveTies() -> Term:
    return Term("diff_term_transitive")


def ReceiverOutdegree() -> Term:
    return Term("receiver_outdegree")


def DyadCovariate(kind: str) -> Term:
    if kind not in COVARIATE_KINDS:
        raise ValueError(f"unknown covariate {kind!r}; expected one of {COVARIATE_KINDS}")
    return Term(kind)


def UserMatrix(name: str) -> Term:
    return Term("user", matrix=name)


_TERM_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")


def parse_term(text: str) -> Term:
    """Parse ``"gwesp_osp(0.25)"``, ``"edges"``, ``"user(distance)"``."""
    m = _TERM_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse term {text!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "user":
        return UserMatrix(arg or "")
    if arg:
        try:
            return Term(kind, float(arg))
        except ValueError as exc:
            raise ValueError(f"bad term {text!r}: {exc}") from None
    return Term(kind)


@dataclass(frozen=True)
class ModelSpec:
    terms: tuple[Term, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("a model needs at least one term")
        names = [t.name for t in terms]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ValueError(f"duplicate terms: {sorted(dup)}")

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        parts = [p for p in re.split(r",(?![^(]*\))", text) if p.strip()]
        return cls(tuple(parse_term(p) for p in parts))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.terms)

    @property
    def dependent_mask(self):
        return [t.dependent for t in self.terms]

    @property
    def dyad_independent(self) -> bool:
        return not any(self.dependent_mask)

    def index(self, name_or_kind: str) -> int:
        for k, t in enumerate(self.terms):
            if name_or_kind in (t.name, t.kind):
                return k
        raise KeyError(name_or_kind)

    def __contains__(self, name_or_kind) -> bool:
        try:
            self.index(name_or_kind)
        except KeyError:
            return False
        return True

    def without(self, *kinds: str) -> "ModelSpec":
        return ModelSpec(tuple(t for t in self.terms if t.kind not in kinds and t.name not in kinds))

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __str__(self):
        return ", ".join(self.names)


def full_model() -> ModelSpec:
    """Edges, the five structural terms and the eight covariates."""
    return ModelSpec(
        (
            Edges(),
            Mutual(),
            GwIdegree(1.0),
            GwespOSP(0.25),
            DiffTermTransitiveTies(),
            ReceiverOutdegree(),
            *(DyadCovariate(k) for k in COVARIATE_KINDS),
        )
    )


def independent_model() -> ModelSpec:
    """Covariate-only comparison model (receiver outdegree is kept)."""
    return full_model().without("mutual", "gwidegree", "gwesp_osp", "diff_term_transitive")
