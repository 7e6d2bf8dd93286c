"""Case tables and citation lists: the in-memory dataset and its CSV form.

Cases file columns::

    case_id,term,mq_median,issue_area,author_id,coalition_size,ideo_breadth,overruled_term

Only ``case_id`` and ``term`` are required per row; empty cells are missing
values. Citations file columns: ``citing_id,cited_id``.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConstraintViolation, DanglingCitation, ForwardCitation, ParseError
from .network import CaseAttributes, CitationNetwork, build

log = logging.getLogger(__name__)

CASE_COLUMNS = ("case_id", "term", "mq_median", "issue_area", "author_id",
                "coalition_size", "ideo_breadth", "overruled_term")
CITATION_COLUMNS = ("citing_id", "cited_id")

# CSV column -> CaseAttributes field, parser
_FIELDS = {
    "mq_median": ("mq_median", float),
    "issue_area": ("issue_area", int),
    "author_id": ("author_id", str),
    "coalition_size": ("coalition_size", int),
    "ideo_breadth": ("ideo_breadth", float),
    "overruled_term": ("overruled_in_term", int),
}


@dataclass
class Dataset:
    cases: list
    citations: np.ndarray          # (E, 2) dense ids, citing -> cited
    case_ids: list | None = None   # external id of each case
    n_duplicate_citations: int = 0

    def __post_init__(self):
        self.citations = np.asarray(self.citations, dtype=np.int64).reshape(-1, 2)
        if self.case_ids is None:
            self.case_ids = [str(k) for k in range(len(self.cases))]

    def terms(self) -> list:
        return sorted({c.decision_term for c in self.cases})

    def n_cases_in(self, term: int) -> int:
        return sum(c.decision_term == term for c in self.cases)

    def network(self, focal_term: int, **kwargs) -> CitationNetwork:
        """Network of every case decided up to ``focal_term``."""
        keep = np.array([c.decision_term <= focal_term for c in self.cases], dtype=bool)
        ids = np.flatnonzero(keep)
        remap = np.full(len(self.cases), -1, dtype=np.int64)
        remap[ids] = np.arange(len(ids))
        cit = self.citations
        if len(cit):
            ok = keep[cit[:, 0]] & keep[cit[:, 1]]
            cit = remap[cit[ok]]
        return build([self.cases[k] for k in ids], cit, focal_term, **kwargs)


def _read_rows(path, columns):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(str(path), 1, None, "file is empty") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise ParseError(str(path), 1, missing[0], "required column missing from header")
        pos = {c: header.index(c) for c in columns}
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(str(path), row_no, None,
                                 f"expected {len(header)} fields, found {len(row)}")
            yield row_no, {c: row[pos[c]].strip() for c in columns}


def _parse_case(path, row_no, rec):
    def fail(column, reason):
        raise ParseError(str(path), row_no, column, reason)

    if not rec["case_id"]:
        fail("case_id", "case_id is required")
    try:
        term = int(rec["term"])
    except ValueError:
        fail("term", f"not an integer: {rec['term']!r}")
    kwargs = {}
    for column, (attr, conv) in _FIELDS.items():
        text = rec[column]
        if text == "" or text.upper() == "NA":
            continue
        try:
            value = conv(text)
        except ValueError:
            fail(column, f"cannot parse {text!r}")
        if conv is float and not math.isfinite(value):
            fail(column, f"not finite: {text!r}")
        kwargs[attr] = value
    try:
        return CaseAttributes(decision_term=term, **kwargs)
    except ConstraintViolation as exc:
        column = next((c for c, (a, _) in _FIELDS.items() if a in str(exc)), None)
        fail(column, str(exc))


def load_dataset(cases_path, citations_path) -> Dataset:
    """Read and validate a case table and its citation list.

    Raises :class:`ParseError` for malformed rows, :class:`DanglingCitation`
    for ids absent from the case table and :class:`ForwardCitation` when a
    case cites one decided in a later term. Repeated citations are kept once
    and counted in ``n_duplicate_citations``.
    """
    cases, case_ids, index = [], [], {}
    for row_no, rec in _read_rows(cases_path, CASE_COLUMNS):
        case = _parse_case(cases_path, row_no, rec)
        cid = rec["case_id"]
        if cid in index:
            raise ParseError(str(cases_path), row_no, "case_id", f"duplicate case id {cid!r}")
        index[cid] = len(cases)
        cases.append(case)
        case_ids.append(cid)

    edges, seen, dups = [], set(), 0
    for row_no, rec in _read_rows(citations_path, CITATION_COLUMNS):
        ends = []
        for column in CITATION_COLUMNS:
            cid = rec[column]
            if not cid:
                raise ParseError(str(citations_path), row_no, column, "empty case id")
            if cid not in index:
                raise DanglingCitation(cid, row_no)
            ends.append(index[cid])
        i, j = ends
        if i == j:
            raise ParseError(str(citations_path), row_no, "cited_id", "a case cannot cite itself")
        ti, tj = cases[i].decision_term, cases[j].decision_term
        if tj > ti:
            raise ForwardCitation(
                f"row {row_no}: {case_ids[i]!r} (term {ti}) cites {case_ids[j]!r} (term {tj})"
            )
        if (i, j) in seen:
            dups += 1
            continue
        seen.add((i, j))
        edges.append((i, j))
    if dups:
        log.warning("%s: collapsed %d duplicate citations", citations_path, dups)
    return Dataset(cases, np.array(edges, dtype=np.int64).reshape(-1, 2), case_ids, dups)


def _cell(value) -> str:
    return "" if value is None else repr(value) if isinstance(value, float) else str(value)


def write_dataset(dataset: Dataset, cases_path, citations_path) -> None:
    """Write ``dataset`` in the format read by :func:`load_dataset`."""
    with Path(cases_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CASE_COLUMNS)
        for cid, c in zip(dataset.case_ids, dataset.cases):
            w.writerow([cid, c.decision_term] + [_cell(getattr(c, a)) for a, _ in _FIELDS.values()])
    with Path(citations_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CITATION_COLUMNS)
        for i, j in dataset.citations:
            w.writerow([dataset.case_ids[i], dataset.case_ids[j]])
