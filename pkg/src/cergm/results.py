"""Serialization of fit results and the tabular reports.

Fits are stored as JSON with a ``schema_version`` field. Floats are written
in their shortest round-tripping form and non-finite values as the strings
``"inf"``, ``"-inf"`` and ``"nan"``, so reloading is lossless.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .estimation import FitResult

SCHEMA_VERSION = 1

_ARRAYS = ("theta", "std_errors", "sample_diagnostics", "mc_std_errors")
_FLOATS = ("loglik", "aic", "bic")

COEFFICIENT_COLUMNS = ("term", "statistic", "estimate", "se", "mc_se", "z", "p_value",
                       "marker", "estimable")


def _enc(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _dec(x):
    return float(x)


def fit_to_dict(fit: FitResult, **extra) -> dict:
    d = {"schema_version": SCHEMA_VERSION, **extra}
    d["names"] = list(fit.names)
    for k in _ARRAYS:
        v = getattr(fit, k)
        d[k] = None if v is None else [_enc(x) for x in np.asarray(v, dtype=float)]
    for k in _FLOATS:
        d[k] = _enc(getattr(fit, k))
    d.update(iterations=int(fit.iterations), converged=bool(fit.converged), method=fit.method,
             loglik_kind=fit.loglik_kind, n_free_dyads=int(fit.n_free_dyads), start=fit.start,
             notes=list(fit.notes))
    return d


def fit_from_dict(d: dict) -> FitResult:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported fit schema version {version!r}")
    arrays = {k: None if d[k] is None else np.array([_dec(x) for x in d[k]], dtype=float)
              for k in _ARRAYS}
    return FitResult(
        names=tuple(d["names"]),
        loglik=_dec(d["loglik"]), aic=_dec(d["aic"]), bic=_dec(d["bic"]),
        iterations=d["iterations"], converged=d["converged"], method=d["method"],
        loglik_kind=d["loglik_kind"], n_free_dyads=d["n_free_dyads"], start=d["start"],
        notes=list(d["notes"]), **arrays,
    )


def dumps_fit(fit: FitResult, **extra) -> str:
    return json.dumps(fit_to_dict(fit, **extra), indent=2, allow_nan=False) + "\n"


def loads_fit(text: str) -> FitResult:
    return fit_from_dict(json.loads(text))


def save_fit(fit: FitResult, path, **extra) -> None:
    Path(path).write_text(dumps_fit(fit, **extra), encoding="utf-8")


def load_fit(path) -> FitResult:
    return loads_fit(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def p_values(theta, se) -> np.ndarray:
    """Two-sided normal p-values of ``theta / se`` (nan where undefined)."""
    theta = np.asarray(theta, dtype=float)
    se = np.asarray(se, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(np.isfinite(theta) & (se > 0), theta / se, np.nan)
    return 2.0 * norm.sf(np.abs(z))


def marker(p: float) -> str:
    """``circle`` below 0.05, ``square`` below 0.1, ``triangle`` otherwise."""
    if not math.isfinite(p):
        return ""
    return "circle" if p < 0.05 else "square" if p < 0.1 else "triangle"


def fmt(x) -> str:
    """Deterministic text for a table cell."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def coefficient_rows(fit: FitResult, term) -> list:
    mc = fit.mc_std_errors if fit.mc_std_errors is not None else np.full(fit.p, np.nan)
    pv = p_values(fit.theta, fit.std_errors)
    rows = []
    for k, name in enumerate(fit.names):
        th, se = float(fit.theta[k]), float(fit.std_errors[k])
        est = math.isfinite(th)
        z = th / se if est and se > 0 else math.nan
        rows.append((term, name, th, se if est else math.nan, float(mc[k]), z, float(pv[k]),
                     marker(float(pv[k])), est))
    return rows


def write_table(path, header, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def read_table(path) -> list:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
