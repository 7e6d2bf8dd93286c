"""Run configuration in a flat ``key = value`` text format.

Lines starting with ``#`` are comments. Keys are listed in :data:`KEYS`
(``RunConfig.to_text()`` writes every one with its current value).
``auto`` stands for a value derived from the network: the interval defaults
to the number of free dyads and the burn-in to ten intervals.

Example::

    model = edges, mutual, gwesp_osp(0.25)
    terms = 1950..1955
    seed = 42
    mcmc.nsim = 5000
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace

from .estimation import AnnealControl, BridgeControl, McmleControl
from .model import ModelSpec, full_model, independent_model
from .sampler import McmcControl


class ConfigError(ValueError):
    pass


def _key(name, **kw):
    return field(metadata={"key": name}, **kw)


@dataclass(frozen=True)
class RunConfig:
    model: str = _key("model", default=str(full_model()))
    independent_model: str = _key("independent_model", default=str(independent_model()))
    terms: str = _key("terms", default="")
    seed: int = _key("seed", default=0)
    method: str = _key("method", default="mcmle")          # mcmle | mple
    start: str = _key("start", default="anneal")           # anneal | mple
    impute_missing: bool = _key("impute_missing", default=True)

    mcmc_burnin: int | None = _key("mcmc.burnin", default=None)
    mcmc_interval: int | None = _key("mcmc.interval", default=None)
    mcmc_nsim: int = _key("mcmc.nsim", default=10_000)
    mcmc_proposal: str = _key("mcmc.proposal", default="tnt")

    mcmle_max_iter: int = _key("mcmle.max_iter", default=40)
    mcmle_t_tol: float = _key("mcmle.t_tol", default=0.1)
    mcmle_ll_tol: float = _key("mcmle.ll_tol", default=1e-4)
    mcmle_trust_radius: float = _key("mcmle.trust_radius", default=3.0)
    mcmle_nsim_max: int | None = _key("mcmle.nsim_max", default=None)

    bridge_enabled: bool = _key("bridge.enabled", default=True)
    bridge_points: int = _key("bridge.points", default=16)
    bridge_nsim: int = _key("bridge.nsim", default=2000)
    bridge_reference: str = _key("bridge.reference", default="factorized")

    anneal_max_sweeps: int = _key("anneal.max_sweeps", default=10_000)
    anneal_max_proposals: int = _key("anneal.max_proposals", default=20_000_000)
    anneal_t0: float = _key("anneal.t0", default=1.0)
    anneal_t_min: float = _key("anneal.t_min", default=1e-4)
    anneal_restarts: int = _key("anneal.restarts", default=20)

    gof_enabled: bool = _key("gof.enabled", default=False)
    gof_nsim: int = _key("gof.nsim", default=1000)
    gof_scope: str = _key("gof.scope", default="free")
    degeneracy_enabled: bool = _key("degeneracy.enabled", default=False)

    def __post_init__(self):
        if self.method not in ("mcmle", "mple"):
            raise ConfigError(f"method must be mcmle or mple, got {self.method!r}")
        if self.start not in ("anneal", "mple"):
            raise ConfigError(f"start must be anneal or mple, got {self.start!r}")
        if self.gof_scope not in ("free", "cumulative"):
            raise ConfigError(f"gof.scope must be free or cumulative, got {self.gof_scope!r}")
        if self.bridge_reference not in ("factorized", "zero"):
            raise ConfigError(f"bridge.reference must be factorized or zero, got {self.bridge_reference!r}")
        for name in ("model", "independent_model"):
            try:
                ModelSpec.parse(getattr(self, name))
            except ValueError as exc:
                raise ConfigError(f"{name}: {exc}") from None
        try:
            McmcControl(self.mcmc_burnin, self.mcmc_interval, self.mcmc_nsim, self.mcmc_proposal)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.terms:
            parse_terms(self.terms)

    # -- text form -------------------------------------------------------
    def to_text(self) -> str:
        lines = ["# cergm run configuration"]
        for f in fields(self):
            lines.append(f"{f.metadata['key']} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                           comment_prefixes=("#",), inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string("[run]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse configuration: {exc}") from None
        by_key = {f.metadata["key"]: f for f in fields(cls)}
        values = {}
        for key, raw in parser["run"].items():
            if key not in by_key:
                raise ConfigError(f"unknown configuration key {key!r}")
            f = by_key[key]
            values[f.name] = _convert(key, raw.strip(), f.type)
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    # -- derived controls ------------------------------------------------
    def spec(self) -> ModelSpec:
        return ModelSpec.parse(self.model)

    def independent_spec(self) -> ModelSpec:
        return ModelSpec.parse(self.independent_model)

    def term_list(self) -> list:
        return parse_terms(self.terms)

    def mcmc(self, seed: int) -> McmcControl:
        return McmcControl(self.mcmc_burnin, self.mcmc_interval, self.mcmc_nsim, self.mcmc_proposal, seed)

    def mcmle(self, seed: int) -> McmleControl:
        bridge = None
        if self.bridge_enabled:
            bridge = BridgeControl(self.bridge_points,
                                   replace(self.mcmc(seed), nsim=self.bridge_nsim),
                                   self.bridge_reference)
        return McmleControl(mcmc=self.mcmc(seed), max_iter=self.mcmle_max_iter, t_tol=self.mcmle_t_tol,
                            ll_tol=self.mcmle_ll_tol, trust_radius=self.mcmle_trust_radius,
                            nsim_max=self.mcmle_nsim_max, bridge=bridge)

    def anneal(self, seed: int) -> AnnealControl:
        return AnnealControl(max_sweeps=self.anneal_max_sweeps, max_proposals=self.anneal_max_proposals,
                             t0=self.anneal_t0, t_min=self.anneal_t_min,
                             restarts=self.anneal_restarts, seed=seed)


KEYS = tuple(f.metadata["key"] for f in fields(RunConfig))


def parse_terms(text: str) -> list:
    """``"1953"``, ``"1950..1955"`` (inclusive) or ``"1950, 1952"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (int(x) for x in part.split(".."))
                if hi < lo:
                    raise ConfigError(f"empty term range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"bad term specification {part!r}") from None
    if not out:
        raise ConfigError("no terms given")
    return out


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(key, raw, typ):
    typ = str(typ)
    try:
        if typ == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError
        if typ.startswith("int"):
            if "None" in typ and raw.lower() == "auto":
                return None
            return int(raw)
        if typ == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ}") from None
    return raw
