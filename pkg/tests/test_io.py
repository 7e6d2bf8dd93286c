import json
import math

import numpy as np
import pytest

from cergm import errors
from cergm.config import KEYS, ConfigError, RunConfig, parse_terms
from cergm.data import Dataset, load_dataset, write_dataset
from cergm.estimation import FitResult
from cergm.model import full_model
from cergm.results import (
    SCHEMA_VERSION, coefficient_rows, dumps_fit, fmt, load_fit, loads_fit, marker, p_values,
    read_table, save_fit, write_table,
)
from cergm.synthetic import generate_dataset
from cergm.sampler import McmcControl

CASES = """case_id,term,mq_median,issue_area,author_id,coalition_size,ideo_breadth,overruled_term
US-1,1950,0.5,3,Black,5,1.25,
US-2,1950,-1.0,3,Reed,9,0.0,1952
US-3,1951,0.25,8,Black,6,2.0,
US-4,1952,,1,,7,0.5,
US-5,1952,1.75,14,Reed,5,3.5,NA
"""

HEADER = CASES.splitlines()[0] + "\n"

CITES = """citing_id,cited_id
US-3,US-1
US-3,US-2
US-4,US-3
US-5,US-4
US-4,US-5
US-5,US-1
US-5,US-1
"""


def write(tmp_path, cases=CASES, cites=CITES):
    a, b = tmp_path / "cases.csv", tmp_path / "cites.csv"
    a.write_text(cases)
    b.write_text(cites)
    return a, b


def test_load_five_case_fixture(tmp_path):
    ds = load_dataset(*write(tmp_path))
    assert len(ds.cases) == 5
    assert ds.case_ids == ["US-1", "US-2", "US-3", "US-4", "US-5"]
    assert ds.terms() == [1950, 1951, 1952]
    assert ds.n_duplicate_citations == 1
    assert len(ds.citations) == 6
    c4 = ds.cases[3]
    assert c4.mq_median is None and c4.author_id is None and c4.coalition_size == 7
    assert ds.cases[1].overruled_in_term == 1952
    net = ds.network(1952)
    assert net.n_free_dyads == 2 * 4 and net.n_free_edges == 4


def test_dangling_citation_names_the_id(tmp_path):
    with pytest.raises(errors.DanglingCitation) as info:
        load_dataset(*write(tmp_path, cites="citing_id,cited_id\nUS-3,US-99\n"))
    assert info.value.case_id == "US-99"
    assert "US-99" in str(info.value)


def test_forward_citation(tmp_path):
    cases = HEADER + "A,1950,,,,,,\nB,1960,,,,,,\n"
    with pytest.raises(errors.ForwardCitation):
        load_dataset(*write(tmp_path, cases, "citing_id,cited_id\nA,B\n"))


@pytest.mark.parametrize("cases, column", [
    (HEADER + "A,x,,,,,,\n", "term"),
    (HEADER + "A,1950,,,,12,,\n", "coalition_size"),
    (HEADER + "A,1950,nan,,,,,\n", "mq_median"),
    (HEADER + "A,1950,,15,,,,\n", "issue_area"),
    (HEADER + "A,1950,,,,,,1949\n", "overruled_term"),
    (HEADER + "A,1950,,,,,,\nA,1951,,,,,,\n", "case_id"),
    ("case_id,term\nA,1950\n", "mq_median"),
])
def test_parse_errors_locate_the_cell(tmp_path, cases, column):
    with pytest.raises(errors.ParseError) as info:
        load_dataset(*write(tmp_path, cases, "citing_id,cited_id\n"))
    assert info.value.column == column


def test_self_citation_and_ragged_rows(tmp_path):
    with pytest.raises(errors.ParseError):
        load_dataset(*write(tmp_path, cites="citing_id,cited_id\nUS-1,US-1\n"))
    with pytest.raises(errors.ParseError) as info:
        load_dataset(*write(tmp_path, cites="citing_id,cited_id\nUS-3,US-1,x\n"))
    assert info.value.row == 2


def test_dataset_round_trip(tmp_path):
    ds = generate_dataset(n_terms=2, cases_per_term=15, seed=4,
                          control=McmcControl(burnin=500, interval=1, nsim=1))
    a, b = tmp_path / "c.csv", tmp_path / "e.csv"
    write_dataset(ds, a, b)
    back = load_dataset(a, b)
    assert back.cases == ds.cases
    assert np.array_equal(back.citations, ds.citations)
    write_dataset(back, tmp_path / "c2.csv", tmp_path / "e2.csv")
    assert (tmp_path / "c2.csv").read_bytes() == a.read_bytes()


def test_config_round_trip(tmp_path):
    cfg = RunConfig(model="edges, mutual, gwesp_osp(0.5)", terms="1950..1952", seed=42,
                    mcmc_nsim=123, mcmc_interval=None, mcmle_t_tol=0.05, gof_enabled=True)
    text = cfg.to_text()
    assert RunConfig.from_text(text) == cfg
    assert RunConfig.from_text(RunConfig().to_text()) == RunConfig()
    assert [line.split(" = ")[0] for line in text.splitlines()[1:]] == list(KEYS)
    cfg.save(tmp_path / "run.cfg")
    assert RunConfig.load(tmp_path / "run.cfg") == cfg
    assert cfg.term_list() == [1950, 1951, 1952]
    assert cfg.mcmc(7).seed == 7 and cfg.mcmc(7).interval is None


def test_config_comments_and_defaults():
    cfg = RunConfig.from_text("# comment\nseed = 3   # trailing\nmcmc.burnin = auto\n")
    assert cfg.seed == 3 and cfg.mcmc_burnin is None
    assert cfg.spec() == full_model()


@pytest.mark.parametrize("text", [
    "bogus = 1", "seed = x", "method = bayes", "model = edges, nope", "mcmc.nsim = 0",
    "terms = 1960..1950", "gof.enabled = maybe", "no equals sign",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        RunConfig.from_text(text)


def test_parse_terms():
    assert parse_terms("1953") == [1953]
    assert parse_terms("1950, 1952..1953") == [1950, 1952, 1953]


def make_fit():
    return FitResult(
        names=("edges", "mutual", "x"), theta=np.array([-2.5, -np.inf, 0.1 + 0.2]),
        std_errors=np.array([0.25, np.nan, 1e-17]), loglik=-123.456789012345, aic=1.0, bic=2.0,
        iterations=7, converged=True, sample_diagnostics=np.array([0.01, np.nan, -0.02]),
        loglik_kind="bridge", n_free_dyads=990, mc_std_errors=np.array([0.001, np.nan, 0.5]),
        start="anneal", notes=["a note"],
    )


def test_fit_json_round_trip(tmp_path):
    fit = make_fit()
    text = dumps_fit(fit, term=1953)
    d = json.loads(text)
    assert d["schema_version"] == SCHEMA_VERSION and d["term"] == 1953
    assert d["theta"][1] == "-inf"
    back = loads_fit(text)
    for k in ("theta", "std_errors", "sample_diagnostics", "mc_std_errors"):
        assert np.array_equal(getattr(back, k), getattr(fit, k), equal_nan=True)
    assert (back.names, back.loglik, back.start, back.notes) == (fit.names, fit.loglik, fit.start, fit.notes)
    save_fit(fit, tmp_path / "f.json")
    assert dumps_fit(load_fit(tmp_path / "f.json")) == dumps_fit(fit)
    with pytest.raises(ValueError):
        loads_fit(text.replace('"schema_version": 1', '"schema_version": 99'))


def test_p_values_and_markers():
    p = p_values([1.96, 0.0, 1.7, np.inf], [1.0, 1.0, 1.0, 1.0])
    assert p[0] == pytest.approx(0.05, abs=1e-3) and p[1] == 1.0
    assert math.isnan(p[3])
    assert [marker(x) for x in (0.01, 0.07, 0.5, math.nan)] == ["circle", "square", "triangle", ""]


def test_coefficient_table(tmp_path):
    rows = coefficient_rows(make_fit(), 1953)
    assert rows[1][-1] is False and math.isnan(rows[1][3])
    write_table(tmp_path / "t.csv", ("term", "statistic", "a", "b", "c", "d", "e", "f", "g"), rows)
    back = read_table(tmp_path / "t.csv")
    assert back[0]["a"] == "-2.5" and back[1]["a"] == "-inf" and back[1]["g"] == "false"
    assert float(back[2]["a"]) == 0.1 + 0.2
    assert fmt(np.float64(1e-17)) == "1e-17"
