import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cergm import errors
from cergm.model import (
    DiffTermTransitiveTies, DyadCovariate, Edges, GwespOSP, GwIdegree, ModelSpec, Mutual,
    ReceiverOutdegree, UserMatrix, full_model,
)
from cergm.network import build
from cergm.statistics import batch_stats, change_stats, design_matrix, global_stats

from conftest import case, random_network

# coordinates that are not integer counts; compared to 1e-12
WEIGHTED = ("gwidegree", "gwesp_osp", "mq_absdiff", "cited_ideo_breadth")


def weighted_mask(spec):
    return np.array([t.kind in WEIGHTED for t in spec.terms])


def test_empty_focal_term_has_zero_edge_sums():
    net = build([case(0, coalition_size=5), case(1, coalition_size=6)], [], 1)
    spec = ModelSpec((Edges(), Mutual(), DyadCovariate("cited_coalition_size"),
                      DyadCovariate("cited_age")))
    assert np.array_equal(global_stats(net, spec), np.zeros(4))


def test_gwidegree_counts_cited_cases():
    # C (term 0) cites B (term 0); A (focal) cites B and C
    net = build([case(1), case(0), case(0)], [(2, 1), (0, 1), (0, 2)], 1)
    assert global_stats(net, ModelSpec((GwIdegree(1.0),)))[0] == 2


def test_mutual_within_focal_term():
    net = build([case(1), case(1)], [(0, 1), (1, 0)], 1)
    assert global_stats(net, ModelSpec((Mutual(),)))[0] == 1
    net.toggle((1, 0))
    assert change_stats(net, ModelSpec((Mutual(),)), (1, 0))[0] == 1


def test_diff_term_transitive_single_edge():
    # i=0 (term 2) cites j=1 and k=2 (term 1); k cites j
    net = build([case(2), case(1), case(1)], [(0, 1), (0, 2), (2, 1)], 2)
    assert global_stats(net, ModelSpec((DiffTermTransitiveTies(),)))[0] == 1


def test_diff_term_transitive_ignores_same_term_partner():
    # partner k is in the focal term, so the closed triangle does not qualify
    net = build([case(2), case(1), case(2)], [(0, 1), (0, 2), (2, 1)], 2)
    assert global_stats(net, ModelSpec((DiffTermTransitiveTies(),)))[0] == 0


def test_cited_age_contributions():
    net = build([case(10), case(0)], [(0, 1)], 10)
    spec = ModelSpec((DyadCovariate("cited_age"), DyadCovariate("cited_age_sq")))
    assert global_stats(net, spec).tolist() == [10.0, 100.0]


def test_gwesp_single_shared_partner_change_is_one():
    # k=2, j=1 historical with j->k; focal i=0 cites k; toggling i->j
    net = build([case(1), case(0), case(0)], [(1, 2), (0, 2)], 1)
    for decay in (0.25, 0.7, 2.0):
        delta = change_stats(net, ModelSpec((GwespOSP(decay),)), (0, 1))[0]
        assert delta == pytest.approx(1.0, abs=1e-15)


def test_covariate_values():
    cases = [
        case(5, mq_median=1.5, issue_area=3, author_id="A", coalition_size=9, ideo_breadth=0.5),
        case(2, mq_median=-0.5, issue_area=3, author_id="A", coalition_size=6, ideo_breadth=1.25,
             overruled_in_term=4),
        case(4, mq_median=0.0, issue_area=7, author_id="B", coalition_size=5, ideo_breadth=0.0,
             overruled_in_term=5),
    ]
    net = build(cases, [(2, 1)], 5)
    spec = ModelSpec(tuple(DyadCovariate(k) for k in (
        "mq_absdiff", "same_issue_area", "same_author", "cited_coalition_size",
        "cited_ideo_breadth", "overruled_before")) + (ReceiverOutdegree(),))
    assert change_stats(net, spec, (0, 1)).tolist() == [2.0, 1.0, 1.0, 6.0, 1.25, 1.0, 0.0]
    # overruled in the citing term itself is not "before"
    assert change_stats(net, spec, (0, 2)).tolist() == [1.5, 0.0, 0.0, 5.0, 0.0, 0.0, 1.0]


def test_receiver_outdegree_frozen_for_focal_receivers():
    net = build([case(0), case(1), case(1)], [(1, 0), (2, 1)], 1)
    spec = ModelSpec((ReceiverOutdegree(),))
    assert change_stats(net, spec, (2, 1))[0] == 0.0


def test_user_matrix_and_missing_attributes():
    cases = [case(1), case(0, coalition_size=None)]
    net = build(cases, [], 1, dyad_covariates={"w": np.array([[0, 3.5], [0, 0]])})
    assert change_stats(net, ModelSpec((UserMatrix("w"),)), (0, 1))[0] == 3.5
    with pytest.raises(errors.MissingAttribute):
        global_stats(net, ModelSpec((UserMatrix("v"),)))
    with pytest.raises(errors.MissingAttribute):
        global_stats(net, ModelSpec((DyadCovariate("cited_coalition_size"),)))
    net = build(cases, [(0, 1)], 1, impute_missing=True)
    assert global_stats(net, ModelSpec((DyadCovariate("cited_coalition_size"),)))[0] == 0.0


def test_change_stats_on_fixed_dyad_raises(worked_example):
    with pytest.raises(errors.FixedDyad):
        change_stats(worked_example, full_model().without(*[k for k in full_model().names[6:]]), (2, 0))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_change_matches_global_recompute(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    spec = full_model()
    weighted = weighted_mask(spec)
    dyads = net.free_dyads
    for _ in range(5):
        i, j = (int(x) for x in dyads[rng.integers(len(dyads))])
        delta = change_stats(net, spec, (i, j))
        was_on = net.has_edge(i, j)
        h0 = global_stats(net, spec)
        net.toggle((i, j))
        h1 = global_stats(net, spec)
        diff = (h1 - h0) if not was_on else (h0 - h1)
        assert np.array_equal(delta[~weighted], diff[~weighted])
        assert np.allclose(delta[weighted], diff[weighted], rtol=0, atol=1e-12)
        # antisymmetry: the change is evaluated with the dyad switched on
        assert np.array_equal(change_stats(net, spec, (i, j)), delta)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_gwidegree_change_rule(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    spec = ModelSpec((GwIdegree(1.0),))
    for i, j in net.free_dyads:
        if net.has_edge(int(i), int(j)):
            continue
        assert change_stats(net, spec, (int(i), int(j)))[0] == float(net.indegree(int(j)) == 0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_covariate_changes_do_not_depend_on_other_dyads(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    spec = full_model()
    cov = ~np.array(spec.dependent_mask)
    X0 = design_matrix(net, spec)[:, cov]
    net.set_free_state(rng.random(net.n_free_dyads) < 0.5)
    assert np.array_equal(design_matrix(net, spec)[:, cov], X0)


def test_batch_route_agrees_with_sparse_route(rng):
    net = random_network(rng, n_focal=2)
    spec = full_model()
    states = rng.random((20, net.n_free_dyads)) < 0.4
    B = batch_stats(net, spec, states)
    for s, row in zip(states, B):
        net.set_free_state(s)
        assert np.allclose(global_stats(net, spec), row, rtol=0, atol=1e-12)


def test_gw_statistics_closed_form():
    # case 0 receives 3 citations; gwidegree(lam) = lam * (1 - (1 - 1/lam)^3)
    net = build([case(0), case(1), case(1), case(1)], [(1, 0), (2, 0), (3, 0)], 1)
    lam = 2.0
    assert global_stats(net, ModelSpec((GwIdegree(lam),)))[0] == pytest.approx(
        lam * (1 - (1 - 1 / lam) ** 3), abs=1e-15)
    assert math.isclose(global_stats(net, ModelSpec((GwIdegree(1.0),)))[0], 1.0)
