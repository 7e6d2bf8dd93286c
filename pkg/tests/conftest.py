import numpy as np
import pytest

from cergm.network import CaseAttributes, build


def case(term, **kw):
    return CaseAttributes(decision_term=term, **kw)


@pytest.fixture
def worked_example():
    """6 earlier cases and 3 focal-term cases (24 free dyads)."""
    cases = [case(t) for t in (0, 0, 1, 1, 2, 2)] + [case(3)] * 3
    cites = [(2, 0), (3, 1), (4, 2), (5, 3), (6, 4), (7, 0), (8, 6)]
    return build(cases, cites, 3)


def random_network(rng, n_prior=4, n_focal=3, p_hist=0.4, p_focal=0.3):
    terms = [k % 2 for k in range(n_prior)] + [2] * n_focal
    cases = [case(t, mq_median=float(rng.normal()), issue_area=int(rng.integers(1, 4)),
                  author_id=f"J{rng.integers(0, 3)}", coalition_size=int(rng.integers(5, 10)),
                  ideo_breadth=float(rng.uniform(0, 2)),
                  overruled_in_term=(t + 1 if rng.random() < 0.3 else None))
             for t in terms]
    cites = []
    for i, ti in enumerate(terms):
        for j, tj in enumerate(terms):
            if i == j or tj > ti or (ti == tj and ti != 2 and i < j):
                continue
            if rng.random() < (p_focal if ti == 2 else p_hist):
                cites.append((i, j))
    return build(cases, cites, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def draw_index(sample, n_dyads):
    """Configuration index (binary expansion in dyad-id order) of each kept draw."""
    weights = 1 << np.arange(n_dyads, dtype=np.int64)
    return np.array([int(weights[ids].sum()) for ids in sample.networks], dtype=np.int64)


def pooled_chisquare(counts, expected, min_expected=5.0):
    """Chi-square p-value after pooling cells with small expected counts."""
    from scipy.stats import chi2

    order = np.argsort(expected)
    counts, expected = counts[order], expected[order]
    small = np.cumsum(expected) < min_expected
    cut = int(small.sum()) + 1
    obs = np.concatenate([[counts[:cut].sum()], counts[cut:]])
    exp = np.concatenate([[expected[:cut].sum()], expected[cut:]])
    stat = ((obs - exp) ** 2 / exp).sum()
    return float(chi2.sf(stat, len(obs) - 1))
