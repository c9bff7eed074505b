import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geofinlab import leafwise as W
from geofinlab.errors import ConfigurationError, DomainError, ResourceError

ROWS = [[0.9, 0.1], [0.2, 0.8]]
EMIT = [[0, 1], [0, 1]]  # digit emitted on each transition


def h_nats(p):
    return 0.0 if p in (0.0, 1.0) else -p * math.log(p) - (1 - p) * math.log(1 - p)


def two_state():
    return W.DigitSource.from_matrices(ROWS, EMIT)


def two_state_pi():
    a, b = ROWS[0][1], ROWS[1][0]
    return np.array([b / (a + b), a / (a + b)])


def hidden_path_mass(word, init):
    """Oracle: sum over all hidden state paths of the probability of emitting ``word``."""
    total = 0.0
    n = len(ROWS)
    for path in itertools.product(range(n), repeat=len(word) + 1):
        p = init[path[0]]
        for (s, u), b in zip(zip(path, path[1:]), word):
            p *= ROWS[s][u] if EMIT[s][u] == b else 0.0
        total += p
    return total


sources = st.integers(1, 4).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0.05, 0.95), min_size=n, max_size=n),
        st.lists(st.lists(st.integers(0, n - 1), min_size=2, max_size=2), min_size=n, max_size=n),
    )
)


# ---------------------------------------------------------------- construction

def test_descriptor_forms():
    assert W.DigitSource.from_dict({"bernoulli": 0.25}).prob0.tolist() == [0.25]
    src = W.DigitSource.from_dict({"states": ["a", "b"], "transition": ROWS, "emission": EMIT})
    assert src.names == ["a", "b"]
    again = W.DigitSource.from_dict(src.to_dict())
    assert np.allclose(again.transition_matrix(), src.transition_matrix())


def test_non_unifilar_rejected():
    with pytest.raises(ConfigurationError):
        W.DigitSource.from_matrices([[0.5, 0.5], [0.5, 0.5]], [[0, 0], [1, 1]])


def test_bad_rows_rejected():
    with pytest.raises(ConfigurationError):
        W.DigitSource.from_matrices([[0.5, 0.4], [0.5, 0.5]], EMIT)
    with pytest.raises(ConfigurationError):
        W.DigitSource.from_dict({"states": 2})


def test_stationary_law_closed_form():
    assert np.allclose(two_state().stationary(), two_state_pi())


# ---------------------------------------------------------------- masses

@pytest.mark.parametrize("k", [0, 1, 5, 9])
def test_fair_coin_masses(k):
    src = W.DigitSource.bernoulli(0.5)
    for j in range(0, 2**k, max(1, 2**k // 7)):
        assert W.leafwise_mass(src, k, j) == pytest.approx(2.0**-k)


def test_biased_coin_cell():
    assert W.leafwise_mass(W.DigitSource.bernoulli(0.1), 2, 0) == pytest.approx(0.01)


def test_two_state_mass_matches_path_sum():
    src = two_state()
    pi = two_state_pi()
    assert W.leafwise_mass(src, 2, 0b01) == pytest.approx(hidden_path_mass([0, 1], pi))
    for word in itertools.product((0, 1), repeat=5):
        j = int("".join(map(str, word)), 2)
        assert W.leafwise_mass(src, 5, j) == pytest.approx(hidden_path_mass(word, pi), abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(sources, st.integers(1, 10))
def test_level_masses_consistent(matrices, n):
    src = W.DigitSource(*matrices, initial=np.full(len(matrices[0]), 1 / len(matrices[0])))
    masses = W.level_masses(src, n)
    assert masses.sum() == pytest.approx(1.0)
    for j in (0, len(masses) // 3, len(masses) - 1):
        assert masses[j] == pytest.approx(W.leafwise_mass(src, n, j), abs=1e-15)
    # refinement: each cell is the sum of its two children
    finer = W.level_masses(src, n + 1)
    assert np.allclose(finer[0::2] + finer[1::2], masses)


def test_chunked_masses_match_single_pass():
    src = two_state()
    chunks = np.concatenate(list(W.level_masses_chunks(src, 12, chunk_digits=5)))
    assert np.allclose(chunks, W.level_masses(src, 12))


# ---------------------------------------------------------------- transition probability

def test_transition_prob_cases():
    assert W.transition_prob(W.DigitSource.bernoulli(0.3), 0) == 0.3
    src = two_state()
    assert W.transition_prob(src, 0) == pytest.approx(0.9)
    assert W.transition_prob(src, W.ChainState(1)) == pytest.approx(0.2)
    assert W.transition_prob(W.DigitSource.bernoulli(1.0), 0) == 1.0
    with pytest.raises(DomainError):
        W.transition_prob(src, 5)


# ---------------------------------------------------------------- entropy and dimension

def test_fair_coin_entropy_is_log2():
    rep = W.run_chain(W.DigitSource.bernoulli(0.5), 8, 100, 0)
    assert rep.estimate == math.log(2)


def test_biased_coin_entropy():
    rep = W.run_chain(W.DigitSource.bernoulli(0.1), 16, 10**5, 1)
    assert abs(rep.estimate - 0.32508) <= 0.005
    assert h_nats(0.1) == pytest.approx(0.32508, abs=5e-6)


def test_two_state_entropy_matches_rate():
    pi = two_state_pi()
    rate = pi[0] * h_nats(0.9) + pi[1] * h_nats(0.2)
    rep = W.run_chain(two_state(), 32, 10**5, 2)
    assert abs(rep.estimate - rate) <= 0.005
    assert W.entropy_rate(two_state()) == pytest.approx(rate, rel=1e-12)


def test_run_chain_reproducible():
    assert W.run_chain(two_state(), 10, 1000, 3) == W.run_chain(two_state(), 10, 1000, 3)


def test_dimension_values():
    assert W.dimension(W.DigitSource.bernoulli(0.5)) == pytest.approx(1.0)
    d = W.dimension(W.DigitSource.bernoulli(0.1))
    assert d == pytest.approx(h_nats(0.1) / math.log(2), abs=1e-12)
    assert round(d, 5) == 0.469
    assert W.dimension(W.DigitSource.bernoulli(1.0)) == 0.0


def test_dimension_matches_mass_slope():
    src = two_state()
    assert abs(W.mass_slope_dimension(src, 20) - W.dimension(src)) <= 0.01


def test_naive_mass_ratio_converges_slowly():
    # H_k / k carries a start-up bias of order 1/k; the slope does not
    src = two_state()
    naive = W.block_entropy(src, 20) / (20 * math.log(2))
    assert abs(naive - W.dimension(src)) > abs(W.mass_slope_dimension(src, 20) - W.dimension(src))


@settings(max_examples=30, deadline=None)
@given(sources)
def test_block_entropy_subadditive_and_bounded(matrices):
    src = W.DigitSource(*matrices, initial=np.full(len(matrices[0]), 1 / len(matrices[0])))
    hs = [W.block_entropy(src, k) for k in range(1, 9)]
    assert all(b >= a - 1e-12 for a, b in zip(hs, hs[1:]))
    assert all(h <= k * math.log(2) + 1e-12 for k, h in enumerate(hs, 1))


# ---------------------------------------------------------------- accumulated entropy

@pytest.mark.parametrize("q", [0.1, 0.3, 0.5])
def test_accumulated_entropy_of_coin(q):
    src = W.DigitSource.bernoulli(q)
    assert W.accumulated_entropy(src, 0) == 0.0
    assert W.accumulated_entropy(src, 13) == pytest.approx(13 * h_nats(q))


def test_accumulated_entropy_matches_cell_entropy():
    # H(b_1..b_n | y_0) = sum_s P(y_0 = s) H(b_1..b_n | y_0 = s)
    src = two_state()
    init = np.array([0.7, 0.3])
    expected = sum(init[s] * W.block_entropy(src, 10, np.eye(2)[s]) for s in range(2))
    assert W.accumulated_entropy(src, 10, init) == pytest.approx(expected, rel=1e-12)


def test_accumulated_entropy_rate_from_fixed_start():
    src = two_state()
    rate = W.entropy_rate(src)
    start = np.array([1.0, 0.0])
    gaps = [abs(W.accumulated_entropy(src, n, start) / n - rate) for n in (1, 10, 100)]
    assert gaps[0] > gaps[1] > gaps[2]


# ---------------------------------------------------------------- L1 convergence

def binomial_l1(q, n):
    """Oracle for i.i.d. digits: group cells by their number of zeros."""
    target = h_nats(q)
    total = 0.0
    for k in range(n + 1):
        mass = q**k * (1 - q) ** (n - k)
        total += math.comb(n, k) * mass * abs(-math.log(mass) / n - target)
    return total


def test_fair_coin_l1_is_zero():
    src = W.DigitSource.bernoulli(0.5)
    assert all(W.un_l1_error(src, n) == pytest.approx(0.0, abs=1e-14) for n in (1, 5, 12))


@pytest.mark.parametrize("n", [4, 8, 16, 24])
def test_l1_matches_binomial_oracle(n):
    assert W.un_l1_error(W.DigitSource.bernoulli(0.3), n) == pytest.approx(binomial_l1(0.3, n), rel=1e-9)


def test_l1_decreases_along_levels():
    vals = [W.un_l1_error(W.DigitSource.bernoulli(0.3), n) for n in (4, 8, 16, 24)]
    assert vals == sorted(vals, reverse=True)


def test_l1_follows_central_limit_rate():
    # E|mean - H| ~ sqrt(2/pi) sigma / sqrt(n), sigma = sd of -log p(digit)
    q = 0.3
    sigma = abs(math.log(q / (1 - q))) * math.sqrt(q * (1 - q))
    for n in (24, 40):
        clt = math.sqrt(2 / math.pi) * sigma / math.sqrt(n)
        assert binomial_l1(q, n) == pytest.approx(clt, rel=0.05)
    assert binomial_l1(q, 24) > 0.05


def test_l1_caps():
    with pytest.raises(ResourceError):
        W.un_l1_error(W.DigitSource.bernoulli(0.3), 30)
    with pytest.raises(DomainError):
        W.un_l1_error(W.DigitSource.bernoulli(0.3), 0)


# ---------------------------------------------------------------- stationarity

def test_stationarity_check():
    assert W.stationarity_check(W.DigitSource.bernoulli(0.3), 10, 1000, 0) == 0.0
    assert W.stationarity_check(two_state(), 20, 10**5, 1) <= 0.01
    assert W.stationarity_check(two_state(), 20, 10**5, 1, initial=np.array([1.0, 0.0])) > 0.05


# ---------------------------------------------------------------- iterated chain

def test_iterate_fair_coin_uniform():
    assert np.allclose(W.iterate_chain(W.DigitSource.bernoulli(0.5), 3), np.full(8, 1 / 8))


def test_iterate_biased_coin_words():
    assert np.allclose(W.iterate_chain(W.DigitSource.bernoulli(0.1), 2), [0.01, 0.09, 0.09, 0.81])


def test_iterate_matches_path_enumeration():
    src = two_state()
    for state in (0, 1):
        dist = W.iterate_chain(src, 6, state)
        init = np.eye(2)[state]
        for j, word in enumerate(itertools.product((0, 1), repeat=6)):
            assert dist[j] == pytest.approx(hidden_path_mass(word, init), abs=1e-15)


def test_iterate_guards():
    with pytest.raises(ResourceError):
        W.iterate_chain(two_state(), 25)
    with pytest.raises(DomainError):
        W.iterate_chain(two_state(), 3, 7)


# ---------------------------------------------------------------- uniformity

def test_uniformity_measures():
    assert W.uniformity_gap(np.full(4, 0.25)) == 0.0
    assert W.entropy_deficit(np.full(4, 0.25)) == pytest.approx(0.0, abs=1e-15)
    assert W.uniformity_gap([1.0, 0, 0, 0, 0]) == pytest.approx(1 - 1 / 5)
    eps = 1e-3
    p = [0.5 + eps, 0.5 - eps]
    assert W.uniformity_gap(p) == pytest.approx(eps)
    deficit = W.entropy_deficit(p)
    assert 1.5 * eps**2 <= deficit <= 2.5 * eps**2  # Taylor: 2 eps^2
    with pytest.raises(DomainError):
        W.uniformity_gap([0.5, 0.6])


def test_report_shape():
    rep = W.leafwise_report(W.DigitSource.bernoulli(0.3), steps=8, samples=1000, seed=0, l1_levels=(4, 8))
    assert set(rep) == {"dimension", "entropy_estimate", "stderr", "l1_curve"}
    assert [n for n, _ in rep["l1_curve"]] == [4, 8]
