from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from whackamole.adapt import (
    DEFAULT_POLICY,
    AlphaPolicy,
    PathFeedback,
    feedback_to_alpha,
    rebalance_step,
    rtt_excess,
    severity_objective,
    whack,
    whack_many,
)
from whackamole.profile import PathProfile
from whackamole.update import ResidualCursor, update_e1

FIVE_PATH = [127, 400, 200, 173, 124]


def test_whack_five_path_example():
    p, c = PathProfile(FIVE_PATH), ResidualCursor()
    assert whack(p, c, 1, F(1, 4)) == 100
    assert p.b == [147, 320, 220, 193, 144]


def test_whack_zero_is_noop():
    p, c = PathProfile(FIVE_PATH), ResidualCursor(3)
    assert whack(p, c, 2, F(0)) == 0
    assert (p.b, c.r) == (FIVE_PATH, 3)


def test_whack_full():
    p, c = PathProfile([400, 200, 200, 224]), ResidualCursor()
    whack(p, c, 0, F(1))
    assert p.b == [100, 300, 300, 324]


@pytest.mark.parametrize("alpha", [F(-1, 2), F(3, 2)])
def test_whack_rejects_alpha(alpha):
    with pytest.raises(ValueError):
        whack(PathProfile(FIVE_PATH), ResidualCursor(), 0, alpha)


@given(st.integers(0, 4), st.fractions(0, 1))
def test_whack_floors_and_conserves(i, alpha):
    p, c = PathProfile(FIVE_PATH), ResidualCursor()
    removed = whack(p, c, i, alpha)
    assert removed == (alpha.numerator * FIVE_PATH[i]) // alpha.denominator
    assert sum(p.b) == 1024 and min(p.b) >= 0


def test_whack_many_single_path_equals_whack():
    for alpha in (F(1, 3), F(1, 2), F(7, 8)):
        a, ca = PathProfile(FIVE_PATH), ResidualCursor(2)
        b, cb = PathProfile(FIVE_PATH), ResidualCursor(2)
        whack(a, ca, 3, alpha)
        whack_many(b, cb, [0, 0, 0, alpha, 0])
        assert (a.b, ca.r) == (b.b, cb.r)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 7])
@given(alpha=st.fractions(0, 1))
def test_symmetric_whack_near_uniform(n, alpha):
    q, rest = divmod(1024, n)
    b = [q + (i < rest) for i in range(n)]
    p, c = PathProfile(b), ResidualCursor()
    whack_many(p, c, [alpha] * n)
    assert all(abs(x - y) <= 2 for x, y in zip(p.b, b))
    if rest == 0:
        assert p.b == b


def test_severity_objective():
    p = PathProfile([5, 11])
    assert severity_objective(p, [2, 1]) == 21
    assert severity_objective(p, [0, 0]) == 0
    assert severity_objective(PathProfile(FIVE_PATH), [1] * 5) == 1024
    with pytest.raises(ValueError):
        severity_objective(p, [1])


def test_rebalance_example():
    p, c = PathProfile([8, 8]), ResidualCursor()
    assert rebalance_step(p, c, [1, 0], 4)
    assert p.b == [4, 12]
    assert severity_objective(p, [1, 0]) == 4


def test_rebalance_equal_weights_is_noop():
    p, c = PathProfile(FIVE_PATH), ResidualCursor()
    assert rebalance_step(p, c, [F(1, 3)] * 5, 10) is False
    assert p.b == FIVE_PATH


def test_rebalance_clamps_budget():
    p, c = PathProfile([3, 13]), ResidualCursor()
    assert rebalance_step(p, c, [5, 1], 100)
    assert p.b == [0, 16]


def test_rebalance_splits_ties_by_share():
    p, c = PathProfile([300, 100, 300, 324]), ResidualCursor()
    rebalance_step(p, c, [2, 2, 0, 1], 40)
    assert p.b[:2] == [270, 90]
    assert sum(p.b) == 1024


@given(
    st.lists(st.integers(0, 300), min_size=2, max_size=6).filter(lambda b: sum(b) > 0),
    st.data(),
)
def test_rebalance_never_raises_objective(b, data):
    w = data.draw(st.lists(st.fractions(0, 5), min_size=len(b), max_size=len(b)))
    budget = data.draw(st.integers(1, 500))
    p, c = PathProfile(b), ResidualCursor()
    before = severity_objective(p, w)
    rebalance_step(p, c, w, budget)
    assert severity_objective(p, w) <= before
    assert sum(p.b) == sum(b) and min(p.b) >= 0


def test_alpha_zero_feedback():
    assert feedback_to_alpha([PathFeedback(), PathFeedback(packets=10, rtt_samples=[5, 5])]) == [0, 0]


def test_alpha_default_table():
    fb = [
        PathFeedback(packets=10, losses=1, rtt_samples=[100]),
        PathFeedback(packets=10, ecn_marks=5, rtt_samples=[100]),
        PathFeedback(packets=10, rtt_samples=[100]),
    ]
    alphas = feedback_to_alpha(fb, DEFAULT_POLICY)
    assert alphas[0] >= F(1, 2)
    assert alphas[1] >= F(1, 4)
    assert alphas[2] == 0


def test_rtt_excess_against_median():
    fb = [PathFeedback(rtt_samples=[100]), PathFeedback(rtt_samples=[100, 300]), PathFeedback(rtt_samples=[50])]
    assert rtt_excess(fb) == [0, 1, 0]


def test_policy_json_round_trip():
    rules = [{"signal": "ecn_rate", "threshold": 0.25, "alpha": "1/8"}]
    policy = AlphaPolicy.from_json(rules)
    assert policy.rules[0].threshold == F(1, 4)
    assert AlphaPolicy.from_json(policy.to_json()) == policy
    with pytest.raises(ValueError):
        AlphaPolicy.from_json([{"signal": "jitter", "threshold": 1, "alpha": "1/2"}])


feedbacks = st.builds(
    PathFeedback,
    packets=st.integers(1, 50),
    ecn_marks=st.integers(0, 50),
    losses=st.integers(0, 20),
    rtt_samples=st.lists(st.integers(1, 10_000), max_size=4),
)


@given(st.lists(feedbacks, min_size=1, max_size=5), st.integers(0, 4))
def test_alpha_monotone_in_loss(fbs, which):
    which %= len(fbs)
    base = feedback_to_alpha(fbs)
    worse = list(fbs)
    f = fbs[which]
    worse[which] = PathFeedback(f.packets, f.ecn_marks, 2 * f.losses + 1, f.rtt_samples)
    assert feedback_to_alpha(worse)[which] >= base[which]


@given(st.lists(feedbacks, min_size=1, max_size=5), st.integers(0, 4))
def test_alpha_monotone_in_ecn(fbs, which):
    which %= len(fbs)
    base = feedback_to_alpha(fbs)
    f = fbs[which]
    worse = list(fbs)
    worse[which] = PathFeedback(f.packets, min(f.packets, f.ecn_marks + 3), f.losses, f.rtt_samples)
    assert feedback_to_alpha(worse)[which] >= base[which]


def test_recovery_by_redistribution():
    # healthy paths gain whenever another path is whacked
    p, c = PathProfile(FIVE_PATH), ResidualCursor()
    before = list(p.b)
    update_e1(p, c, 4, 100)
    assert all(p.b[i] > before[i] for i in range(4))
