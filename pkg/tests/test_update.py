import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from whackamole.profile import PathProfile
from whackamole.update import InfeasibleUpdate, ResidualCursor, update_e1, update_e2, update_e3, update_e4

FIVE_PATH = [127, 400, 200, 173, 124]


def run(update, b, *args, r=0):
    p, c = PathProfile(b), ResidualCursor(r)
    out = update(p, c, *args)
    return p.b, c.r, out


def test_e1_divisible():
    assert run(update_e1, FIVE_PATH, 1, 100)[:2] == ([147, 320, 220, 193, 144], 0)


def test_e1_with_residuals():
    assert run(update_e1, FIVE_PATH, 1, 7)[:2] == ([129, 395, 201, 174, 125], 2)


def test_e1_noop():
    assert run(update_e1, FIVE_PATH, 3, 0, r=4)[:2] == (FIVE_PATH, 4)


def test_e1_infeasible():
    with pytest.raises(InfeasibleUpdate):
        run(update_e1, FIVE_PATH, 0, 128)


def test_e2_generalises_e1():
    assert run(update_e2, FIVE_PATH, [0, 100, 0, 0, 0]) == run(update_e1, FIVE_PATH, 1, 100)[:2] + (None,)
    for r in range(5):
        for ej in (0, 3, 7, 99):
            assert run(update_e2, FIVE_PATH, [0, 0, ej, 0, 0], r=r)[:2] == run(update_e1, FIVE_PATH, 2, ej, r=r)[:2]


def test_e2_uniform_and_zero():
    assert run(update_e2, FIVE_PATH, [1] * 5)[:2] == (FIVE_PATH, 0)
    assert run(update_e2, FIVE_PATH, [0] * 5, r=3)[:2] == (FIVE_PATH, 3)


def test_e3_examples():
    assert run(update_e3, FIVE_PATH, [4, 0, 0, 0, 0])[:2] == ([123, 401, 201, 174, 125], 0)
    # cursor starts on a removed bin and steps past it without filling it
    assert run(update_e3, FIVE_PATH, [6, 0, 0, 0, 0])[:2] == ([121, 402, 202, 174, 125], 3)


def test_e3_pure_transfer():
    assert run(update_e3, [8, 8, 0, 0], [0, 6, 0, 0], r=1)[:2] == ([10, 2, 2, 2], 1)


@pytest.mark.parametrize("e", [[0, 0, 0, 0, 0], [1, 1, 1, 1, 1]])
def test_e3_needs_both_sets(e):
    with pytest.raises(InfeasibleUpdate):
        run(update_e3, FIVE_PATH, e)


def test_e4_example():
    b, r, L = run(update_e4, [8, 8], [4, 0])
    assert (b, r, L) == ([5, 11], 0, 1)


def test_e4_rejects():
    with pytest.raises(InfeasibleUpdate):
        run(update_e4, [8, 8], [0, 0])
    with pytest.raises(InfeasibleUpdate):
        run(update_e4, [8, 8], [1, 1])
    with pytest.raises(InfeasibleUpdate):
        run(update_e4, [8, 8], [9, 0])


@st.composite
def removal(draw, need_split=False):
    ell = draw(st.integers(4, 10))
    n = draw(st.integers(2, 8))
    m = 1 << ell
    cuts = sorted(draw(st.lists(st.integers(0, m), min_size=n - 1, max_size=n - 1)))
    edges = [0, *cuts, m]
    b = [hi - lo for lo, hi in zip(edges, edges[1:])]
    e = [draw(st.integers(0, bi)) for bi in b]
    r = draw(st.integers(0, n - 1))
    if need_split:
        assume(any(e) and not all(e))
    return b, e, r


@given(removal())
def test_e2_invariants(case):
    b, e, r = case
    after, cursor, _ = run(update_e2, b, e, r=r)
    assert sum(after) == sum(b) and min(after) >= 0 and 0 <= cursor < len(b)


@given(removal(need_split=True))
def test_e3_invariants(case):
    b, e, r = case
    after, cursor, _ = run(update_e3, b, e, r=r)
    assert sum(after) == sum(b) and min(after) >= 0
    for i, ei in enumerate(e):
        if ei:
            assert after[i] == b[i] - ei


@given(removal(need_split=True))
def test_e4_invariants(case):
    b, e, r = case
    m, total = sum(b), sum(e)
    assume(total < m)
    after, cursor, L = run(update_e4, b, e, r=r)
    assert sum(after) == m and min(after) >= 0
    # L is the exact quotient of the remainders
    rems = sum(((bi - ei) * m) % (m - total) for bi, ei in zip(b, e))
    assert rems == L * (m - total)
    for i, ei in enumerate(e):
        if ei:
            assert after[i] == ((b[i] - ei) * m) // (m - total)


def _residual_receipts(before, after, base):
    return [a - x for a, x in zip(after, base)]


@pytest.mark.parametrize("n, ej", [(5, 7), (7, 3), (4, 1)])
def test_e1_residual_fairness(n, ej):
    q, rest = divmod(1024, n)
    p, c = PathProfile([q] * (n - 1) + [q + rest]), ResidualCursor()
    got = [0] * n
    rng = random.Random(n)
    for _ in range(60):
        j = rng.randrange(n)
        if p.b[j] < ej:
            j = p.b.index(max(p.b))
        before = list(p.b)
        x = ej // n
        base = [bi + x - (ej if i == j else 0) for i, bi in enumerate(before)]
        update_e1(p, c, j, ej)
        got = [g + d for g, d in zip(got, _residual_receipts(before, p.b, base))]
        assert max(got) - min(got) <= 1


def test_e3_residual_fairness_constant_kbar():
    p, c = PathProfile([600, 100, 100, 100, 124]), ResidualCursor(2)
    kept = [1, 2, 3, 4]
    got = {i: 0 for i in kept}
    for _ in range(50):
        before = list(p.b)
        update_e3(p, c, [7, 0, 0, 0, 0])
        x = 7 // 4
        for i in kept:
            got[i] += p.b[i] - before[i] - x
        assert max(got.values()) - min(got.values()) <= 1


def test_e4_residual_fairness_constant_kbar():
    p, c = PathProfile([300, 300, 200, 224]), ResidualCursor(1)
    kept = [1, 2, 3]
    got = {i: 0 for i in kept}
    m = 1024
    for step in range(40):
        e = [5, 0, 0, 0]
        before = list(p.b)
        if before[0] < 5:
            break
        denom = m - 5
        props = [((bi - ei) * m) // denom for bi, ei in zip(before, e)]
        L = sum(((bi - ei) * m) % denom for bi, ei in zip(before, e)) // denom
        update_e4(p, c, e)
        for i in kept:
            got[i] += p.b[i] - props[i] - L // len(kept)
        assert max(got.values()) - min(got.values()) <= 1
