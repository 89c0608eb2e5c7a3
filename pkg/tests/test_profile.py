from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from whackamole.profile import PathProfile, ProfileError, fractions, parse_profile, profile_from_counts, select_path

FIVE_PATH = [127, 400, 200, 173, 124]

counts = st.lists(st.integers(0, 200), min_size=1, max_size=10).filter(lambda b: sum(b) > 0)


def test_five_path_profile_cumulative():
    p = profile_from_counts(FIVE_PATH)
    assert p.m == 1024
    assert p.c == [0, 127, 527, 727, 900, 1024]
    assert p.ell == 10


def test_single_and_empty_bin():
    assert profile_from_counts([8]).c == [0, 8]
    p = profile_from_counts([0, 16])
    assert (p.m, p.c) == (16, [0, 0, 16])
    assert {select_path(p, k) for k in range(16)} == {1}


@pytest.mark.parametrize("bad", [[], [0, 0], [3, -1]])
def test_rejects_bad_counts(bad):
    with pytest.raises(ProfileError):
        PathProfile(bad)


@pytest.mark.parametrize("k, path", [(0, 0), (126, 0), (127, 1), (526, 1), (527, 2), (1023, 4)])
def test_select_boundaries(k, path):
    assert select_path(PathProfile(FIVE_PATH), k) == path


@pytest.mark.parametrize("k", [-1, 1024])
def test_select_out_of_range(k):
    with pytest.raises(ProfileError):
        select_path(PathProfile(FIVE_PATH), k)


def test_fractions_exact():
    assert fractions(PathProfile(FIVE_PATH)) == [Fraction(x, 1024) for x in FIVE_PATH]
    assert fractions(PathProfile([8, 8])) == [Fraction(1, 2)] * 2
    assert fractions(PathProfile([16])) == [1]


@given(counts)
def test_fractions_sum_to_one(b):
    assert sum(fractions(PathProfile(b))) == 1


@given(counts)
def test_round_trip(b):
    assert PathProfile(b).b == b


@given(counts)
def test_preimage_sizes_and_searches_agree(b):
    p = PathProfile(b)
    hits = [0] * p.n
    for k in range(p.m):
        i = select_path(p, k)
        assert select_path(p, k, "linear") == i
        assert select_path(p, k, "interpolation") == i
        hits[i] += 1
    assert hits == b


def test_preimage_exhaustive_large():
    b = [0, 12345, 1, 0, 40000, 13190]
    p = PathProfile(b)
    assert p.m == 1 << 16
    hits = [0] * p.n
    for k in range(p.m):
        hits[select_path(p, k)] += 1
    assert hits == b


def test_parse_literal():
    assert parse_profile("127,400,200,173,124").b == FIVE_PATH
    with pytest.raises(ProfileError):
        parse_profile("1,x")


def test_set_counts_keeps_mass():
    p = PathProfile([4, 4])
    with pytest.raises(ProfileError):
        p.set_counts([4, 5])
    p.set_counts([1, 7])
    assert p.c == [0, 1, 8]
