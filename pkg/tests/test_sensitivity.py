import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stabletopk import sensitivity as sens
from stabletopk.exceptions import ParameterError, RankError
from stabletopk.histogram import Histogram, sorted_view

import oracles


def sv_of(counts):
  return sorted_view(Histogram(counts))


counts_st = st.lists(st.integers(0, 40), min_size=2, max_size=10)


class TestLocal:

  def test_clear_gap(self):
    assert sens.local_sensitivity(sv_of([10, 7, 3]), 1) == 0
    assert oracles.local_sensitivity((10, 7, 3), 1) == 0

  def test_plateaus(self):
    # removing a user from one 5 and adding one to both 4s lets either 4
    # displace both top elements under some tie-break
    assert oracles.local_sensitivity((5, 5, 4, 4, 3), 2) == 2
    assert sens.local_sensitivity(sv_of([5, 5, 4, 4, 3]), 2) == 2

  def test_unsorted_input(self):
    assert sens.local_sensitivity(sv_of([4, 3, 5, 4, 5]), 2) == 2

  @given(counts_st, st.data())
  def test_zero_when_gap_at_least_two(self, counts, data):
    sv = sv_of(counts)
    k = data.draw(st.integers(1, len(counts) - 1))
    if sv.sorted_counts[k - 1] - sv.sorted_counts[k] >= 2:
      assert sens.local_sensitivity(sv, k) == 0
    else:
      assert sens.local_sensitivity(sv, k) >= 1

  def test_rank_errors(self):
    with pytest.raises(RankError):
      sens.local_sensitivity(sv_of([3, 2]), 2)
    with pytest.raises(RankError):
      sens.local_sensitivity(sv_of([3, 2]), 0)

  def test_matches_oracle_small(self):
    for c, k in oracles.exhaustive_suite(max_bins=5, max_count=4,
                                         ks=(1, 2, 3, 4)):
      assert sens.local_sensitivity(sv_of(c), k) == \
          oracles.local_sensitivity(c, k), (c, k)


class TestAtDistance:

  def test_example(self):
    assert sens.sensitivity_at_distance(sv_of([5, 5, 4, 4, 3]), 2, 3) == 2
    assert oracles.distance_table(5, 2).at((5, 5, 4, 4, 3), 3) == 2

  def test_large_gap_needs_distance(self):
    sv = sv_of([5, 3])
    assert sens.sensitivity_at_distance(sv, 1, 0) == 0
    # one removal from the 5 closes the gap to 1
    assert sens.sensitivity_at_distance(sv, 1, 1) == 1
    assert oracles.distance_table(2, 1).at((5, 3), 1) == 1

  def test_zero_while_gap_exceeds_distance_plus_one(self):
    sv = sv_of([9, 2, 1])
    for d in range(6):
      assert sens.sensitivity_at_distance(sv, 1, d) == 0
    assert sens.sensitivity_at_distance(sv, 1, 6) == 1

  @given(counts_st, st.data())
  def test_monotone_and_bounded(self, counts, data):
    sv = sv_of(counts)
    k = data.draw(st.integers(1, len(counts) - 1))
    vals = [sens.sensitivity_at_distance(sv, k, d) for d in range(45)]
    assert vals[0] == sens.local_sensitivity(sv, k)
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == sens.global_sensitivity(len(counts), k)

  def test_negative_distance(self):
    with pytest.raises(ParameterError):
      sens.sensitivity_at_distance(sv_of([3, 2]), 1, -1)

  def test_matches_oracle_exhaustive(self):
    for c, k in oracles.exhaustive_suite():
      table = oracles.distance_table(len(c), k)
      sv = sv_of(c)
      for d in range(len(c) + 1):
        assert sens.sensitivity_at_distance(sv, k, d) == table.at(c, d)


class TestSmooth:

  def test_shortcut_branch(self):
    sv = sv_of([100, 0, 0, 0])
    assert sens.smooth_sensitivity(sv, 1, 0.1, 3) == pytest.approx(
        math.exp(-0.3))

  def test_large_beta(self):
    assert sens.smooth_sensitivity(sv_of([5, 5, 1]), 1, 50.0, 3) == 1.0
    assert sens.smooth_sensitivity(sv_of([5, 3, 1]), 1, 50.0, 3) < 1e-20

  def test_global(self):
    assert sens.global_sensitivity(10, 3) == 3
    assert sens.global_sensitivity(4, 3) == 1

  @given(counts_st, st.data(), st.floats(0.01, 5.0), st.integers(1, 12))
  def test_bounds(self, counts, data, beta, d0):
    sv = sv_of(counts)
    k = data.draw(st.integers(1, len(counts) - 1))
    s = sens.smooth_sensitivity(sv, k, beta, d0)
    assert sens.local_sensitivity(sv, k) <= s <= k
    exact = sens.smooth_sensitivity_exact(sv, k, beta, d_max=200)
    assert exact <= s + 1e-15

  def test_exact_matches_definition_exhaustive(self):
    for c, k in oracles.exhaustive_suite():
      table = oracles.distance_table(len(c), k)
      want = oracles.smooth_from_table(table, c, 0.1, len(c))
      assert sens.smooth_sensitivity_exact(sv_of(c), k, 0.1) == \
          pytest.approx(want, rel=1e-15)

  def test_parameters(self):
    with pytest.raises(ParameterError):
      sens.smooth_sensitivity(sv_of([3, 2]), 1, 0.0, 2)
    with pytest.raises(ParameterError):
      sens.smooth_sensitivity(sv_of([3, 2]), 1, 0.1, 0)

  def test_profile(self):
    p = sens.sensitivity_profile(sv_of([5, 5, 4, 4, 3]), 2, 0.1, 5)
    d = p.to_dict()
    assert d["local"] == 2 and d["at_distance"]["3"] == 2
    assert d["smooth"] >= d["smooth_exact"]
    vals = list(p.at_distance.values())
    assert vals == sorted(vals)
