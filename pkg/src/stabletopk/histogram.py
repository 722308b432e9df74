"""Vote histograms, sorted views and top-k index extraction.

A histogram counts, for each of ``m`` candidates, how many distinct users
voted for it. Users may vote for any number of candidates, so adding or
removing one user moves every count by at most one.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from stabletopk.exceptions import OutOfRangeError, ParameterError, RankError


def _frozen(a: np.ndarray) -> np.ndarray:
  a.setflags(write=False)
  return a


@dataclasses.dataclass(frozen=True, eq=False)
class Histogram:
  """Per-candidate vote counts.

  Attributes:
    counts: Non-negative integer counts, indexed by candidate id.
    labels: Optional external identifiers, one per candidate id.
  """

  counts: np.ndarray
  labels: Optional[Tuple[str, ...]] = None

  def __post_init__(self):
    counts = np.array(self.counts, dtype=np.int64, copy=True).reshape(-1)
    if counts.size < 1:
      raise ParameterError("a histogram needs at least one candidate")
    if np.any(counts < 0):
      raise ParameterError("counts must be non-negative")
    if self.labels is not None and len(self.labels) != counts.size:
      raise ParameterError("labels must have one entry per candidate")
    object.__setattr__(self, "counts", _frozen(counts))
    if self.labels is not None:
      object.__setattr__(self, "labels", tuple(self.labels))

  @property
  def m(self) -> int:
    return int(self.counts.size)

  def __eq__(self, other):
    if not isinstance(other, Histogram):
      return NotImplemented
    return (np.array_equal(self.counts, other.counts)
            and self.labels == other.labels)

  def __repr__(self):
    return f"Histogram(m={self.m}, counts={self.counts.tolist()!r})"


@dataclasses.dataclass(frozen=True, eq=False)
class SortedView:
  """Candidates ordered by count, largest first.

  Ties are broken by ascending candidate id. ``sorted_counts[r - 1]`` is the
  count at rank ``r``.
  """

  order: np.ndarray
  sorted_counts: np.ndarray

  @property
  def m(self) -> int:
    return int(self.order.size)

  def count_at(self, rank: int):
    """Count at 1-based ``rank``; rank ``m + 1`` is defined as 0."""
    if rank == self.m + 1:
      return self.sorted_counts.dtype.type(0)
    if not 1 <= rank <= self.m:
      raise RankError(f"rank {rank} outside [1, {self.m + 1}]")
    return self.sorted_counts[rank - 1]

  def gaps(self) -> np.ndarray:
    """Gaps ``h_(j) - h_(j+1)`` for ``j = 1 .. m - 1``."""
    return self.sorted_counts[:-1] - self.sorted_counts[1:]

  def __eq__(self, other):
    if not isinstance(other, SortedView):
      return NotImplemented
    return (np.array_equal(self.order, other.order)
            and np.array_equal(self.sorted_counts, other.sorted_counts))


@dataclasses.dataclass(frozen=True)
class SelectionOutcome:
  """Either a refusal (``indices is None``) or an unordered index set."""

  indices: Optional[frozenset] = None

  def __post_init__(self):
    if self.indices is not None:
      object.__setattr__(self, "indices",
                         frozenset(int(i) for i in self.indices))

  @property
  def is_bottom(self) -> bool:
    return self.indices is None

  def __len__(self):
    return 0 if self.indices is None else len(self.indices)

  def to_json(self):
    return None if self.indices is None else sorted(self.indices)


BOTTOM = SelectionOutcome(None)


def build_histogram(votes: Iterable[Tuple[object, int]], m: int) -> Histogram:
  """Counts distinct voters per candidate.

  Repeated ``(user, candidate)`` pairs contribute a single vote.

  Raises:
    OutOfRangeError: a candidate id is negative or ``>= m``.
  """
  if m < 1:
    raise ParameterError("m must be at least 1")
  seen = set()
  counts = np.zeros(m, dtype=np.int64)
  for user, cand in votes:
    cand = int(cand)
    if not 0 <= cand < m:
      raise OutOfRangeError(f"candidate id {cand} outside [0, {m})")
    if (user, cand) in seen:
      continue
    seen.add((user, cand))
    counts[cand] += 1
  return Histogram(counts)


def sorted_view(h: Histogram) -> SortedView:
  # stable sort on negated counts gives ascending-id tie-break
  order = np.argsort(-h.counts, kind="stable")
  return SortedView(_frozen(order), _frozen(h.counts[order]))


def gap(sv: SortedView, j: int):
  """Gap between the ``j``-th and ``(j+1)``-th largest counts.

  ``h_(m+1)`` is taken to be 0, so ``gap(sv, m)`` is the smallest count.
  """
  if not 1 <= j <= sv.m:
    raise RankError(f"rank {j} outside [1, {sv.m}]")
  return sv.count_at(j) - sv.count_at(j + 1)


def top_k_indices(sv: SortedView, k: int) -> SelectionOutcome:
  if not 1 <= k <= sv.m:
    raise RankError(f"k={k} outside [1, {sv.m}]")
  return SelectionOutcome(frozenset(sv.order[:k].tolist()))


def histogram_from_counts(counts: Sequence[int],
                          labels: Optional[Sequence[str]] = None) -> Histogram:
  return Histogram(np.asarray(counts),
                   None if labels is None else tuple(labels))
