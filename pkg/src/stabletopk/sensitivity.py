"""Local, distance-``d`` and smooth sensitivity of the top-``k`` set.

Sensitivity here is the number of elements of the top-``k`` set that a
neighbouring dataset can displace, maximised over every way of breaking
ties. One user is added or removed per step and may vote for any subset
of candidates, so each count moves by at most one per step.

With sorted counts ``c_1 >= ... >= c_m``, the pair ``(k + 1 - s, k + s)``
can trade places within ``d`` further steps exactly when
``c_{k+1-s} - c_{k+s} <= d + 1``. The differences grow with ``s``, so the
sensitivities below are the lengths of the run of such pairs moving
outward from the ``k``/``k+1`` boundary.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Dict, Optional

import numpy as np

from stabletopk.exceptions import ParameterError, RankError
from stabletopk.histogram import SortedView


def _check(sv: SortedView, k: int) -> None:
  if not 1 <= k <= sv.m - 1:
    raise RankError(f"k={k} outside [1, {sv.m - 1}]")


def _paired_run(c: np.ndarray, k: int, slack: float) -> int:
  """Counts pairs ``s = 1, 2, ...`` with ``c[k-s] - c[k+s-1] <= slack``."""
  top, bottom, s = k - 1, k, 0
  while top >= 0 and bottom < c.size and c[top] - c[bottom] <= slack:
    s += 1
    top -= 1
    bottom += 1
  return s


def global_sensitivity(m: int, k: int) -> int:
  """Largest local sensitivity over all histograms with ``m`` bins."""
  return min(k, m - k)


def local_sensitivity(sv: SortedView, k: int) -> int:
  """Top-``k`` elements a single neighbour can displace.

  Zero whenever the gap at ``k`` is at least 2.
  """
  _check(sv, k)
  return _paired_run(sv.sorted_counts, k, 1)


def sensitivity_at_distance(sv: SortedView, k: int, d: int) -> int:
  """Largest local sensitivity over datasets within ``d`` steps."""
  _check(sv, k)
  if d < 0:
    raise ParameterError("d must be non-negative")
  return _paired_run(sv.sorted_counts, k, d + 1)


def smooth_sensitivity(sv: SortedView, k: int, beta: float, d0: int) -> float:
  """Upper bound on the ``beta``-smooth sensitivity with horizon ``d0``.

  Evaluates ``max(GS e^{-beta d0}, max_{d < d0} e^{-beta d} A(d))`` where
  ``A(d)`` is :func:`sensitivity_at_distance` and ``GS`` is
  :func:`global_sensitivity`.
  """
  _check(sv, k)
  if not beta > 0:
    raise ParameterError("beta must be positive")
  if d0 < 1:
    raise ParameterError("d0 must be at least 1")
  best = global_sensitivity(sv.m, k) * math.exp(-beta * d0)
  for d in range(d0):
    a = sensitivity_at_distance(sv, k, d)
    best = max(best, math.exp(-beta * d) * a)
  return best


def smooth_sensitivity_exact(sv: SortedView, k: int, beta: float,
                             d_max: Optional[int] = None) -> float:
  """``max_{d = 0 .. d_max} e^{-beta d} A(d)``; ``d_max`` defaults to ``m``."""
  _check(sv, k)
  if not beta > 0:
    raise ParameterError("beta must be positive")
  d_max = sv.m if d_max is None else d_max
  return max(math.exp(-beta * d) * sensitivity_at_distance(sv, k, d)
             for d in range(d_max + 1))


@dataclasses.dataclass(frozen=True)
class SensitivityProfile:
  """Sensitivity summary for one histogram and ``k``."""

  k: int
  local: int
  at_distance: Dict[int, int]
  smooth: float
  smooth_exact: float
  global_sensitivity: int
  beta: float
  d0: int

  def to_dict(self) -> dict:
    d = dataclasses.asdict(self)
    d["at_distance"] = {str(key): v for key, v in self.at_distance.items()}
    return d


def sensitivity_profile(sv: SortedView, k: int, beta: float,
                        d0: int) -> SensitivityProfile:
  at = {d: sensitivity_at_distance(sv, k, d) for d in range(max(d0, sv.m) + 1)}
  return SensitivityProfile(
      k=k, local=local_sensitivity(sv, k), at_distance=at,
      smooth=smooth_sensitivity(sv, k, beta, d0),
      smooth_exact=smooth_sensitivity_exact(sv, k, beta),
      global_sensitivity=global_sensitivity(sv.m, k), beta=beta, d0=d0)
