"""Private selection mechanisms built on the histogram gap.

All mechanisms draw noise through an ``rng`` object with a
``sample(kind, size=None)`` method, normally a
:class:`~stabletopk.noise.RngStream`. Passing a
:class:`~stabletopk.noise.ForcedNoise` makes every example deterministic.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from stabletopk import accountant
from stabletopk.accountant import PrivacyLedger, RdpCurve
from stabletopk.exceptions import EmptyDomainError, ParameterError, RankError
from stabletopk.histogram import (BOTTOM, Histogram, SelectionOutcome,
                                  SortedView, sorted_view, top_k_indices)
from stabletopk.noise import Gaussian, Gumbel, Laplace, NoiseKind


@dataclasses.dataclass(frozen=True)
class Zero:
  """No regularisation."""

  def values(self, n: int) -> np.ndarray:
    return np.zeros(n)


@dataclasses.dataclass(frozen=True)
class AbsDistance:
  """Penalty ``-lam * |j - k|`` pulling the chosen rank towards ``k``."""

  k: int
  lam: float

  def __post_init__(self):
    if not self.lam >= 0:
      raise ParameterError("lambda must be non-negative")

  def values(self, n: int) -> np.ndarray:
    j = np.arange(1, n + 1)
    return -float(self.lam) * np.abs(j - self.k)


@dataclasses.dataclass(frozen=True)
class DomainRestriction:
  """Only ranks ``1 .. kbar`` are eligible."""

  kbar: int

  def __post_init__(self):
    if self.kbar < 1:
      raise ParameterError("kbar must be at least 1")

  def values(self, n: int) -> np.ndarray:
    if self.kbar > n:
      raise ParameterError(f"kbar={self.kbar} must be below m={n + 1}")
    out = np.zeros(n)
    out[self.kbar:] = -np.inf
    return out


Regularizer = Union[Zero, AbsDistance, DomainRestriction]


class RankChoice(NamedTuple):
  k: int
  curve: RdpCurve


class IndexChoice(NamedTuple):
  index: int
  curve: RdpCurve


@dataclasses.dataclass(frozen=True)
class MechanismReceipt:
  """What a mechanism returned and what it cost.

  Attributes:
    outcome: Released index set or Bottom.
    chosen_k: Rank picked by the large-gap stage, if any.
    curve: Privacy curve consumed, including ``delta_t``.
    trace: Noise draws made during the call when the source records them.
    branch: Which path a multi-branch mechanism took.
  """

  outcome: SelectionOutcome
  chosen_k: Optional[int]
  curve: RdpCurve
  trace: Optional[tuple] = None
  branch: Optional[str] = None

  def to_dict(self, delta: Optional[float] = None) -> dict:
    d = {"outcome": self.outcome.to_json(), "chosen_k": self.chosen_k,
         "branch": self.branch, "delta_t": self.curve.delta_t}
    if delta is not None:
      conv = accountant.rdp_to_dp(self.curve, delta)
      d["eps_at_delta"] = conv.eps
      d["delta_total"] = conv.delta
    return d


def _trace_mark(rng) -> int:
  trace = getattr(rng, "trace", None)
  return -1 if trace is None else len(trace)


def _trace_since(rng, mark: int):
  if mark < 0:
    return None
  return tuple(rng.trace[mark:])


def _check_rank(k: int, lo: int, hi: int) -> None:
  if not lo <= k <= hi:
    raise RankError(f"rank {k} outside [{lo}, {hi}]")


def regularized_large_gap(sv: SortedView, r: Regularizer, eps: float,
                          rng) -> RankChoice:
  """Picks a rank with a large gap below it, privately.

  Scores each ``j`` in ``1 .. m - 1`` by ``gap(j) + r(j) + Gumbel(2 / eps)``
  and returns the best. Gaps move by at most one between neighbours, so
  this is an ``eps``-DP exponential mechanism.

  Raises:
    EmptyDomainError: the regulariser excludes every rank.
  """
  if sv.m < 2:
    raise RankError("need at least two candidates")
  if not eps > 0:
    raise ParameterError("eps must be positive")
  n = sv.m - 1
  reg = r.values(n)
  if np.all(np.isneginf(reg)):
    raise EmptyDomainError("regulariser excludes every rank")
  gaps = sv.gaps().astype(float)
  noise = np.asarray(rng.sample(Gumbel(2.0 / eps), size=n), dtype=float)
  scores = gaps + reg + noise
  k = int(np.argmax(scores)) + 1
  return RankChoice(k, accountant.em_bounded_range_rdp(eps))


def rnm_curve(kind: NoiseKind, m: int, sensitivity: float = 2.0) -> RdpCurve:
  """Curve of report-noisy-max over ``m`` scores of the given sensitivity.

  Gumbel noise makes the mechanism an exponential mechanism with
  ``eps = 2 * sensitivity / scale``, whose bounded-range bound applies
  directly. Gaussian and Laplace noise pay the generic ``log(m)`` term.
  """
  if isinstance(kind, Gumbel):
    return accountant.em_bounded_range_rdp(2.0 * sensitivity / kind.scale)
  if isinstance(kind, Gaussian):
    base = accountant.gaussian_rdp(kind.sigma, sensitivity)
  elif isinstance(kind, Laplace):
    base = accountant.laplace_rdp(sensitivity / kind.scale)
  else:
    raise ParameterError(f"unknown noise kind {kind!r}")
  return accountant.rnm_generic_rdp(base, m)


def rnm_select(scores: Sequence[float], kind: NoiseKind, rng,
               sensitivity: float = 2.0) -> IndexChoice:
  """Argmax of ``scores`` plus i.i.d. noise; ties go to the lowest index."""
  scores = np.asarray(scores, dtype=float).reshape(-1)
  if scores.size == 0:
    raise ParameterError("scores must be non-empty")
  noise = np.asarray(rng.sample(kind, size=scores.size), dtype=float)
  idx = int(np.argmax(scores + noise))
  return IndexChoice(idx, rnm_curve(kind, scores.size, sensitivity))


def ptr_gaussian_test(q: float, sigma: float, delta_t: float, rng) -> bool:
  """Gaussian test that a gap ``q`` exceeds 1 with margin."""
  if not sigma > 0:
    raise ParameterError("sigma must be positive")
  if not 0.0 < delta_t < 1.0:
    raise ParameterError("delta_t must lie in (0, 1)")
  z = rng.sample(Gaussian(sigma))
  q_hat = max(1.0, float(q)) + z - sigma * math.sqrt(2.0 * math.log(1.0 / delta_t))
  return q_hat > 1.0


def ptr_laplace_test(q: float, eps: float, delta_t: float, rng) -> bool:
  """Laplace test that a gap ``q`` exceeds 1 with margin. No clamping."""
  if not eps > 0:
    raise ParameterError("eps must be positive")
  if not 0.0 < delta_t < 1.0:
    raise ParameterError("delta_t must lie in (0, 1)")
  z = rng.sample(Laplace(1.0 / eps))
  q_hat = float(q) + z - math.log(1.0 / delta_t) / eps
  return q_hat > 1.0


def _gap_at(sv: SortedView, k: int) -> float:
  return float(sv.sorted_counts[k - 1] - sv.sorted_counts[k])


def ptr_gaussian(sv: SortedView, k: int, sigma: float, delta_t: float,
                 rng) -> SelectionOutcome:
  """Releases the top-``k`` set if a noisy lower bound on its gap exceeds 1.

  Costs :func:`stabletopk.accountant.ptr_gaussian_curve`.
  """
  _check_rank(k, 1, sv.m - 1)
  if ptr_gaussian_test(_gap_at(sv, k), sigma, delta_t, rng):
    return top_k_indices(sv, k)
  return BOTTOM


def ptr_laplace(sv: SortedView, k: int, eps: float, delta_t: float,
                rng) -> SelectionOutcome:
  """Laplace counterpart of :func:`ptr_gaussian`; ``(eps, delta_t)``-DP."""
  _check_rank(k, 1, sv.m - 1)
  if ptr_laplace_test(_gap_at(sv, k), eps, delta_t, rng):
    return top_k_indices(sv, k)
  return BOTTOM


def stable_top_k_adaptive(h: Histogram, r: Regularizer, rho: float,
                          delta_t: float, rng) -> MechanismReceipt:
  """Chooses ``k`` privately, then releases the exact top-``k`` or Bottom.

  The rank comes from :func:`regularized_large_gap` at ``eps = 2 sqrt(rho)``
  and the release from :func:`ptr_gaussian` with ``sigma = sqrt(1 / rho)``.
  Each stage is ``rho / 2``-zCDP, so the whole is ``delta_t``-approximate
  ``rho``-zCDP.
  """
  if not rho > 0:
    raise ParameterError("rho must be positive")
  mark = _trace_mark(rng)
  sv = sorted_view(h)
  choice = regularized_large_gap(sv, r, 2.0 * math.sqrt(rho), rng)
  outcome = ptr_gaussian(sv, choice.k, math.sqrt(1.0 / rho), delta_t, rng)
  curve = accountant.stable_top_k_curve(rho, delta_t)
  return MechanismReceipt(outcome, choice.k, curve, _trace_since(rng, mark),
                          "released" if not outcome.is_bottom else "bottom")


def em_top_k_peel(h: Histogram, k: int, eps_round: float, rng,
                  candidates: Optional[Sequence[int]] = None) -> SelectionOutcome:
  """Top-``k`` of counts perturbed by i.i.d. ``Gumbel(2 / eps_round)``.

  One-shot Gumbel top-``k`` has the same distribution as ``k`` rounds of
  the exponential mechanism without replacement, each with parameter
  ``eps_round``. Costs :func:`stabletopk.accountant.em_peel_curve`.

  Args:
    h: Histogram.
    k: Number of indices to return.
    eps_round: Pure-DP parameter of each peeling round.
    rng: Noise source.
    candidates: Restrict selection to these ids. Defaults to all.
  """
  if not eps_round > 0:
    raise ParameterError("eps_round must be positive")
  ids = (np.arange(h.m) if candidates is None
         else np.asarray(sorted(set(int(c) for c in candidates)), dtype=np.int64))
  _check_rank(k, 1, ids.size)
  if k == ids.size:
    return SelectionOutcome(frozenset(ids.tolist()))
  counts = h.counts[ids].astype(float)
  noisy = counts + np.asarray(
      rng.sample(Gumbel(2.0 / eps_round), size=ids.size), dtype=float)
  top = np.argsort(-noisy, kind="stable")[:k]
  return SelectionOutcome(frozenset(ids[top].tolist()))


def stable_top_k_fixed(h: Histogram, k: int, lam: float, rho: float,
                       delta_t: float, rng) -> MechanismReceipt:
  """Returns exactly ``k`` indices, using the stable release when it helps.

  Half of ``rho`` goes to :func:`stable_top_k_adaptive` with an
  ``AbsDistance(k, lam)`` regulariser. Its result ``S`` of size ``k~``
  is then completed to exactly ``k`` indices:

  * Bottom: exponential-mechanism peel of ``k`` from all candidates.
  * ``k~ == k``: ``S`` as is.
  * ``k~ > k``: peel ``k`` from within ``S``.
  * ``k~ < k``: ``S`` plus a peel of ``k - k~`` from the others.

  Each peel of ``R`` rounds runs at ``eps_round = sqrt(4 rho / R)``, so the
  peel is ``rho / 2``-zCDP and the total is ``delta_t``-approximate
  ``rho``-zCDP.
  """
  _check_rank(k, 1, h.m - 1)
  if not rho > 0:
    raise ParameterError("rho must be positive")
  mark = _trace_mark(rng)
  half = rho / 2.0
  stage = stable_top_k_adaptive(h, AbsDistance(k, lam), half, delta_t, rng)
  k_tilde = stage.chosen_k
  if stage.outcome.is_bottom:
    branch, rounds, pool, keep = "bottom", k, None, frozenset()
  elif k_tilde == k:
    return MechanismReceipt(stage.outcome, k_tilde, stage.curve,
                            _trace_since(rng, mark), "exact")
  elif k_tilde > k:
    branch, rounds, pool, keep = "over", k, stage.outcome.indices, frozenset()
  else:
    keep = stage.outcome.indices
    pool = [i for i in range(h.m) if i not in keep]
    branch, rounds = "under", k - k_tilde
  eps_round = accountant.fallback_eps_round(half, rounds)
  peel = em_top_k_peel(h, rounds, eps_round, rng, candidates=pool)
  outcome = SelectionOutcome(keep | peel.indices)
  curve = accountant.compose(
      [stage.curve, accountant.em_peel_curve(eps_round, rounds)])
  return MechanismReceipt(outcome, k_tilde, curve, _trace_since(rng, mark),
                          branch)


def pate_label(teacher_votes, rho: float, delta_t: float,
               ledger: PrivacyLedger, rng) -> SelectionOutcome:
  """Multi-label aggregation of binary teacher votes.

  Column sums of the ``T x c`` vote matrix form a histogram over labels,
  which :func:`stable_top_k_adaptive` releases. The cost is charged to
  ``ledger`` first, so a query the ledger refuses draws no noise.

  Raises:
    BudgetExhaustedError: the ledger cannot absorb another query.
  """
  votes = np.asarray(teacher_votes)
  if votes.ndim != 2 or votes.shape[1] < 2:
    raise ParameterError("teacher votes must be a T x c matrix with c >= 2")
  if not np.all((votes == 0) | (votes == 1)):
    raise ParameterError("teacher votes must be binary")
  ledger.check(accountant.stable_top_k_curve(rho, delta_t))
  h = Histogram(votes.sum(axis=0))
  receipt = stable_top_k_adaptive(h, Zero(), rho, delta_t, rng)
  ledger.spend(receipt.curve)
  return receipt.outcome
