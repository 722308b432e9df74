"""Renyi-DP curves, approximate-RDP composition and budget calibration.

A curve stores ``eps(alpha)`` on a fixed grid of orders together with a
failure mass ``delta_t``: the mechanism satisfies the RDP bound except on
events of probability at most ``delta_t``. Composition adds both
pointwise. Conversion to ``(eps, delta)``-DP minimises
``eps(alpha) + log(1/delta) / (alpha - 1)`` over the grid and adds
``delta_t`` to the returned delta.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from stabletopk.exceptions import (BudgetExhaustedError, CalibrationError,
                                   ParameterError)


def _build_default_orders() -> np.ndarray:
  fractional = 1.0 + np.arange(1, 100) / 100.0
  integers = np.arange(2, 65, dtype=float)
  tail = np.logspace(np.log10(64.0), 4.0, 400)
  dense = 1.0 + np.logspace(-2.0, 4.0, 2000)
  grid = np.unique(np.concatenate([fractional, integers, tail, dense]))
  grid.setflags(write=False)
  return grid


DEFAULT_ORDERS = _build_default_orders()


def _readonly(a) -> np.ndarray:
  a = np.array(a, dtype=float, copy=True)
  a.setflags(write=False)
  return a


@dataclasses.dataclass(frozen=True, eq=False)
class RdpCurve:
  """Approximate-RDP guarantee tabulated on a grid of orders.

  Attributes:
    orders: Strictly increasing orders, all greater than 1.
    eps: RDP epsilon at each order.
    delta_t: Failure mass of the events outside which the bound holds.
    pure_eps: Pure-DP parameter implied by the mechanism, when known.
      Informational only; it is summed under composition.
  """

  orders: np.ndarray
  eps: np.ndarray
  delta_t: float = 0.0
  pure_eps: Optional[float] = None

  def __post_init__(self):
    orders = _readonly(self.orders)
    eps = _readonly(self.eps)
    if orders.ndim != 1 or orders.size == 0:
      raise ParameterError("orders must be a non-empty vector")
    if eps.shape != orders.shape:
      raise ParameterError("eps must have one entry per order")
    if np.any(orders <= 1.0) or np.any(np.diff(orders) <= 0):
      raise ParameterError("orders must be strictly increasing and > 1")
    if np.any(np.isnan(eps)) or np.any(eps < 0):
      raise ParameterError("eps must be non-negative")
    delta_t = float(self.delta_t)
    if not 0.0 <= delta_t < 1.0:
      raise BudgetExhaustedError(f"delta_t={delta_t} outside [0, 1)")
    object.__setattr__(self, "orders", orders)
    object.__setattr__(self, "eps", eps)
    object.__setattr__(self, "delta_t", delta_t)
    if self.pure_eps is not None:
      object.__setattr__(self, "pure_eps", float(self.pure_eps))

  def __eq__(self, other):
    if not isinstance(other, RdpCurve):
      return NotImplemented
    return (np.array_equal(self.orders, other.orders)
            and np.array_equal(self.eps, other.eps)
            and self.delta_t == other.delta_t
            and self.pure_eps == other.pure_eps)

  def __repr__(self):
    return (f"RdpCurve(n_orders={self.orders.size}, "
            f"eps@2={self.at(2.0):.6g}, delta_t={self.delta_t:.3g})")

  def at(self, alpha: float) -> float:
    """Linear interpolation of ``eps`` at ``alpha``."""
    return float(np.interp(alpha, self.orders, self.eps))

  def with_delta_t(self, delta_t: float) -> "RdpCurve":
    return dataclasses.replace(self, delta_t=delta_t)

  def is_monotone(self) -> bool:
    return bool(np.all(np.diff(self.eps) >= 0))

  def to_dict(self) -> Dict:
    return {"orders": self.orders.tolist(), "eps": self.eps.tolist(),
            "delta_t": self.delta_t}

  @classmethod
  def from_dict(cls, d: Dict) -> "RdpCurve":
    return cls(np.asarray(d["orders"]), np.asarray(d["eps"]),
               float(d.get("delta_t", 0.0)))


@dataclasses.dataclass(frozen=True)
class DpBudget:
  """An ``(eps, delta)`` guarantee.

  Attributes:
    eps: Privacy loss, non-negative.
    delta: Failure probability.
    order: Grid order attaining the conversion optimum, if any.
  """

  eps: float
  delta: float
  order: Optional[float] = None

  def __post_init__(self):
    if not self.eps >= 0:
      raise ParameterError(f"eps must be non-negative, got {self.eps}")
    if not self.delta > 0:
      raise ParameterError(f"delta must be positive, got {self.delta}")


def zero_curve(orders: np.ndarray = DEFAULT_ORDERS) -> RdpCurve:
  return RdpCurve(orders, np.zeros_like(orders, dtype=float), 0.0, 0.0)


def gaussian_rdp(sigma: float, sensitivity: float = 1.0,
                 orders: np.ndarray = DEFAULT_ORDERS) -> RdpCurve:
  """Gaussian mechanism: ``eps(alpha) = alpha * sensitivity**2 / (2 sigma**2)``."""
  if not (sigma > 0 and sensitivity > 0):
    raise ParameterError("sigma and sensitivity must be positive")
  orders = np.asarray(orders, dtype=float)
  return RdpCurve(orders, orders * sensitivity ** 2 / (2.0 * sigma ** 2))


def zcdp_curve(rho: float, orders: np.ndarray = DEFAULT_ORDERS,
               delta_t: float = 0.0) -> RdpCurve:
  """The curve ``eps(alpha) = rho * alpha``."""
  if not rho >= 0:
    raise ParameterError("rho must be non-negative")
  orders = np.asarray(orders, dtype=float)
  return RdpCurve(orders, rho * orders, delta_t)


def _log_cosh(x: np.ndarray) -> np.ndarray:
  x = np.abs(x)
  small = np.log1p(2.0 * np.sinh(np.minimum(x, 1.0) / 2.0) ** 2)
  large = x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)
  return np.where(x < 1.0, small, large)


def em_bounded_range_branches(eps: float,
                              orders: np.ndarray = DEFAULT_ORDERS):
  """Returns the two closed-form bounds for a bounded-range mechanism.

  The first is ``alpha eps**2 / 8``. The second is
  ``log((sinh(alpha eps) - sinh((alpha - 1) eps)) / sinh(eps)) / (alpha - 1)``,
  evaluated through the identity
  ``sinh(a) - sinh(b) = 2 cosh((a + b) / 2) sinh((a - b) / 2)``
  so that it stays finite when ``alpha * eps`` is large.
  """
  if not eps > 0:
    raise ParameterError("eps must be positive")
  a = np.asarray(orders, dtype=float)
  quad = a * eps ** 2 / 8.0
  log_ratio = _log_cosh((2.0 * a - 1.0) * eps / 2.0) - _log_cosh(
      np.array(eps / 2.0))
  sinh_branch = np.maximum(log_ratio, 0.0) / (a - 1.0)
  return quad, sinh_branch


def em_bounded_range_rdp(eps: float,
                         orders: np.ndarray = DEFAULT_ORDERS) -> RdpCurve:
  """RDP of an ``eps``-DP mechanism with the bounded-range property."""
  quad, sinh_branch = em_bounded_range_branches(eps, orders)
  return RdpCurve(orders, np.minimum(quad, sinh_branch), 0.0, eps)


def laplace_rdp(eps: float, orders: np.ndarray = DEFAULT_ORDERS) -> RdpCurve:
  """RDP of the Laplace mechanism whose sensitivity-to-scale ratio is ``eps``.

  Uses ``log(alpha/(2alpha-1) e^{(alpha-1)eps}
  + (alpha-1)/(2alpha-1) e^{-alpha eps}) / (alpha - 1)``.
  """
  if not eps > 0:
    raise ParameterError("eps must be positive")
  a = np.asarray(orders, dtype=float)
  log_mix = np.logaddexp(
      np.log(a / (2 * a - 1)) + (a - 1) * eps,
      np.log((a - 1) / (2 * a - 1)) - a * eps)
  vals = np.clip(log_mix / (a - 1), 0.0, eps)
  return RdpCurve(orders, vals, 0.0, eps)


def rnm_generic_rdp(base: RdpCurve, m: int) -> RdpCurve:
  """Report-noisy-max over ``m`` scores: adds ``log(m) / (alpha - 1)``."""
  if m < 1:
    raise ParameterError("m must be at least 1")
  if m == 1:
    return base
  return RdpCurve(base.orders, base.eps + math.log(m) / (base.orders - 1.0),
                  base.delta_t, None)


def _common_grid(curves: Sequence[RdpCurve]) -> np.ndarray:
  lo = max(c.orders[0] for c in curves)
  hi = min(c.orders[-1] for c in curves)
  if lo > hi:
    raise ParameterError("curves have disjoint order ranges")
  union = np.unique(np.concatenate([c.orders for c in curves]))
  return union[(union >= lo) & (union <= hi)]


def compose(curves: Iterable[RdpCurve]) -> RdpCurve:
  """Adaptive composition: eps and delta_t both add.

  Curves on different grids are resampled by linear interpolation onto
  the union of their grids, clipped to the range all of them cover.

  Raises:
    BudgetExhaustedError: the summed failure mass reaches 1.
  """
  curves = list(curves)
  if not curves:
    return zero_curve()
  orders = curves[0].orders
  if all(np.array_equal(c.orders, orders) for c in curves[1:]):
    eps = curves[0].eps.copy()
    for c in curves[1:]:
      eps = eps + c.eps
  else:
    orders = _common_grid(curves)
    eps = np.zeros_like(orders)
    for c in curves:
      eps = eps + np.interp(orders, c.orders, c.eps)
  delta_t = math.fsum(c.delta_t for c in curves)
  if delta_t >= 1.0:
    raise BudgetExhaustedError(f"composed delta_t={delta_t} reaches 1")
  pures = [c.pure_eps for c in curves]
  pure = None if any(p is None for p in pures) else math.fsum(pures)
  return RdpCurve(orders, eps, delta_t, pure)


def repeat(curve: RdpCurve, times: int) -> RdpCurve:
  """``times``-fold self-composition in closed form."""
  if times < 1:
    raise ParameterError("times must be at least 1")
  delta_t = times * curve.delta_t
  if delta_t >= 1.0:
    raise BudgetExhaustedError(f"composed delta_t={delta_t} reaches 1")
  pure = None if curve.pure_eps is None else times * curve.pure_eps
  return RdpCurve(curve.orders, times * curve.eps, delta_t, pure)


def rdp_to_dp(curve: RdpCurve, delta: float) -> DpBudget:
  """Converts an approximate-RDP curve to ``(eps, delta + delta_t)``-DP."""
  if not 0.0 < delta <= 1.0:
    raise ParameterError(f"delta must lie in (0, 1], got {delta}")
  if curve.orders.size == 0:
    raise RuntimeError("empty order grid")
  vals = curve.eps + math.log(1.0 / delta) / (curve.orders - 1.0)
  i = int(np.argmin(vals))
  return DpBudget(max(float(vals[i]), 0.0), delta + curve.delta_t,
                  float(curve.orders[i]))


def zcdp_closed_form(rho: float, delta: float) -> float:
  """Standard conversion ``rho + 2 sqrt(rho log(1/delta))``."""
  return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def zcdp_printed_form(rho: float, delta: float) -> float:
  """The variant ``rho + sqrt(2 rho log(1/delta))``, kept for comparison.

  It is smaller than the standard conversion and is not a valid bound in
  general; it is reported alongside, never used for accounting.
  """
  return rho + math.sqrt(2.0 * rho * math.log(1.0 / delta))


def zcdp_to_dp(rho: float, delta: float, delta_t: float = 0.0,
               orders: np.ndarray = DEFAULT_ORDERS) -> DpBudget:
  """Grid-optimised conversion of ``delta_t``-approximate ``rho``-zCDP.

  The grid optimum never falls below :func:`zcdp_closed_form`, which is
  the exact infimum over continuous orders.
  """
  if not rho > 0:
    raise ParameterError("rho must be positive")
  return rdp_to_dp(zcdp_curve(rho, orders, delta_t), delta)


# Curves of the composite mechanisms. Receipts and calibration both build
# their curves here so the two always agree bit for bit.


def stable_top_k_curve(rho: float, delta_t: float,
                       orders: np.ndarray = DEFAULT_ORDERS) -> RdpCurve:
  """Large-gap selection at ``2 sqrt(rho)`` followed by the Gaussian test."""
  gap_sel = em_bounded_range_rdp(2.0 * math.sqrt(rho), orders)
  test = gaussian_rdp(math.sqrt(1.0 / rho), 1.0, orders).with_delta_t(delta_t)
  return compose([gap_sel, test])


def em_peel_curve(eps_round: float, rounds: int,
                  orders: np.ndarray = DEFAULT_ORDERS) -> RdpCurve:
  """``rounds``-fold composition of the bounded-range bound."""
  return compose([em_bounded_range_rdp(eps_round, orders)] * rounds)


def fallback_eps_round(rho_fallback: float, rounds: int) -> float:
  """Per-round EM parameter whose ``rounds``-fold zCDP equals ``rho_fallback``."""
  return math.sqrt(8.0 * rho_fallback / rounds)


def ptr_gaussian_curve(sigma: float, delta_t: float,
                       orders: np.ndarray = DEFAULT_ORDERS) -> RdpCurve:
  return gaussian_rdp(sigma, 1.0, orders).with_delta_t(delta_t)


def ptr_laplace_curve(eps: float, delta_t: float,
                      orders: np.ndarray = DEFAULT_ORDERS) -> RdpCurve:
  return laplace_rdp(eps, orders).with_delta_t(delta_t)


MECHANISMS = ("adaptive", "fixed", "em", "ptr-gauss", "ptr-lap", "zcdp")


@dataclasses.dataclass(frozen=True)
class Calibration:
  """Noise parameters meeting a target budget.

  Attributes:
    mechanism: Mechanism identifier.
    queries: Number of identical invocations composed.
    delta_t: Failure mass per invocation.
    rho: zCDP parameter per invocation (total of both stages for ``fixed``).
    sigma: Gaussian test noise, when the mechanism has one.
    eps_em: Pure-DP parameter of the large-gap selection, or of the Laplace
      test for ``ptr-lap``.
    eps_round: Per-round EM parameter for ``em`` and fixed-k fallbacks.
    curve: Composed curve over all queries.
    achieved: Converted budget of ``curve``.
  """

  mechanism: str
  queries: int
  delta_t: float
  rho: float
  sigma: Optional[float]
  eps_em: Optional[float]
  eps_round: Optional[float]
  curve: RdpCurve
  achieved: DpBudget

  def to_dict(self) -> Dict:
    return {
        "mechanism": self.mechanism, "queries": self.queries,
        "delta_t": self.delta_t, "rho": self.rho, "sigma": self.sigma,
        "eps_em": self.eps_em, "eps_round": self.eps_round,
        "eps": self.achieved.eps, "delta": self.achieved.delta,
    }


def _query_curve(mechanism: str, x: float, delta_t: float, k: Optional[int],
                 orders: np.ndarray) -> RdpCurve:
  if mechanism == "adaptive":
    return stable_top_k_curve(x, delta_t, orders)
  if mechanism == "fixed":
    # worst case: adaptive stage plus a fallback peel worth rho/2 in zCDP
    return compose([stable_top_k_curve(x / 2.0, delta_t, orders),
                    zcdp_curve(x / 2.0, orders)])
  if mechanism == "em":
    return em_peel_curve(x, k, orders)
  if mechanism == "ptr-gauss":
    return ptr_gaussian_curve(math.sqrt(1.0 / (2.0 * x)), delta_t, orders)
  if mechanism == "ptr-lap":
    return ptr_laplace_curve(x, delta_t, orders)
  if mechanism == "zcdp":
    return zcdp_curve(x, orders, delta_t)
  raise ParameterError(f"unknown mechanism {mechanism!r}")


def calibrate(target: DpBudget, delta_t: Optional[float] = None,
              queries: int = 1, mechanism: str = "adaptive",
              k: Optional[int] = None, tol: float = 1e-4,
              orders: np.ndarray = DEFAULT_ORDERS) -> Calibration:
  """Finds the largest noise budget whose composition meets ``target``.

  The search variable is ``rho`` for ``adaptive``, ``fixed``, ``ptr-gauss``
  and ``zcdp``, and the pure-DP parameter for ``em`` (per round) and
  ``ptr-lap``. The converted epsilon of the ``queries``-fold composition,
  taken at ``target.delta - queries * delta_t``, lands in
  ``[target.eps - tol, target.eps]``.

  Args:
    target: Overall budget.
    delta_t: Failure mass per query. Defaults to half of ``target.delta``
      spread evenly across queries. Ignored by ``em``.
    queries: Number of identical invocations.
    mechanism: One of :data:`MECHANISMS`. ``adaptive`` uses the exact curve
      of the two stages, which is tighter than the ``rho``-zCDP curve
      that ``zcdp`` calibrates against, so it admits a slightly larger
      ``rho``.
    k: Number of rounds, required for ``em`` and used to report
      ``eps_round`` for ``fixed``.
    tol: Width of the acceptance window below ``target.eps``.
    orders: Order grid.

  Returns:
    A :class:`Calibration`.

  Raises:
    CalibrationError: no parameter meets the target.
  """
  if mechanism not in MECHANISMS:
    raise ParameterError(f"unknown mechanism {mechanism!r}")
  if queries < 1:
    raise ParameterError("queries must be at least 1")
  if mechanism == "em":
    if k is None or k < 1:
      raise ParameterError("the em mechanism needs k >= 1")
    delta_t = 0.0
  elif delta_t is None:
    delta_t = target.delta / (2.0 * queries)
  if delta_t < 0:
    raise ParameterError("delta_t must be non-negative")
  delta_conv = target.delta - queries * delta_t
  if not delta_conv > 0:
    raise CalibrationError(
        f"target delta {target.delta} does not exceed {queries} * {delta_t}")

  def converted(x):
    c = repeat(_query_curve(mechanism, x, delta_t, k, orders), queries)
    return rdp_to_dp(c, min(delta_conv, 1.0)).eps, c

  lo, hi = 1e-14, 1.0
  if converted(lo)[0] > target.eps:
    raise CalibrationError("target eps is below what the order grid can certify")
  while converted(hi)[0] <= target.eps:
    lo, hi = hi, hi * 2.0
    if hi > 1e8:
      raise CalibrationError("calibration search diverged")
  best = None
  for _ in range(300):
    mid = math.sqrt(lo * hi)
    e, c = converted(mid)
    if e <= target.eps:
      lo, best = mid, (mid, e, c)
      if e >= target.eps - tol:
        break
    else:
      hi = mid
  if best is None or best[1] < target.eps - tol:
    raise CalibrationError("no parameter lands within tolerance of the target")
  x, _, curve = best
  achieved = rdp_to_dp(curve, min(delta_conv, 1.0))

  rho, sigma, eps_em, eps_round = x, None, None, None
  if mechanism in ("adaptive", "zcdp"):
    sigma, eps_em = math.sqrt(1.0 / x), 2.0 * math.sqrt(x)
  elif mechanism == "fixed":
    sigma, eps_em = math.sqrt(2.0 / x), 2.0 * math.sqrt(x / 2.0)
    if k is not None:
      eps_round = fallback_eps_round(x / 2.0, k)
  elif mechanism == "em":
    rho, eps_round = k * x ** 2 / 8.0, x
  elif mechanism == "ptr-gauss":
    sigma = math.sqrt(1.0 / (2.0 * x))
  elif mechanism == "ptr-lap":
    rho, eps_em = x ** 2 / 2.0, x
  return Calibration(mechanism, queries, delta_t, rho, sigma, eps_em,
                     eps_round, curve, achieved)


class PrivacyLedger:
  """Running composition of the curves spent by a sequence of queries.

  The ledger has a single owner and is not thread-safe.

  Args:
    limit: Optional overall budget. A query is refused when the composed
      curve would no longer convert to ``limit.eps`` at
      ``limit.delta - delta_t``.
    orders: Grid of the starting zero curve.
  """

  def __init__(self, limit: Optional[DpBudget] = None,
               orders: np.ndarray = DEFAULT_ORDERS):
    self.limit = limit
    self.curve = zero_curve(orders)
    self.queries = 0

  def _would_exceed(self, total: RdpCurve) -> bool:
    if self.limit is None:
      return False
    residual = self.limit.delta - total.delta_t
    if residual <= 0:
      return True
    return rdp_to_dp(total, min(residual, 1.0)).eps > self.limit.eps

  def check(self, curve: RdpCurve) -> RdpCurve:
    """Returns the would-be total, raising if it is not affordable."""
    total = compose([self.curve, curve])
    if self._would_exceed(total):
      raise BudgetExhaustedError("query would exceed the ledger limit")
    return total

  def spend(self, curve: RdpCurve) -> RdpCurve:
    self.curve = self.check(curve)
    self.queries += 1
    return self.curve

  def spent(self, delta: float) -> DpBudget:
    residual = delta - self.curve.delta_t
    if residual <= 0:
      raise BudgetExhaustedError("delta is smaller than the failure mass spent")
    return rdp_to_dp(self.curve, min(residual, 1.0))
