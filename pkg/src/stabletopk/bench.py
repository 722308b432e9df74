"""Utility benchmark: recall of private top-k mechanisms over many trials.

A configuration names a dataset, a list of mechanisms, the ``k`` values
and the ``(eps, delta)`` targets. Every (mechanism, k, budget) cell is
calibrated once, run for ``trials`` independent trials and summarised as
one JSON line.

Example configuration::

  {
    "dataset": {"type": "synthetic", "bins": 15000, "heavy_count": 700},
    "mechanisms": [{"id": "fixed", "lambda": 10}, {"id": "em"}],
    "k": [10, 100, 1000, 1500],
    "budgets": [{"eps": 0.15, "delta": 1e-6}],
    "trials": 100,
    "seed": 0
  }
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import os
import pathlib
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from stabletopk import accountant, io, mechanisms
from stabletopk.accountant import DpBudget
from stabletopk.exceptions import ParameterError
from stabletopk.histogram import Histogram, sorted_view, top_k_indices
from stabletopk.noise import RngStream

DATASET_TYPES = ("synthetic", "histogram_csv", "votes_csv", "daily")


def synthetic_histogram(bins: int, heavy_k: int, heavy_count: int) -> Histogram:
  """First ``heavy_k`` bins hold ``heavy_count`` votes, the rest none."""
  if bins < 1 or not 0 <= heavy_k <= bins or heavy_count < 0:
    raise ParameterError("need bins >= 1, 0 <= heavy_k <= bins, heavy_count >= 0")
  counts = np.zeros(bins, dtype=np.int64)
  counts[:heavy_k] = heavy_count
  return Histogram(counts)


@dataclasses.dataclass(frozen=True)
class MechanismChoice:
  id: str
  lam: float = 10.0

  def __post_init__(self):
    if self.id not in ("adaptive", "fixed", "em", "ptr-gauss", "ptr-lap"):
      raise ParameterError(f"unknown mechanism {self.id!r}")


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
  """Benchmark settings.

  Attributes:
    dataset: Dataset description; ``type`` is one of :data:`DATASET_TYPES`.
      ``synthetic`` takes ``bins``, ``heavy_count`` and optionally
      ``heavy_k`` (default: the ``k`` under test). The CSV types take
      ``path`` and optionally ``m``. ``daily`` takes ``paths`` or ``dir``
      of histogram CSVs, one per day.
    mechanisms: Mechanisms to compare.
    ks: ``k`` values.
    budgets: Total budgets; for daily data the budget covers all days.
    trials: Trials per cell.
    seed: Master seed.
    delta_t: Failure mass per query; defaults to half of delta spread over
      the queries.
    base_dir: Directory relative paths are resolved against.
  """

  dataset: Dict
  mechanisms: Sequence[MechanismChoice]
  ks: Sequence[int]
  budgets: Sequence[DpBudget]
  trials: int = 100
  seed: int = 0
  delta_t: Optional[float] = None
  base_dir: str = "."

  def __post_init__(self):
    if self.trials < 1:
      raise ParameterError("trials must be at least 1")
    if self.dataset.get("type") not in DATASET_TYPES:
      raise ParameterError(f"dataset type must be one of {DATASET_TYPES}")
    for b in self.budgets:
      if not 0 < b.delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    if not self.ks or any(k < 1 for k in self.ks):
      raise ParameterError("k values must be positive")

  @classmethod
  def from_dict(cls, d: Dict, base_dir: str = ".") -> "ExperimentConfig":
    mechs = []
    for m in d.get("mechanisms", [{"id": "fixed"}]):
      if isinstance(m, str):
        m = {"id": m}
      mechs.append(MechanismChoice(m["id"], float(m.get("lambda", 10.0))))
    budgets = [DpBudget(float(b["eps"]), float(b["delta"]))
               for b in d["budgets"]]
    return cls(dataset=dict(d["dataset"]), mechanisms=tuple(mechs),
               ks=tuple(int(k) for k in d["k"]), budgets=tuple(budgets),
               trials=int(d.get("trials", 100)), seed=int(d.get("seed", 0)),
               delta_t=d.get("delta_t"), base_dir=base_dir)

  @classmethod
  def from_json(cls, path) -> "ExperimentConfig":
    path = pathlib.Path(path)
    with open(path, encoding="utf-8") as f:
      return cls.from_dict(json.load(f), base_dir=str(path.parent))


@dataclasses.dataclass
class ExperimentReport:
  """One row per (mechanism, k, budget) cell, plus run metadata."""

  rows: List[Dict]
  seed: int
  wall_time: float

  def write_jsonl(self, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
      for row in self.rows:
        f.write(json.dumps(row, sort_keys=True) + "\n")

  def to_jsonl(self) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.rows)


def _resolve(cfg: ExperimentConfig, p: str) -> str:
  return p if os.path.isabs(p) else os.path.join(cfg.base_dir, p)


def load_days(cfg: ExperimentConfig, k: int) -> List[Histogram]:
  """Histograms the mechanism runs on, one per query."""
  ds = cfg.dataset
  kind = ds["type"]
  if kind == "synthetic":
    heavy = ds.get("heavy_k")
    return [synthetic_histogram(int(ds["bins"]),
                                k if heavy is None else int(heavy),
                                int(ds["heavy_count"]))]
  if kind == "histogram_csv":
    return [io.ingest_histogram(_resolve(cfg, ds["path"]), ds.get("m"))]
  if kind == "votes_csv":
    return [io.ingest_votes(_resolve(cfg, ds["path"]), ds.get("m"))]
  if "paths" in ds:
    paths = [_resolve(cfg, p) for p in ds["paths"]]
  else:
    d = _resolve(cfg, ds["dir"])
    paths = sorted(os.path.join(d, f) for f in os.listdir(d)
                   if f.endswith(".csv"))
  if not paths:
    raise ParameterError("daily dataset has no histograms")
  return [io.ingest_histogram(p, ds.get("m")) for p in paths]


def recall(outcome, truth: frozenset, k: int) -> float:
  """``|S & truth| / k``; Bottom counts as 0."""
  if outcome.is_bottom:
    return 0.0
  return len(outcome.indices & truth) / k


def run_mechanism(choice: MechanismChoice, h: Histogram, k: int,
                  cal: accountant.Calibration, rng) -> mechanisms.MechanismReceipt:
  """One invocation of a calibrated mechanism, returned as a receipt."""
  if choice.id == "adaptive":
    return mechanisms.stable_top_k_adaptive(h, mechanisms.Zero(), cal.rho,
                                            cal.delta_t, rng)
  if choice.id == "fixed":
    return mechanisms.stable_top_k_fixed(h, k, choice.lam, cal.rho, cal.delta_t,
                                         rng)
  if choice.id == "em":
    out = mechanisms.em_top_k_peel(h, k, cal.eps_round, rng)
    return mechanisms.MechanismReceipt(
        out, k, accountant.em_peel_curve(cal.eps_round, k), None, "em")
  sv = sorted_view(h)
  if choice.id == "ptr-gauss":
    out = mechanisms.ptr_gaussian(sv, k, cal.sigma, cal.delta_t, rng)
    curve = accountant.ptr_gaussian_curve(cal.sigma, cal.delta_t)
  else:
    out = mechanisms.ptr_laplace(sv, k, cal.eps_em, cal.delta_t, rng)
    curve = accountant.ptr_laplace_curve(cal.eps_em, cal.delta_t)
  return mechanisms.MechanismReceipt(out, k, curve, None, choice.id)


def _trial(choice, days, truths, k, cal, rng):
  recalls, bottoms = [], 0
  for day, (h, truth) in enumerate(zip(days, truths)):
    receipt = run_mechanism(choice, h, k, cal, rng.fork(day))
    recalls.append(recall(receipt.outcome, truth, k))
    bottoms += receipt.outcome.is_bottom
  return float(np.mean(recalls)), bottoms / len(days)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
  """Runs every cell of ``cfg``.

  Trials draw from ``RngStream(seed).fork(cell).fork(trial)``, so results
  do not depend on ``threads``.
  """
  start = time.perf_counter()
  master = RngStream(cfg.seed)
  rows = []
  cell = 0
  pool = (concurrent.futures.ThreadPoolExecutor(threads)
          if threads > 1 else None)
  try:
    for k in cfg.ks:
      days = load_days(cfg, k)
      truths = []
      for h in days:
        if not 1 <= k <= h.m - 1:
          raise ParameterError(f"k={k} needs at least k + 1 candidates")
        truths.append(top_k_indices(sorted_view(h), k).indices)
      for budget in cfg.budgets:
        for choice in cfg.mechanisms:
          t0 = time.perf_counter()
          cal = accountant.calibrate(budget, cfg.delta_t, len(days), choice.id,
                                     k=k)
          stream = master.fork(cell)
          cell += 1
          args = [(choice, days, truths, k, cal, stream.fork(t))
                  for t in range(cfg.trials)]
          if pool is None:
            results = [_trial(*a) for a in args]
          else:
            results = list(pool.map(lambda a: _trial(*a), args))
          rec = np.array([r[0] for r in results])
          bot = np.array([r[1] for r in results])
          std = float(rec.std(ddof=1)) if rec.size > 1 else 0.0
          conv = accountant.rdp_to_dp(
              cal.curve, budget.delta - cal.curve.delta_t)
          rows.append({
              "mechanism": choice.id, "k": k, "eps": budget.eps,
              "delta": budget.delta, "trials": cfg.trials, "days": len(days),
              "mean_recall": float(rec.mean()),
              "std_recall": std,
              "stderr_recall": std / np.sqrt(rec.size),
              "bottom_rate": float(bot.mean()),
              "consumed_eps": conv.eps, "consumed_delta": conv.delta,
              "calibration": cal.to_dict(),
              "lambda": choice.lam if choice.id == "fixed" else None,
              "wall_time": time.perf_counter() - t0,
          })
  finally:
    if pool is not None:
      pool.shutdown()
  return ExperimentReport(rows, cfg.seed, time.perf_counter() - start)
