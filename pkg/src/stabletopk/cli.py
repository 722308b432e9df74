"""Command-line entry point with ``select``, ``calibrate``, ``sensitivity``
and ``bench`` subcommands. Every subcommand prints JSON."""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

from stabletopk import accountant, bench, exceptions, io, mechanisms
from stabletopk import sensitivity as sens
from stabletopk.histogram import sorted_view
from stabletopk.noise import RngStream


def _select(args) -> dict:
  h = io.ingest_histogram(args.histogram)
  rng = RngStream(args.seed)
  mech = args.mechanism
  need_k = mech != "adaptive"
  if need_k and args.k is None:
    raise exceptions.ParameterError(f"--k is required for {mech}")
  if mech == "adaptive":
    reg = (mechanisms.Zero() if args.kbar is None
           else mechanisms.DomainRestriction(args.kbar))
    receipt = mechanisms.stable_top_k_adaptive(h, reg, args.rho, args.delta_t,
                                               rng)
  elif mech == "fixed":
    receipt = mechanisms.stable_top_k_fixed(h, args.k, args.lam, args.rho,
                                            args.delta_t, rng)
  else:
    cal = _manual_calibration(args)
    receipt = bench.run_mechanism(bench.MechanismChoice(mech), h, args.k, cal,
                                  rng)
  return receipt.to_dict(args.delta)


def _manual_calibration(args) -> accountant.Calibration:
  """Parameters for the single-stage mechanisms, taken from the flags."""
  sigma = eps_em = eps_round = None
  if args.mechanism == "em":
    eps_round = args.eps if args.eps is not None else math.sqrt(
        8.0 * args.rho / args.k)
  elif args.mechanism == "ptr-gauss":
    sigma = args.sigma if args.sigma is not None else math.sqrt(
        1.0 / (2.0 * args.rho))
  else:
    if args.eps is None:
      raise exceptions.ParameterError("--eps is required for ptr-lap")
    eps_em = args.eps
  zero = accountant.zero_curve()
  return accountant.Calibration(args.mechanism, 1, args.delta_t, args.rho,
                                sigma, eps_em, eps_round, zero,
                                accountant.DpBudget(0.0, 1.0))


def _calibrate(args) -> dict:
  target = accountant.DpBudget(args.eps, args.delta)
  cal = accountant.calibrate(target, args.delta_t, args.queries,
                             args.mechanism, k=args.k)
  out = cal.to_dict()
  if args.mechanism in ("adaptive", "zcdp", "fixed"):
    total_rho = cal.rho * cal.queries
    residual = args.delta - cal.curve.delta_t
    out["zcdp_closed_form_eps"] = accountant.zcdp_closed_form(total_rho,
                                                              residual)
    out["zcdp_printed_form_eps"] = accountant.zcdp_printed_form(total_rho,
                                                                residual)
  return out


def _sensitivity(args) -> dict:
  h = io.ingest_histogram(args.histogram)
  sv = sorted_view(h)
  d0 = args.d0 if args.d0 is not None else h.m
  return sens.sensitivity_profile(sv, args.k, args.beta, d0).to_dict()


def _bench(args) -> Optional[str]:
  cfg = bench.ExperimentConfig.from_json(args.config)
  if args.seed is not None:
    cfg = bench.dataclasses.replace(cfg, seed=args.seed)
  report = bench.run_experiment(cfg, threads=args.threads)
  if args.out:
    report.write_jsonl(args.out)
    return None
  return report.to_jsonl()


def build_parser() -> argparse.ArgumentParser:
  p = argparse.ArgumentParser(
      prog="stabletopk", description="Private top-k selection tools.")
  sub = p.add_subparsers(dest="command", required=True)

  s = sub.add_parser("select", help="run one mechanism on a histogram CSV")
  s.add_argument("--mechanism", required=True,
                 choices=["adaptive", "fixed", "em", "ptr-gauss", "ptr-lap"])
  s.add_argument("--histogram", required=True, help="item_id,count CSV")
  s.add_argument("--k", type=int)
  s.add_argument("--rho", type=float, default=0.5)
  s.add_argument("--delta-t", dest="delta_t", type=float, default=1e-6)
  s.add_argument("--lambda", dest="lam", type=float, default=10.0)
  s.add_argument("--kbar", type=int, help="restrict adaptive ranks to 1..kbar")
  s.add_argument("--eps", type=float,
                 help="ptr-lap test epsilon or em per-round epsilon")
  s.add_argument("--sigma", type=float, help="ptr-gauss noise scale")
  s.add_argument("--delta", type=float, default=1e-6,
                 help="delta at which the receipt is converted")
  s.add_argument("--seed", type=int, default=0)

  c = sub.add_parser("calibrate", help="solve for noise meeting a budget")
  c.add_argument("--eps", type=float, required=True)
  c.add_argument("--delta", type=float, required=True)
  c.add_argument("--delta-t", dest="delta_t", type=float)
  c.add_argument("--queries", type=int, default=1)
  c.add_argument("--mechanism", default="adaptive",
                 choices=list(accountant.MECHANISMS))
  c.add_argument("--k", type=int)

  t = sub.add_parser("sensitivity", help="sensitivity profile of top-k")
  t.add_argument("--histogram", required=True)
  t.add_argument("--k", type=int, required=True)
  t.add_argument("--beta", type=float, default=0.1)
  t.add_argument("--d0", type=int, help="defaults to the number of bins")

  b = sub.add_parser("bench", help="run a benchmark configuration")
  b.add_argument("--config", required=True)
  b.add_argument("--out")
  b.add_argument("--threads", type=int, default=1)
  b.add_argument("--seed", type=int)
  return p


def main(argv: Optional[List[str]] = None) -> int:
  args = build_parser().parse_args(argv)
  handlers = {"select": _select, "calibrate": _calibrate,
              "sensitivity": _sensitivity, "bench": _bench}
  try:
    result = handlers[args.command](args)
  except (ValueError, RuntimeError, OSError) as e:
    print(f"error: {e}", file=sys.stderr)
    return 2
  if isinstance(result, str):
    sys.stdout.write(result)
  elif result is not None:
    print(json.dumps(result, indent=2, sort_keys=True))
  return 0


if __name__ == "__main__":
  sys.exit(main())
