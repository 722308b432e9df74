"""Multi-label aggregation of teacher votes under a ledger limit."""

# %%
import numpy as np

from stabletopk import RngStream
from stabletopk import accountant as acc
from stabletopk.exceptions import BudgetExhaustedError
from stabletopk.mechanisms import pate_label

gen = np.random.default_rng(0)
truth = np.array([1, 1, 0, 0, 0, 1, 0, 0])
ledger = acc.PrivacyLedger(limit=acc.DpBudget(4.0, 1e-5))
rng = RngStream(3)

# %%
for q in range(100):
  flips = gen.random((250, truth.size)) < 0.1
  votes = np.where(flips, 1 - truth, truth)
  try:
    out = pate_label(votes, rho=0.05, delta_t=1e-8, ledger=ledger,
                     rng=rng.fork(q))
  except BudgetExhaustedError:
    print("ledger full after", ledger.queries, "queries")
    break
  if q < 3:
    print(q, out.to_json())
print("spent", ledger.spent(1e-5))
