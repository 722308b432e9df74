"""Stable top-k: adaptive and fixed-k variants on a histogram with a gap."""

# %%
import numpy as np

from stabletopk import Histogram, RngStream
from stabletopk import mechanisms as mech

counts = np.array([90, 88, 85, 84, 80, 20, 18, 15, 3, 1])
h = Histogram(counts)
rng = RngStream(seed=7)

# %%
# The adaptive version picks k itself, preferring ranks followed by a large gap.
for i in range(5):
  r = mech.stable_top_k_adaptive(h, mech.Zero(), rho=0.5, delta_t=1e-6,
                                 rng=rng.fork(i))
  print(r.branch, r.chosen_k, r.outcome.to_json())

# %%
# The fixed-k version always returns exactly k items.
for k in (3, 5, 7):
  r = mech.stable_top_k_fixed(h, k, lam=10.0, rho=0.5, delta_t=1e-6, rng=rng)
  print(k, r.branch, r.outcome.to_json())

# %%
# A receipt carries its privacy curve.
print(r.to_dict(1e-6)["eps_at_delta"])
