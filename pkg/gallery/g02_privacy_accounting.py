"""Composing Renyi curves and converting them to (eps, delta)."""

# %%
import numpy as np

from stabletopk import accountant as acc

gauss = acc.gaussian_rdp(sigma=4.0)
em = acc.em_bounded_range_rdp(eps=0.5)
total = acc.compose([gauss, em])
for delta in (1e-5, 1e-8):
  b = acc.rdp_to_dp(total, delta)
  print(f"delta={delta:g}: eps={b.eps:.4f} at order {b.order:.2f}")

# %%
# The bounded-range curve is the smaller of two bounds; the sinh branch
# wins at small orders and the quadratic branch at large ones.
quad, sinh = acc.em_bounded_range_branches(1.0, np.array([1.5, 4.0, 64.0]))
print("quadratic", np.round(quad, 4), "sinh", np.round(sinh, 4))

# %%
# zCDP on the grid versus the closed form.
rho, delta = 0.1, 1e-6
print("grid", acc.zcdp_to_dp(rho, delta).eps,
      "closed form", acc.zcdp_closed_form(rho, delta))

# %%
# Calibrating the adaptive mechanism to a daily budget over a week.
cal = acc.calibrate(acc.DpBudget(1.0, 1e-6), queries=7, mechanism="adaptive")
print("rho per day", cal.rho, "achieved", cal.achieved)
