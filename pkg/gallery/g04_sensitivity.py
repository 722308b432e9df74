"""Local and smooth sensitivity of the top-k set."""

# %%
from stabletopk import Histogram, sorted_view
from stabletopk import sensitivity as sens

for counts in ([9, 5, 5, 4, 0], [9, 8, 1, 0, 0], [3, 3, 3, 3, 3]):
  sv = sorted_view(Histogram(counts))
  prof = sens.sensitivity_profile(sv, k=2, beta=0.2, d0=sv.m)
  print(counts, "local", prof.local, "A(d)", list(prof.at_distance.values()),
        "smooth", round(prof.smooth, 3), "exact", round(prof.smooth_exact, 3))
