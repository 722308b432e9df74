"""Histograms, sorted views and count gaps.

Votes are deduplicated per (user, item); the sorted view orders items by
count with ties broken by the smaller id.
"""

# %%
from stabletopk import build_histogram, gap, sorted_view, top_k_indices

votes = [("ann", 0), ("ann", 0), ("bob", 0), ("bob", 2), ("cy", 2),
         ("cy", 1), ("dee", 2), ("eve", 3)]
h = build_histogram(votes, m=5)
print("counts", h.counts.tolist())

# %%
sv = sorted_view(h)
print("order", sv.order.tolist())
print("sorted counts", sv.sorted_counts.tolist())
print("gaps", sv.gaps().tolist())

# %%
# The gap after rank j decides how safely the top j can be released.
for j in range(1, h.m):
  print(j, "gap", gap(sv, j), "top set", top_k_indices(sv, j).to_json())
