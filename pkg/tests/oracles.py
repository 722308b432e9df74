"""Independent reference implementations used only by the tests.

Nothing here imports the library's algorithms. Histograms are tuples of
counts sorted in non-increasing order; the quantities checked depend only
on the multiset of counts.
"""

import functools
import itertools
import math

import numpy as np


def valid_top_k_sets(c, k):
  """Every index set that is a top-k set of ``c`` under some tie-break."""
  t = sorted(c, reverse=True)[k - 1]
  forced = [i for i, x in enumerate(c) if x > t]
  ties = [i for i, x in enumerate(c) if x == t]
  need = k - len(forced)
  return [frozenset(forced) | frozenset(s)
          for s in itertools.combinations(ties, need)]


def _groups(c):
  """Runs of equal values in a sorted tuple as (start, length)."""
  out, start = [], 0
  for i in range(1, len(c) + 1):
    if i == len(c) or c[i] != c[start]:
      out.append((start, i - start))
      start = i
  return out


def labelled_neighbours(c):
  """Neighbours of sorted ``c``, one per distinct labelled outcome.

  Within a run of equal counts the bumped elements can be taken to be the
  first ones, because the oracle maximises over every tie-break of ``c``.
  """
  groups = _groups(c)
  for sign in (1, -1):
    choices = [range(g + 1) for _, g in groups]
    for bumps in itertools.product(*choices):
      if not any(bumps):
        continue
      new = list(c)
      ok = True
      for (start, _), b in zip(groups, bumps):
        for i in range(start, start + b):
          new[i] += sign
          if new[i] < 0:
            ok = False
      if ok:
        yield tuple(new)


@functools.lru_cache(maxsize=None)
def local_sensitivity(c, k):
  """Max over neighbours and tie-breaks of top-k elements displaced."""
  best = 0
  mine = valid_top_k_sets(c, k)
  for nb in labelled_neighbours(c):
    theirs = valid_top_k_sets(nb, k)
    for s in mine:
      for s2 in theirs:
        best = max(best, len(s - s2))
  return best


def multiset_neighbours(c):
  """Sorted neighbours of a sorted tuple (labels dropped)."""
  seen = set()
  for nb in labelled_neighbours(c):
    key = tuple(sorted(nb, reverse=True))
    if key not in seen:
      seen.add(key)
      yield key


class DistanceTable:
  """``A(d)`` for every multiset with ``m`` bins and counts up to ``cap``.

  ``A(0)`` is the local sensitivity and ``A(d)`` the maximum of ``A(d - 1)``
  over the histogram and its neighbours. Values are exact for histograms
  whose largest count plus ``d`` stays within ``cap``.
  """

  def __init__(self, m, k, cap, d_max):
    self.nodes = list(itertools.combinations_with_replacement(
        range(cap, -1, -1), m))
    index = {n: i for i, n in enumerate(self.nodes)}
    nbrs = []
    for n in self.nodes:
      nbrs.append([index[x] for x in multiset_neighbours(n) if x in index])
    level = np.array([local_sensitivity(n, k) for n in self.nodes])
    self.levels = [level]
    for _ in range(d_max):
      prev = self.levels[-1]
      nxt = prev.copy()
      for i, js in enumerate(nbrs):
        if js:
          nxt[i] = max(prev[i], prev[js].max())
      self.levels.append(nxt)
    self.index = index

  def at(self, c, d):
    return int(self.levels[d][self.index[tuple(c)]])


def smooth_from_table(table, c, beta, d_max):
  return max(math.exp(-beta * d) * table.at(c, d) for d in range(d_max + 1))


def sorted_histograms(m, max_count):
  """All non-increasing count tuples of length ``m``."""
  return list(itertools.combinations_with_replacement(
      range(max_count, -1, -1), m))


def peeling_distribution(u, k, eps):
  """Exact law of the unordered set chosen by ``k`` rounds of EM peeling."""
  w = np.exp(eps * np.asarray(u, dtype=float) / 2.0)
  probs = {}
  for seq in itertools.permutations(range(len(u)), k):
    p, left = 1.0, w.sum()
    for i in seq:
      p *= w[i] / left
      left -= w[i]
    key = frozenset(seq)
    probs[key] = probs.get(key, 0.0) + p
  return probs


def peeling_sample(u, k, eps, gen):
  """One draw of iterative EM peeling with ``softmax(eps * u / 2)`` weights."""
  u = np.asarray(u, dtype=float)
  alive = list(range(len(u)))
  chosen = []
  for _ in range(k):
    logits = eps * u[alive] / 2.0
    p = np.exp(logits - logits.max())
    p /= p.sum()
    j = gen.choice(len(alive), p=p)
    chosen.append(alive.pop(j))
  return frozenset(chosen)


def rdp_to_dp_dense(eps_fn, delta, lo=1.0 + 1e-6, hi=1e6, n=400001):
  """Conversion by brute-force search on a very fine log grid."""
  a = 1.0 + np.logspace(np.log10(lo - 1.0), np.log10(hi - 1.0), n)
  return float(np.min(eps_fn(a) + math.log(1.0 / delta) / (a - 1.0)))


def _all_heavy(a, z, rounds, w):
  """Chance that ``rounds`` EM picks from ``a`` heavy and ``z`` empty bins
  are all heavy, when a heavy bin has weight ``w`` and an empty one 1."""
  if rounds > a:
    return 0.0
  p = 1.0
  for t in range(rounds):
    p *= (a - t) * w / ((a - t) * w + z)
  return p


def fixed_k_success(n_heavy, heavy, m, k, lam, rho, delta_t):
  """Chance that fixed-k selection returns only heavy bins.

  The histogram has ``n_heavy`` bins at ``heavy`` followed by ``m - n_heavy``
  empty bins. Computed from the Gumbel-max softmax law, the Gaussian tail
  and the exact peeling probabilities, without running the mechanism.
  """
  from scipy.stats import norm
  half = rho / 2.0
  b = 2.0 / (2.0 * math.sqrt(half))
  sigma = math.sqrt(1.0 / half)
  margin = sigma * math.sqrt(2.0 * math.log(1.0 / delta_t))
  j = np.arange(1, m)
  gaps = np.where(j == n_heavy, float(heavy), 0.0)
  logits = (gaps - lam * np.abs(j - k)) / b
  p_rank = np.exp(logits - logits.max())
  p_rank /= p_rank.sum()

  def w(rounds):
    eps_round = math.sqrt(4.0 * rho / rounds)
    return math.exp(eps_round * heavy / 2.0)

  total = 0.0
  p_bottom = 0.0
  for jj, pj in zip(j, p_rank):
    q = max(1.0, float(gaps[jj - 1]))
    p_pass = norm.sf((1.0 + margin - q) / sigma)
    p_bottom += pj * (1.0 - p_pass)
    if jj == k:
      win = 1.0 if k <= n_heavy else 0.0
    elif jj > k:
      a = min(jj, n_heavy)
      win = _all_heavy(a, jj - a, k, w(k))
    elif jj <= n_heavy:
      win = _all_heavy(n_heavy - jj, m - n_heavy, k - jj, w(k - jj))
    else:
      win = 0.0
    total += pj * p_pass * win
  total += p_bottom * _all_heavy(n_heavy, m - n_heavy, k, w(k))
  return total


@functools.lru_cache(maxsize=None)
def distance_table(m, k, max_count=5):
  """Table exact for every histogram with counts up to ``max_count`` and
  every distance up to ``m``."""
  return DistanceTable(m, k, max_count + m, m)


def exhaustive_suite(max_bins=6, max_count=5, ks=(1, 2)):
  """``(counts, k)`` pairs: all sorted histograms with 2..max_bins bins."""
  for m in range(2, max_bins + 1):
    for k in ks:
      if k <= m - 1:
        for c in sorted_histograms(m, max_count):
          yield c, k
