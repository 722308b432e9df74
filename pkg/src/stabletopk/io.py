"""CSV readers for vote lists and pre-aggregated histograms.

Vote files have the header ``user_id,item_id`` and one row per vote.
Histogram files have the header ``item_id,count``. Item ids are
non-negative integers; user ids are arbitrary strings.
"""

from __future__ import annotations

import csv
import os
from typing import Iterator, List, Optional, Tuple

import numpy as np

from stabletopk.exceptions import OutOfRangeError, ParseError
from stabletopk.histogram import Histogram, build_histogram

VOTE_HEADER = ["user_id", "item_id"]
HISTOGRAM_HEADER = ["item_id", "count"]


def _rows(path, header: List[str]) -> Iterator[Tuple[int, List[str]]]:
  with open(path, newline="", encoding="utf-8") as f:
    reader = csv.reader(f)
    first = next(reader, None)
    if first is None or [c.strip() for c in first] != header:
      raise ParseError(path, 1, f"expected header {','.join(header)}")
    for row in reader:
      if not row or all(not c.strip() for c in row):
        continue
      if len(row) != len(header):
        raise ParseError(path, reader.line_num,
                         f"expected {len(header)} fields, got {len(row)}")
      yield reader.line_num, [c.strip() for c in row]


def _nonneg_int(path, line: int, text: str, what: str) -> int:
  try:
    v = int(text)
  except ValueError:
    raise ParseError(path, line, f"{what} {text!r} is not an integer") from None
  if v < 0:
    raise ParseError(path, line, f"{what} {v} is negative")
  return v


def ingest_votes(path: "os.PathLike | str", m: Optional[int] = None) -> Histogram:
  """Reads a vote CSV; repeated ``(user, item)`` rows count once.

  Args:
    path: CSV file.
    m: Number of candidates. Defaults to one more than the largest item id
      seen (1 for a file with no votes).

  Raises:
    ParseError: a malformed row, reported with its line number.
    OutOfRangeError: an item id is ``>= m``.
  """
  votes = []
  for line, (user, item) in _rows(path, VOTE_HEADER):
    votes.append((user, _nonneg_int(path, line, item, "item_id")))
  if m is None:
    m = 1 + max((c for _, c in votes), default=0)
  return build_histogram(votes, m)


def ingest_histogram(path: "os.PathLike | str",
                     m: Optional[int] = None) -> Histogram:
  """Reads an ``item_id,count`` CSV. Missing items have count 0."""
  entries = {}
  for line, (item, count) in _rows(path, HISTOGRAM_HEADER):
    i = _nonneg_int(path, line, item, "item_id")
    if i in entries:
      raise ParseError(path, line, f"duplicate item_id {i}")
    entries[i] = _nonneg_int(path, line, count, "count")
  if m is None:
    m = 1 + max(entries, default=0)
  counts = np.zeros(m, dtype=np.int64)
  for i, c in entries.items():
    if i >= m:
      raise OutOfRangeError(f"item_id {i} outside [0, {m})")
    counts[i] = c
  return Histogram(counts)


def write_histogram(path: "os.PathLike | str", h: Histogram) -> None:
  with open(path, "w", newline="", encoding="utf-8") as f:
    w = csv.writer(f)
    w.writerow(HISTOGRAM_HEADER)
    for i, c in enumerate(h.counts.tolist()):
      w.writerow([i, c])
