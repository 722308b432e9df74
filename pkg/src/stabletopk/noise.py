"""Seedable Laplace, Gaussian and Gumbel samplers.

Every mechanism draws its noise through an object exposing
``sample(kind, size=None)``. :class:`RngStream` is the production source;
:class:`ForcedNoise` replays preset values so deterministic examples can be
tested exactly.
"""

from __future__ import annotations

import dataclasses
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from stabletopk.exceptions import ParameterError

EULER_GAMMA = 0.5772156649015329

_TWO_53 = 2.0 ** 53


def _check_scale(value: float, name: str) -> None:
  if not (value > 0 and math.isfinite(value)):
    raise ParameterError(f"{name} must be positive and finite, got {value}")


@dataclasses.dataclass(frozen=True)
class Laplace:
  """Laplace noise with density proportional to ``exp(-|x| / scale)``."""

  scale: float

  def __post_init__(self):
    _check_scale(self.scale, "Laplace scale")

  def quantile(self, u):
    u = np.asarray(u, dtype=float)
    return -self.scale * np.sign(u - 0.5) * np.log1p(-2.0 * np.abs(u - 0.5))

  def cdf(self, x):
    z = np.asarray(x, dtype=float) / self.scale
    return np.where(z < 0, 0.5 * np.exp(z), 1.0 - 0.5 * np.exp(-np.abs(z)))

  @property
  def mean(self) -> float:
    return 0.0

  @property
  def variance(self) -> float:
    return 2.0 * self.scale ** 2


@dataclasses.dataclass(frozen=True)
class Gaussian:
  """Centred Gaussian noise with standard deviation ``sigma``."""

  sigma: float

  def __post_init__(self):
    _check_scale(self.sigma, "Gaussian sigma")

  def from_standard(self, z):
    """Scales standard normal draws ``z``."""
    return self.sigma * np.asarray(z, dtype=float)

  def cdf(self, x):
    z = np.asarray(x, dtype=float) / (self.sigma * math.sqrt(2.0))
    return 0.5 * (1.0 + np.vectorize(math.erf, otypes=[float])(z))

  @property
  def mean(self) -> float:
    return 0.0

  @property
  def variance(self) -> float:
    return self.sigma ** 2


@dataclasses.dataclass(frozen=True)
class Gumbel:
  """Standard-location Gumbel noise with the given scale."""

  scale: float

  def __post_init__(self):
    _check_scale(self.scale, "Gumbel scale")

  def quantile(self, u):
    return -self.scale * np.log(-np.log(np.asarray(u, dtype=float)))

  def cdf(self, x):
    return np.exp(-np.exp(-np.asarray(x, dtype=float) / self.scale))

  @property
  def mean(self) -> float:
    return self.scale * EULER_GAMMA

  @property
  def variance(self) -> float:
    return (self.scale * math.pi) ** 2 / 6.0


NoiseKind = Union[Laplace, Gaussian, Gumbel]


class RngStream:
  """Deterministic noise source backed by numpy's PCG64.

  Streams are identified by a master ``seed`` and a ``path`` of fork
  indices, so ``RngStream(s).fork(3)`` always yields the same draws no
  matter which thread or process creates it.

  Attributes:
    seed: Master seed.
    path: Fork indices leading from the master stream to this one.
    counter: Number of scalar values drawn so far.
    trace: List of ``(kind, values)`` pairs when recording, else ``None``.
  """

  def __init__(self, seed: int, path: Sequence[int] = (), record: bool = False):
    if seed < 0:
      raise ParameterError("seed must be non-negative")
    self.seed = int(seed)
    self.path: Tuple[int, ...] = tuple(int(p) for p in path)
    self.counter = 0
    self.trace: Optional[List] = [] if record else None
    ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
    self._gen = np.random.Generator(np.random.PCG64(ss))

  def fork(self, index: int, record: Optional[bool] = None) -> "RngStream":
    if record is None:
      record = self.trace is not None
    return RngStream(self.seed, self.path + (int(index),), record=record)

  def uniform(self, size=None):
    """Uniform draws on the open interval ``(0, 1)`` with 53-bit resolution."""
    n = self._gen.integers(0, 2 ** 53, size=size, dtype=np.int64)
    self.counter += 1 if size is None else int(np.prod(size))
    return (n + 0.5) / _TWO_53

  def sample(self, kind: NoiseKind, size=None):
    if isinstance(kind, Gaussian):
      out = kind.from_standard(self._gen.standard_normal(size=size))
      self.counter += 1 if size is None else int(np.prod(size))
    elif isinstance(kind, Laplace):
      # difference of two unit exponentials
      u1 = self.uniform(size)
      u2 = self.uniform(size)
      out = kind.scale * (np.log(u1) - np.log(u2))
    elif isinstance(kind, Gumbel):
      out = kind.quantile(self.uniform(size))
    else:
      raise ParameterError(f"unknown noise kind {kind!r}")
    if size is None:
      out = float(out)
    if self.trace is not None:
      self.trace.append((kind, np.copy(out)))
    return out

  def __repr__(self):
    return f"RngStream(seed={self.seed}, path={self.path}, counter={self.counter})"


class ForcedNoise:
  """Noise source that replays preset values, then zeros.

  Each call to :meth:`sample` consumes the next queued entry. Scalars
  fill requests of any shape. Once the queue is empty every draw is 0.
  """

  def __init__(self, values: Sequence = ()):
    self._queue = list(values)
    self.trace: List = []
    self.counter = 0

  def fork(self, index: int, record=None) -> "ForcedNoise":
    del index, record
    return self

  def sample(self, kind: NoiseKind, size=None):
    if self._queue:
      value = self._queue.pop(0)
    else:
      value = 0.0
    if size is None:
      out = float(np.asarray(value, dtype=float).reshape(-1)[0])
    else:
      out = np.broadcast_to(np.asarray(value, dtype=float), size).copy()
    self.counter += 1 if size is None else int(np.prod(size))
    self.trace.append((kind, np.copy(out)))
    return out


def sample(kind: NoiseKind, rng, size=None):
  """Draws noise of the given kind from ``rng``."""
  return rng.sample(kind, size)
