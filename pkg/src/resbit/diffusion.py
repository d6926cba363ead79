"""Forward process and posterior of multinomial diffusion.

Closed forms for the one-step kernel ``q(x_t | x_{t-1})``, the marginal
``q(x_t | x_0)`` and the posterior ``q(x_{t-1} | x_t, x_0)``, plus a
vectorised sampler for Monte Carlo checks.  :func:`collapse_curve` shows the
posterior degenerating to ``Cat(x_0)`` as the class count grows.

Time steps are 1-based: ``beta[t - 1]`` is the noise level of step ``t`` and
``alpha_bar(0) == 1``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DomainError, ScheduleError, ShapeError

DEFAULT_T = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True)
class DiffusionSchedule:
    """Strictly increasing noise levels ``beta_1 < ... < beta_T`` in (0, 1)."""

    beta: tuple

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        object.__setattr__(self, "beta", beta)
        if not beta:
            raise ScheduleError("schedule needs at least one step")
        if any(not 0.0 < b < 1.0 for b in beta):
            raise ScheduleError("every beta must lie strictly between 0 and 1")
        if any(b1 >= b2 for b1, b2 in zip(beta, beta[1:])):
            raise ScheduleError("beta must be strictly increasing")

    @classmethod
    def linear(cls, T: int = DEFAULT_T, beta_start: float = DEFAULT_BETA_START,
               beta_end: float = DEFAULT_BETA_END) -> "DiffusionSchedule":
        if T < 1:
            raise ScheduleError(f"T must be >= 1, got {T}")
        if T == 1:
            return cls((beta_start,))
        return cls(tuple(np.linspace(beta_start, beta_end, T)))

    @property
    def T(self) -> int:
        return len(self.beta)

    @property
    def alpha(self) -> np.ndarray:
        return 1.0 - np.asarray(self.beta)

    @property
    def alpha_bars(self) -> np.ndarray:
        """``alpha_bar_t`` for ``t = 1 .. T``."""
        return np.cumprod(self.alpha)

    def beta_at(self, t: int) -> float:
        self._check_step(t)
        return self.beta[t - 1]

    def alpha_at(self, t: int) -> float:
        return 1.0 - self.beta_at(t)

    def alpha_bar(self, t: int) -> float:
        if t == 0:
            return 1.0
        self._check_step(t)
        return float(np.prod(self.alpha[:t]))

    def _check_step(self, t: int) -> None:
        if not 1 <= t <= self.T:
            raise DomainError(f"time step {t} outside [1, {self.T}]")


def one_hot(index: int, K: int) -> np.ndarray:
    if not 0 <= index < K:
        raise DomainError(f"class {index} outside [0, {K})")
    x = np.zeros(K)
    x[index] = 1.0
    return x


def _as_one_hot(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ShapeError(f"{name} must be a non-empty vector")
    if not (np.all((x == 0.0) | (x == 1.0)) and x.sum() == 1.0):
        raise ShapeError(f"{name} is not a one-hot vector")
    return x


def forward_step_dist(x_prev, t: int, schedule: DiffusionSchedule) -> np.ndarray:
    """``q(x_t | x_{t-1}) = Cat((1 - beta_t) x_{t-1} + beta_t / K)``."""
    x_prev = _as_one_hot(x_prev, "x_prev")
    beta = schedule.beta_at(t)
    return (1.0 - beta) * x_prev + beta / x_prev.size


def marginal_dist(x0, t: int, schedule: DiffusionSchedule) -> np.ndarray:
    """``q(x_t | x_0) = Cat(alpha_bar_t x_0 + (1 - alpha_bar_t) / K)``."""
    x0 = _as_one_hot(x0, "x0")
    ab = schedule.alpha_bar(t)
    return ab * x0 + (1.0 - ab) / x0.size


def posterior_dist(x_t, x0, t: int, schedule: DiffusionSchedule) -> np.ndarray:
    """``q(x_{t-1} | x_t, x_0)`` for ``2 <= t <= T``."""
    x_t = _as_one_hot(x_t, "x_t")
    x0 = _as_one_hot(x0, "x0")
    if x_t.size != x0.size:
        raise ShapeError("x_t and x0 must have the same number of classes")
    if t < 2:
        raise DomainError(f"posterior needs t >= 2, got {t}")
    K = x0.size
    a = schedule.alpha_at(t)
    ab_prev = schedule.alpha_bar(t - 1)
    pi = (a * x_t + (1.0 - a) / K) * (ab_prev * x0 + (1.0 - ab_prev) / K)
    total = pi.sum()
    assert total > 0.0, "posterior normaliser vanished"
    return pi / total


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def _pad(x: np.ndarray, K: int) -> np.ndarray:
    hot = int(np.argmax(x))
    return one_hot(hot, K)


def collapse_curve(K_list: Iterable[int], t: int, schedule: DiffusionSchedule,
                   x0, x_t) -> list[tuple[int, float]]:
    """TV distance between the posterior and ``Cat(x_0)`` for each class count.

    ``x0`` and ``x_t`` are padded with zero classes so their hot indices stay
    put while ``K`` grows.
    """
    x0 = _as_one_hot(x0, "x0")
    x_t = _as_one_hot(x_t, "x_t")
    need = max(int(np.argmax(x0)), int(np.argmax(x_t))) + 1
    curve = []
    for K in K_list:
        K = int(K)
        if K < need:
            raise DomainError(f"K={K} cannot hold the hot indices of x0 and x_t")
        if K == 1:
            curve.append((1, 0.0))
            continue
        x0_k = _pad(x0, K)
        post = posterior_dist(_pad(x_t, K), x0_k, t, schedule)
        curve.append((K, total_variation(post, x0_k)))
    return curve


def collapse_csv(curve: Sequence[tuple[int, float]], t: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["K", "t", "tv_distance"])
    for K, tv in curve:
        writer.writerow([K, t, repr(float(tv))])
    return buf.getvalue()


def sample_states(x0_index: int, K: int, schedule: DiffusionSchedule, n: int,
                  seed, t_max: int | None = None) -> np.ndarray:
    """Simulate ``n`` forward chains as class indices.

    Returns an ``(n, t_max + 1)`` int array whose column ``t`` holds ``x_t``
    (column 0 is ``x_0``).  Each step keeps the state with probability
    ``1 - beta_t`` and otherwise redraws it uniformly over all ``K`` classes.
    """
    if not 0 <= x0_index < K:
        raise DomainError(f"class {x0_index} outside [0, {K})")
    t_max = schedule.T if t_max is None else t_max
    if not 0 <= t_max <= schedule.T:
        raise DomainError(f"t_max {t_max} outside [0, {schedule.T}]")
    rng = np.random.default_rng(seed)
    states = np.empty((n, t_max + 1), dtype=np.int64)
    states[:, 0] = x0_index
    for t in range(1, t_max + 1):
        resample = rng.random(n) < schedule.beta[t - 1]
        fresh = rng.integers(0, K, size=n)
        states[:, t] = np.where(resample, fresh, states[:, t - 1])
    return states


def sample_trajectory(x0, schedule: DiffusionSchedule, rng_seed) -> list[np.ndarray]:
    """One realised chain ``x_1 .. x_T`` as one-hot vectors."""
    x0 = _as_one_hot(x0, "x0")
    K = x0.size
    states = sample_states(int(np.argmax(x0)), K, schedule, 1, rng_seed)[0, 1:]
    return [one_hot(int(s), K) for s in states]
