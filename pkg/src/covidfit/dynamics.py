"""Discrete two-state model.

    f(k+1)     = (1 + delta(k)) * f(k)
    delta(k+1) = (1 + a) * delta(k) + u

``f`` is a daily-deaths signal and ``delta`` its growth rate.  The two
parameters (a, u) are shared by every region; each region carries its own
initial condition (f0, delta0).
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFinite
from .series import DailySeries


@dataclass(frozen=True)
class GlobalParams:
    a: float
    u: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.u)):
            raise ValueError("model parameters must be finite")
        if self.a <= -1:
            raise ValueError(f"a must exceed -1, got {self.a}")

    @property
    def delta_limit(self) -> float:
        """Fixed point -u/a of the delta recursion (``a != 0``)."""
        return -self.u / self.a


@dataclass(frozen=True)
class RegionInit:
    f0: float
    delta0: float

    def __post_init__(self):
        if not (math.isfinite(self.f0) and math.isfinite(self.delta0)):
            raise ValueError("initial conditions must be finite")
        if self.f0 <= 0:
            raise ValueError(f"f0 must be positive, got {self.f0}")


@dataclass(frozen=True)
class Trajectory:
    f: np.ndarray
    delta: np.ndarray
    k0_date: dt.date | None = None

    def __len__(self) -> int:
        return self.f.size

    def as_series(self, region: int) -> tuple[DailySeries, DailySeries]:
        start = self.k0_date or dt.date(2020, 3, 17)
        return (DailySeries(region, "fhat", start, self.f),
                DailySeries(region, "delta", start, self.delta))


def delta_sequence(params: GlobalParams, delta0: float, steps: int) -> np.ndarray:
    """The delta recursion alone, ``steps + 1`` values.

    Unlike ``f``, delta stays finite for any ``a > -1`` over moderate
    horizons, so it can be inspected even where ``f`` overflows.
    """
    delta = np.empty(steps + 1)
    delta[0] = delta0
    growth = 1.0 + params.a
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            delta[k + 1] = growth * delta[k] + params.u
    return delta


def simulate(params: GlobalParams, init: RegionInit, steps: int,
             k0_date: dt.date | None = None) -> Trajectory:
    """Run the recursion for ``steps`` steps (``steps + 1`` points)."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    delta = delta_sequence(params, init.delta0, steps)
    f = np.empty(steps + 1)
    f[0] = init.f0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            f[k + 1] = (1.0 + delta[k]) * f[k]
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(delta))):
        raise NonFinite(f"trajectory overflowed for {params}, {init}")
    return Trajectory(f, delta, k0_date)


def simulate_many(params: GlobalParams, f0: np.ndarray, delta0: np.ndarray, steps: int) -> np.ndarray:
    """Vectorized ``f`` trajectories for several regions, shape (regions, steps + 1).

    Uses the same floating point operations as :func:`simulate`, so each
    row is bit-identical to the scalar recursion.  Overflow is returned as
    inf/nan rather than raised.
    """
    f0 = np.asarray(f0, dtype=float)
    delta = np.asarray(delta0, dtype=float).copy()
    out = np.empty((f0.size, steps + 1))
    out[:, 0] = f0
    growth = 1.0 + params.a
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            out[:, k + 1] = (1.0 + delta) * out[:, k]
            delta = growth * delta + params.u
    return out


def span_trajectory(params: GlobalParams, init: RegionInit, k0_date: dt.date,
                    start: dt.date, end: dt.date, region: int = 0) -> tuple[DailySeries, DailySeries]:
    """Model ``f`` and ``delta`` on an arbitrary date span around the initial day.

    Days before ``k0_date`` come from running the recursion backwards
    (delta(k-1) = (delta(k) - u) / (1 + a), f(k-1) = f(k) / (1 + delta(k-1))).
    """
    before = max((k0_date - start).days, 0)
    after = max((end - k0_date).days, 0)
    traj = simulate(params, init, max(after, 1))
    f_back = np.empty(before)
    d_back = np.empty(before)
    f, d = init.f0, init.delta0
    for j in range(before):
        d = (d - params.u) / (1.0 + params.a)
        f = f / (1.0 + d)
        f_back[before - 1 - j] = f
        d_back[before - 1 - j] = d
    f_full = np.concatenate([f_back, traj.f[: after + 1]])
    d_full = np.concatenate([d_back, traj.delta[: after + 1]])
    if not (np.all(np.isfinite(f_full)) and np.all(np.isfinite(d_full))):
        raise NonFinite("backward extension overflowed")
    first = k0_date - dt.timedelta(days=before)
    return (DailySeries(region, "fhat", first, f_full).slice(start, end),
            DailySeries(region, "delta", first, d_full).slice(start, end))


def simulate_span(params: GlobalParams, init: RegionInit, k0_date: dt.date,
                  start: dt.date, end: dt.date, region: int = 0) -> DailySeries:
    """Model ``f`` only; see :func:`span_trajectory`."""
    return span_trajectory(params, init, k0_date, start, end, region)[0]


def delta_closed_form(params: GlobalParams, delta0: float, k: int) -> float:
    """``(1+a)**k * delta0 + u * ((1+a)**k - 1) / a``.

    ``(1+a)**k - 1`` is formed with ``expm1`` so small ``a`` does not lose
    digits to cancellation.
    """
    if params.a == 0:
        return delta0 + k * params.u
    log_growth = k * math.log1p(params.a)
    return math.exp(log_growth) * delta0 + params.u * (math.expm1(log_growth) / params.a)


def peak_step(params: GlobalParams, init: RegionInit, max_steps: int) -> int | None:
    """First step at which delta is negative, i.e. where ``f`` peaks.

    Returns ``None`` when delta stays non-negative for ``max_steps`` steps.
    """
    delta = init.delta0
    growth = 1.0 + params.a
    for k in range(max_steps + 1):
        if delta < 0:
            return k
        delta = growth * delta + params.u
    return None
