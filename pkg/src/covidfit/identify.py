"""Joint identification of (a, u) and per-region initial conditions.

The decision vector is ``x = (a, u, delta0_1..delta0_R, f0_1..f0_R)`` with
regions in increasing code order, so 28 variables for the 13 mainland
regions.  The cost is

    sum_i q_i * sum_{k=k0..kf} (fhat_i(k) - f_i(k))**2

where ``fhat_i`` follows the discrete model from (f0_i, delta0_i).
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .dynamics import GlobalParams, RegionInit, simulate
from .errors import DegenerateRegression, NonPositiveMax, NonPositiveValue, SpanMismatch
from .series import DailySeries
from .torczon import Box, MdsConfig, MdsResult, minimize, minimize_restarted

F_FLOOR = 0.5


@dataclass(frozen=True)
class FitWindow:
    k0_date: dt.date = dt.date(2020, 3, 17)
    kf_date: dt.date = dt.date(2020, 4, 28)

    def __post_init__(self):
        if self.kf_date <= self.k0_date:
            raise ValueError("fit window must end after it starts")

    @property
    def n_days(self) -> int:
        return (self.kf_date - self.k0_date).days + 1

    def as_tuple(self) -> tuple[dt.date, dt.date]:
        return self.k0_date, self.kf_date

    @classmethod
    def parse(cls, text: str) -> FitWindow:
        """Parse ``"2020-03-17:2020-04-28"``."""
        start, sep, end = text.partition(":")
        if not sep:
            raise ValueError(f"window must be <start>:<end>, got {text!r}")
        return cls(dt.date.fromisoformat(start), dt.date.fromisoformat(end))

    def __str__(self) -> str:
        return f"{self.k0_date.isoformat()}:{self.kf_date.isoformat()}"


@dataclass(frozen=True)
class VariableBox:
    """Bounds on the decision vector.

    f0 bounds are ``(f_floor, f0_factor * max(data))`` per region.
    """

    a: tuple[float, float] = (-0.99, 0.99)
    u: tuple[float, float] = (-1.0, 1.0)
    delta0: tuple[float, float] = (-0.99, 2.0)
    f_floor: float = F_FLOOR
    f0_factor: float = 10.0

    def bounds(self, data_max: np.ndarray) -> Box:
        r = data_max.size
        lower = np.concatenate([[self.a[0], self.u[0]], np.full(r, self.delta0[0]),
                                np.full(r, self.f_floor)])
        upper = np.concatenate([[self.a[1], self.u[1]], np.full(r, self.delta0[1]),
                                self.f0_factor * data_max])
        return Box(lower, upper)


@dataclass
class IdentifiedModel:
    params: GlobalParams
    inits: dict[int, RegionInit]
    window: FitWindow
    weights: dict[int, float]
    cost: float
    solver_evals: int
    warm_start_cost: float = math.nan
    stop_reason: str = ""
    solver: MdsConfig = field(default_factory=MdsConfig)

    @property
    def regions(self) -> list[int]:
        return sorted(self.inits)

    def recompute_cost(self, data: Mapping[int, DailySeries]) -> float:
        windowed = {r: data[r].slice(*self.window.as_tuple()) for r in self.regions}
        return objective(self.params, self.inits, windowed, self.weights)

    def trajectories(self) -> dict[int, tuple[DailySeries, DailySeries]]:
        """Fitted ``fhat`` and ``delta`` series on the window, per region."""
        steps = self.window.n_days - 1
        return {r: simulate(self.params, self.inits[r], steps, self.window.k0_date).as_series(r)
                for r in self.regions}

    def to_dict(self) -> dict:
        return {
            "a": self.params.a,
            "u": self.params.u,
            "window": {"k0": self.window.k0_date.isoformat(), "kf": self.window.kf_date.isoformat()},
            "regions": {
                str(r): {"delta0": self.inits[r].delta0, "f0": self.inits[r].f0, "q": self.weights[r]}
                for r in self.regions
            },
            "cost": self.cost,
            "warm_start_cost": self.warm_start_cost,
            "evals": self.solver_evals,
            "stop_reason": self.stop_reason,
            "solver": self.solver.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> IdentifiedModel:
        regions = {int(k): v for k, v in doc["regions"].items()}
        return cls(
            params=GlobalParams(float(doc["a"]), float(doc["u"])),
            inits={r: RegionInit(float(v["f0"]), float(v["delta0"])) for r, v in regions.items()},
            window=FitWindow(dt.date.fromisoformat(doc["window"]["k0"]),
                             dt.date.fromisoformat(doc["window"]["kf"])),
            weights={r: float(v["q"]) for r, v in regions.items()},
            cost=float(doc["cost"]),
            solver_evals=int(doc.get("evals", 0)),
            warm_start_cost=float(doc.get("warm_start_cost", math.nan)),
            stop_reason=doc.get("stop_reason", ""),
            solver=MdsConfig.from_dict(doc.get("solver", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> IdentifiedModel:
        return cls.from_dict(json.loads(text))


def empirical_delta(f: DailySeries) -> DailySeries:
    """Growth rate implied by consecutive values: ``f(k+1)/f(k) - 1``."""
    v = f.values
    bad = np.flatnonzero(v <= 0)
    if bad.size:
        raise NonPositiveValue(int(bad[0]), float(v[bad[0]]))
    return DailySeries(f.region, "delta", f.start_date, v[1:] / v[:-1] - 1.0)


def convex_warm_start(deltas: Mapping[int, DailySeries]) -> tuple[GlobalParams, dict[int, float]]:
    """Pooled regression ``delta(k+1) ~ p * delta(k) + u`` over all regions.

    Gives ``a = p - 1`` and ``u``; each region's delta0 is its first
    empirical delta.
    """
    xs, ys = [], []
    for region in sorted(deltas):
        d = deltas[region].values
        if d.size < 3:
            raise ValueError(f"region {region}: need at least 3 delta values, got {d.size}")
        xs.append(d[:-1])
        ys.append(d[1:])
    if not xs:
        raise ValueError("no regions given")
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 1e-24 * float(np.sum(x ** 2)):
        raise DegenerateRegression("empirical deltas are constant; slope is not identifiable")
    p = float(np.sum((x - xm) * (y - ym))) / sxx
    u = float(ym - p * xm)
    if p <= 0:
        raise DegenerateRegression(f"pooled slope {p:.4g} gives a <= -1")
    delta0 = {r: float(deltas[r].values[0]) for r in sorted(deltas)}
    return GlobalParams(p - 1.0, u), delta0


def default_weights(data: Mapping[int, DailySeries]) -> dict[int, float]:
    """``q_i = 1 / max(f_i)**2`` so that every region counts in relative terms."""
    weights = {}
    for region in sorted(data):
        peak = float(np.max(data[region].values))
        if not peak > 0:
            raise NonPositiveMax(region)
        weights[region] = 1.0 / peak ** 2
    return weights


def _stack(data: Mapping[int, DailySeries], regions: list[int]) -> np.ndarray:
    lengths = {len(data[r]) for r in regions}
    if len(lengths) != 1:
        raise SpanMismatch(f"regional series have different lengths: {sorted(lengths)}")
    return np.vstack([data[r].values for r in regions])


def batch_cost(x: np.ndarray, observed: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Cost of each row of ``x`` (shape ``(m, 2 + 2R)``) against ``observed``.

    Row-wise results do not depend on the batch composition, so a single
    point and a batch give bit-identical costs.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    nr, n = observed.shape
    growth = 1.0 + x[:, :1]
    u = x[:, 1:2]
    delta = x[:, 2:2 + nr].copy()
    fhat = np.empty((x.shape[0], nr, n))
    fhat[:, :, 0] = x[:, 2 + nr:]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n - 1):
            fhat[:, :, k + 1] = (1.0 + delta) * fhat[:, :, k]
            delta = growth * delta + u
        per_region = ((fhat - observed) ** 2).sum(axis=2)
        total = np.zeros(x.shape[0])
        for i in range(nr):  # fixed region order
            total += q[i] * per_region[:, i]
    return np.where(np.isfinite(total), total, np.inf)


def objective(params: GlobalParams, inits: Mapping[int, RegionInit],
              data: Mapping[int, DailySeries], weights: Mapping[int, float],
              box: VariableBox | None = None) -> float:
    """Weighted sum of squared residuals of the model against ``data``.

    ``data`` holds each region's target on the fitting window.  Returns
    ``inf`` on overflow or when ``box`` is given and violated.
    """
    regions = sorted(data)
    observed = _stack(data, regions)
    delta0 = np.array([inits[r].delta0 for r in regions])
    f0 = np.array([inits[r].f0 for r in regions])
    q = np.array([weights[r] for r in regions])
    if box is not None:
        x = np.concatenate([[params.a, params.u], delta0, f0])
        if not box.bounds(observed.max(axis=1)).contains(x):
            return math.inf
    return float(batch_cost(np.concatenate([[params.a, params.u], delta0, f0]), observed, q)[0])


def pack(params: GlobalParams, inits: Mapping[int, RegionInit], regions: list[int]) -> np.ndarray:
    return np.concatenate([[params.a, params.u], [inits[r].delta0 for r in regions],
                           [inits[r].f0 for r in regions]])


def unpack(x: np.ndarray, regions: list[int]) -> tuple[GlobalParams, dict[int, RegionInit]]:
    r = len(regions)
    params = GlobalParams(float(x[0]), float(x[1]))
    inits = {reg: RegionInit(float(x[2 + r + i]), float(x[2 + i])) for i, reg in enumerate(regions)}
    return params, inits


def warm_start(data: Mapping[int, DailySeries], f_floor: float = F_FLOOR
               ) -> tuple[GlobalParams, dict[int, RegionInit]]:
    """Convex warm start plus ``f0_i = max(f_i(k0), f_floor)``.

    Empirical deltas are taken on the data floored at ``f_floor`` so that
    days with zero counts do not break the ratio.
    """
    regions = sorted(data)
    deltas = {r: empirical_delta(data[r].with_values(np.maximum(data[r].values, f_floor)))
              for r in regions}
    params, delta0 = convex_warm_start(deltas)
    inits = {r: RegionInit(max(float(data[r].values[0]), f_floor), delta0[r]) for r in regions}
    return params, inits


def profiled_batch_cost(z: np.ndarray, observed: np.ndarray, q: np.ndarray,
                        f0_lower: np.ndarray, f0_upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cost over ``z = (a, u, delta0_1..delta0_R)`` with each f0 at its optimum.

    ``fhat_i`` is linear in ``f0_i``, so for fixed dynamics the best f0 is
    ``sum(g * f) / sum(g * g)`` with ``g`` the unit-f0 trajectory, clipped
    to its bounds.  Returns ``(costs, f0)``.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    nr, n = observed.shape
    growth = 1.0 + z[:, :1]
    u = z[:, 1:2]
    delta = z[:, 2:2 + nr].copy()
    g = np.empty((z.shape[0], nr, n))
    g[:, :, 0] = 1.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(n - 1):
            g[:, :, k + 1] = (1.0 + delta) * g[:, :, k]
            delta = growth * delta + u
        f0 = np.clip((g * observed).sum(axis=2) / (g * g).sum(axis=2), f0_lower, f0_upper)
        per_region = ((f0[:, :, None] * g - observed) ** 2).sum(axis=2)
        total = np.zeros(z.shape[0])
        for i in range(nr):
            total += q[i] * per_region[:, i]
    ok = np.isfinite(total) & np.all(np.isfinite(f0), axis=1)
    return np.where(ok, total, np.inf), f0


def identify(data: Mapping[int, DailySeries], window: FitWindow = FitWindow(),
             weights: Mapping[int, float] | None = None, cfg: MdsConfig = MdsConfig(),
             box: VariableBox = VariableBox(),
             start: tuple[GlobalParams, Mapping[int, RegionInit]] | None = None,
             profile: bool = True, cycle_tol: float = 1e-3) -> IdentifiedModel:
    """Fit the shared model to every region in ``data`` at once.

    From the warm start (or ``start``, clipped into the box) the search runs
    in two stages sharing ``cfg.max_evals``:

    1. ``profile=True`` only: restarted multidirectional search over
       (a, u, delta0) with every f0 set to its closed-form optimum, using at
       most half the budget;
    2. multidirectional search over the full joint vector with ``cfg``.

    With ``profile=False`` stage 2 runs alone from the warm start.
    """
    regions = sorted(data)
    nr = len(regions)
    windowed = {r: data[r].slice(window.k0_date, window.kf_date) for r in regions}
    for r in regions:
        if not windowed[r].values[0] > 0:
            raise NonPositiveValue(0, float(windowed[r].values[0]))
    if weights is None:
        weights = default_weights(windowed)
    missing = [r for r in regions if not weights.get(r, 0) > 0]
    if missing:
        raise ValueError(f"regions without a positive weight: {missing}")

    observed = _stack(windowed, regions)
    q = np.array([weights[r] for r in regions])
    bounds = box.bounds(observed.max(axis=1))
    params0, inits0 = start if start is not None else warm_start(windowed, box.f_floor)
    x0 = np.clip(pack(params0, inits0, regions), bounds.lower, bounds.upper)

    def packed_cost(x: np.ndarray) -> np.ndarray:
        return batch_cost(x, observed, q)

    warm_cost = float(packed_cost(x0)[0])
    evals = 0
    x_start = x0
    if profile:
        f0_lo, f0_hi = bounds.lower[2 + nr:], bounds.upper[2 + nr:]
        zbox = Box(bounds.lower[:2 + nr], bounds.upper[:2 + nr])

        def profiled(z: np.ndarray) -> np.ndarray:
            return profiled_batch_cost(z, observed, q, f0_lo, f0_hi)[0]

        stage1_cfg = MdsConfig(cfg.expansion, cfg.contraction, cfg.size_tol,
                               max(cfg.max_evals // 2, 1), None, cfg.workers)
        stage1 = minimize_restarted(profiled, x0[:2 + nr], zbox, stage1_cfg, cycle_tol,
                                    vectorized=True)
        evals += stage1.evals
        f0 = profiled_batch_cost(stage1.x_best, observed, q, f0_lo, f0_hi)[1][0]
        candidate = np.concatenate([stage1.x_best, f0])
        if packed_cost(candidate)[0] <= warm_cost:
            x_start = candidate

    stage2_cfg = MdsConfig(cfg.expansion, cfg.contraction, cfg.size_tol,
                           max(cfg.max_evals - evals, 2 * x0.size + 1),
                           cfg.initial_steps, cfg.workers)
    result: MdsResult = minimize(packed_cost, x_start, bounds, stage2_cfg, vectorized=True)
    params, inits = unpack(result.x_best, regions)
    return IdentifiedModel(
        params=params,
        inits=inits,
        window=window,
        weights={r: float(weights[r]) for r in regions},
        cost=result.cost_best,
        solver_evals=evals + result.evals,
        warm_start_cost=warm_cost,
        stop_reason=result.stop_reason,
        solver=cfg,
    )
