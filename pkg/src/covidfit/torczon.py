"""Torczon multidirectional search for box-constrained, derivative-free problems.

At each iteration every non-best vertex is reflected through the best one.
If a reflected vertex beats the best, an expanded simplex is also tried and
the better of the two is kept; otherwise the simplex is contracted towards
the best vertex.  The simplex only ever changes scale and orientation, so
its diameter shrinks geometrically under repeated contraction.

Box constraints are a +inf barrier: points outside the box are never passed
to the objective and never become the best vertex.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleStart, ZeroStep

log = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-d vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError("box requires lower < upper in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unbounded(cls, n: int) -> Box:
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class MdsConfig:
    expansion: float = 2.0
    contraction: float = 0.5
    size_tol: float = 1e-8
    max_evals: int = 100_000
    initial_steps: tuple[float, ...] | None = None
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.contraction < 1 < self.expansion:
            raise ValueError("need 0 < contraction < 1 < expansion")
        if not self.size_tol > 0:
            raise ValueError("size_tol must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def to_dict(self) -> dict:
        return {
            "expansion": self.expansion,
            "contraction": self.contraction,
            "size_tol": self.size_tol,
            "max_evals": self.max_evals,
            "initial_steps": None if self.initial_steps is None else list(self.initial_steps),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> MdsConfig:
        steps = doc.get("initial_steps")
        return cls(
            expansion=float(doc.get("expansion", 2.0)),
            contraction=float(doc.get("contraction", 0.5)),
            size_tol=float(doc.get("size_tol", 1e-8)),
            max_evals=int(doc.get("max_evals", 100_000)),
            initial_steps=None if steps is None else tuple(float(s) for s in steps),
            workers=int(doc.get("workers", 1)),
        )


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    best_cost: float
    simplex_diameter: float
    evals: int


@dataclass
class MdsResult:
    x_best: np.ndarray
    cost_best: float
    evals: int
    stop_reason: str
    iterations: int = 0
    trace: list[TraceRow] = field(default_factory=list)


def default_steps(x0: np.ndarray) -> np.ndarray:
    """10% of each coordinate, or 0.01 where the coordinate is zero."""
    x0 = np.asarray(x0, dtype=float)
    return np.where(x0 != 0, 0.1 * np.abs(x0), 0.01)


def initial_simplex(x0, steps) -> np.ndarray:
    """Right-angled simplex: row 0 is ``x0``, row j is ``x0 + steps[j-1] e_j``."""
    x0 = np.asarray(x0, dtype=float)
    steps = np.asarray(steps, dtype=float)
    if steps.shape != x0.shape:
        raise ValueError("steps must match x0")
    if not np.all(steps > 0):
        raise ZeroStep("all initial simplex steps must be positive")
    return np.vstack([x0, x0 + np.diag(steps)])


def simplex_diameter(vertices: np.ndarray) -> float:
    diff = vertices[:, None, :] - vertices[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


class _Budget(Exception):
    pass


def minimize(objective: Objective, x0, box: Box | None = None,
             cfg: MdsConfig = MdsConfig(),
             callback: Callable[[TraceRow], None] | None = None,
             vectorized: bool = False) -> MdsResult:
    """Minimize ``objective`` by multidirectional search.

    Stops when the simplex diameter falls below ``cfg.size_tol`` times its
    initial value, or when the next batch of evaluations would exceed
    ``cfg.max_evals``; an unfinished iteration is discarded.  ``evals``
    counts evaluated points; points outside ``box`` are not evaluated.

    With ``vectorized=True`` the objective receives an ``(m, n)`` array of
    points and returns ``m`` costs; each point still counts as one
    evaluation.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    box = box or Box.unbounded(n)
    steps = default_steps(x0) if cfg.initial_steps is None else np.asarray(cfg.initial_steps, float)
    simplex = initial_simplex(x0, steps)

    evals = 0
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None

    def cost(x: np.ndarray) -> float:
        if not box.contains(x):
            return math.inf
        value = float(objective(x))
        return value if not math.isnan(value) else math.inf

    def evaluate(points: np.ndarray) -> np.ndarray:
        nonlocal evals
        inside = np.all((points >= box.lower) & (points <= box.upper), axis=1)
        count = int(inside.sum())
        if evals + count > cfg.max_evals:
            raise _Budget
        evals += count
        if vectorized:
            out = np.full(len(points), math.inf)
            if count:
                values = np.asarray(objective(points[inside]), dtype=float)
                out[inside] = np.where(np.isnan(values), math.inf, values)
            return out
        if pool is not None:
            return np.array(list(pool.map(cost, points)))
        return np.array([cost(p) for p in points])

    try:
        if not box.contains(x0):
            raise InfeasibleStart("x0 lies outside the box")
        f0 = evaluate(x0[None, :])[0]
        if not math.isfinite(f0):
            raise InfeasibleStart(f"objective(x0) = {f0}")
        costs = np.concatenate([[f0], evaluate(simplex[1:])])
        simplex, costs = _best_first(simplex, costs)

        d0 = simplex_diameter(simplex)
        trace = [TraceRow(0, float(costs[0]), d0, evals)]
        if callback:
            callback(trace[-1])
        stop = "size_tol"
        iteration = 0
        while simplex_diameter(simplex) >= cfg.size_tol * d0:
            iteration += 1
            best = simplex[0]
            try:
                reflected = 2.0 * best - simplex[1:]
                r_costs = evaluate(reflected)
                if r_costs.min() < costs[0]:
                    expanded = best + cfg.expansion * (best - simplex[1:])
                    e_costs = evaluate(expanded)
                    if e_costs.min() < r_costs.min():
                        new, new_costs = expanded, e_costs
                    else:
                        new, new_costs = reflected, r_costs
                else:
                    new = best + cfg.contraction * (simplex[1:] - best)
                    new_costs = evaluate(new)
            except _Budget:
                stop = "max_evals"
                break
            simplex, costs = _best_first(np.vstack([best, new]),
                                         np.concatenate([[costs[0]], new_costs]))
            trace.append(TraceRow(iteration, float(costs[0]), simplex_diameter(simplex), evals))
            if callback:
                callback(trace[-1])
            if evals >= cfg.max_evals:
                stop = "max_evals"
                break
    except _Budget:
        raise InfeasibleStart("max_evals too small to evaluate the initial simplex") from None
    finally:
        if pool is not None:
            pool.shutdown()

    log.debug("mds stop=%s iterations=%d evals=%d cost=%g (cfg=%s)",
              stop, iteration, evals, costs[0], cfg.to_dict())
    return MdsResult(simplex[0].copy(), float(costs[0]), evals, stop, iteration, trace)


def minimize_restarted(objective: Objective, x0, box: Box | None = None,
                       cfg: MdsConfig = MdsConfig(), cycle_tol: float = 1e-3,
                       vectorized: bool = False, min_gain: float = 1e-12) -> MdsResult:
    """Repeat :func:`minimize` from the best point with a fresh simplex.

    Each cycle stops at ``cycle_tol`` relative simplex size; cycles continue
    while they lower the cost by more than ``min_gain`` (relative) and the
    shared ``cfg.max_evals`` budget allows.  Fresh simplices restore the
    step lengths lost to contraction, which helps on ill-conditioned
    valleys.  Fully deterministic.
    """
    x = np.asarray(x0, dtype=float)
    n = x.size
    evals = 0
    trace: list[TraceRow] = []
    iterations = 0
    result = None
    stop = "size_tol"
    while True:
        budget = cfg.max_evals - evals
        if budget < 2 * n + 1:
            stop = "max_evals"
            break
        cycle_cfg = MdsConfig(cfg.expansion, cfg.contraction, cycle_tol, budget,
                              cfg.initial_steps if result is None else None, cfg.workers)
        cycle = minimize(objective, x, box, cycle_cfg, vectorized=vectorized)
        trace += [TraceRow(iterations + r.iteration, r.best_cost, r.simplex_diameter, evals + r.evals)
                  for r in cycle.trace]
        evals += cycle.evals
        iterations += cycle.iterations
        gain = math.inf if result is None else result.cost_best - cycle.cost_best
        result = cycle
        x = cycle.x_best
        if cycle.stop_reason == "max_evals":
            stop = "max_evals"
            break
        if gain <= min_gain * abs(cycle.cost_best):
            break
    assert result is not None
    return MdsResult(result.x_best, result.cost_best, evals, stop, iterations, trace)


def _best_first(simplex: np.ndarray, costs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # argmin returns the lowest index among ties, so the current best is kept
    j = int(np.argmin(costs))
    if j == 0:
        return simplex, costs
    order = [j] + [i for i in range(len(costs)) if i != j]
    return simplex[order], costs[order]


def trace_csv(rows: Sequence[TraceRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "best_cost", "simplex_diameter", "evals"])
    for r in rows:
        writer.writerow([r.iteration, repr(r.best_cost), repr(r.simplex_diameter), r.evals])
    return buf.getvalue()
