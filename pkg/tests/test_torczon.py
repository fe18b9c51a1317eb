import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covidfit.errors import InfeasibleStart, ZeroStep
from covidfit.torczon import (
    Box,
    MdsConfig,
    default_steps,
    initial_simplex,
    minimize,
    minimize_restarted,
    simplex_diameter,
    trace_csv,
)


def quadratic(x):
    return float(np.sum((x - 1.0) ** 2))


def rosenbrock(x):
    return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)


class Counting:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.fn(x)


def affine_rank(vertices):
    # independent Gaussian elimination with partial pivoting
    rows = [list(v - vertices[0]) for v in vertices[1:]]
    rank, ncol = 0, len(rows[0])
    for col in range(ncol):
        pivot = max(range(rank, len(rows)), key=lambda i: abs(rows[i][col]), default=None)
        if pivot is None or abs(rows[pivot][col]) < 1e-12:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank:
                factor = rows[i][col] / rows[rank][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def test_initial_simplex_small():
    np.testing.assert_array_equal(initial_simplex([0.0], [1.0]), [[0.0], [1.0]])
    np.testing.assert_array_equal(initial_simplex([1.0, 2.0], [0.5, 0.5]),
                                  [[1, 2], [1.5, 2], [1, 2.5]])


def test_initial_simplex_full_rank():
    rng = np.random.default_rng(28)
    x0 = rng.normal(size=28)
    s = initial_simplex(x0, default_steps(x0))
    assert s.shape == (29, 28)
    assert affine_rank(s) == 28


def test_zero_step():
    with pytest.raises(ZeroStep):
        initial_simplex([1.0, 2.0], [0.1, 0.0])


def test_default_steps():
    np.testing.assert_allclose(default_steps([2.0, 0.0, -0.5]), [0.2, 0.01, 0.05])


def test_config_validation():
    with pytest.raises(ValueError):
        MdsConfig(contraction=1.2)
    with pytest.raises(ValueError):
        MdsConfig(expansion=0.9)
    assert MdsConfig.from_dict(MdsConfig(max_evals=77).to_dict()) == MdsConfig(max_evals=77)


def test_box_requires_lower_below_upper():
    with pytest.raises(ValueError):
        Box(np.array([0.0, 1.0]), np.array([1.0, 1.0]))


def test_convex_quadratic():
    res = minimize(quadratic, np.zeros(2), cfg=MdsConfig(max_evals=20000))
    assert np.max(np.abs(res.x_best - 1)) < 1e-4
    assert res.cost_best < 1e-6
    assert res.stop_reason == "size_tol"


def test_constant_objective_contracts_only():
    res = minimize(lambda x: 7.0, np.array([0.3, -2.0]), cfg=MdsConfig(max_evals=100000))
    assert res.stop_reason == "size_tol"
    assert res.cost_best == 7.0
    np.testing.assert_array_equal(res.x_best, [0.3, -2.0])
    # pure contraction halves the diameter each iteration
    d = [r.simplex_diameter for r in res.trace]
    np.testing.assert_allclose(np.array(d[1:]) / np.array(d[:-1]), 0.5)


def test_rosenbrock_regression_bound():
    res = minimize(rosenbrock, np.array([-1.2, 1.0]), cfg=MdsConfig(max_evals=20000))
    assert res.evals <= 20000
    assert res.cost_best < 1e-3


def test_eval_accounting():
    fn = Counting(rosenbrock)
    res = minimize(fn, np.array([-1.2, 1.0]), cfg=MdsConfig(max_evals=3001))
    assert res.evals == fn.calls <= 3001
    assert res.stop_reason == "max_evals"


def test_eval_accounting_with_box():
    fn = Counting(quadratic)
    box = Box(np.array([-1.0, -1.0]), np.array([0.5, 0.5]))
    res = minimize(fn, np.zeros(2), box, MdsConfig(max_evals=5000))
    assert res.evals == fn.calls
    assert box.contains(res.x_best)
    np.testing.assert_allclose(res.x_best, [0.5, 0.5], atol=1e-6)


def test_cost_best_is_objective_of_x_best():
    res = minimize(rosenbrock, np.array([-1.2, 1.0]), cfg=MdsConfig(max_evals=5000))
    assert res.cost_best == rosenbrock(res.x_best)


@given(x0=st.lists(st.floats(-3, 3), min_size=1, max_size=5),
       centre=st.floats(-2, 2), budget=st.integers(10, 600))
@settings(max_examples=60, deadline=None)
def test_best_cost_monotone_and_feasible(x0, centre, budget):
    x0 = np.array(x0)
    n = x0.size
    box = Box(np.full(n, -3.0), np.full(n, 3.0))

    def f(x):
        return float(np.sum(np.abs(x - centre) ** 1.5) + np.sin(3 * x).sum())

    if budget < n + 1:
        with pytest.raises(InfeasibleStart):
            minimize(f, x0, box, MdsConfig(max_evals=budget))
        return
    res = minimize(f, x0, box, MdsConfig(max_evals=budget))
    costs = [r.best_cost for r in res.trace]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert box.contains(res.x_best)
    assert res.evals <= budget


def test_monotone_on_every_named_problem():
    for fn, x0 in [(quadratic, np.zeros(2)), (rosenbrock, np.array([-1.2, 1.0])),
                   (lambda x: 7.0, np.ones(3))]:
        res = minimize(fn, x0, cfg=MdsConfig(max_evals=20000))
        costs = [r.best_cost for r in res.trace]
        assert all(b <= a for a, b in zip(costs, costs[1:]))


def test_deterministic():
    a = minimize(rosenbrock, np.array([-1.2, 1.0]), cfg=MdsConfig(max_evals=4000))
    b = minimize(rosenbrock, np.array([-1.2, 1.0]), cfg=MdsConfig(max_evals=4000))
    np.testing.assert_array_equal(a.x_best, b.x_best)
    assert a.trace == b.trace


def test_threaded_and_vectorized_match_sequential():
    cfg = MdsConfig(max_evals=4000)
    seq = minimize(rosenbrock, np.array([-1.2, 1.0]), cfg=cfg)
    thr = minimize(rosenbrock, np.array([-1.2, 1.0]),
                   cfg=MdsConfig(max_evals=4000, workers=4))
    vec = minimize(lambda X: np.array([rosenbrock(x) for x in X]), np.array([-1.2, 1.0]),
                   cfg=cfg, vectorized=True)
    for other in (thr, vec):
        np.testing.assert_array_equal(seq.x_best, other.x_best)
        assert seq.trace == other.trace


def test_infeasible_start():
    box = Box(np.array([0.0]), np.array([1.0]))
    with pytest.raises(InfeasibleStart):
        minimize(quadratic, np.array([2.0]), box)
    with pytest.raises(InfeasibleStart):
        minimize(lambda x: math.inf, np.array([0.5]), box)


def test_nan_is_treated_as_barrier():
    res = minimize(lambda x: float("nan") if x[0] < 0 else (x[0] - 1) ** 2, np.array([0.5]),
                   cfg=MdsConfig(max_evals=2000))
    assert res.x_best[0] == pytest.approx(1.0, abs=1e-6)


def test_tie_keeps_lowest_index():
    # all vertices cost the same, so the initial vertex stays best
    res = minimize(lambda x: 1.0, np.array([5.0, 5.0]), cfg=MdsConfig(max_evals=50))
    np.testing.assert_array_equal(res.x_best, [5.0, 5.0])


def test_diameter():
    assert simplex_diameter(np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])) == 5.0


def test_restarted_respects_budget_and_improves():
    fn = Counting(rosenbrock)
    res = minimize_restarted(fn, np.array([-1.2, 1.0]), cfg=MdsConfig(max_evals=6000))
    assert res.evals == fn.calls <= 6000
    assert res.cost_best < rosenbrock(np.array([-1.2, 1.0]))
    costs = [r.best_cost for r in res.trace]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    quad = minimize_restarted(quadratic, np.zeros(3), cfg=MdsConfig(max_evals=20000))
    assert quad.cost_best < 1e-10


def test_trace_csv():
    res = minimize(quadratic, np.zeros(2), cfg=MdsConfig(max_evals=50))
    lines = trace_csv(res.trace).splitlines()
    assert lines[0] == "iteration,best_cost,simplex_diameter,evals"
    assert len(lines) == len(res.trace) + 1
