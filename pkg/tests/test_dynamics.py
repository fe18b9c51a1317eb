import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covidfit.dynamics import (
    GlobalParams,
    RegionInit,
    delta_closed_form,
    delta_sequence,
    peak_step,
    simulate,
    simulate_many,
    span_trajectory,
)
from covidfit.errors import NonFinite
from covidfit.synthetic import PUBLISHED_INITS, PUBLISHED_PARAMS


def test_published_values():
    assert PUBLISHED_PARAMS == GlobalParams(-7.1139e-2, -6.2489e-3)
    assert PUBLISHED_INITS[84] == RegionInit(7.0714, 0.3221)
    assert len(PUBLISHED_INITS) == 13


def test_fixed_point():
    traj = simulate(GlobalParams(-0.3, 0.0), RegionInit(1.0, 0.0), 10)
    np.testing.assert_array_equal(traj.f, np.ones(11))
    np.testing.assert_array_equal(traj.delta, np.zeros(11))


def test_hand_arithmetic():
    traj = simulate(GlobalParams(0.0, -0.01), RegionInit(1.0, 0.02), 3)
    np.testing.assert_allclose(traj.delta, [0.02, 0.01, 0.0, -0.01], atol=1e-15)
    assert traj.f[3] == pytest.approx(1.02 * 1.01 * 1.00, rel=1e-15)


def test_recursions_hold_exactly():
    p, init = PUBLISHED_PARAMS, PUBLISHED_INITS[11]
    traj = simulate(p, init, 42)
    assert len(traj.f) == len(traj.delta) == 43
    for k in range(42):
        assert traj.f[k + 1] == (1 + traj.delta[k]) * traj.f[k]
        assert traj.delta[k + 1] == (1 + p.a) * traj.delta[k] + p.u


def test_invalid_parameters():
    with pytest.raises(ValueError):
        GlobalParams(-1.0, 0.0)
    with pytest.raises(ValueError):
        RegionInit(0.0, 0.1)
    with pytest.raises(ValueError):
        simulate(PUBLISHED_PARAMS, PUBLISHED_INITS[84], 0)


def test_overflow_is_typed():
    with pytest.raises(NonFinite):
        simulate(GlobalParams(0.9, 0.5), RegionInit(1.0, 1.0), 2000)


def test_closed_form_small_cases():
    assert delta_closed_form(GlobalParams(0.3, 0.2), 0.7, 0) == 0.7
    assert delta_closed_form(GlobalParams(0.0, 0.5), 1.0, 4) == 3.0


@given(a=st.floats(-0.5, 0.5).filter(lambda a: abs(a) > 1e-6), u=st.floats(-0.1, 0.1),
       d0=st.floats(-1, 1))
@settings(max_examples=200, deadline=None)
def test_closed_form_matches_recursion(a, u, d0):
    p = GlobalParams(a, u)
    delta = delta_sequence(p, d0, 200)
    for k in (0, 1, 7, 50, 200):
        # error is relative to the two terms of the closed form, which cancel
        # when delta passes close to zero
        g = (1 + a) ** k
        scale = abs(g * d0) + abs(u * (g - 1) / a)
        assert abs(delta_closed_form(p, d0, k) - delta[k]) <= 1e-12 * scale + 1e-300


def test_simulate_uses_the_delta_recursion():
    p, init = PUBLISHED_PARAMS, PUBLISHED_INITS[93]
    np.testing.assert_array_equal(simulate(p, init, 80).delta, delta_sequence(p, init.delta0, 80))


def test_closed_form_small_a_is_accurate():
    # (1+a)**k - 1 loses digits for tiny a unless formed with expm1
    p = GlobalParams(1e-9, -0.01)
    assert delta_closed_form(p, 0.5, 100) == pytest.approx(0.5 * (1 + 1e-9) ** 100 - 1.0000000495, rel=1e-12)


def test_positivity_when_delta_above_minus_one():
    traj = simulate(GlobalParams(-0.05, -0.01), RegionInit(3.0, 0.4), 100)
    assert traj.delta.min() > -1
    assert np.all(traj.f > 0)


def test_linear_in_f0():
    p = PUBLISHED_PARAMS
    base = simulate(p, RegionInit(2.0, 0.3), 60).f
    for c in (0.5, 3.0, 10.0):
        scaled = simulate(p, RegionInit(2.0 * c, 0.3), 60).f
        np.testing.assert_allclose(scaled, c * base, rtol=1e-14)


def test_delta_converges_monotonically():
    p = PUBLISHED_PARAMS
    delta = simulate(p, PUBLISHED_INITS[84], 300).delta
    assert np.all(np.diff(delta) < 0)
    assert delta[-1] == pytest.approx(p.delta_limit, rel=1e-6)


def test_peak_step_trivial_cases():
    assert peak_step(GlobalParams(-0.1, 0.0), RegionInit(1.0, -0.1), 50) == 0
    assert peak_step(GlobalParams(-0.1, 0.0), RegionInit(1.0, 0.3), 500) is None


def crossing_index(p, d0):
    star = -p.u / p.a
    return math.log(-star / (d0 - star)) / math.log(1 + p.a)


def test_peak_step_region_84():
    # closed form crossing 20.87, so delta(21) is the first negative value
    kstar = crossing_index(PUBLISHED_PARAMS, 0.3221)
    assert 20 < kstar < 21
    assert peak_step(PUBLISHED_PARAMS, PUBLISHED_INITS[84], 100) == 21 == math.ceil(kstar)


def test_simulate_many_is_bit_identical():
    p = PUBLISHED_PARAMS
    regions = sorted(PUBLISHED_INITS)
    f0 = np.array([PUBLISHED_INITS[r].f0 for r in regions])
    d0 = np.array([PUBLISHED_INITS[r].delta0 for r in regions])
    many = simulate_many(p, f0, d0, 42)
    for i, r in enumerate(regions):
        np.testing.assert_array_equal(many[i], simulate(p, PUBLISHED_INITS[r], 42).f)


def test_span_trajectory_backwards_inverts_forward():
    import datetime as dt
    k0 = dt.date(2020, 3, 17)
    p, init = PUBLISHED_PARAMS, PUBLISHED_INITS[44]
    f, delta = span_trajectory(p, init, k0, dt.date(2020, 3, 7), dt.date(2020, 3, 27))
    assert f.at(k0) == init.f0 and delta.at(k0) == init.delta0
    # stepping forward from the earliest day lands back on the initial condition
    fwd = simulate(p, RegionInit(f.values[0], delta.values[0]), 20)
    np.testing.assert_allclose(fwd.f, f.values, rtol=1e-12)
    np.testing.assert_allclose(fwd.delta, delta.values, rtol=1e-12)
