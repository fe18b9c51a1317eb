"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line, printed at the end of the pytest
run (see ``conftest.py``) and also when this file is run as a script.
"""

import datetime as dt
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from covidfit.cli import main as cli_main
from covidfit.dynamics import GlobalParams, RegionInit, delta_closed_form, delta_sequence, peak_step, simulate
from covidfit.errors import NonFinite
from covidfit.identify import IdentifiedModel, default_weights, identify, objective
from covidfit.ingest import CanonicalRecord, read_canonical, write_canonical
from covidfit.lagfit import best_mu, fit_lag_scale
from covidfit.dynamics import simulate_span
from covidfit.series import INDICATORS, REGION_CODES, DailySeries
from covidfit.synthetic import PUBLISHED_INITS, PUBLISHED_LAGS, PUBLISHED_PARAMS, published_dataset, write_fixture_dataset
from covidfit.torczon import MdsConfig, minimize

RESULTS: list[str] = []
ACCEPTANCE_BUDGET = MdsConfig(max_evals=200_000)


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_noise_free_recovery():
    data = published_dataset()
    t0 = time.perf_counter()
    model = identify(data, cfg=ACCEPTANCE_BUDGET)
    seconds = time.perf_counter() - t0
    da = abs(model.params.a - PUBLISHED_PARAMS.a)
    du = abs(model.params.u - PUBLISHED_PARAMS.u)
    ratio = model.cost / model.warm_start_cost if model.warm_start_cost > 0 else 0.0
    checks = {"|da|<=5e-3": da <= 5e-3, "|du|<=5e-4": du <= 5e-4,
              "cost<=1e-6*warm": model.cost <= 1e-6 * model.warm_start_cost,
              "runtime<300s": seconds < 300}
    failed = [k for k, ok in checks.items() if not ok]
    record(1, "noise-free joint recovery", not failed,
           f"|da|={da:.2e} |du|={du:.2e} cost={model.cost:.3e} warm={model.warm_start_cost:.3e} "
           f"ratio={ratio:.3g} t={seconds:.1f}s" + (f"; failed: {', '.join(failed)}" if failed else ""))


def test_criterion_2_noisy_recovery():
    errors = []
    for seed in range(5):
        model = identify(published_dataset(noise=0.05, seed=seed), cfg=ACCEPTANCE_BUDGET)
        errors.append((abs(model.params.a / PUBLISHED_PARAMS.a - 1),
                       abs(model.params.u / PUBLISHED_PARAMS.u - 1)))
    worst_a = max(e[0] for e in errors)
    worst_u = max(e[1] for e in errors)
    record(2, "recovery under 5% noise, 5 seeds", worst_a <= 0.15 and worst_u <= 0.15,
           f"worst relative error a={worst_a:.3f} u={worst_u:.3f}, limit 0.15")


def test_criterion_3_closed_form_equivalence():
    rng = np.random.default_rng(3)
    worst = 0.0
    from_simulate = 0
    for _ in range(1000):
        a = 0.0
        while a == 0.0:
            a = rng.uniform(-0.5, 0.5)
        p = GlobalParams(a, rng.uniform(-0.1, 0.1))
        d0 = rng.uniform(-1, 1)
        try:
            delta = simulate(p, RegionInit(1.0, d0), 200).delta
            from_simulate += 1
        except NonFinite:
            # f overflows for growing delta; the delta recursion simulate uses is still finite
            delta = delta_sequence(p, d0, 200)
        closed = np.array([delta_closed_form(p, d0, k) for k in range(201)])
        worst = max(worst, float(np.max(np.abs(closed - delta) / np.abs(delta))))
    record(3, "closed form vs recursion, 1000 draws x 200 steps", worst <= 1e-10,
           f"max relative deviation {worst:.2e}; {from_simulate} draws via simulate, "
           f"{1000 - from_simulate} via its delta recursion after f overflow")


def test_criterion_4_peak_timing():
    p, init = PUBLISHED_PARAMS, PUBLISHED_INITS[84]
    star = -p.u / p.a
    crossing = math.log(-star / (init.delta0 - star)) / math.log(1 + p.a)
    expected = math.ceil(crossing)
    got = peak_step(p, init, 200)
    record(4, "peak step, region 84", got == expected == 21,
           f"peak_step={got}, closed-form crossing {crossing:.3f} -> {expected}")


def test_criterion_5_scaling_law():
    data = published_dataset(noise=0.05, seed=11)
    q = default_weights(data)
    inits = {r: RegionInit(i.f0 * 1.05, i.delta0 + 0.01) for r, i in PUBLISHED_INITS.items()}
    base = objective(PUBLISHED_PARAMS, inits, data, q)
    worst = 0.0
    for c in (0.5, 3.0, 10.0):
        scaled = objective(PUBLISHED_PARAMS, {r: RegionInit(c * i.f0, i.delta0) for r, i in inits.items()},
                           {r: s.scaled(c) for r, s in data.items()}, q)
        worst = max(worst, abs(scaled - c * c * base) / (c * c * base))
    linear = True
    for r, init in PUBLISHED_INITS.items():
        f = simulate(PUBLISHED_PARAMS, init, 42).f
        for c in (0.5, 3.0, 10.0):
            fc = simulate(PUBLISHED_PARAMS, RegionInit(c * init.f0, init.delta0), 42).f
            linear &= bool(np.allclose(fc, c * f, rtol=1e-13, atol=0))
    record(5, "nonidentifiability scaling law", worst <= 1e-9 and linear,
           f"max relative deviation {worst:.2e}, f linear in f0: {linear}")


def test_criterion_6_lag_scale_oracle():
    rng = np.random.default_rng(6)
    k0 = dt.date(2020, 3, 17)
    grid = np.arange(0, 10 + 1e-9, 1e-4)
    worst_mu = 0.0
    for _ in range(100):
        n = int(rng.integers(15, 60))
        f = DailySeries(84, "fhat", k0, rng.uniform(0.5, 5.0, n + 30))
        eta = int(rng.integers(-10, 16))
        H = DailySeries(84, "incid_hosp", k0 + dt.timedelta(15), rng.uniform(0, 10, n))
        mu, _, _ = best_mu(H, f, eta)
        days = [d for d in H.dates if f.start_date <= d - dt.timedelta(eta) <= f.end_date]
        h = np.array([H.at(d) for d in days])
        g = np.array([f.at(d - dt.timedelta(eta)) for d in days])
        scan = grid[np.argmin(((h[None, :] - grid[:, None] * g[None, :]) ** 2).sum(axis=1))]
        worst_mu = max(worst_mu, abs(mu - scan))

    signal = {r: simulate_span(PUBLISHED_PARAMS, PUBLISHED_INITS[r], k0, dt.date(2020, 2, 15),
                               dt.date(2020, 7, 15), r) for r in (11, 44, 84)}
    cases = [(11, "incid_dc", *PUBLISHED_LAGS[11]["incid_dc"]), (84, "x", 6, 0.8), (44, "x", -5, 1.3),
             (84, "x", 11, 0.4), (11, "x", -2, 0.5), (44, "x", 0, 2.0)]
    misses = []
    for region, ind, eta, mu in cases:
        start, n = dt.date(2020, 3, 10), 90
        days = [start + dt.timedelta(k) for k in range(n)]
        h = np.array([mu * signal[region].at(d - dt.timedelta(eta)) for d in days])
        h *= 1 + 0.02 * rng.standard_normal(n)
        fit = fit_lag_scale(DailySeries(region, "incid_hosp", start, h), signal[region])
        if fit.eta != eta or abs(fit.mu / mu - 1) > 0.05:
            misses.append((region, eta, mu, fit.eta, round(fit.mu, 4)))
    record(6, "lag/scale oracle and planted recovery",
           worst_mu <= 1e-4 and not misses,
           f"max |mu - grid mu|={worst_mu:.1e} over 100 instances; planted lags "
           f"{[c[2] for c in cases]} misses={misses}")


def test_criterion_7_optimizer_suite():
    traces = []

    def keep(res):
        traces.append([r.best_cost for r in res.trace])
        return res

    quad = keep(minimize(lambda x: float(np.sum((x - 1) ** 2)), np.zeros(2), cfg=MdsConfig(max_evals=20000)))
    rosen = keep(minimize(lambda x: float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2),
                          np.array([-1.2, 1.0]), cfg=MdsConfig(max_evals=20000)))
    keep(minimize(lambda x: 7.0, np.zeros(3), cfg=MdsConfig(max_evals=20000)))
    rng = np.random.default_rng(7)
    for _ in range(20):
        centre = rng.normal(size=4)
        keep(minimize(lambda x: float(np.sum(np.abs(x - centre)) + np.cos(x).sum()), rng.normal(size=4),
                      cfg=MdsConfig(max_evals=3000)))
    monotone = all(all(b <= a for a, b in zip(t, t[1:])) for t in traces)
    quad_err = float(np.max(np.abs(quad.x_best - 1)))
    ok = quad_err <= 1e-4 and monotone and rosen.cost_best < 1e-3 and rosen.evals <= 20000
    record(7, "optimizer suite", ok,
           f"quadratic |x-x*|={quad_err:.1e}, rosenbrock cost={rosen.cost_best:.2e} in {rosen.evals} evals, "
           f"monotone over {len(traces)} runs: {monotone}")


def test_criterion_8_real_data(tmp_path):
    config = os.environ.get("COVIDFIT_REAL_CONFIG")
    if not config or not Path(config).is_file():
        RESULTS.append("[SKIP] criterion 8: real-data reproduction (set COVIDFIT_REAL_CONFIG to a "
                       "pipeline config pointing at the downloaded source files; non-gating)")
        pytest.skip("real source files not available")
    out = tmp_path / "real"
    assert cli_main(["ingest", "--config", config, "--out", str(out)]) == 0
    assert cli_main(["report", "--config", config, "--out", str(out)]) == 0
    model = IdentifiedModel.from_json((out / "report" / "model.json").read_text())
    fits = {(f["region"], f["indicator"]): f
            for f in json.loads((out / "report" / "lagfit.json").read_text())["fits"]}
    bad = []
    for region, table in PUBLISHED_LAGS.items():
        for ind, (eta, mu) in table.items():
            fit = fits.get((region, ind))
            if fit is None or abs(fit["eta"] - eta) > 2 or abs(fit["mu"] / mu - 1) > 0.2:
                bad.append((region, ind))
    ea = abs(model.params.a / PUBLISHED_PARAMS.a - 1)
    eu = abs(model.params.u / PUBLISHED_PARAMS.u - 1)
    record(8, "real-data reproduction (non-gating)", ea <= 0.1 and eu <= 0.1 and not bad,
           f"a err {ea:.3f}, u err {eu:.3f}, lag/scale cells outside tolerance: {bad}")


def _pipeline(root: Path, raw: Path) -> dict[str, bytes]:
    root.mkdir(parents=True)
    cfg = root / "cfg.json"
    cfg.write_text(json.dumps({
        "data_dir": str(raw), "output_dir": str(root / "out"), "solver": {"max_evals": 50000},
        "sources": [{"file": "deaths.csv", "adapter": "insee_deaths"},
                    {"file": "hosp.csv", "adapter": "hosp_incidence"},
                    {"file": "inserm.csv", "adapter": "inserm_cert"},
                    {"file": "tests.csv", "adapter": "tests"},
                    {"file": "sos.csv", "adapter": "emergency_sos"}],
    }))
    for cmd in ("ingest", "prep", "identify", "validate", "report"):
        assert cli_main([cmd, "--config", str(cfg)]) == 0
    assert cli_main(["simulate", "--config", str(cfg), "--window", "2020-03-01:2020-06-30"]) == 0
    assert cli_main(["plot", "--config", str(cfg), "--series", "84:mean_excess20_corr",
                     "--series", "84:fhat", "--name", "fit84"]) == 0
    out = root / "out"
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


def test_criterion_9_round_trip_and_determinism(tmp_path):
    rng = np.random.default_rng(9)
    keys = set()
    while len(keys) < 1000:
        keys.add((int(rng.choice(REGION_CODES)), str(rng.choice(INDICATORS)),
                  dt.date(2018, 1, 1) + dt.timedelta(int(rng.integers(0, 1100)))))
    records = [CanonicalRecord(r, i, d, float(rng.exponential(100))) for r, i, d in keys]
    round_trip = read_canonical(write_canonical(records)) == sorted(records)

    raw = tmp_path / "raw"
    write_fixture_dataset(raw)
    first = _pipeline(tmp_path / "run1", raw)
    second = _pipeline(tmp_path / "run2", raw)
    identical = first == second
    record(9, "canonical round trip and end-to-end determinism", round_trip and identical,
           f"1000-record round trip: {round_trip}; {len(first)} pipeline files byte-identical: {identical}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
