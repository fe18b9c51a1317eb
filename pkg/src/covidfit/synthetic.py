"""Published reference values and synthetic datasets built from them.

The synthetic raw files follow the preset adapter layouts in
:mod:`covidfit.ingest`, so the whole command-line pipeline can run without
access to the upstream open-data portals.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

from .dynamics import GlobalParams, RegionInit, simulate, simulate_span
from .identify import FitWindow
from .series import REGION_CODES, DailySeries, date_range

PUBLISHED_PARAMS = GlobalParams(a=-7.1139e-2, u=-6.2489e-3)

# Optimal initial conditions (f0, delta0) reported for each region.
PUBLISHED_INITS: dict[int, RegionInit] = {
    84: RegionInit(7.0714, 0.3221),
    27: RegionInit(6.277, 0.2667),
    24: RegionInit(1.7143, 0.3598),
    44: RegionInit(42.8393, 0.2054),
    32: RegionInit(7.9161, 0.3032),
    11: RegionInit(37.0938, 0.3211),
    75: RegionInit(1.0, 0.3167),
    76: RegionInit(3.4643, 0.295),
    52: RegionInit(2.3189, 0.3088),
    53: RegionInit(1.8857, 0.2284),
    94: RegionInit(1.3255, 0.1204),
    28: RegionInit(1.2857, 0.3737),
    93: RegionInit(5.2883, 0.2923),
}

# Lag (days) and scale of each indicator against the fitted signal, for
# Île-de-France, Grand Est and Auvergne-Rhône-Alpes.
PUBLISHED_LAGS: dict[int, dict[str, tuple[int, float]]] = {
    11: {"incid_hosp": (4, 2.890469), "incid_rea": (6, 0.530296), "incid_dc": (-2, 0.474127),
         "incid_rad": (-5, 0.951683), "incid_inserm": (-1, 0.275693), "pos": (5, 1.496454),
         "nbre_pass_corona": (7, 1.053246), "nbre_hospit_corona": (7, 0.470787),
         "nbre_acte_corona": (11, 0.385416)},
    44: {"incid_hosp": (3, 2.846007), "incid_rea": (5, 0.524773), "incid_dc": (-1, 0.505064),
         "incid_rad": (-5, 0.966889), "incid_inserm": (0, 0.331267), "pos": (-1, 0.853961),
         "nbre_pass_corona": (2, 2.487286), "nbre_hospit_corona": (3, 1.116551),
         "nbre_acte_corona": (6, 0.859851)},
    84: {"incid_hosp": (5, 3.430858), "incid_rea": (6, 0.806820), "incid_dc": (-3, 0.399725),
         "incid_rad": (-3, 1.261361), "incid_inserm": (-2, 0.343933), "pos": (5, 0.693771),
         "nbre_pass_corona": (6, 5.060418), "nbre_hospit_corona": (7, 2.269344),
         "nbre_acte_corona": (10, 1.831710)},
}

# Lags and scales used for regions without published values.
GENERIC_LAGS: dict[str, tuple[int, float]] = {
    "incid_hosp": (4, 3.0), "incid_rea": (6, 0.6), "incid_dc": (-2, 0.45),
    "incid_rad": (-4, 1.0), "incid_inserm": (-1, 0.3), "pos": (4, 1.0),
    "nbre_pass_corona": (6, 2.5), "nbre_hospit_corona": (6, 1.1), "nbre_acte_corona": (9, 1.0),
}


def published_dataset(window: FitWindow = FitWindow(), noise: float = 0.0, seed: int | None = None,
                      regions=REGION_CODES, tag: str = "mean_excess20_corr") -> dict[int, DailySeries]:
    """Regional target series simulated from the published model.

    ``noise`` is the standard deviation of i.i.d. multiplicative Gaussian
    noise: ``f * (1 + noise * eps)``.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for r in sorted(regions):
        f = simulate(PUBLISHED_PARAMS, PUBLISHED_INITS[r], window.n_days - 1).f
        if noise:
            f = f * (1.0 + noise * rng.standard_normal(f.size))
        out[r] = DailySeries(r, tag, window.k0_date, f)
    return out


def lag_for(region: int, indicator: str) -> tuple[int, float]:
    return PUBLISHED_LAGS.get(region, GENERIC_LAGS).get(indicator, GENERIC_LAGS[indicator])


def _baseline(day: dt.date, region: int) -> float:
    # Seasonal all-cause mortality, higher in winter.
    scale = 20.0 + 4.0 * (region % 7)
    return scale * (1.0 + 0.15 * np.cos(2 * np.pi * (day.timetuple().tm_yday - 15) / 365.0))


def write_fixture_dataset(directory: str | Path, regions=REGION_CODES, seed: int = 0,
                          window: FitWindow = FitWindow()) -> dict[str, Path]:
    """Write synthetic raw files for the five source families.

    Deaths for 2018 and 2019 are a seasonal baseline; 2020 adds the model
    signal between Feb 15 and Jun 30.  Hospital and other indicators are
    ``mu * f(t - eta)`` with the published or generic lags.  Values are
    rounded to integers like the real counts.  Returns the written paths
    keyed by source id.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    span = (dt.date(2020, 2, 1), dt.date(2020, 7, 15))
    signal = {r: simulate_span(PUBLISHED_PARAMS, PUBLISHED_INITS[r], window.k0_date, *span, region=r)
              for r in sorted(regions)}

    def f_at(r: int, day: dt.date) -> float:
        s = signal[r]
        return s.at(day) if s.start_date <= day <= s.end_date else 0.0

    deaths = ["REG;DATE;DECES"]
    for year in (2018, 2019, 2020):
        for day in date_range(dt.date(year, 1, 1), dt.date(year, 7, 31)):
            for r in sorted(regions):
                base = _baseline(day, r)
                extra = f_at(r, day) if year == 2020 else 0.0
                count = max(0, round(base + extra + rng.normal(0, 1.5)))
                deaths.append(f"{r};{day.strftime('%Y-%m-%d')};{count}")
    # One overseas row, dropped on ingestion.
    deaths.append("01;2020-03-17;5")

    measured_days = date_range(dt.date(2020, 3, 1), dt.date(2020, 6, 30))

    def indicator_rows(fields: list[str]) -> list[str]:
        rows = []
        for r in sorted(regions):
            for day in measured_days:
                cells = []
                for name in fields:
                    eta, mu = lag_for(r, name)
                    cells.append(str(max(0, round(mu * f_at(r, day - dt.timedelta(days=eta))))))
                rows.append(";".join([str(r), day.isoformat()] + cells))
        return rows

    hosp_fields = ["incid_hosp", "incid_rea", "incid_dc", "incid_rad"]
    hosp = [";".join(["reg", "jour"] + hosp_fields)] + indicator_rows(hosp_fields)
    inserm = ["reg;jour;incid_inserm"] + indicator_rows(["incid_inserm"])

    tests = ["reg;jour;P;T;cl_age90"]
    for row in indicator_rows(["pos"]):
        reg, day, pos = row.split(";")
        tests.append(f"{reg};{day};{pos};{int(pos) * 12 + 40};0")
        tests.append(f"{reg};{day};{int(pos) // 3};{int(pos) * 4 + 10};9")

    sos_fields = ["nbre_pass_corona", "nbre_hospit_corona", "nbre_acte_corona"]
    sos = ["reg;date_de_passage;sursaud_cl_age_corona;nbre_pass_corona;nbre_pass_tot;"
           "nbre_hospit_corona;nbre_acte_corona;nbre_acte_tot"]
    for row in indicator_rows(sos_fields):
        reg, day, p, h, a = row.split(";")
        sos.append(f"{reg};{day};0;{p};{int(p) + 900};{h};{a};{int(a) + 300}")

    files = {
        "insee_deaths": ("deaths.csv", deaths),
        "hosp_incidence": ("hosp.csv", hosp),
        "inserm_cert": ("inserm.csv", inserm),
        "tests": ("tests.csv", tests),
        "emergency_sos": ("sos.csv", sos),
    }
    written = {}
    for source, (name, lines) in files.items():
        path = directory / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written[source] = path
    return written
