"""Fit measured indicators as scaled, delayed copies of the model signal.

For an indicator ``H`` and the fitted signal ``f`` we look for

    H(t) = mu * f(t - eta)

with integer ``eta``.  For fixed ``eta`` the best ``mu`` is a one-line
least-squares ratio; ``eta`` is chosen on a grid by mean squared error.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .errors import CovidFitError, DegenerateSource, EmptyOverlap, NoFeasibleEta
from .series import DailySeries

# Indicators compared against the model, in table order.
VALIDATION_INDICATORS: tuple[str, ...] = (
    "incid_hosp",
    "incid_rea",
    "incid_dc",
    "incid_rad",
    "incid_inserm",
    "pos",
    "nbre_pass_corona",
    "nbre_hospit_corona",
    "nbre_acte_corona",
)


@dataclass(frozen=True)
class LagSearchSpec:
    eta_min: int = -10
    eta_max: int = 15
    window: tuple[dt.date, dt.date] | None = None

    def __post_init__(self):
        if self.eta_min > self.eta_max:
            raise ValueError("eta_min must not exceed eta_max")


@dataclass(frozen=True)
class LagScaleFit:
    region: int
    indicator: str
    eta: int
    mu: float
    sse: float
    n_overlap: int

    @property
    def mse(self) -> float:
        return self.sse / self.n_overlap


def _overlap(H: DailySeries, f: DailySeries, eta: int, window) -> tuple[np.ndarray, np.ndarray]:
    shift = dt.timedelta(days=eta)
    start = max(H.start_date, f.start_date + shift)
    end = min(H.end_date, f.end_date + shift)
    if window is not None:
        start, end = max(start, window[0]), min(end, window[1])
    if end < start:
        raise EmptyOverlap(f"no overlap for eta={eta}")
    n = (end - start).days + 1
    i = H.index_of(start)
    j = f.index_of(start - shift)
    return H.values[i:i + n], f.values[j:j + n]


def best_mu(H: DailySeries, f: DailySeries, eta: int,
            window: tuple[dt.date, dt.date] | None = None) -> tuple[float, float, int]:
    """Least-squares scale for a fixed lag: returns ``(mu, sse, n_overlap)``.

    ``mu`` is clamped at zero since the indicators are counts.
    """
    h, g = _overlap(H, f, eta, window)
    gg = float(np.dot(g, g))
    if gg == 0.0:
        raise DegenerateSource(f"shifted source is identically zero for eta={eta}")
    mu = max(float(np.dot(h, g)) / gg, 0.0)
    resid = h - mu * g
    return mu, float(np.dot(resid, resid)), int(h.size)


def fit_lag_scale(H: DailySeries, f: DailySeries, spec: LagSearchSpec = LagSearchSpec()) -> LagScaleFit:
    """Scan every integer lag in the search range and keep the lowest MSE.

    Ties go to the smaller ``|eta|``, then to the smaller ``eta``.
    """
    best = None
    for eta in range(spec.eta_min, spec.eta_max + 1):
        try:
            mu, sse, n = best_mu(H, f, eta, spec.window)
        except (EmptyOverlap, DegenerateSource):
            continue
        key = (sse / n, abs(eta), eta)
        if best is None or key < best[0]:
            best = (key, LagScaleFit(H.region, H.indicator, eta, mu, sse, n))
    if best is None:
        raise NoFeasibleEta(
            f"{H.region}/{H.indicator}: no lag in [{spec.eta_min}, {spec.eta_max}] overlaps the signal"
        )
    return best[1]


@dataclass
class ValidationReport:
    fits: list[LagScaleFit] = field(default_factory=list)
    errors: list[tuple[int, str, str]] = field(default_factory=list)

    @property
    def all_failed(self) -> bool:
        return bool(self.errors) and not self.fits


def validate_all(model_f: Mapping[int, DailySeries],
                 measured: Mapping[tuple[int, str], DailySeries],
                 spec: LagSearchSpec = LagSearchSpec()) -> ValidationReport:
    """One lag/scale fit per measured (region, indicator) pair.

    Only the nine comparison indicators are fitted.  Failures are collected
    in ``report.errors`` instead of raised.
    """
    report = ValidationReport()
    for region, indicator in sorted(measured):
        if indicator not in VALIDATION_INDICATORS:
            continue
        if region not in model_f:
            report.errors.append((region, indicator, "no model signal for region"))
            continue
        try:
            report.fits.append(fit_lag_scale(measured[region, indicator], model_f[region], spec))
        except CovidFitError as exc:
            report.errors.append((region, indicator, str(exc)))
    return report


def fits_table_csv(fits: list[LagScaleFit]) -> str:
    """Regions as rows, ``eta_<indicator>``/``mu_<indicator>`` as columns."""
    indicators = [i for i in VALIDATION_INDICATORS if any(f.indicator == i for f in fits)]
    cells = {(f.region, f.indicator): f for f in fits}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["region"]
    for ind in indicators:
        header += [f"eta_{ind}", f"mu_{ind}"]
    writer.writerow(header)
    for region in sorted({f.region for f in fits}):
        row = [region]
        for ind in indicators:
            fit = cells.get((region, ind))
            row += ["", ""] if fit is None else [fit.eta, f"{fit.mu:.6f}"]
        writer.writerow(row)
    return buf.getvalue()


def fits_json(report: ValidationReport) -> str:
    doc = {
        "fits": [asdict(f) for f in report.fits],
        "errors": [{"region": r, "indicator": i, "message": m} for r, i, m in report.errors],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
