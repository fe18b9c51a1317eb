"""Smoothing, 2020 excess deaths and the corrected fitting target.

The fitting target for a region is

    corr(k) = max(mean_excess20(k) + c0 + c1 * (k - k0), mean_incid_dc(k))

where ``mean_*`` are moving averages and (c0, c1) is a linear correction
fitted on the late part of the window, where excess mortality drops below
the certified hospital deaths.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import SpanMismatch
from .series import DailySeries


@dataclass(frozen=True)
class SmoothingSpec:
    window: int = 14
    alignment: str = "centered"

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 1:
            raise ValueError(f"smoothing window must be a positive integer, got {self.window!r}")
        if self.alignment not in ("centered", "trailing"):
            raise ValueError(f"alignment must be 'centered' or 'trailing', got {self.alignment!r}")

    @classmethod
    def parse(cls, text: str) -> SmoothingSpec:
        """Parse ``"14:centered"`` / ``"5"``."""
        days, _, align = text.partition(":")
        return cls(int(days), align or "centered")

    def __str__(self) -> str:
        return f"{self.window}:{self.alignment}"


@dataclass(frozen=True)
class LinearCorrection:
    intercept: float = 0.0
    slope: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.intercept) and np.isfinite(self.slope)):
            raise ValueError("linear correction coefficients must be finite")


def moving_average(series: DailySeries, spec: SmoothingSpec = SmoothingSpec()) -> DailySeries:
    """Moving average truncated at the series ends.

    Centered windows cover ``[k - (w-1)//2, k + ceil((w-1)/2)]``; trailing
    windows cover ``[k - w + 1, k]``.  Near the ends only available points
    are averaged.
    """
    x = series.values
    n = x.size
    w = spec.window
    if w == 1:
        return DailySeries(series.region, series.indicator, series.start_date, x)
    if spec.alignment == "centered":
        back, ahead = (w - 1) // 2, w - 1 - (w - 1) // 2
    else:
        back, ahead = w - 1, 0
    k = np.arange(n)
    lo = np.clip(k - back, 0, n)
    hi = np.clip(k + ahead + 1, 0, n)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    out = (csum[hi] - csum[lo]) / (hi - lo)
    return DailySeries(series.region, series.indicator, series.start_date, out)


def _to_year(day: dt.date, year: int) -> dt.date | None:
    try:
        return day.replace(year=year)
    except ValueError:  # Feb 29 has no counterpart
        return None


def _shifted_map(series: DailySeries, years: int) -> dict[dt.date, float]:
    out = {}
    for day, v in zip(series.dates, series.values):
        moved = _to_year(day, day.year + years)
        if moved is not None:
            out[moved] = float(v)
    return out


def excess_2020(d2018: DailySeries, d2019: DailySeries, d2020: DailySeries,
                spec: SmoothingSpec = SmoothingSpec()) -> DailySeries:
    """Smoothed 2020 deaths minus the mean of smoothed 2018 and 2019 deaths.

    Earlier years are aligned on the 2020 calendar by month and day.  Feb 29
    2020 has no reference day; when it falls inside the overlap its excess
    is interpolated from Feb 28 and Mar 1 and flagged.
    """
    m18 = _shifted_map(moving_average(d2018, spec), 2)
    m19 = _shifted_map(moving_average(d2019, spec), 1)
    s20 = moving_average(d2020, spec)
    m20 = dict(zip(s20.dates, s20.values))

    start = max(min(m18), min(m19), s20.start_date)
    end = min(max(m18), max(m19), s20.end_date)
    leap_days = {d for d in m20 if d.month == 2 and d.day == 29}
    while start <= end and start in leap_days:
        start += dt.timedelta(days=1)
    while end >= start and end in leap_days:
        end -= dt.timedelta(days=1)
    if end < start:
        raise SpanMismatch("2018/2019/2020 death series have no common calendar span")

    n = (end - start).days + 1
    values = np.empty(n)
    flags = np.zeros(n, dtype=bool)
    for k in range(n):
        day = start + dt.timedelta(days=k)
        if day in leap_days:
            flags[k] = True
            continue
        try:
            values[k] = m20[day] - (m18[day] + m19[day]) / 2.0
        except KeyError:
            raise SpanMismatch(f"reference years do not cover {day}") from None
    for k in np.flatnonzero(flags):
        values[k] = 0.5 * (values[k - 1] + values[k + 1])
    return DailySeries(d2020.region, "mean_excess20", start, values, flags)


def _common_window(a: DailySeries, b: DailySeries, window) -> tuple[dt.date, dt.date]:
    if window is None:
        start, end = max(a.start_date, b.start_date), min(a.end_date, b.end_date)
    else:
        start, end = window
    if end < start or not (a.covers(start, end) and b.covers(start, end)):
        raise SpanMismatch(
            f"series {a.indicator} ({a.start_date}..{a.end_date}) and {b.indicator} "
            f"({b.start_date}..{b.end_date}) do not both cover {start}..{end}"
        )
    return start, end


def correct_excess(mean_excess20: DailySeries, mean_incid_dc: DailySeries,
                   corr: LinearCorrection = LinearCorrection(),
                   window: tuple[dt.date, dt.date] | None = None) -> DailySeries:
    """Corrected excess: pointwise max of (excess + line) and hospital deaths.

    ``window`` defaults to the overlap of the two inputs; k0 is its first day.
    """
    start, end = _common_window(mean_excess20, mean_incid_dc, window)
    e = mean_excess20.slice(start, end).values
    dc = mean_incid_dc.slice(start, end).values
    k = np.arange(e.size)
    out = np.maximum(e + corr.intercept + corr.slope * k, dc)
    return DailySeries(mean_excess20.region, "mean_excess20_corr", start, out)


def fit_linear_correction(mean_excess20: DailySeries, mean_incid_dc: DailySeries,
                          tail_days: int = 14,
                          window: tuple[dt.date, dt.date] | None = None) -> LinearCorrection:
    """Least-squares line through the positive gap ``max(0, dc - excess)``.

    Only the last ``tail_days`` of the window are used; the line is returned
    in coordinates counted from the first day of the window.
    """
    start, end = _common_window(mean_excess20, mean_incid_dc, window)
    n = (end - start).days + 1
    if not 1 <= tail_days <= n:
        raise SpanMismatch(f"tail_days={tail_days} does not fit a {n}-day window")
    gap = np.maximum(0.0, mean_incid_dc.slice(start, end).values
                     - mean_excess20.slice(start, end).values)[n - tail_days:]
    k = np.arange(n - tail_days, n, dtype=float)
    if tail_days == 1:
        return LinearCorrection(float(gap[0]), 0.0)
    design = np.column_stack([np.ones_like(k), k])
    (c0, c1), *_ = np.linalg.lstsq(design, gap, rcond=None)
    return LinearCorrection(float(c0), float(c1))


@dataclass
class PreparedRegion:
    """Derived series for one region, all on the identification window."""

    region: int
    mean_excess20: DailySeries
    mean_incid_dc: DailySeries
    corrected: DailySeries
    correction: LinearCorrection
    mean_inserm: DailySeries | None = None

    def series(self) -> list[DailySeries]:
        out = [self.mean_excess20, self.mean_incid_dc]
        if self.mean_inserm is not None:
            out.append(self.mean_inserm)
        out.append(self.corrected)
        return out


def prepare_region(raw: dict[str, DailySeries], window: tuple[dt.date, dt.date],
                   spec: SmoothingSpec = SmoothingSpec(), tail_days: int = 14) -> PreparedRegion:
    """Run the whole preparation chain for one region.

    ``raw`` maps indicator tags (``deces_2018``, ``deces_2019``,
    ``deces_2020``, ``incid_dc`` and optionally ``incid_inserm``) to
    observed series.  Smoothing is done on the full observed spans, so the
    window itself carries no boundary truncation when data extends past it.
    """
    missing = [t for t in ("deces_2018", "deces_2019", "deces_2020", "incid_dc") if t not in raw]
    if missing:
        raise SpanMismatch(f"missing series for preparation: {missing}")
    start, end = window
    excess = excess_2020(raw["deces_2018"], raw["deces_2019"], raw["deces_2020"], spec)
    dc = moving_average(raw["incid_dc"], spec).retagged("mean_incid_dc")
    corr = fit_linear_correction(excess, dc, tail_days, window)
    corrected = correct_excess(excess, dc, corr, window)
    inserm = None
    if "incid_inserm" in raw:
        m = moving_average(raw["incid_inserm"], spec)
        if m.covers(start, end):
            inserm = m.slice(start, end).retagged("mean_inserm")
    return PreparedRegion(
        region=excess.region,
        mean_excess20=excess.slice(start, end),
        mean_incid_dc=dc.slice(start, end),
        corrected=corrected,
        correction=corr,
        mean_inserm=inserm,
    )
