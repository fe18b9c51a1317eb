"""Region codes, indicator tags and the :class:`DailySeries` container."""

from __future__ import annotations

import datetime as dt
import unicodedata
from dataclasses import dataclass, field

import numpy as np

from .errors import SpanMismatch

# INSEE codes of the 13 mainland regions.
REGIONS: dict[int, str] = {
    11: "Île-de-France",
    24: "Centre-Val de Loire",
    27: "Bourgogne-Franche-Comté",
    28: "Normandie",
    32: "Hauts-de-France",
    44: "Grand Est",
    52: "Pays de la Loire",
    53: "Bretagne",
    75: "Nouvelle-Aquitaine",
    76: "Occitanie",
    84: "Auvergne-Rhône-Alpes",
    93: "Provence-Alpes-Côte d'Azur",
    94: "Corse",
}
REGION_CODES: tuple[int, ...] = tuple(sorted(REGIONS))

INDICATORS: tuple[str, ...] = (
    "deces_2018",
    "deces_2019",
    "deces_2020",
    "incid_hosp",
    "incid_rea",
    "incid_dc",
    "incid_rad",
    "incid_inserm",
    "test",
    "pos",
    "nbre_pass_tot",
    "nbre_pass_corona",
    "nbre_hospit_corona",
    "nbre_acte_tot",
    "nbre_acte_corona",
)

# Tags for series produced by the library rather than read from a source.
DERIVED_TAGS: tuple[str, ...] = (
    "mean_excess20",
    "mean_incid_dc",
    "mean_inserm",
    "mean_excess20_corr",
    "fhat",
    "delta",
)


def is_region(code: int) -> bool:
    return code in REGIONS


def _fold(text: str) -> str:
    text = unicodedata.normalize("NFKD", text)
    text = "".join(c for c in text if not unicodedata.combining(c))
    return "".join(c for c in text.lower() if c.isalnum())


_NAME_TO_CODE = {_fold(name): code for code, name in REGIONS.items()}


def region_from_name(name: str) -> int | None:
    """Look up a region code from its name, ignoring case, accents and punctuation."""
    return _NAME_TO_CODE.get(_fold(name))


def date_range(start: dt.date, end: dt.date) -> list[dt.date]:
    n = (end - start).days + 1
    return [start + dt.timedelta(days=k) for k in range(max(n, 0))]


@dataclass(frozen=True, eq=False)
class DailySeries:
    """Contiguous daily values for one region and one indicator.

    Day ``k`` of the series is ``start_date + k``.  ``interpolated`` marks
    days whose value was filled in rather than observed.
    """

    region: int
    indicator: str
    start_date: dt.date
    values: np.ndarray
    interpolated: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("series values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"series {self.region}/{self.indicator} has non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.interpolated is None:
            flags = np.zeros(values.size, dtype=bool)
        else:
            flags = np.array(self.interpolated, dtype=bool)
            if flags.shape != values.shape:
                raise ValueError("interpolated flags must match values")
        flags.flags.writeable = False
        object.__setattr__(self, "interpolated", flags)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, DailySeries):
            return NotImplemented
        return (
            self.region == other.region
            and self.indicator == other.indicator
            and self.start_date == other.start_date
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.interpolated, other.interpolated)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=len(self) - 1)

    @property
    def dates(self) -> list[dt.date]:
        return date_range(self.start_date, self.end_date)

    def index_of(self, day: dt.date) -> int:
        return (day - self.start_date).days

    def covers(self, start: dt.date, end: dt.date) -> bool:
        return self.start_date <= start and end <= self.end_date

    def at(self, day: dt.date) -> float:
        k = self.index_of(day)
        if not 0 <= k < len(self):
            raise KeyError(day)
        return float(self.values[k])

    def slice(self, start: dt.date, end: dt.date) -> DailySeries:
        """Restrict to ``[start, end]`` inclusive; both ends must be covered."""
        if not self.covers(start, end) or end < start:
            raise SpanMismatch(
                f"{self.region}/{self.indicator} spans {self.start_date}..{self.end_date}, "
                f"cannot slice {start}..{end}"
            )
        i, j = self.index_of(start), self.index_of(end) + 1
        return DailySeries(self.region, self.indicator, start, self.values[i:j],
                           self.interpolated[i:j])

    def with_values(self, values, indicator: str | None = None) -> DailySeries:
        return DailySeries(self.region, indicator or self.indicator, self.start_date, values)

    def retagged(self, indicator: str) -> DailySeries:
        return DailySeries(self.region, indicator, self.start_date, self.values, self.interpolated)

    def scaled(self, c: float) -> DailySeries:
        return DailySeries(self.region, self.indicator, self.start_date, c * self.values,
                           self.interpolated)
