"""Parsing of the French open-data CSV families into a canonical long table.

Every upstream file is read through a :class:`SourceAdapterConfig`, a plain
column map, because the upstream layouts have changed over time.  The
canonical on-disk format is::

    region,indicator,date,value
    84,incid_hosp,2020-03-17,12.0
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    BadDate,
    BadValue,
    ConfigError,
    DuplicateKey,
    MissingColumn,
    NegativeValue,
    NoData,
    ParseError,
)
from .series import INDICATORS, DailySeries, is_region, region_from_name

CANONICAL_HEADER = ("region", "indicator", "date", "value")

# Value columns each source may provide.  At least one must be mapped.
SOURCE_FIELDS: dict[str, tuple[str, ...]] = {
    "insee_deaths": ("deaths",),
    "hosp_incidence": ("incid_hosp", "incid_rea", "incid_dc", "incid_rad"),
    "inserm_cert": ("incid_inserm",),
    "tests": ("test", "pos"),
    "emergency_sos": (
        "nbre_pass_tot",
        "nbre_pass_corona",
        "nbre_hospit_corona",
        "nbre_acte_tot",
        "nbre_acte_corona",
    ),
}
DEATH_YEARS = (2018, 2019, 2020)
_MISSING = {"", "na", "nan", "null", "none"}


@dataclass(frozen=True, order=True)
class CanonicalRecord:
    region: int
    indicator: str
    date: dt.date
    value: float


@dataclass(frozen=True)
class SourceAdapterConfig:
    """Column mapping for one upstream file family.

    ``column_map`` maps canonical field names (``region``, ``date`` and the
    value fields listed in :data:`SOURCE_FIELDS`) to source headers.  The
    ``date`` entry may be a list of headers, joined with ``-`` before
    parsing.  For ``insee_deaths`` the ``deaths`` field is optional: without
    it every row is one death and rows are counted per (region, day), and the
    indicator is ``deces_<year>``.  ``filters`` keeps only rows whose column
    equals the given text (e.g. the all-ages class).
    """

    source_id: str
    column_map: Mapping[str, str | list[str]]
    delimiter: str = ","
    date_format: str = "%Y-%m-%d"
    region_column_kind: str = "code"
    filters: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.source_id not in SOURCE_FIELDS:
            raise ConfigError(f"unknown source_id {self.source_id!r}")
        if len(self.delimiter) != 1:
            raise ConfigError("delimiter must be a single character")
        if self.region_column_kind not in ("code", "name"):
            raise ConfigError("region_column_kind must be 'code' or 'name'")
        for required in ("region", "date"):
            if required not in self.column_map:
                raise ConfigError(f"column_map lacks required field {required!r}")
        allowed = set(SOURCE_FIELDS[self.source_id]) | {"region", "date"}
        unknown = set(self.column_map) - allowed
        if unknown:
            raise ConfigError(f"column_map has fields not provided by {self.source_id}: {sorted(unknown)}")
        if not self.value_fields and not self.counts_rows:
            raise ConfigError(f"column_map maps no value field of {self.source_id}")

    @property
    def value_fields(self) -> tuple[str, ...]:
        return tuple(f for f in SOURCE_FIELDS[self.source_id] if f in self.column_map)

    @property
    def counts_rows(self) -> bool:
        return self.source_id == "insee_deaths" and "deaths" not in self.column_map

    @classmethod
    def from_dict(cls, doc: Mapping) -> SourceAdapterConfig:
        try:
            return cls(
                source_id=doc["source_id"],
                column_map=dict(doc["column_map"]),
                delimiter=doc.get("delimiter", ","),
                date_format=doc.get("date_format", "%Y-%m-%d"),
                region_column_kind=doc.get("region_column_kind", "code"),
                filters=dict(doc.get("filters", {})),
            )
        except KeyError as exc:
            raise ConfigError(f"adapter config lacks {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "column_map": dict(self.column_map),
            "delimiter": self.delimiter,
            "date_format": self.date_format,
            "region_column_kind": self.region_column_kind,
            "filters": dict(self.filters),
        }


# Starting points for the data.gouv.fr / INSEE regional files.  Upstream
# headers drift, so these are meant to be copied and edited as JSON.
PRESETS: dict[str, SourceAdapterConfig] = {
    "insee_deaths": SourceAdapterConfig(
        "insee_deaths", {"region": "REG", "date": "DATE", "deaths": "DECES"}, delimiter=";"
    ),
    "hosp_incidence": SourceAdapterConfig(
        "hosp_incidence",
        {"region": "reg", "date": "jour", "incid_hosp": "incid_hosp", "incid_rea": "incid_rea",
         "incid_dc": "incid_dc", "incid_rad": "incid_rad"},
        delimiter=";",
    ),
    "inserm_cert": SourceAdapterConfig(
        "inserm_cert", {"region": "reg", "date": "jour", "incid_inserm": "incid_inserm"}, delimiter=";"
    ),
    "tests": SourceAdapterConfig(
        "tests", {"region": "reg", "date": "jour", "test": "T", "pos": "P"},
        delimiter=";", filters={"cl_age90": "0"},
    ),
    "emergency_sos": SourceAdapterConfig(
        "emergency_sos",
        {"region": "reg", "date": "date_de_passage", "nbre_pass_tot": "nbre_pass_tot",
         "nbre_pass_corona": "nbre_pass_corona", "nbre_hospit_corona": "nbre_hospit_corona",
         "nbre_acte_tot": "nbre_acte_tot", "nbre_acte_corona": "nbre_acte_corona"},
        delimiter=";", filters={"sursaud_cl_age_corona": "0"},
    ),
}


def load_adapter(spec: str | Path | Mapping) -> SourceAdapterConfig:
    """Resolve an adapter from a preset name, a JSON file path or a dict."""
    if isinstance(spec, Mapping):
        return SourceAdapterConfig.from_dict(spec)
    if isinstance(spec, str) and spec in PRESETS:
        return PRESETS[spec]
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"adapter {spec!r} is neither a preset nor an existing file")
    return SourceAdapterConfig.from_dict(json.loads(path.read_text(encoding="utf-8")))


@dataclass
class ParseResult:
    records: list[CanonicalRecord]
    dropped_regions: int = 0
    filtered: int = 0
    missing_values: int = 0
    out_of_scope: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def summary(self) -> str:
        return (f"kept {len(self.records)} records; dropped {self.dropped_regions} rows outside "
                f"mainland regions, {self.filtered} filtered rows, {self.missing_values} empty cells, "
                f"{self.out_of_scope} out-of-scope rows")


def _parse_float(text: str, row: int, delimiter: str) -> float:
    if delimiter != ",":
        text = text.replace(",", ".")
    try:
        value = float(text)
    except ValueError:
        raise BadValue(row, text) from None
    if not math.isfinite(value):
        raise BadValue(row, text)
    if value < 0:
        raise NegativeValue(row, value)
    return value


def _parse_region(text: str, kind: str) -> int | None:
    text = text.strip()
    if kind == "name":
        return region_from_name(text)
    if not text.isdigit():
        return None
    code = int(text)
    return code if is_region(code) else None


def parse_source(raw_csv: bytes, config: SourceAdapterConfig) -> ParseResult:
    """Parse one upstream CSV file into canonical records.

    Rows whose region is not one of the 13 mainland regions are dropped and
    counted.  Empty / ``NA`` cells are skipped and counted.  Any other
    malformed row raises a :class:`~covidfit.errors.ParseError` subclass.
    """
    text = raw_csv.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text), delimiter=config.delimiter)
    header = next(reader, None)
    if header is None:
        raise MissingColumn(str(config.column_map["region"]))
    header = [h.strip() for h in header]
    position = {name: i for i, name in enumerate(header)}

    def col(name: str) -> int:
        if name not in position:
            raise MissingColumn(name)
        return position[name]

    region_col = col(config.column_map["region"])
    date_spec = config.column_map["date"]
    date_cols = [col(c) for c in ([date_spec] if isinstance(date_spec, str) else date_spec)]
    value_cols = {f: col(config.column_map[f]) for f in config.value_fields}
    filter_cols = {col(c): str(v) for c, v in config.filters.items()}

    result = ParseResult(records=[])
    seen: dict[tuple[int, str, dt.date], float] = {}
    counts: dict[tuple[int, str, dt.date], int] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line)
        if any(row[i].strip() != v for i, v in filter_cols.items()):
            result.filtered += 1
            continue
        region = _parse_region(row[region_col], config.region_column_kind)
        if region is None:
            result.dropped_regions += 1
            continue
        date_text = "-".join(row[i].strip() for i in date_cols)
        try:
            day = dt.datetime.strptime(date_text, config.date_format).date()
        except ValueError:
            raise BadDate(line, date_text) from None

        if config.source_id == "insee_deaths":
            if day.year not in DEATH_YEARS:
                result.out_of_scope += 1
                continue
            indicator_of = {"deaths": f"deces_{day.year}"}
        else:
            indicator_of = {f: f for f in value_cols}

        if config.counts_rows:
            key = (region, indicator_of["deaths"], day)
            counts[key] = counts.get(key, 0) + 1
            continue

        for fname, i in value_cols.items():
            cell = row[i].strip()
            if cell.lower() in _MISSING:
                result.missing_values += 1
                continue
            value = _parse_float(cell, line, config.delimiter)
            key = (region, indicator_of[fname], day)
            if key in seen:
                raise DuplicateKey(*key, line=line)
            seen[key] = value

    items = counts.items() if config.counts_rows else seen.items()
    result.records = sorted(CanonicalRecord(r, ind, d, float(v)) for (r, ind, d), v in items)
    return result


def write_canonical(records: Iterable[CanonicalRecord]) -> bytes:
    """Serialize records, sorted by (region, indicator, date).

    Values are written with ``repr`` so that reading them back is exact.
    """
    lines = [",".join(CANONICAL_HEADER)]
    for r in sorted(records):
        lines.append(f"{r.region},{r.indicator},{r.date.isoformat()},{float(r.value)!r}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_canonical(data: bytes, derived: bool = False) -> list[CanonicalRecord]:
    """Parse a canonical file.

    With ``derived=False`` the indicator must be a source indicator and the
    value non-negative.  ``derived=True`` accepts any tag and signed values,
    which is what model trajectories and excess-death series need.
    """
    text = data.decode("utf-8")
    lines = text.splitlines()
    if not lines or tuple(h.strip() for h in lines[0].split(",")) != CANONICAL_HEADER:
        raise ParseError(f"header must be {','.join(CANONICAL_HEADER)}", line=1)
    records = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", line=lineno)
        region_t, indicator, date_t, value_t = (p.strip() for p in parts)
        try:
            region = int(region_t)
            day = dt.date.fromisoformat(date_t)
            value = float(value_t)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if not is_region(region):
            raise ParseError(f"region {region} is not a mainland region", line=lineno)
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {value_t!r}", line=lineno)
        if not derived:
            if indicator not in INDICATORS:
                raise ParseError(f"unknown indicator {indicator!r}", line=lineno)
            if value < 0:
                raise ParseError(f"negative value {value_t!r}", line=lineno)
        key = (region, indicator, day)
        if key in seen:
            raise DuplicateKey(*key, line=lineno)
        seen.add(key)
        records.append(CanonicalRecord(region, indicator, day, value))
    records.sort()
    return records


def to_daily_series(records: Iterable[CanonicalRecord], region: int, indicator: str) -> DailySeries:
    """Assemble a contiguous series, interpolating interior gaps linearly.

    The series spans the first to the last observed date; nothing is
    extrapolated.  Filled days are flagged in ``interpolated``.
    """
    points = sorted((r.date, r.value) for r in records
                    if r.region == region and r.indicator == indicator)
    if not points:
        raise NoData(region, indicator)
    start = points[0][0]
    observed_k = np.array([(d - start).days for d, _ in points])
    observed_v = np.array([v for _, v in points], dtype=float)
    n = int(observed_k[-1]) + 1
    k = np.arange(n)
    values = np.interp(k, observed_k, observed_v)
    flags = np.ones(n, dtype=bool)
    flags[observed_k] = False
    return DailySeries(region, indicator, start, values, flags)


def series_to_records(series: Iterable[DailySeries]) -> list[CanonicalRecord]:
    out = []
    for s in series:
        for day, v in zip(s.dates, s.values):
            out.append(CanonicalRecord(s.region, s.indicator, day, float(v)))
    return out


def group_series(records: Iterable[CanonicalRecord]) -> dict[tuple[int, str], DailySeries]:
    """Split a record list into one series per (region, indicator)."""
    buckets: dict[tuple[int, str], list[CanonicalRecord]] = {}
    for r in records:
        buckets.setdefault((r.region, r.indicator), []).append(r)
    return {key: to_daily_series(recs, *key) for key, recs in sorted(buckets.items())}
