"""Exception hierarchy shared by every covidfit module."""

from __future__ import annotations


class CovidFitError(Exception):
    """Base class for all library errors."""


# --- ingestion -------------------------------------------------------------

class ParseError(CovidFitError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingColumn(ParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing column {name!r}")


class BadDate(ParseError):
    def __init__(self, row: int, text: str):
        self.row = row
        self.text = text
        super().__init__(f"unparseable date {text!r}", line=row)


class BadValue(ParseError):
    def __init__(self, row: int, text: str):
        self.row = row
        self.text = text
        super().__init__(f"unparseable or non-finite value {text!r}", line=row)


class NegativeValue(ParseError):
    def __init__(self, row: int, value: float | None = None):
        self.row = row
        super().__init__(f"negative value {value!r}", line=row)


class DuplicateKey(ParseError):
    def __init__(self, region: int, indicator: str, date, line: int | None = None):
        self.region = region
        self.indicator = indicator
        self.date = date
        super().__init__(
            f"duplicate key (region={region}, indicator={indicator}, date={date})",
            line=line,
        )


class ConfigError(CovidFitError, ValueError):
    pass


class NoData(CovidFitError, LookupError):
    def __init__(self, region: int, indicator: str):
        self.region = region
        self.indicator = indicator
        super().__init__(f"no records for region {region}, indicator {indicator}")


# --- series handling -------------------------------------------------------

class SpanMismatch(CovidFitError, ValueError):
    pass


class NonPositiveValue(CovidFitError, ValueError):
    def __init__(self, k: int, value: float):
        self.k = k
        super().__init__(f"non-positive value {value!r} at index {k}")


# --- model / optimisation --------------------------------------------------

class NonFinite(CovidFitError, ArithmeticError):
    pass


class ZeroStep(CovidFitError, ValueError):
    pass


class InfeasibleStart(CovidFitError, ValueError):
    pass


class DegenerateRegression(CovidFitError, ValueError):
    pass


class NonPositiveMax(CovidFitError, ValueError):
    def __init__(self, region: int):
        self.region = region
        super().__init__(f"region {region}: series maximum is not positive")


# --- lag fitting -----------------------------------------------------------

class EmptyOverlap(CovidFitError, ValueError):
    pass


class DegenerateSource(CovidFitError, ValueError):
    pass


class NoFeasibleEta(CovidFitError, ValueError):
    pass
