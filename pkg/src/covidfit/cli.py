"""Command-line front end: ingest, prep, identify, simulate, validate, plot, report.

Every command reads its inputs and computes its results in memory before
writing anything, so a failing command leaves no partial output behind.

Exit codes: 0 success, 2 input or parse error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import html
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .dynamics import span_trajectory
from .errors import (
    CovidFitError,
    DegenerateRegression,
    InfeasibleStart,
    NonFinite,
    NonPositiveMax,
    NonPositiveValue,
    ZeroStep,
)
from .identify import FitWindow, IdentifiedModel, identify
from .ingest import (
    CanonicalRecord,
    group_series,
    load_adapter,
    parse_source,
    read_canonical,
    series_to_records,
    write_canonical,
)
from .lagfit import VALIDATION_INDICATORS, LagScaleFit, LagSearchSpec, fits_json, fits_table_csv, validate_all
from .prep import PreparedRegion, SmoothingSpec, moving_average, prepare_region
from .series import REGIONS, DailySeries, is_region
from .svgplot import Line, render
from .torczon import MdsConfig

log = logging.getLogger("covidfit")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
SOLVER_ERRORS = (InfeasibleStart, DegenerateRegression, NonPositiveValue, NonPositiveMax,
                 NonFinite, ZeroStep)

DEFAULT_LAG_WINDOW = (dt.date(2020, 3, 18), dt.date(2020, 6, 15))


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


# --- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class SourceEntry:
    file: Path
    adapter: str | dict


@dataclass(frozen=True)
class PipelineConfig:
    data_dir: Path = Path(".")
    output_dir: Path = Path("out")
    smoothing: SmoothingSpec = SmoothingSpec()
    window: FitWindow = FitWindow()
    lag_spec: LagSearchSpec = LagSearchSpec(window=DEFAULT_LAG_WINDOW)
    solver: MdsConfig = MdsConfig(max_evals=200_000)
    weights: str | dict[int, float] = "auto_inverse_max_sq"
    regions: tuple[int, ...] | None = None
    sources: tuple[SourceEntry, ...] = ()
    tail_days: int = 14
    profile: bool = True

    def __post_init__(self):
        if isinstance(self.weights, str) and self.weights != "auto_inverse_max_sq":
            raise ValueError(f"unknown weights mode {self.weights!r}")
        if isinstance(self.weights, dict):
            bad = [r for r, q in self.weights.items() if not (is_region(r) and q > 0)]
            if bad:
                raise ValueError(f"explicit weights need mainland regions and q > 0: {bad}")
        if self.regions is not None:
            bad = [r for r in self.regions if not is_region(r)]
            if bad:
                raise ValueError(f"unknown region codes {bad}")
        if self.tail_days < 2:
            raise ValueError("tail_days must be at least 2")

    @classmethod
    def from_dict(cls, doc: Mapping, base: Path = Path(".")) -> PipelineConfig:
        """Build from a JSON document; relative paths resolve against ``base``."""
        known = {"data_dir", "output_dir", "smoothing", "window", "lag_spec", "solver",
                 "weights", "regions", "sources", "tail_days", "profile"}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown config keys {unknown}")
        kw: dict = {}
        if "data_dir" in doc:
            kw["data_dir"] = base / doc["data_dir"]
        if "output_dir" in doc:
            kw["output_dir"] = base / doc["output_dir"]
        if "smoothing" in doc:
            kw["smoothing"] = SmoothingSpec.parse(str(doc["smoothing"]))
        if "window" in doc:
            kw["window"] = FitWindow.parse(doc["window"])
        if "lag_spec" in doc:
            ls = doc["lag_spec"]
            win = ls.get("window", "2020-03-18:2020-06-15")
            kw["lag_spec"] = LagSearchSpec(int(ls.get("eta_min", -10)), int(ls.get("eta_max", 15)),
                                           None if win is None else FitWindow.parse(win).as_tuple())
        if "solver" in doc:
            kw["solver"] = MdsConfig.from_dict({"max_evals": 200_000, **doc["solver"]})
        if "weights" in doc:
            w = doc["weights"]
            kw["weights"] = w if isinstance(w, str) else {int(r): float(q) for r, q in w.items()}
        if doc.get("regions") is not None:
            kw["regions"] = tuple(int(r) for r in doc["regions"])
        if "sources" in doc:
            kw["sources"] = tuple(SourceEntry(Path(s["file"]), s["adapter"]) for s in doc["sources"])
        if "tail_days" in doc:
            kw["tail_days"] = int(doc["tail_days"])
        if "profile" in doc:
            kw["profile"] = bool(doc["profile"])
        return cls(**kw)


def load_config(args: argparse.Namespace) -> PipelineConfig:
    try:
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                raise CliError(f"config file not found: {path}")
            cfg = PipelineConfig.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)
        else:
            cfg = PipelineConfig()
        if args.region:
            cfg = replace(cfg, regions=tuple(args.region))
        if args.window:
            cfg = replace(cfg, window=FitWindow.parse(args.window))
        if args.smooth:
            cfg = replace(cfg, smoothing=SmoothingSpec.parse(args.smooth))
        if args.out:
            cfg = replace(cfg, output_dir=Path(args.out))
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"invalid configuration: {exc}") from None
    return cfg


# --- file helpers ---------------------------------------------------------------

def _read_bytes(path: Path) -> bytes:
    if not path.is_file():
        raise CliError(f"input file not found: {path}")
    return path.read_bytes()


def _load_records(path: Path, derived: bool) -> list[CanonicalRecord]:
    try:
        return read_canonical(_read_bytes(path), derived=derived)
    except CovidFitError as exc:
        raise CliError(f"{path}: {exc}") from None


def _write_all(outputs: Mapping[Path, bytes | str]) -> None:
    for path, content in outputs.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, str):
            content = content.encode("utf-8")
        path.write_bytes(content)


def _region_filter(cfg: PipelineConfig, available) -> list[int]:
    available = sorted(set(available))
    if cfg.regions is None:
        return available
    missing = [r for r in cfg.regions if r not in available]
    if missing:
        raise CliError(f"requested regions without data: {missing}")
    return sorted(set(cfg.regions))


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _canonical_dir(cfg: PipelineConfig) -> Path:
    return cfg.output_dir / "canonical"


def _load_canonical(cfg: PipelineConfig) -> dict[tuple[int, str], DailySeries]:
    directory = _canonical_dir(cfg)
    files = sorted(directory.glob("*.csv")) if directory.is_dir() else []
    if not files:
        raise CliError(f"no canonical files in {directory}; run 'covidfit ingest' first")
    records: list[CanonicalRecord] = []
    for path in files:
        records += _load_records(path, derived=False)
    seen = set()
    for rec in records:
        key = (rec.region, rec.indicator, rec.date)
        if key in seen:
            raise CliError(f"duplicate key (region={rec.region}, indicator={rec.indicator}, "
                           f"date={rec.date}) across canonical files")
        seen.add(key)
    return group_series(records)


# --- ingest -------------------------------------------------------------------

def _sources(cfg: PipelineConfig, args) -> list[SourceEntry]:
    entries = list(cfg.sources)
    for text in args.source or []:
        adapter, sep, file = text.partition("=")
        if not sep:
            raise CliError(f"--source expects ADAPTER=FILE, got {text!r}")
        entries.append(SourceEntry(Path(file), adapter))
    if not entries:
        raise CliError("no sources configured (use --source ADAPTER=FILE or 'sources' in the config)")
    return entries


def cmd_ingest(args, cfg: PipelineConfig) -> int:
    entries = _sources(cfg, args)
    resolved = []
    for e in entries:
        path = e.file if e.file.is_absolute() else cfg.data_dir / e.file
        if not path.is_file():
            raise CliError(f"input file not found: {path}")
        adapter = e.adapter
        if isinstance(adapter, str) and adapter.endswith(".json"):
            apath = Path(adapter) if Path(adapter).is_absolute() else cfg.data_dir / adapter
            if not apath.is_file():
                raise CliError(f"adapter config not found: {apath}")
            adapter = apath
        try:
            resolved.append((path, load_adapter(adapter)))
        except (CovidFitError, ValueError, KeyError) as exc:
            raise CliError(f"bad adapter for {path}: {exc}") from None

    outputs: dict[Path, bytes] = {}
    by_source: dict[str, list[CanonicalRecord]] = {}
    lines = []
    for path, adapter in resolved:
        try:
            result = parse_source(path.read_bytes(), adapter)
        except CovidFitError as exc:
            raise CliError(f"{path}: {exc}") from None
        by_source.setdefault(adapter.source_id, []).extend(result.records)
        lines.append(f"{path.name} [{adapter.source_id}]: {result.summary()}")
    for source_id, records in sorted(by_source.items()):
        try:
            outputs[_canonical_dir(cfg) / f"{source_id}.csv"] = write_canonical(records)
        except CovidFitError as exc:
            raise CliError(f"{source_id}: {exc}") from None
    _write_all(outputs)
    for line in lines:
        print(line)
    return EXIT_OK


# --- prep ---------------------------------------------------------------------

def _prepare(cfg: PipelineConfig) -> dict[int, PreparedRegion]:
    series = _load_canonical(cfg)
    with_deaths = {r for (r, ind) in series if ind == "deces_2020"}
    regions = _region_filter(cfg, with_deaths)
    if not regions:
        raise CliError("no region has deces_2020 records")
    out = {}
    for r in regions:
        raw = {ind: s for (reg, ind), s in series.items() if reg == r}
        try:
            out[r] = prepare_region(raw, cfg.window.as_tuple(), cfg.smoothing, cfg.tail_days)
        except CovidFitError as exc:
            raise CliError(f"region {r}: {exc}") from None
    return out


def _prep_outputs(cfg: PipelineConfig, prepared: Mapping[int, PreparedRegion],
                  directory: Path) -> dict[Path, bytes | str]:
    all_series = [s for p in prepared.values() for s in p.series()]
    corrections = {str(r): {"intercept": p.correction.intercept, "slope": p.correction.slope}
                   for r, p in prepared.items()}
    return {
        directory / "prepared.csv": write_canonical(series_to_records(all_series)),
        directory / "corrections.json": _dumps({
            "window": str(cfg.window), "smoothing": str(cfg.smoothing),
            "tail_days": cfg.tail_days, "regions": corrections,
        }),
    }


def cmd_prep(args, cfg: PipelineConfig) -> int:
    prepared = _prepare(cfg)
    _write_all(_prep_outputs(cfg, prepared, cfg.output_dir))
    for r, p in prepared.items():
        print(f"region {r}: correction {p.correction.intercept:+.4f} {p.correction.slope:+.4f}*k, "
              f"{len(p.corrected)} days")
    return EXIT_OK


# --- identify -----------------------------------------------------------------

def _load_targets(cfg: PipelineConfig, path: Path) -> dict[int, DailySeries]:
    series = group_series(_load_records(path, derived=True))
    available = [r for (r, ind) in series if ind == "mean_excess20_corr"]
    regions = _region_filter(cfg, available)
    if not regions:
        raise CliError(f"{path}: no mean_excess20_corr series")
    return {r: series[r, "mean_excess20_corr"] for r in regions}


def _identify(cfg: PipelineConfig, targets: Mapping[int, DailySeries]) -> IdentifiedModel:
    for r, s in targets.items():
        if not s.covers(cfg.window.k0_date, cfg.window.kf_date):
            raise CliError(f"region {r}: target spans {s.start_date}..{s.end_date}, "
                           f"window is {cfg.window}")
    weights = None
    if isinstance(cfg.weights, dict):
        missing = [r for r in targets if r not in cfg.weights]
        if missing:
            raise CliError(f"explicit weights missing for regions {missing}")
        weights = {r: cfg.weights[r] for r in targets}
    try:
        return identify(targets, cfg.window, weights, cfg.solver, profile=cfg.profile)
    except SOLVER_ERRORS as exc:
        raise CliError(f"solver failure: {exc}", EXIT_SOLVER) from None


def _trajectory_csv(model: IdentifiedModel) -> bytes:
    series = [s for pair in model.trajectories().values() for s in pair]
    return write_canonical(series_to_records(series))


def cmd_identify(args, cfg: PipelineConfig) -> int:
    path = Path(args.prepared) if args.prepared else cfg.output_dir / "prepared.csv"
    model = _identify(cfg, _load_targets(cfg, path))
    _write_all({
        cfg.output_dir / "model.json": model.to_json(),
        cfg.output_dir / "trajectories.csv": _trajectory_csv(model),
    })
    print(f"a={model.params.a:.6e} u={model.params.u:.6e} cost={model.cost:.6e} "
          f"evals={model.solver_evals} stop={model.stop_reason}")
    return EXIT_OK


def _load_model(path: Path) -> IdentifiedModel:
    try:
        return IdentifiedModel.from_json(_read_bytes(path).decode("utf-8"))
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: invalid model file: {exc}") from None


# --- simulate -----------------------------------------------------------------

def cmd_simulate(args, cfg: PipelineConfig) -> int:
    model = _load_model(Path(args.model) if args.model else cfg.output_dir / "model.json")
    span = FitWindow.parse(args.window) if args.window else model.window
    regions = _region_filter(cfg, model.regions)
    series = []
    try:
        for r in regions:
            series += span_trajectory(model.params, model.inits[r], model.window.k0_date,
                                      span.k0_date, span.kf_date, region=r)
    except NonFinite as exc:
        raise CliError(f"simulation failed: {exc}", EXIT_SOLVER) from None
    _write_all({cfg.output_dir / "simulated.csv": write_canonical(series_to_records(series))})
    print(f"simulated {len(regions)} regions over {span}")
    return EXIT_OK


# --- validate -----------------------------------------------------------------

def _model_signals(model: IdentifiedModel, regions, spec: LagSearchSpec,
                   measured: Mapping[tuple[int, str], DailySeries]) -> dict[int, DailySeries]:
    out = {}
    for r in regions:
        if spec.window is not None:
            lo, hi = spec.window
        else:
            spans = [s for (reg, _), s in measured.items() if reg == r]
            lo = min(s.start_date for s in spans)
            hi = max(s.end_date for s in spans)
        start = lo - dt.timedelta(days=spec.eta_max)
        end = hi - dt.timedelta(days=spec.eta_min)
        try:
            out[r] = span_trajectory(model.params, model.inits[r], model.window.k0_date,
                                     start, end, region=r)[0]
        except NonFinite:
            log.warning("region %d: model signal overflows on %s..%s", r, start, end)
    return out


def _validate(cfg: PipelineConfig, model: IdentifiedModel):
    series = _load_canonical(cfg)
    regions = _region_filter(cfg, model.regions)
    measured = {}
    for (r, ind), s in series.items():
        if r in regions and ind in VALIDATION_INDICATORS:
            measured[r, ind] = moving_average(s, cfg.smoothing)
    if not measured:
        raise CliError("no measured indicators for the selected regions")
    model_f = _model_signals(model, regions, cfg.lag_spec, measured)
    report = validate_all(model_f, measured, cfg.lag_spec)
    if report.all_failed:
        raise CliError("lag/scale fit failed for every (region, indicator) cell")
    return report, measured, model_f


def cmd_validate(args, cfg: PipelineConfig) -> int:
    model = _load_model(Path(args.model) if args.model else cfg.output_dir / "model.json")
    report, _, _ = _validate(cfg, model)
    _write_all({
        cfg.output_dir / "lagfit.csv": fits_table_csv(report.fits),
        cfg.output_dir / "lagfit.json": fits_json(report),
    })
    for r, ind, msg in report.errors:
        print(f"warning: region {r} {ind}: {msg}", file=sys.stderr)
    print(f"{len(report.fits)} fits, {len(report.errors)} failed cells")
    return EXIT_OK


# --- plot ---------------------------------------------------------------------

def _is_bold(indicator: str) -> bool:
    return indicator.startswith("mean_")


def _default_plot_inputs(cfg: PipelineConfig) -> list[Path]:
    names = ["prepared.csv", "trajectories.csv", "simulated.csv"]
    paths = [cfg.output_dir / n for n in names if (cfg.output_dir / n).is_file()]
    canon = _canonical_dir(cfg)
    if canon.is_dir():
        paths += sorted(canon.glob("*.csv"))
    return paths


def _parse_series_ref(text: str) -> tuple[int, str]:
    region, sep, indicator = text.partition(":")
    if not sep or not region.strip().isdigit() or not indicator:
        raise CliError(f"series must be REGION:INDICATOR, got {text!r}")
    return int(region), indicator.strip()


def cmd_plot(args, cfg: PipelineConfig) -> int:
    refs = [_parse_series_ref(t) for t in args.series or []]
    if not refs:
        raise CliError("no series requested (use --series REGION:INDICATOR)")
    inputs = [Path(p) for p in args.input] if args.input else _default_plot_inputs(cfg)
    if not inputs:
        raise CliError(f"no series files found in {cfg.output_dir}")
    available: dict[tuple[int, str], DailySeries] = {}
    for path in inputs:
        for key, s in group_series(_load_records(path, derived=True)).items():
            available.setdefault(key, s)
    unknown = [f"{r}:{i}" for r, i in refs if (r, i) not in available]
    if unknown:
        raise CliError(f"unknown series: {', '.join(unknown)}")
    lines = [Line(f"{r} {i}", available[r, i], _is_bold(i)) for r, i in refs]
    name = args.name or "_".join(f"{r}-{i}" for r, i in refs)
    target = cfg.output_dir / "figures" / f"{name}.svg"
    _write_all({target: render(lines, title=args.title or "")})
    print(target)
    return EXIT_OK


# --- report -------------------------------------------------------------------

def _report_figures(prepared, model: IdentifiedModel, fits: list[LagScaleFit],
                    measured, model_f) -> dict[str, str]:
    figs = {}
    traj = model.trajectories()
    for r in model.regions:
        name = REGIONS[r]
        p = prepared[r]
        lines = [Line("excess deaths (smoothed)", p.mean_excess20, True),
                 Line("hospital deaths (smoothed)", p.mean_incid_dc, True)]
        if p.mean_inserm is not None:
            lines.append(Line("certified deaths (smoothed)", p.mean_inserm, True))
        lines.append(Line("corrected excess", p.corrected, True))
        figs[f"deaths_{r}.svg"] = render(lines, f"{name} ({r}): daily deaths", "deaths/day")
        figs[f"fit_{r}.svg"] = render(
            [Line("corrected excess", p.corrected, True), Line("model trajectory", traj[r][0])],
            f"{name} ({r}): corrected excess vs model", "deaths/day")
    figs["delta.svg"] = render([Line(str(r), traj[r][1]) for r in model.regions],
                               "delta per region", "delta")
    for fit in fits:
        H = measured[fit.region, fit.indicator]
        f = model_f[fit.region]
        shifted = DailySeries(fit.region, "model", f.start_date + dt.timedelta(days=fit.eta),
                              fit.mu * f.values)
        figs[f"lag_{fit.region}_{fit.indicator}.svg"] = render(
            [Line(f"{fit.indicator} (smoothed)", H, True),
             Line(f"mu f(t - eta), eta={fit.eta}, mu={fit.mu:.4g}", shifted)],
            f"{REGIONS[fit.region]} ({fit.region}): {fit.indicator}", "count/day")
    return figs


def _index_html(cfg: PipelineConfig, model: IdentifiedModel, fits: list[LagScaleFit],
                errors, figures: Sequence[str]) -> str:
    e = html.escape
    rows = "\n".join(
        f"<tr><td>{r}</td><td>{e(REGIONS[r])}</td><td>{model.inits[r].f0:.6g}</td>"
        f"<td>{model.inits[r].delta0:.6g}</td><td>{model.weights[r]:.6g}</td></tr>"
        for r in model.regions)
    lag_rows = "\n".join(
        f"<tr><td>{f.region}</td><td>{e(f.indicator)}</td><td>{f.eta}</td><td>{f.mu:.6g}</td>"
        f"<td>{f.mse:.6g}</td></tr>" for f in fits)
    err_rows = "\n".join(f"<li>{r} {e(i)}: {e(m)}</li>" for r, i, m in errors)
    figs = "\n".join(f'<figure><img src="figures/{e(n)}" alt="{e(n)}"><figcaption>{e(n)}'
                     f"</figcaption></figure>" for n in figures)
    return f"""<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>covidfit report</title></head>
<body>
<h1>covidfit report</h1>
<p>window {e(str(cfg.window))}, smoothing {e(str(cfg.smoothing))}</p>
<h2>Global parameters</h2>
<table><tr><th>a</th><th>u</th><th>cost</th><th>warm-start cost</th><th>evals</th><th>stop</th></tr>
<tr><td>{model.params.a:.6e}</td><td>{model.params.u:.6e}</td><td>{model.cost:.6e}</td>
<td>{model.warm_start_cost:.6e}</td><td>{model.solver_evals}</td><td>{e(model.stop_reason)}</td></tr></table>
<h2>Initial conditions</h2>
<table><tr><th>region</th><th>name</th><th>f0</th><th>delta0</th><th>q</th></tr>
{rows}
</table>
<h2>Lag and scale fits</h2>
<p>Tables: <a href="lagfit.csv">lagfit.csv</a>, <a href="lagfit.json">lagfit.json</a>,
model: <a href="model.json">model.json</a></p>
<table><tr><th>region</th><th>indicator</th><th>eta</th><th>mu</th><th>mse</th></tr>
{lag_rows}
</table>
<ul>{err_rows}</ul>
<h2>Figures</h2>
{figs}
</body></html>
"""


def cmd_report(args, cfg: PipelineConfig) -> int:
    prepared = _prepare(cfg)
    model = _identify(cfg, {r: p.corrected for r, p in prepared.items()})
    report, measured, model_f = _validate(cfg, model)
    figures = _report_figures(prepared, model, report.fits, measured, model_f)
    out = cfg.output_dir / "report"
    outputs: dict[Path, bytes | str] = _prep_outputs(cfg, prepared, out)
    outputs[out / "model.json"] = model.to_json()
    outputs[out / "trajectories.csv"] = _trajectory_csv(model)
    outputs[out / "lagfit.csv"] = fits_table_csv(report.fits)
    outputs[out / "lagfit.json"] = fits_json(report)
    for name, svg in figures.items():
        outputs[out / "figures" / name] = svg
    outputs[out / "index.html"] = _index_html(cfg, model, report.fits, report.errors, sorted(figures))
    _write_all(outputs)
    print(f"a={model.params.a:.6e} u={model.params.u:.6e} cost={model.cost:.6e} "
          f"evals={model.solver_evals}")
    print(out / "index.html")
    return EXIT_OK


# --- entry point --------------------------------------------------------------

COMMANDS = {
    "ingest": cmd_ingest,
    "prep": cmd_prep,
    "identify": cmd_identify,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "plot": cmd_plot,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline configuration JSON")
    common.add_argument("--region", type=int, action="append", help="region code (repeatable)")
    common.add_argument("--window", help="fit window <start>:<end> (ISO dates)")
    common.add_argument("--smooth", help="moving average <days>:<centered|trailing>")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="covidfit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse raw source files to canonical CSV")
    p.add_argument("--source", action="append", metavar="ADAPTER=FILE",
                   help="adapter preset or JSON path, and the raw file (repeatable)")
    sub.add_parser("prep", parents=[common], help="build the smoothed and corrected series")
    p = sub.add_parser("identify", parents=[common], help="fit the model jointly across regions")
    p.add_argument("--prepared", help="prepared series CSV (default <out>/prepared.csv)")
    p = sub.add_parser("simulate", parents=[common], help="simulate a fitted model over --window")
    p.add_argument("--model", help="model JSON (default <out>/model.json)")
    p = sub.add_parser("validate", parents=[common], help="fit lag and scale of measured indicators")
    p.add_argument("--model", help="model JSON (default <out>/model.json)")
    p = sub.add_parser("plot", parents=[common], help="draw series as an SVG chart")
    p.add_argument("--series", action="append", metavar="REGION:INDICATOR")
    p.add_argument("--input", action="append", help="series CSV (repeatable)")
    p.add_argument("--name", help="figure file name without extension")
    p.add_argument("--title")
    sub.add_parser("report", parents=[common], help="prep, identify, validate and plot in one go")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except CliError as exc:
        print(f"covidfit {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    except SOLVER_ERRORS as exc:
        print(f"covidfit {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CovidFitError as exc:
        print(f"covidfit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
