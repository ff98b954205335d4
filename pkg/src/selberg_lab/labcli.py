"""Command-line driver: ``selberg-lab run`` and ``selberg-lab compare``.

Configuration comes from defaults, then a flat JSON file (``--config``),
then command-line flags, later sources winning.  Every emitted file
carries the fully resolved configuration.  Exit status is 0 on success,
2 for invalid input and 3 when a computation reports numerical trouble.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import critline, dirpoly, moments, tails
from .errors import NumericalDegeneracy
from .numkit import gaussian_tail
from .primes import table_for

EXPERIMENTS = ("poly-tail", "zeta-tail", "moments", "saddle", "hwang", "decay", "discrepancy")
FORMATS = ("csv", "json", "both")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DEGENERATE = 3

# fixed counter offsets for sub-seeds drawn from the master seed
SEED_OFFSET_SAMPLES = 0
SEED_OFFSET_REFERENCE = 1


class ConfigError(ValueError):
    """Invalid configuration; the message names the field (and file line)."""


@dataclass
class ExperimentConfig:
    experiment: str = "poly-tail"
    x: int | str = 100
    T: float = 1e6
    n_samples: int = 100_000
    seed: int = 0
    delta_min: float = 0.5
    delta_max: float = 2.0
    delta_step: float = 0.25
    a_threshold_mult: float = 1.0
    psi: float = 8.0
    output_dir: str = "."
    format: str = "both"
    k_max: int = 4
    abscissa: str = tails.RATIO
    grid: str = dirpoly.UNIFORM_RANDOM
    m: int = 50
    re_z: float = 1.0
    im_min: float = 3.0
    im_max: float = 5.5
    im_step: float = 0.25

    def resolved_x(self) -> int:
        return dirpoly.default_x(self.T) if self.x == "auto" else int(self.x)

    def delta_grid(self) -> list[float]:
        return _grid(self.delta_min, self.delta_max, self.delta_step)

    def im_grid(self) -> list[float]:
        return _grid(self.im_min, self.im_max, self.im_step)

    def resolved(self) -> dict:
        d = asdict(self)
        if self.x == "auto":
            d["x_requested"] = "auto"
        d["x"] = self.resolved_x()
        return d


def _grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 12) for i in range(n + 1)]


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_INT_FIELDS = {"n_samples", "seed", "k_max", "m"}
_FLOAT_FIELDS = {"T", "delta_min", "delta_max", "delta_step", "a_threshold_mult", "psi",
                 "re_z", "im_min", "im_max", "im_step"}


def _as_int(name: str, v) -> int:
    # accept 1e6-style input for counts
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}': expected an integer, got {v!r}") from None
    if not math.isfinite(f) or f != int(f):
        raise ConfigError(f"field '{name}': expected an integer, got {v!r}")
    return int(f)


def _as_float(name: str, v) -> float:
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}': expected a number, got {v!r}") from None
    if not math.isfinite(f):
        raise ConfigError(f"field '{name}': must be finite")
    return f


def _coerce(name: str, v):
    if name in _INT_FIELDS:
        return _as_int(name, v)
    if name in _FLOAT_FIELDS:
        return _as_float(name, v)
    if name == "x":
        return "auto" if v == "auto" else _as_int(name, v)
    return str(v)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    def bad(field_name, msg):
        raise ConfigError(f"field '{field_name}': {msg}")

    if cfg.experiment not in EXPERIMENTS:
        bad("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
    if cfg.format not in FORMATS:
        bad("format", f"must be one of {', '.join(FORMATS)}")
    if cfg.abscissa not in tails.ABSCISSAE:
        bad("abscissa", f"must be one of {', '.join(tails.ABSCISSAE)}")
    if cfg.grid not in dirpoly.GRIDS:
        bad("grid", f"must be one of {', '.join(dirpoly.GRIDS)}")
    if not cfg.T > math.e:
        bad("T", "must exceed e so that loglog T > 0")
    if cfg.x != "auto" and cfg.x < 2:
        bad("x", "must be >= 2 or 'auto'")
    if cfg.x == "auto" and dirpoly.default_x(cfg.T) < 2:
        bad("x", f"'auto' resolves to {dirpoly.default_x(cfg.T)} at T={cfg.T:g}; give x explicitly")
    if cfg.n_samples < 1:
        bad("n_samples", "must be >= 1")
    if cfg.seed < 0:
        bad("seed", "must be >= 0")
    if not cfg.delta_min < cfg.delta_max:
        bad("delta_min", "must be < delta_max")
    if not cfg.delta_step > 0:
        bad("delta_step", "must be > 0")
    if not cfg.a_threshold_mult > 0:
        bad("a_threshold_mult", "must be > 0")
    if cfg.psi < 5:
        bad("psi", "must be >= 5")
    if cfg.k_max < 0:
        bad("k_max", "must be >= 0")
    if cfg.m < 1:
        bad("m", "must be >= 1")
    if cfg.experiment == "moments" and cfg.k_max > 50 and cfg.n_samples > 0:
        bad("k_max", "empirical moments are limited to k <= 50")
    if cfg.experiment == "discrepancy":
        if cfg.k_max > 4:
            bad("k_max", "discrepancy moments are limited to k <= 4")
        if cfg.n_samples < 10_000:
            bad("n_samples", "discrepancy moments need n >= 10000")
    if cfg.experiment in ("zeta-tail", "discrepancy") and cfg.T < 1e3:
        bad("T", "zeta sampling needs T >= 1000")
    if cfg.experiment == "saddle" and cfg.delta_min <= 0:
        bad("delta_min", "saddle estimates need delta > 0")
    if cfg.experiment == "decay":
        if not cfg.im_min < cfg.im_max:
            bad("im_min", "must be < im_max")
        if not cfg.im_step > 0:
            bad("im_step", "must be > 0")
    return cfg


def _line_of(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


_KEY_ALIASES = {"n": "n_samples", "saddle_abscissa": "abscissa"}


def load_config_file(path) -> dict:
    """Read a flat JSON object of config keys; errors carry path and line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config file ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a flat JSON object")
    out = {}
    for key, value in raw.items():
        name = key.replace("-", "_")
        name = _KEY_ALIASES.get(name, name)
        where = f"{path}:{_line_of(text, key) or '?'}"
        if name not in _FIELD_TYPES:
            raise ConfigError(f"{where}: unknown field '{key}'")
        if isinstance(value, (dict, list)):
            raise ConfigError(f"{where}: field '{key}' must be a scalar")
        try:
            out[name] = _coerce(name, value)
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return out


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    for name in _FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = _coerce(name, v)
    return validate(ExperimentConfig(**values))


# --- experiments -------------------------------------------------------------------

@dataclass
class Artifact:
    kind: str
    payload: dict  # JSON body, config included
    csv_text: str
    summary: str


def _csv(header, rows, config: dict) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in row])
    return buf.getvalue()


def _fmt(v, spec=".6g"):
    return "-" if v is None else format(v, spec)


def tail_summary(report: tails.TailReport) -> str:
    lines = [f"{'delta':>8} {'empirical':>12} {'Q(delta)':>12} {'corrected':>12} {'ratio':>8}"]
    for d, e, g, c in zip(report.delta_grid, report.empirical, report.gaussian, report.corrected):
        ratio = None if e is None else e / g
        lines.append(f"{d:>8.4g} {_fmt(e):>12} {_fmt(g):>12} {_fmt(c):>12} {_fmt(ratio, '.4f'):>8}")
    frac = report.corrected_closer_fraction()
    if frac is not None:
        lines.append(f"corrected closer than Q(delta) at {frac:.0%} of grid points")
    return "\n".join(lines)


def _tail_artifact(report: tails.TailReport) -> Artifact:
    return Artifact("tail_report", report.to_dict(), report.csv_text(), tail_summary(report))


def _poly_tail(cfg: ExperimentConfig, conf: dict) -> Artifact:
    x = cfg.resolved_x()
    table = table_for(x)
    pc = dirpoly.PolyConfig(
        x=x, T=cfg.T, n_samples=cfg.n_samples, seed=cfg.seed + SEED_OFFSET_SAMPLES, grid=cfg.grid,
        a_threshold=cfg.a_threshold_mult * dirpoly.loglog(cfg.T),
    )
    batch = dirpoly.sample_poly(pc, table)
    prof = tails.MgfProfile.from_table(table)
    grid = cfg.delta_grid()
    counts = tails.tail_counts(batch.values, np.asarray(grid) * prof.sigma)
    n = len(batch)
    saddle = []
    for d in grid:
        ok = d > 0 and tails.saddle_abscissa(prof, d, cfg.abscissa) <= 4
        saddle.append(tails.saddle_tail(prof, d, cfg.psi, cfg.abscissa) if ok else None)
    conf["measure_Ac"] = dirpoly.measure_Ac(batch)
    report = tails.TailReport(
        delta_grid=grid,
        empirical=list(counts / n),
        gaussian=list(gaussian_tail(np.asarray(grid))),
        corrected=list(tails.corrected_tail(prof, np.asarray(grid), cfg.abscissa)),
        saddle_numeric=saddle,
        ci_halfwidth=[tails.wilson_halfwidth(int(k), n) for k in counts],
        config=conf, seed=cfg.seed,
    )
    return _tail_artifact(report)


def _zeta_tail(cfg: ExperimentConfig, conf: dict) -> Artifact:
    batch = critline.sample_log_zeta(cfg.T, cfg.n_samples, cfg.seed + SEED_OFFSET_SAMPLES)
    scale = math.sqrt(0.5 * dirpoly.loglog(cfg.T))
    grid = cfg.delta_grid()
    counts = tails.tail_counts(batch.values, np.asarray(grid) * scale)
    n = len(batch)
    conf["redraws"] = batch.redraws
    report = tails.TailReport(
        delta_grid=grid,
        empirical=list(counts / n),
        gaussian=list(gaussian_tail(np.asarray(grid))),
        corrected=[None] * len(grid),
        saddle_numeric=[None] * len(grid),
        ci_halfwidth=[tails.wilson_halfwidth(int(k), n) for k in counts],
        config=conf, seed=cfg.seed,
    )
    return _tail_artifact(report)


def _saddle(cfg: ExperimentConfig, conf: dict) -> Artifact:
    # no sampling: the "empirical" column is the exact distribution tail
    prof = tails.MgfProfile.from_table(table_for(cfg.resolved_x()))
    grid = cfg.delta_grid()
    for d in grid:
        if tails.saddle_abscissa(prof, d, cfg.abscissa) > 4:
            raise ConfigError(f"field 'delta_max': abscissa above 4 at delta={d:g}")
    conf["empirical_source"] = "exact_distribution"
    report = tails.TailReport(
        delta_grid=grid,
        empirical=list(tails.exact_tail(prof, np.asarray(grid))),
        gaussian=list(gaussian_tail(np.asarray(grid))),
        corrected=list(tails.corrected_tail(prof, np.asarray(grid), cfg.abscissa)),
        saddle_numeric=[tails.saddle_tail(prof, d, cfg.psi, cfg.abscissa) for d in grid],
        ci_halfwidth=[0.0] * len(grid),
        config=conf, seed=cfg.seed,
    )
    return _tail_artifact(report)


def _hwang(cfg: ExperimentConfig, conf: dict) -> Artifact:
    amps = np.ones(cfg.m)
    prof = tails.MgfProfile.from_amplitudes(amps)
    grid = cfg.delta_grid()
    pairs = tails.hwang_check(amps, grid, cfg.n_samples, cfg.seed + SEED_OFFSET_SAMPLES)
    sim = [s for _, s in pairs]
    saddle = []
    for d in grid:
        ok = d > 0 and tails.saddle_abscissa(prof, d, cfg.abscissa) <= 4
        saddle.append(tails.saddle_tail(prof, d, cfg.psi, cfg.abscissa) if ok else None)
    conf["model"] = f"sum of {cfg.m} unit-amplitude random-phase cosines"
    report = tails.TailReport(
        delta_grid=grid,
        empirical=sim,
        gaussian=[p for p, _ in pairs],
        corrected=list(tails.corrected_tail(prof, np.asarray(grid), cfg.abscissa)),
        saddle_numeric=saddle,
        ci_halfwidth=[tails.wilson_halfwidth(int(round(s * cfg.n_samples)), cfg.n_samples) for s in sim],
        config=conf, seed=cfg.seed,
    )
    return _tail_artifact(report)


def _moments(cfg: ExperimentConfig, conf: dict) -> Artifact:
    x = cfg.resolved_x()
    table = table_for(x)
    pc = dirpoly.PolyConfig(
        x=x, T=cfg.T, n_samples=cfg.n_samples, seed=cfg.seed + SEED_OFFSET_SAMPLES, grid=cfg.grid,
        a_threshold=cfg.a_threshold_mult * dirpoly.loglog(cfg.T),
    )
    batch = dirpoly.sample_poly(pc, table)
    mt = moments.moment_table(table, cfg.k_max, batch)
    rows = list(mt.rows())
    payload = {
        "config": conf,
        "seed": cfg.seed,
        "x": x,
        "moments": [{"k": k, "exact": e, "empirical": m, "stderr": s} for k, e, m, s in rows],
    }
    lines = [f"{'k':>3} {'exact':>14} {'empirical':>14} {'stderr':>12}"]
    lines += [f"{k:>3} {e:>14.8g} {m:>14.8g} {s:>12.4g}" for k, e, m, s in rows]
    text = _csv(["k", "exact", "empirical", "stderr"], rows, conf)
    return Artifact("moment_table", payload, text, "\n".join(lines))


def _decay(cfg: ExperimentConfig, conf: dict) -> Artifact:
    table = table_for(cfg.resolved_x())
    grid = cfg.im_grid()
    vals = tails.bessel_decay_check(table, cfg.re_z, grid)
    fit = tails.decay_envelope_fit(grid, vals)
    payload = {
        "config": conf,
        "seed": cfg.seed,
        "im": grid,
        "abs_product": [float(v) for v in vals],
        "quadratic_fit": [float(c) for c in fit],
    }
    lines = [f"{'Im z':>8} {'|product|':>14}"] + [f"{y:>8.4g} {v:>14.6e}" for y, v in zip(grid, vals)]
    lines.append(f"log-envelope quadratic coefficient {fit[0]:.6g}")
    text = _csv(["im", "abs_product"], zip(grid, vals), conf)
    return Artifact("decay", payload, text, "\n".join(lines))


def _discrepancy(cfg: ExperimentConfig, conf: dict) -> Artifact:
    ks = list(range(cfg.k_max + 1))
    res = tails.discrepancy_moments(cfg.T, cfg.resolved_x(), cfg.n_samples, ks, cfg.seed + SEED_OFFSET_SAMPLES)
    payload = {
        "config": conf,
        "seed": cfg.seed,
        "k": ks,
        "moments": res.moments,
        "bound_shape": res.bound_shape,
        "A_fit": res.A_fit,
        "dropped": res.dropped,
        "n_used": res.n_used,
    }
    lines = [f"{'k':>3} {'moment':>14} {'bound shape':>14}"]
    lines += [f"{k:>3} {m:>14.6g} {b:>14.6g}" for k, m, b in zip(ks, res.moments, res.bound_shape)]
    lines.append(f"A fit {res.A_fit:.4g}; dropped {res.dropped} near-zero samples")
    text = _csv(["k", "moment", "bound_shape"], zip(ks, res.moments, res.bound_shape), conf)
    return Artifact("discrepancy", payload, text, "\n".join(lines))


_RUNNERS = {
    "poly-tail": _poly_tail,
    "zeta-tail": _zeta_tail,
    "moments": _moments,
    "saddle": _saddle,
    "hwang": _hwang,
    "decay": _decay,
    "discrepancy": _discrepancy,
}


def execute(cfg: ExperimentConfig) -> Artifact:
    """Run one experiment in memory; no files are written."""
    return _RUNNERS[cfg.experiment](cfg, cfg.resolved())


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")


def write_artifact(art: Artifact, cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    exts = {"csv": ["csv"], "json": ["json"], "both": ["json", "csv"]}[cfg.format]
    while True:
        stem = f"{cfg.experiment}-{_timestamp()}-{cfg.seed}"
        paths = [out / f"{stem}.{e}" for e in exts]
        if not any(p.exists() for p in paths):
            break
    for p in paths:
        if p.suffix == ".json":
            p.write_text(json.dumps(art.payload, indent=2, sort_keys=True) + "\n")
        else:
            p.write_text(art.csv_text)
    return paths


def cmd_run(args) -> int:
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        art = execute(cfg)
    except NumericalDegeneracy as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        paths = write_artifact(art, cfg)
    except OSError as exc:
        print(f"cannot write to output dir {cfg.output_dir}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INVALID
    print(art.summary)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


# --- compare ---------------------------------------------------------------------------

def _load_report(path) -> tails.TailReport:
    try:
        return tails.TailReport.from_json(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: not a readable tail report ({exc})") from None


def compare_reports(a: tails.TailReport, b: tails.TailReport) -> dict:
    """Per-delta ratios of the empirical columns (a / b) and closeness counts."""
    if len(a.delta_grid) != len(b.delta_grid) or not np.allclose(a.delta_grid, b.delta_grid, rtol=0, atol=1e-9):
        raise ConfigError("reports are on different delta grids")
    ratios = []
    for ea, eb in zip(a.empirical, b.empirical):
        if ea is None or eb is None:
            ratios.append(None)
        elif eb == 0:
            ratios.append(1.0 if ea == 0 else math.inf)
        else:
            ratios.append(ea / eb)
    devs = [abs(r - 1) for r in ratios if r is not None]
    return {
        "delta": a.delta_grid,
        "ratio": ratios,
        "max_deviation": max(devs) if devs else None,
        "corrected_closer_a": a.corrected_closer_fraction(),
        "corrected_closer_b": b.corrected_closer_fraction(),
    }


def cmd_compare(args) -> int:
    try:
        res = compare_reports(_load_report(args.report_a), _load_report(args.report_b))
    except (ConfigError, ValueError) as exc:
        print(f"compare: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{'delta':>8} {'ratio a/b':>12}")
    for d, r in zip(res["delta"], res["ratio"]):
        print(f"{d:>8.4g} {_fmt(r, '.6f'):>12}")
    print(f"max |ratio - 1| = {_fmt(res['max_deviation'], '.3g')}")
    for tag in ("a", "b"):
        frac = res[f"corrected_closer_{tag}"]
        if frac is not None:
            print(f"report {tag}: corrected closer than Q(delta) at {frac:.0%} of grid points")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selberg-lab", description="Tail and moment experiments for prime Dirichlet polynomials and log|zeta|.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment and write its report")
    r.add_argument("--config", help="flat JSON file of config keys")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    r.add_argument("--x", help="polynomial length, or 'auto' for default_x(T)")
    r.add_argument("--T")
    r.add_argument("--n", dest="n_samples", help="sample count (1e6 style accepted)")
    r.add_argument("--seed")
    r.add_argument("--delta-min", dest="delta_min")
    r.add_argument("--delta-max", dest="delta_max")
    r.add_argument("--delta-step", dest="delta_step")
    r.add_argument("--a-threshold-mult", dest="a_threshold_mult")
    r.add_argument("--psi")
    r.add_argument("--output-dir", dest="output_dir")
    r.add_argument("--format", choices=FORMATS)
    r.add_argument("--k-max", dest="k_max")
    r.add_argument("--abscissa", choices=tails.ABSCISSAE)
    r.add_argument("--grid", choices=dirpoly.GRIDS)
    r.add_argument("--m", help="number of cosines in the hwang model")
    r.add_argument("--re-z", dest="re_z")
    r.add_argument("--im-min", dest="im_min")
    r.add_argument("--im-max", dest="im_max")
    r.add_argument("--im-step", dest="im_step")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("compare", help="ratio table of two tail reports")
    c.add_argument("report_a")
    c.add_argument("report_b")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
