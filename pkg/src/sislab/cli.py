"""Command-line front end.

    sislab <experiment> [--config run.json] [flags]

Experiments: simulate, convergence, compare, stability, moments, violations, bench.
Flags override values from the JSON config file. Exit status: 0 success,
2 usage, 3 validation, 4 I/O, 5 engine failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__, analysis, model, noise, schemes
from .analysis import EngineError, ReferenceMode
from .model import SISParams
from .schemes import SchemeKind

EXPERIMENTS = ("simulate", "convergence", "compare", "stability", "moments", "violations", "bench")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO, EXIT_ENGINE = 0, 2, 3, 4, 5

_CONFIG_KEYS = {
    "experiment": None,
    "params": set(model.PARAM_KEYS),
    "grid": {"T", "dt", "dt_list", "ref_dt"},
    "n_paths": None,
    "master_seed": None,
    "scheme": None,
    "reference": None,
    "q": None,
    "p_list": None,
    "threads": None,
    "output": {"directory", "format"},
}


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


@dataclass
class RunConfig:
    experiment: str
    params: SISParams
    I0: float
    T: float = 1.0
    dt: Optional[float] = None
    dt_list: Optional[tuple] = None
    ref_dt: Optional[float] = None
    n_paths: int = 1000
    master_seed: int = 0
    scheme: SchemeKind = SchemeKind.SEMI_DISCRETE
    reference: ReferenceMode = ReferenceMode.SELF_FINEST
    q: float = 1.0
    p_list: tuple = (1.0, 2.0, 4.0)
    threads: int = 1
    output_dir: Path = field(default_factory=lambda: Path("."))
    output_format: str = "csv"

    def to_dict(self) -> dict:
        """Config-file form of this run (round-trips through :func:`parse_and_validate`)."""
        return {
            "experiment": self.experiment,
            "params": dict(self.params.as_dict(), I0=self.I0),
            "grid": {"T": self.T, "dt": self.dt,
                     "dt_list": None if self.dt_list is None else list(self.dt_list),
                     "ref_dt": self.ref_dt},
            "n_paths": self.n_paths,
            "master_seed": self.master_seed,
            "scheme": self.scheme.value,
            "reference": self.reference.value,
            "q": self.q,
            "p_list": list(self.p_list),
            "threads": self.threads,
            "output": {"directory": str(self.output_dir), "format": self.output_format},
        }


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    for name in ("beta", "gamma", "b", "K", "sigma", "I0"):
        g.add_argument(f"--{name}", type=float, default=None)
    g = common.add_argument_group("experiment")
    g.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    g.add_argument("--T", type=float, default=None, help="time horizon")
    g.add_argument("--dt", type=float, default=None, help="step size")
    g.add_argument("--dt-list", type=_float_list, default=None, help="step sizes, e.g. 0.01,0.005")
    g.add_argument("--ref-dt", type=float, default=None, help="reference step for convergence runs")
    g.add_argument("--paths", dest="n_paths", type=int, default=None)
    g.add_argument("--seed", dest="master_seed", type=int, default=None)
    g.add_argument("--scheme", choices=[s.value for s in SchemeKind], default=None)
    g.add_argument("--reference", choices=["self", "gy"], default=None)
    g.add_argument("--q", type=float, default=None, help="error norm exponent")
    g.add_argument("--p-list", type=_float_list, default=None, help="moment orders")
    g.add_argument("--threads", type=int, default=None, help="worker threads (0 = auto)")
    g.add_argument("--out", dest="output_dir", type=Path, default=None, help="output directory")
    g.add_argument("--format", dest="output_format", choices=["csv", "json", "both"], default=None)

    parser = _Parser(prog="sislab", description="Stochastic SIS scheme laboratory")
    parser.add_argument("--version", action="version", version=f"sislab {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    return parser


def _read_config(path: Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    for key, sub in doc.items():
        if key not in _CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        allowed = _CONFIG_KEYS[key]
        if allowed is not None:
            if not isinstance(sub, dict):
                raise UsageError(f"config key {key!r} must hold an object")
            for inner in sub:
                if inner not in allowed:
                    raise UsageError(f"unknown config key {key}.{inner!r}")
    return doc


def _flatten(doc: dict) -> dict:
    flat = {}
    for key, value in doc.items():
        if key == "params":
            flat.update(value)
        elif key == "grid":
            flat.update(value)
        elif key == "output":
            if "directory" in value:
                flat["output_dir"] = value["directory"]
            if "format" in value:
                flat["output_format"] = value["format"]
        elif key == "reference":
            flat["reference"] = value
        else:
            flat[key] = value
    return flat


def _number(values, key, cast=float):
    v = values.get(key)
    if v is None:
        return None
    if isinstance(v, bool):
        raise ValidationError(f"{key} must be a number, got {v!r}")
    try:
        out = cast(v)
    except (TypeError, ValueError):
        raise ValidationError(f"{key} must be a number, got {v!r}")
    if cast is int and out != v:
        raise ValidationError(f"{key} must be an integer, got {v!r}")
    if cast is float and not math.isfinite(out):
        raise ValidationError(f"{key} must be finite, got {v!r}")
    return out


def _is_dyadic(T, steps) -> bool:
    counts = []
    for h in steps:
        n = T / h
        if abs(n - round(n)) > 1e-9 * max(1.0, n) or round(n) < 1:
            return False
        counts.append(int(round(n)))
    top = max(counts)
    return all(top % c == 0 and (top // c) & (top // c - 1) == 0 for c in counts)


def parse_and_validate(argv, config_path: Optional[Path] = None) -> RunConfig:
    """Resolve command-line flags and an optional config file into a :class:`RunConfig`.

    Raises :class:`UsageError` for unknown flags or keys and
    :class:`ValidationError` naming the offending key for invalid values.
    """
    args = build_parser().parse_args(argv)
    config_path = args.config or config_path
    values = _flatten(_read_config(config_path)) if config_path else {}
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            values[key] = value

    raw = {}
    for key in model.PARAM_KEYS:
        v = _number(values, key)
        if v is None:
            raise ValidationError(f"missing required parameter {key}")
        raw[key] = v
    try:
        params, I0 = model.load_params(raw)
    except model.ParameterError as exc:
        raise ValidationError(str(exc))

    cfg = RunConfig(experiment=args.experiment, params=params, I0=I0)
    T = _number(values, "T")
    if T is not None:
        cfg.T = T
    if not cfg.T > 0:
        raise ValidationError(f"T must be > 0, got {cfg.T}")
    cfg.dt = _number(values, "dt")
    if values.get("dt_list") is not None:
        if not isinstance(values["dt_list"], (list, tuple)) or not values["dt_list"]:
            raise ValidationError("dt_list must be a non-empty list of step sizes")
        cfg.dt_list = tuple(_number({"dt_list": v}, "dt_list") for v in values["dt_list"])
    cfg.ref_dt = _number(values, "ref_dt")
    for key in ("n_paths", "master_seed", "threads"):
        v = _number(values, key, int)
        if v is not None:
            setattr(cfg, key, v)
    if cfg.n_paths < 1:
        raise ValidationError(f"n_paths must be >= 1, got {cfg.n_paths}")
    if not 0 <= cfg.master_seed < 2 ** 64:
        raise ValidationError(f"master_seed must be a 64-bit unsigned integer, got {cfg.master_seed}")
    if cfg.threads < 0:
        raise ValidationError(f"threads must be >= 0, got {cfg.threads}")
    try:
        if values.get("scheme") is not None:
            cfg.scheme = SchemeKind.parse(values["scheme"])
        if values.get("reference") is not None:
            cfg.reference = ReferenceMode.parse(values["reference"])
            if cfg.reference is ReferenceMode.LOGISTIC_EXACT:
                raise noise.ArgumentError("reference must be self or gy")
    except noise.ArgumentError as exc:
        raise ValidationError(f"{'scheme' if 'scheme' in str(exc) else 'reference'}: {exc}")
    q = _number(values, "q")
    if q is not None:
        cfg.q = q
    if not cfg.q > 0:
        raise ValidationError(f"q must be > 0, got {cfg.q}")
    if values.get("p_list") is not None:
        cfg.p_list = tuple(_number({"p_list": v}, "p_list") for v in values["p_list"])
        if not cfg.p_list or any(not p > 0 for p in cfg.p_list):
            raise ValidationError("p_list must contain positive moment orders")
    if values.get("output_dir") is not None:
        cfg.output_dir = Path(values["output_dir"])
    if values.get("output_format") is not None:
        if values["output_format"] not in ("csv", "json", "both"):
            raise ValidationError(f"output format must be csv, json or both, got {values['output_format']!r}")
        cfg.output_format = values["output_format"]
    _validate_grid(cfg)
    return cfg


def _validate_grid(cfg: RunConfig):
    exp = cfg.experiment
    for key in ("dt", "ref_dt"):
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            raise ValidationError(f"{key} must be > 0, got {v}")
    if cfg.dt_list is not None and any(not h > 0 for h in cfg.dt_list):
        raise ValidationError("dt_list entries must be > 0")
    if exp in ("simulate", "stability", "moments"):
        if cfg.dt is None:
            raise ValidationError(f"dt is required for {exp}")
        if not _is_dyadic(cfg.T, [cfg.dt]):
            raise ValidationError(f"dt={cfg.dt} must divide T={cfg.T}")
    elif exp in ("compare", "violations"):
        if cfg.dt_list is None and cfg.dt is None:
            raise ValidationError(f"dt or dt_list is required for {exp}")
        steps = cfg.dt_list or (cfg.dt,)
        for h in steps:
            if not _is_dyadic(cfg.T, [h]):
                raise ValidationError(f"dt_list entry {h} must divide T={cfg.T}")
    else:  # convergence, bench
        if cfg.dt_list is None:
            raise ValidationError(f"dt_list is required for {exp}")
        if len(cfg.dt_list) < 3:
            raise ValidationError("dt_list needs at least 3 step sizes")
        ref = cfg.ref_dt if cfg.ref_dt is not None else min(cfg.dt_list) / (
            8 if cfg.reference is ReferenceMode.SELF_FINEST or exp == "bench" else 1)
        if not _is_dyadic(cfg.T, list(cfg.dt_list) + [ref]):
            raise ValidationError("dt_list entries (and ref_dt) must form a dyadic chain dividing T")
        if cfg.n_paths < 100:
            raise ValidationError(f"n_paths must be >= 100 for {exp}, got {cfg.n_paths}")


# --- execution -------------------------------------------------------------------------------

def _emit(cfg: RunConfig, stem: str, report, written: list):
    if cfg.output_format in ("csv", "both"):
        name = f"{stem}.csv"
        report.to_csv(cfg.output_dir / name)
        written.append(name)
    if cfg.output_format in ("json", "both"):
        name = f"{stem}.json"
        report.to_json(cfg.output_dir / name)
        written.append(name)


class _TrajectoryExport:
    def __init__(self, traj, cfg):
        self.traj, self.cfg = traj, cfg

    def to_csv(self, dest):
        self.traj.to_csv(dest)

    def to_json(self, dest):
        t = self.traj
        doc = {"scheme": t.scheme.value, "times": t.times, "states_I": t.states_I,
               "states_internal": t.states_internal, "domain_violations": t.domain_violations,
               "failed_at": t.failed_at, "saturations": t.saturations}
        Path(dest).write_text(json.dumps(analysis._jsonable(doc), indent=2) + "\n",
                              encoding="utf-8", newline="")


class _CompareExport:
    def __init__(self, reports, cfg):
        self.reports, self.cfg = reports, cfg
        steps = [r.dt for r in reports]
        means = [r.mean_sup for r in reports]
        self.slope, self.intercept = analysis.fit_order(steps, means) if len(steps) >= 2 else (math.nan, math.nan)

    def to_csv(self, dest):
        label = f"{self.cfg.scheme.value}-gy"
        rows = [(label, r.dt, r.mean_sup, r.ci_half, self.slope, self.intercept, r.n_paths, r.master_seed)
                for r in self.reports]
        Path(dest).write_text(analysis._csv_text(rows), encoding="utf-8", newline="")

    def to_json(self, dest):
        doc = {"reports": list(self.reports), "order_fit_slope": self.slope,
               "order_fit_intercept": self.intercept}
        Path(dest).write_text(json.dumps(analysis._jsonable(doc), indent=2) + "\n",
                              encoding="utf-8", newline="")

    def summary(self):
        parts = "; ".join(r.summary() for r in self.reports)
        return f"{parts} Fitted slope {self.slope:.4f}."


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration; write outputs and a manifest under ``cfg.output_dir``."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    p, I0, seed, th = cfg.params, cfg.I0, cfg.master_seed, cfg.threads
    written: list = []
    exp = cfg.experiment
    if exp == "simulate":
        grid = noise.generate(seed, 0, analysis._n_steps(cfg.T, cfg.dt), cfg.dt)
        traj = schemes.simulate(p, cfg.scheme, I0, grid)
        _emit(cfg, "trajectory", _TrajectoryExport(traj, cfg), written)
        summary = (f"{cfg.scheme.name} path over T={cfg.T:g} with dt={cfg.dt:g}: "
                   f"I(T) = {traj.states_I[-1]:.6g}, {traj.domain_violations} domain violations"
                   + (f", failed at node {traj.failed_at}" if traj.failed else "") + ".")
    elif exp == "convergence":
        rep = analysis.strong_error(p, cfg.scheme, I0, cfg.T, cfg.dt_list, cfg.n_paths, cfg.reference,
                                    seed, cfg.q, cfg.ref_dt, th)
        _emit(cfg, "convergence", rep, written)
        summary = rep.summary()
    elif exp == "compare":
        reps = [analysis.scheme_difference(p, I0, cfg.T, h, cfg.n_paths, seed, cfg.scheme,
                                           SchemeKind.GRAY_YANG, threads=th)
                for h in (cfg.dt_list or (cfg.dt,))]
        out = _CompareExport(reps, cfg)
        _emit(cfg, "compare", out, written)
        summary = out.summary()
    elif exp == "stability":
        rep = analysis.stability_experiment(p, I0, cfg.T, cfg.dt, cfg.n_paths, seed, threads=th)
        _emit(cfg, "stability", rep, written)
        summary = rep.summary()
    elif exp == "moments":
        rep = analysis.moment_check(p, I0, cfg.T, cfg.dt, cfg.n_paths, cfg.p_list, seed, threads=th)
        _emit(cfg, "moments", rep, written)
        summary = rep.summary()
    elif exp == "violations":
        rep = analysis.domain_violation_census(p, I0, cfg.T, cfg.dt_list or (cfg.dt,), cfg.n_paths,
                                               seed, threads=th)
        _emit(cfg, "violations", rep, written)
        summary = rep.summary()
    else:
        rep = analysis.bench_error_vs_time(p, I0, cfg.T, cfg.dt_list, cfg.n_paths, seed,
                                           ref_dt=cfg.ref_dt, threads=th)
        _emit(cfg, "bench", rep, written)
        rep.timing_csv(cfg.output_dir / "bench_timing.csv")
        written.append("bench_timing.csv")
        summary = rep.summary()

    manifest = {"sislab_version": __version__, "config": cfg.to_dict(), "outputs": written}
    (cfg.output_dir / "run_manifest.json").write_text(
        json.dumps(analysis._jsonable(manifest), indent=2) + "\n", encoding="utf-8", newline="")
    print(summary)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_and_validate(argv)
    except UsageError as exc:
        print(f"sislab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"sislab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"sislab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return run(cfg)
    except OSError as exc:
        print(f"sislab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EngineError as exc:
        print(f"sislab: engine failure: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except (noise.ArgumentError, model.DomainError, model.ParameterError) as exc:
        print(f"sislab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
