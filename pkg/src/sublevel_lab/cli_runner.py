"""Command-line runner: configuration, experiment pipeline and report files.

Configuration is an INI file.  Sections and keys (defaults in brackets):

``[phase]``
    ``name`` [power]; any catalog parameter (``m``, ``n``, ``R``, ``slopes``,
    ...); ``l`` cutoff height [chosen automatically]; ``K`` table nodes [512].
``[amplitude]``
    ``kind`` = constant | taper [constant]; ``c`` for constants [1.0].
``[lambda]``
    ``min`` [10], ``max`` [10000], ``count`` [25], ``spacing`` = log | linear
    [log]; ``value`` for the single-frequency ``oscint`` command [100].
``[checks]``
    booleans ``assumption``, ``symmetrization``, ``sweep``, ``ledger``
    [true] and ``prop1`` [false]; ``prop1_c_count`` [11] and
    ``prop1_eps_count`` [12] size the band grid.
``[output]``
    ``dir`` [out].
``[tolerances]``
    ``ratio_slack`` [1e-6], ``ledger_rtol`` [1e-8], ``alpha_rtol`` [1e-8].
``[run]``
    ``jobs`` [1], ``assert_pass`` [false].

Values are parsed as Python literals when possible, so lists and numbers
need no special syntax.  Exit status: 0 success, 1 an asserted invariant
failed, 2 configuration error, 3 numerical failure (files written so far
are kept).
"""
from __future__ import annotations

import argparse
import ast
import configparser
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bound_verifier as bv
from .errors import ConfigError, PhaseValidationError, SublevelLabError
from .oscillatory_quadrature import oscint_coarea, oscint_direct
from .phase_catalog import CATALOG, RadialProfile, build_phase, constant_amplitude, linear_taper
from .sublevel_geometry import (
    DEFAULT_K,
    build_sublevel_table,
    check_geometric_assumption,
    radial_density_derivative,
)
from .symmetrization import (
    build_rearrangement,
    build_T,
    check_equimeasurable,
    check_g_concave,
    check_g_inv_convex,
    equimeasurability_tolerance,
    round_trip_error,
)

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

SECTIONS = ("phase", "amplitude", "lambda", "checks", "output", "tolerances", "run")
CHECKS = ("assumption", "symmetrization", "sweep", "ledger", "prop1")
TOLERANCE_KEYS = {"ratio_slack": 1e-6, "ledger_rtol": 1e-8, "alpha_rtol": 1e-8}


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    phase_name: str = "power"
    phase_params: dict = field(default_factory=dict)
    l: float | None = None
    K: int = DEFAULT_K
    amplitude_kind: str = "constant"
    amplitude_c: float = 1.0
    lam_min: float = 10.0
    lam_max: float = 1e4
    lam_count: int = 25
    lam_spacing: str = "log"
    lam_value: float = 100.0
    checks: dict = field(default_factory=lambda: {c: c != "prop1" for c in CHECKS})
    prop1_c_count: int = 11
    prop1_eps_count: int = 12
    out_dir: str = "out"
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCE_KEYS))
    jobs: int = 1
    assert_pass: bool = False

    def lambda_grid(self) -> np.ndarray:
        if self.lam_spacing == "log":
            return np.geomspace(self.lam_min, self.lam_max, self.lam_count)
        return np.linspace(self.lam_min, self.lam_max, self.lam_count)

    def validate(self) -> "ExperimentConfig":
        if self.phase_name not in CATALOG:
            raise ConfigError(f"[phase] name: unknown catalog phase {self.phase_name!r}; known: {sorted(CATALOG)}")
        unknown = set(self.phase_params) - set(CATALOG[self.phase_name].defaults)
        if unknown:
            raise ConfigError(f"[phase] unknown parameter(s) for {self.phase_name!r}: {sorted(unknown)}")
        if self.amplitude_kind not in ("constant", "taper"):
            raise ConfigError(f"[amplitude] kind: expected 'constant' or 'taper', got {self.amplitude_kind!r}")
        if not self.lam_min > 0:
            raise ConfigError("[lambda] min must be > 0")
        if self.lam_count < 1:
            raise ConfigError("[lambda] count must be >= 1")
        if self.lam_max < self.lam_min:
            raise ConfigError("[lambda] max must be >= min")
        if self.lam_spacing not in ("log", "linear"):
            raise ConfigError(f"[lambda] spacing: expected 'log' or 'linear', got {self.lam_spacing!r}")
        if self.jobs < 1:
            raise ConfigError("[run] jobs must be >= 1")
        if self.K < 8:
            raise ConfigError("[phase] K must be >= 8")
        return self


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text.strip()


def _bool(value, where: str) -> bool:
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {value!r}")


def _num(value, where: str, kind=float):
    try:
        v = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {kind.__name__}, got {value!r}") from None
    if kind is float and not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    return v


def config_from_parser(cp: configparser.ConfigParser) -> ExperimentConfig:
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown config section(s): {unknown}")
    cfg = ExperimentConfig()
    if cp.has_section("phase"):
        sec = {k: _literal(v) for k, v in cp.items("phase")}
        cfg.phase_name = str(sec.pop("name", cfg.phase_name))
        if "l" in sec:
            cfg.l = _num(sec.pop("l"), "[phase] l")
        if "k" in sec:
            cfg.K = _num(sec.pop("k"), "[phase] K", int)
        # catalog keys are case sensitive (R); configparser lowercases them
        keys = {k.lower(): k for k in CATALOG.get(cfg.phase_name, CATALOG["power"]).defaults}
        cfg.phase_params = {keys.get(k, k): v for k, v in sec.items()}
    if cp.has_section("amplitude"):
        sec = dict(cp.items("amplitude"))
        cfg.amplitude_kind = sec.pop("kind", cfg.amplitude_kind).strip()
        if "c" in sec:
            cfg.amplitude_c = _num(sec.pop("c"), "[amplitude] c")
        if sec:
            raise ConfigError(f"[amplitude] unknown key(s): {sorted(sec)}")
    if cp.has_section("lambda"):
        sec = dict(cp.items("lambda"))
        for key, attr, kind in (("min", "lam_min", float), ("max", "lam_max", float),
                                ("count", "lam_count", int), ("value", "lam_value", float)):
            if key in sec:
                setattr(cfg, attr, _num(sec.pop(key), f"[lambda] {key}", kind))
        cfg.lam_spacing = sec.pop("spacing", cfg.lam_spacing).strip()
        if sec:
            raise ConfigError(f"[lambda] unknown key(s): {sorted(sec)}")
    if cp.has_section("checks"):
        for key, value in cp.items("checks"):
            if key in CHECKS:
                cfg.checks[key] = _bool(value, f"[checks] {key}")
            elif key in ("prop1_c_count", "prop1_eps_count"):
                setattr(cfg, key, _num(value, f"[checks] {key}", int))
            else:
                raise ConfigError(f"[checks] unknown key {key!r}")
    if cp.has_section("output"):
        sec = dict(cp.items("output"))
        cfg.out_dir = sec.pop("dir", cfg.out_dir)
        if sec:
            raise ConfigError(f"[output] unknown key(s): {sorted(sec)}")
    if cp.has_section("tolerances"):
        for key, value in cp.items("tolerances"):
            if key not in TOLERANCE_KEYS:
                raise ConfigError(f"[tolerances] unknown key {key!r}; known: {sorted(TOLERANCE_KEYS)}")
            cfg.tolerances[key] = _num(value, f"[tolerances] {key}")
    if cp.has_section("run"):
        sec = dict(cp.items("run"))
        if "jobs" in sec:
            cfg.jobs = _num(sec.pop("jobs"), "[run] jobs", int)
        if "assert_pass" in sec:
            cfg.assert_pass = _bool(sec.pop("assert_pass"), "[run] assert_pass")
        if sec:
            raise ConfigError(f"[run] unknown key(s): {sorted(sec)}")
    return cfg.validate()


def load_config(path: str | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read an INI file (optional) and apply ``section.key=value`` overrides."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path!r}: {exc}") from None
    for item in overrides or []:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value.strip())
    return config_from_parser(cp)


# --------------------------------------------------------------------------
# emission helpers
# --------------------------------------------------------------------------


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    return obj


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------


@dataclass
class RunOutcome:
    status: int
    files: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)


class _Pipeline:
    """Lazily built objects shared by the steps of one run."""

    def __init__(self, cfg: ExperimentConfig, outcome: RunOutcome):
        self.cfg = cfg
        self.outcome = outcome
        self._phase = self._table = self._verdict = self._sweep = None
        os.makedirs(cfg.out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.cfg.out_dir, name)
        self.outcome.files.append(p)
        return p

    def fail(self, msg: str) -> None:
        self.outcome.failures.append(msg)

    @property
    def phase(self):
        if self._phase is None:
            try:
                self._phase = build_phase(self.cfg.phase_name, **self.cfg.phase_params)
            except PhaseValidationError:
                raise
            except SublevelLabError as exc:
                # bad catalog parameters are a configuration problem
                raise ConfigError(f"[phase] {exc}") from None
        return self._phase

    @property
    def table(self):
        if self._table is None:
            self._table = build_sublevel_table(self.phase, l=self.cfg.l, K=self.cfg.K)
        return self._table

    @property
    def amplitude(self):
        if self.cfg.amplitude_kind == "taper":
            return linear_taper(self.table.l)
        return constant_amplitude(self.table.l, self.cfg.amplitude_c)

    @property
    def verdict(self):
        if self._verdict is None:
            self._verdict = check_geometric_assumption(self.phase, self.table)
        return self._verdict

    @property
    def passing(self) -> bool:
        return self.verdict.overall

    # ---- steps -----------------------------------------------------------

    def step_assumption(self):
        d = self.verdict.as_dict()
        d["phase"] = self.cfg.phase_name
        d["expected"] = getattr(self.phase, "classification", None)
        d["l"] = self.table.l
        write_json(self.path("assumption.json"), d)
        self.outcome.messages.append(f"assumption: {d['overall']} (routes agree: {d['agree']})")
        if not self.verdict.agree:
            self.fail("assumption routes disagree")
        if self.cfg.assert_pass and not self.passing:
            self.fail("geometric assumption fails but pass was asserted")

    def step_table(self):
        t = self.table
        jprime = None
        if isinstance(self.phase, RadialProfile):
            jprime = np.full_like(t.nodes, np.nan)
            with np.errstate(all="ignore"):
                jprime[1:] = radial_density_derivative(self.phase, t.nodes[1:])
        t.to_csv(self.path("table.csv"), jprime)

    def step_symmetrization(self):
        t = self.table
        rp = build_rearrangement(t)
        dev = check_equimeasurable(rp, t)
        tol = equimeasurability_tolerance(t)
        conc, conv = check_g_concave(rp), check_g_inv_convex(rp)
        try:
            T = build_T(t)
            strict = {"available": True, "min_ratio": T.strict_ratio_min, "where": T.strict_ratio_where}
        except SublevelLabError as exc:
            strict = {"available": False, "note": str(exc)}
        d = {
            "equimeasurable_deviation": dev, "equimeasurable_tolerance": tol,
            "round_trip_error": round_trip_error(rp),
            "g_concave": vars(conc), "g_inv_convex": vars(conv), "T": strict,
            "B_radius": rp.B_radius,
        }
        write_json(self.path("symmetrization.json"), d)
        r = np.linspace(0.0, rp.B_radius, 257)
        with np.errstate(all="ignore"):
            rows = zip(r, rp.g_inv(r), rp.slope(r))
            write_csv(self.path("rearrangement.csv"), ["r", "fdot", "slope"], rows)
        if dev > tol:
            self.fail(f"equimeasurability deviation {dev:.3e} > {tol:.3e}")
        if not (conc.passed and conv.passed):
            self.fail("g not concave or g_inv not convex")

    def step_oscint(self):
        lam = self.cfg.lam_value
        co = oscint_coarea(self.table, self.amplitude, lam)
        di = oscint_direct(self.phase, self.amplitude, lam, l=self.table.l)
        diff = abs(co.value - di.value)
        d = {"coarea": co.row(), "direct": di.row(), "difference": diff,
             "combined_error": co.err_estimate + di.err_estimate}
        write_json(self.path("oscint.json"), d)
        write_csv(self.path("oscint.csv"), list(co.row()), [list(co.row().values()), list(di.row().values())])
        if diff > co.err_estimate + di.err_estimate:
            self.fail(f"routes differ by {diff:.3e}, above the combined error estimate")

    def sweep(self):
        if self._sweep is None:
            self._sweep = bv.verify_bound_sweep(
                self.phase, self.amplitude, self.cfg.lambda_grid(), table=self.table,
                jobs=self.cfg.jobs, with_ledger=True, check_assumption=False,
            )
            self._sweep.verdict = self.verdict.as_dict()
        return self._sweep

    def step_sweep(self):
        sw = self.sweep()
        rows = [r.row() for r in sw.reports]
        header = list(rows[0]) if rows else []
        write_csv(self.path("sweep.csv"), header, [list(r.values()) for r in rows])
        write_json(self.path("sweep.json"), {
            "phase": sw.phase_name, "amplitude": sw.amplitude_name, "verdict": sw.verdict,
            "max_ratio": sw.max_ratio, "spread": sw.spread(), "reports": rows,
        })
        errors = [r for r in sw.reports if r.failed]
        if errors:
            raise _NumericFailure(f"{len(errors)} frequencies failed, first: {errors[0].error}")
        self.outcome.messages.append(f"sweep: max ratio {sw.max_ratio:.6g}, spread {sw.spread():.6g}")
        slack = self.cfg.tolerances["ratio_slack"]
        if (self.passing or self.cfg.assert_pass) and sw.max_ratio > 1 + slack:
            self.fail(f"bound ratio {sw.max_ratio:.6g} exceeds 1 + {slack:g}")

    def step_ledger(self):
        sw = self.sweep()
        rtol = self.cfg.tolerances["ledger_rtol"]
        arow = []
        recs = []
        bad = []
        for r in sw.reports:
            recs.append({"lambda": r.lam, "alpha": r.alpha, "eps0": r.eps0,
                         "alpha_residual": r.alpha_residual,
                         "entries": [vars(e) for e in r.ledger]})
            for e in r.ledger:
                ok = (not e.asserted) or (not e.available) or e.margin >= -rtol * e.scale
                arow.append([r.lam, e.name, e.lhs, e.rhs, e.margin, e.scale, e.asserted, e.available, ok])
                if not ok:
                    bad.append((r.lam, e.name))
            if r.alpha_residual is not None and r.alpha_residual > self.cfg.tolerances["alpha_rtol"]:
                bad.append((r.lam, "alpha_residual"))
        write_json(self.path("ledger.json"), {"phase": sw.phase_name, "ledger": recs})
        write_csv(self.path("ledger.csv"),
                  ["lambda", "name", "lhs", "rhs", "margin", "scale", "asserted", "available", "ok"], arow)
        if bad and (self.passing or self.cfg.assert_pass):
            self.fail(f"{len(bad)} ledger margins negative, first at lambda={bad[0][0]:.6g} ({bad[0][1]})")

    def step_prop1(self):
        sw = self.sweep()
        t = self.table
        try:
            delta, A = bv.fit_decay_exponent(sw)
        except SublevelLabError as exc:
            write_json(self.path("prop1.json"), {"applicable": False, "note": str(exc)})
            return
        d = {"delta": delta, "A": A}
        if 0 < delta < 1:
            c = np.linspace(0.0, t.l, self.cfg.prop1_c_count)
            eps = np.geomspace(1e-4 * t.l, 0.5 * t.l, self.cfg.prop1_eps_count)
            rep = bv.proposition1_check(t, delta, A, c, eps)
            d.update(applicable=True, worst_C=rep.worst_C, worst_c=rep.worst_c, worst_eps=rep.worst_eps)
            write_csv(self.path("prop1.csv"), ["c", "eps", "band", "C"], rep.rows)
        else:
            d.update(applicable=False, note="fitted delta outside (0, 1)")
        write_json(self.path("prop1.json"), d)


class _NumericFailure(SublevelLabError):
    pass


STEP_ORDER = ("assumption", "symmetrization", "sweep", "ledger", "prop1")


def _execute(cfg: ExperimentConfig, steps) -> RunOutcome:
    outcome = RunOutcome(EXIT_OK)
    try:
        pipe = _Pipeline(cfg, outcome)
        _ = pipe.table  # validate -> table comes first
        for step in steps:
            getattr(pipe, f"step_{step}")()
    except PhaseValidationError as exc:
        outcome.messages.append(f"phase rejected: {exc}")
        outcome.status = EXIT_CONFIG
        return outcome
    except ConfigError as exc:
        outcome.messages.append(f"config error: {exc}")
        outcome.status = EXIT_CONFIG
        return outcome
    except (SublevelLabError, FloatingPointError, ArithmeticError) as exc:
        outcome.messages.append(f"numerical failure: {type(exc).__name__}: {exc}")
        outcome.status = EXIT_NUMERIC
        return outcome
    outcome.status = EXIT_ASSERT if outcome.failures else EXIT_OK
    return outcome


def run(cfg: ExperimentConfig) -> RunOutcome:
    """Run every enabled check in dependency order and write the reports."""
    steps = ["table"] + [s for s in STEP_ORDER if cfg.checks.get(s)]
    if "ledger" in steps and "sweep" not in steps:
        steps.insert(steps.index("ledger"), "sweep")
    return _execute(cfg, steps)


def list_catalog(as_json: bool = False) -> str:
    """Catalog names, parameter defaults and expected verdicts."""
    entries = [
        {"name": e.name, "expected": e.classification, "parameters": e.defaults, "description": e.description}
        for e in CATALOG.values()
    ]
    if as_json:
        return json.dumps(entries, indent=2, sort_keys=True)
    lines = []
    for e in entries:
        params = ", ".join(f"{k}={v!r}" for k, v in e["parameters"].items())
        lines.append(f"{e['name']:<10} [{e['expected']}]  {e['description']}")
        lines.append(f"{'':<10} parameters: {params}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

COMMANDS = {
    "check": ["assumption"],
    "table": [],
    "symmetrize": ["symmetrization"],
    "oscint": ["oscint"],
    "sweep": ["sweep"],
    "ledger": ["ledger"],
    "prop1": ["prop1"],
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI experiment configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    common.add_argument("--jobs", type=int, metavar="N", help="worker processes for sweeps")
    common.add_argument("--tol", action="append", default=[], metavar="KEY=VAL",
                        help=f"tolerance override; keys: {', '.join(TOLERANCE_KEYS)}")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VAL",
                        help="override any config value")
    common.add_argument("--assert-pass", action="store_true",
                        help="fail unless the phase passes the geometric assumption")
    p = argparse.ArgumentParser(prog="sublevel-lab", description="Sublevel-set bounds for oscillatory integrals.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "run"):
        sub.add_parser(name, parents=[common])
    cat = sub.add_parser("catalog", help="list catalog phases")
    cat.add_argument("--json", action="store_true", help="machine-readable output")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "catalog":
        print(list_catalog(args.json))
        return EXIT_OK
    overrides = list(args.set)
    for item in args.tol:
        overrides.append(f"tolerances.{item}")
    if args.out:
        overrides.append(f"output.dir={args.out}")
    if args.jobs is not None:
        overrides.append(f"run.jobs={args.jobs}")
    if args.assert_pass:
        overrides.append("run.assert_pass=true")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "run":
        outcome = run(cfg)
    else:
        steps = ["table"] + COMMANDS[args.command]
        if args.assert_pass and "assumption" not in steps:
            steps.insert(1, "assumption")
        outcome = _execute(cfg, steps)
    for m in outcome.messages:
        print(m)
    for f in outcome.failures:
        print(f"FAILED: {f}", file=sys.stderr)
    for f in outcome.files:
        print(f"wrote {f}")
    if outcome.status in (EXIT_CONFIG, EXIT_NUMERIC):
        print(outcome.messages[-1] if outcome.messages else "error", file=sys.stderr)
    return outcome.status
