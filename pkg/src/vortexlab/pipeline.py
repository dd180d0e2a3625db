"""End-to-end construction: measure -> Dirac approximations -> schedule ->
vortex solves -> flow-box lifts -> reports, with JSON configuration and
hashed, re-checkable exports.

Every pass/fail flag in a run summary is recomputed by :func:`summarize`
from the exported CSV and JSON files alone.

Error codes: ``invalid-config`` (with a list of ``(json_pointer, message)``
pairs in ``errors``), ``schedule-overflow``, ``io-error``, ``manifest-mismatch``,
plus those of the stage modules.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .concentrate import REPORT_COLUMNS, decay_samples, read_report_csv, report_csv, report_row
from .errors import LabError
from .measure import DiskMeasure, dirac_approximate, estimate_frostman
from .schedule import (ScheduleEntry, ScheduleParams, frostman_F, interpolated_F, margin_for_level,
                       read_schedule_csv, schedule_csv, select_r, theta_exponent, verify_schedule)
from .swbox import (albe_identity_residual, apriori_check, curvature_residual, lift_to_flowbox,
                    max_principle_scan, nodal_set_diagnostics, scan_csv)
from .vortex import GridSpec, ZeroConfig, dump_field, solve_vortex

# -- configuration ----------------------------------------------------------

_NUM = {"type": "number"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["measure", "levels"],
    "properties": {
        "measure": {"type": "object"},
        "levels": {"type": "integer", "minimum": 1, "maximum": 12},
        "cell_radii": {"type": ["array", "null"],
                       "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "cell_radius0": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "cell_ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "denominator_cap": {"type": "integer", "minimum": 1, "maximum": 100000},
        "frostman": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "d": {"type": ["number", "null"], "exclusiveMinimum": 0, "maximum": 2},
                "C": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "radii": {"type": ["array", "null"], "minItems": 2,
                          "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
            },
        },
        "schedule": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "margin_scale": {"type": "number", "exclusiveMinimum": 0, "maximum": 100},
                "r_min": {"type": "number", "minimum": 1},
                "r_max": {"type": "number", "minimum": 2, "maximum": 2.0 ** 20},
            },
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kappa": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "h_max": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
                "tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.01},
                "max_iter": {"type": "integer", "minimum": 1, "maximum": 500},
            },
        },
        "report": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "w1_cap": {"type": "integer", "minimum": 2, "maximum": 2000},
                "theta_pair": {"type": "array", "minItems": 2, "maxItems": 2,
                               "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                "C0": {"type": "number", "exclusiveMinimum": 0},
                "nodal_C": {"type": "number", "exclusiveMinimum": 0},
                "dump_fields": {"type": "boolean"},
            },
        },
        "output_dir": {"type": ["string", "null"]},
        "seed": {"type": "integer", "minimum": 0},
    },
}

DEFAULTS = {
    "cell_radii": None,
    "cell_radius0": 0.3,
    "cell_ratio": 0.5,
    "denominator_cap": 1000,
    "frostman": {"enabled": False, "d": None, "C": None, "radii": None},
    "schedule": {"margin_scale": 1.0, "r_min": 2.0, "r_max": 16384.0},
    "solver": {"kappa": 0.25, "h_max": 0.02, "tol": 1e-8, "max_iter": 80},
    "report": {"w1_cap": 400, "theta_pair": [0.3, 0.7], "C0": 8.0, "nodal_C": 1.0,
               "dump_fields": True},
    "output_dir": None,
    "seed": 0,
}


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _pointer(path):
    return "/" + "/".join(str(p) for p in path)


def _describe(err):
    s = err.schema
    name = str(err.path[-1]) if err.path else "config"
    v = err.validator
    if v == "minimum":
        return f"{name} must be >= {s['minimum']}"
    if v == "maximum":
        return f"{name} must be <= {s['maximum']}"
    if v == "exclusiveMinimum":
        return f"{name} must be > {s['exclusiveMinimum']}"
    if v == "exclusiveMaximum":
        return f"{name} must be < {s['exclusiveMaximum']}"
    if v == "additionalProperties":
        return f"unknown key(s): {err.message.split('(')[-1].rstrip(')')}"
    return err.message


class ConfigError(LabError):
    def __init__(self, errors):
        self.errors = errors
        super().__init__("invalid-config", "; ".join(f"{p}: {m}" for p, m in errors))


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Validated configuration with every default filled in."""

    data: dict

    def __getitem__(self, key):
        return self.data[key]

    def to_json(self):
        return json.dumps(self.data, sort_keys=True, indent=1)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_json() == other.to_json()

    def measure(self, base_dir="."):
        spec = self.data["measure"]
        if "file" in spec:
            path = os.path.join(base_dir, spec["file"])
            with open(path, encoding="utf-8") as fh:
                return DiskMeasure.from_json(fh.read())
        return DiskMeasure.from_dict(spec)

    def cell_radii(self):
        radii = self.data["cell_radii"]
        if radii is not None:
            return [float(v) for v in radii]
        e0, q = self.data["cell_radius0"], self.data["cell_ratio"]
        return [e0 * q ** k for k in range(self.data["levels"])]


def parse_config(text):
    """Validate JSON text against the config schema and fill in defaults.

    Raises :class:`ConfigError` (code ``invalid-config``) carrying every
    violation as a ``(json_pointer, message)`` pair.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("/", f"invalid JSON: {exc.msg}")]) from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(((_pointer(e.absolute_path), _describe(e)) for e in validator.iter_errors(raw)))
    if errors:
        raise ConfigError(errors)
    data = _merge(DEFAULTS, raw)
    if data["cell_radii"] is not None:
        radii = data["cell_radii"]
        if len(radii) != data["levels"]:
            errors.append(("/cell_radii", "cell_radii must list one radius per level"))
        if any(b >= a for a, b in zip(radii, radii[1:])):
            errors.append(("/cell_radii", "cell_radii must be strictly decreasing"))
    spec = data["measure"]
    if "file" not in spec:
        try:
            DiskMeasure.from_dict(spec)
        except (LabError, ValueError, KeyError, TypeError) as exc:
            errors.append(("/measure", f"invalid measure: {exc}"))
    if data["schedule"]["r_max"] <= data["schedule"]["r_min"]:
        errors.append(("/schedule/r_max", "r_max must exceed r_min"))
    if errors:
        raise ConfigError(errors)
    return RunConfig(data)


# -- running ------------------------------------------------------------------

@dataclass
class RunArtifacts:
    config: RunConfig
    approxes: list = field(default_factory=list)
    schedule: ScheduleParams | None = None
    fields: list = field(default_factory=list)
    lifts: list = field(default_factory=list)
    report: list = field(default_factory=list)
    identities: list = field(default_factory=list)
    scans: list = field(default_factory=list)
    nodal: list = field(default_factory=list)
    frostman: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    error: dict | None = None


def _frostman_setup(cfg, target, approxes):
    fr = cfg["frostman"]
    d = fr["d"]
    if d is None:
        radii = fr["radii"] or [0.2, 0.1, 0.05, 0.025]
        d = estimate_frostman(target, radii)[0]
    if not d > 0:
        raise LabError("invalid-dimension", f"Frostman dimension must be positive, got {d!r}")
    C = fr["C"]
    if C is None:
        # largest C keeping F(N_n) <= eps_n on every level
        # shaved by a relative 1e-12 so rounding in C N^{-1/d} cannot exceed eps_n
        C = min(a.epsilon * a.N ** (1.0 / d) for a in approxes) * (1 - 1e-12)
    return float(d), float(C)


def run_pipeline(cfg, base_dir=".", log=None):
    """Run every level of the construction; a failing level stops the run
    and is recorded in ``error`` while earlier levels are kept."""
    say = log or (lambda msg: None)
    art = RunArtifacts(cfg)
    target = cfg.measure(base_dir)
    stage, level = "approximate", 0
    try:
        for level, eps in enumerate(cfg.cell_radii(), start=1):
            art.approxes.append(dirac_approximate(target, eps, cfg["denominator_cap"]))
    except LabError as exc:
        art.error = {"level": level, "stage": stage, "code": exc.code, "message": str(exc)}
    if not art.approxes:
        art.summary = summary_flags(art)
        return art
    pairs = [(a.N, a.epsilon) for a in art.approxes]
    if cfg["frostman"]["enabled"]:
        try:
            d, C = _frostman_setup(cfg, target, art.approxes)
            F, theta = frostman_F(d, C), theta_exponent(d)
        except LabError as exc:
            art.error = {"level": 0, "stage": "frostman", "code": exc.code, "message": str(exc)}
            art.approxes = []
            art.summary = summary_flags(art)
            return art
        art.frostman = {"d": d, "C": C, "theta": theta}
    else:
        F, theta, d = interpolated_F(pairs), 0.25, None
        art.frostman = {"d": None, "C": None, "theta": theta}
    sch = cfg["schedule"]
    sol = cfg["solver"]
    rep = cfg["report"]
    entries = []
    prev = sch["r_min"] / 2
    for n, a in enumerate(art.approxes, start=1):
        try:
            stage = "schedule"
            Fn = float(F(a.N))
            margin = margin_for_level(n, sch["margin_scale"])
            r = select_r(a.N, Fn, margin, r_min=max(sch["r_min"], 2 * prev))
            if r > sch["r_max"]:
                raise LabError("schedule-overflow", f"level {n} needs r={r:g} > r_max")
            entries.append(ScheduleEntry(n, a.N, a.epsilon, Fn, r, margin))
            prev = r
            say(f"level {n}: N={a.N} eps={a.epsilon:.4g} r={r:g}")
            stage = "solve"
            grid = GridSpec.for_r(r, sol["kappa"], sol["h_max"])
            f = solve_vortex(ZeroConfig(a.points, a.multiplicities), r, grid,
                             tol=sol["tol"], max_iter=sol["max_iter"])
            stage = "report"
            s = lift_to_flowbox(f)
            row = report_row(n, f, a, target, theta, rep["w1_cap"])
            scan = max_principle_scan(s, None, rep["C0"])
            ident = {"curvature": curvature_residual(s).to_dict(),
                     "albe": albe_identity_residual(s).to_dict(),
                     "apriori": apriori_check(s),
                     "max_principle": {"rho": scan.rho, "eta": scan.eta, "C0": scan.C0,
                                       "counts": scan.counts},
                     "energy_3d": s.energy_3d}
        except LabError as exc:
            art.error = {"level": n, "stage": stage, "code": exc.code, "message": str(exc)}
            break
        art.fields.append(f)
        art.lifts.append(s)
        art.report.append(row)
        art.scans.append(scan)
        art.identities.append(ident)
    art.approxes = art.approxes[:len(art.fields)] if art.error else art.approxes
    art.schedule = ScheduleParams(tuple(entries[:len(art.fields)]), float(theta), d,
                                  float(sch["margin_scale"]))
    if art.lifts:
        lo, hi = rep["theta_pair"]
        art.nodal = nodal_set_diagnostics(art.lifts, lo, hi, rep["nodal_C"])
    art.summary = summary_flags(art)
    return art


# -- pass/fail flags ------------------------------------------------------------

def _strictly_decreasing(vals):
    return all(b < a for a, b in zip(vals, vals[1:]))


def acceptance_flags(report_rows, schedule_rows, nodal_rows, violation_counts, frostman_enabled,
                     complete):
    """Pass/fail booleans from tabular data only."""
    if not report_rows:
        return {"levels_complete": False}
    last = report_rows[-1]
    bound = 3 * last["N_n"] / math.sqrt(last["r_n"])
    flags = {
        "levels_complete": bool(complete),
        "energy_ratio": all(0.99 <= row["E_ratio"] <= 1.01 for row in report_rows),
        "w1_target_decreasing": _strictly_decreasing([row["W1_to_target"] for row in report_rows]),
        "w1_diracs_final": bool(last["W1_to_diracs"] <= bound),
        "max_principle": sum(violation_counts) == 0,
        "schedule_within_margin": all(
            max(row["ratio1"], row["ratio2"], row["ratio3"]) <= row["margin"] for row in schedule_rows),
        "eps_dominates_F": all(row["epsilon_n"] >= row["F_n"] for row in schedule_rows),
    }
    if frostman_enabled:
        flags["E_rtheta_decreasing"] = _strictly_decreasing([row["E_rtheta"] for row in report_rows])
    fin = nodal_rows[-1] if nodal_rows else None
    dist = fin["dH_Ztheta_Zother"] if fin else float("nan")
    flags["nodal_theta_final"] = bool(
        fin is not None and np.isfinite(dist) and dist <= 4 * fin["N_n"] / math.sqrt(fin["r_n"]))
    return flags


def summary_flags(art):
    sched_rows = verify_schedule(art.schedule)["rows"] if art.schedule else []
    flags = acceptance_flags(art.report, sched_rows, art.nodal,
                             [len(s.violations) for s in art.scans],
                             art.config["frostman"]["enabled"],
                             art.error is None)
    return {"flags": flags, "all_pass": all(flags.values()), "error": art.error,
            "levels_run": len(art.fields), "frostman": art.frostman}


# -- export -------------------------------------------------------------------

NODAL_COLUMNS = ("n", "r_n", "N_n", "flag", "dH_Ztheta_Zn", "dH_Ztheta_P", "dH_Ztheta_Zother")


def _nodal_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(NODAL_COLUMNS)
    for row in rows:
        w.writerow([row["n"], repr(float(row["r_n"])), row["N_n"], row["flag"]]
                   + [repr(float(row[k])) for k in NODAL_COLUMNS[4:]])
    return buf.getvalue()


def _read_nodal_csv(text):
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append({k: (int(v) if k in ("n", "N_n") else v if k == "flag" else float(v))
                    for k, v in row.items()})
    return out


def _decay_series(f, width=1.0):
    """Binned means of the decay-fit samples (plot data)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "mean_log_tail", "count"))
    try:
        x, y = decay_samples(f)
    except LabError:
        return buf.getvalue()
    idx = np.floor(x / width).astype(int)
    for k in np.unique(idx):
        sel = idx == k
        w.writerow((repr((k + 0.5) * width), repr(float(y[sel].mean())), int(sel.sum())))
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def export(art, directory):
    """Write every artifact plus ``manifest.json`` (sha256 per file).

    Returns the manifest dict.
    """
    if not art.report and art.error is None:
        raise LabError("io-error", "nothing to export")
    files = {"config.json": art.config.to_json() + "\n",
             "summary.json": _json(art.summary),
             "schedule.csv": schedule_csv(art.schedule) if art.schedule else "",
             "report.csv": report_csv(art.report),
             "nodal.csv": _nodal_csv(art.nodal),
             "identities.json": _json(art.identities)}
    w1 = io.StringIO()
    wr = csv.writer(w1, lineterminator="\n")
    wr.writerow(("n", "W1_to_target", "W1_to_diracs"))
    for row in art.report:
        wr.writerow((row["n"], repr(row["W1_to_target"]), repr(row["W1_to_diracs"])))
    files["w1_series.csv"] = w1.getvalue()
    for n, (a, f, scan) in enumerate(zip(art.approxes, art.fields, art.scans), start=1):
        files[f"approx_{n}.json"] = _json(a.to_dict())
        files[f"violations_{n}.csv"] = scan_csv(scan)
        files[f"decay_{n}.csv"] = _decay_series(f)
        if art.config["report"]["dump_fields"]:
            files[f"field_{n}.csv"] = dump_field(f)
    try:
        os.makedirs(directory, exist_ok=True)
        hashes = {}
        for name in sorted(files):
            data = files[name].encode("utf-8")
            with open(os.path.join(directory, name), "wb") as fh:
                fh.write(data)
            hashes[name] = hashlib.sha256(data).hexdigest()
        manifest = {"algorithm": "sha256", "files": hashes}
        with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
            fh.write(_json(manifest))
    except OSError as exc:
        raise LabError("io-error", f"{exc.filename}: {exc.strerror}") from None
    return manifest


def validate_manifest(directory):
    """Re-hash every listed file; returns the list of mismatching names."""
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    bad = []
    for name, digest in manifest["files"].items():
        path = os.path.join(directory, name)
        if not os.path.exists(path):
            bad.append(name)
            continue
        with open(path, "rb") as fh:
            if hashlib.sha256(fh.read()).hexdigest() != digest:
                bad.append(name)
    return bad


def summarize(directory):
    """Recompute the pass/fail flags of an exported run from its files."""
    bad = validate_manifest(directory)
    if bad:
        raise LabError("manifest-mismatch", ", ".join(bad))

    def read(name):
        with open(os.path.join(directory, name), encoding="utf-8") as fh:
            return fh.read()

    cfg = json.loads(read("config.json"))
    stored = json.loads(read("summary.json"))
    report_rows = read_report_csv(read("report.csv"))
    sched_text = read("schedule.csv")
    sched_rows = read_schedule_csv(sched_text) if sched_text else []
    nodal_rows = _read_nodal_csv(read("nodal.csv"))
    counts = []
    for n in range(1, len(report_rows) + 1):
        rows = list(csv.DictReader(io.StringIO(read(f"violations_{n}.csv"))))
        counts.append(sum(1 for row in rows if row["class"] == "violation"))
    complete = stored.get("error") is None and len(report_rows) == cfg["levels"]
    flags = acceptance_flags(report_rows, sched_rows, nodal_rows, counts,
                             cfg["frostman"]["enabled"], complete)
    return {"flags": flags, "all_pass": all(flags.values()),
            "consistent": flags == stored["flags"], "stored": stored["flags"]}
