"""Command-line driver: batch jobs that emit CSV or JSON tables.

Every command reads its parameters from, in increasing priority, built-in
defaults, the ``[common]`` and ``[<command>]`` sections of an INI file given
by ``--config``, and the command line.  Tables are written to ``--output``
(``-`` for stdout); provenance goes into ``#`` comment lines (CSV) or a
``provenance`` object (JSON) so the table body itself is reproducible byte
for byte.

Exit codes: 0 success, 1 computation error (including any failed row),
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels
from .errors import PhaseDiffError
from .fock import ORIENTATIONS, ProbeSpec, probe_for
from .homodyne import (
    DEFAULT_THETAS,
    best_homodyne_fisher,
    homodyne_fisher,
    noise_threshold,
    sample_and_estimate,
    variance_map,
)
from .qfi import qfi_of_probe
from .sweep import BETA_TOL, SweepRecord, energy_grid, fit_gamma, optimize_beta, qfi_surface

log = logging.getLogger("phasediff")


class UsageError(Exception):
    """Bad flag, config value or grid; maps to exit code 2."""


# --- value parsing -----------------------------------------------------------

def parse_grid(text: str) -> list[float]:
    """``a,b,c`` | ``lin:a:b:n`` | ``log:a:b:n`` (geometric, endpoints included)."""
    text = text.strip()
    if not text:
        raise UsageError("empty grid")
    try:
        if text.startswith(("lin:", "log:")):
            kind, a, b, n = text.split(":")
            a, b, n = float(a), float(b), int(n)
            if n < 1:
                raise UsageError(f"grid {text!r} has no points")
            if kind == "lin":
                vals = np.linspace(a, b, n)
            else:
                if a <= 0 or b <= 0:
                    raise UsageError(f"log grid {text!r} needs positive endpoints")
                vals = np.geomspace(a, b, n)
            return [float(v) for v in vals]
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse grid {text!r}: {exc}") from None
    if not vals:
        raise UsageError(f"grid {text!r} has no points")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"grid {text!r} has non-finite values")
    return vals


def _float(text):
    try:
        v = float(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"not finite: {text!r}")
    return v


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"not an integer: {text!r}") from None


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text):
        if text not in options:
            raise UsageError(f"{text!r} is not one of {options}")
        return text
    return parse


def _opt_float(text):
    return _float(text) if str(text).strip() else None


def _opt_grid(text):
    return parse_grid(text) if str(text).strip() else None


# --- option tables -----------------------------------------------------------

@dataclass(frozen=True)
class Opt:
    default: str
    parse: object
    help: str
    flag: bool = False


COMMON = {
    "output": Opt("-", str, "output path, '-' for stdout"),
    "format": Opt("csv", _choice("csv", "json"), "csv or json"),
    "workers": Opt(os.environ.get("PHASEDIFF_WORKERS", "1"), _int, "worker processes (env PHASEDIFF_WORKERS)"),
    "seed": Opt("0", _int, "random seed"),
    "cutoff_limit": Opt("4096", _int, "hard limit on the Fock cutoff"),
    "tail_tol": Opt("1e-10", _float, "allowed Fock tail mass"),
    "orientation": Opt("phase", _choice(*ORIENTATIONS), "squeezing orientation"),
}

COMMANDS = {
    "qfi": {
        "N": Opt("2", parse_grid, "mean photon numbers"),
        "beta": Opt("1", parse_grid, "squeezing fractions"),
        "Delta": Opt("0", parse_grid, "noise amplitudes"),
        "Delta2": Opt("", _opt_grid, "noise given as Delta^2 (overrides --Delta)"),
        "no_verify": Opt("false", _bool, "skip the cutoff-doubling check", flag=True),
    },
    "sweep": {
        "N": Opt("", _opt_grid, "mean photon numbers (default: linear grid up to --N-max)"),
        "N_max": Opt("10", _float, "largest energy of the default grid"),
        "N_steps": Opt("10", _int, "points of the default energy grid"),
        "Delta": Opt("lin:0.1:1:10", parse_grid, "noise amplitudes"),
        "Delta2": Opt("", _opt_grid, "noise given as Delta^2 (overrides --Delta)"),
        "beta_tol": Opt(str(BETA_TOL), _float, "tolerance of the beta search"),
        "homodyne": Opt("false", _bool, "add the optimal homodyne Fisher information", flag=True),
        "scaling_k": Opt("", _opt_float, "also tabulate k^2 H(N/k, k Delta) for this k"),
    },
    "homodyne": {
        "N": Opt("5", parse_grid, "mean photon numbers"),
        "beta": Opt("0", parse_grid, "squeezing fractions"),
        "Delta": Opt("0.7,1.0,1.4,2.2", parse_grid, "noise amplitudes"),
        "theta": Opt("0", parse_grid, "local-oscillator phases"),
        "phi0": Opt("", _opt_grid, "operating phases (default: maximize over phi0)"),
    },
    "variance-map": {
        "N": Opt("10", parse_grid, "mean photon numbers"),
        "Delta": Opt("0.1,0.6", parse_grid, "noise amplitudes"),
        "beta": Opt("lin:0:1:21", parse_grid, "squeezing fractions"),
        "theta": Opt("", _opt_grid, "quadrature angles (default: 72 points over [0, pi))"),
        "threshold_N": Opt("", _opt_grid, "energies for the threshold sub-table"),
        "threshold_lo": Opt("0.01", _float, "lower end of the threshold search"),
        "threshold_hi": Opt("1.5", _float, "upper end of the threshold search"),
        "threshold_tol": Opt("1e-3", _float, "bisection tolerance"),
    },
    "fit": {
        "input": Opt("", str, "sweep table (CSV) to fit"),
    },
    "crb-mc": {
        "N": Opt("4", _float, "mean photon number"),
        "beta": Opt("0", _float, "squeezing fraction"),
        "Delta": Opt("0.1", _float, "noise amplitude"),
        "theta": Opt("0", _float, "local-oscillator phase"),
        "phi": Opt("", str, "true phase (default: the Fisher-optimal phase)"),
        "M": Opt("10000", _int, "samples per batch"),
        "batches": Opt("200", _int, "number of batches"),
    },
}


def _flag_name(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasediff", description="Phase-diffusion estimation batch jobs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name, help=f"{name} job")
        p.add_argument("--config", help="INI file with [common] and per-command sections")
        p.add_argument("--print-config", action="store_true", help="dump the merged config and exit")
        p.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
        for key, opt in {**COMMON, **opts}.items():
            if opt.flag:
                p.add_argument(_flag_name(key), dest=key, action="store_const", const="true",
                               default=None, help=opt.help)
            else:
                p.add_argument(_flag_name(key), dest=key, default=None,
                               help=f"{opt.help} (default: {opt.default or 'unset'})")
    return parser


def merged_config(args: argparse.Namespace) -> dict[str, str]:
    """Raw string values: defaults < config [common] < config [command] < flags."""
    opts = {**COMMON, **COMMANDS[args.command]}
    raw = {k: o.default for k, o in opts.items()}
    if args.config:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            with open(args.config) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        for section in ("common", args.command):
            if cp.has_section(section):
                for k, v in cp.items(section):
                    key = k.replace("-", "_")
                    if key not in opts:
                        raise UsageError(f"unknown key {k!r} in section [{section}]")
                    raw[key] = v
    for k in opts:
        v = getattr(args, k, None)
        if v is not None:
            raw[k] = v
    return raw


def parse_config(command: str, raw: dict[str, str]) -> dict:
    opts = {**COMMON, **COMMANDS[command]}
    cfg = {k: opts[k].parse(v) for k, v in raw.items()}
    if cfg["workers"] < 1:
        raise UsageError("workers must be >= 1")
    if cfg["cutoff_limit"] < 1:
        raise UsageError("cutoff-limit must be >= 1")
    if not 0.0 < cfg["tail_tol"] < 1.0:
        raise UsageError("tail-tol must lie in (0, 1)")
    return cfg


def format_config(command: str, raw: dict[str, str]) -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    common = {k: raw[k] for k in COMMON}
    cp["common"] = common
    cp[command] = {k: v for k, v in raw.items() if k not in COMMON}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# --- tables ------------------------------------------------------------------

@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def add(self, row: dict) -> None:
        self.rows.append([row.get(c, "") for c in self.columns])


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def render(tables: list[Table], provenance: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "provenance": provenance,
            "tables": {t.name: {"columns": t.columns,
                                "rows": [[_json_value(v) for v in row] for row in t.rows]}
                       for t in tables},
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    for key, value in provenance.items():
        text = json.dumps(value, sort_keys=True) if isinstance(value, (dict, list)) else str(value)
        buf.write(f"# {key}: {text}\n")
    writer = csv.writer(buf, lineterminator="\n")
    for i, t in enumerate(tables):
        if i:
            buf.write("\n")
        buf.write(f"# table: {t.name}\n")
        writer.writerow(t.columns)
        for row in t.rows:
            writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def table_body(text: str) -> str:
    """Strip provenance comment lines from a CSV document."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


# --- commands ----------------------------------------------------------------

def _deltas(cfg) -> list[float]:
    if cfg.get("Delta2"):
        if any(d < 0 for d in cfg["Delta2"]):
            raise UsageError("Delta2 values must be >= 0")
        return [math.sqrt(d) for d in cfg["Delta2"]]
    return cfg["Delta"]


def _check_domain(cfg, *, N=(), beta=(), Delta=()):
    if any(n < 0 for n in N):
        raise UsageError("N values must be >= 0")
    if any(not 0.0 <= b <= 1.0 for b in beta):
        raise UsageError("beta values must lie in [0, 1]")
    if any(d < 0 for d in Delta):
        raise UsageError("Delta values must be >= 0")


def _error_text(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _qfi_job(args):
    N, beta, Delta, eps, orientation, verify, hard_limit = args
    row = {"N": N, "beta": beta, "Delta": Delta}
    try:
        res = qfi_of_probe(ProbeSpec(N, beta, Delta, eps, orientation), verify, hard_limit)
        row.update(H=res.H, n_terms_used=res.n_terms_used, degeneracy_skipped=res.degeneracy_skipped,
                   n_max=res.n_max, tail=res.tail, error="")
    except PhaseDiffError as exc:
        row.update(H=math.nan, n_terms_used=-1, degeneracy_skipped=-1, n_max=-1, tail=math.nan,
                   error=_error_text(exc))
    return row


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    out = []
    for i, job in enumerate(jobs):
        out.append(fn(job))
        log.info("%d/%d done", i + 1, len(jobs))
    return out


def cmd_qfi(cfg) -> list[Table]:
    deltas = _deltas(cfg)
    _check_domain(cfg, N=cfg["N"], beta=cfg["beta"], Delta=deltas)
    jobs = [(N, b, d, cfg["tail_tol"], cfg["orientation"], not cfg["no_verify"], cfg["cutoff_limit"])
            for N in cfg["N"] for b in cfg["beta"] for d in deltas]
    t = Table("qfi", ["N", "beta", "Delta", "H", "n_terms_used", "degeneracy_skipped",
                      "n_max", "tail", "error"])
    for row in _map(_qfi_job, jobs, cfg["workers"]):
        t.add(row)
    return [t]


SWEEP_COLUMNS = ["N", "Delta", "beta_opt", "H_opt", "xi", "gamma", "F_homodyne", "n_max", "tail", "error"]


def _record_row(rec: SweepRecord) -> dict:
    return {c: getattr(rec, c) for c in SWEEP_COLUMNS}


def _scaling_job(args):
    N, Delta, k, tol, eps, orientation, hard_limit = args
    row = {"N": N, "Delta": Delta, "k": k, "xi": N * Delta}
    try:
        a = optimize_beta(N, Delta, tol, eps, orientation, hard_limit=hard_limit)
        b = optimize_beta(N / k, k * Delta, tol, eps, orientation, hard_limit=hard_limit)
        row.update(H=a.H_opt, H_scaled=k * k * b.H_opt,
                   qfi_deviation=abs(a.H_opt - k * k * b.H_opt) / a.H_opt,
                   beta_opt=a.beta_opt, beta_opt_scaled=b.beta_opt,
                   beta_deviation=abs(a.beta_opt - b.beta_opt),
                   n_max=a.n_max, tail=a.tail, n_max_scaled=b.n_max, tail_scaled=b.tail, error="")
    except PhaseDiffError as exc:
        nan = math.nan
        row.update(H=nan, H_scaled=nan, qfi_deviation=nan, beta_opt=nan, beta_opt_scaled=nan,
                   beta_deviation=nan, n_max=-1, tail=nan, n_max_scaled=-1, tail_scaled=nan,
                   error=_error_text(exc))
    return row


def cmd_sweep(cfg) -> list[Table]:
    Ns = cfg["N"] if cfg["N"] else energy_grid(cfg["N_max"], cfg["N_steps"])
    deltas = _deltas(cfg)
    _check_domain(cfg, N=Ns, Delta=deltas)
    if any(n <= 0 for n in Ns):
        raise UsageError("sweep energies must be > 0")
    if not cfg["beta_tol"] > 0:
        raise UsageError("beta-tol must be > 0")
    records = qfi_surface(Ns, deltas, cfg["beta_tol"], cfg["tail_tol"], cfg["orientation"],
                          cfg["workers"], cfg["homodyne"], cfg["cutoff_limit"])
    t = Table("sweep", SWEEP_COLUMNS)
    for rec in records:
        t.add(_record_row(rec))
    tables = [t]
    k = cfg["scaling_k"]
    if k is not None:
        if not k > 0:
            raise UsageError("scaling-k must be > 0")
        # the check needs N/k >= 1; smaller energies have no partner point
        jobs = [(N, d, k, cfg["beta_tol"], cfg["tail_tol"], cfg["orientation"], cfg["cutoff_limit"])
                for N in Ns if N / k >= 1.0 for d in deltas]
        s = Table("scaling", ["N", "Delta", "k", "xi", "H", "H_scaled", "qfi_deviation", "beta_opt",
                              "beta_opt_scaled", "beta_deviation", "n_max", "tail", "n_max_scaled",
                              "tail_scaled", "error"])
        for row in _map(_scaling_job, jobs, cfg["workers"]):
            s.add(row)
        tables.append(s)
    return tables


def _homodyne_job(args):
    N, beta, Delta, theta, phi0, eps, orientation, hard_limit = args
    row = {"N": N, "beta": beta, "Delta": Delta, "theta": theta}
    try:
        spec = ProbeSpec(N, beta, Delta, eps, orientation)
        if phi0 is None:
            fr = best_homodyne_fisher(spec, theta, hard_limit=hard_limit)
        else:
            fr = homodyne_fisher(spec, phi0, theta, hard_limit=hard_limit)
        q = qfi_of_probe(spec, hard_limit=hard_limit)
        psi = probe_for(spec, hard_limit=hard_limit)
        row.update(phi0=fr.phi0, F=fr.F, H=q.H, F_over_H=fr.F / q.H if q.H > 0 else math.nan,
                   n_max=psi.n_max, tail=psi.tail, error="")
    except PhaseDiffError as exc:
        row.update(phi0=math.nan if phi0 is None else phi0, F=math.nan, H=math.nan, F_over_H=math.nan,
                   n_max=-1, tail=math.nan, error=_error_text(exc))
    return row


def cmd_homodyne(cfg) -> list[Table]:
    _check_domain(cfg, N=cfg["N"], beta=cfg["beta"], Delta=cfg["Delta"])
    phis = cfg["phi0"] if cfg["phi0"] else [None]
    jobs = [(N, b, d, th, ph, cfg["tail_tol"], cfg["orientation"], cfg["cutoff_limit"])
            for N in cfg["N"] for b in cfg["beta"] for d in cfg["Delta"]
            for th in cfg["theta"] for ph in phis]
    t = Table("homodyne", ["N", "beta", "Delta", "theta", "phi0", "F", "H", "F_over_H",
                           "n_max", "tail", "error"])
    for row in _map(_homodyne_job, jobs, cfg["workers"]):
        t.add(row)
    return [t]


def cmd_variance_map(cfg) -> list[Table]:
    _check_domain(cfg, N=cfg["N"], beta=cfg["beta"], Delta=cfg["Delta"])
    thetas = cfg["theta"] if cfg["theta"] else [float(v) for v in DEFAULT_THETAS]
    eps, orient, limit = cfg["tail_tol"], cfg["orientation"], cfg["cutoff_limit"]
    vt = Table("variance", ["N", "Delta", "beta", "theta", "variance", "n_max", "tail"])
    at = Table("argmin", ["N", "Delta", "beta_min", "theta_min", "variance_min", "n_max", "tail"])
    for N in cfg["N"]:
        cutoffs = {}
        for b in cfg["beta"]:
            psi = probe_for(ProbeSpec(N, b, 0.0, eps, orient), hard_limit=limit)
            cutoffs[b] = (psi.n_max, psi.tail)
        for d in cfg["Delta"]:
            vm = variance_map(N, d, cfg["beta"], thetas, eps, orient, limit)
            for i, b in enumerate(vm.betas):
                for j, th in enumerate(vm.thetas):
                    vt.add({"N": N, "Delta": d, "beta": float(b), "theta": float(th),
                            "variance": float(vm.values[i, j]), "n_max": cutoffs[b][0],
                            "tail": cutoffs[b][1]})
            b_min, th_min = vm.argmin
            at.add({"N": N, "Delta": d, "beta_min": b_min, "theta_min": th_min,
                    "variance_min": float(vm.values.min()), "n_max": cutoffs[b_min][0],
                    "tail": cutoffs[b_min][1]})
            log.info("variance map N=%g Delta=%g done", N, d)
    tables = [vt, at]
    if cfg["threshold_N"]:
        tt = Table("threshold", ["N", "Delta_star", "lower", "upper", "n_max", "tail", "error"])
        for N in cfg["threshold_N"]:
            row = {"N": N}
            try:
                res = noise_threshold(N, (cfg["threshold_lo"], cfg["threshold_hi"]), cfg["threshold_tol"],
                                      cfg["beta"], thetas, epsilon_tail=eps, orientation=orient,
                                      hard_limit=limit)
                probes = [probe_for(ProbeSpec(N, b, 0.0, eps, orient), hard_limit=limit)
                          for b in cfg["beta"]]
                row.update(Delta_star=res.Delta_star, lower=res.lower, upper=res.upper,
                           n_max=max(p.n_max for p in probes), tail=max(p.tail for p in probes),
                           error="")
            except PhaseDiffError as exc:
                row.update(Delta_star=math.nan, lower=math.nan, upper=math.nan, n_max=-1,
                           tail=math.nan, error=_error_text(exc))
            tt.add(row)
        tables.append(tt)
    return tables


def read_sweep_table(path: str) -> list[SweepRecord]:
    """Sweep records from the ``sweep`` table of a CSV document."""
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    block, current = [], None
    for line in lines:
        if line.startswith("# table:"):
            current = line.split(":", 1)[1].strip()
            continue
        if line.startswith("#") or not line.strip():
            continue
        if current in (None, "sweep"):
            block.append(line)
    rows = list(csv.DictReader(block))
    if not rows or "xi" not in rows[0] or "gamma" not in rows[0]:
        raise UsageError(f"{path} has no sweep table with xi and gamma columns")
    out = []
    for r in rows:
        if r.get("error"):
            continue
        out.append(SweepRecord(N=float(r["N"]), Delta=float(r["Delta"]), beta_opt=float(r["beta_opt"]),
                               H_opt=float(r["H_opt"]), xi=float(r["xi"]), gamma=float(r["gamma"]),
                               n_max=int(r.get("n_max") or -1), tail=float(r.get("tail") or "nan")))
    return out


def cmd_fit(cfg) -> list[Table]:
    if not cfg["input"]:
        raise UsageError("fit needs --input (a sweep table)")
    records = read_sweep_table(cfg["input"])
    res = fit_gamma(records)
    t = Table("fit", ["a", "b", "c", "residual_rms", "n_points", "n_max", "tail"])
    t.add({"a": res.a, "b": res.b, "c": res.c, "residual_rms": res.residual_rms, "n_points": res.n_points,
           "n_max": max(r.n_max for r in records), "tail": max(r.tail for r in records)})
    return [t]


def cmd_crb_mc(cfg) -> list[Table]:
    _check_domain(cfg, N=[cfg["N"]], beta=[cfg["beta"]], Delta=[cfg["Delta"]])
    spec = ProbeSpec(cfg["N"], cfg["beta"], cfg["Delta"], cfg["tail_tol"], cfg["orientation"])
    limit = cfg["cutoff_limit"]
    if cfg["M"] < 100:
        raise UsageError("M must be at least 100")
    if cfg["batches"] < 2:
        raise UsageError("batches must be at least 2")
    if cfg["phi"] in ("", None):
        phi = best_homodyne_fisher(spec, cfg["theta"], hard_limit=limit).phi0
    else:
        phi = _float(cfg["phi"])
    res = sample_and_estimate(spec, phi, cfg["theta"], cfg["M"], cfg["seed"], cfg["batches"],
                              workers=cfg["workers"], hard_limit=limit)
    psi = probe_for(spec, hard_limit=limit)
    bt = Table("batches", ["batch", "phi_hat", "n_max", "tail"])
    for i, est in enumerate(res.estimates):
        bt.add({"batch": i, "phi_hat": float(est), "n_max": psi.n_max, "tail": psi.tail})
    st = Table("summary", ["N", "beta", "Delta", "phi_true", "theta", "M", "n_batches", "phi_mean",
                           "variance", "crb", "variance_over_crb", "F", "n_max", "tail"])
    st.add({"N": spec.N, "beta": spec.beta, "Delta": spec.Delta, "phi_true": phi, "theta": cfg["theta"],
            "M": res.M, "n_batches": res.n_batches, "phi_mean": res.phi_hat, "variance": res.variance,
            "crb": res.crb, "variance_over_crb": res.variance / res.crb, "F": res.fisher,
            "n_max": psi.n_max, "tail": psi.tail})
    return [bt, st]


HANDLERS = {
    "qfi": cmd_qfi,
    "sweep": cmd_sweep,
    "homodyne": cmd_homodyne,
    "variance-map": cmd_variance_map,
    "fit": cmd_fit,
    "crb-mc": cmd_crb_mc,
}


def _failed(tables: list[Table]) -> bool:
    for t in tables:
        if "error" in t.columns:
            col = t.columns.index("error")
            if any(row[col] for row in t.rows):
                return True
    return False


def run(command: str, cfg: dict, raw: dict) -> tuple[str, int]:
    """Execute ``command`` and return the rendered document and exit code."""
    tables = HANDLERS[command](cfg)
    provenance = {
        "command": command,
        "version": __version__,
        "backend": kernels.BACKEND,
        "generated": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": dict(sorted(raw.items())),
    }
    return render(tables, provenance, cfg["format"]), 1 if _failed(tables) else 0


def _setup_logging(verbose: bool) -> None:
    # progress goes to stderr so stdout stays clean for '--output -'
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        raw = merged_config(args)
        cfg = parse_config(args.command, raw)
        if args.print_config:
            sys.stdout.write(format_config(args.command, raw))
            return 0
        text, code = run(args.command, cfg, raw)
    except UsageError as exc:
        print(f"phasediff {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except PhaseDiffError as exc:
        print(f"phasediff {args.command}: {_error_text(exc)}", file=sys.stderr)
        return 1
    if cfg["output"] == "-":
        sys.stdout.write(text)
    else:
        with open(cfg["output"], "w", newline="") as fh:
            fh.write(text)
        log.info("wrote %s", cfg["output"])
    if code:
        print(f"phasediff {args.command}: some rows failed; see the error column", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
