"""Command-line front end.

Every subcommand writes into ``<out>/<subcommand>-<config hash>/``.  Each
CSV starts with ``#`` provenance lines (version, seed, config hash and the
full resolved config as JSON) followed by one fixed header row; JSON files
carry the same record under ``"provenance"``.  Passing any of those output
files back through ``--config`` reruns the identical experiment.

Angles are degrees on the command line and in config files.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bell import violation_scan
from .bench import simulate_beat_traces
from .correlation import correlation_scan, estimate_correlation, multiply_traces
from .noise import PhaseModel, PhaseProcess, sample_phase_trace
from .qkd import SessionConfig, run_session
from .quantum import bell_label, quantum_correlation

SEED_ENV = "COHERENT_BELL_SEED"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

TRACE_COLUMNS = ("k", "phi", "d1", "d2", "product")
SCAN_COLUMNS = ("theta2_deg", "corr_normalized", "std_error", "n_samples")
BELL_COLUMNS = ("c_deg", "F", "F_err")
QUANTUM_COLUMNS = ("theta2_deg", "c_quantum")
QKD_COLUMNS = ("k", "alice_basis_deg", "bob_basis_deg", "alice_bit", "bob_bit")


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "prep": "psi-minus",
    "state": "psi-minus",
    "theta1": 0.0,
    "theta2": 0.0,
    "theta2_grid": "0:90:5",
    "a": 0.0,
    "b": 30.0,
    "c_grid": "0:90:5",
    "samples": 100_000,
    "seed": 0,
    "noise": "piecewise",
    "dwell": 1,
    "diffusion_rate": 0.0,
    "format": "csv",
    "rounds": 10_000,
    "decorrelation": 0.0,
    "alice_angles": "0,30,60",
    "bob_angles": "30,60,90",
    "bell_angles": "0,30,60",
    "samples_per_round": 1,
    "threshold": 1e-6,
}

_NOISE_KEYS = ("seed", "noise", "dwell", "diffusion_rate")
SCHEMA = {
    "trace": ("prep", "theta1", "theta2", "samples", "format") + _NOISE_KEYS,
    "scan": ("prep", "theta1", "theta2_grid", "samples", "format") + _NOISE_KEYS,
    "bell": ("prep", "a", "b", "c_grid", "samples", "format") + _NOISE_KEYS,
    "quantum": ("state", "theta1", "theta2_grid", "format"),
    "qkd": ("prep", "rounds", "decorrelation", "alice_angles", "bob_angles", "bell_angles",
            "samples_per_round", "threshold", "seed", "format"),
}
# Accepted everywhere but never part of the experiment definition.
RUNTIME_KEYS = ("out", "force", "workers")


def parse_grid(spec) -> list:
    """``start:stop:step`` (inclusive stop), a comma list, or a JSON list -> degrees."""
    if isinstance(spec, (list, tuple)):
        values = [float(v) for v in spec]
    elif isinstance(spec, (int, float)):
        values = [float(spec)]
    else:
        text = str(spec).strip()
        try:
            if ":" in text:
                start, stop, step = (float(p) for p in text.split(":"))
                if not step > 0 or stop < start:
                    raise ConfigError(f"bad grid {text!r}: need step > 0 and stop >= start")
                count = int(math.floor((stop - start) / step + 1e-9)) + 1
                values = [start + i * step for i in range(count)]
            else:
                values = [float(p) for p in text.split(",") if p.strip()]
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot parse angle list {text!r}") from None
    if not values:
        raise ConfigError(f"empty angle list {spec!r}")
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"non-finite angle in {spec!r}")
    return values


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: dict
    out: Path = Path("out")
    force: bool = False
    workers: int = 1

    @classmethod
    def resolve(cls, subcommand: str, supplied: dict, runtime: dict | None = None) -> "RunConfig":
        if subcommand not in SCHEMA:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        allowed = SCHEMA[subcommand]
        unknown = sorted(set(supplied) - set(allowed))
        if unknown:
            raise ConfigError(f"unknown key(s) for {subcommand}: {', '.join(unknown)}")
        params = {}
        for key in allowed:
            if key in supplied and supplied[key] is not None:
                params[key] = supplied[key]
            elif key == "seed" and os.environ.get(SEED_ENV):
                params[key] = os.environ[SEED_ENV]
            else:
                params[key] = DEFAULTS[key]
        params = _validate(subcommand, params)
        runtime = runtime or {}
        workers = int(runtime.get("workers") or 1)
        if workers < 1:
            raise ConfigError("workers must be >= 1")
        return cls(subcommand, params, Path(runtime.get("out") or "out"),
                   bool(runtime.get("force")), workers)

    @property
    def config_hash(self) -> str:
        blob = json.dumps({"subcommand": self.subcommand, **self.params}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @property
    def run_dir(self) -> Path:
        return self.out / f"{self.subcommand}-{self.config_hash}"

    def provenance(self) -> dict:
        return {
            "package": "coherent_bell",
            "version": __version__,
            "subcommand": self.subcommand,
            "seed": self.params.get("seed"),
            "config_hash": self.config_hash,
            "config": self.params,
        }

    def noise_process(self) -> PhaseProcess:
        p = self.params
        return PhaseProcess(kind=p["noise"], seed=p["seed"], dwell_samples=p["dwell"],
                            diffusion_rate=p["diffusion_rate"])


def _int(params, key, minimum):
    try:
        value = params[key]
        if isinstance(value, float) and not value.is_integer():
            raise ValueError
        value = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {params[key]!r}") from None
    if value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _float(params, key, minimum=None):
    try:
        value = float(params[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {params[key]!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _validate(subcommand, params) -> dict:
    p = dict(params)
    for key in ("prep", "state"):
        if key in p:
            try:
                p[key] = bell_label(p[key]).value
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    for key in ("theta1", "theta2", "a", "b"):
        if key in p:
            p[key] = _float(p, key)
    for key in ("theta2_grid", "c_grid", "alice_angles", "bob_angles", "bell_angles"):
        if key in p:
            p[key] = parse_grid(p[key])
    if "bell_angles" in p and len(p["bell_angles"]) != 3:
        raise ConfigError("bell_angles needs exactly three angles a,b,c")
    if "samples" in p:
        p["samples"] = _int(p, "samples", 2 if subcommand != "trace" else 1)
    if "seed" in p:
        p["seed"] = _int(p, "seed", 0)
        if p["seed"] >= 2**64:
            raise ConfigError("seed must fit in 64 bits")
    if "noise" in p:
        try:
            p["noise"] = PhaseModel(p["noise"]).value
        except ValueError:
            raise ConfigError(f"noise must be one of {[m.value for m in PhaseModel]}") from None
        p["dwell"] = _int(p, "dwell", 1)
        p["diffusion_rate"] = _float(p, "diffusion_rate", 0.0)
    if "rounds" in p:
        p["rounds"] = _int(p, "rounds", 1)
        p["samples_per_round"] = _int(p, "samples_per_round", 1)
        p["decorrelation"] = _float(p, "decorrelation", 0.0)
        p["threshold"] = _float(p, "threshold", 0.0)
    if p.get("format") not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {p.get('format')!r}")
    return p


# -- writers -----------------------------------------------------------------


def _csv_text(run: RunConfig, columns, rows) -> str:
    buf = io.StringIO()
    prov = run.provenance()
    buf.write(f"# package: {prov['package']} {prov['version']}\n")
    buf.write(f"# subcommand: {prov['subcommand']}\n")
    buf.write(f"# seed: {prov['seed']}\n")
    buf.write(f"# config_hash: {prov['config_hash']}\n")
    buf.write(f"# config: {json.dumps(prov['config'], sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_plain(v) for v in row])
    return buf.getvalue()


def _plain(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if v is None:
        return ""
    return v


def _json_text(run: RunConfig, payload: dict) -> str:
    return json.dumps({"provenance": run.provenance(), **payload}, sort_keys=True, indent=2) + "\n"


def _table(run: RunConfig, name: str, columns, rows) -> dict:
    if run.params["format"] == "csv":
        return {f"{name}.csv": _csv_text(run, columns, rows)}
    records = [dict(zip(columns, (_plain(v) for v in row))) for row in rows]
    return {f"{name}.json": _json_text(run, {"columns": list(columns), "rows": records})}


def write_outputs(run: RunConfig, files: dict) -> list:
    """Single writer: refuses to touch an existing run folder unless forced."""
    target = run.run_dir
    if target.exists() and not run.force:
        raise ConfigError(f"{target} already exists; pass --force to overwrite")
    target.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in files.items():
        path = target / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


def read_provenance(path) -> dict:
    """Recover the provenance record from an output file written by this CLI."""
    text = Path(path).read_text(encoding="utf-8")
    if text.startswith("#"):
        prov = {}
        for line in text.splitlines():
            if not line.startswith("# "):
                break
            key, _, value = line[2:].partition(": ")
            prov[key] = value
        if "config" not in prov or "subcommand" not in prov:
            raise ConfigError(f"{path} has no provenance header")
        return {"subcommand": prov["subcommand"], "config": json.loads(prov["config"]),
                "config_hash": prov.get("config_hash")}
    data = json.loads(text)
    if "provenance" in data:
        return data["provenance"]
    raise ConfigError(f"{path} has no provenance record")


def load_config_file(path, subcommand: str) -> dict:
    """Plain JSON config (same keys as the flags) or any output file of a previous run."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if text.startswith("#"):
        prov = read_provenance(path)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        if "provenance" not in data:
            return data
        prov = data["provenance"]
    if prov["subcommand"] != subcommand:
        raise ConfigError(f"{path} records a {prov['subcommand']} run, not {subcommand}")
    return dict(prov["config"])


# -- subcommands -------------------------------------------------------------

_rad = math.radians


def cmd_trace(run: RunConfig):
    p = run.params
    phases = sample_phase_trace(run.noise_process(), p["samples"])
    d1, d2 = simulate_beat_traces(p["prep"], _rad(p["theta1"]), _rad(p["theta2"]), phases)
    product = multiply_traces(d1, d2)
    rows = zip(range(len(phases)), phases.samples.tolist(), d1.samples.tolist(),
               d2.samples.tolist(), product.tolist())
    files = _table(run, "trace", TRACE_COLUMNS, rows)
    if p["samples"] >= 2:
        est = estimate_correlation(product, run.noise_process().correlation_length)
        message = f"mean product {est.raw_mean:+.4f} +/- {est.std_error:.4f}"
    else:
        message = f"single sample product {product[0]:+.4f}"
    return files, message


def cmd_scan(run: RunConfig):
    p = run.params
    scan = correlation_scan(p["prep"], _rad(p["theta1"]), [_rad(t) for t in p["theta2_grid"]],
                            p["samples"], run.noise_process(), workers=run.workers)
    files = _table(run, "scan", SCAN_COLUMNS, scan.rows())
    return files, f"{len(scan.points)} points, calibration {abs(scan.calibration.raw_mean):.4f}"


def cmd_bell(run: RunConfig):
    p = run.params
    result = violation_scan(p["prep"], _rad(p["a"]), _rad(p["b"]), [_rad(c) for c in p["c_grid"]],
                            p["samples"], run.noise_process(), workers=run.workers)
    files = _table(run, "bell", BELL_COLUMNS, result.rows())
    files["bell_summary.json"] = _json_text(run, {"summary": result.summary()})
    return files, f"max F = {result.max_F:+.4f} at c = {math.degrees(result.argmax_c):.4g} deg"


def cmd_quantum(run: RunConfig):
    p = run.params
    rows = [(t2, quantum_correlation(p["state"], _rad(p["theta1"]), _rad(t2)))
            for t2 in p["theta2_grid"]]
    return _table(run, "quantum", QUANTUM_COLUMNS, rows), f"{len(rows)} reference points"


def cmd_qkd(run: RunConfig):
    p = run.params
    cfg = SessionConfig(n_rounds=p["rounds"],
                        alice_angles=[_rad(a) for a in p["alice_angles"]],
                        bob_angles=[_rad(b) for b in p["bob_angles"]],
                        bell_angles=[_rad(x) for x in p["bell_angles"]],
                        samples_per_round=p["samples_per_round"], preparation=p["prep"],
                        seed=p["seed"], channel_decorrelation=_rad(p["decorrelation"]),
                        threshold=p["threshold"])
    transcript = run_session(cfg)
    files = {"qkd.json": _json_text(run, transcript.to_dict())}
    if p["format"] == "csv":
        rows = [(r["k"], r["alice_basis_deg"], r["bob_basis_deg"], r["alice_bit"], r["bob_bit"])
                for r in transcript.to_dict()["rounds"]]
        files["qkd_rounds.csv"] = _csv_text(run, QKD_COLUMNS, rows)
    qber = "n/a" if transcript.qber is None else f"{transcript.qber:.4f}"
    return files, f"{transcript.n_sifted} sifted bits, QBER {qber}"


COMMANDS = {"trace": cmd_trace, "scan": cmd_scan, "bell": cmd_bell,
            "quantum": cmd_quantum, "qkd": cmd_qkd}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coherent-bell", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, noise=True):
        sp.add_argument("--config", help="JSON config or a previous output file to replay")
        sp.add_argument("--out", help="output root (default ./out)")
        sp.add_argument("--force", action="store_true", default=None,
                        help="overwrite an existing run folder")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--workers", type=int, help="threads for independent scan points")
        if noise:
            sp.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV} or 0)")
            sp.add_argument("--noise", choices=[m.value for m in PhaseModel])
            sp.add_argument("--dwell", type=int, help="samples per constant-phase segment")
            sp.add_argument("--diffusion-rate", type=float, help="rad^2 per sample (wiener)")

    preps = ["psi-minus", "psi-plus", "phi-plus", "phi-minus"]
    sp = sub.add_parser("trace", help="single-shot beat traces and their product")
    common(sp)
    sp.add_argument("--prep", choices=preps)
    sp.add_argument("--theta1", type=float, help="analyzer A angle, degrees")
    sp.add_argument("--theta2", type=float, help="analyzer B angle, degrees")
    sp.add_argument("-n", "--samples", type=int)

    sp = sub.add_parser("scan", help="normalized correlation versus theta2")
    common(sp)
    sp.add_argument("--prep", choices=preps)
    sp.add_argument("--theta1", type=float)
    sp.add_argument("--theta2-grid", help="start:stop:step or comma list, degrees")
    sp.add_argument("-n", "--samples", type=int)

    sp = sub.add_parser("bell", help="Bell functional F(a, b, c) over a c grid")
    common(sp)
    sp.add_argument("--prep", choices=preps)
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--c-grid")
    sp.add_argument("-n", "--samples", type=int)

    sp = sub.add_parser("quantum", help="analytic two-photon reference curve")
    common(sp, noise=False)
    sp.add_argument("--state", choices=preps)
    sp.add_argument("--theta1", type=float)
    sp.add_argument("--theta2-grid")

    sp = sub.add_parser("qkd", help="Ekert-style key distribution session")
    common(sp, noise=False)
    sp.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV} or 0)")
    sp.add_argument("--prep", choices=preps)
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--decorrelation", type=float, help="std of arm-2 channel phase, degrees")
    sp.add_argument("--alice-angles")
    sp.add_argument("--bob-angles")
    sp.add_argument("--bell-angles")
    sp.add_argument("--samples-per-round", type=int)
    sp.add_argument("--threshold", type=float, help="comparator dead zone")
    return parser


def parse_run_config(argv=None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    subcommand = args.pop("subcommand")
    config_path = args.pop("config", None)
    runtime = {k: args.pop(k, None) for k in RUNTIME_KEYS}
    supplied = load_config_file(config_path, subcommand) if config_path else {}
    if config_path:
        for key in RUNTIME_KEYS:
            if key in supplied and runtime.get(key) is None:
                runtime[key] = supplied[key]
        supplied = {k: v for k, v in supplied.items() if k not in RUNTIME_KEYS}
    supplied.update({k: v for k, v in args.items() if v is not None})
    return RunConfig.resolve(subcommand, supplied, runtime)


def main(argv=None) -> int:
    try:
        run = parse_run_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        files, message = COMMANDS[run.subcommand](run)
        paths = write_outputs(run, files)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime error
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in paths:
        print(path)
    print(message)
    return EXIT_OK
