"""Command-line front end: ``fbmh <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 invalid input or failed verification,
3 quadrature non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import expansions as ex
from .errors import DomainError, NonConvergence
from .ftnorm import norm_fT_sq
from .fousim import McConfig, default_r_max, mc_wt_variance, rho_sq_integral
from .numerics import QuadratureSpec

COMMANDS = ("norm", "constants", "expand", "decay", "asymptote", "lemma", "mc-wt",
            "rho-integral", "verify-all")

# Column layout of every CSV report; the reader below checks against it.
CSV_SCHEMAS: Dict[str, List[str]] = {
    "norm": ["T", "H", "total", "norm_over_2T"],
    "constants": ["H", "a", "sigmaH2", "sigma2", "slope", "intercept"],
    "expand": ["T", "H", "value", "remainder_exponent"],
    "decay": ["T", "norm_over_2T", "residual", "scaled_residual"],
    "asymptote": ["T", "half_norm", "line", "gap"],
    "lemma": ["T", "oracle", "expansion", "residual", "scaled_residual"],
    "mc-wt": ["H", "T", "mean", "std_error", "n_paths", "sigma2", "z"],
    "rho-integral": ["H", "r_max", "value", "target", "rel_gap"],
    "verify-all": ["criterion", "passed", "seconds"],
}
JSON_FIELDS = {k: set(v) for k, v in CSV_SCHEMAS.items()}
JSON_FIELDS["norm"] |= {"branch", "components"}
JSON_FIELDS["expand"] |= {"terms"}
JSON_FIELDS["verify-all"] |= {"title", "details"}

DEFAULTS = {"H": None, "T": None, "beta": None, "lemma": None, "paths": 2000, "steps": 4096,
            "seed": 0, "tol": None, "out": None, "format": None, "no_timestamp": False,
            "r_max": None, "as_printed": False}
GRID_COMMANDS = {"decay", "asymptote", "lemma"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--H", type=float, default=S)
    common.add_argument("--T", type=str, default=S, help="a value or a comma-separated grid")
    common.add_argument("--beta", type=float, default=S)
    common.add_argument("--lemma", choices=ex.LEMMAS, default=S)
    common.add_argument("--paths", type=int, default=S)
    common.add_argument("--steps", type=int, default=S)
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--tol", type=float, default=S, help="relative quadrature tolerance")
    common.add_argument("--r-max", dest="r_max", type=float, default=S)
    common.add_argument("--as-printed", dest="as_printed", action="store_true", default=S)
    common.add_argument("--out", type=str, default=S)
    common.add_argument("--format", choices=("csv", "json"), default=S)
    common.add_argument("--no-timestamp", dest="no_timestamp", action="store_true", default=S)
    common.add_argument("--config", type=str, default=S, help="flat key=value file; flags win")
    p = _Parser(prog="fbmh", description="fBm Hilbert-space norms, expansions and oracles.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for c in COMMANDS:
        sub.add_parser(c, parents=[common])
    return p


def read_config(path: str) -> dict:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.lstrip("-").replace("-", "_")
        if k not in DEFAULTS:
            raise DomainError(f"{path}:{n}: unknown key {k!r}")
        out[k] = v
    return out


def _coerce(key, value):
    if value is None or not isinstance(value, str):
        return value
    if key in ("H", "beta", "tol", "r_max"):
        return float(value)
    if key in ("paths", "steps", "seed"):
        return int(value)
    if key in ("no_timestamp", "as_printed"):
        return value.lower() in ("1", "true", "yes", "on")
    return value


@dataclass
class RunConfig:
    command: str
    H: Optional[float] = None
    T: Optional[str] = None
    beta: Optional[float] = None
    lemma: Optional[str] = None
    paths: int = 2000
    steps: int = 4096
    seed: int = 0
    tol: Optional[float] = None
    r_max: Optional[float] = None
    as_printed: bool = False
    out: Optional[str] = None
    format: Optional[str] = None
    no_timestamp: bool = False

    def __post_init__(self):
        if self.format is None:
            self.format = "csv" if self.command in GRID_COMMANDS else "json"
        if self.format not in ("csv", "json"):
            raise DomainError(f"unknown format {self.format!r}")


def resolve(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and flags (in increasing precedence)."""
    cfg = dict(DEFAULTS)
    given = vars(ns)
    if "config" in given:
        cfg.update(read_config(given["config"]))
    cfg.update({k: v for k, v in given.items() if k not in ("config", "command")})
    return RunConfig(ns.command, **{k: _coerce(k, v) for k, v in cfg.items()})


def parse_grid(text) -> List[float]:
    if text is None:
        raise DomainError("--T is required")
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise DomainError(f"bad --T value {text!r}") from exc
    if not vals:
        raise DomainError("--T grid is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise DomainError("--T grid must be strictly increasing")
    if any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise DomainError("--T values must be positive")
    return vals


def _need(cfg, key):
    if getattr(cfg, key) is None:
        raise DomainError(f"--{key.replace('_', '-')} is required for {cfg.command}")
    return getattr(cfg, key)


def _spec(cfg) -> Optional[QuadratureSpec]:
    if cfg.tol is None:
        return None
    if not cfg.tol > 0:
        raise DomainError("--tol must be positive")
    return QuadratureSpec(rel_tol=cfg.tol, abs_tol=1e-3 * cfg.tol)


# ---------------------------------------------------------------- commands

def cmd_norm(cfg):
    rows = []
    for T in parse_grid(cfg.T):
        c = norm_fT_sq(T, _need(cfg, "H"), _spec(cfg))
        comps = {k: getattr(c, k) for k in ("I1", "I2", "I3", "J1", "J2bar", "L23pair", "closed_form")
                 if getattr(c, k) is not None}
        rows.append({"T": T, "H": c.H, "branch": c.branch, "total": c.total,
                     "norm_over_2T": c.total / (2 * T), "components": comps})
    return rows


def cmd_constants(cfg):
    H = _need(cfg, "H")
    c = ex.sigma_consts(H)
    p = ex.asymptote_params(H)
    return [{"H": H, "a": c.a, "sigmaH2": c.sigmaH2, "sigma2": c.sigma2,
             "slope": p.slope, "intercept": p.intercept}]


def cmd_expand(cfg):
    H = _need(cfg, "H")
    rows = []
    for T in parse_grid(cfg.T):
        e = ex.theorem_expansion(T, H, as_printed=bool(cfg.as_printed))
        rows.append({"T": T, "H": H, "value": e.value, "remainder_exponent": e.remainder_exponent,
                     "terms": [{"label": t.label, "coefficient": t.coefficient,
                                "T_exponent": t.T_exponent, "has_log": t.has_log} for t in e.terms]})
    return rows


def cmd_decay(cfg):
    rows = ex.decay_check(_need(cfg, "H"), parse_grid(cfg.T), _spec(cfg))
    return [{k: r[k] for k in CSV_SCHEMAS["decay"]} for r in rows]


def cmd_asymptote(cfg):
    H = _need(cfg, "H")
    p = ex.asymptote_params(H)
    rows = []
    for T in parse_grid(cfg.T):
        half = norm_fT_sq(T, H, _spec(cfg)).total / 2
        line = p.slope * T + p.intercept
        rows.append({"T": T, "half_norm": half, "line": line, "gap": half - line})
    return rows


def cmd_lemma(cfg):
    lemma = _need(cfg, "lemma")
    param = None
    if lemma in ("A2", "A3", "A5"):
        param = _need(cfg, "beta")
    elif lemma in ("L1", "L2"):
        param = _need(cfg, "H")
    rows = ex.lemma_residuals(lemma, parse_grid(cfg.T), param)
    return [{k: r[k] for k in CSV_SCHEMAS["lemma"]} for r in rows]


def cmd_mc(cfg):
    H = _need(cfg, "H")
    T = parse_grid(cfg.T if cfg.T is not None else "50")
    if len(T) != 1:
        raise DomainError("mc-wt takes a single --T")
    mc = McConfig(seed=cfg.seed, n_steps=cfg.steps, n_paths=cfg.paths, T=T[0], H=H)
    est = mc_wt_variance(mc)
    s2 = ex.sigma_consts(H).sigma2
    return [{"H": H, "T": T[0], "mean": est.mean, "std_error": est.std_error,
             "n_paths": est.n_paths, "sigma2": s2, "z": (est.mean - s2) / est.std_error}]


def cmd_rho(cfg):
    H = _need(cfg, "H")
    r_max = cfg.r_max if cfg.r_max is not None else default_r_max(H)
    v = rho_sq_integral(H, r_max, _spec(cfg))
    t = ex.sigma_consts(H).sigma2 / 4
    return [{"H": H, "r_max": r_max, "value": v, "target": t, "rel_gap": v / t - 1.0}]


def cmd_verify(cfg):
    from .acceptance import run_all
    results = run_all()
    for r in results:
        print(r.line(), file=sys.stderr)
        for d in r.details:
            print(f"      {d}", file=sys.stderr)
    return [{"criterion": r.number, "title": r.title, "passed": int(r.passed),
             "seconds": r.seconds, "details": r.details} for r in results]


HANDLERS = {"norm": cmd_norm, "constants": cmd_constants, "expand": cmd_expand,
            "decay": cmd_decay, "asymptote": cmd_asymptote, "lemma": cmd_lemma,
            "mc-wt": cmd_mc, "rho-integral": cmd_rho, "verify-all": cmd_verify}


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, float):
        return repr(v) if not math.isfinite(v) else f"{v:.17g}"
    return str(v)


def render(command: str, rows: List[dict], fmt: str, timestamp: bool) -> str:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if fmt == "json":
        body = rows[0] if len(rows) == 1 and command != "verify-all" else rows
        doc = {"command": command, "result": body}
        if timestamp:
            doc["generated"] = stamp
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {stamp}\n")
    cols = CSV_SCHEMAS[command]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def read_csv_report(text: str, command: str) -> List[Dict[str, float]]:
    """Parse a CSV report and check its header against the schema."""
    lines = [ln for ln in text.split("\n") if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if header != CSV_SCHEMAS[command]:
        raise DomainError(f"header {header} does not match schema {CSV_SCHEMAS[command]}")
    rows = []
    for rec in reader:
        if len(rec) != len(header):
            raise DomainError(f"row {rec} has {len(rec)} fields, expected {len(header)}")
        rows.append({k: float(v) for k, v in zip(header, rec)})
    return rows


def validate_json_report(doc: dict) -> None:
    """Check a JSON report carries exactly the documented fields."""
    command = doc.get("command")
    if command not in JSON_FIELDS:
        raise DomainError(f"unknown command {command!r}")
    body = doc["result"]
    for row in body if isinstance(body, list) else [body]:
        missing = set(CSV_SCHEMAS[command]) - set(row)
        extra = set(row) - JSON_FIELDS[command]
        if missing or extra:
            raise DomainError(f"fields: missing {sorted(missing)}, unexpected {sorted(extra)}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cfg = resolve(ns)
        rows = HANDLERS[cfg.command](cfg)
        text = render(cfg.command, rows, cfg.format, not cfg.no_timestamp)
    except NonConvergence as exc:
        print(f"fbmh: quadrature did not converge: {exc}", file=sys.stderr)
        return 3
    except (DomainError, ValueError, OSError) as exc:
        print(f"fbmh: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.command == "verify-all" and not all(r["passed"] for r in rows):
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
