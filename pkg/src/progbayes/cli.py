"""Command line interface: ``progbayes analyze | prior-fit | theory | simulate | replay``.

Data goes to files or standard output; diagnostics and progress go to
standard error.  Every file written is paired with a ``.manifest.json``
recording the resolved parameters, input digests and tool version, and
``progbayes replay`` re-runs a manifest to regenerate its outputs.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .data import load_historical_csv, load_trial_csv
from .elicitation import DEFAULT_FLOOR, PriorEstimate, study_level_lambda, subject_level_lambda
from .errors import ConfigError, DataError, DomainError, ProgBayesError
from .estimators import METHODS, prog_adjust_analysis, single_arm_analysis, unadjusted_analysis
from .posterior import ExtendedPriorSpec, PriorSpec, bayes_analysis, bayes_beta2_analysis
from .simulate import AXIS_NAMES, SweepConfig, expand_cells, resolve_workers, run_sweep
from .theory import asymptotic_rejection_rate, prog_adjust_power, single_arm_power, zero_limit_rate

TABLE_LABELS = {
    "unadjusted": "Unadjusted",
    "prog_adjust": "Prognostic Covariate Adjustment",
    "bayes": "Bayesian Prognostic Covariate Adjustment",
    "bayes_beta2": "Bayesian Prognostic Covariate Adjustment (slope prior)",
    "single_arm": "Single-arm",
}
TABLE_ORDER = ("unadjusted", "prog_adjust", "bayes", "bayes_beta2", "single_arm")


def _err(msg):
    print(f"progbayes: {msg}", file=sys.stderr)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command, argv, parameters, inputs=(), outputs=(), seed=None):
    doc = {
        "command": command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "parameters": parameters,
        "seed": seed,
        "tool_version": __version__,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_path(out):
    return Path(str(out) + ".manifest.json")


def _dump_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# analyze


def _parse_methods(text):
    if text == "all":
        return list(TABLE_ORDER[:3]) + ["single_arm"]
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise DomainError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)} or 'all'")
    return methods


def format_table(reports):
    width = max(len(TABLE_LABELS[r.method]) for r in reports)
    lines = [f"{'Analysis':<{width}}  Result", "-" * (width + 16)]
    for r in sorted(reports, key=lambda r: TABLE_ORDER.index(r.method)):
        flag = " *" if r.reject else ""
        if r.degenerate:
            flag += " (degenerate)"
        lines.append(f"{TABLE_LABELS[r.method]:<{width}}  {r.format_row()}{flag}")
    lines.append("Result: estimated effect ± 1.96 × estimated standard deviation; * = null rejected")
    return "\n".join(lines)


def cmd_analyze(args, argv):
    methods = _parse_methods(args.methods)
    needs_prior = any(m in ("bayes", "bayes_beta2") for m in methods)
    inputs = [args.data]
    lam = args.lam
    if args.prior is not None:
        try:
            doc = json.loads(Path(args.prior).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read prior file {args.prior}: {exc}") from None
        lam = PriorEstimate.from_dict(doc).lam
        inputs.append(args.prior)
    if needs_prior and lam is None:
        raise DomainError("Bayesian methods need --lambda or --prior")
    if "bayes_beta2" in methods and args.lambda2 is None:
        raise DomainError("bayes_beta2 needs --lambda2")
    data = load_trial_csv(args.data)
    reports = []
    for meth in methods:
        if meth == "unadjusted":
            reports.append(unadjusted_analysis(data, args.alpha))
        elif meth == "prog_adjust":
            reports.append(prog_adjust_analysis(data, args.alpha))
        elif meth == "single_arm":
            reports.append(single_arm_analysis(data, args.alpha))
        elif meth == "bayes":
            reports.append(bayes_analysis(data, PriorSpec(lam), args.alpha))
        else:
            prior = ExtendedPriorSpec(lam, args.lambda2, args.mu2_0)
            reports.append(bayes_beta2_analysis(data, prior, args.alpha))
    print(format_table(reports))
    params = {
        "data": args.data,
        "alpha": args.alpha,
        "lambda": lam,
        "lambda2": args.lambda2,
        "mu2_0": args.mu2_0,
        "methods": methods,
        "n": data.n,
        "n_lambda_sq": None if lam is None else data.n * lam**2,
    }
    if args.out:
        _dump_json({"parameters": params, "reports": [r.to_dict() for r in reports]}, args.out)
        write_manifest(_manifest_path(args.out), "analyze", argv, params, inputs, [args.out])
    return 0


# ---------------------------------------------------------------------------
# prior-fit


def cmd_prior_fit(args, argv):
    hist = load_historical_csv(args.data)
    if args.mode == "subject":
        est = subject_level_lambda(hist, floor=args.floor)
    else:
        est = study_level_lambda(hist)
    _dump_json(est.to_dict(), args.out)
    if args.out:
        params = {"data": args.data, "mode": args.mode, "floor": args.floor}
        write_manifest(_manifest_path(args.out), "prior-fit", argv, params, [args.data], [args.out])
    return 0


# ---------------------------------------------------------------------------
# theory


def _parse_axis(text):
    if "=" not in text:
        raise DomainError(f"--curve expects AXIS=VALUES, got {text!r}")
    name, spec = text.split("=", 1)
    name = name.strip()
    if name not in AXIS_NAMES:
        raise DomainError(f"unknown curve axis {name!r}; choose from {', '.join(AXIS_NAMES)}")
    spec = spec.strip()
    try:
        if spec.startswith(("logspace:", "linspace:")):
            kind, lo, hi, num = spec.split(":")
            lo, hi, num = float(lo), float(hi), int(num)
            if num < 2:
                return name, [lo]
            if kind == "logspace":
                if lo <= 0 or hi <= 0:
                    raise DomainError("logspace endpoints must be positive")
                ratio = (hi / lo) ** (1.0 / (num - 1))
                values = [lo * ratio**i for i in range(num - 1)] + [hi]
            else:
                values = [lo + (hi - lo) * i / (num - 1) for i in range(num)]
        else:
            values = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise DomainError(f"cannot parse curve values {spec!r}") from None
    if name == "n":
        values = [int(v) for v in values]
    return name, values


def _point_base(args):
    base = {
        "beta0": args.beta0,
        "beta1": args.beta1,
        "beta2": args.beta2,
        "sigma": args.sigma,
        "n": args.n,
        "p": args.p,
        "alpha": args.alpha,
    }
    if args.lam is not None:
        base["lambda"] = args.lam
    else:
        base["n_lambda_sq"] = args.n_lambda_sq
    return base


THEORY_COLUMNS = (
    "beta0", "beta1", "beta2", "sigma", "n", "p", "lambda", "n_lambda_sq",
    "beta0_over_lambda_sigma", "alpha", "rejection_rate", "tau", "v_hat", "v11_limit",
    "variance_factor", "threshold_multiplier", "prog_adjust_power", "single_arm_power",
    "zero_limit_rate", "warning",
)  # fmt: skip


def theory_rows(base, axes, targets=None):
    doc = {"base": base, "axes": axes, "targets": targets or {}, "replicates": 1}
    config = SweepConfig.from_dict(doc)
    rows = []
    for cell in expand_cells(config):
        if cell.spec is None:
            rows.append({**{k: v for k, v in cell.coords.items() if k in THEORY_COLUMNS}, "warning": cell.warning})
            continue
        pt = cell.spec.point
        out = asymptotic_rejection_rate(pt, cell.n_lambda_sq)
        rows.append(
            {
                "beta0": pt.beta0,
                "beta1": pt.beta1,
                "beta2": pt.beta2,
                "sigma": pt.sigma,
                "n": pt.n,
                "p": pt.p,
                "lambda": pt.lam,
                "n_lambda_sq": cell.n_lambda_sq,
                "beta0_over_lambda_sigma": pt.beta0 / (pt.lam * pt.sigma),
                "alpha": pt.alpha,
                **out.to_dict(),
                "prog_adjust_power": prog_adjust_power(pt),
                "single_arm_power": single_arm_power(pt),
                "zero_limit_rate": zero_limit_rate(pt),
                "warning": "",
            }
        )
    return rows


def _rows_to_csv(rows, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row.get(c) is None else (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in columns])
    return buf.getvalue()


def cmd_theory(args, argv):
    base = _point_base(args)
    axes = dict(_parse_axis(c) for c in args.curve or [])
    targets = {}
    for t in args.target or []:
        if "=" not in t:
            raise DomainError(f"--target expects NAME=VALUE, got {t!r}")
        k, v = t.split("=", 1)
        targets[k.strip()] = float(v)
    try:
        rows = theory_rows(base, axes, targets)
    except ConfigError as exc:
        raise DomainError(str(exc)) from None
    fmt = args.format or (Path(args.out).suffix.lstrip(".") if args.out else "csv")
    if fmt not in ("csv", "json"):
        fmt = "csv"
    text = _rows_to_csv(rows, THEORY_COLUMNS) if fmt == "csv" else json.dumps(rows, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        params = {"base": base, "axes": axes, "targets": targets, "format": fmt}
        write_manifest(_manifest_path(args.out), "theory", argv, params, outputs=[args.out])
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args, argv):
    config = SweepConfig.from_json(args.config)
    workers = resolve_workers(args.workers)

    def progress(done, total):
        print(f"[progbayes] cells {done}/{total}", file=sys.stderr, flush=True)

    result = run_sweep(config, workers=workers, progress=progress)
    prefix = Path(args.out)
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True)
    csv_path = Path(str(prefix) + ".csv")
    json_path = Path(str(prefix) + ".json")
    result.to_csv(csv_path)
    result.to_json(json_path)
    params = {"config": config.to_dict(), "workers": workers}
    write_manifest(
        Path(str(prefix) + ".manifest.json"),
        "simulate",
        argv,
        params,
        [args.config],
        [csv_path, json_path],
        seed=config.seed,
    )
    for row in result.rows:
        if row.get("warning"):
            _err(f"warning: cell {row['cell']}: {row['warning']}")
    return 0


# ---------------------------------------------------------------------------
# replay


def cmd_replay(args, argv):
    try:
        doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read manifest {args.manifest}: {exc}") from None
    stored = doc.get("argv")
    if not stored or stored[0] == "replay":
        raise DataError("manifest has no replayable command")
    # relative paths in the stored argv resolve against the original directory
    here = os.getcwd()
    os.chdir(doc.get("cwd", here))
    try:
        for path, digest in doc.get("inputs", {}).items():
            if not Path(path).exists():
                raise DataError(f"input {path} listed in the manifest is missing")
            if _sha256(path) != digest:
                _err(f"warning: input {path} changed since the manifest was written")
        return main(stored)
    finally:
        os.chdir(here)


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="progbayes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"progbayes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyse one trial CSV (columns y,w,m)")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--lambda", dest="lam", type=float)
    grp.add_argument("--prior", help="PriorEstimate JSON written by prior-fit")
    p.add_argument("--lambda2", type=float, help="prior scale on beta2 (bayes_beta2 only)")
    p.add_argument("--mu2-0", dest="mu2_0", type=float, default=1.0, help="prior mean of beta2 (default 1)")
    p.add_argument("--methods", default="all", help=f"comma list from {','.join(METHODS)}, or 'all'")
    p.add_argument("--out", help="write reports as JSON here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("prior-fit", help="estimate lambda from historical CSV (study_id,y,m)")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=("subject", "study"), default="subject")
    p.add_argument("--floor", type=float, default=DEFAULT_FLOOR, help="constant c in max(c/sqrt(N), |E|)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_prior_fit)

    p = sub.add_parser("theory", help="evaluate asymptotic rejection rates")
    p.add_argument("--beta0", type=float, default=0.0)
    p.add_argument("--beta1", type=float, default=0.0)
    p.add_argument("--beta2", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=math.sqrt(3.0))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--p", type=float, default=0.5)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--lambda", dest="lam", type=float)
    grp.add_argument("--n-lambda-sq", dest="n_lambda_sq", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument(
        "--curve",
        action="append",
        help="AXIS=v1,v2,... or AXIS=logspace:lo:hi:num (repeatable; Cartesian product)",
    )
    p.add_argument("--target", action="append", help="single_arm_type1=RATE or prog_power=POWER")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("simulate", help="run a Monte Carlo sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", default="auto", help="worker processes (default: $PROGBAYES_WORKERS or CPU count)")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv, PREFIX.json, PREFIX.manifest.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except ConfigError as exc:
        for problem in exc.problems:
            _err(f"config error: {problem}")
        return exc.exit_code
    except ProgBayesError as exc:
        _err(str(exc))
        return exc.exit_code
    except ValueError as exc:
        _err(str(exc))
        return 2
