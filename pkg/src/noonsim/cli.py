"""Command-line entry point: ``noonsim <subcommand> [options]``.

Subcommands
-----------
validate        convention checks; writes ``validation.json``
scan-temporal   four temporal panels versus analyzer angle chi
scan-spatial    N=1 and N=3 fringes versus fiber position, plus ``spatial_scan.csv``
profile         one-arm beam profiles with Gaussian width fits
sample          redraw Poisson counts for an existing record CSV
fit             fit a record CSV (fringe or profile) and compare with the classical bound
bound           print the classical visibility bound for ``--n`` photons

Exit status: 0 on success, 1 when a validation check fails, 2 on a bad
config, bad input file or bad arguments.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfg
from .analysis import FitWarning, compare_bound, fit_fringe, fit_gaussian_profile
from .records import ScanRecord, write_table
from .scenarios import (
    Experiment,
    profile_spec,
    run_profile_scan,
    run_spatial_scan,
    run_temporal_scan,
    run_validation,
    sample_counts,
    spatial_spec,
    temporal_spec,
)
from .spatial import classical_visibility_bound, spatial_scan_table


class UsageError(Exception):
    pass


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")
    return path


class Run:
    def __init__(self, args):
        self.args = args
        self.data = cfg.load_config(args.config)
        seed = self.data["output"]["seed"] if args.seed is None else args.seed
        if not 0 <= seed < 2 ** 64:
            raise cfg.ConfigError("--seed: expected an unsigned 64-bit integer")
        self.seed = seed
        self.out = Path(args.out if args.out is not None else self.data["output"]["dir"])

    def outdir(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out

    def say(self, line: str):
        if not self.args.quiet:
            print(line)


def _fringe_summary(rec: ScanRecord, envelope: str, n: int | None = None):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FitWarning)
        fit = fit_fringe(rec, envelope=envelope)
    out = {"fit": fit.as_dict(), "warnings": [str(w.message) for w in caught]}
    out["fit"].pop("covariance", None)
    if n is not None and math.isfinite(fit.visibility_err) and fit.visibility_err > 0:
        out["bound"] = compare_bound(fit, n).as_dict()
    return fit, out


def cmd_validate(run: Run) -> int:
    report = run_validation(Experiment(run.data))
    path = _write_json(run.outdir() / "validation.json", report.as_dict())
    failed = [c.name for c in report.checks if not c.passed]
    run.say(f"validate: {len(report.checks) - len(failed)}/{len(report.checks)} checks passed -> {path}")
    for name in failed:
        print(f"FAILED {name}: {report[name].detail}", file=sys.stderr)
    return 1 if failed else 0


def cmd_scan_temporal(run: Run) -> int:
    exp = Experiment(run.data)
    records = run_temporal_scan(exp, temporal_spec(run.data, run.seed))
    out = run.outdir()
    summary = {"seed": run.seed, "panels": {}}
    for name, rec in records.items():
        rec.write_csv(out / f"temporal_{name}.csv")
        line = f"scan-temporal {name}: {len(rec)} points, {int(rec.sampled_counts.sum())} counts"
        if name == "threefold":
            # several harmonics, no single-cosine visibility
            summary["panels"][name] = {"fit": None}
        else:
            fit, info = _fringe_summary(rec, "none", n=None if name == "single_2fold" else 3)
            summary["panels"][name] = info
            line += (f", V = {fit.visibility:.3f} +/- {fit.visibility_err:.3f}, "
                     f"period = {math.degrees(fit.period):.2f} deg")
        run.say(line)
    _write_json(out / "temporal_summary.json", summary)
    return 0


def cmd_scan_spatial(run: Run) -> int:
    exp = Experiment(run.data)
    spec = spatial_spec(run.data, run.seed)
    records = run_spatial_scan(exp, spec)
    out = run.outdir()
    summary = {"seed": run.seed, "scans": {}}
    for name, rec in records.items():
        rec.write_csv(out / f"spatial_{name}.csv")
        n = int(rec.metadata["N"])
        fit, info = _fringe_summary(rec, "gaussian", n=n if n > 1 else None)
        summary["scans"][name] = info
        run.say(f"scan-spatial {name}: {len(rec)} points, {int(rec.sampled_counts.sum())} counts, "
                f"V = {fit.visibility:.3f} +/- {fit.visibility_err:.3f}, period = {fit.period * 1e6:.3f} um")
    phase = math.radians(run.data["noise"]["phase_deg"])
    write_table(out / "spatial_scan.csv",
                spatial_scan_table(spec.grid, exp.geometry, phase, spec.visibility))
    _write_json(out / "spatial_summary.json", summary)
    return 0


def cmd_profile(run: Run) -> int:
    exp = Experiment(run.data)
    records = run_profile_scan(exp, profile_spec(run.data, run.seed))
    out = run.outdir()
    summary = {"seed": run.seed, "profiles": {}}
    for name, rec in records.items():
        rec.write_csv(out / f"profile_{name}.csv")
        fit = fit_gaussian_profile(rec)
        summary["profiles"][name] = fit.as_dict()
        run.say(f"profile {name}: {len(rec)} points, {int(rec.sampled_counts.sum())} counts, "
                f"2w0 = {2 * fit.w0 * 1e6:.2f} +/- {2 * fit.w0_err * 1e6:.2f} um")
    w1, w3 = summary["profiles"]["N1"]["w0"], summary["profiles"]["N3"]["w0"]
    summary["width_ratio"] = w3 / w1
    _write_json(out / "profile_summary.json", summary)
    return 0


def _read_input(path) -> ScanRecord:
    if path is None:
        raise UsageError("--input is required")
    try:
        return ScanRecord.read_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_sample(run: Run) -> int:
    rec = _read_input(run.args.input)
    time = rec.integration_time if run.args.time is None else np.full(len(rec), run.args.time)
    counts = sample_counts(rec.expected_rate * time, run.seed, run.args.stream)
    new = ScanRecord(rec.name, rec.setting_name, rec.settings, rec.expected_rate, counts, time)
    path = new.write_csv(run.outdir() / f"{rec.name}_seed{run.seed}.csv")
    run.say(f"sample {rec.name}: {len(new)} points, {int(counts.sum())} counts -> {path}")
    return 0


def cmd_fit(run: Run) -> int:
    rec = _read_input(run.args.input)
    use = "expected" if run.args.expected else "counts"
    if run.args.model == "profile":
        fit = fit_gaussian_profile(rec, use=use)
        payload = {"input": str(run.args.input), "model": "profile", "fit": fit.as_dict()}
        line = f"fit {rec.name}: 2w0 = {2 * fit.w0 * 1e6:.3f} +/- {2 * fit.w0_err * 1e6:.3f} um"
    else:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", FitWarning)
            fit = fit_fringe(rec, use=use, envelope=run.args.envelope)
        payload = {"input": str(run.args.input), "model": "fringe", "fit": fit.as_dict(),
                   "warnings": [str(w.message) for w in caught]}
        line = f"fit {rec.name}: V = {fit.visibility:.4f} +/- {fit.visibility_err:.4f}, period = {fit.period:.6g}"
        if run.args.n is not None and math.isfinite(fit.visibility_err) and fit.visibility_err > 0:
            cmp = compare_bound(fit, run.args.n)
            payload["bound"] = cmp.as_dict()
            rel = {"above": "above", "below": "below", "consistent": "consistent with"}[cmp.verdict]
            line += f", {rel} the N={run.args.n} bound {cmp.bound:.4g} (z = {cmp.z:.2f})"
    _write_json(run.outdir() / f"fit_{rec.name}.json", payload)
    run.say(line)
    return 0


def cmd_bound(run: Run) -> int:
    n = 3 if run.args.n is None else run.args.n
    if n < 1:
        raise UsageError("--n must be at least 1")
    print(f"{classical_visibility_bound(n):.12g}")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "scan-temporal": cmd_scan_temporal,
    "scan-spatial": cmd_scan_spatial,
    "profile": cmd_profile,
    "sample": cmd_sample,
    "fit": cmd_fit,
    "bound": cmd_bound,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML config (default: shipped defaults)")
    common.add_argument("--out", type=Path, help="output directory (default: [output].dir)")
    common.add_argument("--seed", type=int, help="override [output].seed")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress summary lines")

    parser = argparse.ArgumentParser(prog="noonsim", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in ("validate", "scan-temporal", "scan-spatial", "profile"):
        sub.add_parser(name, parents=[common])
    p = sub.add_parser("sample", parents=[common])
    p.add_argument("--input", type=Path)
    p.add_argument("--time", type=float, help="integration time per point in s (default: from the file)")
    p.add_argument("--stream", type=int, default=0, help="RNG stream index")
    p = sub.add_parser("fit", parents=[common])
    p.add_argument("--input", type=Path)
    p.add_argument("--model", choices=("fringe", "profile"), default="fringe")
    p.add_argument("--envelope", choices=("gaussian", "none"), default="gaussian")
    p.add_argument("--expected", action="store_true", help="fit expected_rate instead of sampled_counts")
    p.add_argument("--n", type=int, help="photon number for the classical bound comparison")
    p = sub.add_parser("bound", parents=[common])
    p.add_argument("--n", type=int, default=3)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        run = Run(args)
        return COMMANDS[args.command](run)
    except cfg.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
