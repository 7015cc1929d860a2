"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration, 3 hidden-variable model
invalid at the requested strength, 4 a verification tolerance was missed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__, analysis, lhv, quantum, sampling
from .errors import InvalidInput, ModelInvalid, TruncationError, TwcError
from .events import Event, OscillatorStrength, Settings
from .oracle import amplitude_oracle

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_MODEL_INVALID = 3
EXIT_TOLERANCE = 4

OUTPUT_DIR_ENV = "TWCLHV_OUTPUT_DIR"
DEFAULT_CUTOFF = 20
DEFAULT_TOLERANCE = 1e-9

COMMANDS = ("probs", "verify", "sample", "chsh", "scan", "threshold", "audit", "model", "deltas")

# twelve (theta1, theta2) pairs covering both orderings and all quadrants
VERIFY_SETTINGS = tuple(
    Settings(t1, t2)
    for t1, t2 in [
        (0.0, 0.0),
        (math.pi / 6, 0.0),
        (0.0, math.pi / 6),
        (math.pi / 2, 0.0),
        (0.0, math.pi / 2),
        (math.pi / 3, math.pi / 4),
        (math.pi / 4, math.pi / 3),
        (2.0, -1.0),
        (-2.5, 0.4),
        (3.0 * math.pi / 4, -math.pi / 4),
        (5.0, 1.0),
        (-1.2, -4.0),
    ]
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    alpha_sq: float | None = None
    theta1: float = 0.0
    theta2: float = 0.0
    theta1_prime: float = 0.0
    theta2_prime: float = 0.0
    cutoff: int = DEFAULT_CUTOFF
    samples: int = 0
    seed: int = 0
    output_format: str = "csv"
    output_path: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidInput(f"unknown command {self.command!r}")
        if self.alpha_sq is not None and not (math.isfinite(self.alpha_sq) and self.alpha_sq > 0.0):
            raise InvalidInput(f"--alpha-sq must be > 0, got {self.alpha_sq}")
        if self.cutoff < 1:
            raise InvalidInput(f"--cutoff must be >= 1, got {self.cutoff}")
        if self.samples < 0:
            raise InvalidInput(f"--samples must be >= 0, got {self.samples}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInput(f"--seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.output_format not in ("csv", "json"):
            raise InvalidInput(f"--format must be csv or json, got {self.output_format!r}")
        for name in ("theta1", "theta2", "theta1_prime", "theta2_prime"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInput(f"--{name.replace('_', '-')} must be finite")

    @property
    def strength(self) -> OscillatorStrength:
        if self.alpha_sq is None:
            raise InvalidInput("--alpha-sq is required")
        return OscillatorStrength.from_alpha_sq(self.alpha_sq)

    @property
    def settings(self) -> Settings:
        return Settings(self.theta1, self.theta2)


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def render_json(cfg: RunConfig, result: dict) -> str:
    config = {k: v for k, v in asdict(cfg).items() if k != "output_path"}
    doc = {"command": cfg.command, "version": __version__, "config": config, "result": result}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass
class Output:
    header: list
    rows: list
    result: dict
    message: str = ""
    exit_code: int = EXIT_OK


def _emit(cfg: RunConfig, out: Output) -> None:
    text = render_csv(out.header, out.rows) if cfg.output_format == "csv" else render_json(cfg, out.result)
    path = cfg.output_path
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        path = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{cfg.command}.{cfg.output_format}")
    if path is None:
        sys.stdout.write(text)
    else:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    if out.message:
        print(out.message, file=sys.stderr)


# ---------------------------------------------------------------------------
# commands


def cmd_probs(cfg: RunConfig, args) -> Output:
    alpha = cfg.strength
    table = quantum.distribution(alpha, cfg.settings, cfg.cutoff, tol=args.tail_tol)
    header = ["k", "l", "r", "s", "probability"]
    rows = []
    worst = 0.0
    for ev, p in table:
        row = [*ev, p]
        if args.oracle:
            o = amplitude_oracle(alpha, cfg.settings, ev)
            worst = max(worst, abs(o - p))
            row.append(o)
        rows.append(row)
    if args.oracle:
        header.append("oracle")
    result = {
        "alpha_sq": alpha.alpha_sq,
        "theta12": cfg.settings.theta12,
        "cutoff": cfg.cutoff,
        "tail_bound": table.tail_bound,
        "total": table.total(),
        "events": [{"event": list(ev), "probability": p} for ev, p in table],
    }
    msg = f"tail bound {table.tail_bound:.3e}, sum {table.total():.17g}"
    if args.oracle:
        result["oracle_max_deviation"] = worst
        msg += f", oracle max deviation {worst:.3e}"
    return Output(header, rows, result, msg)


def cmd_verify(cfg: RunConfig, args) -> Output:
    alpha = cfg.strength
    model = lhv.build_full_model(alpha, cfg.cutoff, validity=args.validity)
    max_total = min(args.max_total, cfg.cutoff)
    err, ev, st = lhv.max_deviation(model, VERIFY_SETTINGS, max_total)
    ok = err < args.tolerance
    result = {
        "alpha_sq": alpha.alpha_sq,
        "cutoff": cfg.cutoff,
        "max_total": max_total,
        "settings_checked": len(VERIFY_SETTINGS),
        "max_error": err,
        "max_error_event": list(ev),
        "max_error_settings": [st.theta1, st.theta2],
        "tolerance": args.tolerance,
        "passed": ok,
        "weight_sum": model.weight_sum(),
        "weight_tail": model.weight_tail,
    }
    header = ["max_error", "k", "l", "r", "s", "theta1", "theta2", "tolerance", "passed"]
    rows = [[err, *ev, st.theta1, st.theta2, args.tolerance, ok]]
    msg = f"max |LHV - quantum| = {err:.3e} at event {tuple(ev)}, theta=({st.theta1:.6g}, {st.theta2:.6g})"
    return Output(header, rows, result, msg, EXIT_OK if ok else EXIT_TOLERANCE)


def cmd_sample(cfg: RunConfig, args) -> Output:
    model = lhv.build_full_model(cfg.strength, cfg.cutoff, validity=args.validity)
    if args.counts:
        counts = sampling.sample_counts(model, cfg.settings, cfg.samples, seed=cfg.seed)
        items = sorted(counts.items())
        header = ["k", "l", "r", "s", "count"]
        rows = [[*ev, c] for ev, c in items]
        result = {"samples": cfg.samples, "seed": cfg.seed, "counts": [{"event": list(ev), "count": c} for ev, c in items]}
    else:
        events = sampling.sample_events(model, cfg.settings, cfg.samples, seed=cfg.seed)
        header = ["k", "l", "r", "s"]
        rows = events.tolist()
        result = {"samples": cfg.samples, "seed": cfg.seed, "events": rows}
    return Output(header, rows, result)


def cmd_chsh(cfg: RunConfig, args) -> Output:
    alpha = cfg.strength
    if args.optimize:
        value, s = analysis.optimize_chsh(alpha, cfg.cutoff)
    else:
        s = analysis.ChshSettings(cfg.theta1, cfg.theta1_prime, cfg.theta2, cfg.theta2_prime)
        value = analysis.chsh_value(alpha, s, cfg.cutoff)
    violated = abs(value) > 2.0
    result = {"alpha_sq": alpha.alpha_sq, "cutoff": cfg.cutoff, "settings": asdict(s), "chsh": value, "violation": violated}
    header = ["alpha_sq", "theta1", "theta1_prime", "theta2", "theta2_prime", "chsh", "violation"]
    rows = [[alpha.alpha_sq, s.theta1, s.theta1_prime, s.theta2, s.theta2_prime, value, violated]]
    return Output(header, rows, result, f"S = {value:.12g} ({'violates' if violated else 'respects'} |S| <= 2)")


def cmd_scan(cfg: RunConfig, args) -> Output:
    grid = None
    if args.grid:
        grid = [float(g) for g in args.grid.split(",")]
    scan = analysis.violation_window(cfg.cutoff, grid, check_total=args.check_total, workers=args.workers)
    last, first = scan.boundary()
    return Output(list(scan.columns), scan.table(), scan.to_dict(), f"violation boundary between {last} and {first}")


def cmd_threshold(cfg: RunConfig, args) -> Output:
    closed = analysis.threshold_alpha_sq("closed_form")
    root = analysis.threshold_alpha_sq("root_find")
    exact = analysis.exact_threshold_alpha_sq()
    diff = abs(closed - root)
    ok = diff < args.tolerance
    result = {"closed_form": closed, "root_find": root, "difference": diff, "consistent": ok, "exact_delta_root": exact}
    header = ["closed_form", "root_find", "difference", "consistent", "exact_delta_root"]
    msg = f"alpha^2 threshold {closed:.12f} (Lambert W) vs {root:.12f} (bisection), |diff| = {diff:.1e}"
    return Output(header, [[closed, root, diff, ok, exact]], result, msg, EXIT_OK if ok else EXIT_TOLERANCE)


def cmd_audit(cfg: RunConfig, args) -> Output:
    report = analysis.normalization_audit(cfg.strength, cfg.cutoff, tol=args.tolerance)
    header = ["identity", "lhs", "rhs", "residual", "ok"]
    msg = "audit passed" if report.passed else "audit FAILED:\n  " + "\n  ".join(report.failures())
    return Output(header, report.table(), report.to_dict(), msg, EXIT_OK if report.passed else EXIT_TOLERANCE)


def cmd_model(cfg: RunConfig, args) -> Output:
    model = lhv.build_full_model(cfg.strength, cfg.cutoff, validity=args.validity)
    header = ["kind", "k", "l", "r", "s", "weight"]
    rows = [[s.kind, *s.index, s.weight] for s in model.submodels]
    return Output(header, rows, model.to_dict(), f"{len(model.submodels)} submodels, weight sum {model.weight_sum():.17g}")


def cmd_deltas(cfg: RunConfig, args) -> Output:
    step = args.step
    grid = [round(step * i, 12) for i in range(1, int(round(args.max_alpha_sq / step)) + 1)]
    diffs = [int(d) for d in args.differences.split(",")]
    rows = analysis.delta_positivity_map(grid, diffs)
    header = ["difference", "first_negative_exact", "first_negative_strict"]
    table = [[r.difference, r.first_negative_exact, r.first_negative_strict] for r in rows]
    result = {"grid_step": step, "rows": [asdict(r) for r in rows]}
    return Output(header, table, result)


HANDLERS = {
    "probs": cmd_probs,
    "verify": cmd_verify,
    "sample": cmd_sample,
    "chsh": cmd_chsh,
    "scan": cmd_scan,
    "threshold": cmd_threshold,
    "audit": cmd_audit,
    "model": cmd_model,
    "deltas": cmd_deltas,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", dest="output_path", default=None, help=f"file to write (default: stdout, or ${OUTPUT_DIR_ENV}/<command>.<format>)")
    common.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF, help="maximum total photon number")
    common.add_argument("--degrees", action="store_true", help="read angles in degrees")

    strength = argparse.ArgumentParser(add_help=False)
    strength.add_argument("--alpha-sq", type=float, required=True, help="oscillator strength alpha^2")

    angles = argparse.ArgumentParser(add_help=False)
    angles.add_argument("--theta1", type=float, default=0.0)
    angles.add_argument("--theta2", type=float, default=0.0)

    validity = argparse.ArgumentParser(add_help=False)
    validity.add_argument("--validity", choices=(lhv.CERTIFIED, lhv.EXACT), default=lhv.CERTIFIED)

    tolerance = argparse.ArgumentParser(add_help=False)
    tolerance.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)

    parser = argparse.ArgumentParser(prog="twc-lhv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probs", parents=[common, strength, angles], help="quantum event probabilities")
    p.add_argument("--oracle", action="store_true", help="add the amplitude-expansion cross-check column")
    p.add_argument("--tail-tol", type=float, default=quantum.DEFAULT_TAIL_TOL)

    sub.add_parser("verify", parents=[common, strength, validity, tolerance], help="LHV model vs quantum").add_argument(
        "--max-total", type=int, default=8
    )

    p = sub.add_parser("sample", parents=[common, strength, angles, validity], help="sample events from the LHV model")
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--counts", action="store_true", help="emit a histogram instead of raw events")

    p = sub.add_parser("chsh", parents=[common, strength, angles], help="CHSH combination of correlations")
    p.add_argument("--theta1-prime", type=float, default=0.0)
    p.add_argument("--theta2-prime", type=float, default=0.0)
    p.add_argument("--optimize", action="store_true", help="maximise |S| over all settings")

    p = sub.add_parser("scan", parents=[common], help="optimised CHSH along an alpha^2 grid")
    p.add_argument("--grid", default=None, help="comma-separated alpha^2 values (default 0.02..0.60)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--check-total", type=int, default=6, help="largest event total in the LHV check")

    sub.add_parser("threshold", parents=[common, tolerance], help="validity threshold by Lambert W and bisection")
    sub.add_parser("audit", parents=[common, strength, tolerance], help="normalisation audit of submodel weights")
    sub.add_parser("model", parents=[common, strength, validity], help="export the LHV mixture as JSON/CSV")

    p = sub.add_parser("deltas", parents=[common], help="where vacuum weights turn negative, per |k-l|")
    p.add_argument("--differences", default="1,2,3")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--max-alpha-sq", type=float, default=2.0)
    return parser


def _config(args) -> RunConfig:
    conv = math.radians if args.degrees else float
    return RunConfig(
        command=args.command,
        alpha_sq=getattr(args, "alpha_sq", None),
        theta1=conv(getattr(args, "theta1", 0.0)),
        theta2=conv(getattr(args, "theta2", 0.0)),
        theta1_prime=conv(getattr(args, "theta1_prime", 0.0)),
        theta2_prime=conv(getattr(args, "theta2_prime", 0.0)),
        cutoff=args.cutoff,
        samples=getattr(args, "samples", 0),
        seed=getattr(args, "seed", 0),
        output_format=args.output_format,
        output_path=args.output_path,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        out = HANDLERS[cfg.command](cfg, args)
    except ModelInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_INVALID
    except (InvalidInput, TruncationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except TwcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    _emit(cfg, out)
    return out.exit_code


if __name__ == "__main__":
    sys.exit(main())
