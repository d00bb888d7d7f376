"""Command-line driver: ``qrmt {mp,simulate,lemmas,graphs,replay}``.

Tables are written as CSV with a header row and floats printed with 17
significant digits. ``simulate`` and ``lemmas`` also write ``manifest.json``,
which ``replay`` turns back into a byte-identical run. ``QRMT_SEED`` sets
the default seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .experiments import (CheckRow, TrialConfig, diamond_bound_check, expansion_check,
                          median_by_n, recursion_residual, run_extremes,
                          strictly_decreasing)
from .graphs import enumerate_canonical, is_leading, leading_moment_counts, verify_chain_lemmas
from .mplaw import MPLaw, cdf_many, density, moment, support
from .qmatrix import GuardExceeded
from .randgen import ALIASES, KINDS, EntryDistribution

BOUND_PASS_FRACTION = 0.98
EXACT_TOL = 1e-9
DIST_CHOICES = sorted(set(KINDS) | set(ALIASES))


class CliError(Exception):
    """User-facing failure; reported on stderr with exit code 1."""


def fmt(value) -> str:
    """Locale-independent text for one CSV field."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise CliError(f"output directory {out} is not writable")
    return out


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


def _echo_args(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "validate", "out_dir")}


def _write_manifest(out: Path, command: str, args: argparse.Namespace, started: float,
                    header: Sequence[str], rows: list) -> None:
    manifest = {
        "command": command,
        "args": _echo_args(args),
        "seed": args.seed,
        "version": __version__,
        "wall_time": time.perf_counter() - started,
        "header": list(header),
        "rows": [[fmt(v) for v in row] for row in rows],
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")


def _dist(args: argparse.Namespace) -> EntryDistribution:
    return EntryDistribution(args.dist, args.sigma2)


# mp ---------------------------------------------------------------------------

def cmd_mp(args: argparse.Namespace) -> int:
    law = MPLaw(args.y, args.sigma2)
    if args.grid is not None:
        if args.grid < 2:
            raise CliError("--grid needs at least 2 points")
        xs = law.b * np.arange(1, args.grid + 1) / args.grid
        dens = [density(law, x) for x in xs]
        text = csv_text(["x", "density", "cdf"], zip(xs, dens, cdf_many(law, xs)))
        if args.out:
            _write(Path(args.out), text)
        else:
            sys.stdout.write(text)
        return 0
    if args.eval == "support":
        a, b = support(law)
        print(f"{fmt(a)},{fmt(b)}")
    elif args.eval == "moment":
        print(fmt(moment(law, args.k)))
    elif args.eval == "density":
        print(fmt(density(law, args.x)))
    else:
        print(fmt(law.cdf(args.x)))
    return 0


def _check_mp(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if args.grid is not None:
        if args.eval is not None or args.x is not None or args.k is not None:
            parser.error("--grid cannot be combined with --eval, --x or --k")
        return
    if args.eval is None:
        parser.error("one of --eval or --grid is required")
    if args.eval in ("density", "cdf") and args.x is None:
        parser.error(f"--eval {args.eval} needs --x")
    if args.eval == "density" and args.x <= 0:
        parser.error("the density is evaluated at x > 0 only")
    if args.eval == "moment" and (args.k is None or args.k < 0):
        parser.error("--eval moment needs --k >= 0")
    if args.eval != "moment" and args.k is not None:
        parser.error("--k only applies to --eval moment")
    if args.eval in ("support", "moment") and args.x is not None:
        parser.error(f"--x does not apply to --eval {args.eval}")
    if args.out:
        parser.error("--out applies to --grid only")


# simulate -----------------------------------------------------------------------

def trials_table(args: argparse.Namespace) -> tuple[list[str], list[list]]:
    cfg = TrialConfig(args.p, args.n, _dist(args), args.trials, args.seed, args.truncate)
    records = run_extremes(cfg, args.k_moments, jobs=args.jobs)
    header = (["trial", "s_min", "s_max", "ks"]
              + [f"m{k}" for k in range(1, args.k_moments + 1)] + ["zero_count"])
    rows = [[r.trial, r.s_min, r.s_max, r.ks, *r.moments, r.zero_count] for r in records]
    return header, rows


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    out = _out_dir(args.out_dir)
    header, rows = trials_table(args)
    _write(out / "trials.csv", csv_text(header, rows))
    _write_manifest(out, "simulate", args, started, header, rows)
    print(f"wrote {len(rows)} trials to {out / 'trials.csv'}")
    return 0


# lemmas -------------------------------------------------------------------------

LEMMA_HEADER = ["check", "p", "n", "seed", "trial", "statistic", "target", "margin"]


def lemma_rows(args: argparse.Namespace) -> list[CheckRow]:
    rows: list[CheckRow] = []
    for n in args.sizes:
        p = args.p if args.p is not None else max(2, round(args.y * n))
        cfg = TrialConfig(p, n, _dist(args), args.seeds, args.seed, args.truncate)
        if args.check == "bound":
            rows += diamond_bound_check(cfg, args.l, jobs=args.jobs)
        elif args.check == "recursion":
            rows += recursion_residual(cfg, args.k, jobs=args.jobs)
        else:
            rows += expansion_check(cfg, args.k, jobs=args.jobs)
    return rows


def lemma_verdict(args: argparse.Namespace, rows: Sequence[CheckRow]) -> tuple[bool, str]:
    if args.check == "bound":
        frac = sum(r.margin >= 0 for r in rows) / len(rows)
        return frac >= BOUND_PASS_FRACTION, f"nonnegative_margin_fraction={fmt(frac)}"
    if args.check == "expansion" and args.k == 1:
        worst = max(r.statistic for r in rows)
        return worst <= EXACT_TOL, f"max_residual={fmt(worst)}"
    medians = median_by_n(rows)
    text = " ".join(f"median[n={n}]={fmt(m)}" for n, m in medians.items())
    return strictly_decreasing(list(medians.values())), text


def cmd_lemmas(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    out = _out_dir(args.out_dir) if args.out_dir else None
    rows = lemma_rows(args)
    table = [[r.check, r.p, r.n, args.seed, r.trial, r.statistic, r.target, r.margin]
             for r in rows]
    text = csv_text(LEMMA_HEADER, table)
    if out is None:
        sys.stdout.write(text)
    else:
        _write(out / "lemmas.csv", text)
        _write_manifest(out, "lemmas", args, started, LEMMA_HEADER, table)
    ok, summary = lemma_verdict(args, rows)
    print(f"check={args.check} rows={len(rows)} {summary} status={'PASS' if ok else 'FAIL'}",
          file=sys.stderr if out is None else sys.stdout)
    return 0 if ok else 1


def _check_lemmas(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if args.check == "bound":
        if args.k is not None:
            parser.error("--check bound takes --l, not --k")
        args.l = 1 if args.l is None else args.l
    else:
        if args.l is not None:
            parser.error(f"--check {args.check} takes --k, not --l")
        args.k = 1 if args.k is None else args.k
    if list(args.sizes) != sorted(set(args.sizes)):
        parser.error("--sizes must be strictly ascending")


# graphs -------------------------------------------------------------------------

def cmd_graphs(args: argparse.Namespace) -> int:
    ok = True
    if args.list:
        header = ["k", "index", "f", "g", "r", "s", "leading"]
        rows = [[args.k, i, " ".join(map(str, g.f)), " ".join(map(str, g.g)), g.r, g.s,
                 is_leading(g)] for i, g in enumerate(enumerate_canonical(args.k))]
        summary = f"k={args.k} graphs={len(rows)}"
    elif args.counts:
        header = ["k", "s", "count"]
        rows = [[args.k, s, c] for s, c in leading_moment_counts(args.k).items()]
        summary = f"k={args.k} total={sum(r[2] for r in rows)}"
    else:
        report = verify_chain_lemmas(args.k)
        header = ["k", "graphs", "chains", "counterexamples"]
        rows = [[args.k, report.graphs_checked, report.chains_checked,
                 len(report.counterexamples)]]
        for bad in report.counterexamples:
            print(f"counterexample {bad.lemma}: f={bad.graph.f} g={bad.graph.g} {bad.detail}",
                  file=sys.stderr)
        ok = report.ok
        summary = (f"k={args.k} graphs={report.graphs_checked} chains={report.chains_checked}"
                   f" counterexamples={len(report.counterexamples)}")
    text = csv_text(header, rows)
    if args.out_dir:
        _write(_out_dir(args.out_dir) / "graphs.csv", text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return 0 if ok else 1


# replay -------------------------------------------------------------------------

HANDLERS = {"simulate": cmd_simulate, "lemmas": cmd_lemmas}


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read manifest {args.manifest}: {exc}") from exc
    command = manifest.get("command")
    if command not in HANDLERS:
        raise CliError(f"manifest command {command!r} cannot be replayed")
    if manifest.get("version") != __version__:
        print(f"warning: manifest written by version {manifest.get('version')}, "
              f"running {__version__}", file=sys.stderr)
    ns = argparse.Namespace(**manifest["args"])
    ns.out_dir = args.out_dir
    return HANDLERS[command](ns)


# parser -------------------------------------------------------------------------

def default_seed() -> int:
    raw = os.environ.get("QRMT_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"QRMT_SEED must be an integer, got {raw!r}") from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0 or math.isinf(value):
        raise argparse.ArgumentTypeError("must be a positive finite number")
    return value


def _add_sampling(p: argparse.ArgumentParser, seed: int) -> None:
    p.add_argument("--dist", choices=DIST_CHOICES, default="gaussian")
    p.add_argument("--sigma2", type=_positive_float, default=1.0)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--truncate", action="store_true",
                   help="truncate at n^(3/8) and centre before use")
    p.add_argument("--jobs", type=_positive_int, default=1,
                   help="worker processes; results do not depend on it")


def build_parser(seed: int = 0) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrmt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qrmt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    mp = sub.add_parser("mp", help="evaluate the Marcenko-Pastur law")
    mp.add_argument("--y", type=_positive_float, required=True)
    mp.add_argument("--sigma2", type=_positive_float, default=1.0)
    mp.add_argument("--eval", choices=["density", "cdf", "moment", "support"])
    mp.add_argument("--x", type=float)
    mp.add_argument("--k", type=int)
    mp.add_argument("--grid", type=int, help="emit x,density,cdf at this many points")
    mp.add_argument("--out", help="CSV path for --grid (default stdout)")
    mp.set_defaults(func=cmd_mp, validate=_check_mp)

    sim = sub.add_parser("simulate", help="extreme eigenvalues, KS distance and moments")
    sim.add_argument("--p", type=_positive_int, default=200)
    sim.add_argument("--n", type=_positive_int, default=800)
    sim.add_argument("--trials", type=_positive_int, default=10)
    sim.add_argument("--k-moments", type=int, choices=range(0, 9), default=4)
    sim.add_argument("--out-dir", default=".")
    _add_sampling(sim, seed)
    sim.set_defaults(func=cmd_simulate, validate=None)

    lem = sub.add_parser("lemmas", help="Diamond bound, recursion and expansion residuals")
    lem.add_argument("--check", choices=["bound", "recursion", "expansion"], required=True)
    lem.add_argument("--l", type=int, choices=[1, 2, 3])
    lem.add_argument("--k", type=int, choices=[1, 2, 3, 4])
    lem.add_argument("--sizes", type=_positive_int, nargs="+", default=[200, 400],
                     help="ascending grid of n")
    lem.add_argument("--y", type=_positive_float, default=0.25, help="p = round(y n)")
    lem.add_argument("--p", type=_positive_int, help="fixed p, overriding --y")
    lem.add_argument("--seeds", type=_positive_int, default=5, help="trials per size")
    lem.add_argument("--out-dir", help="write lemmas.csv and manifest.json here")
    _add_sampling(lem, seed)
    lem.set_defaults(func=cmd_lemmas, validate=_check_lemmas)

    gr = sub.add_parser("graphs", help="canonical walk graphs")
    gr.add_argument("--k", type=_positive_int, required=True)
    mode = gr.add_mutually_exclusive_group(required=True)
    mode.add_argument("--list", action="store_true")
    mode.add_argument("--counts", action="store_true")
    mode.add_argument("--verify", action="store_true")
    gr.add_argument("--out-dir", help="write graphs.csv here instead of stdout")
    gr.set_defaults(func=cmd_graphs, validate=None)

    rep = sub.add_parser("replay", help="rerun a manifest.json")
    rep.add_argument("manifest")
    rep.add_argument("--out-dir", default=".")
    rep.set_defaults(func=cmd_replay, validate=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser(default_seed())
        args = parser.parse_args(argv)
        if args.validate is not None:
            args.validate(parser, args)
        return args.func(args)
    except CliError as exc:
        print(f"qrmt: error: {exc}", file=sys.stderr)
        return 1
    except GuardExceeded as exc:
        print(f"qrmt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
