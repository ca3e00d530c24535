"""Command-line surface and file I/O.

Commands: fit, predict, evaluate, synth, sweep.  Datasets are delimited
text with a header row and either (time, obs, mean, var) columns or
(time, obs, member_1..member_M); times are strictly increasing integers
or ISO dates and are normalized to 0-based indices internally.  All
randomness flows from the --seed flag.  Output files carry a config
echo in '#' comment lines and are written atomically (write to a
temporary file, then rename); partial outputs are removed on failure.

Exit codes: 0 success, 2 input error, 3 numeric/convergence error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import os
import sys
from pathlib import Path

import numpy as np

from .data import TrainingSet
from .errors import InputError, RecalibError
from .harness import (
    RECALIBRATORS,
    CvPlan,
    SyntheticSpec,
    aggregate,
    generate_synthetic,
    run_cv,
)
from .mos import fit_mos
from .ngr import OptimizerSettings, fit_ngr
from .bootstrap import bootstrap_fit

__all__ = ["main", "ingest", "emit_dataset"]

_PREDICT_PERCENTILES = (0.01, 0.25, 0.50, 0.75, 0.99)


# ---------- dataset I/O ----------

def _parse_time(token: str, line_no: int):
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return datetime.date.fromisoformat(token)
    except ValueError:
        raise InputError(
            f"line {line_no}: time {token!r} is neither an integer nor an ISO date"
        ) from None


def ingest(path, fmt: str = "meanvar") -> TrainingSet:
    """Read a dataset file into a TrainingSet (rows in time order).

    With member columns, m is the per-row sample mean and v the sample
    variance with the n-1 divisor.
    """
    if fmt not in ("meanvar", "members"):
        raise InputError(f"unknown format {fmt!r}")
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err
    rows = [
        (no, line) for no, line in enumerate(lines, start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not rows:
        raise InputError(f"{path}: no data")
    header_no, header_line = rows[0]
    header = [h.strip() for h in next(csv.reader([header_line]))]
    if fmt == "meanvar":
        expected = ["time", "obs", "mean", "var"]
        if header != expected:
            raise InputError(
                f"line {header_no}: expected header {','.join(expected)}, "
                f"got {header_line!r}"
            )
    else:
        if header[:2] != ["time", "obs"] or len(header) < 4 or any(
            not h.startswith("member_") for h in header[2:]
        ):
            raise InputError(
                f"line {header_no}: expected header time,obs,member_1..member_M "
                f"with M >= 2, got {header_line!r}"
            )
    n_cols = len(header)
    times, m_list, v_list, y_list = [], [], [], []
    for no, line in rows[1:]:
        fields = next(csv.reader([line]))
        if len(fields) != n_cols:
            raise InputError(f"line {no}: expected {n_cols} fields, got {len(fields)}")
        t = _parse_time(fields[0], no)
        if times and not t > times[-1]:
            raise InputError(f"line {no}: time {fields[0]} not strictly increasing")
        times.append(t)
        try:
            obs = float(fields[1])
            rest = [float(f) for f in fields[2:]]
        except ValueError as err:
            raise InputError(f"line {no}: {err}") from err
        if not np.isfinite(obs):
            raise InputError(f"line {no}: missing or non-finite obs")
        if fmt == "meanvar":
            mean, var = rest
            if var < 0.0:
                raise InputError(f"line {no}: negative variance {var}")
        else:
            members = np.array(rest)
            mean = float(members.mean())
            var = float(members.var(ddof=1))
        m_list.append(mean)
        v_list.append(var)
        y_list.append(obs)
    if not y_list:
        raise InputError(f"{path}: header but no data rows")
    return TrainingSet(np.array(m_list), np.array(v_list), np.array(y_list))


def emit_dataset(train: TrainingSet, config_echo=()) -> str:
    """Render a TrainingSet as meanvar-format delimited text."""
    buf = io.StringIO()
    for line in config_echo:
        buf.write(f"# {line}\n")
    buf.write("time,obs,mean,var\n")
    for t in range(train.n):
        buf.write(f"{t},{_fmt(train.y[t])},{_fmt(train.m[t])},{_fmt(train.v[t])}\n")
    return buf.getvalue()


def _fmt(x) -> str:
    """Shortest round-trip decimal representation of a float."""
    return repr(float(x))


def _atomic_write(path: Path, text: str, written: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    written.append(path)


def _echo(args, keys) -> list:
    out = [f"recalib {args.command}"]
    for key in keys:
        out.append(f"{key}={getattr(args, key)}")
    return out


# ---------- shared plumbing ----------

def _opts(args) -> OptimizerSettings:
    return OptimizerSettings(
        max_evals=args.max_evals, tol=args.tol, restarts=args.restarts
    )


def _plan(args) -> CvPlan:
    return CvPlan(
        mode="leave-one-out" if args.loo else "rolling",
        recalibrator=args.recalibrator,
        base_seed=args.seed,
        window=args.window,
        K=args.bootstrap_k,
        detrend=args.detrend,
        opts=_opts(args),
    )


def _levels(spec: str):
    try:
        levels = tuple(float(tok) for tok in spec.split(","))
    except ValueError as err:
        raise InputError(f"bad --levels {spec!r}: {err}") from err
    if not levels or any(not (0.0 < lv < 1.0) for lv in levels):
        raise InputError(f"--levels must be probabilities in (0,1), got {spec!r}")
    return levels


def _summary_text(summary, args) -> str:
    lines = [f"# {line}" for line in _echo(args, _CV_KEYS)]
    lines += [
        f"mean_ignorance={_fmt(summary.mean_ignorance)}",
        f"mean_crps={_fmt(summary.mean_crps)}",
        f"fold_count={summary.fold_count}",
        f"failure_count={summary.failure_count}",
    ]
    for level, cov in summary.coverage:
        lines.append(f"coverage_{level:g}={_fmt(cov)}")
    lines.append("pit_counts=" + ",".join(str(c) for c in summary.pit_hist.counts))
    return "\n".join(lines) + "\n"


_CV_KEYS = (
    "data", "format", "recalibrator", "window", "loo", "detrend",
    "bootstrap_k", "seed", "levels",
)


# ---------- commands ----------

def cmd_fit(args, written):
    train = ingest(args.data, args.format)
    out = Path(args.out)
    lines = [f"# {line}" for line in _echo(args, ("data", "format", "recalibrator", "seed"))]
    lines.append(f"recalibrator={args.recalibrator}")
    lines.append(f"n={train.n}")
    if args.recalibrator.startswith("mos"):
        fit = fit_mos(train)
        lines += [
            f"a_hat={_fmt(fit.a_hat)}",
            f"b_hat={_fmt(fit.b_hat)}",
            f"c2_hat={_fmt(fit.c2_hat)}",
            f"m_bar={_fmt(fit.m_bar)}",
            f"ss_m={_fmt(fit.ss_m)}",
        ]
    else:
        fit = fit_ngr(train, _opts(args))
        p = fit.params
        lines += [
            f"a_hat={_fmt(p.a)}",
            f"b_hat={_fmt(p.b)}",
            f"c_hat={_fmt(p.c)}",
            f"d_hat={_fmt(p.d)}",
            f"log_likelihood={_fmt(fit.log_likelihood)}",
            f"converged={fit.converged}",
            f"iterations={fit.iterations}",
        ]
        if args.recalibrator == "ngr-bootstrap":
            ens = bootstrap_fit(train, args.bootstrap_k, args.seed, _opts(args))
            lines.append(f"bootstrap_k={len(ens.replicates)}")
            lines.append(f"failed_draws={ens.failed_draws}")
            for k, rep in enumerate(ens.replicates):
                lines.append(
                    f"replicate_{k}={_fmt(rep.a)},{_fmt(rep.b)},{_fmt(rep.c)},{_fmt(rep.d)}"
                )
    _atomic_write(out / "fit.txt", "\n".join(lines) + "\n", written)


def cmd_predict(args, written):
    train = ingest(args.data, args.format)
    result = run_cv(train, _plan(args), jobs=args.jobs)
    buf = io.StringIO()
    for line in _echo(args, _CV_KEYS):
        buf.write(f"# {line}\n")
    buf.write("index,obs,q01,q25,q50,q75,q99\n")
    for fold in result.folds:
        qs = ",".join(_fmt(fold.forecast.quantile(p)) for p in _PREDICT_PERCENTILES)
        buf.write(f"{fold.index},{_fmt(fold.y)},{qs}\n")
    _atomic_write(Path(args.out) / "predictions.csv", buf.getvalue(), written)


def cmd_evaluate(args, written):
    train = ingest(args.data, args.format)
    result = run_cv(train, _plan(args), jobs=args.jobs)
    summary = aggregate(result, levels=_levels(args.levels))
    out = Path(args.out)
    buf = io.StringIO()
    for line in _echo(args, _CV_KEYS):
        buf.write(f"# {line}\n")
    buf.write("index,pit,ignorance_bits,crps\n")
    for fold in result.folds:
        r = fold.record
        buf.write(f"{fold.index},{_fmt(r.pit)},{_fmt(r.ignorance_bits)},{_fmt(r.crps)}\n")
    _atomic_write(out / "records.csv", buf.getvalue(), written)
    _atomic_write(out / "summary.txt", _summary_text(summary, args), written)


def cmd_synth(args, written):
    try:
        params = tuple(float(tok) for tok in args.params.split(","))
    except ValueError as err:
        raise InputError(f"bad --params {args.params!r}: {err}") from err
    spec = SyntheticSpec(generator=args.gen, params=params, n=args.n, seed=args.seed)
    train = generate_synthetic(spec)
    echo = _echo(args, ("gen", "params", "n", "seed"))
    _atomic_write(Path(args.out) / "dataset.csv", emit_dataset(train, echo), written)


def cmd_sweep(args, written):
    train = ingest(args.data, args.format)
    try:
        windows = [int(tok) for tok in args.windows.split(",")]
    except ValueError as err:
        raise InputError(f"bad --windows {args.windows!r}: {err}") from err
    recalibrators = args.recalibrator.split(",")
    for rec in recalibrators:
        if rec not in RECALIBRATORS:
            raise InputError(f"unknown recalibrator {rec!r}")
    buf = io.StringIO()
    for line in _echo(args, ("data", "format", "recalibrator", "windows",
                             "bootstrap_k", "seed")):
        buf.write(f"# {line}\n")
    buf.write("recalibrator,window,mean_ignorance,mean_crps,fold_count,failure_count\n")
    for rec in recalibrators:
        for w in windows:
            plan = CvPlan(
                mode="rolling",
                recalibrator=rec,
                base_seed=args.seed,
                window=w,
                K=args.bootstrap_k,
                detrend=args.detrend,
                opts=_opts(args),
            )
            summary = aggregate(run_cv(train, plan, jobs=args.jobs))
            buf.write(
                f"{rec},{w},{_fmt(summary.mean_ignorance)},{_fmt(summary.mean_crps)},"
                f"{summary.fold_count},{summary.failure_count}\n"
            )
    _atomic_write(Path(args.out) / "sweep.csv", buf.getvalue(), written)


# ---------- argument parsing ----------

def _add_common(p, data=True):
    if data:
        p.add_argument("--data", required=True, help="input dataset file")
        p.add_argument("--format", choices=("meanvar", "members"), default="meanvar")
    p.add_argument("--seed", type=int, default=0, help="base seed for all randomness")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-evals", type=int, default=10_000, dest="max_evals")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--restarts", type=int, default=1)


def _add_cv(p, single=True):
    if single:
        p.add_argument(
            "--recalibrator", choices=sorted(RECALIBRATORS), default="mos-t"
        )
    else:
        p.add_argument(
            "--recalibrator", default="mos-t",
            help="one or more recalibrators, comma separated",
        )
    p.add_argument("--window", type=int, default=25)
    p.add_argument("--loo", action="store_true", help="leave-one-out instead of rolling")
    p.add_argument("--detrend", action="store_true")
    p.add_argument("--bootstrap-k", type=int, default=50, dest="bootstrap_k")
    p.add_argument("--levels", default="0.5,0.9", help="coverage levels, comma separated")
    p.add_argument("--jobs", type=int, default=1, help="fold-level parallelism")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recalib",
        description="Ensemble forecast recalibration with parameter uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a recalibrator on the whole dataset")
    _add_common(p)
    p.add_argument("--recalibrator", choices=sorted(RECALIBRATORS), default="mos-t")
    p.add_argument("--bootstrap-k", type=int, default=50, dest="bootstrap_k")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="out-of-sample predictive quantiles")
    _add_common(p)
    _add_cv(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="out-of-sample verification scores")
    _add_common(p)
    _add_cv(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p, data=False)
    p.add_argument("--gen", choices=("mos", "ngr"), required=True)
    p.add_argument("--params", required=True,
                   help="a,b,c for mos or a,b,c,d for ngr")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="evaluate across a list of window sizes")
    _add_common(p)
    _add_cv(p, single=False)
    p.add_argument("--windows", required=True, help="comma-separated window sizes")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    written: list = []
    try:
        args.func(args, written)
        return 0
    except RecalibError as err:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        print(f"recalib: error: {err}", file=sys.stderr)
        return 2 if isinstance(err, InputError) else 3


if __name__ == "__main__":
    sys.exit(main())
