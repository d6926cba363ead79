"""Command-line entry point: ``resbit <subcommand> [options]``.

Data goes to stdout (or ``--output``); diagnostics go to stderr as a single
line.  Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal error.
Randomised subcommands default to ``--seed 0``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from . import codecs, diffusion, ooi
from . import io as rio
from .exceptions import ResBitError, ScheduleError
from .preprocessing import (
    ColumnSchema,
    TabularPipeline,
    cardinality_survey,
    load_schemas,
)

log = logging.getLogger("resbit")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
EXACT_DIMS_LIMIT = 1000
POINTS_PER_DECADE = 128


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        return [int(float(v)) if "e" in v.lower() else int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


# -- output helpers ------------------------------------------------------------


def _emit_text(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(output, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit_bytes(data, output):
    if output in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    with open(output, "wb") as fh:
        fh.write(data)


def _rows_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# -- subcommands ---------------------------------------------------------------


def _parse_bits(text):
    text = text.replace(",", "").replace(" ", "")
    if any(c not in "01" for c in text):
        raise UsageError(f"--bits must contain only 0 and 1, got {text!r}")
    return tuple(int(c) for c in text)


def cmd_encode(args):
    if args.scheme == "resbit":
        code = codecs.encode_resbit(args.n, args.m)
    elif args.scheme == "binary":
        code = codecs.encode_binary(args.n, args.m)
    else:
        code = codecs.encode_onehot(args.n, args.m)
    _emit_text("".join(map(str, code)) + "\n", args.output)


def cmd_decode(args):
    bits = _parse_bits(args.bits)
    if args.scheme == "resbit":
        value = codecs.decode_resbit(bits, args.m)
    elif args.scheme == "binary":
        value = codecs.decode_binary(bits, args.m)
    else:
        value = codecs.decode_onehot(bits, args.m)
    if isinstance(value, codecs.OutOfIndex):
        _emit_text(f"out_of_index:{value.value}\n", args.output)
    else:
        _emit_text(f"{value}\n", args.output)


def dims_sample_points(m_max):
    """Every M up to 1000, then 128 log-spaced points per decade, then m_max."""
    points = list(range(1, min(m_max, EXACT_DIMS_LIMIT) + 1))
    i = 1
    while True:
        m = int(round(10 ** (math.log10(EXACT_DIMS_LIMIT) + i / POINTS_PER_DECADE)))
        if m > m_max:
            break
        if m > points[-1]:
            points.append(m)
        i += 1
    if points[-1] != m_max:
        points.append(m_max)
    return points


def cmd_dims(args):
    if args.m_max < 1:
        raise UsageError("--m-max must be >= 1")
    schemes = args.schemes
    for s in schemes:
        if s not in codecs.SCHEMES:
            raise UsageError(f"unknown scheme {s!r}")
    header = ["M"] + [f"{s}_dims" for s in schemes]
    with_reduction = "resbit" in schemes
    if with_reduction:
        header.append("reduction_pct")
    rows = []
    for m in dims_sample_points(args.m_max):
        row = [m] + [codecs.dims(m, s) for s in schemes]
        if with_reduction:
            row.append(repr(round(codecs.reduction_vs_onehot(m), 4)))
        rows.append(row)
    _emit_text(_rows_csv(header, rows), args.output)


def _schemas_for(args):
    if not args.schema:
        raise UsageError("--schema is required")
    schemas = load_schemas(args.schema)
    if args.scheme or args.min_frequency is not None:
        schemas = [
            ColumnSchema.categorical(
                s.name,
                args.scheme or s.scheme,
                s.min_frequency if args.min_frequency is None else args.min_frequency,
            ) if s.is_categorical else s
            for s in schemas
        ]
    return schemas


def _require(args, *names):
    for name in names:
        if getattr(args, name) in (None, ""):
            raise UsageError(f"--{name.replace('_', '-')} is required")


def cmd_survey(args):
    _require(args, "input")
    schemas = _schemas_for(args)
    survey = cardinality_survey(rio.read_table(args.input, args.delimiter), schemas)
    if args.format == "json":
        doc = {
            "columns": survey.records(),
            "total": survey.total,
            "total_dims": {s: survey.total_dims(s) for s in codecs.SCHEMES},
        }
        _emit_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", args.output)
        return
    header = ["column", "cardinality", "onehot_dims", "binary_dims", "resbit_dims"]
    rows = [[c.name, c.cardinality, c.onehot_dims, c.binary_dims, c.resbit_dims] for c in survey.columns]
    rows.append(["TOTAL", survey.total] + [survey.total_dims(s) for s in codecs.SCHEMES])
    _emit_text(_rows_csv(header, rows), args.output)


def cmd_fit(args):
    _require(args, "input", "output")
    schemas = _schemas_for(args)
    pipe = TabularPipeline(schemas).fit(rio.read_table(args.input, args.delimiter))
    _emit_text(pipe.to_json() + "\n", args.output)
    log.info("fitted %d columns into %d output dimensions", len(schemas), pipe.n_features_out_)


def _map_batches(fn, batches, threads):
    """Apply ``fn`` to each batch, yielding results in input order."""
    if threads <= 1:
        for b in batches:
            yield fn(b)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        window = []
        for b in batches:
            window.append(pool.submit(fn, b))
            if len(window) >= threads:
                for fut in window:
                    yield fut.result()
                window = []
        for fut in window:
            yield fut.result()


def cmd_transform(args):
    _require(args, "input", "pipeline")
    pipe = TabularPipeline.load(args.pipeline)
    chunks = rio.read_table(args.input, args.delimiter, chunksize=args.batch_size)
    parts = list(_map_batches(pipe.transform, chunks, args.threads))
    matrix = np.vstack(parts) if parts else np.zeros((0, pipe.n_features_out_))
    if args.format == "bin":
        _emit_bytes(rio.encode_matrix_bin(matrix), args.output)
    elif args.format == "csv":
        names = list(pipe.get_feature_names_out())
        _emit_text(rio.format_matrix_csv(matrix, names, args.delimiter), args.output)
    else:
        raise UsageError("transform supports --format csv or bin")


def cmd_invert(args):
    _require(args, "input", "pipeline")
    pipe = TabularPipeline.load(args.pipeline)
    matrix = rio.read_matrix(args.input, args.delimiter)
    if matrix.size == 0:
        matrix = np.zeros((0, pipe.n_features_out_))
    batches = [matrix[i:i + args.batch_size] for i in range(0, matrix.shape[0], args.batch_size)]
    results = list(_map_batches(lambda m: pipe.inverse_transform(m, return_counts=True), batches, args.threads))
    if results:
        frame = pd.concat([r[0] for r in results], ignore_index=True)
    else:
        frame = pipe.inverse_transform(matrix)
    for name in pipe.encoders_:
        ooi_total = sum(r[1][name]["out_of_index"] for r in results)
        bad_total = sum(r[1][name]["malformed"] for r in results)
        if ooi_total or bad_total:
            log.warning("column %s: %d out-of-index, %d malformed decodes", name, ooi_total, bad_total)
    buf = io.StringIO()
    rio.write_table(frame, buf, args.delimiter)
    _emit_text(buf.getvalue(), args.output)


def cmd_coverage(args):
    _require(args, "input", "pipeline")
    pipe = TabularPipeline.load(args.pipeline)
    ratios, mean = pipe.coverage_ratio(rio.read_table(args.input, args.delimiter))
    rows = [[name, repr(r)] for name, r in ratios.items()]
    rows.append(["MEAN", repr(mean)])
    _emit_text(_rows_csv(["column", "coverage_ratio"], rows), args.output)


def cmd_collapse_sim(args):
    if args.betas:
        schedule = diffusion.DiffusionSchedule(tuple(args.betas))
    else:
        schedule = diffusion.DiffusionSchedule.linear(args.T, args.beta_start, args.beta_end)
    need = max(args.x0, args.xt) + 1
    curve = diffusion.collapse_curve(
        args.k_list, args.t, schedule, diffusion.one_hot(args.x0, need), diffusion.one_hot(args.xt, need)
    )
    _emit_text(diffusion.collapse_csv(curve, args.t), args.output)


def cmd_ooi_sim(args):
    _require(args, "m")
    noise_grid = [ooi.NoiseModel(args.noise, p) for p in args.param]
    reports = ooi.sweep(args.m, args.scheme, noise_grid, args.trials, args.seed, args.threads,
                        args.index_dist, args.zipf_s)
    if args.format == "json":
        _emit_text(ooi.reports_json(reports), args.output)
    else:
        _emit_text(ooi.reports_csv(reports), args.output)


# -- parser --------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="resbit", description="ResBit categorical encoding toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, formats=("csv", "json")):
        p.add_argument("--output", "-o", default="-", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--format", choices=formats, default=formats[0])
        p.add_argument("--delimiter", default=",")

    def table_flags(p):
        p.add_argument("--input", "-i")
        p.add_argument("--schema")
        p.add_argument("--scheme", choices=codecs.SCHEMES, help="override every categorical scheme")
        p.add_argument("--min-frequency", type=float, help="override every min_frequency")

    p = sub.add_parser("encode", help="encode one class index")
    common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scheme", choices=codecs.SCHEMES, default="resbit")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode one bit pattern")
    common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--bits", required=True)
    p.add_argument("--scheme", choices=codecs.SCHEMES, default="resbit")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("dims", help="dimensionality table per scheme")
    common(p)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--schemes", type=_str_list, default=list(codecs.SCHEMES))
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("survey", help="categorical cardinality survey")
    common(p)
    table_flags(p)
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("fit", help="fit a pipeline and write it as JSON")
    common(p)
    table_flags(p)
    p.set_defaults(func=cmd_fit)

    for name, func, help_ in (("transform", cmd_transform, "transform a CSV with a fitted pipeline"),
                              ("invert", cmd_invert, "map a matrix back to a table")):
        p = sub.add_parser(name, help=help_)
        common(p, formats=("csv", "bin"))
        p.add_argument("--input", "-i")
        p.add_argument("--pipeline", "-p")
        p.add_argument("--batch-size", type=int, default=65536)
        p.set_defaults(func=func)

    p = sub.add_parser("coverage", help="coverage ratio of generated data")
    common(p)
    p.add_argument("--input", "-i")
    p.add_argument("--pipeline", "-p")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("collapse-sim", help="posterior collapse curve over K")
    common(p)
    p.add_argument("--k-list", type=_int_list, default=[2, 10, 100, 10000])
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--T", type=int, default=diffusion.DEFAULT_T)
    p.add_argument("--beta-start", type=float, default=diffusion.DEFAULT_BETA_START)
    p.add_argument("--beta-end", type=float, default=diffusion.DEFAULT_BETA_END)
    p.add_argument("--betas", type=_float_list, help="explicit beta_1..beta_T")
    p.add_argument("--x0", type=int, default=0)
    p.add_argument("--xt", type=int, default=0)
    p.set_defaults(func=cmd_collapse_sim)

    p = sub.add_parser("ooi-sim", help="out-of-index simulation sweep")
    common(p)
    p.add_argument("--m", type=_int_list)
    p.add_argument("--scheme", type=_str_list, default=list(codecs.SCHEMES))
    p.add_argument("--noise", choices=ooi.NOISE_KINDS, default="uniform-random-bits")
    p.add_argument("--param", type=_float_list, default=[0.0])
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--index-dist", choices=("uniform", "zipf"), default="uniform")
    p.add_argument("--zipf-s", type=float, default=1.0)
    p.set_defaults(func=cmd_ooi_sim)
    return parser


def _configure_logging():
    level = os.environ.get("RESBIT_LOG", "warn").upper()
    level = {"WARN": "WARNING"}.get(level, level)
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="resbit: %(levelname)s: %(message)s")


def _fail(code, kind, exc):
    message = " ".join(str(exc).split()) or type(exc).__name__
    sys.stderr.write(f"resbit: error[{kind}]: {message}\n")
    return code


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        if getattr(args, "batch_size", 1) < 1:
            raise UsageError("--batch-size must be >= 1")
        if getattr(args, "scheme", None) and isinstance(args.scheme, list):
            for s in args.scheme:
                if s not in codecs.SCHEMES:
                    raise UsageError(f"unknown scheme {s!r}")
        args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except ScheduleError as exc:
        return _fail(EXIT_USAGE, "schedule", exc)
    except ResBitError as exc:
        return _fail(EXIT_DATA, type(exc).__name__, exc)
    except (OSError, ValueError, KeyError, UnicodeDecodeError) as exc:
        return _fail(EXIT_DATA, type(exc).__name__, exc)
    except Exception as exc:  # noqa: BLE001
        return _fail(EXIT_INTERNAL, type(exc).__name__, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
