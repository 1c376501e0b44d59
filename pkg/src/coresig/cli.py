"""The ``coresig`` command.

Subcommands::

    coresig simulate   generate a synthetic control-plane trace
    coresig analyze    build the full report from a trace file
    coresig pipeline   ingest a live JSON-lines stream with snapshots
    coresig render     rebuild a report tree from a saved report.json

Exit codes: 0 success, 2 usage or configuration error, 3 malformed or
unusable input data, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import socket
import sys
import time
from collections import Counter
from dataclasses import replace
from pathlib import Path
from typing import IO, Iterator, Optional

from coresig.cluster import characterize
from coresig.ingest import (
    IngestCounts,
    NfAddressMap,
    ParseError,
    iter_csv,
    iter_jsonl,
    tail_stream,
    write_csv,
    write_jsonl,
)
from coresig.simulate import ConfigError, SimConfig, simulate
from coresig.stats import AnalysisAccumulator

CONFIG_ENV_VAR = "CORESIG_CONFIG"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4

_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(us|ms|s|m|h)?\s*$")
_DURATION_FACTORS = {
    "us": 1,
    "ms": 1_000,
    "s": 1_000_000,
    "m": 60_000_000,
    "h": 3_600_000_000,
}


def parse_duration_us(text: str) -> int:
    """Parse ``"138m"``, ``"60s"``, ``"500ms"`` or a bare microsecond count."""
    match = _DURATION_RE.match(text)
    if not match:
        raise ConfigError(f"bad duration {text!r} (expected e.g. 60s, 138m, 2h)")
    value, unit = match.groups()
    return int(round(float(value) * _DURATION_FACTORS[unit or "us"]))


def parse_k_range(text: str) -> list[int]:
    """Parse ``"2..7"`` (inclusive) or a single ``"4"``."""
    text = text.strip()
    if ".." in text:
        lo_text, _, hi_text = text.partition("..")
        try:
            lo, hi = int(lo_text), int(hi_text)
        except ValueError:
            raise ConfigError(f"bad k range {text!r} (expected e.g. 2..7)") from None
    else:
        try:
            lo = hi = int(text)
        except ValueError:
            raise ConfigError(f"bad k range {text!r} (expected e.g. 2..7)") from None
    if lo < 2 or hi < lo:
        raise ConfigError(f"bad k range {text!r}: need 2 <= lo <= hi")
    return list(range(lo, hi + 1))


def _load_config(path: Optional[str]) -> SimConfig:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return SimConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    return SimConfig.from_dict(data)


def _load_nf_map(path: Optional[str]) -> Optional[NfAddressMap]:
    if path is None:
        return None
    return NfAddressMap.load(path)


# ---------------------------------------------------------------------------
# simulate


def _trace_format(name: str, out: str) -> str:
    if name != "auto":
        return name
    return "jsonl" if out.endswith((".jsonl", ".ndjson")) else "csv"


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = replace(config, rng_seed=args.seed)
    if args.duration is not None:
        config = replace(config, duration_us=parse_duration_us(args.duration))
    config.validate()

    kind_counts: Counter = Counter()

    def counted(stream):
        for record in stream:
            kind_counts[str(record.kind)] += 1
            yield record

    fmt = _trace_format(args.format, args.out)
    writer = write_jsonl if fmt == "jsonl" else write_csv
    if args.out == "-":
        total = writer(counted(simulate(config)), sys.stdout)
        info = sys.stderr
    else:
        total = writer(counted(simulate(config)), args.out)
        info = sys.stdout
    print(f"packets written: {total}", file=info)
    for kind, count in sorted(kind_counts.items(), key=lambda kv: (-kv[1], kv[0])):
        print(f"  {kind:<22} {count}", file=info)
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze / pipeline


def _add_analysis_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out-dir", default="report", help="report directory (default: report)")
    sub.add_argument("--nf-map", help="address-to-NF map file")
    sub.add_argument("--k-range", default="2..7", help="cluster counts, e.g. 2..7")
    sub.add_argument("--restarts", type=int, default=16, help="k-means restarts (default 16)")
    sub.add_argument("--cluster-seed", type=int, default=0, help="k-means seed (default 0)")
    sub.add_argument("--bin-width", type=int, default=16, help="histogram bin width in bytes")
    sub.add_argument("--stddev", choices=("population", "sample"), default="population",
                     help="standard deviation form (default population)")
    sub.add_argument("--scaling", choices=("minmax", "zscore"), default="minmax",
                     help="feature scaling (default minmax)")
    sub.add_argument("--merged-pairs", action="store_true",
                     help="cluster unordered NF pairs instead of directed ones")
    sub.add_argument("--no-figures", action="store_true", help="skip SVG rendering")


def _write_analysis(acc: AnalysisAccumulator, args: argparse.Namespace) -> dict:
    # imported here so `simulate` never pays the matplotlib import cost
    from coresig.report import build_report, write_report_tree

    matrix, histograms = acc.snapshot()
    sample = args.stddev == "sample"
    reports = characterize(
        matrix,
        k_values=parse_k_range(args.k_range),
        restarts=args.restarts,
        seed=args.cluster_seed,
        scaling=args.scaling,
        sample=sample,
        merged=args.merged_pairs,
    )
    report = build_report(matrix, histograms, reports, sample=sample)
    return write_report_tree(args.out_dir, report, with_figures=not args.no_figures)


def cmd_analyze(args: argparse.Namespace) -> int:
    nf_map = _load_nf_map(args.nf_map)
    if args.restarts < 1:
        raise ConfigError("--restarts must be >= 1")
    if args.bin_width < 1:
        raise ConfigError("--bin-width must be >= 1")
    parse_k_range(args.k_range)  # fail fast on a bad range

    fmt = args.format
    if fmt == "auto":
        fmt = "jsonl" if args.input.endswith((".jsonl", ".ndjson")) else "csv"
    counts = IngestCounts()
    acc = AnalysisAccumulator(bin_width=args.bin_width)
    if args.input == "-":
        reader = iter_jsonl(sys.stdin, nf_map, args.max_bad_rows, counts)
    elif fmt == "jsonl":
        reader = iter_jsonl(args.input, nf_map, args.max_bad_rows, counts)
    else:
        reader = iter_csv(args.input, nf_map, args.max_bad_rows, counts)
    for record in reader:
        acc.add(record)

    manifest = _write_analysis(acc, args)
    meta = acc.matrix_acc.matrix.meta
    print(f"records analyzed: {counts.parsed}"
          f" (filtered out: {meta.total_packets_filtered_out},"
          f" malformed skipped: {counts.malformed})")
    print(f"report written to {args.out_dir} ({len(manifest['files'])} files + manifest)")
    return EXIT_OK


def _socket_lines(port: int) -> Iterator[str]:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(("127.0.0.1", port))
        server.listen(1)
        connection, _ = server.accept()
        with connection, connection.makefile("r", encoding="utf-8", errors="replace") as fh:
            yield from fh


def cmd_pipeline(args: argparse.Namespace) -> int:
    nf_map = _load_nf_map(args.nf_map)
    if args.restarts < 1:
        raise ConfigError("--restarts must be >= 1")
    if args.bin_width < 1:
        raise ConfigError("--bin-width must be >= 1")
    parse_k_range(args.k_range)
    period_s = parse_duration_us(args.snapshot_period) / 1_000_000.0

    lines = _socket_lines(args.listen) if args.listen is not None else sys.stdin
    acc = AnalysisAccumulator(bin_width=args.bin_width)
    last_snapshot = time.monotonic()

    def maybe_snapshot(_record) -> None:
        nonlocal last_snapshot
        if period_s > 0 and time.monotonic() - last_snapshot >= period_s:
            _write_analysis(acc, args)
            print(f"snapshot written to {args.out_dir}", file=sys.stderr)
            last_snapshot = time.monotonic()

    counts = tail_stream(lines, acc.add, nf_map, on_record=maybe_snapshot)
    manifest = _write_analysis(acc, args)  # final snapshot always
    print(f"stream ended: {counts.parsed} records applied,"
          f" {counts.malformed} malformed skipped")
    print(f"final report written to {args.out_dir}"
          f" ({len(manifest['files'])} files + manifest)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# render


def cmd_render(args: argparse.Namespace) -> int:
    from coresig.report import write_report_tree

    report_path = Path(args.report)
    try:
        report = json.loads(report_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, f"report is not valid JSON: {exc.msg}") from None
    out_dir = args.out_dir if args.out_dir is not None else report_path.parent
    try:
        manifest = write_report_tree(out_dir, report, with_figures=not args.no_figures)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"report.json is missing expected content: {exc}") from None
    print(f"report tree rebuilt in {out_dir} ({len(manifest['files'])} files + manifest)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coresig",
        description="5G core signaling trace synthesis and analytics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic trace")
    p_sim.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV_VAR})")
    p_sim.add_argument("--seed", type=int, help="override the master RNG seed")
    p_sim.add_argument("--duration", help="override trace duration, e.g. 60s or 138m")
    p_sim.add_argument("--out", default="trace.csv", help="output path, - for stdout")
    p_sim.add_argument("--format", choices=("auto", "csv", "jsonl"), default="auto",
                       help="trace format (default: by file extension)")
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser("analyze", help="analyze a trace file into a report")
    p_an.add_argument("--input", required=True, help="trace path, - for JSON-lines stdin")
    p_an.add_argument("--format", choices=("auto", "csv", "jsonl"), default="auto",
                      help="trace format (default: by file extension)")
    p_an.add_argument("--max-bad-rows", type=int, default=0,
                      help="tolerated malformed rows before failing (default 0)")
    _add_analysis_flags(p_an)
    p_an.set_defaults(func=cmd_analyze)

    p_pipe = sub.add_parser("pipeline", help="ingest a live JSON-lines stream")
    p_pipe.add_argument("--listen", type=int,
                        help="accept one TCP connection on this port instead of stdin")
    p_pipe.add_argument("--snapshot-period", default="0s",
                        help="wall-clock period between report snapshots;"
                             " 0s snapshots only at end of stream (default)")
    _add_analysis_flags(p_pipe)
    p_pipe.set_defaults(func=cmd_pipeline)

    p_ren = sub.add_parser("render", help="rebuild a report tree from report.json")
    p_ren.add_argument("--report", required=True, help="path to a saved report.json")
    p_ren.add_argument("--out-dir", help="target directory (default: alongside the report)")
    p_ren.add_argument("--no-figures", action="store_true", help="skip SVG rendering")
    p_ren.set_defaults(func=cmd_render)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"coresig: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValueError) as exc:
        print(f"coresig: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BrokenPipeError:
        return EXIT_IO
    except OSError as exc:
        print(f"coresig: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
