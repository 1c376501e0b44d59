"""Reading and writing packet traces.

Two interchangeable on-disk forms carry the same six fields:

* CSV with the exact header ``timestamp_us,src,dst,proto,length_bytes,kind``
* JSON lines, one object per packet with the same field names
  (``kind`` may be omitted and defaults to ``Other``)

Endpoints are either core network-function names (``AMF``) or transport
addresses (``10.0.0.7`` or ``10.0.0.7:8805``).  Addresses resolve
through an :class:`NfAddressMap` when one is supplied; an address with
no mapping stays a plain string and marks the endpoint as external to
the core (not an error).  A name that is not one of the ten known
functions is a parse error.
"""

from __future__ import annotations

import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Optional, Union

from coresig.model import Endpoint, MsgKind, NfKind, PacketRecord, TransportProto

__all__ = [
    "CSV_HEADER",
    "ParseError",
    "NfAddressMap",
    "IngestCounts",
    "resolve_endpoint",
    "parse_csv_record",
    "parse_json_record",
    "iter_csv",
    "iter_jsonl",
    "write_csv",
    "write_jsonl",
    "filter_core",
    "tail_stream",
]

CSV_HEADER = "timestamp_us,src,dst,proto,length_bytes,kind"

_ADDRESS_RE = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}(?::\d+)?$")


class ParseError(ValueError):
    """A malformed trace line, with its 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class NfAddressMap:
    """Maps transport addresses to core functions.

    File format: one ``<address> <NF name>`` pair per line, where the
    address is ``a.b.c.d`` or ``a.b.c.d:port``; ``#`` starts a comment.
    Lookup tries the exact token first, then the bare address with any
    port stripped, so a port-specific entry can override a host-wide one.
    """

    def __init__(self, entries: Optional[Mapping[str, NfKind]] = None):
        self._entries: dict[str, NfKind] = dict(entries or {})

    def __len__(self) -> int:
        return len(self._entries)

    def add(self, address: str, nf: NfKind) -> None:
        if not _ADDRESS_RE.match(address):
            raise ValueError(f"not a transport address: {address!r}")
        self._entries[address] = nf

    def lookup(self, token: str) -> Optional[NfKind]:
        hit = self._entries.get(token)
        if hit is not None:
            return hit
        host, _, port = token.partition(":")
        if port:
            return self._entries.get(host)
        return None

    @classmethod
    def load(cls, path: Union[str, Path]) -> "NfAddressMap":
        nf_map = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ParseError(line_no, f"expected '<address> <NF>', got {raw.strip()!r}")
                address, name = parts
                try:
                    nf_map.add(address, NfKind.parse(name))
                except ValueError as exc:
                    raise ParseError(line_no, str(exc)) from None
        return nf_map


def resolve_endpoint(token: str, nf_map: Optional[NfAddressMap] = None) -> Endpoint:
    """Resolve one endpoint token to a core function or an external address.

    Address-shaped tokens resolve through ``nf_map`` when possible and
    otherwise stay external strings.  Anything else must be a known
    core-function name.
    """
    token = token.strip()
    if not token:
        raise ValueError("empty endpoint")
    if _ADDRESS_RE.match(token):
        if nf_map is not None:
            nf = nf_map.lookup(token)
            if nf is not None:
                return nf
        return token
    return NfKind.parse(token)


# ---------------------------------------------------------------------------
# Single-record parsers


def _build_record(
    line_no: int,
    timestamp: object,
    src: str,
    dst: str,
    proto: str,
    length: object,
    kind: str,
    nf_map: Optional[NfAddressMap],
) -> PacketRecord:
    try:
        ts = int(timestamp)  # type: ignore[arg-type]
        ln = int(length)  # type: ignore[arg-type]
        record = PacketRecord(
            timestamp_us=ts,
            src=resolve_endpoint(src, nf_map),
            dst=resolve_endpoint(dst, nf_map),
            proto=TransportProto.parse(proto),
            length_bytes=ln,
            kind=MsgKind.parse(kind),
        )
    except (ValueError, TypeError) as exc:
        raise ParseError(line_no, str(exc)) from None
    return record


def parse_csv_record(
    line: str, line_no: int = 1, nf_map: Optional[NfAddressMap] = None
) -> PacketRecord:
    """Parse one CSV data row (no header)."""
    fields = line.rstrip("\r\n").split(",")
    if len(fields) != 6:
        raise ParseError(line_no, f"expected 6 comma-separated fields, got {len(fields)}")
    ts, src, dst, proto, length, kind = fields
    return _build_record(line_no, ts.strip(), src, dst, proto, length.strip(), kind, nf_map)


def parse_json_record(
    line: str, line_no: int = 1, nf_map: Optional[NfAddressMap] = None
) -> PacketRecord:
    """Parse one JSON-lines record; ``kind`` is optional."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(line_no, f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ParseError(line_no, "record must be a JSON object")
    required = ("timestamp_us", "src", "dst", "proto", "length_bytes")
    missing = [name for name in required if name not in obj]
    if missing:
        raise ParseError(line_no, f"missing fields: {', '.join(missing)}")
    unknown = set(obj) - {*required, "kind"}
    if unknown:
        raise ParseError(line_no, f"unknown fields: {', '.join(sorted(unknown))}")
    return _build_record(
        line_no,
        obj["timestamp_us"],
        str(obj["src"]),
        str(obj["dst"]),
        str(obj["proto"]),
        obj["length_bytes"],
        str(obj.get("kind", "")),
        nf_map,
    )


# ---------------------------------------------------------------------------
# File iteration


@dataclass
class IngestCounts:
    """Bookkeeping updated in place while a source is consumed."""

    parsed: int = 0
    malformed: int = 0


def _open_text(source: Union[str, Path, IO[str]]) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    return source, False


def iter_csv(
    source: Union[str, Path, IO[str]],
    nf_map: Optional[NfAddressMap] = None,
    max_bad_rows: int = 0,
    counts: Optional[IngestCounts] = None,
) -> Iterator[PacketRecord]:
    """Iterate records from a CSV trace.

    The header line must match :data:`CSV_HEADER` exactly.  Up to
    ``max_bad_rows`` malformed data rows are skipped (and counted in
    ``counts``); one more than that raises the offending
    :class:`ParseError`.
    """
    counts = counts if counts is not None else IngestCounts()
    fh, owned = _open_text(source)
    try:
        header = fh.readline()
        if header.rstrip("\r\n") != CSV_HEADER:
            raise ParseError(1, f"bad header: expected {CSV_HEADER!r}")
        for line_no, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                record = parse_csv_record(line, line_no, nf_map)
            except ParseError:
                counts.malformed += 1
                if counts.malformed > max_bad_rows:
                    raise
                continue
            counts.parsed += 1
            yield record
    finally:
        if owned:
            fh.close()


def iter_jsonl(
    source: Union[str, Path, IO[str]],
    nf_map: Optional[NfAddressMap] = None,
    max_bad_rows: int = 0,
    counts: Optional[IngestCounts] = None,
) -> Iterator[PacketRecord]:
    """Iterate records from a JSON-lines trace (same skip policy as CSV)."""
    counts = counts if counts is not None else IngestCounts()
    fh, owned = _open_text(source)
    try:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = parse_json_record(line, line_no, nf_map)
            except ParseError:
                counts.malformed += 1
                if counts.malformed > max_bad_rows:
                    raise
                continue
            counts.parsed += 1
            yield record
    finally:
        if owned:
            fh.close()


# ---------------------------------------------------------------------------
# Writers


def _format_csv_row(r: PacketRecord) -> str:
    return f"{r.timestamp_us},{r.src},{r.dst},{r.proto},{r.length_bytes},{r.kind}\n"


def write_csv(records: Iterable[PacketRecord], dest: Union[str, Path, IO[str]]) -> int:
    """Write records as a CSV trace; returns the number written."""
    fh, owned = (open(dest, "w", encoding="utf-8", newline=""), True) if isinstance(
        dest, (str, Path)
    ) else (dest, False)
    count = 0
    try:
        fh.write(CSV_HEADER + "\n")
        for record in records:
            fh.write(_format_csv_row(record))
            count += 1
    finally:
        if owned:
            fh.close()
    return count


def _format_json_row(r: PacketRecord) -> str:
    obj = {
        "timestamp_us": r.timestamp_us,
        "src": str(r.src),
        "dst": str(r.dst),
        "proto": str(r.proto),
        "length_bytes": r.length_bytes,
        "kind": str(r.kind),
    }
    return json.dumps(obj, separators=(",", ":")) + "\n"


def write_jsonl(records: Iterable[PacketRecord], dest: Union[str, Path, IO[str]]) -> int:
    """Write records as JSON lines; returns the number written."""
    fh, owned = (open(dest, "w", encoding="utf-8", newline=""), True) if isinstance(
        dest, (str, Path)
    ) else (dest, False)
    count = 0
    try:
        for record in records:
            fh.write(_format_json_row(record))
            count += 1
    finally:
        if owned:
            fh.close()
    return count


# ---------------------------------------------------------------------------
# Filtering and live tailing


def filter_core(records: Iterable[PacketRecord]) -> tuple[list[PacketRecord], int]:
    """Split records into core-to-core traffic and a dropped count.

    Drops packets with an external endpoint on either side and core
    self-traffic (src == dst), which carries no interaction information.
    """
    kept: list[PacketRecord] = []
    dropped = 0
    for record in records:
        if record.is_core and record.src is not record.dst:
            kept.append(record)
        else:
            dropped += 1
    return kept, dropped


def tail_stream(
    lines: Iterable[str],
    apply,
    nf_map: Optional[NfAddressMap] = None,
    counts: Optional[IngestCounts] = None,
    on_record=None,
) -> IngestCounts:
    """Feed a live JSON-lines stream into an accumulator as it arrives.

    ``apply`` is called with each parsed record (typically an
    accumulator's ``add`` method).  Malformed lines are counted and
    skipped rather than raised — a live feed must survive a bad line.
    ``on_record`` (if given) runs after each applied record, e.g. to
    trigger periodic snapshots.
    """
    counts = counts if counts is not None else IngestCounts()
    for line_no, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            record = parse_json_record(line, line_no, nf_map)
        except ParseError:
            counts.malformed += 1
            continue
        counts.parsed += 1
        apply(record)
        if on_record is not None:
            on_record(record)
    return counts
