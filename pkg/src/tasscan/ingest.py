"""Loaders and writers for prefix feeds, address snapshots, and partitions.

Feed loaders are tolerant: malformed lines are counted and skipped, and the
returned LoadReport accounts for every input line. Only stream-level
failures (unreadable input, nothing usable at all) raise.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .errors import IngestError, PrefixError
from .prefixes import (
    ADDRESS_SPACE,
    AnnouncedPrefixTable,
    Ipv4Prefix,
    PartitionMode,
    RoutedPartition,
    format_address,
    parse_address,
    parse_prefix,
)

log = logging.getLogger(__name__)

_ORIGIN_SEPARATORS = re.compile(r"[_,]")
_DIRECTIVE = re.compile(r"#\s*(protocol|captured-at|source)\s*:\s*(\S.*?)\s*$")


@dataclass(frozen=True, slots=True)
class LoadReport:
    """Line accounting for one tolerant file load.

    accepted + rejected + skipped always equals total_lines; duplicates
    counts accepted records that merged into an earlier one.
    """

    total_lines: int
    accepted: int
    rejected: int
    skipped: int
    duplicates: int

    def __str__(self) -> str:
        return (
            f"{self.total_lines} lines: {self.accepted} records, "
            f"{self.duplicates} duplicates, {self.rejected} rejected, "
            f"{self.skipped} comments/blank"
        )


def load_pfx2as(stream: Iterable[str]) -> tuple[AnnouncedPrefixTable, LoadReport]:
    """Parse a prefix-to-AS feed: ``<network>\\t<length>\\t<origins>`` per line.

    The origin field may bundle several AS labels joined by ``_`` or ``,``;
    labels stay opaque strings. Duplicate prefixes merge by unioning
    origins. Trailing whitespace is tolerated, ``#`` lines and blank lines
    are skipped, and anything else malformed is rejected and counted.
    """
    table = AnnouncedPrefixTable()
    total = accepted = rejected = skipped = duplicates = 0
    for line in stream:
        total += 1
        body = line.rstrip()
        if not body or body.startswith("#"):
            skipped += 1
            continue
        fields = body.split("\t")
        if len(fields) != 3:
            rejected += 1
            continue
        net_text, len_text, as_field = (f.strip() for f in fields)
        try:
            prefix = parse_prefix(f"{net_text}/{len_text}")
        except PrefixError:
            rejected += 1
            continue
        origins = [label for label in _ORIGIN_SEPARATORS.split(as_field) if label]
        if not origins:
            rejected += 1
            continue
        accepted += 1
        if not table.add(prefix, origins):
            duplicates += 1
    report = LoadReport(total, accepted, rejected, skipped, duplicates)
    log.debug("pfx2as load: %s", report)
    return table, report


def dump_pfx2as(table: AnnouncedPrefixTable, out: IO[str]) -> None:
    """Serialize a table in the same tab-separated format load_pfx2as reads."""
    for prefix, origins in table.entries():
        joined = "_".join(sorted(origins))
        out.write(f"{format_address(prefix.network)}\t{prefix.length}\t{joined}\n")


class ScanSnapshot:
    """Responsive addresses for one protocol from one full scan.

    Addresses are held as a sorted, deduplicated, read-only int64 array so
    set operations over millions of entries stay vectorized.
    """

    __slots__ = ("protocol", "captured_at", "source_id", "addresses")

    def __init__(
        self,
        protocol: str,
        captured_at: str,
        addresses: Iterable[int] | np.ndarray,
        source_id: str = "",
    ) -> None:
        if isinstance(addresses, np.ndarray):
            arr = np.unique(addresses.astype(np.int64, copy=False))
        else:
            arr = np.unique(np.fromiter(addresses, dtype=np.int64))
        if arr.size and (arr[0] < 0 or arr[-1] >= ADDRESS_SPACE):
            raise IngestError("snapshot contains values outside the IPv4 space")
        arr.setflags(write=False)
        self.protocol = protocol
        self.captured_at = captured_at
        self.source_id = source_id
        self.addresses = arr

    @property
    def address_count(self) -> int:
        return int(self.addresses.size)

    @property
    def is_empty(self) -> bool:
        return self.addresses.size == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScanSnapshot):
            return NotImplemented
        return (
            self.protocol == other.protocol
            and self.captured_at == other.captured_at
            and self.source_id == other.source_id
            and np.array_equal(self.addresses, other.addresses)
        )

    def __repr__(self) -> str:
        return (
            f"ScanSnapshot({self.source_id or '?'}, protocol={self.protocol!r}, "
            f"captured_at={self.captured_at!r}, {self.address_count} addresses)"
        )


def load_snapshot(
    stream: Iterable[str],
    protocol: str | None = None,
    captured_at: str | None = None,
    source_id: str | None = None,
) -> tuple[ScanSnapshot, LoadReport]:
    """Parse one dotted-quad responsive address per line.

    ``#`` lines are comments. Comments of the form ``# protocol: ftp``,
    ``# captured-at: 2016-02-01`` and ``# source: label`` set snapshot
    metadata unless the corresponding argument overrides them. Duplicate
    addresses collapse to one and are counted; malformed lines are rejected
    and counted. An empty snapshot loads fine but is flagged with a warning
    since it cannot seed a selection.
    """
    values: list[int] = []
    seen: set[int] = set()
    meta: dict[str, str] = {}
    total = accepted = rejected = skipped = duplicates = 0
    for line in stream:
        total += 1
        body = line.strip()
        if not body:
            skipped += 1
            continue
        if body.startswith("#"):
            skipped += 1
            directive = _DIRECTIVE.match(body)
            if directive:
                meta[directive.group(1)] = directive.group(2)
            continue
        try:
            value = parse_address(body)
        except PrefixError:
            rejected += 1
            continue
        accepted += 1
        if value in seen:
            duplicates += 1
        else:
            seen.add(value)
            values.append(value)
    snapshot = ScanSnapshot(
        protocol if protocol is not None else meta.get("protocol", ""),
        captured_at if captured_at is not None else meta.get("captured-at", ""),
        np.array(values, dtype=np.int64),
        source_id if source_id is not None else meta.get("source", ""),
    )
    report = LoadReport(total, accepted, rejected, skipped, duplicates)
    log.debug("snapshot load: %s", report)
    if snapshot.is_empty:
        log.warning("snapshot %s holds no responsive addresses", snapshot.source_id or "<unnamed>")
    return snapshot, report


def dump_snapshot(snapshot: ScanSnapshot, out: IO[str]) -> None:
    """Serialize a snapshot in the format load_snapshot reads."""
    if snapshot.protocol:
        out.write(f"# protocol: {snapshot.protocol}\n")
    if snapshot.captured_at:
        out.write(f"# captured-at: {snapshot.captured_at}\n")
    if snapshot.source_id:
        out.write(f"# source: {snapshot.source_id}\n")
    for value in snapshot.addresses.tolist():
        out.write(format_address(value) + "\n")


def load_partition(stream: Iterable[str], mode: PartitionMode | None = None) -> RoutedPartition:
    """Read a partition file: CIDR lines plus a ``# mode:`` comment.

    Partition files are tool output, so unlike the feed loaders this one is
    strict: any malformed line means corruption and raises.
    """
    prefixes: list[Ipv4Prefix] = []
    file_mode: PartitionMode | None = None
    for number, line in enumerate(stream, 1):
        body = line.strip()
        if not body:
            continue
        if body.startswith("#"):
            key, sep, value = body.lstrip("#").partition(":")
            if sep and key.strip() == "mode":
                file_mode = PartitionMode.from_label(value)
            continue
        try:
            prefixes.append(parse_prefix(body))
        except PrefixError as exc:
            raise IngestError(f"partition line {number}: {exc}") from exc
    chosen = mode or file_mode
    if chosen is None:
        raise IngestError("partition file lacks a '# mode:' comment and no mode was given")
    return RoutedPartition(chosen, prefixes)


def dump_partition(partition: RoutedPartition, out: IO[str]) -> None:
    """Write a partition as sorted CIDR lines with its mode recorded."""
    out.write(f"# mode: {partition.mode.value}\n")
    for prefix in partition.prefixes:
        out.write(f"{prefix}\n")
