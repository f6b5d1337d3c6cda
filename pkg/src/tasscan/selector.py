"""Density ranking and coverage-target prefix selection.

The pipeline: attribute each responsive address of a seed snapshot to its
partition prefix, rank responsive prefixes by host density, then keep the
smallest top-ranked set whose cumulative host share strictly exceeds the
coverage target. All cut decisions use exact rational arithmetic so results
never depend on float rounding at a boundary.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Mapping, Sequence

import numpy as np

from .errors import SelectionError
from .ingest import ScanSnapshot
from .prefixes import Ipv4Prefix, PartitionMode, RoutedPartition, _prefix_key, format_address

log = logging.getLogger(__name__)

STATISTICS_COLUMNS = (
    "rank",
    "prefix",
    "length",
    "host_count",
    "density",
    "cum_host_coverage",
    "cum_addr_coverage",
)

# One attribution chunk per worker only pays off on big snapshots.
_PARALLEL_THRESHOLD = 1 << 19


def worker_cap() -> int:
    """Worker count for bulk attribution: all cores, capped by TASS_THREADS."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get("TASS_THREADS", "").strip()
    if not raw:
        return cpus
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer TASS_THREADS=%r", raw)
        return cpus


def as_fraction(value: Fraction | str | float | int) -> Fraction:
    """Exact rational from int, Fraction, or decimal string.

    Floats convert through their shortest decimal repr, so a literal like
    0.95 means exactly 95/100 rather than its binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise SelectionError(f"not a usable coverage target: {value!r}") from exc


def format_decimal(value: Fraction, places: int = 6) -> str:
    """Fixed-point decimal of an exact rational, round-half-even.

    Integer arithmetic end to end, so equal inputs render byte-identically
    on every platform.
    """
    sign = "-" if value < 0 else ""
    scaled = abs(value.numerator) * 10**places
    quotient, remainder = divmod(scaled, value.denominator)
    if 2 * remainder > value.denominator or (
        2 * remainder == value.denominator and quotient % 2
    ):
        quotient += 1
    whole, frac = divmod(quotient, 10**places)
    text = f"{whole}.{frac:0{places}d}"
    return sign + text if quotient else text


@dataclass(frozen=True, slots=True)
class PrefixDensityRecord:
    """Per-prefix responsiveness derived from one seed snapshot."""

    prefix: Ipv4Prefix
    host_count: int
    # host_count / 2**(32 - length): a float with a power-of-two denominator
    # and a numerator below 2**53 is exact, so float compares are safe here
    density: float
    coverage_share: Fraction


def count_hosts(
    partition: RoutedPartition, snapshot: ScanSnapshot
) -> tuple[dict[Ipv4Prefix, int], int]:
    """Attribute every snapshot address to its covering partition prefix.

    Returns per-prefix host counts (responsive prefixes only) and the count
    of addresses outside the partition. The attribution may be chunked
    across threads; counts are integer sums, so the result is identical for
    any worker count.
    """
    addresses = snapshot.addresses
    if addresses.size == 0 or len(partition) == 0:
        return {}, int(addresses.size)
    workers = min(worker_cap(), max(1, addresses.size // _PARALLEL_THRESHOLD))
    if workers > 1:
        chunks = np.array_split(addresses, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            indices = np.concatenate(list(pool.map(partition.match_indices, chunks)))
    else:
        indices = partition.match_indices(addresses)
    routed = indices[indices >= 0]
    counts = np.bincount(routed, minlength=len(partition))
    host_counts = {
        partition.prefixes[i]: int(counts[i]) for i in np.nonzero(counts)[0]
    }
    unrouted = int(addresses.size - routed.size)
    return host_counts, unrouted


def compute_densities(
    counts: Mapping[Ipv4Prefix, int], total_hosts: int
) -> list[PrefixDensityRecord]:
    """Build density records for every responsive prefix.

    total_hosts must equal the sum of counts; it is the denominator of each
    coverage share. Zero-count prefixes never yield a record. An empty seed
    produces an empty list and a warning.
    """
    if total_hosts != sum(counts.values()):
        raise SelectionError("total_hosts must equal the sum of per-prefix counts")
    if total_hosts == 0:
        log.warning("seed snapshot has no routed responsive hosts; nothing to rank")
        return []
    records = []
    for prefix, count in sorted(counts.items(), key=lambda item: _prefix_key(item[0])):
        if not 0 <= count <= prefix.size:
            raise SelectionError(f"host count {count} impossible for {prefix}")
        if count == 0:
            continue
        records.append(
            PrefixDensityRecord(
                prefix, count, count / prefix.size, Fraction(count, total_hosts)
            )
        )
    return records


def rank_by_density(records: Sequence[PrefixDensityRecord]) -> list[PrefixDensityRecord]:
    """Order records by density descending.

    Ties break by host count descending, then (network, length) ascending,
    so the ranking is a deterministic total order.
    """
    return sorted(
        records,
        key=lambda r: (-r.density, -r.host_count, r.prefix.network, r.prefix.length),
    )


@dataclass(frozen=True)
class SelectionResult:
    """A frozen scan plan: the ranking plus the chosen cut."""

    phi_target: Fraction
    ranked: tuple[PrefixDensityRecord, ...]
    k: int
    total_hosts: int
    cum_host_coverage: Fraction
    cum_address_coverage: Fraction
    seed_snapshot_id: str
    partition_mode: PartitionMode
    routed_addresses: int
    partition_fingerprint: str

    @property
    def selected_records(self) -> tuple[PrefixDensityRecord, ...]:
        return self.ranked[: self.k]

    @property
    def selected_prefixes(self) -> tuple[Ipv4Prefix, ...]:
        """The first k ranked prefixes, in ranking order."""
        return tuple(record.prefix for record in self.ranked[: self.k])

    @property
    def selected_addresses(self) -> int:
        """Address-space cost of the plan, in addresses."""
        return sum(record.prefix.size for record in self.ranked[: self.k])


def select_prefixes(
    ranked: Sequence[PrefixDensityRecord],
    phi_target: Fraction | str | float | int,
    partition: RoutedPartition,
    seed_snapshot_id: str = "",
) -> SelectionResult:
    """Keep the smallest k whose cumulative host share strictly exceeds the target.

    The comparison is exact: cumulative counts are cross-multiplied against
    the target fraction, never floated. A target of 1 keeps every ranked
    prefix, since a strict majority of 1 is unreachable; that still covers
    every responsive prefix because zero-density prefixes are never ranked.
    """
    phi = as_fraction(phi_target)
    if not 0 < phi <= 1:
        raise SelectionError(f"coverage target must be in (0, 1], got {phi}")
    if not ranked:
        raise SelectionError("no responsive prefixes to select from")
    total_hosts = sum(record.host_count for record in ranked)
    if phi == 1:
        k = len(ranked)
        covered = total_hosts
    else:
        covered = 0
        k = 0
        for record in ranked:
            covered += record.host_count
            k += 1
            if covered * phi.denominator > phi.numerator * total_hosts:
                break
    selected_addresses = sum(record.prefix.size for record in ranked[:k])
    return SelectionResult(
        phi_target=phi,
        ranked=tuple(ranked),
        k=k,
        total_hosts=total_hosts,
        cum_host_coverage=Fraction(covered, total_hosts),
        cum_address_coverage=Fraction(selected_addresses, partition.total_addresses),
        seed_snapshot_id=seed_snapshot_id,
        partition_mode=partition.mode,
        routed_addresses=partition.total_addresses,
        partition_fingerprint=partition.fingerprint,
    )


def plan_selection(
    partition: RoutedPartition,
    snapshot: ScanSnapshot,
    phi_target: Fraction | str | float | int,
    seed_snapshot_id: str | None = None,
) -> tuple[SelectionResult, int]:
    """Count, rank, and cut in one step. Returns (selection, unrouted count)."""
    counts, unrouted = count_hosts(partition, snapshot)
    records = compute_densities(counts, snapshot.address_count - unrouted)
    ranked = rank_by_density(records)
    seed_id = snapshot.source_id if seed_snapshot_id is None else seed_snapshot_id
    return select_prefixes(ranked, phi_target, partition, seed_snapshot_id=seed_id), unrouted


def address_space_coverage(selection: SelectionResult, routed_total: int | None = None) -> Fraction:
    """Share of the routed address space the selected prefixes occupy."""
    total = selection.routed_addresses if routed_total is None else routed_total
    if total <= 0:
        raise SelectionError("routed address total must be positive")
    return Fraction(selection.selected_addresses, total)


@dataclass(frozen=True, slots=True)
class StatisticsRow:
    """One rank step of the coverage curve."""

    rank: int
    prefix: Ipv4Prefix
    host_count: int
    density: float
    cum_host_coverage: Fraction
    cum_addr_coverage: Fraction


def emit_statistics(selection: SelectionResult) -> list[StatisticsRow]:
    """Per-rank curve data over the whole ranking, not just the selected cut.

    Cumulative columns are exact fractions and non-decreasing row over row.
    """
    rows = []
    hosts = 0
    addresses = 0
    for rank, record in enumerate(selection.ranked, 1):
        hosts += record.host_count
        addresses += record.prefix.size
        rows.append(
            StatisticsRow(
                rank=rank,
                prefix=record.prefix,
                host_count=record.host_count,
                density=record.density,
                cum_host_coverage=Fraction(hosts, selection.total_hosts),
                cum_addr_coverage=Fraction(addresses, selection.routed_addresses),
            )
        )
    return rows


def write_statistics_csv(selection: SelectionResult, out: IO[str]) -> None:
    """Ranking statistics as CSV; densities carry 6 significant digits and
    cumulative coverages 6 decimal places."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(STATISTICS_COLUMNS)
    for row in emit_statistics(selection):
        writer.writerow(
            (
                row.rank,
                format_address(row.prefix.network),
                row.prefix.length,
                row.host_count,
                f"{row.density:.6g}",
                format_decimal(row.cum_host_coverage),
                format_decimal(row.cum_addr_coverage),
            )
        )


def write_target_list(selection: SelectionResult, out: IO[str]) -> None:
    """Scanner-ready allowlist: one CIDR per line, network ascending."""
    for prefix in sorted(selection.selected_prefixes, key=_prefix_key):
        out.write(f"{prefix}\n")
