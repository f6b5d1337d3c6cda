"""Replay later scan snapshots against a frozen, seed-time scan plan.

Two strategies are replayed the same way: a hitlist keeps the seed's exact
addresses, the prefix plan keeps the selected prefixes. For each later
snapshot the ground truth is everything responsive in that snapshot,
including addresses outside the routed partition, so both strategies pay
for churn they cannot see.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Sequence

import numpy as np

from .errors import EvaluationError
from .ingest import ScanSnapshot
from .prefixes import PartitionMode, RoutedPartition
from .selector import SelectionResult, format_decimal

log = logging.getLogger(__name__)

SERIES_COLUMNS = (
    "snapshot_id",
    "snapshot_time",
    "strategy",
    "phi",
    "ground_truth",
    "covered",
    "hitrate",
)

HISTOGRAM_COLUMNS = ("length", "host_count")

# Hosts in blocks more specific than /24 pool into one histogram bucket.
MAX_BINNED_LENGTH = 24


class Strategy(enum.Enum):
    HITLIST = "hitlist"
    TASS = "tass"


@dataclass(frozen=True, slots=True)
class HitratePoint:
    """One later snapshot scored against the frozen plan.

    hitrate is None when the snapshot has no responsive hosts at all: the
    ratio is undefined there and must not masquerade as 0 or 1.
    """

    snapshot_id: str
    snapshot_time: str
    ground_truth_hosts: int
    covered_hosts: int
    hitrate: Fraction | None


@dataclass(frozen=True)
class HitrateSeries:
    """Hitrate per later snapshot, ordered by snapshot time."""

    strategy: Strategy
    points: tuple[HitratePoint, ...]
    phi_target: Fraction | None = None
    partition_mode: PartitionMode | None = None


def _ordered_snapshots(
    protocol: str, later: Sequence[ScanSnapshot]
) -> list[ScanSnapshot]:
    if not later:
        raise EvaluationError("no later snapshots to evaluate")
    for snapshot in later:
        if snapshot.protocol != protocol:
            raise EvaluationError(
                f"protocol mismatch: snapshot {snapshot.source_id or '?'} is "
                f"{snapshot.protocol!r}, expected {protocol!r}"
            )
    return sorted(later, key=lambda s: s.captured_at)


def _point(snapshot: ScanSnapshot, covered: int) -> HitratePoint:
    ground_truth = snapshot.address_count
    if ground_truth == 0:
        log.warning(
            "snapshot %s is empty; hitrate undefined", snapshot.source_id or "<unnamed>"
        )
        hitrate = None
    else:
        hitrate = Fraction(covered, ground_truth)
    return HitratePoint(
        snapshot_id=snapshot.source_id,
        snapshot_time=snapshot.captured_at,
        ground_truth_hosts=ground_truth,
        covered_hosts=covered,
        hitrate=hitrate,
    )


def simulate_hitlist(seed: ScanSnapshot, later: Sequence[ScanSnapshot]) -> HitrateSeries:
    """Replay later snapshots against the seed's literal address list."""
    points = []
    for snapshot in _ordered_snapshots(seed.protocol, later):
        covered = int(
            np.intersect1d(seed.addresses, snapshot.addresses, assume_unique=True).size
        )
        points.append(_point(snapshot, covered))
    return HitrateSeries(Strategy.HITLIST, tuple(points))


def simulate_tass(
    selection: SelectionResult,
    partition: RoutedPartition,
    later: Sequence[ScanSnapshot],
) -> HitrateSeries:
    """Replay later snapshots against the seed-time prefix selection.

    The selection stays frozen: no re-ranking, no re-cutting. A covered host
    is any responsive address inside a selected prefix; because selected
    prefixes come from a disjoint partition, containment and longest match
    agree. The partition must be the one the selection was built from.
    """
    if selection.partition_fingerprint != partition.fingerprint:
        raise EvaluationError("selection was not built from this partition")
    subset = RoutedPartition(partition.mode, selection.selected_prefixes)
    snapshots = _ordered_snapshots(later[0].protocol if later else "", later)
    points = []
    for snapshot in snapshots:
        covered = int((subset.match_indices(snapshot.addresses) >= 0).sum())
        points.append(_point(snapshot, covered))
    return HitrateSeries(
        Strategy.TASS,
        tuple(points),
        phi_target=selection.phi_target,
        partition_mode=selection.partition_mode,
    )


@dataclass(frozen=True)
class PrefixLengthHistogram:
    """Responsive hosts of one snapshot, bucketed by covering prefix length.

    counts[i] holds hosts in /i blocks for i in 0..24; anything more
    specific pools into ge25. unrouted counts hosts outside the partition,
    so the buckets plus unrouted always sum to the snapshot size.
    """

    snapshot_id: str
    counts: tuple[int, ...]
    ge25: int
    unrouted: int

    @property
    def total_hosts(self) -> int:
        return sum(self.counts) + self.ge25 + self.unrouted


def prefix_length_histogram(
    partition: RoutedPartition, snapshot: ScanSnapshot
) -> PrefixLengthHistogram:
    """Attribute each responsive host to its covering prefix's length."""
    indices = partition.match_indices(snapshot.addresses)
    routed = indices[indices >= 0]
    binned = np.minimum(partition.lengths[routed], MAX_BINNED_LENGTH + 1)
    buckets = np.bincount(binned, minlength=MAX_BINNED_LENGTH + 2)
    return PrefixLengthHistogram(
        snapshot_id=snapshot.source_id,
        counts=tuple(int(c) for c in buckets[: MAX_BINNED_LENGTH + 1]),
        ge25=int(buckets[MAX_BINNED_LENGTH + 1]),
        unrouted=int(snapshot.address_count - routed.size),
    )


@dataclass(frozen=True, slots=True)
class HitrateDelta:
    """Per-snapshot difference between two series: a minus b."""

    snapshot_id: str
    snapshot_time: str
    hitrate_a: Fraction | None
    hitrate_b: Fraction | None
    delta: Fraction | None


def compare_series(a: HitrateSeries, b: HitrateSeries) -> list[HitrateDelta]:
    """Align two series snapshot by snapshot and report hitrate deltas.

    Both series must cover the same snapshots in the same time order. The
    delta is undefined wherever either hitrate is.
    """
    ids_a = [point.snapshot_id for point in a.points]
    ids_b = [point.snapshot_id for point in b.points]
    if ids_a != ids_b:
        raise EvaluationError(
            f"series cover different snapshots: {ids_a!r} vs {ids_b!r}"
        )
    rows = []
    for pa, pb in zip(a.points, b.points):
        if pa.hitrate is None or pb.hitrate is None:
            delta = None
        else:
            delta = pa.hitrate - pb.hitrate
        rows.append(
            HitrateDelta(pa.snapshot_id, pa.snapshot_time, pa.hitrate, pb.hitrate, delta)
        )
    return rows


def write_series_csv(series_list: Sequence[HitrateSeries], out: IO[str]) -> None:
    """One CSV carrying any number of series; empty hitrate means undefined."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SERIES_COLUMNS)
    for series in series_list:
        phi_text = "" if series.phi_target is None else format_decimal(series.phi_target)
        for point in series.points:
            writer.writerow(
                (
                    point.snapshot_id,
                    point.snapshot_time,
                    series.strategy.value,
                    phi_text,
                    point.ground_truth_hosts,
                    point.covered_hosts,
                    "" if point.hitrate is None else format_decimal(point.hitrate),
                )
            )


def write_histogram_csv(histogram: PrefixLengthHistogram, out: IO[str]) -> None:
    """Length buckets 0..24 as rows, then the ge25 and unrouted rows."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HISTOGRAM_COLUMNS)
    for length, count in enumerate(histogram.counts):
        writer.writerow((length, count))
    writer.writerow(("ge25", histogram.ge25))
    writer.writerow(("unrouted", histogram.unrouted))


def write_delta_csv(
    rows: Sequence[HitrateDelta], out: IO[str], label_a: str = "tass", label_b: str = "hitlist"
) -> None:
    """Comparison rows as CSV; empty cells mean the value is undefined."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ("snapshot_id", "snapshot_time", f"{label_a}_hitrate", f"{label_b}_hitrate", "delta")
    )
    for row in rows:
        writer.writerow(
            (
                row.snapshot_id,
                row.snapshot_time,
                "" if row.hitrate_a is None else format_decimal(row.hitrate_a),
                "" if row.hitrate_b is None else format_decimal(row.hitrate_b),
                "" if row.delta is None else format_decimal(row.delta),
            )
        )
