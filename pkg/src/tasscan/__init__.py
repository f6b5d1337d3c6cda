"""Topology-aware scan planning.

Derive disjoint prefix partitions from announced BGP prefixes, rank
responsive prefixes by host density, cut the smallest prefix set reaching a
host coverage target, and replay later scan snapshots to measure how the
frozen plan decays against full scans and plain address hitlists.
"""

from ._version import __version__
from .errors import (
    EvaluationError,
    IngestError,
    ManifestError,
    PartitionError,
    PrefixError,
    SelectionError,
    TasscanError,
)
from .evaluator import (
    HitrateDelta,
    HitratePoint,
    HitrateSeries,
    PrefixLengthHistogram,
    Strategy,
    compare_series,
    prefix_length_histogram,
    simulate_hitlist,
    simulate_tass,
    write_delta_csv,
    write_histogram_csv,
    write_series_csv,
)
from .ingest import (
    LoadReport,
    ScanSnapshot,
    dump_partition,
    dump_pfx2as,
    dump_snapshot,
    load_partition,
    load_pfx2as,
    load_snapshot,
)
from .manifest import RunManifest, read_manifest, sha256_file, write_manifest
from .prefixes import (
    AnnouncedPrefixTable,
    Ipv4Prefix,
    PartitionMode,
    RoutedPartition,
    build_partition,
    deaggregate,
    format_address,
    maximal_prefix_count,
    parse_address,
    parse_prefix,
)
from .selector import (
    PrefixDensityRecord,
    SelectionResult,
    StatisticsRow,
    address_space_coverage,
    as_fraction,
    compute_densities,
    count_hosts,
    emit_statistics,
    format_decimal,
    plan_selection,
    rank_by_density,
    select_prefixes,
    write_statistics_csv,
    write_target_list,
)

__all__ = [
    "__version__",
    "TasscanError",
    "PrefixError",
    "PartitionError",
    "IngestError",
    "SelectionError",
    "EvaluationError",
    "ManifestError",
    "Ipv4Prefix",
    "AnnouncedPrefixTable",
    "PartitionMode",
    "RoutedPartition",
    "parse_address",
    "format_address",
    "parse_prefix",
    "deaggregate",
    "build_partition",
    "maximal_prefix_count",
    "LoadReport",
    "ScanSnapshot",
    "load_pfx2as",
    "dump_pfx2as",
    "load_snapshot",
    "dump_snapshot",
    "load_partition",
    "dump_partition",
    "PrefixDensityRecord",
    "SelectionResult",
    "StatisticsRow",
    "count_hosts",
    "compute_densities",
    "rank_by_density",
    "select_prefixes",
    "plan_selection",
    "address_space_coverage",
    "emit_statistics",
    "as_fraction",
    "format_decimal",
    "write_statistics_csv",
    "write_target_list",
    "Strategy",
    "HitratePoint",
    "HitrateSeries",
    "HitrateDelta",
    "PrefixLengthHistogram",
    "simulate_hitlist",
    "simulate_tass",
    "prefix_length_histogram",
    "compare_series",
    "write_series_csv",
    "write_histogram_csv",
    "write_delta_csv",
    "RunManifest",
    "read_manifest",
    "write_manifest",
    "sha256_file",
]
