"""Command-line pipeline: partition, select, evaluate, histogram.

Each command writes its outputs atomically plus a run manifest next to the
primary output. Exit code 0 means every output was written; any failure
prints a single-line error on stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from fractions import Fraction
from io import StringIO
from pathlib import Path
from typing import IO, Callable

from ._version import __version__
from .errors import ManifestError, SelectionError, TasscanError
from .evaluator import (
    HitrateSeries,
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
    load_partition,
    load_pfx2as,
    load_snapshot,
)
from .manifest import (
    FileStamp,
    RunManifest,
    atomic_write_text,
    manifest_path_for,
    read_manifest,
    resolve_stamp,
    stamp,
    write_manifest,
)
from .prefixes import PartitionMode, build_partition, maximal_prefix_count
from .selector import (
    as_fraction,
    format_decimal,
    plan_selection,
    write_statistics_csv,
    write_target_list,
)

log = logging.getLogger(__name__)


class _UsageError(TasscanError):
    """Bad command line; reported as a single line, exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _read_lines(path: str):
    """Open a text input; '-' means standard input."""
    if path == "-":
        return sys.stdin
    return open(path, "r", encoding="utf-8")


def _load_snapshot_file(path: str) -> tuple[ScanSnapshot, LoadReport]:
    with _read_lines(path) as fh:
        snapshot, report = load_snapshot(fh)
    if not snapshot.source_id:
        snapshot.source_id = Path(path).name if path != "-" else "stdin"
    return snapshot, report


def _parse_phi(text: str) -> Fraction:
    try:
        phi = as_fraction(text)
    except (SelectionError, ValueError) as exc:
        raise _UsageError(f"--phi {text!r} is not a decimal or rational") from exc
    if not 0 < phi <= 1:
        raise _UsageError(f"--phi must be in (0, 1], got {text}")
    return phi


def _write_output(path: str, render: Callable[[IO[str]], None]) -> FileStamp:
    atomic_write_text(path, render)
    return stamp(path)


def cmd_partition(args: argparse.Namespace) -> int:
    mode = PartitionMode.from_label(args.mode)
    with _read_lines(args.pfx2as) as fh:
        table, report = load_pfx2as(fh)
    print(f"pfx2as: {report}")
    if len(table) == 0:
        raise TasscanError(f"no usable prefixes in {args.pfx2as}")
    partition = build_partition(table, mode)
    maximal = maximal_prefix_count(table)
    nested = len(table) - maximal
    out_stamp = _write_output(args.out, lambda fh: dump_partition(partition, fh))
    manifest = RunManifest(
        command="partition",
        parameters={"mode": mode.value},
        inputs={} if args.pfx2as == "-" else {"pfx2as": stamp(args.pfx2as)},
        outputs={"partition": out_stamp},
    )
    manifest_path = manifest_path_for(args.out)
    write_manifest(manifest, manifest_path)
    share = 100 * nested / len(table)
    print(f"announced prefixes: {len(table)} (m-prefixes: {nested}, {share:.1f}%)")
    print(f"partition prefixes: {len(partition)}")
    print(f"total addresses: {partition.total_addresses}")
    print(f"wrote {args.out} and {manifest_path}")
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    phi = _parse_phi(args.phi)
    with _read_lines(args.partition) as fh:
        partition = load_partition(fh)
    snapshot, report = _load_snapshot_file(args.snapshot)
    print(f"snapshot: {report}")
    selection, unrouted = plan_selection(partition, snapshot, phi)
    targets_stamp = _write_output(args.targets, lambda fh: write_target_list(selection, fh))
    stats_stamp = _write_output(args.stats, lambda fh: write_statistics_csv(selection, fh))
    manifest = RunManifest(
        command="select",
        parameters={"mode": partition.mode.value, "phi": str(phi)},
        inputs={
            **({} if args.partition == "-" else {"partition": stamp(args.partition)}),
            **({} if args.snapshot == "-" else {"snapshot": stamp(args.snapshot)}),
        },
        outputs={"targets": targets_stamp, "stats": stats_stamp},
    )
    manifest_path = manifest_path_for(args.targets)
    write_manifest(manifest, manifest_path)
    print(f"seed hosts: {selection.total_hosts} routed, {unrouted} unrouted")
    print(f"responsive prefixes: {len(selection.ranked)}")
    print(f"selected prefixes: {selection.k}")
    print(f"cumulative host coverage: {format_decimal(selection.cum_host_coverage)}")
    print(f"cumulative address coverage: {format_decimal(selection.cum_address_coverage)}")
    print(f"wrote {args.targets}, {args.stats}, and {manifest_path}")
    return 0


def _render_targets(selection) -> str:
    buffer = StringIO()
    write_target_list(selection, buffer)
    return buffer.getvalue()


def cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.targets_manifest)
    if manifest.command != "select":
        raise ManifestError(
            f"{args.targets_manifest} records a {manifest.command!r} run, needs 'select'"
        )
    base_dir = Path(args.targets_manifest).resolve().parent
    try:
        phi = Fraction(manifest.parameters["phi"])
    except (KeyError, ValueError) as exc:
        raise ManifestError("manifest does not record a usable phi") from exc

    if "snapshot" not in manifest.inputs:
        raise ManifestError("manifest does not reference a seed snapshot file")
    seed_path = resolve_stamp(manifest.inputs["snapshot"], base_dir, "seed snapshot")
    seed, _ = _load_snapshot_file(str(seed_path))
    if seed.is_empty:
        raise TasscanError(f"seed snapshot {seed_path} is empty")

    later = []
    for path in args.snapshots:
        snapshot, _ = _load_snapshot_file(path)
        if not snapshot.captured_at:
            raise TasscanError(f"snapshot {path} lacks a '# captured-at:' comment")
        if snapshot.protocol != seed.protocol:
            raise TasscanError(
                f"protocol mismatch: {path} is {snapshot.protocol!r}, "
                f"seed is {seed.protocol!r}"
            )
        later.append(snapshot)

    want_tass = args.strategy in ("tass", "both")
    want_hitlist = args.strategy in ("hitlist", "both")
    series: list[HitrateSeries] = []
    tass_series = hitlist_series = None

    if want_tass:
        if "partition" not in manifest.inputs:
            raise ManifestError("manifest does not reference a partition file")
        partition_path = resolve_stamp(manifest.inputs["partition"], base_dir, "partition")
        with open(partition_path, "r", encoding="utf-8") as fh:
            partition = load_partition(fh)
        selection, _ = plan_selection(partition, seed, phi)
        regenerated = hashlib.sha256(_render_targets(selection).encode()).hexdigest()
        if regenerated != manifest.outputs["targets"].sha256:
            raise ManifestError(
                "regenerated target list does not match the manifest; "
                "partition or seed snapshot no longer correspond to it"
            )
        tass_series = simulate_tass(selection, partition, later)
        series.append(tass_series)
    if want_hitlist:
        hitlist_series = simulate_hitlist(seed, later)
        series.append(hitlist_series)

    out_stamps = {"series": _write_output(args.out, lambda fh: write_series_csv(series, fh))}
    delta_path = None
    if tass_series is not None and hitlist_series is not None:
        deltas = compare_series(tass_series, hitlist_series)
        out = Path(args.out)
        delta_path = out.with_name(out.stem + ".delta" + (out.suffix or ".csv"))
        out_stamps["delta"] = _write_output(
            str(delta_path), lambda fh: write_delta_csv(deltas, fh)
        )

    run_manifest = RunManifest(
        command="evaluate",
        parameters={
            "phi": str(phi),
            "mode": manifest.parameters.get("mode", ""),
            "strategy": args.strategy,
        },
        inputs={
            "targets_manifest": stamp(args.targets_manifest),
            **{f"snapshot_{i}": stamp(p) for i, p in enumerate(args.snapshots)},
        },
        outputs=out_stamps,
    )
    manifest_path = manifest_path_for(args.out)
    write_manifest(run_manifest, manifest_path)
    for one in series:
        last = one.points[-1]
        tail = "undefined" if last.hitrate is None else format_decimal(last.hitrate)
        print(f"{one.strategy.value}: {len(one.points)} points, last hitrate {tail}")
    wrote = [args.out] + ([str(delta_path)] if delta_path else []) + [str(manifest_path)]
    print("wrote " + ", ".join(wrote))
    return 0


def cmd_histogram(args: argparse.Namespace) -> int:
    with _read_lines(args.partition) as fh:
        partition = load_partition(fh)
    snapshot, report = _load_snapshot_file(args.snapshot)
    print(f"snapshot: {report}")
    histogram = prefix_length_histogram(partition, snapshot)
    out_stamp = _write_output(args.out, lambda fh: write_histogram_csv(histogram, fh))
    manifest = RunManifest(
        command="histogram",
        parameters={"mode": partition.mode.value},
        inputs={
            **({} if args.partition == "-" else {"partition": stamp(args.partition)}),
            **({} if args.snapshot == "-" else {"snapshot": stamp(args.snapshot)}),
        },
        outputs={"histogram": out_stamp},
    )
    manifest_path = manifest_path_for(args.out)
    write_manifest(manifest, manifest_path)
    print(f"routed hosts: {histogram.total_hosts - histogram.unrouted}, unrouted: {histogram.unrouted}")
    print(f"wrote {args.out} and {manifest_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="tasscan",
        description="Plan scan target lists from announced prefixes and replay their accuracy over time.",
    )
    parser.add_argument("--version", action="version", version=f"tasscan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="derive a disjoint prefix partition from a pfx2as feed")
    p.add_argument("--pfx2as", required=True, help="prefix-to-AS feed file, or - for stdin")
    p.add_argument("--mode", required=True, choices=("less", "more"),
                   help="keep maximal prefixes only (less) or deaggregate around nested ones (more)")
    p.add_argument("--out", required=True, help="partition file to write")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("select", help="rank responsive prefixes and cut a target list")
    p.add_argument("--partition", required=True, help="partition file from the partition command")
    p.add_argument("--snapshot", required=True, help="seed snapshot of responsive addresses")
    p.add_argument("--phi", required=True, help="host coverage target in (0, 1], e.g. 0.95")
    p.add_argument("--stats", required=True, help="ranking statistics CSV to write")
    p.add_argument("--targets", required=True, help="scanner target list to write")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="replay later snapshots against a frozen selection")
    p.add_argument("--targets-manifest", required=True,
                   help="manifest written by the select command")
    p.add_argument("--snapshots", required=True, nargs="+",
                   help="later snapshot files, each with a '# captured-at:' comment")
    p.add_argument("--strategy", default="both", choices=("tass", "hitlist", "both"))
    p.add_argument("--out", required=True, help="hitrate series CSV to write")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("histogram", help="bucket a snapshot's hosts by covering prefix length")
    p.add_argument("--partition", required=True, help="partition file")
    p.add_argument("--snapshot", required=True, help="snapshot of responsive addresses")
    p.add_argument("--out", required=True, help="histogram CSV to write")
    p.set_defaults(func=cmd_histogram)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="tasscan: %(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"tasscan: error: {exc}", file=sys.stderr)
        return 2
    except (TasscanError, OSError) as exc:
        print(f"tasscan: error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
