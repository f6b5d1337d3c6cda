"""Pick scan targets from a seed snapshot: rank by density, cut at a target.

The planner counts the seed's responsive hosts per partition prefix, ranks
prefixes by host density, and keeps the smallest set whose cumulative host
share strictly exceeds the coverage target. Denser prefixes buy more hosts
per probed address, so the cut trades a little coverage for a much smaller
probe list.

Everything is synthetic and seeded, so repeated runs print the same plan.
The chosen target list and the full ranking table land in demos/output/.
"""

from __future__ import annotations

import random
from pathlib import Path

from tasscan import (
    AnnouncedPrefixTable,
    Ipv4Prefix,
    PartitionMode,
    ScanSnapshot,
    build_partition,
    format_address,
    plan_selection,
    write_statistics_csv,
    write_target_list,
)

import numpy as np

OUTPUT_DIR = Path(__file__).with_name("output")
PHI_SWEEP = ["0.5", "0.7", "0.9", "0.95", "0.99", "1"]


def synth_announcements(rng: random.Random) -> AnnouncedPrefixTable:
    """Forty-odd disjoint blocks of mixed size inside 10.0.0.0/12."""
    chosen: set[Ipv4Prefix] = set()
    while len(chosen) < 40:
        length = rng.choice((16, 18, 20, 22, 24))
        slots = 1 << (length - 12)
        network = (10 << 24) + rng.randrange(slots) * (1 << (32 - length))
        candidate = Ipv4Prefix(network, length)
        if not any(a.contains(candidate) or candidate.contains(a) for a in chosen):
            chosen.add(candidate)
    return AnnouncedPrefixTable.from_pairs(
        (prefix, [str(64512 + i % 7)]) for i, prefix in enumerate(sorted(chosen))
    )


def synth_seed(rng: random.Random, table: AnnouncedPrefixTable) -> ScanSnapshot:
    """A seed scan where a handful of prefixes hold most of the hosts."""
    prefixes = table.prefixes()
    hot = rng.sample(prefixes, 6)
    addresses: set[int] = set()
    for prefix in prefixes:
        population = 2000 if prefix in hot else 40
        for _ in range(population):
            addresses.add(prefix.network + rng.randrange(prefix.size))
    return ScanSnapshot(
        "demo", "2016-01-01", np.array(sorted(addresses), dtype=np.int64), "cycle-0"
    )


def main() -> None:
    rng = random.Random(1601)
    table = synth_announcements(rng)
    partition = build_partition(table, PartitionMode.MORE_SPECIFIC)
    seed = synth_seed(rng, table)
    print(f"partition: {len(partition)} prefixes, seed: {seed.address_count} hosts")

    selection, unrouted = plan_selection(partition, seed, "0.9")
    print(f"unrouted seed addresses: {unrouted}")

    print("\ntop of the density ranking:")
    print(f"  {'rank':>4}  {'prefix':<18} {'hosts':>6} {'density':>9} {'share':>9}")
    for rank, record in enumerate(selection.ranked[:10], 1):
        print(
            f"  {rank:>4}  {str(record.prefix):<18} {record.host_count:>6}"
            f" {record.density:>9.6f} {float(record.coverage_share):>9.4f}"
        )

    print("\ncoverage target sweep (strict cut, so phi=1 keeps every responsive prefix):")
    print(f"  {'phi':>5} {'prefixes kept':>14} {'host coverage':>14} {'address cost':>13}")
    for phi in PHI_SWEEP:
        swept, _ = plan_selection(partition, seed, phi)
        print(
            f"  {phi:>5} {swept.k:>14} {float(swept.cum_host_coverage):>14.4f}"
            f" {float(swept.cum_address_coverage):>13.4f}"
        )

    OUTPUT_DIR.mkdir(exist_ok=True)
    targets_path = OUTPUT_DIR / "targets.txt"
    stats_path = OUTPUT_DIR / "ranking.csv"
    with open(targets_path, "w", newline="") as fh:
        write_target_list(selection, fh)
    with open(stats_path, "w", newline="") as fh:
        write_statistics_csv(selection, fh)
    print(f"\nwrote {targets_path} ({selection.k} prefixes at phi=0.9) and {stats_path}")
    first = selection.selected_prefixes[0]
    print(f"a scanner would start at {format_address(first.network)}/{first.length}")


if __name__ == "__main__":
    main()
