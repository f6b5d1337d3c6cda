"""Walk through prefix partitioning on a hand-sized announcement table.

A routing table may announce a block inside another block, so announced
prefixes overlap and cannot be scanned as-is without double counting. The
library offers two ways to flatten them into disjoint pieces:

  less_specific  keep only the outermost announced prefixes
  more_specific  split each outermost prefix around its nested announcements

This script builds both partitions for the same six announcements and shows
where they differ, then resolves a few addresses against each.
"""

from __future__ import annotations

from tasscan import (
    AnnouncedPrefixTable,
    PartitionMode,
    build_partition,
    parse_address,
    parse_prefix,
)

ANNOUNCEMENTS = [
    ("100.0.0.0/8", "64512"),
    ("100.0.0.0/12", "64513"),   # nested inside the /8
    ("100.0.0.0/14", "64514"),   # nested inside the /12 as well
    ("198.18.0.0/15", "64515"),
    ("198.18.4.0/22", "64516"),  # nested inside the /15
    ("203.0.113.0/24", "64517"),
]

PROBES = ["100.0.1.1", "100.32.0.7", "198.18.5.9", "8.8.8.8"]


def main() -> None:
    table = AnnouncedPrefixTable.from_pairs(
        (parse_prefix(text), [origin]) for text, origin in ANNOUNCEMENTS
    )
    print("announced prefixes:")
    for prefix, origins in table.entries():
        print(f"  {str(prefix):<18} origins {', '.join(sorted(origins))}")

    partitions = {mode: build_partition(table, mode) for mode in PartitionMode}
    for mode, partition in partitions.items():
        share = partition.total_addresses / 2**32
        print(f"\n{mode.value} partition ({len(partition)} prefixes, {share:.2%} of the space):")
        for prefix in partition.prefixes:
            marker = "  <- announced verbatim" if prefix in table else ""
            print(f"  {prefix}{marker}")

    # Both partitions cover exactly the announced space, so every probe
    # resolves to at most one prefix per mode.
    print("\nlongest-match probes:")
    for text in PROBES:
        address = parse_address(text)
        hits = {
            mode.value: partitions[mode].longest_match(address)
            for mode in PartitionMode
        }
        rendered = "   ".join(
            f"{label}: {str(hit) if hit else 'unrouted':<18}" for label, hit in hits.items()
        )
        print(f"  {text:<14} {rendered}")

    print("\npartition fingerprints (stable across runs):")
    for mode, partition in partitions.items():
        print(f"  {mode.value:<14} {partition.fingerprint[:16]}...")


if __name__ == "__main__":
    main()
