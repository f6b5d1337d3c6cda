from __future__ import annotations

import pytest

from tasscan import (
    AnnouncedPrefixTable,
    Ipv4Prefix,
    PartitionMode,
    RoutedPartition,
    build_partition,
    parse_prefix,
)

# A covering /8 announced together with one /12 inside it. Decomposing the
# /8 around the /12 must yield the /12 plus the four smallest blocks that
# cover the rest of the /8. Expected values frozen by hand from the block
# arithmetic: 100.0/12 leaves 100.16/12, then doubling blocks up to the /9.
COVERING_PAIR = ("100.0.0.0/8", "100.0.0.0/12")
COVERING_PAIR_DECOMPOSED = (
    "100.0.0.0/12",
    "100.16.0.0/12",
    "100.32.0.0/11",
    "100.64.0.0/10",
    "100.128.0.0/9",
)


@pytest.fixture
def covering_pair_table() -> AnnouncedPrefixTable:
    return AnnouncedPrefixTable.from_pairs(
        (parse_prefix(text), ["64512"]) for text in COVERING_PAIR
    )


@pytest.fixture
def covering_pair_partition(covering_pair_table) -> RoutedPartition:
    return build_partition(covering_pair_table, PartitionMode.MORE_SPECIFIC)


@pytest.fixture
def expected_decomposition() -> set[Ipv4Prefix]:
    return {parse_prefix(text) for text in COVERING_PAIR_DECOMPOSED}
