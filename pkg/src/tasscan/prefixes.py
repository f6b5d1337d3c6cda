"""IPv4 prefix arithmetic and disjoint routed partitions.

Announced BGP tables routinely contain nested prefixes: a covering
announcement alongside more-specific ones inside it. Scan planning needs a
proper partition of the announced space, so covering prefixes are decomposed
around the more-specifics they contain into the smallest set of CIDR blocks
that covers the remainder.
"""

from __future__ import annotations

import enum
import hashlib
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import PartitionError, PrefixError

ADDRESS_BITS = 32
ADDRESS_SPACE = 1 << ADDRESS_BITS


def parse_address(text: str) -> int:
    """Parse a dotted-quad IPv4 address into its 32-bit integer value."""
    parts = text.split(".")
    if len(parts) != 4:
        raise PrefixError(f"malformed IPv4 address {text!r}")
    value = 0
    for part in parts:
        if not (part.isascii() and part.isdigit() and len(part) <= 3):
            raise PrefixError(f"malformed IPv4 address {text!r}")
        octet = int(part)
        if octet > 255:
            raise PrefixError(f"octet out of range in {text!r}")
        value = (value << 8) | octet
    return value


def format_address(value: int) -> str:
    """Render a 32-bit address value as a dotted quad."""
    return f"{value >> 24 & 255}.{value >> 16 & 255}.{value >> 8 & 255}.{value & 255}"


@dataclass(frozen=True, order=True, slots=True)
class Ipv4Prefix:
    """A canonical CIDR block: network value plus prefix length.

    Instances order by (network, length), so sorting a list of prefixes
    places nested blocks directly after the block that covers them.
    """

    network: int
    length: int

    def __post_init__(self) -> None:
        if not 0 <= self.length <= ADDRESS_BITS:
            raise PrefixError(f"prefix length {self.length} out of range")
        if not 0 <= self.network < ADDRESS_SPACE:
            raise PrefixError(f"network value {self.network:#x} out of range")
        if self.network & (self.size - 1):
            raise PrefixError(
                f"{format_address(self.network)}/{self.length} has host bits set"
            )

    @property
    def size(self) -> int:
        """Number of addresses covered: 2**(32 - length)."""
        return 1 << (ADDRESS_BITS - self.length)

    @property
    def last(self) -> int:
        """Highest address value inside the block."""
        return self.network + self.size - 1

    def contains(self, other: Ipv4Prefix) -> bool:
        """True iff this block covers ``other``. Reflexive."""
        if self.length > other.length:
            return False
        shift = ADDRESS_BITS - self.length
        return (other.network >> shift) == (self.network >> shift)

    def contains_address(self, address: int) -> bool:
        return self.network <= address <= self.last

    def __str__(self) -> str:
        return f"{format_address(self.network)}/{self.length}"


def _prefix_key(prefix: Ipv4Prefix) -> tuple[int, int]:
    return (prefix.network, prefix.length)


def parse_prefix(text: str) -> Ipv4Prefix:
    """Parse ``a.b.c.d/len``.

    Host bits set below the prefix length are an error, not masked away:
    a non-canonical block in a routing feed is a data problem the caller
    must see, not silently repair.
    """
    body = text.strip()
    net_text, sep, len_text = body.partition("/")
    if not sep or not (len_text.isascii() and len_text.isdigit()):
        raise PrefixError(f"malformed prefix {text!r}")
    length = int(len_text)
    if length > ADDRESS_BITS:
        raise PrefixError(f"prefix length /{length} out of range in {text!r}")
    network = parse_address(net_text)
    if length < ADDRESS_BITS and network & ((1 << (ADDRESS_BITS - length)) - 1):
        raise PrefixError(f"host bits set below /{length} in {text!r}")
    return Ipv4Prefix(network, length)


def deaggregate(
    l_prefix: Ipv4Prefix, m_prefixes: Iterable[Ipv4Prefix]
) -> list[Ipv4Prefix]:
    """Decompose ``l_prefix`` around the more-specific blocks it contains.

    Returns a pairwise-disjoint list, sorted by network value, whose union
    is exactly ``l_prefix``: the given m-prefixes plus the minimal set of
    CIDR blocks covering the remaining space. An m-prefix that itself
    contains other listed m-prefixes is decomposed the same way, so only
    innermost blocks survive verbatim when the input nests.

    Duplicate m-prefixes and m-prefixes not strictly inside ``l_prefix``
    are errors.
    """
    ms = sorted(m_prefixes, key=_prefix_key)
    for prev, cur in zip(ms, ms[1:]):
        if prev == cur:
            raise PrefixError(f"duplicate m-prefix {cur}")
    for m in ms:
        if m == l_prefix or not l_prefix.contains(m):
            raise PrefixError(f"{m} is not strictly contained in {l_prefix}")
    out: list[Ipv4Prefix] = []
    groups = _group_by_maximal(ms)
    starts = [head.network for head, _ in groups]
    _split_around(l_prefix.network, l_prefix.length, groups, starts, 0, len(groups), out)
    return out


def _group_by_maximal(
    ms: list[Ipv4Prefix],
) -> list[tuple[Ipv4Prefix, list[Ipv4Prefix]]]:
    """Group sorted prefixes into (maximal prefix, strict descendants) runs.

    Sorting by (network, length) puts every descendant directly after its
    covering maximal prefix, so one linear pass suffices.
    """
    groups: list[tuple[Ipv4Prefix, list[Ipv4Prefix]]] = []
    for m in ms:
        if groups and groups[-1][0].contains(m):
            groups[-1][1].append(m)
        else:
            groups.append((m, []))
    return groups


def _split_around(
    network: int,
    length: int,
    groups: list[tuple[Ipv4Prefix, list[Ipv4Prefix]]],
    starts: list[int],
    lo: int,
    hi: int,
    out: list[Ipv4Prefix],
) -> None:
    """Binary descent emitting the cover of (network, length) around groups[lo:hi]."""
    if lo == hi:
        out.append(Ipv4Prefix(network, length))
        return
    head, nested = groups[lo]
    if head.network == network and head.length == length:
        # The block is itself a listed m-prefix; hi == lo + 1 here because
        # anything else inside the block would have grouped under it.
        if nested:
            out.extend(deaggregate(head, nested))
        else:
            out.append(head)
        return
    half_length = length + 1
    mid = network + (1 << (ADDRESS_BITS - half_length))
    # m-prefixes are strictly smaller than the block, so none straddles mid
    split = bisect_left(starts, mid, lo, hi)
    _split_around(network, half_length, groups, starts, lo, split, out)
    _split_around(mid, half_length, groups, starts, split, hi, out)


class AnnouncedPrefixTable:
    """Deduplicated announced prefixes with their origin-AS labels.

    Entries may nest arbitrarily; duplicate prefixes merge by unioning
    origins. Origin labels are opaque strings and play no role in
    partitioning.
    """

    def __init__(self) -> None:
        self._entries: dict[Ipv4Prefix, frozenset[str]] = {}

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[tuple[Ipv4Prefix, Iterable[str]]]
    ) -> AnnouncedPrefixTable:
        table = cls()
        for prefix, origins in pairs:
            table.add(prefix, origins)
        return table

    def add(self, prefix: Ipv4Prefix, origins: Iterable[str]) -> bool:
        """Insert or merge one announcement. False when the prefix was already present."""
        existing = self._entries.get(prefix)
        if existing is None:
            self._entries[prefix] = frozenset(origins)
            return True
        self._entries[prefix] = existing | frozenset(origins)
        return False

    def origins(self, prefix: Ipv4Prefix) -> frozenset[str]:
        return self._entries[prefix]

    def prefixes(self) -> list[Ipv4Prefix]:
        """All announced prefixes sorted by (network, length)."""
        return sorted(self._entries, key=_prefix_key)

    def entries(self) -> Iterator[tuple[Ipv4Prefix, frozenset[str]]]:
        for prefix in self.prefixes():
            yield prefix, self._entries[prefix]

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, prefix: Ipv4Prefix) -> bool:
        return prefix in self._entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AnnouncedPrefixTable):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self) -> str:
        return f"AnnouncedPrefixTable({len(self._entries)} prefixes)"


class PartitionMode(enum.Enum):
    """How announced prefixes become a disjoint partition."""

    LESS_SPECIFIC = "less_specific"
    MORE_SPECIFIC = "more_specific"

    @classmethod
    def from_label(cls, label: str) -> PartitionMode:
        key = label.strip().lower()
        if key in ("less", "less_specific"):
            return cls.LESS_SPECIFIC
        if key in ("more", "more_specific"):
            return cls.MORE_SPECIFIC
        raise PartitionError(f"unknown partition mode {label!r}")


class RoutedPartition:
    """A pairwise-disjoint prefix set covering exactly the announced space.

    Immutable once built; lookups are read-only and safe to share across
    threads. Address matching is vectorized: with disjoint sorted prefixes,
    longest-prefix match reduces to one binary search per address.
    """

    __slots__ = ("mode", "prefixes", "total_addresses", "_starts", "_lasts", "_lengths")

    def __init__(self, mode: PartitionMode, prefixes: Iterable[Ipv4Prefix]) -> None:
        ordered = sorted(prefixes, key=_prefix_key)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.network <= prev.last:
                raise PartitionError(f"partition prefixes {prev} and {cur} overlap")
        self.mode = mode
        self.prefixes: tuple[Ipv4Prefix, ...] = tuple(ordered)
        n = len(ordered)
        self._starts = np.fromiter((p.network for p in ordered), dtype=np.int64, count=n)
        self._lengths = np.fromiter((p.length for p in ordered), dtype=np.int64, count=n)
        self._lasts = self._starts + (np.int64(1) << (ADDRESS_BITS - self._lengths)) - 1
        for arr in (self._starts, self._lengths, self._lasts):
            arr.setflags(write=False)
        self.total_addresses = int((self._lasts - self._starts + 1).sum()) if n else 0

    @property
    def lengths(self) -> np.ndarray:
        """Prefix lengths aligned with ``prefixes``, as a read-only array."""
        return self._lengths

    @property
    def fingerprint(self) -> str:
        """Digest identifying this exact prefix set and mode."""
        digest = hashlib.sha256()
        digest.update(self.mode.value.encode("ascii"))
        digest.update(self._starts.tobytes())
        digest.update(self._lengths.tobytes())
        return digest.hexdigest()

    def longest_match(self, address: int) -> Ipv4Prefix | None:
        """The unique partition prefix covering ``address``, or None if unrouted."""
        if not 0 <= address < ADDRESS_SPACE:
            raise PrefixError(f"address value {address:#x} out of range")
        i = int(np.searchsorted(self._starts, address, side="right")) - 1
        if i >= 0 and address <= int(self._lasts[i]):
            return self.prefixes[i]
        return None

    def match_indices(self, addresses: np.ndarray) -> np.ndarray:
        """Index into ``prefixes`` for each address, -1 where unrouted."""
        addresses = np.asarray(addresses, dtype=np.int64)
        if not self.prefixes:
            return np.full(addresses.shape, -1, dtype=np.int64)
        idx = np.searchsorted(self._starts, addresses, side="right") - 1
        clipped = np.maximum(idx, 0)
        hit = (idx >= 0) & (addresses <= self._lasts[clipped])
        return np.where(hit, idx, np.int64(-1))

    def __len__(self) -> int:
        return len(self.prefixes)

    def __iter__(self) -> Iterator[Ipv4Prefix]:
        return iter(self.prefixes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RoutedPartition):
            return NotImplemented
        return self.mode is other.mode and self.prefixes == other.prefixes

    def __repr__(self) -> str:
        return f"RoutedPartition({self.mode.value}, {len(self.prefixes)} prefixes)"


def build_partition(table: AnnouncedPrefixTable, mode: PartitionMode) -> RoutedPartition:
    """Derive the disjoint scan partition from an announced prefix table.

    LESS_SPECIFIC keeps only maximal announced prefixes (those not covered
    by another announcement). MORE_SPECIFIC additionally decomposes every
    maximal prefix around the announced more-specifics it contains, so the
    partition preserves each announcement's boundaries. Both cover exactly
    the union of announced space.
    """
    announced = table.prefixes()
    kept: list[Ipv4Prefix] = []
    i, n = 0, len(announced)
    while i < n:
        top = announced[i]
        j = i + 1
        while j < n and announced[j].network <= top.last:
            j += 1
        if mode is PartitionMode.LESS_SPECIFIC or j == i + 1:
            kept.append(top)
        else:
            kept.extend(deaggregate(top, announced[i + 1 : j]))
        i = j
    return RoutedPartition(mode, kept)


def maximal_prefix_count(table: AnnouncedPrefixTable) -> int:
    """Number of announced prefixes not covered by another announcement."""
    announced = table.prefixes()
    count = 0
    i, n = 0, len(announced)
    while i < n:
        count += 1
        top = announced[i]
        i += 1
        while i < n and announced[i].network <= top.last:
            i += 1
    return count
