"""Acceptance gate: end-to-end checks with frozen fixtures and hard budgets.

Every test prints one "[acceptance] <n> <name>: PASS|FAIL" line on the live
terminal, bypassing capture, so a full run doubles as a sign-off checklist.
Time and memory budgets are measured with wall clocks and resident set
sizes, never mocked. Randomized checks use fixed seeds; the independent
references live in tests/oracles.py and share no code with the library.
"""

from __future__ import annotations

import contextlib
import itertools
import json
import random
import time
from fractions import Fraction

import numpy as np
import psutil

from tasscan import (
    AnnouncedPrefixTable,
    Ipv4Prefix,
    PartitionMode,
    ScanSnapshot,
    build_partition,
    compare_series,
    compute_densities,
    deaggregate,
    dump_pfx2as,
    format_address,
    parse_prefix,
    plan_selection,
    rank_by_density,
    select_prefixes,
    simulate_hitlist,
    simulate_tass,
    write_statistics_csv,
    write_target_list,
)
from tasscan.cli import main

from oracles import hitlist_covered_oracle, selection_oracle, tass_covered_oracle
from synth import make_snapshot, random_addresses, random_table

PHI_GRID = ("0.5", "0.7", "0.95", "0.99", "1")


@contextlib.contextmanager
def verdict(capsys, label: str):
    ok = False
    try:
        yield
        ok = True
    finally:
        with capsys.disabled():
            print(f"[acceptance] {label}: {'PASS' if ok else 'FAIL'}")


def _random_ranking(rng: random.Random, slots: int = 60) -> list[tuple[Ipv4Prefix, int]]:
    """Disjoint prefixes with positive host counts, one per /18 slot.

    Roughly a third of the counts are pinned to density 1/128 so that
    density ties (and full ties at equal lengths) actually occur.
    """
    items = []
    for i in range(rng.randint(1, slots)):
        length = rng.randint(18, 24)
        prefix = Ipv4Prefix((10 << 24) + i * (1 << 14), length)
        if rng.random() < 0.3:
            count = max(1, prefix.size >> 7)
        else:
            count = rng.randint(1, prefix.size)
        items.append((prefix, count))
    return items


def test_1_nested_announcement_decomposition(capsys):
    """A /12 announced inside a /8 splits the /8 into five disjoint blocks."""
    with verdict(capsys, "1 nested announcement decomposition"):
        started = time.perf_counter()
        outer = parse_prefix("100.0.0.0/8")
        inner = parse_prefix("100.0.0.0/12")
        expected = [
            parse_prefix(text)
            for text in (
                "100.0.0.0/12",
                "100.16.0.0/12",
                "100.32.0.0/11",
                "100.64.0.0/10",
                "100.128.0.0/9",
            )
        ]
        got = deaggregate(outer, [inner])
        assert got == expected
        assert inner in got  # the nested announcement survives verbatim
        table = AnnouncedPrefixTable.from_pairs([(outer, ["64512"]), (inner, ["64513"])])
        partition = build_partition(table, PartitionMode.MORE_SPECIFIC)
        assert list(partition.prefixes) == expected
        coarse = build_partition(table, PartitionMode.LESS_SPECIFIC)
        assert list(coarse.prefixes) == [outer]
        assert time.perf_counter() - started < 1.0


def test_2_partition_exact_cover(capsys):
    """500 random feeds: both modes cover every announced address exactly once.

    The reference is brute force: per-address coverage counters over the
    whole 10.0.0.0/16 region, plus an exhaustive longest-match sweep.
    """
    with verdict(capsys, "2 partition exact cover on 500 random feeds"):
        started = time.perf_counter()
        region = parse_prefix("10.0.0.0/16")
        base, span = region.network, region.size
        every_address = np.arange(base, base + span, dtype=np.int64)
        rng = random.Random(20160202)
        for trial in range(500):
            draws = rng.choice((3, 12, 50, 200, 1000))
            max_length = rng.choice((20, 24, 28, 32))
            table = random_table(rng, region, draws, max_length=max_length)
            announced = np.zeros(span, dtype=bool)
            for prefix in table.prefixes():
                offset = prefix.network - base
                announced[offset : offset + prefix.size] = True
            for mode in PartitionMode:
                partition = build_partition(table, mode)
                cover = np.zeros(span, dtype=np.int32)
                for prefix in partition.prefixes:
                    offset = prefix.network - base
                    cover[offset : offset + prefix.size] += 1
                assert (cover[announced] == 1).all(), f"trial {trial} {mode}: gap or overlap"
                assert not cover[~announced].any(), f"trial {trial} {mode}: spill"
                matched = partition.match_indices(every_address) >= 0
                assert (matched == announced).all(), f"trial {trial} {mode}: match sweep"
        assert time.perf_counter() - started < 60.0


def test_3_selection_cut_matches_reference(capsys):
    """1000 random rankings, five targets each: k agrees with the naive
    Fraction-only reference and is minimal for the strict cut."""
    with verdict(capsys, "3 selection cut matches rational reference"):
        started = time.perf_counter()
        rng = random.Random(20160303)
        for _ in range(1000):
            items = _random_ranking(rng)
            table = AnnouncedPrefixTable.from_pairs((p, ["64512"]) for p, _ in items)
            partition = build_partition(table, PartitionMode.LESS_SPECIFIC)
            assert set(partition.prefixes) == {p for p, _ in items}
            total = sum(count for _, count in items)
            ranked = rank_by_density(compute_densities(dict(items), total))
            for phi_text in PHI_GRID:
                phi = Fraction(phi_text)
                order, expected_k = selection_oracle(items, phi)
                selection = select_prefixes(ranked, phi_text, partition)
                assert [r.prefix for r in ranked] == [p for p, _ in order]
                assert selection.k == expected_k
                shares = list(
                    itertools.accumulate(Fraction(c, total) for _, c in order)
                )
                assert selection.cum_host_coverage == shares[selection.k - 1]
                if phi == 1:
                    assert selection.k == len(order)
                else:
                    assert shares[selection.k - 1] > phi
                    if selection.k > 1:
                        assert shares[selection.k - 2] <= phi
        assert time.perf_counter() - started < 30.0


def test_4_selection_never_dominated(capsys):
    """200 instances, every subset enumerated: no prefix set reaches more
    hosts than the density cut without probing more address space."""
    with verdict(capsys, "4 no subset beats the cut at equal address cost"):
        started = time.perf_counter()
        rng = random.Random(20160404)
        for _ in range(200):
            items = _random_ranking(rng, slots=15)
            total = sum(count for _, count in items)
            ranked = rank_by_density(compute_densities(dict(items), total))
            sizes = np.array([r.prefix.size for r in ranked], dtype=np.int64)
            hosts = np.array([r.host_count for r in ranked], dtype=np.int64)
            n = len(ranked)
            lattice = np.arange(1 << n)
            subset_cost = np.zeros(1 << n, dtype=np.int64)
            subset_hosts = np.zeros(1 << n, dtype=np.int64)
            for bit in range(n):
                member = (lattice >> bit) & 1 == 1
                subset_cost[member] += sizes[bit]
                subset_hosts[member] += hosts[bit]
            order = np.argsort(subset_cost, kind="stable")
            cost_sorted = subset_cost[order]
            best_at_or_below = np.maximum.accumulate(subset_hosts[order])
            greedy_cost = np.cumsum(sizes)
            greedy_hosts = np.cumsum(hosts)
            for k in range(1, n + 1):
                at_most = np.searchsorted(cost_sorted, greedy_cost[k - 1], "right") - 1
                assert best_at_or_below[at_most] == greedy_hosts[k - 1]
                below = np.searchsorted(cost_sorted, greedy_cost[k - 1], "left") - 1
                assert best_at_or_below[below] < greedy_hosts[k - 1]
        assert time.perf_counter() - started < 60.0


def test_5_hitrate_replay_matches_oracles(capsys):
    """Replayed hitrates equal per-address set arithmetic, exactly."""
    with verdict(capsys, "5 hitrate replay matches per-address oracles"):
        started = time.perf_counter()
        rng = random.Random(20160505)
        region = parse_prefix("10.0.0.0/12")
        table = random_table(rng, region, 120, max_length=26)
        announced = tuple(table.prefixes())
        partition = build_partition(table, PartitionMode.MORE_SPECIFIC)
        seed_addrs = random_addresses(rng, announced, 25000)
        seed = make_snapshot(
            seed_addrs, protocol="telnet", captured_at="2016-01-01", source_id="cycle-0"
        )
        selection, _ = plan_selection(partition, seed, "0.9")
        assert 0 < selection.k <= len(selection.ranked)

        later = []
        pool = sorted(seed_addrs)
        for i in range(1, 7):
            kept = set(rng.sample(pool, int(len(pool) * (1 - 0.08 * i))))
            fresh = random_addresses(rng, announced, 2000 * i)
            dark = {(11 << 24) + rng.randrange(1 << 20) for _ in range(500)}
            later.append(
                make_snapshot(
                    kept | fresh | dark,
                    protocol="telnet",
                    captured_at=f"2016-0{i + 1}-01",
                    source_id=f"cycle-{i}",
                )
            )

        tass_series = simulate_tass(selection, partition, later)
        hitlist_series = simulate_hitlist(seed, later)
        selected = set(selection.selected_prefixes)
        for point, snapshot in zip(tass_series.points, later):
            expected = tass_covered_oracle(selected, snapshot.addresses.tolist())
            assert point.covered_hosts == expected
            assert point.ground_truth_hosts == snapshot.address_count
            assert point.hitrate == Fraction(expected, snapshot.address_count)
        for point, snapshot in zip(hitlist_series.points, later):
            expected = hitlist_covered_oracle(seed_addrs, snapshot.addresses.tolist())
            assert point.covered_hosts == expected
            assert point.hitrate == Fraction(expected, snapshot.address_count)

        # Churn inside selected prefixes: the plan keeps finding every host
        # while the literal hitlist decays by exactly the churned share.
        blocks = [parse_prefix(f"10.99.{i}.0/24") for i in range(8)]
        churn_table = AnnouncedPrefixTable.from_pairs((p, ["64500"]) for p in blocks)
        churn_partition = build_partition(churn_table, PartitionMode.LESS_SPECIFIC)
        churn_seed = make_snapshot(
            {p.network + j for p in blocks for j in range(60)},
            protocol="ntp",
            captured_at="2016-01-01",
            source_id="cycle-0",
        )
        churn_selection, unrouted = plan_selection(churn_partition, churn_seed, "1")
        assert unrouted == 0 and churn_selection.k == len(blocks)
        churned_snapshots = []
        for t in range(1, 6):
            addrs = set()
            for p in blocks:
                addrs.update(p.network + j for j in range(60 - 6 * t))
                addrs.update(p.network + 128 + j for j in range(6 * t))
            churned_snapshots.append(
                make_snapshot(
                    addrs, protocol="ntp", captured_at=f"2016-0{t + 1}-01", source_id=f"cycle-{t}"
                )
            )
        plan_series = simulate_tass(churn_selection, churn_partition, churned_snapshots)
        list_series = simulate_hitlist(churn_seed, churned_snapshots)
        for t, (plan_point, list_point) in enumerate(
            zip(plan_series.points, list_series.points), 1
        ):
            assert plan_point.hitrate == Fraction(1)
            assert list_point.hitrate == Fraction(10 - t, 10)
        for t, delta in enumerate(compare_series(plan_series, list_series), 1):
            assert delta.delta == Fraction(t, 10)
        assert time.perf_counter() - started < 30.0


def test_6_finer_mode_never_costs_more_addresses(capsys):
    """At full coverage the deaggregated partition probes a subset of the
    address space the coarse partition probes, 100 random fixtures."""
    with verdict(capsys, "6 finer partition never raises address cost"):
        started = time.perf_counter()
        rng = random.Random(20160606)
        region = parse_prefix("10.0.0.0/16")
        for _ in range(100):
            table = random_table(rng, region, rng.randint(5, 200), max_length=28)
            addrs = random_addresses(rng, tuple(table.prefixes()), 1500)
            seed = make_snapshot(addrs, captured_at="2016-01-01", source_id="cycle-0")
            finer = build_partition(table, PartitionMode.MORE_SPECIFIC)
            coarser = build_partition(table, PartitionMode.LESS_SPECIFIC)
            assert finer.total_addresses == coarser.total_addresses
            fine_sel, fine_unrouted = plan_selection(finer, seed, "1")
            coarse_sel, coarse_unrouted = plan_selection(coarser, seed, "1")
            assert fine_unrouted == coarse_unrouted == 0
            assert fine_sel.cum_host_coverage == coarse_sel.cum_host_coverage == 1
            assert fine_sel.cum_address_coverage <= coarse_sel.cum_address_coverage
            coarse_selected = coarse_sel.selected_prefixes
            for prefix in fine_sel.selected_prefixes:
                assert any(c.contains(prefix) for c in coarse_selected)
        assert time.perf_counter() - started < 30.0


def test_7_scale_within_budget(capsys, tmp_path):
    """100k announced prefixes, a million-address seed: partition, rank,
    cut, and emit inside 30 seconds and 2 GiB resident."""
    with verdict(capsys, "7 100k prefixes / 1M addresses within budget"):
        rng = np.random.default_rng(20160707)
        lengths = rng.integers(8, 25, size=200000)
        networks = rng.integers(0, 1 << 32, size=200000, dtype=np.int64)
        canonical = (networks >> (32 - lengths)) << (32 - lengths)
        pairs = sorted({(int(n), int(l)) for n, l in zip(canonical, lengths)})
        assert len(pairs) >= 100000
        prefixes = [Ipv4Prefix(network, length) for network, length in pairs[:100000]]
        table = AnnouncedPrefixTable.from_pairs((p, ["64512"]) for p in prefixes)
        starts = np.array([p.network for p in prefixes], dtype=np.int64)
        sizes = np.array([p.size for p in prefixes], dtype=np.int64)
        choice = rng.integers(0, len(prefixes), 700000)
        inside = starts[choice] + rng.integers(0, 1 << 32, 700000, dtype=np.int64) % sizes[choice]
        uniform = rng.integers(0, 1 << 32, size=700000, dtype=np.int64)
        addresses = np.unique(np.concatenate([inside, uniform]))
        assert addresses.size >= 1000000
        snapshot = ScanSnapshot("scan", "2016-01-01", addresses[:1000000], "cycle-0")

        started = time.perf_counter()
        partition = build_partition(table, PartitionMode.MORE_SPECIFIC)
        selection, _ = plan_selection(partition, snapshot, "0.95")
        with open(tmp_path / "targets.txt", "w", newline="") as fh:
            write_target_list(selection, fh)
        with open(tmp_path / "stats.csv", "w", newline="") as fh:
            write_statistics_csv(selection, fh)
        elapsed = time.perf_counter() - started

        assert selection.k > 0
        assert len(partition) >= len(table)
        assert elapsed < 30.0
        assert psutil.Process().memory_info().rss < 2 * 2**30


def test_8_repeat_runs_byte_identical(capsys, tmp_path):
    """The same inputs give byte-identical target lists, statistics, and
    manifest digests, run to run."""
    with verdict(capsys, "8 repeat runs byte-identical"):
        rng = random.Random(20160808)
        region = parse_prefix("10.0.0.0/12")
        table = random_table(rng, region, 400, max_length=26)
        feed = tmp_path / "feed.pfx2as"
        with open(feed, "w", newline="") as fh:
            dump_pfx2as(table, fh)
        addrs = random_addresses(rng, tuple(table.prefixes()), 5000)
        seed = tmp_path / "seed.txt"
        seed.write_text(
            "# protocol: https\n# captured-at: 2016-01-01\n# source: cycle-0\n"
            + "\n".join(format_address(a) for a in sorted(addrs))
            + "\n"
        )
        partition_file = tmp_path / "partition.txt"
        code = main(
            ["partition", "--pfx2as", str(feed), "--mode", "more", "--out", str(partition_file)]
        )
        assert code == 0

        runs = []
        for name in ("one", "two"):
            outdir = tmp_path / name
            outdir.mkdir()
            targets = outdir / "targets.txt"
            stats = outdir / "stats.csv"
            code = main(
                [
                    "select",
                    "--partition", str(partition_file),
                    "--snapshot", str(seed),
                    "--phi", "0.9",
                    "--targets", str(targets),
                    "--stats", str(stats),
                ]
            )
            assert code == 0
            manifest = json.loads((outdir / "targets.txt.manifest.json").read_text())
            runs.append((targets.read_bytes(), stats.read_bytes(), manifest))

        (targets_a, stats_a, manifest_a), (targets_b, stats_b, manifest_b) = runs
        assert targets_a == targets_b
        assert stats_a == stats_b
        assert manifest_a["parameters"] == manifest_b["parameters"]
        assert manifest_a["inputs"] == manifest_b["inputs"]

        def output_digests(manifest: dict) -> dict[str, str]:
            return {name: stamp["sha256"] for name, stamp in manifest["outputs"].items()}

        assert output_digests(manifest_a) == output_digests(manifest_b)
        assert manifest_a["created_at"] <= manifest_b["created_at"]
