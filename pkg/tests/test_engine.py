"""Translation pipeline accounting: paths, cycles, phases, invariants.

The cycle oracle is the additive model computed by hand: every access pays
the L1 probe, an L1 miss adds the L2 lookup charge, and a walk adds the
memory-read charge once per read the walk performed. A cold walk therefore
costs 1 + 3 + 3*30 = 94 cycles at the default latencies.
"""

import random
from dataclasses import replace

import pytest

from napotsim.engine import (
    L1_HIT,
    L2_HIT,
    MEASUREMENT,
    WALK,
    WARMUP,
    LatencyModel,
    Simulation,
)
from napotsim.errors import CanonicalityError, UnmappedAccessError
from napotsim.pagetable import RegionSpec
from napotsim.sv39 import PageSize
from napotsim.workloads import AccessTrace

BASE_VA = 0x4000_0000
BASE_PPN = 0x10_0000
KB4 = 4 << 10
KB64 = 64 << 10


def sim_4k(length=1 << 20, **kwargs):
    return Simulation([RegionSpec(BASE_VA, length, PageSize.PAGE_4K, BASE_PPN)], **kwargs)


def sim_64k(length=1 << 20, **kwargs):
    return Simulation([RegionSpec(BASE_VA, length, PageSize.PAGE_64K, BASE_PPN)], **kwargs)


def expected_cycles(stats, latency=LatencyModel()):
    return (
        stats.accesses * latency.l1_hit_cycles
        + stats.l1_misses * latency.l2_lookup_cycles
        + stats.walk_memory_reads * latency.mem_read_cycles
    )


def test_cold_walk_costs_94_cycles():
    sim = sim_4k()
    out = sim.translate(BASE_VA)
    assert out.path == WALK
    assert out.cycles_charged == 94
    assert out.pa == BASE_PPN << 12


def test_l1_hit_costs_1_cycle():
    sim = sim_4k()
    sim.translate(BASE_VA)
    out = sim.translate(BASE_VA + 8)
    assert out.path == L1_HIT
    assert out.cycles_charged == 1
    assert out.pa == (BASE_PPN << 12) | 8


def test_l2_hit_costs_4_cycles():
    # second page of a warm NAPOT group: misses L1, hits the group entry
    sim = sim_64k()
    sim.translate(BASE_VA)
    out = sim.translate(BASE_VA + KB4)
    assert out.path == L2_HIT
    assert out.cycles_charged == 4
    assert out.pa == (BASE_PPN + 1) << 12


def test_napot_walk_reaches_right_frame():
    sim = sim_64k()
    out = sim.translate(BASE_VA + 5 * KB4 + 0x123)
    assert out.path == WALK
    assert out.pa == ((BASE_PPN + 5) << 12) | 0x123


def test_custom_latency_model():
    latency = LatencyModel(l1_hit_cycles=2, l2_lookup_cycles=5, mem_read_cycles=7)
    sim = sim_4k(latency=latency)
    assert sim.translate(BASE_VA).cycles_charged == 2 + 5 + 3 * 7
    assert sim.translate(BASE_VA).cycles_charged == 2


def test_latency_model_rejects_negative():
    with pytest.raises(ValueError):
        LatencyModel(l1_hit_cycles=-1)


def test_unmapped_access_raises():
    sim = sim_4k(length=KB4)
    with pytest.raises(UnmappedAccessError):
        sim.translate(BASE_VA + KB4)
    with pytest.raises(UnmappedAccessError):
        sim.run_trace(AccessTrace([], [BASE_VA + KB4]))


def test_non_canonical_access_raises():
    sim = sim_4k()
    with pytest.raises(CanonicalityError):
        sim.translate(1 << 40)
    with pytest.raises(CanonicalityError):
        sim.run_trace(AccessTrace([], [1 << 40]))


def test_empty_trace_runs():
    sim = sim_4k()
    stats = sim.run_trace(AccessTrace([], []))
    assert stats.warmup.accesses == 0
    assert stats.measurement.accesses == 0
    assert stats.measurement.total_cycles == 0


def test_single_page_trace_counts():
    sim = sim_4k()
    stats = sim.run_trace(AccessTrace([], [BASE_VA] * 10))
    m = stats.measurement
    assert m.accesses == 10
    assert m.walks == 1 and m.l2_hits == 0 and m.l1_hits == 9
    assert m.walk_memory_reads == 3
    assert m.total_cycles == 94 + 9


def test_phase_counters_are_separate():
    sim = sim_4k()
    trace = AccessTrace([BASE_VA, BASE_VA + KB4], [BASE_VA] * 5)
    stats = sim.run_trace(trace)
    assert stats.warmup.accesses == 2
    assert stats.warmup.walks == 2
    assert stats.measurement.accesses == 5
    # warm state carried over: the measured page never walks again
    assert stats.measurement.walks == 0
    assert stats.measurement.l1_hits == 5


def test_phase_counters_freeze_after_their_phase():
    sim = sim_4k()
    stats = sim.run_trace(AccessTrace([BASE_VA], [BASE_VA + KB4] * 3))
    frozen = replace(stats.warmup)
    sim.phase = MEASUREMENT
    sim.translate(BASE_VA + 2 * KB4)
    assert stats.warmup == frozen


def test_translate_respects_phase_attribute():
    sim = sim_4k()
    sim.phase = WARMUP
    sim.translate(BASE_VA)
    assert sim.stats.warmup.accesses == 1
    assert sim.stats.measurement.accesses == 0


def test_run_trace_matches_translate_loop():
    rng = random.Random(71)
    pages = 128
    warmup = [BASE_VA + (p << 12) for p in range(pages)]
    measurement = [BASE_VA + (rng.randrange(pages) << 12) for _ in range(5000)]
    for make in (sim_4k, sim_64k):
        fast = make(length=pages << 12, ways=4)
        slow = make(length=pages << 12, ways=4)
        fast.run_trace(AccessTrace(warmup, measurement))
        slow.phase = WARMUP
        for va in warmup:
            slow.translate(va)
        slow.phase = MEASUREMENT
        for va in measurement:
            slow.translate(va)
        assert fast.stats == slow.stats


def test_stats_invariants_on_random_traces():
    rng = random.Random(73)
    for trial in range(10):
        pages = rng.choice((16, 64, 256))
        sim = sim_4k(length=pages << 12, ways=rng.choice((4, 16)))
        warmup = [BASE_VA + (p << 12) for p in range(pages)]
        measurement = [
            BASE_VA + (rng.randrange(pages) << 12) for _ in range(2000)
        ]
        stats = sim.run_trace(AccessTrace(warmup, measurement))
        for phase in (stats.warmup, stats.measurement):
            phase.check()
            assert phase.total_cycles == expected_cycles(phase)
        assert sim.mem.read_count == (
            stats.warmup.walk_memory_reads + stats.measurement.walk_memory_reads
        )


def test_deterministic_across_runs():
    rng = random.Random(79)
    measurement = [BASE_VA + (rng.randrange(512) << 12) for _ in range(4000)]
    trace = AccessTrace([BASE_VA + (p << 12) for p in range(512)], measurement)
    a = sim_4k(length=512 << 12, ways=4, replacement="random", seed=9)
    b = sim_4k(length=512 << 12, ways=4, replacement="random", seed=9)
    assert a.run_trace(trace) == b.run_trace(trace)


def test_walks_per_chunk_are_16x_cheaper_with_napot():
    # one cold linear pass over 256KB: 64 walks with 4KB pages, 4 with 64KB
    pages = 64
    warmup = [BASE_VA + (p << 12) for p in range(pages)]
    a = sim_4k(length=pages << 12)
    b = sim_64k(length=pages << 12)
    a.run_trace(AccessTrace(warmup, []))
    b.run_trace(AccessTrace(warmup, []))
    assert a.stats.warmup.walks == 64
    assert b.stats.warmup.walks == 4
    assert a.stats.warmup.walks == 16 * b.stats.warmup.walks


def test_flush_ptw_between_phases():
    pages = 2
    warmup = [BASE_VA]
    measurement = [BASE_VA + KB4]
    keep = sim_4k(length=pages << 12)
    keep.run_trace(AccessTrace(warmup, measurement))
    assert keep.stats.measurement.walk_memory_reads == 1
    drop = sim_4k(length=pages << 12, flush_ptw_between_phases=True)
    drop.run_trace(AccessTrace(warmup, measurement))
    assert drop.stats.measurement.walk_memory_reads == 3


def test_l1_refill_from_napot_entry_is_4k():
    # after a walk of page 0, page 1 refills L1 from the NAPOT entry;
    # hitting page 1 again is then a plain L1 hit with its own frame
    sim = sim_64k()
    sim.translate(BASE_VA)
    sim.translate(BASE_VA + KB4)
    out = sim.translate(BASE_VA + KB4 + 4)
    assert out.path == L1_HIT
    assert out.pa == ((BASE_PPN + 1) << 12) | 4


def test_l2_flush_forces_walk_but_keeps_counters_consistent():
    sim = sim_4k()
    sim.translate(BASE_VA)
    sim.l1.flush_all()
    sim.l2.flush_all()
    out = sim.translate(BASE_VA)
    assert out.path == WALK
    # the second walk rides the PTW cache: only the leaf read
    assert out.cycles_charged == 1 + 3 + 30
    sim.stats.measurement.check()
