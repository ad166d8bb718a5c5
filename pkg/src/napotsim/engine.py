"""Per-access translation pipeline with cycle and hit/miss accounting.

Every access charges l1_hit_cycles; an L1 miss adds l2_lookup_cycles for
the L2 probe whether it hits or not; an L2 miss walks the tables and adds
mem_read_cycles per memory read the walk performs. Counters are kept per
phase so warm-up accesses never pollute the measured numbers, while TLB
and walk-cache state carries across the phase boundary.
"""

from dataclasses import dataclass, field

from .errors import CanonicalityError, UnmappedAccessError
from .pagetable import PtwCache, build_page_tables, walk
from .sv39 import (
    CANONICAL_HIGH,
    NAPOT_OFFSET_MASK,
    OFFSET_MASK,
    PAGE_SHIFT,
    VPN_MASK,
    napot_translate,
)
from .tlb import L1_ENTRIES, L2_ENTRIES, L1Dtlb, L2Tlb

WARMUP = "warmup"
MEASUREMENT = "measurement"
PHASES = (WARMUP, MEASUREMENT)

L1_HIT = "l1_hit"
L2_HIT = "l2_hit"
WALK = "walk"


@dataclass(frozen=True)
class LatencyModel:
    l1_hit_cycles: int = 1
    l2_lookup_cycles: int = 3
    mem_read_cycles: int = 30

    def __post_init__(self):
        for name in ("l1_hit_cycles", "l2_lookup_cycles", "mem_read_cycles"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class PhaseStats:
    accesses: int = 0
    l1_hits: int = 0
    l1_misses: int = 0
    l2_hits: int = 0
    l2_misses: int = 0
    walks: int = 0
    walk_memory_reads: int = 0
    total_cycles: int = 0

    def check(self):
        """Every access is exactly one of L1 hit, L2 hit, or walk."""
        assert self.l1_hits + self.l1_misses == self.accesses
        assert self.l2_hits + self.l2_misses == self.l1_misses
        assert self.walks == self.l2_misses


@dataclass
class SimStats:
    warmup: PhaseStats = field(default_factory=PhaseStats)
    measurement: PhaseStats = field(default_factory=PhaseStats)

    def phase(self, name):
        if name not in PHASES:
            raise ValueError(f"unknown phase {name!r}")
        return getattr(self, name)

    def check(self):
        self.warmup.check()
        self.measurement.check()


@dataclass(frozen=True)
class TranslationOutcome:
    pa: int
    path: str
    cycles_charged: int


class Simulation:
    """One TLB hierarchy plus walker over one fixed set of mapped regions."""

    def __init__(
        self,
        regions,
        ways=4,
        l2_entries=L2_ENTRIES,
        replacement="lru",
        seed=0,
        l1_entries=L1_ENTRIES,
        ptw_cache_entries=None,
        latency=None,
        flush_ptw_between_phases=False,
    ):
        self.regions = list(regions)
        self.mem, self.root_ppn = build_page_tables(self.regions)
        self.l1 = L1Dtlb(l1_entries)
        self.l2 = L2Tlb(l2_entries, ways, replacement, seed)
        if ptw_cache_entries is None:
            self.ptw_cache = PtwCache()
        else:
            self.ptw_cache = PtwCache(ptw_cache_entries)
        self.latency = latency if latency is not None else LatencyModel()
        self.flush_ptw_between_phases = flush_ptw_between_phases
        self.stats = SimStats()
        self.phase = MEASUREMENT

    def translate(self, va):
        """Translate one access, updating the current phase's counters."""
        stats = self.stats.phase(self.phase)
        latency = self.latency
        high = va >> 38
        if high != 0 and high != CANONICAL_HIGH:
            raise CanonicalityError(f"va {va:#x} is not a canonical sv39 address")
        vpn = (va >> PAGE_SHIFT) & VPN_MASK
        stats.accesses += 1
        hit = self.l1.lookup(vpn)
        if hit is not None:
            stats.l1_hits += 1
            cycles = latency.l1_hit_cycles
            stats.total_cycles += cycles
            return TranslationOutcome(
                (hit[0] << PAGE_SHIFT) | (va & OFFSET_MASK), L1_HIT, cycles
            )
        stats.l1_misses += 1
        result = self.l2.lookup(vpn)
        if result is not None:
            stats.l2_hits += 1
            ppn, perms = result
            self.l1.insert(vpn, ppn, perms)
            cycles = latency.l1_hit_cycles + latency.l2_lookup_cycles
            stats.total_cycles += cycles
            return TranslationOutcome(
                (ppn << PAGE_SHIFT) | (va & OFFSET_MASK), L2_HIT, cycles
            )
        stats.l2_misses += 1
        result = walk(self.root_ppn, self.mem, self.ptw_cache, va)
        if result.faulted:
            raise UnmappedAccessError(f"no mapping behind va {va:#x}")
        stats.walks += 1
        stats.walk_memory_reads += result.memory_reads
        leaf = result.pte
        self.l2.insert(vpn, leaf)
        if leaf.n_bit:
            ppn = napot_translate(leaf.ppn, vpn & NAPOT_OFFSET_MASK)
        else:
            ppn = leaf.ppn
        self.l1.insert(vpn, ppn, leaf.perm_bits)
        cycles = (
            latency.l1_hit_cycles
            + latency.l2_lookup_cycles
            + latency.mem_read_cycles * result.memory_reads
        )
        stats.total_cycles += cycles
        return TranslationOutcome(
            (ppn << PAGE_SHIFT) | (va & OFFSET_MASK), WALK, cycles
        )

    def run_trace(self, trace):
        """Run the warm-up then measurement accesses; returns the stats.

        Equivalent to calling translate() per address but batched for speed;
        cached translations survive into the measurement phase.
        """
        self.phase = WARMUP
        self._run_phase(trace.warmup, self.stats.warmup)
        if self.flush_ptw_between_phases:
            self.ptw_cache.flush()
        self.phase = MEASUREMENT
        self._run_phase(trace.measurement, self.stats.measurement)
        self.stats.check()
        return self.stats

    def _run_phase(self, addresses, stats):
        # localized hot loop; ~0.1us per L1 hit keeps 1M-access runs cheap
        l1_entries = self.l1.entries
        l1_get = l1_entries.get
        l1_move = l1_entries.move_to_end
        l1_insert = self.l1.insert
        l2_lookup = self.l2.lookup
        l2_insert = self.l2.insert
        root_ppn = self.root_ppn
        mem = self.mem
        ptw_cache = self.ptw_cache
        l1_hits = 0
        l2_hits = 0
        walks = 0
        walk_reads = 0
        for va in addresses:
            high = va >> 38
            if high != 0 and high != CANONICAL_HIGH:
                raise CanonicalityError(
                    f"va {va:#x} is not a canonical sv39 address"
                )
            vpn = (va >> PAGE_SHIFT) & VPN_MASK
            if l1_get(vpn) is not None:
                l1_move(vpn)
                l1_hits += 1
                continue
            result = l2_lookup(vpn)
            if result is not None:
                l2_hits += 1
                l1_insert(vpn, result[0], result[1])
                continue
            result = walk(root_ppn, mem, ptw_cache, va)
            if result.faulted:
                raise UnmappedAccessError(f"no mapping behind va {va:#x}")
            walks += 1
            walk_reads += result.memory_reads
            leaf = result.pte
            l2_insert(vpn, leaf)
            if leaf.n_bit:
                ppn = (leaf.ppn & ~NAPOT_OFFSET_MASK) | (vpn & NAPOT_OFFSET_MASK)
            else:
                ppn = leaf.ppn
            l1_insert(vpn, ppn, leaf.perm_bits)
        total = len(addresses)
        l1_misses = total - l1_hits
        latency = self.latency
        stats.accesses += total
        stats.l1_hits += l1_hits
        stats.l1_misses += l1_misses
        stats.l2_hits += l2_hits
        stats.l2_misses += l1_misses - l2_hits
        stats.walks += walks
        stats.walk_memory_reads += walk_reads
        stats.total_cycles += (
            total * latency.l1_hit_cycles
            + l1_misses * latency.l2_lookup_cycles
            + walk_reads * latency.mem_read_cycles
        )
