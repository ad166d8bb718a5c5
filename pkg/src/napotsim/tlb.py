"""L1 DTLB and the set-associative L2 TLB that collocates 4KB and 64KB entries.

The L2 set index drops the low 4 VPN bits before taking the set bits, so the
16 pages of a 64KB group all land in one set and the same indexing works for
both page sizes. Each entry carries an N bit: an N=1 entry matches on VPN
bits 26:4 alone and yields its PPN with the low nibble replaced by the VA's
NAPOT offset, so one entry covers the whole 64KB group.

Inside a set, entries live in an OrderedDict from oldest to newest. Keys put
the two entry kinds in disjoint namespaces: vpn << 1 for a 4KB entry,
(vpn >> 4) << 1 | 1 for a NAPOT entry.
"""

import random
from collections import OrderedDict

from .errors import MalformedNapotError
from .sv39 import (
    NAPOT_OFFSET_MASK,
    NAPOT_PPN_PATTERN,
    NAPOT_SHIFT,
    PAGE_SHIFT,
    VPN_MASK,
)

L1_ENTRIES = 32
L2_ENTRIES = 1024
REPLACEMENT_POLICIES = ("lru", "random")


def l2_index(vpn, sets):
    """Set index shared by both page sizes: drop the NAPOT bits, then mod."""
    return (vpn >> NAPOT_SHIFT) % sets


class L2Tlb:
    def __init__(self, entries=L2_ENTRIES, ways=4, replacement="lru", seed=0):
        if entries <= 0 or entries % ways:
            raise ValueError(f"{entries} entries do not divide into {ways} ways")
        sets = entries // ways
        if sets & (sets - 1):
            raise ValueError(f"set count {sets} is not a power of two")
        if replacement not in REPLACEMENT_POLICIES:
            raise ValueError(f"unknown replacement policy {replacement!r}")
        self.capacity = entries
        self.ways = ways
        self.sets = sets
        self.set_mask = sets - 1
        self.replacement = replacement
        self._rng = random.Random(seed)
        self._sets = [OrderedDict() for _ in range(sets)]

    def lookup(self, vpn):
        """Return (final 4KB ppn, perm bits) on hit, None on miss.

        Tries an exact 4KB entry first, then the NAPOT entry for the VPN's
        group. insert() guarantees a NAPOT entry's PPN carries the 0b1000
        nibble, so replacing that nibble with the NAPOT offset is exactly
        the 64KB translation rule.
        """
        entries = self._sets[(vpn >> NAPOT_SHIFT) & self.set_mask]
        key = vpn << 1
        hit = entries.get(key)
        if hit is not None:
            entries.move_to_end(key)
            return hit[1], hit[2]
        key = ((vpn >> NAPOT_SHIFT) << 1) | 1
        hit = entries.get(key)
        if hit is not None:
            entries.move_to_end(key)
            return (hit[1] & ~NAPOT_OFFSET_MASK) | (vpn & NAPOT_OFFSET_MASK), hit[2]
        return None

    def insert(self, vpn, pte):
        """Install the leaf PTE for vpn, evicting per policy if the set is full.

        Reinstalling a resident translation refreshes it in place instead of
        consuming another way.
        """
        if not pte.valid or not pte.is_leaf or pte.level != 0:
            raise ValueError("L2 entries must come from valid level-0 leaves")
        if pte.n_bit:
            if pte.ppn & NAPOT_OFFSET_MASK != NAPOT_PPN_PATTERN:
                raise MalformedNapotError(
                    f"ppn {pte.ppn:#x} lacks the 64KB NAPOT pattern"
                )
            key = ((vpn >> NAPOT_SHIFT) << 1) | 1
        else:
            key = vpn << 1
        entries = self._sets[(vpn >> NAPOT_SHIFT) & self.set_mask]
        value = (vpn, pte.ppn, pte.perm_bits)
        if key in entries:
            entries[key] = value
            entries.move_to_end(key)
            return
        if len(entries) >= self.ways:
            if self.replacement == "lru":
                entries.popitem(last=False)
            else:
                victim = list(entries)[self._rng.randrange(len(entries))]
                del entries[victim]
        entries[key] = value

    def flush(self, va):
        """Invalidate the whole set va indexes, regardless of page size."""
        vpn = (va >> PAGE_SHIFT) & VPN_MASK
        self._sets[(vpn >> NAPOT_SHIFT) & self.set_mask].clear()

    def flush_all(self):
        for entries in self._sets:
            entries.clear()

    def occupancy(self):
        return sum(len(entries) for entries in self._sets)

    def dump(self):
        """Occupied sets as {index: [(vpn tag, ppn, perms, napot), ...]}, LRU first."""
        out = {}
        for index, entries in enumerate(self._sets):
            if entries:
                out[index] = [
                    (tag, ppn, perms, bool(key & 1))
                    for key, (tag, ppn, perms) in entries.items()
                ]
        return out


class L1Dtlb:
    """Small fully associative DTLB: exact 4KB VPNs only, true LRU."""

    def __init__(self, capacity=L1_ENTRIES):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        # vpn -> (ppn, perm bits), oldest first; engine hot loop reads this
        self.entries = OrderedDict()

    def lookup(self, vpn):
        hit = self.entries.get(vpn)
        if hit is not None:
            self.entries.move_to_end(vpn)
        return hit

    def insert(self, vpn, ppn, perms=0):
        entries = self.entries
        if vpn in entries:
            entries[vpn] = (ppn, perms)
            entries.move_to_end(vpn)
            return
        if len(entries) >= self.capacity:
            entries.popitem(last=False)
        entries[vpn] = (ppn, perms)

    def flush_all(self):
        self.entries.clear()

    def __len__(self):
        return len(self.entries)
