"""sv39 address arithmetic and PTE encoding, including the SVNAPOT 64KB form.

Addresses are plain ints. A virtual address is canonical when bits 63:39
replicate bit 38. The 27-bit VPN sits at bits 38:12 and splits into three
9-bit per-level indices. SVNAPOT marks a level-0 leaf (PTE bit 63) whose
PPN low nibble must be 0b1000; such an entry stands for an aligned group
of 16 contiguous 4KB frames and the low nibble of the translated PPN is
taken from the VA instead of the entry.
"""

from dataclasses import dataclass

from .errors import AlignmentError, CanonicalityError, MalformedNapotError

PAGE_SHIFT = 12
PAGE_BYTES = 1 << PAGE_SHIFT
OFFSET_MASK = PAGE_BYTES - 1

VPN_BITS = 27
VPN_MASK = (1 << VPN_BITS) - 1
LEVEL_BITS = 9
LEVEL_MASK = (1 << LEVEL_BITS) - 1

PPN_BITS = 44
PPN_MASK = (1 << PPN_BITS) - 1

# 64KB NAPOT group: 2**4 base pages, marked by the 0b1000 PPN nibble.
NAPOT_SHIFT = 4
NAPOT_PAGES = 1 << NAPOT_SHIFT
NAPOT_OFFSET_MASK = NAPOT_PAGES - 1
NAPOT_PPN_PATTERN = 0b1000

PTE_V = 1 << 0
PTE_R = 1 << 1
PTE_W = 1 << 2
PTE_X = 1 << 3
PTE_PPN_SHIFT = 10
PTE_N = 1 << 63

# bits 63:38 of a canonical address are all zero or all one
CANONICAL_HIGH = (1 << (64 - 38)) - 1


class PageSize:
    """The two page sizes the simulator maps: plain 4KB and NAPOT 64KB."""

    PAGE_4K = PAGE_BYTES
    PAGE_64K = PAGE_BYTES * NAPOT_PAGES

    ALL = (PAGE_4K, PAGE_64K)


def is_canonical(va):
    high = va >> 38
    return high == 0 or high == CANONICAL_HIGH


def check_canonical(va):
    if va < 0 or va >= (1 << 64) or not is_canonical(va):
        raise CanonicalityError(f"va {va:#x} is not a canonical sv39 address")


@dataclass(frozen=True)
class VaParts:
    vpn: int
    vpn2: int
    vpn1: int
    vpn0: int
    page_offset: int
    napot_offset: int
    napot_vpn: int


def split_va(va):
    """Break a canonical va into its VPN fields and offsets.

    napot_vpn drops the low 4 VPN bits (the within-group page number,
    returned separately as napot_offset).
    """
    check_canonical(va)
    vpn = (va >> PAGE_SHIFT) & VPN_MASK
    return VaParts(
        vpn=vpn,
        vpn2=vpn >> (2 * LEVEL_BITS),
        vpn1=(vpn >> LEVEL_BITS) & LEVEL_MASK,
        vpn0=vpn & LEVEL_MASK,
        page_offset=va & OFFSET_MASK,
        napot_offset=vpn & NAPOT_OFFSET_MASK,
        napot_vpn=vpn >> NAPOT_SHIFT,
    )


def napot_translate(entry_ppn, napot_offset):
    """Resolve the 4KB frame a 64KB NAPOT leaf maps for one of its 16 pages.

    The entry's upper PPN bits select the frame group; its low nibble is the
    fixed 0b1000 marker and gets replaced by the VA's NAPOT offset:
    frame = (entry_ppn >> 4) * 16 + napot_offset.
    """
    if entry_ppn & NAPOT_OFFSET_MASK != NAPOT_PPN_PATTERN:
        raise MalformedNapotError(
            f"ppn {entry_ppn:#x} low nibble is not the 64KB NAPOT pattern"
        )
    if napot_offset < 0 or napot_offset >= NAPOT_PAGES:
        raise ValueError(f"napot offset {napot_offset} out of range")
    return ((entry_ppn >> NAPOT_SHIFT) << NAPOT_SHIFT) | napot_offset


def napot_encode_ppn(base_frame):
    """PPN field for a 64KB leaf over the aligned 16-frame group at base_frame."""
    if base_frame & NAPOT_OFFSET_MASK:
        raise AlignmentError(f"frame {base_frame:#x} is not 64KB aligned")
    return base_frame | NAPOT_PPN_PATTERN


@dataclass
class PageTableEntry:
    valid: bool
    readable: bool
    writable: bool
    executable: bool
    ppn: int
    n_bit: bool
    level: int = 0

    @property
    def is_leaf(self):
        return self.readable or self.writable or self.executable

    @property
    def perm_bits(self):
        return self.readable | (self.writable << 1) | (self.executable << 2)


def leaf_pte(ppn, n_bit=False, readable=True, writable=True, executable=False):
    return PageTableEntry(True, readable, writable, executable, ppn, n_bit, 0)


def table_pte(ppn, level):
    """Valid pointer to a next-level table; R=W=X=0 marks it non-leaf."""
    return PageTableEntry(True, False, False, False, ppn, False, level)


def encode_pte(entry):
    raw = 0
    if entry.valid:
        raw |= PTE_V
    if entry.readable:
        raw |= PTE_R
    if entry.writable:
        raw |= PTE_W
    if entry.executable:
        raw |= PTE_X
    raw |= (entry.ppn & PPN_MASK) << PTE_PPN_SHIFT
    if entry.n_bit:
        raw |= PTE_N
    return raw


def decode_pte(raw, level=0):
    """Decode a raw 64-bit PTE found at the given tree level.

    An invalid entry (V=0) decodes without further checks. A valid entry
    with N=1 must be a level-0 leaf carrying the 64KB PPN pattern.
    """
    valid = bool(raw & PTE_V)
    entry = PageTableEntry(
        valid,
        bool(raw & PTE_R),
        bool(raw & PTE_W),
        bool(raw & PTE_X),
        (raw >> PTE_PPN_SHIFT) & PPN_MASK,
        bool(raw & PTE_N),
        level,
    )
    if valid and entry.n_bit:
        if level != 0 or not entry.is_leaf:
            raise MalformedNapotError(
                f"N bit set on a non-leaf or level-{level} entry"
            )
        if entry.ppn & NAPOT_OFFSET_MASK != NAPOT_PPN_PATTERN:
            raise MalformedNapotError(
                f"N bit set but ppn {entry.ppn:#x} lacks the 64KB pattern"
            )
    return entry


def phys_addr(ppn, page_offset):
    return ((ppn & PPN_MASK) << PAGE_SHIFT) | (page_offset & OFFSET_MASK)
