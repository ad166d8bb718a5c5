"""TLB-stress trace generation: linear and random walks over a chunk.

A workload touches a power-of-two chunk of memory at a 4KB stride. Every
trace starts with one linear warm-up pass over the chunk (each page touched
once) followed by the measured accesses: either the same pass repeated
cyclically (linear) or uniform page picks from a counter-based generator
(random), so a (seed, chunk) pair always reproduces the same trace.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError
from .pagetable import RegionSpec
from .sv39 import NAPOT_OFFSET_MASK, PAGE_BYTES, PAGE_SHIFT, PageSize

PATTERNS = ("linear", "random")
STEP_BYTES = PAGE_BYTES
CHUNK_MIN_BYTES = 4 << 10
CHUNK_MAX_BYTES = 256 << 20
DEFAULT_MEASURED_ACCESSES = 1_000_000


@dataclass(frozen=True)
class WorkloadSpec:
    chunk_bytes: int
    pattern: str
    page_size: int = PageSize.PAGE_4K
    seed: int = 0
    measured_accesses: int = DEFAULT_MEASURED_ACCESSES
    step_bytes: int = STEP_BYTES

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.page_size not in PageSize.ALL:
            raise ValueError(f"unsupported page size {self.page_size}")
        c = self.chunk_bytes
        if c < CHUNK_MIN_BYTES or c > CHUNK_MAX_BYTES or c & (c - 1):
            raise ValueError(
                f"chunk_bytes {c:#x} must be a power of two in "
                f"[{CHUNK_MIN_BYTES:#x}, {CHUNK_MAX_BYTES:#x}]"
            )
        if self.step_bytes != STEP_BYTES:
            raise ValueError(f"stride is fixed at {STEP_BYTES} bytes")
        if self.measured_accesses < 0:
            raise ValueError("measured_accesses must be non-negative")

    @property
    def num_pages(self):
        return self.chunk_bytes // self.step_bytes


@dataclass
class AccessTrace:
    warmup: list
    measurement: list


def _warmup_pass(spec, base_va):
    return list(range(base_va, base_va + spec.chunk_bytes, spec.step_bytes))


def gen_linear(spec, base_va):
    """Warm-up pass, then the measured accesses striding the chunk cyclically."""
    if spec.pattern != "linear":
        raise ValueError(f"spec pattern is {spec.pattern!r}, not linear")
    pages = _warmup_pass(spec, base_va)
    measurement = list(
        itertools.islice(itertools.cycle(pages), spec.measured_accesses)
    )
    return AccessTrace(pages, measurement)


def gen_random(spec, base_va):
    """Warm-up pass, then uniform random page picks from a Philox stream."""
    if spec.pattern != "random":
        raise ValueError(f"spec pattern is {spec.pattern!r}, not random")
    warmup = _warmup_pass(spec, base_va)
    rng = np.random.Generator(np.random.Philox(spec.seed))
    picks = rng.integers(0, spec.num_pages, size=spec.measured_accesses)
    vas = (picks.astype(np.uint64) << np.uint64(PAGE_SHIFT)) + np.uint64(base_va)
    return AccessTrace(warmup, vas.tolist())


def gen_trace(spec, base_va):
    if spec.pattern == "linear":
        return gen_linear(spec, base_va)
    return gen_random(spec, base_va)


def make_regions(spec, base_va, base_ppn):
    """Backing region for a workload's chunk.

    The region length is the chunk rounded up to a whole page, so a chunk
    smaller than the 64KB page size still gets one full NAPOT group behind
    it.
    """
    page = spec.page_size
    if base_va % page:
        raise AlignmentError(f"base va {base_va:#x} not aligned to {page}")
    if page == PageSize.PAGE_64K and base_ppn & NAPOT_OFFSET_MASK:
        raise AlignmentError(
            f"base ppn {base_ppn:#x} not aligned to a 16-frame group"
        )
    length = ((spec.chunk_bytes + page - 1) // page) * page
    return [RegionSpec(base_va, length, page, base_ppn)]


def write_trace(trace, path):
    """Write a trace as hex addresses, one per line, with phase markers."""
    with open(path, "w") as f:
        f.write("# phase: warmup\n")
        for va in trace.warmup:
            f.write(f"{va:#x}\n")
        f.write("# phase: measurement\n")
        for va in trace.measurement:
            f.write(f"{va:#x}\n")


def read_trace(path):
    """Parse a file written by write_trace back into an AccessTrace."""
    phases = {"warmup": [], "measurement": []}
    current = None
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# phase:"):
                name = line.split(":", 1)[1].strip()
                if name not in phases:
                    raise ValueError(f"unknown phase {name!r}")
                current = phases[name]
                continue
            if line.startswith("#"):
                continue
            if current is None:
                raise ValueError("address before any phase marker")
            current.append(int(line, 16))
    return AccessTrace(phases["warmup"], phases["measurement"])
