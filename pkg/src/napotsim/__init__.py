"""Trace-driven simulator of an sv39 TLB hierarchy with SVNAPOT 64KB pages."""

from .engine import (
    L1_HIT,
    L2_HIT,
    MEASUREMENT,
    WALK,
    WARMUP,
    LatencyModel,
    PhaseStats,
    Simulation,
    SimStats,
    TranslationOutcome,
)
from .errors import (
    AlignmentError,
    CanonicalityError,
    ConfigError,
    MalformedNapotError,
    RegionOverlapError,
    SuperpageError,
    UnmappedAccessError,
)
from .pagetable import (
    PtwCache,
    RegionSpec,
    SimPhysMem,
    WalkResult,
    build_page_tables,
    walk,
)
from .sv39 import (
    PageSize,
    PageTableEntry,
    VaParts,
    decode_pte,
    encode_pte,
    napot_translate,
    split_va,
)
from .sweep import (
    ExperimentConfig,
    ResultRow,
    TlbConfig,
    emit_csv,
    emit_plotdata,
    load_config,
    run_cell,
    run_sweep,
)
from .tlb import L1Dtlb, L2Tlb, l2_index
from .workloads import (
    AccessTrace,
    WorkloadSpec,
    gen_linear,
    gen_random,
    gen_trace,
    make_regions,
    read_trace,
    write_trace,
)

__version__ = "0.1.0"
