"""Spectral minimal partitions of truncated Schrodinger domains on uniform grids."""

from .errors import (
    BadRadii,
    BracketInvalid,
    CellCollapse,
    ConfigError,
    EmptyMask,
    GridMismatch,
    InsufficientSweep,
    NoConvergence,
    NotConverged,
    OverlappingCells,
    SpecpartError,
    WindowTooSmall,
    ZeroField,
)
from .estimator import SpectralPartitioner
from .geometry import (
    Annulus,
    Ball,
    Complement,
    Diff,
    DomainMask,
    GridSpec,
    HalfStrip,
    Inter,
    Rect,
    Region,
    Sector,
    Union,
    build_mask,
    disjoint,
    full_window_mask,
    parse_region,
    ring_union_mask,
)
from .operators import (
    DiscreteForm,
    Field,
    Potential,
    assemble,
    count_below,
    k_smallest,
    rayleigh,
    smallest_eigenpair,
)
from .oracles import (
    HalfStripSpec,
    halfstrip_spectrum,
    rectangle_eigs,
    strip_room_energy,
    transcendental_root,
)
from .partition import (
    EnergyReport,
    PartitionState,
    build_ring_partition,
    check_differential_inequalities,
    energy_relaxed,
    energy_strong,
    ims_decompose,
    optimize,
    optimize_pinf,
)
from .spectrum import (
    PerssonSweep,
    ThresholdReport,
    count_bounds,
    p_norm,
    persson_sweep,
    sigma_estimate,
    threshold,
)

__version__ = "0.1.0"
