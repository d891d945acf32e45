"""Exact circle orbits, box-counting diagnostics and residue covering."""

from ._seqlab import (
    CirclePoint,
    ConsistencyError,
    Error,
    PrecisionError,
    UsageError,
    __version__,
    add_mod1,
    box_counts,
    brute_solve,
    cover_count,
    double_mod1,
    egcd_modinv,
    entropy_from_counts,
    estimate_dimension,
    independence_report,
    materialize,
    mult_order,
    orbit,
    orbit_cells,
    reduction_chain,
    required_bits,
    run_cli,
    solve_residue,
    star_discrepancy,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
