//! Moment statistics, phase-portrait analysis and timing.

mod moments;
mod portrait;
mod timing;

pub use moments::{relative_errors, sample_moments, MomentAccumulator, MomentSummary, MOMENT_NAMES};
pub use portrait::{
    classify_subdomain, find_stationary_points, hamiltonian_contours, Contour, PointKind, Portrait, StationaryPoint,
    StationarySearch, Subdomain, BOUNDARY_TOL, RESIDUAL_TOL,
};
pub use timing::{timing_ledger, PhaseTimes, Stopwatch, TimingLedger};
