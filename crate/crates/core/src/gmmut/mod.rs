//! Gaussian-mixture propagation with unscented transforms.

mod library;
mod mixture;
mod pipeline;
mod unscented;

pub use library::{build_split_library, fit_weights, l2_distance_sq, SplitLibrary1D, MAX_COMPONENTS, SIGMA_PENALTY};
pub use mixture::{mixture_marginal, mixture_pdf, merge_moments, split_gaussian, GaussianComponent, GaussianMixture};
pub use unscented::{sigma_points, ut_transform, ut_weights, UTConfig, UtWeights, NVAR};
pub use pipeline::{
    cached_split_library, coverage_box, mixture_box_mass, mixture_moments, propagate_mixture, run_gmmut, COVERAGE_SIGMAS,
    SIGMA_POINTS_PER_COMPONENT,
};
