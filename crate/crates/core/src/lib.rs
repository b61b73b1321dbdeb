//! Model-free estimation of the Hurst roughness exponent of a single path
//! sampled on a dyadic grid.

pub mod diagnostics;
pub mod dyadic;
pub mod error;
pub mod estimators;
pub mod fbm;
pub mod numeric;
pub mod rolling;
pub mod variation;

pub use dyadic::{fs_eval, DyadicSeries, EnergyTrace, FaberSchauderPyramid};
pub use error::{HurstError, Result};
pub use estimators::{
    gladyshev, gladyshev_sequence, EstimatorKind, EstimatorSpec, GladyshevSequence,
    ScaleEstimate, WeightProfile,
};
pub use fbm::{fbm_path, monte_carlo, McConfig, McSummary};
pub use rolling::{rolling_monitor, t_adjusted, RollingReport, WindowGrid};
pub use variation::{branch_moment, burkholder_ratio, pth_variation, Detrend};

/// Library version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
