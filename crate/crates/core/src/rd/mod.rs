//! Rate-distortion functions: standard, conditional (side information at
//! both ends), and Wyner-Ziv (side information at the decoder only).
//!
//! Rates are in bits per source symbol. A slope is the Lagrange multiplier
//! dR/dD in bits per unit distortion and is always nonpositive.

mod ba;
mod conditional;
mod curve;
mod oracle;
mod wz;

pub use ba::{ba_rd, rd_curve, rd_target, rd_test_channel, BA_MAX_ITER, BA_TOL};
pub use conditional::{conditional_dmax, conditional_rd, conditional_rd_curve, conditional_rd_point};
pub use curve::{distortion_grid, rd_inverse, RDCurve, RDPoint};
pub use oracle::{wz_bruteforce_oracle, ORACLE_LIMIT};
pub use wz::{wz_rd, wz_rd_curve, WZScheme, WzOptions, WzResult};

/// Steepest slope probed by target-distortion solves.
pub const SLOPE_MIN: f64 = -50.0;
/// Bisection steps on the slope for target-distortion solves.
pub const SLOPE_BISECTIONS: usize = 60;
