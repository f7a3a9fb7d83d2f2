//! Conditional rate-distortion: side information known at both encoder and
//! decoder. The problem splits into one standard problem per side symbol,
//! coupled through a common slope.

use rayon::prelude::*;

use super::ba::solve_target;
use super::curve::{RDCurve, RDPoint};
use crate::error::{Error, Result};
use crate::prob::{DistortionMatrix, JointSourcePMF, User};

fn components(joint: &JointSourcePMF, user: User, d: &DistortionMatrix) -> Result<Vec<(f64, Vec<f64>)>> {
    if d.source_size() != joint.size(user) {
        return Err(Error::ShapeMismatch(format!(
            "distortion matrix has {} rows, source has {} symbols",
            d.source_size(),
            joint.size(user)
        )));
    }
    let side = joint.marginal(user.other());
    let cond = joint.conditional_given_other(user);
    Ok(side
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, &w)| (w, cond.row_opt(s).expect("defined under positive mass").to_vec()))
        .collect())
}

/// R_{S_user|S_other}(D) as an operating point.
pub fn conditional_rd_point(joint: &JointSourcePMF, user: User, d: &DistortionMatrix, target: f64) -> Result<RDPoint> {
    let comps = components(joint, user, d)?;
    Ok(solve_target(&comps, d, target)?.point)
}

/// R_{S_user|S_other}(D) in bits.
pub fn conditional_rd(joint: &JointSourcePMF, user: User, d: &DistortionMatrix, target: f64) -> Result<f64> {
    conditional_rd_point(joint, user, d, target).map(|p| p.rate)
}

/// Distortion of the best side-information-only guess; zero rate suffices above it.
pub fn conditional_dmax(joint: &JointSourcePMF, user: User, d: &DistortionMatrix) -> Result<f64> {
    Ok(components(joint, user, d)?
        .iter()
        .map(|(w, p)| w * d.best_constant(p).0)
        .sum())
}

pub fn conditional_rd_curve(joint: &JointSourcePMF, user: User, d: &DistortionMatrix, grid: &[f64]) -> Result<RDCurve> {
    let comps = components(joint, user, d)?;
    let points = grid
        .par_iter()
        .map(|&t| solve_target(&comps, d, t).map(|s| s.point))
        .collect::<Result<Vec<_>>>()?;
    RDCurve::new(points)
}
