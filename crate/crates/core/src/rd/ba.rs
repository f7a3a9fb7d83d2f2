//! Blahut-Arimoto iteration and the slope search shared by the standard and
//! conditional rate-distortion solvers.

use rayon::prelude::*;

use super::curve::{RDCurve, RDPoint};
use super::{SLOPE_BISECTIONS, SLOPE_MIN};
use crate::error::{Error, Result};
use crate::prob::{CondPMF, DistortionMatrix, ProbVec};

/// Stopping threshold on the gap between the Blahut upper and lower bounds.
pub const BA_TOL: f64 = 1e-9;
pub const BA_MAX_ITER: usize = 10_000;

/// Result of one Blahut-Arimoto run at a fixed slope.
#[derive(Debug, Clone)]
pub(crate) struct BaSolution {
    /// Test channel Q(s_hat | s), row-major.
    pub channel: Vec<f64>,
    pub distortion: f64,
    pub rate: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn ba_run(p: &[f64], d: &DistortionMatrix, slope: f64, tol: f64, max_iter: usize) -> BaSolution {
    let n = p.len();
    let m = d.recon_size();
    // 2^{s (d - min_row d)}: the row shift cancels in the normalization
    let w: Vec<f64> = (0..n)
        .flat_map(|x| {
            let row = d.row(x);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            row.iter().map(move |&v| (slope * (v - lo)).exp2()).collect::<Vec<_>>()
        })
        .collect();
    let mut q = vec![1.0 / m as f64; m];
    let mut lam = vec![0.0; n];
    let mut c = vec![0.0; m];
    let mut residual;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        for x in 0..n {
            lam[x] = (0..m).map(|j| q[j] * w[x * m + j]).sum();
        }
        c.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..n {
            if p[x] > 0.0 {
                let scale = p[x] / lam[x];
                for j in 0..m {
                    c[j] += scale * w[x * m + j];
                }
            }
        }
        let cmax = c.iter().copied().fold(0.0, f64::max);
        let avg: f64 = (0..m)
            .filter(|&j| q[j] > 0.0 && c[j] > 0.0)
            .map(|j| q[j] * c[j] * c[j].log2())
            .sum();
        residual = (cmax.log2() - avg).max(0.0);
        if residual <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        for j in 0..m {
            q[j] *= c[j];
        }
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
        iterations += 1;
    }
    let mut channel = vec![0.0; n * m];
    for x in 0..n {
        let lam_x: f64 = (0..m).map(|j| q[j] * w[x * m + j]).sum();
        for j in 0..m {
            channel[x * m + j] = q[j] * w[x * m + j] / lam_x;
        }
    }
    let (distortion, rate) = channel_stats(p, d, &channel);
    BaSolution {
        channel,
        distortion,
        rate,
        residual,
        iterations,
        converged,
    }
}

/// Expected distortion and I(S; S_hat) of a test channel.
pub(crate) fn channel_stats(p: &[f64], d: &DistortionMatrix, channel: &[f64]) -> (f64, f64) {
    let m = d.recon_size();
    let mut out = vec![0.0; m];
    let mut dist = 0.0;
    for (x, &px) in p.iter().enumerate() {
        for j in 0..m {
            out[j] += px * channel[x * m + j];
            dist += px * channel[x * m + j] * d.get(x, j);
        }
    }
    let mut rate = 0.0;
    for (x, &px) in p.iter().enumerate() {
        for j in 0..m {
            let v = px * channel[x * m + j];
            if v > 0.0 {
                rate += v * (channel[x * m + j] / out[j]).log2();
            }
        }
    }
    (dist, rate.max(0.0))
}

/// One Blahut-Arimoto solve at `slope` (bits per unit distortion, `<= 0`).
pub fn ba_rd(p: &ProbVec, d: &DistortionMatrix, slope: f64) -> Result<RDPoint> {
    check_source(p, d)?;
    if !(slope <= 0.0) {
        return Err(Error::InvalidArgument(format!("slope must be <= 0, got {slope}")));
    }
    let sol = ba_run(p.as_slice(), d, slope, BA_TOL, BA_MAX_ITER);
    let point = RDPoint {
        distortion: sol.distortion,
        rate: sol.rate,
        slope,
    };
    if sol.converged {
        Ok(point)
    } else {
        Err(Error::NotConverged {
            iterations: sol.iterations,
            residual: sol.residual,
            last: point,
        })
    }
}

fn check_source(p: &ProbVec, d: &DistortionMatrix) -> Result<()> {
    if p.len() != d.source_size() {
        return Err(Error::ShapeMismatch(format!(
            "source has {} symbols, distortion matrix has {} rows",
            p.len(),
            d.source_size()
        )));
    }
    Ok(())
}

/// Solution of a target-distortion problem over a weighted family of sources
/// sharing one slope. Each component is a (weight, source law) pair.
#[derive(Debug, Clone)]
pub(crate) struct TargetSolution {
    pub point: RDPoint,
    /// Weight on `lo`; `1 - theta` goes to `hi`.
    pub theta: f64,
    pub lo: Vec<BaSolution>,
    pub hi: Vec<BaSolution>,
}

fn eval_family(comps: &[(f64, Vec<f64>)], d: &DistortionMatrix, slope: f64) -> (f64, f64, Vec<BaSolution>) {
    let sols: Vec<BaSolution> = comps
        .iter()
        .map(|(_, p)| ba_run(p, d, slope, BA_TOL, BA_MAX_ITER))
        .collect();
    let dist = comps.iter().zip(&sols).map(|((w, _), s)| w * s.distortion).sum();
    let rate = comps.iter().zip(&sols).map(|((w, _), s)| w * s.rate).sum();
    (dist, rate, sols)
}

/// Minimum weighted rate subject to weighted distortion `<= target`.
///
/// Bisects the common slope on `[SLOPE_MIN, 0]` and interpolates along the
/// chord between the two bracketing solutions (time sharing), which is exact
/// on linear segments and an upper bound otherwise.
pub(crate) fn solve_target(comps: &[(f64, Vec<f64>)], d: &DistortionMatrix, target: f64) -> Result<TargetSolution> {
    if !target.is_finite() {
        return Err(Error::InvalidArgument(format!("target distortion {target} is not finite")));
    }
    let dmin: f64 = comps.iter().map(|(w, p)| w * d.min_distortion(p)).sum();
    let dmax: f64 = comps.iter().map(|(w, p)| w * d.best_constant(p).0).sum();
    if target < dmin - 1e-12 {
        return Err(Error::Infeasible(format!(
            "distortion {target} is below the minimum achievable {dmin}"
        )));
    }
    let m = d.recon_size();
    if target >= dmax {
        let sols: Vec<BaSolution> = comps
            .iter()
            .map(|(_, p)| {
                let (dist, best) = d.best_constant(p);
                let mut channel = vec![0.0; p.len() * m];
                for x in 0..p.len() {
                    channel[x * m + best] = 1.0;
                }
                BaSolution {
                    channel,
                    distortion: dist,
                    rate: 0.0,
                    residual: 0.0,
                    iterations: 0,
                    converged: true,
                }
            })
            .collect();
        return Ok(TargetSolution {
            point: RDPoint {
                distortion: target,
                rate: 0.0,
                slope: 0.0,
            },
            theta: 1.0,
            lo: sols.clone(),
            hi: sols,
        });
    }

    let (mut s_lo, mut s_hi) = (SLOPE_MIN, 0.0);
    let (d_lo, r_lo, sol_lo) = eval_family(comps, d, s_lo);
    if d_lo >= target {
        return Ok(TargetSolution {
            point: RDPoint {
                distortion: target,
                rate: r_lo,
                slope: s_lo,
            },
            theta: 1.0,
            lo: sol_lo.clone(),
            hi: sol_lo,
        });
    }
    let mut lo = (d_lo, r_lo, sol_lo);
    let mut hi = eval_family(comps, d, s_hi);
    for _ in 0..SLOPE_BISECTIONS {
        let mid = 0.5 * (s_lo + s_hi);
        let cur = eval_family(comps, d, mid);
        if cur.0 > target {
            s_hi = mid;
            hi = cur;
        } else {
            s_lo = mid;
            lo = cur;
        }
    }
    let span = hi.0 - lo.0;
    let theta = if span > 0.0 { ((hi.0 - target) / span).clamp(0.0, 1.0) } else { 1.0 };
    let rate = theta * lo.1 + (1.0 - theta) * hi.1;
    Ok(TargetSolution {
        point: RDPoint {
            distortion: target,
            rate: rate.max(0.0),
            slope: s_lo,
        },
        theta,
        lo: lo.2,
        hi: hi.2,
    })
}

/// R(D) at a target distortion.
pub fn rd_target(p: &ProbVec, d: &DistortionMatrix, target: f64) -> Result<RDPoint> {
    check_source(p, d)?;
    Ok(solve_target(&[(1.0, p.as_slice().to_vec())], d, target)?.point)
}

/// R(D) together with a test channel achieving distortion `<= target` at that rate.
pub fn rd_test_channel(p: &ProbVec, d: &DistortionMatrix, target: f64) -> Result<(RDPoint, CondPMF)> {
    check_source(p, d)?;
    let sol = solve_target(&[(1.0, p.as_slice().to_vec())], d, target)?;
    let m = d.recon_size();
    let (lo, hi) = (&sol.lo[0].channel, &sol.hi[0].channel);
    let rows = (0..p.len())
        .map(|x| {
            (0..m)
                .map(|j| sol.theta * lo[x * m + j] + (1.0 - sol.theta) * hi[x * m + j])
                .collect()
        })
        .collect();
    Ok((sol.point, CondPMF::new(rows)?))
}

/// R(D) sampled on `grid` (evaluated in parallel).
pub fn rd_curve(p: &ProbVec, d: &DistortionMatrix, grid: &[f64]) -> Result<RDCurve> {
    check_source(p, d)?;
    let points = grid
        .par_iter()
        .map(|&t| rd_target(p, d, t))
        .collect::<Result<Vec<_>>>()?;
    RDCurve::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn binary_hamming_matches_closed_form() {
        let p = ProbVec::uniform(2);
        let d = DistortionMatrix::hamming(2);
        for k in 0..=10 {
            let dd = 0.05 * k as f64;
            let r = rd_target(&p, &d, dd).unwrap().rate;
            let expect = if dd >= 0.5 { 0.0 } else { 1.0 - binary_entropy(dd) };
            assert_abs_diff_eq!(r, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn lossless_rate_is_entropy() {
        let p = ProbVec::bernoulli(1.0 / 3.0).unwrap();
        let r = rd_target(&p, &DistortionMatrix::hamming(2), 0.0).unwrap().rate;
        assert_abs_diff_eq!(r, binary_entropy(1.0 / 3.0), epsilon = 1e-6);
    }

    #[test]
    fn infeasible_below_minimum() {
        let d = DistortionMatrix::new(vec![vec![0.0, 1.0], vec![0.5, 0.2]]);
        assert!(d.is_err(), "rows without a zero are rejected by the strict constructor");
        let d = DistortionMatrix::new_relaxed(vec![vec![0.1, 1.0], vec![1.0, 0.1]]).unwrap();
        let err = rd_target(&ProbVec::uniform(2), &d, 0.05).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn fixed_slope_reports_nonconvergence() {
        let p = ProbVec::new(vec![0.8, 0.2]).unwrap();
        let d = DistortionMatrix::hamming(2);
        let sol = ba_run(p.as_slice(), &d, -3.0, 0.0, 3);
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
        assert!(ba_rd(&p, &d, -3.0).is_ok());
        assert!(ba_rd(&p, &d, 0.5).is_err());
    }

    #[test]
    fn test_channel_meets_target() {
        let p = ProbVec::new(vec![0.5, 0.3, 0.2]).unwrap();
        let d = DistortionMatrix::hamming(3);
        let (pt, ch) = rd_test_channel(&p, &d, 0.2).unwrap();
        let flat: Vec<f64> = (0..3).flat_map(|x| ch.row(x).unwrap().to_vec()).collect();
        let (dist, rate) = channel_stats(p.as_slice(), &d, &flat);
        assert!(dist <= 0.2 + 1e-9);
        assert!(rate <= pt.rate + 1e-9);
    }

    proptest! {
        #[test]
        fn ba_point_is_on_or_above_the_binary_curve(q in 0.05f64..0.95, s in -20.0f64..-0.01) {
            let p = ProbVec::bernoulli(q).unwrap();
            // slow convergence near the zero-rate end still yields a valid iterate
            let pt = match ba_rd(&p, &DistortionMatrix::hamming(2), s) {
                Ok(pt) => pt,
                Err(Error::NotConverged { last, .. }) => last,
                Err(e) => panic!("{e}"),
            };
            let pmin = q.min(1.0 - q);
            let lower = if pt.distortion >= pmin { 0.0 } else { binary_entropy(q) - binary_entropy(pt.distortion) };
            prop_assert!(pt.rate >= lower - 1e-6);
            prop_assert!(pt.rate <= lower + 1e-4);
        }
    }
}
