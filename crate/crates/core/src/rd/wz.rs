//! Wyner-Ziv rate-distortion: side information at the decoder only.
//!
//! The minimization over test channels Q(w|s) and decoders g(s', w) is not
//! convex, so the solver alternates: for a fixed decoder the Lagrangian
//! I(S;W|S') + beta E[d] is convex in Q and is minimized by a Blahut-style
//! update; the decoder is then re-derived as the Bayes rule for the current
//! channel. Several seeded random starts are combined with two anchor schemes
//! (zero rate and lossless) and with time-sharing mixtures of pairs of
//! candidates, and the best candidate is returned. The result is an
//! achievable rate, i.e. an upper estimate of R_WZ(D).

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::curve::{RDCurve, RDPoint};
use super::SLOPE_MIN;
use crate::error::{Error, Result};
use crate::prob::{CondPMF, DistortionMatrix, JointSourcePMF, User};
use crate::random::{flat_dirichlet, stream_rng};

const FEAS_TOL: f64 = 1e-12;
const USED_MASS: f64 = 1e-13;
const ERASURE_KEEP: [f64; 2] = [0.5, 0.9];
const STRUCTURED_STARTS: usize = ERASURE_KEEP.len();

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WzOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Slope bisection steps per restart.
    pub bisections: usize,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for WzOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            bisections: 40,
            max_outer: 60,
            max_inner: 400,
        }
    }
}

/// A Wyner-Ziv code: encoder test channel Q(w|s) and decoder table g[s'][w].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WZScheme {
    pub aux_size: usize,
    #[serde(skip)]
    pub test_channel: CondPMF,
    pub decoder: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WzResult {
    pub rate: f64,
    pub distortion: f64,
    pub scheme: WZScheme,
    /// Always true: the rate is achieved by `scheme` but may exceed R_WZ(D).
    pub upper_estimate: bool,
}

/// Problem data with the coded source on axis 0 and side information on axis 1.
struct Problem<'a> {
    ns: usize,
    nside: usize,
    nw: usize,
    nr: usize,
    joint: Vec<f64>,
    ps: Vec<f64>,
    /// p(s' | s), row-major over [s][s'].
    side_given_s: Vec<f64>,
    /// p(s | s'), row-major over [s'][s].
    s_given_side: Vec<f64>,
    d: &'a DistortionMatrix,
}

#[derive(Debug, Clone)]
struct Candidate {
    /// Q(w|s), row-major over [s][w].
    q: Vec<f64>,
    /// g(s', w), row-major over [s'][w].
    g: Vec<usize>,
    rate: f64,
    dist: f64,
}

impl<'a> Problem<'a> {
    fn new(joint: &JointSourcePMF, user: User, d: &'a DistortionMatrix) -> Result<Self> {
        let ns = joint.size(user);
        if d.source_size() != ns {
            return Err(Error::ShapeMismatch(format!(
                "distortion matrix has {} rows, source has {ns} symbols",
                d.source_size()
            )));
        }
        let o = joint.oriented(user);
        let nside = o.shape()[1];
        let pj = o.mass().to_vec();
        let ps: Vec<f64> = (0..ns).map(|s| (0..nside).map(|t| pj[s * nside + t]).sum()).collect();
        let pside: Vec<f64> = (0..nside).map(|t| (0..ns).map(|s| pj[s * nside + t]).sum()).collect();
        let mut side_given_s = vec![0.0; ns * nside];
        let mut s_given_side = vec![0.0; nside * ns];
        for s in 0..ns {
            for t in 0..nside {
                let v = pj[s * nside + t];
                if ps[s] > 0.0 {
                    side_given_s[s * nside + t] = v / ps[s];
                }
                if pside[t] > 0.0 {
                    s_given_side[t * ns + s] = v / pside[t];
                }
            }
        }
        Ok(Self {
            ns,
            nside,
            nw: ns + 1,
            nr: d.recon_size(),
            joint: pj,
            ps,
            side_given_s,
            s_given_side,
            d,
        })
    }

    /// Bayes decoder for `q`; ties and empty cells go to the lowest index.
    fn decoder(&self, q: &[f64], nw: usize) -> Vec<usize> {
        let mut g = vec![0; self.nside * nw];
        for t in 0..self.nside {
            for w in 0..nw {
                let mut best = (f64::INFINITY, 0);
                for r in 0..self.nr {
                    let cost: f64 = (0..self.ns)
                        .map(|s| self.joint[s * self.nside + t] * q[s * nw + w] * self.d.get(s, r))
                        .sum();
                    if cost < best.0 {
                        best = (cost, r);
                    }
                }
                g[t * nw + w] = best.1;
            }
        }
        g
    }

    fn stats(&self, q: &[f64], g: &[usize], nw: usize) -> (f64, f64) {
        let mut r = vec![0.0; self.nside * nw];
        for t in 0..self.nside {
            for w in 0..nw {
                r[t * nw + w] = (0..self.ns).map(|s| self.s_given_side[t * self.ns + s] * q[s * nw + w]).sum();
            }
        }
        let mut rate = 0.0;
        let mut dist = 0.0;
        for s in 0..self.ns {
            for t in 0..self.nside {
                let pst = self.joint[s * self.nside + t];
                if pst == 0.0 {
                    continue;
                }
                for w in 0..nw {
                    let qv = q[s * nw + w];
                    if qv > 0.0 {
                        rate += pst * qv * (qv / r[t * nw + w]).log2();
                        dist += pst * qv * self.d.get(s, g[t * nw + w]);
                    }
                }
            }
        }
        (rate.max(0.0), dist)
    }

    fn ba_step(&self, q: &[f64], g: &[usize], beta: f64) -> Vec<f64> {
        let nw = self.nw;
        let mut logr = vec![0.0; self.nside * nw];
        for t in 0..self.nside {
            for w in 0..nw {
                let r: f64 = (0..self.ns).map(|s| self.s_given_side[t * self.ns + s] * q[s * nw + w]).sum();
                logr[t * nw + w] = if r > 0.0 { r.log2() } else { f64::NEG_INFINITY };
            }
        }
        let mut out = q.to_vec();
        let mut expo = vec![0.0; nw];
        for s in 0..self.ns {
            if self.ps[s] == 0.0 {
                continue;
            }
            for (w, e) in expo.iter_mut().enumerate() {
                *e = (0..self.nside)
                    .filter(|&t| self.side_given_s[s * self.nside + t] > 0.0)
                    .map(|t| {
                        self.side_given_s[s * self.nside + t]
                            * (logr[t * nw + w] - beta * self.d.get(s, g[t * nw + w]))
                    })
                    .sum();
            }
            let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = expo.iter().map(|&e| (e - top).exp2()).collect();
            let total: f64 = weights.iter().sum();
            for w in 0..nw {
                out[s * nw + w] = weights[w] / total;
            }
        }
        out
    }

    fn solve(&self, q0: &[f64], beta: f64, opts: &WzOptions) -> Candidate {
        let mut q = q0.to_vec();
        let mut g = self.decoder(&q, self.nw);
        for _ in 0..opts.max_outer {
            for _ in 0..opts.max_inner {
                let next = self.ba_step(&q, &g, beta);
                let delta = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                q = next;
                if delta < 1e-11 {
                    break;
                }
            }
            let g_next = self.decoder(&q, self.nw);
            if g_next == g {
                break;
            }
            g = g_next;
        }
        let (rate, dist) = self.stats(&q, &g, self.nw);
        Candidate { q, g, rate, dist }
    }

    fn zero_rate_anchor(&self) -> Candidate {
        let nw = self.nw;
        let mut q = vec![0.0; self.ns * nw];
        for s in 0..self.ns {
            q[s * nw] = 1.0;
        }
        let g = self.decoder(&q, nw);
        let (rate, dist) = self.stats(&q, &g, nw);
        Candidate { q, g, rate, dist }
    }

    fn lossless_anchor(&self) -> Candidate {
        let nw = self.nw;
        let mut q = vec![0.0; self.ns * nw];
        for s in 0..self.ns {
            q[s * nw + s] = 1.0;
        }
        let g = self.decoder(&q, nw);
        let (rate, dist) = self.stats(&q, &g, nw);
        Candidate { q, g, rate, dist }
    }

    /// Merges auxiliary symbols that decode identically. Merging is a function
    /// of W, so the rate cannot grow and the distortion is unchanged.
    fn compact(&self, c: Candidate) -> Candidate {
        let nw = self.nw;
        let used = self.used(&c);
        let mut reps: Vec<usize> = Vec::new();
        let mut q = vec![0.0; self.ns * nw];
        let mut g = vec![0; self.nside * nw];
        for &w in &used {
            let column: Vec<usize> = (0..self.nside).map(|t| c.g[t * nw + w]).collect();
            let slot = match reps.iter().position(|&r| (0..self.nside).all(|t| g[t * nw + r] == column[t])) {
                Some(i) => reps[i],
                None => {
                    let r = reps.len();
                    for t in 0..self.nside {
                        g[t * nw + r] = column[t];
                    }
                    reps.push(r);
                    r
                }
            };
            for s in 0..self.ns {
                q[s * nw + slot] += c.q[s * nw + w];
            }
        }
        if reps.len() == used.len() {
            return c;
        }
        for s in 0..self.ns {
            let total: f64 = q[s * nw..(s + 1) * nw].iter().sum();
            if total > 0.0 {
                q[s * nw..(s + 1) * nw].iter_mut().for_each(|v| *v /= total);
            } else {
                q[s * nw] = 1.0;
            }
        }
        let (rate, dist) = self.stats(&q, &g, nw);
        Candidate { q, g, rate, dist }
    }

    fn used(&self, c: &Candidate) -> Vec<usize> {
        (0..self.nw)
            .filter(|&w| (0..self.ns).map(|s| self.ps[s] * c.q[s * self.nw + w]).sum::<f64>() > USED_MASS)
            .collect()
    }

    /// Time sharing of `a` (weight `theta`) and `b` on disjoint auxiliary symbols.
    fn mixture(&self, a: &Candidate, b: &Candidate, theta: f64) -> Option<Candidate> {
        let (ua, ub) = (self.used(a), self.used(b));
        if ua.len() + ub.len() > self.nw {
            return None;
        }
        let nw = self.nw;
        let mut q = vec![0.0; self.ns * nw];
        let mut g = vec![0; self.nside * nw];
        let mut col = 0;
        for (src, cols, weight) in [(a, &ua, theta), (b, &ub, 1.0 - theta)] {
            for &w in cols.iter() {
                for s in 0..self.ns {
                    q[s * nw + col] = weight * src.q[s * nw + w];
                }
                for t in 0..self.nside {
                    g[t * nw + col] = src.g[t * nw + w];
                }
                col += 1;
            }
        }
        for s in 0..self.ns {
            let total: f64 = q[s * nw..(s + 1) * nw].iter().sum();
            if total > 0.0 {
                q[s * nw..(s + 1) * nw].iter_mut().for_each(|v| *v /= total);
            } else {
                q[s * nw] = 1.0;
            }
        }
        let (rate, dist) = self.stats(&q, &g, nw);
        Some(Candidate { q, g, rate, dist })
    }

    fn dirichlet_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.ns).flat_map(|_| flat_dirichlet(rng, self.nw)).collect()
    }

    /// Deterministic starts: the source symbol is kept with probability `keep`
    /// and otherwise replaced by the extra symbol, which acts as an erasure.
    fn erasure_start(&self, keep: f64) -> Vec<f64> {
        let nw = self.nw;
        let mut q = vec![0.0; self.ns * nw];
        for s in 0..self.ns {
            q[s * nw + s] = keep;
            q[s * nw + self.ns] = 1.0 - keep;
        }
        q
    }

    /// Candidates visited by slope bisection from start `index`: the first
    /// `STRUCTURED_STARTS` are erasure-like, the rest are Dirichlet draws.
    fn restart(&self, index: usize, target: f64, opts: &WzOptions) -> Vec<Candidate> {
        let q0 = if index < STRUCTURED_STARTS {
            self.erasure_start(ERASURE_KEEP[index])
        } else {
            self.dirichlet_start(&mut stream_rng(opts.seed, (index - STRUCTURED_STARTS) as u64))
        };
        let mut out = vec![self.solve(&q0, -SLOPE_MIN, opts), self.solve(&q0, 0.0, opts)];
        let (mut lo, mut hi) = (SLOPE_MIN, 0.0);
        for _ in 0..opts.bisections {
            let mid = 0.5 * (lo + hi);
            let c = self.solve(&q0, -mid, opts);
            if c.dist > target {
                hi = mid;
            } else {
                lo = mid;
            }
            out.push(c);
        }
        out
    }

    fn to_result(&self, c: Candidate) -> Result<WzResult> {
        let nw = self.nw;
        let rows = (0..self.ns).map(|s| c.q[s * nw..(s + 1) * nw].to_vec()).collect();
        let decoder = (0..self.nside).map(|t| c.g[t * nw..(t + 1) * nw].to_vec()).collect();
        Ok(WzResult {
            rate: c.rate,
            distortion: c.dist,
            scheme: WZScheme {
                aux_size: nw,
                test_channel: CondPMF::new(rows)?,
                decoder,
            },
            upper_estimate: true,
        })
    }
}

/// Achievable Wyner-Ziv rate for `user`'s source at distortion `target`,
/// with the other source as decoder side information.
pub fn wz_rd(
    joint: &JointSourcePMF,
    user: User,
    d: &DistortionMatrix,
    target: f64,
    opts: &WzOptions,
) -> Result<WzResult> {
    if !target.is_finite() {
        return Err(Error::InvalidArgument(format!("target distortion {target} is not finite")));
    }
    let prob = Problem::new(joint, user, d)?;
    let dmin = d.min_distortion(&prob.ps);
    if target < dmin - FEAS_TOL {
        return Err(Error::Infeasible(format!(
            "distortion {target} is below the minimum achievable {dmin}"
        )));
    }
    let zero = prob.zero_rate_anchor();
    if zero.dist <= target + FEAS_TOL {
        return prob.to_result(zero);
    }
    let mut cands: Vec<Candidate> = (0..opts.restarts.max(1) + STRUCTURED_STARTS)
        .into_par_iter()
        .map(|i| prob.restart(i, target, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .map(|c| prob.compact(c))
        .collect();
    cands.push(zero);
    cands.push(prob.lossless_anchor());

    let feasible: Vec<&Candidate> = cands.iter().filter(|c| c.dist <= target + FEAS_TOL).collect();
    let infeasible: Vec<&Candidate> = cands.iter().filter(|c| c.dist > target + FEAS_TOL).collect();
    let mut best: Option<Candidate> = feasible
        .iter()
        .min_by(|a, b| a.rate.total_cmp(&b.rate))
        .map(|c| (*c).clone());
    let best_single = best.as_ref().map_or(f64::INFINITY, |c| c.rate);

    // rank the pairs that fit in the auxiliary alphabet by predicted mixture
    // rate and build the most promising ones
    let used_f: Vec<usize> = feasible.iter().map(|c| prob.used(c).len()).collect();
    let used_i: Vec<usize> = infeasible.iter().map(|c| prob.used(c).len()).collect();
    let mut pairs: Vec<(f64, usize, usize, f64)> = Vec::new();
    for (i, a) in feasible.iter().enumerate() {
        for (j, b) in infeasible.iter().enumerate() {
            if used_f[i] + used_i[j] > prob.nw {
                continue;
            }
            let theta = (b.dist - target) / (b.dist - a.dist);
            let predicted = theta * a.rate + (1.0 - theta) * b.rate;
            if predicted < best_single - 1e-12 {
                pairs.push((predicted, i, j, theta));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    for &(_, i, j, theta) in pairs.iter().take(256) {
        if let Some(m) = prob.mixture(feasible[i], infeasible[j], theta) {
            if m.dist <= target + 1e-9 && best.as_ref().is_none_or(|c| m.rate < c.rate) {
                best = Some(m);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Infeasible(format!("no scheme reached distortion {target}")))?;
    prob.to_result(best)
}

/// Upper-estimate Wyner-Ziv curve, made nonincreasing and convex.
pub fn wz_rd_curve(
    joint: &JointSourcePMF,
    user: User,
    d: &DistortionMatrix,
    grid: &[f64],
    opts: &WzOptions,
) -> Result<RDCurve> {
    let points = grid
        .par_iter()
        .map(|&t| {
            wz_rd(joint, user, d, t, opts).map(|r| RDPoint {
                distortion: t,
                rate: r.rate,
                slope: f64::NAN,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut curve = RDCurve::from_upper_estimates(points)?;
    curve.fill_chord_slopes();
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{dsbs, example1_source, z_channel_source};
    use crate::prob::binary_entropy;
    use crate::rd::{conditional_rd, wz_bruteforce_oracle};

    fn hamming() -> DistortionMatrix {
        DistortionMatrix::hamming(2)
    }

    #[test]
    fn lossless_needs_conditional_entropy() {
        let joint = example1_source();
        let r = wz_rd(&joint, User::One, &hamming(), 0.0, &WzOptions::default()).unwrap();
        assert!((r.rate - 2.0 / 3.0).abs() < 1e-9);
        assert!(r.distortion <= 1e-12);
        assert!(r.upper_estimate);
    }

    #[test]
    fn zero_rate_above_side_information_guess() {
        let r = wz_rd(&dsbs(0.2), User::One, &hamming(), 0.2, &WzOptions::default()).unwrap();
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn dsbs_known_curve() {
        // time sharing between (D=p, R=0) and the g(D) = h(p*D) - h(D) curve
        let p: f64 = 0.25;
        let g = |x: f64| binary_entropy(p * (1.0 - x) + (1.0 - p) * x) - binary_entropy(x);
        let target = 0.1;
        let mut exact = f64::INFINITY;
        for k in 0..=4000 {
            let x = target * k as f64 / 4000.0;
            // mix g at x with the zero-rate point at p
            let theta = (p - target) / (p - x);
            exact = exact.min(theta * g(x));
        }
        let r = wz_rd(&dsbs(p), User::One, &hamming(), target, &WzOptions::default()).unwrap();
        assert!(r.distortion <= target + 1e-9);
        assert!(r.rate >= exact - 1e-6, "rate {} below the true value {exact}", r.rate);
        assert!(r.rate <= exact + 0.02, "rate {} too far above {exact}", r.rate);
    }

    #[test]
    fn never_below_conditional_and_close_to_oracle() {
        let joint = z_channel_source(0.4);
        let d = hamming();
        for target in [0.05, 0.15] {
            for user in User::BOTH {
                let wz = wz_rd(&joint, user, &d, target, &WzOptions::default()).unwrap();
                let cond = conditional_rd(&joint, user, &d, target).unwrap();
                assert!(wz.rate >= cond - 1e-9);
                let oracle = wz_bruteforce_oracle(&joint, user, &d, target, 16).unwrap();
                assert!(wz.rate <= oracle + 0.02, "solver {} oracle {oracle}", wz.rate);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let opts = WzOptions {
            seed: 7,
            ..WzOptions::default()
        };
        let a = wz_rd(&dsbs(0.3), User::Two, &hamming(), 0.12, &opts).unwrap();
        let b = wz_rd(&dsbs(0.3), User::Two, &hamming(), 0.12, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn curve_is_valid() {
        let grid = crate::rd::distortion_grid(0.0, 0.3, 7);
        let c = wz_rd_curve(&dsbs(0.3), User::One, &hamming(), &grid, &WzOptions::default()).unwrap();
        assert_eq!(c.points().len(), 7);
        assert!(c.points()[6].rate == 0.0);
    }
}
