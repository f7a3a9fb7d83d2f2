//! Shannon's inner and outer bounds on the capacity region of a two-way channel.
//!
//! For an input law P(x1, x2) the rate pair is
//! (I(X1; Y2 | X2), I(X2; Y1 | X1)). The inner bound restricts to product
//! inputs, the outer bound allows any joint input law. Both regions are the
//! convex closure of the evaluated pairs.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{ProbVec, TwoWayChannel};
use crate::random::{flat_dirichlet, stream_rng};
use crate::region::RegionBoundary;

pub const DEFAULT_GRID: usize = 17;
pub const DEFAULT_RESTARTS: usize = 4;
/// Number of weights in the hill-climbing sweep of the outer bound.
pub const LAMBDA_POINTS: usize = 33;
/// Joint-input grid sweeps are used up to this many free parameters.
pub const MAX_SWEEP_DIM: usize = 4;
const MAX_GRID_POINTS: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

/// Per-direction marginal transition laws W1(y1 | x1, x2) and W2(y2 | x1, x2).
#[derive(Debug, Clone)]
pub struct ChannelMarginals {
    nx1: usize,
    nx2: usize,
    ny1: usize,
    ny2: usize,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl ChannelMarginals {
    pub fn new(ch: &TwoWayChannel) -> Self {
        let [nx1, nx2, ny1, ny2] = ch.dims();
        let mut w1 = vec![0.0; nx1 * nx2 * ny1];
        let mut w2 = vec![0.0; nx1 * nx2 * ny2];
        for x1 in 0..nx1 {
            for x2 in 0..nx2 {
                let cell = x1 * nx2 + x2;
                for y1 in 0..ny1 {
                    for y2 in 0..ny2 {
                        let p = ch.prob(x1, x2, y1, y2);
                        w1[cell * ny1 + y1] += p;
                        w2[cell * ny2 + y2] += p;
                    }
                }
            }
        }
        Self {
            nx1,
            nx2,
            ny1,
            ny2,
            w1,
            w2,
        }
    }

    /// Rates for a joint input law `pxx` laid out as [x1][x2].
    pub fn rates(&self, pxx: &[f64]) -> RatePair {
        let (nx1, nx2) = (self.nx1, self.nx2);
        // I(X1; Y2 | X2)
        let mut r1 = 0.0;
        for x2 in 0..nx2 {
            for y2 in 0..self.ny2 {
                let mix: f64 = (0..nx1).map(|x1| pxx[x1 * nx2 + x2] * self.w2[(x1 * nx2 + x2) * self.ny2 + y2]).sum();
                let px2: f64 = (0..nx1).map(|x1| pxx[x1 * nx2 + x2]).sum();
                for x1 in 0..nx1 {
                    let joint = pxx[x1 * nx2 + x2];
                    let w = self.w2[(x1 * nx2 + x2) * self.ny2 + y2];
                    if joint > 0.0 && w > 0.0 {
                        r1 += joint * w * (w * px2 / mix).log2();
                    }
                }
            }
        }
        // I(X2; Y1 | X1)
        let mut r2 = 0.0;
        for x1 in 0..nx1 {
            let px1: f64 = (0..nx2).map(|x2| pxx[x1 * nx2 + x2]).sum();
            for y1 in 0..self.ny1 {
                let mix: f64 = (0..nx2).map(|x2| pxx[x1 * nx2 + x2] * self.w1[(x1 * nx2 + x2) * self.ny1 + y1]).sum();
                for x2 in 0..nx2 {
                    let joint = pxx[x1 * nx2 + x2];
                    let w = self.w1[(x1 * nx2 + x2) * self.ny1 + y1];
                    if joint > 0.0 && w > 0.0 {
                        r2 += joint * w * (w * px1 / mix).log2();
                    }
                }
            }
        }
        RatePair {
            r1: r1.max(0.0),
            r2: r2.max(0.0),
        }
    }
}

/// Rate pair of independent inputs `p1` and `p2`.
pub fn inner_rate_point(ch: &TwoWayChannel, p1: &ProbVec, p2: &ProbVec) -> Result<RatePair> {
    let [nx1, nx2, _, _] = ch.dims();
    if p1.len() != nx1 || p2.len() != nx2 {
        return Err(Error::ShapeMismatch(format!(
            "input laws have sizes ({}, {}), channel inputs are ({nx1}, {nx2})",
            p1.len(),
            p2.len()
        )));
    }
    Ok(ChannelMarginals::new(ch).rates(&product(p1.as_slice(), p2.as_slice())))
}

/// Rate pair of a joint input law laid out as [x1][x2].
pub fn joint_rate_point(ch: &TwoWayChannel, pxx: &[f64]) -> Result<RatePair> {
    let [nx1, nx2, _, _] = ch.dims();
    if pxx.len() != nx1 * nx2 {
        return Err(Error::ShapeMismatch(format!("joint input law needs {} entries", nx1 * nx2)));
    }
    let pv = ProbVec::new(pxx.to_vec())?;
    Ok(ChannelMarginals::new(ch).rates(pv.as_slice()))
}

fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Points of the `dim`-symbol probability simplex with coordinates in
/// multiples of `1 / (per_edge - 1)`.
pub fn simplex_grid(dim: usize, per_edge: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let steps = per_edge.saturating_sub(1).max(1);
    let mut raw = Vec::new();
    rec(steps, dim, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|v| v.into_iter().map(|k| k as f64 / steps as f64).collect())
        .collect()
}

fn simplex_grid_len(dim: usize, per_edge: usize) -> u128 {
    let steps = per_edge.saturating_sub(1).max(1) as u128;
    binomial(steps + dim as u128 - 1, dim as u128 - 1)
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2 points per edge, got {grid}")));
    }
    Ok(())
}

fn inner_points(m: &ChannelMarginals, grid: usize) -> Result<Vec<RatePair>> {
    let total = simplex_grid_len(m.nx1, grid) * simplex_grid_len(m.nx2, grid);
    if total > MAX_GRID_POINTS {
        return Err(Error::GuardExceeded {
            points: total,
            limit: MAX_GRID_POINTS,
        });
    }
    let g1 = simplex_grid(m.nx1, grid);
    let g2 = simplex_grid(m.nx2, grid);
    Ok(g1
        .par_iter()
        .flat_map_iter(|p1| g2.iter().map(move |p2| m.rates(&product(p1, p2))))
        .collect())
}

fn to_region(points: &[RatePair]) -> Result<RegionBoundary> {
    RegionBoundary::rate_region(points.iter().map(|p| [p.r1, p.r2]).collect())
}

/// Convex closure of rate pairs over a product grid of input laws.
pub fn inner_region(ch: &TwoWayChannel, grid: usize) -> Result<RegionBoundary> {
    check_grid(grid)?;
    to_region(&inner_points(&ChannelMarginals::new(ch), grid)?)
}

/// Maximizes `lambda r1 + (1 - lambda) r2` over joint input laws from `start`
/// by moving mass between pairs of cells with a shrinking step.
fn hill_climb(m: &ChannelMarginals, lambda: f64, start: Vec<f64>) -> Vec<f64> {
    let score = |p: &[f64]| {
        let r = m.rates(p);
        lambda * r.r1 + (1.0 - lambda) * r.r2
    };
    let n = start.len();
    let mut p = start;
    let mut best = score(&p);
    let mut step: f64 = 0.25;
    let mut trial = p.clone();
    while step > 1e-7 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || p[j] <= 0.0 {
                    continue;
                }
                let delta = step.min(p[j]);
                trial.copy_from_slice(&p);
                trial[i] += delta;
                trial[j] -= delta;
                let s = score(&trial);
                if s > best + 1e-15 {
                    best = s;
                    p.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    p
}

/// Convex closure of rate pairs over joint input laws: a joint-input grid
/// (small alphabets), the inner bound's product grid, and seeded hill climbs
/// along `LAMBDA_POINTS` weight directions.
pub fn outer_region(ch: &TwoWayChannel, grid: usize, restarts: usize, seed: u64) -> Result<RegionBoundary> {
    check_grid(grid)?;
    let m = ChannelMarginals::new(ch);
    let cells = m.nx1 * m.nx2;
    let mut points = inner_points(&m, grid)?;
    if cells - 1 <= MAX_SWEEP_DIM && simplex_grid_len(cells, grid) <= MAX_GRID_POINTS {
        let joint = simplex_grid(cells, grid);
        points.par_extend(joint.par_iter().map(|p| m.rates(p)));
    }
    let jobs: Vec<(usize, usize)> = (0..LAMBDA_POINTS)
        .flat_map(|l| (0..restarts).map(move |r| (l, r)))
        .collect();
    let climbed: Vec<RatePair> = jobs
        .par_iter()
        .map(|&(l, r)| {
            let lambda = l as f64 / (LAMBDA_POINTS - 1) as f64;
            let mut rng = stream_rng(seed, (l * restarts + r) as u64);
            let start = flat_dirichlet(&mut rng, cells);
            m.rates(&hill_climb(&m, lambda, start))
        })
        .collect();
    points.extend(climbed);
    to_region(&points)
}

/// Outcome of comparing the inner and outer bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coincidence {
    pub coincide: bool,
    /// Two-sided Hausdorff distance between the hulls.
    pub gap: f64,
}

impl Coincidence {
    pub fn between(inner: &RegionBoundary, outer: &RegionBoundary, tol: f64) -> Self {
        let gap = inner.hausdorff(outer);
        Self {
            coincide: gap <= tol,
            gap,
        }
    }
}

/// Whether the inner and outer bounds agree within `tol`, at default settings.
pub fn regions_coincide(ch: &TwoWayChannel, tol: f64) -> Result<Coincidence> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let inner = inner_region(ch, DEFAULT_GRID)?;
    let outer = outer_region(ch, DEFAULT_GRID, DEFAULT_RESTARTS, 0)?;
    Ok(Coincidence::between(&inner, &outer, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{binary_additive_channel, constant_output_channel, example1_channel, noiseless_crossover};
    use crate::prob::binary_entropy;
    use approx::assert_abs_diff_eq;

    /// I(X1;Y2|X2) and I(X2;Y1|X1) by enumerating the full joint law
    /// (x1, x2, y1, y2) and summing entropies.
    fn brute_force_rates(ch: &TwoWayChannel, pxx: &[f64]) -> (f64, f64) {
        let [a, b, c, d] = ch.dims();
        let mut joint = vec![0.0; a * b * c * d];
        for x1 in 0..a {
            for x2 in 0..b {
                for y1 in 0..c {
                    for y2 in 0..d {
                        joint[((x1 * b + x2) * c + y1) * d + y2] = pxx[x1 * b + x2] * ch.prob(x1, x2, y1, y2);
                    }
                }
            }
        }
        let pmf = crate::prob::Pmf::new(vec![a, b, c, d], joint).unwrap();
        (pmf.cmi_of(&[0], &[3], &[1]), pmf.cmi_of(&[1], &[2], &[0]))
    }

    #[test]
    fn canonical_rate_points() {
        let u = ProbVec::uniform(2);
        let r = inner_rate_point(&noiseless_crossover(2), &u, &u).unwrap();
        assert_eq!((r.r1, r.r2), (1.0, 1.0));
        let r = inner_rate_point(&binary_additive_channel(0.05), &u, &u).unwrap();
        assert_abs_diff_eq!(r.r1, 1.0 - binary_entropy(0.05), epsilon = 1e-12);
        assert_abs_diff_eq!(r.r2, 1.0 - binary_entropy(0.05), epsilon = 1e-12);
        let ch = example1_channel(0.05);
        let r = inner_rate_point(&ch, &u, &u).unwrap();
        let (b1, b2) = brute_force_rates(&ch, &[0.25; 4]);
        assert_abs_diff_eq!(r.r1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.r1, b1, epsilon = 1e-12);
        assert_abs_diff_eq!(r.r2, 1.0 - binary_entropy(0.05), epsilon = 1e-12);
        assert_abs_diff_eq!(r.r2, b2, epsilon = 1e-12);
        assert!(inner_rate_point(&ch, &ProbVec::uniform(3), &u).is_err());
    }

    #[test]
    fn crossover_regions_are_the_unit_square() {
        let ch = noiseless_crossover(2);
        let inner = inner_region(&ch, DEFAULT_GRID).unwrap();
        let outer = outer_region(&ch, DEFAULT_GRID, DEFAULT_RESTARTS, 0).unwrap();
        let square = RegionBoundary::rate_region(vec![[1.0, 1.0]]).unwrap();
        assert!(inner.hausdorff(&square) < 1e-12);
        assert!(outer.hausdorff(&square) < 1e-12);
        let c = regions_coincide(&ch, 1e-9).unwrap();
        assert!(c.coincide);
        assert_eq!(c.gap, 0.0);
    }

    #[test]
    fn additive_channel_bounds_coincide() {
        let ch = binary_additive_channel(0.05);
        let side = 1.0 - binary_entropy(0.05);
        let square = RegionBoundary::rate_region(vec![[side, side]]).unwrap();
        let inner = inner_region(&ch, DEFAULT_GRID).unwrap();
        let outer = outer_region(&ch, DEFAULT_GRID, DEFAULT_RESTARTS, 0).unwrap();
        assert!(inner.hausdorff(&square) < 1e-3);
        assert!(outer.hausdorff(&square) < 1e-3);
        assert!(regions_coincide(&ch, 1e-2).unwrap().coincide);
    }

    #[test]
    fn example_channel_bounds_agree() {
        // correlated inputs do not help this channel: the support functions of
        // the two bounds agree, and the hull gap is only grid discretization
        let ch = example1_channel(0.05);
        let inner = inner_region(&ch, DEFAULT_GRID).unwrap();
        let outer = outer_region(&ch, DEFAULT_GRID, DEFAULT_RESTARTS, 0).unwrap();
        for v in inner.hull() {
            assert!(outer.contains(*v, 1e-9));
        }
        for k in 0..=10 {
            let lambda = k as f64 / 10.0;
            assert!(outer.support(lambda) >= inner.support(lambda) - 1e-12);
        }
        let c = Coincidence::between(&inner, &outer, 1e-2);
        assert!(c.coincide, "gap {}", c.gap);
        assert!(c.gap > 0.0);
        let fine = inner_region(&ch, 65).unwrap();
        assert!(Coincidence::between(&fine, &outer, 1e-2).gap < c.gap);
    }

    #[test]
    fn constant_outputs_give_the_origin() {
        let r = inner_region(&constant_output_channel(2), 5).unwrap();
        assert_eq!(r.hull(), &[[0.0, 0.0]]);
    }

    #[test]
    fn nested_grids_never_shrink() {
        let ch = example1_channel(0.1);
        let regions: Vec<RegionBoundary> = [5, 9, 17].iter().map(|&g| inner_region(&ch, g).unwrap()).collect();
        for w in regions.windows(2) {
            for v in w[0].hull() {
                assert!(w[1].contains(*v, 1e-9));
            }
        }
        let outers: Vec<RegionBoundary> = [5, 9].iter().map(|&g| outer_region(&ch, g, 1, 0).unwrap()).collect();
        for v in outers[0].hull() {
            assert!(outers[1].contains(*v, 1e-9));
        }
    }

    #[test]
    fn coupling_of_outputs_does_not_matter() {
        let bsc = |y: usize, x: usize, e: f64| if y == x { 1.0 - e } else { e };
        let product = TwoWayChannel::from_fn([2, 2, 2, 2], |x1, x2, y1, y2| {
            bsc(y1, x1 ^ x2, 0.1) * bsc(y2, x1 & x2, 0.2)
        })
        .unwrap();
        let coupled = TwoWayChannel::from_fn([2, 2, 2, 2], |x1, x2, y1, y2| {
            let base = bsc(y1, x1 ^ x2, 0.1) * bsc(y2, x1 & x2, 0.2);
            let sign = if y1 == y2 { 1.0 } else { -1.0 };
            base + sign * 0.015
        })
        .unwrap();
        for p in simplex_grid(4, 5) {
            let a = joint_rate_point(&product, &p).unwrap();
            let b = joint_rate_point(&coupled, &p).unwrap();
            assert_abs_diff_eq!(a.r1, b.r1, epsilon = 1e-12);
            assert_abs_diff_eq!(a.r2, b.r2, epsilon = 1e-12);
            let (b1, b2) = brute_force_rates(&coupled, &p);
            assert_abs_diff_eq!(b.r1, b1, epsilon = 1e-9);
            assert_abs_diff_eq!(b.r2, b2, epsilon = 1e-9);
        }
        let ia = inner_region(&product, 9).unwrap();
        let ib = inner_region(&coupled, 9).unwrap();
        assert!(ia.hausdorff(&ib) < 1e-12);
    }
}
