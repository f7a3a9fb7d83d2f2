use serde::Serialize;

use crate::error::{Error, Result};

/// One operating point of a rate-distortion function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RDPoint {
    pub distortion: f64,
    pub rate: f64,
    /// Lagrange slope that produced the point (0 on the zero-rate segment).
    pub slope: f64,
}

/// A sampled rate-distortion function, ordered by increasing distortion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RDCurve {
    points: Vec<RDPoint>,
}

const SHAPE_TOL: f64 = 1e-9;

impl RDCurve {
    /// Validates ordering, monotonicity and convexity (tolerance 1e-9).
    pub fn new(points: Vec<RDPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCurve);
        }
        for w in points.windows(2) {
            if w[1].distortion < w[0].distortion {
                return Err(Error::InvalidArgument("curve distortions must be sorted".into()));
            }
            if w[1].rate > w[0].rate + SHAPE_TOL {
                return Err(Error::InvalidArgument(format!(
                    "rate increases from {} to {} between D={} and D={}",
                    w[0].rate, w[1].rate, w[0].distortion, w[1].distortion
                )));
            }
        }
        let curve = Self { points };
        let defect = curve.convexity_defect();
        if defect > SHAPE_TOL {
            return Err(Error::InvalidArgument(format!("curve is not convex (defect {defect:e})")));
        }
        Ok(curve)
    }

    /// Builds a valid curve from achievable upper estimates of a convex,
    /// nonincreasing function: rates are made nonincreasing (a scheme meeting a
    /// smaller distortion meets a larger one) and then replaced by the lower
    /// convex envelope (time sharing).
    pub fn from_upper_estimates(mut points: Vec<RDPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCurve);
        }
        points.sort_by(|a, b| a.distortion.total_cmp(&b.distortion));
        for i in 1..points.len() {
            if points[i].rate > points[i - 1].rate {
                points[i].rate = points[i - 1].rate;
            }
        }
        let hull = lower_envelope(&points);
        for p in points.iter_mut() {
            p.rate = p.rate.min(interpolate(&hull, p.distortion));
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[RDPoint] {
        &self.points
    }

    /// Largest amount by which a point lies above the chord of its neighbours.
    pub fn convexity_defect(&self) -> f64 {
        self.points
            .windows(3)
            .filter_map(|w| {
                let (a, b, c) = (w[0], w[1], w[2]);
                let span = c.distortion - a.distortion;
                (span > 0.0).then(|| {
                    let t = (b.distortion - a.distortion) / span;
                    b.rate - ((1.0 - t) * a.rate + t * c.rate)
                })
            })
            .fold(0.0, f64::max)
    }

    /// Sets each slope to that of the chord towards the next point (the last
    /// point takes the final chord, or 0 for a single point).
    pub(crate) fn fill_chord_slopes(&mut self) {
        let n = self.points.len();
        for i in 0..n {
            let (a, b) = if i + 1 < n { (i, i + 1) } else if n > 1 { (n - 2, n - 1) } else { (0, 0) };
            let span = self.points[b].distortion - self.points[a].distortion;
            self.points[i].slope = if span > 0.0 {
                (self.points[b].rate - self.points[a].rate) / span
            } else {
                0.0
            };
        }
    }

    /// Piecewise-linear rate at `d`, clamped to the end points.
    pub fn rate_at(&self, d: f64) -> f64 {
        interpolate(&self.points, d)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("D,R,slope\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.distortion, p.rate, p.slope));
        }
        out
    }
}

fn interpolate(points: &[RDPoint], d: f64) -> f64 {
    let first = points[0];
    if d <= first.distortion {
        return first.rate;
    }
    for w in points.windows(2) {
        if d <= w[1].distortion {
            let span = w[1].distortion - w[0].distortion;
            if span <= 0.0 {
                return w[1].rate;
            }
            let t = (d - w[0].distortion) / span;
            return (1.0 - t) * w[0].rate + t * w[1].rate;
        }
    }
    points[points.len() - 1].rate
}

/// Lower convex envelope of points sorted by distortion (monotone chain).
fn lower_envelope(points: &[RDPoint]) -> Vec<RDPoint> {
    let mut hull: Vec<RDPoint> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.distortion - a.distortion) * (p.rate - a.rate)
                - (b.rate - a.rate) * (p.distortion - a.distortion);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Smallest distortion at which the interpolated curve is at or below `rate`.
///
/// Returns the first grid distortion when `rate` is at least the first rate,
/// and the last grid distortion when no grid rate is that low.
pub fn rd_inverse(curve: &RDCurve, rate: f64) -> Result<f64> {
    let pts = curve.points();
    let first = pts.first().ok_or(Error::EmptyCurve)?;
    if rate >= first.rate {
        return Ok(first.distortion);
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.rate <= rate {
            let t = (a.rate - rate) / (a.rate - b.rate);
            return Ok(a.distortion + t * (b.distortion - a.distortion));
        }
    }
    Ok(pts[pts.len() - 1].distortion)
}

/// `n` evenly spaced distortions on `[lo, hi]`; a single point yields `[lo]`.
pub fn distortion_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(d: f64, r: f64) -> RDPoint {
        RDPoint {
            distortion: d,
            rate: r,
            slope: 0.0,
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(RDCurve::new(vec![]), Err(Error::EmptyCurve));
        assert!(RDCurve::new(vec![pt(0.0, 0.5), pt(0.1, 0.6)]).is_err());
        assert!(RDCurve::new(vec![pt(0.0, 1.0), pt(0.1, 0.9), pt(0.2, 0.2)]).is_err());
        assert!(RDCurve::new(vec![pt(0.0, 1.0), pt(0.1, 0.5), pt(0.2, 0.2)]).is_ok());
    }

    #[test]
    fn upper_estimates_are_repaired() {
        let c = RDCurve::from_upper_estimates(vec![pt(0.0, 1.0), pt(0.1, 0.95), pt(0.2, 0.2), pt(0.3, 0.3)])
            .unwrap();
        let r: Vec<f64> = c.points().iter().map(|p| p.rate).collect();
        assert!((r[1] - 0.6).abs() < 1e-12);
        assert!((r[3] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn inverse_edges() {
        let c = RDCurve::new(vec![pt(0.0, 1.0), pt(0.25, 0.3), pt(0.5, 0.0)]).unwrap();
        assert_eq!(rd_inverse(&c, 1.5).unwrap(), 0.0);
        assert_eq!(rd_inverse(&c, 0.0).unwrap(), 0.5);
        assert_eq!(rd_inverse(&c, -1.0).unwrap(), 0.5);
        assert!((rd_inverse(&c, 0.65).unwrap() - 0.125).abs() < 1e-12);
        let flat_tail = RDCurve::new(vec![pt(0.0, 1.0), pt(0.3, 0.0), pt(0.5, 0.0)]).unwrap();
        assert!((rd_inverse(&flat_tail, 0.0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn csv_header() {
        let c = RDCurve::new(vec![pt(0.0, 1.0)]).unwrap();
        assert!(c.to_csv().starts_with("D,R,slope\n0,1,0\n"));
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(distortion_grid(0.0, 0.5, 11)[10], 0.5);
        assert_eq!(distortion_grid(0.0, 0.5, 1), vec![0.0]);
        assert!(distortion_grid(0.0, 0.5, 0).is_empty());
    }
}
