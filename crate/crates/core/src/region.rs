//! Convex two-dimensional regions built from finite point clouds.
//!
//! Rate regions are closed toward the origin, distortion regions toward a
//! corner of worst-case distortions. Both are stored as a counterclockwise
//! convex hull.

use serde::Serialize;

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

/// Direction in which a region is comprehensive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Contains everything componentwise below a member, down to the origin.
    Rate,
    /// Contains everything componentwise above a member, up to `corner`.
    Distortion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionBoundary {
    points: Vec<Point2>,
    hull: Vec<Point2>,
    orientation: Orientation,
    corner: Point2,
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counterclockwise hull without collinear vertices (Andrew's monotone chain).
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

impl RegionBoundary {
    /// Rate region: hull of the points, their axis projections and the origin.
    pub fn rate_region(points: Vec<Point2>) -> Result<Self> {
        if points.iter().any(|p| !(p[0] >= 0.0 && p[1] >= 0.0) || !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidArgument("rate points must be finite and nonnegative".into()));
        }
        let mut cloud = vec![[0.0, 0.0]];
        for p in &points {
            cloud.extend([*p, [p[0], 0.0], [0.0, p[1]]]);
        }
        let hull = convex_hull(&cloud);
        let corner = [
            cloud.iter().map(|p| p[0]).fold(0.0, f64::max),
            cloud.iter().map(|p| p[1]).fold(0.0, f64::max),
        ];
        Ok(Self {
            points,
            hull,
            orientation: Orientation::Rate,
            corner,
        })
    }

    /// Distortion region closed upward to `corner`: hull of the points, their
    /// projections onto the corner's edges, and the corner itself.
    pub fn distortion_region(points: Vec<Point2>, corner: Point2) -> Result<Self> {
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidArgument("distortion points must be finite".into()));
        }
        let corner = [
            points.iter().map(|p| p[0]).fold(corner[0], f64::max),
            points.iter().map(|p| p[1]).fold(corner[1], f64::max),
        ];
        let mut cloud = vec![corner];
        for p in &points {
            cloud.extend([*p, [p[0], corner[1]], [corner[0], p[1]]]);
        }
        Ok(Self {
            hull: convex_hull(&cloud),
            points,
            orientation: Orientation::Distortion,
            corner,
        })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn hull(&self) -> &[Point2] {
        &self.hull
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn corner(&self) -> Point2 {
        self.corner
    }

    fn clamp(&self, p: Point2) -> Point2 {
        match self.orientation {
            Orientation::Rate => [p[0].max(0.0), p[1].max(0.0)],
            Orientation::Distortion => [p[0].min(self.corner[0]), p[1].min(self.corner[1])],
        }
    }

    /// Euclidean distance from `p` to the region (0 inside).
    pub fn distance(&self, p: Point2) -> f64 {
        self.hull_distance(self.clamp(p))
    }

    fn hull_distance(&self, p: Point2) -> f64 {
        let h = &self.hull;
        match h.len() {
            0 => f64::INFINITY,
            1 => segment_distance(p, h[0], h[0]),
            2 => segment_distance(p, h[0], h[1]),
            n => {
                let inside = (0..n).all(|i| cross(h[i], h[(i + 1) % n], p) >= 0.0);
                if inside {
                    0.0
                } else {
                    (0..n)
                        .map(|i| segment_distance(p, h[i], h[(i + 1) % n]))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    /// Membership with absolute tolerance `tol`.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// Maximum of `lambda * x + (1 - lambda) * y` over the hull.
    pub fn support(&self, lambda: f64) -> f64 {
        self.hull
            .iter()
            .map(|p| lambda * p[0] + (1.0 - lambda) * p[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Points along the hull boundary, each edge split into `per_edge` pieces.
    pub fn boundary_samples(&self, per_edge: usize) -> Vec<Point2> {
        let h = &self.hull;
        let per_edge = per_edge.max(1);
        if h.len() < 2 {
            return h.clone();
        }
        let mut out = Vec::with_capacity(h.len() * per_edge);
        for i in 0..h.len() {
            let (a, b) = (h[i], h[(i + 1) % h.len()]);
            for k in 0..per_edge {
                let t = k as f64 / per_edge as f64;
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        out
    }

    /// Two-sided Hausdorff distance between the two convex regions.
    pub fn hausdorff(&self, other: &RegionBoundary) -> f64 {
        let one = self.hull.iter().map(|&v| other.distance(v)).fold(0.0, f64::max);
        let two = other.hull.iter().map(|&v| self.distance(v)).fold(0.0, f64::max);
        one.max(two)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,x,y\n");
        for p in &self.points {
            out.push_str(&format!("point,{},{}\n", p[0], p[1]));
        }
        for p in &self.hull {
            out.push_str(&format!("hull,{},{}\n", p[0], p[1]));
        }
        out
    }
}
