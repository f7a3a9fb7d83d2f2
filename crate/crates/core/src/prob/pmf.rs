//! Dense multi-axis probability mass functions and the information measures
//! defined on groups of their axes.

use crate::error::{invalid, Result};

/// Absolute tolerance on total mass when validating user-supplied laws.
pub const SUM_TOL: f64 = 1e-12;

/// Row-major strides for `shape` (last axis fastest).
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Advance a row-major multi-index; returns false after the last entry.
pub(crate) fn advance(idx: &mut [usize], shape: &[usize]) -> bool {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Sum of `data` (laid out with `shape`) onto `axes`, in the order given.
pub(crate) fn marginalize(shape: &[usize], data: &[f64], axes: &[usize]) -> Vec<f64> {
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let out_strides = strides(&out_shape);
    let mut out = vec![0.0; out_shape.iter().product()];
    if data.is_empty() {
        return out;
    }
    let mut idx = vec![0; shape.len()];
    for &p in data {
        if p != 0.0 {
            let o: usize = axes
                .iter()
                .zip(&out_strides)
                .map(|(&a, &s)| idx[a] * s)
                .sum();
            out[o] += p;
        }
        advance(&mut idx, shape);
    }
    out
}

/// Entropy in bits of an unnormalized-safe mass vector; 0 log 0 = 0.
pub(crate) fn entropy_bits(mass: &[f64]) -> f64 {
    let h: f64 = mass
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Check nonnegativity and unit total within [`SUM_TOL`], then renormalize exactly.
pub(crate) fn normalize(what: &str, mass: &mut [f64]) -> Result<()> {
    if mass.is_empty() {
        return Err(invalid(what, "empty"));
    }
    if let Some(bad) = mass.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(invalid(what, format!("entry {bad} is negative or not finite")));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(invalid(what, format!("total mass {total} differs from 1")));
    }
    mass.iter_mut().for_each(|p| *p /= total);
    Ok(())
}

/// A joint pmf over a product of finite alphabets, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    shape: Vec<usize>,
    mass: Vec<f64>,
}

impl Pmf {
    pub fn new(shape: Vec<usize>, mut mass: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(invalid("pmf", "every axis needs at least one symbol"));
        }
        let n: usize = shape.iter().product();
        if n != mass.len() {
            return Err(crate::Error::ShapeMismatch(format!(
                "shape {shape:?} needs {n} entries, got {}",
                mass.len()
            )));
        }
        normalize("pmf", &mut mass)?;
        Ok(Self { shape, mass })
    }

    /// Wrap mass produced by exact internal arithmetic; skips validation.
    pub(crate) fn from_raw(shape: Vec<usize>, mass: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), mass.len());
        Self { shape, mass }
    }

    /// Outer product of two marginals.
    pub fn product(a: &[f64], b: &[f64]) -> Self {
        let mass = a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect();
        Self::from_raw(vec![a.len(), b.len()], mass)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let st = strides(&self.shape);
        self.mass[idx.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>()]
    }

    /// Calls `f(multi_index, mass)` for every entry in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut idx = vec![0; self.shape.len()];
        for &p in &self.mass {
            f(&idx, p);
            advance(&mut idx, &self.shape);
        }
    }

    /// Expectation of `f` over the law.
    pub fn expect(&self, mut f: impl FnMut(&[usize]) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each(|idx, p| {
            if p > 0.0 {
                acc += p * f(idx);
            }
        });
        acc
    }

    /// Marginal law of `axes`, with output axes in the order listed.
    pub fn marginal(&self, axes: &[usize]) -> Pmf {
        let shape = axes.iter().map(|&a| self.shape[a]).collect();
        Pmf::from_raw(shape, marginalize(&self.shape, &self.mass, axes))
    }

    /// Joint entropy H(axes) in bits. An empty axis set has zero entropy.
    pub fn entropy_of(&self, axes: &[usize]) -> f64 {
        if axes.is_empty() {
            return 0.0;
        }
        entropy_bits(&marginalize(&self.shape, &self.mass, axes))
    }

    /// H(of | given).
    pub fn conditional_entropy_of(&self, of: &[usize], given: &[usize]) -> f64 {
        let both: Vec<usize> = of.iter().chain(given).copied().collect();
        (self.entropy_of(&both) - self.entropy_of(given)).max(0.0)
    }

    /// I(a; b) in bits.
    pub fn mutual_information_of(&self, a: &[usize], b: &[usize]) -> f64 {
        self.cmi_of(a, b, &[])
    }

    /// I(a; b | c) in bits, evaluated as an expected log-likelihood ratio
    /// over the (a, b, c) marginal with each group flattened into one axis.
    pub fn cmi_of(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        let na: usize = a.iter().map(|&k| self.shape[k]).product();
        let nb: usize = b.iter().map(|&k| self.shape[k]).product();
        let nc: usize = c.iter().map(|&k| self.shape[k]).product();
        let axes: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
        let abc = marginalize(&self.shape, &self.mass, &axes);
        let mut ac = vec![0.0; na * nc];
        let mut bc = vec![0.0; nb * nc];
        let mut pc = vec![0.0; nc];
        for i in 0..na {
            for j in 0..nb {
                for k in 0..nc {
                    let p = abc[(i * nb + j) * nc + k];
                    ac[i * nc + k] += p;
                    bc[j * nc + k] += p;
                    pc[k] += p;
                }
            }
        }
        let mut acc = 0.0;
        for i in 0..na {
            for j in 0..nb {
                for k in 0..nc {
                    let p = abc[(i * nb + j) * nc + k];
                    if p > 0.0 {
                        acc += p * ((p * pc[k]) / (ac[i * nc + k] * bc[j * nc + k])).log2();
                    }
                }
            }
        }
        acc.max(0.0)
    }
}
