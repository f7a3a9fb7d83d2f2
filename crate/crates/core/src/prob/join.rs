//! Exact joint laws built by multiplying a chain of conditional factors.
//!
//! Factors are multiplied in insertion order. After each product, variables
//! that are neither requested nor referenced by a later factor are summed
//! out, so the working tensor stays small even when the full joint (e.g. the
//! eight-variable law of a hybrid scheme) would not fit in memory.

use super::pmf::{marginalize, Pmf};
use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-9;

/// One conditional factor P(children | parents).
///
/// The table is laid out row-major over `[parents..., children...]`. A row
/// (one parent assignment) filled with NaN is undefined: reading it under
/// positive mass is an error.
#[derive(Debug, Clone)]
pub struct Factor {
    children: Vec<usize>,
    parents: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    pub fn new(children: Vec<usize>, parents: Vec<usize>, table: Vec<f64>) -> Self {
        Self {
            children,
            parents,
            table,
        }
    }

    /// Deterministic factor `child = map(parent assignment)`.
    pub fn deterministic(
        child: usize,
        child_size: usize,
        parents: Vec<usize>,
        parent_sizes: &[usize],
        map: impl Fn(&[usize]) -> usize,
    ) -> Self {
        let rows: usize = parent_sizes.iter().product();
        let mut table = vec![0.0; rows * child_size];
        let mut idx = vec![0; parent_sizes.len()];
        for r in 0..rows {
            table[r * child_size + map(&idx)] = 1.0;
            super::pmf::advance(&mut idx, parent_sizes);
        }
        Self::new(vec![child], parents, table)
    }
}

/// Variables with declared alphabet sizes plus the factors defining their law.
#[derive(Debug, Clone)]
pub struct Network {
    sizes: Vec<usize>,
    factors: Vec<Factor>,
    defined: Vec<bool>,
}

impl Network {
    pub fn new(sizes: Vec<usize>) -> Self {
        let n = sizes.len();
        Self {
            sizes,
            factors: Vec::new(),
            defined: vec![false; n],
        }
    }

    /// Appends a factor. Its parents must already be defined by earlier
    /// factors and its children must be new.
    pub fn push(&mut self, factor: Factor) -> Result<&mut Self> {
        let nvars = self.sizes.len();
        for &v in factor.children.iter().chain(&factor.parents) {
            if v >= nvars {
                return Err(Error::ShapeMismatch(format!("unknown variable {v}")));
            }
        }
        if let Some(&p) = factor.parents.iter().find(|&&p| !self.defined[p]) {
            return Err(Error::InvalidArgument(format!(
                "parent variable {p} is not defined by an earlier factor"
            )));
        }
        if let Some(&c) = factor.children.iter().find(|&&c| self.defined[c]) {
            return Err(Error::InvalidArgument(format!("variable {c} is defined twice")));
        }
        let rows: usize = factor.parents.iter().map(|&p| self.sizes[p]).product();
        let width: usize = factor.children.iter().map(|&c| self.sizes[c]).product();
        if factor.table.len() != rows * width {
            return Err(Error::ShapeMismatch(format!(
                "factor over {:?} given {:?} needs {} entries, got {}",
                factor.children,
                factor.parents,
                rows * width,
                factor.table.len()
            )));
        }
        for (r, row) in factor.table.chunks(width).enumerate() {
            if row.iter().any(|x| x.is_nan()) {
                continue;
            }
            let total: f64 = row.iter().sum();
            if row.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > ROW_TOL {
                return Err(crate::error::invalid(
                    "factor",
                    format!("row {r} of factor over {:?} sums to {total}", factor.children),
                ));
            }
        }
        for &c in &factor.children {
            self.defined[c] = true;
        }
        self.factors.push(factor);
        Ok(self)
    }

    /// Joint law of `keep` (in that order), eliminating other variables eagerly.
    pub fn joint(&self, keep: &[usize]) -> Result<Pmf> {
        if let Some(&v) = keep.iter().find(|&&v| v >= self.sizes.len() || !self.defined[v]) {
            return Err(Error::InvalidArgument(format!("variable {v} is not defined")));
        }
        let mut vars: Vec<usize> = Vec::new();
        let mut data: Vec<f64> = vec![1.0];
        for (k, factor) in self.factors.iter().enumerate() {
            // product with the new factor: append children axes
            let width: usize = factor.children.iter().map(|&c| self.sizes[c]).product();
            let shape: Vec<usize> = vars.iter().map(|&v| self.sizes[v]).collect();
            let parent_pos: Vec<usize> = factor
                .parents
                .iter()
                .map(|p| vars.iter().position(|v| v == p).expect("parent in scope"))
                .collect();
            let parent_strides = super::pmf::strides(
                &factor.parents.iter().map(|&p| self.sizes[p]).collect::<Vec<_>>(),
            );
            let mut next = Vec::with_capacity(data.len() * width);
            let mut idx = vec![0; shape.len()];
            for &p in &data {
                let row: usize = parent_pos
                    .iter()
                    .zip(&parent_strides)
                    .map(|(&pos, &s)| idx[pos] * s)
                    .sum();
                let probs = &factor.table[row * width..(row + 1) * width];
                if p > 0.0 && probs[0].is_nan() {
                    return Err(Error::UndefinedRow { row });
                }
                next.extend(probs.iter().map(|&q| if p == 0.0 { 0.0 } else { p * q }));
                super::pmf::advance(&mut idx, &shape);
            }
            vars.extend(&factor.children);
            data = next;

            // sum out what is no longer needed
            let later = &self.factors[k + 1..];
            let needed: Vec<usize> = (0..vars.len())
                .filter(|&i| {
                    let v = vars[i];
                    keep.contains(&v) || later.iter().any(|f| f.parents.contains(&v))
                })
                .collect();
            if needed.len() < vars.len() {
                let shape: Vec<usize> = vars.iter().map(|&v| self.sizes[v]).collect();
                data = marginalize(&shape, &data, &needed);
                vars = needed.iter().map(|&i| vars[i]).collect();
            }
        }
        let shape: Vec<usize> = vars.iter().map(|&v| self.sizes[v]).collect();
        let order: Vec<usize> = keep
            .iter()
            .map(|k| vars.iter().position(|v| v == k).expect("kept variable in scope"))
            .collect();
        let out = marginalize(&shape, &data, &order);
        Ok(Pmf::from_raw(keep.iter().map(|&v| self.sizes[v]).collect(), out))
    }
}

/// Table of a [`CondPMF`](super::CondPMF) as a factor, NaN rows for undefined inputs.
pub(crate) fn cond_table(cond: &super::CondPMF) -> Vec<f64> {
    (0..cond.in_size())
        .flat_map(|i| match cond.row_opt(i) {
            Some(r) => r.to_vec(),
            None => vec![f64::NAN; cond.out_size()],
        })
        .collect()
}
