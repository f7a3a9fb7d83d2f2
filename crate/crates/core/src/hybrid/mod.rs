//! Hybrid digital/analog coding over a two-way channel.
//!
//! User j draws a digital index U_j from P(U_j | S_j), sends X_j = f_j(U_j, S_j)
//! and, after receiving Y_j, reconstructs the other user's source as
//! g_j(U_{j'}, U_j, S_j, Y_j). A scheme is achievable when
//! I(S_j; U_j | S_{j'}, U_{j'}) < I(U_j; Y_{j'} | S_{j'}, U_{j'}) for both users.

mod construct;
mod search;

pub use construct::{
    assemble, bayes_decoders, make_correlation_preserving, make_sscc, make_uncoded, sscc_code, uncoded_code,
    DecoderRule, ReducedConditions, SsccVariant, UserCode,
};
pub use search::{search_hybrid, Found, SearchOptions, SearchResult, MAX_UNCODED_MAPS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{cond_table, CondPMF, DistortionMatrix, Factor, JointSourcePMF, Network, Pmf, TwoWayChannel, User};

/// Strict inequality slack in the achievability test.
pub const STRICT_TOL: f64 = 1e-9;
/// Below this the digital index carries no information and the condition is vacuous.
pub const VACUOUS_TOL: f64 = 1e-12;

/// Decoder table g_j indexed [u_other][u_own][s_own][y_own].
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderTable {
    dims: [usize; 4],
    table: Vec<usize>,
}

impl DecoderTable {
    pub fn new(dims: [usize; 4], table: Vec<usize>) -> Result<Self> {
        if table.len() != dims.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(format!("decoder table needs {} entries", dims.iter().product::<usize>())));
        }
        Ok(Self { dims, table })
    }

    pub fn constant(dims: [usize; 4], value: usize) -> Self {
        Self {
            dims,
            table: vec![value; dims.iter().product()],
        }
    }

    pub fn from_fn(dims: [usize; 4], f: impl Fn(usize, usize, usize, usize) -> usize) -> Self {
        let mut table = Vec::with_capacity(dims.iter().product());
        for a in 0..dims[0] {
            for b in 0..dims[1] {
                for c in 0..dims[2] {
                    for d in 0..dims[3] {
                        table.push(f(a, b, c, d));
                    }
                }
            }
        }
        Self { dims, table }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn get(&self, u_other: usize, u_own: usize, s: usize, y: usize) -> usize {
        let [_, b, c, d] = self.dims;
        self.table[((u_other * b + u_own) * c + s) * d + y]
    }

    fn nested(&self) -> Vec<Vec<Vec<Vec<usize>>>> {
        let [a, b, c, d] = self.dims;
        (0..a)
            .map(|i| (0..b).map(|j| (0..c).map(|k| (0..d).map(|l| self.get(i, j, k, l)).collect()).collect()).collect())
            .collect()
    }
}

/// A complete single-letter hybrid scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridScheme {
    /// P(U_j | S_j) for j = 1, 2.
    pub test_channels: [CondPMF; 2],
    /// f_j indexed [u][s].
    pub encoders: [Vec<Vec<usize>>; 2],
    /// g_1 reconstructs S2 at user 1, g_2 reconstructs S1 at user 2.
    pub decoders: [DecoderTable; 2],
}

impl HybridScheme {
    pub fn aux_sizes(&self) -> [usize; 2] {
        [self.test_channels[0].out_size(), self.test_channels[1].out_size()]
    }

    /// Checks every table against the source, channel and distortion shapes.
    pub fn validate(
        &self,
        src: &JointSourcePMF,
        ch: &TwoWayChannel,
        d1: &DistortionMatrix,
        d2: &DistortionMatrix,
    ) -> Result<()> {
        crate::prob::check_model_shapes(src, d1, d2)?;
        let u = self.aux_sizes();
        let d = [d1, d2];
        for user in User::BOTH {
            let j = user.index();
            let o = user.other().index();
            let (ns, nx, ny) = (src.size(user), ch.input_size(user), ch.output_size(user));
            if self.test_channels[j].in_size() != ns {
                return Err(Error::ShapeMismatch(format!("PU{}_S{} has {} rows, |S{}| = {ns}", j + 1, j + 1, self.test_channels[j].in_size(), j + 1)));
            }
            let f = &self.encoders[j];
            if f.len() != u[j] || f.iter().any(|row| row.len() != ns) {
                return Err(Error::ShapeMismatch(format!("f{} must be a {}x{ns} table", j + 1, u[j])));
            }
            if let Some(x) = f.iter().flatten().find(|&&x| x >= nx) {
                return Err(Error::ShapeMismatch(format!("f{} emits input {x}, |X{}| = {nx}", j + 1, j + 1)));
            }
            let g = &self.decoders[j];
            let want = [u[o], u[j], ns, ny];
            if g.dims() != want {
                return Err(Error::ShapeMismatch(format!("g{} has dims {:?}, expected {want:?}", j + 1, g.dims())));
            }
            let nr = d[o].recon_size();
            if let Some(v) = g.table.iter().find(|&&v| v >= nr) {
                return Err(Error::ShapeMismatch(format!("g{} emits reconstruction {v}, only {nr} exist", j + 1)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> SchemeJson {
        let rows = |c: &CondPMF| (0..c.in_size()).map(|s| c.row_opt(s).map(<[f64]>::to_vec)).collect();
        SchemeJson {
            u1: self.aux_sizes()[0],
            u2: self.aux_sizes()[1],
            pu1_s1: rows(&self.test_channels[0]),
            pu2_s2: rows(&self.test_channels[1]),
            f1: self.encoders[0].clone(),
            f2: self.encoders[1].clone(),
            g1: self.decoders[0].nested(),
            g2: self.decoders[1].nested(),
        }
    }

    pub fn from_json(json: &SchemeJson) -> Result<Self> {
        let cond = |rows: &Vec<Option<Vec<f64>>>, k: usize, name: &str| -> Result<CondPMF> {
            let c = CondPMF::with_undefined(rows.clone())?;
            if c.out_size() != k {
                return Err(Error::ShapeMismatch(format!("{name} rows have {} entries, declared size {k}", c.out_size())));
            }
            Ok(c)
        };
        let table = |g: &Vec<Vec<Vec<Vec<usize>>>>, name: &str| -> Result<DecoderTable> {
            let a = g.len();
            let b = g.first().map_or(0, Vec::len);
            let c = g.first().and_then(|x| x.first()).map_or(0, Vec::len);
            let d = g.first().and_then(|x| x.first()).and_then(|x| x.first()).map_or(0, Vec::len);
            let ragged = g.iter().any(|x| {
                x.len() != b || x.iter().any(|y| y.len() != c || y.iter().any(|z| z.len() != d))
            });
            if ragged {
                return Err(Error::ShapeMismatch(format!("{name} is ragged")));
            }
            DecoderTable::new([a, b, c, d], g.iter().flatten().flatten().flatten().copied().collect())
        };
        Ok(Self {
            test_channels: [cond(&json.pu1_s1, json.u1, "PU1_S1")?, cond(&json.pu2_s2, json.u2, "PU2_S2")?],
            encoders: [json.f1.clone(), json.f2.clone()],
            decoders: [table(&json.g1, "g1")?, table(&json.g2, "g2")?],
        })
    }

    /// Joint law of (S1, S2, U1, U2, Y1, Y2).
    pub fn joint_law(&self, src: &JointSourcePMF, ch: &TwoWayChannel) -> Result<Pmf> {
        let [ns1, ns2] = [src.size(User::One), src.size(User::Two)];
        let [nu1, nu2] = self.aux_sizes();
        let [nx1, nx2, ny1, ny2] = ch.dims();
        // S1 S2 U1 U2 X1 X2 Y1 Y2
        let mut net = Network::new(vec![ns1, ns2, nu1, nu2, nx1, nx2, ny1, ny2]);
        net.push(Factor::new(vec![0, 1], vec![], src.as_pmf().mass().to_vec()))?;
        net.push(Factor::new(vec![2], vec![0], cond_table(&self.test_channels[0])))?;
        net.push(Factor::new(vec![3], vec![1], cond_table(&self.test_channels[1])))?;
        let f1 = &self.encoders[0];
        let f2 = &self.encoders[1];
        net.push(Factor::deterministic(4, nx1, vec![2, 0], &[nu1, ns1], |i| f1[i[0]][i[1]]))?;
        net.push(Factor::deterministic(5, nx2, vec![3, 1], &[nu2, ns2], |i| f2[i[0]][i[1]]))?;
        net.push(Factor::new(vec![6, 7], vec![4, 5], ch.as_flat().to_vec()))?;
        net.joint(&[0, 1, 2, 3, 6, 7])
    }
}

/// Wire format of a [`HybridScheme`]; rows of undefined conditionals are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeJson {
    #[serde(rename = "U1")]
    pub u1: usize,
    #[serde(rename = "U2")]
    pub u2: usize,
    #[serde(rename = "PU1_S1")]
    pub pu1_s1: Vec<Option<Vec<f64>>>,
    #[serde(rename = "PU2_S2")]
    pub pu2_s2: Vec<Option<Vec<f64>>>,
    pub f1: Vec<Vec<usize>>,
    pub f2: Vec<Vec<usize>>,
    pub g1: Vec<Vec<Vec<Vec<usize>>>>,
    pub g2: Vec<Vec<Vec<Vec<usize>>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AchievabilityReport {
    /// I(S1; U1 | S2, U2)
    pub lhs1: f64,
    /// I(U1; Y2 | S2, U2)
    pub rhs1: f64,
    /// I(S2; U2 | S1, U1)
    pub lhs2: f64,
    /// I(U2; Y1 | S1, U1)
    pub rhs2: f64,
    /// E[d1(S1, S1_hat)], S1 reconstructed by user 2.
    pub d1: f64,
    /// E[d2(S2, S2_hat)], S2 reconstructed by user 1.
    pub d2: f64,
    pub feasible1: bool,
    pub feasible2: bool,
    /// Smallest rhs - lhs over conditions with lhs above the vacuous threshold.
    pub margin: Option<f64>,
}

impl AchievabilityReport {
    pub fn feasible(&self) -> bool {
        self.feasible1 && self.feasible2
    }

    pub fn distortions(&self) -> [f64; 2] {
        [self.d1, self.d2]
    }

    /// Whether the scheme is feasible and meets `target` within `tol`.
    pub fn meets(&self, target: [f64; 2], tol: f64) -> bool {
        self.feasible() && self.d1 <= target[0] + tol && self.d2 <= target[1] + tol
    }
}

pub fn condition_holds(lhs: f64, rhs: f64) -> bool {
    lhs < rhs - STRICT_TOL || lhs <= VACUOUS_TOL
}

/// Exact achievability quantities and distortions of `sch`.
pub fn evaluate_scheme(
    src: &JointSourcePMF,
    ch: &TwoWayChannel,
    sch: &HybridScheme,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
) -> Result<AchievabilityReport> {
    sch.validate(src, ch, d1, d2)?;
    let joint = sch.joint_law(src, ch)?;
    report_from_joint(&joint, sch, d1, d2)
}

pub(crate) fn report_from_joint(
    joint: &Pmf,
    sch: &HybridScheme,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
) -> Result<AchievabilityReport> {
    // axes: 0 S1, 1 S2, 2 U1, 3 U2, 4 Y1, 5 Y2
    let lhs1 = joint.cmi_of(&[0], &[2], &[1, 3]);
    let rhs1 = joint.cmi_of(&[2], &[5], &[1, 3]);
    let lhs2 = joint.cmi_of(&[1], &[3], &[0, 2]);
    let rhs2 = joint.cmi_of(&[3], &[4], &[0, 2]);
    let [g1, g2] = &sch.decoders;
    let dist1 = joint.expect(|i| d1.get(i[0], g2.get(i[2], i[3], i[1], i[5])));
    let dist2 = joint.expect(|i| d2.get(i[1], g1.get(i[3], i[2], i[0], i[4])));
    let active: Vec<f64> = [(lhs1, rhs1), (lhs2, rhs2)]
        .iter()
        .filter(|(l, _)| *l > VACUOUS_TOL)
        .map(|(l, r)| r - l)
        .collect();
    Ok(AchievabilityReport {
        lhs1,
        rhs1,
        lhs2,
        rhs2,
        d1: dist1,
        d2: dist2,
        feasible1: condition_holds(lhs1, rhs1),
        feasible2: condition_holds(lhs2, rhs2),
        margin: active.into_iter().reduce(f64::min),
    })
}
