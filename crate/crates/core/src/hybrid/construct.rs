//! Special-case schemes: uncoded, separate source-channel coding, correlation
//! preserving, and mixtures of per-user codes with Bayes decoders.

use serde::Serialize;

use super::{condition_holds, DecoderTable, HybridScheme};
use crate::error::{Error, Result};
use crate::prob::{
    cond_table, conditional_entropy, CondPMF, DistortionMatrix, Factor, JointSourcePMF, Network, Pmf, ProbVec,
    TwoWayChannel, User,
};
use crate::rd::{rd_test_channel, wz_rd, WzOptions};
use crate::twc::inner_rate_point;

/// How a decoder turns its posterior into a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecoderRule {
    /// Most probable source symbol (lowest index on ties).
    Map,
    /// Posterior mean of the numeric source labels, rounded to the nearest
    /// numeric reconstruction label.
    Mmse,
    /// Reconstruction minimizing expected distortion (lowest index on ties).
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SsccVariant {
    /// Standard rate-distortion test channels; requires independent sources.
    Independent,
    WynerZiv,
}

/// The two sides of each achievability condition in a special case's own terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedConditions {
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub feasible: [bool; 2],
}

impl ReducedConditions {
    fn new(lhs: [f64; 2], rhs: [f64; 2]) -> Self {
        Self {
            lhs,
            rhs,
            feasible: [condition_holds(lhs[0], rhs[0]), condition_holds(lhs[1], rhs[1])],
        }
    }
}

/// One user's half of a scheme: P(U | S) and the encoder table f[u][s].
#[derive(Debug, Clone, PartialEq)]
pub struct UserCode {
    pub test_channel: CondPMF,
    pub encoder: Vec<Vec<usize>>,
}

/// U constant, X = S.
pub fn uncoded_code(ns: usize, nx: usize) -> Result<UserCode> {
    if ns != nx {
        return Err(Error::ShapeMismatch(format!(
            "uncoded transmission needs |X| = |S|, got {nx} and {ns}"
        )));
    }
    Ok(UserCode {
        test_channel: CondPMF::constant(ns, &ProbVec::point(1, 0)),
        encoder: vec![(0..ns).collect()],
    })
}

/// U = (V, W) with V ~ `v` independent of the source, W ~ `w`(. | S), and X = V.
/// The index of (v, w) is `v * |W| + w`.
pub fn sscc_code(v: &ProbVec, w: &CondPMF) -> UserCode {
    let (nv, nw, ns) = (v.len(), w.out_size(), w.in_size());
    let rows = (0..ns)
        .map(|s| {
            w.row_opt(s).map(|wr| {
                (0..nv * nw)
                    .map(|u| v.as_slice()[u / nw] * wr[u % nw])
                    .collect::<Vec<f64>>()
            })
        })
        .collect();
    UserCode {
        test_channel: CondPMF::from_rows_unchecked(nv * nw, rows),
        encoder: (0..nv * nw).map(|u| vec![u / nw; ns]).collect(),
    }
}

fn placeholder_decoders(src: &JointSourcePMF, ch: &TwoWayChannel, u: [usize; 2]) -> [DecoderTable; 2] {
    [
        DecoderTable::constant([u[1], u[0], src.size(User::One), ch.output_size(User::One)], 0),
        DecoderTable::constant([u[0], u[1], src.size(User::Two), ch.output_size(User::Two)], 0),
    ]
}

/// Decoders chosen by `rule` from the exact posterior of the scheme's joint law.
/// Cells never reached with positive probability decode to index 0.
pub fn bayes_decoders(
    joint: &Pmf,
    src: &JointSourcePMF,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
    rule: DecoderRule,
) -> Result<[DecoderTable; 2]> {
    // joint axes: 0 S1, 1 S2, 2 U1, 3 U2, 4 Y1, 5 Y2
    let g1 = decoder_for(joint, &[3, 2, 0, 4, 1], d2, src, User::Two, rule)?;
    let g2 = decoder_for(joint, &[2, 3, 1, 5, 0], d1, src, User::One, rule)?;
    Ok([g1, g2])
}

/// `axes` lists the decoder's four inputs followed by the reconstructed source.
fn decoder_for(
    joint: &Pmf,
    axes: &[usize],
    d: &DistortionMatrix,
    src: &JointSourcePMF,
    target: User,
    rule: DecoderRule,
) -> Result<DecoderTable> {
    let m = joint.marginal(axes);
    let shape = m.shape();
    let dims = [shape[0], shape[1], shape[2], shape[3]];
    let ns = shape[4];
    let nr = d.recon_size();
    let mass = m.mass();
    let values = match rule {
        DecoderRule::Mmse => {
            let sv = src.alphabet(target).numeric_values().ok_or_else(|| {
                Error::Unsupported("MMSE decoding needs a numeric source alphabet".into())
            })?;
            let rv = d.recon_alphabet().numeric_values().ok_or_else(|| {
                Error::Unsupported("MMSE decoding needs a numeric reconstruction alphabet".into())
            })?;
            Some((sv, rv))
        }
        DecoderRule::Map if nr != ns => {
            return Err(Error::Unsupported(
                "MAP decoding needs the reconstruction alphabet to be the source alphabet".into(),
            ))
        }
        _ => None,
    };
    let cells = dims.iter().product::<usize>();
    let mut table = Vec::with_capacity(cells);
    for c in 0..cells {
        let post = &mass[c * ns..(c + 1) * ns];
        let total: f64 = post.iter().sum();
        if total <= 0.0 {
            table.push(0);
            continue;
        }
        let pick = match rule {
            DecoderRule::Map => argbest(ns, |s| -post[s]),
            DecoderRule::Bayes => argbest(nr, |r| (0..ns).map(|s| post[s] * d.get(s, r)).sum()),
            DecoderRule::Mmse => {
                let (sv, rv) = values.as_ref().expect("numeric values present");
                let mean = (0..ns).map(|s| post[s] * sv[s]).sum::<f64>() / total;
                argbest(nr, |r| (rv[r] - mean).abs())
            }
        };
        table.push(pick);
    }
    DecoderTable::new(dims, table)
}

/// Index minimizing `cost`, lowest index on ties.
fn argbest(n: usize, cost: impl Fn(usize) -> f64) -> usize {
    let mut best = (f64::INFINITY, 0);
    for i in 0..n {
        let c = cost(i);
        if c < best.0 {
            best = (c, i);
        }
    }
    best.1
}

/// Combines two user codes and derives decoders with `rule`.
pub fn assemble(
    src: &JointSourcePMF,
    ch: &TwoWayChannel,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
    codes: [UserCode; 2],
    rule: DecoderRule,
) -> Result<HybridScheme> {
    let [c1, c2] = codes;
    let u = [c1.test_channel.out_size(), c2.test_channel.out_size()];
    let mut sch = HybridScheme {
        test_channels: [c1.test_channel, c2.test_channel],
        encoders: [c1.encoder, c2.encoder],
        decoders: placeholder_decoders(src, ch, u),
    };
    sch.validate(src, ch, d1, d2)?;
    let joint = sch.joint_law(src, ch)?;
    sch.decoders = bayes_decoders(&joint, src, d1, d2, rule)?;
    Ok(sch)
}

/// Both users send their source uncoded and decode with `rule`.
pub fn make_uncoded(
    src: &JointSourcePMF,
    ch: &TwoWayChannel,
    rule: DecoderRule,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
) -> Result<HybridScheme> {
    let codes = [
        uncoded_code(src.size(User::One), ch.input_size(User::One))?,
        uncoded_code(src.size(User::Two), ch.input_size(User::Two))?,
    ];
    assemble(src, ch, d1, d2, codes, rule)
}

/// Compression half of a separate scheme: W's test channel, its rate and the
/// reconstruction table indexed [s_other][w].
#[derive(Debug, Clone)]
pub(crate) struct SsccPart {
    pub w: CondPMF,
    pub rate: f64,
    pub decode: Vec<Vec<usize>>,
}

pub(crate) fn sscc_part(
    src: &JointSourcePMF,
    user: User,
    d: &DistortionMatrix,
    target: f64,
    variant: SsccVariant,
    wz: &WzOptions,
) -> Result<SsccPart> {
    let nside = src.size(user.other());
    match variant {
        SsccVariant::Independent => {
            let (pt, w) = rd_test_channel(&src.marginal(user), d, target)?;
            Ok(SsccPart {
                decode: vec![(0..w.out_size()).collect(); nside],
                w,
                rate: pt.rate,
            })
        }
        SsccVariant::WynerZiv => {
            let r = wz_rd(src, user, d, target, wz)?;
            Ok(SsccPart {
                w: r.scheme.test_channel,
                rate: r.rate,
                decode: r.scheme.decoder,
            })
        }
    }
}

/// Separate scheme from two compression halves and independent channel inputs.
pub(crate) fn sscc_scheme(
    src: &JointSourcePMF,
    ch: &TwoWayChannel,
    parts: [&SsccPart; 2],
    inputs: [&ProbVec; 2],
) -> Result<(HybridScheme, ReducedConditions)> {
    for user in User::BOTH {
        let j = user.index();
        if inputs[j].len() != ch.input_size(user) {
            return Err(Error::ShapeMismatch(format!(
                "input law {} has {} symbols, |X{}| = {}",
                j + 1,
                inputs[j].len(),
                j + 1,
                ch.input_size(user)
            )));
        }
    }
    let codes = [sscc_code(inputs[0], &parts[0].w), sscc_code(inputs[1], &parts[1].w)];
    let u = [codes[0].test_channel.out_size(), codes[1].test_channel.out_size()];
    let nw = [parts[0].w.out_size(), parts[1].w.out_size()];
    // g1 rebuilds S2 from W2 (inside u2) and S1; g2 rebuilds S1 from W1 and S2
    let g1 = DecoderTable::from_fn([u[1], u[0], src.size(User::One), ch.output_size(User::One)], |u2, _, s1, _| {
        parts[1].decode[s1][u2 % nw[1]]
    });
    let g2 = DecoderTable::from_fn([u[0], u[1], src.size(User::Two), ch.output_size(User::Two)], |u1, _, s2, _| {
        parts[0].decode[s2][u1 % nw[0]]
    });
    let [c1, c2] = codes;
    let sch = HybridScheme {
        test_channels: [c1.test_channel, c2.test_channel],
        encoders: [c1.encoder, c2.encoder],
        decoders: [g1, g2],
    };
    let rates = inner_rate_point(ch, inputs[0], inputs[1])?;
    Ok((sch, ReducedConditions::new([parts[0].rate, parts[1].rate], [rates.r1, rates.r2])))
}

/// Separate source-channel coding at distortion pair `target` with channel
/// inputs drawn from `inputs`. The reduced conditions compare the
/// compression rate with I(X_j; Y_j' | X_j') under product inputs.
#[allow(clippy::too_many_arguments)]
pub fn make_sscc(
    src: &JointSourcePMF,
    ch: &TwoWayChannel,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
    target: [f64; 2],
    variant: SsccVariant,
    inputs: [&ProbVec; 2],
    wz: &WzOptions,
) -> Result<(HybridScheme, ReducedConditions)> {
    crate::prob::check_model_shapes(src, d1, d2)?;
    if variant == SsccVariant::Independent && !src.is_independent(1e-12) {
        return Err(Error::Unsupported(
            "standard test channels are only consistent for independent sources; use the Wyner-Ziv variant".into(),
        ));
    }
    let p1 = sscc_part(src, User::One, d1, target[0], variant, wz)?;
    let p2 = sscc_part(src, User::Two, d2, target[1], variant, wz)?;
    sscc_scheme(src, ch, [&p1, &p2], inputs)
}

/// Lossless correlation-preserving scheme: W_j = S_j and X_j = V_j ~ `pv[j]`(. | S_j).
/// Reduced conditions are H(S_j | S_j') against I(X_j; Y_j' | X_j', S_j').
pub fn make_correlation_preserving(
    src: &JointSourcePMF,
    ch: &TwoWayChannel,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
    pv: [&CondPMF; 2],
) -> Result<(HybridScheme, ReducedConditions)> {
    crate::prob::check_model_shapes(src, d1, d2)?;
    if !d1.is_hamming() || !d2.is_hamming() {
        return Err(Error::Unsupported("correlation-preserving coding needs Hamming distortion".into()));
    }
    let mut codes = Vec::new();
    for user in User::BOTH {
        let j = user.index();
        let (ns, nx) = (src.size(user), ch.input_size(user));
        if pv[j].in_size() != ns || pv[j].out_size() != nx {
            return Err(Error::ShapeMismatch(format!(
                "P(V{}|S{}) must be {ns}x{nx}",
                j + 1,
                j + 1
            )));
        }
        // u = v * |S| + w with w = s
        let rows = (0..ns)
            .map(|s| {
                pv[j].row_opt(s).map(|vr| {
                    (0..nx * ns)
                        .map(|u| if u % ns == s { vr[u / ns] } else { 0.0 })
                        .collect::<Vec<f64>>()
                })
            })
            .collect();
        codes.push(UserCode {
            test_channel: CondPMF::from_rows_unchecked(nx * ns, rows),
            encoder: (0..nx * ns).map(|u| vec![u / ns; ns]).collect(),
        });
    }
    let c2 = codes.pop().expect("two codes");
    let c1 = codes.pop().expect("two codes");
    let (ns1, ns2) = (src.size(User::One), src.size(User::Two));
    let u = [c1.test_channel.out_size(), c2.test_channel.out_size()];
    let g1 = DecoderTable::from_fn([u[1], u[0], ns1, ch.output_size(User::One)], |u2, _, _, _| u2 % ns2);
    let g2 = DecoderTable::from_fn([u[0], u[1], ns2, ch.output_size(User::Two)], |u1, _, _, _| u1 % ns1);
    let sch = HybridScheme {
        test_channels: [c1.test_channel, c2.test_channel],
        encoders: [c1.encoder, c2.encoder],
        decoders: [g1, g2],
    };

    // I(X_j; Y_j' | X_j', S_j') from the law of (S1, S2, X1, X2, Y1, Y2)
    let [nx1, nx2, ny1, ny2] = ch.dims();
    let mut net = Network::new(vec![ns1, ns2, nx1, nx2, ny1, ny2]);
    net.push(Factor::new(vec![0, 1], vec![], src.as_pmf().mass().to_vec()))?;
    net.push(Factor::new(vec![2], vec![0], cond_table(pv[0])))?;
    net.push(Factor::new(vec![3], vec![1], cond_table(pv[1])))?;
    net.push(Factor::new(vec![4, 5], vec![2, 3], ch.as_flat().to_vec()))?;
    let law = net.joint(&[0, 1, 2, 3, 4, 5])?;
    let rhs = [law.cmi_of(&[2], &[5], &[3, 1]), law.cmi_of(&[3], &[4], &[2, 0])];
    let lhs = [conditional_entropy(src, User::Two), conditional_entropy(src, User::One)];
    Ok((sch, ReducedConditions::new(lhs, rhs)))
}
