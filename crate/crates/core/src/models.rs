//! Ready-made sources and channels used by the tests and the CLI.

use crate::prob::{JointSourcePMF, ProbVec, TwoWayChannel};

/// Sources with mass 1/3 at (0,0), (0,1), (1,1).
pub fn example1_source() -> JointSourcePMF {
    let t = 1.0 / 3.0;
    JointSourcePMF::new(vec![vec![t, t], vec![0.0, t]]).expect("valid source")
}

/// Y1 = X1 xor X2 xor Z with P(Z=1) = `noise`, and Y2 = X1 * X2.
pub fn example1_channel(noise: f64) -> TwoWayChannel {
    TwoWayChannel::from_fn([2, 2, 2, 2], |x1, x2, y1, y2| {
        let clean = x1 ^ x2;
        let p1 = if y1 == clean { 1.0 - noise } else { noise };
        let p2 = if y2 == (x1 & x2) { 1.0 } else { 0.0 };
        p1 * p2
    })
    .expect("valid channel")
}

/// Y1 = Y2 = X1 xor X2 xor Z with P(Z=1) = `noise`.
pub fn binary_additive_channel(noise: f64) -> TwoWayChannel {
    TwoWayChannel::from_fn([2, 2, 2, 2], |x1, x2, y1, y2| {
        if y1 != y2 {
            return 0.0;
        }
        if y1 == x1 ^ x2 {
            1.0 - noise
        } else {
            noise
        }
    })
    .expect("valid channel")
}

/// Y1 = X2 and Y2 = X1 over a q-ary alphabet.
pub fn noiseless_crossover(q: usize) -> TwoWayChannel {
    TwoWayChannel::from_fn([q, q, q, q], |x1, x2, y1, y2| {
        if y1 == x2 && y2 == x1 {
            1.0
        } else {
            0.0
        }
    })
    .expect("valid channel")
}

/// Outputs are independent uniform noise, unrelated to the inputs.
pub fn pure_noise_channel(q: usize) -> TwoWayChannel {
    let p = 1.0 / (q * q) as f64;
    TwoWayChannel::from_fn([q, q, q, q], |_, _, _, _| p).expect("valid channel")
}

/// Both outputs are the constant symbol 0.
pub fn constant_output_channel(q: usize) -> TwoWayChannel {
    TwoWayChannel::from_fn([q, q, 2, 2], |_, _, y1, y2| if y1 == 0 && y2 == 0 { 1.0 } else { 0.0 })
        .expect("valid channel")
}

/// Doubly symmetric binary source: uniform S1, S2 = S1 xor N with P(N=1) = p.
pub fn dsbs(p: f64) -> JointSourcePMF {
    JointSourcePMF::new(vec![vec![(1.0 - p) / 2.0, p / 2.0], vec![p / 2.0, (1.0 - p) / 2.0]])
        .expect("valid source")
}

/// S1 ~ Bern(1/2) and S2 is S1 through a Z-channel: a one flips to zero with
/// probability `flip`, a zero never flips.
pub fn z_channel_source(flip: f64) -> JointSourcePMF {
    JointSourcePMF::new(vec![vec![0.5, 0.0], vec![0.5 * flip, 0.5 * (1.0 - flip)]])
        .expect("valid source")
}

pub fn independent_uniform(q: usize) -> JointSourcePMF {
    JointSourcePMF::independent(&ProbVec::uniform(q), &ProbVec::uniform(q))
}
