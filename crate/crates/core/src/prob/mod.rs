//! Finite-alphabet probability objects and information measures (bits).

mod join;
mod pmf;
mod types;

pub use join::{Factor, Network};
pub(crate) use join::cond_table;
pub use pmf::{Pmf, SUM_TOL};
pub(crate) use pmf::entropy_bits;
pub use types::{
    check_model_shapes, Alphabet, CondPMF, DistortionMatrix, JointSourcePMF, ProbVec,
    TwoWayChannel, User,
};

/// Shannon entropy in bits.
pub fn entropy(p: &ProbVec) -> f64 {
    entropy_bits(p.as_slice())
}

/// H(S_other | S_given) for the two sources.
pub fn conditional_entropy(joint: &JointSourcePMF, given: User) -> f64 {
    let g = given.index();
    joint.as_pmf().conditional_entropy_of(&[1 - g], &[g])
}

/// I(A; B) where A is axis 0 and B is every remaining axis.
pub fn mutual_information(joint: &Pmf) -> f64 {
    let rest: Vec<usize> = (1..joint.rank()).collect();
    joint.mutual_information_of(&[0], &rest)
}

/// I(A; B | C) where A is axis 0, B is axis 1, and C is every remaining axis
/// flattened into one. With two axes this is I(A; B).
pub fn conditional_mutual_information(joint: &Pmf) -> f64 {
    let rest: Vec<usize> = (2..joint.rank()).collect();
    joint.cmi_of(&[0], &[1], &rest)
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}
