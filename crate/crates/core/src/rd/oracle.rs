//! Exhaustive Wyner-Ziv reference for tiny alphabets: every test channel on a
//! quantized simplex paired with every decoder table.

use crate::error::{Error, Result};
use crate::prob::{DistortionMatrix, JointSourcePMF, User};

/// Upper bound on channels times decoder tables.
pub const ORACLE_LIMIT: u128 = 10_000_000;

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Minimum of I(S;W|S') over channels with entries in multiples of
/// `1/steps` and |W| = |S| + 1, and over all decoders, subject to E[d] <= target.
pub fn wz_bruteforce_oracle(
    joint: &JointSourcePMF,
    user: User,
    d: &DistortionMatrix,
    target: f64,
    steps: usize,
) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let o = joint.oriented(user);
    let (ns, nside) = (o.shape()[0], o.shape()[1]);
    if d.source_size() != ns {
        return Err(Error::ShapeMismatch("distortion rows differ from the source alphabet".into()));
    }
    let nw = ns + 1;
    let nr = d.recon_size();
    let pj = o.mass();
    let active: Vec<usize> = (0..ns)
        .filter(|&s| (0..nside).any(|t| pj[s * nside + t] > 0.0))
        .collect();

    let per_row = binomial((steps + nw - 1) as u128, (nw - 1) as u128);
    let channels = per_row.checked_pow(active.len() as u32).unwrap_or(u128::MAX);
    let tables = (nr as u128).checked_pow((nside * nw) as u32).unwrap_or(u128::MAX);
    let work = channels.saturating_mul(tables);
    if work > ORACLE_LIMIT {
        return Err(Error::GuardExceeded {
            points: work,
            limit: ORACLE_LIMIT,
        });
    }

    let rows = compositions(steps, nw);
    let mut choice = vec![0usize; active.len()];
    let mut best = f64::INFINITY;
    let mut q = vec![0.0; ns * nw];
    for s in 0..ns {
        q[s * nw] = 1.0;
    }
    loop {
        for (k, &s) in active.iter().enumerate() {
            for w in 0..nw {
                q[s * nw + w] = rows[choice[k]][w] as f64 / steps as f64;
            }
        }
        // I(S;W|S') = sum p(s,s') q(w|s) log q(w|s) / p(w|s')
        let mut rate = 0.0;
        for t in 0..nside {
            let pt: f64 = (0..ns).map(|s| pj[s * nside + t]).sum();
            if pt == 0.0 {
                continue;
            }
            for w in 0..nw {
                let pw: f64 = (0..ns).map(|s| pj[s * nside + t] * q[s * nw + w]).sum::<f64>() / pt;
                for s in 0..ns {
                    let mass = pj[s * nside + t] * q[s * nw + w];
                    if mass > 0.0 {
                        rate += mass * (q[s * nw + w] / pw).log2();
                    }
                }
            }
        }
        if rate < best {
            let cells = nside * nw;
            let mut table = vec![0usize; cells];
            loop {
                let mut dist = 0.0;
                for t in 0..nside {
                    for w in 0..nw {
                        for s in 0..ns {
                            dist += pj[s * nside + t] * q[s * nw + w] * d.get(s, table[t * nw + w]);
                        }
                    }
                }
                if dist <= target + 1e-12 {
                    best = rate;
                    break;
                }
                let mut k = 0;
                while k < cells {
                    table[k] += 1;
                    if table[k] < nr {
                        break;
                    }
                    table[k] = 0;
                    k += 1;
                }
                if k == cells {
                    break;
                }
            }
        }
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < rows.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    if best.is_finite() {
        Ok(best.max(0.0))
    } else {
        Err(Error::Infeasible(format!("no grid scheme reaches distortion {target}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::dsbs;

    #[test]
    fn composition_count() {
        assert_eq!(compositions(16, 3).len() as u128, binomial(18, 2));
    }

    #[test]
    fn guard_trips_on_large_alphabets() {
        let joint = crate::models::independent_uniform(4);
        let err = wz_bruteforce_oracle(&joint, User::One, &DistortionMatrix::hamming(4), 0.1, 16).unwrap_err();
        assert!(matches!(err, Error::GuardExceeded { .. }));
    }

    #[test]
    fn lossless_and_zero_rate_ends() {
        let joint = dsbs(0.2);
        let d = DistortionMatrix::hamming(2);
        let h = crate::prob::binary_entropy(0.2);
        assert!((wz_bruteforce_oracle(&joint, User::One, &d, 0.0, 4).unwrap() - h).abs() < 1e-12);
        assert_eq!(wz_bruteforce_oracle(&joint, User::One, &d, 0.2, 4).unwrap(), 0.0);
    }
}
