//! The end-to-end Example 1 report: binary sources with mass 1/3 on
//! (0,0), (0,1), (1,1), over Y1 = X1 xor X2 xor Z (P(Z=1) = 0.05) and
//! Y2 = X1 X2.

use serde::Serialize;
use twjscc_core::hybrid::{
    assemble, evaluate_scheme, make_uncoded, sscc_code, uncoded_code, AchievabilityReport, DecoderRule, SchemeJson,
};
use twjscc_core::models::{example1_channel, example1_source};
use twjscc_core::prob::{binary_entropy, conditional_entropy, CondPMF, DistortionMatrix, ProbVec, User};
use twjscc_core::simulate::{exact_distortion, monte_carlo, SimResult};
use twjscc_core::twc::{inner_rate_point, inner_region, outer_region, simplex_grid, Coincidence, DEFAULT_GRID, DEFAULT_RESTARTS};

use crate::CliError;

pub const NOISE: f64 = 0.05;
/// Points per axis of the product input grid in the separation check.
pub const SSCC_GRID: usize = 33;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Uncoded {
    pub exact: [f64; 2],
    pub expected: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct Mixed {
    pub scheme: SchemeJson,
    pub report: AchievabilityReport,
    pub expected_lhs2: f64,
    pub expected_rhs2: f64,
    pub claimed_distortions: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct Sscc {
    pub grid: usize,
    /// H(S1|S2) and H(S2|S1).
    pub required: [f64; 2],
    /// Input pairs meeting both strict inequalities.
    pub violations: usize,
    /// Largest min(I1 - H1, I2 - H2) over the grid.
    pub best_slack: f64,
}

#[derive(Debug, Serialize)]
pub struct Capacity {
    pub inner_hull: Vec<[f64; 2]>,
    pub outer_hull: Vec<[f64; 2]>,
    pub gap: f64,
    pub claimed_gap_above: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub samples: u64,
    pub source: Vec<Vec<f64>>,
    pub channel: Vec<f64>,
    pub uncoded: Uncoded,
    pub monte_carlo: Option<SimResult>,
    pub mixed: Mixed,
    pub sscc: Sscc,
    pub capacity: Capacity,
    pub checks: Vec<Check>,
}

/// Builds the report; `samples = 0` skips the Monte Carlo run.
pub fn report(seed: u64, samples: u64) -> Result<Report, CliError> {
    let src = example1_source();
    let ch = example1_channel(NOISE);
    let ham = DistortionMatrix::hamming(2);
    let mut checks = Vec::new();

    let uncoded = make_uncoded(&src, &ch, DecoderRule::Map, &ham, &ham)?;
    let exact = exact_distortion(&src, &ch, &uncoded, &ham, &ham)?;
    let expected = [0.0, 1.0 / 30.0];
    checks.push(Check {
        name: "uncoded_exact_distortions",
        pass: (exact[0] - expected[0]).abs() <= 1e-12 && (exact[1] - expected[1]).abs() <= 1e-12,
    });

    let mc = if samples > 0 {
        let r = monte_carlo(&src, &ch, &uncoded, &ham, &ham, samples, seed)?;
        checks.push(Check {
            name: "monte_carlo_within_5_sigma",
            pass: r.consistent == Some(true),
        });
        Some(r)
    } else {
        None
    };

    let codes = [uncoded_code(2, 2)?, sscc_code(&ProbVec::uniform(2), &CondPMF::identity(2))];
    let mixed = assemble(&src, &ch, &ham, &ham, codes, DecoderRule::Bayes)?;
    let rep = evaluate_scheme(&src, &ch, &mixed, &ham, &ham)?;
    let (lhs2, rhs2) = (conditional_entropy(&src, User::One), 1.0 - binary_entropy(NOISE));
    checks.push(Check {
        name: "mixed_scheme_feasible",
        pass: rep.feasible()
            && (rep.lhs2 - lhs2).abs() <= 1e-9
            && (rep.rhs2 - rhs2).abs() <= 1e-4
            && rep.lhs1.abs() <= 1e-12,
    });
    checks.push(Check {
        name: "mixed_scheme_zero_distortion",
        pass: rep.d1.abs() <= 1e-12 && rep.d2.abs() <= 1e-12,
    });

    let required = [conditional_entropy(&src, User::Two), conditional_entropy(&src, User::One)];
    let mut violations = 0;
    let mut best_slack = f64::NEG_INFINITY;
    let grid = simplex_grid(2, SSCC_GRID);
    for p1 in &grid {
        for p2 in &grid {
            let r = inner_rate_point(&ch, &ProbVec::new(p1.clone())?, &ProbVec::new(p2.clone())?)?;
            let slack = (r.r1 - required[0]).min(r.r2 - required[1]);
            best_slack = best_slack.max(slack);
            if required[0] < r.r1 && required[1] < r.r2 {
                violations += 1;
            }
        }
    }
    checks.push(Check {
        name: "sscc_impossible",
        pass: violations == 0,
    });

    let inner = inner_region(&ch, DEFAULT_GRID)?;
    let outer = outer_region(&ch, DEFAULT_GRID, DEFAULT_RESTARTS, seed)?;
    let claimed = 1e-2;
    let gap = Coincidence::between(&inner, &outer, claimed).gap;
    checks.push(Check {
        name: "capacity_gap_above_1e-2",
        pass: gap > claimed,
    });

    Ok(Report {
        seed,
        samples,
        source: (0..2).map(|a| (0..2).map(|b| src.prob(a, b)).collect()).collect(),
        channel: ch.as_flat().to_vec(),
        uncoded: Uncoded { exact, expected },
        monte_carlo: mc,
        mixed: Mixed {
            scheme: mixed.to_json(),
            report: rep,
            expected_lhs2: lhs2,
            expected_rhs2: rhs2,
            claimed_distortions: [0.0, 0.0],
        },
        sscc: Sscc {
            grid: SSCC_GRID,
            required,
            violations,
            best_slack,
        },
        capacity: Capacity {
            inner_hull: inner.hull().to_vec(),
            outer_hull: outer.hull().to_vec(),
            gap,
            claimed_gap_above: claimed,
        },
        checks,
    })
}
