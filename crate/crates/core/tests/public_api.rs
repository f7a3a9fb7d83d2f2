//! Cross-module checks through the public API against closed forms.

use twjscc_core::converse::{classify, theorem3_region, Membership, RateRatio, RegionOptions, DEFAULT_TOL_HYP};
use twjscc_core::hybrid::{evaluate_scheme, make_uncoded, DecoderRule};
use twjscc_core::models::{dsbs, independent_uniform, noiseless_crossover};
use twjscc_core::prob::{binary_entropy, DistortionMatrix, ProbVec, User};
use twjscc_core::rd::{conditional_rd, rd_target, wz_rd, WzOptions};
use twjscc_core::simulate::{exact_distortion, monte_carlo};

fn ham() -> DistortionMatrix {
    DistortionMatrix::hamming(2)
}

/// Wyner-Ziv function of a doubly symmetric binary source with crossover
/// `p`: the lower convex envelope of h(p * d) - h(d) and the point (p, 0),
/// minimized over a fine grid of d.
fn dsbs_wz(p: f64, target: f64) -> f64 {
    let conv = |d: f64| p * (1.0 - d) + d * (1.0 - p);
    (0..=20_000)
        .map(|i| target * i as f64 / 20_000.0)
        .filter(|&d| d < p)
        .map(|d| (p - target) / (p - d) * (binary_entropy(conv(d)) - binary_entropy(d)))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn binary_rate_distortion_matches_closed_form() {
    for &(q, d) in &[(0.5, 0.1), (0.3, 0.05), (0.2, 0.15)] {
        let r = rd_target(&ProbVec::new(vec![1.0 - q, q]).unwrap(), &ham(), d).unwrap().rate;
        assert!((r - (binary_entropy(q) - binary_entropy(d))).abs() < 1e-6, "q={q} d={d} r={r}");
    }
}

#[test]
fn dsbs_wyner_ziv_matches_convex_envelope() {
    let (p, target) = (0.25, 0.1);
    let src = dsbs(p);
    let wz = wz_rd(&src, User::One, &ham(), target, &WzOptions::default()).unwrap().rate;
    let cond = conditional_rd(&src, User::One, &ham(), target).unwrap();
    let oracle = dsbs_wz(p, target);
    assert!((wz - oracle).abs() < 2e-3, "solver {wz} oracle {oracle}");
    assert!((cond - (binary_entropy(p) - binary_entropy(target))).abs() < 1e-6);
    assert!(wz > cond + 0.05);
}

#[test]
fn uncoded_crossover_is_lossless_in_exact_and_sampled_evaluation() {
    let (src, ch) = (dsbs(0.1), noiseless_crossover(2));
    let sch = make_uncoded(&src, &ch, DecoderRule::Map, &ham(), &ham()).unwrap();
    assert_eq!(exact_distortion(&src, &ch, &sch, &ham(), &ham()).unwrap(), [0.0, 0.0]);
    let rep = evaluate_scheme(&src, &ch, &sch, &ham(), &ham()).unwrap();
    assert_eq!([rep.d1, rep.d2], [0.0, 0.0]);
    let mc = monte_carlo(&src, &ch, &sch, &ham(), &ham(), 5000, 1).unwrap();
    assert_eq!([mc.d1_hat, mc.d2_hat], [0.0, 0.0]);
    assert_eq!(mc.consistent, Some(true));
}

/// Independent uniform bits over a unit-capacity crossover at one source
/// symbol per channel use: everything down to (0, 0) is achievable, and at
/// two symbols per use the best distortion is h^{-1}(1/2) for each user.
#[test]
fn crossover_distortion_region_follows_separation() {
    let (src, ch) = (independent_uniform(2), noiseless_crossover(2));
    let opts = RegionOptions::default();
    let rep = theorem3_region(&src, &ch, &ham(), &ham(), RateRatio::new(1, 1).unwrap(), DEFAULT_TOL_HYP, &opts).unwrap();
    assert!(rep.hypothesis_flags.all());
    let exact = rep.exact.expect("hypotheses hold");
    assert_ne!(classify(&exact, [0.0, 0.0], 1e-6), Membership::Outside);

    let rep = theorem3_region(&src, &ch, &ham(), &ham(), RateRatio::new(2, 1).unwrap(), DEFAULT_TOL_HYP, &opts).unwrap();
    // h(0.110028) = 1/2
    let d_star = 0.110_028;
    assert_eq!(classify(&rep.outer, [0.09, 0.5], 1e-9), Membership::Outside);
    assert_ne!(classify(&rep.outer, [d_star + 5e-3, d_star + 5e-3], 1e-9), Membership::Outside);
    assert_ne!(classify(&rep.inner_sscc, [d_star + 5e-3, d_star + 5e-3], 1e-9), Membership::Outside);
}
