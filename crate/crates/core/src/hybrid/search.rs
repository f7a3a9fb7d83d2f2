//! Deterministic search for a hybrid scheme meeting a distortion target.
//!
//! Stage 1 enumerates uncoded maps S_j -> X_j, stage 2 runs the special-case
//! constructors over a grid of channel input laws, stage 3 runs seeded
//! coordinate ascent over test channels and encoder tables. All decoders are
//! Bayes decoders, which minimize distortion without affecting the
//! achievability conditions.

use rayon::prelude::*;
use serde::Serialize;

use super::construct::{assemble, bayes_decoders, sscc_part, sscc_scheme, uncoded_code, SsccPart};
use super::{report_from_joint, AchievabilityReport, DecoderRule, HybridScheme, SsccVariant, UserCode, VACUOUS_TOL};
use crate::error::{Error, Result};
use crate::prob::{CondPMF, DistortionMatrix, JointSourcePMF, ProbVec, TwoWayChannel, User};
use crate::random::{flat_dirichlet, stream_rng};
use crate::rd::WzOptions;
use crate::twc::simplex_grid;
use rand::Rng;

/// Largest uncoded family enumerated exhaustively.
pub const MAX_UNCODED_MAPS: usize = 4096;
const TARGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Maximum number of scheme evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Points per edge of the channel input grid used by the constructors.
    pub input_grid: usize,
    /// Coordinate-ascent restarts.
    pub restarts: usize,
    pub wz: WzOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 4000,
            seed: 0,
            input_grid: 5,
            restarts: 4,
            wz: WzOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Found {
    #[serde(skip)]
    pub scheme: HybridScheme,
    pub report: AchievabilityReport,
    /// 1, 2 or 3.
    pub stage: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    /// Feasible scheme meeting the target with the largest margin.
    pub best: Option<Found>,
    /// When nothing meets the target: the candidate closest to it.
    pub closest: Option<Found>,
    /// Distortion pairs of every scheme satisfying both conditions.
    pub feasible_points: Vec<[f64; 2]>,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

fn margin_key(r: &AchievabilityReport) -> f64 {
    r.margin.unwrap_or(f64::INFINITY)
}

fn excess(r: &AchievabilityReport, target: [f64; 2]) -> f64 {
    (r.d1 - target[0]).max(0.0) + (r.d2 - target[1]).max(0.0)
}

/// Orders candidates: feasible first, then closer to the target, then margin.
fn closer(a: &AchievabilityReport, b: &AchievabilityReport, target: [f64; 2]) -> bool {
    if a.feasible() != b.feasible() {
        return a.feasible();
    }
    let (ea, eb) = (excess(a, target), excess(b, target));
    if (ea - eb).abs() > 1e-12 {
        return ea < eb;
    }
    margin_key(a) > margin_key(b)
}

struct Tracker {
    target: [f64; 2],
    best: Option<Found>,
    closest: Option<Found>,
    points: Vec<[f64; 2]>,
    used: usize,
    budget: usize,
}

impl Tracker {
    fn remaining(&self) -> usize {
        self.budget - self.used
    }

    fn offer(&mut self, scheme: HybridScheme, report: AchievabilityReport, stage: usize) {
        if report.feasible() {
            self.points.push(report.distortions());
        }
        if report.meets(self.target, TARGET_TOL) {
            if self.best.as_ref().is_none_or(|b| margin_key(&report) > margin_key(&b.report)) {
                self.best = Some(Found { scheme, report, stage });
            }
        } else if self.closest.as_ref().is_none_or(|c| closer(&report, &c.report, self.target)) {
            self.closest = Some(Found { scheme, report, stage });
        }
    }

    /// Evaluates the candidates in parallel, in order, within the remaining budget.
    fn run(&mut self, ctx: &Ctx, codes: Vec<[UserCode; 2]>, stage: usize) {
        let take = codes.len().min(self.remaining());
        let results: Vec<Option<(HybridScheme, AchievabilityReport)>> = codes
            .into_par_iter()
            .take(take)
            .map(|c| ctx.evaluate(c).ok())
            .collect();
        self.used += take;
        for (s, r) in results.into_iter().flatten() {
            self.offer(s, r, stage);
        }
    }

    fn run_schemes(&mut self, ctx: &Ctx, schemes: Vec<HybridScheme>, stage: usize) {
        let take = schemes.len().min(self.remaining());
        let results: Vec<Option<(HybridScheme, AchievabilityReport)>> = schemes
            .into_par_iter()
            .take(take)
            .map(|s| {
                let r = super::evaluate_scheme(ctx.src, ctx.ch, &s, ctx.d1, ctx.d2).ok()?;
                Some((s, r))
            })
            .collect();
        self.used += take;
        for (s, r) in results.into_iter().flatten() {
            self.offer(s, r, stage);
        }
    }
}

struct Ctx<'a> {
    src: &'a JointSourcePMF,
    ch: &'a TwoWayChannel,
    d1: &'a DistortionMatrix,
    d2: &'a DistortionMatrix,
}

impl Ctx<'_> {
    fn evaluate(&self, codes: [UserCode; 2]) -> Result<(HybridScheme, AchievabilityReport)> {
        let sch = assemble(self.src, self.ch, self.d1, self.d2, codes, DecoderRule::Bayes)?;
        let joint = sch.joint_law(self.src, self.ch)?;
        let report = report_from_joint(&joint, &sch, self.d1, self.d2)?;
        Ok((sch, report))
    }

    /// Like `evaluate` but without re-validating shapes (hot loop of stage 3).
    fn evaluate_raw(&self, test_channels: [CondPMF; 2], encoders: [Vec<Vec<usize>>; 2]) -> Result<(HybridScheme, AchievabilityReport)> {
        let u = [test_channels[0].out_size(), test_channels[1].out_size()];
        let mut sch = HybridScheme {
            test_channels,
            encoders,
            decoders: [
                super::DecoderTable::constant([u[1], u[0], self.src.size(User::One), self.ch.output_size(User::One)], 0),
                super::DecoderTable::constant([u[0], u[1], self.src.size(User::Two), self.ch.output_size(User::Two)], 0),
            ],
        };
        let joint = sch.joint_law(self.src, self.ch)?;
        sch.decoders = bayes_decoders(&joint, self.src, self.d1, self.d2, DecoderRule::Bayes)?;
        let report = report_from_joint(&joint, &sch, self.d1, self.d2)?;
        Ok((sch, report))
    }
}

/// All maps from an `ns`-symbol alphabet to an `nx`-symbol alphabet.
fn all_maps(ns: usize, nx: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..ns {
        out = out
            .into_iter()
            .flat_map(|m| {
                (0..nx).map(move |x| {
                    let mut n = m.clone();
                    n.push(x);
                    n
                })
            })
            .collect();
    }
    out
}

fn map_code(ns: usize, map: &[usize]) -> UserCode {
    UserCode {
        test_channel: CondPMF::constant(ns, &ProbVec::point(1, 0)),
        encoder: vec![map.to_vec()],
    }
}

fn stage_uncoded(ctx: &Ctx, t: &mut Tracker) {
    let (ns1, ns2) = (ctx.src.size(User::One), ctx.src.size(User::Two));
    let (nx1, nx2) = (ctx.ch.input_size(User::One), ctx.ch.input_size(User::Two));
    let count = (nx1 as u128).pow(ns1 as u32) * (nx2 as u128).pow(ns2 as u32);
    if count > MAX_UNCODED_MAPS as u128 {
        return;
    }
    let m1 = all_maps(ns1, nx1);
    let m2 = all_maps(ns2, nx2);
    let codes = m1
        .iter()
        .flat_map(|a| m2.iter().map(move |b| [map_code(ns1, a), map_code(ns2, b)]))
        .collect();
    t.run(ctx, codes, 1);
}

fn stage_constructors(ctx: &Ctx, t: &mut Tracker, opts: &SearchOptions) {
    let src = ctx.src;
    let ch = ctx.ch;
    let mut schemes: Vec<HybridScheme> = Vec::new();
    for rule in [DecoderRule::Map, DecoderRule::Mmse] {
        if let Ok(s) = super::make_uncoded(src, ch, rule, ctx.d1, ctx.d2) {
            schemes.push(s);
        }
    }
    let grid1: Vec<ProbVec> = simplex_grid(ch.input_size(User::One), opts.input_grid)
        .into_iter()
        .filter_map(|p| ProbVec::new(p).ok())
        .collect();
    let grid2: Vec<ProbVec> = simplex_grid(ch.input_size(User::Two), opts.input_grid)
        .into_iter()
        .filter_map(|p| ProbVec::new(p).ok())
        .collect();
    let d = [ctx.d1, ctx.d2];
    let mut variants = vec![SsccVariant::WynerZiv];
    if src.is_independent(1e-12) {
        variants.push(SsccVariant::Independent);
    }
    let mut wz_parts: [Option<SsccPart>; 2] = [None, None];
    for variant in variants {
        let parts: Vec<Option<SsccPart>> = User::BOTH
            .iter()
            .map(|&u| sscc_part(src, u, d[u.index()], t.target[u.index()], variant, &opts.wz).ok())
            .collect();
        if variant == SsccVariant::WynerZiv {
            wz_parts = [parts[0].clone(), parts[1].clone()];
        }
        if let (Some(a), Some(b)) = (&parts[0], &parts[1]) {
            for p1 in &grid1 {
                for p2 in &grid2 {
                    if let Ok((s, _)) = sscc_scheme(src, ch, [a, b], [p1, p2]) {
                        schemes.push(s);
                    }
                }
            }
        }
    }
    if ctx.d1.is_hamming() && ctx.d2.is_hamming() {
        let (ns1, ns2) = (src.size(User::One), src.size(User::Two));
        let (nx1, nx2) = (ch.input_size(User::One), ch.input_size(User::Two));
        let m1 = all_maps(ns1, nx1);
        let m2 = all_maps(ns2, nx2);
        if m1.len() * m2.len() <= MAX_UNCODED_MAPS {
            for a in &m1 {
                for b in &m2 {
                    let pa = CondPMF::deterministic(ns1, nx1, |s| a[s]);
                    let pb = CondPMF::deterministic(ns2, nx2, |s| b[s]);
                    if let Ok((s, _)) = super::make_correlation_preserving(src, ch, ctx.d1, ctx.d2, [&pa, &pb]) {
                        schemes.push(s);
                    }
                }
            }
        }
    }
    t.run_schemes(ctx, schemes, 2);

    // one user uncoded, the other Wyner-Ziv compressed over independent inputs
    let mut codes: Vec<[UserCode; 2]> = Vec::new();
    for user in User::BOTH {
        let j = user.index();
        let Ok(unc) = uncoded_code(src.size(user), ch.input_size(user)) else { continue };
        let Some(part) = &wz_parts[1 - j] else { continue };
        let grid = if j == 0 { &grid2 } else { &grid1 };
        for v in grid {
            let other = super::sscc_code(v, &part.w);
            codes.push(if j == 0 { [unc.clone(), other] } else { [other, unc.clone()] });
        }
    }
    t.run(ctx, codes, 2);
}

/// Ascent objective: worst condition slack (capped), heavily penalized by
/// distortion above the target.
fn score(r: &AchievabilityReport, target: [f64; 2]) -> f64 {
    let slack = |l: f64, rr: f64| if l <= VACUOUS_TOL { 1.0 } else { (rr - l).min(1.0) };
    slack(r.lhs1, r.rhs1).min(slack(r.lhs2, r.rhs2)) - 10.0 * excess(r, target)
}

fn climb(ctx: &Ctx, target: [f64; 2], restart: usize, seed: u64, budget: usize) -> Vec<(HybridScheme, AchievabilityReport)> {
    let mut rng = stream_rng(seed, restart as u64);
    let ns = [ctx.src.size(User::One), ctx.src.size(User::Two)];
    let nx = [ctx.ch.input_size(User::One), ctx.ch.input_size(User::Two)];
    let nu = [ns[0] * nx[0] + 2, ns[1] * nx[1] + 2];
    let mut chans: [Vec<Vec<f64>>; 2] = [0, 1].map(|j| (0..ns[j]).map(|_| flat_dirichlet(&mut rng, nu[j])).collect());
    let mut encs: [Vec<Vec<usize>>; 2] =
        [0, 1].map(|j| (0..nu[j]).map(|_| (0..ns[j]).map(|_| rng.random_range(0..nx[j])).collect()).collect());
    let build = |chans: &[Vec<Vec<f64>>; 2], encs: &[Vec<Vec<usize>>; 2]| {
        let tc = [0, 1].map(|j| CondPMF::from_rows_unchecked(nu[j], chans[j].iter().cloned().map(Some).collect()));
        ctx.evaluate_raw(tc, encs.clone()).ok()
    };
    let mut out = Vec::new();
    let mut used = 0;
    let Some(first) = build(&chans, &encs) else { return out };
    used += 1;
    let mut best = score(&first.1, target);
    out.push(first);
    let mut step: f64 = 0.25;
    while used < budget && step > 1.0 / 256.0 {
        let mut improved = false;
        'moves: for j in 0..2 {
            for s in 0..ns[j] {
                for a in 0..nu[j] {
                    for b in 0..nu[j] {
                        if a == b || chans[j][s][b] <= 0.0 {
                            continue;
                        }
                        if used >= budget {
                            break 'moves;
                        }
                        let delta = step.min(chans[j][s][b]);
                        let mut trial = chans.clone();
                        trial[j][s][a] += delta;
                        trial[j][s][b] -= delta;
                        used += 1;
                        if let Some(c) = build(&trial, &encs) {
                            let sc = score(&c.1, target);
                            if sc > best + 1e-12 {
                                best = sc;
                                chans = trial;
                                out.push(c);
                                improved = true;
                            }
                        }
                    }
                }
            }
            for u in 0..nu[j] {
                for s in 0..ns[j] {
                    for x in 0..nx[j] {
                        if x == encs[j][u][s] {
                            continue;
                        }
                        if used >= budget {
                            break 'moves;
                        }
                        let mut trial = encs.clone();
                        trial[j][u][s] = x;
                        used += 1;
                        if let Some(c) = build(&chans, &trial) {
                            let sc = score(&c.1, target);
                            if sc > best + 1e-12 {
                                best = sc;
                                encs = trial;
                                out.push(c);
                                improved = true;
                            }
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    out
}

fn stage_ascent(ctx: &Ctx, t: &mut Tracker, opts: &SearchOptions) {
    let restarts = opts.restarts.max(1);
    let per = t.remaining() / restarts;
    if per == 0 {
        return;
    }
    let target = t.target;
    let runs: Vec<Vec<(HybridScheme, AchievabilityReport)>> = (0..restarts)
        .into_par_iter()
        .map(|r| climb(ctx, target, r, opts.seed, per))
        .collect();
    t.used += per * restarts;
    for run in runs {
        for (s, r) in run {
            t.offer(s, r, 3);
        }
    }
}

/// Searches for a scheme whose conditions hold and whose distortions are at
/// most `target` (within 1e-9). Exhausting the budget is reported, not an error.
pub fn search_hybrid(
    src: &JointSourcePMF,
    ch: &TwoWayChannel,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
    target: [f64; 2],
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if opts.budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    crate::prob::check_model_shapes(src, d1, d2)?;
    let ctx = Ctx { src, ch, d1, d2 };
    let mut t = Tracker {
        target,
        best: None,
        closest: None,
        points: Vec::new(),
        used: 0,
        budget: opts.budget,
    };
    stage_uncoded(&ctx, &mut t);
    if t.remaining() > 0 {
        stage_constructors(&ctx, &mut t, opts);
    }
    if t.remaining() > 0 {
        stage_ascent(&ctx, &mut t, opts);
    }
    Ok(SearchResult {
        budget_exhausted: t.remaining() == 0,
        best: t.best,
        closest: t.closest,
        feasible_points: t.points,
        evaluations: t.used,
    })
}
