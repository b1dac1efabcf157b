//! Weighted common-spatial-pattern objective over per-trial covariance
//! matrices, its gradient in the trial weights, and a hybrid driver where a
//! population optimizer periodically re-seeds Adam.
//!
//! The cost of a point `(a, b, w)` is
//!
//! ```text
//! -[w' (sum_i a_i S_{i,c}) w] / [w' (sum_i b_i (S_{i,1} + S_{i,2})) w]
//! ```
//!
//! for a target class `c`. Because `a` and `b` are independent, the value is
//! not confined to `[-1, 0]`: a concentrated on a trial with strong class-c
//! variance and b on a trial with little total variance give ratios above 1.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{Pso, PsoConfig};
use crate::engine::{OeoConfig, OeoEngine};
use crate::error::{OeoError, Result};
use crate::numerics::{adam_step, gev_power, random_spd, sanitize_gradient, AdamParams, AdamState, SpdMatrix};
use crate::objective::Objective;
use crate::space::{seeded_stream, Bounds, RunRng, Solution};
use crate::trace::{RunResult, TraceRecord};

pub const WEIGHT_FLOOR: f64 = 1e-6;
pub const DENOMINATOR_FLOOR: f64 = 1e-12;
/// Condition cap of the per-trial noise matrices; close to isotropic.
pub const NOISE_CONDITION: f64 = 2.0;
pub const TEXT_MAGIC: &str = "wgtcsp";
pub const TEXT_VERSION: &str = "v1";

/// Which class supplies the numerator covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "u8", into = "u8")]
pub enum TargetClass {
    #[default]
    First,
    Second,
}

impl TryFrom<u8> for TargetClass {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            other => Err(format!("target class must be 1 or 2, got {other}")),
        }
    }
}

impl From<TargetClass> for u8 {
    fn from(c: TargetClass) -> u8 {
        match c {
            TargetClass::First => 1,
            TargetClass::Second => 2,
        }
    }
}

/// Paired class covariances, one pair per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    sigmas_class1: Vec<SpdMatrix>,
    sigmas_class2: Vec<SpdMatrix>,
}

/// Recipe for [`TrialSet::synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticTrials {
    pub trials: usize,
    pub channels: usize,
    /// Per-trial noise relative to the class structure.
    pub noise: f64,
    /// Trials whose noise is multiplied by `outlier_scale`.
    pub outliers: Vec<usize>,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticTrials {
    fn default() -> Self {
        Self {
            trials: 10,
            channels: 4,
            noise: 0.3,
            outliers: vec![0],
            outlier_scale: 100.0,
            seed: 0,
        }
    }
}

impl TrialSet {
    pub fn new(sigmas_class1: Vec<SpdMatrix>, sigmas_class2: Vec<SpdMatrix>) -> Result<Self> {
        let set = Self::new_unchecked_count(sigmas_class1, sigmas_class2)?;
        if set.n() < 2 {
            return Err(OeoError::InvalidConfig(format!(
                "a trial set needs at least 2 trials, got {}",
                set.n()
            )));
        }
        Ok(set)
    }

    /// Shape checks only; admits a single trial.
    pub(crate) fn new_unchecked_count(sigmas_class1: Vec<SpdMatrix>, sigmas_class2: Vec<SpdMatrix>) -> Result<Self> {
        if sigmas_class1.len() != sigmas_class2.len() {
            return Err(OeoError::DimensionMismatch {
                expected: sigmas_class1.len(),
                got: sigmas_class2.len(),
            });
        }
        let first = sigmas_class1.first().ok_or(OeoError::Empty("trial set"))?;
        let channels = first.dim();
        for m in sigmas_class1.iter().chain(&sigmas_class2) {
            if m.dim() != channels {
                return Err(OeoError::DimensionMismatch {
                    expected: channels,
                    got: m.dim(),
                });
            }
        }
        Ok(Self {
            sigmas_class1,
            sigmas_class2,
        })
    }

    /// Two class prototypes with opposite variance profiles on a shared
    /// random basis, plus independent SPD noise per trial and class. Every
    /// matrix is scaled to unit trace, so an outlier trial carries the same
    /// energy as the rest but almost none of the class structure.
    pub fn synthetic(recipe: &SyntheticTrials) -> Result<Self> {
        let (n, ch) = (recipe.trials, recipe.channels);
        if ch < 2 {
            return Err(OeoError::InvalidConfig("need at least 2 channels".into()));
        }
        if recipe.outliers.iter().any(|&i| i >= n) {
            return Err(OeoError::InvalidConfig("outlier index out of range".into()));
        }
        if !(recipe.noise >= 0.0 && recipe.outlier_scale >= 0.0) {
            return Err(OeoError::InvalidConfig("noise levels must be non-negative".into()));
        }
        let mut rng = seeded_stream(recipe.seed);
        let basis = random_spd(ch, &mut rng, 1.0e2)
            .into_inner()
            .symmetric_eigen()
            .eigenvectors;
        let profile = |rng: &mut RunRng, rising: bool| -> DMatrix<f64> {
            let mut d: Vec<f64> = (0..ch)
                .map(|i| {
                    let t = i as f64 / (ch - 1) as f64;
                    let base = if rising { 0.1 + 0.9 * t } else { 1.0 - 0.9 * t };
                    base * rng.random_range(0.8..1.2)
                })
                .collect();
            d.iter_mut().for_each(|v| *v = v.max(1e-3));
            &basis * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)) * basis.transpose()
        };
        let proto1 = profile(&mut rng, false);
        let proto2 = profile(&mut rng, true);
        let mut c1 = Vec::with_capacity(n);
        let mut c2 = Vec::with_capacity(n);
        for i in 0..n {
            let scale = if recipe.outliers.contains(&i) {
                recipe.noise * recipe.outlier_scale
            } else {
                recipe.noise
            };
            for (proto, out) in [(&proto1, &mut c1), (&proto2, &mut c2)] {
                let noise = random_spd(ch, &mut rng, NOISE_CONDITION).into_inner();
                let m = proto + noise * (scale / ch as f64);
                let trace = m.trace();
                out.push(SpdMatrix::new(m / trace)?);
            }
        }
        Self::new(c1, c2)
    }

    pub fn n(&self) -> usize {
        self.sigmas_class1.len()
    }

    pub fn channels(&self) -> usize {
        self.sigmas_class1[0].dim()
    }

    pub fn class1(&self) -> &[SpdMatrix] {
        &self.sigmas_class1
    }

    pub fn class2(&self) -> &[SpdMatrix] {
        &self.sigmas_class2
    }

    fn target(&self, class: TargetClass) -> &[SpdMatrix] {
        match class {
            TargetClass::First => &self.sigmas_class1,
            TargetClass::Second => &self.sigmas_class2,
        }
    }

    /// `(sum a_i S_{i,c}, sum b_i (S_{i,1} + S_{i,2}))`.
    pub fn weighted_pencil(&self, a: &[f64], b: &[f64], class: TargetClass) -> Result<(SpdMatrix, SpdMatrix)> {
        self.check_weights(a, b)?;
        let ch = self.channels();
        let mut num = DMatrix::zeros(ch, ch);
        let mut den = DMatrix::zeros(ch, ch);
        for (i, s) in self.target(class).iter().enumerate() {
            num += s.matrix() * a[i];
            den += (self.sigmas_class1[i].matrix() + self.sigmas_class2[i].matrix()) * b[i];
        }
        Ok((SpdMatrix::new(num)?, SpdMatrix::new(den)?))
    }

    fn check_weights(&self, a: &[f64], b: &[f64]) -> Result<()> {
        for v in [a, b] {
            if v.len() != self.n() {
                return Err(OeoError::DimensionMismatch {
                    expected: self.n(),
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(OeoError::NonFinite("weights"));
            }
        }
        Ok(())
    }

    /// Header `wgtcsp v1 n N`, then for each trial its class-1 and class-2
    /// matrices, one row per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TEXT_MAGIC} {TEXT_VERSION} {} {}", self.n(), self.channels())?;
        for (m1, m2) in self.sigmas_class1.iter().zip(&self.sigmas_class2) {
            for m in [m1, m2] {
                for r in 0..m.dim() {
                    let mut line = String::new();
                    for c in 0..m.dim() {
                        if c > 0 {
                            line.push(' ');
                        }
                        write!(line, "{}", m.matrix()[(r, c)]).expect("string write");
                    }
                    writeln!(out, "{line}")?;
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| OeoError::Parse(e.to_string()))?;
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        let mut next = |what: &str| it.next().ok_or_else(|| OeoError::Parse(format!("missing {what}")));
        if next("magic")? != TEXT_MAGIC {
            return Err(OeoError::Parse("not a wgtcsp file".into()));
        }
        let version = next("version")?;
        if version != TEXT_VERSION {
            return Err(OeoError::Parse(format!("unsupported version {version}")));
        }
        let parse_count = |s: String| s.parse::<usize>().map_err(|e| OeoError::Parse(format!("{s}: {e}")));
        let n = parse_count(next("trial count")?)?;
        let ch = parse_count(next("channel count")?)?;
        let mut c1 = Vec::with_capacity(n);
        let mut c2 = Vec::with_capacity(n);
        for trial in 0..n {
            for class in 0..2 {
                let mut data = Vec::with_capacity(ch * ch);
                for _ in 0..ch * ch {
                    let tok = next("matrix entry")?;
                    data.push(tok.parse::<f64>().map_err(|e| OeoError::Parse(format!("{tok}: {e}")))?);
                }
                let m = SpdMatrix::from_row_slice(ch, &data)
                    .map_err(|e| OeoError::Parse(format!("trial {trial} class {}: {e}", class + 1)))?;
                if class == 0 {
                    c1.push(m)
                } else {
                    c2.push(m)
                }
            }
        }
        if next("end").is_ok() {
            return Err(OeoError::Parse("trailing data after last matrix".into()));
        }
        Self::new(c1, c2)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_text(text.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WgtcspPoint {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
}

impl WgtcspPoint {
    pub fn uniform(n: usize, w: Vec<f64>) -> Self {
        Self {
            a: vec![1.0 / n as f64; n],
            b: vec![1.0 / n as f64; n],
            w,
        }
    }
}

/// Negated weighted quotient. Defined for any finite non-negative weights;
/// the optimizer keeps them on the floored simplex.
pub fn wgtcsp_cost(pt: &WgtcspPoint, data: &TrialSet, target_class: TargetClass) -> Result<f64> {
    let (num, den) = quotient_parts(pt, data, target_class)?;
    Ok(-num.iter().sum::<f64>() / den.iter().sum::<f64>())
}

/// Per-trial terms `a_i w'S_{i,c}w` and `b_i w'(S_{i,1}+S_{i,2})w`.
fn quotient_parts(pt: &WgtcspPoint, data: &TrialSet, class: TargetClass) -> Result<(Vec<f64>, Vec<f64>)> {
    data.check_weights(&pt.a, &pt.b)?;
    if pt.w.len() != data.channels() {
        return Err(OeoError::DimensionMismatch {
            expected: data.channels(),
            got: pt.w.len(),
        });
    }
    if pt.w.iter().any(|v| !v.is_finite()) {
        return Err(OeoError::NonFinite("w"));
    }
    if pt.w.iter().all(|v| *v == 0.0) {
        return Err(OeoError::ZeroVector);
    }
    let wn: f64 = pt.w.iter().map(|v| v * v).sum();
    let target = data.target(class);
    let mut num = Vec::with_capacity(data.n());
    let mut den = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        num.push(pt.a[i] * target[i].quad(&pt.w));
        den.push(pt.b[i] * (data.sigmas_class1[i].quad(&pt.w) + data.sigmas_class2[i].quad(&pt.w)));
    }
    let d: f64 = den.iter().sum();
    if !(d / wn >= DENOMINATOR_FLOOR) {
        return Err(OeoError::DegenerateDenominator(d / wn));
    }
    Ok((num, den))
}

/// Gradient of [`wgtcsp_cost`] in `a` and in `b`, at fixed `w`.
pub fn wgtcsp_grad(pt: &WgtcspPoint, data: &TrialSet, target_class: TargetClass) -> Result<(Vec<f64>, Vec<f64>)> {
    quotient_parts(pt, data, target_class)?;
    let target = data.target(target_class);
    let n_i: Vec<f64> = target.iter().map(|s| s.quad(&pt.w)).collect();
    let d_i: Vec<f64> = (0..data.n())
        .map(|i| data.sigmas_class1[i].quad(&pt.w) + data.sigmas_class2[i].quad(&pt.w))
        .collect();
    let num: f64 = pt.a.iter().zip(&n_i).map(|(a, v)| a * v).sum();
    let den: f64 = pt.b.iter().zip(&d_i).map(|(b, v)| b * v).sum();
    let grad_a = n_i.iter().map(|v| -v / den).collect();
    let grad_b = d_i.iter().map(|v| num * v / (den * den)).collect();
    Ok((grad_a, grad_b))
}

/// Clips to `[1e-6, 1]` and rescales to unit sum.
pub fn project_weights(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(OeoError::Empty("weights"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(OeoError::NonFinite("weights"));
    }
    let clipped: Vec<f64> = v.iter().map(|x| x.clamp(WEIGHT_FLOOR, 1.0)).collect();
    let total: f64 = clipped.iter().sum();
    Ok(clipped.into_iter().map(|x| x / total).collect())
}

/// Best filter for fixed weights: the top generalized eigenvector of the
/// weighted pencil.
pub fn best_filter(data: &TrialSet, a: &[f64], b: &[f64], class: TargetClass, iters: usize) -> Result<Vec<f64>> {
    let (num, den) = data.weighted_pencil(a, b, class)?;
    Ok(gev_power(&num, &den, 1, iters)?.vector(0))
}

/// The cost as a function of raw weights `(a, b)` over `[1e-6, 1]^(2n)`,
/// with both halves projected and `w` chosen by [`best_filter`].
pub struct ProfileObjective<'d> {
    data: &'d TrialSet,
    class: TargetClass,
    gev_iterations: usize,
    bounds: Bounds,
}

impl<'d> ProfileObjective<'d> {
    pub fn new(data: &'d TrialSet, class: TargetClass, gev_iterations: usize) -> Self {
        let bounds = Bounds::cube(2 * data.n(), WEIGHT_FLOOR, 1.0).expect("non-empty trial set");
        Self {
            data,
            class,
            gev_iterations,
            bounds,
        }
    }

    /// Projected weights and their best filter.
    pub fn point_for(&self, x: &[f64]) -> Result<WgtcspPoint> {
        let n = self.data.n();
        let a = project_weights(&x[..n])?;
        let b = project_weights(&x[n..])?;
        let w = best_filter(self.data, &a, &b, self.class, self.gev_iterations)?;
        Ok(WgtcspPoint { a, b, w })
    }
}

impl Objective for ProfileObjective<'_> {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 2 * self.data.n() {
            return Err(OeoError::DimensionMismatch {
                expected: 2 * self.data.n(),
                got: x.len(),
            });
        }
        let pt = self.point_for(x)?;
        wgtcsp_cost(&pt, self.data, self.class)
    }
}

/// Where the hybrid gets fresh starting weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Proposer {
    /// No proposals: a single gradient descent from the start point.
    None,
    /// A uniform random draw per proposal.
    RandomRestart,
    /// A persistent OEO or M-OEO engine over the weight box.
    Oeo(OeoConfig),
    /// A persistent particle swarm over the weight box.
    Pso(PsoConfig),
}

impl Proposer {
    pub fn algorithm_name(&self) -> String {
        match self {
            Self::None => "GD".into(),
            Self::RandomRestart => "GD-restarts".into(),
            Self::Oeo(c) => format!("{}-GD", c.mode.name()),
            Self::Pso(_) => "GPSO".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridConfig {
    pub proposer: Proposer,
    /// Outer rounds between proposals.
    pub reinit_period: usize,
    /// Adam steps per outer round.
    pub inner_steps: usize,
    pub gev_iterations: usize,
    /// Stop once `sum |a_t - a_{t-1}|` falls below this.
    pub gamma: f64,
    /// When set, convergence forces a proposal that replaces the incumbent
    /// instead of ending the run, until the budget is spent.
    pub restart_on_converge: bool,
    pub max_outer: usize,
    pub max_evaluations: usize,
    /// Evaluations the proposer spends per proposal.
    pub proposal_budget: usize,
    pub adam: AdamParams,
    pub target_class: TargetClass,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            proposer: Proposer::Oeo(OeoConfig::oeo(usize::MAX)),
            reinit_period: 6,
            inner_steps: 6,
            gev_iterations: crate::numerics::DEFAULT_GEV_ITERATIONS,
            gamma: 1e-10,
            restart_on_converge: true,
            max_outer: 100_000,
            max_evaluations: 3_000,
            proposal_budget: 60,
            adam: AdamParams::default(),
            target_class: TargetClass::First,
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(OeoError::InvalidConfig(m.into()));
        if self.reinit_period == 0 || self.inner_steps == 0 || self.gev_iterations == 0 {
            return bad("reinit_period, inner_steps and gev_iterations must be at least 1");
        }
        if self.max_outer == 0 || self.max_evaluations == 0 {
            return bad("max_outer and max_evaluations must be at least 1");
        }
        if !(self.gamma >= 0.0) {
            return bad("gamma must be non-negative");
        }
        match &self.proposer {
            Proposer::Oeo(c) => {
                if self.proposal_budget == 0 {
                    return bad("proposal_budget must be at least 1");
                }
                OeoConfig {
                    max_evaluations: usize::MAX,
                    ..c.clone()
                }
                .validate()
            }
            Proposer::Pso(c) => {
                if self.proposal_budget == 0 {
                    return bad("proposal_budget must be at least 1");
                }
                PsoConfig {
                    max_evaluations: usize::MAX,
                    ..c.clone()
                }
                .validate()
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridResult {
    /// `best.point` is `a` followed by `b`.
    pub run: RunResult,
    pub best: WgtcspPoint,
    pub outer_iterations: usize,
    /// Proposals that replaced the incumbent.
    pub accepted_proposals: usize,
}

enum Source<'o, 'd> {
    None,
    Random,
    Oeo(Box<OeoEngine<'o, ProfileObjective<'d>>>),
    Pso(Box<Pso<'o, ProfileObjective<'d>>>),
}

/// Runs the hybrid from a proposer start (or uniform weights without one).
pub fn oeo_gd_run(config: &HybridConfig, data: &TrialSet, seed: u64) -> Result<HybridResult> {
    run_hybrid(config, data, seed, None)
}

/// Runs the hybrid from explicit starting weights.
pub fn oeo_gd_run_from(
    config: &HybridConfig,
    data: &TrialSet,
    seed: u64,
    a0: &[f64],
    b0: &[f64],
) -> Result<HybridResult> {
    run_hybrid(config, data, seed, Some((a0, b0)))
}

struct Incumbent {
    a: Vec<f64>,
    b: Vec<f64>,
    w: Vec<f64>,
    cost: f64,
}

fn run_hybrid(
    config: &HybridConfig,
    data: &TrialSet,
    seed: u64,
    start: Option<(&[f64], &[f64])>,
) -> Result<HybridResult> {
    config.validate()?;
    let n = data.n();
    let class = config.target_class;
    let profile = ProfileObjective::new(data, class, config.gev_iterations);
    // The driver's own draws use a stream split off the run seed so the
    // proposer's stream is the same as a standalone run with that seed.
    let mut rng = seeded_stream(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut evaluations = 0usize;

    let mut source = match &config.proposer {
        Proposer::None => Source::None,
        Proposer::RandomRestart => Source::Random,
        Proposer::Oeo(c) => {
            let c = OeoConfig {
                max_evaluations: usize::MAX,
                ..c.clone()
            };
            Source::Oeo(Box::new(OeoEngine::init(c, &profile, seed)?))
        }
        Proposer::Pso(c) => {
            let c = PsoConfig {
                max_evaluations: usize::MAX,
                ..c.clone()
            };
            Source::Pso(Box::new(Pso::init(c, &profile, seed)?))
        }
    };
    let proposer_evals = |s: &Source| match s {
        Source::Oeo(e) => e.state().evaluations,
        Source::Pso(p) => p.evaluations(),
        _ => 0,
    };
    // Seeding a population costs evaluations too.
    evaluations += proposer_evals(&source);

    let evaluate_weights = |a: Vec<f64>, b: Vec<f64>| -> Result<Incumbent> {
        let w = best_filter(data, &a, &b, class, config.gev_iterations)?;
        let cost = wgtcsp_cost(
            &WgtcspPoint {
                a: a.clone(),
                b: b.clone(),
                w: w.clone(),
            },
            data,
            class,
        )?;
        Ok(Incumbent { a, b, w, cost })
    };

    // Initial point.
    let mut current = match (start, &mut source) {
        (Some((a0, b0)), _) => {
            evaluations += 1;
            evaluate_weights(project_weights(a0)?, project_weights(b0)?)?
        }
        (None, Source::None) => {
            evaluations += 1;
            evaluate_weights(vec![1.0 / n as f64; n], vec![1.0 / n as f64; n])?
        }
        (None, Source::Random) => {
            evaluations += 1;
            let x = profile.bounds().random_point(&mut rng);
            evaluate_weights(project_weights(&x[..n])?, project_weights(&x[n..])?)?
        }
        (None, src) => {
            let before = proposer_evals(src);
            let sol = propose(src, config.proposal_budget)?;
            evaluations += proposer_evals(src) - before;
            let pt = profile.point_for(&sol.point)?;
            Incumbent {
                a: pt.a,
                b: pt.b,
                w: pt.w,
                cost: sol.cost,
            }
        }
    };
    let mut best = clone_incumbent(&current);
    let mut adam = AdamState::new(2 * n, config.adam);
    let mut trace = vec![TraceRecord::plain(0, evaluations, best.cost)];
    let mut outer = 0;
    let mut accepted = 0;
    let mut converged = false;

    while outer < config.max_outer && evaluations < config.max_evaluations {
        if converged || (outer > 0 && outer % config.reinit_period == 0) {
            let restart = converged;
            let proposal = match &mut source {
                Source::None => None,
                Source::Random => {
                    evaluations += 1;
                    let x = profile.bounds().random_point(&mut rng);
                    Some(evaluate_weights(project_weights(&x[..n])?, project_weights(&x[n..])?)?)
                }
                src => {
                    let before = proposer_evals(src);
                    let budget = config.proposal_budget.min(config.max_evaluations - evaluations);
                    let sol = propose(src, budget)?;
                    evaluations += proposer_evals(src) - before;
                    let pt = profile.point_for(&sol.point)?;
                    Some(Incumbent {
                        a: pt.a,
                        b: pt.b,
                        w: pt.w,
                        cost: sol.cost,
                    })
                }
            };
            if let Some(p) = proposal {
                if p.cost < best.cost {
                    best = clone_incumbent(&p);
                }
                if restart || p.cost < current.cost {
                    current = p;
                    adam.reset();
                    accepted += 1;
                }
            }
            converged = false;
            if evaluations >= config.max_evaluations {
                trace.push(TraceRecord::plain(outer, evaluations, best.cost));
                break;
            }
        }

        // Each round needs at least one gradient step plus the refresh.
        if evaluations + 2 > config.max_evaluations {
            break;
        }
        outer += 1;
        let previous_a = current.a.clone();
        let mut params: Vec<f64> = current.a.iter().chain(&current.b).copied().collect();
        for _ in 0..config.inner_steps {
            if evaluations + 1 >= config.max_evaluations {
                break;
            }
            let pt = WgtcspPoint {
                a: params[..n].to_vec(),
                b: params[n..].to_vec(),
                w: current.w.clone(),
            };
            let (ga, gb) = wgtcsp_grad(&pt, data, class)?;
            evaluations += 1;
            let mut grad: Vec<f64> = ga.into_iter().chain(gb).collect();
            sanitize_gradient(&mut grad);
            // Only the component along the simplex moves the projected point.
            center(&mut grad[..n]);
            center(&mut grad[n..]);
            adam_step(&mut params, &grad, &mut adam);
            let a = project_weights(&params[..n])?;
            let b = project_weights(&params[n..])?;
            params[..n].copy_from_slice(&a);
            params[n..].copy_from_slice(&b);
        }
        current = evaluate_weights(params[..n].to_vec(), params[n..].to_vec())?;
        evaluations += 1;
        if current.cost < best.cost {
            best = clone_incumbent(&current);
        }
        trace.push(TraceRecord::plain(outer, evaluations, best.cost));

        let moved: f64 = previous_a.iter().zip(&current.a).map(|(p, q)| (p - q).abs()).sum();
        if moved < config.gamma {
            let can_restart = config.restart_on_converge && !matches!(source, Source::None);
            if !can_restart {
                break;
            }
            converged = true;
        }
    }

    let point: Vec<f64> = best.a.iter().chain(&best.b).copied().collect();
    Ok(HybridResult {
        run: RunResult {
            algorithm: config.proposer.algorithm_name(),
            seed,
            best: Solution::new(point, best.cost, outer),
            evaluations,
            trace,
        },
        best: WgtcspPoint {
            a: best.a,
            b: best.b,
            w: best.w,
        },
        outer_iterations: outer,
        accepted_proposals: accepted,
    })
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn clone_incumbent(x: &Incumbent) -> Incumbent {
    Incumbent {
        a: x.a.clone(),
        b: x.b.clone(),
        w: x.w.clone(),
        cost: x.cost,
    }
}

fn propose(source: &mut Source, budget: usize) -> Result<Solution> {
    match source {
        Source::Oeo(engine) => {
            let target = engine.state().evaluations + budget;
            engine.run_until(target)?;
            Ok(engine.best().clone())
        }
        Source::Pso(pso) => {
            let target = pso.evaluations() + budget;
            pso.run_until(target)?;
            Ok(pso.best().clone())
        }
        Source::None | Source::Random => unreachable!("handled by the driver"),
    }
}
