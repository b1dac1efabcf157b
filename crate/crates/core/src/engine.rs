//! The observer-effect main loop.
//!
//! Each step draws `u1`. When `u1 > A` a fresh random point founds a new
//! cluster. Otherwise a cluster is chosen by roulette over its flattened
//! effectiveness, and a new member is added either at random inside the
//! cluster region or by a rule-based update. G, A and B then adapt, in that
//! order. Every `prune_period` steps over-full clusters drop their worst
//! members.
//!
//! Random draws per step, in order: `u1`; for a new cluster one uniform per
//! coordinate; otherwise one roulette draw, then (only when the cluster is
//! large enough for rules) the G draw, then whatever the chosen proposal
//! consumes, then one uniform for the A decrement when the step failed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::Cluster;
use crate::error::{OeoError, Result};
use crate::objective::{evaluate, Objective};
use crate::policies::{
    effectiveness_scores, flatten_distribution, nearest_center_of, nearest_centers, propose_update,
    random_in_cluster_inflated, roulette_select, selection_distribution, EffectivenessMetric, UpdateMethod,
};
use crate::space::{seeded_stream, RunRng, Solution};
use crate::trace::{RunResult, TraceRecord};

pub const A_RANGE: (f64, f64) = (0.01, 0.99);
pub const B_RANGE: (f64, f64) = (0.0, 10.0);
pub const G_RANGE: (f64, f64) = (0.01, 0.99);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// One G shared by every cluster.
    #[serde(rename = "OEO")]
    Oeo,
    /// Each cluster adapts its own G.
    #[serde(rename = "M-OEO")]
    MOeo,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Oeo => "OEO",
            Self::MOeo => "M-OEO",
        }
    }
}

/// How the G draw picks between rule-based and random placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GBranch {
    /// Rule-based update with probability G.
    #[default]
    RuleBelowG,
    /// Random placement with probability G.
    RandomBelowG,
}

/// Which steps feed back into A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ARule {
    /// Only within-cluster steps move A; new-cluster steps leave it alone.
    WithinCluster,
    /// Within-cluster steps as above; in addition a new-cluster step that
    /// fails to improve the global best raises A by `delta_a * u`, and one
    /// that does improve it lowers A by `delta_a`.
    #[default]
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OeoConfig {
    pub mode: Mode,
    pub n_clusters_init: usize,
    pub a_start: f64,
    pub b_start: f64,
    pub g_start: f64,
    pub m1: f64,
    pub m2: f64,
    /// Converts `m1`/`m2` into B increments.
    pub step_scale: f64,
    pub delta_a: f64,
    pub delta_g: f64,
    pub min_members_for_rule: usize,
    pub prune_period: usize,
    pub per_cluster_cap: usize,
    /// Upper limit on solutions held across all clusters after a prune.
    pub max_population: Option<usize>,
    pub update_method: UpdateMethod,
    pub effectiveness_metric: EffectivenessMetric,
    pub lambda: f64,
    pub max_evaluations: usize,
    pub g_branch: GBranch,
    pub a_rule: ARule,
    /// Growth of a cluster's member box when sampling random points in it.
    pub box_inflation: f64,
    /// Pins A to a constant and disables its adaptation.
    pub fixed_a: Option<f64>,
}

impl Default for OeoConfig {
    fn default() -> Self {
        Self::oeo(5_000)
    }
}

impl OeoConfig {
    /// Single-G preset: MeanOfElites updates, MeanEliteFitness scoring.
    pub fn oeo(max_evaluations: usize) -> Self {
        Self {
            mode: Mode::Oeo,
            n_clusters_init: 10,
            a_start: 0.3,
            b_start: 0.16,
            g_start: 0.2,
            m1: 5.4,
            m2: 3.9,
            step_scale: 0.01,
            delta_a: 0.02,
            delta_g: 0.02,
            min_members_for_rule: 4,
            prune_period: 4,
            per_cluster_cap: 15,
            max_population: Some(150),
            update_method: UpdateMethod::MeanOfElites { elite_count: 3 },
            effectiveness_metric: EffectivenessMetric::MeanEliteFitness { elite_count: 3 },
            lambda: 18.0,
            max_evaluations,
            g_branch: GBranch::RuleBelowG,
            a_rule: ARule::TwoSided,
            box_inflation: 2.0,
            fixed_a: None,
        }
    }

    /// Per-cluster-G preset: GetWeightedMeanOfSols updates,
    /// SubtractFromNearestFitness scoring.
    pub fn m_oeo(max_evaluations: usize) -> Self {
        Self {
            mode: Mode::MOeo,
            m1: 7.4,
            m2: 5.6,
            update_method: UpdateMethod::GetWeightedMeanOfSols,
            effectiveness_metric: EffectivenessMetric::SubtractFromNearestFitness,
            ..Self::oeo(max_evaluations)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(OeoError::InvalidConfig(msg));
        if self.n_clusters_init == 0 {
            return bad("n_clusters_init must be at least 1".into());
        }
        if self.max_evaluations < self.n_clusters_init {
            return bad(format!(
                "max_evaluations {} is below n_clusters_init {}",
                self.max_evaluations, self.n_clusters_init
            ));
        }
        for (name, v) in [("a_start", self.a_start), ("g_start", self.g_start)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1)"));
            }
        }
        if !(B_RANGE.0..=B_RANGE.1).contains(&self.b_start) {
            return bad(format!("b_start = {} outside {:?}", self.b_start, B_RANGE));
        }
        if !(self.m1 > self.m2 && self.m2 >= 0.0) {
            return bad(format!("need m1 > m2 >= 0, got m1 = {}, m2 = {}", self.m1, self.m2));
        }
        if !(self.step_scale > 0.0 && self.delta_a >= 0.0 && self.delta_g >= 0.0) {
            return bad("step sizes must be positive".into());
        }
        if self.prune_period == 0 || self.per_cluster_cap == 0 || self.max_population == Some(0) {
            return bad("prune_period, per_cluster_cap and max_population must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda = {} must be non-negative", self.lambda));
        }
        if !(self.box_inflation >= 0.0 && self.box_inflation.is_finite()) {
            return bad(format!(
                "box_inflation = {} must be finite and >= 0",
                self.box_inflation
            ));
        }
        if let Some(a) = self.fixed_a {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("fixed_a = {a} outside [0, 1]"));
            }
        }
        match self.update_method {
            UpdateMethod::EitherRandomlyOrThroughBest { p } if !(0.0..=1.0).contains(&p) => {
                return bad(format!("update p = {p} outside [0, 1]"))
            }
            UpdateMethod::MeanOfElites { elite_count } | UpdateMethod::GetWeightedMeanOfElites { elite_count }
                if elite_count == 0 =>
            {
                return bad("elite_count must be at least 1".into())
            }
            _ => {}
        }
        match self.effectiveness_metric {
            EffectivenessMetric::MeanEliteFitness { elite_count }
            | EffectivenessMetric::SumEliteFitnessPerVolume { elite_count }
                if elite_count == 0 =>
            {
                bad("elite_count must be at least 1".into())
            }
            _ => Ok(()),
        }
    }

    fn rule_threshold(&self) -> usize {
        self.min_members_for_rule.max(self.update_method.min_members())
    }
}

/// The adaptive parameters and counters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverState {
    pub a: f64,
    pub b: f64,
    /// Shared G. In M-OEO each cluster carries its own value instead.
    pub g: f64,
    pub iteration: usize,
    pub evaluations: usize,
    pub best: Solution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    NewCluster,
    RandomInCluster,
    RuleBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationOutcome {
    pub branch: Branch,
    pub cluster_index: Option<usize>,
    /// Strictly below the touched cluster's best before the step.
    pub improved_cluster_best: bool,
    pub improved_global_best: bool,
}

impl IterationOutcome {
    fn within_cluster(&self) -> bool {
        self.branch != Branch::NewCluster
    }
}

/// Raise A by `delta_a` on success, lower it by `delta_a * u` on failure.
/// The uniform `u` is drawn only on failure.
pub fn adapt_a<R: Rng + ?Sized>(a: f64, outcome: &IterationOutcome, config: &OeoConfig, rng: &mut R) -> f64 {
    if !outcome.within_cluster() {
        if config.a_rule == ARule::WithinCluster {
            return a;
        }
        let next = if outcome.improved_global_best {
            a - config.delta_a
        } else {
            a + config.delta_a * rng.random::<f64>()
        };
        return next.clamp(A_RANGE.0, A_RANGE.1);
    }
    let next = if outcome.improved_cluster_best {
        a + config.delta_a
    } else {
        a - config.delta_a * rng.random::<f64>()
    };
    next.clamp(A_RANGE.0, A_RANGE.1)
}

pub fn adapt_b(b: f64, outcome: &IterationOutcome, config: &OeoConfig) -> f64 {
    if !outcome.within_cluster() {
        return b;
    }
    let next = if outcome.improved_cluster_best {
        b + config.m1 * config.step_scale
    } else {
        b - config.m2 * config.step_scale
    };
    next.clamp(B_RANGE.0, B_RANGE.1)
}

/// G falls after a failed rule-based update or a successful random one, and
/// rises otherwise.
pub fn adapt_g(g: f64, outcome: &IterationOutcome, config: &OeoConfig) -> f64 {
    let fall = match outcome.branch {
        Branch::NewCluster => return g,
        Branch::RuleBased => !outcome.improved_cluster_best,
        Branch::RandomInCluster => outcome.improved_cluster_best,
    };
    let next = if fall { g - config.delta_g } else { g + config.delta_g };
    next.clamp(G_RANGE.0, G_RANGE.1)
}

/// Trims each cluster above `cap` members down to its `cap` cheapest, then,
/// when `max_population` is set, drops the globally most expensive members
/// until at most that many remain. The global best is never dropped. Empty
/// clusters are deleted; at least one cluster survives, and if all were
/// empty the first keeps `best` as its member.
pub fn prune(clusters: &mut Vec<Cluster>, best: &Solution, cap: usize, max_population: Option<usize>) {
    for c in clusters.iter_mut() {
        if c.len() <= cap {
            continue;
        }
        let ranked = c.ranked();
        let mut keep = vec![false; c.len()];
        for &i in ranked.iter().take(cap) {
            keep[i] = true;
        }
        if let Some(pos) = c.members.iter().position(|m| m == best) {
            if !keep[pos] {
                // Ties on cost can push the best past the cap; swap out the
                // most expensive survivor instead.
                if let Some(&evict) = ranked.iter().take(cap).rev().find(|&&i| i != pos) {
                    keep[evict] = false;
                }
                keep[pos] = true;
            }
        }
        let mut flags = keep.into_iter();
        c.members.retain(|_| flags.next().unwrap_or(false));
    }
    if let Some(limit) = max_population {
        trim_population(clusters, best, limit.max(1));
    }
    if clusters.iter().all(Cluster::is_empty) {
        clusters.truncate(1);
        if let Some(first) = clusters.first_mut() {
            first.members.push(best.clone());
        }
        return;
    }
    clusters.retain(|c| !c.is_empty());
}

fn trim_population(clusters: &mut [Cluster], best: &Solution, limit: usize) {
    let total: usize = clusters.iter().map(Cluster::len).sum();
    if total <= limit {
        return;
    }
    let mut all: Vec<(f64, usize, usize)> = clusters
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| c.members.iter().enumerate().map(move |(mi, m)| (m.cost, ci, mi)))
        .collect();
    // Most expensive first; later-born members go first among equal costs.
    all.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.cmp(&x.1)).then(y.2.cmp(&x.2)));
    let mut drop: Vec<Vec<bool>> = clusters.iter().map(|c| vec![false; c.len()]).collect();
    let mut excess = total - limit;
    for &(_, ci, mi) in &all {
        if excess == 0 {
            break;
        }
        if clusters[ci].members[mi] == *best {
            continue;
        }
        drop[ci][mi] = true;
        excess -= 1;
    }
    for (c, flags) in clusters.iter_mut().zip(drop) {
        let mut flags = flags.into_iter();
        c.members.retain(|_| !flags.next().unwrap_or(false));
    }
}

/// A running optimizer instance.
pub struct OeoEngine<'o, O: Objective + ?Sized> {
    config: OeoConfig,
    objective: &'o O,
    rng: RunRng,
    seed: u64,
    state: ObserverState,
    clusters: Vec<Cluster>,
    nearest: Option<NearestCache>,
    trace: Vec<TraceRecord>,
}

/// Nearest-center index per cluster, kept incrementally because centers never
/// move.
struct NearestCache {
    index: Vec<usize>,
    dist: Vec<f64>,
}

impl NearestCache {
    fn build(clusters: &[Cluster]) -> Self {
        let index = nearest_centers(clusters);
        let dist = index
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                if i == j {
                    f64::INFINITY
                } else {
                    sq_dist(&clusters[i].center, &clusters[j].center)
                }
            })
            .collect();
        Self { index, dist }
    }

    fn push(&mut self, clusters: &[Cluster]) {
        let k = clusters.len() - 1;
        let center = &clusters[k].center;
        let j = nearest_center_of(center, k, clusters);
        let dk = if j == k {
            f64::INFINITY
        } else {
            sq_dist(center, &clusters[j].center)
        };
        for i in 0..k {
            let d = sq_dist(&clusters[i].center, center);
            if d < self.dist[i] {
                self.dist[i] = d;
                self.index[i] = k;
            }
        }
        self.index.push(j);
        self.dist.push(dk);
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl<'o, O: Objective + ?Sized> OeoEngine<'o, O> {
    /// Seeds `n_clusters_init` clusters with one random evaluated center each.
    pub fn init(config: OeoConfig, objective: &'o O, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_stream(seed);
        let bounds = objective.bounds();
        let mut clusters = Vec::with_capacity(config.n_clusters_init);
        let mut best: Option<Solution> = None;
        for _ in 0..config.n_clusters_init {
            let point = bounds.random_point(&mut rng);
            let cost = evaluate(objective, &point)?;
            let sol = Solution::new(point, cost, 0);
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                best = Some(sol.clone());
            }
            clusters.push(Cluster::seeded(sol, config.g_start));
        }
        let nearest = matches!(
            config.effectiveness_metric,
            EffectivenessMetric::SubtractFromNearestFitness
        )
        .then(|| NearestCache::build(&clusters));
        let state = ObserverState {
            a: config.fixed_a.unwrap_or(config.a_start),
            b: config.b_start,
            g: config.g_start,
            iteration: 0,
            evaluations: config.n_clusters_init,
            best: best.expect("at least one initial cluster"),
        };
        let mut engine = Self {
            config,
            objective,
            rng,
            seed,
            state,
            clusters,
            nearest,
            trace: Vec::new(),
        };
        engine.record();
        Ok(engine)
    }

    pub fn config(&self) -> &OeoConfig {
        &self.config
    }

    pub fn state(&self) -> &ObserverState {
        &self.state
    }

    /// Direct access for experiments that pin parameters mid-run.
    pub fn state_mut(&mut self) -> &mut ObserverState {
        &mut self.state
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn best(&self) -> &Solution {
        &self.state.best
    }

    /// G of every cluster: the shared value repeated in OEO mode.
    pub fn g_values(&self) -> Vec<f64> {
        match self.config.mode {
            Mode::Oeo => vec![self.state.g; self.clusters.len()],
            Mode::MOeo => self.clusters.iter().map(|c| c.local_g).collect(),
        }
    }

    pub fn g_mean(&self) -> f64 {
        match self.config.mode {
            Mode::Oeo => self.state.g,
            Mode::MOeo => self.clusters.iter().map(|c| c.local_g).sum::<f64>() / self.clusters.len() as f64,
        }
    }

    pub fn is_done(&self) -> bool {
        self.state.evaluations >= self.config.max_evaluations
    }

    fn record(&mut self) {
        self.trace.push(TraceRecord {
            iteration: self.state.iteration,
            evaluations: self.state.evaluations,
            best_cost: self.state.best.cost,
            a: Some(self.state.a),
            b: Some(self.state.b),
            g_mean: Some(self.g_mean()),
            clusters: Some(self.clusters.len()),
        });
    }

    fn absorb(&mut self, sol: &Solution) -> bool {
        self.state.evaluations += 1;
        if sol.cost < self.state.best.cost {
            self.state.best = sol.clone();
            true
        } else {
            false
        }
    }

    fn select_cluster(&mut self) -> Result<usize> {
        let bounds = self.objective.bounds();
        let scores = effectiveness_scores(
            &self.clusters,
            self.config.effectiveness_metric,
            bounds,
            self.nearest.as_ref().map(|n| n.index.as_slice()),
        )?;
        let p = selection_distribution(&scores)?;
        let flat = flatten_distribution(&p, self.state.b, self.config.lambda)?;
        roulette_select(&flat, &mut self.rng)
    }

    /// One iteration: exactly one objective evaluation, then adaptation.
    /// Pruning is left to [`OeoEngine::advance`].
    pub fn step(&mut self) -> Result<IterationOutcome> {
        if self.clusters.is_empty() {
            return Err(OeoError::Empty("cluster list"));
        }
        let iteration = self.state.iteration + 1;
        let bounds = self.objective.bounds();
        let u1: f64 = self.rng.random();
        let a = self.config.fixed_a.unwrap_or(self.state.a);

        if u1 > a {
            let point = bounds.random_point(&mut self.rng);
            let cost = evaluate(self.objective, &point)?;
            let sol = Solution::new(point, cost, iteration);
            let improved_global_best = self.absorb(&sol);
            self.clusters.push(Cluster::seeded(sol, self.config.g_start));
            if let Some(cache) = self.nearest.as_mut() {
                cache.push(&self.clusters);
            }
            self.state.iteration = iteration;
            let outcome = IterationOutcome {
                branch: Branch::NewCluster,
                cluster_index: None,
                improved_cluster_best: false,
                improved_global_best,
            };
            if self.config.fixed_a.is_none() {
                self.state.a = adapt_a(self.state.a, &outcome, &self.config, &mut self.rng);
            }
            return Ok(outcome);
        }

        let k = self.select_cluster()?;
        let g = match self.config.mode {
            Mode::Oeo => self.state.g,
            Mode::MOeo => self.clusters[k].local_g,
        };
        let cluster = &self.clusters[k];
        let before = cluster.best_cost();
        let rule_based = cluster.len() >= self.config.rule_threshold() && {
            let u2: f64 = self.rng.random();
            match self.config.g_branch {
                GBranch::RuleBelowG => u2 < g,
                GBranch::RandomBelowG => u2 >= g,
            }
        };
        let (branch, point) = if rule_based {
            let p = propose_update(cluster, self.config.update_method, &mut self.rng, bounds)?;
            (Branch::RuleBased, p)
        } else {
            (
                Branch::RandomInCluster,
                random_in_cluster_inflated(cluster, bounds, self.config.box_inflation, &mut self.rng)?,
            )
        };
        let cost = evaluate(self.objective, &point)?;
        let sol = Solution::new(point, cost, iteration);
        let improved_global_best = self.absorb(&sol);
        self.clusters[k].members.push(sol);
        let outcome = IterationOutcome {
            branch,
            cluster_index: Some(k),
            improved_cluster_best: cost < before,
            improved_global_best,
        };

        let new_g = adapt_g(g, &outcome, &self.config);
        match self.config.mode {
            Mode::Oeo => self.state.g = new_g,
            Mode::MOeo => self.clusters[k].local_g = new_g,
        }
        if self.config.fixed_a.is_none() {
            self.state.a = adapt_a(self.state.a, &outcome, &self.config, &mut self.rng);
        }
        self.state.b = adapt_b(self.state.b, &outcome, &self.config);
        self.state.iteration = iteration;
        Ok(outcome)
    }

    pub fn prune(&mut self) {
        let before = self.clusters.len();
        prune(
            &mut self.clusters,
            &self.state.best,
            self.config.per_cluster_cap,
            self.config.max_population,
        );
        if self.clusters.len() != before {
            if let Some(cache) = self.nearest.as_mut() {
                *cache = NearestCache::build(&self.clusters);
            }
        }
    }

    /// One step plus the periodic prune and a trace row.
    pub fn advance(&mut self) -> Result<IterationOutcome> {
        let outcome = self.step()?;
        if self.state.iteration.is_multiple_of(self.config.prune_period) {
            self.prune();
        }
        self.record();
        Ok(outcome)
    }

    /// Advances until `evaluations` reaches `target` or the budget runs out.
    pub fn run_until(&mut self, target: usize) -> Result<()> {
        let stop = target.min(self.config.max_evaluations);
        while self.state.evaluations < stop {
            self.advance()?;
        }
        Ok(())
    }

    /// Places an externally evaluated solution into the cluster whose center
    /// is nearest. Counts as no evaluation of this engine.
    pub fn inject(&mut self, sol: Solution) {
        let k = nearest_center_of(&sol.point, usize::MAX, &self.clusters);
        if sol.cost < self.state.best.cost {
            self.state.best = sol.clone();
        }
        self.clusters[k].members.push(sol);
    }

    pub fn into_result(self) -> RunResult {
        RunResult {
            algorithm: self.config.mode.name().to_string(),
            seed: self.seed,
            evaluations: self.state.evaluations,
            best: self.state.best,
            trace: self.trace,
        }
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }
}

/// Runs the engine to its evaluation budget.
pub fn run<O: Objective + ?Sized>(config: &OeoConfig, objective: &O, seed: u64) -> Result<RunResult> {
    let mut engine = OeoEngine::init(config.clone(), objective, seed)?;
    engine.run_until(usize::MAX)?;
    Ok(engine.into_result())
}
