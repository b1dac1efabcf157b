//! Comparison optimizers: global-best PSO, the Bat algorithm, and plain
//! random search. All of them share the [`RunResult`] trace format and
//! spend exactly their evaluation budget.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OeoError, Result};
use crate::objective::{evaluate, Objective};
use crate::space::{seeded_stream, Bounds, RunRng, Solution};
use crate::trace::{RunResult, TraceRecord};

/// Velocity limit per dimension as a fraction of the domain width.
pub const PSO_VELOCITY_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_evaluations: usize,
    /// Outer rounds between proposals when PSO seeds the gradient hybrid.
    pub reinit_period: Option<usize>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            inertia: 0.729,
            c1: 1.49445,
            c2: 1.49445,
            max_evaluations: 5_000,
            reinit_period: None,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OeoError::InvalidConfig(m));
        if self.swarm_size < 2 {
            return bad(format!("swarm_size = {} must be at least 2", self.swarm_size));
        }
        for (name, v) in [("inertia", self.inertia), ("c1", self.c1), ("c2", self.c2)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        if self.max_evaluations < self.swarm_size {
            return bad(format!(
                "max_evaluations {} is below swarm_size {}",
                self.max_evaluations, self.swarm_size
            ));
        }
        if self.reinit_period == Some(0) {
            return bad("reinit_period must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub cost: f64,
    pub best: Solution,
}

/// A global-best particle swarm that can be advanced one generation at a
/// time.
pub struct Pso<'o, O: Objective + ?Sized> {
    config: PsoConfig,
    objective: &'o O,
    rng: RunRng,
    seed: u64,
    particles: Vec<Particle>,
    best: Solution,
    evaluations: usize,
    iteration: usize,
    trace: Vec<TraceRecord>,
}

impl<'o, O: Objective + ?Sized> Pso<'o, O> {
    /// Random positions, initial velocities `(u - x) / 2` for a second
    /// random point `u`.
    pub fn init(config: PsoConfig, objective: &'o O, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_stream(seed);
        let bounds = objective.bounds();
        let mut positions = Vec::with_capacity(config.swarm_size);
        let mut velocities = Vec::with_capacity(config.swarm_size);
        for _ in 0..config.swarm_size {
            let x = bounds.random_point(&mut rng);
            let u = bounds.random_point(&mut rng);
            velocities.push(x.iter().zip(&u).map(|(a, b)| 0.5 * (b - a)).collect());
            positions.push(x);
        }
        Self::build(config, objective, seed, rng, positions, velocities)
    }

    /// Starts from explicit positions and velocities.
    pub fn from_swarm(
        config: PsoConfig,
        objective: &'o O,
        seed: u64,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let config = PsoConfig {
            swarm_size: positions.len(),
            ..config
        };
        config.validate()?;
        if velocities.len() != positions.len() {
            return Err(OeoError::DimensionMismatch {
                expected: positions.len(),
                got: velocities.len(),
            });
        }
        let bounds = objective.bounds();
        for (x, v) in positions.iter().zip(&velocities) {
            if !bounds.contains(x) || v.len() != x.len() {
                return Err(OeoError::OutOfBounds);
            }
        }
        let rng = seeded_stream(seed);
        Self::build(config, objective, seed, rng, positions, velocities)
    }

    fn build(
        config: PsoConfig,
        objective: &'o O,
        seed: u64,
        rng: RunRng,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut particles = Vec::with_capacity(positions.len());
        for (position, velocity) in positions.into_iter().zip(velocities) {
            let cost = evaluate(objective, &position)?;
            let best = Solution::new(position.clone(), cost, 0);
            particles.push(Particle {
                position,
                velocity,
                cost,
                best,
            });
        }
        let best = particles
            .iter()
            .min_by(|a, b| a.cost.total_cmp(&b.cost))
            .map(|p| p.best.clone())
            .ok_or(OeoError::Empty("swarm"))?;
        let evaluations = particles.len();
        let mut pso = Self {
            config,
            objective,
            rng,
            seed,
            particles,
            best,
            evaluations,
            iteration: 0,
            trace: Vec::new(),
        };
        pso.record();
        Ok(pso)
    }

    fn record(&mut self) {
        self.trace
            .push(TraceRecord::plain(self.iteration, self.evaluations, self.best.cost));
    }

    pub fn best(&self) -> &Solution {
        &self.best
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn config(&self) -> &PsoConfig {
        &self.config
    }

    pub fn is_done(&self) -> bool {
        self.evaluations >= self.config.max_evaluations
    }

    /// One generation. Stops part-way through the swarm when the budget
    /// runs out.
    pub fn step(&mut self) -> Result<()> {
        let bounds = self.objective.bounds();
        self.iteration += 1;
        let n = self.particles.len();
        for i in 0..n {
            if self.is_done() {
                break;
            }
            let gbest = &self.best.point;
            let p = &mut self.particles[i];
            for d in 0..p.position.len() {
                let r1: f64 = self.rng.random();
                let r2: f64 = self.rng.random();
                let vmax = PSO_VELOCITY_FRACTION * bounds.width(d);
                let v = self.config.inertia * p.velocity[d]
                    + self.config.c1 * r1 * (p.best.point[d] - p.position[d])
                    + self.config.c2 * r2 * (gbest[d] - p.position[d]);
                p.velocity[d] = v.clamp(-vmax, vmax);
                let x = p.position[d] + p.velocity[d];
                let (lo, hi) = (bounds.lower()[d], bounds.upper()[d]);
                if x < lo || x > hi {
                    p.velocity[d] = 0.0;
                }
                p.position[d] = x.clamp(lo, hi);
            }
            let cost = evaluate(self.objective, &p.position)?;
            self.evaluations += 1;
            p.cost = cost;
            if cost < p.best.cost {
                p.best = Solution::new(p.position.clone(), cost, self.iteration);
            }
            if cost < self.best.cost {
                self.best = Solution::new(p.position.clone(), cost, self.iteration);
            }
        }
        self.record();
        Ok(())
    }

    /// Generations until `evaluations` reaches `target` or the budget.
    pub fn run_until(&mut self, target: usize) -> Result<()> {
        let stop = target.min(self.config.max_evaluations);
        while self.evaluations < stop {
            self.step()?;
        }
        Ok(())
    }

    /// Moves the worst particle onto an externally evaluated solution.
    pub fn inject(&mut self, sol: Solution) {
        if let Some(worst) = self.particles.iter_mut().max_by(|a, b| a.cost.total_cmp(&b.cost)) {
            worst.position = sol.point.clone();
            worst.cost = sol.cost;
            worst.velocity.iter_mut().for_each(|v| *v = 0.0);
            if sol.cost < worst.best.cost {
                worst.best = sol.clone();
            }
        }
        if sol.cost < self.best.cost {
            self.best = sol;
        }
    }

    pub fn into_result(self) -> RunResult {
        RunResult {
            algorithm: "PSO".to_string(),
            seed: self.seed,
            best: self.best,
            evaluations: self.evaluations,
            trace: self.trace,
        }
    }
}

pub fn pso_run<O: Objective + ?Sized>(config: &PsoConfig, objective: &O, seed: u64) -> Result<RunResult> {
    let mut pso = Pso::init(config.clone(), objective, seed)?;
    pso.run_until(usize::MAX)?;
    Ok(pso.into_result())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatConfig {
    pub population: usize,
    pub freq_min: f64,
    pub freq_max: f64,
    pub loudness0: f64,
    pub pulse_rate0: f64,
    pub alpha: f64,
    pub gamma_decay: f64,
    /// Local walk radius as a fraction of the domain width, multiplied by
    /// the mean loudness.
    pub walk_scale: f64,
    pub max_evaluations: usize,
}

impl Default for BatConfig {
    fn default() -> Self {
        Self {
            population: 30,
            freq_min: 0.0,
            freq_max: 2.0,
            loudness0: 0.5,
            pulse_rate0: 0.5,
            alpha: 0.9,
            gamma_decay: 0.9,
            walk_scale: 0.03,
            max_evaluations: 5_000,
        }
    }
}

impl BatConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OeoError::InvalidConfig(m));
        if self.population < 1 {
            return bad("population must be at least 1".into());
        }
        if !(self.freq_min < self.freq_max) {
            return bad(format!(
                "need freq_min < freq_max, got {} and {}",
                self.freq_min, self.freq_max
            ));
        }
        for (name, v) in [
            ("loudness0", self.loudness0),
            ("pulse_rate0", self.pulse_rate0),
            ("alpha", self.alpha),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if !(self.gamma_decay >= 0.0 && self.walk_scale >= 0.0) {
            return bad("gamma_decay and walk_scale must be non-negative".into());
        }
        if self.max_evaluations < self.population {
            return bad(format!(
                "max_evaluations {} is below population {}",
                self.max_evaluations, self.population
            ));
        }
        Ok(())
    }
}

/// The Bat algorithm: frequency-tuned velocities towards the best bat, a
/// loudness-scaled local walk around the best gated by the pulse rate, and
/// acceptance gated by loudness. The reported best only moves through
/// accepted solutions.
pub fn bat_run<O: Objective + ?Sized>(config: &BatConfig, objective: &O, seed: u64) -> Result<RunResult> {
    config.validate()?;
    let mut rng = seeded_stream(seed);
    let bounds = objective.bounds();
    let dims = bounds.dims();
    let n = config.population;

    let mut x: Vec<Vec<f64>> = (0..n).map(|_| bounds.random_point(&mut rng)).collect();
    let mut v = vec![vec![0.0; dims]; n];
    let mut cost = Vec::with_capacity(n);
    for p in &x {
        cost.push(evaluate(objective, p)?);
    }
    let mut loudness = vec![config.loudness0; n];
    let mut pulse = vec![config.pulse_rate0; n];
    let first = (0..n).min_by(|&a, &b| cost[a].total_cmp(&cost[b])).expect("population");
    let mut best = Solution::new(x[first].clone(), cost[first], 0);
    let mut evaluations = n;
    let mut iteration = 0;
    let mut trace = vec![TraceRecord::plain(0, evaluations, best.cost)];

    while evaluations < config.max_evaluations {
        iteration += 1;
        let mean_loudness = loudness.iter().sum::<f64>() / n as f64;
        for i in 0..n {
            if evaluations >= config.max_evaluations {
                break;
            }
            let beta: f64 = rng.random();
            let freq = config.freq_min + (config.freq_max - config.freq_min) * beta;
            let mut candidate = Vec::with_capacity(dims);
            for d in 0..dims {
                v[i][d] += (x[i][d] - best.point[d]) * freq;
                candidate.push(x[i][d] + v[i][d]);
            }
            if rng.random::<f64>() > pulse[i] {
                for (d, c) in candidate.iter_mut().enumerate() {
                    let eps: f64 = rng.random_range(-1.0..1.0);
                    *c = best.point[d] + eps * mean_loudness * config.walk_scale * bounds.width(d);
                }
            }
            let candidate = clamp_into(bounds, candidate);
            let c = evaluate(objective, &candidate)?;
            evaluations += 1;
            if c <= cost[i] && rng.random::<f64>() < loudness[i] {
                x[i] = candidate;
                cost[i] = c;
                loudness[i] *= config.alpha;
                pulse[i] = config.pulse_rate0 * (1.0 - (-config.gamma_decay * iteration as f64).exp());
                if c < best.cost {
                    best = Solution::new(x[i].clone(), c, iteration);
                }
            }
        }
        trace.push(TraceRecord::plain(iteration, evaluations, best.cost));
    }
    Ok(RunResult {
        algorithm: "Bat".to_string(),
        seed,
        best,
        evaluations,
        trace,
    })
}

fn clamp_into(bounds: &Bounds, mut x: Vec<f64>) -> Vec<f64> {
    for (d, v) in x.iter_mut().enumerate() {
        *v = v.clamp(bounds.lower()[d], bounds.upper()[d]);
    }
    x
}

/// Independent uniform samples; one trace row per evaluation.
pub fn random_search<O: Objective + ?Sized>(objective: &O, max_evaluations: usize, seed: u64) -> Result<RunResult> {
    if max_evaluations == 0 {
        return Err(OeoError::InvalidConfig("max_evaluations must be at least 1".into()));
    }
    let mut rng = seeded_stream(seed);
    let bounds = objective.bounds();
    let mut best: Option<Solution> = None;
    let mut trace = Vec::with_capacity(max_evaluations);
    for i in 1..=max_evaluations {
        let x = bounds.random_point(&mut rng);
        let c = evaluate(objective, &x)?;
        if best.as_ref().is_none_or(|b| c < b.cost) {
            best = Some(Solution::new(x, c, i));
        }
        trace.push(TraceRecord::plain(i, i, best.as_ref().map_or(c, |b| b.cost)));
    }
    Ok(RunResult {
        algorithm: "RandomSearch".to_string(),
        seed,
        best: best.expect("at least one evaluation"),
        evaluations: max_evaluations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnObjective;

    fn sphere(d: usize) -> FnObjective<impl Fn(&[f64]) -> f64 + Sync> {
        FnObjective::new(Bounds::cube(d, -5.0, 5.0).unwrap(), |x: &[f64]| {
            x.iter().map(|v| v * v).sum()
        })
    }

    #[test]
    fn stationary_swarm_stays_put() {
        let f = sphere(2);
        let p = vec![1.0, -2.0];
        let cfg = PsoConfig {
            max_evaluations: 400,
            ..PsoConfig::default()
        };
        let mut pso = Pso::from_swarm(cfg, &f, 3, vec![p.clone(); 4], vec![vec![0.0; 2]; 4]).unwrap();
        pso.run_until(usize::MAX).unwrap();
        for particle in pso.particles() {
            assert_eq!(particle.position, p);
            assert_eq!(particle.velocity, vec![0.0, 0.0]);
        }
        assert_eq!(pso.best().point, p);
        assert_eq!(pso.evaluations(), 400);
    }

    #[test]
    fn budgets_are_exact_and_bounds_respected() {
        let f = sphere(3);
        let pso = pso_run(
            &PsoConfig {
                max_evaluations: 101,
                ..Default::default()
            },
            &f,
            1,
        )
        .unwrap();
        assert_eq!(pso.evaluations, 101);
        assert_eq!(pso.trace.last().unwrap().evaluations, 101);
        let bat = bat_run(
            &BatConfig {
                max_evaluations: 101,
                ..Default::default()
            },
            &f,
            1,
        )
        .unwrap();
        assert_eq!(bat.evaluations, 101);
        assert!(f.bounds().contains(&bat.best.point) && f.bounds().contains(&pso.best.point));
        assert!(pso.trace_is_monotone() && bat.trace_is_monotone());
    }

    #[test]
    fn silent_bats_never_accept() {
        let f = sphere(5);
        let cfg = BatConfig {
            loudness0: 0.0,
            max_evaluations: 2_000,
            ..Default::default()
        };
        let r = bat_run(&cfg, &f, 9).unwrap();
        let initial = r.trace[0].best_cost;
        assert!(r.trace.iter().all(|t| t.best_cost == initial));
    }

    #[test]
    fn seeded_runs_repeat() {
        let f = sphere(4);
        let cfg = PsoConfig {
            max_evaluations: 600,
            ..Default::default()
        };
        assert_eq!(pso_run(&cfg, &f, 5).unwrap(), pso_run(&cfg, &f, 5).unwrap());
        let cfg = BatConfig {
            max_evaluations: 600,
            ..Default::default()
        };
        assert_eq!(bat_run(&cfg, &f, 5).unwrap(), bat_run(&cfg, &f, 5).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(PsoConfig {
            swarm_size: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BatConfig {
            freq_min: 2.0,
            freq_max: 2.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(random_search(&sphere(2), 0, 1).is_err());
    }
}
