use std::sync::Mutex;

use oeo_core::benchmarks::{BenchmarkKind, LandscapeSpec};
use oeo_core::engine::{A_RANGE, B_RANGE, G_RANGE};
use oeo_core::{run_oeo, Bounds, FnObjective, Objective, OeoConfig, OeoEngine, Result};

fn sphere5() -> LandscapeSpec {
    LandscapeSpec::standard(BenchmarkKind::Sphere, 5).unwrap()
}

#[test]
fn oeo_solves_sphere_in_most_seeds() {
    let f = sphere5();
    let cfg = OeoConfig::oeo(5_000);
    let costs: Vec<f64> = (0..20).map(|s| run_oeo(&cfg, &f, s).unwrap().final_cost()).collect();
    let hits = costs.iter().filter(|c| **c < 0.1).count();
    assert!(hits >= 18, "{hits}/20 below 0.1: {costs:?}");
}

#[test]
fn budget_equal_to_cluster_count_returns_after_init() {
    let f = sphere5();
    let cfg = OeoConfig::oeo(10);
    let mut e = OeoEngine::init(cfg.clone(), &f, 3).unwrap();
    let best_center = e
        .clusters()
        .iter()
        .map(|c| c.members[0].cost)
        .fold(f64::INFINITY, f64::min);
    assert!(e.is_done());
    e.run_until(usize::MAX).unwrap();
    let r = e.into_result();
    assert_eq!(r.evaluations, 10);
    assert_eq!(r.final_cost(), best_center);
}

#[test]
fn same_seed_same_trace() {
    let f = LandscapeSpec::standard(BenchmarkKind::Rastrigin, 4).unwrap();
    for cfg in [OeoConfig::oeo(1_500), OeoConfig::m_oeo(1_500)] {
        let a = run_oeo(&cfg, &f, 21).unwrap();
        let b = run_oeo(&cfg, &f, 21).unwrap();
        assert_eq!(a.trace_csv(), b.trace_csv());
        assert_eq!(a.best, b.best);
        let c = run_oeo(&cfg, &f, 22).unwrap();
        assert_ne!(a.trace_csv(), c.trace_csv());
    }
}

/// Records every cost the engine asks for.
struct Recording<'a> {
    inner: &'a LandscapeSpec,
    seen: Mutex<Vec<f64>>,
}

impl Objective for Recording<'_> {
    fn bounds(&self) -> &Bounds {
        self.inner.bounds()
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let c = self.inner.eval(x)?;
        self.seen.lock().unwrap().push(c);
        Ok(c)
    }
}

#[test]
fn trace_tracks_running_minimum_and_budget_is_exact() {
    let base = LandscapeSpec::standard(BenchmarkKind::Ackley, 3).unwrap();
    for cfg in [OeoConfig::oeo(2_000), OeoConfig::m_oeo(2_000)] {
        let rec = Recording {
            inner: &base,
            seen: Mutex::new(Vec::new()),
        };
        let mut e = OeoEngine::init(cfg.clone(), &rec, 8).unwrap();
        let mut steps = 0;
        while !e.is_done() {
            e.advance().unwrap();
            steps += 1;
        }
        assert_eq!(e.state().evaluations, cfg.n_clusters_init + steps);
        let r = e.into_result();
        let seen = rec.seen.into_inner().unwrap();
        assert_eq!(seen.len(), 2_000);
        for row in &r.trace {
            let running = seen[..row.evaluations].iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(row.best_cost, running, "row {}", row.iteration);
        }
        assert!(r.trace_is_monotone());
    }
}

#[test]
fn parameters_stay_clamped_under_extreme_steps() {
    // Huge step sizes push every adaptation straight into its clamp.
    let f = FnObjective::new(Bounds::cube(2, -1.0, 1.0).unwrap(), |x: &[f64]| {
        (x[0] * 7.0).sin() + x[1].abs()
    });
    let cfg = OeoConfig {
        delta_a: 5.0,
        delta_g: 5.0,
        step_scale: 10.0,
        ..OeoConfig::m_oeo(3_000)
    };
    let mut e = OeoEngine::init(cfg, &f, 1).unwrap();
    while !e.is_done() {
        e.advance().unwrap();
        let s = e.state();
        assert!((A_RANGE.0..=A_RANGE.1).contains(&s.a));
        assert!((B_RANGE.0..=B_RANGE.1).contains(&s.b));
        assert!(e
            .clusters()
            .iter()
            .all(|c| (G_RANGE.0..=G_RANGE.1).contains(&c.local_g)));
    }
}

#[test]
fn fixed_a_one_never_opens_clusters_after_init() {
    let f = sphere5();
    let cfg = OeoConfig {
        fixed_a: Some(1.0),
        max_population: None,
        prune_period: usize::MAX,
        ..OeoConfig::oeo(600)
    };
    let mut e = OeoEngine::init(cfg, &f, 2).unwrap();
    while !e.is_done() {
        let out = e.step().unwrap();
        assert_ne!(out.branch, oeo_core::Branch::NewCluster);
    }
    assert_eq!(e.clusters().len(), 10);
}
