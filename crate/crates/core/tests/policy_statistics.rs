use oeo_core::policies::{
    flatten_distribution, propose_update, random_in_cluster, roulette_select, SINGLETON_SIGMA_FRACTION,
};
use oeo_core::{seeded_stream, Bounds, Cluster, Solution, UpdateMethod};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_ok(weights: &[f64], draws: usize, seed: u64) -> (bool, Vec<f64>) {
    let mut rng = seeded_stream(seed);
    let mut counts = vec![0usize; weights.len()];
    for _ in 0..draws {
        counts[roulette_select(weights, &mut rng).unwrap()] += 1;
    }
    let total: f64 = weights.iter().sum();
    let mut stat = 0.0;
    let mut dof = 0;
    for (w, c) in weights.iter().zip(&counts) {
        if *w == 0.0 {
            assert_eq!(*c, 0, "zero-weight index drawn");
            continue;
        }
        let expected = draws as f64 * w / total;
        stat += (*c as f64 - expected).powi(2) / expected;
        dof += 1;
    }
    let critical = ChiSquared::new((dof - 1) as f64).unwrap().inverse_cdf(0.99);
    let freqs = counts.iter().map(|c| *c as f64 / draws as f64).collect();
    (stat < critical, freqs)
}

#[test]
fn roulette_examples() {
    let mut rng = seeded_stream(1);
    assert!((0..1000).all(|_| roulette_select(&[1.0, 0.0, 0.0], &mut rng).unwrap() == 0));

    let (ok, f) = chi_square_ok(&[1.0, 1.0], 10_000, 2);
    assert!(ok && (0.48..=0.52).contains(&f[0]), "{f:?}");
    let (ok, f) = chi_square_ok(&[3.0, 1.0], 10_000, 3);
    assert!(ok && (f[0] - 0.75).abs() <= 0.02, "{f:?}");
}

#[test]
fn roulette_matches_arbitrary_weights() {
    let mut passed = 0;
    for seed in 0..20 {
        let mut rng = seeded_stream(100 + seed);
        let w: Vec<f64> = (0..6)
            .map(|i| {
                if i == 2 {
                    0.0
                } else {
                    rand::Rng::random::<f64>(&mut rng) + 0.05
                }
            })
            .collect();
        passed += usize::from(chi_square_ok(&w, 10_000, 200 + seed).0);
    }
    // At significance 0.01 an occasional rejection is expected.
    assert!(passed >= 18, "{passed}/20");
}

#[test]
fn singleton_cluster_samples_have_nominal_spread() {
    let bounds = Bounds::cube(3, -5.0, 5.0).unwrap();
    let c = Cluster::seeded(Solution::new(vec![0.0; 3], 1.0, 0), 0.2);
    let mut rng = seeded_stream(4);
    let n = 10_000;
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|_| random_in_cluster(&c, &bounds, &mut rng).unwrap())
        .collect();
    let nominal = SINGLETON_SIGMA_FRACTION * 10.0;
    for d in 0..3 {
        let mean = samples.iter().map(|s| s[d]).sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var.sqrt() / nominal - 1.0).abs() < 0.2, "sigma {}", var.sqrt());
    }
}

fn member_strategy(d: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec((prop::collection::vec(0.2f64..0.6, d), -10.0f64..10.0), 2..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn flatten_preserves_order_and_sums_to_one(
        raw in prop::collection::vec(1e-6f64..1.0, 2..20),
        b in prop::sample::select(vec![0.0, 0.01, 0.16, 1.0, 10.0]),
    ) {
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let f = flatten_distribution(&p, b, 18.0).unwrap();
        prop_assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..p.len() {
            for j in 0..p.len() {
                if p[i] < p[j] {
                    prop_assert!(f[i] <= f[j]);
                }
            }
        }
    }

    #[test]
    fn flatten_ratio_is_non_increasing_in_b(raw in prop::collection::vec(1e-4f64..1.0, 2..15)) {
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let mut last = f64::INFINITY;
        for b in [0.0, 0.01, 0.05, 0.16, 0.5, 1.0, 3.0, 10.0, 100.0] {
            let f = flatten_distribution(&p, b, 18.0).unwrap();
            let ratio = f.iter().copied().fold(0.0, f64::max) / f.iter().copied().fold(1.0, f64::min);
            prop_assert!(ratio <= last * (1.0 + 1e-12));
            last = ratio;
        }
    }

    /// Convex-combination methods never leave the members' bounding box.
    #[test]
    fn convex_updates_stay_in_member_hull(members in member_strategy(3), seed in 0u64..1000) {
        let bounds = Bounds::cube(3, 0.0, 1.0).unwrap();
        let sols = members.iter().map(|(p, c)| Solution::new(p.clone(), *c, 0)).collect();
        let cluster = Cluster::from_members(sols, 0.2);
        let (lo, hi) = cluster.extent().unwrap();
        let mut rng = seeded_stream(seed);
        for method in [
            UpdateMethod::MoveThroughBest,
            UpdateMethod::Select2SolsChooseOneBetween,
            UpdateMethod::ClusterMean,
            UpdateMethod::MeanOfElites { elite_count: 3 },
            UpdateMethod::GetWeightedMeanOfSols,
            UpdateMethod::GetWeightedMeanOfElites { elite_count: 3 },
        ] {
            let x = propose_update(&cluster, method, &mut rng, &bounds).unwrap();
            for d in 0..3 {
                prop_assert!(x[d] >= lo[d] - 1e-12 && x[d] <= hi[d] + 1e-12, "{:?} left the hull", method);
            }
        }
    }

    /// Proposals that overshoot the box are clamped, not rejected.
    #[test]
    fn every_update_lands_in_bounds(members in member_strategy(2), seed in 0u64..1000) {
        let bounds = Bounds::cube(2, 0.25, 0.55).unwrap();
        let sols = members.iter().map(|(p, c)| Solution::new(p.clone(), *c, 0)).collect();
        let cluster = Cluster::from_members(sols, 0.2);
        let mut rng = seeded_stream(seed);
        for method in [
            UpdateMethod::EitherRandomlyOrThroughBest { p: 0.5 },
            UpdateMethod::MoveThroughBest,
            UpdateMethod::ClusterMean,
        ] {
            let x = propose_update(&cluster, method, &mut rng, &bounds).unwrap();
            prop_assert!(bounds.contains(&x));
        }
    }
}
