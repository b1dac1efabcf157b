use nalgebra::DMatrix;
use oeo_core::numerics::{adam_step, gev_power, random_spd, rayleigh, AdamParams, AdamState, SpdMatrix};
use oeo_core::seeded_stream;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense reference: eigenpairs of `den^-1 num` through `L^-1 num L^-T`.
fn dense_gev(num: &SpdMatrix, den: &SpdMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let l = den.matrix().clone().cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let s = &linv * num.matrix() * linv.transpose();
    let eig = (0.5 * (&s + s.transpose())).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| linv.transpose() * eig.eigenvectors.column(i))
            .collect::<Vec<_>>(),
    );
    (vals, vecs)
}

#[test]
fn top_eigenvector_maximizes_rayleigh() {
    let mut rng = seeded_stream(1);
    for _ in 0..5 {
        let num = random_spd(4, &mut rng, 1e3);
        let den = random_spd(4, &mut rng, 1e3);
        let sol = gev_power(&num, &den, 1, 7).unwrap();
        let top = rayleigh(&sol.vector(0), &num, &den).unwrap();
        let (oracle, _) = dense_gev(&num, &den);
        assert!((top - oracle[0]).abs() <= 1e-6 * oracle[0]);
        for _ in 0..1000 {
            let w: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            assert!(rayleigh(&w, &num, &den).unwrap() <= top + 1e-9);
        }
    }
}

#[test]
fn six_by_six_matches_dense_oracle() {
    let mut rng = seeded_stream(6);
    for _ in 0..20 {
        let num = random_spd(6, &mut rng, 1e4);
        let den = random_spd(6, &mut rng, 1e4);
        let sol = gev_power(&num, &den, 3, 50).unwrap();
        let (oracle, oracle_vecs) = dense_gev(&num, &den);
        for j in 0..3 {
            assert!(
                ((sol.values[j] - oracle[j]) / oracle[j]).abs() <= 1e-6,
                "{j}: {} vs {}",
                sol.values[j],
                oracle[j]
            );
            let w = sol.vector(j);
            // Rayleigh quotient at each returned vector equals its eigenvalue,
            // and the vector is den-normalized.
            assert!((rayleigh(&w, &num, &den).unwrap() - sol.values[j]).abs() <= 1e-6 * sol.values[j]);
            assert!((den.quad(&w) - 1.0).abs() <= 1e-8);
            // Same direction as the dense eigenvector, up to sign.
            let o: Vec<f64> = oracle_vecs.column(j).iter().copied().collect();
            let cos = w.iter().zip(&o).map(|(a, b)| a * b).sum::<f64>()
                / (w.iter().map(|v| v * v).sum::<f64>() * o.iter().map(|v| v * v).sum::<f64>()).sqrt();
            assert!(cos.abs() > 1.0 - 1e-6, "{j}: cos {cos}");
        }
    }
}

#[test]
fn random_spd_draws_are_valid() {
    let mut rng = seeded_stream(7);
    for t in 0..1000 {
        let n = 1 + t % 8;
        let m = random_spd(n, &mut rng, 1e4);
        // The constructor re-checks symmetry and positive definiteness.
        SpdMatrix::new(m.matrix().clone()).unwrap();
        let ev = m.matrix().clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = ev.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(lo >= 1e-3, "min eigenvalue {lo}");
        assert!(hi / lo <= 1e4 * (1.0 + 1e-9), "condition {}", hi / lo);
    }
    let one = random_spd(1, &mut rng, 1e4);
    assert!(one.matrix()[(0, 0)] > 0.0);
    let flat = random_spd(5, &mut rng, 1.0);
    let scale = flat.matrix()[(0, 0)];
    assert!((flat.matrix() - DMatrix::identity(5, 5) * scale).abs().max() < 1e-10);
}

#[test]
fn adam_trajectories_repeat() {
    let run = || {
        let mut x = vec![1.0, -2.0, 0.5];
        let mut st = AdamState::new(3, AdamParams::default());
        for _ in 0..50 {
            let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            adam_step(&mut x, &g, &mut st);
        }
        x
    };
    assert_eq!(run(), run());
}
