//! Benchmark landscapes: the classic homogeneous multimodal functions, a
//! generator for Gaussian-peak landscapes whose peaks crowd into one dense
//! region, and a box-penalty constrained problem.

use std::f64::consts::{E, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OeoError, Result};
use crate::objective::Objective;
use crate::space::{seeded_stream, Bounds};

/// Side of the dense sub-box as a fraction of each dimension's width.
pub const DENSE_REGION_FRACTION: f64 = 0.10;
/// Minimum depth gap between the deepest peak and every other peak.
pub const DEEPEST_MARGIN: f64 = 0.1;
pub const PENALTY_BAND: (f64, f64) = (0.95, 1.05);
pub const PENALTY_WEIGHT: f64 = 1e6;
/// Unconstrained minimizer of the penalty problem's smooth part; it lies
/// outside the feasible band.
pub const PENALTY_TARGET: f64 = 1.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Sphere,
    Rastrigin,
    Ackley,
    Griewank,
    Gaussian,
    Penalty,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 6] = [
        Self::Sphere,
        Self::Rastrigin,
        Self::Ackley,
        Self::Griewank,
        Self::Gaussian,
        Self::Penalty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Rastrigin => "rastrigin",
            Self::Ackley => "ackley",
            Self::Griewank => "griewank",
            Self::Gaussian => "gaussian",
            Self::Penalty => "penalty",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Default search box for the closed-form functions.
    pub fn default_bounds(self, dims: usize) -> Result<Bounds> {
        let (lo, hi) = match self {
            Self::Sphere => (-5.0, 5.0),
            Self::Rastrigin => (-5.12, 5.12),
            Self::Ackley => (-32.768, 32.768),
            Self::Griewank => (-600.0, 600.0),
            Self::Gaussian => (0.0, 1.0),
            Self::Penalty => (0.8, 1.2),
        };
        Bounds::cube(dims, lo, hi)
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, Self::Penalty)
    }
}

/// One well of a Gaussian landscape; `depth` is positive and the well
/// bottoms out near `-depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: Vec<f64>,
    pub width: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownOptimum {
    pub value: f64,
    pub location: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSpec {
    pub name: BenchmarkKind,
    pub dims: usize,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peaks: Option<Vec<Peak>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_weight: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub optimum: KnownOptimum,
}

impl LandscapeSpec {
    /// A closed-form benchmark on its default box.
    pub fn standard(kind: BenchmarkKind, dims: usize) -> Result<Self> {
        let bounds = kind.default_bounds(dims)?;
        let optimum = match kind {
            BenchmarkKind::Sphere | BenchmarkKind::Rastrigin | BenchmarkKind::Ackley | BenchmarkKind::Griewank => {
                KnownOptimum {
                    value: 0.0,
                    location: vec![0.0; dims],
                }
            }
            BenchmarkKind::Penalty => {
                let edge = PENALTY_BAND.1;
                KnownOptimum {
                    value: dims as f64 * (edge - PENALTY_TARGET).powi(2),
                    location: vec![edge; dims],
                }
            }
            BenchmarkKind::Gaussian => {
                return Err(OeoError::InvalidConfig(
                    "gaussian landscapes come from gaussian_landscape".into(),
                ))
            }
        };
        Ok(Self {
            name: kind,
            dims,
            bounds,
            peaks: None,
            penalty_weight: (kind == BenchmarkKind::Penalty).then_some(PENALTY_WEIGHT),
            seed: 0,
            optimum,
        })
    }

    /// A Gaussian landscape from explicit peaks on `bounds`. The recorded
    /// optimum is found by local refinement from every peak center.
    pub fn from_peaks(bounds: Bounds, peaks: Vec<Peak>, seed: u64) -> Result<Self> {
        if peaks.is_empty() {
            return Err(OeoError::Empty("peaks"));
        }
        for p in &peaks {
            bounds.check_dims(&p.center)?;
            if !(p.width > 0.0 && p.depth > 0.0) {
                return Err(OeoError::InvalidConfig(format!(
                    "peak width {} and depth {} must be positive",
                    p.width, p.depth
                )));
            }
            if !bounds.contains(&p.center) {
                return Err(OeoError::OutOfBounds);
            }
        }
        let mut spec = Self {
            name: BenchmarkKind::Gaussian,
            dims: bounds.dims(),
            bounds,
            peaks: Some(peaks),
            penalty_weight: None,
            seed,
            optimum: KnownOptimum {
                value: f64::INFINITY,
                location: Vec::new(),
            },
        };
        spec.optimum = spec.refine_gaussian_optimum()?;
        Ok(spec)
    }

    /// Seeded variant of [`gaussian_landscape`] that records its seed.
    pub fn gaussian(dims: usize, n_dense: usize, n_sparse: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded_stream(seed);
        let mut spec = gaussian_landscape(dims, n_dense, n_sparse, &mut rng)?;
        spec.seed = seed;
        Ok(spec)
    }

    pub fn label(&self) -> String {
        match self.name {
            BenchmarkKind::Gaussian => format!("gaussian{}d_s{}", self.dims, self.seed),
            kind => format!("{}{}d", kind.name(), self.dims),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        self.bounds.check_dims(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OeoError::NonFinite("point"));
        }
        if !self.bounds.contains(x) {
            return Err(OeoError::OutOfBounds);
        }
        Ok(())
    }

    fn raw_eval(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        match self.name {
            BenchmarkKind::Sphere => x.iter().map(|v| v * v).sum(),
            BenchmarkKind::Rastrigin => 10.0 * n + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>(),
            BenchmarkKind::Ackley => {
                let r = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
                let c = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                let value = -20.0 * (-0.2 * r).exp() - c.exp() + 20.0 + E;
                // Cancellation leaves a few ulps at the origin.
                value.max(0.0)
            }
            BenchmarkKind::Griewank => {
                let s = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let p: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                s - p + 1.0
            }
            BenchmarkKind::Gaussian => gaussian_value(self.peaks.as_deref().unwrap_or(&[]), x),
            BenchmarkKind::Penalty => {
                let smooth: f64 = x.iter().map(|v| (v - PENALTY_TARGET).powi(2)).sum();
                let weight = self.penalty_weight.unwrap_or(PENALTY_WEIGHT);
                smooth + penalty_box(x, PENALTY_BAND.0, PENALTY_BAND.1, weight)
            }
        }
    }

    fn raw_grad(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = x.len() as f64;
        let g = match self.name {
            BenchmarkKind::Sphere => x.iter().map(|v| 2.0 * v).collect(),
            BenchmarkKind::Rastrigin => x.iter().map(|v| 2.0 * v + 20.0 * PI * (2.0 * PI * v).sin()).collect(),
            BenchmarkKind::Ackley => {
                let r = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
                let c = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                let e1 = (-0.2 * r).exp();
                let e2 = c.exp();
                x.iter()
                    .map(|v| {
                        let radial = if r > 0.0 { 4.0 * e1 * v / (n * r) } else { 0.0 };
                        radial + e2 * 2.0 * PI * (2.0 * PI * v).sin() / n
                    })
                    .collect()
            }
            BenchmarkKind::Griewank => {
                let cosines: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .collect();
                (0..x.len())
                    .map(|i| {
                        let s = ((i + 1) as f64).sqrt();
                        let others: f64 = cosines
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != i)
                            .map(|(_, c)| c)
                            .product();
                        x[i] / 2000.0 + others * (x[i] / s).sin() / s
                    })
                    .collect()
            }
            BenchmarkKind::Gaussian => gaussian_grad(self.peaks.as_deref().unwrap_or(&[]), x),
            BenchmarkKind::Penalty => return None,
        };
        Some(g)
    }

    fn refine_gaussian_optimum(&self) -> Result<KnownOptimum> {
        let peaks = self.peaks.as_deref().unwrap_or(&[]);
        let mut best = KnownOptimum {
            value: f64::INFINITY,
            location: Vec::new(),
        };
        for p in peaks {
            let x = descend(
                |x| gaussian_value(peaks, x),
                |x| gaussian_grad(peaks, x),
                &self.bounds,
                p.center.clone(),
            );
            let value = gaussian_value(peaks, &x);
            if value < best.value {
                best = KnownOptimum { value, location: x };
            }
        }
        Ok(best)
    }
}

impl Objective for LandscapeSpec {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        eval_benchmark(self, x)
    }

    fn grad(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        if !self.name.is_smooth() {
            return None;
        }
        Some(self.check(x).map(|_| self.raw_grad(x).expect("smooth kind")))
    }
}

/// Cost of `x` on `spec`; errors when `x` leaves the box.
pub fn eval_benchmark(spec: &LandscapeSpec, x: &[f64]) -> Result<f64> {
    spec.check(x)?;
    let value = spec.raw_eval(x);
    if !value.is_finite() {
        return Err(OeoError::NonFinite("benchmark value"));
    }
    Ok(value)
}

/// `weight` times the number of coordinates outside `[lo, hi]`.
pub fn penalty_box(x: &[f64], lo: f64, hi: f64, weight: f64) -> f64 {
    assert!(lo < hi, "penalty band needs lo < hi");
    let violations = x.iter().filter(|v| **v < lo || **v > hi).count();
    weight * violations as f64
}

fn gaussian_value(peaks: &[Peak], x: &[f64]) -> f64 {
    -peaks
        .iter()
        .map(|p| p.depth * (-sq_dist(x, &p.center) / (2.0 * p.width * p.width)).exp())
        .sum::<f64>()
}

fn gaussian_grad(peaks: &[Peak], x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for p in peaks {
        let s2 = p.width * p.width;
        let k = p.depth * (-sq_dist(x, &p.center) / (2.0 * s2)).exp() / s2;
        for (gi, (xi, ci)) in g.iter_mut().zip(x.iter().zip(&p.center)) {
            *gi += k * (xi - ci);
        }
    }
    g
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Projected gradient descent with Armijo backtracking.
fn descend<F, G>(f: F, grad: G, bounds: &Bounds, mut x: Vec<f64>) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let scale = (0..bounds.dims()).map(|i| bounds.width(i)).fold(0.0, f64::max);
    let mut fx = f(&x);
    let mut step = 0.1 * scale;
    for _ in 0..2_000 {
        let g = grad(&x);
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2 == 0.0 {
            break;
        }
        let mut accepted = false;
        while step > 1e-14 * scale {
            let trial: Vec<f64> = x
                .iter()
                .zip(&g)
                .enumerate()
                .map(|(i, (xi, gi))| (xi - step * gi).clamp(bounds.lower()[i], bounds.upper()[i]))
                .collect();
            let ft = f(&trial);
            let moved: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if ft <= fx - 1e-4 * moved / step {
                let done = fx - ft <= 1e-16 * fx.abs().max(1.0);
                x = trial;
                fx = ft;
                step *= 2.0;
                accepted = !done;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Draws a Gaussian-peak landscape on the unit cube.
///
/// `n_dense_region_peaks` peaks share a randomly placed sub-box spanning 10%
/// of each dimension and the deepest of them beats every other peak by at
/// least [`DEEPEST_MARGIN`] in depth. The `n_sparse_peaks` others are spread
/// over the rest of the cube with wider basins.
pub fn gaussian_landscape<R: Rng + ?Sized>(
    dims: usize,
    n_dense_region_peaks: usize,
    n_sparse_peaks: usize,
    rng: &mut R,
) -> Result<LandscapeSpec> {
    if n_dense_region_peaks + n_sparse_peaks == 0 {
        return Err(OeoError::InvalidConfig("a landscape needs at least one peak".into()));
    }
    let bounds = Bounds::cube(dims, 0.0, 1.0)?;
    let side = DENSE_REGION_FRACTION;
    let corner: Vec<f64> = (0..dims).map(|_| rng.random::<f64>() * (1.0 - side)).collect();
    let in_dense = |x: &[f64]| x.iter().zip(&corner).all(|(v, c)| *v >= *c && *v <= c + side);

    let mut peaks = Vec::with_capacity(n_dense_region_peaks + n_sparse_peaks);
    for _ in 0..n_dense_region_peaks {
        let center = corner.iter().map(|c| c + rng.random::<f64>() * side).collect();
        peaks.push(Peak {
            center,
            width: rng.random_range(0.015..0.035),
            depth: rng.random_range(0.3..0.8),
        });
    }
    for _ in 0..n_sparse_peaks {
        let center = loop {
            let c = bounds.random_point(rng);
            if !in_dense(&c) {
                break c;
            }
        };
        peaks.push(Peak {
            center,
            width: rng.random_range(0.03..0.08),
            depth: rng.random_range(0.3..0.8),
        });
    }
    // Promote one peak, from the dense region when it has any.
    let pool = if n_dense_region_peaks > 0 {
        n_dense_region_peaks
    } else {
        peaks.len()
    };
    let chosen = rng.random_range(0..pool);
    let deepest_other = peaks
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != chosen)
        .map(|(_, p)| p.depth)
        .fold(0.0, f64::max);
    peaks[chosen].depth = deepest_other.max(peaks[chosen].depth) + DEEPEST_MARGIN + rng.random_range(0.0..0.2);
    LandscapeSpec::from_peaks(bounds, peaks, 0)
}
