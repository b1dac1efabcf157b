//! Box-bounded search spaces, evaluated solutions and the seeded random stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OeoError, Result};

/// The random stream every algorithm in this crate draws from.
pub type RunRng = ChaCha8Rng;

/// Builds the deterministic stream for a run. No seed value is special.
pub fn seeded_stream(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Axis-aligned box `lower[i] <= x[i] <= upper[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds", into = "RawBounds")]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBounds> for Bounds {
    type Error = OeoError;
    fn try_from(raw: RawBounds) -> Result<Self> {
        Bounds::new(raw.lower, raw.upper)
    }
}

impl From<Bounds> for RawBounds {
    fn from(b: Bounds) -> Self {
        RawBounds {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(OeoError::InvalidBounds("zero dimensions".into()));
        }
        if lower.len() != upper.len() {
            return Err(OeoError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(OeoError::InvalidBounds(format!("dimension {i} is not finite")));
            }
            if lo >= hi {
                return Err(OeoError::InvalidBounds(format!(
                    "dimension {i}: lower {lo} is not below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dims`.
    pub fn cube(dims: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dims], vec![hi; dims])
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.dims()).map(|i| self.width(i)).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub(crate) fn check_dims(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims() {
            return Err(OeoError::DimensionMismatch {
                expected: self.dims(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Projects `x` into the box. Non-finite coordinates are rejected.
    pub fn clamp(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x)?;
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| {
                if v.is_finite() {
                    Ok(v.clamp(lo, hi))
                } else {
                    Err(OeoError::NonFinite("point"))
                }
            })
            .collect()
    }

    /// Maps unit-cube coordinates `u` to `lower + u * (upper - lower)`.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (lo, hi))| (lo + t * (hi - lo)).min(*hi))
            .collect()
    }

    /// Inverse of [`Bounds::from_unit`].
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Uniform sample, one `u ~ U[0,1)` per coordinate in index order.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: Vec<f64> = (0..self.dims()).map(|_| rng.random::<f64>()).collect();
        self.from_unit(&u)
    }
}

/// An evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub point: Vec<f64>,
    pub cost: f64,
    pub birth_iteration: usize,
}

impl Solution {
    pub fn new(point: Vec<f64>, cost: f64, birth_iteration: usize) -> Self {
        Self {
            point,
            cost,
            birth_iteration,
        }
    }
}
