use crate::error::{OeoError, Result};
use crate::space::Bounds;

/// A deterministic cost function over a box.
///
/// `eval` must be pure: identical points give identical costs, which is what
/// makes seeded replays reproduce whole runs. Implementations are shared
/// across threads when replicated runs execute in parallel.
pub trait Objective: Sync {
    fn bounds(&self) -> &Bounds;

    fn eval(&self, x: &[f64]) -> Result<f64>;

    /// Analytic gradient, when the objective is smooth.
    fn grad(&self, _x: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }

    fn dims(&self) -> usize {
        self.bounds().dims()
    }
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    bounds: Bounds,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(bounds: Bounds, f: F) -> Self {
        Self { bounds, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.bounds.check_dims(x)?;
        Ok((self.f)(x))
    }
}

/// Evaluates and rejects non-finite costs.
pub(crate) fn evaluate<O: Objective + ?Sized>(objective: &O, x: &[f64]) -> Result<f64> {
    let cost = objective.eval(x)?;
    if !cost.is_finite() {
        return Err(OeoError::NonFinite("cost"));
    }
    Ok(cost)
}
