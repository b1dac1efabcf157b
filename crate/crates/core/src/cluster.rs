use serde::{Deserialize, Serialize};

use crate::space::Solution;

/// A search locality: a fixed center plus the solutions gathered around it.
///
/// The center is the first member the cluster was created with. `local_g` is
/// only consulted in the per-cluster variant of the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: Vec<f64>,
    pub members: Vec<Solution>,
    pub local_g: f64,
}

impl Cluster {
    pub fn seeded(first: Solution, local_g: f64) -> Self {
        Self {
            center: first.point.clone(),
            members: vec![first],
            local_g,
        }
    }

    pub fn from_members(members: Vec<Solution>, local_g: f64) -> Self {
        let center = members.first().map(|m| m.point.clone()).unwrap_or_default();
        Self {
            center,
            members,
            local_g,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Solution> {
        self.members.iter().min_by(|a, b| a.cost.total_cmp(&b.cost))
    }

    pub fn best_cost(&self) -> f64 {
        self.best().map_or(f64::INFINITY, |s| s.cost)
    }

    /// Member indices sorted by ascending cost; ties keep insertion order.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.members.len()).collect();
        idx.sort_by(|&a, &b| self.members[a].cost.total_cmp(&self.members[b].cost));
        idx
    }

    /// Per-dimension (min, max) of member points.
    pub fn extent(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let first = self.members.first()?;
        let mut lo = first.point.clone();
        let mut hi = first.point.clone();
        for m in &self.members[1..] {
            for (i, &v) in m.point.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        Some((lo, hi))
    }
}
