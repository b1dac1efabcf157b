//! Cluster scoring, the selection-distribution flattener, roulette-wheel
//! selection, and the rule-based solution update methods.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cluster::Cluster;
use crate::error::{OeoError, Result};
use crate::space::Bounds;

pub const FITNESS_EPS: f64 = 1e-12;
pub const VOLUME_EXTENT_FLOOR: f64 = 1e-3;
/// Zero selection probabilities are lifted to this before flattening.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
pub const DEFAULT_ELITE_COUNT: usize = 3;
/// Member bounding boxes are inflated by this fraction about their midpoint.
pub const CLUSTER_BOX_INFLATION: f64 = 0.10;
/// Gaussian spread around a singleton center, as a fraction of the domain width.
pub const SINGLETON_SIGMA_FRACTION: f64 = 0.05;

fn default_elite_count() -> usize {
    DEFAULT_ELITE_COUNT
}

fn default_either_p() -> f64 {
    0.5
}

/// Maps costs to fitness in `[0, 1]`: the best cost gets ~1, the worst 0.
pub fn fitness_of(costs: &[f64]) -> Result<Vec<f64>> {
    if costs.is_empty() {
        return Err(OeoError::Empty("cost list"));
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(OeoError::NonFinite("cost"));
    }
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = worst - best + FITNESS_EPS;
    Ok(costs.iter().map(|c| (worst - c) / spread).collect())
}

/// Volume of the member bounding box in unit-box coordinates, each extent
/// floored at [`VOLUME_EXTENT_FLOOR`].
pub fn cluster_volume(cluster: &Cluster, bounds: &Bounds) -> Result<f64> {
    let (lo, hi) = cluster.extent().ok_or(OeoError::Empty("cluster"))?;
    Ok((0..bounds.dims())
        .map(|i| ((hi[i] - lo[i]) / bounds.width(i)).max(VOLUME_EXTENT_FLOOR))
        .product())
}

/// How promising a cluster looks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum EffectivenessMetric {
    SumFitnessPerVolume,
    SumEliteFitnessPerVolume {
        #[serde(default = "default_elite_count")]
        elite_count: usize,
    },
    BestFitnessPerVolume,
    VarFitnessPerVolume,
    MeanEliteFitness {
        #[serde(default = "default_elite_count")]
        elite_count: usize,
    },
    SubtractFromNearestFitness,
}

impl EffectivenessMetric {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SumFitnessPerVolume => "SumFitnessPerVolume",
            Self::SumEliteFitnessPerVolume { .. } => "SumEliteFitnessPerVolume",
            Self::BestFitnessPerVolume => "BestFitnessPerVolume",
            Self::VarFitnessPerVolume => "VarFitnessPerVolume",
            Self::MeanEliteFitness { .. } => "MeanEliteFitness",
            Self::SubtractFromNearestFitness => "SubtractFromNearestFitness",
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For each cluster, the index of the cluster whose center is nearest to its
/// own (itself when it is alone).
pub fn nearest_centers(clusters: &[Cluster]) -> Vec<usize> {
    (0..clusters.len())
        .map(|i| nearest_center_of(&clusters[i].center, i, clusters))
        .collect()
}

pub(crate) fn nearest_center_of(center: &[f64], skip: usize, clusters: &[Cluster]) -> usize {
    let mut best = (skip, f64::INFINITY);
    for (j, c) in clusters.iter().enumerate() {
        if j == skip {
            continue;
        }
        let d = squared_distance(center, &c.center);
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// Sum of the `n` largest values.
fn top_sum(sorted_desc: &[f64], n: usize) -> (f64, usize) {
    let take = n.min(sorted_desc.len());
    (sorted_desc[..take].iter().sum(), take)
}

/// Raw effectiveness of every cluster. Fitness is computed once over the
/// union of all member costs. `nearest` may carry a cached answer of
/// [`nearest_centers`]; it is recomputed when absent.
pub fn effectiveness_scores(
    clusters: &[Cluster],
    metric: EffectivenessMetric,
    bounds: &Bounds,
    nearest: Option<&[usize]>,
) -> Result<Vec<f64>> {
    if clusters.is_empty() {
        return Err(OeoError::Empty("cluster list"));
    }
    if clusters.iter().any(Cluster::is_empty) {
        return Err(OeoError::Empty("cluster"));
    }
    let costs: Vec<f64> = clusters.iter().flat_map(|c| c.members.iter().map(|m| m.cost)).collect();
    let fitness = fitness_of(&costs)?;

    let mut per_cluster: Vec<Vec<f64>> = Vec::with_capacity(clusters.len());
    let mut offset = 0;
    for c in clusters {
        let mut f = fitness[offset..offset + c.len()].to_vec();
        f.sort_by(|a, b| b.total_cmp(a));
        offset += c.len();
        per_cluster.push(f);
    }

    if let EffectivenessMetric::SubtractFromNearestFitness = metric {
        let owned;
        let nearest = match nearest {
            Some(n) => n,
            None => {
                owned = nearest_centers(clusters);
                &owned
            }
        };
        return Ok((0..clusters.len())
            .map(|i| per_cluster[i][0] - per_cluster[nearest[i]][0])
            .collect());
    }

    clusters
        .iter()
        .zip(&per_cluster)
        .map(|(c, f)| {
            let score = match metric {
                EffectivenessMetric::SumFitnessPerVolume => f.iter().sum::<f64>() / cluster_volume(c, bounds)?,
                EffectivenessMetric::SumEliteFitnessPerVolume { elite_count } => {
                    top_sum(f, elite_count).0 / cluster_volume(c, bounds)?
                }
                EffectivenessMetric::BestFitnessPerVolume => f[0] / cluster_volume(c, bounds)?,
                EffectivenessMetric::VarFitnessPerVolume => {
                    let n = f.len() as f64;
                    let mean = f.iter().sum::<f64>() / n;
                    let var = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    var / cluster_volume(c, bounds)?
                }
                EffectivenessMetric::MeanEliteFitness { elite_count } => {
                    let (sum, taken) = top_sum(f, elite_count);
                    sum / taken as f64
                }
                EffectivenessMetric::SubtractFromNearestFitness => unreachable!(),
            };
            Ok(score)
        })
        .collect()
}

/// Effectiveness of one cluster within its population.
pub fn effectiveness(index: usize, clusters: &[Cluster], metric: EffectivenessMetric, bounds: &Bounds) -> Result<f64> {
    if clusters.get(index).is_none_or(Cluster::is_empty) {
        return Err(OeoError::Empty("cluster"));
    }
    Ok(effectiveness_scores(clusters, metric, bounds, None)?[index])
}

/// Shifts raw scores so the smallest is zero, normalizes to sum one and lifts
/// zeros to [`PROBABILITY_FLOOR`]. A flat score list becomes uniform.
pub fn selection_distribution(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(OeoError::Empty("score list"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(OeoError::NonFinite("effectiveness score"));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = scores.iter().map(|s| s - min).collect();
    let total: f64 = shifted.iter().sum();
    if total <= 0.0 {
        return Ok(vec![1.0 / scores.len() as f64; scores.len()]);
    }
    let floored: Vec<f64> = shifted.iter().map(|s| (s / total).max(PROBABILITY_FLOOR)).collect();
    let total: f64 = floored.iter().sum();
    Ok(floored.into_iter().map(|p| p / total).collect())
}

/// Flattens a probability vector: `p -> exp(ln p / ln(e + lambda * b))`,
/// renormalized. `b = 0` is the identity; growing `b` pushes toward uniform.
pub fn flatten_distribution(p: &[f64], b: f64, lambda: f64) -> Result<Vec<f64>> {
    if !b.is_finite() || !lambda.is_finite() {
        return Err(OeoError::NonFinite("flattening parameter"));
    }
    if b < 0.0 {
        return Err(OeoError::InvalidConfig(format!("negative B = {b}")));
    }
    if p.is_empty() {
        return Err(OeoError::Empty("probability list"));
    }
    if p.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(OeoError::NonFinite("probability"));
    }
    if b == 0.0 {
        return Ok(p.to_vec());
    }
    let denom = (std::f64::consts::E + lambda * b).ln();
    let raw: Vec<f64> = p.iter().map(|v| (v.ln() / denom).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Draws index `i` with probability `weights[i] / sum(weights)`.
/// Consumes exactly one uniform draw.
pub fn roulette_select<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    if weights.is_empty() {
        return Err(OeoError::Empty("weights"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(OeoError::NonFinite("roulette weight"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(OeoError::ZeroWeights);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// Rule-based ways of producing a new solution from a cluster's members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum UpdateMethod {
    EitherRandomlyOrThroughBest {
        #[serde(default = "default_either_p")]
        p: f64,
    },
    MoveThroughBest,
    Select2SolsChooseOneBetween,
    ClusterMean,
    MeanOfElites {
        #[serde(default = "default_elite_count")]
        elite_count: usize,
    },
    GetWeightedMeanOfSols,
    GetWeightedMeanOfElites {
        #[serde(default = "default_elite_count")]
        elite_count: usize,
    },
}

impl UpdateMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EitherRandomlyOrThroughBest { .. } => "EitherRandomlyOrThroughBest",
            Self::MoveThroughBest => "MoveThroughBest",
            Self::Select2SolsChooseOneBetween => "Select2SolsChooseOneBetween",
            Self::ClusterMean => "ClusterMean",
            Self::MeanOfElites { .. } => "MeanOfElites",
            Self::GetWeightedMeanOfSols => "GetWeightedMeanOfSols",
            Self::GetWeightedMeanOfElites { .. } => "GetWeightedMeanOfElites",
        }
    }

    /// Fewest members the method can work with.
    pub fn min_members(&self) -> usize {
        match self {
            Self::Select2SolsChooseOneBetween | Self::GetWeightedMeanOfSols => 2,
            _ => 1,
        }
    }
}

fn check_members(cluster: &Cluster, need: usize) -> Result<()> {
    if cluster.len() < need {
        return Err(OeoError::TooFewMembers {
            have: cluster.len(),
            need,
        });
    }
    if cluster
        .members
        .iter()
        .any(|m| !m.cost.is_finite() || m.point.iter().any(|v| !v.is_finite()))
    {
        return Err(OeoError::NonFinite("cluster member"));
    }
    Ok(())
}

fn two_distinct<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

fn weighted_mean(points: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let d = points[0].len();
    if total <= 0.0 {
        let n = points.len() as f64;
        return (0..d).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    }
    (0..d)
        .map(|k| points.iter().zip(weights).map(|(p, w)| w * p[k]).sum::<f64>() / total)
        .collect()
}

/// `start + u * (best - start)` with `start` a uniformly chosen member.
fn move_through_best<R: Rng + ?Sized>(cluster: &Cluster, rng: &mut R) -> Vec<f64> {
    let start = &cluster.members[rng.random_range(0..cluster.len())].point;
    let best = &cluster.best().expect("non-empty cluster").point;
    let u: f64 = rng.random();
    start.iter().zip(best).map(|(s, b)| s + u * (b - s)).collect()
}

/// Produces a candidate from the cluster's members using `method`. The
/// result is clamped to `bounds`.
pub fn propose_update<R: Rng + ?Sized>(
    cluster: &Cluster,
    method: UpdateMethod,
    rng: &mut R,
    bounds: &Bounds,
) -> Result<Vec<f64>> {
    check_members(cluster, method.min_members())?;
    let point = match method {
        UpdateMethod::EitherRandomlyOrThroughBest { p } => {
            if rng.random::<f64>() < p {
                return random_in_cluster(cluster, bounds, rng);
            }
            move_through_best(cluster, rng)
        }
        UpdateMethod::MoveThroughBest => move_through_best(cluster, rng),
        UpdateMethod::Select2SolsChooseOneBetween => {
            let (i, j) = two_distinct(cluster.len(), rng);
            let a: f64 = rng.random();
            let x1 = &cluster.members[i].point;
            let x2 = &cluster.members[j].point;
            x1.iter().zip(x2).map(|(p, q)| q + a * (p - q)).collect()
        }
        UpdateMethod::ClusterMean => {
            let points: Vec<&[f64]> = cluster.members.iter().map(|m| m.point.as_slice()).collect();
            weighted_mean(&points, &[])
        }
        UpdateMethod::MeanOfElites { elite_count } => {
            let ranked = cluster.ranked();
            let points: Vec<&[f64]> = ranked
                .iter()
                .take(elite_count.max(1))
                .map(|&i| cluster.members[i].point.as_slice())
                .collect();
            weighted_mean(&points, &[])
        }
        UpdateMethod::GetWeightedMeanOfSols => {
            let (i, j) = two_distinct(cluster.len(), rng);
            let (s1, s2) = (&cluster.members[i], &cluster.members[j]);
            let f = fitness_of(&[s1.cost, s2.cost])?;
            weighted_mean(&[&s1.point, &s2.point], &f)
        }
        UpdateMethod::GetWeightedMeanOfElites { elite_count } => {
            let costs: Vec<f64> = cluster.members.iter().map(|m| m.cost).collect();
            let fitness = fitness_of(&costs)?;
            let ranked = cluster.ranked();
            let elites: Vec<usize> = ranked.into_iter().take(elite_count.max(1)).collect();
            let points: Vec<&[f64]> = elites.iter().map(|&i| cluster.members[i].point.as_slice()).collect();
            let weights: Vec<f64> = elites.iter().map(|&i| fitness[i]).collect();
            weighted_mean(&points, &weights)
        }
    };
    bounds.clamp(&point)
}

/// A random point in the region a cluster occupies.
///
/// With two or more members: uniform in the member bounding box inflated by
/// [`CLUSTER_BOX_INFLATION`] about its midpoint. A dimension in which the
/// members coincide, and a singleton cluster in every dimension, uses a
/// Gaussian around the center with sigma at 5% of the domain width. Always
/// clamped.
pub fn random_in_cluster<R: Rng + ?Sized>(cluster: &Cluster, bounds: &Bounds, rng: &mut R) -> Result<Vec<f64>> {
    random_in_cluster_inflated(cluster, bounds, CLUSTER_BOX_INFLATION, rng)
}

/// [`random_in_cluster`] with an explicit box inflation fraction.
pub fn random_in_cluster_inflated<R: Rng + ?Sized>(
    cluster: &Cluster,
    bounds: &Bounds,
    inflation: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(inflation >= 0.0) || !inflation.is_finite() {
        return Err(OeoError::InvalidConfig(format!(
            "box inflation {inflation} must be finite and >= 0"
        )));
    }
    let (lo, hi) = cluster.extent().ok_or(OeoError::Empty("cluster"))?;
    let singleton = cluster.len() < 2;
    let point: Vec<f64> = (0..bounds.dims())
        .map(|i| {
            let extent = hi[i] - lo[i];
            if singleton || extent <= 1e-12 * bounds.width(i) {
                let sigma = SINGLETON_SIGMA_FRACTION * bounds.width(i);
                let around = if singleton { cluster.center[i] } else { lo[i] };
                let normal = Normal::new(around, sigma).expect("positive sigma");
                normal.sample(rng)
            } else {
                let mid = 0.5 * (lo[i] + hi[i]);
                let half = 0.5 * extent * (1.0 + inflation);
                mid - half + rng.random::<f64>() * 2.0 * half
            }
        })
        .collect();
    bounds.clamp(&point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::test_rng::UnitSequence;
    use crate::space::{seeded_stream, Solution};

    fn sol(point: &[f64], cost: f64) -> Solution {
        Solution::new(point.to_vec(), cost, 0)
    }

    fn cluster(members: &[(&[f64], f64)]) -> Cluster {
        Cluster::from_members(members.iter().map(|(p, c)| sol(p, *c)).collect(), 0.2)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn fitness_examples() {
        assert!(close(&fitness_of(&[1.0, 2.0, 3.0]).unwrap(), &[1.0, 0.5, 0.0], 1e-11));
        assert_eq!(fitness_of(&[5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        assert!(close(&fitness_of(&[-0.897, -0.876]).unwrap(), &[1.0, 0.0], 1e-9));
        assert_eq!(fitness_of(&[]), Err(OeoError::Empty("cost list")));
    }

    #[test]
    fn volume_examples() {
        let b = Bounds::cube(2, 0.0, 1.0).unwrap();
        let single = cluster(&[(&[0.3, 0.3], 1.0)]);
        assert!((cluster_volume(&single, &b).unwrap() - 1e-6).abs() < 1e-18);
        let corners = cluster(&[(&[0.0, 0.0], 1.0), (&[1.0, 1.0], 2.0)]);
        assert!((cluster_volume(&corners, &b).unwrap() - 1.0).abs() < 1e-12);
        let half = cluster(&[(&[0.25, 0.0], 1.0), (&[0.75, 0.5], 2.0)]);
        assert!((cluster_volume(&half, &b).unwrap() - 0.25).abs() < 1e-12);
        let empty = Cluster::from_members(vec![], 0.2);
        assert!(cluster_volume(&empty, &b).is_err());
    }

    #[test]
    fn flatten_identity_and_uniform() {
        let p = [0.1, 0.2, 0.7];
        assert_eq!(flatten_distribution(&p, 0.0, 18.0).unwrap(), p.to_vec());
        let u = [0.25; 4];
        for b in [0.16, 1.0, 10.0] {
            assert!(close(&flatten_distribution(&u, b, 18.0).unwrap(), &u, 1e-15));
        }
        assert!(flatten_distribution(&p, -1.0, 18.0).is_err());
        assert!(flatten_distribution(&[f64::NAN, 1.0], 1.0, 18.0).is_err());
    }

    #[test]
    fn roulette_degenerate_and_zero() {
        let mut rng = seeded_stream(3);
        for _ in 0..100 {
            assert_eq!(roulette_select(&[1.0, 0.0, 0.0], &mut rng).unwrap(), 0);
        }
        assert_eq!(roulette_select(&[0.0, 0.0], &mut rng), Err(OeoError::ZeroWeights));
        let mut top = UnitSequence::new(&[1.0 - 1e-16]);
        assert_eq!(roulette_select(&[1.0, 1.0, 0.0], &mut top).unwrap(), 1);
    }

    #[test]
    fn move_through_best_endpoints() {
        let b = Bounds::cube(1, -10.0, 10.0).unwrap();
        let c = cluster(&[(&[4.0], 3.0), (&[0.0], 1.0)]);
        // member draw picks index 0 (start = 4), u = 0 -> start
        let mut rng = UnitSequence::new(&[0.0, 0.0]);
        assert_eq!(
            propose_update(&c, UpdateMethod::MoveThroughBest, &mut rng, &b).unwrap(),
            vec![4.0]
        );
        // u -> 1 approaches best
        let mut rng = UnitSequence::new(&[0.0, 1.0 - 1e-16]);
        let p = propose_update(&c, UpdateMethod::MoveThroughBest, &mut rng, &b).unwrap();
        assert!((p[0] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn cluster_mean_example() {
        let b = Bounds::cube(2, -10.0, 10.0).unwrap();
        let c = cluster(&[(&[0.0, 0.0], 1.0), (&[2.0, 4.0], 2.0)]);
        let mut rng = seeded_stream(0);
        assert_eq!(
            propose_update(&c, UpdateMethod::ClusterMean, &mut rng, &b).unwrap(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn weighted_mean_of_pair_example() {
        let b = Bounds::cube(1, -20.0, 20.0).unwrap();
        let c = cluster(&[(&[0.0], 1.0), (&[10.0], 3.0)]);
        let f = fitness_of(&[1.0, 3.0]).unwrap();
        let by_hand = (f[0] * 0.0 + f[1] * 10.0) / (f[0] + f[1]);
        let mut rng = seeded_stream(9);
        for _ in 0..20 {
            let p = propose_update(&c, UpdateMethod::GetWeightedMeanOfSols, &mut rng, &b).unwrap();
            assert!((p[0] - by_hand).abs() < 1e-12);
            assert!(p[0].abs() < 1e-10);
        }
        let tied = cluster(&[(&[0.0], 2.0), (&[10.0], 2.0)]);
        let p = propose_update(&tied, UpdateMethod::GetWeightedMeanOfSols, &mut rng, &b).unwrap();
        assert_eq!(p, vec![5.0]);
    }

    #[test]
    fn too_few_members() {
        let b = Bounds::cube(1, 0.0, 1.0).unwrap();
        let c = cluster(&[(&[0.5], 1.0)]);
        let mut rng = seeded_stream(0);
        assert_eq!(
            propose_update(&c, UpdateMethod::Select2SolsChooseOneBetween, &mut rng, &b),
            Err(OeoError::TooFewMembers { have: 1, need: 2 })
        );
    }

    #[test]
    fn random_in_cluster_inflated_box() {
        let b = Bounds::cube(2, -1.0, 2.0).unwrap();
        let c = cluster(&[(&[0.0, 0.0], 1.0), (&[1.0, 1.0], 2.0)]);
        let mut rng = seeded_stream(5);
        let mut seen_outside_hull = false;
        for _ in 0..2000 {
            let p = random_in_cluster(&c, &b, &mut rng).unwrap();
            for v in &p {
                assert!((-0.05..=1.05).contains(v));
                seen_outside_hull |= *v < 0.0 || *v > 1.0;
            }
        }
        assert!(seen_outside_hull);
    }

    #[test]
    fn random_in_cluster_stays_in_bounds_at_edge() {
        let b = Bounds::cube(2, 0.0, 1.0).unwrap();
        let single = cluster(&[(&[0.0, 1.0], 1.0)]);
        let pair = cluster(&[(&[0.0, 0.9], 1.0), (&[0.05, 1.0], 1.0)]);
        let mut rng = seeded_stream(6);
        for _ in 0..2000 {
            assert!(b.contains(&random_in_cluster(&single, &b, &mut rng).unwrap()));
            assert!(b.contains(&random_in_cluster(&pair, &b, &mut rng).unwrap()));
        }
        assert!(random_in_cluster(&Cluster::from_members(vec![], 0.2), &b, &mut rng).is_err());
    }

    #[test]
    fn subtract_from_nearest_identical_clusters() {
        let b = Bounds::cube(2, 0.0, 1.0).unwrap();
        let a = cluster(&[(&[0.5, 0.5], 1.0), (&[0.6, 0.5], 2.0)]);
        let clusters = vec![a.clone(), a];
        let s = effectiveness_scores(&clusters, EffectivenessMetric::SubtractFromNearestFitness, &b, None).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        let p = selection_distribution(&s).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }
}
