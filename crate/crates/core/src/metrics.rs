//! Evaluation of generated samples against the true mixture: likelihood,
//! mode assignment, and the transport distance of the mode histogram from
//! uniform.

use serde::{Deserialize, Serialize};

use crate::config::GroundMetric;
use crate::error::{Error, Result};
use crate::gmm::GaussianMixture;
use crate::mat::{stable_mean, Mat};

/// Per-mode counts of high-quality samples (within the quality radius of
/// their nearest center); everything else lands in `unassigned`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeHistogram {
    pub counts: Vec<u64>,
    pub unassigned: u64,
    /// Radius actually used, `multiplier * std` (of the widest mode when
    /// stds differ).
    pub quality_radius: f64,
}

impl ModeHistogram {
    pub fn assigned(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.assigned() + self.unassigned
    }

    pub fn mode_count(&self) -> usize {
        self.counts.len()
    }
}

/// Nearest-center assignment with a quality cutoff of
/// `quality_multiplier * std` around each center.
pub fn assign_modes(
    samples: &Mat,
    gmm: &GaussianMixture,
    quality_multiplier: f64,
) -> ModeHistogram {
    let modes = gmm.modes();
    let mut counts = vec![0u64; modes.len()];
    let mut unassigned = 0u64;
    for row in samples.iter_rows() {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (k, m) in modes.iter().enumerate() {
            let d2 = (row[0] - m.center[0]).powi(2) + (row[1] - m.center[1]).powi(2);
            if d2 < best_d2 {
                best = k;
                best_d2 = d2;
            }
        }
        let radius = quality_multiplier * modes[best].std;
        if best_d2.sqrt() <= radius {
            counts[best] += 1;
        } else {
            unassigned += 1;
        }
    }
    let max_std = modes.iter().map(|m| m.std).fold(0.0, f64::max);
    ModeHistogram {
        counts,
        unassigned,
        quality_radius: quality_multiplier * max_std,
    }
}

/// Mean of the mixture log-density over the sample rows.
pub fn mean_log_likelihood(samples: &Mat, gmm: &GaussianMixture) -> f64 {
    let values: Vec<f64> = samples
        .iter_rows()
        .map(|row| gmm.log_density(&[row[0], row[1]]))
        .collect();
    stable_mean(&values)
}

/// 1-Wasserstein distance between the normalized assigned-mode histogram
/// and the uniform distribution, over the circular ground metric with unit
/// spacing between adjacent modes.
///
/// Computed exactly in integer arithmetic: with `M * count_k - T` as the
/// per-mode mass surplus (common denominator `M * T`), the optimal
/// transport cost on a cycle is `min_c sum_i |A_i - c|` over cumulative
/// surpluses `A`, minimized at their median.
pub fn coverage_wasserstein(hist: &ModeHistogram) -> Result<f64> {
    let total = hist.assigned();
    if total == 0 {
        return Err(Error::UndefinedMetric(
            "coverage distance needs at least one assigned sample".into(),
        ));
    }
    let m = hist.counts.len() as i128;
    let t = total as i128;
    let mut cum = Vec::with_capacity(hist.counts.len());
    let mut acc: i128 = 0;
    for &c in &hist.counts {
        acc += m * c as i128 - t;
        cum.push(acc);
    }
    debug_assert_eq!(acc, 0);
    let mut sorted = cum.clone();
    sorted.sort_unstable();
    let median = sorted[(sorted.len() - 1) / 2];
    let numerator: i128 = cum.iter().map(|a| (a - median).abs()).sum();
    Ok(numerator as f64 / (m * t) as f64)
}

/// Coverage distance under actual center-to-center Euclidean costs,
/// solved as a small exact transportation problem.
pub fn coverage_wasserstein_euclidean(
    hist: &ModeHistogram,
    gmm: &GaussianMixture,
) -> Result<f64> {
    let total = hist.assigned();
    if total == 0 {
        return Err(Error::UndefinedMetric(
            "coverage distance needs at least one assigned sample".into(),
        ));
    }
    let m = hist.counts.len();
    assert_eq!(m, gmm.mode_count(), "histogram/mixture mode count mismatch");
    let supply: Vec<f64> = hist.counts.iter().map(|&c| c as f64 / total as f64).collect();
    let demand = vec![1.0 / m as f64; m];
    let centers = gmm.modes();
    let cost = |i: usize, j: usize| -> f64 {
        let dx = centers[i].center[0] - centers[j].center[0];
        let dy = centers[i].center[1] - centers[j].center[1];
        (dx * dx + dy * dy).sqrt()
    };
    Ok(min_cost_transport(&supply, &demand, cost))
}

/// Exact transportation solver for the tiny bipartite problems that show
/// up here: min-cost flow by successive shortest augmenting paths
/// (Bellman-Ford on the residual graph, so reverse edges with negative
/// cost are handled).
pub(crate) fn min_cost_transport(
    supply: &[f64],
    demand: &[f64],
    cost: impl Fn(usize, usize) -> f64,
) -> f64 {
    const EPS: f64 = 1e-15;
    let n = supply.len();
    let m = demand.len();
    // Nodes: 0 = source, 1..=n supplies, n+1..=n+m demands, n+m+1 = sink.
    let source = 0;
    let sink = n + m + 1;
    let node_count = n + m + 2;

    struct Edge {
        to: usize,
        cap: f64,
        cost: f64,
        rev: usize, // index of the reverse edge in adj[to]
    }
    let mut adj: Vec<Vec<Edge>> = (0..node_count).map(|_| Vec::new()).collect();
    let add_edge = |adj: &mut Vec<Vec<Edge>>, a: usize, b: usize, cap: f64, cost: f64| {
        let rev_a = adj[b].len();
        let rev_b = adj[a].len();
        adj[a].push(Edge { to: b, cap, cost, rev: rev_a });
        adj[b].push(Edge { to: a, cap: 0.0, cost: -cost, rev: rev_b });
    };
    for (i, &s) in supply.iter().enumerate() {
        if s > EPS {
            add_edge(&mut adj, source, 1 + i, s, 0.0);
        }
    }
    for i in 0..n {
        for j in 0..m {
            add_edge(&mut adj, 1 + i, 1 + n + j, f64::INFINITY, cost(i, j));
        }
    }
    for (j, &d) in demand.iter().enumerate() {
        if d > EPS {
            add_edge(&mut adj, 1 + n + j, sink, d, 0.0);
        }
    }

    let mut total_cost = 0.0;
    loop {
        // Bellman-Ford shortest path over residual edges.
        let mut dist = vec![f64::INFINITY; node_count];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; node_count];
        dist[source] = 0.0;
        for _ in 0..node_count {
            let mut changed = false;
            for u in 0..node_count {
                if !dist[u].is_finite() {
                    continue;
                }
                for (ei, e) in adj[u].iter().enumerate() {
                    if e.cap > EPS && dist[u] + e.cost < dist[e.to] - 1e-18 {
                        dist[e.to] = dist[u] + e.cost;
                        prev[e.to] = Some((u, ei));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if !dist[sink].is_finite() {
            break; // all supply shipped
        }
        // Bottleneck along the path.
        let mut bottleneck = f64::INFINITY;
        let mut node = sink;
        while let Some((u, ei)) = prev[node] {
            bottleneck = bottleneck.min(adj[u][ei].cap);
            node = u;
        }
        if !(bottleneck > EPS) {
            break;
        }
        // Apply.
        let mut node = sink;
        while let Some((u, ei)) = prev[node] {
            let rev = adj[u][ei].rev;
            adj[u][ei].cap -= bottleneck;
            let to = adj[u][ei].to;
            adj[to][rev].cap += bottleneck;
            total_cost += bottleneck * adj[u][ei].cost;
            node = u;
        }
    }
    total_cost
}

/// Number of modes holding at least `threshold` of the assigned mass.
pub fn covered_mode_count(hist: &ModeHistogram, threshold: f64) -> usize {
    let total = hist.assigned();
    if total == 0 {
        return 0;
    }
    hist.counts
        .iter()
        .filter(|&&c| c as f64 / total as f64 >= threshold)
        .count()
}

/// Everything measured for one generator at one epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub gan_id: usize,
    pub mean_log_likelihood: f64,
    /// Undefined (reported as null/nan) when no sample was assigned.
    pub coverage_w1: Option<f64>,
    pub covered_modes: usize,
    pub histogram: ModeHistogram,
}

impl MetricsRecord {
    pub fn evaluate(
        epoch: usize,
        gan_id: usize,
        samples: &Mat,
        gmm: &GaussianMixture,
        quality_multiplier: f64,
        covered_threshold: f64,
        ground_metric: GroundMetric,
    ) -> Self {
        let histogram = assign_modes(samples, gmm, quality_multiplier);
        let coverage_w1 = match ground_metric {
            GroundMetric::Circular => coverage_wasserstein(&histogram).ok(),
            GroundMetric::Euclidean => coverage_wasserstein_euclidean(&histogram, gmm).ok(),
        };
        MetricsRecord {
            epoch,
            gan_id,
            mean_log_likelihood: mean_log_likelihood(samples, gmm),
            coverage_w1,
            covered_modes: covered_mode_count(&histogram, covered_threshold),
            histogram,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn canonical() -> GaussianMixture {
        GaussianMixture::ring(8, 2.0, 0.2).unwrap()
    }

    fn hist(counts: &[u64]) -> ModeHistogram {
        ModeHistogram {
            counts: counts.to_vec(),
            unassigned: 0,
            quality_radius: 0.6,
        }
    }

    #[test]
    fn samples_at_centers_assign_one_each() {
        let gmm = canonical();
        let rows: Vec<Vec<f64>> = gmm.modes().iter().map(|m| m.center.to_vec()).collect();
        let samples = Mat::from_rows(&rows).unwrap();
        let h = assign_modes(&samples, &gmm, 3.0);
        assert_eq!(h.counts, vec![1; 8]);
        assert_eq!(h.unassigned, 0);
    }

    #[test]
    fn origin_sample_is_unassigned_on_the_canonical_ring() {
        let gmm = canonical();
        let samples = Mat::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let h = assign_modes(&samples, &gmm, 3.0);
        assert_eq!(h.assigned(), 0);
        assert_eq!(h.unassigned, 1);
    }

    #[test]
    fn assignment_matches_exhaustive_scan() {
        // Oracle: an independent O(n*M) loop over every (sample, center).
        let gmm = canonical();
        let mut rng = SeededRng::stream(4, "assign");
        let samples = rng.normal_mat(500, 2);
        let h = assign_modes(&samples, &gmm, 3.0);

        let mut counts = vec![0u64; 8];
        let mut unassigned = 0u64;
        for row in samples.iter_rows() {
            let mut best_k = 0;
            let mut best = f64::INFINITY;
            for (k, m) in gmm.modes().iter().enumerate() {
                let d =
                    ((row[0] - m.center[0]).powi(2) + (row[1] - m.center[1]).powi(2)).sqrt();
                if d < best {
                    best = d;
                    best_k = k;
                }
            }
            if best <= 3.0 * gmm.modes()[best_k].std {
                counts[best_k] += 1;
            } else {
                unassigned += 1;
            }
        }
        assert_eq!(h.counts, counts);
        assert_eq!(h.unassigned, unassigned);
    }

    #[test]
    fn coverage_closed_forms() {
        assert_eq!(coverage_wasserstein(&hist(&[5; 8])).unwrap(), 0.0);
        assert_eq!(coverage_wasserstein(&hist(&[100, 0, 0, 0, 0, 0, 0, 0])).unwrap(), 2.0);
        assert_eq!(
            coverage_wasserstein(&hist(&[50, 0, 0, 0, 50, 0, 0, 0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn coverage_zero_iff_exactly_uniform() {
        assert_eq!(coverage_wasserstein(&hist(&[7, 7, 7, 7])).unwrap(), 0.0);
        assert!(coverage_wasserstein(&hist(&[7, 7, 7, 8])).unwrap() > 0.0);
    }

    #[test]
    fn coverage_errors_on_empty_histogram() {
        let empty = ModeHistogram {
            counts: vec![0; 8],
            unassigned: 42,
            quality_radius: 0.6,
        };
        assert!(matches!(
            coverage_wasserstein(&empty),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn euclidean_ground_metric_hand_case() {
        // Two modes distance d apart; all mass on mode 0, target uniform:
        // ship 1/2 across distance d.
        let gmm = GaussianMixture::new(vec![
            crate::gmm::Mode { center: [0.0, 0.0], std: 0.1, weight: 0.5 },
            crate::gmm::Mode { center: [3.0, 4.0], std: 0.1, weight: 0.5 },
        ])
        .unwrap();
        let h = ModeHistogram {
            counts: vec![10, 0],
            unassigned: 0,
            quality_radius: 0.3,
        };
        let w = coverage_wasserstein_euclidean(&h, &gmm).unwrap();
        assert!((w - 2.5).abs() < 1e-12, "{w}");
    }

    #[test]
    fn covered_mode_count_cases() {
        assert_eq!(covered_mode_count(&hist(&[10; 8]), 0.02), 8);
        assert_eq!(covered_mode_count(&hist(&[80, 0, 0, 0, 0, 0, 0, 0]), 0.02), 1);
        assert_eq!(covered_mode_count(&hist(&[50, 50, 0, 0, 0, 0, 0, 0]), 0.02), 2);
        let empty = ModeHistogram {
            counts: vec![0; 8],
            unassigned: 3,
            quality_radius: 0.6,
        };
        assert_eq!(covered_mode_count(&empty, 0.02), 0);
    }

    #[test]
    fn mean_log_likelihood_closed_form_and_duplication() {
        let gmm = GaussianMixture::new(vec![crate::gmm::Mode {
            center: [0.0, 0.0],
            std: 1.0,
            weight: 1.0,
        }])
        .unwrap();
        let peak = Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let expected = -(std::f64::consts::TAU).ln();
        assert!((mean_log_likelihood(&peak, &gmm) - expected).abs() < 1e-12);

        let mut rng = SeededRng::stream(5, "dup");
        let samples = rng.normal_mat(20, 2);
        let doubled_rows: Vec<Vec<f64>> = samples
            .iter_rows()
            .chain(samples.iter_rows())
            .map(|r| r.to_vec())
            .collect();
        let doubled = Mat::from_rows(&doubled_rows).unwrap();
        let a = mean_log_likelihood(&samples, &gmm);
        let b = mean_log_likelihood(&doubled, &gmm);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mean_log_likelihood_is_translation_covariant() {
        let gmm = canonical();
        let shift = [1.3, -0.7];
        let shifted_modes: Vec<crate::gmm::Mode> = gmm
            .modes()
            .iter()
            .map(|m| crate::gmm::Mode {
                center: [m.center[0] + shift[0], m.center[1] + shift[1]],
                std: m.std,
                weight: m.weight,
            })
            .collect();
        let shifted_gmm = GaussianMixture::new(shifted_modes).unwrap();

        let mut rng = SeededRng::stream(6, "translate");
        let samples = rng.normal_mat(200, 2);
        let shifted_rows: Vec<Vec<f64>> = samples
            .iter_rows()
            .map(|r| vec![r[0] + shift[0], r[1] + shift[1]])
            .collect();
        let shifted_samples = Mat::from_rows(&shifted_rows).unwrap();
        let a = mean_log_likelihood(&samples, &gmm);
        let b = mean_log_likelihood(&shifted_samples, &shifted_gmm);
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn true_samples_score_well_on_all_metrics() {
        let gmm = canonical();
        let mut rng = SeededRng::stream(7, "true-samples");
        let samples = gmm.sample(&mut rng, 20_000);
        let record = MetricsRecord::evaluate(0, 0, &samples, &gmm, 3.0, 0.02, GroundMetric::Circular);
        assert_eq!(record.covered_modes, 8);
        assert!(record.coverage_w1.unwrap() < 0.05);
        assert!(record.mean_log_likelihood > -2.0);
        // In 2D, P(||x - c|| > 3 sigma) = exp(-4.5) ~ 1.1%; expect ~222.
        assert!(record.histogram.unassigned < 350);
    }

    proptest! {
        #[test]
        fn coverage_is_exactly_rotation_invariant(
            counts in proptest::collection::vec(0u64..1000, 8),
            shift in 1usize..8,
        ) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let base = hist(&counts);
            let mut rotated_counts = counts.clone();
            rotated_counts.rotate_left(shift);
            let rotated = hist(&rotated_counts);
            let a = coverage_wasserstein(&base).unwrap();
            let b = coverage_wasserstein(&rotated).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }

        #[test]
        fn coverage_is_bounded_for_eight_modes(
            counts in proptest::collection::vec(0u64..1000, 8),
        ) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let w = coverage_wasserstein(&hist(&counts)).unwrap();
            prop_assert!((0.0..=2.0).contains(&w));
        }
    }
}
