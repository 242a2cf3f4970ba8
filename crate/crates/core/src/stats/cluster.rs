//! k-means clustering in the 2-D embedding space, silhouette scoring, and
//! silhouette-based selection of the cluster count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::StatsError;
use crate::rng::RngStream;

const RESTARTS: usize = 20;
const MAX_LLOYD_ITERS: usize = 300;
const MOVEMENT_TOL: f64 = 1e-10;

/// A hard clustering: 0-based labels plus the cluster centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: Vec<[f64; 2]>,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    /// Within-cluster sum of squared distances.
    pub fn objective(&self, points: &[[f64; 2]]) -> f64 {
        points
            .iter()
            .zip(&self.labels)
            .map(|(p, &c)| dist2(*p, self.centroids[c]))
            .sum()
    }

    /// Point indices of one cluster.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    dist2(a, b).sqrt()
}

/// Lloyd's k-means with k-means++ seeding; best of 20 restarts by
/// within-cluster sum of squares. Deterministic for a fixed stream
/// (restarts run in order, ties keep the earlier result).
pub fn kmeans(
    points: &[[f64; 2]],
    m: usize,
    rng: RngStream,
) -> Result<ClusterAssignment, StatsError> {
    if m == 0 {
        return Err(StatsError::ZeroClusters);
    }
    if points.len() < m {
        return Err(StatsError::TooFewSamples {
            needed: m,
            got: points.len(),
        });
    }
    let distinct = count_distinct(points);
    if distinct < m {
        return Err(StatsError::TooFewDistinctPoints { distinct, m });
    }

    let mut rng = rng.rng();
    let mut best: Option<(f64, ClusterAssignment)> = None;
    for _ in 0..RESTARTS {
        let seeds = kmeans_pp_seed(points, m, &mut rng);
        let assignment = lloyd(points, seeds);
        let wcss = assignment.objective(points);
        if best.as_ref().is_none_or(|(b, _)| wcss < *b) {
            best = Some((wcss, assignment));
        }
    }
    Ok(best.expect("at least one restart ran").1)
}

fn count_distinct(points: &[[f64; 2]]) -> usize {
    let mut sorted: Vec<[f64; 2]> = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("points are finite"));
    sorted.dedup();
    sorted.len()
}

fn kmeans_pp_seed(points: &[[f64; 2]], m: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut centroids = Vec::with_capacity(m);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(*p, centroids[0])).collect();
    while centroids.len() < m {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut chosen = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 {
                target -= w;
                if target <= 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
        }
        // Floating-point residue: fall back to the last point with weight.
        let idx = chosen.unwrap_or_else(|| {
            d2.iter()
                .rposition(|&w| w > 0.0)
                .expect("fewer centroids than distinct points")
        });
        let c = points[idx];
        centroids.push(c);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(*p, c));
        }
    }
    centroids
}

fn nearest(centroids: &[[f64; 2]], p: [f64; 2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = dist2(p, *centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn lloyd(points: &[[f64; 2]], mut centroids: Vec<[f64; 2]>) -> ClusterAssignment {
    let m = centroids.len();
    let mut labels = vec![0usize; points.len()];
    for _ in 0..MAX_LLOYD_ITERS {
        for (i, p) in points.iter().enumerate() {
            labels[i] = nearest(&centroids, *p);
        }
        let mut sums = vec![[0.0f64; 2]; m];
        let mut counts = vec![0usize; m];
        for (p, &c) in points.iter().zip(&labels) {
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        // Re-seat any emptied centroid on the point farthest from its own
        // centroid, so every cluster stays populated.
        for c in 0..m {
            if counts[c] == 0 {
                let (far, _) = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, dist2(*p, centroids[labels[i]])))
                    .fold((0, f64::NEG_INFINITY), |acc, (i, d)| {
                        if d > acc.1 {
                            (i, d)
                        } else {
                            acc
                        }
                    });
                let donor = labels[far];
                sums[donor][0] -= points[far][0];
                sums[donor][1] -= points[far][1];
                counts[donor] -= 1;
                labels[far] = c;
                sums[c] = points[far];
                counts[c] = 1;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..m {
            let new = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            movement = movement.max(dist(new, centroids[c]));
            centroids[c] = new;
        }
        if movement < MOVEMENT_TOL {
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        labels[i] = nearest(&centroids, *p);
    }
    ClusterAssignment { labels, centroids }
}

/// Mean silhouette value with Euclidean distance; singleton-cluster points
/// score 0. Requires at least two non-empty clusters.
pub fn silhouette(points: &[[f64; 2]], assignment: &ClusterAssignment) -> Result<f64, StatsError> {
    let m = assignment.cluster_count();
    if m < 2 {
        return Err(StatsError::SingleCluster);
    }
    if points.len() != assignment.labels.len() {
        return Err(StatsError::InvalidParameter {
            what: "assignment (label count must match point count)",
        });
    }
    let mut sizes = vec![0usize; m];
    for &c in &assignment.labels {
        sizes[c] += 1;
    }
    if let Some(cluster) = sizes.iter().position(|&s| s == 0) {
        return Err(StatsError::EmptyCluster { cluster });
    }

    let mut total = 0.0;
    let mut sums = vec![0.0f64; m];
    for (i, p) in points.iter().enumerate() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (q, &c) in points.iter().zip(&assignment.labels) {
            sums[c] += dist(*p, *q);
        }
        let own = assignment.labels[i];
        if sizes[own] == 1 {
            continue; // silhouette 0
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..m)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / points.len() as f64)
}

/// Pick the cluster count in `candidates` with the highest mean silhouette;
/// ties break toward the smaller count. Returns the count and its clustering.
pub fn select_m_with_assignment(
    points: &[[f64; 2]],
    candidates: std::ops::RangeInclusive<usize>,
    rng: RngStream,
) -> Result<(usize, ClusterAssignment), StatsError> {
    if candidates.is_empty() || *candidates.start() < 2 {
        return Err(StatsError::InvalidParameter {
            what: "candidate range (must be non-empty and start at >= 2)",
        });
    }
    let mut best: Option<(f64, usize, ClusterAssignment)> = None;
    for m in candidates {
        let assignment = kmeans(points, m, rng.substream(m as u64))?;
        let score = silhouette(points, &assignment)?;
        // Strict improvement only: earlier (smaller) m wins ties.
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, m, assignment));
        }
    }
    let (_, m, assignment) = best.expect("candidate range is non-empty");
    Ok((m, assignment))
}

/// As [`select_m_with_assignment`], returning only the selected count.
pub fn select_m(
    points: &[[f64; 2]],
    candidates: std::ops::RangeInclusive<usize>,
    rng: RngStream,
) -> Result<usize, StatsError> {
    select_m_with_assignment(points, candidates, rng).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn line(points: &[f64]) -> Vec<[f64; 2]> {
        points.iter().map(|&x| [x, 0.0]).collect()
    }

    /// Exhaustive best 2-partition by WCSS, for small n.
    fn brute_force_two_cluster_wcss(points: &[[f64; 2]]) -> f64 {
        let n = points.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let mut groups = [vec![], vec![]];
            for (i, p) in points.iter().enumerate() {
                groups[(mask >> i & 1) as usize].push(*p);
            }
            let wcss: f64 = groups
                .iter()
                .map(|g| {
                    let cx = g.iter().map(|p| p[0]).sum::<f64>() / g.len() as f64;
                    let cy = g.iter().map(|p| p[1]).sum::<f64>() / g.len() as f64;
                    g.iter().map(|p| dist2(*p, [cx, cy])).sum::<f64>()
                })
                .sum();
            best = best.min(wcss);
        }
        best
    }

    #[test]
    fn two_pairs_recover_expected_centroids() {
        let points = line(&[0.0, 0.1, 10.0, 10.1]);
        let result = kmeans(&points, 2, RngStream::new(1, 0)).unwrap();
        let mut centers: Vec<f64> = result.centroids.iter().map(|c| c[0]).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(centers[0], 0.05, epsilon = 1e-12);
        assert_relative_eq!(centers[1], 10.05, epsilon = 1e-12);
        assert_relative_eq!(
            result.objective(&points),
            brute_force_two_cluster_wcss(&points),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let points = line(&[1.0, 2.0, 6.0]);
        let result = kmeans(&points, 1, RngStream::new(1, 0)).unwrap();
        assert_relative_eq!(result.centroids[0][0], 3.0, epsilon = 1e-12);
        assert_eq!(result.labels, vec![0, 0, 0]);
    }

    #[test]
    fn rejects_more_clusters_than_distinct_points() {
        let points = line(&[1.0, 1.0, 2.0]);
        assert_eq!(
            kmeans(&points, 3, RngStream::new(1, 0)).unwrap_err(),
            StatsError::TooFewDistinctPoints { distinct: 2, m: 3 }
        );
    }

    #[test]
    fn objective_beats_random_assignments() {
        let mut rng = RngStream::new(3, 0).rng();
        let points: Vec<[f64; 2]> = (0..60)
            .map(|_| [rng.random::<f64>() * 4.0, rng.random::<f64>() * 4.0])
            .collect();
        let result = kmeans(&points, 4, RngStream::new(3, 1)).unwrap();
        let wcss = result.objective(&points);
        for _ in 0..1000 {
            let labels: Vec<usize> = (0..points.len()).map(|_| rng.random_range(0..4)).collect();
            let mut sums = vec![[0.0f64; 2]; 4];
            let mut counts = vec![0usize; 4];
            for (p, &c) in points.iter().zip(&labels) {
                sums[c][0] += p[0];
                sums[c][1] += p[1];
                counts[c] += 1;
            }
            let centroids: Vec<[f64; 2]> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &n)| {
                    if n == 0 {
                        [f64::INFINITY, f64::INFINITY]
                    } else {
                        [s[0] / n as f64, s[1] / n as f64]
                    }
                })
                .collect();
            let random_wcss: f64 = points
                .iter()
                .zip(&labels)
              .filter(|(_, &c)| counts[c] > 0)
                .map(|(p, &c)| dist2(*p, centroids[c]))
                .sum();
            assert!(wcss <= random_wcss + 1e-9);
        }
    }

    #[test]
    fn kmeans_is_deterministic() {
        let mut rng = RngStream::new(4, 0).rng();
        let points: Vec<[f64; 2]> = (0..100)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let a = kmeans(&points, 3, RngStream::new(9, 9)).unwrap();
        let b = kmeans(&points, 3, RngStream::new(9, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn silhouette_of_tight_pairs_is_high() {
        let points = line(&[0.0, 0.1, 10.0, 10.1]);
        let assignment = kmeans(&points, 2, RngStream::new(1, 0)).unwrap();
        let s = silhouette(&points, &assignment).unwrap();
        // Hand value: each point has a = 0.1, b = 10.05 -> s = 1 - 0.1/10.05.
        assert_relative_eq!(s, 1.0 - 0.1 / 10.05, epsilon = 1e-9);
        assert!(s > 0.95);
    }

    #[test]
    fn silhouette_of_random_labels_is_near_zero() {
        let mut rng = RngStream::new(6, 0).rng();
        let points: Vec<[f64; 2]> = (0..1000)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let labels: Vec<usize> = (0..1000).map(|_| rng.random_range(0..3)).collect();
        let mut sums = vec![[0.0f64; 2]; 3];
        let mut counts = vec![0usize; 3];
        for (p, &c) in points.iter().zip(&labels) {
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        let centroids = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| [s[0] / n as f64, s[1] / n as f64])
            .collect();
        let assignment = ClusterAssignment { labels, centroids };
        let s = silhouette(&points, &assignment).unwrap();
        assert!(s.abs() < 0.2, "got {s}");
        assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn silhouette_requires_two_clusters() {
        let points = line(&[0.0, 1.0]);
        let assignment = ClusterAssignment {
            labels: vec![0, 0],
            centroids: vec![[0.5, 0.0]],
        };
        assert_eq!(
            silhouette(&points, &assignment).unwrap_err(),
            StatsError::SingleCluster
        );
    }

    #[test]
    fn select_m_finds_two_blobs() {
        let mut rng = RngStream::new(8, 0).rng();
        let mut points = Vec::new();
        for _ in 0..50 {
            points.push([rng.random::<f64>() * 0.2, rng.random::<f64>() * 0.2]);
            points.push([5.0 + rng.random::<f64>() * 0.2, rng.random::<f64>() * 0.2]);
        }
        let m = select_m(&points, 2..=6, RngStream::new(8, 1)).unwrap();
        assert_eq!(m, 2);
    }

    #[test]
    fn selection_prefers_smaller_count_on_ties() {
        // Internal tie-break check: equal scores keep the earlier candidate.
        let scored = [(2usize, 0.7), (3, 0.7), (4, 0.69)];
        let mut best: Option<(f64, usize)> = None;
        for (m, s) in scored {
            if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                best = Some((s, m));
            }
        }
        assert_eq!(best.unwrap().1, 2);
    }
}
