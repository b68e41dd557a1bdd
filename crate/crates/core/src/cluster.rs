//! Natural clusters of singular points: groups whose disk `D(c, r)` holds exactly the
//! same points as `D(c, 3r)`. The common radius becomes the fencing radius `delta`.

use serde::{Deserialize, Serialize};

use crate::numeric::distance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: Vec<f64>,
    pub members: Vec<Vec<f64>>,
    pub radius: f64,
}

const MAX_HALVINGS: usize = 200;

fn mean(points: &[&Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    let k = points.len() as f64;
    (0..n).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / k).collect()
}

fn nearest_neighbor_distances(points: &[Vec<f64>]) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| distance(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Attempts a partition into natural clusters of radius `r`; `None` if some cluster
/// fails the `r` / `3r` test or two centers are closer than `3r`.
fn try_radius(points: &[Vec<f64>], order: &[usize], r: f64) -> Option<Vec<Cluster>> {
    let mut assigned = vec![false; points.len()];
    let mut clusters: Vec<Cluster> = Vec::new();
    for &i in order {
        if assigned[i] {
            continue;
        }
        let mut idx: Vec<usize> =
            (0..points.len()).filter(|&j| !assigned[j] && distance(&points[i], &points[j]) <= r).collect();
        let mut center = mean(&idx.iter().map(|&j| &points[j]).collect::<Vec<_>>());
        // Re-center until the member set is stable under the mean.
        for _ in 0..8 {
            let next: Vec<usize> = (0..points.len()).filter(|&j| distance(&center, &points[j]) <= r).collect();
            if next == idx {
                break;
            }
            if next.is_empty() || next.iter().any(|&j| assigned[j]) {
                return None;
            }
            idx = next;
            center = mean(&idx.iter().map(|&j| &points[j]).collect::<Vec<_>>());
        }
        let inner: Vec<usize> = (0..points.len()).filter(|&j| distance(&center, &points[j]) <= r).collect();
        let outer: Vec<usize> = (0..points.len()).filter(|&j| distance(&center, &points[j]) <= 3.0 * r).collect();
        if inner != idx || outer != idx {
            return None;
        }
        if clusters.iter().any(|c| distance(&c.center, &center) < 3.0 * r) {
            return None;
        }
        for &j in &idx {
            assigned[j] = true;
        }
        clusters.push(Cluster { center, members: idx.iter().map(|&j| points[j].clone()).collect(), radius: r });
    }
    Some(clusters)
}

/// Groups `points` into natural clusters, starting at radius `r0` and halving until the
/// partition is valid. Returns the clusters and the final radius `delta` (`r0` for an
/// empty input).
///
/// Points are visited in ascending order of nearest-neighbor distance; each cluster is
/// centered at the mean of its members.
pub fn natural_clusters(points: &[Vec<f64>], r0: f64) -> (Vec<Cluster>, f64) {
    assert!(r0 > 0.0, "cluster radius must be positive");
    if points.is_empty() {
        return (Vec::new(), r0);
    }
    let nn = nearest_neighbor_distances(points);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| nn[a].total_cmp(&nn[b]).then(a.cmp(&b)));
    let mut r = r0;
    for _ in 0..MAX_HALVINGS {
        if let Some(clusters) = try_radius(points, &order, r) {
            return (clusters, r);
        }
        r *= 0.5;
    }
    // Only reachable for coincident points at distances below any representable radius.
    let clusters = points
        .iter()
        .map(|p| Cluster { center: p.clone(), members: vec![p.clone()], radius: r })
        .collect();
    (clusters, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton() {
        let (c, d) = natural_clusters(&[vec![0.0, 0.0]], 0.25);
        assert_eq!(c.len(), 1);
        assert_eq!(d, 0.25);
    }

    #[test]
    fn close_pair_forms_one_cluster() {
        let (c, d) = natural_clusters(&[vec![0.0, 0.0], vec![0.01, 0.0]], 0.25);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members.len(), 2);
        assert_eq!(d, 0.25);
    }

    #[test]
    fn separated_pair_forms_two_clusters() {
        let (c, d) = natural_clusters(&[vec![0.0, 0.0], vec![1.0, 0.0]], 0.25);
        assert_eq!(c.len(), 2);
        assert_eq!(d, 0.25);
    }

    #[test]
    fn halves_when_neighbors_are_too_close() {
        let (c, d) = natural_clusters(&[vec![0.0, 0.0], vec![0.5, 0.0]], 0.25);
        assert_eq!(c.len(), 2);
        assert!(d < 0.5 / 3.0);
        assert_eq!(d, 0.125);
    }

    #[test]
    fn empty_input() {
        let (c, d) = natural_clusters(&[], 0.3);
        assert!(c.is_empty());
        assert_eq!(d, 0.3);
    }

    proptest! {
        #[test]
        fn clusters_are_natural(pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..12), r0 in 0.01f64..0.5) {
            let (clusters, delta) = natural_clusters(&pts, r0);
            let total: usize = clusters.iter().map(|c| c.members.len()).sum();
            prop_assert_eq!(total, pts.len());
            for c in &clusters {
                for m in &c.members {
                    prop_assert!(distance(m, &c.center) <= delta);
                }
                let outer = pts.iter().filter(|p| distance(p, &c.center) <= 3.0 * delta).count();
                prop_assert_eq!(outer, c.members.len());
            }
            for (i, a) in clusters.iter().enumerate() {
                for b in &clusters[i + 1..] {
                    prop_assert!(distance(&a.center, &b.center) >= 3.0 * delta);
                }
            }
        }
    }
}
