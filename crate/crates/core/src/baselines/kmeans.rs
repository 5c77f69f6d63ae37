use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::coreset::{CoreModel, Coreset, Partition};
use crate::linalg::{sq_dist, Kernel, PointSet};
use crate::{Error, Result};

const TOL: f64 = 1e-6;
const MAX_ITER: usize = 100;

/// Result of Lloyd's algorithm.
#[derive(Debug, Clone)]
pub struct KMeans {
    pub labels: Vec<usize>,
    /// Row-major, `clusters × dim`.
    pub centroids: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn seed_centers<R: Rng + ?Sized>(points: &PointSet, m: usize, rng: &mut R) -> Vec<f64> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let mut centers = Vec::with_capacity(m * points.dim());
    let mut d2 = vec![f64::INFINITY; n];
    let mut next = rng.random_range(0..n);
    for _ in 0..m {
        chosen[next] = true;
        let c = points.point(next);
        centers.extend_from_slice(c);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.point(i), c));
        }
        let weights: Vec<f64> = d2
            .iter()
            .zip(&chosen)
            .map(|(&d, &ch)| if ch { 0.0 } else { d })
            .collect();
        next = match WeightedIndex::new(&weights) {
            Ok(w) => w.sample(rng),
            // every remaining point coincides with a center
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
                if free.is_empty() {
                    break;
                }
                free[rng.random_range(0..free.len())]
            }
        };
    }
    centers
}

fn nearest(point: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    centers
        .chunks_exact(dim)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (j, c)| {
            let d = sq_dist(point, c);
            if d < best.1 {
                (j, d)
            } else {
                best
            }
        })
}

/// Lloyd's k-means from kmeans++ seeds. Stops when no center moves more
/// than 1e-6 or after 100 iterations. Empty clusters are reseeded with the
/// point farthest from its center, so every cluster is nonempty.
pub fn kmeans<R: Rng + ?Sized>(points: &PointSet, m: usize, rng: &mut R) -> Result<KMeans> {
    let (n, dim) = (points.len(), points.dim());
    if m == 0 {
        return Err(Error::InvalidInput("number of parts must be >= 1".into()));
    }
    if m > n {
        return Err(Error::TooManyParts { parts: m, n });
    }
    let mut centers = seed_centers(points, m, rng);
    let mut labels = vec![0; n];
    let mut dist = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITER {
        iterations += 1;
        for i in 0..n {
            (labels[i], dist[i]) = nearest(points.point(i), &centers, dim);
        }
        let mut counts = vec![0usize; m];
        for &l in &labels {
            counts[l] += 1;
        }
        for j in 0..m {
            if counts[j] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("m <= n leaves a cluster with two points");
            counts[labels[far]] -= 1;
            labels[far] = j;
            dist[far] = 0.0;
            counts[j] = 1;
        }

        let mut next = vec![0.0; m * dim];
        for (i, &l) in labels.iter().enumerate() {
            for (acc, x) in next[l * dim..(l + 1) * dim].iter_mut().zip(points.point(i)) {
                *acc += x;
            }
        }
        for (j, c) in next.chunks_exact_mut(dim).enumerate() {
            c.iter_mut().for_each(|x| *x /= counts[j] as f64);
        }
        let shift = centers
            .chunks_exact(dim)
            .zip(next.chunks_exact(dim))
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift <= TOL {
            converged = true;
            break;
        }
    }
    Ok(KMeans {
        labels,
        centroids: centers,
        iterations,
        converged,
    })
}

/// The K++ baseline: k-means clusters as parts, the member nearest each
/// centroid as its core.
pub fn kpp_baseline<K: Kernel + ?Sized, R: Rng + ?Sized>(
    points: &PointSet,
    kernel: &K,
    parts: usize,
    k: usize,
    rng: &mut R,
) -> Result<CoreModel> {
    if points.len() != kernel.size() {
        return Err(Error::InvalidInput(format!(
            "{} points but kernel over {} items",
            points.len(),
            kernel.size()
        )));
    }
    let km = kmeans(points, parts, rng)?;
    let dim = points.dim();
    let partition = Partition::from_assignment(km.labels, parts)?;
    let cores = (0..parts)
        .map(|c| {
            let centroid = &km.centroids[c * dim..(c + 1) * dim];
            partition
                .members(c)
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    sq_dist(points.point(a), centroid)
                        .total_cmp(&sq_dist(points.point(b), centroid))
                        .then(a.cmp(&b))
                })
                .expect("nonempty cluster")
        })
        .collect();
    let coreset = Coreset::new(cores, &partition)?;
    CoreModel::new(kernel, partition, coreset, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::linear_kernel;
    use crate::rng::stream;

    fn two_blobs() -> (PointSet, Vec<usize>) {
        let mut rng = stream(3, 0);
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for i in 0..40 {
            let side = i % 2;
            let cx = if side == 0 { 10.0 } else { -10.0 };
            rows.push(vec![cx + rng.random::<f64>() - 0.5, 1.0 + rng.random::<f64>() - 0.5]);
            truth.push(side);
        }
        (PointSet::from_rows(&rows).unwrap(), truth)
    }

    #[test]
    fn recovers_separated_clusters() {
        let (pts, truth) = two_blobs();
        let km = kmeans(&pts, 2, &mut stream(0, 0)).unwrap();
        assert!(km.converged);
        let flip = km.labels[0] != truth[0];
        for (l, t) in km.labels.iter().zip(&truth) {
            assert_eq!(*l != *t, flip);
        }
    }

    #[test]
    fn singletons_when_parts_equal_points() {
        let (pts, _) = two_blobs();
        let l = linear_kernel(&pts).unwrap();
        let model = kpp_baseline(&pts, &l, 40, 2, &mut stream(1, 0)).unwrap();
        assert!(model.part_sizes().iter().all(|&s| s == 1));
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = PointSet::from_rows(&vec![vec![1.0, 1.0]; 5]).unwrap();
        let km = kmeans(&pts, 5, &mut stream(2, 0)).unwrap();
        let mut seen = km.labels.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn medoids_are_members() {
        let (pts, _) = two_blobs();
        let l = linear_kernel(&pts).unwrap();
        let model = kpp_baseline(&pts, &l, 4, 2, &mut stream(4, 0)).unwrap();
        for (c, &core) in model.coreset().cores().iter().enumerate() {
            assert_eq!(model.partition().part_of(core), c);
        }
        assert!(matches!(
            kpp_baseline(&pts, &l, 41, 2, &mut stream(4, 0)),
            Err(Error::TooManyParts { .. })
        ));
    }
}
