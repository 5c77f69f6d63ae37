#![allow(dead_code)]

use coredpp::linalg::KernelMatrix;
use coredpp::rng::{stream, Stream};
use coredpp::{Coreset, Partition};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

/// Gram matrix of n random feature vectors in n + extra dimensions, so every
/// principal minor is positive.
pub fn random_kernel<R: Rng + ?Sized>(n: usize, extra: usize, rng: &mut R) -> KernelMatrix {
    let x = DMatrix::from_fn(n, n + extra, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    KernelMatrix::new(&x * x.transpose()).expect("Gram matrices are PSD")
}

/// Every part nonempty: a shuffled surjection onto m parts.
pub fn random_partition<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Partition {
    let mut assignment: Vec<usize> = (0..n).map(|i| if i < m { i } else { rng.random_range(0..m) }).collect();
    assignment.shuffle(rng);
    Partition::from_assignment(assignment, m).unwrap()
}

pub fn random_coreset<R: Rng + ?Sized>(partition: &Partition, rng: &mut R) -> Coreset {
    let cores = (0..partition.parts())
        .map(|c| {
            let members = partition.members(c);
            members[rng.random_range(0..members.len())]
        })
        .collect();
    Coreset::new(cores, partition).unwrap()
}

pub struct Instance {
    pub kernel: KernelMatrix,
    pub partition: Partition,
    pub coreset: Coreset,
    pub k: usize,
}

pub fn instance(seed: u64, n: usize, m: usize, k: usize) -> Instance {
    let mut rng = stream(seed, 0);
    let kernel = random_kernel(n, 2, &mut rng);
    let partition = random_partition(n, m, &mut rng);
    let coreset = random_coreset(&partition, &mut rng);
    Instance {
        kernel,
        partition,
        coreset,
        k,
    }
}

pub fn rng(seed: u64) -> Stream {
    stream(seed, 99)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Pearson statistic and its chi-square upper tail against expected
/// probabilities; cells with expectation below 5 are pooled.
pub fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * total;
        if e < 5.0 {
            pool_obs += c as f64;
            pool_exp += e;
            continue;
        }
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp.max(1e-300);
        cells += 1;
    }
    let df = (cells.max(2) - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// Tight clusters around random centers, parts = clusters; the regime where
/// part diameters are small against complement distances.
pub fn clustered_instance(seed: u64, n: usize, m: usize, k: usize, noise: f64) -> Instance {
    let mut rng = stream(seed, 0);
    let dim = n + 2;
    let partition = random_partition(n, m, &mut rng);
    let centers = DMatrix::from_fn(m, dim, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let x = DMatrix::from_fn(n, dim, |i, j| {
        centers[(partition.part_of(i), j)] + noise * (rng.random::<f64>() * 2.0 - 1.0)
    });
    let kernel = KernelMatrix::new(&x * x.transpose()).expect("Gram matrices are PSD");
    let coreset = random_coreset(&partition, &mut rng);
    Instance {
        kernel,
        partition,
        coreset,
        k,
    }
}
