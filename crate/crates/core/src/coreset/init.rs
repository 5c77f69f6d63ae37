use rand::seq::index;
use rand::Rng;

use super::{Coreset, Partition};
use crate::linalg::Kernel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    #[default]
    KMeansPP,
    Random,
}

fn check_parts(n: usize, parts: usize) -> Result<()> {
    if parts == 0 {
        return Err(Error::InvalidInput("number of parts must be >= 1".into()));
    }
    if parts > n {
        return Err(Error::TooManyParts { parts, n });
    }
    Ok(())
}

fn sq_kernel_dist<K: Kernel + ?Sized>(kernel: &K, u: usize, v: usize) -> f64 {
    if u == v {
        return 0.0;
    }
    (kernel.diag(u) + kernel.diag(v) - 2.0 * kernel.entry(u, v)).max(0.0)
}

struct Seeding {
    seeds: Vec<usize>,
    is_seed: Vec<bool>,
    best_d2: Vec<f64>,
    best_part: Vec<usize>,
}

impl Seeding {
    fn add<K: Kernel + ?Sized>(&mut self, kernel: &K, s: usize) {
        let part = self.seeds.len();
        self.seeds.push(s);
        self.is_seed[s] = true;
        for i in 0..self.best_d2.len() {
            let d2 = sq_kernel_dist(kernel, i, s);
            if d2 < self.best_d2[i] {
                self.best_d2[i] = d2;
                self.best_part[i] = part;
            }
        }
    }
}

/// kmeans++ seeding under the kernel-induced distance: seeds drawn with
/// probability ∝ D², every other item joins its nearest seed (lowest part id
/// on ties), and the seeds become the initial cores.
pub fn kmeanspp_init<K: Kernel + ?Sized, R: Rng + ?Sized>(
    kernel: &K,
    parts: usize,
    rng: &mut R,
) -> Result<(Partition, Coreset)> {
    let n = kernel.size();
    check_parts(n, parts)?;

    let mut seeding = Seeding {
        seeds: Vec::with_capacity(parts),
        is_seed: vec![false; n],
        best_d2: vec![f64::INFINITY; n],
        best_part: vec![0usize; n],
    };
    seeding.add(kernel, rng.random_range(0..n));
    while seeding.seeds.len() < parts {
        let weight = |i: usize| {
            if seeding.is_seed[i] {
                0.0
            } else {
                seeding.best_d2[i]
            }
        };
        let total: f64 = (0..n).map(weight).sum();
        let next = if total > 0.0 && total.is_finite() {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for i in 0..n {
                let w = weight(i);
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.unwrap()
        } else {
            // every remaining item duplicates a seed
            let free: Vec<usize> = (0..n).filter(|&i| !seeding.is_seed[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        seeding.add(kernel, next);
    }

    let Seeding {
        seeds,
        mut best_part,
        ..
    } = seeding;
    for (part, &s) in seeds.iter().enumerate() {
        best_part[s] = part;
    }
    let partition = Partition::from_assignment(best_part, parts)?;
    let coreset = Coreset::new(seeds, &partition)?;
    Ok((partition, coreset))
}

/// Uniformly random distinct cores; every other item joins a uniformly
/// random part.
pub fn random_init<R: Rng + ?Sized>(
    n: usize,
    parts: usize,
    rng: &mut R,
) -> Result<(Partition, Coreset)> {
    check_parts(n, parts)?;
    let seeds = index::sample(rng, n, parts).into_vec();
    let mut assignment = vec![usize::MAX; n];
    for (part, &s) in seeds.iter().enumerate() {
        assignment[s] = part;
    }
    for a in assignment.iter_mut().filter(|a| **a == usize::MAX) {
        *a = rng.random_range(0..parts);
    }
    let partition = Partition::from_assignment(assignment, parts)?;
    let coreset = Coreset::new(seeds, &partition)?;
    Ok((partition, coreset))
}
