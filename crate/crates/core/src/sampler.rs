//! Two-stage approximate sampling: a k-DPP over parts on L̃, then one
//! uniform member per selected part.

use rand::Rng;

use crate::coreset::{CoreModel, Coreset, Partition};
use crate::linalg::{check_subset, log_det_psd};
use crate::{Error, Result};

/// A draw together with the parts selected in stage one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreSample {
    /// Ground-set items, `items[i]` drawn from part `core_trace[i]`.
    pub items: Vec<usize>,
    /// Part ids selected by the stage-one k-DPP, ascending.
    pub core_trace: Vec<usize>,
}

impl CoreSample {
    /// Items sorted ascending.
    pub fn sorted_items(&self) -> Vec<usize> {
        let mut v = self.items.clone();
        v.sort_unstable();
        v
    }
}

pub fn coredpp_sample<R: Rng + ?Sized>(model: &CoreModel, rng: &mut R) -> CoreSample {
    let core_trace = model.core_dpp().sample(rng);
    let items = core_trace
        .iter()
        .map(|&c| {
            let members = model.partition().members(c);
            members[rng.random_range(0..members.len())]
        })
        .collect();
    CoreSample { items, core_trace }
}

/// C(Y): each item replaced by the core of its part; duplicates kept.
pub fn core_replace(partition: &Partition, coreset: &Coreset, subset: &[usize]) -> Vec<usize> {
    subset
        .iter()
        .map(|&y| coreset.core(partition.part_of(y)))
        .collect()
}

/// ln P_{C,k}(Y); −∞ off the k-singular support.
pub fn coredpp_log_prob(model: &CoreModel, subset: &[usize]) -> Result<f64> {
    if subset.len() != model.k() {
        return Err(Error::WrongCardinality {
            expected: model.k(),
            got: subset.len(),
        });
    }
    check_subset(model.n(), subset)?;
    let partition = model.partition();
    if !partition.is_singular(subset) {
        return Ok(f64::NEG_INFINITY);
    }
    let parts: Vec<usize> = subset.iter().map(|&y| partition.part_of(y)).collect();
    let gram = model.core_gram();
    let minor = nalgebra::DMatrix::from_fn(parts.len(), parts.len(), |a, b| {
        gram[(parts[a], parts[b])]
    });
    Ok(log_det_psd(&minor) - model.log_z_core())
}

/// P_{C,k}(Y) = det(L_{C(Y)}) / e_k(L̃) for k-singular Y, else 0.
pub fn coredpp_prob(model: &CoreModel, subset: &[usize]) -> Result<f64> {
    Ok(coredpp_log_prob(model, subset)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::build_kdpp;
    use crate::linalg::KernelMatrix;
    use crate::rng::stream;
    use crate::subsets::for_each_k_subset;
    use nalgebra::DMatrix;

    fn random_kernel(n: usize, seed: u64) -> KernelMatrix {
        let mut rng = stream(seed, 0);
        let x = DMatrix::from_fn(n, n + 2, |_, _| rng.random::<f64>() - 0.5);
        KernelMatrix::new(&x * x.transpose()).unwrap()
    }

    fn model(n: usize, assignment: Vec<usize>, parts: usize, k: usize, seed: u64) -> CoreModel {
        let l = random_kernel(n, seed);
        let p = Partition::from_assignment(assignment, parts).unwrap();
        let c = Coreset::first_members(&p);
        CoreModel::new(&l, p, c, k).unwrap()
    }

    #[test]
    fn core_replace_cases() {
        let p = Partition::from_assignment(vec![0, 1, 0, 1, 2], 3).unwrap();
        let c = Coreset::new(vec![2, 1, 4], &p).unwrap();
        assert_eq!(core_replace(&p, &c, &[2, 1, 4]), vec![2, 1, 4]);
        assert_eq!(core_replace(&p, &c, &[0, 2]), vec![2, 2]);
        assert_eq!(core_replace(&p, &c, &[0, 3, 4]), vec![2, 1, 4]);
    }

    #[test]
    fn support_and_normalization() {
        let m = model(10, vec![0, 1, 2, 3, 0, 1, 2, 3, 0, 1], 4, 2, 1);
        assert_eq!(coredpp_prob(&m, &[0, 4]).unwrap(), 0.0);
        assert!(coredpp_prob(&m, &[0, 1]).unwrap() > 0.0);
        let mut total = 0.0;
        for_each_k_subset(10, 2, |y| total += coredpp_prob(&m, y).unwrap());
        assert!((total - 1.0).abs() < 1e-8, "{total}");
        assert!(matches!(
            coredpp_prob(&m, &[1]),
            Err(Error::WrongCardinality { .. })
        ));
    }

    #[test]
    fn singleton_partition_is_plain_kdpp() {
        let l = random_kernel(5, 2);
        let p = Partition::singletons(5);
        let c = Coreset::first_members(&p);
        let m = CoreModel::new(&l, p, c, 2).unwrap();
        let exact = build_kdpp(l, 2).unwrap();
        for_each_k_subset(5, 2, |y| {
            let a = coredpp_prob(&m, y).unwrap();
            let b = exact.prob(y).unwrap();
            assert!((a - b).abs() <= 1e-10 * b);
        });
    }

    #[test]
    fn draws_are_singular_and_traced() {
        let m = model(12, (0..12).map(|i| i % 4).collect(), 4, 3, 3);
        let mut rng = stream(4, 0);
        for _ in 0..500 {
            let s = coredpp_sample(&m, &mut rng);
            assert_eq!(s.items.len(), 3);
            assert!(m.partition().is_singular(&s.items));
            for (y, c) in s.items.iter().zip(&s.core_trace) {
                assert_eq!(m.partition().part_of(*y), *c);
            }
        }
    }
}
