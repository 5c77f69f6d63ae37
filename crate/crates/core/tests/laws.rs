//! Statistical checks of every sampler against enumerated laws.

mod common;

use coredpp::baselines::{mcmc_kdpp_step, mcmc_sample_until_converged, psrf, ChainState};
use coredpp::diagnostics::{tv_empirical, tv_exact};
use coredpp::rng::stream;
use coredpp::subsets::for_each_k_subset;
use coredpp::{build_kdpp, coredpp_prob, coredpp_sample, CoreModel};
use common::{chi_square_p, instance, random_kernel};

fn subset_index(n: usize, k: usize) -> std::collections::HashMap<Vec<usize>, usize> {
    let mut index = std::collections::HashMap::new();
    for_each_k_subset(n, k, |s| {
        let i = index.len();
        index.insert(s.to_vec(), i);
    });
    index
}

#[test]
fn exact_sampler_passes_chi_square() {
    let (n, k, draws) = (6, 3, 200_000);
    let index = subset_index(n, k);
    let mut passes = 0;
    for seed in 0..5 {
        let model = build_kdpp(random_kernel(n, 1, &mut stream(seed, 0)), k).unwrap();
        let mut probs = vec![0.0; index.len()];
        for (y, &i) in &index {
            probs[i] = model.prob(y).unwrap();
        }
        let mut counts = vec![0u64; index.len()];
        let mut rng = stream(seed, 1);
        for _ in 0..draws {
            counts[index[&model.sample(&mut rng)]] += 1;
        }
        if chi_square_p(&counts, &probs) >= 0.01 {
            passes += 1;
        }
    }
    assert!(passes >= 4, "{passes}/5");
}

#[test]
fn coredpp_sampler_passes_chi_square() {
    let (n, k, draws) = (6, 2, 200_000);
    let index = subset_index(n, k);
    let mut passes = 0;
    for seed in 0..5 {
        let inst = instance(seed, n, 3, k);
        let model = CoreModel::new(&inst.kernel, inst.partition, inst.coreset, k).unwrap();
        let mut probs = vec![0.0; index.len()];
        for (y, &i) in &index {
            probs[i] = coredpp_prob(&model, y).unwrap();
        }
        let mut counts = vec![0u64; index.len()];
        let mut rng = stream(seed, 1);
        for _ in 0..draws {
            counts[index[&coredpp_sample(&model, &mut rng).sorted_items()]] += 1;
        }
        // off-support subsets are never drawn
        assert!(counts.iter().zip(&probs).all(|(&c, &p)| p > 0.0 || c == 0));
        if chi_square_p(&counts, &probs) >= 0.01 {
            passes += 1;
        }
    }
    assert!(passes >= 4, "{passes}/5");
}

#[test]
fn exchange_chain_occupation_matches_kdpp() {
    let (n, k, steps) = (6, 2, 1_000_000);
    let l = random_kernel(n, 1, &mut stream(3, 0));
    let target = build_kdpp(l.clone(), k).unwrap();
    let index = subset_index(n, k);
    let mut rng = stream(3, 1);
    let mut state = ChainState::random(&l, k, &mut rng).unwrap();
    let mut counts = vec![0u64; index.len()];
    for _ in 0..steps {
        mcmc_kdpp_step(&l, &mut state, &mut rng);
        counts[index[&state.sorted()]] += 1;
    }
    let l1: f64 = index
        .iter()
        .map(|(y, &i)| (counts[i] as f64 / steps as f64 - target.prob(y).unwrap()).abs())
        .sum();
    assert!(l1 <= 0.02, "L1 {l1}");
}

#[test]
fn identity_kernel_chain_is_uniform_walk() {
    let l = coredpp::KernelMatrix::new(nalgebra::DMatrix::identity(5, 5)).unwrap();
    let mut state = ChainState::new(&l, vec![0, 1]).unwrap();
    let mut rng = stream(0, 0);
    let index = subset_index(5, 2);
    let mut counts = vec![0u64; index.len()];
    for _ in 0..200_000 {
        assert!(mcmc_kdpp_step(&l, &mut state, &mut rng));
        counts[index[&state.sorted()]] += 1;
    }
    let p = chi_square_p(&counts, &[0.1; 10]);
    assert!(p > 1e-4, "p = {p}");
}

#[test]
fn psrf_self_consistency() {
    let (n, k, steps) = (20, 3, 100_000);
    let l = random_kernel(n, 1, &mut stream(5, 0));
    let traces: Vec<Vec<f64>> = (0..4)
        .map(|c| {
            let mut rng = stream(5, 10 + c);
            let mut state = ChainState::random(&l, k, &mut rng).unwrap();
            (0..steps)
                .map(|_| {
                    mcmc_kdpp_step(&l, &mut state, &mut rng);
                    state.log_det()
                })
                .collect()
        })
        .collect();
    let r = psrf(&traces).unwrap();
    assert!(r <= 1.1, "{r}");
    assert_eq!(psrf(&[vec![1.5; 50], vec![1.5; 50]]).unwrap(), 1.0);
    assert!(psrf(&[vec![1.0; 50], vec![3.0; 50]]).unwrap() > 2.0);

    let run = mcmc_sample_until_converged(&l, k, 4, 1.1, 100_000, &mut stream(5, 1)).unwrap();
    assert!(run.converged);
}

#[test]
fn empirical_tv_is_unbiased() {
    let inst = instance(8, 9, 3, 2);
    let model = CoreModel::new(&inst.kernel, inst.partition, inst.coreset, 2).unwrap();
    let target = build_kdpp(inst.kernel.clone(), 2).unwrap();
    let exact = tv_exact(&target, &model, 1_000_000).unwrap();
    let reps = 50;
    let ests: Vec<_> = (0..reps)
        .map(|r| tv_empirical(&target, &model, 2_000, &mut stream(8, r)).unwrap())
        .collect();
    let mean = ests.iter().map(|e| e.value).sum::<f64>() / reps as f64;
    let pooled = (ests.iter().map(|e| e.std_error.powi(2)).sum::<f64>()).sqrt() / reps as f64;
    assert!((mean - exact).abs() <= 3.0 * pooled, "mean {mean} exact {exact} se {pooled}");
}
