use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::psrf;
use crate::linalg::{log_det_psd, Kernel};
use crate::rng::{stream, Stream};
use crate::{Error, Result};

/// Steps between full recomputations of the cached log-determinant.
pub const REFRESH_EVERY: u64 = 1000;

/// One exchange chain: the current k-subset, log det(L_Y) and the inverse
/// of L_Y.
#[derive(Debug, Clone)]
pub struct ChainState {
    current: Vec<usize>,
    log_det: f64,
    step_count: u64,
    inverse: DMatrix<f64>,
}

impl ChainState {
    pub fn new<K: Kernel + ?Sized>(kernel: &K, initial: Vec<usize>) -> Result<Self> {
        crate::linalg::check_subset(kernel.size(), &initial)?;
        if initial.is_empty() || initial.len() >= kernel.size() {
            return Err(Error::KOutOfRange {
                k: initial.len(),
                n: kernel.size(),
            });
        }
        let sub = kernel.submatrix(&initial);
        let log_det = log_det_psd(&sub);
        let inverse = match (log_det.is_finite(), sub.try_inverse()) {
            (true, Some(inv)) => inv,
            _ => return Err(Error::DegenerateModel(log_det.exp())),
        };
        Ok(ChainState {
            current: initial,
            log_det,
            step_count: 0,
            inverse,
        })
    }

    /// A uniformly random starting subset with det(L_Y) > 0.
    pub fn random<K: Kernel + ?Sized, R: Rng + ?Sized>(
        kernel: &K,
        k: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let n = kernel.size();
        if k == 0 || k >= n {
            return Err(Error::KOutOfRange { k, n });
        }
        let mut last = Error::DegenerateModel(0.0);
        for _ in 0..100 {
            match ChainState::new(kernel, index::sample(rng, n, k).into_vec()) {
                Ok(s) => return Ok(s),
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    /// Items of the current subset in chain order (not sorted).
    pub fn current(&self) -> &[usize] {
        &self.current
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.current.clone();
        v.sort_unstable();
        v
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    fn refresh<K: Kernel + ?Sized>(&mut self, kernel: &K) {
        let sub = kernel.submatrix(&self.current);
        self.log_det = log_det_psd(&sub);
        if let Some(inv) = sub.try_inverse() {
            self.inverse = inv;
        }
    }
}

/// det(L_{Y∖u∪v}) / det(L_Y) for the item at position `pos`, replaced by
/// `v`: (A⁻¹)_pp · (L_vv − b'ᵀ L_{Y∖u}⁻¹ b'), the inverse of L_{Y∖u} taken
/// from A⁻¹ by one rank-one downdate.
fn det_ratio<K: Kernel + ?Sized>(kernel: &K, state: &ChainState, pos: usize, v: usize) -> f64 {
    let inv = &state.inverse;
    let k = state.current.len();
    let b: Vec<f64> = state
        .current
        .iter()
        .enumerate()
        .map(|(i, &y)| if i == pos { 0.0 } else { kernel.entry(y, v) })
        .collect();
    let mut quad = 0.0;
    let mut cross = 0.0;
    for i in 0..k {
        let row: f64 = (0..k).map(|j| inv[(i, j)] * b[j]).sum();
        quad += b[i] * row;
        if i == pos {
            cross = row;
        }
    }
    let app = inv[(pos, pos)];
    let conditioned = kernel.diag(v) - quad + cross * cross / app;
    (app * conditioned).max(0.0)
}

/// min(1, det(L_{Y∖u∪v}) / det(L_Y)) where u = current()[pos].
pub fn acceptance_prob<K: Kernel + ?Sized>(
    kernel: &K,
    state: &ChainState,
    pos: usize,
    v: usize,
) -> f64 {
    det_ratio(kernel, state, pos, v).min(1.0)
}

/// One Metropolis exchange step: a uniform u ∈ Y and v ∉ Y, accepted with
/// probability min(1, det ratio). Returns whether the move was accepted.
pub fn mcmc_kdpp_step<K: Kernel + ?Sized, R: Rng + ?Sized>(
    kernel: &K,
    state: &mut ChainState,
    rng: &mut R,
) -> bool {
    let n = kernel.size();
    let k = state.current.len();
    let pos = rng.random_range(0..k);
    let mut v = rng.random_range(0..n - k);
    let mut sorted = state.current.clone();
    sorted.sort_unstable();
    for &y in &sorted {
        if y <= v {
            v += 1;
        }
    }
    let ratio = det_ratio(kernel, state, pos, v);
    let accept = ratio >= 1.0 || rng.random::<f64>() < ratio;
    state.step_count += 1;
    if accept {
        state.current[pos] = v;
        state.log_det += ratio.ln();
        let sub = kernel.submatrix(&state.current);
        match sub.try_inverse() {
            Some(inv) => state.inverse = inv,
            None => state.refresh(kernel),
        }
    }
    if state.step_count.is_multiple_of(REFRESH_EVERY) {
        state.refresh(kernel);
    }
    accept
}

/// Outcome of [`mcmc_sample_until_converged`].
#[derive(Debug, Clone)]
pub struct McmcRun {
    /// Final state of chain 0, sorted.
    pub sample: Vec<usize>,
    /// Steps taken by each chain.
    pub iterations: u64,
    pub converged: bool,
    pub psrf: f64,
    /// Wall time spent computing PSRF.
    pub diagnostic_time: Duration,
    pub total_time: Duration,
}

/// Run `n_chains` independent chains (one rng stream each, in parallel)
/// until the PSRF of their log det(L_Y) traces drops to `threshold` or
/// each chain has taken `cap` steps.
pub fn mcmc_sample_until_converged<K: Kernel + ?Sized, R: Rng + ?Sized>(
    kernel: &K,
    k: usize,
    n_chains: usize,
    threshold: f64,
    cap: u64,
    rng: &mut R,
) -> Result<McmcRun> {
    if n_chains < 2 {
        return Err(Error::InsufficientChains {
            chains: n_chains,
            len: 0,
        });
    }
    let start = Instant::now();
    let seed: u64 = rng.random();
    let mut chains: Vec<(ChainState, Stream, Vec<f64>)> = (0..n_chains)
        .map(|j| {
            let mut s = stream(seed, j as u64);
            let state = ChainState::random(kernel, k, &mut s)?;
            Ok((state, s, Vec::new()))
        })
        .collect::<Result<_>>()?;

    let mut diagnostic_time = Duration::ZERO;
    let mut steps = 0u64;
    let mut value = f64::INFINITY;
    let mut converged = false;
    while steps < cap {
        let block = (steps / 10).max(20).min(cap - steps);
        chains.par_iter_mut().for_each(|(state, s, trace)| {
            for _ in 0..block {
                mcmc_kdpp_step(kernel, state, s);
                trace.push(state.log_det());
            }
        });
        steps += block;
        let t = Instant::now();
        let traces: Vec<Vec<f64>> = chains.iter().map(|c| c.2.clone()).collect();
        value = psrf(&traces)?;
        diagnostic_time += t.elapsed();
        if value <= threshold {
            converged = true;
            break;
        }
    }
    Ok(McmcRun {
        sample: chains[0].0.sorted(),
        iterations: steps,
        converged,
        psrf: value,
        diagnostic_time,
        total_time: start.elapsed(),
    })
}
