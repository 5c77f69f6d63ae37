//! Error analysis of a coreset model against the exact k-DPP: total
//! variation (exact and estimated), nonsingularity probability, distortion
//! factor, part diameters and complement distances, and the bounds that tie
//! them together.

use nalgebra::{Cholesky, DVector};
use rand::seq::index;
use rand::Rng;
use serde::ser::{Serialize, Serializer};
use serde::Serialize as DeriveSerialize;

use crate::coreset::{CoreModel, Coreset, Partition};
use crate::dpp::KDppModel;
use crate::linalg::{kernel_distance, log_det_psd, Kernel, IDENTITY_RTOL, PIVOT_FLOOR};
use crate::sampler::{core_replace, coredpp_log_prob};
use crate::subsets::{binomial, check_budget, for_each_k_subset, for_each_singular, singular_count};
use crate::{Error, Result};

/// Exact k-DPP probabilities of every k-subset, in lexicographic order.
#[derive(Debug, Clone)]
pub struct EnumeratedLaw {
    pub n: usize,
    pub k: usize,
    pub probs: Vec<f64>,
}

impl EnumeratedLaw {
    pub fn of(target: &KDppModel, budget: u128) -> Result<Self> {
        let (n, k) = (target.n(), target.k());
        check_budget(binomial(n, k), budget)?;
        let mut probs = Vec::with_capacity(binomial(n, k) as usize);
        let log_z = target.log_normalizer();
        let kernel = target.kernel();
        for_each_k_subset(n, k, |y| {
            probs.push((log_det_psd(&kernel.submatrix(y)) - log_z).exp());
        });
        Ok(EnumeratedLaw { n, k, probs })
    }

    /// ½ Σ_Y |P_{C,k}(Y) − P_k(Y)|.
    pub fn tv_to(&self, model: &CoreModel) -> Result<f64> {
        check_compatible(self.n, self.k, model)?;
        let mut sum = 0.0;
        let mut idx = 0;
        let mut err = None;
        for_each_k_subset(self.n, self.k, |y| {
            match coredpp_log_prob(model, y) {
                Ok(lp) => sum += (lp.exp() - self.probs[idx]).abs(),
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
            idx += 1;
        });
        match err {
            Some(e) => Err(e),
            None => Ok(0.5 * sum),
        }
    }
}

fn check_compatible(n: usize, k: usize, model: &CoreModel) -> Result<()> {
    if model.n() != n || model.k() != k {
        return Err(Error::InvalidInput(format!(
            "model is over n={} k={}, target over n={n} k={k}",
            model.n(),
            model.k()
        )));
    }
    Ok(())
}

/// Exact total variation distance by enumeration of all k-subsets.
pub fn tv_exact(target: &KDppModel, model: &CoreModel, budget: u128) -> Result<f64> {
    EnumeratedLaw::of(target, budget)?.tv_to(model)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, DeriveSerialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Unbiased TV estimate from uniformly drawn k-subsets:
/// ½·C(N,k)·mean |P_{C,k}(Y) − P_k(Y)|.
pub fn tv_empirical<R: Rng + ?Sized>(
    target: &KDppModel,
    model: &CoreModel,
    n_probes: usize,
    rng: &mut R,
) -> Result<Estimate> {
    check_compatible(target.n(), target.k(), model)?;
    if n_probes == 0 {
        return Err(Error::InvalidInput("n_probes must be >= 1".into()));
    }
    let (n, k) = (target.n(), target.k());
    let scale = 0.5 * binomial(n, k) as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_probes {
        let mut y = index::sample(rng, n, k).into_vec();
        y.sort_unstable();
        let gap = (coredpp_log_prob(model, &y)?.exp() - target.log_prob(&y)?.exp()).abs();
        sum += gap;
        sum_sq += gap * gap;
    }
    let m = n_probes as f64;
    let mean = sum / m;
    let var = if n_probes > 1 {
        ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        value: scale * mean,
        std_error: scale * (var / m).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NsMode {
    Exact { budget: u128 },
    MonteCarlo { draws: usize },
}

/// Σ over k-singular Y of det(L_Y), i.e. s_k^Π(L).
pub fn singular_mass<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    k: usize,
    budget: u128,
) -> Result<f64> {
    let groups: Vec<&[usize]> = partition.all_members().iter().map(Vec::as_slice).collect();
    check_budget(singular_count(&groups, k), budget)?;
    let mut total = 0.0;
    for_each_singular(&groups, k, |y, _| {
        total += log_det_psd(&kernel.submatrix(y)).exp();
    });
    Ok(total)
}

/// Probability that a draw from the k-DPP puts two items in one part.
/// The standard error is zero in exact mode.
pub fn nonsingularity_prob<R: Rng + ?Sized>(
    target: &KDppModel,
    partition: &Partition,
    mode: NsMode,
    rng: &mut R,
) -> Result<Estimate> {
    let k = target.k();
    if partition.parts() < k {
        return Ok(Estimate {
            value: 1.0,
            std_error: 0.0,
        });
    }
    match mode {
        NsMode::Exact { budget } => {
            let mass = singular_mass(target.kernel(), partition, k, budget)?;
            let p = 1.0 - (mass.ln() - target.log_normalizer()).exp();
            Ok(Estimate {
                value: p.clamp(0.0, 1.0),
                std_error: 0.0,
            })
        }
        NsMode::MonteCarlo { draws } => {
            if draws == 0 {
                return Err(Error::InvalidInput("draws must be >= 1".into()));
            }
            let hits = (0..draws)
                .filter(|_| !partition.is_singular(&target.sample(rng)))
                .count();
            let p = hits as f64 / draws as f64;
            Ok(Estimate {
                value: p,
                std_error: (p * (1.0 - p) / draws as f64).sqrt(),
            })
        }
    }
}

/// Conditional variances L_uu − L_{u,S} L_S⁻¹ L_{S,u} for all u in `part`,
/// given the complement S.
fn conditional_variances<K: Kernel + ?Sized>(
    kernel: &K,
    s: &[usize],
    part: &[usize],
) -> Option<Vec<f64>> {
    if s.is_empty() {
        return Some(part.iter().map(|&u| kernel.diag(u)).collect());
    }
    let chol = Cholesky::new(kernel.submatrix(s))?;
    Some(
        part.iter()
            .map(|&u| {
                let b = DVector::from_iterator(s.len(), s.iter().map(|&i| kernel.entry(i, u)));
                let x = chol.solve(&b);
                kernel.diag(u) - b.dot(&x)
            })
            .collect(),
    )
}

/// Visit every (part c, (k−1)-singular S w.r.t. Π∖Y_c) pair with the
/// conditional variances of the members of Y_c.
fn for_each_complement<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    parts: &[usize],
    k: usize,
    budget: u128,
    mut f: impl FnMut(usize, &[usize], Option<&[f64]>) -> Result<()>,
) -> Result<()> {
    if k == 0 {
        return Err(Error::KOutOfRange { k, n: partition.n() });
    }
    let all = partition.all_members();
    let mut total: u128 = 0;
    for &c in parts {
        let others: Vec<&[usize]> = (0..partition.parts())
            .filter(|&a| a != c)
            .map(|a| all[a].as_slice())
            .collect();
        total += singular_count(&others, k - 1) * all[c].len() as u128;
    }
    check_budget(total, budget)?;

    for &c in parts {
        let others: Vec<&[usize]> = (0..partition.parts())
            .filter(|&a| a != c)
            .map(|a| all[a].as_slice())
            .collect();
        let mut result = Ok(());
        for_each_singular(&others, k - 1, |s, _| {
            if result.is_err() {
                return;
            }
            let q = conditional_variances(kernel, s, &all[c]);
            result = f(c, s, q.as_deref());
        });
        result?;
    }
    Ok(())
}

/// ε: the largest ratio det(L_{S∪u}) / det(L_{S∪v}) − 1 over parts c,
/// u, v ∈ Y_c and (k−1)-singular S w.r.t. Π∖Y_c. Zero when no part has two
/// members.
pub fn distortion_exact<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    k: usize,
    budget: u128,
) -> Result<f64> {
    let floor = PIVOT_FLOOR * max_diag(kernel);
    let parts: Vec<usize> = (0..partition.parts())
        .filter(|&c| partition.members(c).len() >= 2)
        .collect();
    let mut worst: f64 = 1.0;
    for_each_complement(kernel, partition, &parts, k, budget, |_, _, q| {
        let q = q.ok_or(Error::DegenerateConditional(0.0))?;
        let (lo, hi) = q
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(lo > floor) {
            return Err(Error::DegenerateConditional(lo));
        }
        worst = worst.max(hi / lo);
        Ok(())
    })?;
    Ok(worst - 1.0)
}

fn max_diag<K: Kernel + ?Sized>(kernel: &K) -> f64 {
    (0..kernel.size()).map(|i| kernel.diag(i)).fold(0.0, f64::max)
}

/// ρ_c: the largest kernel distance between two members of part c.
pub fn part_diameter<K: Kernel + ?Sized>(kernel: &K, partition: &Partition, c: usize) -> Result<f64> {
    let members = partition.members(c);
    let mut rho: f64 = 0.0;
    for (a, &u) in members.iter().enumerate() {
        for &v in &members[a + 1..] {
            rho = rho.max(kernel_distance(kernel, u, v)?);
        }
    }
    Ok(rho)
}

/// d_c: the smallest conditioned norm √(L_uu − L_{u,S}L_S⁻¹L_{S,u}) over
/// u ∈ Y_c and (k−1)-singular S w.r.t. Π∖Y_c; +∞ when no such S exists.
pub fn min_complement_distance<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    c: usize,
    k: usize,
    budget: u128,
) -> Result<f64> {
    let mut d2 = f64::INFINITY;
    for_each_complement(kernel, partition, &[c], k, budget, |_, _, q| {
        // singular L_S: every conditioned norm is zero
        let lo = q.map_or(0.0, |q| q.iter().copied().fold(f64::INFINITY, f64::min));
        d2 = d2.min(lo.max(0.0));
        Ok(())
    })?;
    Ok(d2.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, DeriveSerialize)]
pub struct PartGeometry {
    pub rho: f64,
    #[serde(serialize_with = "serialize_float")]
    pub d: f64,
}

pub fn part_geometry<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    k: usize,
    budget: u128,
) -> Result<Vec<PartGeometry>> {
    (0..partition.parts())
        .map(|c| {
            Ok(PartGeometry {
                rho: part_diameter(kernel, partition, c)?,
                d: min_complement_distance(kernel, partition, c, k, budget)?,
            })
        })
        .collect()
}

/// Distortion bound from part diameters and complement distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistortionBound {
    Bound(f64),
    /// Some part has d_c ≤ ρ_c.
    NotApplicable,
}

impl DistortionBound {
    pub fn from_geometry(parts: &[PartGeometry]) -> Self {
        let mut bound: f64 = 0.0;
        for g in parts {
            if !(g.d > g.rho) {
                return DistortionBound::NotApplicable;
            }
            if g.d.is_finite() {
                bound = bound.max((2.0 * g.d - g.rho) * g.rho / (g.d - g.rho).powi(2));
            }
        }
        DistortionBound::Bound(bound)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            DistortionBound::Bound(v) => Some(*v),
            DistortionBound::NotApplicable => None,
        }
    }
}

/// max_c (2d_c − ρ_c)ρ_c / (d_c − ρ_c)² when d_c > ρ_c for every part.
pub fn distortion_bound<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    k: usize,
    budget: u128,
) -> Result<DistortionBound> {
    Ok(DistortionBound::from_geometry(&part_geometry(
        kernel, partition, k, budget,
    )?))
}

/// |1 − Z_C/Z| + kε + (1 − kε)·p_ns.
pub fn tv_bound(log_z: f64, log_z_core: f64, k: usize, epsilon: f64, p_ns: f64) -> f64 {
    let ratio = (log_z_core - log_z).exp();
    let ke = k as f64 * epsilon;
    (1.0 - ratio).abs() + ke + (1.0 - ke) * p_ns
}

/// Extremes of det(L_{C(Y)}) / det(L_Y) over k-singular Y.
#[derive(Debug, Clone, Copy, PartialEq, DeriveSerialize)]
pub struct EnvelopeReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub count: u128,
    pub pass: bool,
}

/// Check every k-singular determinant ratio against [(1+ε)^−k, (1+ε)^k]
/// (relative slack [`IDENTITY_RTOL`]).
pub fn ratio_envelope_check<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    coreset: &Coreset,
    k: usize,
    epsilon: f64,
    budget: u128,
) -> Result<EnvelopeReport> {
    let groups: Vec<&[usize]> = partition.all_members().iter().map(Vec::as_slice).collect();
    let count = singular_count(&groups, k);
    check_budget(count, budget)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut degenerate = None;
    for_each_singular(&groups, k, |y, _| {
        let replaced = core_replace(partition, coreset, y);
        let num = log_det_psd(&kernel.submatrix(&replaced));
        let den = log_det_psd(&kernel.submatrix(y));
        if !den.is_finite() {
            degenerate.get_or_insert(den);
            return;
        }
        let r = (num - den).exp();
        lo = lo.min(r);
        hi = hi.max(r);
    });
    if let Some(d) = degenerate {
        return Err(Error::DegenerateConditional(d.exp()));
    }
    let upper = (1.0 + epsilon).powi(k as i32);
    let lower = 1.0 / upper;
    let pass =
        count == 0 || (lo >= lower * (1.0 - IDENTITY_RTOL) && hi <= upper * (1.0 + IDENTITY_RTOL));
    Ok(EnvelopeReport {
        min_ratio: lo,
        max_ratio: hi,
        lower,
        upper,
        count,
        pass,
    })
}

/// A report field that may be skipped when its enumeration is over budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    NotComputed,
    NotApplicable,
}

impl Metric {
    pub fn value(&self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<Option<f64>> for Metric {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Metric::NotComputed, Metric::Value)
    }
}

fn serialize_float<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("NaN")
    } else if *v > 0.0 {
        s.serialize_str("Infinity")
    } else {
        s.serialize_str("-Infinity")
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => serialize_float(v, s),
            Metric::NotComputed => s.serialize_str("NotComputed"),
            Metric::NotApplicable => s.serialize_str("NotApplicable"),
        }
    }
}

/// Everything the error analysis reports for one model.
#[derive(Debug, Clone, DeriveSerialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub k: usize,
    pub parts: usize,
    pub tv_exact: Metric,
    pub tv_estimate: Metric,
    pub tv_estimate_std_error: Metric,
    pub p_ns: Metric,
    pub p_ns_std_error: Metric,
    pub p_ns_method: &'static str,
    pub epsilon: Metric,
    pub epsilon_bound: Metric,
    pub z: Metric,
    pub z_core: Metric,
    pub log_z: f64,
    pub log_z_core: f64,
    pub tv_bound: Metric,
    pub per_part: Vec<PartGeometry>,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Enumeration budget shared by every exact quantity.
    pub budget: u128,
    /// Uniform probes for the TV estimate (0 disables it).
    pub probes: usize,
    /// k-DPP draws for the Monte Carlo p_ns fallback.
    pub mc_draws: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            budget: crate::subsets::DEFAULT_BUDGET,
            probes: 10_000,
            mc_draws: 10_000,
        }
    }
}

fn over_budget<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::EnumerationTooLarge { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Full report; quantities whose enumeration exceeds the budget are
/// reported as NotComputed.
pub fn evaluate<R: Rng + ?Sized>(
    target: &KDppModel,
    model: &CoreModel,
    opts: &EvalOptions,
    rng: &mut R,
) -> Result<DiagnosticsReport> {
    check_compatible(target.n(), target.k(), model)?;
    let k = target.k();
    let kernel = target.kernel();
    let partition = model.partition();

    let tv_exact = over_budget(tv_exact(target, model, opts.budget))?;
    let tv_est = if opts.probes > 0 {
        Some(tv_empirical(target, model, opts.probes, rng)?)
    } else {
        None
    };

    let (p_ns, p_ns_method) =
        match over_budget(nonsingularity_prob(target, partition, NsMode::Exact { budget: opts.budget }, rng))? {
            Some(p) => (Some(p), "exact"),
            None if opts.mc_draws > 0 => (
                Some(nonsingularity_prob(
                    target,
                    partition,
                    NsMode::MonteCarlo { draws: opts.mc_draws },
                    rng,
                )?),
                "montecarlo",
            ),
            None => (None, "none"),
        };

    let epsilon = over_budget(distortion_exact(kernel, partition, k, opts.budget))?;
    let geometry = over_budget(part_geometry(kernel, partition, k, opts.budget))?;
    let per_part = match &geometry {
        Some(g) => g.clone(),
        None => (0..partition.parts())
            .map(|c| {
                Ok(PartGeometry {
                    rho: part_diameter(kernel, partition, c)?,
                    d: f64::NAN,
                })
            })
            .collect::<Result<_>>()?,
    };
    let epsilon_bound = match geometry.as_deref().map(DistortionBound::from_geometry) {
        Some(DistortionBound::Bound(b)) => Metric::Value(b),
        Some(DistortionBound::NotApplicable) => Metric::NotApplicable,
        None => Metric::NotComputed,
    };

    let (log_z, log_z_core) = (target.log_normalizer(), model.log_z_core());
    let bound = match (epsilon, p_ns) {
        (Some(e), Some(p)) => Some(tv_bound(log_z, log_z_core, k, e, p.value)),
        _ => None,
    };

    Ok(DiagnosticsReport {
        n: target.n(),
        k,
        parts: partition.parts(),
        tv_exact: tv_exact.into(),
        tv_estimate: tv_est.map(|e| e.value).into(),
        tv_estimate_std_error: tv_est.map(|e| e.std_error).into(),
        p_ns: p_ns.map(|p| p.value).into(),
        p_ns_std_error: p_ns.map(|p| p.std_error).into(),
        p_ns_method,
        epsilon: epsilon.into(),
        epsilon_bound,
        z: Metric::Value(log_z.exp()),
        z_core: Metric::Value(log_z_core.exp()),
        log_z,
        log_z_core,
        tv_bound: bound.into(),
        per_part,
    })
}
