//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported but only fail the process when
//! `ACCEPTANCE_STRICT=1` is set. `ACCEPTANCE_FAST=1` stops after criterion 6
//! (criteria 7 to 9 take several minutes).

mod common;

use std::collections::HashMap;
use std::time::Instant;

use coredpp::baselines::{mcmc_kdpp_step, psrf, ChainState};
use coredpp::cli::{median, run_bench, run_sweep, BenchConfig, BenchRow, Method, SweepConfig};
use coredpp::coreset::rescaled_core_kernel;
use coredpp::diagnostics::{
    distortion_bound, distortion_exact, ratio_envelope_check, nonsingularity_prob, tv_bound, tv_exact, DistortionBound,
    NsMode,
};
use coredpp::linalg::{elementary_symmetric, principal_minor_det};
use coredpp::rng::stream;
use coredpp::subsets::{for_each_k_subset, for_each_singular};
use coredpp::{build_kdpp, core_replace, coredpp_sample, CoreModel};
use common::{chi_square_p, clustered_instance, instance, random_kernel};
use rand::Rng;

const BUDGET: u128 = 50_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Two-stage law by enumeration against det(L_{C(Y)}) normalized over the
/// k-singular sets.
fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let n = 6 + (seed as usize % 7);
        let inst = instance(1000 + seed, n, 4, 2);
        let model = CoreModel::new(&inst.kernel, inst.partition.clone(), inst.coreset.clone(), 2).unwrap();
        let groups: Vec<&[usize]> = inst.partition.all_members().iter().map(Vec::as_slice).collect();
        let mut z = 0.0;
        for_each_singular(&groups, 2, |y, _| {
            z += principal_minor_det(&inst.kernel, &core_replace(&inst.partition, &inst.coreset, y)).unwrap();
        });
        for_each_k_subset(n, 2, |y| {
            let p = &inst.partition;
            let (law, reference) = if p.is_singular(y) {
                let mut parts: Vec<usize> = y.iter().map(|&i| p.part_of(i)).collect();
                let uniform: f64 = parts.iter().map(|&c| 1.0 / p.members(c).len() as f64).product();
                parts.sort_unstable();
                let law = model.core_dpp().prob(&parts).unwrap() * uniform;
                let reference = principal_minor_det(&inst.kernel, &core_replace(p, &inst.coreset, y)).unwrap() / z;
                (law, reference)
            } else {
                (0.0, 0.0)
            };
            if law != reference {
                worst = worst.max((law - reference).abs() / reference.abs().max(law.abs()));
            }
        });
    }
    outcome(worst <= 1e-8, format!("20 instances, max relative error {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut r = stream(2, 0);
    for seed in 0..50u64 {
        let m = r.random_range(1..=4usize);
        let n = r.random_range(m.max(2)..=12);
        let k = r.random_range(1..=3usize.min(m));
        let inst = instance(2000 + seed, n, m, k);
        let groups: Vec<&[usize]> = inst.partition.all_members().iter().map(Vec::as_slice).collect();
        let mut s = 0.0;
        for_each_singular(&groups, k, |y, _| {
            s += principal_minor_det(&inst.kernel, &core_replace(&inst.partition, &inst.coreset, y)).unwrap();
        });
        let tilde = rescaled_core_kernel(&inst.kernel, &inst.partition, &inst.coreset).unwrap();
        let ek = elementary_symmetric(tilde.spectrum().eigenvalues(), k).unwrap();
        worst = worst.max((s - ek).abs() / s.abs().max(ek.abs()));
    }
    outcome(worst <= 1e-8, format!("50 instances, max relative error {worst:.2e}"))
}

struct SweepStats {
    thm1_violations: usize,
    thm1_min_slack: f64,
    envelope_violations: usize,
    diameter_checked: usize,
    diameter_violations: usize,
    instances: usize,
}

/// The shared desk-scale sweep behind criteria 3 to 5.
fn error_sweep() -> SweepStats {
    let mut st = SweepStats {
        thm1_violations: 0,
        thm1_min_slack: f64::INFINITY,
        envelope_violations: 0,
        diameter_checked: 0,
        diameter_violations: 0,
        instances: 0,
    };
    let mut r = stream(3, 0);
    for seed in 0..200u64 {
        let m = r.random_range(1..=5usize);
        let n = r.random_range(m.max(3)..=14);
        let k = r.random_range(1..=3usize.min(m));
        // odd seeds: tight clusters, so the diameter bound applies
        let inst = if seed % 2 == 0 {
            instance(3000 + seed, n, m, k)
        } else {
            clustered_instance(3000 + seed, n, m, k, 0.02)
        };
        let target = build_kdpp(inst.kernel.clone(), k).unwrap();
        let model = CoreModel::new(&inst.kernel, inst.partition.clone(), inst.coreset.clone(), k).unwrap();
        let tv = tv_exact(&target, &model, BUDGET).unwrap();
        let p_ns = nonsingularity_prob(&target, &inst.partition, NsMode::Exact { budget: BUDGET }, &mut stream(0, 0))
            .unwrap()
            .value;
        let eps = distortion_exact(&inst.kernel, &inst.partition, k, BUDGET).unwrap();
        let bound = tv_bound(target.log_normalizer(), model.log_z_core(), k, eps, p_ns);
        st.thm1_min_slack = st.thm1_min_slack.min(bound - tv);
        if tv > bound {
            st.thm1_violations += 1;
        }
        if !ratio_envelope_check(&inst.kernel, &inst.partition, &inst.coreset, k, eps, BUDGET).unwrap().pass {
            st.envelope_violations += 1;
        }
        if let DistortionBound::Bound(b) = distortion_bound(&inst.kernel, &inst.partition, k, BUDGET).unwrap() {
            st.diameter_checked += 1;
            if eps > b {
                st.diameter_violations += 1;
            }
        }
        st.instances += 1;
    }
    st
}

/// Pass count of chi-square tests over 20 seeds for a sampler on n = 6.
fn chi_square_sweep(coreset: bool) -> usize {
    let (n, k, draws) = (6, 2, 200_000);
    let mut index = HashMap::new();
    for_each_k_subset(n, k, |s| {
        let i = index.len();
        index.insert(s.to_vec(), i);
    });
    (0..20u64)
        .filter(|&seed| {
            let mut rng = stream(6000 + seed, 1);
            let mut counts = vec![0u64; index.len()];
            let mut probs = vec![0.0; index.len()];
            if coreset {
                let inst = instance(6000 + seed, n, 3, k);
                let model = CoreModel::new(&inst.kernel, inst.partition, inst.coreset, k).unwrap();
                for (y, &i) in &index {
                    probs[i] = coredpp::coredpp_prob(&model, y).unwrap();
                }
                for _ in 0..draws {
                    counts[index[&coredpp_sample(&model, &mut rng).sorted_items()]] += 1;
                }
            } else {
                let model = build_kdpp(random_kernel(n, 1, &mut stream(6000 + seed, 0)), k).unwrap();
                for (y, &i) in &index {
                    probs[i] = model.prob(y).unwrap();
                }
                for _ in 0..draws {
                    counts[index[&model.sample(&mut rng)]] += 1;
                }
            }
            chi_square_p(&counts, &probs) >= 0.01
        })
        .count()
}

fn criterion_6() -> Outcome {
    let exact = chi_square_sweep(false);
    let core = chi_square_sweep(true);
    outcome(
        exact >= 19 && core >= 19,
        format!("exact sampler {exact}/20 seeds, coreset sampler {core}/20 seeds"),
    )
}

fn medians_by(rows: &[coredpp::cli::SweepRow]) -> HashMap<(usize, u64, &'static str), f64> {
    let mut groups: HashMap<(usize, u64, &'static str), Vec<f64>> = HashMap::new();
    for r in rows {
        groups
            .entry((r.n_clusters, r.mean_norm.to_bits(), r.method))
            .or_default()
            .push(r.tv);
    }
    groups.into_iter().map(|(k, mut v)| (k, median(&mut v))).collect()
}

fn criteria_7_8() -> (Outcome, Outcome, Outcome) {
    let cfg = SweepConfig {
        passes: 20,
        methods: vec![Method::Coredpp, Method::CoredppExact, Method::Kpp],
        ..SweepConfig::default()
    };
    let rows = run_sweep(&cfg).unwrap();
    let med = medians_by(&rows);

    let mut cells_ok = 0;
    let mut cells = 0;
    let mut worst_cell = String::new();
    let mut worst_gap = f64::NEG_INFINITY;
    for &nc in &cfg.n_clusters {
        for &mn in &cfg.mean_norms {
            let c = med[&(nc, mn.to_bits(), "coredpp")];
            let b = med[&(nc, mn.to_bits(), "kpp")];
            cells += 1;
            if c < b {
                cells_ok += 1;
            }
            if c - b > worst_gap {
                worst_gap = c - b;
                worst_cell = format!("nClust={nc} norm={mn}: {c:.4} vs {b:.4}");
            }
        }
    }
    let a = outcome(
        cells_ok == cells,
        format!("median TV(CoreDpp) < median TV(K++) in {cells_ok}/{cells} cells; closest {worst_cell}"),
    );

    let lo = cfg.mean_norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cfg.mean_norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut trend_ok = true;
    let mut detail = Vec::new();
    for &nc in &cfg.n_clusters {
        let ratio = med[&(nc, hi.to_bits(), "coredpp")] / med[&(nc, lo.to_bits(), "coredpp")];
        trend_ok &= ratio < 0.6;
        detail.push(format!("nClust={nc}: TV(norm {hi})/TV(norm {lo}) = {ratio:.3}"));
    }
    let b = outcome(trend_ok, format!("{} (need < 0.6)", detail.join(", ")));

    let mut tv: HashMap<(usize, u64, u64, &str), f64> = HashMap::new();
    for r in &rows {
        tv.insert((r.n_clusters, r.mean_norm.to_bits(), r.seed, r.method), r.tv);
    }
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for r in rows.iter().filter(|r| r.method == "coredpp") {
        let exact = tv[&(r.n_clusters, r.mean_norm.to_bits(), r.seed, "coredpp-exact")];
        worst = worst.max(r.tv / exact);
        count += 1;
    }
    let c = outcome(
        worst <= 1.5,
        format!("max TV(accelerated)/TV(exact objective) = {worst:.3} over {count} (cell, seed) pairs"),
    );
    (a, b, c)
}

fn metric(rows: &[BenchRow], n: usize, method: &str, name: &str) -> f64 {
    rows.iter()
        .find(|r| r.n == n && r.method == method && r.metric == name)
        .map(|r| r.value)
        .unwrap_or(f64::NAN)
}

fn criterion_9() -> Outcome {
    let cfg = BenchConfig {
        sizes: vec![200, 2000, 4000, 8000, 20000],
        mcmc: false,
        construct_reps: 3,
        ..BenchConfig::default()
    };
    let rows = run_bench(&cfg).unwrap();
    let flat = metric(&rows, 20000, "coredpp", "sample_seconds") / metric(&rows, 2000, "coredpp", "sample_seconds");
    let exact = metric(&rows, 2000, "exact", "sample_seconds") / metric(&rows, 200, "exact", "sample_seconds");
    let c1 = metric(&rows, 4000, "coredpp", "construct_seconds") / metric(&rows, 2000, "coredpp", "construct_seconds");
    let c2 = metric(&rows, 8000, "coredpp", "construct_seconds") / metric(&rows, 4000, "coredpp", "construct_seconds");
    let in_range = |x: f64| (1.5..=3.0).contains(&x);
    outcome(
        flat < 1.5 && exact > 3.0 && in_range(c1) && in_range(c2),
        format!(
            "coredpp sample 20000/2000 = {flat:.2}, exact sample 2000/200 = {exact:.2}, \
             construct 4000/2000 = {c1:.2}, 8000/4000 = {c2:.2}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let (n, k, steps) = (8, 3, 1_000_000);
    let l = random_kernel(n, 1, &mut stream(10, 0));
    let target = build_kdpp(l.clone(), k).unwrap();
    let mut index = HashMap::new();
    for_each_k_subset(n, k, |s| {
        let i = index.len();
        index.insert(s.to_vec(), i);
    });
    let mut rng = stream(10, 1);
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

    let l20 = random_kernel(20, 1, &mut stream(10, 2));
    let traces: Vec<Vec<f64>> = (0..4)
        .map(|c| {
            let mut rng = stream(10, 20 + c);
            let mut s = ChainState::random(&l20, 3, &mut rng).unwrap();
            (0..100_000)
                .map(|_| {
                    mcmc_kdpp_step(&l20, &mut s, &mut rng);
                    s.log_det()
                })
                .collect()
        })
        .collect();
    let mixed = psrf(&traces).unwrap();
    let constant = psrf(&[vec![0.5; 100], vec![0.5; 100]]).unwrap();
    let stuck = psrf(&[vec![0.0; 100], vec![1.0; 100]]).unwrap();
    outcome(
        l1 <= 0.02 && mixed <= 1.1 && constant == 1.0 && stuck > 2.0,
        format!("L1 = {l1:.4} (N=8, k=3, 1e6 steps); PSRF mixed {mixed:.4}, constant {constant}, stuck {stuck}"),
    )
}

fn report(id: &str, start: Instant, o: &Outcome, failures: &mut Vec<String>) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>3}: {verdict}  {}  [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
    if !o.pass {
        failures.push(id.to_string());
    }
}

fn main() {
    let mut failures = Vec::new();

    let t = Instant::now();
    report("1", t, &criterion_1(), &mut failures);
    let t = Instant::now();
    report("2", t, &criterion_2(), &mut failures);

    let t = Instant::now();
    let st = error_sweep();
    report(
        "3",
        t,
        &outcome(
            st.thm1_violations == 0,
            format!(
                "{} violations in {} instances, min slack {:.3e}",
                st.thm1_violations, st.instances, st.thm1_min_slack
            ),
        ),
        &mut failures,
    );
    report(
        "4",
        t,
        &outcome(
            st.envelope_violations == 0,
            format!("{} violations in {} instances", st.envelope_violations, st.instances),
        ),
        &mut failures,
    );
    report(
        "5",
        t,
        &outcome(
            st.diameter_violations == 0 && st.diameter_checked > 0,
            format!(
                "{} violations in {} instances where d_c > rho_c for all parts",
                st.diameter_violations, st.diameter_checked
            ),
        ),
        &mut failures,
    );

    let t = Instant::now();
    report("6", t, &criterion_6(), &mut failures);

    if std::env::var("ACCEPTANCE_FAST").is_ok_and(|v| v == "1") {
        println!("acceptance: ACCEPTANCE_FAST=1, criteria 7 to 10 skipped");
        return;
    }

    let t = Instant::now();
    let (a, b, c) = criteria_7_8();
    report("7a", t, &a, &mut failures);
    report("7b", t, &b, &mut failures);
    report("8", t, &c, &mut failures);

    let t = Instant::now();
    report("9", t, &criterion_9(), &mut failures);
    let t = Instant::now();
    report("10", t, &criterion_10(), &mut failures);

    if failures.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {}", failures.join(", "));
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
