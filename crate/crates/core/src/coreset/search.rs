//! Local search over (Π, C).
//!
//! The accelerated objective scores a reassignment of `y` to part `c` on the
//! core-replaced kernel: every item of another part stands in as that part's
//! core, so the sum over (k−1)-singular complements collapses to
//! `L_yy · e_{k−1}` of an (M−1)×(M−1) rescaled, y-conditioned core kernel.
//! The exact objective enumerates the same sum on the full kernel and is
//! only feasible at desk scale.

use nalgebra::DMatrix;
use rand::Rng;

use super::model::rescale;
use super::{kmeanspp_init, random_init, CoreModel, Coreset, Init, Partition};
use crate::linalg::{
    det_psd, elementary_symmetric, kernel_distance, matrix_elementary_symmetric, schur_condition,
    Kernel, Spectrum, PIVOT_FLOOR,
};
use crate::subsets::{check_budget, for_each_singular, singular_count, DEFAULT_BUDGET};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// Core-replaced scores over the ν nearest parts, greedy Z_C core
    /// updates with lazy swaps.
    #[default]
    Accelerated,
    /// Scores summed over the full kernel for every part, cores chosen to
    /// minimize |Z − Z_C|.
    Exact,
}

#[derive(Debug, Clone)]
pub struct ConstructConfig {
    pub k: usize,
    pub parts: usize,
    pub nu: usize,
    pub max_passes: usize,
    pub init: Init,
    pub objective: Objective,
    /// Per-item enumeration budget for [`Objective::Exact`].
    pub budget: u128,
}

impl ConstructConfig {
    pub fn new(k: usize, parts: usize) -> Self {
        ConstructConfig {
            k,
            parts,
            nu: 3,
            max_passes: 1,
            init: Init::KMeansPP,
            objective: Objective::Accelerated,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn nu(mut self, nu: usize) -> Self {
        self.nu = nu;
        self
    }

    pub fn max_passes(mut self, passes: usize) -> Self {
        self.max_passes = passes;
        self
    }

    pub fn init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }
}

/// A core change made during search, with Z_C before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapEvent {
    pub pass: usize,
    pub part: usize,
    pub from: usize,
    pub to: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConstructTrace {
    pub passes: usize,
    pub moves: usize,
    pub swaps: Vec<SwapEvent>,
    /// A pass completed without any change.
    pub converged: bool,
}

struct Search<'a, K: ?Sized> {
    kernel: &'a K,
    k: usize,
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
    cores: Vec<usize>,
    /// L restricted to the current cores.
    gram: DMatrix<f64>,
}

impl<'a, K: Kernel + ?Sized> Search<'a, K> {
    fn new(kernel: &'a K, k: usize, partition: &Partition, coreset: &Coreset) -> Self {
        Search {
            kernel,
            k,
            assignment: partition.assignment().to_vec(),
            members: partition.all_members().to_vec(),
            cores: coreset.cores().to_vec(),
            gram: kernel.submatrix(coreset.cores()),
        }
    }

    fn parts(&self) -> usize {
        self.cores.len()
    }

    fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    fn core_row(&self, y: usize) -> Vec<f64> {
        self.cores.iter().map(|&c| self.kernel.entry(y, c)).collect()
    }

    fn core_distances(&self, y: usize, row: &[f64]) -> Vec<f64> {
        let lyy = self.kernel.diag(y);
        (0..self.parts())
            .map(|a| {
                if self.cores[a] == y {
                    0.0
                } else {
                    (lyy + self.gram[(a, a)] - 2.0 * row[a]).max(0.0).sqrt()
                }
            })
            .collect()
    }

    /// L_yy · e_{k−1} of the y-conditioned, rescaled kernel over the cores of
    /// every part except `c`, with part sizes taken as if y lived in `c`.
    fn score(&self, y: usize, row: &[f64], c: usize) -> Result<f64> {
        let lyy = self.kernel.diag(y);
        if self.k == 1 {
            return Ok(lyy);
        }
        let others: Vec<usize> = (0..self.parts()).filter(|&a| a != c).collect();
        let m = others.len() + 1;
        let mut joint = DMatrix::zeros(m, m);
        joint[(0, 0)] = lyy;
        for (a, &pa) in others.iter().enumerate() {
            joint[(0, a + 1)] = row[pa];
            joint[(a + 1, 0)] = row[pa];
            for (b, &pb) in others.iter().enumerate() {
                joint[(a + 1, b + 1)] = self.gram[(pa, pb)];
            }
        }
        let conditioned = schur_condition(&joint, 0)?;
        let current = self.assignment[y];
        let weights: Vec<usize> = others
            .iter()
            .map(|&a| self.members[a].len() - usize::from(a == current))
            .collect();
        let ek = matrix_elementary_symmetric(&rescale(&conditioned, &weights), self.k - 1)?;
        Ok(lyy * ek)
    }

    fn objective_of(&self, gram: &DMatrix<f64>) -> f64 {
        matrix_elementary_symmetric(&rescale(gram, &self.sizes()), self.k)
            .expect("k <= M checked at entry")
    }

    fn gram_with(&self, g: usize, j: usize) -> DMatrix<f64> {
        let mut gram = self.gram.clone();
        if self.cores[g] == j {
            return gram;
        }
        for b in 0..self.parts() {
            let v = if b == g {
                self.kernel.diag(j)
            } else {
                self.kernel.entry(j, self.cores[b])
            };
            gram[(g, b)] = v;
            gram[(b, g)] = v;
        }
        gram
    }

    /// Z_C with the core of part g replaced by j.
    fn swap_objective(&self, g: usize, j: usize) -> f64 {
        self.objective_of(&self.gram_with(g, j))
    }

    fn current_objective(&self) -> f64 {
        self.objective_of(&self.gram)
    }

    fn set_core(&mut self, g: usize, j: usize) {
        self.gram = self.gram_with(g, j);
        self.cores[g] = j;
    }

    fn move_item(&mut self, y: usize, to: usize) {
        let from = self.assignment[y];
        let pos = self.members[from].binary_search(&y).expect("member lists in sync");
        self.members[from].remove(pos);
        let ins = self.members[to].binary_search(&y).unwrap_err();
        self.members[to].insert(ins, y);
        self.assignment[y] = to;
    }

    fn into_parts(self) -> (Partition, Coreset) {
        let partition = Partition::from_members_unchecked(self.assignment, self.members);
        let coreset = Coreset::new(self.cores, &partition).expect("cores stay in their parts");
        (partition, coreset)
    }
}

/// The ν parts whose cores are nearest `y` (ties to the lower part id), plus
/// `current` appended when it is not among them.
fn nearest_from_distances(dists: &[f64], nu: usize, current: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dists.len()).collect();
    order.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)));
    order.truncate(nu.min(dists.len()));
    if !order.contains(&current) {
        order.push(current);
    }
    order
}

/// Argmax over (id, value) pairs in ascending id order; the incumbent wins
/// ties, otherwise the lowest id does.
fn argmax_prefer(candidates: &[(usize, f64)], incumbent: usize) -> usize {
    let mut best = candidates
        .iter()
        .find(|(id, _)| *id == incumbent)
        .copied()
        .unwrap_or((usize::MAX, f64::NEG_INFINITY));
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|(id, _)| *id);
    for &(id, v) in &sorted {
        if v > best.1 {
            best = (id, v);
        }
    }
    best.0
}

fn check_config(n: usize, cfg: &ConstructConfig) -> Result<()> {
    if cfg.k == 0 || cfg.k > cfg.parts {
        return Err(Error::KOutOfRange {
            k: cfg.k,
            n: cfg.parts,
        });
    }
    if cfg.parts > n {
        return Err(Error::TooManyParts {
            parts: cfg.parts,
            n,
        });
    }
    if cfg.nu == 0 {
        return Err(Error::InvalidInput("nu must be >= 1".into()));
    }
    Ok(())
}

/// Score for moving `y` into part `c` (see module docs); O(M³).
pub fn assignment_score<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    coreset: &Coreset,
    y: usize,
    c: usize,
    k: usize,
) -> Result<f64> {
    let n = kernel.size();
    if y >= n {
        return Err(Error::IndexOutOfRange { index: y, n });
    }
    if c >= partition.parts() {
        return Err(Error::InvalidInput(format!("part {c} out of range")));
    }
    if k == 0 || k > partition.parts() {
        return Err(Error::KOutOfRange {
            k,
            n: partition.parts(),
        });
    }
    let search = Search::new(kernel, k, partition, coreset);
    let row = search.core_row(y);
    search.score(y, &row, c)
}

/// e_k of the rescaled core kernel after making `j` the core of part `g`.
pub fn core_swap_objective<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    coreset: &Coreset,
    g: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    if g >= partition.parts() || j >= partition.n() || partition.part_of(j) != g {
        return Err(Error::InvalidInput(format!("item {j} is not a member of part {g}")));
    }
    if k > partition.parts() {
        return Err(Error::KOutOfRange {
            k,
            n: partition.parts(),
        });
    }
    Ok(Search::new(kernel, k, partition, coreset).swap_objective(g, j))
}

/// Parts whose cores are nearest `y` under the kernel distance.
pub fn nearest_cores<K: Kernel + ?Sized>(
    kernel: &K,
    y: usize,
    partition: &Partition,
    coreset: &Coreset,
    nu: usize,
) -> Result<Vec<usize>> {
    if nu == 0 || nu > coreset.len() {
        return Err(Error::InvalidInput(format!(
            "nu = {nu} must lie in 1..={}",
            coreset.len()
        )));
    }
    let dists = coreset
        .cores()
        .iter()
        .map(|&c| kernel_distance(kernel, y, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(nearest_from_distances(&dists, nu, partition.part_of(y)))
}

/// Initialize (kmeans++ or random) and run the local search.
pub fn construct<K: Kernel + ?Sized, R: Rng + ?Sized>(
    kernel: &K,
    cfg: &ConstructConfig,
    rng: &mut R,
) -> Result<CoreModel> {
    check_config(kernel.size(), cfg)?;
    let (partition, coreset) = match cfg.init {
        Init::KMeansPP => kmeanspp_init(kernel, cfg.parts, rng)?,
        Init::Random => random_init(kernel.size(), cfg.parts, rng)?,
    };
    construct_from(kernel, cfg, &partition, &coreset).map(|(model, _)| model)
}

/// Run the local search from a given (Π, C).
pub fn construct_from<K: Kernel + ?Sized>(
    kernel: &K,
    cfg: &ConstructConfig,
    partition: &Partition,
    coreset: &Coreset,
) -> Result<(CoreModel, ConstructTrace)> {
    check_config(kernel.size(), cfg)?;
    if partition.parts() != cfg.parts {
        return Err(Error::InvalidPartition(format!(
            "initial partition has {} parts, config asks for {}",
            partition.parts(),
            cfg.parts
        )));
    }
    let mut search = Search::new(kernel, cfg.k, partition, coreset);
    let trace = match cfg.objective {
        Objective::Accelerated => run_accelerated(&mut search, cfg)?,
        Objective::Exact => run_exact(&mut search, cfg)?,
    };
    let (partition, coreset) = search.into_parts();
    let model = CoreModel::new(kernel, partition, coreset, cfg.k)?;
    Ok((model, trace))
}

fn run_accelerated<K: Kernel + ?Sized>(
    search: &mut Search<'_, K>,
    cfg: &ConstructConfig,
) -> Result<ConstructTrace> {
    let n = search.kernel.size();
    let nu = cfg.nu.min(search.parts());
    let mut trace = ConstructTrace::default();
    for pass in 0..cfg.max_passes {
        let mut changed = false;
        for y in 0..n {
            let current = search.assignment[y];
            if search.cores[current] == y {
                continue;
            }
            let row = search.core_row(y);
            let candidates = nearest_from_distances(&search.core_distances(y, &row), nu, current);
            let scored = candidates
                .iter()
                .map(|&g| search.score(y, &row, g).map(|s| (g, s)))
                .collect::<Result<Vec<_>>>()?;
            let target = argmax_prefer(&scored, current);
            if target == current || search.members[current].len() < 2 {
                continue;
            }
            search.move_item(y, target);
            trace.moves += 1;
            changed = true;

            // lazy core update for the receiving part
            let before = search.current_objective();
            let after = search.swap_objective(target, y);
            if after > before {
                trace.swaps.push(SwapEvent {
                    pass,
                    part: target,
                    from: search.cores[target],
                    to: y,
                    before,
                    after,
                });
                search.set_core(target, y);
            }
        }

        for g in 0..search.parts() {
            let incumbent = search.cores[g];
            let scored: Vec<(usize, f64)> = search.members[g]
                .iter()
                .map(|&j| (j, search.swap_objective(g, j)))
                .collect();
            let best = argmax_prefer(&scored, incumbent);
            if best != incumbent {
                let before = scored.iter().find(|(j, _)| *j == incumbent).unwrap().1;
                let after = scored.iter().find(|(j, _)| *j == best).unwrap().1;
                trace.swaps.push(SwapEvent {
                    pass,
                    part: g,
                    from: incumbent,
                    to: best,
                    before,
                    after,
                });
                search.set_core(g, best);
                changed = true;
            }
        }

        trace.passes = pass + 1;
        if !changed {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

fn gather(matrix: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| matrix[(idx[a], idx[b])])
}

/// Σ over (k−1)-singular S w.r.t. Π∖Y_g of det(L_{S∪{y}}) for every part g,
/// with y removed from its current part.
fn exact_scores(
    dense: &DMatrix<f64>,
    search: &Search<'_, impl Kernel + ?Sized>,
    y: usize,
    budget: u128,
) -> Result<Vec<f64>> {
    let parts = search.parts();
    let lyy = dense[(y, y)];
    let conditioned = schur_condition(dense, y)?;
    let shift = |i: usize| if i > y { i - 1 } else { i };
    let groups: Vec<Vec<usize>> = search
        .members
        .iter()
        .map(|m| m.iter().filter(|&&i| i != y).map(|&i| shift(i)).collect())
        .collect();
    let group_refs: Vec<&[usize]> = groups.iter().map(Vec::as_slice).collect();
    check_budget(singular_count(&group_refs, search.k - 1), budget)?;

    let mut scores = vec![0.0; parts];
    for_each_singular(&group_refs, search.k - 1, |items, chosen| {
        let d = det_psd(&gather(&conditioned, items));
        for (g, s) in scores.iter_mut().enumerate() {
            if !chosen.contains(&g) {
                *s += d;
            }
        }
    });
    scores.iter_mut().for_each(|s| *s *= lyy);
    Ok(scores)
}

fn run_exact<K: Kernel + ?Sized>(
    search: &mut Search<'_, K>,
    cfg: &ConstructConfig,
) -> Result<ConstructTrace> {
    let dense = search.kernel.to_dense();
    if !(dense.diagonal().min() > PIVOT_FLOOR * dense.diagonal().max()) {
        return Err(Error::NotPsd("zero diagonal entry".into()));
    }
    let z = elementary_symmetric(&Spectrum::eigenvalues_of(&dense), cfg.k)?;
    let n = dense.nrows();
    let mut trace = ConstructTrace::default();
    for pass in 0..cfg.max_passes {
        let mut changed = false;
        for y in 0..n {
            let current = search.assignment[y];
            if search.cores[current] == y {
                continue;
            }
            let scores = exact_scores(&dense, search, y, cfg.budget)?;
            let scored: Vec<(usize, f64)> = scores.into_iter().enumerate().collect();
            let target = argmax_prefer(&scored, current);
            if target == current || search.members[current].len() < 2 {
                continue;
            }
            search.move_item(y, target);
            trace.moves += 1;
            changed = true;
        }

        for g in 0..search.parts() {
            let incumbent = search.cores[g];
            // maximize −|Z − Z_C|
            let scored: Vec<(usize, f64)> = search.members[g]
                .iter()
                .map(|&j| (j, -(z - search.swap_objective(g, j)).abs()))
                .collect();
            let best = argmax_prefer(&scored, incumbent);
            if best != incumbent {
                let before = search.current_objective();
                search.set_core(g, best);
                trace.swaps.push(SwapEvent {
                    pass,
                    part: g,
                    from: incumbent,
                    to: best,
                    before,
                    after: search.current_objective(),
                });
                changed = true;
            }
        }

        trace.passes = pass + 1;
        if !changed {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}
