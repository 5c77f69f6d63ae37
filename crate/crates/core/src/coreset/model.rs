use nalgebra::DMatrix;

use crate::dpp::KDppModel;
use crate::linalg::{Kernel, KernelMatrix, Spectrum};
use crate::{Error, Result};

/// Assignment of each ground-set item to one of M non-empty parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Partition {
    pub fn from_assignment(assignment: Vec<usize>, parts: usize) -> Result<Self> {
        let mut members = vec![Vec::new(); parts];
        for (i, &c) in assignment.iter().enumerate() {
            if c >= parts {
                return Err(Error::InvalidPartition(format!(
                    "item {i} assigned to part {c} >= {parts}"
                )));
            }
            members[c].push(i);
        }
        if let Some(c) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidPartition(format!("part {c} is empty")));
        }
        Ok(Partition {
            assignment,
            members,
        })
    }

    /// Every item its own part.
    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            members: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn parts(&self) -> usize {
        self.members.len()
    }

    pub fn part_of(&self, item: usize) -> usize {
        self.assignment[item]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of part `c`, ascending.
    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }

    pub fn all_members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// True when `subset` has at most one item in every part.
    pub fn is_singular(&self, subset: &[usize]) -> bool {
        let mut seen = vec![false; self.parts()];
        subset.iter().all(|&y| !std::mem::replace(&mut seen[self.assignment[y]], true))
    }

    pub(crate) fn from_members_unchecked(assignment: Vec<usize>, members: Vec<Vec<usize>>) -> Self {
        Partition {
            assignment,
            members,
        }
    }
}

/// One representative index per part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coreset {
    cores: Vec<usize>,
}

impl Coreset {
    pub fn new(cores: Vec<usize>, partition: &Partition) -> Result<Self> {
        if cores.len() != partition.parts() {
            return Err(Error::InvalidPartition(format!(
                "{} cores for {} parts",
                cores.len(),
                partition.parts()
            )));
        }
        for (c, &core) in cores.iter().enumerate() {
            if core >= partition.n() || partition.part_of(core) != c {
                return Err(Error::InvalidPartition(format!(
                    "core {core} is not a member of part {c}"
                )));
            }
        }
        Ok(Coreset { cores })
    }

    /// The first member of each part.
    pub fn first_members(partition: &Partition) -> Self {
        Coreset {
            cores: partition.all_members().iter().map(|m| m[0]).collect(),
        }
    }

    pub fn cores(&self) -> &[usize] {
        &self.cores
    }

    pub fn core(&self, part: usize) -> usize {
        self.cores[part]
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }
}

pub(crate) fn rescale(gram: &DMatrix<f64>, sizes: &[usize]) -> DMatrix<f64> {
    let m = gram.nrows();
    DMatrix::from_fn(m, m, |a, b| {
        (sizes[a] as f64 * sizes[b] as f64).sqrt() * gram[(a, b)]
    })
}

/// L̃[c][c'] = √(|Y_c|·|Y_c'|) · L[core_c][core_c'].
pub fn rescaled_core_kernel<K: Kernel + ?Sized>(
    kernel: &K,
    partition: &Partition,
    coreset: &Coreset,
) -> Result<KernelMatrix> {
    let gram = kernel.submatrix(coreset.cores());
    KernelMatrix::from_psd(rescale(&gram, &partition.sizes()))
}

/// The immutable sampling artifact: Π, C, L̃ with its spectrum, and the
/// unrescaled core Gram matrix L_C used for exact probabilities.
#[derive(Debug, Clone)]
pub struct CoreModel {
    partition: Partition,
    coreset: Coreset,
    core_gram: DMatrix<f64>,
    sizes: Vec<usize>,
    dpp: KDppModel,
}

impl CoreModel {
    pub fn new<K: Kernel + ?Sized>(
        kernel: &K,
        partition: Partition,
        coreset: Coreset,
        k: usize,
    ) -> Result<Self> {
        if partition.n() != kernel.size() {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} items, kernel has {}",
                partition.n(),
                kernel.size()
            )));
        }
        let core_gram = kernel.submatrix(coreset.cores());
        Self::assemble(partition, coreset, core_gram, k)
    }

    fn assemble(
        partition: Partition,
        coreset: Coreset,
        core_gram: DMatrix<f64>,
        k: usize,
    ) -> Result<Self> {
        let sizes = partition.sizes();
        let core_kernel = KernelMatrix::from_psd(rescale(&core_gram, &sizes))?;
        let spectrum = core_kernel.spectrum();
        let dpp = KDppModel::from_parts(core_kernel, spectrum, k)?;
        Ok(CoreModel {
            partition,
            coreset,
            core_gram,
            sizes,
            dpp,
        })
    }

    /// Rebuild from a stored rescaled core kernel (the model-file path).
    pub fn from_core_kernel(
        partition: Partition,
        coreset: Coreset,
        core_kernel: DMatrix<f64>,
        k: usize,
    ) -> Result<Self> {
        let sizes = partition.sizes();
        if core_kernel.nrows() != sizes.len() || core_kernel.ncols() != sizes.len() {
            return Err(Error::InvalidInput(format!(
                "core kernel is {}x{}, expected {}x{}",
                core_kernel.nrows(),
                core_kernel.ncols(),
                sizes.len(),
                sizes.len()
            )));
        }
        let m = sizes.len();
        let core_gram = DMatrix::from_fn(m, m, |a, b| {
            core_kernel[(a, b)] / (sizes[a] as f64 * sizes[b] as f64).sqrt()
        });
        let core_kernel = KernelMatrix::from_psd(core_kernel)?;
        let spectrum = core_kernel.spectrum();
        let dpp = KDppModel::from_parts(core_kernel, spectrum, k)?;
        Ok(CoreModel {
            partition,
            coreset,
            core_gram,
            sizes,
            dpp,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn coreset(&self) -> &Coreset {
        &self.coreset
    }

    /// L̃.
    pub fn core_kernel(&self) -> &KernelMatrix {
        self.dpp.kernel()
    }

    pub fn core_spectrum(&self) -> &Spectrum {
        self.dpp.spectrum()
    }

    /// L restricted to the cores.
    pub fn core_gram(&self) -> &DMatrix<f64> {
        &self.core_gram
    }

    pub fn part_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn k(&self) -> usize {
        self.dpp.k()
    }

    pub fn n(&self) -> usize {
        self.partition.n()
    }

    /// Z_C = e_k(L̃).
    pub fn z_core(&self) -> f64 {
        self.dpp.normalizer()
    }

    pub fn log_z_core(&self) -> f64 {
        self.dpp.log_normalizer()
    }

    /// The stage-one k-DPP over parts.
    pub fn core_dpp(&self) -> &KDppModel {
        &self.dpp
    }
}
