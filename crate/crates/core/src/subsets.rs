//! Enumeration of k-subsets and partition-singular subsets, with budgets.

use itertools::Itertools;

use crate::{Error, Result};

/// Default enumeration budget (number of subsets visited).
pub const DEFAULT_BUDGET: u128 = 2_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

pub fn check_budget(count: u128, budget: u128) -> Result<()> {
    if count > budget {
        Err(Error::EnumerationTooLarge { count, budget })
    } else {
        Ok(())
    }
}

/// Visit every k-subset of 0..n in lexicographic order.
pub fn for_each_k_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    for combo in (0..n).combinations(k) {
        f(&combo);
    }
}

/// Number of k-subsets that take at most one item from each group.
pub fn singular_count(groups: &[&[usize]], k: usize) -> u128 {
    let mut e = vec![0u128; k + 1];
    e[0] = 1;
    for (i, g) in groups.iter().enumerate() {
        for j in (1..=k.min(i + 1)).rev() {
            e[j] += g.len() as u128 * e[j - 1];
        }
    }
    e[k]
}

/// Visit every k-subset taking at most one item from each group. Items are
/// emitted in group order; `f` also receives the chosen group positions.
pub fn for_each_singular(groups: &[&[usize]], k: usize, mut f: impl FnMut(&[usize], &[usize])) {
    if k == 0 {
        f(&[], &[]);
        return;
    }
    if k > groups.len() {
        return;
    }
    let mut items = vec![0usize; k];
    for chosen in (0..groups.len()).combinations(k) {
        if chosen.iter().any(|&g| groups[g].is_empty()) {
            continue;
        }
        let mut pos = vec![0usize; k];
        'odometer: loop {
            for a in 0..k {
                items[a] = groups[chosen[a]][pos[a]];
            }
            f(&items, &chosen);
            let mut a = k;
            loop {
                if a == 0 {
                    break 'odometer;
                }
                a -= 1;
                pos[a] += 1;
                if pos[a] < groups[chosen[a]].len() {
                    continue 'odometer;
                }
                pos[a] = 0;
            }
        }
    }
}
