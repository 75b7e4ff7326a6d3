//! Subset enumeration and sampling plumbing shared by the search and
//! diagnostic modules.

use rand::Rng;
use std::collections::BTreeSet;

/// Binomial coefficient C(n, k), saturating at `u128::MAX`.
pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    // acc stays integral at every step: after step i it equals C(n-k+i, i).
    for i in 1..=k {
        acc = match acc.checked_mul((n - k + i) as u128) {
            Some(v) => v / i as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Iterates over all k-element subsets of {0, .., n-1} in colexicographic
/// order: subsets are compared by their largest element first.
pub(crate) struct ColexCombinations {
    n: usize,
    state: Option<Vec<usize>>,
}

impl ColexCombinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        let state = if k <= n { Some((0..k).collect()) } else { None };
        ColexCombinations { n, state }
    }
}

impl Iterator for ColexCombinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.as_ref()?.clone();
        let c = self.state.as_mut().unwrap();
        let k = c.len();
        // Advance: bump the smallest element that has headroom, resetting
        // everything below it to a prefix.
        let mut advanced = false;
        for i in 0..k {
            let ceiling = if i + 1 < k { c[i + 1] } else { self.n };
            if c[i] + 1 < ceiling {
                c[i] += 1;
                for (j, slot) in c.iter_mut().take(i).enumerate() {
                    *slot = j;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            self.state = None;
        }
        Some(current)
    }
}

/// Uniform random k-subset of {0, .., n-1} via Floyd's algorithm.
/// Returned indices are strictly increasing.
pub(crate) fn sample_subset<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut chosen = BTreeSet::new();
    for j in (n - k)..n {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    chosen.into_iter().collect()
}
