//! Exact partition counting (Bell and Stirling numbers) and enumeration of
//! set partitions with a fixed number of blocks, in restricted-growth-string
//! order.

use crate::error::Error;
use crate::Result;
use num_bigint::BigUint;

/// Number of partitions of an n-element set, computed with the Bell triangle.
pub fn bell_number(n: usize) -> BigUint {
    let mut row = vec![BigUint::from(1u32)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().unwrap().clone());
        for prev in &row {
            let last = next.last().unwrap().clone();
            next.push(last + prev);
        }
        row = next;
    }
    row[0].clone()
}

/// Number of partitions of an n-element set into exactly k nonempty blocks,
/// via `S(n,k) = S(n-1,k-1) + k*S(n-1,k)`. Zero outside `0 <= k <= n` (with
/// `S(0,0) = 1`).
pub fn stirling2(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    if n == 0 {
        return BigUint::from(1u32);
    }
    if k == 0 {
        return BigUint::ZERO;
    }
    let mut row = vec![BigUint::ZERO; k + 1];
    row[0] = BigUint::from(1u32); // S(0,0)
    for _ in 1..=n {
        for j in (1..=k).rev() {
            let keep = &row[j] * BigUint::from(j);
            row[j] = keep + &row[j - 1];
        }
        row[0] = BigUint::ZERO;
    }
    row[k].clone()
}

/// Iterator over all partitions of `ids` into exactly `k` nonempty blocks.
///
/// Partitions are produced in lexicographic order of their restricted growth
/// strings (block labels assigned first-come first-served along `ids`), each
/// exactly once; the total count is `stirling2(ids.len(), k)`.
pub struct PartitionIter {
    ids: Vec<usize>,
    k: usize,
    rgs: Vec<usize>,
    started: bool,
    done: bool,
}

/// Enumerate the partitions of `ids` into exactly `k` blocks.
pub fn enumerate_partitions(ids: &[usize], k: usize) -> Result<PartitionIter> {
    if ids.is_empty() || k == 0 || k > ids.len() {
        return Err(Error::Contract(format!(
            "cannot partition {} ids into {k} blocks",
            ids.len()
        )));
    }
    Ok(PartitionIter {
        ids: ids.to_vec(),
        k,
        rgs: vec![0; ids.len()],
        started: false,
        done: false,
    })
}

impl PartitionIter {
    /// Lexicographically smallest string: zeros, then a final ramp through
    /// the remaining block labels.
    fn reset_suffix(&mut self, from: usize) {
        let n = self.rgs.len();
        let prefix_max = if from == 0 {
            // position 0 is pinned to label 0
            0
        } else {
            *self.rgs[..from].iter().max().unwrap()
        };
        let missing = self.k - 1 - prefix_max; // labels still to introduce
        for i in from..n {
            let ramp_start = n - missing;
            self.rgs[i] = if i >= ramp_start {
                prefix_max + 1 + (i - ramp_start)
            } else {
                0
            };
        }
    }

    fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            self.reset_suffix(0);
            return true;
        }
        let n = self.rgs.len();
        // find the rightmost position (never position 0) that can grow
        for i in (1..n).rev() {
            let prefix_max = *self.rgs[..i].iter().max().unwrap();
            let cap = (prefix_max + 1).min(self.k - 1);
            if self.rgs[i] >= cap {
                continue;
            }
            let candidate = self.rgs[i] + 1;
            let new_max = prefix_max.max(candidate);
            // the suffix must still be able to introduce the missing labels
            if self.k - 1 - new_max <= n - 1 - i {
                self.rgs[i] = candidate;
                self.reset_suffix(i + 1);
                return true;
            }
        }
        false
    }

    fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (i, &label) in self.rgs.iter().enumerate() {
            blocks[label].push(self.ids[i]);
        }
        blocks
    }
}

impl Iterator for PartitionIter {
    type Item = Vec<Vec<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.advance() {
            Some(self.blocks())
        } else {
            self.done = true;
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn bell_base_and_small_values() {
        assert_eq!(bell_number(0), b(1));
        assert_eq!(bell_number(1), b(1));
        assert_eq!(bell_number(3), b(5));
        assert_eq!(bell_number(8), b(4140));
        assert_eq!(bell_number(15), b(1_382_958_545));
    }

    #[test]
    fn stirling_row_for_eight() {
        let expected = [1u64, 28, 266, 1050, 1701, 966, 127, 1];
        for (i, &v) in expected.iter().enumerate() {
            assert_eq!(stirling2(8, 8 - i), b(v), "S(8,{})", 8 - i);
        }
    }

    #[test]
    fn stirling_edges() {
        assert_eq!(stirling2(5, 5), b(1));
        assert_eq!(stirling2(5, 6), BigUint::ZERO);
        assert_eq!(stirling2(0, 0), b(1));
        assert_eq!(stirling2(4, 0), BigUint::ZERO);
    }

    #[test]
    fn stirling_sums_to_bell() {
        for n in 1..=12 {
            let sum: BigUint = (1..=n).map(|k| stirling2(n, k)).sum();
            assert_eq!(sum, bell_number(n), "n = {n}");
        }
    }

    #[test]
    fn three_ids_two_blocks() {
        let all: Vec<_> = enumerate_partitions(&[1, 2, 3], 2).unwrap().collect();
        assert_eq!(
            all,
            vec![
                vec![vec![1, 2], vec![3]],
                vec![vec![1, 3], vec![2]],
                vec![vec![1], vec![2, 3]],
            ]
        );
    }

    #[test]
    fn single_block_is_everything() {
        let all: Vec<_> = enumerate_partitions(&[4, 7, 9], 1).unwrap().collect();
        assert_eq!(all, vec![vec![vec![4, 7, 9]]]);
    }

    #[test]
    fn counts_match_stirling() {
        let ids: Vec<usize> = (0..8).collect();
        for k in 1..=8 {
            let count = enumerate_partitions(&ids, k).unwrap().count();
            assert_eq!(BigUint::from(count), stirling2(8, k), "k = {k}");
        }
    }

    #[test]
    fn out_of_range_k_is_an_error() {
        assert!(enumerate_partitions(&[1, 2], 0).is_err());
        assert!(enumerate_partitions(&[1, 2], 3).is_err());
        assert!(enumerate_partitions(&[], 1).is_err());
    }

    #[test]
    fn partitions_are_valid_and_unique() {
        let ids: Vec<usize> = (0..7).collect();
        for k in 1..=7 {
            let mut seen = std::collections::BTreeSet::new();
            for p in enumerate_partitions(&ids, k).unwrap() {
                assert_eq!(p.len(), k);
                let mut items: Vec<usize> = p.iter().flatten().copied().collect();
                items.sort_unstable();
                assert_eq!(items, ids, "partition covers the ids exactly once");
                assert!(p.iter().all(|b| !b.is_empty()));
                assert!(seen.insert(p.clone()), "duplicate partition {p:?}");
            }
        }
    }
}
