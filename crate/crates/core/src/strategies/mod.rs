//! Search over bases mergers: exhaustive enumeration of set partitions,
//! greedy pairwise agglomeration, and greedy restricted to adjacent bases.
//!
//! All strategies walk the cluster count from the number of bases down to a
//! target (1 by default), recording at each level the best partition found,
//! its misclassification cost, and how many candidate mergers were scored.
//! Exhaustive scores every partition of the level (a Stirling number of
//! them); greedy scores only the pairwise coarsenings of its previous choice
//! and never undoes a merge.

mod combinatorics;

pub use combinatorics::{bell_number, enumerate_partitions, stirling2, PartitionIter};

use crate::aggregation::BasisSet;
use crate::error::Error;
use crate::merging::{ComEvaluator, Partition};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Default refusal threshold for exhaustive enumeration; B_12 is about 4.2
/// million partitions, which is still fine to score analytically.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Exhaustive,
    Greedy,
    GreedyAdjacent,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategyKind::Exhaustive => write!(f, "exhaustive"),
            StrategyKind::Greedy => write!(f, "greedy"),
            StrategyKind::GreedyAdjacent => write!(f, "greedy-adjacent"),
        }
    }
}

/// The partition chosen at one cluster-count level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelRecord {
    pub k: usize,
    pub partition: Partition,
    pub com: f64,
    /// candidate mergers scored at this level
    pub evaluated: u64,
    /// the adjacency filter left no candidates and was dropped for this level
    pub adjacency_fallback: bool,
}

/// Full record of one strategy run, levels ordered from `|bases|` down.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategyTrace {
    pub strategy: StrategyKind,
    pub levels: Vec<LevelRecord>,
}

impl StrategyTrace {
    pub fn level(&self, k: usize) -> Option<&LevelRecord> {
        self.levels.iter().find(|l| l.k == k)
    }

    pub fn evaluated_counts(&self) -> Vec<(usize, u64)> {
        self.levels.iter().map(|l| (l.k, l.evaluated)).collect()
    }
}

/// Unordered pairs of bases considered neighbors in input space.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyList {
    pairs: BTreeSet<(usize, usize)>,
}

impl AdjacencyList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut list = Self::new();
        for (a, b) in pairs {
            list.insert(a, b);
        }
        list
    }

    /// Self-pairs are ignored; insertion is symmetric.
    pub fn insert(&mut self, a: usize, b: usize) {
        if a != b {
            self.pairs.insert((a.min(b), a.max(b)));
        }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a != b && self.pairs.contains(&(a.min(b), a.max(b)))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    /// Two clusters are adjacent when the union of their bases induces a
    /// connected subgraph of this list, so a multi-basis cluster can reach
    /// the other cluster through any of its members.
    pub fn clusters_adjacent(&self, a: &[usize], b: &[usize]) -> bool {
        let union: Vec<usize> = a.iter().chain(b).copied().collect();
        if union.len() < 2 {
            return false;
        }
        // BFS over the induced subgraph
        let mut visited = vec![false; union.len()];
        let mut queue = vec![0usize];
        visited[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop() {
            for v in 0..union.len() {
                if !visited[v] && self.contains(union[u], union[v]) {
                    visited[v] = true;
                    reached += 1;
                    queue.push(v);
                }
            }
        }
        reached == union.len()
    }
}

/// How to decide which bases are adjacent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjacencyMode {
    /// bases whose member points come within a data-derived contact distance
    /// of each other in the varying input coordinates
    InputSpace,
    /// bases whose active sets differ by exactly one pivot (two rows)
    ActiveSet,
}

/// Detect adjacent bases either from raw input-space proximity of member
/// points or from active-set structure.
///
/// In input-space mode only the rhs coordinates that actually vary across the
/// horizon are used, each normalized to [0, 1]; the contact distance is 1.5x
/// the largest nearest-neighbor spacing of the points, which adapts to the
/// sampling density. The chosen distance is returned for audit.
pub fn detect_adjacency(
    bs: &BasisSet,
    raw_points: &[Vec<f64>],
    mode: AdjacencyMode,
) -> (AdjacencyList, Option<f64>) {
    match mode {
        AdjacencyMode::ActiveSet => {
            let mut adj = AdjacencyList::new();
            for i in 0..bs.n_bases() {
                for j in i + 1..bs.n_bases() {
                    let diff = bs.groups[i]
                        .active_set
                        .symmetric_difference_len(&bs.groups[j].active_set);
                    if diff == 2 {
                        adj.insert(i, j);
                    }
                }
            }
            (adj, None)
        }
        AdjacencyMode::InputSpace => detect_input_space(bs, raw_points),
    }
}

fn detect_input_space(bs: &BasisSet, raw_points: &[Vec<f64>]) -> (AdjacencyList, Option<f64>) {
    let t_count = raw_points.len();
    assert_eq!(t_count, bs.horizon, "raw points must cover the horizon");
    let m = raw_points.first().map_or(0, Vec::len);

    // coordinates that vary across the horizon
    let mut lo = raw_points[0].clone();
    let mut hi = raw_points[0].clone();
    for p in raw_points {
        for (&v, (l, h)) in p.iter().zip(lo.iter_mut().zip(hi.iter_mut())) {
            if v < *l {
                *l = v;
            }
            if v > *h {
                *h = v;
            }
        }
    }
    let varying: Vec<usize> = (0..m)
        .filter(|&c| hi[c] - lo[c] > 1e-9 * hi[c].abs().max(1.0))
        .collect();
    if varying.is_empty() || t_count < 2 {
        return (AdjacencyList::new(), Some(0.0));
    }

    // normalized coordinates
    let coords: Vec<Vec<f64>> = raw_points
        .iter()
        .map(|p| {
            varying
                .iter()
                .map(|&c| (p[c] - lo[c]) / (hi[c] - lo[c]))
                .collect()
        })
        .collect();

    let mut basis_of = vec![0usize; t_count];
    for g in &bs.groups {
        for &t in &g.members {
            basis_of[t] = g.id;
        }
    }

    let nb = bs.n_bases();
    let mut nn = vec![f64::INFINITY; t_count];
    let mut cross = vec![f64::INFINITY; nb * nb];
    for s in 0..t_count {
        for t in s + 1..t_count {
            let d2: f64 = coords[s]
                .iter()
                .zip(&coords[t])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 < nn[s] {
                nn[s] = d2;
            }
            if d2 < nn[t] {
                nn[t] = d2;
            }
            let (bi, bj) = (basis_of[s], basis_of[t]);
            if bi != bj {
                let slot = bi.min(bj) * nb + bi.max(bj);
                if d2 < cross[slot] {
                    cross[slot] = d2;
                }
            }
        }
    }

    let max_nn = nn.iter().copied().fold(0.0_f64, f64::max).sqrt();
    let delta = 1.5 * max_nn;
    let mut adj = AdjacencyList::new();
    for i in 0..nb {
        for j in i + 1..nb {
            if cross[i * nb + j].sqrt() <= delta {
                adj.insert(i, j);
            }
        }
    }
    (adj, Some(delta))
}

/// Score every partition at every level; refuses above `cap` bases because
/// the partition count is the Bell number.
pub fn exhaustive_strategy(bs: &BasisSet, cap: usize, target_k: usize) -> Result<StrategyTrace> {
    let n = bs.n_bases();
    if n > cap {
        return Err(Error::CapExceeded { bases: n, cap });
    }
    let target = target_k.clamp(1, n);
    let eval = ComEvaluator::new(bs);
    let ids: Vec<usize> = (0..n).collect();

    let mut levels = Vec::new();
    for k in (target..=n).rev() {
        let mut evaluated = 0u64;
        let mut best: Option<(f64, Partition)> = None;
        for sets in enumerate_partitions(&ids, k)? {
            let mut p = Partition::from_id_sets(&sets, bs)?;
            let score = eval.evaluate(&mut p).com;
            evaluated += 1;
            let replace = match &best {
                None => true,
                Some((b, bp)) => {
                    let tie = 1e-12 * eval.ov_identity().abs().max(1.0);
                    score < b - tie || ((score - b).abs() <= tie && canonical_lt(&p, bp))
                }
            };
            if replace {
                best = Some((score, p));
            }
        }
        let (com, partition) = best.expect("every level has at least one partition");
        levels.push(LevelRecord {
            k,
            partition,
            com,
            evaluated,
            adjacency_fallback: false,
        });
    }
    Ok(StrategyTrace {
        strategy: StrategyKind::Exhaustive,
        levels,
    })
}

fn canonical_lt(a: &Partition, b: &Partition) -> bool {
    let ka: Vec<&[usize]> = a.clusters.iter().map(|c| c.basis_ids.as_slice()).collect();
    let kb: Vec<&[usize]> = b.clusters.iter().map(|c| c.basis_ids.as_slice()).collect();
    ka < kb
}

/// Greedy agglomeration: start from singletons, repeatedly merge the pair of
/// clusters whose merged partition has the least misclassification cost.
pub fn greedy_strategy(bs: &BasisSet, target_k: usize) -> Result<StrategyTrace> {
    greedy_core(bs, None, target_k)
}

/// Greedy agglomeration restricted to adjacent cluster pairs; levels with no
/// adjacent pair fall back to the unrestricted candidate set and say so.
pub fn greedy_adjacent_strategy(
    bs: &BasisSet,
    adj: &AdjacencyList,
    target_k: usize,
) -> Result<StrategyTrace> {
    greedy_core(bs, Some(adj), target_k)
}

fn greedy_core(
    bs: &BasisSet,
    adj: Option<&AdjacencyList>,
    target_k: usize,
) -> Result<StrategyTrace> {
    let n = bs.n_bases();
    let target = target_k.clamp(1, n);
    let eval = ComEvaluator::new(bs);

    // current clusters with their individual objective-part costs
    let mut sets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut cluster_com: Vec<f64> = vec![0.0; n];

    let mut levels = Vec::new();
    let mut identity = Partition::identity(bs);
    let com0 = eval.evaluate(&mut identity).com;
    levels.push(LevelRecord {
        k: n,
        partition: identity,
        com: com0,
        evaluated: 1,
        adjacency_fallback: false,
    });

    while sets.len() > target {
        let current_total: f64 = cluster_com.iter().sum();

        // candidate unordered pairs, optionally filtered by adjacency
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        let mut fallback = false;
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                let keep = match adj {
                    Some(list) => list.clusters_adjacent(&sets[a], &sets[b]),
                    None => true,
                };
                if keep {
                    candidates.push((a, b));
                }
            }
        }
        if candidates.is_empty() {
            fallback = true;
            for a in 0..sets.len() {
                for b in a + 1..sets.len() {
                    candidates.push((a, b));
                }
            }
        }

        let mut best: Option<(f64, usize, usize, f64)> = None;
        for &(a, b) in &candidates {
            let mut merged: Vec<usize> = sets[a].iter().chain(&sets[b]).copied().collect();
            merged.sort_unstable();
            let host = eval.host_for(&merged);
            let total = current_total - cluster_com[a] - cluster_com[b] + host.com;
            let replace = match &best {
                None => true,
                Some((bt, ..)) => total < *bt - 1e-12 * eval.ov_identity().abs().max(1.0),
            };
            if replace {
                best = Some((total, a, b, host.com));
            }
        }
        let (total, a, b, merged_com) =
            best.ok_or_else(|| Error::Contract("no candidate mergers".into()))?;

        // commit the merge (a < b, so removing b first keeps indices stable)
        let removed_b = sets.remove(b);
        cluster_com.remove(b);
        sets[a].extend(removed_b);
        sets[a].sort_unstable();
        cluster_com[a] = merged_com;

        let mut partition = Partition::from_id_sets(&sets, bs)?;
        let eval_now = eval.evaluate(&mut partition);
        debug_assert!((eval_now.com - total).abs() <= 1e-6 * total.abs().max(1.0));
        levels.push(LevelRecord {
            k: sets.len(),
            partition,
            com: eval_now.com,
            evaluated: candidates.len() as u64,
            adjacency_fallback: fallback,
        });
    }

    Ok(StrategyTrace {
        strategy: if adj.is_some() {
            StrategyKind::GreedyAdjacent
        } else {
            StrategyKind::Greedy
        },
        levels,
    })
}
