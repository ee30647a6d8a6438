//! Bases merging and its analytical error accounting.
//!
//! Merging the data points of several bases into one cluster replaces their
//! centroids by a single weighted centroid, which then behaves as if it
//! belonged to one *host* basis. The objective-value gap this introduces —
//! the cost of misclassification — is computable from centroids and
//! weight-scaled duals alone:
//!
//! ```text
//! com(cluster | host h) = sum over i in cluster of
//!     centroid_i . (dual_i - (W_i / W_h) * dual_h)
//! ```
//!
//! and the host is conjectured to be the candidate minimizing that value.
//! Nothing here solves an LP; [`solve_merged`] and [`verify_hosts`] exist to
//! audit the analytics against re-solves.

use crate::aggregation::{block_diagonal_lp, BasisSet};
use crate::error::Error;
use crate::linalg::dot;
use crate::lp::{extract_active_set, solve_lp, LpSolution, LpStandardForm, TOL_ACTIVE};
use crate::Result;
use serde::{Deserialize, Serialize};

/// The host basis chosen for a cluster, with its misclassification cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostChoice {
    pub basis: usize,
    pub com: f64,
    /// another candidate tied within tolerance; the smaller id was kept
    pub tied: bool,
}

/// A cluster of one or more bases with its combined weight and centroid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cluster {
    /// sorted member basis ids
    pub basis_ids: Vec<usize>,
    pub weight: usize,
    pub centroid: Vec<f64>,
    pub host: Option<HostChoice>,
}

impl Cluster {
    /// Build from basis ids, computing weight and weighted centroid.
    pub fn from_ids(ids: &[usize], bs: &BasisSet) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Contract("empty cluster".into()));
        }
        let mut basis_ids = ids.to_vec();
        basis_ids.sort_unstable();
        basis_ids.dedup();
        if basis_ids.len() != ids.len() {
            return Err(Error::Contract("duplicate basis id in cluster".into()));
        }
        for &i in &basis_ids {
            if i >= bs.n_bases() {
                return Err(Error::Contract(format!("unknown basis id {i}")));
            }
        }
        let groups: Vec<_> = basis_ids.iter().map(|&i| &bs.groups[i]).collect();
        let (weight, centroid) = merged_centroid_of(&groups);
        Ok(Cluster {
            basis_ids,
            weight,
            centroid,
            host: None,
        })
    }

    pub fn is_singleton(&self) -> bool {
        self.basis_ids.len() == 1
    }
}

/// Weighted mean centroid of a nonempty set of basis groups.
pub fn merged_centroid(groups: &[&crate::aggregation::BasisGroup]) -> (usize, Vec<f64>) {
    merged_centroid_of(groups)
}

fn merged_centroid_of(groups: &[&crate::aggregation::BasisGroup]) -> (usize, Vec<f64>) {
    assert!(!groups.is_empty(), "merged centroid of no groups");
    let weight: usize = groups.iter().map(|g| g.weight).sum();
    let m = groups[0].centroid.len();
    let mut centroid = vec![0.0; m];
    for g in groups {
        let w = g.weight as f64;
        for (c, b) in centroid.iter_mut().zip(&g.centroid) {
            *c += w * b;
        }
    }
    let total = weight as f64;
    for c in &mut centroid {
        *c /= total;
    }
    (weight, centroid)
}

/// A family of disjoint clusters covering all bases.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Partition {
    pub clusters: Vec<Cluster>,
}

impl Partition {
    /// Build from id sets, canonicalizing order (clusters by smallest member,
    /// ids ascending) and validating disjoint cover.
    pub fn from_id_sets(sets: &[Vec<usize>], bs: &BasisSet) -> Result<Self> {
        let mut clusters = sets
            .iter()
            .map(|ids| Cluster::from_ids(ids, bs))
            .collect::<Result<Vec<_>>>()?;
        clusters.sort_by_key(|c| c.basis_ids[0]);
        let p = Partition { clusters };
        p.validate(bs)?;
        Ok(p)
    }

    /// Every basis in its own cluster.
    pub fn identity(bs: &BasisSet) -> Self {
        let clusters = bs
            .groups
            .iter()
            .map(|g| Cluster {
                basis_ids: vec![g.id],
                weight: g.weight,
                centroid: g.centroid.clone(),
                host: Some(HostChoice {
                    basis: g.id,
                    com: 0.0,
                    tied: false,
                }),
            })
            .collect();
        Partition { clusters }
    }

    pub fn validate(&self, bs: &BasisSet) -> Result<()> {
        let mut seen = vec![false; bs.n_bases()];
        for c in &self.clusters {
            for &i in &c.basis_ids {
                if i >= seen.len() || seen[i] {
                    return Err(Error::Contract(format!(
                        "partition does not partition the bases (basis {i})"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Contract("partition does not cover all bases".into()));
        }
        Ok(())
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Canonical text form, e.g. `{1,8},{2,3},{4}` with 1-based basis ids.
    /// Clusters render in stored order, which constructors keep sorted by
    /// smallest member.
    pub fn display_one_based(&self) -> String {
        self.clusters
            .iter()
            .map(|c| {
                let ids: Vec<String> = c.basis_ids.iter().map(|i| (i + 1).to_string()).collect();
                format!("{{{}}}", ids.join(","))
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Analytical evaluation of one partition: per-cluster objective parts and
/// the total misclassification cost `ov_identity - ov_merged`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MergeEvaluation {
    pub com: f64,
    /// `OV^k` per cluster, aligned with the partition's clusters
    pub per_cluster_ov: Vec<f64>,
    /// objective of the unmerged aggregation (dual route)
    pub ov_identity: f64,
    /// objective of the merged aggregation (dual route, host duals)
    pub ov_merged: f64,
    /// host audit outcomes when verification ran; `None` entries otherwise
    pub host_verified: Vec<Option<bool>>,
}

/// Precomputed dot products `centroid_i . dual_rep_h` for fast candidate
/// scoring across many partitions of one basis set.
pub struct ComEvaluator<'a> {
    bs: &'a BasisSet,
    dots: Vec<Vec<f64>>,
    ov_identity: f64,
}

impl<'a> ComEvaluator<'a> {
    pub fn new(bs: &'a BasisSet) -> Self {
        let k = bs.n_bases();
        let mut dots = vec![vec![0.0; k]; k];
        for (i, gi) in bs.groups.iter().enumerate() {
            for (h, gh) in bs.groups.iter().enumerate() {
                dots[i][h] = dot(&gi.centroid, &gh.dual_rep);
            }
        }
        let ov_identity = (0..k).map(|i| dots[i][i]).sum();
        ComEvaluator {
            bs,
            dots,
            ov_identity,
        }
    }

    pub fn basis_set(&self) -> &BasisSet {
        self.bs
    }

    pub fn ov_identity(&self) -> f64 {
        self.ov_identity
    }

    /// Misclassification cost of hosting `ids` in basis `host`.
    pub fn com_given_host(&self, ids: &[usize], host: usize) -> f64 {
        let w_host = self.bs.groups[host].weight as f64;
        ids.iter()
            .map(|&i| {
                let w_i = self.bs.groups[i].weight as f64;
                self.dots[i][i] - (w_i / w_host) * self.dots[i][host]
            })
            .sum()
    }

    /// The objective part `OV^k` contributed by a cluster under `host`.
    pub fn cluster_ov(&self, ids: &[usize], host: usize) -> f64 {
        let w_host = self.bs.groups[host].weight as f64;
        ids.iter()
            .map(|&i| {
                let w_i = self.bs.groups[i].weight as f64;
                (w_i / w_host) * self.dots[i][host]
            })
            .sum()
    }

    /// Argmin of [`Self::com_given_host`] over all bases; ties keep the
    /// smallest basis id and are flagged.
    pub fn host_for(&self, ids: &[usize]) -> HostChoice {
        if ids.len() == 1 {
            return HostChoice {
                basis: ids[0],
                com: 0.0,
                tied: false,
            };
        }
        let mut best: Option<HostChoice> = None;
        for h in 0..self.bs.n_bases() {
            let com = self.com_given_host(ids, h);
            match &mut best {
                None => {
                    best = Some(HostChoice {
                        basis: h,
                        com,
                        tied: false,
                    })
                }
                Some(b) => {
                    let tie_tol = 1e-9 * com.abs().max(b.com.abs()).max(1.0);
                    if com < b.com - tie_tol {
                        *b = HostChoice {
                            basis: h,
                            com,
                            tied: false,
                        };
                    } else if (com - b.com).abs() <= tie_tol {
                        b.tied = true;
                    }
                }
            }
        }
        best.expect("basis set is nonempty")
    }

    /// Score a whole partition, assigning hosts to clusters that lack one.
    pub fn evaluate(&self, partition: &mut Partition) -> MergeEvaluation {
        let mut per_cluster_ov = Vec::with_capacity(partition.clusters.len());
        for c in &mut partition.clusters {
            let host = match c.host {
                Some(h) => h,
                None => {
                    let h = self.host_for(&c.basis_ids);
                    c.host = Some(h);
                    h
                }
            };
            per_cluster_ov.push(self.cluster_ov(&c.basis_ids, host.basis));
        }
        let ov_merged: f64 = per_cluster_ov.iter().sum();
        let com = self.ov_identity - ov_merged;
        MergeEvaluation {
            com,
            per_cluster_ov,
            ov_identity: self.ov_identity,
            ov_merged,
            host_verified: vec![None; partition.clusters.len()],
        }
    }
}

/// Misclassification cost of `cluster` if its centroid is hosted by
/// `host_candidate`. Zero for a self-hosted singleton.
pub fn candidate_com(cluster: &Cluster, host_candidate: usize, bs: &BasisSet) -> f64 {
    ComEvaluator::new(bs).com_given_host(&cluster.basis_ids, host_candidate)
}

/// The misclassification-cost-minimizing host for `cluster`.
pub fn host_basis(cluster: &Cluster, bs: &BasisSet) -> (usize, f64) {
    let choice = ComEvaluator::new(bs).host_for(&cluster.basis_ids);
    (choice.basis, choice.com)
}

/// Analytical evaluation of a whole partition; assigns hosts where missing.
pub fn com_partition(partition: &mut Partition, bs: &BasisSet) -> MergeEvaluation {
    ComEvaluator::new(bs).evaluate(partition)
}

/// The merged aggregated LP: one block per cluster, cost scaled by the
/// cluster weight, rhs the merged centroid.
pub fn build_merged_lp(partition: &Partition, bs: &BasisSet) -> LpStandardForm {
    let blocks: Vec<(f64, &[f64])> = partition
        .clusters
        .iter()
        .map(|c| (c.weight as f64, c.centroid.as_slice()))
        .collect();
    block_diagonal_lp(&bs.template, &blocks)
}

/// Result of re-solving the merged LP block by block.
#[derive(Clone, Debug)]
pub struct MergedSolve {
    pub objective: f64,
    /// unweighted block solutions, aligned with the partition's clusters
    pub per_cluster: Vec<LpSolution>,
}

/// Re-solve the merged aggregation (independent blocks). This is the oracle
/// the analytical path is audited against.
pub fn solve_merged(partition: &Partition, bs: &BasisSet) -> Result<MergedSolve> {
    let mut per_cluster = Vec::with_capacity(partition.clusters.len());
    let mut objective = 0.0;
    for c in &partition.clusters {
        let lp = bs.template.instantiate(c.centroid.clone());
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            return Err(Error::Contract(format!(
                "merged block {:?} did not solve to optimality",
                c.basis_ids
            )));
        }
        objective += c.weight as f64 * sol.objective;
        per_cluster.push(sol);
    }
    Ok(MergedSolve {
        objective,
        per_cluster,
    })
}

/// One cluster's host audit: does the active set at the solved centroid
/// match the misclassification-cost argmin?
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HostAudit {
    pub cluster: Vec<usize>,
    pub analytic_host: usize,
    /// basis whose active set matches the solve at the centroid, if any
    pub solved_host: Option<usize>,
    pub agrees: bool,
}

/// Solve each cluster's centroid and check the host conjecture. Mismatches
/// are reported, never hidden.
pub fn verify_hosts(partition: &mut Partition, bs: &BasisSet) -> Result<Vec<HostAudit>> {
    let eval = ComEvaluator::new(bs);
    let mut audits = Vec::with_capacity(partition.clusters.len());
    for c in &mut partition.clusters {
        let host = match c.host {
            Some(h) => h,
            None => {
                let h = eval.host_for(&c.basis_ids);
                c.host = Some(h);
                h
            }
        };
        let lp = bs.template.instantiate(c.centroid.clone());
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            return Err(Error::Contract(format!(
                "cluster {:?} centroid is not solvable",
                c.basis_ids
            )));
        }
        let active = extract_active_set(&lp, &sol, TOL_ACTIVE)?;
        let solved_host = bs.groups.iter().position(|g| g.active_set == active);
        audits.push(HostAudit {
            cluster: c.basis_ids.clone(),
            analytic_host: host.basis,
            solved_host,
            agrees: solved_host == Some(host.basis),
        });
    }
    Ok(audits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::tests::grouped;
    use crate::aggregation::{build_aggregated_lp, solve_aggregated};
    use crate::transport::tests::two_gen_net;
    use crate::transport::{Generator, NetworkModel};

    fn toy() -> (BasisSet, f64) {
        let net = two_gen_net();
        let (mut bs, ovs, _) = grouped(&net, &[3.0, 4.0, 8.0, 12.0]);
        solve_aggregated(&mut bs).unwrap();
        (bs, ovs.iter().sum())
    }

    /// The toy plus an expensive backstop generator, giving a third basis.
    fn extended_toy() -> (BasisSet, f64) {
        let mut net = two_gen_net();
        net.generators.push(Generator {
            id: "nsp".into(),
            node: "n1".into(),
            variable_cost: 100.0,
            capacity: 1000.0,
            uses_cf_series: false,
        });
        let (mut bs, ovs, _) = grouped(&net, &[3.0, 4.0, 8.0, 12.0, 200.0]);
        solve_aggregated(&mut bs).unwrap();
        (bs, ovs.iter().sum())
    }

    fn toy_net_for_lines() -> NetworkModel {
        two_gen_net()
    }

    #[test]
    fn merged_centroid_identity() {
        let (bs, _) = toy();
        let g = &bs.groups[0];
        let (w, c) = merged_centroid(&[g]);
        assert_eq!(w, g.weight);
        assert_eq!(c, g.centroid);
    }

    #[test]
    fn merged_centroid_weighted_pair() {
        let (bs, _) = toy();
        let refs: Vec<_> = bs.groups.iter().collect();
        let (w, c) = merged_centroid(&refs);
        assert_eq!(w, 4);
        // demand centroids 3.5 and 10 with equal weights -> 6.75, and the
        // raw-point mean (3+4+8+12)/4 agrees
        assert!((c[2] - 6.75).abs() < 1e-12);
        assert!((c[2] - 27.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn merged_centroid_symmetric_triple() {
        let (bs, _) = toy();
        let mut a = bs.groups[0].clone();
        let mut b = bs.groups[0].clone();
        let mut c = bs.groups[0].clone();
        a.centroid[2] = 0.0;
        b.centroid[2] = 3.0;
        c.centroid[2] = 6.0;
        let (_, m) = merged_centroid(&[&a, &b, &c]);
        assert!((m[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn self_host_cancels_exactly() {
        let (bs, _) = toy();
        for g in &bs.groups {
            let c = Cluster::from_ids(&[g.id], &bs).unwrap();
            assert_eq!(candidate_com(&c, g.id, &bs), 0.0);
        }
    }

    #[test]
    fn pair_merge_com_matches_resolve_oracle() {
        let (bs, full_ov) = toy();
        assert!((full_ov - 117.0).abs() < 1e-12);

        let cluster = Cluster::from_ids(&[0, 1], &bs).unwrap();
        // basis 1 (demand centroid 10) hosts the merge
        let com_b = candidate_com(&cluster, 1, &bs);
        assert!((com_b - 27.0).abs() < 1e-10, "com {com_b}");

        // re-solve route: 117 - 90
        let mut p = Partition::from_id_sets(&[vec![0, 1]], &bs).unwrap();
        let resolved = solve_merged(&p, &bs).unwrap();
        assert!((resolved.objective - 90.0).abs() < 1e-12);
        let eval = com_partition(&mut p, &bs);
        assert!((eval.com - (full_ov - resolved.objective)).abs() < 1e-10);

        // hosting in the wrong basis costs strictly more
        let com_a = candidate_com(&cluster, 0, &bs);
        assert!(com_a > com_b + 1.0);
    }

    #[test]
    fn host_argmin_matches_solved_centroid() {
        let (bs, _) = toy();
        let cluster = Cluster::from_ids(&[0, 1], &bs).unwrap();
        let (host, com) = host_basis(&cluster, &bs);
        assert_eq!(host, 1);
        assert!((com - 27.0).abs() < 1e-10);

        let mut p = Partition::from_id_sets(&[vec![0, 1]], &bs).unwrap();
        let audits = verify_hosts(&mut p, &bs).unwrap();
        assert!(audits.iter().all(|a| a.agrees), "{audits:?}");
    }

    #[test]
    fn identity_partition_has_zero_com() {
        let (bs, _) = extended_toy();
        let mut p = Partition::identity(&bs);
        let eval = com_partition(&mut p, &bs);
        assert_eq!(eval.com, 0.0);
        assert_eq!(eval.ov_identity, eval.ov_merged);
    }

    #[test]
    fn untouched_singletons_contribute_nothing() {
        let (bs, _) = extended_toy();
        assert_eq!(bs.n_bases(), 3);
        let mut p = Partition::from_id_sets(&[vec![0, 1], vec![2]], &bs).unwrap();
        let eval = com_partition(&mut p, &bs);
        assert!((eval.com - 27.0).abs() < 1e-9, "com {}", eval.com);
    }

    #[test]
    fn merged_lp_of_identity_is_the_aggregated_lp() {
        let (bs, _) = toy();
        let p = Partition::identity(&bs);
        assert_eq!(build_merged_lp(&p, &bs), build_aggregated_lp(&bs));
    }

    #[test]
    fn all_in_one_toy_merge() {
        let (bs, _) = toy();
        let mut p = Partition::from_id_sets(&[vec![0, 1]], &bs).unwrap();
        let lp = build_merged_lp(&p, &bs);
        assert_eq!(lp.matrix.rows(), 3);
        let sol = crate::lp::solve_lp(&lp).unwrap();
        assert!((sol.objective - 90.0).abs() < 1e-12);

        let eval = com_partition(&mut p, &bs);
        assert!((eval.ov_merged - 90.0).abs() < 1e-10);
        assert!((eval.com - 27.0).abs() < 1e-10);
    }

    #[test]
    fn analytical_matches_resolve_on_every_partition_of_three() {
        let (bs, _) = extended_toy();
        let id_sets: [&[Vec<usize>]; 5] = [
            &[vec![0], vec![1], vec![2]],
            &[vec![0, 1], vec![2]],
            &[vec![0, 2], vec![1]],
            &[vec![0], vec![1, 2]],
            &[vec![0, 1, 2]],
        ];
        for sets in id_sets {
            let mut p = Partition::from_id_sets(sets, &bs).unwrap();
            let eval = com_partition(&mut p, &bs);
            let resolved = solve_merged(&p, &bs).unwrap();
            let gap = (eval.com - (eval.ov_identity - resolved.objective)).abs();
            assert!(
                gap <= 1e-8 * eval.ov_identity.abs().max(1.0),
                "partition {sets:?}: analytic {} vs resolved {}",
                eval.com,
                eval.ov_identity - resolved.objective
            );
        }
    }

    #[test]
    fn weights_are_conserved() {
        let (bs, _) = extended_toy();
        let mut p = Partition::from_id_sets(&[vec![0, 2], vec![1]], &bs).unwrap();
        com_partition(&mut p, &bs);
        let total: usize = p.clusters.iter().map(|c| c.weight).sum();
        assert_eq!(total, bs.horizon);
    }

    #[test]
    fn partition_validation_rejects_overlap_and_gaps() {
        let (bs, _) = toy();
        assert!(Partition::from_id_sets(&[vec![0], vec![0, 1]], &bs).is_err());
        assert!(Partition::from_id_sets(&[vec![0]], &bs).is_err());
        let _ = toy_net_for_lines();
    }

    #[test]
    fn partition_display_is_canonical() {
        let (bs, _) = extended_toy();
        let p = Partition::from_id_sets(&[vec![2], vec![1, 0]], &bs).unwrap();
        assert_eq!(p.display_one_based(), "{1,2},{3}");
    }

    #[test]
    fn partition_display_with_double_digit_ids() {
        // rendering must stay aligned with the numeric cluster order once
        // ids pass 9
        let net = NetworkModel {
            nodes: vec!["n1".into()],
            generators: (0..12)
                .map(|i| Generator {
                    id: format!("s{i}"),
                    node: "n1".into(),
                    variable_cost: (i + 1) as f64,
                    capacity: 1.0,
                    uses_cf_series: false,
                })
                .collect(),
            lines: vec![],
        };
        let demands: Vec<f64> = (0..12).map(|k| k as f64 + 0.5).collect();
        let (bs, _, _) = grouped(&net, &demands);
        assert_eq!(bs.n_bases(), 12);
        let p = Partition::from_id_sets(
            &[vec![9, 10, 11], vec![1, 2], vec![0, 3, 4, 5, 6, 7, 8]],
            &bs,
        )
        .unwrap();
        assert_eq!(p.display_one_based(), "{1,4,5,6,7,8,9},{2,3},{10,11,12}");
    }
}
