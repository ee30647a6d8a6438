//! Grouping of solved time steps into bases (unique active constraint sets),
//! the weighted aggregated LP, and the exactness audit against the full model.
//!
//! Time steps sharing an active set have the same optimal dual vector, and
//! replacing their right-hand sides by the group centroid changes neither the
//! summed objective nor the average of the primal solutions. The aggregated
//! LP is block diagonal — one independent block per basis — so it is solved
//! block by block; [`build_aggregated_lp`] materializes the same problem as a
//! single LP for callers that want it in one piece.

use crate::error::Error;
use crate::linalg::{dot, DenseMatrix};
use crate::lp::{solve_lp, ActiveSet, LpSolution, LpStandardForm, RowKind};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// The per-time-step LP family: shared cost and matrix, varying rhs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpTemplate {
    pub cost: Vec<f64>,
    pub matrix: DenseMatrix,
    pub row_kinds: Vec<RowKind>,
}

impl LpTemplate {
    pub fn from_lp(lp: &LpStandardForm) -> Self {
        LpTemplate {
            cost: lp.cost.clone(),
            matrix: lp.matrix.clone(),
            row_kinds: lp.row_kinds.clone(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn n_rows(&self) -> usize {
        self.row_kinds.len()
    }

    pub fn instantiate(&self, rhs: Vec<f64>) -> LpStandardForm {
        LpStandardForm {
            cost: self.cost.clone(),
            matrix: self.matrix.clone(),
            rhs,
            row_kinds: self.row_kinds.clone(),
        }
    }
}

/// One basis: a unique active set together with its member time steps,
/// weight, centroid, and representative solutions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisGroup {
    pub id: usize,
    pub active_set: ActiveSet,
    /// zero-based member time steps, ascending
    pub members: Vec<usize>,
    /// number of members
    pub weight: usize,
    /// mean rhs over members
    pub centroid: Vec<f64>,
    /// weight-scaled dual of any member (members agree when non-degenerate)
    pub dual_rep: Vec<f64>,
    /// primal of the aggregated solve at the centroid; populated by
    /// [`solve_aggregated`]
    pub primal_rep: Option<Vec<f64>>,
    /// mean primal over members, kept for the exactness audit
    pub member_primal_mean: Vec<f64>,
    /// members disagreed on duals, or a member vertex was over-determined
    pub degenerate: bool,
}

/// All bases of one solved horizon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisSet {
    pub groups: Vec<BasisGroup>,
    pub horizon: usize,
    pub template: LpTemplate,
    /// degeneracy notes collected while grouping
    pub warnings: Vec<String>,
}

impl BasisSet {
    pub fn n_bases(&self) -> usize {
        self.groups.len()
    }

    /// Sum of weighted objective contributions `OV^i = b_i . dual_rep_i`.
    pub fn objective_by_duals(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| dot(&g.centroid, &g.dual_rep))
            .sum()
    }
}

/// Group per-time-step solves by active set.
///
/// Members of one group must agree on the dual vector; disagreement beyond
/// tolerance marks the group degenerate and is recorded as a warning, never
/// dropped. Groups are ordered by their earliest member.
pub fn group_bases(
    template: &LpTemplate,
    per_timestep: &[(Vec<f64>, LpSolution, ActiveSet)],
) -> Result<BasisSet> {
    let horizon = per_timestep.len();
    if horizon == 0 {
        return Err(Error::Contract("cannot group an empty horizon".into()));
    }
    let n_vars = template.n_vars();

    let mut index: HashMap<&ActiveSet, usize> = HashMap::new();
    let mut groups: Vec<BasisGroup> = Vec::new();
    let mut warnings = Vec::new();

    for (t, (rhs, sol, active)) in per_timestep.iter().enumerate() {
        if !sol.is_optimal() {
            return Err(Error::Contract(format!(
                "time step {t} is not optimal; cannot group"
            )));
        }
        let gid = *index.entry(active).or_insert_with(|| {
            groups.push(BasisGroup {
                id: groups.len(),
                active_set: active.clone(),
                members: Vec::new(),
                weight: 0,
                centroid: vec![0.0; rhs.len()],
                dual_rep: sol.dual.clone(),
                primal_rep: None,
                member_primal_mean: vec![0.0; sol.primal.len()],
                degenerate: active.len() > n_vars,
            });
            groups.len() - 1
        });
        let g = &mut groups[gid];
        g.members.push(t);
        g.weight += 1;
        for (c, r) in g.centroid.iter_mut().zip(rhs) {
            *c += r;
        }
        for (p, x) in g.member_primal_mean.iter_mut().zip(&sol.primal) {
            *p += x;
        }
        // duals must match the first member's
        let scale = g.dual_rep.iter().fold(1.0_f64, |a, &y| a.max(y.abs()));
        let max_dev = g
            .dual_rep
            .iter()
            .zip(&sol.dual)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        if max_dev > 1e-7 * scale {
            if !g.degenerate {
                warnings.push(format!(
                    "basis {gid}: member {t} disagrees on duals by {max_dev:.3e}; \
                     grouping anyway (degenerate)"
                ));
            }
            g.degenerate = true;
        }
    }

    for g in &mut groups {
        let w = g.weight as f64;
        for c in &mut g.centroid {
            *c /= w;
        }
        for p in &mut g.member_primal_mean {
            *p /= w;
        }
        // the representative dual is the member dual scaled by the weight
        for y in &mut g.dual_rep {
            *y *= w;
        }
    }

    Ok(BasisSet {
        groups,
        horizon,
        template: template.clone(),
        warnings,
    })
}

/// The aggregated LP as a single block-diagonal problem: one variable block
/// per basis, cost scaled by the weight, rhs the centroid.
pub fn build_aggregated_lp(bs: &BasisSet) -> LpStandardForm {
    let blocks: Vec<(f64, &[f64])> = bs
        .groups
        .iter()
        .map(|g| (g.weight as f64, g.centroid.as_slice()))
        .collect();
    block_diagonal_lp(&bs.template, &blocks)
}

pub(crate) fn block_diagonal_lp(template: &LpTemplate, blocks: &[(f64, &[f64])]) -> LpStandardForm {
    let n = template.n_vars();
    let m = template.n_rows();
    let k = blocks.len();
    let mut cost = Vec::with_capacity(k * n);
    let mut rhs = Vec::with_capacity(k * m);
    let mut row_kinds = Vec::with_capacity(k * m);
    let mut matrix = DenseMatrix::zeros(k * m, k * n);
    for (b, (weight, centroid)) in blocks.iter().enumerate() {
        cost.extend(template.cost.iter().map(|c| c * weight));
        rhs.extend_from_slice(centroid);
        row_kinds.extend_from_slice(&template.row_kinds);
        for r in 0..m {
            for c in 0..n {
                let v = template.matrix.get(r, c);
                if v != 0.0 {
                    matrix.set(b * m + r, b * n + c, v);
                }
            }
        }
    }
    LpStandardForm {
        cost,
        matrix,
        rhs,
        row_kinds,
    }
}

/// Per-basis result of the aggregated solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregatedBasisSolution {
    /// optimal block primal (the representative decision variables)
    pub primal: Vec<f64>,
    /// weight-scaled block dual
    pub dual_scaled: Vec<f64>,
    /// weighted objective contribution `OV^i`
    pub objective: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregatedSolution {
    pub per_basis: Vec<AggregatedBasisSolution>,
    pub objective: f64,
}

/// Solve the aggregated LP block by block (the blocks are independent) and
/// attach each block's primal to its group as `primal_rep`.
pub fn solve_aggregated(bs: &mut BasisSet) -> Result<AggregatedSolution> {
    let mut per_basis = Vec::with_capacity(bs.groups.len());
    let mut total = 0.0;
    for g in &mut bs.groups {
        let lp = bs.template.instantiate(g.centroid.clone());
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            return Err(Error::Contract(format!(
                "aggregated block for basis {} did not solve to optimality",
                g.id
            )));
        }
        let w = g.weight as f64;
        let objective = w * sol.objective;
        total += objective;
        g.primal_rep = Some(sol.primal.clone());
        per_basis.push(AggregatedBasisSolution {
            primal: sol.primal,
            dual_scaled: sol.dual.iter().map(|y| y * w).collect(),
            objective,
        });
    }
    Ok(AggregatedSolution {
        per_basis,
        objective: total,
    })
}

/// Outcome of comparing the full horizon against its aggregation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub objective_full: f64,
    pub objective_aggregated: f64,
    /// `|OV_full - OV_agg| / max(1, |OV_full|)`
    pub objective_residual_rel: f64,
    /// max over bases of `|mean member primal - aggregated primal|` (abs)
    pub max_primal_gap: f64,
    /// max over bases of the relative gap between the aggregated block dual
    /// and the weight-scaled member dual
    pub max_dual_scaling_residual: f64,
    pub degenerate_groups: Vec<usize>,
    pub degenerate_timesteps: usize,
    pub pass: bool,
    pub tol: f64,
}

/// Compare summed per-time-step objectives against the aggregated solve.
///
/// `pass` requires the objective residual within `tol` (relative), the primal
/// gap within `10 * tol` (absolute), and the dual scaling residual within
/// `10 * tol` (relative), over the non-degenerate groups.
pub fn check_exactness(
    full_ovs: &[f64],
    bs: &BasisSet,
    agg: &AggregatedSolution,
    tol: f64,
) -> Result<ExactnessReport> {
    if full_ovs.len() != bs.horizon {
        return Err(Error::Contract(format!(
            "got {} objectives for a horizon of {}",
            full_ovs.len(),
            bs.horizon
        )));
    }
    if agg.per_basis.len() != bs.groups.len() {
        return Err(Error::Contract(
            "aggregated solution does not match the basis set".into(),
        ));
    }

    let objective_full: f64 = full_ovs.iter().sum();
    let objective_aggregated = agg.objective;
    let objective_residual_rel =
        (objective_full - objective_aggregated).abs() / objective_full.abs().max(1.0);

    let mut max_primal_gap = 0.0_f64;
    let mut max_dual_scaling = 0.0_f64;
    let mut degenerate_groups = Vec::new();
    let mut degenerate_timesteps = 0;
    for (g, ab) in bs.groups.iter().zip(&agg.per_basis) {
        if g.degenerate {
            degenerate_groups.push(g.id);
            degenerate_timesteps += g.weight;
            continue;
        }
        let gap = g
            .member_primal_mean
            .iter()
            .zip(&ab.primal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        max_primal_gap = max_primal_gap.max(gap);

        let scale = g.dual_rep.iter().fold(1.0_f64, |a, &y| a.max(y.abs()));
        let dev = g
            .dual_rep
            .iter()
            .zip(&ab.dual_scaled)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        max_dual_scaling = max_dual_scaling.max(dev / scale);
    }

    let pass = objective_residual_rel <= tol
        && max_primal_gap <= 10.0 * tol
        && max_dual_scaling <= 10.0 * tol;
    Ok(ExactnessReport {
        objective_full,
        objective_aggregated,
        objective_residual_rel,
        max_primal_gap,
        max_dual_scaling_residual: max_dual_scaling,
        degenerate_groups,
        degenerate_timesteps,
        pass,
        tol,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::lp::{extract_active_set, TOL_ACTIVE};
    use crate::transport::tests::{data, two_gen_net};
    use crate::transport::{build_timestep_lp, NetworkModel};

    /// Solve a demand series on a single-node network and group the results.
    pub(crate) fn grouped(net: &NetworkModel, demands: &[f64]) -> (BasisSet, Vec<f64>, LpTemplate) {
        let mut per_timestep = Vec::new();
        let mut ovs = Vec::new();
        let mut template = None;
        for &d in demands {
            let lp = build_timestep_lp(net, &data(&[("n1", d)], &[])).unwrap();
            let sol = solve_lp(&lp).unwrap();
            assert!(sol.is_optimal(), "demand {d} should be feasible");
            let active = extract_active_set(&lp, &sol, TOL_ACTIVE).unwrap();
            ovs.push(sol.objective);
            template.get_or_insert_with(|| LpTemplate::from_lp(&lp));
            per_timestep.push((lp.rhs, sol, active));
        }
        let template = template.unwrap();
        let bs = group_bases(&template, &per_timestep).unwrap();
        (bs, ovs, template)
    }

    #[test]
    fn same_region_demands_share_a_basis() {
        let net = two_gen_net();
        let (bs, _, _) = grouped(&net, &[3.0, 4.0]);
        assert_eq!(bs.n_bases(), 1);
        let g = &bs.groups[0];
        assert_eq!(g.weight, 2);
        assert_eq!(g.members, vec![0, 1]);
        // centroid demand is the mean; cap rows keep their shared rhs
        assert_eq!(g.centroid, vec![5.0, 100.0, 3.5]);
        assert!(!g.degenerate);
    }

    #[test]
    fn single_timestep_single_basis() {
        let net = two_gen_net();
        let (bs, _, _) = grouped(&net, &[4.0]);
        assert_eq!(bs.n_bases(), 1);
        assert_eq!(bs.groups[0].weight, 1);
        assert_eq!(bs.groups[0].centroid, vec![5.0, 100.0, 4.0]);
    }

    #[test]
    fn distinct_regions_split() {
        let net = two_gen_net();
        let (bs, _, _) = grouped(&net, &[3.0, 8.0]);
        assert_eq!(bs.n_bases(), 2);
        assert_ne!(bs.groups[0].active_set, bs.groups[1].active_set);
    }

    #[test]
    fn aggregated_objective_single_basis() {
        let net = two_gen_net();
        let (mut bs, _, _) = grouped(&net, &[3.0, 4.0]);
        let agg = solve_aggregated(&mut bs).unwrap();
        // W * c . x = 2 * 3.5 * 1
        assert!((agg.objective - 7.0).abs() < 1e-12);
        assert!(bs.groups[0].primal_rep.is_some());
    }

    #[test]
    fn zero_demand_contributes_nothing() {
        let net = two_gen_net();
        let (mut bs, _, _) = grouped(&net, &[0.0]);
        let agg = solve_aggregated(&mut bs).unwrap();
        assert_eq!(agg.objective, 0.0);
    }

    #[test]
    fn aggregation_is_exact_on_toy_horizon() {
        let net = two_gen_net();
        let (mut bs, ovs, _) = grouped(&net, &[3.0, 4.0, 8.0, 12.0]);
        assert_eq!(bs.n_bases(), 2);
        let agg = solve_aggregated(&mut bs).unwrap();
        assert!((ovs.iter().sum::<f64>() - 117.0).abs() < 1e-12);
        assert!((agg.objective - 117.0).abs() < 1e-12);

        let report = check_exactness(&ovs, &bs, &agg, 1e-9).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.degenerate_timesteps, 0);
    }

    #[test]
    fn single_timestep_residuals_are_zero() {
        let net = two_gen_net();
        let (mut bs, ovs, _) = grouped(&net, &[8.0]);
        let agg = solve_aggregated(&mut bs).unwrap();
        let report = check_exactness(&ovs, &bs, &agg, 1e-9).unwrap();
        assert_eq!(report.objective_residual_rel, 0.0);
        assert_eq!(report.max_primal_gap, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn corrupted_centroid_fails_the_audit() {
        let net = two_gen_net();
        let (mut bs, ovs, _) = grouped(&net, &[3.0, 4.0, 8.0, 12.0]);
        bs.groups[0].centroid[2] += 1.0;
        let agg = solve_aggregated(&mut bs).unwrap();
        let report = check_exactness(&ovs, &bs, &agg, 1e-9).unwrap();
        assert!(!report.pass);
        assert!(report.objective_residual_rel > 1e-3);
    }

    #[test]
    fn non_optimal_member_is_rejected() {
        let net = two_gen_net();
        let lp = build_timestep_lp(&net, &data(&[("n1", 3.0)], &[])).unwrap();
        let template = LpTemplate::from_lp(&lp);
        let bogus = LpSolution {
            status: crate::lp::LpStatus::Infeasible { farkas_row: 0 },
            primal: vec![],
            dual: vec![],
            objective: f64::NAN,
        };
        let active = ActiveSet::new(vec![]);
        assert!(group_bases(&template, &[(lp.rhs, bogus, active)]).is_err());
    }

    #[test]
    fn block_lp_matches_blockwise_solve() {
        let net = two_gen_net();
        let (mut bs, _, _) = grouped(&net, &[3.0, 4.0, 8.0, 12.0]);
        let agg = solve_aggregated(&mut bs).unwrap();

        let big = build_aggregated_lp(&bs);
        assert_eq!(big.cost, vec![2.0, 20.0, 2.0, 20.0]);
        assert_eq!(big.matrix.rows(), 6);
        assert_eq!(big.matrix.cols(), 4);
        let sol = solve_lp(&big).unwrap();
        assert!((sol.objective - agg.objective).abs() < 1e-12);
    }

    #[test]
    fn mass_conservation() {
        let net = two_gen_net();
        let demands = [3.0, 4.0, 8.0, 12.0, 2.0, 9.5];
        let (bs, _, _) = grouped(&net, &demands);
        let total_weight: usize = bs.groups.iter().map(|g| g.weight).sum();
        assert_eq!(total_weight, demands.len());

        let mut weighted_centroid_demand = 0.0;
        for g in &bs.groups {
            weighted_centroid_demand += g.weight as f64 * g.centroid[2];
        }
        let raw_sum: f64 = demands.iter().sum();
        assert!((weighted_centroid_demand - raw_sum).abs() < 1e-12);
    }

    #[test]
    fn dual_scaling_matches_members() {
        let net = two_gen_net();
        let (mut bs, _, _) = grouped(&net, &[8.0, 12.0]);
        let agg = solve_aggregated(&mut bs).unwrap();
        // dual_rep is W * member dual, and equals the aggregated block dual
        for (g, ab) in bs.groups.iter().zip(&agg.per_basis) {
            for (a, b) in g.dual_rep.iter().zip(&ab.dual_scaled) {
                assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
            }
        }
    }
}
