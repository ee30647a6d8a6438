//! Output-error metrics of a merger against the unmerged aggregation, and
//! the CSV renderings of the bases/mergers/counts tables.
//!
//! The objective error is `(sum OV^i - sum OV^k) / sum OV^i`; per-generator
//! errors compare weight-expanded production totals, so the identity
//! partition scores exactly zero everywhere. Values are kept at full
//! precision internally and rounded to two decimals only when rendered.

use crate::aggregation::{BasisGroup, BasisSet};
use crate::error::Error;
use crate::strategies::StrategyTrace;
use crate::transport::{NetworkModel, RowRole};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Signed relative objective error of a merger.
pub fn error_ov(ov_by_basis: &[f64], ov_by_cluster: &[f64]) -> Result<f64> {
    let full: f64 = ov_by_basis.iter().sum();
    let merged: f64 = ov_by_cluster.iter().sum();
    if full == 0.0 {
        return Err(Error::UndefinedMetric(
            "objective error undefined: reference objective is zero".into(),
        ));
    }
    Ok((full - merged) / full)
}

/// Signed relative production error for one generator, from weight-expanded
/// totals. `None` marks an undefined metric (the generator is unused in the
/// reference), which reports render as `n/a`.
pub fn error_generator(prod_by_basis: &[f64], prod_by_cluster: &[f64]) -> Option<f64> {
    let full: f64 = prod_by_basis.iter().sum();
    let merged: f64 = prod_by_cluster.iter().sum();
    if full == 0.0 {
        return None;
    }
    Some((full - merged) / full)
}

/// Weight-expanded production per generator from aligned block primals.
pub fn production_by_generator(
    net: &NetworkModel,
    weights: &[usize],
    block_primals: &[&[f64]],
) -> Vec<Vec<f64>> {
    let layout = net.layout();
    (0..layout.n_gens)
        .map(|g| {
            weights
                .iter()
                .zip(block_primals)
                .map(|(&w, primal)| w as f64 * primal[layout.p_var(g)])
                .collect()
        })
        .collect()
}

/// Human-readable characterization of one basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub congested_lines: Vec<String>,
    pub full_load_generators: Vec<String>,
    /// all candidates; more than one signals a degenerate tie
    pub marginal_generators: Vec<String>,
    /// locational marginal price at `lmp_node`
    pub lmp: f64,
    /// the reported demand node (largest centroid demand)
    pub lmp_node: String,
    pub lmp_by_node: BTreeMap<String, f64>,
}

/// Read congestion, full-load, and marginal structure off a basis.
///
/// The marginal generator is the one with zero reduced cost whose output is
/// strictly between its bounds; if none qualifies (degenerate corner), any
/// zero-reduced-cost generator is reported, and failing that the generator
/// whose cost is closest to the demand-node price.
pub fn describe_basis(bg: &BasisGroup, net: &NetworkModel) -> BasisDescriptor {
    let layout = net.layout();
    let w = bg.weight as f64;
    let m = layout.n_rows();

    let mut congested = Vec::new();
    let mut full_load = Vec::new();
    for &row in &bg.active_set.indices {
        match layout.role_of_row(row) {
            Some(RowRole::FlowCapacity(l)) => congested.push(net.lines[l].id.clone()),
            Some(RowRole::GenCapacity(g)) => full_load.push(net.generators[g].id.clone()),
            _ => {}
        }
    }

    // per-time-step duals; dual_rep carries the weight
    let duals: Vec<f64> = bg.dual_rep.iter().map(|y| y / w).collect();
    let lmp_by_node: BTreeMap<String, f64> = net
        .nodes
        .iter()
        .enumerate()
        .map(|(n, id)| (id.clone(), duals[layout.balance_row(n)]))
        .collect();

    // report the node carrying the largest centroid demand
    let lmp_node = net
        .nodes
        .iter()
        .enumerate()
        .max_by(|(a, _), (b, _)| {
            let da = bg.centroid[layout.balance_row(*a)];
            let db = bg.centroid[layout.balance_row(*b)];
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(_, id)| id.clone())
        .unwrap_or_default();
    let lmp = lmp_by_node.get(&lmp_node).copied().unwrap_or(0.0);

    // reduced costs of the generator variables under the basis duals
    let (cost, matrix, _) = net.lp_structure();
    let mut marginal = Vec::new();
    let mut zero_rc = Vec::new();
    for (g, gen) in net.generators.iter().enumerate() {
        let col = layout.p_var(g);
        let mut rc = cost[col];
        for (row, &y) in duals.iter().enumerate() {
            rc -= y * matrix.get(row, col);
        }
        let rc_zero = rc.abs() <= 1e-7 * gen.variable_cost.abs().max(1.0);
        let at_lower = bg.active_set.contains(m + col);
        let at_cap = bg.active_set.contains(layout.gen_cap_row(g));
        if rc_zero {
            zero_rc.push(gen.id.clone());
            if !at_lower && !at_cap {
                marginal.push(gen.id.clone());
            }
        }
    }
    if marginal.is_empty() {
        marginal = zero_rc;
    }
    if marginal.len() > 1 {
        // several basic generators have zero reduced cost; the one actually
        // pricing the demand node sits within a transport margin of the LMP
        let gap = |id: &String| {
            let g = &net.generators[net.generator_index(id).unwrap()];
            (g.variable_cost - lmp).abs()
        };
        let best = marginal.iter().map(gap).fold(f64::INFINITY, f64::min);
        marginal.retain(|id| gap(id) <= best + 1.0);
    }
    if marginal.is_empty() {
        // price-matching fallback
        let best = net
            .generators
            .iter()
            .min_by(|a, b| {
                (a.variable_cost - lmp)
                    .abs()
                    .partial_cmp(&(b.variable_cost - lmp).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|g| g.id.clone());
        marginal.extend(best);
    }

    BasisDescriptor {
        congested_lines: congested,
        full_load_generators: full_load,
        marginal_generators: marginal,
        lmp,
        lmp_node,
        lmp_by_node,
    }
}

/// Error metrics for one evaluated partition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorReport {
    pub k: usize,
    pub partition: String,
    /// signed relative objective error
    pub eps_ov: f64,
    /// per generator id, `None` when undefined
    pub eps_gen: BTreeMap<String, Option<f64>>,
    /// absolute misclassification cost
    pub com_abs: f64,
    pub ov_identity: f64,
    pub ov_merged: f64,
}

fn fmt2(v: f64) -> String {
    let s = format!("{:.2}", v);
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// `optimal_mergers.csv` body: one row per level, percent errors rounded to
/// two decimals at render time.
pub fn render_optimal_mergers_csv(gen_ids: &[String], reports: &[ErrorReport]) -> String {
    let mut out = String::from("k,partition");
    out.push_str(",eps_ov_pct");
    for g in gen_ids {
        out.push_str(&format!(",eps_{g}_pct"));
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},\"{}\",{}",
            r.k,
            r.partition,
            fmt2(100.0 * r.eps_ov)
        ));
        for g in gen_ids {
            match r.eps_gen.get(g) {
                Some(Some(e)) => out.push_str(&format!(",{}", fmt2(100.0 * e))),
                _ => out.push_str(",n/a"),
            }
        }
        out.push('\n');
    }
    out
}

/// `counts.csv` body: evaluated-merger counts per strategy and cluster count,
/// k descending.
pub fn render_counts_csv(traces: &[&StrategyTrace]) -> String {
    let mut ks: Vec<usize> = traces
        .iter()
        .flat_map(|t| t.levels.iter().map(|l| l.k))
        .collect();
    ks.sort_unstable();
    ks.dedup();
    ks.reverse();

    let mut out = String::from("strategy");
    for k in &ks {
        out.push_str(&format!(",{k}"));
    }
    out.push('\n');
    for t in traces {
        out.push_str(&t.strategy.to_string());
        for k in &ks {
            match t.level(*k) {
                Some(l) => out.push_str(&format!(",{}", l.evaluated)),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// `bases_table.csv` body: one descriptive row per basis.
pub fn render_bases_table_csv(bs: &BasisSet, descriptors: &[BasisDescriptor]) -> String {
    let mut out = String::from("basis,weight,congestion,full_load,marginal_gen,lmp\n");
    for (g, d) in bs.groups.iter().zip(descriptors) {
        out.push_str(&format!(
            "{},{},\"{}\",\"{}\",\"{}\",{}\n",
            g.id + 1,
            g.weight,
            d.congested_lines.join(" "),
            d.full_load_generators.join(" "),
            d.marginal_generators.join(" "),
            fmt2(d.lmp)
        ));
    }
    out
}

/// Write the merger and counts tables into `dir`.
pub fn emit_tables(
    dir: &std::path::Path,
    gen_ids: &[String],
    reports: &[ErrorReport],
    traces: &[&StrategyTrace],
) -> Result<()> {
    let mergers = dir.join("optimal_mergers.csv");
    std::fs::write(&mergers, render_optimal_mergers_csv(gen_ids, reports))
        .map_err(|e| Error::io(mergers.display().to_string(), e))?;
    let counts = dir.join("counts.csv");
    std::fs::write(&counts, render_counts_csv(traces))
        .map_err(|e| Error::io(counts.display().to_string(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::solve_aggregated;
    use crate::aggregation::tests::grouped;
    use crate::merging::{com_partition, solve_merged, Partition};
    use crate::strategies::{exhaustive_strategy, greedy_strategy, DEFAULT_EXHAUSTIVE_CAP};
    use crate::transport::tests::two_gen_net;
    use crate::transport::Generator;

    fn toy() -> (crate::aggregation::BasisSet, crate::transport::NetworkModel) {
        let net = two_gen_net();
        let (mut bs, _, _) = grouped(&net, &[3.0, 4.0, 8.0, 12.0]);
        solve_aggregated(&mut bs).unwrap();
        (bs, net)
    }

    #[test]
    fn error_ov_identity_is_zero() {
        assert_eq!(error_ov(&[7.0, 110.0], &[7.0, 110.0]).unwrap(), 0.0);
    }

    #[test]
    fn error_ov_toy_pair_merge() {
        let e = error_ov(&[7.0, 110.0], &[90.0]).unwrap();
        assert!((e - 27.0 / 117.0).abs() < 1e-12);
    }

    #[test]
    fn error_ov_scaling() {
        let e = error_ov(&[4.0, 6.0], &[2.0, 3.0]).unwrap();
        assert_eq!(e, 0.5);
    }

    #[test]
    fn error_ov_zero_reference_is_undefined() {
        assert!(matches!(
            error_ov(&[0.0], &[1.0]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn error_generator_cases() {
        assert_eq!(error_generator(&[2.0, 3.0], &[2.0, 3.0]), Some(0.0));
        assert_eq!(error_generator(&[0.0], &[0.0]), None);
        // reference uses the generator, merger does not: 100% error
        assert_eq!(error_generator(&[5.0], &[0.0]), Some(1.0));
    }

    #[test]
    fn describe_capped_basis() {
        let (bs, net) = toy();
        // basis 1: demand 10/12 region, generator 1 at its cap
        let d = describe_basis(&bs.groups[1], &net);
        assert_eq!(d.full_load_generators, vec!["g1"]);
        assert_eq!(d.marginal_generators, vec!["g2"]);
        assert!((d.lmp - 10.0).abs() < 1e-9);
        assert!(d.congested_lines.is_empty());
    }

    #[test]
    fn describe_zero_demand_basis() {
        let net = two_gen_net();
        let (mut bs, _, _) = grouped(&net, &[0.0]);
        solve_aggregated(&mut bs).unwrap();
        let d = describe_basis(&bs.groups[0], &net);
        assert!(d.congested_lines.is_empty());
        assert!(d.full_load_generators.is_empty());
        // the cheapest generator prices the next unit
        assert!((d.lmp - 1.0).abs() < 1e-9);
        assert_eq!(d.marginal_generators, vec!["g1"]);
    }

    #[test]
    fn describe_backstop_basis() {
        let mut net = two_gen_net();
        net.generators.push(Generator {
            id: "nsp".into(),
            node: "n1".into(),
            variable_cost: 100.0,
            capacity: 1000.0,
            uses_cf_series: false,
        });
        let (mut bs, _, _) = grouped(&net, &[200.0]);
        solve_aggregated(&mut bs).unwrap();
        let d = describe_basis(&bs.groups[0], &net);
        assert_eq!(d.marginal_generators, vec!["nsp"]);
        assert!((d.lmp - 100.0).abs() < 1e-9);
        assert_eq!(d.full_load_generators, vec!["g1", "g2"]);
    }

    #[test]
    fn eps_ov_equals_com_over_reference() {
        let (bs, _) = toy();
        let mut p = Partition::from_id_sets(&[vec![0, 1]], &bs).unwrap();
        let eval = com_partition(&mut p, &bs);
        let resolved = solve_merged(&p, &bs).unwrap();

        let eps = error_ov(&[eval.ov_identity], &[resolved.objective]).unwrap();
        assert!((eps.abs() * eval.ov_identity.abs() - eval.com.abs()).abs() < 1e-8);
    }

    #[test]
    fn render_identity_row_is_all_zeros() {
        let gen_ids = vec!["g1".to_string(), "g2".to_string()];
        let reports = vec![ErrorReport {
            k: 2,
            partition: "{1},{2}".into(),
            eps_ov: 0.0,
            eps_gen: gen_ids.iter().map(|g| (g.clone(), Some(0.0))).collect(),
            com_abs: 0.0,
            ov_identity: 117.0,
            ov_merged: 117.0,
        }];
        let csv = render_optimal_mergers_csv(&gen_ids, &reports);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,partition,eps_ov_pct,eps_g1_pct,eps_g2_pct"
        );
        assert_eq!(lines.next().unwrap(), "2,\"{1},{2}\",0.00,0.00,0.00");
    }

    #[test]
    fn render_missing_generator_error_as_na() {
        let gen_ids = vec!["g1".to_string()];
        let reports = vec![ErrorReport {
            k: 1,
            partition: "{1}".into(),
            eps_ov: 0.25,
            eps_gen: [("g1".to_string(), None)].into_iter().collect(),
            com_abs: 1.0,
            ov_identity: 4.0,
            ov_merged: 3.0,
        }];
        let csv = render_optimal_mergers_csv(&gen_ids, &reports);
        assert!(csv.contains("25.00,n/a"));
    }

    #[test]
    fn counts_table_layout() {
        let (bs, _) = toy();
        let exh = exhaustive_strategy(&bs, DEFAULT_EXHAUSTIVE_CAP, 1).unwrap();
        let gre = greedy_strategy(&bs, 1).unwrap();
        let csv = render_counts_csv(&[&exh, &gre]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "strategy,2,1");
        assert_eq!(lines[1], "exhaustive,1,1");
        assert_eq!(lines[2], "greedy,1,1");
    }

    #[test]
    fn empty_reports_render_header_only() {
        let csv = render_optimal_mergers_csv(&["g1".to_string()], &[]);
        assert_eq!(csv, "k,partition,eps_ov_pct,eps_g1_pct\n");
        let counts = render_counts_csv(&[]);
        assert_eq!(counts, "strategy\n");
    }

    #[test]
    fn rendering_is_idempotent() {
        let (bs, net) = toy();
        let descriptors: Vec<BasisDescriptor> =
            bs.groups.iter().map(|g| describe_basis(g, &net)).collect();
        let a = render_bases_table_csv(&bs, &descriptors);
        let b = render_bases_table_csv(&bs, &descriptors);
        assert_eq!(a, b);
        assert!(a.starts_with("basis,weight,"));
        assert_eq!(a.lines().count(), 3);
    }

    #[test]
    fn production_tally_weights_blocks() {
        let (bs, net) = toy();
        let p = Partition::identity(&bs);
        let resolved = solve_merged(&p, &bs).unwrap();
        let weights: Vec<usize> = p.clusters.iter().map(|c| c.weight).collect();
        let primals: Vec<&[f64]> = resolved
            .per_cluster
            .iter()
            .map(|s| s.primal.as_slice())
            .collect();
        let prod = production_by_generator(&net, &weights, &primals);
        // g1: 2 * 3.5 + 2 * 5 = 17, g2: 0 + 2 * 5 = 10
        assert!((prod[0].iter().sum::<f64>() - 17.0).abs() < 1e-9);
        assert!((prod[1].iter().sum::<f64>() - 10.0).abs() < 1e-9);
    }
}
