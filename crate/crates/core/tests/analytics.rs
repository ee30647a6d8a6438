//! The analytical misclassification cost audited against re-solving, on
//! families where the host conjecture provably holds: densely sampled
//! one-dimensional demand sweeps, where every merged centroid lands inside
//! the sampled range and therefore inside an observed basis.

mod common;

use basemerge::io::analyze;
use basemerge::merging::{com_partition, solve_merged, verify_hosts, Partition};
use basemerge::transport::{Generator, NetworkModel, TimestepData};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn sweep_instance(
    costs: &[f64],
    caps: &[f64],
    max_demand: f64,
    steps: usize,
) -> common::RandomInstance {
    let net = NetworkModel {
        nodes: vec!["n1".into()],
        generators: costs
            .iter()
            .zip(caps)
            .enumerate()
            .map(|(i, (&c, &cap))| Generator {
                id: format!("g{i}"),
                node: "n1".into(),
                variable_cost: c,
                capacity: cap,
                uses_cf_series: false,
            })
            .collect(),
        lines: vec![],
    };
    let steps = (0..steps)
        .map(|t| {
            let d = max_demand * (t as f64 + 0.5) / steps as f64;
            TimestepData {
                demand: [("n1".to_string(), d)].into_iter().collect(),
                capacity_factor: BTreeMap::new(),
            }
        })
        .collect();
    common::RandomInstance { net, steps }
}

/// Random partition of `n` ids driven by a seed vector.
fn random_partition(n: usize, labels: &[usize]) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of_label: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let label = labels[i % labels.len()] % (blocks.len() + 1);
        let idx = *block_of_label.entry(label).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[idx].push(i);
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// On a dense 1-D sweep the analytical cost of any partition equals the
    /// re-solved objective gap to machine precision.
    #[test]
    fn analytic_com_equals_resolve(
        stack_costs in proptest::collection::vec(1.0..60.0f64, 2..5),
        labels in proptest::collection::vec(0usize..5, 8),
    ) {
        let caps: Vec<f64> = stack_costs.iter().map(|_| 10.0).collect();
        let total_cap: f64 = caps.iter().sum();
        let inst = sweep_instance(&stack_costs, &caps, total_cap * 0.97, 60);
        let analysis = analyze(inst.net, inst.steps).unwrap();
        let bs = &analysis.bases;
        prop_assume!(bs.n_bases() >= 2);

        let sets = random_partition(bs.n_bases(), &labels);
        let mut partition = Partition::from_id_sets(&sets, bs).unwrap();
        let eval = com_partition(&mut partition, bs);
        let resolved = solve_merged(&partition, bs).unwrap();
        let resolved_com = eval.ov_identity - resolved.objective;
        let tol = 1e-8 * eval.ov_identity.abs().max(1.0);
        prop_assert!(
            (eval.com - resolved_com).abs() <= tol,
            "analytic {} vs resolved {}, partition {:?}",
            eval.com, resolved_com, sets
        );
    }

    /// Host argmin equals the basis of the solved centroid on every pairwise
    /// merge of a dense sweep.
    #[test]
    fn host_conjecture_on_dense_sweeps(
        stack_costs in proptest::collection::vec(1.0..60.0f64, 2..4),
    ) {
        let caps: Vec<f64> = stack_costs.iter().map(|_| 10.0).collect();
        let total_cap: f64 = caps.iter().sum();
        let inst = sweep_instance(&stack_costs, &caps, total_cap * 0.97, 80);
        let analysis = analyze(inst.net, inst.steps).unwrap();
        let bs = &analysis.bases;
        prop_assume!(bs.n_bases() >= 2);

        for i in 0..bs.n_bases() {
            for j in i + 1..bs.n_bases() {
                let mut sets: Vec<Vec<usize>> =
                    (0..bs.n_bases()).map(|b| vec![b]).collect();
                sets.retain(|s| s[0] != i && s[0] != j);
                sets.push(vec![i, j]);
                let mut partition = Partition::from_id_sets(&sets, bs).unwrap();
                com_partition(&mut partition, bs);
                let audits = verify_hosts(&mut partition, bs).unwrap();
                for audit in audits {
                    prop_assert!(audit.agrees, "merge ({i},{j}): {audit:?}");
                }
            }
        }
    }
}

#[test]
fn toy_end_to_end_values() {
    let inst = common::toy_instance();
    let analysis = analyze(inst.net, inst.steps).unwrap();
    assert_eq!(analysis.bases.n_bases(), 2);
    assert!((analysis.full_objective - 117.0).abs() < 1e-12);
    assert!((analysis.aggregated.objective - 117.0).abs() < 1e-12);

    let mut pair = Partition::from_id_sets(&[vec![0, 1]], &analysis.bases).unwrap();
    let eval = com_partition(&mut pair, &analysis.bases);
    let resolved = solve_merged(&pair, &analysis.bases).unwrap();
    assert!((resolved.objective - 90.0).abs() < 1e-12);
    assert!((eval.com - 27.0).abs() < 1e-12);
    assert!((eval.ov_identity - resolved.objective - 27.0).abs() < 1e-12);
}
