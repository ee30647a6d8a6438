//! Shared test helpers: an LP oracle independent of the simplex path, and a
//! generator of random small transport instances.
#![allow(dead_code)] // each test target uses a different subset
//!
//! The oracle enumerates every candidate vertex (all ways of making N of the
//! M + N constraints tight), keeps the feasible ones, and takes the cheapest.
//! Duals are recovered from the tight set by solving the stationarity
//! conditions and are verified against the KKT conditions before being
//! returned, so oracle duals are trustworthy whenever present.

use basemerge::linalg::{dot, lu_solve, DenseMatrix};
use basemerge::lp::{LpStandardForm, RowKind};
use basemerge::transport::{Generator, Line, NetworkModel, TimestepData};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub objective: f64,
    pub primal: Vec<f64>,
    /// verified KKT duals; `None` when the vertex is degenerate enough that
    /// the square stationarity system does not determine them
    pub dual: Option<Vec<f64>>,
}

/// Brute-force optimum by vertex enumeration; `None` means no feasible
/// vertex, i.e. an infeasible (or empty) polytope for bounded problems.
pub fn oracle_solve(lp: &LpStandardForm) -> Option<OracleSolution> {
    let n = lp.n_vars();
    let m = lp.n_rows();
    let total = m + n;
    assert!(n <= 6 && total <= 24, "oracle is for tiny instances");

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut chosen = Vec::with_capacity(n);
    enumerate_combinations(total, n, &mut chosen, &mut |combo| {
        let mut rows = Vec::with_capacity(n);
        let mut rhs = Vec::with_capacity(n);
        for &c in combo {
            if c < m {
                rows.push(lp.matrix.row(c).to_vec());
                rhs.push(lp.rhs[c]);
            } else {
                let mut r = vec![0.0; n];
                r[c - m] = 1.0;
                rows.push(r);
                rhs.push(0.0);
            }
        }
        let Some(x) = lu_solve(&DenseMatrix::from_rows(&rows), &rhs) else {
            return;
        };
        if !is_feasible(lp, &x) {
            return;
        }
        let obj = dot(&lp.cost, &x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b - 1e-12) {
            best = Some((obj, x));
        }
    });

    let (objective, primal) = best?;
    let dual = oracle_duals(lp, &primal, objective);
    Some(OracleSolution {
        objective,
        primal,
        dual,
    })
}

fn enumerate_combinations(
    total: usize,
    pick: usize,
    chosen: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if chosen.len() == pick {
        f(chosen);
        return;
    }
    let start = chosen.last().map_or(0, |&c| c + 1);
    let remaining = pick - chosen.len();
    for c in start..=total.saturating_sub(remaining) {
        chosen.push(c);
        enumerate_combinations(total, pick, chosen, f);
        chosen.pop();
    }
}

fn is_feasible(lp: &LpStandardForm, x: &[f64]) -> bool {
    if x.iter().any(|&v| v < -FEAS_TOL) {
        return false;
    }
    let ax = lp.matrix.mul_vec(x);
    ax.iter()
        .zip(&lp.rhs)
        .zip(&lp.row_kinds)
        .all(|((&lhs, &b), kind)| {
            let tol = FEAS_TOL * b.abs().max(1.0);
            match kind {
                RowKind::LessEqual => lhs <= b + tol,
                RowKind::Equal => (lhs - b).abs() <= tol,
            }
        })
}

/// Recover duals from the tight set at an optimal vertex and verify them.
fn oracle_duals(lp: &LpStandardForm, x: &[f64], objective: f64) -> Option<Vec<f64>> {
    let n = lp.n_vars();
    let m = lp.n_rows();
    let ax = lp.matrix.mul_vec(x);
    let tight_rows: Vec<usize> = (0..m)
        .filter(|&i| (ax[i] - lp.rhs[i]).abs() <= 1e-7 * lp.rhs[i].abs().max(1.0))
        .collect();
    let interior_vars: Vec<usize> = (0..n).filter(|&j| x[j] > 1e-7).collect();
    if tight_rows.len() != interior_vars.len() {
        return None; // over/under-determined: degenerate vertex
    }
    if tight_rows.is_empty() {
        return Some(vec![0.0; m]);
    }

    // stationarity on interior variables: sum_i A_ij y_i = c_j
    let k = tight_rows.len();
    let mut sys = DenseMatrix::zeros(k, k);
    let mut rhs = Vec::with_capacity(k);
    for (r, &j) in interior_vars.iter().enumerate() {
        for (c, &i) in tight_rows.iter().enumerate() {
            sys.set(r, c, lp.matrix.get(i, j));
        }
        rhs.push(lp.cost[j]);
    }
    let y_tight = lu_solve(&sys, &rhs)?;
    let mut dual = vec![0.0; m];
    for (&i, &y) in tight_rows.iter().zip(&y_tight) {
        dual[i] = y;
    }

    // verify: sign structure, reduced costs, strong duality
    for i in 0..m {
        if lp.row_kinds[i] == RowKind::LessEqual && dual[i] > 1e-7 {
            return None;
        }
    }
    for j in 0..n {
        let rc = lp.cost[j] - (0..m).map(|i| dual[i] * lp.matrix.get(i, j)).sum::<f64>();
        if rc < -1e-7 * lp.cost[j].abs().max(1.0) {
            return None;
        }
    }
    let gap = (dot(&lp.rhs, &dual) - objective).abs();
    if gap > 1e-7 * objective.abs().max(1.0) {
        return None;
    }
    Some(dual)
}

// ---------------------------------------------------------------------------
// random transport instances
// ---------------------------------------------------------------------------

pub struct RandomInstance {
    pub net: NetworkModel,
    pub steps: Vec<TimestepData>,
}

/// A random 2-4 node transport network with strictly positive nodal demands
/// and a backstop generator per node, so every time step is feasible.
pub fn random_instance(seed: u64, horizon: usize) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nodes: usize = rng.random_range(2..=4);
    let nodes: Vec<String> = (0..n_nodes).map(|i| format!("n{i}")).collect();

    let mut generators = Vec::new();
    let mut cf_gen_ids = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        let uses_cf = i == 0; // one weather-driven generator
        let id = format!("g{i}");
        if uses_cf {
            cf_gen_ids.push(id.clone());
        }
        generators.push(Generator {
            id,
            node: node.clone(),
            variable_cost: rng.random_range(2.0..40.0),
            capacity: rng.random_range(25.0..70.0),
            uses_cf_series: uses_cf,
        });
        generators.push(Generator {
            id: format!("backstop{i}"),
            node: node.clone(),
            variable_cost: rng.random_range(900.0..1100.0),
            capacity: 400.0,
            uses_cf_series: false,
        });
    }

    // ring plus one chord, one line per direction
    let mut lines = Vec::new();
    let mut add_corridor = |lines: &mut Vec<Line>, a: usize, b: usize, idx: usize| {
        let capacity = rng.random_range(8.0..45.0);
        let cost = rng.random_range(0.05..0.6);
        lines.push(Line {
            id: format!("l{idx}f"),
            from: format!("n{a}"),
            to: format!("n{b}"),
            capacity,
            transport_cost: cost,
        });
        lines.push(Line {
            id: format!("l{idx}r"),
            from: format!("n{b}"),
            to: format!("n{a}"),
            capacity,
            transport_cost: cost,
        });
    };
    for i in 0..n_nodes {
        let j = (i + 1) % n_nodes;
        if n_nodes > 2 || i == 0 {
            add_corridor(&mut lines, i, j, i);
        }
    }
    if n_nodes == 4 {
        add_corridor(&mut lines, 0, 2, n_nodes);
    }

    let net = NetworkModel {
        nodes: nodes.clone(),
        generators,
        lines,
    };

    let base: Vec<f64> = (0..n_nodes).map(|_| rng.random_range(14.0..40.0)).collect();
    let amp: Vec<f64> = base
        .iter()
        .map(|b| b * rng.random_range(0.2..0.45))
        .collect();
    let phase: Vec<f64> = (0..n_nodes)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let mut cf_walk: f64 = rng.random_range(0.3..0.7);

    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut demand = BTreeMap::new();
        for i in 0..n_nodes {
            let angle = std::f64::consts::TAU * t as f64 / 23.0 + phase[i];
            let noise: f64 = rng.random_range(-0.8..0.8);
            demand.insert(
                nodes[i].clone(),
                (base[i] + amp[i] * angle.sin() + noise).max(0.5),
            );
        }
        let mut capacity_factor = BTreeMap::new();
        cf_walk = (cf_walk + rng.random_range(-0.08..0.08)).clamp(0.05, 0.95);
        for id in &cf_gen_ids {
            capacity_factor.insert(id.clone(), cf_walk);
        }
        steps.push(TimestepData {
            demand,
            capacity_factor,
        });
    }
    RandomInstance { net, steps }
}

/// The two-generator single-node fixture used across the suites:
/// costs (1, 10), caps (5, 100), demands {3, 4, 8, 12}.
pub fn toy_instance() -> RandomInstance {
    let net = NetworkModel {
        nodes: vec!["n1".into()],
        generators: vec![
            Generator {
                id: "g1".into(),
                node: "n1".into(),
                variable_cost: 1.0,
                capacity: 5.0,
                uses_cf_series: false,
            },
            Generator {
                id: "g2".into(),
                node: "n1".into(),
                variable_cost: 10.0,
                capacity: 100.0,
                uses_cf_series: false,
            },
        ],
        lines: vec![],
    };
    let steps = [3.0, 4.0, 8.0, 12.0]
        .iter()
        .map(|&d| TimestepData {
            demand: [("n1".to_string(), d)].into_iter().collect(),
            capacity_factor: BTreeMap::new(),
        })
        .collect();
    RandomInstance { net, steps }
}
