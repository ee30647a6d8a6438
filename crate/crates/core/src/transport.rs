//! The optimal electricity transport problem, built as one LP per time step.
//!
//! Variables are generator outputs `p_g` followed by directed line flows
//! `f_l`. Rows are generator capacity bounds (`p_g <= P_g * CF_{g,t}`), flow
//! capacity bounds (`f_l <= F_l`), and nodal balances
//! (`sum of generation at n + inflows - outflows = D_{n,t}`), in that order.
//! The matrix and cost vector depend only on the network, so across time
//! steps only the right-hand side varies and active sets are comparable
//! row-for-row.

use crate::error::Error;
use crate::linalg::{dot, DenseMatrix};
use crate::lp::{LpStandardForm, RowKind};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub node: String,
    /// money per MWh produced
    pub variable_cost: f64,
    /// installed capacity in MW
    pub capacity: f64,
    /// whether `p <= capacity * CF_t` tracks a capacity-factor series;
    /// otherwise CF is fixed to 1
    pub uses_cf_series: bool,
}

/// One directed line; the reverse direction is a separate entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from: String,
    pub to: String,
    pub capacity: f64,
    /// money per MWh transported
    pub transport_cost: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkModel {
    pub nodes: Vec<String>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
}

/// Input data for one time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimestepData {
    /// node id -> MW; omitted nodes have zero demand
    pub demand: BTreeMap<String, f64>,
    /// generator id -> dimensionless factor in [0, 1]; required exactly for
    /// the generators with `uses_cf_series`
    pub capacity_factor: BTreeMap<String, f64>,
}

/// Row/variable positions of the transport LP for one network.
#[derive(Clone, Copy, Debug)]
pub struct RowLayout {
    pub n_gens: usize,
    pub n_lines: usize,
    pub n_nodes: usize,
}

/// What a given constraint row represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowRole {
    GenCapacity(usize),
    FlowCapacity(usize),
    Balance(usize),
}

impl RowLayout {
    pub fn n_vars(&self) -> usize {
        self.n_gens + self.n_lines
    }

    pub fn n_rows(&self) -> usize {
        self.n_gens + self.n_lines + self.n_nodes
    }

    pub fn gen_cap_row(&self, g: usize) -> usize {
        g
    }

    pub fn flow_cap_row(&self, l: usize) -> usize {
        self.n_gens + l
    }

    pub fn balance_row(&self, n: usize) -> usize {
        self.n_gens + self.n_lines + n
    }

    pub fn p_var(&self, g: usize) -> usize {
        g
    }

    pub fn f_var(&self, l: usize) -> usize {
        self.n_gens + l
    }

    pub fn role_of_row(&self, row: usize) -> Option<RowRole> {
        if row < self.n_gens {
            Some(RowRole::GenCapacity(row))
        } else if row < self.n_gens + self.n_lines {
            Some(RowRole::FlowCapacity(row - self.n_gens))
        } else if row < self.n_rows() {
            Some(RowRole::Balance(row - self.n_gens - self.n_lines))
        } else {
            None
        }
    }
}

impl NetworkModel {
    pub fn layout(&self) -> RowLayout {
        RowLayout {
            n_gens: self.generators.len(),
            n_lines: self.lines.len(),
            n_nodes: self.nodes.len(),
        }
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn generator_index(&self, id: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.id == id)
    }

    /// Structural validation: unique ids, resolvable references, sane values.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Validation("network has no nodes".into()));
        }
        if self.generators.is_empty() {
            return Err(Error::Validation("network has no generators".into()));
        }
        let mut dangling = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.clone()) {
                return Err(Error::Validation(format!("duplicate node id `{n}`")));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for g in &self.generators {
            if !ids.insert(format!("gen:{}", g.id)) {
                return Err(Error::Validation(format!(
                    "duplicate generator id `{}`",
                    g.id
                )));
            }
            if self.node_index(&g.node).is_none() {
                dangling.push(format!("generators.{}.node = `{}`", g.id, g.node));
            }
            if !(g.capacity >= 0.0 && g.capacity.is_finite() && g.variable_cost.is_finite()) {
                return Err(Error::Validation(format!(
                    "generator `{}` has invalid capacity or cost",
                    g.id
                )));
            }
        }
        for l in &self.lines {
            if !ids.insert(format!("line:{}", l.id)) {
                return Err(Error::Validation(format!("duplicate line id `{}`", l.id)));
            }
            if self.node_index(&l.from).is_none() {
                dangling.push(format!("lines.{}.from = `{}`", l.id, l.from));
            }
            if self.node_index(&l.to).is_none() {
                dangling.push(format!("lines.{}.to = `{}`", l.id, l.to));
            }
            if l.from == l.to {
                return Err(Error::Validation(format!("line `{}` is a self-loop", l.id)));
            }
            if !(l.capacity >= 0.0 && l.capacity.is_finite() && l.transport_cost.is_finite()) {
                return Err(Error::Validation(format!(
                    "line `{}` has invalid capacity or cost",
                    l.id
                )));
            }
        }
        if !dangling.is_empty() {
            return Err(Error::Validation(format!(
                "unknown node references: {}",
                dangling.join(", ")
            )));
        }
        Ok(())
    }

    /// Check one time step's data against this network.
    pub fn validate_data(&self, data: &TimestepData) -> Result<()> {
        for (node, &d) in &data.demand {
            if self.node_index(node).is_none() {
                return Err(Error::Validation(format!(
                    "demand for unknown node `{node}`"
                )));
            }
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Validation(format!(
                    "negative or non-finite demand at `{node}`"
                )));
            }
        }
        for (gen, &cf) in &data.capacity_factor {
            if self.generator_index(gen).is_none() {
                return Err(Error::Validation(format!(
                    "capacity factor for unknown generator `{gen}`"
                )));
            }
            if !(0.0..=1.0).contains(&cf) {
                return Err(Error::Validation(format!(
                    "capacity factor {cf} for `{gen}` outside [0, 1]"
                )));
            }
        }
        for g in &self.generators {
            if g.uses_cf_series && !data.capacity_factor.contains_key(&g.id) {
                return Err(Error::Validation(format!(
                    "missing capacity factor for generator `{}`",
                    g.id
                )));
            }
        }
        Ok(())
    }

    /// The constant part of the per-time-step LP: cost vector, matrix, row kinds.
    pub fn lp_structure(&self) -> (Vec<f64>, DenseMatrix, Vec<RowKind>) {
        let layout = self.layout();
        let n = layout.n_vars();
        let m = layout.n_rows();

        let mut cost = Vec::with_capacity(n);
        cost.extend(self.generators.iter().map(|g| g.variable_cost));
        cost.extend(self.lines.iter().map(|l| l.transport_cost));

        let mut matrix = DenseMatrix::zeros(m, n);
        let mut kinds = vec![RowKind::LessEqual; m];
        for g in 0..layout.n_gens {
            matrix.set(layout.gen_cap_row(g), layout.p_var(g), 1.0);
        }
        for l in 0..layout.n_lines {
            matrix.set(layout.flow_cap_row(l), layout.f_var(l), 1.0);
        }
        for (ni, node) in self.nodes.iter().enumerate() {
            let row = layout.balance_row(ni);
            kinds[row] = RowKind::Equal;
            for (gi, g) in self.generators.iter().enumerate() {
                if &g.node == node {
                    matrix.set(row, layout.p_var(gi), 1.0);
                }
            }
            for (li, l) in self.lines.iter().enumerate() {
                if &l.to == node {
                    matrix.set(row, layout.f_var(li), 1.0);
                }
                if &l.from == node {
                    matrix.set(row, layout.f_var(li), -1.0);
                }
            }
        }
        (cost, matrix, kinds)
    }

    /// The time-varying right-hand side for one time step.
    pub fn rhs_for(&self, data: &TimestepData) -> Result<Vec<f64>> {
        self.validate_data(data)?;
        let layout = self.layout();
        let mut rhs = vec![0.0; layout.n_rows()];
        for (g, gen) in self.generators.iter().enumerate() {
            let cf = if gen.uses_cf_series {
                data.capacity_factor[&gen.id]
            } else {
                1.0
            };
            rhs[layout.gen_cap_row(g)] = gen.capacity * cf;
        }
        for (l, line) in self.lines.iter().enumerate() {
            rhs[layout.flow_cap_row(l)] = line.capacity;
        }
        for (n, node) in self.nodes.iter().enumerate() {
            rhs[layout.balance_row(n)] = data.demand.get(node).copied().unwrap_or(0.0);
        }
        Ok(rhs)
    }
}

/// Assemble the full LP for one time step.
pub fn build_timestep_lp(net: &NetworkModel, data: &TimestepData) -> Result<LpStandardForm> {
    net.validate()?;
    let (cost, matrix, row_kinds) = net.lp_structure();
    let rhs = net.rhs_for(data)?;
    Ok(LpStandardForm {
        cost,
        matrix,
        rhs,
        row_kinds,
    })
}

/// Evaluate the dual objective
/// `sum_g mu_g * P_g * CF_g + sum_l eta_l * F_l + sum_n lambda_n * D_n`
/// from a row-indexed dual vector. At an optimum this equals the primal
/// objective.
pub fn dual_objective(net: &NetworkModel, duals: &[f64], data: &TimestepData) -> Result<f64> {
    let layout = net.layout();
    if duals.len() != layout.n_rows() {
        return Err(Error::Contract(format!(
            "dual vector has {} entries, expected {}",
            duals.len(),
            layout.n_rows()
        )));
    }
    let rhs = net.rhs_for(data)?;
    Ok(dot(&rhs, duals))
}
