//! Dense LP solving with dual values and active-set extraction.
//!
//! Problems are `min c'x  s.t.  A x (<=|=) b,  x >= 0`. The solver reports,
//! for optimal instances, the primal vector, the row duals, and the objective.
//! Row duals follow the sensitivity convention `y_i = d(OV)/d(b_i)`: duals of
//! binding `<=` rows are nonpositive (raising the right-hand side relaxes the
//! constraint of a minimization), equality-row duals are free, and strong
//! duality reads `b'y = c'x`. A `>=` constraint encoded as a negated `<=` row
//! therefore carries the negated dual of the original orientation.

mod simplex;

use crate::error::Error;
use crate::linalg::{dot, DenseMatrix};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Feasibility tolerance (mixed absolute/relative).
pub const TOL_FEAS: f64 = 1e-9;
/// Tightness tolerance for active-set extraction.
pub const TOL_ACTIVE: f64 = 1e-7;
/// Strong-duality gap tolerance (relative to the objective scale).
pub const TOL_DUALITY: f64 = 1e-8;

/// Orientation of one constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    /// `A_i x <= b_i`
    LessEqual,
    /// `A_i x = b_i`
    Equal,
}

/// A minimization LP in the shared-matrix shape: `min c'x, A x (<=|=) b, x >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpStandardForm {
    /// Objective coefficients, length N.
    pub cost: Vec<f64>,
    /// Constraint matrix, M x N.
    pub matrix: DenseMatrix,
    /// Right-hand side, length M.
    pub rhs: Vec<f64>,
    /// Per-row orientation, length M.
    pub row_kinds: Vec<RowKind>,
}

impl LpStandardForm {
    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Check dimension consistency and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.matrix.cols() != self.cost.len() {
            return Err(Error::Validation(format!(
                "matrix has {} columns but cost has {} entries",
                self.matrix.cols(),
                self.cost.len()
            )));
        }
        if self.matrix.rows() != self.rhs.len() || self.row_kinds.len() != self.rhs.len() {
            return Err(Error::Validation(format!(
                "matrix has {} rows but rhs/row_kinds have {}/{}",
                self.matrix.rows(),
                self.rhs.len(),
                self.row_kinds.len()
            )));
        }
        if !self.matrix.is_finite()
            || self.cost.iter().any(|v| !v.is_finite())
            || self.rhs.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Validation("non-finite coefficient".into()));
        }
        Ok(())
    }
}

/// Solve outcome. Certificates ride along with the non-optimal statuses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    /// `farkas_row` indexes a constraint row witnessing infeasibility.
    Infeasible {
        farkas_row: usize,
    },
    /// `ray` is a direction in x-space along which the objective decreases
    /// without bound while staying feasible.
    Unbounded {
        ray: Vec<f64>,
    },
}

/// Result of one solve. `primal`, `dual`, and `objective` are only meaningful
/// when `status` is [`LpStatus::Optimal`]; otherwise they are empty / NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, LpStatus::Optimal)
    }
}

/// The set of constraints satisfied with equality at an optimum, as a sorted
/// list of row indices. Indices `< M` are matrix rows; index `M + j` means the
/// bound `x_j >= 0` is tight.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
}

impl ActiveSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        ActiveSet { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.indices.binary_search(&row).is_ok()
    }

    /// Size of the symmetric difference with another active set.
    pub fn symmetric_difference_len(&self, other: &ActiveSet) -> usize {
        let mut count = 0;
        let (mut i, mut j) = (0, 0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => {
                    count += 1;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    count += 1;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        count + (self.indices.len() - i) + (other.indices.len() - j)
    }
}

impl std::fmt::Display for ActiveSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, idx) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, "}}")
    }
}

/// Solve `lp` to optimality with a deterministic pivot order.
///
/// Identical inputs produce bit-identical outputs. Infeasibility and
/// unboundedness are reported through [`LpStatus`]; only a tripped pivot
/// guard is an `Err`.
pub fn solve_lp(lp: &LpStandardForm) -> Result<LpSolution> {
    lp.validate()?;
    simplex::solve(lp)
}

/// Rows (and variable bounds, offset by M) satisfied with equality at `sol`.
///
/// Row `i` is active iff `|A_i x - b_i| <= tol_active * max(1, |b_i|)`;
/// the bound row `M + j` is active iff `|x_j| <= tol_active`. Equality rows
/// are always included.
pub fn extract_active_set(
    lp: &LpStandardForm,
    sol: &LpSolution,
    tol_active: f64,
) -> Result<ActiveSet> {
    if !sol.is_optimal() {
        return Err(Error::Contract(
            "active set requested from a non-optimal solution".into(),
        ));
    }
    let m = lp.n_rows();
    let mut indices = Vec::new();
    let ax = lp.matrix.mul_vec(&sol.primal);
    for i in 0..m {
        let tight = (ax[i] - lp.rhs[i]).abs() <= tol_active * lp.rhs[i].abs().max(1.0);
        if tight || lp.row_kinds[i] == RowKind::Equal {
            indices.push(i);
        }
    }
    for (j, &xj) in sol.primal.iter().enumerate() {
        if xj.abs() <= tol_active {
            indices.push(m + j);
        }
    }
    Ok(ActiveSet::new(indices))
}

/// Reduced costs `c_j - (A' y)_j` for a dual vector `y`.
pub fn reduced_costs(lp: &LpStandardForm, dual: &[f64]) -> Vec<f64> {
    let n = lp.n_vars();
    let mut rc = lp.cost.clone();
    for i in 0..lp.n_rows() {
        let yi = dual[i];
        if yi == 0.0 {
            continue;
        }
        let row = lp.matrix.row(i);
        for j in 0..n {
            rc[j] -= yi * row[j];
        }
    }
    rc
}

/// Full optimality audit: primal feasibility, dual feasibility, row-wise
/// complementary slackness, and a strong-duality gap within
/// `tol * max(1, |c'x|)`.
pub fn verify_strong_duality(lp: &LpStandardForm, sol: &LpSolution, tol: f64) -> bool {
    if !sol.is_optimal() {
        return false;
    }
    let primal_obj = dot(&lp.cost, &sol.primal);
    let dual_obj = dot(&lp.rhs, &sol.dual);
    let scale = primal_obj.abs().max(1.0);
    if (primal_obj - dual_obj).abs() > tol * scale {
        return false;
    }

    // primal feasibility
    let ax = lp.matrix.mul_vec(&sol.primal);
    for i in 0..lp.n_rows() {
        let slack = lp.rhs[i] - ax[i];
        let row_tol = TOL_FEAS * lp.rhs[i].abs().max(1.0);
        match lp.row_kinds[i] {
            RowKind::LessEqual => {
                if slack < -row_tol {
                    return false;
                }
                // dual sign and complementary slackness
                if sol.dual[i] > tol || (sol.dual[i] * slack).abs() > tol * scale {
                    return false;
                }
            }
            RowKind::Equal => {
                if slack.abs() > row_tol {
                    return false;
                }
            }
        }
    }
    if sol.primal.iter().any(|&x| x < -TOL_FEAS) {
        return false;
    }

    // dual feasibility and variable-level complementarity
    let rc = reduced_costs(lp, &sol.dual);
    for (j, (&r, &x)) in rc.iter().zip(&sol.primal).enumerate() {
        let ctol = tol * lp.cost[j].abs().max(1.0);
        if r < -ctol {
            return false;
        }
        if (r * x).abs() > tol * scale.max(sol.primal[j].abs()) {
            return false;
        }
    }
    true
}

/// A tight-row count exceeding the variable count marks a degenerate vertex.
pub fn is_primal_degenerate(active: &ActiveSet, n_vars: usize) -> bool {
    active.len() > n_vars
}

/// A nonbasic variable with (near-)zero reduced cost signals alternative
/// optima; the aggregation theorems assume this does not happen.
pub fn is_dual_degenerate(lp: &LpStandardForm, sol: &LpSolution) -> bool {
    let rc = reduced_costs(lp, &sol.dual);
    rc.iter()
        .zip(&sol.primal)
        .any(|(&r, &x)| x.abs() <= TOL_ACTIVE && r.abs() <= TOL_ACTIVE * lp_cost_scale(lp))
}

fn lp_cost_scale(lp: &LpStandardForm) -> f64 {
    lp.cost.iter().fold(1.0_f64, |a, &c| a.max(c.abs()))
}
