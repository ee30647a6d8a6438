//! Two-phase primal simplex on a dense tableau.
//!
//! Slack variables turn `<=` rows into equations; rows with negative
//! right-hand side are sign-flipped; equality rows and flipped rows get
//! artificial variables that phase 1 drives to zero. Phase 2 prices with a
//! steepest-edge-style rule and falls back to Bland's rule after a run of
//! degenerate pivots, so the solve always terminates. Once the optimal basis
//! is known, primal and dual vectors are recomputed from a fresh LU
//! factorization of the basis matrix rather than read off the pivoted
//! tableau, which keeps accumulated rounding out of the reported solution.

use super::{LpSolution, LpStandardForm, LpStatus, RowKind};
use crate::error::Error;
use crate::linalg::{dot, lu_solve, DenseMatrix};
use crate::Result;

/// Pivot eligibility threshold for tableau entries.
const EPS_PIVOT: f64 = 1e-9;
/// A ratio-test step below this is a degenerate pivot.
const EPS_DEGENERATE: f64 = 1e-11;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const BLAND_AFTER: usize = 32;

pub(super) fn solve(lp: &LpStandardForm) -> Result<LpSolution> {
    let n = lp.n_vars();
    let m = lp.n_rows();

    if m == 0 {
        // only x >= 0 remains; the optimum is the origin unless a cost is negative
        if let Some(j) = lp.cost.iter().position(|&c| c < 0.0) {
            let mut ray = vec![0.0; n];
            ray[j] = 1.0;
            return Ok(not_optimal(LpStatus::Unbounded { ray }));
        }
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            primal: vec![0.0; n],
            dual: vec![],
            objective: 0.0,
        });
    }

    let mut t = Tableau::new(lp);

    if t.has_artificials() {
        t.run(Phase::One)?;
        let infeas = t.phase1_residual();
        if infeas > super::TOL_FEAS * t.rhs_scale.max(1.0) {
            let farkas_row = t.worst_artificial_row();
            return Ok(not_optimal(LpStatus::Infeasible { farkas_row }));
        }
        t.expel_artificials();
    }

    match t.run(Phase::Two)? {
        RunOutcome::Optimal => Ok(t.extract(lp)),
        RunOutcome::Unbounded { entering } => {
            let ray = t.unbounded_ray(entering, n);
            Ok(not_optimal(LpStatus::Unbounded { ray }))
        }
    }
}

fn not_optimal(status: LpStatus) -> LpSolution {
    LpSolution {
        status,
        primal: vec![],
        dual: vec![],
        objective: f64::NAN,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

enum RunOutcome {
    Optimal,
    Unbounded { entering: usize },
}

struct Tableau {
    m: usize,
    /// structural variable count
    n: usize,
    /// total column count (structural + slack + artificial)
    v: usize,
    /// first artificial column, == v when there are none
    art_start: usize,
    /// m rows by (v + 1) columns, last column is the rhs
    tab: Vec<f64>,
    /// basic column of each row
    basic: Vec<usize>,
    is_basic: Vec<bool>,
    /// row sign relative to the input (flipped to make rhs nonnegative)
    flipped: Vec<bool>,
    /// rows found linearly dependent in phase 1 are excluded from pivoting
    row_active: Vec<bool>,
    /// phase-1 and phase-2 reduced-cost rows
    d1: Vec<f64>,
    d2: Vec<f64>,
    /// pricing threshold scales
    cost_scale: f64,
    rhs_scale: f64,
    consecutive_degenerate: usize,
    bland: bool,
}

impl Tableau {
    fn new(lp: &LpStandardForm) -> Self {
        let m = lp.n_rows();
        let n = lp.n_vars();
        let n_slack = lp
            .row_kinds
            .iter()
            .filter(|k| **k == RowKind::LessEqual)
            .count();

        // A slack on a non-flipped <= row can start basic; every other row
        // needs an artificial.
        let flipped: Vec<bool> = lp.rhs.iter().map(|&b| b < 0.0).collect();
        let needs_art: Vec<bool> = (0..m)
            .map(|i| flipped[i] || lp.row_kinds[i] == RowKind::Equal)
            .collect();
        let n_art = needs_art.iter().filter(|&&x| x).count();

        let art_start = n + n_slack;
        let v = art_start + n_art;
        let width = v + 1;
        let mut tab = vec![0.0; m * width];
        let mut basic = vec![usize::MAX; m];
        let mut is_basic = vec![false; v];

        let mut slack_idx = n;
        let mut art_idx = art_start;
        for i in 0..m {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            let row = &mut tab[i * width..(i + 1) * width];
            for j in 0..n {
                row[j] = sign * lp.matrix.get(i, j);
            }
            row[v] = sign * lp.rhs[i];
            if lp.row_kinds[i] == RowKind::LessEqual {
                row[slack_idx] = sign;
                if !needs_art[i] {
                    basic[i] = slack_idx;
                    is_basic[slack_idx] = true;
                }
                slack_idx += 1;
            }
            if needs_art[i] {
                row[art_idx] = 1.0;
                basic[i] = art_idx;
                is_basic[art_idx] = true;
                art_idx += 1;
            }
        }

        // canonical phase-1 costs: minimize the sum of artificials
        let mut d1 = vec![0.0; v];
        if n_art > 0 {
            for i in 0..m {
                if basic[i] >= art_start {
                    let row = &tab[i * width..(i + 1) * width];
                    for j in 0..v {
                        d1[j] -= row[j];
                    }
                }
            }
            for j in art_start..v {
                d1[j] += 1.0;
            }
        }

        // phase-2 costs are already canonical: every initial basic column has cost 0
        let mut d2 = vec![0.0; v];
        d2[..n].copy_from_slice(&lp.cost);

        let cost_scale = lp.cost.iter().fold(1.0_f64, |a, &c| a.max(c.abs()));
        let rhs_scale = lp.rhs.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));

        Tableau {
            m,
            n,
            v,
            art_start,
            tab,
            basic,
            is_basic,
            flipped,
            row_active: vec![true; m],
            d1,
            d2,
            cost_scale,
            rhs_scale,
            consecutive_degenerate: 0,
            bland: false,
        }
    }

    #[inline]
    fn width(&self) -> usize {
        self.v + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.tab[r * self.width() + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.v)
    }

    fn has_artificials(&self) -> bool {
        self.art_start < self.v
    }

    fn run(&mut self, phase: Phase) -> Result<RunOutcome> {
        let max_iter = 1000 + 200 * (self.m + self.v);
        let eps_in = match phase {
            Phase::One => 1e-9,
            Phase::Two => 1e-9 * self.cost_scale,
        };
        for _ in 0..max_iter {
            let entering = match self.choose_entering(phase, eps_in) {
                Some(j) => j,
                None => return Ok(RunOutcome::Optimal),
            };
            let leaving = match self.choose_leaving(entering) {
                Some(r) => r,
                None => {
                    if phase == Phase::One {
                        // the phase-1 objective is bounded below by zero
                        return Err(Error::SolverFailure(
                            "phase-1 unbounded; numerical breakdown".into(),
                        ));
                    }
                    return Ok(RunOutcome::Unbounded { entering });
                }
            };
            self.pivot(leaving, entering);
        }
        Err(Error::SolverFailure(format!(
            "pivot limit {max_iter} exceeded"
        )))
    }

    fn choose_entering(&self, phase: Phase, eps_in: f64) -> Option<usize> {
        let d = match phase {
            Phase::One => &self.d1,
            Phase::Two => &self.d2,
        };
        let allow_art = phase == Phase::One;
        let limit = if allow_art { self.v } else { self.art_start };

        if self.bland {
            return (0..limit).find(|&j| !self.is_basic[j] && d[j] < -eps_in);
        }

        // steepest-edge-style: favor large rate of descent per unit step in
        // the full space, |d_j|^2 / (1 + ||column_j||^2)
        let mut best: Option<(usize, f64)> = None;
        for j in 0..limit {
            if self.is_basic[j] || d[j] >= -eps_in {
                continue;
            }
            let mut norm_sq = 1.0;
            for i in 0..self.m {
                if self.row_active[i] {
                    let a = self.at(i, j);
                    norm_sq += a * a;
                }
            }
            let score = d[j] * d[j] / norm_sq;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Ratio test over active rows; ties go to the smallest basic index so the
    /// Bland fallback stays anti-cycling.
    fn choose_leaving(&self, entering: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            if !self.row_active[i] {
                continue;
            }
            let a = self.at(i, entering);
            if a <= EPS_PIVOT {
                continue;
            }
            let ratio = self.rhs(i) / a;
            let better = match best {
                None => true,
                Some((bi, br)) => {
                    ratio < br - EPS_DEGENERATE
                        || (ratio < br + EPS_DEGENERATE && self.basic[i] < self.basic[bi])
                }
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width();
        let step = self.rhs(row) / self.at(row, col);
        if step.abs() <= EPS_DEGENERATE {
            self.consecutive_degenerate += 1;
            if self.consecutive_degenerate > BLAND_AFTER {
                self.bland = true;
            }
        } else {
            self.consecutive_degenerate = 0;
        }

        let pivot = self.at(row, col);
        let inv = 1.0 / pivot;
        for c in 0..width {
            self.tab[row * width + c] *= inv;
        }
        self.tab[row * width + col] = 1.0; // exact

        for r in 0..self.m {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor == 0.0 {
                continue;
            }
            for c in 0..width {
                self.tab[r * width + c] -= factor * self.tab[row * width + c];
            }
            self.tab[r * width + col] = 0.0; // exact
        }
        for d in [&mut self.d1, &mut self.d2] {
            let factor = d[col];
            if factor != 0.0 {
                for c in 0..self.v {
                    d[c] -= factor * self.tab[row * width + c];
                }
                d[col] = 0.0;
            }
        }

        self.is_basic[self.basic[row]] = false;
        self.is_basic[col] = true;
        self.basic[row] = col;
    }

    /// Sum of artificial basic values after phase 1.
    fn phase1_residual(&self) -> f64 {
        (0..self.m)
            .filter(|&i| self.row_active[i] && self.basic[i] >= self.art_start)
            .map(|i| self.rhs(i).max(0.0))
            .sum()
    }

    /// Row of the largest stuck artificial, as an infeasibility certificate.
    fn worst_artificial_row(&self) -> usize {
        (0..self.m)
            .filter(|&i| self.basic[i] >= self.art_start)
            .max_by(|&a, &b| {
                self.rhs(a)
                    .partial_cmp(&self.rhs(b))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0)
    }

    /// Pivot zero-valued artificials out of the basis; rows where no
    /// structural or slack column has a usable entry are linearly dependent
    /// and get deactivated.
    fn expel_artificials(&mut self) {
        for i in 0..self.m {
            if self.basic[i] < self.art_start {
                continue;
            }
            let mut pivot_col = None;
            let mut best = 0.0_f64;
            for j in 0..self.art_start {
                if self.is_basic[j] {
                    continue;
                }
                let a = self.at(i, j).abs();
                if a > best.max(1e-7) {
                    best = a;
                    pivot_col = Some(j);
                }
            }
            match pivot_col {
                Some(j) => self.pivot(i, j),
                None => {
                    self.is_basic[self.basic[i]] = false;
                    self.row_active[i] = false;
                }
            }
        }
    }

    fn unbounded_ray(&self, entering: usize, n: usize) -> Vec<f64> {
        let mut ray = vec![0.0; n];
        if entering < n {
            ray[entering] = 1.0;
        }
        for i in 0..self.m {
            if self.row_active[i] && self.basic[i] < n {
                ray[self.basic[i]] = -self.at(i, entering);
            }
        }
        ray
    }

    /// Rebuild primal and dual vectors from the final basis with a fresh
    /// factorization of the basis matrix in the original equation system.
    fn extract(&self, lp: &LpStandardForm) -> LpSolution {
        let active_rows: Vec<usize> = (0..self.m).filter(|&i| self.row_active[i]).collect();
        let k = active_rows.len();

        // basis matrix: column per active row's basic variable
        let mut basis = DenseMatrix::zeros(k, k);
        let mut c_basic = vec![0.0; k];
        for (cc, &row_of_col) in active_rows.iter().enumerate() {
            let col = self.basic[row_of_col];
            if col < self.n {
                c_basic[cc] = lp.cost[col];
            }
            for (rr, &i) in active_rows.iter().enumerate() {
                basis.set(rr, cc, self.equation_coeff(lp, i, col));
            }
        }

        let beq: Vec<f64> = active_rows
            .iter()
            .map(|&i| {
                if self.flipped[i] {
                    -lp.rhs[i]
                } else {
                    lp.rhs[i]
                }
            })
            .collect();

        let mut primal = vec![0.0; self.n];
        match lu_solve(&basis, &beq) {
            Some(xb) => {
                for (cc, &row_of_col) in active_rows.iter().enumerate() {
                    let col = self.basic[row_of_col];
                    if col < self.n {
                        primal[col] = xb[cc];
                    }
                }
            }
            None => {
                // singular refinement system; fall back to tableau values
                for &i in &active_rows {
                    if self.basic[i] < self.n {
                        primal[self.basic[i]] = self.rhs(i);
                    }
                }
            }
        }

        // duals: solve B' y = c_B in the flipped system, then undo row flips;
        // deactivated (redundant) rows keep a zero dual
        let mut basis_t = DenseMatrix::zeros(k, k);
        for r in 0..k {
            for c in 0..k {
                basis_t.set(r, c, basis.get(c, r));
            }
        }
        let mut dual = vec![0.0; self.m];
        if let Some(y) = lu_solve(&basis_t, &c_basic) {
            for (rr, &i) in active_rows.iter().enumerate() {
                dual[i] = if self.flipped[i] { -y[rr] } else { y[rr] };
            }
        }

        let objective = dot(&lp.cost, &primal);
        LpSolution {
            status: LpStatus::Optimal,
            primal,
            dual,
            objective,
        }
    }

    /// Coefficient of tableau column `col` in the (flipped) input equations.
    fn equation_coeff(&self, lp: &LpStandardForm, row: usize, col: usize) -> f64 {
        let sign = if self.flipped[row] { -1.0 } else { 1.0 };
        if col < self.n {
            return sign * lp.matrix.get(row, col);
        }
        if col < self.art_start {
            // slack columns in declaration order over <= rows
            let mut idx = self.n;
            for i in 0..self.m {
                if lp.row_kinds[i] == RowKind::LessEqual {
                    if idx == col {
                        return if i == row { sign } else { 0.0 };
                    }
                    idx += 1;
                }
            }
            0.0
        } else {
            // artificial columns in declaration order over rows that needed them
            let mut idx = self.art_start;
            for i in 0..self.m {
                if self.flipped[i] || lp.row_kinds[i] == RowKind::Equal {
                    if idx == col {
                        return if i == row { 1.0 } else { 0.0 };
                    }
                    idx += 1;
                }
            }
            0.0
        }
    }
}
