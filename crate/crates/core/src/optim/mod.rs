//! Convex quadratic programs with a diagonal Hessian, plus complementarity
//! constraints handled by branch-and-bound.
//!
//! Problems have the form
//!
//! ```text
//! minimize    Σ quad_i x_i² + linearᵀx + constant
//! subject to  A x ≤ b,  G x = h,  lower ≤ x ≤ upper
//!             min(x_i, x_j) = 0   for every complementarity pair (i, j)
//! ```

mod dump;
mod ipm;
pub(crate) mod linalg;
mod miqp;
mod repair;

pub use dump::{parse_dump, write_dump};
pub use ipm::{solve_qp, IpmSettings};
pub use miqp::{solve_miqp, MiqpSettings};
pub use repair::{repair_simultaneous_flow, RepairOutcome};

/// Rows of a sparse linear system with their right-hand sides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearRows {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
}

impl LinearRows {
    pub fn new() -> Self {
        Self { start: vec![0], ..Default::default() }
    }

    /// Appends a row; repeated columns are summed.
    pub fn push(&mut self, terms: &[(usize, f64)], rhs: f64) {
        if self.start.is_empty() {
            self.start.push(0);
        }
        let begin = self.cols.len();
        for &(c, v) in terms {
            if let Some(k) = self.cols[begin..].iter().position(|&x| x == c) {
                self.vals[begin + k] += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
            }
        }
        self.start.push(self.cols.len());
        self.rhs.push(rhs);
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.start[i], self.start[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Row activities `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, a)| a * x[j]).sum()
            })
            .collect()
    }

    /// Adds `Aᵀ y` into `out`.
    pub fn apply_transpose_add(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.len() {
            let (c, v) = self.row(i);
            for (&j, a) in c.iter().zip(v) {
                out[j] += a * y[i];
            }
        }
    }

    pub(crate) fn max_col(&self) -> Option<usize> {
        self.cols.iter().copied().max()
    }
}

/// State-of-charge chain of one storage unit, used by the repair heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageChain {
    /// Variable indices per period.
    pub periods: Vec<StoragePeriod>,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub step_hours: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Whether the last state of charge is pinned to its current value.
    pub terminal_fixed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoragePeriod {
    pub charge: usize,
    pub discharge: usize,
    pub soc: usize,
    /// PV set-point feeding the same coupling point; curtailing it offsets
    /// a loss-neutral reduction of both flows.
    pub pv: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QpProblem {
    pub quad: Vec<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `A x ≤ b`
    pub ineq: LinearRows,
    /// `G x = h`
    pub eq: LinearRows,
    pub complementarity: Vec<(usize, usize)>,
    pub storage: Vec<StorageChain>,
}

impl QpProblem {
    pub fn new() -> Self {
        Self { ineq: LinearRows::new(), eq: LinearRows::new(), ..Default::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, lower: f64, upper: f64, quad: f64, linear: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.quad.push(quad);
        self.linear.push(linear);
        self.linear.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.ineq.len() + self.eq.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.constant
            + x.iter()
                .zip(self.quad.iter().zip(&self.linear))
                .map(|(x, (q, c))| q * x * x + c * x)
                .sum::<f64>()
    }

    /// Largest violation of rows and bounds, relative to `1 + |rhs|`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.ineq.apply(x).into_iter().enumerate() {
            let b = self.ineq.rhs()[i];
            worst = worst.max((a - b) / (1.0 + b.abs()));
        }
        for (i, a) in self.eq.apply(x).into_iter().enumerate() {
            let h = self.eq.rhs()[i];
            worst = worst.max((a - h).abs() / (1.0 + h.abs()));
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max((self.lower[j] - v) / (1.0 + self.lower[j].abs().min(1e30)));
            worst = worst.max((v - self.upper[j]) / (1.0 + self.upper[j].abs().min(1e30)));
        }
        worst
    }

    /// Largest `min(x_i, x_j)` over the complementarity pairs.
    pub fn complementarity_violation(&self, x: &[f64]) -> f64 {
        self.complementarity.iter().map(|&(i, j)| x[i].min(x[j])).fold(0.0, f64::max)
    }

    /// The same problem without complementarity pairs.
    pub fn relaxation(&self) -> Self {
        let mut out = self.clone();
        out.complementarity.clear();
        out
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        let n = self.num_vars();
        for (what, len) in [
            ("quadratic coefficients", self.quad.len()),
            ("lower bounds", self.lower.len()),
            ("upper bounds", self.upper.len()),
        ] {
            if len != n {
                return Err(Error::Shape { what, expected: n, got: len });
            }
        }
        if self.quad.iter().any(|&q| !(q >= 0.0) || !q.is_finite()) {
            return Err(Error::Input("quadratic coefficients must be finite and >= 0".into()));
        }
        if self.linear.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("linear cost has non-finite entries".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(Error::Input(format!("inconsistent bounds on variable {j}")));
            }
        }
        for rows in [&self.ineq, &self.eq] {
            if rows.max_col().is_some_and(|c| c >= n) {
                return Err(Error::Input("constraint references unknown variable".into()));
            }
            if rows.vals.iter().chain(rows.rhs.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Input("constraint has non-finite entries".into()));
            }
        }
        for &(i, j) in &self.complementarity {
            if i >= n || j >= n || i == j {
                return Err(Error::Input(format!("bad complementarity pair ({i}, {j})")));
            }
            if self.lower[i] < 0.0 || self.lower[j] < 0.0 {
                return Err(Error::Input(format!(
                    "complementarity pair ({i}, {j}) needs non-negative variables"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// The relaxation was made complementary by the repair heuristic
    /// without losing objective value.
    RelaxationOptimalRepaired,
    /// Node limit hit; the best complementary point found is returned.
    NodeLimitIncumbent,
    /// Node limit hit before any complementary point was found.
    NodeLimitNoIncumbent,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(
            self,
            Self::Optimal | Self::RelaxationOptimalRepaired | Self::NodeLimitIncumbent
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::RelaxationOptimalRepaired => "relaxation-optimal-repaired",
            Self::NodeLimitIncumbent => "node-limit-incumbent",
            Self::NodeLimitNoIncumbent => "node-limit-no-incumbent",
            Self::Infeasible => "infeasible",
            Self::Unbounded => "unbounded",
            Self::IterationLimit => "iteration-limit",
        }
    }
}

/// Scaled first-order optimality residuals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SearchStats {
    pub nodes: usize,
    pub ipm_iterations: usize,
    pub repaired_pairs: usize,
    /// Best lower bound on the objective.
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub residuals: KktResiduals,
    pub stats: SearchStats,
    /// Normalised Farkas residual when infeasibility was detected.
    pub certificate: Option<f64>,
}

impl QpSolution {
    pub(crate) fn failed(status: SolveStatus, n: usize) -> Self {
        Self {
            x: vec![f64::NAN; n],
            objective: f64::NAN,
            status,
            residuals: KktResiduals::default(),
            stats: SearchStats::default(),
            certificate: None,
        }
    }
}
