//! Best-first branch-and-bound over complementarity pairs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::repair::{repair_simultaneous_flow, violating_pairs};
use super::{solve_qp, IpmSettings, QpProblem, QpSolution, SearchStats, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiqpSettings {
    pub ipm: IpmSettings,
    pub node_limit: usize,
    /// Relative optimality gap, `gap ≤ tol·(1 + |incumbent|)`.
    pub gap_tolerance: f64,
    /// `min(x_i, x_j)` at or below this counts as complementary.
    pub complementarity_tolerance: f64,
    pub repair: bool,
}

impl Default for MiqpSettings {
    fn default() -> Self {
        Self {
            ipm: IpmSettings::default(),
            node_limit: 1000,
            gap_tolerance: 1e-6,
            complementarity_tolerance: 1e-6,
            repair: true,
        }
    }
}

struct Node {
    bound: f64,
    seq: usize,
    zeroed: Vec<usize>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: the lowest bound, then the earliest node, pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

fn with_zeroed(problem: &QpProblem, zeroed: &[usize]) -> QpProblem {
    let mut p = problem.relaxation();
    for &j in zeroed {
        p.upper[j] = p.lower[j].max(0.0).min(p.upper[j]);
        p.lower[j] = p.upper[j];
    }
    p
}

/// Pair with the largest `min(x_i, x_j)`; ties go to the first listed.
fn branching_pair(pairs: &[(usize, usize)], x: &[f64]) -> (usize, usize) {
    let mut best = pairs[0];
    let mut val = x[best.0].min(x[best.1]);
    for &(i, j) in &pairs[1..] {
        let v = x[i].min(x[j]);
        if v > val {
            best = (i, j);
            val = v;
        }
    }
    best
}

/// Solves the problem including its complementarity pairs.
pub fn solve_miqp(problem: &QpProblem, settings: &MiqpSettings) -> QpSolution {
    let tol = settings.complementarity_tolerance;
    let mut stats = SearchStats::default();
    let root = solve_qp(&problem.relaxation(), &settings.ipm);
    stats.ipm_iterations += root.stats.ipm_iterations;
    stats.nodes = 1;
    if !root.status.has_solution() {
        let mut out = root;
        out.stats = stats;
        return out;
    }
    stats.lower_bound = root.objective;

    if problem.complementarity.is_empty() || violating_pairs(problem, &root.x, tol).is_empty() {
        let mut out = root;
        out.stats = stats;
        return out;
    }

    let mut incumbent: Option<QpSolution> = None;
    let mut root_repaired = false;
    let mut first = Some(root);
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node { bound: f64::NEG_INFINITY, seq, zeroed: Vec::new() });

    let mut limit_hit = false;
    while let Some(node) = heap.pop() {
        if let Some(inc) = &incumbent {
            let slack = settings.gap_tolerance * (1.0 + inc.objective.abs());
            if node.bound >= inc.objective - slack {
                heap.clear();
                break;
            }
        }
        let sol = match first.take() {
            Some(s) => s,
            None => {
                if stats.nodes >= settings.node_limit {
                    heap.push(node);
                    limit_hit = true;
                    break;
                }
                stats.nodes += 1;
                let s = solve_qp(&with_zeroed(problem, &node.zeroed), &settings.ipm);
                stats.ipm_iterations += s.stats.ipm_iterations;
                s
            }
        };
        if !sol.status.has_solution() {
            continue;
        }
        if let Some(inc) = &incumbent {
            let slack = settings.gap_tolerance * (1.0 + inc.objective.abs());
            if sol.objective >= inc.objective - slack {
                continue;
            }
        }

        let mut x = sol.x.clone();
        let mut pending = violating_pairs(problem, &x, tol);
        if !pending.is_empty() && settings.repair {
            let out = repair_simultaneous_flow(problem, &mut x, tol);
            if out.unresolved.is_empty() {
                stats.repaired_pairs += out.repaired;
                if node.zeroed.is_empty() {
                    root_repaired = true;
                }
            }
            pending = out.unresolved;
        }
        if pending.is_empty() {
            let objective = problem.objective(&x);
            incumbent = Some(QpSolution { x, objective, ..sol });
            continue;
        }

        let (i, j) = branching_pair(&pending, &sol.x);
        for zero in [i, j] {
            seq += 1;
            let mut zeroed = node.zeroed.clone();
            zeroed.push(zero);
            heap.push(Node { bound: sol.objective, seq, zeroed });
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    match incumbent {
        Some(mut inc) => {
            stats.lower_bound = open_bound.min(inc.objective);
            inc.status = if root_repaired {
                SolveStatus::RelaxationOptimalRepaired
            } else if limit_hit {
                let slack = settings.gap_tolerance * (1.0 + inc.objective.abs());
                if open_bound >= inc.objective - slack {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::NodeLimitIncumbent
                }
            } else {
                SolveStatus::Optimal
            };
            inc.residuals.primal = problem.max_violation(&inc.x).max(0.0);
            inc.stats = stats;
            inc
        }
        None => {
            let status = if limit_hit {
                SolveStatus::NodeLimitNoIncumbent
            } else {
                SolveStatus::Infeasible
            };
            let mut out = QpSolution::failed(status, problem.num_vars());
            stats.lower_bound = open_bound;
            out.stats = stats;
            out
        }
    }
}
