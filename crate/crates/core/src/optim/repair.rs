//! Removes simultaneous charge and discharge from a relaxed storage
//! schedule without changing injections at the coupling point.

use super::QpProblem;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepairOutcome {
    /// Periods where at least one flow was reduced.
    pub repaired: usize,
    /// Complementarity pairs still above the tolerance.
    pub unresolved: Vec<(usize, usize)>,
}

/// Repairs every storage chain of `problem` in place.
///
/// Both flows are first lowered by the same amount, which keeps the
/// injection unchanged and raises later states of charge by
/// `d·(1/η_d − η_c)·Δt`; the amount is capped by the remaining headroom.
/// Any overlap left is removed by a state-of-charge neutral reduction,
/// `η_c·Δc = Δd/η_d`, whose extra injection is absorbed by curtailing the
/// PV set-point of the period.
///
/// If the result violates a constraint or changes the objective, `x` is
/// restored and every pair is reported unresolved.
pub fn repair_simultaneous_flow(problem: &QpProblem, x: &mut [f64], tol: f64) -> RepairOutcome {
    let backup = x.to_vec();
    let obj_before = problem.objective(x);
    let viol_before = problem.max_violation(x).max(0.0);
    let mut repaired = 0;

    for chain in &problem.storage {
        let dt = chain.step_hours;
        let (ec, ed) = (chain.eta_charge, chain.eta_discharge);
        let kappa = dt * (1.0 / ed - ec);
        let horizon = chain.periods.len();
        for t in 0..horizon {
            let per = chain.periods[t];
            let overlap = x[per.charge].min(x[per.discharge]);
            if overlap <= tol {
                continue;
            }
            repaired += 1;

            let mut headroom = f64::INFINITY;
            for (k, later) in chain.periods[t..].iter().enumerate() {
                let cap = if chain.terminal_fixed && t + k == horizon - 1 {
                    0.0
                } else {
                    chain.soc_max - x[later.soc]
                };
                headroom = headroom.min(cap.max(0.0));
            }
            let d = if kappa > 0.0 { overlap.min(headroom / kappa) } else { overlap };
            if d > 0.0 {
                x[per.charge] -= d;
                x[per.discharge] -= d;
                let rise = kappa * d;
                for later in &chain.periods[t..] {
                    x[later.soc] += rise;
                }
            }

            let (cha, dis) = (x[per.charge], x[per.discharge]);
            if cha.min(dis) <= tol {
                continue;
            }
            let round_trip = ec * ed;
            let mut dd = dis.min(round_trip * cha);
            let mut dc = dd / round_trip;
            let mut curtail = dc - dd;
            if let Some(pv) = per.pv {
                if curtail > x[pv] {
                    let s = x[pv] / curtail;
                    dd *= s;
                    dc *= s;
                    curtail = x[pv];
                }
                x[pv] -= curtail;
            } else if curtail > 0.0 {
                continue;
            }
            x[per.charge] = (cha - dc).max(0.0);
            x[per.discharge] = (dis - dd).max(0.0);
        }
    }

    let obj_after = problem.objective(x);
    let viol_after = problem.max_violation(x).max(0.0);
    let obj_tol = 1e-9 * (1.0 + obj_before.abs());
    if (obj_after - obj_before).abs() > obj_tol || viol_after > viol_before.max(1e-8) {
        x.copy_from_slice(&backup);
        return RepairOutcome {
            repaired: 0,
            unresolved: violating_pairs(problem, x, tol),
        };
    }
    RepairOutcome { repaired, unresolved: violating_pairs(problem, x, tol) }
}

pub(crate) fn violating_pairs(problem: &QpProblem, x: &[f64], tol: f64) -> Vec<(usize, usize)> {
    problem.complementarity.iter().copied().filter(|&(i, j)| x[i].min(x[j]) > tol).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{StorageChain, StoragePeriod};

    /// One period: p = pv + dis - cha, s = s0 + ηc·Δt·cha - Δt/ηd·dis.
    fn single_period(terminal_fixed: bool) -> (QpProblem, Vec<f64>) {
        let mut p = QpProblem::new();
        let prod = p.add_var(0.0, 100.0, 0.0, -1.0);
        let pv = p.add_var(0.0, 50.0, 0.0, 0.0);
        let cha = p.add_var(0.0, 20.0, 0.0, 0.0);
        let dis = p.add_var(0.0, 20.0, 0.0, 0.0);
        let soc = p.add_var(10.0, 90.0, 0.0, 0.0);
        let (ec, ed, dt) = (0.95, 0.95, 0.25);
        p.eq.push(&[(prod, 1.0), (pv, -1.0), (dis, -1.0), (cha, 1.0)], 0.0);
        p.eq.push(&[(soc, 1.0), (cha, -dt * ec), (dis, dt / ed)], 50.0);
        p.complementarity.push((cha, dis));
        p.storage.push(StorageChain {
            periods: vec![StoragePeriod { charge: cha, discharge: dis, soc, pv: Some(pv) }],
            eta_charge: ec,
            eta_discharge: ed,
            step_hours: dt,
            soc_min: 10.0,
            soc_max: 90.0,
            terminal_fixed,
        });
        let (c, d, v) = (8.0, 5.0, 30.0);
        let s = 50.0 + dt * ec * c - dt / ed * d;
        let x = vec![v + d - c, v, c, d, s];
        (p, x)
    }

    #[test]
    fn free_terminal_uses_equal_reduction() {
        let (p, mut x) = single_period(false);
        assert!(p.max_violation(&x) < 1e-12);
        let before = x.clone();
        let out = repair_simultaneous_flow(&p, &mut x, 1e-9);
        assert!(out.unresolved.is_empty());
        assert_eq!(out.repaired, 1);
        assert!(x[3].abs() < 1e-12 && (x[2] - 3.0).abs() < 1e-12);
        assert_eq!(x[0], before[0]);
        assert_eq!(x[1], before[1]);
        assert!(p.max_violation(&x) < 1e-12);
    }

    #[test]
    fn pinned_terminal_curtails_pv() {
        let (p, mut x) = single_period(true);
        let before = x.clone();
        let out = repair_simultaneous_flow(&p, &mut x, 1e-9);
        assert!(out.unresolved.is_empty());
        assert_eq!(x[4], before[4]);
        assert_eq!(x[0], before[0]);
        assert!(x[2].min(x[3]) < 1e-12);
        assert!(x[1] < before[1]);
        assert!(p.max_violation(&x) < 1e-12);
    }

    #[test]
    fn lacking_pv_leaves_pair_unresolved() {
        let (p, mut x) = single_period(true);
        x[1] = 0.0;
        x[0] = x[3] - x[2];
        let prod_lo = x[0];
        let mut p = p;
        p.lower[0] = prod_lo.min(0.0);
        let out = repair_simultaneous_flow(&p, &mut x, 1e-9);
        assert_eq!(out.unresolved.len(), 1);
    }
}
