//! Oracle intraday controller: with the realised PV known for the whole
//! day, the dispatch is a single solve of the planning problem with the
//! engagement held fixed.

use crate::domain::{penalty, per_kwh, DispatchTrace, EngagementPlan, SystemConfig, TariffPolicy, TimeGrid};
use crate::optim::{solve_miqp, SolveStatus};
use crate::planner::{
    build_dispatch_qp, diagnose_infeasibility, miqp_settings, PlannerSettings, FEASIBILITY_TOL,
};
use crate::scenarios::ScenarioSet;
use crate::{Error, Result};

/// Money and energy flows of one day, evaluated on the dispatch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DayEconomics {
    /// Signed gross revenue Σ Δt·π·p (€).
    pub gross_revenue: f64,
    /// Revenue from exported energy only (€).
    pub export_revenue: f64,
    pub penalty: f64,
    pub export_kwh: f64,
    pub withdraw_kwh: f64,
    pub discharge_kwh: f64,
    /// Withdrawn energy valued at the selling price of its period (€).
    pub withdraw_cost: f64,
}

impl DayEconomics {
    /// Evaluates a trace against an engagement.
    pub fn evaluate(
        engagement: &EngagementPlan,
        trace: &DispatchTrace,
        policy: &TariffPolicy,
        grid: &TimeGrid,
    ) -> Self {
        let dt = grid.step_hours();
        let mut out = Self::default();
        for t in 0..trace.periods() {
            let p = trace.production[t];
            let price = per_kwh(policy.price[t]);
            out.gross_revenue += dt * price * p;
            out.export_revenue += dt * price * p.max(0.0);
            out.withdraw_cost += dt * price * (-p).max(0.0);
            out.penalty += penalty(engagement.values()[t], p, policy.price[t], policy, grid);
            out.export_kwh += dt * p.max(0.0);
            out.withdraw_kwh += dt * (-p).max(0.0);
            out.discharge_kwh += dt * trace.discharge[t];
        }
        out
    }

    /// `gross_revenue − penalty`.
    pub fn net(&self) -> f64 {
        self.gross_revenue - self.penalty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlResult {
    pub trace: DispatchTrace,
    pub economics: DayEconomics,
    /// Optimal cost of the control problem (€).
    pub objective: f64,
    pub status: SolveStatus,
}

pub fn oracle_control(
    engagement: &EngagementPlan,
    realized_pv: &[f64],
    policy: &TariffPolicy,
    system: &SystemConfig,
    grid: &TimeGrid,
    settings: &PlannerSettings,
) -> Result<ControlResult> {
    system.validate()?;
    let t_len = grid.periods();
    if realized_pv.len() != t_len {
        return Err(Error::Shape { what: "realised PV", expected: t_len, got: realized_pv.len() });
    }
    if let Some(t) = realized_pv
        .iter()
        .position(|v| !(*v >= 0.0 && *v <= system.pv_capacity * (1.0 + 1e-12)))
    {
        return Err(Error::Input(format!(
            "realised PV {} kW at period {t} outside [0, {}]",
            realized_pv[t], system.pv_capacity
        )));
    }
    let scenarios = ScenarioSet::single(realized_pv.to_vec());
    let (qp, layout) =
        build_dispatch_qp(grid, policy, system, &scenarios, Some(engagement.values()))?;
    let sol = solve_miqp(&qp, &miqp_settings(&settings.miqp, system));
    if !sol.status.has_solution() {
        if sol.status == SolveStatus::Infeasible {
            return Err(diagnose_infeasibility(grid, policy, system, realized_pv));
        }
        return Err(Error::Solver(format!(
            "control problem ended with status {}",
            sol.status.as_str()
        )));
    }
    let trace = layout.trace(&sol.x, 0);
    let v = trace.max_violation(system, grid);
    if v > FEASIBILITY_TOL {
        return Err(Error::Solver(format!("control trace violated by {v:e}")));
    }
    let economics = DayEconomics::evaluate(engagement, &trace, policy, grid);
    Ok(ControlResult { trace, economics, objective: sol.objective, status: sol.status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_cre_policy, CreRules};

    #[test]
    fn idle_day_is_all_zero() {
        let grid = TimeGrid::quarter_hourly();
        let policy = CreRules { eng_min_peak: 0.0, prod_min_peak: 0.0, ..Default::default() }
            .build(&grid, 100.0, 100.0, 100.0)
            .unwrap();
        let system = SystemConfig::pv_only(100.0);
        let r = oracle_control(
            &EngagementPlan(vec![0.0; 96]),
            &[0.0; 96],
            &policy,
            &system,
            &grid,
            &Default::default(),
        )
        .unwrap();
        assert!(r.trace.production.iter().all(|p| p.abs() < 1e-6));
        assert_eq!(r.economics.penalty, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = TimeGrid::quarter_hourly();
        let policy = build_cre_policy(&grid, 100.0, 100.0, 100.0).unwrap();
        let system = SystemConfig::pv_only(100.0);
        let e = EngagementPlan(vec![0.0; 96]);
        let s = PlannerSettings::default();
        assert!(oracle_control(&e, &[0.0; 95], &policy, &system, &grid, &s).is_err());
        assert!(oracle_control(&e, &[150.0; 96], &policy, &system, &grid, &s).is_err());
    }

    #[test]
    fn peak_floor_without_resources_names_the_period() {
        let grid = TimeGrid::quarter_hourly();
        let policy = build_cre_policy(&grid, 100.0, 100.0, 100.0).unwrap();
        let system = SystemConfig::pv_only(100.0);
        let mut e = vec![0.0; 96];
        e[76..84].iter_mut().for_each(|v| *v = 20.0);
        let err = oracle_control(&EngagementPlan(e), &[0.0; 96], &policy, &system, &grid, &Default::default())
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { period: 76, .. }));
    }
}
