//! Day-ahead engagement planning.
//!
//! The stochastic planner chooses one engagement profile shared by all PV
//! scenarios and a dispatch per scenario, maximising expected revenue net
//! of the deviation penalty. The deterministic variants are the same
//! problem with a single scenario: the point forecast (`D`) or the
//! realised PV (`D*`).

use std::fmt;
use std::str::FromStr;

use crate::domain::{
    check_engagement, per_kwh, DispatchTrace, EngagementPlan, SystemConfig, TariffPolicy,
    TimeGrid,
};
use crate::optim::{
    solve_miqp, MiqpSettings, QpProblem, QpSolution, SearchStats, SolveStatus, StorageChain,
    StoragePeriod,
};
use crate::scenarios::ScenarioSet;
use crate::{Error, Result};

/// Tolerance used when verifying plans and traces.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerMode {
    /// Stochastic, one engagement for all scenarios.
    S,
    /// Deterministic on the point forecast.
    D,
    /// Deterministic on the realised PV.
    DStar,
}

impl PlannerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::S => "S",
            Self::D => "D",
            Self::DStar => "Dstar",
        }
    }
}

impl fmt::Display for PlannerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "s" => Ok(Self::S),
            "D" | "d" => Ok(Self::D),
            "Dstar" | "dstar" | "D*" | "DSTAR" => Ok(Self::DStar),
            other => Err(Error::InvalidConfig(format!(
                "unknown planner mode `{other}` (expected S, D or Dstar)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanningInstance<'a> {
    pub grid: &'a TimeGrid,
    pub policy: &'a TariffPolicy,
    pub system: &'a SystemConfig,
    pub scenarios: &'a ScenarioSet,
    pub mode: PlannerMode,
}

impl PlanningInstance<'_> {
    pub fn validate(&self) -> Result<()> {
        self.policy.validate(self.grid)?;
        self.system.validate()?;
        self.scenarios.validate(self.grid.periods(), self.system.pv_capacity)?;
        if self.mode != PlannerMode::S && self.scenarios.len() != 1 {
            return Err(Error::Input(format!(
                "mode {} needs exactly one scenario, got {}",
                self.mode,
                self.scenarios.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerSettings {
    pub miqp: MiqpSettings,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self { miqp: MiqpSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub engagement: EngagementPlan,
    /// One trace per scenario.
    pub traces: Vec<DispatchTrace>,
    /// Expected cost (€), negative when the day is profitable.
    pub objective: f64,
    pub status: SolveStatus,
    pub stats: SearchStats,
}

/// Variable indices of a dispatch problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchLayout {
    pub periods: usize,
    pub scenarios: usize,
}

const PER_PERIOD: usize = 6;

impl DispatchLayout {
    pub fn engagement(&self, t: usize) -> usize {
        t
    }

    fn base(&self, w: usize, t: usize) -> usize {
        self.periods + (w * self.periods + t) * PER_PERIOD
    }

    pub fn production(&self, w: usize, t: usize) -> usize {
        self.base(w, t)
    }

    pub fn underdev(&self, w: usize, t: usize) -> usize {
        self.base(w, t) + 1
    }

    pub fn pv(&self, w: usize, t: usize) -> usize {
        self.base(w, t) + 2
    }

    pub fn charge(&self, w: usize, t: usize) -> usize {
        self.base(w, t) + 3
    }

    pub fn discharge(&self, w: usize, t: usize) -> usize {
        self.base(w, t) + 4
    }

    pub fn soc(&self, w: usize, t: usize) -> usize {
        self.base(w, t) + 5
    }

    pub fn num_vars(&self) -> usize {
        self.periods * (1 + PER_PERIOD * self.scenarios)
    }

    /// Reads the trace of scenario `w` from a primal vector.
    pub fn trace(&self, x: &[f64], w: usize) -> DispatchTrace {
        let col = |f: fn(&Self, usize, usize) -> usize| -> Vec<f64> {
            (0..self.periods).map(|t| x[f(self, w, t)]).collect()
        };
        DispatchTrace {
            production: col(Self::production),
            pv_used: col(Self::pv),
            charge: col(Self::charge),
            discharge: col(Self::discharge),
            soc: col(Self::soc),
            underdev: col(Self::underdev),
        }
    }
}

/// Shared builder of the planning and control problems. With `fixed`
/// set, the engagement is data: its variables are pinned and the ramp
/// rows are omitted.
pub(crate) fn build_dispatch_qp(
    grid: &TimeGrid,
    policy: &TariffPolicy,
    system: &SystemConfig,
    scenarios: &ScenarioSet,
    fixed: Option<&[f64]>,
) -> Result<(QpProblem, DispatchLayout)> {
    let t_len = grid.periods();
    if policy.periods() != t_len {
        return Err(Error::Shape { what: "tariff policy", expected: t_len, got: policy.periods() });
    }
    if let Some(e) = fixed {
        if e.len() != t_len {
            return Err(Error::Shape { what: "engagement plan", expected: t_len, got: e.len() });
        }
    }
    for row in &scenarios.values {
        if row.len() != t_len {
            return Err(Error::Shape { what: "scenario", expected: t_len, got: row.len() });
        }
    }
    if scenarios.weights.len() != scenarios.len() {
        return Err(Error::Shape {
            what: "scenario weights",
            expected: scenarios.len(),
            got: scenarios.weights.len(),
        });
    }

    let layout = DispatchLayout { periods: t_len, scenarios: scenarios.len() };
    let dt = grid.step_hours();
    let db = policy.deadband;
    let storage = system.has_storage();
    let (cha_max, dis_max) =
        if storage { (system.charge_power, system.discharge_power) } else { (0.0, 0.0) };
    let mut qp = QpProblem::new();

    for t in 0..t_len {
        let (lo, hi) = match fixed {
            Some(e) => (e[t], e[t]),
            None => (policy.eng_min[t], policy.eng_max[t]),
        };
        qp.add_var(lo, hi, 0.0, 0.0);
    }
    for (w, (pv, &alpha)) in scenarios.values.iter().zip(&scenarios.weights).enumerate() {
        for t in 0..t_len {
            let price = per_kwh(policy.price[t]);
            let lin = -alpha * dt * price;
            let pen = alpha * dt * price / policy.capacity;
            qp.add_var(policy.prod_min[t], policy.prod_max[t], 0.0, lin);
            qp.add_var(0.0, f64::INFINITY, pen, 4.0 * db * pen);
            qp.add_var(0.0, pv[t].max(0.0), 0.0, 0.0);
            qp.add_var(0.0, cha_max, 0.0, 0.0);
            qp.add_var(0.0, dis_max, 0.0, 0.0);
            let (smin, smax) = if t + 1 == t_len {
                (system.soc_end, system.soc_end)
            } else {
                (system.soc_min, system.soc_max)
            };
            qp.add_var(smin, smax, 0.0, 0.0);
        }
        for t in 0..t_len {
            let (p, d, u) = (layout.production(w, t), layout.underdev(w, t), layout.pv(w, t));
            let (c, s) = (layout.charge(w, t), layout.discharge(w, t));
            let e = layout.engagement(t);
            // shortfall below the deadband
            qp.ineq.push(&[(d, -1.0), (p, -1.0), (e, 1.0)], db);
            // no production above the deadband
            qp.ineq.push(&[(p, 1.0), (e, -1.0)], db);
            qp.eq.push(&[(p, 1.0), (u, -1.0), (s, -1.0), (c, 1.0)], 0.0);
            let soc = layout.soc(w, t);
            let flows = [(c, -dt * system.eta_charge), (s, dt / system.eta_discharge)];
            if t == 0 {
                qp.eq.push(&[(soc, 1.0), flows[0], flows[1]], system.soc_init);
            } else {
                let prev = layout.soc(w, t - 1);
                qp.eq.push(&[(soc, 1.0), (prev, -1.0), flows[0], flows[1]], 0.0);
            }
            if storage {
                qp.complementarity.push((c, s));
            }
        }
        if storage {
            qp.storage.push(StorageChain {
                periods: (0..t_len)
                    .map(|t| StoragePeriod {
                        charge: layout.charge(w, t),
                        discharge: layout.discharge(w, t),
                        soc: layout.soc(w, t),
                        pv: Some(layout.pv(w, t)),
                    })
                    .collect(),
                eta_charge: system.eta_charge,
                eta_discharge: system.eta_discharge,
                step_hours: dt,
                soc_min: system.soc_min,
                soc_max: system.soc_max,
                terminal_fixed: true,
            });
        }
    }
    if fixed.is_none() {
        for t in 1..t_len {
            let r = policy.ramp_limit[t];
            qp.ineq.push(&[(t, 1.0), (t - 1, -1.0)], r);
            qp.ineq.push(&[(t - 1, 1.0), (t, -1.0)], r);
        }
    }
    Ok((qp, layout))
}

/// Planning problem of an instance.
pub fn build_planning_qp(instance: &PlanningInstance<'_>) -> Result<QpProblem> {
    instance.validate()?;
    build_dispatch_qp(instance.grid, instance.policy, instance.system, instance.scenarios, None)
        .map(|(qp, _)| qp)
}

pub(crate) fn miqp_settings(base: &MiqpSettings, system: &SystemConfig) -> MiqpSettings {
    let scale = system.charge_power.max(system.discharge_power).max(1.0);
    MiqpSettings { complementarity_tolerance: FEASIBILITY_TOL * scale, ..*base }
}

/// Finds the first period a greedy dispatch cannot serve, to explain an
/// infeasible problem. The greedy keeps the battery as full as possible
/// and serves production floors from PV first.
pub(crate) fn diagnose_infeasibility(
    grid: &TimeGrid,
    policy: &TariffPolicy,
    system: &SystemConfig,
    pv: &[f64],
) -> Error {
    let dt = grid.step_hours();
    let storage = system.has_storage();
    let mut s = system.soc_init;
    for t in 0..grid.periods() {
        let floor = policy.prod_min[t];
        let surplus = pv[t] - floor;
        if surplus >= 0.0 {
            if storage {
                let room = (system.soc_max - s) / (dt * system.eta_charge);
                s += dt * system.eta_charge * surplus.min(system.charge_power).min(room);
            }
            continue;
        }
        let need = -surplus;
        let avail = if storage {
            system.discharge_power.min((s - system.soc_min) * system.eta_discharge / dt)
        } else {
            0.0
        };
        if need > avail + FEASIBILITY_TOL {
            return Error::Infeasible {
                period: t,
                reason: format!(
                    "production floor {floor:.3} kW exceeds PV {:.3} kW plus available discharge {avail:.3} kW",
                    pv[t]
                ),
            };
        }
        s -= dt * need / system.eta_discharge;
    }
    Error::Infeasible {
        period: grid.periods().saturating_sub(1),
        reason: "final state of charge cannot be restored under the production floors".into(),
    }
}

fn solver_error(sol: &QpSolution) -> Error {
    Error::Solver(format!(
        "planning problem ended with status {} after {} nodes",
        sol.status.as_str(),
        sol.stats.nodes
    ))
}

/// Solves the planning problem and checks the result before returning it.
pub fn plan(instance: &PlanningInstance<'_>, settings: &PlannerSettings) -> Result<PlanResult> {
    instance.validate()?;
    let (qp, layout) = build_dispatch_qp(
        instance.grid,
        instance.policy,
        instance.system,
        instance.scenarios,
        None,
    )?;
    let sol = solve_miqp(&qp, &miqp_settings(&settings.miqp, instance.system));
    match sol.status {
        s if s.has_solution() => {}
        SolveStatus::Infeasible => {
            // the scenario with the least PV is the binding one
            let worst = instance
                .scenarios
                .values
                .iter()
                .min_by(|a, b| a.iter().sum::<f64>().total_cmp(&b.iter().sum::<f64>()))
                .expect("validated non-empty");
            return Err(diagnose_infeasibility(
                instance.grid,
                instance.policy,
                instance.system,
                worst,
            ));
        }
        _ => return Err(solver_error(&sol)),
    }

    let engagement =
        EngagementPlan((0..layout.periods).map(|t| sol.x[layout.engagement(t)]).collect());
    let traces: Vec<DispatchTrace> =
        (0..layout.scenarios).map(|w| layout.trace(&sol.x, w)).collect();
    verify(instance, &engagement, &traces)?;
    Ok(PlanResult {
        engagement,
        traces,
        objective: sol.objective,
        status: sol.status,
        stats: sol.stats,
    })
}

fn verify(
    instance: &PlanningInstance<'_>,
    engagement: &EngagementPlan,
    traces: &[DispatchTrace],
) -> Result<()> {
    if let Some(v) = check_engagement(engagement, instance.policy)? {
        return Err(Error::Solver(format!("planned engagement violates the tender rules: {v:?}")));
    }
    let flow_tol = FEASIBILITY_TOL
        * instance.system.charge_power.max(instance.system.discharge_power).max(1.0);
    for (w, tr) in traces.iter().enumerate() {
        let v = tr.max_violation(instance.system, instance.grid);
        if v > FEASIBILITY_TOL {
            return Err(Error::Solver(format!("trace of scenario {w} violated by {v:e}")));
        }
        let overlap = tr.max_simultaneous_flow();
        if overlap > flow_tol {
            return Err(Error::Solver(format!(
                "scenario {w} charges and discharges simultaneously ({overlap:e} kW)"
            )));
        }
    }
    Ok(())
}

/// Plans on a single PV profile: the point forecast in mode `D`, the
/// realised PV in mode `D*`.
pub fn plan_deterministic(
    profile: &[f64],
    mode: PlannerMode,
    grid: &TimeGrid,
    policy: &TariffPolicy,
    system: &SystemConfig,
    settings: &PlannerSettings,
) -> Result<PlanResult> {
    if mode == PlannerMode::S {
        return Err(Error::Input("plan_deterministic needs mode D or Dstar".into()));
    }
    let scenarios = ScenarioSet::single(profile.to_vec());
    plan(&PlanningInstance { grid, policy, system, scenarios: &scenarios, mode }, settings)
}
