//! Day-by-day simulation: plan, dispatch with the oracle controller, and
//! aggregate the yearly figures used by the sizing study.

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::controller::{oracle_control, ControlResult, DayEconomics};
use crate::domain::{SystemConfig, TariffPolicy, TimeGrid};
use crate::io::DatasetDay;
use crate::planner::{plan, PlanResult, PlannerMode, PlannerSettings, PlanningInstance};
use crate::scenarios::{fit_copula, sample_scenarios, CopulaModel, ScenarioSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub mode: PlannerMode,
    /// Scenarios per day in mode S.
    pub scenarios: usize,
    pub seed: u64,
    pub planner: PlannerSettings,
    /// Withdrawal price as a multiple of the selling price of its period.
    pub withdraw_price_factor: f64,
    /// Largest fraction of skipped days for a valid run.
    pub max_skipped: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            mode: PlannerMode::D,
            scenarios: 20,
            seed: 7,
            planner: PlannerSettings::default(),
            withdraw_price_factor: 1.0,
            max_skipped: 0.05,
        }
    }
}

/// Yearly figures extrapolated from the simulated days.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnnualFigures {
    pub export_mwh: f64,
    pub withdraw_mwh: f64,
    /// Cost of the withdrawn energy (€/yr).
    pub withdraw_cost: f64,
    /// Deviation penalties (€/yr).
    pub penalty: f64,
    /// Revenue from exported energy (€/yr).
    pub revenue: f64,
    pub cycles: f64,
    pub days_simulated: usize,
    pub days_skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub date: NaiveDate,
    pub mode: PlannerMode,
    pub economics: DayEconomics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedDay {
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub figures: AnnualFigures,
    pub ledger: Vec<DayRecord>,
    pub skipped: Vec<SkippedDay>,
    /// False when more days were skipped than allowed.
    pub valid: bool,
}

/// Result of one simulated day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRun {
    pub plan: PlanResult,
    pub control: ControlResult,
}

/// Seed of the scenario generator for the day at `index`.
pub fn day_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Scenario set the planner sees for one day.
pub fn day_scenarios(
    day: &DatasetDay,
    index: usize,
    model: Option<&CopulaModel>,
    settings: &SimSettings,
    pv_capacity: f64,
) -> Result<ScenarioSet> {
    match settings.mode {
        PlannerMode::D => Ok(ScenarioSet::single(day.forecast.clone())),
        PlannerMode::DStar => Ok(ScenarioSet::single(day.measurements.clone())),
        PlannerMode::S => {
            let model = model.ok_or_else(|| Error::Input("mode S needs a fitted copula".into()))?;
            sample_scenarios(model, &day.forecast, settings.scenarios, day_seed(settings.seed, index), pv_capacity)
        }
    }
}

/// Plans one day and dispatches it against the measurements.
pub fn simulate_day(
    day: &DatasetDay,
    index: usize,
    model: Option<&CopulaModel>,
    policy: &TariffPolicy,
    system: &SystemConfig,
    grid: &TimeGrid,
    settings: &SimSettings,
) -> Result<DayRun> {
    day.validate(grid.periods(), system.pv_capacity)?;
    let scenarios = day_scenarios(day, index, model, settings, system.pv_capacity)?;
    let planned = plan(
        &PlanningInstance { grid, policy, system, scenarios: &scenarios, mode: settings.mode },
        &settings.planner,
    )?;
    let control =
        oracle_control(&planned.engagement, &day.measurements, policy, system, grid, &settings.planner)?;
    Ok(DayRun { plan: planned, control })
}

/// Copula of the forecast errors of a dataset.
pub fn fit_dataset_copula(days: &[DatasetDay], pv_capacity: f64) -> Result<CopulaModel> {
    let errors: Vec<Vec<f64>> = days.iter().map(DatasetDay::errors).collect();
    fit_copula(&errors, pv_capacity)
}

/// Scales summed per-day economics to a year.
pub fn annualize(
    economics: &[DayEconomics],
    skipped: usize,
    withdraw_price_factor: f64,
    nominal_capacity: f64,
) -> AnnualFigures {
    let n = economics.len();
    let mut sum = DayEconomics::default();
    for e in economics {
        sum.export_revenue += e.export_revenue;
        sum.penalty += e.penalty;
        sum.export_kwh += e.export_kwh;
        sum.withdraw_kwh += e.withdraw_kwh;
        sum.discharge_kwh += e.discharge_kwh;
        sum.withdraw_cost += e.withdraw_cost;
    }
    let scale = if n == 0 { 0.0 } else { 365.0 / n as f64 };
    AnnualFigures {
        export_mwh: sum.export_kwh * scale / 1000.0,
        withdraw_mwh: sum.withdraw_kwh * scale / 1000.0,
        withdraw_cost: sum.withdraw_cost * withdraw_price_factor * scale,
        penalty: sum.penalty * scale,
        revenue: sum.export_revenue * scale,
        cycles: if nominal_capacity > 0.0 { sum.discharge_kwh * scale / nominal_capacity } else { 0.0 },
        days_simulated: n,
        days_skipped: skipped,
    }
}

/// Runs every day independently and aggregates in date order. Infeasible
/// days are skipped and listed; solver failures abort the run.
pub fn simulate(
    days: &[DatasetDay],
    model: Option<&CopulaModel>,
    policy: &TariffPolicy,
    system: &SystemConfig,
    grid: &TimeGrid,
    settings: &SimSettings,
) -> Result<SimOutcome> {
    if days.is_empty() {
        return Err(Error::Input("simulation needs at least one day".into()));
    }
    if settings.mode == PlannerMode::S && model.is_none() {
        return Err(Error::Input("mode S needs a fitted copula".into()));
    }
    let runs: Vec<Result<DayRun>> = days
        .par_iter()
        .enumerate()
        .map(|(k, d)| simulate_day(d, k, model, policy, system, grid, settings))
        .collect();
    let mut ledger = Vec::new();
    let mut skipped = Vec::new();
    for (day, run) in days.iter().zip(runs) {
        match run {
            Ok(r) => ledger.push(DayRecord { date: day.date, mode: settings.mode, economics: r.control.economics }),
            Err(e @ Error::Infeasible { .. }) => {
                skipped.push(SkippedDay { date: day.date, reason: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    let economics: Vec<DayEconomics> = ledger.iter().map(|r| r.economics).collect();
    let figures =
        annualize(&economics, skipped.len(), settings.withdraw_price_factor, system.nominal_capacity);
    let valid = !ledger.is_empty() && skipped.len() as f64 <= settings.max_skipped * days.len() as f64;
    Ok(SimOutcome { figures, ledger, skipped, valid })
}
