//! Time grid, tender rules, plant description and the ex-post remuneration
//! of a capacity-firming plant.
//!
//! Units: powers in kW, energies in kWh, prices in €/MWh. Prices are
//! converted to €/kWh where they multiply an energy.

use crate::error::{Error, Result};

/// Absolute tolerance (kW) used when checking engagement limits.
pub const ENGAGEMENT_TOL: f64 = 1e-6;

/// Converts a price in €/MWh to €/kWh.
#[inline]
pub fn per_kwh(price_eur_mwh: f64) -> f64 {
    price_eur_mwh * 1e-3
}

/// Daily discretisation: `T` periods of `step_hours` each, with a peak flag
/// per period.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    step_hours: f64,
    peak: Vec<bool>,
}

impl TimeGrid {
    pub fn new(step_hours: f64, peak: Vec<bool>) -> Result<Self> {
        if peak.is_empty() {
            return Err(Error::InvalidConfig("time grid needs at least one period".into()));
        }
        if !(step_hours > 0.0 && step_hours.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "period duration must be positive, got {step_hours}"
            )));
        }
        Ok(Self { step_hours, peak })
    }

    /// A 24-hour grid whose peak periods are those starting in
    /// `[peak_start_h, peak_end_h)`.
    pub fn daily(step_hours: f64, peak_start_h: f64, peak_end_h: f64) -> Result<Self> {
        if !(step_hours > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "period duration must be positive, got {step_hours}"
            )));
        }
        let periods = (24.0 / step_hours).round() as usize;
        if periods == 0 || ((periods as f64) * step_hours - 24.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "period duration {step_hours} h does not divide a day"
            )));
        }
        let peak = (0..periods)
            .map(|t| {
                let start = t as f64 * step_hours;
                start >= peak_start_h - 1e-9 && start < peak_end_h - 1e-9
            })
            .collect();
        Self::new(step_hours, peak)
    }

    /// Quarter-hour day with the 19:00–21:00 peak window.
    pub fn quarter_hourly() -> Self {
        Self::daily(0.25, 19.0, 21.0).expect("static grid is valid")
    }

    pub fn periods(&self) -> usize {
        self.peak.len()
    }

    pub fn step_hours(&self) -> f64 {
        self.step_hours
    }

    pub fn is_peak(&self, t: usize) -> bool {
        self.peak[t]
    }

    pub fn peak_mask(&self) -> &[bool] {
        &self.peak
    }

    /// Hours since midnight at the start of period `t`.
    pub fn period_start_hours(&self, t: usize) -> f64 {
        t as f64 * self.step_hours
    }
}

/// Tender rules applied per period.
#[derive(Debug, Clone, PartialEq)]
pub struct TariffPolicy {
    /// Installed PV capacity the fractions refer to (kW).
    pub capacity: f64,
    /// Selling price per period (€/MWh).
    pub price: Vec<f64>,
    /// Maximum engagement change between consecutive periods (kW).
    pub ramp_limit: Vec<f64>,
    pub eng_min: Vec<f64>,
    pub eng_max: Vec<f64>,
    pub prod_min: Vec<f64>,
    pub prod_max: Vec<f64>,
    /// Tolerance band around the engagement (kW).
    pub deadband: f64,
}

impl TariffPolicy {
    pub fn periods(&self) -> usize {
        self.price.len()
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        let t = grid.periods();
        for (what, v) in [
            ("price", &self.price),
            ("ramp_limit", &self.ramp_limit),
            ("eng_min", &self.eng_min),
            ("eng_max", &self.eng_max),
            ("prod_min", &self.prod_min),
            ("prod_max", &self.prod_max),
        ] {
            if v.len() != t {
                return Err(Error::Shape { what, expected: t, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!("{what} has non-finite entries")));
            }
        }
        if !(self.capacity > 0.0) {
            return Err(Error::InvalidConfig("PV capacity must be positive".into()));
        }
        if !(self.deadband >= 0.0) {
            return Err(Error::InvalidConfig("deadband must be non-negative".into()));
        }
        for k in 0..t {
            if self.eng_min[k] > self.eng_max[k] || self.prod_min[k] > self.prod_max[k] {
                return Err(Error::InvalidConfig(format!("inconsistent bounds at period {k}")));
            }
            if self.ramp_limit[k] < 0.0 {
                return Err(Error::InvalidConfig(format!("negative ramp limit at period {k}")));
            }
        }
        Ok(())
    }

    /// Same rules with every price multiplied by `factor`.
    pub fn with_price_scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.price.iter_mut().for_each(|p| *p *= factor);
        out
    }
}

/// Capacity-firming tender fractions, all relative to the installed PV
/// capacity. Defaults are the AO-CRE-ZNI 2019 values.
#[derive(Debug, Clone, PartialEq)]
pub struct CreRules {
    pub ramp_offpeak: f64,
    pub ramp_peak: f64,
    pub eng_min_offpeak: f64,
    pub eng_min_peak: f64,
    pub prod_min_offpeak: f64,
    pub prod_min_peak: f64,
    pub eng_max: f64,
    pub prod_max: f64,
    pub deadband: f64,
}

impl Default for CreRules {
    fn default() -> Self {
        Self {
            ramp_offpeak: 0.075,
            ramp_peak: 0.15,
            eng_min_offpeak: -0.05,
            eng_min_peak: 0.20,
            prod_min_offpeak: -0.05,
            prod_min_peak: 0.15,
            eng_max: 1.0,
            prod_max: 1.0,
            deadband: 0.05,
        }
    }
}

impl CreRules {
    pub fn build(
        &self,
        grid: &TimeGrid,
        price_offpeak: f64,
        price_peak: f64,
        pv_capacity: f64,
    ) -> Result<TariffPolicy> {
        if !(pv_capacity > 0.0) || !pv_capacity.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "PV capacity must be positive, got {pv_capacity}"
            )));
        }
        if !(price_offpeak >= 0.0 && price_peak >= 0.0) {
            return Err(Error::InvalidConfig("prices must be non-negative".into()));
        }
        let pick = |t: usize, off: f64, peak: f64| if grid.is_peak(t) { peak } else { off };
        let t = grid.periods();
        let per = |off: f64, peak: f64| -> Vec<f64> {
            (0..t).map(|k| pick(k, off, peak) * pv_capacity).collect()
        };
        let policy = TariffPolicy {
            capacity: pv_capacity,
            price: (0..t).map(|k| pick(k, price_offpeak, price_peak)).collect(),
            ramp_limit: per(self.ramp_offpeak, self.ramp_peak),
            eng_min: per(self.eng_min_offpeak, self.eng_min_peak),
            eng_max: per(self.eng_max, self.eng_max),
            prod_min: per(self.prod_min_offpeak, self.prod_min_peak),
            prod_max: per(self.prod_max, self.prod_max),
            deadband: self.deadband * pv_capacity,
        };
        policy.validate(grid)?;
        Ok(policy)
    }
}

/// Tender policy with the default CRE fractions.
pub fn build_cre_policy(
    grid: &TimeGrid,
    price_offpeak: f64,
    price_peak: f64,
    pv_capacity: f64,
) -> Result<TariffPolicy> {
    CreRules::default().build(grid, price_offpeak, price_peak, pv_capacity)
}

/// PV plant with an optional battery.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Installed PV capacity (kW).
    pub pv_capacity: f64,
    /// Nameplate battery energy (kWh); drives CAPEX and cycle counting.
    pub nominal_capacity: f64,
    /// Upper state-of-charge limit (kWh).
    pub soc_max: f64,
    /// Lower state-of-charge limit (kWh).
    pub soc_min: f64,
    pub charge_power: f64,
    pub discharge_power: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub soc_init: f64,
    pub soc_end: f64,
}

/// Battery sizing rules relative to the nameplate capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageRules {
    pub soc_min_frac: f64,
    pub soc_max_frac: f64,
    pub soc_init_frac: f64,
    /// Charge/discharge power per kWh of nameplate capacity (1/h).
    pub c_rate: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
}

impl Default for StorageRules {
    fn default() -> Self {
        Self {
            soc_min_frac: 0.1,
            soc_max_frac: 0.9,
            soc_init_frac: 0.1,
            c_rate: 1.0,
            eta_charge: 0.95,
            eta_discharge: 0.95,
        }
    }
}

impl SystemConfig {
    /// PV plant with a battery of `ratio · pv_capacity` kWh.
    pub fn sized(pv_capacity: f64, ratio: f64, rules: &StorageRules) -> Result<Self> {
        let nominal = ratio * pv_capacity;
        let cfg = Self {
            pv_capacity,
            nominal_capacity: nominal,
            soc_max: rules.soc_max_frac * nominal,
            soc_min: rules.soc_min_frac * nominal,
            charge_power: rules.c_rate * nominal,
            discharge_power: rules.c_rate * nominal,
            eta_charge: rules.eta_charge,
            eta_discharge: rules.eta_discharge,
            soc_init: rules.soc_init_frac * nominal,
            soc_end: rules.soc_init_frac * nominal,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// PV plant without storage.
    pub fn pv_only(pv_capacity: f64) -> Self {
        Self {
            pv_capacity,
            nominal_capacity: 0.0,
            soc_max: 0.0,
            soc_min: 0.0,
            charge_power: 0.0,
            discharge_power: 0.0,
            eta_charge: 1.0,
            eta_discharge: 1.0,
            soc_init: 0.0,
            soc_end: 0.0,
        }
    }

    pub fn has_storage(&self) -> bool {
        self.soc_max > self.soc_min && (self.charge_power > 0.0 || self.discharge_power > 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.pv_capacity > 0.0) {
            return bad("PV capacity must be positive");
        }
        if !(0.0 <= self.soc_min && self.soc_min <= self.soc_max) {
            return bad("state-of-charge limits must satisfy 0 <= min <= max");
        }
        for (name, s) in [("initial", self.soc_init), ("final", self.soc_end)] {
            if !(self.soc_min - 1e-9 <= s && s <= self.soc_max + 1e-9) {
                return Err(Error::InvalidConfig(format!(
                    "{name} state of charge {s} outside [{}, {}]",
                    self.soc_min, self.soc_max
                )));
            }
        }
        if !(self.charge_power >= 0.0 && self.discharge_power >= 0.0) {
            return bad("charge/discharge power must be non-negative");
        }
        for eta in [self.eta_charge, self.eta_discharge] {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad("efficiencies must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

/// Day-ahead engagement profile (kW per period).
#[derive(Debug, Clone, PartialEq)]
pub struct EngagementPlan(pub Vec<f64>);

impl EngagementPlan {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-period set-points of one day.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DispatchTrace {
    /// Power at the coupling point; negative values are withdrawals.
    pub production: Vec<f64>,
    pub pv_used: Vec<f64>,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// State of charge at the end of each period (kWh).
    pub soc: Vec<f64>,
    pub underdev: Vec<f64>,
}

impl DispatchTrace {
    pub fn periods(&self) -> usize {
        self.production.len()
    }

    /// Largest violation of balance, state-of-charge recursion and bounds.
    pub fn max_violation(&self, system: &SystemConfig, grid: &TimeGrid) -> f64 {
        let dt = grid.step_hours();
        let mut worst: f64 = 0.0;
        let mut prev = system.soc_init;
        for t in 0..self.periods() {
            let balance =
                self.production[t] - (self.pv_used[t] + self.discharge[t] - self.charge[t]);
            worst = worst.max(balance.abs());
            let soc_step = self.soc[t]
                - prev
                - dt * (system.eta_charge * self.charge[t]
                    - self.discharge[t] / system.eta_discharge);
            worst = worst.max(soc_step.abs());
            worst = worst.max(system.soc_min - self.soc[t]).max(self.soc[t] - system.soc_max);
            for v in [self.pv_used[t], self.charge[t], self.discharge[t], self.underdev[t]] {
                worst = worst.max(-v);
            }
            worst = worst
                .max(self.charge[t] - system.charge_power)
                .max(self.discharge[t] - system.discharge_power);
            prev = self.soc[t];
        }
        if let Some(last) = self.soc.last() {
            worst = worst.max((last - system.soc_end).abs());
        }
        worst
    }

    /// Largest `min(charge, discharge)` over the day.
    pub fn max_simultaneous_flow(&self) -> f64 {
        self.charge
            .iter()
            .zip(&self.discharge)
            .map(|(c, d)| c.min(*d))
            .fold(0.0, f64::max)
    }
}

/// Which engagement rule a plan breaks first.
#[derive(Debug, Clone, PartialEq)]
pub enum EngagementViolation {
    Ramp { period: usize, step: f64, limit: f64 },
    BelowMinimum { period: usize, value: f64, min: f64 },
    AboveMaximum { period: usize, value: f64, max: f64 },
}

impl EngagementViolation {
    pub fn period(&self) -> usize {
        match *self {
            Self::Ramp { period, .. }
            | Self::BelowMinimum { period, .. }
            | Self::AboveMaximum { period, .. } => period,
        }
    }
}

/// Grid-operator acceptance of an engagement plan. The ramp rule is not
/// applied to the first period so consecutive days stay decoupled.
pub fn check_engagement(
    plan: &EngagementPlan,
    policy: &TariffPolicy,
) -> Result<Option<EngagementViolation>> {
    let t = policy.periods();
    if plan.len() != t {
        return Err(Error::Shape { what: "engagement plan", expected: t, got: plan.len() });
    }
    let p = plan.values();
    for k in 0..t {
        if k > 0 {
            let step = (p[k] - p[k - 1]).abs();
            if step > policy.ramp_limit[k] + ENGAGEMENT_TOL {
                return Ok(Some(EngagementViolation::Ramp {
                    period: k,
                    step,
                    limit: policy.ramp_limit[k],
                }));
            }
        }
        if p[k] < policy.eng_min[k] - ENGAGEMENT_TOL {
            return Ok(Some(EngagementViolation::BelowMinimum {
                period: k,
                value: p[k],
                min: policy.eng_min[k],
            }));
        }
        if p[k] > policy.eng_max[k] + ENGAGEMENT_TOL {
            return Ok(Some(EngagementViolation::AboveMaximum {
                period: k,
                value: p[k],
                max: policy.eng_max[k],
            }));
        }
    }
    Ok(None)
}

fn threshold_quadratic(shortfall: f64, price: f64, policy: &TariffPolicy, grid: &TimeGrid) -> f64 {
    if shortfall <= 0.0 {
        return 0.0;
    }
    grid.step_hours() * per_kwh(price) / policy.capacity
        * shortfall
        * (shortfall + 4.0 * policy.deadband)
}

/// Deviation penalty (€) for one period: zero while production stays above
/// `engagement - deadband`, quadratic in the shortfall below it.
pub fn penalty(
    engagement: f64,
    production: f64,
    price: f64,
    policy: &TariffPolicy,
    grid: &TimeGrid,
) -> f64 {
    let shortfall = (engagement - policy.deadband) - production;
    threshold_quadratic(shortfall, price, policy, grid)
}

/// Like [`penalty`] but also charges production above
/// `engagement + deadband` with the same quadratic form. Used only to
/// evaluate externally supplied traces.
pub fn symmetric_penalty(
    engagement: f64,
    production: f64,
    price: f64,
    policy: &TariffPolicy,
    grid: &TimeGrid,
) -> f64 {
    let excess = production - (engagement + policy.deadband);
    penalty(engagement, production, price, policy, grid)
        + threshold_quadratic(excess, price, policy, grid)
}

/// Gross revenue of the period minus its deviation penalty (€).
pub fn net_remuneration(
    engagement: f64,
    production: f64,
    price: f64,
    policy: &TariffPolicy,
    grid: &TimeGrid,
) -> f64 {
    grid.step_hours() * per_kwh(price) * production
        - penalty(engagement, production, price, policy, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uliege() -> (TimeGrid, TariffPolicy) {
        let grid = TimeGrid::quarter_hourly();
        let policy = build_cre_policy(&grid, 100.0, 100.0, 466.4).unwrap();
        (grid, policy)
    }

    #[test]
    fn peak_window_is_eight_quarter_hours() {
        let grid = TimeGrid::quarter_hourly();
        assert_eq!(grid.periods(), 96);
        let peaks: Vec<usize> = (0..96).filter(|&t| grid.is_peak(t)).collect();
        assert_eq!(peaks, (76..84).collect::<Vec<_>>());
    }

    #[test]
    fn cre_policy_fractions() {
        let (grid, policy) = uliege();
        assert!((policy.deadband - 23.32).abs() < 1e-9);
        assert!((policy.ramp_limit[0] - 34.98).abs() < 1e-9);
        assert!((policy.ramp_limit[76] - 69.96).abs() < 1e-9);
        assert!(policy.eng_max.iter().all(|&v| (v - 466.4).abs() < 1e-9));
        assert!(policy.prod_max.iter().all(|&v| (v - 466.4).abs() < 1e-9));
        assert!((policy.prod_min[80] - 0.15 * 466.4).abs() < 1e-9);
        assert!((policy.prod_min[10] + 0.05 * 466.4).abs() < 1e-9);

        let small = build_cre_policy(&grid, 10.0, 10.0, 100.0).unwrap();
        assert!((small.eng_min[0] + 5.0).abs() < 1e-12);
        assert!((small.eng_min[78] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn zero_prices_keep_bounds() {
        let grid = TimeGrid::quarter_hourly();
        let zero = build_cre_policy(&grid, 0.0, 0.0, 466.4).unwrap();
        let (_, reference) = uliege();
        assert!(zero.price.iter().all(|&p| p == 0.0));
        assert_eq!(zero.eng_min, reference.eng_min);
        assert_eq!(zero.ramp_limit, reference.ramp_limit);
    }

    #[test]
    fn non_positive_capacity_rejected() {
        let grid = TimeGrid::quarter_hourly();
        assert!(matches!(
            build_cre_policy(&grid, 1.0, 1.0, 0.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(build_cre_policy(&grid, 1.0, 1.0, -3.0).is_err());
    }

    #[test]
    fn engagement_checks() {
        let (grid, policy) = uliege();
        let flat_floor = CreRules { eng_min_peak: 0.0, ..CreRules::default() }
            .build(&grid, 100.0, 100.0, 466.4)
            .unwrap();
        let zero = EngagementPlan(vec![0.0; 96]);
        assert_eq!(check_engagement(&zero, &flat_floor).unwrap(), None);
        assert!(matches!(
            check_engagement(&zero, &policy).unwrap(),
            Some(EngagementViolation::BelowMinimum { period: 76, .. })
        ));

        let mut plan = vec![0.0; 96];
        for v in plan.iter_mut().skip(10).take(10) {
            *v = 40.0;
        }
        let verdict = check_engagement(&EngagementPlan(plan), &policy).unwrap();
        assert!(matches!(verdict, Some(EngagementViolation::Ramp { period: 10, .. })));

        // the first period is free of the ramp rule
        let mut plan = vec![0.0f64; 96];
        plan[0] = 400.0;
        plan[1] = 400.0 - 34.0;
        for t in 2..96 {
            plan[t] = (plan[t - 1] - 34.0).max(0.0);
        }
        for t in 76..84 {
            plan[t] = plan[t].max(0.2 * 466.4);
        }
        // the climb into the peak floor happens in one step of 93.28 > 34.98
        let verdict = check_engagement(&EngagementPlan(plan.clone()), &policy).unwrap();
        assert!(matches!(verdict, Some(EngagementViolation::Ramp { period: 76, .. })));
        for t in 70..76 {
            plan[t] = 0.2 * 466.4 * (t - 69) as f64 / 7.0;
        }
        for t in 84..96 {
            plan[t] = (0.2 * 466.4 - 30.0 * (t - 83) as f64).max(0.0);
        }
        assert_eq!(check_engagement(&EngagementPlan(plan), &policy).unwrap(), None);

        let err = check_engagement(&EngagementPlan(vec![0.0; 3]), &policy).unwrap_err();
        assert!(matches!(err, Error::Shape { expected: 96, got: 3, .. }));
    }

    #[test]
    fn bound_violations_reported() {
        let (_, policy) = uliege();
        let mut plan = vec![0.0; 96];
        plan[0] = -30.0;
        let v = check_engagement(&EngagementPlan(plan), &policy).unwrap().unwrap();
        assert!(matches!(v, EngagementViolation::BelowMinimum { period: 0, .. }));
    }

    #[test]
    fn penalty_examples() {
        let (grid, policy) = uliege();
        assert_eq!(penalty(200.0, 200.0, 100.0, &policy, &grid), 0.0);
        assert_eq!(penalty(200.0, 200.0 - policy.deadband, 100.0, &policy, &grid), 0.0);
        // shortfall of 10 kW beyond the deadband
        let e = 200.0;
        let p = e - policy.deadband - 10.0;
        let brute = 0.25 * 0.1 / 466.4 * 10.0 * (10.0 + 4.0 * 23.32);
        let got = penalty(e, p, 100.0, &policy, &grid);
        assert!((got - brute).abs() < 1e-12);
        assert!((got - 0.0554).abs() < 1e-4);
    }

    #[test]
    fn remuneration_examples() {
        let (grid, policy) = uliege();
        assert_eq!(net_remuneration(0.0, 0.0, 100.0, &policy, &grid), 0.0);
        assert!((net_remuneration(400.0, 400.0, 100.0, &policy, &grid) - 10.0).abs() < 1e-12);
        assert!((net_remuneration(-10.0, -10.0, 100.0, &policy, &grid) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn symmetric_penalty_charges_overproduction() {
        let (grid, policy) = uliege();
        let over = symmetric_penalty(100.0, 100.0 + policy.deadband + 10.0, 100.0, &policy, &grid);
        let under = penalty(100.0, 100.0 - policy.deadband - 10.0, 100.0, &policy, &grid);
        assert!((over - under).abs() < 1e-12);
        assert_eq!(penalty(100.0, 400.0, 100.0, &policy, &grid), 0.0);
    }

    #[test]
    fn storage_rules_sizing() {
        let s = SystemConfig::sized(466.4, 0.5, &StorageRules::default()).unwrap();
        assert!((s.nominal_capacity - 233.2).abs() < 1e-9);
        assert!((s.soc_min - 23.32).abs() < 1e-9);
        assert!((s.soc_max - 209.88).abs() < 1e-9);
        assert!((s.charge_power - 233.2).abs() < 1e-9);
        assert_eq!(s.soc_init, s.soc_end);
        assert!(s.has_storage());
        assert!(!SystemConfig::pv_only(10.0).has_storage());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn penalty_threshold_and_monotone(e in -50.0..466.0f64, gap in 0.0..300.0f64, price in 0.0..500.0f64) {
                let (grid, policy) = uliege();
                let at = e - policy.deadband;
                prop_assert_eq!(penalty(e, at + gap, price, &policy, &grid), 0.0);
                let a = penalty(e, at - gap, price, &policy, &grid);
                let b = penalty(e, at - gap - 1.0, price, &policy, &grid);
                if price > 0.0 {
                    prop_assert!(b > a);
                }
                // continuity at the threshold
                prop_assert!(penalty(e, at - 1e-9, price, &policy, &grid) < 1e-9);
            }

            #[test]
            fn penalty_linear_in_price_and_step(e in 0.0..466.0f64, short in 0.0..200.0f64, price in 1.0..400.0f64, k in 0.1..5.0f64) {
                let (grid, policy) = uliege();
                let p = e - policy.deadband - short;
                let base = penalty(e, p, price, &policy, &grid);
                let scaled = penalty(e, p, k * price, &policy, &grid);
                prop_assert!((scaled - k * base).abs() <= 1e-9 * (1.0 + scaled.abs()));
                let half = TimeGrid::daily(0.5, 19.0, 21.0).unwrap();
                let twice = penalty(e, p, price, &policy, &half);
                prop_assert!((twice - 2.0 * base).abs() <= 1e-9 * (1.0 + twice.abs()));
            }

            #[test]
            fn zero_price_zero_remuneration(e in -50.0..466.0f64, p in -50.0..466.0f64) {
                let (grid, policy) = uliege();
                prop_assert_eq!(net_remuneration(e, p, 0.0, &policy, &grid), 0.0);
            }
        }
    }
}
