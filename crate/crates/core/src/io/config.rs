//! Flat `section.key = value` configuration.
//!
//! Lines starting with `#` are comments. Every key has a default, so an
//! empty file is a complete configuration; `Config::dump` writes all of
//! them back in the same format.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use crate::domain::{CreRules, StorageRules, SystemConfig, TariffPolicy, TimeGrid};
use crate::optim::{IpmSettings, MiqpSettings};
use crate::planner::{PlannerMode, PlannerSettings};
use crate::sim::SimSettings;
use crate::sizing::{EconParams, SizingBase};
use crate::{Error, Result};

/// Conversion between configuration text and typed values.
pub trait ConfigValue: Sized {
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{s}` is not finite"))
        }
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

impl ConfigValue for usize {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for u64 {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for bool {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        match s {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(format!("`{s}` is not a boolean")),
        }
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for NaiveDate {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("`{s}` is not a YYYY-MM-DD date"))
    }

    fn render(&self) -> String {
        self.format("%Y-%m-%d").to_string()
    }
}

impl ConfigValue for Vec<f64> {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let out = s
            .split(',')
            .map(|p| f64::parse_value(p.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if out.is_empty() {
            return Err("list is empty".into());
        }
        Ok(out)
    }

    fn render(&self) -> String {
        self.iter().map(|v| v.render()).collect::<Vec<_>>().join(", ")
    }
}

macro_rules! config_schema {
    ($(
        $(#[$smeta:meta])*
        $section:ident: $sty:ident {
            $( $key:ident: $ty:ty = $default:expr, $doc:literal; )*
        }
    )*) => {
        $(
            $(#[$smeta])*
            #[derive(Debug, Clone, PartialEq)]
            pub struct $sty {
                $( #[doc = $doc] pub $key: $ty, )*
            }

            impl Default for $sty {
                fn default() -> Self {
                    Self { $( $key: $default, )* }
                }
            }
        )*

        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct Config {
            $( pub $section: $sty, )*
        }

        impl Config {
            /// Every accepted `section.key`.
            pub fn keys() -> Vec<&'static str> {
                vec![ $( $( concat!(stringify!($section), ".", stringify!($key)), )* )* ]
            }

            /// Sets one key from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( $(
                        concat!(stringify!($section), ".", stringify!($key)) => {
                            self.$section.$key = <$ty as ConfigValue>::parse_value(value)
                                .map_err(|e| Error::InvalidConfig(format!("{key}: {e}")))?;
                        }
                    )* )*
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown key `{key}`; valid keys are: {}",
                            Self::keys().join(", ")
                        )))
                    }
                }
                Ok(())
            }

            /// Full configuration in the file format, with documentation.
            pub fn dump(&self) -> String {
                let mut out = String::new();
                $(
                    let _ = writeln!(out, "# [{}]", stringify!($section));
                    $(
                        let _ = writeln!(out, "# {}", $doc);
                        let _ = writeln!(
                            out,
                            "{}.{} = {}",
                            stringify!($section),
                            stringify!($key),
                            ConfigValue::render(&self.$section.$key)
                        );
                    )*
                    out.push('\n');
                )*
                out
            }
        }
    };
}

config_schema! {
    /// Tender rules; fractions refer to the installed PV capacity.
    tariff: TariffSection {
        price: f64 = 100.0, "selling price outside the peak window (EUR/MWh)";
        peak_price_factor: f64 = 1.0, "peak price as a multiple of the selling price";
        withdraw_price_factor: f64 = 1.0, "withdrawal price as a multiple of the selling price";
        step_minutes: usize = 15, "planning period (minutes)";
        peak_start_h: f64 = 19.0, "start of the peak window (hour of day, UTC)";
        peak_end_h: f64 = 21.0, "end of the peak window (hour of day, UTC, exclusive)";
        ramp_offpeak: f64 = 0.075, "engagement ramp limit off-peak";
        ramp_peak: f64 = 0.15, "engagement ramp limit in the peak window";
        eng_min_offpeak: f64 = -0.05, "lowest engagement off-peak";
        eng_min_peak: f64 = 0.20, "lowest engagement in the peak window";
        prod_min_offpeak: f64 = -0.05, "lowest production off-peak";
        prod_min_peak: f64 = 0.15, "lowest production in the peak window";
        eng_max: f64 = 1.0, "highest engagement";
        prod_max: f64 = 1.0, "highest production";
        deadband: f64 = 0.05, "tolerance band around the engagement";
    }
    /// Plant; battery figures are fractions of the nameplate energy.
    system: SystemSection {
        pv_capacity: f64 = 466.4, "installed PV capacity (kW)";
        ratio: f64 = 0.5, "battery nameplate energy over PV capacity (kWh/kW)";
        soc_min: f64 = 0.1, "lowest state of charge";
        soc_max: f64 = 0.9, "highest state of charge";
        soc_init: f64 = 0.1, "state of charge at the start and end of each day";
        c_rate: f64 = 1.0, "charge and discharge power per kWh of capacity (1/h)";
        eta_charge: f64 = 0.95, "charging efficiency";
        eta_discharge: f64 = 0.95, "discharging efficiency";
    }
    econ: EconSection {
        capex_pv: f64 = 700.0, "PV investment (EUR/kW)";
        capex_bess: f64 = 300.0, "battery investment (EUR/kWh)";
        opex: f64 = 0.01, "yearly operation and maintenance as a fraction of investment";
        lifetime: usize = 20, "project lifetime (years)";
        discount: f64 = 0.05, "discount rate";
        cycle_life: f64 = 3000.0, "full cycles a battery lasts";
    }
    sizing: SizingSection {
        ratios: Vec<f64> = vec![0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0], "battery ratios to evaluate";
        prices: Vec<f64> = vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0], "selling prices to evaluate (EUR/MWh)";
    }
    /// Synthetic dataset generator.
    data: DataSection {
        start: NaiveDate = NaiveDate::from_ymd_opt(2019, 8, 1).expect("valid date"), "first day";
        days: usize = 151, "number of days";
        latitude: f64 = 50.58, "site latitude (degrees north)";
        longitude: f64 = 5.57, "site longitude (degrees east)";
        seed: u64 = 2019, "random seed";
        cloud_ar: f64 = 0.85, "lag-one correlation of the clear-sky index per period";
        cloud_std: f64 = 0.25, "standard deviation of the clear-sky index";
        cloud_mean: f64 = 0.4, "mean clear-sky index";
        forecast_ar: f64 = 0.9, "lag-one correlation of the forecast error per period";
        forecast_std: f64 = 0.08, "forecast error standard deviation as a fraction of PV capacity";
        forecast_bias: f64 = 0.0, "forecast error mean as a fraction of PV capacity";
        temp_mean: f64 = 11.0, "yearly mean air temperature (C)";
        temp_seasonal: f64 = 8.0, "seasonal temperature amplitude (C)";
        temp_diurnal: f64 = 4.0, "diurnal temperature amplitude (C)";
    }
    scenarios: ScenarioSection {
        count: usize = 20, "scenarios per day for the stochastic planner";
        seed: u64 = 7, "random seed of the scenario generator";
    }
    solver: SolverSection {
        node_limit: usize = 1000, "branch-and-bound node limit";
        repair: bool = true, "repair simultaneous charge and discharge before branching";
        tolerance: f64 = 1e-9, "interior-point convergence tolerance";
        max_iterations: usize = 200, "interior-point iteration limit";
    }
    sim: SimSection {
        max_skipped: f64 = 0.05, "largest fraction of infeasible days before a run is invalid";
    }
}

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: k + 1,
                msg: "expected `section.key = value`".into(),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::InvalidConfig(msg) => Error::Parse { path: origin.to_path_buf(), line: k + 1, msg },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.tariff.step_minutes == 0 || 1440 % self.tariff.step_minutes != 0 {
            return bad("tariff.step_minutes must divide a day".into());
        }
        if self.tariff.price < 0.0 || self.tariff.peak_price_factor < 0.0 {
            return bad("prices must be non-negative".into());
        }
        if self.tariff.withdraw_price_factor < 0.0 {
            return bad("tariff.withdraw_price_factor must be non-negative".into());
        }
        if !(self.system.pv_capacity > 0.0) {
            return bad("system.pv_capacity must be positive".into());
        }
        if self.system.ratio < 0.0 {
            return bad("system.ratio must be non-negative".into());
        }
        if !(self.econ.discount >= 0.0 && self.econ.discount < 1.0) || self.econ.lifetime == 0 {
            return bad("econ.discount must lie in [0, 1) and econ.lifetime be at least 1".into());
        }
        if !(self.econ.cycle_life > 0.0) {
            return bad("econ.cycle_life must be positive".into());
        }
        if self.sizing.ratios.iter().any(|r| *r < 0.0) || self.sizing.prices.iter().any(|p| *p < 0.0) {
            return bad("sizing grids must be non-negative".into());
        }
        if self.data.days == 0 {
            return bad("data.days must be at least 1".into());
        }
        if self.data.latitude.abs() > 90.0 {
            return bad("data.latitude must lie in [-90, 90]".into());
        }
        if !(self.data.cloud_ar.abs() < 1.0 && self.data.forecast_ar.abs() < 1.0) {
            return bad("autoregressive coefficients must lie in (-1, 1)".into());
        }
        if self.data.cloud_std < 0.0 || self.data.forecast_std < 0.0 {
            return bad("standard deviations must be non-negative".into());
        }
        if self.scenarios.count == 0 {
            return bad("scenarios.count must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.sim.max_skipped) {
            return bad("sim.max_skipped must lie in [0, 1]".into());
        }
        self.storage_rules();
        self.system_config(self.system.ratio)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::daily(
            self.tariff.step_minutes as f64 / 60.0,
            self.tariff.peak_start_h,
            self.tariff.peak_end_h,
        )
    }

    pub fn cre_rules(&self) -> CreRules {
        let t = &self.tariff;
        CreRules {
            ramp_offpeak: t.ramp_offpeak,
            ramp_peak: t.ramp_peak,
            eng_min_offpeak: t.eng_min_offpeak,
            eng_min_peak: t.eng_min_peak,
            prod_min_offpeak: t.prod_min_offpeak,
            prod_min_peak: t.prod_min_peak,
            eng_max: t.eng_max,
            prod_max: t.prod_max,
            deadband: t.deadband,
        }
    }

    /// Tender policy at selling price `price` (EUR/MWh).
    pub fn policy(&self, grid: &TimeGrid, price: f64) -> Result<TariffPolicy> {
        self.cre_rules().build(
            grid,
            price,
            price * self.tariff.peak_price_factor,
            self.system.pv_capacity,
        )
    }

    pub fn storage_rules(&self) -> StorageRules {
        let s = &self.system;
        StorageRules {
            soc_min_frac: s.soc_min,
            soc_max_frac: s.soc_max,
            soc_init_frac: s.soc_init,
            c_rate: s.c_rate,
            eta_charge: s.eta_charge,
            eta_discharge: s.eta_discharge,
        }
    }

    pub fn system_config(&self, ratio: f64) -> Result<SystemConfig> {
        if ratio == 0.0 {
            return Ok(SystemConfig::pv_only(self.system.pv_capacity));
        }
        SystemConfig::sized(self.system.pv_capacity, ratio, &self.storage_rules())
    }

    pub fn planner_settings(&self) -> PlannerSettings {
        PlannerSettings {
            miqp: MiqpSettings {
                ipm: IpmSettings {
                    max_iterations: self.solver.max_iterations,
                    tolerance: self.solver.tolerance,
                    ..IpmSettings::default()
                },
                node_limit: self.solver.node_limit,
                repair: self.solver.repair,
                ..MiqpSettings::default()
            },
        }
    }

    pub fn sim_settings(&self, mode: PlannerMode) -> SimSettings {
        SimSettings {
            mode,
            scenarios: self.scenarios.count,
            seed: self.scenarios.seed,
            planner: self.planner_settings(),
            withdraw_price_factor: self.tariff.withdraw_price_factor,
            max_skipped: self.sim.max_skipped,
        }
    }

    pub fn econ(&self) -> EconParams {
        let e = &self.econ;
        EconParams {
            capex_bess: e.capex_bess,
            capex_pv: e.capex_pv,
            opex_frac: e.opex,
            lifetime: e.lifetime,
            discount: e.discount,
            cycle_life: e.cycle_life,
        }
    }

    pub fn sizing_base(&self, mode: PlannerMode) -> Result<SizingBase> {
        Ok(SizingBase {
            grid: self.grid()?,
            rules: self.cre_rules(),
            peak_price_factor: self.tariff.peak_price_factor,
            storage: self.storage_rules(),
            pv_capacity: self.system.pv_capacity,
            econ: self.econ(),
            sim: self.sim_settings(mode),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_case_study() {
        let c = Config::default();
        assert_eq!(c.system.pv_capacity, 466.4);
        assert_eq!((c.tariff.ramp_offpeak, c.tariff.ramp_peak), (0.075, 0.15));
        assert_eq!((c.tariff.eng_min_offpeak, c.tariff.eng_min_peak), (-0.05, 0.20));
        assert_eq!((c.tariff.prod_min_offpeak, c.tariff.prod_min_peak), (-0.05, 0.15));
        assert_eq!((c.tariff.eng_max, c.tariff.prod_max, c.tariff.deadband), (1.0, 1.0, 0.05));
        assert_eq!((c.tariff.peak_start_h, c.tariff.peak_end_h), (19.0, 21.0));
        assert_eq!(c.tariff.step_minutes, 15);
        assert_eq!((c.econ.capex_bess, c.econ.capex_pv, c.econ.opex), (300.0, 700.0, 0.01));
        assert_eq!((c.econ.lifetime, c.econ.discount, c.econ.cycle_life), (20, 0.05, 3000.0));
        assert_eq!((c.system.eta_charge, c.system.eta_discharge, c.system.c_rate), (0.95, 0.95, 1.0));
        assert_eq!((c.system.soc_min, c.system.soc_max, c.system.soc_init), (0.1, 0.9, 0.1));
        assert_eq!(c.sizing.ratios, vec![0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(c.sizing.prices, vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0]);
        assert_eq!(c.scenarios.count, 20);
        assert_eq!(c.data.days, 151);
        assert_eq!(c.data.start, NaiveDate::from_ymd_opt(2019, 8, 1).unwrap());
    }

    #[test]
    fn dump_parses_back() {
        let mut c = Config::default();
        c.set("tariff.price", "123.5").unwrap();
        c.set("sizing.ratios", "0.5, 1").unwrap();
        c.set("solver.repair", "false").unwrap();
        let back = Config::parse(&c.dump(), Path::new("dump")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = Config::parse("tariff.prise = 3\n", Path::new("x.cfg")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x.cfg:1"), "{msg}");
        assert!(msg.contains("tariff.price") && msg.contains("econ.cycle_life"), "{msg}");
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "tariff.price = abc",
            "tariff.price",
            "econ.lifetime = 0",
            "tariff.step_minutes = 7",
            "system.pv_capacity = -1",
            "sizing.ratios = ",
            "data.start = 2019-13-01",
        ] {
            assert!(Config::parse(text, Path::new("t")).is_err(), "{text}");
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = Config::parse("# hi\n\nsystem.ratio = 2 # inline\n", Path::new("t")).unwrap();
        assert_eq!(c.system.ratio, 2.0);
    }
}
