//! Levelized cost, net revenue and the grid search over selling price and
//! battery size.

use rayon::prelude::*;

use crate::domain::{CreRules, StorageRules, SystemConfig, TimeGrid};
use crate::io::DatasetDay;
use crate::scenarios::CopulaModel;
use crate::sim::{simulate, AnnualFigures, SimSettings};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconParams {
    /// €/kWh of battery.
    pub capex_bess: f64,
    /// €/kW of PV.
    pub capex_pv: f64,
    /// Yearly O&M as a fraction of the investment.
    pub opex_frac: f64,
    pub lifetime: usize,
    pub discount: f64,
    /// Full cycles one battery lasts.
    pub cycle_life: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        Self {
            capex_bess: 300.0,
            capex_pv: 700.0,
            opex_frac: 0.01,
            lifetime: 20,
            discount: 0.05,
            cycle_life: 3000.0,
        }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<()> {
        if self.lifetime == 0 {
            return Err(Error::InvalidConfig("lifetime must be at least one year".into()));
        }
        if !(self.discount >= 0.0 && self.discount < 1.0) {
            return Err(Error::InvalidConfig(format!("discount rate {} outside [0, 1)", self.discount)));
        }
        if !(self.cycle_life > 0.0) {
            return Err(Error::InvalidConfig("cycle life must be positive".into()));
        }
        if !(self.capex_bess >= 0.0 && self.capex_pv >= 0.0 && self.opex_frac >= 0.0) {
            return Err(Error::InvalidConfig("costs must be non-negative".into()));
        }
        Ok(())
    }
}

/// Capital recovery factor `i / (1 − (1+i)^−n)`; `1/n` when `i = 0`.
pub fn crf(i: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("CRF needs at least one year".into()));
    }
    if !(i >= 0.0) || !i.is_finite() {
        return Err(Error::Domain(format!("CRF needs a non-negative rate, got {i}")));
    }
    if i == 0.0 {
        return Ok(1.0 / n as f64);
    }
    Ok(i / -(-(n as f64) * i.ln_1p()).exp_m1())
}

/// Batteries bought over the lifetime, at least one when there is storage.
pub fn battery_count(annual_cycles: f64, econ: &EconParams, system: &SystemConfig) -> u32 {
    if !system.has_storage() {
        return 0;
    }
    let needed = (econ.lifetime as f64 * annual_cycles / econ.cycle_life).ceil();
    needed.max(1.0) as u32
}

/// Up-front investment (€), replacements included.
pub fn investment(econ: &EconParams, system: &SystemConfig, batteries: u32) -> f64 {
    econ.capex_pv * system.pv_capacity + econ.capex_bess * system.nominal_capacity * f64::from(batteries)
}

/// Levelized cost of the exported energy (€/MWh).
pub fn lcoe(figures: &AnnualFigures, econ: &EconParams, system: &SystemConfig) -> Result<f64> {
    econ.validate()?;
    if !(figures.export_mwh > 0.0) {
        return Err(Error::UndefinedLcoe);
    }
    let inv = investment(econ, system, battery_count(figures.cycles, econ, system));
    let yearly = crf(econ.discount, econ.lifetime)? * inv
        + econ.opex_frac * inv
        + figures.withdraw_cost
        + figures.penalty;
    Ok(yearly / figures.export_mwh)
}

/// `R/E − LCOE` (€/MWh).
pub fn net(figures: &AnnualFigures, econ: &EconParams, system: &SystemConfig) -> Result<f64> {
    let cost = lcoe(figures, econ, system)?;
    Ok(figures.revenue / figures.export_mwh - cost)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingResult {
    pub price: f64,
    pub ratio: f64,
    pub lcoe: f64,
    pub net: f64,
    pub figures: AnnualFigures,
    pub battery_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingCell {
    pub price: f64,
    pub ratio: f64,
    /// The reason the cell is a hole when it could not be evaluated.
    pub result: std::result::Result<SizingResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceArgmax {
    pub price: f64,
    /// Best ratio and its net revenue, if any cell at this price is valid.
    pub best: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    /// Price-major order, each price with the ratios as given.
    pub cells: Vec<SizingCell>,
    pub argmax: Vec<PriceArgmax>,
}

impl GridSearch {
    pub fn cell(&self, price: f64, ratio: f64) -> Option<&SizingCell> {
        self.cells.iter().find(|c| c.price == price && c.ratio == ratio)
    }
}

/// Everything except the two searched dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SizingBase {
    pub grid: TimeGrid,
    pub rules: CreRules,
    pub peak_price_factor: f64,
    pub storage: StorageRules,
    pub pv_capacity: f64,
    pub econ: EconParams,
    pub sim: SimSettings,
}

/// Simulates and prices one (price, ratio) pair.
pub fn evaluate_cell(
    price: f64,
    ratio: f64,
    days: &[DatasetDay],
    model: Option<&CopulaModel>,
    base: &SizingBase,
) -> Result<std::result::Result<SizingResult, String>> {
    let policy = base.rules.build(&base.grid, price, price * base.peak_price_factor, base.pv_capacity)?;
    let system = if ratio == 0.0 {
        SystemConfig::pv_only(base.pv_capacity)
    } else {
        SystemConfig::sized(base.pv_capacity, ratio, &base.storage)?
    };
    let out = simulate(days, model, &policy, &system, &base.grid, &base.sim)?;
    if !out.valid {
        return Ok(Err(format!("{} of {} days infeasible", out.skipped.len(), days.len())));
    }
    let figures = out.figures;
    match lcoe(&figures, &base.econ, &system) {
        Ok(cost) => Ok(Ok(SizingResult {
            price,
            ratio,
            lcoe: cost,
            net: figures.revenue / figures.export_mwh - cost,
            figures,
            battery_count: battery_count(figures.cycles, &base.econ, &system),
        })),
        Err(Error::UndefinedLcoe) => Ok(Err("no energy exported".into())),
        Err(e) => Err(e),
    }
}

/// Best ratio per price over the valid cells; ties go to the smaller ratio.
pub fn argmax(prices: &[f64], cells: &[SizingCell]) -> Vec<PriceArgmax> {
    prices
        .iter()
        .map(|&price| {
            let mut best: Option<(f64, f64)> = None;
            for c in cells.iter().filter(|c| c.price == price) {
                let Ok(r) = &c.result else { continue };
                let better = match best {
                    None => true,
                    Some((br, bn)) => r.net > bn || (r.net == bn && r.ratio < br),
                };
                if better {
                    best = Some((r.ratio, r.net));
                }
            }
            PriceArgmax { price, best }
        })
        .collect()
}

pub fn grid_search(
    prices: &[f64],
    ratios: &[f64],
    days: &[DatasetDay],
    model: Option<&CopulaModel>,
    base: &SizingBase,
) -> Result<GridSearch> {
    if prices.is_empty() || ratios.is_empty() {
        return Err(Error::Input("sizing grids must be nonempty".into()));
    }
    base.econ.validate()?;
    let pairs: Vec<(f64, f64)> = prices.iter().flat_map(|p| ratios.iter().map(move |r| (*p, *r))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(price, ratio)| {
            evaluate_cell(price, ratio, days, model, base).map(|result| SizingCell { price, ratio, result })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax = argmax(prices, &cells);
    Ok(GridSearch { cells, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annuity_oracle(i: f64, n: usize) -> f64 {
        1.0 / (1..=n).map(|t| (1.0 + i).powi(-(t as i32))).sum::<f64>()
    }

    #[test]
    fn crf_matches_annuity_sum() {
        assert!((crf(0.05, 20).unwrap() - annuity_oracle(0.05, 20)).abs() < 1e-12);
        assert!((crf(0.05, 20).unwrap() - 0.0802426).abs() < 1e-7);
        assert!((crf(0.07, 1).unwrap() - 1.07).abs() < 1e-12);
        assert_eq!(crf(0.0, 20).unwrap(), 0.05);
        assert!((crf(1e-12, 20).unwrap() - 0.05).abs() < 1e-9);
        assert!(crf(-0.1, 20).is_err() && crf(0.05, 0).is_err());
    }

    fn figures(export_mwh: f64) -> AnnualFigures {
        AnnualFigures { export_mwh, revenue: 100.0 * export_mwh, ..Default::default() }
    }

    #[test]
    fn pv_only_lcoe_example() {
        let system = SystemConfig::pv_only(466.4);
        let econ = EconParams::default();
        let oracle = (annuity_oracle(0.05, 20) * 326_480.0 + 3_264.8) / 600.0;
        let v = lcoe(&figures(600.0), &econ, &system).unwrap();
        assert!((v - oracle).abs() < 1e-9);
        assert!((v - 49.10).abs() < 0.01);
        let half = lcoe(&figures(1200.0), &econ, &system).unwrap();
        assert!((half - v / 2.0).abs() < 1e-12);
        let n = net(&figures(600.0), &econ, &system).unwrap();
        assert!((n - (100.0 - oracle)).abs() < 1e-9);
        assert!((n - 50.90).abs() < 0.01);
    }

    #[test]
    fn battery_replacements() {
        let econ = EconParams::default();
        let system = SystemConfig::sized(466.4, 0.5, &StorageRules::default()).unwrap();
        assert_eq!(battery_count(200.0, &econ, &system), 2);
        assert_eq!(battery_count(150.0, &econ, &system), 1);
        assert_eq!(battery_count(0.0, &econ, &system), 1);
        assert_eq!(battery_count(500.0, &econ, &SystemConfig::pv_only(466.4)), 0);
        assert!((investment(&econ, &system, 2) - (326_480.0 + 2.0 * 300.0 * 233.2)).abs() < 1e-9);
    }

    #[test]
    fn zero_export_is_undefined() {
        let r = lcoe(&AnnualFigures::default(), &EconParams::default(), &SystemConfig::pv_only(1.0));
        assert!(matches!(r, Err(Error::UndefinedLcoe)));
    }

    fn cell(price: f64, ratio: f64, net: Option<f64>) -> SizingCell {
        SizingCell {
            price,
            ratio,
            result: net
                .map(|net| SizingResult {
                    price,
                    ratio,
                    lcoe: 0.0,
                    net,
                    figures: AnnualFigures::default(),
                    battery_count: 1,
                })
                .ok_or_else(|| "hole".to_string()),
        }
    }

    #[test]
    fn argmax_prefers_smaller_ratio_and_skips_holes() {
        let cells = vec![
            cell(50.0, 1.0, Some(3.0)),
            cell(50.0, 0.5, Some(3.0)),
            cell(50.0, 2.0, None),
            cell(100.0, 0.5, Some(1.0)),
            cell(100.0, 1.0, Some(2.0)),
            cell(150.0, 0.5, None),
        ];
        let a = argmax(&[50.0, 100.0, 150.0], &cells);
        assert_eq!(a[0].best, Some((0.5, 3.0)));
        assert_eq!(a[1].best, Some((1.0, 2.0)));
        assert_eq!(a[2].best, None);
    }
}
