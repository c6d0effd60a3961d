//! PVUSA model `p = a·I + b·I² + c·I·T` linking irradiance `I` (W/m²) and
//! air temperature `T` (°C) to PV power (kW), its sliding-window
//! estimation, and a clear-sky irradiance helper.

use chrono::{Datelike, NaiveDateTime, Timelike};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvusaParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PvusaParams {
    /// Steady-state estimate for the 466.4 kW Liège installation.
    pub const LIEGE: Self = Self { a: 0.573, b: -7.68e-5, c: -1.86e-3 };

    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

/// Model output (kW); clipped to `[0, capacity]` when a capacity is given.
pub fn pvusa_eval(
    params: &PvusaParams,
    irradiance: f64,
    temperature: f64,
    capacity: Option<f64>,
) -> Result<f64> {
    if !(irradiance >= 0.0) {
        return Err(Error::Input(format!("irradiance must be >= 0, got {irradiance}")));
    }
    let p = irradiance * (params.a + params.b * irradiance + params.c * temperature);
    Ok(match capacity {
        Some(cap) => p.clamp(0.0, cap),
        None => p,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    pub timestamps: Vec<NaiveDateTime>,
    /// W/m²
    pub irradiance: Vec<f64>,
    /// °C
    pub temperature: Vec<f64>,
}

impl WeatherSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.timestamps.len();
        for (what, len) in [("irradiance", self.irradiance.len()), ("temperature", self.temperature.len())] {
            if len != n {
                return Err(Error::Shape { what, expected: n, got: len });
            }
        }
        if let Some(k) = self.irradiance.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Data(format!("invalid irradiance at sample {k}")));
        }
        if let Some(k) = self.temperature.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("invalid temperature at sample {k}")));
        }
        if let Some(k) = self.timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!("timestamps not increasing at sample {}", k + 1)));
        }
        Ok(())
    }
}

/// Samples at or below this irradiance (W/m²) are treated as night.
pub const DAYLIGHT_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowOutcome {
    Fitted,
    /// Too few daytime samples; the previous estimate is carried over.
    Skipped,
    /// Daytime samples do not identify all three parameters; the previous
    /// estimate is carried over.
    RankDeficient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowFit {
    /// End of the window (inclusive).
    pub end: NaiveDateTime,
    pub samples: usize,
    pub outcome: WindowOutcome,
    /// Estimate in force after this window, if any has been obtained yet.
    pub params: Option<PvusaParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvusaFit {
    pub windows: Vec<WindowFit>,
}

impl PvusaFit {
    /// Estimate of the last successfully fitted window.
    pub fn final_params(&self) -> Option<PvusaParams> {
        self.windows.iter().rev().find_map(|w| w.params)
    }

    pub fn fitted_windows(&self) -> usize {
        self.windows.iter().filter(|w| w.outcome == WindowOutcome::Fitted).count()
    }
}

enum Local {
    Fit(PvusaParams),
    Skip(WindowOutcome),
}

/// Least squares with `a ≥ 0, b ≤ 0, c ≤ 0`, by enumeration of the
/// active sets of the three sign constraints.
fn sign_constrained_ls(rows: &[[f64; 3]], y: &[f64]) -> Option<PvusaParams> {
    // column scaling for conditioning
    let mut scale = [0.0f64; 3];
    for r in rows {
        for k in 0..3 {
            scale[k] = scale[k].max(r[k].abs());
        }
    }
    if scale.iter().any(|s| *s == 0.0) {
        return None;
    }
    let n = rows.len();
    let design = DMatrix::from_fn(n, 3, |i, k| rows[i][k] / scale[k]);
    let sv = design.clone().svd(false, false).singular_values;
    if !(sv.min() > 1e-9 * sv.max()) {
        return None;
    }
    let target = DVector::from_column_slice(y);
    let sign = [1.0, -1.0, -1.0];
    let mut best: Option<(f64, [f64; 3])> = None;
    for mask in 0u8..8 {
        let free: Vec<usize> = (0..3).filter(|k| mask & (1 << k) != 0).collect();
        let mut theta = [0.0; 3];
        if !free.is_empty() {
            let sub = design.select_columns(&free);
            let qr = sub.qr();
            let qty = qr.q().transpose() * &target;
            let Some(sol) = qr.r().solve_upper_triangular(&qty) else { continue };
            for (i, &k) in free.iter().enumerate() {
                theta[k] = sol[i];
            }
        }
        if (0..3).any(|k| theta[k] * sign[k] < 0.0) {
            continue;
        }
        let resid = &target - &design * DVector::from_column_slice(&theta);
        let sse = resid.norm_squared();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, theta));
        }
    }
    best.map(|(_, t)| PvusaParams { a: t[0] / scale[0], b: t[1] / scale[1], c: t[2] / scale[2] })
}

/// Refits the model on a window of `window_hours` ending at every whole
/// `step_hours` multiple after the first sample.
pub fn fit_pvusa(
    power: &[f64],
    weather: &WeatherSeries,
    window_hours: f64,
    step_hours: f64,
) -> Result<PvusaFit> {
    weather.validate()?;
    if power.len() != weather.len() {
        return Err(Error::Shape { what: "power series", expected: weather.len(), got: power.len() });
    }
    if !(window_hours > 0.0 && step_hours > 0.0) {
        return Err(Error::Input("window and step lengths must be positive".into()));
    }
    if weather.is_empty() {
        return Ok(PvusaFit { windows: Vec::new() });
    }
    let to_delta = |h: f64| chrono::Duration::milliseconds((h * 3.6e6).round() as i64);
    let window = to_delta(window_hours);
    let step = to_delta(step_hours);
    let first = weather.timestamps[0];
    let last = *weather.timestamps.last().expect("non-empty");

    let mut ends = Vec::new();
    let mut end = first + step;
    while end <= last + step {
        ends.push(end.min(last));
        if end >= last {
            break;
        }
        end += step;
    }
    ends.dedup();

    let ts = &weather.timestamps;
    let local: Vec<(usize, Local)> = ends
        .par_iter()
        .map(|&end| {
            let hi = ts.partition_point(|t| *t <= end);
            let lo = ts.partition_point(|t| *t <= end - window);
            let mut rows = Vec::new();
            let mut y = Vec::new();
            for k in lo..hi {
                let i = weather.irradiance[k];
                if i > DAYLIGHT_THRESHOLD && power[k].is_finite() {
                    rows.push([i, i * i, i * weather.temperature[k]]);
                    y.push(power[k]);
                }
            }
            let n = rows.len();
            if n < 3 {
                return (n, Local::Skip(WindowOutcome::Skipped));
            }
            match sign_constrained_ls(&rows, &y) {
                Some(p) => (n, Local::Fit(p)),
                None => (n, Local::Skip(WindowOutcome::RankDeficient)),
            }
        })
        .collect();

    let mut current = None;
    let windows = ends
        .into_iter()
        .zip(local)
        .map(|(end, (samples, l))| {
            let outcome = match l {
                Local::Fit(p) => {
                    current = Some(p);
                    WindowOutcome::Fitted
                }
                Local::Skip(o) => o,
            };
            WindowFit { end, samples, outcome, params: current }
        })
        .collect();
    Ok(PvusaFit { windows })
}

/// Haurwitz clear-sky global horizontal irradiance (W/m²) at a UTC time.
pub fn clear_sky_irradiance(latitude: f64, longitude: f64, timestamp: NaiveDateTime) -> f64 {
    let cos_z = cos_zenith(latitude, longitude, timestamp);
    if cos_z <= 0.0 {
        return 0.0;
    }
    1098.0 * cos_z * (-0.057 / cos_z).exp()
}

/// Cosine of the solar zenith angle from a low-order solar position model.
pub fn cos_zenith(latitude: f64, longitude: f64, timestamp: NaiveDateTime) -> f64 {
    let doy = timestamp.ordinal() as f64;
    let hours = timestamp.hour() as f64
        + timestamp.minute() as f64 / 60.0
        + timestamp.second() as f64 / 3600.0;
    let gamma = 2.0 * std::f64::consts::PI / 365.0 * (doy - 1.0 + (hours - 12.0) / 24.0);
    let decl = 0.006918 - 0.399912 * gamma.cos() + 0.070257 * gamma.sin()
        - 0.006758 * (2.0 * gamma).cos()
        + 0.000907 * (2.0 * gamma).sin()
        - 0.002697 * (3.0 * gamma).cos()
        + 0.00148 * (3.0 * gamma).sin();
    let eot_min = 229.18
        * (0.000075 + 0.001868 * gamma.cos()
            - 0.032077 * gamma.sin()
            - 0.014615 * (2.0 * gamma).cos()
            - 0.040849 * (2.0 * gamma).sin());
    let solar_time = hours + longitude / 15.0 + eot_min / 60.0;
    let hour_angle = (15.0 * (solar_time - 12.0)).to_radians();
    let phi = latitude.to_radians();
    phi.sin() * decl.sin() + phi.cos() * decl.cos() * hour_angle.cos()
}
