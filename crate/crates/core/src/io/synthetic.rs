//! Seed-deterministic synthetic PV dataset.
//!
//! Irradiance is the clear-sky value scaled by an AR(1) clear-sky index;
//! power follows the PVUSA model. The forecast error is a second AR(1)
//! process whose amplitude follows the clear-sky power, so it vanishes at
//! night.

use chrono::{Datelike, Duration, NaiveDate, NaiveTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::Config;
use super::DatasetDay;
use crate::pvusa::{clear_sky_irradiance, pvusa_eval, PvusaParams, WeatherSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub start: NaiveDate,
    pub days: usize,
    pub step_minutes: usize,
    pub latitude: f64,
    pub longitude: f64,
    pub pv_capacity: f64,
    pub model: PvusaParams,
    pub seed: u64,
    pub cloud_ar: f64,
    pub cloud_std: f64,
    pub cloud_mean: f64,
    pub forecast_ar: f64,
    /// Fraction of PV capacity.
    pub forecast_std: f64,
    /// Fraction of PV capacity.
    pub forecast_bias: f64,
    pub temp_mean: f64,
    pub temp_seasonal: f64,
    pub temp_diurnal: f64,
}

impl SyntheticParams {
    pub fn from_config(cfg: &Config) -> Self {
        let d = &cfg.data;
        Self {
            start: d.start,
            days: d.days,
            step_minutes: cfg.tariff.step_minutes,
            latitude: d.latitude,
            longitude: d.longitude,
            pv_capacity: cfg.system.pv_capacity,
            model: PvusaParams::LIEGE,
            seed: d.seed,
            cloud_ar: d.cloud_ar,
            cloud_std: d.cloud_std,
            cloud_mean: d.cloud_mean,
            forecast_ar: d.forecast_ar,
            forecast_std: d.forecast_std,
            forecast_bias: d.forecast_bias,
            temp_mean: d.temp_mean,
            temp_seasonal: d.temp_seasonal,
            temp_diurnal: d.temp_diurnal,
        }
    }
}

/// Stationary AR(1) process with the given marginal standard deviation.
struct Ar1 {
    phi: f64,
    innovation: f64,
    state: f64,
    rng: ChaCha8Rng,
}

impl Ar1 {
    fn new(phi: f64, std: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let z: f64 = StandardNormal.sample(&mut rng);
        let state = std * z;
        Self { phi, innovation: std * (1.0 - phi * phi).sqrt(), state, rng }
    }

    fn next(&mut self) -> f64 {
        let e: f64 = StandardNormal.sample(&mut self.rng);
        self.state = self.phi * self.state + self.innovation * e;
        self.state
    }
}

pub fn generate_synthetic_dataset(p: &SyntheticParams) -> Result<Vec<DatasetDay>> {
    if p.days == 0 {
        return Err(Error::InvalidConfig("synthetic dataset needs at least one day".into()));
    }
    if p.step_minutes == 0 || 1440 % p.step_minutes != 0 {
        return Err(Error::InvalidConfig(format!("{} min does not divide a day", p.step_minutes)));
    }
    if !(p.cloud_ar.abs() < 1.0 && p.forecast_ar.abs() < 1.0) {
        return Err(Error::InvalidConfig("autoregressive coefficients must lie in (-1, 1)".into()));
    }
    if !(p.pv_capacity > 0.0) || p.cloud_std < 0.0 || p.forecast_std < 0.0 {
        return Err(Error::InvalidConfig("invalid synthetic dataset parameters".into()));
    }
    let periods = 1440 / p.step_minutes;
    let mut cloud = Ar1::new(p.cloud_ar, p.cloud_std, p.seed, 0);
    let mut error = Ar1::new(p.forecast_ar, p.forecast_std, p.seed, 1);
    let mut noise = Ar1::new(0.9, 1.0, p.seed, 2);

    let mut out = Vec::with_capacity(p.days);
    for k in 0..p.days {
        let date = p.start + Duration::days(k as i64);
        let seasonal = p.temp_seasonal
            * (2.0 * std::f64::consts::PI * (date.ordinal() as f64 - 200.0) / 365.25).cos();
        let mut wx = WeatherSeries {
            timestamps: Vec::with_capacity(periods),
            irradiance: Vec::with_capacity(periods),
            temperature: Vec::with_capacity(periods),
        };
        let mut measurements = Vec::with_capacity(periods);
        let mut forecast = Vec::with_capacity(periods);
        for t in 0..periods {
            let start = date.and_time(NaiveTime::MIN) + Duration::minutes((t * p.step_minutes) as i64);
            let mid = start + Duration::seconds((p.step_minutes * 30) as i64);
            let hour = (t as f64 + 0.5) * p.step_minutes as f64 / 60.0;
            let temp = p.temp_mean
                + seasonal
                + p.temp_diurnal * (2.0 * std::f64::consts::PI * (hour - 15.0) / 24.0).cos()
                + noise.next();
            let clear = clear_sky_irradiance(p.latitude, p.longitude, mid);
            let index = (p.cloud_mean + cloud.next()).clamp(0.0, 1.05);
            let irradiance = clear * index;
            let power = pvusa_eval(&p.model, irradiance, temp, Some(p.pv_capacity))?;
            let potential = pvusa_eval(&p.model, clear, temp, Some(p.pv_capacity))? / p.pv_capacity;
            let err = (p.forecast_bias + error.next()) * p.pv_capacity * potential;
            measurements.push(power);
            forecast.push((power + err).clamp(0.0, p.pv_capacity));
            wx.timestamps.push(start);
            wx.irradiance.push(irradiance);
            wx.temperature.push(temp);
        }
        out.push(DatasetDay { date, measurements, forecast, weather: Some(wx) });
    }
    Ok(out)
}

/// Mean output over the sunlit periods as a fraction of capacity.
pub fn daytime_capacity_factor(days: &[DatasetDay], p: &SyntheticParams) -> f64 {
    let mut energy = 0.0;
    let mut sunlit = 0usize;
    for d in days {
        for (t, m) in d.measurements.iter().enumerate() {
            let mid = d.date.and_time(NaiveTime::MIN)
                + Duration::seconds(((2 * t + 1) * p.step_minutes * 30) as i64);
            if clear_sky_irradiance(p.latitude, p.longitude, mid) > 0.0 {
                energy += m;
                sunlit += 1;
            }
        }
    }
    if sunlit == 0 {
        0.0
    } else {
        energy / (sunlit as f64 * p.pv_capacity)
    }
}
