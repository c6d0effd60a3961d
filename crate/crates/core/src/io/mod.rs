//! Datasets, CSV interchange and configuration.
//!
//! Every numeric CSV field is written with nine fractional digits, so a
//! write followed by a read reproduces values to 1e-9.

pub mod config;
pub mod synthetic;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};

use crate::domain::{DispatchTrace, EngagementPlan};
use crate::pvusa::WeatherSeries;
use crate::scenarios::ScenarioSet;
use crate::sim::DayRecord;
use crate::sizing::GridSearch;
use crate::{Error, Result};

pub use config::Config;
pub use synthetic::{generate_synthetic_dataset, SyntheticParams};

/// One day of PV data on the planning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDay {
    pub date: NaiveDate,
    /// Realised PV power per period (kW).
    pub measurements: Vec<f64>,
    /// Day-ahead point forecast per period (kW).
    pub forecast: Vec<f64>,
    pub weather: Option<WeatherSeries>,
}

impl DatasetDay {
    pub fn periods(&self) -> usize {
        self.measurements.len()
    }

    /// Forecast errors `measurement − forecast` per period.
    pub fn errors(&self) -> Vec<f64> {
        self.measurements.iter().zip(&self.forecast).map(|(m, f)| m - f).collect()
    }

    pub fn validate(&self, periods: usize, pv_capacity: f64) -> Result<()> {
        for (what, v) in [("measurements", &self.measurements), ("forecast", &self.forecast)] {
            if v.len() != periods {
                return Err(Error::Shape { what, expected: periods, got: v.len() });
            }
            if let Some(t) = v.iter().position(|x| !(*x >= 0.0 && *x <= pv_capacity)) {
                return Err(Error::Data(format!(
                    "{} {what} {} kW at period {t} outside [0, {pv_capacity}]",
                    self.date, v[t]
                )));
            }
        }
        Ok(())
    }
}

/// A day of resampled measurements before it is paired with a forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredDay {
    pub date: NaiveDate,
    pub power: Vec<f64>,
    pub weather: Option<WeatherSeries>,
}

/// Loader output with the human-readable notes on dropped or patched days.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub days: Vec<MeasuredDay>,
    pub diagnostics: Vec<String>,
}

/// Largest fraction of empty periods a day may have and still be kept.
pub const MAX_MISSING_FRACTION: f64 = 0.10;

pub fn format_value(v: f64) -> String {
    let s = format!("{v:.9}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Parses an ISO-8601 timestamp; zoned values are converted to UTC.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    let s = s.strip_suffix('Z').unwrap_or(s);
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    None
}

fn format_timestamp(t: NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%S").to_string()
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("`{s}` is not a YYYY-MM-DD date"))
}

fn parse_number(s: &str, column: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("column {column}: `{s}` is not a finite number")),
    }
}

fn parse_index(s: &str, column: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("column {column}: `{s}` is not a non-negative integer"))
}

struct Table<'p> {
    origin: &'p Path,
    reader: csv::Reader<Box<dyn Read + 'p>>,
    columns: usize,
}

impl<'p> Table<'p> {
    /// Opens a CSV stream whose header must start with `required` and may
    /// continue with `optional` (all or none).
    fn open(
        input: impl Read + 'p,
        origin: &'p Path,
        required: &[&str],
        optional: &[&str],
    ) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(Box::new(input) as Box<dyn Read + 'p>);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| csv_error(origin, &e))?
            .iter()
            .map(str::to_string)
            .collect();
        let full: Vec<&str> = required.iter().chain(optional).copied().collect();
        let columns = if header == required {
            required.len()
        } else if !optional.is_empty() && header == full {
            full.len()
        } else {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                msg: format!("expected header `{}`, got `{}`", full.join(","), header.join(",")),
            });
        };
        Ok(Self { origin, reader, columns })
    }

    /// Calls `row` for every record with its line number.
    fn for_each(
        mut self,
        mut row: impl FnMut(usize, &csv::StringRecord) -> std::result::Result<(), String>,
    ) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line() as usize);
                    row(line, &record).map_err(|msg| Error::Parse {
                        path: self.origin.to_path_buf(),
                        line,
                        msg,
                    })?;
                }
                Err(e) => return Err(csv_error(self.origin, &e)),
            }
        }
    }
}

fn csv_error(origin: &Path, e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { path: origin.to_path_buf(), line, msg: e.to_string() }
}

fn open_file(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Writes through a buffered file and flushes it.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = create_file(path)?;
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Default)]
struct DayBins {
    power: Vec<f64>,
    irradiance: Vec<f64>,
    temperature: Vec<f64>,
    count: Vec<usize>,
}

/// Reads `timestamp,pv_kw[,irradiance_wm2,temp_c]` and mean-resamples it
/// to periods of `step_minutes`. A sample belongs to the period that
/// contains its timestamp.
pub fn read_measurements(input: impl Read, origin: &Path, step_minutes: usize) -> Result<LoadReport> {
    if step_minutes == 0 || 1440 % step_minutes != 0 {
        return Err(Error::InvalidConfig(format!("{step_minutes} min does not divide a day")));
    }
    let periods = 1440 / step_minutes;
    let table = Table::open(input, origin, &["timestamp", "pv_kw"], &["irradiance_wm2", "temp_c"])?;
    let with_weather = table.columns == 4;
    let mut bins: BTreeMap<NaiveDate, DayBins> = BTreeMap::new();
    let mut last: Option<(NaiveDateTime, usize)> = None;
    let mut order_error: Option<Error> = None;
    table.for_each(|line, rec| {
        let ts = parse_timestamp(&rec[0]).ok_or_else(|| format!("`{}` is not an ISO-8601 timestamp", &rec[0]))?;
        let p = parse_number(&rec[1], "pv_kw")?;
        let (irr, temp) = if with_weather {
            (parse_number(&rec[2], "irradiance_wm2")?, parse_number(&rec[3], "temp_c")?)
        } else {
            (0.0, 0.0)
        };
        if let Some((prev, prev_line)) = last {
            if ts <= prev && order_error.is_none() {
                order_error = Some(Error::Data(format!(
                    "{}: timestamps not increasing at line {line} ({} after {} on line {prev_line})",
                    origin.display(),
                    format_timestamp(ts),
                    format_timestamp(prev)
                )));
            }
        }
        last = Some((ts, line));
        let minutes = ts.time().signed_duration_since(NaiveTime::MIN).num_minutes() as usize;
        let bin = (minutes / step_minutes).min(periods - 1);
        let day = bins.entry(ts.date()).or_insert_with(|| DayBins {
            power: vec![0.0; periods],
            irradiance: vec![0.0; periods],
            temperature: vec![0.0; periods],
            count: vec![0; periods],
        });
        day.power[bin] += p;
        day.irradiance[bin] += irr;
        day.temperature[bin] += temp;
        day.count[bin] += 1;
        Ok(())
    })?;
    if let Some(e) = order_error {
        return Err(e);
    }

    let mut days = Vec::new();
    let mut diagnostics = Vec::new();
    for (date, b) in bins {
        let missing = b.count.iter().filter(|c| **c == 0).count();
        if missing as f64 > MAX_MISSING_FRACTION * periods as f64 {
            diagnostics.push(format!("{date}: dropped, {missing} of {periods} periods missing"));
            continue;
        }
        let mean = |sums: &[f64]| -> Vec<Option<f64>> {
            sums.iter().zip(&b.count).map(|(s, c)| (*c > 0).then(|| s / *c as f64)).collect()
        };
        if missing > 0 {
            diagnostics.push(format!("{date}: {missing} missing periods interpolated"));
        }
        let power = interpolate_gaps(&mean(&b.power));
        let weather = with_weather.then(|| WeatherSeries {
            timestamps: (0..periods)
                .map(|t| date.and_time(NaiveTime::MIN) + chrono::Duration::minutes((t * step_minutes) as i64))
                .collect(),
            irradiance: interpolate_gaps(&mean(&b.irradiance)),
            temperature: interpolate_gaps(&mean(&b.temperature)),
        });
        days.push(MeasuredDay { date, power, weather });
    }
    Ok(LoadReport { days, diagnostics })
}

pub fn load_measurements(path: &Path, step_minutes: usize) -> Result<LoadReport> {
    read_measurements(open_file(path)?, path, step_minutes)
}

/// Fills `None` entries by linear interpolation between the nearest known
/// neighbours, or by the nearest known value at either end.
pub fn interpolate_gaps(values: &[Option<f64>]) -> Vec<f64> {
    let known: Vec<usize> = (0..values.len()).filter(|i| values[*i].is_some()).collect();
    if known.is_empty() {
        return vec![0.0; values.len()];
    }
    let mut out = Vec::with_capacity(values.len());
    let mut next = 0;
    for (i, v) in values.iter().enumerate() {
        if let Some(x) = v {
            out.push(*x);
            continue;
        }
        while next < known.len() && known[next] < i {
            next += 1;
        }
        let right = known.get(next).copied();
        let left = next.checked_sub(1).map(|k| known[k]);
        out.push(match (left, right) {
            (Some(l), Some(r)) => {
                let (a, b) = (values[l].unwrap_or(0.0), values[r].unwrap_or(0.0));
                a + (b - a) * (i - l) as f64 / (r - l) as f64
            }
            (Some(l), None) => values[l].unwrap_or(0.0),
            (None, Some(r)) => values[r].unwrap_or(0.0),
            (None, None) => 0.0,
        });
    }
    out
}

/// Pairs measurements with forecasts by date. Days missing either side are
/// dropped and values are clipped to `[0, pv_capacity]`, each with a note.
pub fn assemble_dataset(
    measured: Vec<MeasuredDay>,
    forecast: Vec<MeasuredDay>,
    pv_capacity: f64,
) -> (Vec<DatasetDay>, Vec<String>) {
    let mut fc: BTreeMap<NaiveDate, Vec<f64>> = forecast.into_iter().map(|d| (d.date, d.power)).collect();
    let mut notes = Vec::new();
    let mut out = Vec::new();
    let clip = |notes: &mut Vec<String>, date: NaiveDate, what: &str, v: Vec<f64>| -> Vec<f64> {
        let n = v.iter().filter(|x| !(**x >= 0.0 && **x <= pv_capacity)).count();
        if n > 0 {
            notes.push(format!("{date}: {n} {what} values clipped to [0, {pv_capacity}]"));
        }
        v.into_iter().map(|x| x.clamp(0.0, pv_capacity)).collect()
    };
    for day in measured {
        let Some(f) = fc.remove(&day.date) else {
            notes.push(format!("{}: measurements without forecast, dropped", day.date));
            continue;
        };
        if f.len() != day.power.len() {
            notes.push(format!("{}: forecast and measurements differ in length, dropped", day.date));
            continue;
        }
        let measurements = clip(&mut notes, day.date, "measured", day.power);
        let forecast = clip(&mut notes, day.date, "forecast", f);
        out.push(DatasetDay { date: day.date, measurements, forecast, weather: day.weather });
    }
    for date in fc.keys() {
        notes.push(format!("{date}: forecast without measurements, dropped"));
    }
    (out, notes)
}

/// Writes the realised series, with weather when every day carries it.
pub fn write_measurements(w: &mut dyn Write, days: &[DatasetDay], step_minutes: usize) -> Result<()> {
    let with_weather = !days.is_empty() && days.iter().all(|d| d.weather.is_some());
    if with_weather {
        writeln!(w, "timestamp,pv_kw,irradiance_wm2,temp_c")?;
    } else {
        writeln!(w, "timestamp,pv_kw")?;
    }
    for d in days {
        for (t, p) in d.measurements.iter().enumerate() {
            let ts = d.date.and_time(NaiveTime::MIN) + chrono::Duration::minutes((t * step_minutes) as i64);
            match (&d.weather, with_weather) {
                (Some(wx), true) => writeln!(
                    w,
                    "{},{},{},{}",
                    format_timestamp(ts),
                    format_value(*p),
                    format_value(wx.irradiance[t]),
                    format_value(wx.temperature[t])
                )?,
                _ => writeln!(w, "{},{}", format_timestamp(ts), format_value(*p))?,
            }
        }
    }
    Ok(())
}

/// Writes the point forecast in the measurement format.
pub fn write_forecast(w: &mut dyn Write, days: &[DatasetDay], step_minutes: usize) -> Result<()> {
    writeln!(w, "timestamp,pv_kw")?;
    for d in days {
        for (t, p) in d.forecast.iter().enumerate() {
            let ts = d.date.and_time(NaiveTime::MIN) + chrono::Duration::minutes((t * step_minutes) as i64);
            writeln!(w, "{},{}", format_timestamp(ts), format_value(*p))?;
        }
    }
    Ok(())
}

/// Loads a dataset from a measurement file and a forecast file.
pub fn load_dataset(
    measurements: &Path,
    forecast: &Path,
    step_minutes: usize,
    pv_capacity: f64,
) -> Result<(Vec<DatasetDay>, Vec<String>)> {
    let m = load_measurements(measurements, step_minutes)?;
    let f = load_measurements(forecast, step_minutes)?;
    let (days, notes) = assemble_dataset(m.days, f.days, pv_capacity);
    let diagnostics = m.diagnostics.into_iter().chain(f.diagnostics).chain(notes).collect();
    Ok((days, diagnostics))
}

/// Collects `(day, index, period, value)` rows into per-day, per-index
/// profiles, checking that periods run from zero without gaps.
fn collect_profiles(
    rows: BTreeMap<NaiveDate, BTreeMap<usize, BTreeMap<usize, f64>>>,
    origin: &Path,
) -> Result<BTreeMap<NaiveDate, Vec<Vec<f64>>>> {
    let mut out = BTreeMap::new();
    for (date, series) in rows {
        let mut profiles = Vec::with_capacity(series.len());
        let mut expected_len = None;
        for (k, (id, periods)) in series.into_iter().enumerate() {
            if id != k {
                return Err(Error::Data(format!("{}: {date}: index {k} missing", origin.display())));
            }
            if periods.keys().enumerate().any(|(i, p)| i != *p) {
                return Err(Error::Data(format!(
                    "{}: {date}: periods of series {id} are not contiguous from 0",
                    origin.display()
                )));
            }
            let len = periods.len();
            if *expected_len.get_or_insert(len) != len {
                return Err(Error::Data(format!(
                    "{}: {date}: series {id} has {len} periods, expected {}",
                    origin.display(),
                    expected_len.unwrap_or(0)
                )));
            }
            profiles.push(periods.into_values().collect());
        }
        out.insert(date, profiles);
    }
    Ok(out)
}

fn insert_unique(
    rows: &mut BTreeMap<NaiveDate, BTreeMap<usize, BTreeMap<usize, f64>>>,
    date: NaiveDate,
    id: usize,
    period: usize,
    value: f64,
) -> std::result::Result<(), String> {
    if rows.entry(date).or_default().entry(id).or_default().insert(period, value).is_some() {
        return Err(format!("duplicate row for {date}, {id}, period {period}"));
    }
    Ok(())
}

pub fn write_scenarios(w: &mut dyn Write, sets: &[(NaiveDate, ScenarioSet)]) -> Result<()> {
    writeln!(w, "day,scenario_id,period,pv_kw")?;
    for (date, set) in sets {
        for (k, row) in set.values.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                writeln!(w, "{date},{k},{t},{}", format_value(*v))?;
            }
        }
    }
    Ok(())
}

/// Reads equiprobable scenario sets keyed by day.
pub fn read_scenarios(input: impl Read, origin: &Path) -> Result<BTreeMap<NaiveDate, ScenarioSet>> {
    let mut rows = BTreeMap::new();
    Table::open(input, origin, &["day", "scenario_id", "period", "pv_kw"], &[])?.for_each(|_, r| {
        let date = parse_date(&r[0])?;
        let id = parse_index(&r[1], "scenario_id")?;
        let period = parse_index(&r[2], "period")?;
        let v = parse_number(&r[3], "pv_kw")?;
        insert_unique(&mut rows, date, id, period, v)
    })?;
    Ok(collect_profiles(rows, origin)?
        .into_iter()
        .map(|(d, v)| (d, ScenarioSet::uniform(v)))
        .collect())
}

pub fn load_scenarios(path: &Path) -> Result<BTreeMap<NaiveDate, ScenarioSet>> {
    read_scenarios(open_file(path)?, path)
}

pub fn write_engagements(w: &mut dyn Write, plans: &[(NaiveDate, EngagementPlan)]) -> Result<()> {
    writeln!(w, "day,period,engagement_kw")?;
    for (date, plan) in plans {
        for (t, v) in plan.values().iter().enumerate() {
            writeln!(w, "{date},{t},{}", format_value(*v))?;
        }
    }
    Ok(())
}

pub fn read_engagements(input: impl Read, origin: &Path) -> Result<BTreeMap<NaiveDate, EngagementPlan>> {
    let mut rows = BTreeMap::new();
    Table::open(input, origin, &["day", "period", "engagement_kw"], &[])?.for_each(|_, r| {
        let date = parse_date(&r[0])?;
        let period = parse_index(&r[1], "period")?;
        let v = parse_number(&r[2], "engagement_kw")?;
        insert_unique(&mut rows, date, 0, period, v)
    })?;
    Ok(collect_profiles(rows, origin)?
        .into_iter()
        .map(|(d, mut v)| (d, EngagementPlan(v.remove(0))))
        .collect())
}

pub fn load_engagements(path: &Path) -> Result<BTreeMap<NaiveDate, EngagementPlan>> {
    read_engagements(open_file(path)?, path)
}

const TRACE_COLUMNS: [&str; 7] =
    ["day", "period", "production_kw", "pv_kw", "charge_kw", "discharge_kw", "soc_kwh"];

pub fn write_traces(w: &mut dyn Write, traces: &[(NaiveDate, DispatchTrace)]) -> Result<()> {
    writeln!(w, "{}", TRACE_COLUMNS.join(","))?;
    for (date, tr) in traces {
        for t in 0..tr.periods() {
            writeln!(
                w,
                "{date},{t},{},{},{},{},{}",
                format_value(tr.production[t]),
                format_value(tr.pv_used[t]),
                format_value(tr.charge[t]),
                format_value(tr.discharge[t]),
                format_value(tr.soc[t])
            )?;
        }
    }
    Ok(())
}

/// Reads dispatch traces. The file carries no deviation column, so
/// `underdev` comes back as zeros.
pub fn read_traces(input: impl Read, origin: &Path) -> Result<BTreeMap<NaiveDate, DispatchTrace>> {
    let mut rows: BTreeMap<NaiveDate, BTreeMap<usize, BTreeMap<usize, f64>>> = BTreeMap::new();
    Table::open(input, origin, &TRACE_COLUMNS, &[])?.for_each(|_, r| {
        let date = parse_date(&r[0])?;
        let period = parse_index(&r[1], "period")?;
        for (k, col) in TRACE_COLUMNS.iter().enumerate().skip(2) {
            let v = parse_number(&r[k], col)?;
            insert_unique(&mut rows, date, k - 2, period, v)?;
        }
        Ok(())
    })?;
    Ok(collect_profiles(rows, origin)?
        .into_iter()
        .map(|(d, mut cols)| {
            let n = cols[0].len();
            let soc = cols.pop().unwrap_or_default();
            let discharge = cols.pop().unwrap_or_default();
            let charge = cols.pop().unwrap_or_default();
            let pv_used = cols.pop().unwrap_or_default();
            let production = cols.pop().unwrap_or_default();
            (d, DispatchTrace { production, pv_used, charge, discharge, soc, underdev: vec![0.0; n] })
        })
        .collect())
}

pub fn load_traces(path: &Path) -> Result<BTreeMap<NaiveDate, DispatchTrace>> {
    read_traces(open_file(path)?, path)
}

pub fn write_ledger(w: &mut dyn Write, records: &[DayRecord]) -> Result<()> {
    writeln!(w, "day,mode,revenue_eur,penalty_eur,export_kwh,withdraw_kwh,discharge_kwh")?;
    for r in records {
        let e = &r.economics;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.date,
            r.mode,
            format_value(e.export_revenue),
            format_value(e.penalty),
            format_value(e.export_kwh),
            format_value(e.withdraw_kwh),
            format_value(e.discharge_kwh)
        )?;
    }
    Ok(())
}

pub fn write_sizing(w: &mut dyn Write, search: &GridSearch) -> Result<()> {
    writeln!(
        w,
        "price_eur_mwh,ratio,lcoe_eur_mwh,net_eur_mwh,export_mwh,withdraw_mwh,penalty_eur,revenue_eur,cycles,battery_count"
    )?;
    for cell in &search.cells {
        write!(w, "{},{},", format_value(cell.price), format_value(cell.ratio))?;
        match &cell.result {
            Ok(r) => writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                format_value(r.lcoe),
                format_value(r.net),
                format_value(r.figures.export_mwh),
                format_value(r.figures.withdraw_mwh),
                format_value(r.figures.penalty),
                format_value(r.figures.revenue),
                format_value(r.figures.cycles),
                r.battery_count
            )?,
            Err(_) => writeln!(w, ",,,,,,,")?,
        }
    }
    Ok(())
}

pub fn write_argmax(w: &mut dyn Write, search: &GridSearch) -> Result<()> {
    writeln!(w, "price_eur_mwh,ratio_star,net_star")?;
    for a in &search.argmax {
        match a.best {
            Some((r, net)) => writeln!(w, "{},{},{}", format_value(a.price), format_value(r), format_value(net))?,
            None => writeln!(w, "{},,", format_value(a.price))?,
        }
    }
    Ok(())
}

/// Long-format table `price_eur_mwh,ratio,metric,value` for plotting.
pub fn write_heatmap(w: &mut dyn Write, search: &GridSearch) -> Result<()> {
    writeln!(w, "price_eur_mwh,ratio,metric,value")?;
    for cell in &search.cells {
        let Ok(r) = &cell.result else { continue };
        for (metric, v) in [
            ("net_eur_mwh", r.net),
            ("lcoe_eur_mwh", r.lcoe),
            ("cycles", r.figures.cycles),
            ("export_mwh", r.figures.export_mwh),
            ("penalty_eur", r.figures.penalty),
        ] {
            writeln!(w, "{},{},{metric},{}", format_value(cell.price), format_value(cell.ratio), format_value(v))?;
        }
    }
    Ok(())
}
