use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use firming::controller::oracle_control;
use firming::domain::EngagementPlan;
use firming::io::synthetic::{daytime_capacity_factor, generate_synthetic_dataset, SyntheticParams};
use firming::io::{self, Config, DatasetDay};
use firming::planner::{plan, PlannerMode, PlanningInstance};
use firming::pvusa::{fit_pvusa, WeatherSeries, WindowOutcome};
use firming::scenarios::ScenarioSet;
use firming::sim::{day_scenarios, fit_dataset_copula, simulate};
use firming::sizing::{grid_search, net};
use firming::{Error, Result};

/// Capacity-firming planning, control and sizing for PV plants with storage.
#[derive(Parser, Debug)]
#[command(name = "firming", version, about)]
struct Cli {
    /// Configuration file (`section.key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides one configuration key, e.g. `--set tariff.price=150`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Seed for the synthetic data and the scenario generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scenarios per day for the stochastic planner.
    #[arg(long, global = true)]
    scenarios: Option<usize>,
    /// Planner: S (stochastic), D (point forecast) or Dstar (perfect forecast).
    #[arg(long, global = true, default_value = "D")]
    mode: PlannerMode,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Prints the effective configuration and exits.
    #[arg(long)]
    dump_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Measurement CSV (`timestamp,pv_kw[,irradiance_wm2,temp_c]`).
    #[arg(long, default_value = "data/measurements.csv")]
    measurements: PathBuf,
    /// Point forecast CSV in the measurement format.
    #[arg(long, default_value = "data/forecast.csv")]
    forecast: PathBuf,
    /// Uses the synthetic generator of the configuration instead of files.
    #[arg(long)]
    synthetic: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes a synthetic measurement and forecast dataset.
    GenData {
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
    },
    /// Fits the PVUSA model on sliding windows of measurements with weather.
    FitPvusa {
        #[arg(long, default_value = "data/measurements.csv")]
        measurements: PathBuf,
        #[arg(long, default_value_t = 12.0)]
        window_hours: f64,
        #[arg(long, default_value_t = 1.0)]
        step_hours: f64,
        #[arg(long, default_value = "pvusa.csv")]
        out: PathBuf,
    },
    /// Fits the error copula and writes PV scenarios for every day.
    GenScenarios {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "scenarios.csv")]
        out: PathBuf,
    },
    /// Computes day-ahead engagements.
    Plan {
        #[command(flatten)]
        data: DataArgs,
        /// Scenario CSV for mode S; generated when absent.
        #[arg(long)]
        scenario_file: Option<PathBuf>,
        /// Restricts planning to one day.
        #[arg(long)]
        day: Option<NaiveDate>,
        #[arg(long)]
        price: Option<f64>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, default_value = "engagement.csv")]
        out: PathBuf,
    },
    /// Dispatches engagements against the measurements with the oracle controller.
    Control {
        #[arg(long, default_value = "data/measurements.csv")]
        measurements: PathBuf,
        #[arg(long, default_value = "engagement.csv")]
        engagement: PathBuf,
        #[arg(long)]
        price: Option<f64>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Plans and dispatches every day and reports yearly figures.
    Simulate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        price: Option<f64>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, default_value = "ledger.csv")]
        out: PathBuf,
    },
    /// Grid search over selling price and battery ratio.
    Size {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "sizing")]
        out_dir: PathBuf,
        /// Also writes a long-format table for plotting.
        #[arg(long)]
        heatmap: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("`{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = cli.seed {
        cfg.data.seed = s;
        cfg.scenarios.seed = s;
    }
    if let Some(n) = cli.scenarios {
        cfg.scenarios.count = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    if cli.dump_config {
        print!("{}", cfg.dump());
        return Ok(());
    }
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("cannot start {j} workers: {e}")))?;
    }
    let Some(command) = cli.command else {
        return Err(Error::InvalidConfig("no command given; see --help".into()));
    };
    let mode = cli.mode;
    let step = cfg.tariff.step_minutes;
    match command {
        Command::GenData { out_dir } => {
            let params = SyntheticParams::from_config(&cfg);
            let days = generate_synthetic_dataset(&params)?;
            io::write_file(&out_dir.join("measurements.csv"), |w| io::write_measurements(w, &days, step))?;
            io::write_file(&out_dir.join("forecast.csv"), |w| io::write_forecast(w, &days, step))?;
            println!(
                "wrote {} days to {} (daytime capacity factor {:.3})",
                days.len(),
                out_dir.display(),
                daytime_capacity_factor(&days, &params)
            );
        }
        Command::FitPvusa { measurements, window_hours, step_hours, out } => {
            let report = io::load_measurements(&measurements, step)?;
            print_notes(&report.diagnostics);
            let mut power = Vec::new();
            let mut weather = WeatherSeries { timestamps: vec![], irradiance: vec![], temperature: vec![] };
            for d in &report.days {
                let wx = d.weather.as_ref().ok_or_else(|| {
                    Error::Data(format!("{}: irradiance and temperature columns required", measurements.display()))
                })?;
                power.extend_from_slice(&d.power);
                weather.timestamps.extend_from_slice(&wx.timestamps);
                weather.irradiance.extend_from_slice(&wx.irradiance);
                weather.temperature.extend_from_slice(&wx.temperature);
            }
            let fit = fit_pvusa(&power, &weather, window_hours, step_hours)?;
            io::write_file(&out, |w| {
                writeln!(w, "end,samples,outcome,a,b,c")?;
                for win in &fit.windows {
                    let outcome = match win.outcome {
                        WindowOutcome::Fitted => "fitted",
                        WindowOutcome::Skipped => "skipped",
                        WindowOutcome::RankDeficient => "rank-deficient",
                    };
                    let [a, b, c] = win.params.map_or([String::new(), String::new(), String::new()], |p| {
                        p.as_array().map(|v| format!("{v:.12e}"))
                    });
                    writeln!(w, "{},{},{outcome},{a},{b},{c}", win.end.format("%Y-%m-%dT%H:%M:%S"), win.samples)?;
                }
                Ok(())
            })?;
            match fit.final_params() {
                Some(p) => println!("a = {:.6e}, b = {:.6e}, c = {:.6e} ({} windows fitted)", p.a, p.b, p.c, fit.fitted_windows()),
                None => println!("no window could be fitted"),
            }
        }
        Command::GenScenarios { data, out } => {
            let days = load_days(&cfg, &data)?;
            let model = fit_dataset_copula(&days, cfg.system.pv_capacity)?;
            let settings = cfg.sim_settings(PlannerMode::S);
            let sets = days
                .iter()
                .enumerate()
                .map(|(k, d)| Ok((d.date, day_scenarios(d, k, Some(&model), &settings, cfg.system.pv_capacity)?)))
                .collect::<Result<Vec<_>>>()?;
            io::write_file(&out, |w| io::write_scenarios(w, &sets))?;
            println!("wrote {} scenarios for {} days to {}", settings.scenarios, sets.len(), out.display());
        }
        Command::Plan { data, scenario_file, day, price, ratio, out } => {
            apply_overrides(&mut cfg, price, ratio)?;
            let days = load_days(&cfg, &data)?;
            let grid = cfg.grid()?;
            let policy = cfg.policy(&grid, cfg.tariff.price)?;
            let system = cfg.system_config(cfg.system.ratio)?;
            let settings = cfg.sim_settings(mode);
            let external = scenario_file.as_deref().map(io::load_scenarios).transpose()?;
            let model = if mode == PlannerMode::S && external.is_none() {
                Some(fit_dataset_copula(&days, cfg.system.pv_capacity)?)
            } else {
                None
            };
            let mut plans = Vec::new();
            let mut total = 0.0;
            for (k, d) in days.iter().enumerate() {
                if day.is_some_and(|x| x != d.date) {
                    continue;
                }
                let scenarios: ScenarioSet = match (&external, mode) {
                    (Some(map), PlannerMode::S) => map
                        .get(&d.date)
                        .cloned()
                        .ok_or_else(|| Error::Data(format!("no scenarios for {}", d.date)))?,
                    _ => day_scenarios(d, k, model.as_ref(), &settings, cfg.system.pv_capacity)?,
                };
                let r = plan(
                    &PlanningInstance { grid: &grid, policy: &policy, system: &system, scenarios: &scenarios, mode },
                    &settings.planner,
                )?;
                total += r.objective;
                plans.push((d.date, r.engagement));
            }
            if plans.is_empty() {
                return Err(Error::Data("no day to plan".into()));
            }
            io::write_file(&out, |w| io::write_engagements(w, &plans))?;
            println!("planned {} days in mode {mode}; objective {total:.6} EUR", plans.len());
        }
        Command::Control { measurements, engagement, price, ratio, out } => {
            apply_overrides(&mut cfg, price, ratio)?;
            let grid = cfg.grid()?;
            let policy = cfg.policy(&grid, cfg.tariff.price)?;
            let system = cfg.system_config(cfg.system.ratio)?;
            let report = io::load_measurements(&measurements, step)?;
            print_notes(&report.diagnostics);
            let realised: BTreeMap<NaiveDate, Vec<f64>> = report
                .days
                .into_iter()
                .map(|d| (d.date, d.power.into_iter().map(|p| p.clamp(0.0, cfg.system.pv_capacity)).collect()))
                .collect();
            let plans: BTreeMap<NaiveDate, EngagementPlan> = io::load_engagements(&engagement)?;
            let settings = cfg.planner_settings();
            let mut traces = Vec::new();
            let (mut objective, mut net_revenue) = (0.0, 0.0);
            for (date, plan) in &plans {
                let pv = realised
                    .get(date)
                    .ok_or_else(|| Error::Data(format!("no measurements for {date}")))?;
                let r = oracle_control(plan, pv, &policy, &system, &grid, &settings)?;
                objective += r.objective;
                net_revenue += r.economics.net();
                traces.push((*date, r.trace));
            }
            io::write_file(&out, |w| io::write_traces(w, &traces))?;
            println!(
                "dispatched {} days; objective {objective:.6} EUR, net revenue {net_revenue:.6} EUR",
                traces.len()
            );
        }
        Command::Simulate { data, price, ratio, out } => {
            apply_overrides(&mut cfg, price, ratio)?;
            let days = load_days(&cfg, &data)?;
            let grid = cfg.grid()?;
            let policy = cfg.policy(&grid, cfg.tariff.price)?;
            let system = cfg.system_config(cfg.system.ratio)?;
            let model = (mode == PlannerMode::S)
                .then(|| fit_dataset_copula(&days, cfg.system.pv_capacity))
                .transpose()?;
            let outcome = simulate(&days, model.as_ref(), &policy, &system, &grid, &cfg.sim_settings(mode))?;
            io::write_file(&out, |w| io::write_ledger(w, &outcome.ledger))?;
            for s in &outcome.skipped {
                eprintln!("skipped {}: {}", s.date, s.reason);
            }
            let f = &outcome.figures;
            println!("mode {mode}, price {} EUR/MWh, ratio {}", cfg.tariff.price, cfg.system.ratio);
            println!("days simulated {}, skipped {}", f.days_simulated, f.days_skipped);
            println!("export {:.3} MWh/yr, withdrawal {:.3} MWh/yr", f.export_mwh, f.withdraw_mwh);
            println!("revenue {:.2} EUR/yr, penalty {:.2} EUR/yr, cycles {:.1}/yr", f.revenue, f.penalty, f.cycles);
            if outcome.valid {
                match net(f, &cfg.econ(), &system) {
                    Ok(v) => println!("net {v:.3} EUR/MWh"),
                    Err(e) => println!("net undefined: {e}"),
                }
            } else {
                println!("run invalid: too many infeasible days");
            }
        }
        Command::Size { data, out_dir, heatmap } => {
            let days = load_days(&cfg, &data)?;
            let model = (mode == PlannerMode::S)
                .then(|| fit_dataset_copula(&days, cfg.system.pv_capacity))
                .transpose()?;
            let base = cfg.sizing_base(mode)?;
            let search = grid_search(&cfg.sizing.prices, &cfg.sizing.ratios, &days, model.as_ref(), &base)?;
            io::write_file(&out_dir.join("sizing.csv"), |w| io::write_sizing(w, &search))?;
            io::write_file(&out_dir.join("argmax.csv"), |w| io::write_argmax(w, &search))?;
            if heatmap {
                io::write_file(&out_dir.join("heatmap.csv"), |w| io::write_heatmap(w, &search))?;
            }
            for c in &search.cells {
                if let Err(reason) = &c.result {
                    eprintln!("hole at price {} ratio {}: {reason}", c.price, c.ratio);
                }
            }
            for a in &search.argmax {
                match a.best {
                    Some((r, v)) => println!("price {:>6}: best ratio {r} (net {v:.3} EUR/MWh)", a.price),
                    None => println!("price {:>6}: no valid cell", a.price),
                }
            }
        }
    }
    Ok(())
}

fn apply_overrides(cfg: &mut Config, price: Option<f64>, ratio: Option<f64>) -> Result<()> {
    if let Some(p) = price {
        cfg.tariff.price = p;
    }
    if let Some(r) = ratio {
        cfg.system.ratio = r;
    }
    cfg.validate()
}

fn load_days(cfg: &Config, data: &DataArgs) -> Result<Vec<DatasetDay>> {
    if data.synthetic {
        return generate_synthetic_dataset(&SyntheticParams::from_config(cfg));
    }
    let (days, notes) = io::load_dataset(
        &data.measurements,
        &data.forecast,
        cfg.tariff.step_minutes,
        cfg.system.pv_capacity,
    )?;
    print_notes(&notes);
    if days.is_empty() {
        return Err(Error::Data(format!(
            "no complete day in {} and {}",
            display(&data.measurements),
            display(&data.forecast)
        )));
    }
    Ok(days)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn print_notes(notes: &[String]) {
    for n in notes {
        eprintln!("note: {n}");
    }
}
