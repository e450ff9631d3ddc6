//! Command-line front end of the `cachenet` binary.
//!
//! Every subcommand writes `effective_config.toml` (the configuration after
//! all overrides) into its output directory. Exit status is 0 on success,
//! 1 for usage or configuration errors and 2 when `verify-greedy` finds a
//! ratio below one half.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::SimConfig;
use crate::engine::{
    random_instance, run_with, sweep, write_sweep_csv, write_trajectory_csv, write_user_delay_csv,
    Scenario, SlotTrace, SweepAxis,
};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::scheduler::{brute_force_associate, greedy_associate, ORACLE_MAX_APS, ORACLE_MAX_USERS};
use crate::traffic::{write_trace, TraceRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

/// Greedy ratios below this fail `verify-greedy`.
pub const RATIO_FLOOR: f64 = 0.5 - 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "cachenet",
    version,
    about = "Predictive user-AP association simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration and write report.json.
    Run(RunArgs),
    /// Run a grid of values along one parameter.
    Sweep(SweepArgs),
    /// Compare greedy association with the exact optimum on random instances.
    VerifyGreedy(VerifyArgs),
    /// Simulate one configuration and dump per-slot, per-queue and traffic traces.
    Trace(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set V=1000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Replace the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write slot_trace.csv.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// One of V, D, e_type, e_size, e, A_max, U.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated grid values.
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 6)]
    pub max_users: usize,
    #[arg(long, default_value_t = 3)]
    pub max_aps: usize,
    #[arg(long, default_value_t = 2)]
    pub max_m: usize,
    #[arg(long, default_value_t = 3)]
    pub max_types: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::VerifyGreedy(a) => cmd_verify_greedy(a),
        Command::Trace(a) => cmd_trace(a),
    }
}

/// Loads, overrides, validates and echoes the configuration.
fn prepare(common: &CommonArgs) -> Result<SimConfig> {
    let mut cfg = match &common.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    cfg.apply_overrides(&common.overrides)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    fs::create_dir_all(&common.out)?;
    fs::write(
        common.out.join("effective_config.toml"),
        cfg.to_toml_string()?,
    )?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<i32> {
    let cfg = prepare(&a.common)?;
    let out = &a.common.out;
    let scenario = Scenario::streaming(&cfg)?;
    let report = if a.trace {
        let mut sink = SlotSink::new(out, false)?;
        let report = run_with(
            &cfg,
            &scenario,
            Some(&mut |s: &SlotTrace<'_>| sink.record(s)),
        )?;
        sink.finish()?;
        report
    } else {
        run_with(&cfg, &scenario, None)?
    };
    write_json(out, "report.json", &report)?;
    println!(
        "throughput {:.3} Mbit/slot, delay {:.4} slots ({:.4} s), waste {:.3} Mbit",
        report.avg_throughput,
        report.avg_system_delay,
        report.avg_system_delay_s,
        report.waste_total
    );
    Ok(EXIT_OK)
}

fn cmd_trace(common: &CommonArgs) -> Result<i32> {
    let cfg = prepare(common)?;
    let out = &common.out;
    let mut sink = SlotSink::new(out, true)?;
    let report = run_with(
        &cfg,
        &Scenario::streaming(&cfg)?,
        Some(&mut |s: &SlotTrace<'_>| sink.record(s)),
    )?;
    let traffic = sink.finish()?;
    write_trace(&traffic, create(out, "traffic_trace.csv")?)?;
    write_json(out, "report.json", &report)?;
    println!(
        "wrote traces for {} slots to {}",
        cfg.horizon,
        out.display()
    );
    Ok(EXIT_OK)
}

/// Streams observer output to CSV files, remembering the first write error.
struct SlotSink {
    slots: csv::Writer<BufWriter<File>>,
    queues: Option<csv::Writer<BufWriter<File>>>,
    traffic: Vec<TraceRow>,
    error: Option<Error>,
}

impl SlotSink {
    fn new(dir: &Path, full: bool) -> Result<Self> {
        let mut slots = csv::Writer::from_writer(create(dir, "slot_trace.csv")?);
        slots.write_record([
            "slot",
            "user",
            "ap",
            "rate",
            "consumed",
            "actual_backlog",
            "total_backlog",
        ])?;
        let queues = if full {
            let mut q = csv::Writer::from_writer(create(dir, "queue_trace.csv")?);
            q.write_record(["slot", "user", "type", "depth", "size"])?;
            Some(q)
        } else {
            None
        };
        Ok(Self {
            slots,
            queues,
            traffic: Vec::new(),
            error: None,
        })
    }

    fn record(&mut self, s: &SlotTrace<'_>) {
        if self.error.is_none() {
            if let Err(e) = self.try_record(s) {
                self.error = Some(e);
            }
        }
    }

    fn try_record(&mut self, s: &SlotTrace<'_>) -> Result<()> {
        for (u, q) in s.before.iter().enumerate() {
            self.slots.write_record([
                s.slot.to_string(),
                u.to_string(),
                s.association.assignment[u].map_or(String::new(), |h| h.to_string()),
                s.association.rates[u].to_string(),
                s.outcomes[u].consumed().to_string(),
                q.total_actual_backlog().to_string(),
                q.totals().iter().sum::<f64>().to_string(),
            ])?;
        }
        if let Some(w) = self.queues.as_mut() {
            // Queue state at the start of the slot; depth -1 is the arrived
            // backlog, head-of-line shortfall included.
            for (u, q) in s.before.iter().enumerate() {
                for f in 0..q.file_types() {
                    let rows = std::iter::once((-1i64, q.actual_backlog(f)))
                        .chain((0..q.window().len()).map(|d| (d as i64, q.sub_queue(f, d))));
                    for (d, size) in rows.filter(|&(_, x)| x > 0.0) {
                        w.write_record([
                            s.slot.to_string(),
                            u.to_string(),
                            f.to_string(),
                            d.to_string(),
                            size.to_string(),
                        ])?;
                    }
                }
            }
            self.traffic.extend(s.arrived.iter().map(|r| TraceRow {
                slot: s.slot,
                user: r.user,
                true_type: r.true_type,
                true_size: r.true_size,
            }));
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<TraceRow>> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.slots.flush()?;
        if let Some(q) = self.queues.as_mut() {
            q.flush()?;
        }
        Ok(self.traffic)
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("grid value `{t}` is not a number")))
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    Ok(grid)
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let axis = SweepAxis::parse(&a.axis)?;
    let grid = parse_grid(&a.grid)?;
    if a.replications == 0 {
        return Err(Error::Config("--replications must be at least 1".into()));
    }
    let cfg = prepare(&a.common)?;
    let out = &a.common.out;
    let result = sweep(&cfg, axis, &grid, a.replications)?;
    write_sweep_csv(&result, create(out, "sweep.csv")?)?;
    write_user_delay_csv(&result, create(out, "user_delay.csv")?)?;
    write_trajectory_csv(&result, create(out, "backlog_trajectory.csv")?)?;

    println!(
        "{:>12} {:>14} {:>10} {:>14} {:>10}",
        axis.name(),
        "throughput",
        "+/-",
        "delay (slots)",
        "+/-"
    );
    for p in result.points() {
        println!(
            "{:>12} {:>14.3} {:>10.3} {:>14.4} {:>10.4}",
            p.value, p.throughput_mean, p.throughput_stderr, p.delay_mean, p.delay_stderr
        );
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct RatioRow {
    instance: usize,
    users: usize,
    aps: usize,
    m: usize,
    file_types: usize,
    greedy: f64,
    optimal: f64,
    ratio: f64,
}

fn cmd_verify_greedy(a: &VerifyArgs) -> Result<i32> {
    use rand::Rng;

    if a.max_users == 0 || a.max_aps == 0 || a.max_m == 0 || a.max_types == 0 {
        return Err(Error::Config(
            "instance size bounds must be at least 1".into(),
        ));
    }
    if a.max_users > ORACLE_MAX_USERS || a.max_aps > ORACLE_MAX_APS {
        return Err(Error::Config(format!(
            "instance bounds exceed the oracle limit of {ORACLE_MAX_USERS} users x {ORACLE_MAX_APS} APs"
        )));
    }
    let cfg = prepare(&a.common)?;
    let mut rng = stream(cfg.seed, Stream::Instances, 0);
    let mut w = csv::Writer::from_writer(create(&a.common.out, "greedy_ratios.csv")?);
    if a.instances == 0 {
        w.write_record([
            "instance",
            "users",
            "aps",
            "m",
            "file_types",
            "greedy",
            "optimal",
            "ratio",
        ])?;
    }
    let mut min_ratio = f64::INFINITY;
    let mut failures = 0;
    for i in 0..a.instances {
        let users = rng.random_range(1..=a.max_users);
        let aps = rng.random_range(1..=a.max_aps);
        let m = rng.random_range(1..=a.max_m);
        let ft = rng.random_range(1..=a.max_types);
        let (weights, links) = random_instance(users, aps, ft, &mut rng);
        let greedy = greedy_associate(&weights, &links, m).objective(&weights);
        let optimal = brute_force_associate(&weights, &links, m)?.objective(&weights);
        let ratio = if optimal > 0.0 { greedy / optimal } else { 1.0 };
        min_ratio = min_ratio.min(ratio);
        if ratio < RATIO_FLOOR {
            failures += 1;
        }
        w.serialize(RatioRow {
            instance: i,
            users,
            aps,
            m,
            file_types: ft,
            greedy,
            optimal,
            ratio,
        })?;
    }
    w.flush()?;
    if a.instances == 0 {
        println!("no instances");
    } else {
        println!("{} instances, minimum ratio {min_ratio:.6}", a.instances);
    }
    if failures > 0 {
        eprintln!("{failures} instance(s) below ratio 1/2");
        return Ok(EXIT_VERIFY);
    }
    Ok(EXIT_OK)
}
