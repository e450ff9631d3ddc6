//! The per-slot control loop, its metrics, and parameter sweeps.
//!
//! One slot of [`run`]:
//!
//! 1. record the backlog seen at the start of the slot;
//! 2. get the slot's link capacities;
//! 3. weigh every potential link with the current backlogs;
//! 4. associate users greedily and allocate rates;
//! 5. let every user spend its rate (FIFO within a type);
//! 6. move every window one slot ahead, reconciling the request that
//!    arrived and appending the one that becomes visible.
//!
//! Delays are Little's-law ratios of the arrived (not merely predicted)
//! backlog to the arrival rate, both averaged over the same slots.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, LinkMatrix};
use crate::config::{ErrorSchedule, SimConfig};
use crate::error::{Error, Result};
use crate::queueing::{ServiceOutcome, UserQueues};
use crate::rng::{derive_seed, stream, SimRng, Stream};
use crate::scheduler::{allocate_rates, compute_weights, greedy_associate, Association};
use crate::stats;
use crate::topology::{generate_topology, zipf_probabilities, Topology};
use crate::traffic::{predict, sample_arrival, PredictionErrorModel, Reconciliation, Request};

/// Slots per window of the convergence moving average.
pub const CONVERGENCE_WINDOW: usize = 1000;
/// Relative change between successive windows regarded as stable.
pub const CONVERGENCE_TOLERANCE: f64 = 0.05;
/// Largest capacity trace kept in memory, bytes.
pub const MAX_CACHED_TRACE_BYTES: usize = 512 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub slots: usize,
    /// Leading slots left out of the windowed averages.
    pub warmup_slots: usize,
    /// Time-averaged total allocated rate `sum_u mu_u(t)`, Mbits per slot.
    pub avg_throughput: f64,
    pub avg_throughput_full: f64,
    /// Time-averaged volume actually drained from the queues, Mbits per slot.
    pub avg_served_throughput: f64,
    /// Average arrived backlog over average arrivals, slots.
    pub avg_system_delay: f64,
    pub avg_system_delay_full: f64,
    /// `avg_system_delay` in seconds.
    pub avg_system_delay_s: f64,
    /// Time-averaged total arrived backlog, Mbits.
    pub avg_backlog: f64,
    /// Time-averaged total arrivals, Mbits per slot.
    pub avg_arrivals: f64,
    pub per_user_delay: Vec<f64>,
    /// Total backlog `sum_uf Q_uf` (window included) at the start of every
    /// `trajectory_stride`-th slot.
    pub backlog_trajectory: Vec<f64>,
    pub trajectory_stride: usize,
    pub convergence_slot: Option<usize>,
    /// Pre-downloaded volume that turned out useless, Mbits.
    pub waste_total: f64,
    /// Predicted volume removed from the window unserved, Mbits.
    pub dropped_total: f64,
    pub consumed_total: f64,
    /// Drained volume that served a real request, Mbits.
    pub useful_total: f64,
    /// Pre-service held by requests still in the window at the end, Mbits.
    pub pending_pre_service: f64,
    pub unused_rate_total: f64,
    /// True demand over the horizon, Mbits.
    pub arrivals_total: f64,
}

impl MetricsReport {
    fn empty(users: usize, stride: usize) -> Self {
        Self {
            slots: 0,
            warmup_slots: 0,
            avg_throughput: 0.0,
            avg_throughput_full: 0.0,
            avg_served_throughput: 0.0,
            avg_system_delay: 0.0,
            avg_system_delay_full: 0.0,
            avg_system_delay_s: 0.0,
            avg_backlog: 0.0,
            avg_arrivals: 0.0,
            per_user_delay: vec![0.0; users],
            backlog_trajectory: Vec::new(),
            trajectory_stride: stride,
            convergence_slot: None,
            waste_total: 0.0,
            dropped_total: 0.0,
            consumed_total: 0.0,
            useful_total: 0.0,
            pending_pre_service: 0.0,
            unused_rate_total: 0.0,
            arrivals_total: 0.0,
        }
    }
}

/// Everything observable about one slot, handed to a [`run_with`] observer
/// after the queues have advanced.
pub struct SlotTrace<'a> {
    pub slot: usize,
    pub capacities: &'a LinkMatrix,
    pub association: &'a Association,
    /// Queue states the service was computed from.
    pub before: &'a [UserQueues],
    pub outcomes: &'a [ServiceOutcome],
    pub after: &'a [UserQueues],
    /// The request that arrived this slot, per user.
    pub arrived: &'a [Request],
    pub reconciliations: &'a [Option<Reconciliation>],
}

/// Topology plus, when small enough, every slot's capacities.
///
/// Capacities depend only on the seed and the channel-related parameters,
/// so one scenario can back runs that differ in `V`, `D`, `A_max` or the
/// prediction errors.
pub struct Scenario {
    pub topology: Topology,
    capacities: Option<Vec<LinkMatrix>>,
}

impl Scenario {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        let topology = generate_topology(cfg, &mut stream(cfg.seed, Stream::Topology, 0))?;
        let bytes = cfg.users * cfg.aps * cfg.horizon * std::mem::size_of::<f64>();
        let capacities = (bytes <= MAX_CACHED_TRACE_BYTES).then(|| {
            let mut live = LiveChannel::new(&topology, cfg);
            (0..cfg.horizon)
                .map(|_| live.next(&topology, cfg))
                .collect()
        });
        Ok(Self {
            topology,
            capacities,
        })
    }

    /// A scenario that regenerates capacities while running.
    pub fn streaming(cfg: &SimConfig) -> Result<Self> {
        Ok(Self {
            topology: generate_topology(cfg, &mut stream(cfg.seed, Stream::Topology, 0))?,
            capacities: None,
        })
    }

    pub fn is_cached(&self) -> bool {
        self.capacities.is_some()
    }
}

struct LiveChannel {
    model: ChannelModel,
    gain_rng: SimRng,
    fading_rng: SimRng,
}

impl LiveChannel {
    fn new(topology: &Topology, cfg: &SimConfig) -> Self {
        let mut gain_rng = stream(cfg.seed, Stream::Gains, 0);
        let model = ChannelModel::new(topology, cfg, &mut gain_rng);
        Self {
            model,
            gain_rng,
            fading_rng: stream(cfg.seed, Stream::Fading, 0),
        }
    }

    fn next(&mut self, topology: &Topology, cfg: &SimConfig) -> LinkMatrix {
        self.model
            .next_slot(topology, cfg, &mut self.gain_rng, &mut self.fading_rng)
            .capacities
    }
}

/// Simulates `cfg.T` slots.
pub fn run(cfg: &SimConfig) -> Result<MetricsReport> {
    check(cfg)?;
    if cfg.horizon == 0 {
        return Ok(MetricsReport::empty(cfg.users, cfg.trajectory_stride));
    }
    run_with(cfg, &Scenario::streaming(cfg)?, None)
}

/// Validates `cfg`, except that a zero horizon is allowed.
fn check(cfg: &SimConfig) -> Result<()> {
    let mut c = cfg.clone();
    c.horizon = c.horizon.max(1);
    c.validate()
}

/// Simulates `cfg.T` slots on a prepared scenario, optionally reporting every
/// slot to `observer`.
///
/// The scenario must have been built from a config with the same seed and
/// channel parameters.
pub fn run_with(
    cfg: &SimConfig,
    scenario: &Scenario,
    mut observer: Option<&mut dyn FnMut(&SlotTrace<'_>)>,
) -> Result<MetricsReport> {
    check(cfg)?;
    let users = cfg.users;
    let ft = cfg.file_types;
    let d = cfg.window;
    let horizon = cfg.horizon;
    if horizon == 0 {
        return Ok(MetricsReport::empty(users, cfg.trajectory_stride));
    }
    let topology = &scenario.topology;
    if topology.users() != users || topology.aps() != cfg.aps || topology.file_types() != ft {
        return Err(Error::Contract("scenario does not match the config".into()));
    }
    if let Some(c) = &scenario.capacities {
        if c.len() < horizon {
            return Err(Error::Contract(
                "scenario trace is shorter than the horizon".into(),
            ));
        }
    }
    let mut live = match scenario.capacities {
        Some(_) => None,
        None => Some(LiveChannel::new(topology, cfg)),
    };

    let probs = zipf_probabilities(ft, cfg.eta_r);
    let model = PredictionErrorModel::from_config(cfg);
    let mut arrival_rng = stream(cfg.seed, Stream::Arrivals, 0);
    let mut prediction_rng = stream(cfg.seed, Stream::Prediction, 0);
    let new_request = |slot: usize, user: usize, ar: &mut SimRng, pr: &mut SimRng| {
        let r = sample_arrival(user, slot, &probs, cfg.a_max, ar);
        if d == 0 {
            r
        } else {
            predict(&r, d - 1, &model, ft, pr)
        }
    };

    // Window contents for slots 0..D, drawn slot by slot.
    let mut initial: Vec<Vec<Request>> = vec![Vec::with_capacity(d); users];
    for slot in 0..d {
        for (u, w) in initial.iter_mut().enumerate() {
            w.push(new_request(slot, u, &mut arrival_rng, &mut prediction_rng));
        }
    }
    let mut queues: Vec<UserQueues> = initial
        .into_iter()
        .map(|w| UserQueues::new(ft, w))
        .collect();

    let warmup = ((cfg.warmup_fraction * horizon as f64).floor() as usize).min(horizon - 1);
    let mut acc = Accumulator::new(users, warmup);
    let mut trajectory = Vec::with_capacity(horizon);
    let mut arrived: Vec<Request> = Vec::with_capacity(users);
    let mut recs: Vec<Option<Reconciliation>> = vec![None; users];
    let mut outcomes: Vec<ServiceOutcome> = Vec::with_capacity(users);
    let mut backlogs: Vec<Vec<f64>> = Vec::with_capacity(users);
    let no_cache = vec![false; ft];

    for t in 0..horizon {
        let mut q_total = 0.0;
        let mut q_actual = 0.0;
        backlogs.clear();
        for (u, q) in queues.iter().enumerate() {
            let actual = q.total_actual_backlog();
            acc.user_backlog(t, u, actual);
            q_actual += actual;
            let totals = q.totals();
            q_total += totals.iter().sum::<f64>();
            backlogs.push(totals);
        }
        acc.system_backlog(t, q_actual);
        trajectory.push(q_total);

        let owned;
        let caps = match (&scenario.capacities, live.as_mut()) {
            (Some(c), _) => &c[t],
            (None, Some(l)) => {
                owned = l.next(topology, cfg);
                &owned
            }
            (None, None) => unreachable!(),
        };

        let weights = compute_weights(&backlogs, caps, topology, cfg.v);
        let assoc = greedy_associate(&weights, topology.link_mask(), cfg.max_users_per_ap);
        let assoc = allocate_rates(assoc, caps, cfg)?;
        acc.rates(t, assoc.rates.iter().sum());

        outcomes.clear();
        for (u, q) in queues.iter().enumerate() {
            let cached = assoc.assignment[u].map_or(&no_cache[..], |h| topology.cache_row(h));
            outcomes.push(q.serve(assoc.rates[u], cached)?);
        }

        let before = observer.as_ref().map(|_| queues.clone());
        arrived.clear();
        for (u, q) in queues.iter_mut().enumerate() {
            let o = &outcomes[u];
            acc.service(t, o);
            let incoming = new_request(t + d, u, &mut arrival_rng, &mut prediction_rng);
            let report = q.advance(t, o, incoming)?;
            let r = report.arrived.expect("one arrival per user and slot");
            acc.arrival(t, u, r.true_size);
            arrived.push(r);
            if let Some(rec) = &report.reconciliation {
                acc.reconciled(rec, report.pre_served);
            }
            recs[u] = report.reconciliation;
        }
        acc.end_slot(t);

        if model.schedule == ErrorSchedule::TimeVarying && d > 1 {
            for (u, q) in queues.iter_mut().enumerate() {
                // The entry just appended was predicted on entry.
                for depth in 0..d - 1 {
                    let truth = q.window()[depth].request.clone();
                    let p = predict(&truth, depth, &model, ft, &mut prediction_rng);
                    debug_assert_eq!(p.user, u);
                    q.revise(depth, p.predicted_type, p.predicted_size);
                }
            }
        }

        if let (Some(obs), Some(before)) = (observer.as_mut(), before.as_ref()) {
            obs(&SlotTrace {
                slot: t,
                capacities: caps,
                association: &assoc,
                before,
                outcomes: &outcomes,
                after: &queues,
                arrived: &arrived,
                reconciliations: &recs,
            });
        }
    }

    let pending: f64 = queues
        .iter()
        .flat_map(|q| q.window().iter())
        .map(|e| e.served.total())
        .sum();
    Ok(acc.finish(cfg, trajectory, pending))
}

/// Running sums for one run. Windowed sums cover slots `warmup..T`.
struct Accumulator {
    warmup: usize,
    user_q: Vec<f64>,
    user_a: Vec<f64>,
    q_win: f64,
    q_full: f64,
    a_win: f64,
    a_full: f64,
    rate_win: f64,
    rate_full: f64,
    slot_arrivals: f64,
    consumed_win: f64,
    consumed: f64,
    useful: f64,
    waste: f64,
    dropped: f64,
    unused: f64,
}

impl Accumulator {
    fn new(users: usize, warmup: usize) -> Self {
        Self {
            warmup,
            user_q: vec![0.0; users],
            user_a: vec![0.0; users],
            q_win: 0.0,
            q_full: 0.0,
            a_win: 0.0,
            a_full: 0.0,
            rate_win: 0.0,
            rate_full: 0.0,
            slot_arrivals: 0.0,
            consumed_win: 0.0,
            consumed: 0.0,
            useful: 0.0,
            waste: 0.0,
            dropped: 0.0,
            unused: 0.0,
        }
    }

    fn user_backlog(&mut self, t: usize, u: usize, q: f64) {
        if t >= self.warmup {
            self.user_q[u] += q;
        }
    }

    fn system_backlog(&mut self, t: usize, q: f64) {
        self.q_full += q;
        if t >= self.warmup {
            self.q_win += q;
        }
    }

    fn rates(&mut self, t: usize, total: f64) {
        self.rate_full += total;
        if t >= self.warmup {
            self.rate_win += total;
        }
    }

    fn service(&mut self, t: usize, o: &ServiceOutcome) {
        let c = o.consumed();
        self.consumed += c;
        if t >= self.warmup {
            self.consumed_win += c;
        }
        self.useful += o.priority.iter().sum::<f64>() + o.backlog.iter().sum::<f64>();
        self.unused += o.unused;
    }

    fn arrival(&mut self, t: usize, u: usize, a: f64) {
        self.slot_arrivals += a;
        if t >= self.warmup {
            self.user_a[u] += a;
        }
    }

    fn reconciled(&mut self, rec: &Reconciliation, pre_served: f64) {
        self.useful += pre_served - rec.waste;
        self.waste += rec.waste;
        self.dropped += rec.dropped;
    }

    fn end_slot(&mut self, t: usize) {
        self.a_full += self.slot_arrivals;
        if t >= self.warmup {
            self.a_win += self.slot_arrivals;
        }
        self.slot_arrivals = 0.0;
    }

    fn finish(self, cfg: &SimConfig, trajectory: Vec<f64>, pending: f64) -> MetricsReport {
        let horizon = cfg.horizon;
        let win = (horizon - self.warmup) as f64;
        let ratio = |q: f64, a: f64| if a > 0.0 { q / a } else { 0.0 };
        let delay = ratio(self.q_win, self.a_win);
        let convergence_slot = convergence_slot(&trajectory);
        MetricsReport {
            slots: horizon,
            warmup_slots: self.warmup,
            avg_throughput: self.rate_win / win,
            avg_throughput_full: self.rate_full / horizon as f64,
            avg_served_throughput: self.consumed_win / win,
            avg_system_delay: delay,
            avg_system_delay_full: ratio(self.q_full, self.a_full),
            avg_system_delay_s: delay * cfg.tau,
            avg_backlog: self.q_win / win,
            avg_arrivals: self.a_win / win,
            per_user_delay: self
                .user_q
                .iter()
                .zip(&self.user_a)
                .map(|(&q, &a)| ratio(q, a))
                .collect(),
            backlog_trajectory: trajectory
                .iter()
                .step_by(cfg.trajectory_stride)
                .copied()
                .collect(),
            trajectory_stride: cfg.trajectory_stride,
            convergence_slot,
            waste_total: self.waste,
            dropped_total: self.dropped,
            consumed_total: self.consumed,
            useful_total: self.useful,
            pending_pre_service: pending,
            unused_rate_total: self.unused,
            arrivals_total: self.a_full,
        }
    }
}

/// Means of consecutive non-overlapping windows of `window` slots.
pub fn window_means(series: &[f64], window: usize) -> Vec<f64> {
    series
        .chunks_exact(window)
        .map(|c| c.iter().sum::<f64>() / window as f64)
        .collect()
}

/// Start of the first window whose mean is within the tolerance of the
/// previous window's mean.
pub fn convergence_slot(series: &[f64]) -> Option<usize> {
    let means = window_means(series, CONVERGENCE_WINDOW);
    means
        .windows(2)
        .position(|w| {
            let scale = w[0].abs().max(w[1].abs());
            scale == 0.0 || (w[1] - w[0]).abs() < CONVERGENCE_TOLERANCE * scale
        })
        .map(|k| (k + 1) * CONVERGENCE_WINDOW)
}

/// Seed of replication `r`; replication 0 keeps the base seed.
pub fn replication_seed(seed: u64, replication: usize) -> u64 {
    if replication == 0 {
        seed
    } else {
        derive_seed(seed, Stream::Replication, replication as u64)
    }
}

/// The parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    V,
    D,
    /// `e_type` alone.
    EType,
    /// `e_size` alone.
    ESize,
    /// `e_type` and `e_size` together.
    E,
    AMax,
    U,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 7] = [
        SweepAxis::V,
        SweepAxis::D,
        SweepAxis::EType,
        SweepAxis::ESize,
        SweepAxis::E,
        SweepAxis::AMax,
        SweepAxis::U,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::V => "V",
            SweepAxis::D => "D",
            SweepAxis::EType => "e_type",
            SweepAxis::ESize => "e_size",
            SweepAxis::E => "e",
            SweepAxis::AMax => "A_max",
            SweepAxis::U => "U",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown sweep axis `{s}` (expected one of V, D, e_type, e_size, e, A_max, U)"
                ))
            })
    }

    /// Whether grid points along this axis share channel realizations.
    pub fn shares_channel(self) -> bool {
        self != SweepAxis::U
    }

    pub fn apply(self, cfg: &mut SimConfig, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!(
                    "{} must be a whole number, got {v}",
                    self.name()
                )))
            }
        };
        match self {
            SweepAxis::V => cfg.v = value,
            SweepAxis::D => cfg.window = as_count(value)?,
            SweepAxis::EType => cfg.e_type = value,
            SweepAxis::ESize => cfg.e_size = value,
            SweepAxis::E => {
                cfg.e_type = value;
                cfg.e_size = value;
            }
            SweepAxis::AMax => cfg.a_max = value,
            SweepAxis::U => cfg.users = as_count(value)?,
        }
        Ok(())
    }
}

/// One (grid value, replication) run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub value: f64,
    pub replication: usize,
    pub config: SimConfig,
    pub report: MetricsReport,
}

/// Mean and standard error over replications at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub throughput_mean: f64,
    pub throughput_stderr: f64,
    pub delay_mean: f64,
    pub delay_stderr: f64,
    pub waste_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub replications: usize,
    /// Grid-major, replications in order within a value.
    pub runs: Vec<SweepRun>,
}

impl SweepResult {
    pub fn runs_at(&self, value: f64) -> impl Iterator<Item = &SweepRun> {
        self.runs.iter().filter(move |r| r.value == value)
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        self.grid
            .iter()
            .map(|&value| {
                let th: Vec<f64> = self
                    .runs_at(value)
                    .map(|r| r.report.avg_throughput)
                    .collect();
                let de: Vec<f64> = self
                    .runs_at(value)
                    .map(|r| r.report.avg_system_delay)
                    .collect();
                let wa: Vec<f64> = self.runs_at(value).map(|r| r.report.waste_total).collect();
                SweepPoint {
                    value,
                    throughput_mean: stats::mean(&th),
                    throughput_stderr: stats::std_err(&th),
                    delay_mean: stats::mean(&de),
                    delay_stderr: stats::std_err(&de),
                    waste_mean: stats::mean(&wa),
                }
            })
            .collect()
    }
}

/// Runs every grid value for `replications` seeds.
///
/// Replication `r` uses the same seed at every grid value, so values are
/// compared on common channel and traffic realizations. Results do not
/// depend on how rayon schedules the runs.
pub fn sweep(
    base: &SimConfig,
    axis: SweepAxis,
    grid: &[f64],
    replications: usize,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let configs: Vec<Vec<SimConfig>> = (0..replications)
        .map(|r| {
            grid.iter()
                .map(|&v| {
                    let mut c = base.clone();
                    c.seed = replication_seed(base.seed, r);
                    axis.apply(&mut c, v)?;
                    check(&c)?;
                    Ok(c)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let per_rep: Vec<Vec<MetricsReport>> = configs
        .par_iter()
        .map(|cfgs| {
            if axis.shares_channel() && cfgs[0].horizon > 0 {
                let scenario = Scenario::new(&cfgs[0])?;
                cfgs.par_iter()
                    .map(|c| run_with(c, &scenario, None))
                    .collect::<Result<Vec<_>>>()
            } else {
                cfgs.par_iter().map(run).collect::<Result<Vec<_>>>()
            }
        })
        .collect::<Result<_>>()?;

    let mut runs = Vec::with_capacity(grid.len() * replications);
    for (i, &value) in grid.iter().enumerate() {
        for (r, reports) in per_rep.iter().enumerate() {
            runs.push(SweepRun {
                value,
                replication: r,
                config: configs[r][i].clone(),
                report: reports[i].clone(),
            });
        }
    }
    Ok(SweepResult {
        axis,
        grid: grid.to_vec(),
        replications,
        runs,
    })
}

#[derive(Debug, Serialize)]
struct SweepRow<'a> {
    axis: &'a str,
    value: f64,
    replication: usize,
    seed: u64,
    #[serde(rename = "U")]
    users: usize,
    #[serde(rename = "V")]
    v: f64,
    #[serde(rename = "D")]
    window: usize,
    #[serde(rename = "A_max")]
    a_max: f64,
    e_type: f64,
    e_size: f64,
    avg_throughput: f64,
    avg_system_delay: f64,
    avg_system_delay_s: f64,
    avg_served_throughput: f64,
    avg_system_delay_full: f64,
    waste: f64,
    convergence_slot: Option<usize>,
}

/// One row per run: `axis, value, replication, seed`, the configuration
/// columns `U, V, D, A_max, e_type, e_size`, then the metrics.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for run in &result.runs {
        let c = &run.config;
        let r = &run.report;
        w.serialize(SweepRow {
            axis: result.axis.name(),
            value: run.value,
            replication: run.replication,
            seed: c.seed,
            users: c.users,
            v: c.v,
            window: c.window,
            a_max: c.a_max,
            e_type: c.e_type,
            e_size: c.e_size,
            avg_throughput: r.avg_throughput,
            avg_system_delay: r.avg_system_delay,
            avg_system_delay_s: r.avg_system_delay_s,
            avg_served_throughput: r.avg_served_throughput,
            avg_system_delay_full: r.avg_system_delay_full,
            waste: r.waste_total,
            convergence_slot: r.convergence_slot,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `axis, value, replication, user, delay` rows.
pub fn write_user_delay_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "value", "replication", "user", "delay"])?;
    for run in &result.runs {
        for (u, d) in run.report.per_user_delay.iter().enumerate() {
            w.write_record([
                result.axis.name().to_string(),
                run.value.to_string(),
                run.replication.to_string(),
                u.to_string(),
                d.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `axis, value, replication, slot, total_backlog` rows.
pub fn write_trajectory_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "value", "replication", "slot", "total_backlog"])?;
    for run in &result.runs {
        let stride = run.report.trajectory_stride;
        for (i, q) in run.report.backlog_trajectory.iter().enumerate() {
            w.write_record([
                result.axis.name().to_string(),
                run.value.to_string(),
                run.replication.to_string(),
                (i * stride).to_string(),
                q.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Draws a weight matrix and link mask for the greedy audit.
pub fn random_instance<R: Rng + ?Sized>(
    users: usize,
    aps: usize,
    file_types: usize,
    rng: &mut R,
) -> (LinkMatrix, Vec<bool>) {
    let mut w = LinkMatrix::zeros(users, aps);
    let mut links = vec![false; users * aps];
    // Per-user queues and per-AP caches, as the weights would see them.
    let q: Vec<Vec<f64>> = (0..users)
        .map(|_| {
            (0..file_types)
                .map(|_| rng.random_range(0.0..100.0))
                .collect()
        })
        .collect();
    let y: Vec<Vec<bool>> = (0..aps)
        .map(|_| (0..file_types).map(|_| rng.random_bool(0.5)).collect())
        .collect();
    let v = rng.random_range(1.0..100.0);
    for u in 0..users {
        for h in 0..aps {
            links[u * aps + h] = rng.random_bool(0.8);
            let c: f64 = rng.random_range(0.0..20.0);
            let s: f64 = (0..file_types)
                .filter(|&f| y[h][f])
                .map(|f| v + q[u][f])
                .sum();
            w.set(u, h, c * s);
        }
    }
    (w, links)
}
