//! Request arrivals, imperfect predictions and their reconciliation.
//!
//! Every user issues exactly one request per slot: a Zipf-distributed file
//! type and a size uniform on `(0, A_max]`. A request is visible `D` slots
//! before it arrives, through a prediction that may get the type wrong
//! (with probability `e_type`, uniformly among the other types) or the size
//! wrong (uniform on `[s (1 - e_size), s (1 + e_size)]`). The two errors are
//! independent.
//!
//! When the real request arrives, [`reconcile_on_arrival`] decides what
//! happens to the predicted residual and to whatever was downloaded ahead
//! of time.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ErrorSchedule, SimConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub user: usize,
    pub arrival_slot: usize,
    pub true_type: usize,
    /// Mbits.
    pub true_size: f64,
    pub predicted_type: usize,
    /// Mbits.
    pub predicted_size: f64,
}

impl Request {
    pub fn type_mispredicted(&self) -> bool {
        self.predicted_type != self.true_type
    }

    pub fn size_mispredicted(&self) -> bool {
        self.predicted_size != self.true_size
    }

    pub fn is_exact(&self) -> bool {
        !self.type_mispredicted() && !self.size_mispredicted()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionErrorModel {
    pub e_type: f64,
    pub e_size: f64,
    pub schedule: ErrorSchedule,
    /// Constant of the time-varying schedule.
    pub c: f64,
}

impl PredictionErrorModel {
    pub const PERFECT: Self = Self {
        e_type: 0.0,
        e_size: 0.0,
        schedule: ErrorSchedule::Fixed,
        c: 60.0,
    };

    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            e_type: cfg.e_type,
            e_size: cfg.e_size,
            schedule: cfg.error_schedule,
            c: cfg.error_c,
        }
    }

    /// `(e_type, e_size)` for a request `depth` slots ahead.
    pub fn rates_at(&self, depth: usize) -> (f64, f64) {
        match self.schedule {
            ErrorSchedule::Fixed => (self.e_type, self.e_size),
            ErrorSchedule::TimeVarying => {
                let r = depth as f64 / (depth as f64 + self.c);
                (r, r)
            }
        }
    }

    pub fn is_perfect(&self) -> bool {
        self.schedule == ErrorSchedule::Fixed && self.e_type == 0.0 && self.e_size == 0.0
    }
}

/// Samples index `i` with probability `probs[i]` from a single uniform draw.
fn sample_index(probs: &[f64], x: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Draws the true fields of one request. The predicted fields are set equal
/// to the true ones.
pub fn sample_arrival<R: Rng + ?Sized>(
    user: usize,
    slot: usize,
    probs: &[f64],
    a_max: f64,
    rng: &mut R,
) -> Request {
    let true_type = sample_index(probs, rng.random::<f64>());
    // 1 - U[0,1) lies in (0, 1].
    let true_size = a_max * (1.0 - rng.random::<f64>());
    Request {
        user,
        arrival_slot: slot,
        true_type,
        true_size,
        predicted_type: true_type,
        predicted_size: true_size,
    }
}

/// Fills the predicted fields for a request seen `depth` slots ahead.
///
/// Always consumes three uniforms so the prediction stream stays aligned
/// regardless of outcomes.
pub fn predict<R: Rng + ?Sized>(
    request: &Request,
    depth: usize,
    model: &PredictionErrorModel,
    file_types: usize,
    rng: &mut R,
) -> Request {
    let (e_type, e_size) = model.rates_at(depth);
    let type_event: f64 = rng.random();
    let other: f64 = rng.random();
    let size_draw: f64 = rng.random();

    let mut out = request.clone();
    out.predicted_type = request.true_type;
    if file_types > 1 && type_event < e_type {
        let k = ((other * (file_types - 1) as f64) as usize).min(file_types - 2);
        out.predicted_type = if k >= request.true_type { k + 1 } else { k };
    }
    out.predicted_size = if e_size > 0.0 {
        let s = request.true_size;
        s * (1.0 - e_size) + size_draw * 2.0 * e_size * s
    } else {
        request.true_size
    };
    out
}

/// What was downloaded for one window entry before it arrived, by file type.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreService {
    pub by_type: Vec<f64>,
}

impl PreService {
    pub fn new(file_types: usize) -> Self {
        Self {
            by_type: vec![0.0; file_types],
        }
    }

    pub fn total(&self) -> f64 {
        self.by_type.iter().sum()
    }
}

/// The queue edits required when a request arrives.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reconciliation {
    /// Volume appended to the arrived backlog, `(type, Mbits)`.
    pub backlog: Option<(usize, f64)>,
    /// Shortfall of a partially pre-served, mispredicted request, served
    /// head-of-line: `(type, Mbits)`.
    pub priority: Option<(usize, f64)>,
    /// Predicted residual dropped from the window without being merged.
    pub dropped: f64,
    /// Pre-downloaded volume that turned out useless.
    pub waste: f64,
}

/// Reconciles a window entry with its real request at the end of its
/// arrival slot.
///
/// `residual` is the still-unserved predicted volume (the entry's sub-queue
/// after this slot's service), `pre` what was already downloaded.
///
/// - Exact prediction: the residual joins the arrived backlog.
/// - Wrong type: the residual is dropped, anything downloaded is waste, and
///   the real request joins the backlog in full.
/// - Wrong size with nothing useful downloaded: the residual is dropped and
///   the real request joins the backlog in full.
/// - Wrong size, partially downloaded: the shortfall is queued head-of-line;
///   any surplus download is waste.
pub fn reconcile_on_arrival(
    request: &Request,
    slot: usize,
    pre: &PreService,
    residual: f64,
) -> Result<Reconciliation> {
    if request.arrival_slot != slot {
        return Err(Error::Contract(format!(
            "request of user {} arrives in slot {} but was reconciled in slot {slot}",
            request.user, request.arrival_slot
        )));
    }
    let t = request.true_type;
    let useful = pre.by_type.get(t).copied().unwrap_or(0.0);
    let mismatched = pre.total() - useful;
    let surplus = (useful - request.true_size).max(0.0);
    let waste = mismatched + surplus;

    if request.is_exact() {
        return Ok(Reconciliation {
            backlog: (residual > 0.0).then_some((t, residual)),
            priority: None,
            dropped: 0.0,
            waste,
        });
    }

    let shortfall = (request.true_size - useful).max(0.0);
    let (backlog, priority) = if request.type_mispredicted() || useful == 0.0 {
        // Nothing downloaded counts toward the real request.
        (Some((t, request.true_size)), None)
    } else {
        (None, (shortfall > 0.0).then_some((t, shortfall)))
    };
    // A wrong-type download never serves the real file.
    let waste = if request.type_mispredicted() {
        pre.total()
    } else {
        waste
    };
    Ok(Reconciliation {
        backlog,
        priority,
        dropped: residual,
        waste,
    })
}

/// One row of an exported traffic trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub slot: usize,
    pub user: usize,
    pub true_type: usize,
    pub true_size: f64,
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| Ok(row?)).collect()
}
