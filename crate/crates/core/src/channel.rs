//! WINNER II small-cell path loss and per-slot link capacities.
//!
//! A link's large-scale gain is `g = 10^(-PL(d)/10)` with
//!
//! ```text
//! PL(d) = C1 log10(d) + C2 + C3 log10(f0 / 5) + X_dB,   X_dB ~ N(0, sigma^2)
//! ```
//!
//! where the coefficient set is LOS or NLOS, drawn per link with the
//! distance-dependent LOS probability. The capacity of link `(u, h)` is the
//! expected rate under Rayleigh block fading with every other AP
//! interfering:
//!
//! ```text
//! C_uh = airtime * B * E[ log(1 + P g_uh |s_uh|^2 / (1 + sum_{h' != h} P g_uh' |s_uh'|^2)) ]
//! ```
//!
//! estimated by Monte Carlo (`|s|^2 ~ Exp(1)`) and stored in Mbits per slot.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::config::{LogBase, SimConfig};
use crate::topology::Topology;

/// Carrier frequency, GHz.
pub const CARRIER_GHZ: f64 = 2.4;

/// Distances are clamped to this many meters before taking logarithms.
pub const MIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Shadowing variance, dB^2.
    pub shadow_var_db2: f64,
}

pub const LOS: PathLossParams = PathLossParams {
    c1: 18.7,
    c2: 46.8,
    c3: 20.0,
    shadow_var_db2: 9.0,
};

pub const NLOS: PathLossParams = PathLossParams {
    c1: 36.8,
    c2: 43.8,
    c3: 20.0,
    shadow_var_db2: 16.0,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkCondition {
    Los,
    Nlos,
}

impl LinkCondition {
    pub fn params(self) -> PathLossParams {
        match self {
            LinkCondition::Los => LOS,
            LinkCondition::Nlos => NLOS,
        }
    }
}

/// Probability that a link of length `d` meters is line-of-sight.
pub fn los_probability(d: f64) -> f64 {
    if d <= 3.0 {
        return 1.0;
    }
    let inner = 1.0 - (1.24 - 0.6 * d.log10()).powi(3);
    (1.0 - 0.9 * inner.cbrt()).clamp(0.0, 1.0)
}

/// Path loss in dB for a given condition and shadowing realization.
pub fn path_loss_db(d: f64, condition: LinkCondition, shadow_db: f64) -> f64 {
    let p = condition.params();
    let d = d.max(MIN_DISTANCE);
    p.c1 * d.log10() + p.c2 + p.c3 * (CARRIER_GHZ / 5.0).log10() + shadow_db
}

pub fn db_to_gain(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Draws a LOS/NLOS state and a shadowing term for a link of length `d`.
pub fn draw_link_state<R: Rng + ?Sized>(d: f64, rng: &mut R) -> (LinkCondition, f64) {
    let d = d.max(MIN_DISTANCE);
    let condition = if rng.random::<f64>() < los_probability(d) {
        LinkCondition::Los
    } else {
        LinkCondition::Nlos
    };
    let z: f64 = StandardNormal.sample(rng);
    (condition, z * condition.params().shadow_var_db2.sqrt())
}

/// One random draw of the large-scale gain `g` at distance `d`.
pub fn path_loss_gain<R: Rng + ?Sized>(d: f64, rng: &mut R) -> f64 {
    let (condition, shadow) = draw_link_state(d, rng);
    db_to_gain(path_loss_db(d, condition, shadow))
}

/// A dense `U x H` matrix of `f64`, row-major by user.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMatrix {
    users: usize,
    aps: usize,
    data: Vec<f64>,
}

impl LinkMatrix {
    pub fn zeros(users: usize, aps: usize) -> Self {
        Self {
            users,
            aps,
            data: vec![0.0; users * aps],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let aps = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == aps), "ragged matrix");
        Self {
            users: rows.len(),
            aps,
            data: rows.concat(),
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn aps(&self) -> usize {
        self.aps
    }

    pub fn get(&self, user: usize, ap: usize) -> f64 {
        self.data[user * self.aps + ap]
    }

    pub fn set(&mut self, user: usize, ap: usize, value: f64) {
        self.data[user * self.aps + ap] = value;
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.data[user * self.aps..(user + 1) * self.aps]
    }

    pub fn row_mut(&mut self, user: usize) -> &mut [f64] {
        &mut self.data[user * self.aps..(user + 1) * self.aps]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Draws `g_uh` for every user-AP pair, links or not: non-linked APs still
/// interfere.
pub fn draw_gains<R: Rng + ?Sized>(topology: &Topology, rng: &mut R) -> LinkMatrix {
    let mut gains = LinkMatrix::zeros(topology.users(), topology.aps());
    for u in 0..topology.users() {
        for h in 0..topology.aps() {
            gains.set(u, h, path_loss_gain(topology.distance(u, h), rng));
        }
    }
    gains
}

/// Per-slot channel state: large-scale gains and estimated capacities
/// (Mbits per slot, zero outside the potential-link set).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSlot {
    pub gains: LinkMatrix,
    pub capacities: LinkMatrix,
}

/// Rate scaling shared by every capacity: Mbits per slot per unit of
/// spectral efficiency.
pub fn mbits_per_unit_efficiency(cfg: &SimConfig) -> f64 {
    cfg.airtime * cfg.bandwidth_hz / 1e6
}

/// Average spectral efficiency of each AP for one user, given fading power
/// samples laid out as `samples[k * H + h]`.
///
/// Entries where `linked[h]` is false are left at zero.
pub fn mean_efficiency_from_samples(
    gains: &[f64],
    linked: &[bool],
    power: f64,
    log_base: LogBase,
    samples: &[f64],
    out: &mut [f64],
) {
    let aps = gains.len();
    debug_assert_eq!(samples.len() % aps.max(1), 0);
    let n = samples.len() / aps.max(1);
    out.fill(0.0);
    let mut rx = vec![0.0; aps];
    let mut prefix = vec![0.0; aps + 1];
    for k in 0..n {
        let s = &samples[k * aps..(k + 1) * aps];
        for h in 0..aps {
            rx[h] = power * gains[h] * s[h];
            prefix[h + 1] = prefix[h] + rx[h];
        }
        let mut suffix = 0.0;
        for h in (0..aps).rev() {
            if linked[h] {
                let interference = prefix[h] + suffix;
                out[h] += log_base.log(1.0 + rx[h] / (1.0 + interference));
            }
            suffix += rx[h];
        }
    }
    if n > 0 {
        for x in out.iter_mut() {
            *x /= n as f64;
        }
    }
}

/// Estimates `C_uh(t)` for every potential link from the slot's gains.
///
/// Each user gets `n_fading_samples` independent fading vectors (one
/// exponential power per AP), drawn from `rng`.
pub fn estimate_capacities<R: Rng + ?Sized>(
    topology: &Topology,
    gains: &LinkMatrix,
    cfg: &SimConfig,
    rng: &mut R,
) -> ChannelSlot {
    let users = topology.users();
    let aps = topology.aps();
    let n = cfg.n_fading_samples;
    let scale = mbits_per_unit_efficiency(cfg);
    let mut capacities = LinkMatrix::zeros(users, aps);
    let mut samples = vec![0.0; n * aps];
    for u in 0..users {
        for s in samples.iter_mut() {
            *s = Exp1.sample(rng);
        }
        let row = capacities.row_mut(u);
        mean_efficiency_from_samples(
            gains.row(u),
            topology.link_row(u),
            cfg.tx_power,
            cfg.log_base,
            &samples,
            row,
        );
        for c in row.iter_mut() {
            *c *= scale;
        }
    }
    ChannelSlot {
        gains: gains.clone(),
        capacities,
    }
}

/// Per-run channel generator: redraws or freezes large-scale state per
/// `cfg.shadowing` and estimates capacities each slot.
pub struct ChannelModel {
    frozen: Option<LinkMatrix>,
}

impl ChannelModel {
    pub fn new<R: Rng + ?Sized>(topology: &Topology, cfg: &SimConfig, gain_rng: &mut R) -> Self {
        let frozen = match cfg.shadowing {
            crate::config::Shadowing::Frozen => Some(draw_gains(topology, gain_rng)),
            crate::config::Shadowing::PerSlot => None,
        };
        Self { frozen }
    }

    pub fn next_slot<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &self,
        topology: &Topology,
        cfg: &SimConfig,
        gain_rng: &mut R1,
        fading_rng: &mut R2,
    ) -> ChannelSlot {
        let gains = match &self.frozen {
            Some(g) => g.clone(),
            None => draw_gains(topology, gain_rng),
        };
        estimate_capacities(topology, &gains, cfg, fading_rng)
    }
}
