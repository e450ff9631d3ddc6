//! Simulation configuration.
//!
//! [`SimConfig`] serializes to a flat TOML document whose keys follow the
//! usual notation of the model (`U`, `H`, `F`, `N`, `M`, `V`, `D`, `A_max`,
//! ...). The shipped defaults live in `configs/default.toml` and are the
//! same values as [`SimConfig::default`].

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// How an AP turns link capacity into per-user service rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// Every associated user is granted the full link capacity `C_uh`.
    FullRate,
    /// The AP bandwidth is split equally among its associated users.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementMode {
    /// Each AP caches a uniformly random `N`-subset of the file types.
    Random,
    /// Every AP caches the `N` most popular types.
    TopPopularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkMode {
    /// Every user may associate with every AP.
    Complete,
    /// A potential link exists when the user-AP distance is at most `link_radius`.
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorSchedule {
    /// `e_type` and `e_size` apply at every window depth; drawn once per request.
    Fixed,
    /// The rate at depth `d` is `d / (d + error_c)`; predictions are revised every slot.
    TimeVarying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shadowing {
    /// LOS/NLOS state and shadowing are redrawn every slot.
    PerSlot,
    /// Drawn once per run and held for the whole horizon.
    Frozen,
}

/// All parameters of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Number of users.
    #[serde(rename = "U")]
    pub users: usize,
    /// Number of APs.
    #[serde(rename = "H")]
    pub aps: usize,
    /// Number of file types.
    #[serde(rename = "F")]
    pub file_types: usize,
    /// Types cached per AP.
    #[serde(rename = "N")]
    pub cache_size: usize,
    /// Maximum users per AP per slot.
    #[serde(rename = "M")]
    pub max_users_per_ap: usize,
    /// Drift-plus-penalty control parameter.
    #[serde(rename = "V")]
    pub v: f64,
    /// Lookahead window size in slots (same for every user).
    #[serde(rename = "D")]
    pub window: usize,
    /// Maximum request size per user per slot, Mbits.
    #[serde(rename = "A_max")]
    pub a_max: f64,
    /// Zipf exponent of file-type popularity.
    pub eta_r: f64,
    /// Slot length in seconds, used to report delays in seconds.
    pub tau: f64,
    /// AP bandwidth, Hz.
    #[serde(rename = "B")]
    pub bandwidth_hz: f64,
    /// AP transmit power, linear and normalized to the noise power.
    #[serde(rename = "P")]
    pub tx_power: f64,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    /// Horizon in slots.
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed: u64,
    /// Monte Carlo fading samples per capacity estimate.
    pub n_fading_samples: usize,
    /// Seconds of transmission credited per slot when converting spectral
    /// efficiency into a per-slot capacity.
    pub airtime: f64,
    pub rate_mode: RateMode,
    pub placement_mode: PlacementMode,
    pub link_mode: LinkMode,
    /// Only read in `radius` link mode, meters.
    pub link_radius: f64,
    pub e_type: f64,
    pub e_size: f64,
    pub error_schedule: ErrorSchedule,
    /// The constant `C` of the time-varying error schedule.
    pub error_c: f64,
    /// Minimum bandwidth ratio per user (shared rate mode only).
    pub xi: f64,
    pub log_base: LogBase,
    pub shadowing: Shadowing,
    /// Fraction of leading slots excluded from windowed averages.
    pub warmup_fraction: f64,
    /// Keep every k-th slot in the reported backlog trajectory.
    pub trajectory_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            users: 100,
            aps: 9,
            file_types: 4,
            cache_size: 3,
            max_users_per_ap: 12,
            v: 1000.0,
            window: 20,
            a_max: 100.0,
            eta_r: 0.56,
            tau: 0.01,
            bandwidth_hz: 18e6,
            tx_power: 1e8,
            area_side: 50.0,
            horizon: 50_000,
            seed: 1,
            n_fading_samples: 64,
            airtime: DEFAULT_AIRTIME,
            rate_mode: RateMode::FullRate,
            placement_mode: PlacementMode::Random,
            link_mode: LinkMode::Complete,
            link_radius: 25.0,
            e_type: 0.0,
            e_size: 0.0,
            error_schedule: ErrorSchedule::Fixed,
            error_c: 60.0,
            xi: 0.05,
            log_base: LogBase::Two,
            shadowing: Shadowing::PerSlot,
            warmup_fraction: 0.1,
            trajectory_stride: 1,
        }
    }
}

pub const DEFAULT_AIRTIME: f64 = 32.0;

impl SimConfig {
    /// Checks every invariant and names the first one that fails.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        fn fail(msg: String) -> Result<()> {
            Err(Error::Config(msg))
        }
        if self.users == 0 {
            return fail("U >= 1 violated".into());
        }
        if self.aps == 0 {
            return fail("H >= 1 violated".into());
        }
        if self.file_types == 0 {
            return fail("F >= 1 violated".into());
        }
        if self.cache_size >= self.file_types {
            return fail(format!(
                "N < F violated (N = {}, F = {})",
                self.cache_size, self.file_types
            ));
        }
        if self.max_users_per_ap == 0 || self.max_users_per_ap > self.users {
            return fail(format!(
                "1 <= M <= U violated (M = {}, U = {})",
                self.max_users_per_ap, self.users
            ));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return fail(format!("V > 0 violated (V = {})", self.v));
        }
        if !(self.a_max > 0.0 && self.a_max.is_finite()) {
            return fail(format!("A_max > 0 violated (A_max = {})", self.a_max));
        }
        if self.horizon == 0 {
            return fail("T > 0 violated".into());
        }
        if !(self.eta_r >= 0.0 && self.eta_r.is_finite()) {
            return fail(format!("eta_r >= 0 violated (eta_r = {})", self.eta_r));
        }
        for (name, x) in [("e_type", self.e_type), ("e_size", self.e_size)] {
            if !(0.0..=1.0).contains(&x) {
                return fail(format!("{name} in [0, 1] violated ({name} = {x})"));
            }
        }
        for (name, x) in [
            ("tau", self.tau),
            ("B", self.bandwidth_hz),
            ("area_side", self.area_side),
            ("airtime", self.airtime),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return fail(format!("{name} > 0 violated ({name} = {x})"));
            }
        }
        if !(self.tx_power >= 0.0 && self.tx_power.is_finite()) {
            return fail(format!("P >= 0 violated (P = {})", self.tx_power));
        }
        if self.n_fading_samples == 0 {
            return fail("n_fading_samples >= 1 violated".into());
        }
        if self.error_schedule == ErrorSchedule::TimeVarying && !(self.error_c > 0.0) {
            return fail(format!("error_c > 0 violated (error_c = {})", self.error_c));
        }
        if self.link_mode == LinkMode::Radius && !(self.link_radius > 0.0) {
            return fail(format!(
                "link_radius > 0 violated (link_radius = {})",
                self.link_radius
            ));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return fail(format!(
                "warmup_fraction in [0, 1) violated ({})",
                self.warmup_fraction
            ));
        }
        if self.trajectory_stride == 0 {
            return fail("trajectory_stride >= 1 violated".into());
        }
        if self.rate_mode == RateMode::Shared {
            if !(self.xi > 0.0 && self.xi <= 1.0) {
                return fail(format!("xi in (0, 1] violated (xi = {})", self.xi));
            }
            let cap = (1.0 / self.xi).floor() as usize;
            if self.max_users_per_ap > cap {
                return fail(format!(
                    "M <= floor(1/xi) violated in shared mode (M = {}, floor(1/xi) = {cap})",
                    self.max_users_per_ap
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Applies one `key=value` override. The key must name an existing field;
    /// the value is read as a TOML scalar, falling back to a bare string.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut table = toml::Table::try_from(&*self)?;
        if !table.contains_key(key) {
            return Err(Error::UnknownKey(key.to_string()));
        }
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.to_string(), parsed);
        *self = toml::Value::Table(table).try_into()?;
        Ok(())
    }

    /// Applies a list of `key=value` strings in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Mean request size per user per slot for the uniform `(0, A_max]` law.
    pub fn mean_arrival(&self) -> f64 {
        self.a_max / 2.0
    }
}
