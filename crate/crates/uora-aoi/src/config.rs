//! Scenario parameters and the derived backoff ladder.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UoraError};

/// Largest station count accepted for validation runs.
pub const MAX_STAS: usize = 1024;
/// Largest random-access RU count a 20/40/80/160 MHz channel can expose.
pub const MAX_RUS: usize = 74;
/// Upper end of the exponent range for the contention window.
pub const MAX_EOCW: u32 = 7;

/// One UORA scenario: `(N, L, lambda, EOCW_min, m)`.
///
/// `arrival_rate == 1.0` is the generate-at-will regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of stations, `N >= 1`.
    pub n_stas: usize,
    /// Number of random-access resource units per trigger frame, `L >= 1`.
    pub n_rus: usize,
    /// Per-slot Bernoulli arrival probability, in `(0, 1]`.
    pub arrival_rate: f64,
    /// Exponent of the minimum contention window, `W_0 = 2^eocw_min`.
    pub eocw_min: u32,
    /// Highest backoff level `m`; `eocw_min + m <= 7`.
    pub max_backoff_level: u32,
}

impl NetworkConfig {
    pub fn new(
        n_stas: usize,
        n_rus: usize,
        arrival_rate: f64,
        eocw_min: u32,
        max_backoff_level: u32,
    ) -> Result<Self> {
        let cfg = NetworkConfig {
            n_stas,
            n_rus,
            arrival_rate,
            eocw_min,
            max_backoff_level,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_stas == 0 || self.n_stas > MAX_STAS {
            return Err(UoraError::InvalidConfig(format!(
                "n_stas must be in 1..={MAX_STAS}, got {}",
                self.n_stas
            )));
        }
        if self.n_rus == 0 || self.n_rus > MAX_RUS {
            return Err(UoraError::InvalidConfig(format!(
                "n_rus must be in 1..={MAX_RUS}, got {}",
                self.n_rus
            )));
        }
        if !(self.arrival_rate > 0.0 && self.arrival_rate <= 1.0) {
            return Err(UoraError::InvalidConfig(format!(
                "arrival_rate must be in (0, 1], got {}",
                self.arrival_rate
            )));
        }
        if self.eocw_min > MAX_EOCW {
            return Err(UoraError::InvalidConfig(format!(
                "eocw_min must be in 0..={MAX_EOCW}, got {}",
                self.eocw_min
            )));
        }
        if self.eocw_min + self.max_backoff_level > MAX_EOCW {
            return Err(UoraError::InvalidConfig(format!(
                "eocw_min + m must not exceed {MAX_EOCW}, got {} + {}",
                self.eocw_min, self.max_backoff_level
            )));
        }
        Ok(())
    }

    /// True in the generate-at-will regime.
    pub fn generate_at_will(&self) -> bool {
        self.arrival_rate == 1.0
    }
}

/// Per-level contention windows `W_x` and the derived quantities
/// `alpha_x` (quotient), `beta_x` (remainder of `(W_x - 1) / L`) and `H_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackoffLadder {
    pub w: Vec<u64>,
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
    pub h: Vec<f64>,
}

impl BackoffLadder {
    /// Number of backoff levels, `m + 1`.
    pub fn levels(&self) -> usize {
        self.w.len()
    }
}

/// Derives the backoff ladder of `config`.
///
/// `W_0 = 2^eocw_min` and `W_x = 2^x W_0`; the window cap never bites below
/// level `m` because `EOCW_max = EOCW_min + m`.
pub fn build_ladder(config: &NetworkConfig) -> Result<BackoffLadder> {
    config.validate()?;
    let l = config.n_rus as u64;
    let levels = config.max_backoff_level as usize + 1;
    let w0 = 1u64 << config.eocw_min;
    let mut w = Vec::with_capacity(levels);
    let mut alpha = Vec::with_capacity(levels);
    let mut beta = Vec::with_capacity(levels);
    let mut h = Vec::with_capacity(levels);
    for x in 0..levels {
        let wx = w0 << x;
        let a = (wx - 1) / l;
        let b = wx - 1 - a * l;
        let lf = l as f64;
        let af = a as f64;
        let hx = -lf / 2.0 * af * af + ((wx - 1) as f64 - lf / 2.0) * af;
        w.push(wx);
        alpha.push(a);
        beta.push(b);
        h.push(hx);
    }
    Ok(BackoffLadder { w, alpha, beta, h })
}

/// Durations (microseconds) composing one UORA slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotTiming {
    pub t_tf: f64,
    pub t_sifs: f64,
    pub t_payload: f64,
    pub t_ack: f64,
    pub t_difs: f64,
}

impl SlotTiming {
    /// `T_slot = T_TF + 2 T_SIFS + T_payload + T_ACK + T_DIFS`.
    pub fn slot_duration(&self) -> f64 {
        self.t_tf + 2.0 * self.t_sifs + self.t_payload + self.t_ack + self.t_difs
    }
}

/// Converts a continuous-time Poisson rate (per microsecond) into the
/// equivalent per-slot Bernoulli arrival probability
/// `1 - exp(-rate * T_slot)`.
pub fn poisson_to_slot_rate(poisson_rate: f64, timing: &SlotTiming) -> f64 {
    1.0 - (-poisson_rate * timing.slot_duration()).exp()
}
