//! Assembles the average AoI from the converged fixed point: per-level
//! waiting moments, the service-time recursions, vacancy moments, and the
//! expected service time.

use crate::config::{build_ladder, BackoffLadder, NetworkConfig};
use crate::error::{Result, UoraError};
use crate::steady_state::{solve_fixed_point, SteadyState};

/// First and second moments of the waiting time `U_x` per backoff level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitMoments {
    pub eu: Vec<f64>,
    pub eu2: Vec<f64>,
}

/// Moments of the arrival-to-success interval `K = R_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceMoments {
    pub er0: f64,
    pub er0_sq: f64,
}

/// The full moment set behind one AAoI evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoiBreakdown {
    /// Vacancy before the first useful arrival, `E[V]` and `E[V^2]`.
    pub ev: f64,
    pub ev2: f64,
    /// Arrival-to-reception interval, `E[K]` and `E[K^2]`.
    pub ek: f64,
    pub ek2: f64,
    /// Expected service time `E[S]`.
    pub es: f64,
    /// Inter-reception interval, `E[X] = E[V] + E[K]` and its second moment.
    pub ex: f64,
    pub ex2: f64,
    /// `E[S] + E[X^2] / (2 E[X]) - 1/2`.
    pub aaoi: f64,
}

/// Fixed point plus the assembled AAoI for one scenario.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub steady_state: SteadyState,
    pub breakdown: AoiBreakdown,
}

/// Waiting-time moments per level:
/// `E[U_x] = (alpha(alpha+1)/2) L/W + ((alpha+1) beta + 1)/W` and
/// `E[U_x^2] = (alpha(alpha+1)(2alpha+1)/6) L/W + ((alpha+1)^2 beta + 1)/W`.
pub fn wait_moments(ladder: &BackoffLadder, l: usize) -> WaitMoments {
    let lf = l as f64;
    let mut eu = Vec::with_capacity(ladder.levels());
    let mut eu2 = Vec::with_capacity(ladder.levels());
    for x in 0..ladder.levels() {
        let w = ladder.w[x] as f64;
        let a = ladder.alpha[x] as f64;
        let b = ladder.beta[x] as f64;
        eu.push(a * (a + 1.0) / 2.0 * lf / w + ((a + 1.0) * b + 1.0) / w);
        eu2.push(a * (a + 1.0) * (2.0 * a + 1.0) / 6.0 * lf / w + ((a + 1.0).powi(2) * b + 1.0) / w);
    }
    WaitMoments { eu, eu2 }
}

/// Backward recursions for `E[R_0]`, `E[R_0^2]` starting from the top level:
/// `E[R_m] = E[U_m]/q`, `E[R_m^2] = E[U_m^2]/q + 2(1-q) E[U_m]^2 / q^2`,
/// then `E[R_x] = E[U_x] + (1-q) E[R_{x+1}]` downwards.
pub fn service_moments(q: f64, moments: &WaitMoments) -> Result<ServiceMoments> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(UoraError::InvalidArgument(format!(
            "service_moments: q = {q} outside (0, 1]"
        )));
    }
    let m = moments.eu.len() - 1;
    let mut er = moments.eu[m] / q;
    let mut er2 = moments.eu2[m] / q + 2.0 * (1.0 - q) / (q * q) * moments.eu[m] * moments.eu[m];
    for x in (0..m).rev() {
        er2 = moments.eu2[x] + 2.0 * (1.0 - q) * er * moments.eu[x] + (1.0 - q) * er2;
        er = moments.eu[x] + (1.0 - q) * er;
    }
    Ok(ServiceMoments {
        er0: er,
        er0_sq: er2,
    })
}

/// Moments of the shifted-geometric vacancy:
/// `E[V] = 1/lambda - 1`, `E[V^2] = (1 - lambda)(2 - lambda)/lambda^2`.
pub fn vacancy_moments(lambda: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(UoraError::InvalidArgument(format!(
            "vacancy_moments: lambda = {lambda} outside (0, 1]"
        )));
    }
    let ev = 1.0 / lambda - 1.0;
    let ev2 = (1.0 - lambda) * (2.0 - lambda) / (lambda * lambda);
    Ok((ev, ev2))
}

/// Expected service time under the steady-state Bernoulli-access
/// approximation: `E[S] = 1 / (lambda (1 - rho q) + rho q)`.
pub fn expected_service(lambda: f64, rho: f64, q: f64) -> Result<f64> {
    let rq = rho * q;
    if lambda == 0.0 && rq == 0.0 {
        return Err(UoraError::InvalidArgument(
            "expected_service: lambda and rho*q cannot both be zero".into(),
        ));
    }
    Ok(1.0 / (lambda * (1.0 - rq) + rq))
}

/// Runs the whole analytical pipeline for `config` and returns both the
/// fixed point and the assembled AAoI breakdown.
pub fn analyze(config: &NetworkConfig) -> Result<Analysis> {
    let steady_state = solve_fixed_point(config)?;
    let breakdown = breakdown_from_state(config, &steady_state)?;
    Ok(Analysis {
        steady_state,
        breakdown,
    })
}

/// Assembles the AAoI from an already-converged steady state.
pub fn breakdown_from_state(config: &NetworkConfig, state: &SteadyState) -> Result<AoiBreakdown> {
    let ladder = build_ladder(config)?;
    let wm = wait_moments(&ladder, config.n_rus);
    let sm = service_moments(state.q, &wm)?;
    let (ev, ev2) = vacancy_moments(config.arrival_rate)?;
    let es = expected_service(config.arrival_rate, state.rho, state.q)?;
    let ek = sm.er0;
    let ek2 = sm.er0_sq;
    let ex = ev + ek;
    let ex2 = ev2 + ek2 + 2.0 * ev * ek;
    let aaoi = es + ex2 / (2.0 * ex) - 0.5;
    Ok(AoiBreakdown {
        ev,
        ev2,
        ek,
        ek2,
        es,
        ex,
        ex2,
        aaoi,
    })
}

/// The long-term average AoI of `config`.
pub fn average_aoi(config: &NetworkConfig) -> Result<AoiBreakdown> {
    Ok(analyze(config)?.breakdown)
}

/// True iff both configs fall into the flat `W_m <= L + 1` regime, in which
/// case their AAoI is identical.
pub fn is_corollary1_equivalent(a: &NetworkConfig, b: &NetworkConfig) -> Result<bool> {
    if a.n_stas != b.n_stas || a.n_rus != b.n_rus || a.arrival_rate != b.arrival_rate {
        return Err(UoraError::InvalidArgument(
            "is_corollary1_equivalent: configs must share (N, L, lambda)".into(),
        ));
    }
    let flat = |c: &NetworkConfig| -> Result<bool> {
        let ladder = build_ladder(c)?;
        Ok(*ladder.w.last().unwrap() <= c.n_rus as u64 + 1)
    };
    Ok(flat(a)? && flat(b)?)
}
