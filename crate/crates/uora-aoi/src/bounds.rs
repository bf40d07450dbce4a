//! Closed-form machinery for the fixed-window (`m = 0`) generate-at-will
//! regime: exact AAoI, its lower bound, the exponential approximation over a
//! real window `W`, Lambert-W evaluation and root classification.

use crate::error::{Result, UoraError};

/// Behavior class of the approximate lower bound over `W in (0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootRegime {
    /// `B < 0` and `B^2 > 4(L+1)`: roots `r1 < r2 < r3`, derivative sign
    /// pattern (-, +, -, +).
    ThreeRoot,
    /// Only `r2 = sqrt(L+1)`: sign pattern (-, +).
    OneRoot,
}

/// Stationary points of the approximate lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSet {
    pub regime: RootRegime,
    pub b_coeff: f64,
    pub r1: Option<f64>,
    pub r2: f64,
    pub r3: Option<f64>,
}

/// Principal branch of the Lambert W function, solved by Halley iteration to
/// relative 1e-12.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let min_x = -(-1.0f64).exp(); // -1/e
    if x < min_x - 1e-15 {
        return Err(UoraError::InvalidArgument(format!(
            "lambert_w0: x = {x} below -1/e"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // initial guess: series near the branch point, log-based elsewhere
    let mut w = if x < -0.25 {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0
    } else if x < std::f64::consts::E {
        x / (1.0 + x)
    } else {
        let lx = x.ln();
        lx - lx.ln()
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (wp1 + 1.0) * f / (2.0 * wp1);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 1e-14 * w.abs().max(1e-3) {
            break;
        }
    }
    let residual = (w * w.exp() - x).abs();
    if residual > 1e-12 * x.abs().max(1.0) {
        return Err(UoraError::InternalConsistency(format!(
            "lambert_w0({x}) residual {residual:e}"
        )));
    }
    Ok(w)
}

/// `B = -2(N-1)/(W0(-1/(2e)) + 1) + L - 2`.
pub fn compute_b(n: usize, l: usize) -> Result<f64> {
    if n < 2 || l < 2 {
        return Err(UoraError::InvalidArgument(format!(
            "compute_b: requires N >= 2 and L >= 2, got N = {n}, L = {l}"
        )));
    }
    let w = lambert_w0(-1.0 / (2.0 * std::f64::consts::E))?;
    Ok(-2.0 * (n as f64 - 1.0) / (w + 1.0) + l as f64 - 2.0)
}

/// `U(W) = (W^2 + (L-2) W + L + 1) / (2 W L)`.
pub fn u_of_w(w: f64, l: usize) -> Result<f64> {
    if w <= 0.0 {
        return Err(UoraError::InvalidArgument(format!(
            "u_of_w: W = {w} must be positive"
        )));
    }
    let lf = l as f64;
    Ok((w * w + (lf - 2.0) * w + lf + 1.0) / (2.0 * w * lf))
}

fn u0_moments(w0: u64, l: usize) -> (f64, f64) {
    let lu = l as u64;
    let a = ((w0 - 1) / lu) as f64;
    let b = (w0 - 1 - ((w0 - 1) / lu) * lu) as f64;
    let w = w0 as f64;
    let lf = l as f64;
    let eu = a * (a + 1.0) / 2.0 * lf / w + ((a + 1.0) * b + 1.0) / w;
    let eu2 = a * (a + 1.0) * (2.0 * a + 1.0) / 6.0 * lf / w + ((a + 1.0).powi(2) * b + 1.0) / w;
    (eu, eu2)
}

/// Exact generate-at-will AAoI with `m = 0`:
/// `E[U0^2]/(2 E[U0]) + ((1-q)/q) E[U0] + 1/2` with `rho = 1/E[U0]` and
/// `q = (1 - rho/L)^(N-1)`.
pub fn aaoi_closed_form_m0(n: usize, l: usize, w0: u64) -> Result<f64> {
    validate_m0_inputs(n, l, w0)?;
    let (eu, eu2) = u0_moments(w0, l);
    let rho = 1.0 / eu;
    let q = (1.0 - rho / l as f64).powi(n as i32 - 1);
    Ok(eu2 / (2.0 * eu) + (1.0 - q) / q * eu + 0.5)
}

/// The matching lower bound:
/// `((1 - 1/(L E[U0]))^(1-N) - 1/2) E[U0] + 1/2`.
pub fn aaoi_lower_bound_m0(n: usize, l: usize, w0: u64) -> Result<f64> {
    validate_m0_inputs(n, l, w0)?;
    let (eu, _) = u0_moments(w0, l);
    let inv_q = (1.0 - 1.0 / (l as f64 * eu)).powi(1 - n as i32);
    Ok((inv_q - 0.5) * eu + 0.5)
}

fn validate_m0_inputs(n: usize, l: usize, w0: u64) -> Result<()> {
    if n == 0 || l == 0 || w0 == 0 {
        return Err(UoraError::InvalidArgument(format!(
            "closed form requires N, L, W0 >= 1, got N = {n}, L = {l}, W0 = {w0}"
        )));
    }
    if n > 1 && l == 1 {
        // q = (1 - rho)^{N-1} can hit zero when rho = 1
        let (eu, _) = u0_moments(w0, l);
        if eu <= 1.0 {
            return Err(UoraError::InvalidArgument(
                "closed form degenerate: L = 1 with W0 <= 2 gives q = 0".into(),
            ));
        }
    }
    Ok(())
}

/// The lower bound extended to real `W` through `U(W)`, before the
/// exponential approximation:
/// `hat = ((1 - 1/(U(W) L))^(1-N) - 1/2) U(W) + 1/2`.
pub fn approx_lower_bound_hat(n: usize, l: usize, w: f64) -> Result<f64> {
    let u = u_of_w(w, l)?;
    let inv_q = (1.0 - 1.0 / (u * l as f64)).powi(1 - n as i32);
    Ok((inv_q - 0.5) * u + 0.5)
}

/// The exponential approximation of the lower bound:
/// `tilde = (exp((N-1)/(U(W) L)) - 1/2) U(W) + 1/2`.
pub fn approx_lower_bound(n: usize, l: usize, w: f64) -> Result<f64> {
    let u = u_of_w(w, l)?;
    Ok((((n as f64 - 1.0) / (u * l as f64)).exp() - 0.5) * u + 0.5)
}

/// The exact lower bound as a function of real `W`, via
/// `alpha_0 = floor((W-1)/L)`, `beta_0 = W - 1 - alpha_0 L`.
pub fn lower_bound_of_w(n: usize, l: usize, w: f64) -> Result<f64> {
    if w < 1.0 {
        return Err(UoraError::InvalidArgument(format!(
            "lower_bound_of_w: W = {w} must be >= 1"
        )));
    }
    let lf = l as f64;
    let a = ((w - 1.0) / lf).floor();
    let b = w - 1.0 - a * lf;
    let eu = a * (a + 1.0) / 2.0 * lf / w + ((a + 1.0) * b + 1.0) / w;
    let inv_q = (1.0 - 1.0 / (lf * eu)).powi(1 - n as i32);
    Ok((inv_q - 0.5) * eu + 0.5)
}

/// Classifies the stationary points of the approximate lower bound.
pub fn stationary_roots(n: usize, l: usize) -> Result<RootSet> {
    let b = compute_b(n, l)?;
    let r2 = ((l + 1) as f64).sqrt();
    let disc = b * b - 4.0 * (l as f64 + 1.0);
    if b < 0.0 && disc > 0.0 {
        let sq = disc.sqrt();
        Ok(RootSet {
            regime: RootRegime::ThreeRoot,
            b_coeff: b,
            r1: Some((-b - sq) / 2.0),
            r2,
            r3: Some((-b + sq) / 2.0),
        })
    } else {
        Ok(RootSet {
            regime: RootRegime::OneRoot,
            b_coeff: b,
            r1: None,
            r2,
            r3: None,
        })
    }
}
