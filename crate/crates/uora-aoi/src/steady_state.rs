//! DTMC over the active-STA count, its stationary distribution, and the
//! coupled fixed point between the success rate `q` and the accessing
//! rate `rho`.

use crate::combinatorics::{access_count_prob, arrival_count_prob, singleton_table};
use crate::config::{build_ladder, BackoffLadder, NetworkConfig};
use crate::error::{Result, UoraError};

/// Row deviation from stochasticity that trips the internal check.
const ROW_SUM_TOLERANCE: f64 = 1e-7;
/// Stationary residual bound enforced after the solve.
const STATIONARY_RESIDUAL: f64 = 1e-10;
/// Convergence threshold on `|dq| + |drho|` between iterations. Tighter than
/// the 1e-10 contract so downstream closed-form cross-checks hold at 1e-9.
const FIXED_POINT_TOL: f64 = 1e-12;
/// Iteration cap for the damped fixed-point loop.
const MAX_ITERATIONS: usize = 10_000;
/// Damping factor applied to the rho update.
const DAMPING: f64 = 0.5;

/// Row-stochastic transition matrix over active-STA counts `0..=N`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Number of states, `N + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * (self.n + 1) + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * (self.n + 1)..(i + 1) * (self.n + 1)]
    }
}

/// Converged steady state of one scenario.
#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Stationary distribution over active-STA counts.
    pub mu: Vec<f64>,
    /// Per-attempt transmission success probability.
    pub q: f64,
    /// Stationary accessing probability of an active STA.
    pub rho: f64,
    /// Fixed-point iterations consumed.
    pub iterations: usize,
    /// Final `|dq| + |drho|` residual.
    pub residual: f64,
}

/// Builds the transition matrix
/// `P_{i,j} = sum_s A^{j-i+s}_{N-i+s}(lambda) D^s_i(rho, L)`.
pub fn build_transition_matrix(config: &NetworkConfig, rho: f64) -> Result<TransitionMatrix> {
    config.validate()?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(UoraError::InvalidArgument(format!(
            "build_transition_matrix: rho = {rho} outside [0, 1]"
        )));
    }
    let n = config.n_stas;
    let l = config.n_rus;
    let lambda = config.arrival_rate;
    let t_table = singleton_table(l, n)?;

    // D^s_i(rho, L) for all i, s; reused across the whole row sweep
    let mut d = vec![vec![0.0f64; l + 1]; n + 1];
    for i in 0..=n {
        for s in 0..=i.min(l) {
            let mut total = 0.0;
            for g in s..=i {
                let c = access_count_prob(g, i, rho)?;
                if c > 0.0 {
                    total += c * t_table.rows[g][s];
                }
            }
            d[i][s] = total;
        }
    }

    let mut entries = vec![0.0f64; (n + 1) * (n + 1)];
    for i in 0..=n {
        for j in 0..=n {
            let mut p = 0.0;
            let s_lo = i.saturating_sub(j);
            let s_hi = i.min(l);
            for s in s_lo..=s_hi {
                let arrivals = j + s - i; // j - i + s
                let idle = n - i + s;
                if arrivals > idle {
                    continue;
                }
                p += arrival_count_prob(arrivals, idle, lambda)? * d[i][s];
            }
            entries[i * (n + 1) + j] = p;
        }
        let row_sum: f64 = entries[i * (n + 1)..(i + 1) * (n + 1)].iter().sum();
        if (row_sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(UoraError::InternalConsistency(format!(
                "transition row {i} sums to {row_sum}, expected 1"
            )));
        }
        // normalize away the residual rounding so the stationary solve is clean
        for v in &mut entries[i * (n + 1)..(i + 1) * (n + 1)] {
            *v /= row_sum;
        }
    }
    Ok(TransitionMatrix { n, entries })
}

/// Solves `mu^T P = mu^T`, `sum mu = 1` by replacing the last balance
/// equation with the normalization and running partially pivoted elimination.
///
/// A reducible chain (zero pivot) yields the uniform distribution, the
/// documented degenerate tie-break.
pub fn solve_stationary(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    let dim = matrix.dim();
    // system rows: (P^T - I) mu = 0 for rows 0..dim-1, last row replaced by ones
    let mut a = vec![0.0f64; dim * dim];
    let mut b = vec![0.0f64; dim];
    for r in 0..dim - 1 {
        for c in 0..dim {
            a[r * dim + c] = matrix.get(c, r) - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..dim {
        a[(dim - 1) * dim + c] = 1.0;
    }
    b[dim - 1] = 1.0;

    let mut degenerate = false;
    for col in 0..dim {
        let (pivot_row, pivot_val) = (col..dim)
            .map(|r| (r, a[r * dim + col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_val < 1e-13 {
            degenerate = true;
            break;
        }
        if pivot_row != col {
            for c in 0..dim {
                a.swap(pivot_row * dim + c, col * dim + c);
            }
            b.swap(pivot_row, col);
        }
        let pv = a[col * dim + col];
        for r in col + 1..dim {
            let f = a[r * dim + col] / pv;
            if f == 0.0 {
                continue;
            }
            for c in col..dim {
                a[r * dim + c] -= f * a[col * dim + c];
            }
            b[r] -= f * b[col];
        }
    }
    if degenerate {
        return Ok(vec![1.0 / dim as f64; dim]);
    }
    let mut mu = vec![0.0f64; dim];
    for r in (0..dim).rev() {
        let mut v = b[r];
        for c in r + 1..dim {
            v -= a[r * dim + c] * mu[c];
        }
        mu[r] = v / a[r * dim + r];
    }
    for v in &mut mu {
        if *v < 0.0 {
            if *v < -1e-9 {
                return Err(UoraError::InternalConsistency(format!(
                    "stationary solve produced negative mass {v:e}"
                )));
            }
            *v = 0.0;
        }
    }
    let total: f64 = mu.iter().sum();
    for v in &mut mu {
        *v /= total;
    }
    let residual = stationary_residual(matrix, &mu);
    if residual > STATIONARY_RESIDUAL {
        return Err(UoraError::InternalConsistency(format!(
            "stationary residual {residual:e} exceeds {STATIONARY_RESIDUAL:e}"
        )));
    }
    Ok(mu)
}

/// `|| mu^T P - mu^T ||_inf`.
pub fn stationary_residual(matrix: &TransitionMatrix, mu: &[f64]) -> f64 {
    let dim = matrix.dim();
    (0..dim)
        .map(|j| {
            let v: f64 = (0..dim).map(|i| mu[i] * matrix.get(i, j)).sum();
            (v - mu[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Success rate of an accessing STA given the stationary active-count
/// distribution:
/// `q = sum_a [(a+1) mu_{a+1} / sum_i (i+1) mu_{i+1}] sum_b C^b_a(rho) (1 - 1/L)^b`.
pub fn success_rate(mu: &[f64], rho: f64, config: &NetworkConfig) -> Result<f64> {
    let n = config.n_stas;
    let l = config.n_rus as f64;
    let weight_total: f64 = (0..n).map(|i| (i + 1) as f64 * mu[i + 1]).sum();
    if weight_total <= 0.0 {
        return Err(UoraError::Degenerate(
            "success_rate: no active mass in the stationary distribution".into(),
        ));
    }
    let miss = 1.0 - 1.0 / l;
    let mut q = 0.0;
    for a in 0..n {
        let weight = (a + 1) as f64 * mu[a + 1] / weight_total;
        if weight == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for b in 0..=a {
            inner += access_count_prob(b, a, rho)? * miss.powi(b as i32);
        }
        q += weight * inner;
    }
    Ok(q)
}

/// Accessing rate of an active STA given `q` and the ladder:
/// `rho = W_0 / (q sum_{x<m} H_x ((1-q)/2)^x + H_m ((1-q)/2)^m + W_0)`,
/// collapsing to `W_0 / (H_0 + W_0)` at `m = 0`.
pub fn access_rate(q: f64, ladder: &BackoffLadder) -> f64 {
    let m = ladder.levels() - 1;
    let w0 = ladder.w[0] as f64;
    if m == 0 {
        return w0 / (ladder.h[0] + w0);
    }
    let r = (1.0 - q) / 2.0;
    let mut denom = 0.0;
    let mut pow = 1.0;
    for x in 0..m {
        denom += ladder.h[x] * pow;
        pow *= r;
    }
    denom = q * denom + ladder.h[m] * pow + w0;
    w0 / denom
}

/// Resolves the coupled `(q, rho, mu)` fixed point by damped iteration from
/// `rho = 1`.
pub fn solve_fixed_point(config: &NetworkConfig) -> Result<SteadyState> {
    config.validate()?;
    let ladder = build_ladder(config)?;
    let mut rho = 1.0f64;
    let mut q = 1.0f64;
    let mut mu = vec![0.0; config.n_stas + 1];
    let mut residual = f64::INFINITY;
    // step shrinks while the residual oscillates (bistable regimes near
    // congestion collapse) and recovers slowly once it contracts again
    let mut step = DAMPING;
    for iteration in 1..=MAX_ITERATIONS {
        let matrix = build_transition_matrix(config, rho)?;
        mu = solve_stationary(&matrix)?;
        let q_next = success_rate(&mu, rho, config)?;
        let rho_raw = access_rate(q_next, &ladder);
        let rho_next = (1.0 - step) * rho + step * rho_raw;
        let residual_next = (q_next - q).abs() + (rho_next - rho).abs();
        if residual_next > residual {
            step = (step * 0.5).max(1e-3);
        } else {
            step = (step * 1.1).min(DAMPING);
        }
        residual = residual_next;
        q = q_next;
        rho = rho_next;
        if residual <= FIXED_POINT_TOL {
            return Ok(SteadyState {
                mu,
                q,
                rho,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(UoraError::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual,
        q,
        rho,
    })
}
