//! Elementary probabilities behind the active-count transition matrix:
//! binomial arrival/access counts and the balls-into-bins singleton
//! probability `T^s_g(L)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Result, UoraError};

/// Threshold above which binomial masses switch to log-gamma evaluation.
const DIRECT_BINOMIAL_LIMIT: usize = 30;
/// Threshold above which the alternating-sum form of `T^s_g(L)` cancels too
/// badly and the occupancy DP takes over.
const CLOSED_FORM_LIMIT: usize = 25;
/// Alternating-sum results within this margin below zero are rounding noise.
const NEGATIVE_CLAMP: f64 = 1e-12;

/// Table of `ln(k!)` for `k = 0..=cap`.
#[derive(Debug, Clone)]
pub struct LogFactorialTable {
    table: Vec<f64>,
}

impl LogFactorialTable {
    pub fn new(cap: usize) -> Self {
        let mut table = Vec::with_capacity(cap + 1);
        table.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..=cap {
            acc += (k as f64).ln();
            table.push(acc);
        }
        LogFactorialTable { table }
    }

    pub fn cap(&self) -> usize {
        self.table.len() - 1
    }

    /// `ln(k!)`.
    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln C(n, k)`.
    pub fn ln_choose(&self, n: usize, k: usize) -> f64 {
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

fn shared_table() -> &'static LogFactorialTable {
    static TABLE: OnceLock<LogFactorialTable> = OnceLock::new();
    // covers N <= 1024 plus headroom for L
    TABLE.get_or_init(|| LogFactorialTable::new(2200))
}

fn binomial_mass(k: usize, n: usize, p: f64) -> f64 {
    debug_assert!(k <= n);
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    if n <= DIRECT_BINOMIAL_LIMIT {
        // direct product, stable at this size
        let mut c = 1.0f64;
        for j in 0..k {
            c = c * (n - j) as f64 / (j + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    } else {
        let t = shared_table();
        (t.ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
    }
}

/// `A^k_n(lambda)`: probability that `k` of `n` idle STAs receive a new
/// status update in one slot.
pub fn arrival_count_prob(k: usize, n: usize, lambda: f64) -> Result<f64> {
    if k > n {
        return Err(UoraError::InvalidArgument(format!(
            "arrival_count_prob: k = {k} exceeds n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(UoraError::InvalidArgument(format!(
            "arrival_count_prob: lambda = {lambda} outside [0, 1]"
        )));
    }
    Ok(binomial_mass(k, n, lambda))
}

/// `C^g_i(rho)`: probability that `g` of `i` active STAs are accessing STAs.
pub fn access_count_prob(g: usize, i: usize, rho: f64) -> Result<f64> {
    if g > i {
        return Err(UoraError::InvalidArgument(format!(
            "access_count_prob: g = {g} exceeds i = {i}"
        )));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(UoraError::InvalidArgument(format!(
            "access_count_prob: rho = {rho} outside [0, 1]"
        )));
    }
    Ok(binomial_mass(g, i, rho))
}

/// Closed-form alternating sum for `T^s_g(L)`, evaluated with signed
/// log-magnitude terms and compensated summation. Cancels catastrophically
/// for large `g`; retained for cross-validation against the DP path.
pub fn singleton_alloc_prob_closed(s: usize, g: usize, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(UoraError::InvalidArgument(
            "singleton_alloc_prob: l must be positive".into(),
        ));
    }
    if s > g.min(l) {
        return Ok(0.0);
    }
    let t = shared_table();
    let ln_l = l as f64;
    let mut terms: Vec<(f64, f64)> = Vec::new(); // (sign, ln magnitude)
    let mut max_ln = f64::NEG_INFINITY;
    for h in s..=g.min(l) {
        if l == h && g != h {
            continue; // (L - h)^(g - h) = 0
        }
        let pow_ln = if g == h {
            0.0 // 0^0 = 1 when L == h
        } else {
            (g - h) as f64 * ((l - h) as f64).ln()
        };
        let ln_mag = t.ln_factorial(l) + t.ln_factorial(g) - g as f64 * ln_l.ln()
            - t.ln_factorial(s)
            + pow_ln
            - t.ln_factorial(h - s)
            - t.ln_factorial(l - h)
            - t.ln_factorial(g - h);
        let sign = if (s + h) % 2 == 0 { 1.0 } else { -1.0 };
        max_ln = max_ln.max(ln_mag);
        terms.push((sign, ln_mag));
    }
    if terms.is_empty() {
        return Ok(0.0);
    }
    // Kahan summation of exp(ln - max), scaled back afterwards
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (sign, ln_mag) in terms {
        let v = sign * (ln_mag - max_ln).exp();
        let y = v - comp;
        let t2 = sum + y;
        comp = (t2 - sum) - y;
        sum = t2;
    }
    let value = sum * max_ln.exp();
    if value < -NEGATIVE_CLAMP {
        return Err(UoraError::InternalConsistency(format!(
            "singleton_alloc_prob_closed({s}, {g}, {l}) = {value:e}: cancellation failure"
        )));
    }
    Ok(value.max(0.0))
}

/// Occupancy DP for `T^s_g(L)`: throw the `g` objects one at a time and
/// track (empty bins, singleton bins). Every intermediate quantity is a
/// nonnegative probability, so the path is stable for any `g`.
pub fn singleton_alloc_prob_dp(s: usize, g: usize, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(UoraError::InvalidArgument(
            "singleton_alloc_prob: l must be positive".into(),
        ));
    }
    if s > g.min(l) {
        return Ok(0.0);
    }
    Ok(singleton_distribution_dp(g, l)[s])
}

/// Distribution of the singleton count after throwing `g` objects into `l`
/// bins: index `s` holds `T^s_g(L)`.
fn singleton_distribution_dp(g: usize, l: usize) -> Vec<f64> {
    let idx = |e: usize, o: usize| e * (l + 1) + o;
    let mut dp = vec![0.0f64; (l + 1) * (l + 1)];
    let mut next = vec![0.0f64; (l + 1) * (l + 1)];
    dp[idx(l, 0)] = 1.0;
    let lf = l as f64;
    for _ in 0..g {
        next.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..=l {
            for o in 0..=(l - e) {
                let p = dp[idx(e, o)];
                if p == 0.0 {
                    continue;
                }
                if e > 0 {
                    next[idx(e - 1, o + 1)] += p * e as f64 / lf;
                }
                if o > 0 {
                    next[idx(e, o - 1)] += p * o as f64 / lf;
                }
                let multi = (l - e - o) as f64;
                if multi > 0.0 {
                    next[idx(e, o)] += p * multi / lf;
                }
            }
        }
        std::mem::swap(&mut dp, &mut next);
    }
    let mut out = vec![0.0f64; g.min(l) + 1];
    for e in 0..=l {
        for o in 0..=(l - e) {
            if o < out.len() {
                out[o] += dp[idx(e, o)];
            }
        }
    }
    out
}

/// `T^s_g(L)`: probability that exactly `s` of `l` units receive exactly one
/// of `g` uniformly thrown objects. Routes to the closed form for small `g`
/// and the occupancy DP beyond.
pub fn singleton_alloc_prob(s: usize, g: usize, l: usize) -> Result<f64> {
    if g <= CLOSED_FORM_LIMIT {
        singleton_alloc_prob_closed(s, g, l)
    } else {
        singleton_alloc_prob_dp(s, g, l)
    }
}

/// Shared per-`L` table of `T^s_g(L)` rows, grown on demand.
/// Row `g` has entries `s = 0..=min(g, l)`.
#[derive(Debug)]
pub struct SingletonTable {
    pub l: usize,
    pub rows: Vec<Vec<f64>>,
}

fn singleton_cache() -> &'static Mutex<HashMap<usize, Arc<SingletonTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SingletonTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Returns a table with rows for all `g = 0..=g_max`, cached per `l`.
pub fn singleton_table(l: usize, g_max: usize) -> Result<Arc<SingletonTable>> {
    if l == 0 {
        return Err(UoraError::InvalidArgument(
            "singleton_table: l must be positive".into(),
        ));
    }
    let mut cache = singleton_cache().lock().unwrap();
    if let Some(existing) = cache.get(&l) {
        if existing.rows.len() > g_max {
            return Ok(Arc::clone(existing));
        }
    }
    let mut rows = Vec::with_capacity(g_max + 1);
    for g in 0..=g_max {
        let row: Result<Vec<f64>> = (0..=g.min(l))
            .map(|s| singleton_alloc_prob(s, g, l))
            .collect();
        rows.push(row?);
    }
    let table = Arc::new(SingletonTable { l, rows });
    cache.insert(l, Arc::clone(&table));
    Ok(table)
}

/// `D^s_i(rho, L)`: probability that `s` of `i` active STAs transmit
/// successfully, mixing `T^s_g(L)` over the binomial access count.
pub fn success_count_prob(s: usize, i: usize, rho: f64, l: usize) -> Result<f64> {
    if s > i.min(l) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for g in s..=i {
        let c = access_count_prob(g, i, rho)?;
        if c > 0.0 {
            total += c * singleton_alloc_prob(s, g, l)?;
        }
    }
    Ok(total)
}
