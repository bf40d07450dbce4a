//! Slot-level Monte Carlo simulation of the UORA protocol with per-STA AoI
//! tracking, plus round-robin and max-AoI centralized baselines.
//!
//! Replications run on independent, seed-derived RNG substreams
//! (ChaCha8, a counter-based generator pinned for bit-reproducibility) and
//! aggregate into an order-independent reduction, so results are identical
//! with and without the `parallel` feature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{build_ladder, BackoffLadder, NetworkConfig};
use crate::error::{Result, UoraError};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Channel access policy under simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Uora,
    RoundRobin,
    MaxAoi,
}

/// One simulation request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub network: NetworkConfig,
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub policy: Policy,
    pub replications: u32,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.slots == 0 {
            return Err(UoraError::InvalidConfig("slots must be positive".into()));
        }
        if self.warmup >= self.slots {
            return Err(UoraError::InvalidConfig(format!(
                "warmup ({}) must be below slots ({})",
                self.warmup, self.slots
            )));
        }
        if self.replications == 0 {
            return Err(UoraError::InvalidConfig(
                "replications must be positive".into(),
            ));
        }
        if (self.policy == Policy::RoundRobin || self.policy == Policy::MaxAoi)
            && self.network.n_rus > self.network.n_stas
        {
            return Err(UoraError::InvalidConfig(
                "centralized policies require L <= N".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregated empirical statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    /// Slot-and-STA average of the instantaneous AoI, post-warmup.
    pub mean_aoi_network: f64,
    pub mean_aoi_per_sta: Vec<f64>,
    /// successes / transmission attempts.
    pub empirical_q: f64,
    /// transmission attempts / active-STA slot count.
    pub empirical_rho: f64,
    /// Distribution of the active-STA count over measured slots.
    pub active_count_hist: Vec<f64>,
    pub successes: u64,
    pub collisions: u64,
    pub wasted_rus: u64,
    /// Half-width of the 95% confidence interval on the network mean AoI
    /// across replications.
    pub ci95_mean_aoi: f64,
}

/// Per-STA protocol state.
#[derive(Debug, Clone, Copy)]
pub struct StaState {
    pub has_packet: bool,
    pub packet_birth_slot: u64,
    pub obo_online: bool,
    pub backoff_level: u32,
    pub obo_count: u64,
    /// Instantaneous AoI at the AP for this STA.
    pub aoi: u64,
}

impl StaState {
    fn new() -> Self {
        StaState {
            has_packet: false,
            packet_birth_slot: 0,
            obo_online: false,
            backoff_level: 0,
            obo_count: 0,
            aoi: 1,
        }
    }
}

/// Events of one simulated slot, exposed for protocol-level assertions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotEvents {
    pub active: usize,
    pub attempts: usize,
    pub successes: usize,
    pub collided_transmissions: usize,
    pub collided_rus: usize,
    pub idle_rus: usize,
}

/// One replication's state machine.
pub struct Simulation {
    network: NetworkConfig,
    ladder: BackoffLadder,
    policy: Policy,
    rng: ChaCha8Rng,
    stas: Vec<StaState>,
    slot: u64,
    rr_cursor: usize,
    ru_picks: Vec<usize>,
    ru_counts: Vec<u32>,
}

impl Simulation {
    pub fn new(network: NetworkConfig, policy: Policy, rng: ChaCha8Rng) -> Result<Self> {
        let ladder = build_ladder(&network)?;
        let n = network.n_stas;
        let l = network.n_rus;
        Ok(Simulation {
            network,
            ladder,
            policy,
            rng,
            stas: vec![StaState::new(); n],
            slot: 0,
            rr_cursor: 0,
            ru_picks: vec![0; n],
            ru_counts: vec![0; l],
        })
    }

    pub fn stas(&self) -> &[StaState] {
        &self.stas
    }

    /// Runs one slot: arrivals, trigger-frame backoff processing,
    /// transmissions, acknowledgement, AoI update.
    pub fn step_slot(&mut self) -> SlotEvents {
        let t = self.slot;
        let lambda = self.network.arrival_rate;
        let l = self.network.n_rus;

        // (1) Bernoulli arrivals; a fresh update preempts the buffered one
        // without touching the OBO state.
        for sta in &mut self.stas {
            if lambda >= 1.0 || self.rng.gen_bool(lambda) {
                sta.has_packet = true;
                sta.packet_birth_slot = t;
            }
        }
        let active = self.stas.iter().filter(|s| s.has_packet).count();
        let mut events = SlotEvents {
            active,
            ..SlotEvents::default()
        };

        match self.policy {
            Policy::Uora => self.step_uora(&mut events),
            Policy::RoundRobin => {
                let scheduled = self.rr_cursor;
                self.rr_cursor = (self.rr_cursor + l) % self.network.n_stas;
                self.step_scheduled(&mut events, |n, l, _| {
                    (0..l).map(|k| (scheduled + k) % n).collect()
                });
            }
            Policy::MaxAoi => {
                self.step_scheduled(&mut events, |_, l, stas| schedule_max_aoi_indices(stas, l));
            }
        }
        self.slot += 1;
        events
    }

    fn step_uora(&mut self, events: &mut SlotEvents) {
        let t = self.slot;
        let l = self.network.n_rus;
        let m = self.network.max_backoff_level;

        // (2) TF processing: activate offline counters of packet holders,
        // then decrement every online counter by L (reset below L).
        for sta in &mut self.stas {
            if sta.has_packet && !sta.obo_online {
                sta.obo_online = true;
                sta.backoff_level = 0;
                sta.obo_count = self.rng.gen_range(0..self.ladder.w[0]);
            }
            if sta.obo_online {
                sta.obo_count = if sta.obo_count > l as u64 {
                    sta.obo_count - l as u64
                } else {
                    0
                };
            }
        }

        // (3) accessing STAs pick RUs uniformly
        self.ru_counts.iter_mut().for_each(|c| *c = 0);
        let mut transmitters: Vec<usize> = Vec::new();
        for (idx, sta) in self.stas.iter().enumerate() {
            if sta.obo_online && sta.obo_count == 0 {
                let ru = self.rng.gen_range(0..l);
                self.ru_picks[idx] = ru;
                self.ru_counts[ru] += 1;
                transmitters.push(idx);
            }
        }
        events.attempts = transmitters.len();

        // (4) M-BA: singleton RUs succeed; everyone else escalates
        for &idx in &transmitters {
            let sta = &mut self.stas[idx];
            if self.ru_counts[self.ru_picks[idx]] == 1 {
                events.successes += 1;
                sta.aoi = t - sta.packet_birth_slot + 1;
                sta.has_packet = false;
                sta.obo_online = false;
                sta.backoff_level = 0;
            } else {
                events.collided_transmissions += 1;
                sta.backoff_level = (sta.backoff_level + 1).min(m);
                sta.obo_count = self.rng.gen_range(0..self.ladder.w[sta.backoff_level as usize]);
                sta.aoi += 1;
            }
        }
        events.collided_rus = self.ru_counts.iter().filter(|&&c| c > 1).count();
        events.idle_rus = self.ru_counts.iter().filter(|&&c| c == 0).count();

        // (5) AoI of non-transmitting STAs ages by one
        for (idx, sta) in self.stas.iter_mut().enumerate() {
            if !transmitters.contains(&idx) {
                sta.aoi += 1;
            }
        }
    }

    fn step_scheduled<F>(&mut self, events: &mut SlotEvents, pick: F)
    where
        F: FnOnce(usize, usize, &[StaState]) -> Vec<usize>,
    {
        let t = self.slot;
        let l = self.network.n_rus;
        let scheduled = pick(self.network.n_stas, l, &self.stas);
        debug_assert_eq!(scheduled.len(), l);
        let mut served = vec![false; self.network.n_stas];
        for &idx in &scheduled {
            let sta = &mut self.stas[idx];
            if sta.has_packet {
                events.attempts += 1;
                events.successes += 1;
                sta.aoi = t - sta.packet_birth_slot + 1;
                sta.has_packet = false;
                served[idx] = true;
            } else {
                events.idle_rus += 1; // wasted dedicated RU
            }
        }
        for (idx, sta) in self.stas.iter_mut().enumerate() {
            if !served[idx] {
                sta.aoi += 1;
            }
        }
    }
}

/// Indices of the `l` stations with the largest instantaneous AoI, ties
/// broken by lowest index.
pub fn schedule_max_aoi_indices(stas: &[StaState], l: usize) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::with_capacity(l);
    for idx in 0..stas.len() {
        let aoi = stas[idx].aoi;
        if best.len() < l {
            best.push(idx);
            best.sort_by(|&a, &b| stas[b].aoi.cmp(&stas[a].aoi).then(a.cmp(&b)));
        } else if aoi > stas[best[l - 1]].aoi {
            best[l - 1] = idx;
            best.sort_by(|&a, &b| stas[b].aoi.cmp(&stas[a].aoi).then(a.cmp(&b)));
        }
    }
    best
}

/// Round-robin schedule starting at `cursor`.
pub fn schedule_round_robin(cursor: usize, n: usize, l: usize) -> Result<Vec<usize>> {
    if l > n {
        return Err(UoraError::InvalidArgument(format!(
            "schedule_round_robin: l = {l} exceeds n = {n}"
        )));
    }
    Ok((0..l).map(|k| (cursor + k) % n).collect())
}

#[derive(Debug, Clone)]
struct RepOutcome {
    aoi_sums: Vec<u64>,
    measured_slots: u64,
    active_hist: Vec<u64>,
    active_slots: u64,
    attempts: u64,
    successes: u64,
    collisions: u64,
    wasted_rus: u64,
}

fn rep_seed(seed: u64, replication: u32) -> u64 {
    // splitmix64 over (seed, replication) for independent substreams
    let mut z = seed ^ (replication as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_replication(sim: &SimConfig, replication: u32) -> Result<RepOutcome> {
    let rng = ChaCha8Rng::seed_from_u64(rep_seed(sim.seed, replication));
    let mut machine = Simulation::new(sim.network, sim.policy, rng)?;
    let n = sim.network.n_stas;
    let mut out = RepOutcome {
        aoi_sums: vec![0u64; n],
        measured_slots: 0,
        active_hist: vec![0u64; n + 1],
        active_slots: 0,
        attempts: 0,
        successes: 0,
        collisions: 0,
        wasted_rus: 0,
    };
    for t in 0..sim.slots {
        let measure = t >= sim.warmup;
        if measure {
            // sample Delta(t) before this slot's events rewrite it
            for (idx, sta) in machine.stas.iter().enumerate() {
                out.aoi_sums[idx] += sta.aoi;
            }
            out.measured_slots += 1;
        }
        let events = machine.step_slot();
        if measure {
            out.active_hist[events.active] += 1;
            out.active_slots += events.active as u64;
            out.attempts += events.attempts as u64;
            out.successes += events.successes as u64;
            out.collisions += events.collided_transmissions as u64;
            out.wasted_rus += events.idle_rus as u64;
        }
    }
    Ok(out)
}

/// Runs `replications` independent seeded replications and aggregates their
/// statistics. Bit-reproducible for a fixed `SimConfig`.
pub fn run_simulation(sim: &SimConfig) -> Result<SimStats> {
    sim.validate()?;
    let reps: Vec<u32> = (0..sim.replications).collect();
    #[cfg(feature = "parallel")]
    let outcomes: Vec<RepOutcome> = reps
        .par_iter()
        .map(|&r| run_replication(sim, r))
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<RepOutcome> = reps
        .iter()
        .map(|&r| run_replication(sim, r))
        .collect::<Result<_>>()?;

    let n = sim.network.n_stas;
    let rep_means: Vec<f64> = outcomes
        .iter()
        .map(|o| {
            let total: u64 = o.aoi_sums.iter().sum();
            total as f64 / (o.measured_slots as f64 * n as f64)
        })
        .collect();
    let mean = rep_means.iter().sum::<f64>() / rep_means.len() as f64;
    let ci95 = if rep_means.len() > 1 {
        let var = rep_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (rep_means.len() - 1) as f64;
        1.96 * (var / rep_means.len() as f64).sqrt()
    } else {
        0.0
    };

    let total_measured: u64 = outcomes.iter().map(|o| o.measured_slots).sum();
    let mut per_sta = vec![0.0f64; n];
    for o in &outcomes {
        for (idx, &s) in o.aoi_sums.iter().enumerate() {
            per_sta[idx] += s as f64;
        }
    }
    per_sta.iter_mut().for_each(|v| *v /= total_measured as f64);

    let mut hist = vec![0.0f64; n + 1];
    for o in &outcomes {
        for (idx, &c) in o.active_hist.iter().enumerate() {
            hist[idx] += c as f64;
        }
    }
    hist.iter_mut().for_each(|v| *v /= total_measured as f64);

    let attempts: u64 = outcomes.iter().map(|o| o.attempts).sum();
    let successes: u64 = outcomes.iter().map(|o| o.successes).sum();
    let collisions: u64 = outcomes.iter().map(|o| o.collisions).sum();
    let wasted: u64 = outcomes.iter().map(|o| o.wasted_rus).sum();
    let active_slots: u64 = outcomes.iter().map(|o| o.active_slots).sum();

    Ok(SimStats {
        mean_aoi_network: mean,
        mean_aoi_per_sta: per_sta,
        empirical_q: if attempts > 0 {
            successes as f64 / attempts as f64
        } else {
            0.0
        },
        empirical_rho: if active_slots > 0 {
            attempts as f64 / active_slots as f64
        } else {
            0.0
        },
        active_count_hist: hist,
        successes,
        collisions,
        wasted_rus: wasted,
        ci95_mean_aoi: ci95,
    })
}
