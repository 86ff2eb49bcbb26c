//! Slot-level Monte-Carlo simulation of saturated DCF stations under a
//! periodic ON/OFF interferer.
//!
//! The timeline is integer microseconds and every run is deterministic for
//! a given (scenario, seed): stations draw backoffs from per-station
//! counter-based RNG streams, and contention is resolved round by round on
//! a common slot grid.
//!
//! One contention round works as follows. After the channel becomes
//! available, stations wait out any required gap (DIFS after an interferer
//! burst; nothing after a success, whose airtime already contains the
//! trailing DIFS) and then count down their backoff in common slot
//! boundaries. The earliest expiring station(s) transmit; simultaneous
//! expiries collide. After a failed transmission every station observes an
//! extended gap covering the missing acknowledgement: a collider resumes
//! once its own ACK timeout (measured from the end of its own frame)
//! expires, and a bystander observes the corresponding EIFS from the end of
//! the busy period. A collider with a short frame therefore rejoins the
//! grid ahead of everyone else after colliding with a longer frame — the
//! recovery asymmetry that penalizes slow stations — while stations with
//! equal airtimes stay aligned. A transmission may start before an
//! interferer burst and extend into it — that transmission is corrupted —
//! but never starts while the interferer is active (perfect sensing), and
//! frozen backoff counters resume after the burst ends.

use crate::model::cw_at_stage;
use crate::scenario::{DcfParams, InterferencePattern, ValidatedScenario};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// RNG recorded in reports: ChaCha8 with one stream per station.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("simulation duration must be positive")]
    InvalidDuration,
    #[error("scenario contains no stations")]
    NoStations,
}

/// Recommended simulated time for one run: 500 interference cycles.
pub fn default_sim_time_us(pattern: &InterferencePattern) -> u64 {
    500 * pattern.cycle_us()
}

/// True iff `[t_start, t_start + airtime)` intersects an interferer ON
/// interval. The pattern repeats in both directions of the time axis.
pub fn overlaps_interference(
    t_start_us: u64,
    airtime_us: u64,
    pattern: &InterferencePattern,
) -> bool {
    debug_assert!(airtime_us > 0);
    if !pattern.is_active() {
        return false;
    }
    let cycle = i128::from(pattern.cycle_us());
    let pos = (i128::from(t_start_us) - i128::from(pattern.phase_us)).rem_euclid(cycle) as u64;
    pos >= pattern.off_us || pos + airtime_us > pattern.off_us
}

/// Uniform backoff draw on `[0, CW_stage]`.
pub fn draw_backoff<R: Rng>(stage: u32, dcf: &DcfParams, rng: &mut R) -> u32 {
    rng.random_range(0..=cw_at_stage(stage, dcf))
}

/// Per-station counters. `attempts` counts channel accesses (a TXOP burst
/// is one access) and always equals
/// `successes + wifi_collisions + lte_collisions`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StationStats {
    pub attempts: u64,
    pub successes: u64,
    pub wifi_collisions: u64,
    pub lte_collisions: u64,
    pub drops: u64,
    pub delivered_bits: u64,
    /// Idle slots in which the station decremented its backoff counter.
    pub counted_slots: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StationReport {
    pub class_index: usize,
    pub stats: StationStats,
}

/// Aggregated counters for one station class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassReport {
    pub station_count: u32,
    pub delivered_bits: u64,
    pub throughput_bps: f64,
    pub attempts: u64,
    pub successes: u64,
    pub wifi_collisions: u64,
    pub lte_collisions: u64,
    pub drops: u64,
    /// Empirical conditional collision probability, collisions / attempts.
    pub mean_collision_prob: Option<f64>,
    /// Accesses started in the final `X_i` of an OFF period, where every
    /// transmission is cut off by the next burst.
    pub dead_zone_attempts: u64,
    pub dead_zone_collisions: u64,
}

/// Attempt/collision counts for one slot-wide offset bin within the OFF
/// period.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OffsetBin {
    pub attempts: u64,
    pub collisions: u64,
}

/// Per-class attempt/collision counts binned by the offset of the access
/// within the OFF period, one bin per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetHistogram {
    pub bin_width_us: u64,
    pub off_period_us: u64,
    pub per_class: Vec<Vec<OffsetBin>>,
}

/// One rebinned histogram cell; `probability` is undefined where no
/// attempt was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityBin {
    pub start_us: u64,
    pub attempts: u64,
    pub collisions: u64,
    pub probability: Option<f64>,
}

/// Exact partition of the simulated time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TimeAccounting {
    pub idle_us: u64,
    pub busy_us: u64,
    pub on_us: u64,
}

/// Everything measured by one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub seed: u64,
    pub rng_algorithm: &'static str,
    /// Actual simulated time; runs end on an event boundary at or after the
    /// requested duration, and all rates are computed over this value.
    pub sim_time_us: u64,
    pub per_class: Vec<ClassReport>,
    pub per_station: Vec<StationReport>,
    pub offset_histogram: OffsetHistogram,
    pub time: TimeAccounting,
}

impl SimReport {
    pub fn total_throughput_bps(&self) -> f64 {
        self.per_class.iter().map(|c| c.throughput_bps).sum()
    }

    /// Rebin the per-slot offset counts into `bins` equal divisions of the
    /// OFF period and compute the conditional collision probability per bin.
    pub fn binned_collision_probability(&self, bins: usize) -> Vec<Vec<ProbabilityBin>> {
        assert!(bins > 0);
        let off = self.offset_histogram.off_period_us;
        let width = self.offset_histogram.bin_width_us;
        self.offset_histogram
            .per_class
            .iter()
            .map(|raw| {
                let mut out: Vec<ProbabilityBin> = (0..bins)
                    .map(|j| ProbabilityBin {
                        start_us: (j as u128 * off as u128 / bins as u128) as u64,
                        attempts: 0,
                        collisions: 0,
                        probability: None,
                    })
                    .collect();
                for (b, cell) in raw.iter().enumerate() {
                    let start = b as u64 * width;
                    let j = ((start as u128 * bins as u128) / off as u128) as usize;
                    let j = j.min(bins - 1);
                    out[j].attempts += cell.attempts;
                    out[j].collisions += cell.collisions;
                }
                for cell in &mut out {
                    if cell.attempts > 0 {
                        cell.probability = Some(cell.collisions as f64 / cell.attempts as f64);
                    }
                }
                out
            })
            .collect()
    }
}

/// Channel event kinds for the optional trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Idle,
    Success,
    WifiCollision,
    LteCollision,
    OnPeriod,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::Idle => "idle",
            TraceKind::Success => "success",
            TraceKind::WifiCollision => "wifi_collision",
            TraceKind::LteCollision => "lte_collision",
            TraceKind::OnPeriod => "on_period",
        }
    }
}

/// One channel event: an idle stretch, a (possibly colliding) transmission,
/// or an interferer burst.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub t_start_us: u64,
    pub duration_us: u64,
    pub kind: TraceKind,
    pub stations: Vec<usize>,
}

/// Run one simulation. Deterministic for a given (scenario, seed).
pub fn simulate(
    scenario: &ValidatedScenario,
    seed: u64,
    sim_time_us: u64,
) -> Result<SimReport, SimError> {
    let mut engine = Engine::new(scenario, seed, sim_time_us, false)?;
    engine.run();
    Ok(engine.into_report().0)
}

/// Like [`simulate`], also returning the channel event trace.
pub fn simulate_traced(
    scenario: &ValidatedScenario,
    seed: u64,
    sim_time_us: u64,
) -> Result<(SimReport, Vec<TraceEvent>), SimError> {
    let mut engine = Engine::new(scenario, seed, sim_time_us, true)?;
    engine.run();
    let (report, trace) = engine.into_report();
    Ok((report, trace.unwrap_or_default()))
}

struct Station {
    class_index: usize,
    backoff: u32,
    stage: u32,
    /// Earliest instant the station may resume counting down (its ACK
    /// timeout after a failed transmission; the end of its own success).
    ready_at_us: u64,
    rng: ChaCha8Rng,
    stats: StationStats,
}

enum ChannelPhase {
    /// Inside an OFF period; the next burst starts at `on_start`
    /// (`u64::MAX` when the interferer is disabled).
    Off { on_start_us: u64 },
    /// Inside an ON burst ending at `on_end`.
    On { on_end_us: u64 },
}

struct Engine<'a> {
    scenario: &'a ValidatedScenario,
    dcf: DcfParams,
    pattern: InterferencePattern,
    /// Frames per channel access grant, per class (1 when TXOP is off).
    frames_per_grant: Vec<u32>,
    stations: Vec<Station>,
    now_us: u64,
    /// Idle gap required before the first countable slot of the next round.
    post_gap_us: u64,
    sim_end_us: u64,
    seed: u64,
    histogram: OffsetHistogram,
    dead_zone_attempts: Vec<u64>,
    dead_zone_collisions: Vec<u64>,
    acc: TimeAccounting,
    trace: Option<Vec<TraceEvent>>,
    // round scratch space
    first_slot: Vec<u64>,
    winners: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(
        scenario: &'a ValidatedScenario,
        seed: u64,
        sim_time_us: u64,
        traced: bool,
    ) -> Result<Self, SimError> {
        if sim_time_us == 0 {
            return Err(SimError::InvalidDuration);
        }
        if scenario.total_stations() == 0 {
            return Err(SimError::NoStations);
        }
        let dcf = *scenario.dcf();
        let pattern = *scenario.interference();
        let frames_per_grant = scenario
            .classes()
            .iter()
            .map(|c| scenario.txop().frames_per_grant(c.airtime_us))
            .collect();

        let mut stations = Vec::with_capacity(scenario.total_stations() as usize);
        for (class_index, class) in scenario.classes().iter().enumerate() {
            for _ in 0..class.count {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stations.len() as u64);
                let backoff = draw_backoff(0, &dcf, &mut rng);
                stations.push(Station {
                    class_index,
                    backoff,
                    stage: 0,
                    ready_at_us: 0,
                    rng,
                    stats: StationStats::default(),
                });
            }
        }

        let bins = pattern.off_us.div_ceil(dcf.slot_us) as usize;
        let class_count = scenario.classes().len();
        let station_count = stations.len();
        Ok(Engine {
            scenario,
            dcf,
            pattern,
            frames_per_grant,
            stations,
            now_us: 0,
            post_gap_us: dcf.difs_us,
            sim_end_us: sim_time_us,
            seed,
            histogram: OffsetHistogram {
                bin_width_us: dcf.slot_us,
                off_period_us: pattern.off_us,
                per_class: vec![vec![OffsetBin::default(); bins]; class_count],
            },
            dead_zone_attempts: vec![0; class_count],
            dead_zone_collisions: vec![0; class_count],
            acc: TimeAccounting::default(),
            trace: if traced { Some(Vec::new()) } else { None },
            first_slot: vec![0; station_count],
            winners: Vec::with_capacity(station_count),
        })
    }

    fn run(&mut self) {
        while self.now_us < self.sim_end_us {
            self.step();
        }
    }

    /// Position in the ON/OFF cycle, OFF occupying `[0, off)`.
    fn cycle_offset(&self, t: u64) -> u64 {
        let cycle = i128::from(self.pattern.cycle_us());
        (i128::from(t) - i128::from(self.pattern.phase_us)).rem_euclid(cycle) as u64
    }

    fn phase_at(&self, t: u64) -> ChannelPhase {
        if !self.pattern.is_active() {
            return ChannelPhase::Off {
                on_start_us: u64::MAX,
            };
        }
        let pos = self.cycle_offset(t);
        if pos < self.pattern.off_us {
            ChannelPhase::Off {
                on_start_us: t + (self.pattern.off_us - pos),
            }
        } else {
            ChannelPhase::On {
                on_end_us: t + (self.pattern.cycle_us() - pos),
            }
        }
    }

    fn push_trace(&mut self, kind: TraceKind, start: u64, end: u64, stations: &[usize]) {
        if end <= start {
            return;
        }
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent {
                t_start_us: start,
                duration_us: end - start,
                kind,
                stations: stations.to_vec(),
            });
        }
    }

    fn step(&mut self) {
        match self.phase_at(self.now_us) {
            ChannelPhase::On { on_end_us } => {
                // Only reachable when the pattern phase places the start of
                // the run inside a burst.
                self.push_trace(TraceKind::OnPeriod, self.now_us, on_end_us, &[]);
                self.acc.on_us += on_end_us - self.now_us;
                self.now_us = on_end_us;
                self.post_gap_us = self.dcf.difs_us;
            }
            ChannelPhase::Off { on_start_us } => self.contention_round(on_start_us),
        }
    }

    /// Advance through one contention round: idle countdown, then either a
    /// transmission (success or collision) or a freeze when the burst
    /// arrives before any backoff expires.
    fn contention_round(&mut self, on_start: u64) {
        let sigma = self.dcf.slot_us;
        let grid0 = self.now_us + self.post_gap_us;

        // First countable slot index per station, delayed past any pending
        // ACK timeout; expiry slot = first slot + remaining backoff.
        let mut best = u64::MAX;
        self.winners.clear();
        for (i, st) in self.stations.iter().enumerate() {
            let first = if st.ready_at_us > grid0 {
                (st.ready_at_us - grid0).div_ceil(sigma)
            } else {
                0
            };
            self.first_slot[i] = first;
            let expiry = first + u64::from(st.backoff);
            if expiry < best {
                best = expiry;
                self.winners.clear();
                self.winners.push(i);
            } else if expiry == best {
                self.winners.push(i);
            }
        }
        let t_tx = grid0 + best * sigma;

        if t_tx >= on_start {
            // The burst arrives before any counter expires: count the slots
            // that completed, freeze, and resume after the burst.
            let full_slots = if grid0 < on_start {
                (on_start - grid0) / sigma
            } else {
                0
            };
            for (i, st) in self.stations.iter_mut().enumerate() {
                let counted =
                    u64::from(st.backoff).min(full_slots.saturating_sub(self.first_slot[i]));
                st.backoff -= counted as u32;
                st.stats.counted_slots += counted;
            }
            let on_end = on_start + self.pattern.on_us;
            self.push_trace(TraceKind::Idle, self.now_us, on_start, &[]);
            self.push_trace(TraceKind::OnPeriod, on_start, on_end, &[]);
            self.acc.idle_us += on_start - self.now_us;
            self.acc.on_us += self.pattern.on_us;
            self.now_us = on_end;
            self.post_gap_us = self.dcf.difs_us;
            return;
        }

        // Idle slots elapse for everyone up to the transmission instant.
        for (i, st) in self.stations.iter_mut().enumerate() {
            if self.winners.contains(&i) {
                st.stats.counted_slots += u64::from(st.backoff);
                st.backoff = 0;
            } else {
                let counted = u64::from(st.backoff).min(best.saturating_sub(self.first_slot[i]));
                st.backoff -= counted as u32;
                st.stats.counted_slots += counted;
            }
        }

        let offset = self.cycle_offset(t_tx);
        debug_assert!(offset < self.pattern.off_us);
        let bin = (offset / sigma) as usize;
        let multi = self.winners.len() >= 2;

        // Transmit: a lone winner sends its whole grant; colliding bursts
        // abort after their first (unacknowledged) frame.
        let winners = std::mem::take(&mut self.winners);
        let mut busy_end = t_tx;
        let mut round_overlap = false;
        let mut outcomes = Vec::with_capacity(winners.len());
        for &w in &winners {
            let class_index = self.stations[w].class_index;
            let class = &self.scenario.classes()[class_index];
            let frames = if multi {
                1
            } else {
                self.frames_per_grant[class_index]
            };
            let mut own_end = t_tx;
            let mut delivered = 0u32;
            let mut overlapped = false;
            for f in 0..frames {
                let frame_end = t_tx + u64::from(f + 1) * class.airtime_us;
                own_end = frame_end;
                if frame_end > on_start {
                    overlapped = true;
                    break;
                }
                delivered += 1;
            }
            if multi {
                delivered = 0;
            }
            busy_end = busy_end.max(own_end);
            round_overlap |= overlapped;
            outcomes.push((w, own_end, delivered));
        }

        for &(w, own_end, delivered) in &outcomes {
            let class_index = self.stations[w].class_index;
            let class = &self.scenario.classes()[class_index];
            let in_dead_zone = self.pattern.is_active()
                && offset > self.pattern.off_us - class.airtime_us;

            let st = &mut self.stations[w];
            st.stats.attempts += 1;
            self.histogram.per_class[class_index][bin].attempts += 1;
            if in_dead_zone {
                self.dead_zone_attempts[class_index] += 1;
            }

            if round_overlap || multi {
                if round_overlap {
                    st.stats.lte_collisions += 1;
                } else {
                    st.stats.wifi_collisions += 1;
                }
                st.stats.delivered_bits += u64::from(delivered) * class.payload_bits;
                if st.stage == self.dcf.retry_limit {
                    st.stats.drops += 1;
                    st.stage = 0;
                } else {
                    st.stage += 1;
                }
                st.ready_at_us = own_end + self.dcf.ack_timeout_us;
                self.histogram.per_class[class_index][bin].collisions += 1;
                if in_dead_zone {
                    self.dead_zone_collisions[class_index] += 1;
                }
            } else {
                st.stats.successes += 1;
                st.stats.delivered_bits += u64::from(delivered) * class.payload_bits;
                st.stage = 0;
                st.ready_at_us = own_end;
            }
            let stage = self.stations[w].stage;
            let st = &mut self.stations[w];
            st.backoff = draw_backoff(stage, &self.dcf, &mut st.rng);
        }

        if round_overlap || multi {
            // Bystanders hear a corrupted exchange and hold off for the
            // missing-ACK window (EIFS), which keeps them aligned with the
            // colliders' own timeouts when airtimes are equal.
            for (i, st) in self.stations.iter_mut().enumerate() {
                if winners.binary_search(&i).is_err() {
                    st.ready_at_us = st
                        .ready_at_us
                        .max(busy_end + self.dcf.ack_timeout_us);
                }
            }
        }

        self.push_trace(TraceKind::Idle, self.now_us, t_tx, &[]);
        self.acc.idle_us += t_tx - self.now_us;
        if round_overlap {
            let on_end = on_start + self.pattern.on_us;
            self.push_trace(TraceKind::LteCollision, t_tx, busy_end, &winners);
            self.push_trace(TraceKind::OnPeriod, on_start, on_end, &[]);
            self.acc.busy_us += (on_start - t_tx) + busy_end.saturating_sub(on_end);
            self.acc.on_us += self.pattern.on_us;
            self.now_us = busy_end.max(on_end);
            self.post_gap_us = self.dcf.difs_us;
        } else {
            let kind = if multi {
                TraceKind::WifiCollision
            } else {
                TraceKind::Success
            };
            self.push_trace(kind, t_tx, busy_end, &winners);
            self.acc.busy_us += busy_end - t_tx;
            self.now_us = busy_end;
            // A successful exchange already ends with its DIFS; collisions
            // require a fresh one before backoff resumes.
            self.post_gap_us = if multi { self.dcf.difs_us } else { 0 };
        }
        self.winners = winners;
    }

    fn into_report(self) -> (SimReport, Option<Vec<TraceEvent>>) {
        let sim_time = self.now_us;
        let mut per_class: Vec<ClassReport> = self
            .scenario
            .classes()
            .iter()
            .enumerate()
            .map(|(i, c)| ClassReport {
                station_count: c.count,
                delivered_bits: 0,
                throughput_bps: 0.0,
                attempts: 0,
                successes: 0,
                wifi_collisions: 0,
                lte_collisions: 0,
                drops: 0,
                mean_collision_prob: None,
                dead_zone_attempts: self.dead_zone_attempts[i],
                dead_zone_collisions: self.dead_zone_collisions[i],
            })
            .collect();
        let mut per_station = Vec::with_capacity(self.stations.len());
        for st in &self.stations {
            let report = &mut per_class[st.class_index];
            report.delivered_bits += st.stats.delivered_bits;
            report.attempts += st.stats.attempts;
            report.successes += st.stats.successes;
            report.wifi_collisions += st.stats.wifi_collisions;
            report.lte_collisions += st.stats.lte_collisions;
            report.drops += st.stats.drops;
            per_station.push(StationReport {
                class_index: st.class_index,
                stats: st.stats,
            });
        }
        for report in &mut per_class {
            report.throughput_bps = report.delivered_bits as f64 / sim_time as f64 * 1e6;
            if report.attempts > 0 {
                report.mean_collision_prob = Some(
                    (report.wifi_collisions + report.lte_collisions) as f64
                        / report.attempts as f64,
                );
            }
        }
        (
            SimReport {
                seed: self.seed,
                rng_algorithm: RNG_ALGORITHM,
                sim_time_us: sim_time,
                per_class,
                per_station,
                offset_histogram: self.histogram,
                time: self.acc,
            },
            self.trace,
        )
    }
}
