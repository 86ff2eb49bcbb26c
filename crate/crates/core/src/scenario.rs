//! Scenario configuration: station classes, DCF parameters, the periodic
//! interference pattern, and validation.
//!
//! A [`ScenarioConfig`] is a plain description; [`validate`] checks every
//! invariant and produces a [`ValidatedScenario`] with the classes in
//! canonical order (ascending airtime). Everything downstream (model,
//! simulator, harness) consumes only validated scenarios, so invariants are
//! checked exactly once. Validated scenarios are immutable and safe to share
//! across worker threads.

use thiserror::Error;

/// DCF backoff and timing parameters. Durations are microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DcfParams {
    /// Contention window at backoff stage 0, in slots. `cw_min + 1` must be
    /// a power of two.
    pub cw_min: u32,
    /// Contention window cap, in slots.
    pub cw_max: u32,
    /// Maximum number of retransmissions of a frame; the frame is dropped
    /// after a failure at the last stage.
    pub retry_limit: u32,
    /// Idle slot duration (sigma).
    pub slot_us: u64,
    /// How long a transmitter waits for the acknowledgement of a frame
    /// before treating it as lost.
    pub ack_timeout_us: u64,
    /// Idle time observed after a busy channel before backoff resumes.
    pub difs_us: u64,
}

/// One class of saturated stations.
///
/// `airtime_us` is the channel occupancy of one complete successful frame
/// exchange (data, SIFS, ACK, DIFS, preambles); the simulator treats it as
/// an atomic busy interval. For reference, a 1500-byte frame occupies about
/// 326 us at 54 Mb/s and 2158 us at 6 Mb/s including the full exchange
/// overhead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassSpec {
    /// Number of stations in the class.
    pub count: u32,
    /// Airtime of one successful frame exchange.
    pub airtime_us: u64,
    /// Payload bits delivered by one frame.
    pub payload_bits: u64,
}

/// Periodic ON/OFF interference: each cycle is `off_us` of free channel
/// followed by `on_us` of interferer airtime. `phase_us` shifts the whole
/// pattern right, so the first ON interval starts at `phase_us + off_us`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterferencePattern {
    /// ON (interferer transmitting) duration per cycle.
    pub on_us: u64,
    /// OFF (channel free) duration per cycle.
    pub off_us: u64,
    /// Right shift of the pattern; 0 starts a cycle at t = 0.
    pub phase_us: u64,
}

impl InterferencePattern {
    /// Full cycle length `on + off`.
    pub fn cycle_us(&self) -> u64 {
        self.on_us + self.off_us
    }

    /// Fraction of time the interferer is active.
    pub fn duty_cycle(&self) -> f64 {
        if self.cycle_us() == 0 {
            return 0.0;
        }
        self.on_us as f64 / self.cycle_us() as f64
    }

    /// True when the interferer transmits at all.
    pub fn is_active(&self) -> bool {
        self.on_us > 0
    }
}

/// TXOP burst policy. `limit_us == 0` disables TXOP; otherwise a station
/// winning the channel sends `floor(limit_us / airtime_us)` back-to-back
/// frames, each separately acknowledged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxopPolicy {
    pub limit_us: u64,
}

impl TxopPolicy {
    pub fn disabled() -> Self {
        TxopPolicy { limit_us: 0 }
    }

    pub fn enabled(&self) -> bool {
        self.limit_us > 0
    }

    /// Whole frames of the given airtime that fit in one burst.
    pub fn frames_per_grant(&self, airtime_us: u64) -> u32 {
        if !self.enabled() {
            return 1;
        }
        (self.limit_us / airtime_us) as u32
    }
}

/// Complete experiment description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub dcf: DcfParams,
    pub classes: Vec<ClassSpec>,
    pub interference: InterferencePattern,
    pub txop: TxopPolicy,
}

/// Validation failure; the field name follows the configuration structure
/// (`dcf.cw_min`, `interference.off_T`, ...).
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error(
        "class {class_index} airtime {airtime_us} us does not fit in the {off_us} us OFF period"
    )]
    XExceedsT {
        class_index: usize,
        airtime_us: u64,
        off_us: u64,
    },
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// A scenario whose invariants have been checked and whose classes are in
/// canonical order (ascending airtime). Construct via [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedScenario {
    cfg: ScenarioConfig,
}

impl ValidatedScenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn into_config(self) -> ScenarioConfig {
        self.cfg
    }

    pub fn dcf(&self) -> &DcfParams {
        &self.cfg.dcf
    }

    pub fn classes(&self) -> &[ClassSpec] {
        &self.cfg.classes
    }

    pub fn interference(&self) -> &InterferencePattern {
        &self.cfg.interference
    }

    pub fn txop(&self) -> &TxopPolicy {
        &self.cfg.txop
    }

    pub fn total_stations(&self) -> u32 {
        self.cfg.classes.iter().map(|c| c.count).sum()
    }

    /// The two classes of the analytic model, or `None` when the scenario
    /// has a different class count (the simulator accepts any).
    pub fn two_classes(&self) -> Option<[&ClassSpec; 2]> {
        match self.cfg.classes.as_slice() {
            [a, b] => Some([a, b]),
            _ => None,
        }
    }
}

/// Check every invariant and canonicalize the class order.
///
/// Idempotent: validating an already-validated configuration returns an
/// identical scenario.
pub fn validate(mut config: ScenarioConfig) -> Result<ValidatedScenario, ScenarioError> {
    let dcf = &config.dcf;
    if dcf.cw_min < 1 {
        return Err(invalid("dcf.cw_min", "must be at least 1"));
    }
    if !(u64::from(dcf.cw_min) + 1).is_power_of_two() {
        return Err(invalid("dcf.cw_min", "cw_min + 1 must be a power of two"));
    }
    if dcf.cw_max < dcf.cw_min {
        return Err(invalid("dcf.cw_max", "must be >= cw_min"));
    }
    if dcf.slot_us == 0 {
        return Err(invalid("dcf.slot_sigma", "must be positive"));
    }

    if config.classes.is_empty() {
        return Err(invalid("classes", "at least one station class is required"));
    }
    for (i, class) in config.classes.iter().enumerate() {
        if class.airtime_us == 0 {
            return Err(invalid(&format!("classes.{i}.airtime_X"), "must be positive"));
        }
        if class.payload_bits == 0 {
            return Err(invalid(&format!("classes.{i}.payload_P"), "must be positive"));
        }
    }

    let pattern = &config.interference;
    if pattern.off_us == 0 {
        return Err(invalid("interference.off_T", "must be positive"));
    }

    // A frame longer than the OFF period can never be delivered; fail loudly
    // instead of simulating zero throughput.
    for (i, class) in config.classes.iter().enumerate() {
        if class.airtime_us >= pattern.off_us {
            return Err(ScenarioError::XExceedsT {
                class_index: i,
                airtime_us: class.airtime_us,
                off_us: pattern.off_us,
            });
        }
    }

    if config.txop.enabled() {
        if config.txop.limit_us > pattern.off_us {
            return Err(invalid(
                "txop.limit",
                "TXOP limit must not exceed the OFF period",
            ));
        }
        for (i, class) in config.classes.iter().enumerate() {
            if config.txop.limit_us < class.airtime_us {
                return Err(invalid(
                    "txop.limit",
                    format!("smaller than the airtime of class {i}; no frame would fit in a burst"),
                ));
            }
        }
    }

    // Canonical order: ascending airtime, with the remaining fields as
    // tie-breakers so that validation is a pure function of the multiset.
    config
        .classes
        .sort_by_key(|c| (c.airtime_us, c.payload_bits, c.count));

    Ok(ValidatedScenario { cfg: config })
}

/// The canonical default configuration: two saturated stations, 1500-byte
/// frames at 54 Mb/s (326 us exchanges) and 6 Mb/s (2158 us exchanges),
/// CW 15/1023, retry limit 7, 9 us slots, and a 50% duty-cycle interferer
/// with 40 ms ON and OFF periods. TXOP is disabled.
pub fn default_scenario() -> ScenarioConfig {
    ScenarioConfig {
        dcf: DcfParams {
            cw_min: 15,
            cw_max: 1023,
            retry_limit: 7,
            slot_us: 9,
            ack_timeout_us: 43,
            difs_us: 34,
        },
        classes: vec![
            ClassSpec {
                count: 1,
                airtime_us: 326,
                payload_bits: 12_000,
            },
            ClassSpec {
                count: 1,
                airtime_us: 2_158,
                payload_bits: 12_000,
            },
        ],
        interference: InterferencePattern {
            on_us: 40_000,
            off_us: 40_000,
            phase_us: 0,
        },
        txop: TxopPolicy::disabled(),
    }
}
