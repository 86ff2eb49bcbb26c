//! Saturation-throughput analysis of heterogeneous 802.11 DCF stations that
//! share a channel with a periodic duty-cycled interferer (ON/OFF airtime
//! such as LTE-U CSAT bursts).
//!
//! The crate has four parts:
//!
//! * [`scenario`] — configuration types, validation, and the canonical
//!   default setup (two station classes, 1500-byte frames at 54 and 6 Mb/s,
//!   a 50% duty cycle with 40 ms ON/OFF periods).
//! * [`model`] — a two-class fixed-point model: per-class collision
//!   probability with a deterministic end-of-OFF collision window, the
//!   backoff-derived access probability, expected slot duration, per-class
//!   throughput, and the TXOP-burst variant.
//! * [`sim`] — a deterministic slot-level Monte-Carlo simulator of N
//!   saturated stations with heterogeneous frame airtimes, instrumented
//!   with per-offset attempt/collision histograms.
//! * [`harness`] — sweep execution (station count, OFF-period length),
//!   confidence intervals, model-vs-simulation error reports, and CSV
//!   emission.
//!
//! All durations are integer microseconds throughout.

pub mod harness;
pub mod model;
pub mod scenario;
pub mod sim;

pub use harness::{
    run_sweep, txop_comparison, validate_model, HarnessError, RunDuration, SweepResult, SweepRow,
    SweepSpec, SweepVariable, ValidationReport, ValidationSpec,
};
pub use model::{
    cw_at_stage, solve_fixed_point, tau_of_p, throughput, throughput_txop, FixedPointSolution,
    ModelError, ThroughputReport, TxopThroughputReport,
};
pub use scenario::{
    default_scenario, validate, ClassSpec, DcfParams, InterferencePattern, ScenarioConfig,
    ScenarioError, TxopPolicy, ValidatedScenario,
};
pub use sim::{
    default_sim_time_us, overlaps_interference, simulate, simulate_traced, SimError, SimReport,
    TraceEvent, TraceKind,
};
