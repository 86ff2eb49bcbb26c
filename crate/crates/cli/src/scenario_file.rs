//! On-disk scenario format: a flat JSON document with one key per scalar
//! parameter plus the class list. All durations are integer microseconds.
//!
//! ```json
//! {
//!   "cw_min": 15, "cw_max": 1023, "retry_limit_R": 7,
//!   "slot_sigma": 9, "ack_timeout": 43, "difs": 34,
//!   "classes": [
//!     { "count_n": 1, "airtime_X": 326,  "payload_P": 12000 },
//!     { "count_n": 1, "airtime_X": 2158, "payload_P": 12000 }
//!   ],
//!   "on_F": 40000, "off_T": 40000, "phase": 0,
//!   "txop_limit": 0
//! }
//! ```

use coex_core::scenario::{
    default_scenario, ClassSpec, DcfParams, InterferencePattern, ScenarioConfig, TxopPolicy,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub cw_min: u32,
    pub cw_max: u32,
    #[serde(rename = "retry_limit_R")]
    pub retry_limit: u32,
    /// Slot duration, microseconds.
    pub slot_sigma: u64,
    #[serde(default = "default_ack_timeout")]
    pub ack_timeout: u64,
    #[serde(default = "default_difs")]
    pub difs: u64,
    pub classes: Vec<ClassEntry>,
    #[serde(rename = "on_F")]
    pub on: u64,
    #[serde(rename = "off_T")]
    pub off: u64,
    #[serde(default)]
    pub phase: u64,
    #[serde(default)]
    pub txop_limit: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    #[serde(rename = "count_n")]
    pub count: u32,
    #[serde(rename = "airtime_X")]
    pub airtime: u64,
    #[serde(rename = "payload_P")]
    pub payload: u64,
}

fn default_ack_timeout() -> u64 {
    default_scenario().dcf.ack_timeout_us
}

fn default_difs() -> u64 {
    default_scenario().dcf.difs_us
}

impl ScenarioFile {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        ScenarioFile {
            cw_min: cfg.dcf.cw_min,
            cw_max: cfg.dcf.cw_max,
            retry_limit: cfg.dcf.retry_limit,
            slot_sigma: cfg.dcf.slot_us,
            ack_timeout: cfg.dcf.ack_timeout_us,
            difs: cfg.dcf.difs_us,
            classes: cfg
                .classes
                .iter()
                .map(|c| ClassEntry {
                    count: c.count,
                    airtime: c.airtime_us,
                    payload: c.payload_bits,
                })
                .collect(),
            on: cfg.interference.on_us,
            off: cfg.interference.off_us,
            phase: cfg.interference.phase_us,
            txop_limit: cfg.txop.limit_us,
        }
    }

    pub fn into_config(self) -> ScenarioConfig {
        ScenarioConfig {
            dcf: DcfParams {
                cw_min: self.cw_min,
                cw_max: self.cw_max,
                retry_limit: self.retry_limit,
                slot_us: self.slot_sigma,
                ack_timeout_us: self.ack_timeout,
                difs_us: self.difs,
            },
            classes: self
                .classes
                .into_iter()
                .map(|c| ClassSpec {
                    count: c.count,
                    airtime_us: c.airtime,
                    payload_bits: c.payload,
                })
                .collect(),
            interference: InterferencePattern {
                on_us: self.on,
                off_us: self.off,
                phase_us: self.phase,
            },
            txop: TxopPolicy {
                limit_us: self.txop_limit,
            },
        }
    }
}
