//! Two-class fixed-point model of saturated DCF under periodic interference.
//!
//! Each interferer burst is a regeneration point for the contention process,
//! so within one OFF period of length `T` a class with frame airtime `X`
//! sees two zones: `T - X` where only simultaneous accesses collide, and a
//! final window of length `X` where every transmission is cut off by the
//! next burst and the collision probability is 1. The per-class access
//! probability `tau` follows from the mean backoff over the retry stages,
//! and the two relations are solved jointly by damped fixed-point iteration.
//!
//! Station classes are indexed in canonical order: class 0 has the shorter
//! airtime.

use crate::scenario::{ClassSpec, DcfParams, ValidatedScenario};
use thiserror::Error;

/// Residual tolerance of the fixed-point solvers.
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// Iteration cap of the fixed-point solvers.
pub const MAX_ITERATIONS: usize = 100_000;
/// Damping factor: `tau <- (1 - a) tau + a f(g(tau))`. Undamped iteration
/// oscillates at high load.
const DAMPING: f64 = 0.5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("analytic model requires exactly two station classes, found {0}")]
    ClassCount(usize),
    #[error("analytic model requires at least one station in every class")]
    EmptyClass,
    #[error("TXOP throughput requires an enabled TXOP policy")]
    TxopDisabled,
}

/// Converged solution of the coupled two-class system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointSolution {
    /// Per-class channel access probability.
    pub tau: [f64; 2],
    /// Per-class conditional collision probability.
    pub p: [f64; 2],
    /// Expected contention slot duration, microseconds.
    pub expected_slot_us: f64,
    pub iterations: usize,
    /// Max over classes of `|tau - f(g(tau))|` at the returned point.
    pub residual: f64,
}

/// Per-class throughput prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    /// Payload throughput, bits per second.
    pub per_class_bps: [f64; 2],
    /// Fraction of total time spent in successful transmissions.
    pub per_class_airtime_fraction: [f64; 2],
    /// Average channel access grants per cycle available to one class,
    /// `(T - X_i) / E[slot]`. Real-valued: it is used as a mean count.
    pub grants: [f64; 2],
}

/// Throughput prediction under a uniform TXOP limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxopThroughputReport {
    /// Uniform access probability shared by all stations.
    pub tau: f64,
    /// Uniform conditional collision probability.
    pub p: f64,
    pub expected_slot_us: f64,
    /// Whole frames per burst, `floor(limit / X_i)`.
    pub frames_per_grant: [u32; 2],
    /// Mean frames delivered by the final pre-interference grant,
    /// `(k_i - 1) / 2`.
    pub final_grant_frames: [f64; 2],
    pub per_class_bps: [f64; 2],
    pub per_class_airtime_fraction: [f64; 2],
    /// Airtime fraction split into the two additive contributions: bursts
    /// granted in the interference-free zone, and the final partially
    /// delivered grant of each cycle.
    pub airtime_fraction_terms: [[f64; 2]; 2],
    pub iterations: usize,
    pub residual: f64,
}

/// Contention window at the given backoff stage:
/// `min(2^stage (cw_min + 1) - 1, cw_max)`. Stage 0 equals `cw_min`.
pub fn cw_at_stage(stage: u32, dcf: &DcfParams) -> u32 {
    let doubled = if stage >= 32 {
        u64::MAX
    } else {
        (u64::from(dcf.cw_min) + 1) << stage
    };
    doubled.saturating_sub(1).min(u64::from(dcf.cw_max)) as u32
}

/// Access probability of a saturated station as a function of its
/// conditional collision probability:
///
/// `tau = (1 + (1-p)/(1-p^(R+1)) * sum_j p^j CW_j / 2)^-1`
///
/// The prefactor equals `1 / sum_j p^j`, which keeps the expression finite
/// at `p = 1` (the analytic limit) without a special case.
pub fn tau_of_p(p: f64, dcf: &DcfParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let mut weighted_backoff = 0.0; // sum_j p^j CW_j / 2
    let mut attempt_mass = 0.0; // sum_j p^j
    let mut pj = 1.0;
    for stage in 0..=dcf.retry_limit {
        weighted_backoff += pj * f64::from(cw_at_stage(stage, dcf)) / 2.0;
        attempt_mass += pj;
        pj *= p;
    }
    1.0 / (1.0 + weighted_backoff / attempt_mass)
}

/// Conditional collision probability for one class:
///
/// `p = (T - X)/T * (1 - (1-tau_self)^(n_self-1) (1-tau_other)^(n_other)) + X/T`
///
/// The `X/T` term is the deterministic-collision window at the end of each
/// OFF period.
pub fn collision_prob(
    tau_self: f64,
    tau_other: f64,
    n_self: u32,
    n_other: u32,
    airtime_self_us: u64,
    off_us: u64,
) -> f64 {
    debug_assert!(n_self >= 1);
    debug_assert!(airtime_self_us <= off_us);
    let t = off_us as f64;
    let x = airtime_self_us as f64;
    let all_others_silent =
        (1.0 - tau_self).powi(n_self as i32 - 1) * (1.0 - tau_other).powi(n_other as i32);
    (t - x) / t * (1.0 - all_others_silent) + x / t
}

/// Expected contention slot duration. Classes must be in canonical order
/// (`airtime_us[0] <= airtime_us[1]`) so that any slot containing a class-1
/// transmission lasts `X_1`.
pub fn expected_slot_us(tau: [f64; 2], n: [u32; 2], airtime_us: [u64; 2], slot_us: u64) -> f64 {
    debug_assert!(airtime_us[0] <= airtime_us[1]);
    let silent = [
        (1.0 - tau[0]).powi(n[0] as i32),
        (1.0 - tau[1]).powi(n[1] as i32),
    ];
    slot_us as f64 * silent[0] * silent[1]
        + airtime_us[0] as f64 * (1.0 - silent[0]) * silent[1]
        + airtime_us[1] as f64 * (1.0 - silent[1])
}

/// Solve the coupled system `tau_i = f(p_i)`, `p_i = g(tau_i, tau_-i)` for
/// two classes given directly by population and airtime. Deterministic.
pub fn solve_two_class(
    dcf: &DcfParams,
    n: [u32; 2],
    airtime_us: [u64; 2],
    off_us: u64,
) -> Result<FixedPointSolution, ModelError> {
    if n[0] == 0 || n[1] == 0 {
        return Err(ModelError::EmptyClass);
    }

    let residual_of = |tau: [f64; 2]| -> ([f64; 2], [f64; 2], f64) {
        let p = [
            collision_prob(tau[0], tau[1], n[0], n[1], airtime_us[0], off_us),
            collision_prob(tau[1], tau[0], n[1], n[0], airtime_us[1], off_us),
        ];
        let next = [tau_of_p(p[0], dcf), tau_of_p(p[1], dcf)];
        let residual = (next[0] - tau[0]).abs().max((next[1] - tau[1]).abs());
        (next, p, residual)
    };

    // Start from the dead-zone-only collision probability of each class.
    let mut tau = [
        tau_of_p(airtime_us[0] as f64 / off_us as f64, dcf),
        tau_of_p(airtime_us[1] as f64 / off_us as f64, dcf),
    ];
    for iteration in 1..=MAX_ITERATIONS {
        let (next, p, residual) = residual_of(tau);
        if residual <= FIXED_POINT_TOL {
            // E[slot] needs the classes in canonical orientation; the value
            // itself does not depend on the label order.
            let expected_slot = if airtime_us[0] <= airtime_us[1] {
                expected_slot_us(tau, n, airtime_us, dcf.slot_us)
            } else {
                expected_slot_us(
                    [tau[1], tau[0]],
                    [n[1], n[0]],
                    [airtime_us[1], airtime_us[0]],
                    dcf.slot_us,
                )
            };
            return Ok(FixedPointSolution {
                tau,
                p,
                expected_slot_us: expected_slot,
                iterations: iteration,
                residual,
            });
        }
        tau = [
            (1.0 - DAMPING) * tau[0] + DAMPING * next[0],
            (1.0 - DAMPING) * tau[1] + DAMPING * next[1],
        ];
    }
    let (_, _, residual) = residual_of(tau);
    Err(ModelError::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn two_class_view(scenario: &ValidatedScenario) -> Result<[&ClassSpec; 2], ModelError> {
    scenario
        .two_classes()
        .ok_or_else(|| ModelError::ClassCount(scenario.classes().len()))
}

/// Solve the fixed point for a validated two-class scenario.
pub fn solve_fixed_point(scenario: &ValidatedScenario) -> Result<FixedPointSolution, ModelError> {
    let classes = two_class_view(scenario)?;
    solve_two_class(
        scenario.dcf(),
        [classes[0].count, classes[1].count],
        [classes[0].airtime_us, classes[1].airtime_us],
        scenario.interference().off_us,
    )
}

/// Per-class throughput from a converged solution:
///
/// `S_i = (T - X_i)/E[slot] * n_i tau_i (1-tau_i)^(n_i-1) (1-tau_-i)^(n_-i) * P_i/(T+F)`
///
/// With the interferer disabled (`F = 0`) this reduces to the
/// interference-free persistent model: the cycle normalization becomes
/// `P_i/T` and only the `X_i/T` dead-zone floor inside `p_i` remains.
pub fn throughput(
    solution: &FixedPointSolution,
    scenario: &ValidatedScenario,
) -> Result<ThroughputReport, ModelError> {
    let classes = two_class_view(scenario)?;
    let off = scenario.interference().off_us as f64;
    let cycle = scenario.interference().cycle_us() as f64;
    let mut bps = [0.0; 2];
    let mut airtime = [0.0; 2];
    let mut grants = [0.0; 2];
    for i in 0..2 {
        let other = 1 - i;
        let n_i = classes[i].count;
        let x_i = classes[i].airtime_us as f64;
        let success = f64::from(n_i)
            * solution.tau[i]
            * (1.0 - solution.tau[i]).powi(n_i as i32 - 1)
            * (1.0 - solution.tau[other]).powi(classes[other].count as i32);
        grants[i] = (off - x_i) / solution.expected_slot_us;
        let per_cycle = grants[i] * success;
        bps[i] = per_cycle * classes[i].payload_bits as f64 / cycle * 1e6;
        airtime[i] = per_cycle * x_i / cycle;
    }
    Ok(ThroughputReport {
        per_class_bps: bps,
        per_class_airtime_fraction: airtime,
        grants,
    })
}

/// Throughput under a uniform TXOP limit.
///
/// All stations share one access probability `tau` solved from
/// `p = (T - W)/T * (1 - (1-tau)^(N-1)) + W/T` with `W` the TXOP limit.
/// Per class, the first term counts bursts of `k_i = floor(W / X_i)` frames
/// granted in the interference-free zone and the second the final grant of
/// each cycle, which delivers `(k_i - 1)/2` frames on average before the
/// burst hits the interferer.
pub fn throughput_txop(scenario: &ValidatedScenario) -> Result<TxopThroughputReport, ModelError> {
    if !scenario.txop().enabled() {
        return Err(ModelError::TxopDisabled);
    }
    let classes = two_class_view(scenario)?;
    if classes[0].count == 0 || classes[1].count == 0 {
        return Err(ModelError::EmptyClass);
    }
    let dcf = scenario.dcf();
    let total: u32 = classes[0].count + classes[1].count;
    let off = scenario.interference().off_us as f64;
    let cycle = scenario.interference().cycle_us() as f64;
    let window = scenario.txop().limit_us as f64;

    let p_of_tau = |tau: f64| -> f64 {
        (off - window) / off * (1.0 - (1.0 - tau).powi(total as i32 - 1)) + window / off
    };

    let mut tau = tau_of_p(window / off, dcf);
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let next = tau_of_p(p_of_tau(tau), dcf);
        residual = (next - tau).abs();
        iterations = iteration;
        if residual <= FIXED_POINT_TOL {
            break;
        }
        tau = (1.0 - DAMPING) * tau + DAMPING * next;
    }
    if residual > FIXED_POINT_TOL {
        return Err(ModelError::NonConvergence {
            iterations,
            residual,
        });
    }
    let p = p_of_tau(tau);

    // Busy slots are modeled as full TXOP occupancies.
    let silent = (1.0 - tau).powi(total as i32);
    let expected_slot = dcf.slot_us as f64 * silent + window * (1.0 - silent);

    let mut report = TxopThroughputReport {
        tau,
        p,
        expected_slot_us: expected_slot,
        frames_per_grant: [0; 2],
        final_grant_frames: [0.0; 2],
        per_class_bps: [0.0; 2],
        per_class_airtime_fraction: [0.0; 2],
        airtime_fraction_terms: [[0.0; 2]; 2],
        iterations,
        residual,
    };
    for (i, class) in classes.iter().enumerate() {
        let n_i = class.count;
        let x_i = class.airtime_us as f64;
        let payload = class.payload_bits as f64;
        let k = scenario.txop().frames_per_grant(class.airtime_us);
        let k_star = (f64::from(k) - 1.0) / 2.0;
        let success = f64::from(n_i) * tau * (1.0 - tau).powi(total as i32 - 1);
        let safe_grants = (off - window) / expected_slot * success;
        let final_grant = success / (1.0 - (1.0 - tau).powi(total as i32));

        let term_safe = safe_grants * f64::from(k) * x_i / cycle;
        let term_final = final_grant * k_star * x_i / cycle;
        report.frames_per_grant[i] = k;
        report.final_grant_frames[i] = k_star;
        report.airtime_fraction_terms[i] = [term_safe, term_final];
        report.per_class_airtime_fraction[i] = term_safe + term_final;
        report.per_class_bps[i] =
            (safe_grants * f64::from(k) + final_grant * k_star) * payload / cycle * 1e6;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{default_scenario, validate};

    fn dcf() -> DcfParams {
        default_scenario().dcf
    }

    #[test]
    fn cw_stage_zero_equals_cw_min() {
        assert_eq!(cw_at_stage(0, &dcf()), 15);
    }

    #[test]
    fn cw_stage_six_reaches_the_cap() {
        // 2^6 * 16 - 1 = 1023, exactly the cap.
        assert_eq!(cw_at_stage(6, &dcf()), 1023);
    }

    #[test]
    fn cw_stage_beyond_cap_is_clamped() {
        assert_eq!(cw_at_stage(7, &dcf()), 1023);
        assert_eq!(cw_at_stage(31, &dcf()), 1023);
        assert_eq!(cw_at_stage(40, &dcf()), 1023);
    }

    #[test]
    fn tau_at_zero_collision_probability() {
        // Only stage 0 contributes: tau = 1 / (1 + 15/2) = 2/17.
        let tau = tau_of_p(0.0, &dcf());
        assert!((tau - 2.0 / 17.0).abs() < 1e-15);
    }

    #[test]
    fn tau_at_certain_collision_matches_analytic_limit() {
        // sum CW_j = 15+31+63+127+255+511+1023+1023 = 3048;
        // tau(1) = 1 / (1 + 3048 / (2*8)) = 1/191.5.
        let tau = tau_of_p(1.0, &dcf());
        assert!((tau - 1.0 / 191.5).abs() < 1e-15);
        // The general formula evaluated just below 1 agrees with the limit.
        let near = tau_of_p(1.0 - 1e-9, &dcf());
        assert!((near - tau).abs() < 1e-9);
    }

    #[test]
    fn tau_is_monotone_decreasing_in_p() {
        let d = dcf();
        let mut last = f64::INFINITY;
        for step in 0..=1000 {
            let tau = tau_of_p(step as f64 / 1000.0, &d);
            assert!(tau < last, "tau must strictly decrease (step {step})");
            assert!(tau > 0.0 && tau < 1.0);
            last = tau;
        }
    }

    #[test]
    fn collision_prob_is_zero_without_competitors_or_dead_zone() {
        let p = collision_prob(0.3, 0.5, 1, 0, 1, 1_000_000_000);
        assert!(p < 1e-8);
    }

    #[test]
    fn collision_prob_example_evaluates_directly() {
        let p = collision_prob(0.1, 0.1, 1, 1, 326, 40_000);
        let expected = (40_000.0 - 326.0) / 40_000.0 * 0.1 + 326.0 / 40_000.0;
        assert!((p - expected).abs() < 1e-15);
    }

    #[test]
    fn airtime_filling_the_off_period_always_collides() {
        // The whole interval is the deterministic-collision window.
        let p = collision_prob(0.0, 0.0, 1, 5, 40_000, 40_000);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn expected_slot_edges() {
        let sigma = 9;
        // Nobody transmits: every slot is idle.
        assert_eq!(expected_slot_us([0.0, 0.0], [3, 4], [326, 2158], sigma), 9.0);
        // Class 1 transmits in every slot: every slot lasts X_2.
        let e = expected_slot_us([0.2, 1.0], [3, 4], [326, 2158], sigma);
        assert!((e - 2158.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_system_yields_symmetric_solution() {
        let sol = solve_two_class(&dcf(), [3, 3], [500, 500], 40_000).unwrap();
        assert_eq!(sol.tau[0], sol.tau[1]);
        assert_eq!(sol.p[0], sol.p[1]);
        assert!(sol.residual <= FIXED_POINT_TOL);
    }

    #[test]
    fn longer_airtime_collides_more_and_accesses_less() {
        let sol = solve_two_class(&dcf(), [1, 1], [326, 2158], 40_000).unwrap();
        assert!(sol.p[0] < sol.p[1]);
        assert!(sol.tau[0] > sol.tau[1]);
    }

    #[test]
    fn swapping_class_labels_swaps_the_solution() {
        let a = solve_two_class(&dcf(), [2, 5], [326, 2158], 40_000).unwrap();
        let b = solve_two_class(&dcf(), [5, 2], [2158, 326], 40_000).unwrap();
        assert_eq!(a.tau[0], b.tau[1]);
        assert_eq!(a.tau[1], b.tau[0]);
        assert_eq!(a.p[0], b.p[1]);
        assert_eq!(a.p[1], b.p[0]);
    }

    #[test]
    fn empty_class_is_rejected() {
        assert_eq!(
            solve_two_class(&dcf(), [0, 3], [326, 2158], 40_000),
            Err(ModelError::EmptyClass)
        );
    }

    #[test]
    fn throughput_favors_the_short_airtime_class() {
        let mut cfg = default_scenario();
        cfg.classes[0].count = 5;
        cfg.classes[1].count = 5;
        let scenario = validate(cfg).unwrap();
        let sol = solve_fixed_point(&scenario).unwrap();
        let report = throughput(&sol, &scenario).unwrap();
        assert!(report.per_class_bps[0] > report.per_class_bps[1]);
        let total_airtime: f64 = report.per_class_airtime_fraction.iter().sum();
        assert!(total_airtime > 0.0 && total_airtime <= 1.0);
        assert!(report.grants.iter().all(|g| *g > 0.0));
    }

    #[test]
    fn txop_frame_counts_match_the_default_airtimes() {
        let mut cfg = default_scenario();
        cfg.txop.limit_us = 2_158;
        let scenario = validate(cfg).unwrap();
        let report = throughput_txop(&scenario).unwrap();
        assert_eq!(report.frames_per_grant, [6, 1]);
        // k = 1 gains nothing from the final pre-interference grant.
        assert_eq!(report.final_grant_frames[1], 0.0);
        assert_eq!(report.airtime_fraction_terms[1][1], 0.0);
        assert!(report.per_class_bps[0] > report.per_class_bps[1]);
    }

    #[test]
    fn txop_requires_enabled_policy() {
        let scenario = validate(default_scenario()).unwrap();
        assert_eq!(throughput_txop(&scenario), Err(ModelError::TxopDisabled));
    }

    #[test]
    fn non_two_class_scenarios_are_rejected_by_the_model() {
        let mut cfg = default_scenario();
        cfg.classes.push(ClassSpec {
            count: 1,
            airtime_us: 500,
            payload_bits: 12_000,
        });
        let scenario = validate(cfg).unwrap();
        assert_eq!(
            solve_fixed_point(&scenario),
            Err(ModelError::ClassCount(3))
        );
    }
}
