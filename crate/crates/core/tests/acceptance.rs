//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values (visible with `--nocapture`).
//!
//! Run with: `cargo test -p coex-core --test acceptance -- --nocapture`

use coex_core::harness::{mean_ci95, validate_model, ValidationSpec};
use coex_core::model::{
    collision_prob, solve_fixed_point, solve_two_class, tau_of_p, throughput, throughput_txop,
};
use coex_core::scenario::{
    default_scenario, validate, ClassSpec, ScenarioConfig, ValidatedScenario,
};
use coex_core::sim::{default_sim_time_us, simulate};

fn mbps(bps: f64) -> f64 {
    bps / 1e6
}

fn two_station_cfg(on_us: u64, off_us: u64) -> ScenarioConfig {
    let mut cfg = default_scenario();
    cfg.interference.on_us = on_us;
    cfg.interference.off_us = off_us;
    cfg
}

/// Mean per-class throughput in Mb/s over `runs` seeded simulations.
fn sim_mean_mbps(scenario: &ValidatedScenario, runs: u64, sim_time_us: u64) -> Vec<f64> {
    let classes = scenario.classes().len();
    let mut samples = vec![Vec::new(); classes];
    for seed in 0..runs {
        let report = simulate(scenario, seed, sim_time_us).unwrap();
        for (i, class) in report.per_class.iter().enumerate() {
            samples[i].push(mbps(class.throughput_bps));
        }
    }
    samples.iter().map(|s| mean_ci95(s).0).collect()
}

/// Criterion 1: two heterogeneous stations reproduce the reference
/// throughput table within ±15% per cell, ten runs per cell.
#[test]
fn criterion_1_two_station_throughput_table() {
    let cells: [(u64, u64, [f64; 2]); 3] = [
        (0, 40_000, [4.6, 4.0]),      // interferer off
        (5_000, 5_000, [4.0, 1.3]),   // 50% duty, 5 ms periods
        (40_000, 40_000, [2.4, 1.9]), // 50% duty, 40 ms periods
    ];
    for (on, off, targets) in cells {
        let scenario = validate(two_station_cfg(on, off)).unwrap();
        let sim_time = default_sim_time_us(scenario.interference());
        let means = sim_mean_mbps(&scenario, 10, sim_time);
        for (class, target) in targets.iter().enumerate() {
            let got = means[class];
            let tolerance = 0.15 * target;
            assert!(
                (got - target).abs() <= tolerance,
                "on={on} off={off} class{class}: {got:.3} Mb/s vs target {target} (+-{tolerance:.3})"
            );
        }
        println!(
            "criterion 1 cell on={}ms off={}ms: {:.3} / {:.3} Mb/s (targets {} / {}) PASS",
            on / 1000,
            off / 1000,
            means[0],
            means[1],
            targets[0],
            targets[1]
        );
    }
    println!("criterion 1 (two-station throughput table, +-15%): PASS");
}

/// Criterion 2: model-vs-simulation percentage error below 9% for OFF
/// periods of 40 and 80 ms and below 12% at 20 ms, for N in 2..50; the
/// model is more accurate at longer OFF periods.
#[test]
fn criterion_2_model_error_bounds() {
    let spec = ValidationSpec::new(default_scenario());
    let report = validate_model(&spec).unwrap();
    for row in &report.rows {
        let limit = if row.off_us == 20_000 { 12.0 } else { 9.0 };
        println!(
            "criterion 2 T={}ms N={} class{}: model {:.3} sim {:.3} err {:.2}% (limit {limit}%)",
            row.off_us / 1000,
            row.n_total,
            row.class_index,
            mbps(row.model_bps),
            mbps(row.sim_mean_bps),
            row.pct_error
        );
        assert!(
            row.pct_error < limit,
            "T={} N={} class{}: {:.2}% exceeds {limit}%",
            row.off_us,
            row.n_total,
            row.class_index,
            row.pct_error
        );
    }
    let err20 = report.max_error_for_off(20_000);
    let err40 = report.max_error_for_off(40_000);
    let err80 = report.max_error_for_off(80_000);
    assert!(
        err80 <= err20,
        "accuracy should improve with the OFF period: T=80ms {err80:.2}% vs T=20ms {err20:.2}%"
    );
    println!(
        "criterion 2 (model error <9%/12%): PASS (max T20 {err20:.2}%, T40 {err40:.2}%, T80 {err80:.2}%)"
    );
}

/// Criterion 3: every access started in the final X_i of an OFF period
/// collides, with zero tolerance, over at least 10^4 such accesses per
/// class.
#[test]
fn criterion_3_deterministic_collision_window() {
    let mut cfg = two_station_cfg(2_000, 2_000);
    cfg.classes[0] = ClassSpec {
        count: 4,
        airtime_us: 326,
        payload_bits: 12_000,
    };
    cfg.classes[1] = ClassSpec {
        count: 3,
        airtime_us: 900,
        payload_bits: 12_000,
    };
    let scenario = validate(cfg).unwrap();
    let report = simulate(&scenario, 1, 200_000_000).unwrap();
    for (i, class) in report.per_class.iter().enumerate() {
        assert!(
            class.dead_zone_attempts >= 10_000,
            "class {i}: only {} dead-zone attempts",
            class.dead_zone_attempts
        );
        assert_eq!(
            class.dead_zone_collisions, class.dead_zone_attempts,
            "class {i}: a dead-zone attempt survived"
        );
        println!(
            "criterion 3 class{i}: {} dead-zone attempts, all collided",
            class.dead_zone_attempts
        );
    }
    println!("criterion 3 (deterministic collision window, zero tolerance): PASS");
}

/// Criterion 4: with 30 saturated low-rate stations and OFF = ON = 1000
/// slots, channel accesses cluster: the offset histogram holds at least
/// one empty bin strictly between two bins with >= 100 attempts each.
#[test]
fn criterion_4_attempt_clustering() {
    let mut cfg = two_station_cfg(9_000, 9_000);
    cfg.classes = vec![ClassSpec {
        count: 30,
        airtime_us: 2_158,
        payload_bits: 12_000,
    }];
    let scenario = validate(cfg).unwrap();
    let report = simulate(&scenario, 3, 40_000_000).unwrap();
    let bins = &report.offset_histogram.per_class[0];
    let mut first_heavy: Option<usize> = None;
    let mut found = None;
    let mut empty_after_heavy: Option<usize> = None;
    for (i, bin) in bins.iter().enumerate() {
        if bin.attempts >= 100 {
            if let (Some(_), Some(gap)) = (first_heavy, empty_after_heavy) {
                found = Some((gap, i));
                break;
            }
            first_heavy = Some(i);
            empty_after_heavy = None;
        } else if bin.attempts == 0 && first_heavy.is_some() && empty_after_heavy.is_none() {
            empty_after_heavy = Some(i);
        }
    }
    let (gap, right) = found.expect("no empty bin between two populated clusters");
    println!(
        "criterion 4 (clustering): PASS (empty bin at offset {} us between clusters, next cluster at {} us)",
        gap as u64 * report.offset_histogram.bin_width_us,
        right as u64 * report.offset_histogram.bin_width_us
    );
}

/// Criterion 5: at N = 30 the relative gap between the class throughputs
/// shrinks monotonically as the OFF/ON period grows, in both model and
/// simulation.
#[test]
fn criterion_5_classes_converge_with_longer_off_periods() {
    let offs = [10_000u64, 20_000, 30_000, 40_000, 50_000];
    let mut model_gaps = Vec::new();
    let mut sim_gaps = Vec::new();
    for off in offs {
        let mut cfg = two_station_cfg(off, off);
        cfg.classes[0].count = 15;
        cfg.classes[1].count = 15;
        let scenario = validate(cfg).unwrap();
        let solution = solve_fixed_point(&scenario).unwrap();
        let model = throughput(&solution, &scenario).unwrap().per_class_bps;
        model_gaps.push((model[0] - model[1]) / model[0]);
        let sim = sim_mean_mbps(&scenario, 10, default_sim_time_us(scenario.interference()));
        sim_gaps.push((sim[0] - sim[1]) / sim[0]);
    }
    println!("criterion 5 model gaps: {model_gaps:.4?}");
    println!("criterion 5 sim gaps:   {sim_gaps:.4?}");
    for w in model_gaps.windows(2) {
        assert!(w[1] < w[0], "model gap not decreasing: {model_gaps:?}");
    }
    for w in sim_gaps.windows(2) {
        assert!(w[1] < w[0], "sim gap not decreasing: {sim_gaps:?}");
    }
    println!("criterion 5 (class convergence with growing OFF period): PASS");
}

/// Criterion 6: a uniform TXOP limit equal to the longer airtime leaves
/// the short-airtime class ahead at every population, in both model and
/// simulation, with 6 and 1 frames per burst respectively.
#[test]
fn criterion_6_txop_does_not_restore_fairness() {
    for n in (2..=50u64).step_by(2) {
        let mut cfg = two_station_cfg(40_000, 40_000);
        cfg.txop.limit_us = 2_158;
        cfg.classes[0].count = (n / 2) as u32;
        cfg.classes[1].count = (n / 2) as u32;
        let scenario = validate(cfg).unwrap();
        let model = throughput_txop(&scenario).unwrap();
        assert_eq!(model.frames_per_grant, [6, 1]);
        assert!(
            model.per_class_bps[0] > model.per_class_bps[1],
            "model: TXOP equalized classes at N={n}"
        );
        let sim = sim_mean_mbps(&scenario, 5, default_sim_time_us(scenario.interference()));
        assert!(
            sim[0] > sim[1],
            "sim: TXOP equalized classes at N={n}: {sim:?}"
        );
    }
    println!("criterion 6 (TXOP unfairness persists, k=[6,1], N=2..50): PASS");
}

/// Criterion 7: the property suite distilled into one deterministic run:
/// solver residuals, monotone access probability, dead-zone floor, slot
/// partition, simulator conservation and determinism, and the homogeneous
/// interference-free cross-check against the classic fixed point.
#[test]
fn criterion_7_property_suite() {
    let dcf = default_scenario().dcf;

    // Fixed-point residual at several operating points.
    for (n, x2) in [(1u32, 2_158u64), (5, 2_158), (25, 1_000), (10, 500)] {
        let sol = solve_two_class(&dcf, [n, n], [326, x2], 40_000).unwrap();
        assert!(sol.residual <= 1e-9);
        for i in 0..2 {
            let x = [326, x2][i] as f64;
            assert!(sol.p[i] >= x / 40_000.0 - 1e-12, "dead-zone floor violated");
        }
    }

    // tau(p) strictly decreasing over a dense grid.
    let mut last = f64::INFINITY;
    for step in 0..=4_000 {
        let tau = tau_of_p(step as f64 / 4_000.0, &dcf);
        assert!(tau < last);
        last = tau;
    }

    // Slot-type probabilities partition the event space.
    for tau1 in [0.0, 0.1, 0.5, 0.9] {
        for tau2 in [0.0, 0.2, 0.8, 1.0] {
            let q1 = (1.0f64 - tau1).powi(7);
            let q2 = (1.0f64 - tau2).powi(4);
            let total = q1 * q2 + (1.0 - q1) * q2 + (1.0 - q2);
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    // Dead-zone floor of the raw collision probability.
    for x in [100u64, 1_000, 10_000, 39_999] {
        let p = collision_prob(0.0, 0.0, 1, 0, x, 40_000);
        assert!((p - x as f64 / 40_000.0).abs() < 1e-15);
    }

    // Simulator determinism and conservation on the default scenario.
    let scenario = validate(default_scenario()).unwrap();
    let a = simulate(&scenario, 99, 8_000_000).unwrap();
    let b = simulate(&scenario, 99, 8_000_000).unwrap();
    assert_eq!(a, b, "identical seeds must give identical reports");
    for st in &a.per_station {
        assert_eq!(
            st.stats.attempts,
            st.stats.successes + st.stats.wifi_collisions + st.stats.lte_collisions
        );
    }
    assert_eq!(a.time.idle_us + a.time.busy_us + a.time.on_us, a.sim_time_us);

    // Homogeneous, interference-free: empirical access probability within
    // 3% of the classic persistent fixed point.
    for n in [2u32, 5, 10] {
        let mut cfg = default_scenario();
        cfg.interference.on_us = 0;
        cfg.classes = vec![ClassSpec {
            count: n,
            airtime_us: 326,
            payload_bits: 12_000,
        }];
        let scen = validate(cfg).unwrap();
        let report = simulate(&scen, 11, 40_000_000).unwrap();
        let (mut attempts, mut opportunities) = (0u64, 0u64);
        for st in &report.per_station {
            attempts += st.stats.attempts;
            opportunities += st.stats.counted_slots + st.stats.attempts;
        }
        let tau_hat = attempts as f64 / opportunities as f64;
        // Classic persistent model: tau = f(p), p = 1 - (1-tau)^(n-1),
        // solved here independently.
        let mut tau_classic = 0.1f64;
        for _ in 0..100_000 {
            let p = 1.0 - (1.0 - tau_classic).powi(n as i32 - 1);
            let next = tau_of_p(p, &dcf);
            if (next - tau_classic).abs() < 1e-13 {
                break;
            }
            tau_classic = 0.5 * (tau_classic + next);
        }
        let rel = (tau_hat / tau_classic - 1.0).abs();
        println!(
            "criterion 7 homogeneous n={n}: tau_hat {tau_hat:.5} vs classic {tau_classic:.5} ({:+.2}%)",
            (tau_hat / tau_classic - 1.0) * 100.0
        );
        assert!(rel < 0.03, "n={n}: tau deviates {:.2}%", rel * 100.0);
    }
    println!("criterion 7 (property suite): PASS");
}

/// Criterion 8: a single interference-free station matches the renewal
/// closed form P / (X + CW_min/2 * sigma) within 1%.
#[test]
fn criterion_8_single_station_closed_form() {
    let mut cfg = default_scenario();
    cfg.interference.on_us = 0;
    cfg.classes = vec![ClassSpec {
        count: 1,
        airtime_us: 326,
        payload_bits: 12_000,
    }];
    let scenario = validate(cfg).unwrap();
    let report = simulate(&scenario, 7, 20_000_000).unwrap();
    let got = report.per_class[0].throughput_bps;
    let closed_form = 12_000.0 / (326.0 + 7.5 * 9.0) * 1e6;
    let rel = (got - closed_form).abs() / closed_form;
    println!(
        "criterion 8 (single-station closed form): PASS ({:.4} vs {:.4} Mb/s, {:.3}%)",
        mbps(got),
        mbps(closed_form),
        rel * 100.0
    );
    assert!(rel < 0.01, "deviation {:.3}% exceeds 1%", rel * 100.0);
}
