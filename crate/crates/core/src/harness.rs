//! Sweep execution and model-vs-simulation comparison.
//!
//! A sweep varies either the total station count or the OFF-period length,
//! runs the analytic model plus `runs_per_point` independent simulations at
//! every point, and reports per-class means, Student-t 95% confidence
//! intervals, and the percentage error `|S_model - S_sim| / S_sim * 100`.
//!
//! Points and runs are independent jobs scheduled on the rayon pool; row
//! assembly is order-independent, so results are reproducible regardless of
//! scheduling.

use crate::model::{solve_fixed_point, throughput, throughput_txop, ModelError};
use crate::scenario::{validate, InterferencePattern, ScenarioConfig, ScenarioError, ValidatedScenario};
use crate::sim::{simulate, SimError, SimReport, TraceEvent};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::io::{self, Write};
use thiserror::Error;

/// Which scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Total station count, split equally between the two classes.
    StationCountN,
    /// OFF-period length, microseconds. When the base scenario has an
    /// active interferer the ON period is set to the same value, keeping
    /// the duty cycle at 50%.
    OffPeriodT,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::StationCountN => "station_count_N",
            SweepVariable::OffPeriodT => "off_period_T",
        }
    }
}

/// Simulated time of one run, either fixed or scaled to the point's
/// interference cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunDuration {
    /// A multiple of the scenario's ON+OFF cycle.
    Cycles(u64),
    /// Fixed duration in microseconds.
    Fixed(u64),
}

impl Default for RunDuration {
    fn default() -> Self {
        RunDuration::Cycles(500)
    }
}

impl RunDuration {
    pub fn resolve(&self, pattern: &InterferencePattern) -> u64 {
        match self {
            RunDuration::Cycles(n) => n * pattern.cycle_us(),
            RunDuration::Fixed(us) => *us,
        }
    }
}

/// One sweep description.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub variable: SweepVariable,
    /// Strictly increasing, non-empty. Station counts must be even.
    pub values: Vec<u64>,
    pub runs_per_point: usize,
    /// Simulated time per run; defaults to 500 interference cycles of the
    /// point's scenario.
    pub run_duration: RunDuration,
    /// Run `r` of every point uses seed `seed_base + r`.
    pub seed_base: u64,
}

impl SweepSpec {
    pub fn new(base: ScenarioConfig, variable: SweepVariable, values: Vec<u64>) -> Self {
        SweepSpec {
            base,
            variable,
            values,
            runs_per_point: 10,
            run_duration: RunDuration::default(),
            seed_base: 1,
        }
    }
}

/// One (value, class) result row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub variable_value: u64,
    pub class_index: usize,
    pub model_bps: f64,
    pub sim_mean_bps: f64,
    /// Half-width of the Student-t 95% interval; undefined for one run.
    pub sim_ci95_bps: Option<f64>,
    /// `|model - sim_mean| / sim_mean * 100`.
    pub pct_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows for one swept value, in class order.
    pub fn rows_for(&self, value: u64) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.variable_value == value)
            .collect()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HarnessError {
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error("invalid scenario at {variable}={value}: {source}")]
    ScenarioAt {
        variable: &'static str,
        value: u64,
        source: ScenarioError,
    },
    #[error("model failed at {variable}={value}: {source}")]
    ModelAt {
        variable: &'static str,
        value: u64,
        source: ModelError,
    },
    #[error("simulation failed at {variable}={value}: {source}")]
    SimAt {
        variable: &'static str,
        value: u64,
        source: SimError,
    },
}

/// Sample mean and the half-width of its Student-t 95% confidence interval
/// (`None` below two samples).
pub fn mean_ci95(samples: &[f64]) -> (f64, Option<f64>) {
    let n = samples.len();
    assert!(n > 0);
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975);
    (mean, Some(t * (var / n as f64).sqrt()))
}

/// Percentage error of the model against the simulation mean.
pub fn pct_error(model: f64, sim_mean: f64) -> f64 {
    (model - sim_mean).abs() / sim_mean * 100.0
}

/// Default simulation backend: per-class throughput in bits per second.
pub fn simulator_backend(
    scenario: &ValidatedScenario,
    seed: u64,
    sim_time_us: u64,
) -> Result<Vec<f64>, SimError> {
    simulate(scenario, seed, sim_time_us)
        .map(|r| r.per_class.iter().map(|c| c.throughput_bps).collect())
}

/// Model throughput for a point scenario, TXOP-aware.
fn model_bps(scenario: &ValidatedScenario) -> Result<[f64; 2], ModelError> {
    if scenario.txop().enabled() {
        Ok(throughput_txop(scenario)?.per_class_bps)
    } else {
        let solution = solve_fixed_point(scenario)?;
        Ok(throughput(&solution, scenario)?.per_class_bps)
    }
}

fn scenario_for_value(
    base: &ScenarioConfig,
    variable: SweepVariable,
    value: u64,
) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = base.clone();
    match variable {
        SweepVariable::StationCountN => {
            if cfg.classes.len() != 2 {
                return Err(HarnessError::Spec(
                    "station-count sweeps require exactly two classes".into(),
                ));
            }
            if value == 0 || !value.is_multiple_of(2) {
                return Err(HarnessError::Spec(format!(
                    "station count {value} must be even and positive to split equally"
                )));
            }
            let half = (value / 2) as u32;
            cfg.classes[0].count = half;
            cfg.classes[1].count = half;
        }
        SweepVariable::OffPeriodT => {
            cfg.interference.off_us = value;
            if cfg.interference.is_active() {
                cfg.interference.on_us = value;
            }
        }
    }
    Ok(cfg)
}

fn check_spec(spec: &SweepSpec) -> Result<(), HarnessError> {
    if spec.values.is_empty() {
        return Err(HarnessError::Spec("no sweep values given".into()));
    }
    if !spec.values.windows(2).all(|w| w[0] < w[1]) {
        return Err(HarnessError::Spec(
            "sweep values must be strictly increasing".into(),
        ));
    }
    if spec.runs_per_point == 0 {
        return Err(HarnessError::Spec("runs_per_point must be at least 1".into()));
    }
    Ok(())
}

/// Run a sweep against the real simulator.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, HarnessError> {
    run_sweep_with(spec, &simulator_backend)
}

/// Run a sweep against an arbitrary backend (used by tests to replace the
/// simulator with an oracle).
pub fn run_sweep_with<F>(spec: &SweepSpec, backend: &F) -> Result<SweepResult, HarnessError>
where
    F: Fn(&ValidatedScenario, u64, u64) -> Result<Vec<f64>, SimError> + Sync,
{
    check_spec(spec)?;
    let variable = spec.variable.as_str();
    let per_value: Vec<Vec<SweepRow>> = spec
        .values
        .par_iter()
        .map(|&value| {
            let cfg = scenario_for_value(&spec.base, spec.variable, value)?;
            let scenario = validate(cfg).map_err(|source| HarnessError::ScenarioAt {
                variable,
                value,
                source,
            })?;
            let model = model_bps(&scenario).map_err(|source| HarnessError::ModelAt {
                variable,
                value,
                source,
            })?;
            let sim_time = spec.run_duration.resolve(scenario.interference());
            let runs: Vec<Vec<f64>> = (0..spec.runs_per_point)
                .into_par_iter()
                .map(|run| {
                    backend(&scenario, spec.seed_base + run as u64, sim_time).map_err(|source| {
                        HarnessError::SimAt {
                            variable,
                            value,
                            source,
                        }
                    })
                })
                .collect::<Result<_, _>>()?;
            let rows = (0..2)
                .map(|class| {
                    let samples: Vec<f64> = runs.iter().map(|r| r[class]).collect();
                    let (mean, ci) = mean_ci95(&samples);
                    SweepRow {
                        variable_value: value,
                        class_index: class,
                        model_bps: model[class],
                        sim_mean_bps: mean,
                        sim_ci95_bps: ci,
                        pct_error: pct_error(model[class], mean),
                    }
                })
                .collect();
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    Ok(SweepResult {
        variable: spec.variable,
        rows: per_value.into_iter().flatten().collect(),
    })
}

/// Model validation spec: OFF-period values crossed with total station
/// counts, compared at a percentage-error threshold.
#[derive(Debug, Clone)]
pub struct ValidationSpec {
    pub base: ScenarioConfig,
    pub off_values_us: Vec<u64>,
    pub station_counts: Vec<u64>,
    pub runs_per_point: usize,
    pub run_duration: RunDuration,
    pub seed_base: u64,
    pub threshold_pct: f64,
}

impl ValidationSpec {
    /// Defaults: OFF periods of 20, 40, and 80 ms, station counts 2..50,
    /// ten runs per point, 9% threshold.
    pub fn new(base: ScenarioConfig) -> Self {
        ValidationSpec {
            base,
            off_values_us: vec![20_000, 40_000, 80_000],
            station_counts: vec![2, 10, 30, 50],
            runs_per_point: 10,
            run_duration: RunDuration::default(),
            seed_base: 1,
            threshold_pct: 9.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationRow {
    pub off_us: u64,
    pub n_total: u64,
    pub class_index: usize,
    pub model_bps: f64,
    pub sim_mean_bps: f64,
    pub sim_ci95_bps: Option<f64>,
    pub pct_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub max_pct_error: f64,
    pub threshold_pct: f64,
    pub passed: bool,
}

impl ValidationReport {
    /// Largest per-class error among points with the given OFF period.
    pub fn max_error_for_off(&self, off_us: u64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.off_us == off_us)
            .map(|r| r.pct_error)
            .fold(0.0, f64::max)
    }
}

/// Compare model and simulation across the validation grid and report the
/// maximum percentage error against the spec threshold.
pub fn validate_model(spec: &ValidationSpec) -> Result<ValidationReport, HarnessError> {
    validate_model_with(spec, &simulator_backend)
}

pub fn validate_model_with<F>(
    spec: &ValidationSpec,
    backend: &F,
) -> Result<ValidationReport, HarnessError>
where
    F: Fn(&ValidatedScenario, u64, u64) -> Result<Vec<f64>, SimError> + Sync,
{
    if spec.off_values_us.is_empty() || spec.station_counts.is_empty() {
        return Err(HarnessError::Spec("validation grid is empty".into()));
    }
    let rows: Vec<Vec<ValidationRow>> = spec
        .off_values_us
        .par_iter()
        .map(|&off| {
            let mut base = spec.base.clone();
            base.interference.off_us = off;
            if base.interference.is_active() {
                base.interference.on_us = off;
            }
            let sweep = SweepSpec {
                base,
                variable: SweepVariable::StationCountN,
                values: spec.station_counts.clone(),
                runs_per_point: spec.runs_per_point,
                run_duration: spec.run_duration,
                seed_base: spec.seed_base,
            };
            let result = run_sweep_with(&sweep, backend)?;
            Ok(result
                .rows
                .into_iter()
                .map(|r| ValidationRow {
                    off_us: off,
                    n_total: r.variable_value,
                    class_index: r.class_index,
                    model_bps: r.model_bps,
                    sim_mean_bps: r.sim_mean_bps,
                    sim_ci95_bps: r.sim_ci95_bps,
                    pct_error: r.pct_error,
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<ValidationRow> = rows.into_iter().flatten().collect();
    let max_pct_error = rows.iter().map(|r| r.pct_error).fold(0.0, f64::max);
    Ok(ValidationReport {
        rows,
        max_pct_error,
        threshold_pct: spec.threshold_pct,
        passed: max_pct_error < spec.threshold_pct,
    })
}

/// TXOP comparison sweep: station-count sweep of a scenario whose TXOP
/// limit equals the longer frame airtime, so bursts equalize airtime but
/// not per-class throughput.
pub fn txop_comparison(
    base: &ScenarioConfig,
    station_counts: Vec<u64>,
    runs_per_point: usize,
    run_duration: RunDuration,
    seed_base: u64,
) -> Result<SweepResult, HarnessError> {
    if !base.txop.enabled() {
        return Err(HarnessError::Spec(
            "TXOP comparison requires an enabled TXOP limit".into(),
        ));
    }
    let mut spec = SweepSpec::new(base.clone(), SweepVariable::StationCountN, station_counts);
    spec.runs_per_point = runs_per_point;
    spec.run_duration = run_duration;
    spec.seed_base = seed_base;
    run_sweep(&spec)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV schema: `variable,value,class,model_bps,sim_mean_bps,ci95_bps,pct_error`.
pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult) -> io::Result<()> {
    writeln!(w, "variable,value,class,model_bps,sim_mean_bps,ci95_bps,pct_error")?;
    for row in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            result.variable.as_str(),
            row.variable_value,
            row.class_index,
            row.model_bps,
            row.sim_mean_bps,
            fmt_opt(row.sim_ci95_bps),
            row.pct_error
        )?;
    }
    Ok(())
}

/// CSV schema: `off_T_us,n_total,class,model_bps,sim_mean_bps,ci95_bps,pct_error`.
pub fn write_validation_csv<W: Write>(mut w: W, report: &ValidationReport) -> io::Result<()> {
    writeln!(
        w,
        "off_T_us,n_total,class,model_bps,sim_mean_bps,ci95_bps,pct_error"
    )?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.off_us,
            row.n_total,
            row.class_index,
            row.model_bps,
            row.sim_mean_bps,
            fmt_opt(row.sim_ci95_bps),
            row.pct_error
        )?;
    }
    Ok(())
}

/// CSV schema: `class,offset_us,attempts,collisions,probability`.
/// `probability` is empty for bins without attempts.
pub fn write_histogram_csv<W: Write>(mut w: W, report: &SimReport, bins: usize) -> io::Result<()> {
    writeln!(w, "class,offset_us,attempts,collisions,probability")?;
    for (class, cells) in report.binned_collision_probability(bins).iter().enumerate() {
        for cell in cells {
            writeln!(
                w,
                "{},{},{},{},{}",
                class,
                cell.start_us,
                cell.attempts,
                cell.collisions,
                fmt_opt(cell.probability)
            )?;
        }
    }
    Ok(())
}

/// CSV schema: `t_start_us,duration_us,type,stations` with station ids
/// separated by `;`.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &[TraceEvent]) -> io::Result<()> {
    writeln!(w, "t_start_us,duration_us,type,stations")?;
    for ev in trace {
        let stations = ev
            .stations
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "{},{},{},{}",
            ev.t_start_us,
            ev.duration_us,
            ev.kind.as_str(),
            stations
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_scenario;

    fn quick_spec(values: Vec<u64>) -> SweepSpec {
        let mut spec = SweepSpec::new(default_scenario(), SweepVariable::StationCountN, values);
        spec.runs_per_point = 3;
        spec.run_duration = RunDuration::Fixed(2_000_000);
        spec
    }

    #[test]
    fn sweep_is_reproducible() {
        let spec = quick_spec(vec![2, 4]);
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_rows_cover_every_value_and_class() {
        let spec = quick_spec(vec![2, 4, 6]);
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 6);
        for value in [2, 4, 6] {
            let rows = result.rows_for(value);
            assert_eq!(rows.len(), 2);
            assert_eq!(rows[0].class_index, 0);
            assert_eq!(rows[1].class_index, 1);
        }
    }

    #[test]
    fn single_run_leaves_ci_undefined() {
        let mut spec = quick_spec(vec![2]);
        spec.runs_per_point = 1;
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 2);
        assert!(result.rows.iter().all(|r| r.sim_ci95_bps.is_none()));
    }

    #[test]
    fn model_backend_gives_zero_error() {
        // Replace the simulator with the analytic model itself: the
        // percentage error must vanish identically.
        let spec = quick_spec(vec![2, 10]);
        let backend = |scenario: &ValidatedScenario, _seed: u64, _t: u64| {
            let solution = solve_fixed_point(scenario).expect("converges");
            Ok(throughput(&solution, scenario)
                .expect("two classes")
                .per_class_bps
                .to_vec())
        };
        let result = run_sweep_with(&spec, &backend).unwrap();
        for row in &result.rows {
            // Error vanishes up to the rounding of the sample mean.
            assert!(row.pct_error < 1e-10, "pct_error {}", row.pct_error);
            assert!(row.sim_ci95_bps.unwrap() < 1e-6);
        }
    }

    #[test]
    fn odd_station_counts_are_rejected() {
        let spec = quick_spec(vec![3]);
        assert!(matches!(run_sweep(&spec), Err(HarnessError::Spec(_))));
    }

    #[test]
    fn non_increasing_values_are_rejected() {
        let spec = quick_spec(vec![4, 2]);
        assert!(matches!(run_sweep(&spec), Err(HarnessError::Spec(_))));
    }

    #[test]
    fn off_period_sweep_keeps_duty_cycle() {
        let mut spec = SweepSpec::new(
            default_scenario(),
            SweepVariable::OffPeriodT,
            vec![10_000, 20_000],
        );
        spec.runs_per_point = 2;
        spec.run_duration = RunDuration::Fixed(1_000_000);
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 4);
        // Sanity: throughput exists at both points.
        assert!(result.rows.iter().all(|r| r.sim_mean_bps > 0.0));
    }

    #[test]
    fn failing_point_is_annotated() {
        // off_T = 1 ms is smaller than the slow class airtime.
        let mut spec = SweepSpec::new(
            default_scenario(),
            SweepVariable::OffPeriodT,
            vec![1_000],
        );
        spec.runs_per_point = 1;
        let err = run_sweep(&spec).unwrap_err();
        assert!(matches!(
            err,
            HarnessError::ScenarioAt { value: 1_000, .. }
        ));
    }

    #[test]
    fn mean_ci95_behaviour() {
        let (mean, ci) = mean_ci95(&[5.0]);
        assert_eq!(mean, 5.0);
        assert!(ci.is_none());
        let (mean, ci) = mean_ci95(&[1.0, 2.0, 3.0]);
        assert!((mean - 2.0).abs() < 1e-12);
        // t(0.975, df=2) = 4.3027, s = 1, n = 3.
        let expected = 4.302652729911275 / 3f64.sqrt();
        assert!((ci.unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn csv_sweep_schema() {
        let spec = quick_spec(vec![2]);
        let result = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &result).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "variable,value,class,model_bps,sim_mean_bps,ci95_bps,pct_error"
        );
        assert!(lines.next().unwrap().starts_with("station_count_N,2,0,"));
    }
}
