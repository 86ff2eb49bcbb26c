use clap::{Args, Parser, Subcommand, ValueEnum};
use coex_core::harness::{
    run_sweep, validate_model, write_histogram_csv, write_sweep_csv, write_trace_csv,
    write_validation_csv, RunDuration, SweepResult, SweepSpec, SweepVariable, ValidationSpec,
};
use coex_core::model::{solve_fixed_point, throughput, throughput_txop};
use coex_core::scenario::ValidatedScenario;
use coex_core::sim::{simulate, simulate_traced, SimReport};
use coexsim::svg::{line_chart, Series};
use coexsim::{resolve_scenario, write_artifact, CliError};
use std::path::PathBuf;

/// Model and simulate saturated 802.11 DCF stations sharing a channel with
/// a periodic duty-cycled interferer.
#[derive(Parser)]
#[command(name = "coexsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario JSON file; omit for the built-in two-class default.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Override a scenario field before validation, e.g.
    /// `-O interference.on_F=0` or `-O classes.0.count_n=5`. Repeatable;
    /// unknown keys are rejected.
    #[arg(long = "override", short = 'O', value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Directory for CSV/JSON/SVG artifacts.
    #[arg(long, default_value = "out", global = true)]
    output_dir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    #[value(name = "svg+csv")]
    SvgCsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variable {
    /// Total station count, split equally between the two classes.
    N,
    /// OFF-period length in microseconds (the ON period follows when the
    /// interferer is active, keeping a 50% duty cycle).
    T,
}

impl From<Variable> for SweepVariable {
    fn from(v: Variable) -> Self {
        match v {
            Variable::N => SweepVariable::StationCountN,
            Variable::T => SweepVariable::OffPeriodT,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytic fixed point and print per-class throughput.
    Model {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run one seeded simulation and print per-class statistics.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// RNG seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Simulated time in microseconds (overrides --cycles).
        #[arg(long)]
        sim_time_us: Option<u64>,
        /// Simulated time in interference cycles.
        #[arg(long, default_value_t = 500, conflicts_with = "sim_time_us")]
        cycles: u64,
        /// Write the channel event trace to trace.csv.
        #[arg(long)]
        trace: bool,
        /// Write the per-offset collision histogram, rebinned to this many
        /// bins, to offset_histogram.csv.
        #[arg(long, value_name = "BINS")]
        histogram: Option<usize>,
    },
    /// Sweep the station count or the OFF period, comparing model and
    /// simulation per point.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// What to vary.
        #[arg(long, value_enum)]
        variable: Variable,
        /// Comma-separated sweep values (stations for n, microseconds for t).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
        /// Independent simulation runs per point.
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Simulated time per run in interference cycles.
        #[arg(long, default_value_t = 500)]
        cycles: u64,
        /// Seed of the first run; run r uses seed + r.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Compare model and simulation over a grid of OFF periods and station
    /// counts and report the maximum percentage error.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// PASS/FAIL threshold on the maximum percentage error.
        #[arg(long, default_value_t = 9.0)]
        threshold: f64,
        /// OFF-period values, microseconds.
        #[arg(long, value_delimiter = ',', default_values_t = [20_000u64, 40_000, 80_000])]
        off_values: Vec<u64>,
        /// Total station counts (even, split between the two classes).
        #[arg(long, value_delimiter = ',', default_values_t = [2u64, 10, 30, 50])]
        counts: Vec<u64>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 500)]
        cycles: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Reproduce the canned figure datasets: a station-count sweep, an
    /// OFF-period sweep, a TXOP sweep, and the per-offset collision
    /// histograms of a crowded short-cycle scenario.
    Figures {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 500)]
        cycles: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "svg+csv")]
        format: OutputFormat,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Model { common } => cmd_model(&common),
        Command::Simulate {
            common,
            seed,
            sim_time_us,
            cycles,
            trace,
            histogram,
        } => cmd_simulate(&common, seed, sim_time_us, cycles, trace, histogram),
        Command::Sweep {
            common,
            variable,
            values,
            runs,
            cycles,
            seed,
            format,
        } => cmd_sweep(&common, variable, values, runs, cycles, seed, format),
        Command::Validate {
            common,
            threshold,
            off_values,
            counts,
            runs,
            cycles,
            seed,
        } => cmd_validate(&common, threshold, off_values, counts, runs, cycles, seed),
        Command::Figures {
            common,
            runs,
            cycles,
            seed,
            format,
        } => cmd_figures(&common, runs, cycles, seed, format),
    }
}

fn ms(us: f64) -> f64 {
    us / 1e3
}

fn mbps(bps: f64) -> f64 {
    bps / 1e6
}

fn describe(scenario: &ValidatedScenario) -> String {
    let p = scenario.interference();
    let txop = if scenario.txop().enabled() {
        format!("TXOP {:.3} ms", ms(scenario.txop().limit_us as f64))
    } else {
        "TXOP off".to_string()
    };
    format!(
        "{} stations in {} classes, OFF {:.1} ms / ON {:.1} ms (duty {:.0}%), {}",
        scenario.total_stations(),
        scenario.classes().len(),
        ms(p.off_us as f64),
        ms(p.on_us as f64),
        p.duty_cycle() * 100.0,
        txop
    )
}

fn cmd_model(common: &CommonArgs) -> Result<(), CliError> {
    let scenario = resolve_scenario(
        common.scenario.as_deref(),
        &common.overrides,
        &common.output_dir,
    )?;
    println!("scenario: {}", describe(&scenario));
    if scenario.txop().enabled() {
        let report = throughput_txop(&scenario)?;
        println!(
            "uniform tau = {:.6}   p = {:.6}   E[slot] = {:.4} ms   ({} iterations, residual {:.1e})",
            report.tau,
            report.p,
            ms(report.expected_slot_us),
            report.iterations,
            report.residual
        );
        for (i, class) in scenario.classes().iter().enumerate() {
            println!(
                "class {i}: n={:<3} X={:.3} ms  k={} (+{:.1} in the final grant)  S = {:.3} Mb/s  airtime {:.1}%",
                class.count,
                ms(class.airtime_us as f64),
                report.frames_per_grant[i],
                report.final_grant_frames[i],
                mbps(report.per_class_bps[i]),
                report.per_class_airtime_fraction[i] * 100.0
            );
        }
    } else {
        let solution = solve_fixed_point(&scenario)?;
        let report = throughput(&solution, &scenario)?;
        println!(
            "E[slot] = {:.4} ms   ({} iterations, residual {:.1e})",
            ms(solution.expected_slot_us),
            solution.iterations,
            solution.residual
        );
        for (i, class) in scenario.classes().iter().enumerate() {
            println!(
                "class {i}: n={:<3} X={:.3} ms  tau={:.6}  p={:.6}  G={:.1}  S = {:.3} Mb/s  airtime {:.1}%",
                class.count,
                ms(class.airtime_us as f64),
                solution.tau[i],
                solution.p[i],
                report.grants[i],
                mbps(report.per_class_bps[i]),
                report.per_class_airtime_fraction[i] * 100.0
            );
        }
    }
    Ok(())
}

fn print_sim_report(report: &SimReport) {
    println!(
        "seed {}  rng {}  simulated {:.3} s",
        report.seed,
        report.rng_algorithm,
        report.sim_time_us as f64 / 1e6
    );
    for (i, class) in report.per_class.iter().enumerate() {
        println!(
            "class {i}: {:.3} Mb/s  attempts={} successes={} wifi_coll={} lte_coll={} drops={} p_hat={}",
            mbps(class.throughput_bps),
            class.attempts,
            class.successes,
            class.wifi_collisions,
            class.lte_collisions,
            class.drops,
            class
                .mean_collision_prob
                .map(|p| format!("{p:.4}"))
                .unwrap_or_else(|| "n/a".to_string())
        );
    }
    let total = report.sim_time_us as f64;
    println!(
        "airtime: idle {:.1}%  busy {:.1}%  interferer {:.1}%   total throughput {:.3} Mb/s",
        report.time.idle_us as f64 / total * 100.0,
        report.time.busy_us as f64 / total * 100.0,
        report.time.on_us as f64 / total * 100.0,
        mbps(report.total_throughput_bps())
    );
}

fn cmd_simulate(
    common: &CommonArgs,
    seed: u64,
    sim_time_us: Option<u64>,
    cycles: u64,
    trace: bool,
    histogram: Option<usize>,
) -> Result<(), CliError> {
    let scenario = resolve_scenario(
        common.scenario.as_deref(),
        &common.overrides,
        &common.output_dir,
    )?;
    println!("scenario: {}", describe(&scenario));
    let duration = match sim_time_us {
        Some(us) => RunDuration::Fixed(us),
        None => RunDuration::Cycles(cycles),
    }
    .resolve(scenario.interference());

    let report = if trace {
        let (report, events) = simulate_traced(&scenario, seed, duration)?;
        let mut csv = Vec::new();
        write_trace_csv(&mut csv, &events).map_err(|e| CliError::Io(e.to_string()))?;
        write_artifact(
            &common.output_dir,
            "trace.csv",
            &String::from_utf8(csv).expect("ascii csv"),
        )?;
        report
    } else {
        simulate(&scenario, seed, duration)?
    };
    print_sim_report(&report);
    if let Some(bins) = histogram {
        let mut csv = Vec::new();
        write_histogram_csv(&mut csv, &report, bins).map_err(|e| CliError::Io(e.to_string()))?;
        write_artifact(
            &common.output_dir,
            "offset_histogram.csv",
            &String::from_utf8(csv).expect("ascii csv"),
        )?;
    }
    Ok(())
}

fn sweep_chart(result: &SweepResult, title: &str, x_label: &str, x_scale: f64) -> String {
    let mut series = Vec::new();
    for class in 0..2 {
        for (name, pick) in [
            ("model", true),
            ("simulation", false),
        ] {
            let points: Vec<(f64, f64)> = result
                .rows
                .iter()
                .filter(|r| r.class_index == class)
                .map(|r| {
                    let y = if pick { r.model_bps } else { r.sim_mean_bps };
                    (r.variable_value as f64 * x_scale, mbps(y))
                })
                .collect();
            series.push(Series {
                name: format!("class {class} {name}"),
                points,
            });
        }
    }
    line_chart(title, x_label, "throughput [Mb/s]", &series)
}

fn write_sweep_outputs(
    common: &CommonArgs,
    result: &SweepResult,
    stem: &str,
    format: OutputFormat,
    title: &str,
    x_label: &str,
    x_scale: f64,
) -> Result<(), CliError> {
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, result).map_err(|e| CliError::Io(e.to_string()))?;
    write_artifact(
        &common.output_dir,
        &format!("{stem}.csv"),
        &String::from_utf8(csv).expect("ascii csv"),
    )?;
    if format == OutputFormat::SvgCsv {
        write_artifact(
            &common.output_dir,
            &format!("{stem}.svg"),
            &sweep_chart(result, title, x_label, x_scale),
        )?;
    }
    Ok(())
}

fn cmd_sweep(
    common: &CommonArgs,
    variable: Variable,
    values: Vec<u64>,
    runs: usize,
    cycles: u64,
    seed: u64,
    format: OutputFormat,
) -> Result<(), CliError> {
    let scenario = resolve_scenario(
        common.scenario.as_deref(),
        &common.overrides,
        &common.output_dir,
    )?;
    println!("scenario: {}", describe(&scenario));
    let mut spec = SweepSpec::new(scenario.config().clone(), variable.into(), values);
    spec.runs_per_point = runs;
    spec.run_duration = RunDuration::Cycles(cycles);
    spec.seed_base = seed;
    let result = run_sweep(&spec)?;
    for row in &result.rows {
        println!(
            "{}={:<6} class{}: model {:.3} Mb/s  sim {:.3} Mb/s (ci {})  err {:.2}%",
            result.variable.as_str(),
            row.variable_value,
            row.class_index,
            mbps(row.model_bps),
            mbps(row.sim_mean_bps),
            row.sim_ci95_bps
                .map(|c| format!("+-{:.3}", mbps(c)))
                .unwrap_or_else(|| "n/a".to_string()),
            row.pct_error
        );
    }
    let (x_label, x_scale) = match variable {
        Variable::N => ("total stations", 1.0),
        Variable::T => ("OFF period [ms]", 1e-3),
    };
    write_sweep_outputs(common, &result, "sweep", format, "throughput sweep", x_label, x_scale)
}

fn cmd_validate(
    common: &CommonArgs,
    threshold: f64,
    off_values: Vec<u64>,
    counts: Vec<u64>,
    runs: usize,
    cycles: u64,
    seed: u64,
) -> Result<(), CliError> {
    let scenario = resolve_scenario(
        common.scenario.as_deref(),
        &common.overrides,
        &common.output_dir,
    )?;
    println!("scenario: {}", describe(&scenario));
    let spec = ValidationSpec {
        base: scenario.config().clone(),
        off_values_us: off_values.clone(),
        station_counts: counts,
        runs_per_point: runs,
        run_duration: RunDuration::Cycles(cycles),
        seed_base: seed,
        threshold_pct: threshold,
    };
    let report = validate_model(&spec)?;
    for off in &off_values {
        println!(
            "OFF {:>6.1} ms: max error {:.2}%",
            ms(*off as f64),
            report.max_error_for_off(*off)
        );
    }
    let mut csv = Vec::new();
    write_validation_csv(&mut csv, &report).map_err(|e| CliError::Io(e.to_string()))?;
    write_artifact(
        &common.output_dir,
        "validation.csv",
        &String::from_utf8(csv).expect("ascii csv"),
    )?;
    println!(
        "max percentage error {:.2}% vs threshold {:.1}%: {}",
        report.max_pct_error,
        report.threshold_pct,
        if report.passed { "PASS" } else { "FAIL" }
    );
    Ok(())
}

fn cmd_figures(
    common: &CommonArgs,
    runs: usize,
    cycles: u64,
    seed: u64,
    format: OutputFormat,
) -> Result<(), CliError> {
    let scenario = resolve_scenario(
        common.scenario.as_deref(),
        &common.overrides,
        &common.output_dir,
    )?;
    let base = scenario.config().clone();
    let n_values: Vec<u64> = (2..=50).step_by(2).collect();

    println!("figure 2a: station-count sweep, OFF = ON = 40 ms");
    let mut spec = SweepSpec::new(base.clone(), SweepVariable::StationCountN, n_values.clone());
    spec.runs_per_point = runs;
    spec.run_duration = RunDuration::Cycles(cycles);
    spec.seed_base = seed;
    let fig2a = run_sweep(&spec)?;
    write_sweep_outputs(
        common,
        &fig2a,
        "fig2a",
        format,
        "per-class throughput vs stations (OFF = ON = 40 ms)",
        "total stations",
        1.0,
    )?;

    println!("figure 2b: OFF-period sweep at N = 30");
    let mut b = base.clone();
    b.classes[0].count = 15;
    b.classes[1].count = 15;
    let mut spec = SweepSpec::new(
        b,
        SweepVariable::OffPeriodT,
        vec![10_000, 20_000, 30_000, 40_000, 50_000],
    );
    spec.runs_per_point = runs;
    spec.run_duration = RunDuration::Cycles(cycles);
    spec.seed_base = seed;
    let fig2b = run_sweep(&spec)?;
    write_sweep_outputs(
        common,
        &fig2b,
        "fig2b",
        format,
        "per-class throughput vs OFF period (N = 30)",
        "OFF period [ms]",
        1e-3,
    )?;

    println!("figure 2c: station-count sweep with uniform TXOP");
    let mut c = base.clone();
    c.txop.limit_us = c
        .classes
        .iter()
        .map(|cl| cl.airtime_us)
        .max()
        .unwrap_or(0);
    let mut spec = SweepSpec::new(c, SweepVariable::StationCountN, n_values);
    spec.runs_per_point = runs;
    spec.run_duration = RunDuration::Cycles(cycles);
    spec.seed_base = seed;
    let fig2c = run_sweep(&spec)?;
    write_sweep_outputs(
        common,
        &fig2c,
        "fig2c",
        format,
        "per-class throughput vs stations (uniform TXOP)",
        "total stations",
        1.0,
    )?;

    println!("figure 1: per-offset collision probability, N = 30, OFF = ON = 1000 slots");
    for (label, airtime) in [("54mbps", 326u64), ("6mbps", 2_158u64)] {
        let mut cfg = base.clone();
        let slot = cfg.dcf.slot_us;
        cfg.classes = vec![coex_core::scenario::ClassSpec {
            count: 30,
            airtime_us: airtime,
            payload_bits: 12_000,
        }];
        cfg.interference.off_us = 1_000 * slot;
        cfg.interference.on_us = 1_000 * slot;
        cfg.txop.limit_us = 0;
        let scen = coex_core::scenario::validate(cfg)?;
        let duration = RunDuration::Cycles(cycles.max(2_000)).resolve(scen.interference());
        let report = simulate(&scen, seed, duration)?;
        let bins = report.offset_histogram.per_class[0].len();
        let mut csv = Vec::new();
        write_histogram_csv(&mut csv, &report, bins).map_err(|e| CliError::Io(e.to_string()))?;
        write_artifact(
            &common.output_dir,
            &format!("fig1_{label}.csv"),
            &String::from_utf8(csv).expect("ascii csv"),
        )?;
        if format == OutputFormat::SvgCsv {
            let points: Vec<(f64, f64)> = report.binned_collision_probability(bins)[0]
                .iter()
                .filter_map(|cell| cell.probability.map(|p| (cell.start_us as f64 / 1e3, p)))
                .collect();
            let chart = line_chart(
                &format!("conditional collision probability vs offset ({label})"),
                "offset in OFF period [ms]",
                "collision probability",
                &[Series {
                    name: label.to_string(),
                    points,
                }],
            );
            write_artifact(&common.output_dir, &format!("fig1_{label}.svg"), &chart)?;
        }
    }
    Ok(())
}
