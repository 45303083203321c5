use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use swimmer_core::controllability::ControllabilityReport;
use swimmer_core::scenario::{
    load_scenario, run_scenario, InitialConfig, Mode, RunReport, Scenario, ScenarioResult,
};

#[derive(Parser)]
#[command(
    name = "swimmer",
    version,
    about = "Bent three-link magnetic microswimmer scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenarios; each writes into <out>/<name>/.
    Simulate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Scenarios run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Sample D(alpha1, alpha2) on the scenario's grid.
    ScanDeterminant {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print A, B, K, the rank verdict and the determinant comparison.
    CheckControllability {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Load and validate scenario files without running them.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
}

fn load(path: &Path) -> Result<Scenario, i32> {
    load_scenario(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        e.exit_code()
    })
}

fn report_line(report: &RunReport, dir: &Path) -> String {
    let s = &report.summary;
    let mut line = format!(
        "{}: {:?}",
        s["scenario"].as_str().unwrap_or("?"),
        report.status
    );
    for key in [
        "t_stop_s",
        "tracking_error_um",
        "min_abs_d",
        "max_field_norm_uT",
    ] {
        if let Some(v) = s.get(key).and_then(|v| v.as_f64()) {
            line += &format!(" {key}={v:e}");
        }
    }
    line + &format!(" -> {}", dir.display())
}

fn simulate(paths: &[PathBuf], out: &Path, jobs: usize) -> i32 {
    let next = AtomicUsize::new(0);
    let codes = Mutex::new(vec![0; paths.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, paths.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = paths.get(i) else { break };
                let code = match load(path) {
                    Err(code) => code,
                    Ok(scenario) => {
                        let dir = out.join(&scenario.name);
                        match run_scenario(&scenario, &dir) {
                            Ok(report) => {
                                println!("{}", report_line(&report, &dir));
                                report.exit_code()
                            }
                            Err(e) => {
                                eprintln!("{}: {e}", path.display());
                                e.exit_code()
                            }
                        }
                    }
                };
                codes.lock().expect("no panics while held")[i] = code;
            });
        }
    });
    let codes = codes.into_inner().expect("threads joined");
    codes.into_iter().max().unwrap_or(0)
}

/// The same scenario reduced to an analysis mode.
fn analysis_variant(mut scenario: Scenario, mode: Mode) -> Scenario {
    let initial = scenario.initial_state();
    scenario.mode = mode;
    scenario.trajectory = None;
    scenario.field_program = None;
    scenario.initial = (mode == Mode::Controllability).then_some(InitialConfig {
        x_um: initial.x,
        y_um: initial.y,
        theta_rad: initial.theta,
        alpha1_rad: 0.0,
        alpha2_rad: scenario.params.alpha0_rad,
    });
    scenario
}

fn print_matrix(name: &str, rows: &[Vec<f64>]) {
    println!("{name} =");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>13.5e}")).collect();
        println!("  [{}]", cells.join(" "));
    }
}

fn print_controllability(r: &ControllabilityReport) {
    let e = &r.equilibrium;
    println!(
        "equilibrium (x, y, theta, alpha1, alpha2) = ({}, {}, {}, {}, {})",
        e.x, e.y, e.theta, e.alpha1, e.alpha2
    );
    print_matrix("A", &r.a);
    print_matrix("B", &r.b);
    print_matrix("K", &r.kalman);
    let p = &r.partial;
    println!(
        "rank of the first {} rows of K: {} -> {}",
        p.p,
        p.rank,
        if p.controllable {
            "partially controllable"
        } else {
            "NOT partially controllable"
        }
    );
    println!("singular values: {:?}", &p.singular_values[..p.p]);
    if r.first_row_zero {
        println!("first row of K is identically zero");
    }
    println!("closed-form determinant: {:e}", r.closed_form_determinant);
    println!("numeric determinant:     {:e}", r.numeric_determinant);
    match r.determinant_ratio() {
        Some(ratio) => println!("numeric / closed form:   {ratio:.12}"),
        None => println!("numeric / closed form:   undefined (closed form is zero)"),
    }
}

fn analyze(path: &Path, out: &Path, mode: Mode) -> i32 {
    let scenario = match load(path) {
        Ok(s) => analysis_variant(s, mode),
        Err(code) => return code,
    };
    let dir = out.join(&scenario.name);
    match run_scenario(&scenario, &dir) {
        Ok(report) => {
            match &report.result {
                ScenarioResult::Controllability(r) => print_controllability(r),
                ScenarioResult::DeterminantScan(scan) => {
                    println!("grid: {0} x {0}", scan.grid_n);
                    println!("D(0, 0) = {:e}", scan.d_origin);
                    println!(
                        "min |D| outside radius {} = {:e} at ({}, {})",
                        scan.exclusion_radius,
                        scan.min_abs_off_origin,
                        scan.argmin_off_origin.0,
                        scan.argmin_off_origin.1
                    );
                    println!("max |D| = {:e}", scan.max_abs);
                }
                _ => unreachable!("analysis modes only"),
            }
            println!("written to {}", dir.display());
            report.exit_code()
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            e.exit_code()
        }
    }
}

fn validate(paths: &[PathBuf]) -> i32 {
    let mut code = 0;
    for path in paths {
        match load(path) {
            Ok(s) => println!(
                "{}: ok ({}, {:?}, sha256 {})",
                path.display(),
                s.name,
                s.mode,
                s.hash()
            ),
            Err(c) => code = code.max(c),
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Simulate {
            scenarios,
            out,
            jobs,
        } => simulate(scenarios, out, *jobs),
        Command::ScanDeterminant { scenario, out } => analyze(scenario, out, Mode::DeterminantScan),
        Command::CheckControllability { scenario, out } => {
            analyze(scenario, out, Mode::Controllability)
        }
        Command::Validate { scenarios } => validate(scenarios),
    };
    ExitCode::from(code as u8)
}
