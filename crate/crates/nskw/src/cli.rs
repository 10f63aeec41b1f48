//! Command-line front end.
//!
//! Exit codes are a stable contract:
//! `0` ok, `2` usage/schema error, `3` uncovered regime, `4` failed
//! verdict, `5` aborted run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::experiments::{
    self, refinement_study, sweep, write_sweep_csv, MmsKind, SweepMode,
};
use crate::model;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_UNCOVERED: i32 = 3;
pub const EXIT_FAILED_VERDICT: i32 = 4;
pub const EXIT_ABORTED: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "nskw",
    version,
    about = "1D nonisothermal Navier-Stokes-Korteweg laboratory in Lagrangian coordinates"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Echo resolved configurations and extra progress detail.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a parameter tuple against the covered regimes.
    Classify(ClassifyArgs),
    /// Run a scenario and apply its checks.
    Run(RunArgs),
    /// Run a parameter sweep over a base scenario.
    Sweep(SweepArgs),
    /// Manufactured-solution convergence study of the discretization.
    Verify(VerifyArgs),
    /// Emit plot scripts for a diagnostics CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 1.4)]
    gamma: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the manifest, snapshots, and diagnostics.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dotted-key overrides applied to the config, e.g. time.t_end=2.5.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Sweep axis, e.g. --axis params.beta=-2.2,-2.5,-3.5 (repeatable).
    #[arg(long = "axis", value_name = "KEY=V1,V2,...")]
    axes: Vec<String>,
    /// Zip equal-length axes into matched tuples instead of crossing them.
    #[arg(long)]
    zip: bool,
    /// Largest admissible number of sweep points.
    #[arg(long, default_value_t = 256)]
    cap: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Optional base scenario; defaults to a built-in verification setup.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "128,256,512", value_delimiter = ',')]
    resolutions: Vec<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Minimal acceptable convergence order.
    #[arg(long, default_value_t = 1.8)]
    min_order: f64,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Diagnostics CSV produced by `nskw run`.
    csv: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Parse arguments and execute; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses 0 for --help/--version and 2 for usage errors.
            let code = if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Classify(a) => cmd_classify(&a),
        Command::Run(a) => cmd_run(&a, cli.verbose),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Plot(a) => cmd_plot(&a),
    }
}

fn cmd_classify(a: &ClassifyArgs) -> i32 {
    let t11 = model::classify_thm11(a.alpha, a.beta, a.lambda);
    let t12 = model::classify_thm12(a.alpha, a.beta);

    println!(
        "alpha = {}, beta = {}, lambda = {}, gamma = {}",
        a.alpha, a.beta, a.lambda, a.gamma
    );
    if t11.is_some() {
        println!(
            "Thm 1.1: case ({}); lambda >= 1: {}",
            t11.case_label,
            if t11.lambda_ok { "satisfied" } else { "NOT satisfied" }
        );
    } else {
        println!("Thm 1.1: no case matches");
    }
    if t12.is_some() {
        println!(
            "Thm 1.2: case ({}); requires gamma - 1 small (here gamma - 1 = {})",
            t12.case_label,
            a.gamma - 1.0
        );
    } else {
        println!("Thm 1.2: no case matches");
    }
    println!("g(alpha, beta) = {}", model::g_func(a.alpha, a.beta));
    match model::f_func(a.beta) {
        Ok(f) => println!("f(beta) = {f}"),
        Err(_) => println!("f(beta) undefined (beta outside [-5, -2])"),
    }

    let covered = (t11.is_some() && t11.lambda_ok) || t12.is_some();
    if covered {
        println!("covered regime: yes");
        EXIT_OK
    } else {
        println!("no covered regime");
        EXIT_UNCOVERED
    }
}

fn load_with_overrides(
    config: &Path,
    overrides: &[String],
) -> Result<experiments::Scenario, String> {
    let text = fs::read_to_string(config).map_err(|e| format!("{}: {e}", config.display()))?;
    let mut doc: Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", config.display()))?;
    experiments::apply_overrides(&mut doc, overrides).map_err(|e| e.to_string())?;
    experiments::scenario_from_value(doc).map_err(|e| e.to_string())
}

fn cmd_run(a: &RunArgs, verbose: bool) -> i32 {
    let scenario = match load_with_overrides(&a.config, &a.set) {
        Ok(sc) => sc,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_SCHEMA;
        }
    };
    if verbose {
        println!(
            "resolved scenario:\n{}",
            serde_json::to_string_pretty(&scenario).unwrap()
        );
    }
    let (result, verdicts) = match experiments::run_scenario(&scenario, &a.out) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SCHEMA;
        }
    };
    println!(
        "run '{}': {} steps, {} rejects, status {}",
        scenario.name,
        result.steps,
        result.rejects,
        if result.completed() { "completed" } else { "aborted" }
    );
    for v in &verdicts {
        println!(
            "  [{}] {}: measured {:.3e} (tolerance {:.3e}) — {}",
            if v.pass { "pass" } else { "FAIL" },
            v.check,
            v.measured,
            v.tolerance,
            v.context
        );
    }
    println!("artifacts in {}", a.out.display());
    if !result.completed() {
        return EXIT_ABORTED;
    }
    if verdicts.iter().any(|v| !v.pass) {
        return EXIT_FAILED_VERDICT;
    }
    EXIT_OK
}

fn parse_axes(raw: &[String]) -> Result<BTreeMap<String, Vec<Value>>, String> {
    let mut axes = BTreeMap::new();
    for item in raw {
        let (key, values) = item
            .split_once('=')
            .ok_or_else(|| format!("axis '{item}' is not of the form key=v1,v2,..."))?;
        let parsed: Vec<Value> = values
            .split(',')
            .map(|tok| {
                serde_json::from_str(tok).unwrap_or_else(|_| Value::String(tok.to_string()))
            })
            .collect();
        if parsed.is_empty() {
            return Err(format!("axis '{key}' has no values"));
        }
        axes.insert(key.to_string(), parsed);
    }
    Ok(axes)
}

/// Worker cap for sweeps: `NSKW_THREADS` if set, otherwise the machine's
/// available parallelism.
fn sweep_threads() -> usize {
    match std::env::var("NSKW_THREADS") {
        Ok(s) => s.parse().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}

fn cmd_sweep(a: &SweepArgs) -> i32 {
    let base = match load_with_overrides(&a.config, &[]) {
        Ok(sc) => sc,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_SCHEMA;
        }
    };
    let axes = match parse_axes(&a.axes) {
        Ok(axes) if !axes.is_empty() => axes,
        Ok(_) => {
            eprintln!("error: sweep needs at least one --axis");
            return EXIT_SCHEMA;
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_SCHEMA;
        }
    };
    let mode = if a.zip { SweepMode::Zip } else { SweepMode::Cross };
    let rows = match sweep(&base, &axes, mode, a.cap, &a.out, sweep_threads()) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SCHEMA;
        }
    };
    let path = a.out.join("sweep.csv");
    let mut buf = Vec::new();
    if let Err(e) = write_sweep_csv(&rows, &mut buf).and_then(|_| fs::write(&path, buf)) {
        eprintln!("error: {e}");
        return EXIT_SCHEMA;
    }
    let completed = rows.iter().filter(|r| r.completed).count();
    println!(
        "sweep: {} points, {} completed; table at {}",
        rows.len(),
        completed,
        path.display()
    );
    EXIT_OK
}

fn built_in_verify_scenario() -> experiments::Scenario {
    let doc = serde_json::json!({
        "name": "mms_verify",
        "params": {"alpha": 0.0, "beta": -2.0, "lambda": 1.0,
                   "gamma": 1.4, "R": 1.0, "A": 1.0},
        "grid": {"L": 10.0, "N": 128},
        "initial": {"kind": "gaussian",
                    "amplitudes": {"v": 0.0, "u": 0.0, "theta": 0.0, "width": 1.0},
                    "seed": 1,
                    "bounds": {"v_lo": 0.5, "v_hi": 2.0, "theta_lo": 0.5, "theta_hi": 2.0}},
        "time": {"t_end": 0.25, "cfl": 0.8, "dt_max": 0.01, "dt_min": 1e-12,
                 "record_every": 0.25},
        "checks": {}
    });
    experiments::scenario_from_value(doc).expect("built-in scenario is valid")
}

fn cmd_verify(a: &VerifyArgs) -> i32 {
    let base = match &a.config {
        Some(path) => match load_with_overrides(path, &[]) {
            Ok(sc) => sc,
            Err(msg) => {
                eprintln!("error: {msg}");
                return EXIT_SCHEMA;
            }
        },
        None => built_in_verify_scenario(),
    };
    let report = match refinement_study(&base, &a.resolutions, MmsKind::Standard) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SCHEMA;
        }
    };
    println!("N        err_v        err_u        err_theta");
    for (i, &n) in report.resolutions.iter().enumerate() {
        println!(
            "{:<8} {:<12.4e} {:<12.4e} {:<12.4e}",
            n, report.errors_v[i], report.errors_u[i], report.errors_theta[i]
        );
    }
    println!(
        "orders: v {:.3}, u {:.3}, theta {:.3}",
        report.order_v, report.order_u, report.order_theta
    );

    if let Err(e) = fs::create_dir_all(&a.out).and_then(|_| {
        fs::write(
            a.out.join("verify.json"),
            serde_json::json!({
                "resolutions": report.resolutions,
                "errors": {"v": report.errors_v, "u": report.errors_u,
                            "theta": report.errors_theta},
                "orders": {"v": report.order_v, "u": report.order_u,
                            "theta": report.order_theta},
            })
            .to_string(),
        )
    }) {
        eprintln!("error: {e}");
        return EXIT_SCHEMA;
    }

    if report.min_order() >= a.min_order {
        println!("convergence order >= {}: pass", a.min_order);
        EXIT_OK
    } else {
        println!("convergence order below {}: FAIL", a.min_order);
        EXIT_FAILED_VERDICT
    }
}

/// Column-name lookup for the gnuplot scripts; panels address columns by
/// header name, so only presence is validated, not order.
fn cmd_plot(a: &PlotArgs) -> i32 {
    let text = match fs::read_to_string(&a.csv) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", a.csv.display());
            return EXIT_SCHEMA;
        }
    };
    let mut lines = text.lines();
    let header = match lines.next() {
        Some(h) => h,
        None => {
            eprintln!("error: {} is empty", a.csv.display());
            return EXIT_SCHEMA;
        }
    };
    let present: Vec<&str> = header.split(',').collect();
    for col in crate::diagnostics::DIAGNOSTICS_COLUMNS {
        if !present.contains(&col) {
            eprintln!("error: diagnostics CSV is missing column '{col}'");
            return EXIT_SCHEMA;
        }
    }
    let rows = lines.count();
    if rows == 0 {
        eprintln!("warning: {} has a header but no rows", a.csv.display());
    }

    if let Err(e) = fs::create_dir_all(&a.out) {
        eprintln!("error: {e}");
        return EXIT_SCHEMA;
    }
    let csv_ref = relative_to(&a.csv, &a.out);

    let panels: [(&str, &str); 3] = [
        (
            "energy_ledger.gp",
            "set title 'Energy ledger'\n\
             set ylabel 'energy'\n\
             plot csv using 't':'E_entropy' with lines title 'E_entropy', \\\n\
                  csv using 't':'E_capillary' with lines title 'E_capillary', \\\n\
                  csv using 't':'D_cum' with lines title 'D_cum', \\\n\
                  csv using 't':'balance_residual' with lines title 'balance residual'\n",
        ),
        (
            "bounds_floors.gp",
            "set title 'Pointwise bounds vs floors'\n\
             set ylabel 'value'\n\
             plot csv using 't':'v_min' with lines title 'v_min', \\\n\
                  csv using 't':'v_max' with lines title 'v_max', \\\n\
                  csv using 't':'theta_min' with lines title 'theta_min', \\\n\
                  csv using 't':'theta_max' with lines title 'theta_max', \\\n\
                  csv using 't':'theta_floor' with lines title 'theta floor'\n",
        ),
        (
            "decay.gp",
            "set title 'Decay metric'\n\
             set ylabel 'sup |(v-1, u, theta-1)|'\n\
             set logscale y\n\
             plot csv using 't':'decay_sup' with lines title 'decay_sup'\n",
        ),
    ];

    for (name, body) in panels {
        let script = format!(
            "# gnuplot script emitted by nskw plot\n\
             csv = '{csv_ref}'\n\
             set datafile separator ','\n\
             set key autotitle columnhead\n\
             set xlabel 't'\n\
             {body}"
        );
        if let Err(e) = fs::write(a.out.join(name), script) {
            eprintln!("error: {e}");
            return EXIT_SCHEMA;
        }
    }
    println!(
        "wrote energy_ledger.gp, bounds_floors.gp, decay.gp to {}",
        a.out.display()
    );
    EXIT_OK
}

/// Express `target` relative to `base` when both share a prefix; falls back
/// to the original path otherwise.
fn relative_to(target: &Path, base: &Path) -> String {
    let t = target.canonicalize().unwrap_or_else(|_| target.to_path_buf());
    let b = base.canonicalize().unwrap_or_else(|_| base.to_path_buf());
    let t_parts: Vec<_> = t.components().collect();
    let b_parts: Vec<_> = b.components().collect();
    let common = t_parts
        .iter()
        .zip(&b_parts)
        .take_while(|(a, b)| a == b)
        .count();
    if common == 0 {
        return target.display().to_string();
    }
    let mut rel = PathBuf::new();
    for _ in common..b_parts.len() {
        rel.push("..");
    }
    for part in &t_parts[common..] {
        rel.push(part);
    }
    rel.display().to_string()
}
