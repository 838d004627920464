use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use storesim::error::{ConfigError, RunError};
use storesim::experiments::{
    calibrate_parameter, run_scenario, sensitivity_sweep, RunPlan, Scenario, SweepParam,
};
use storesim::io::{
    bundled_config, load_config, measures_to_csv, parse_config, report_schema, ReportDocument,
};
use storesim::metrics::{MeasureStat, LEAVE_NOT_WAITING_TO_PAY, TRANSACTIONS};
use storesim::model::{Department, DepartmentConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CALIBRATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "storesim",
    version,
    about = "Retail department simulation with proactive staff"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report.
    Run {
        #[command(flatten)]
        common: Common,
        /// JSON report path; the CSV and schema go next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario once per grid value of a proactivity parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        param: ParamArg,
        /// Comma-separated values, e.g. 1,2,3,4
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Directory for the per-point reports.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the parameter value whose mean weekly transactions hit a target.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "queue-length")]
        param: ParamArg,
        /// Target mean weekly transactions.
        #[arg(long)]
        target: f64,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        /// Relative tolerance on the target.
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration file.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "atv")]
        department: DeptArg,
    },
    /// Print a bundled configuration.
    ShowConfig {
        #[arg(long, value_enum, default_value = "atv")]
        department: DeptArg,
    },
    /// Rerun a JSON report from its embedded provenance and compare.
    Regenerate { report: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Config file; defaults to the bundled config of --department.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "atv")]
    department: DeptArg,
    #[arg(long, default_value = "d")]
    scenario: String,
    #[arg(long, default_value_t = 52)]
    weeks: u32,
    #[arg(long, default_value_t = 20)]
    reps: u32,
    #[arg(long, env = "STORESIM_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeptArg {
    Atv,
    Ww,
}

impl From<DeptArg> for Department {
    fn from(d: DeptArg) -> Self {
        match d {
            DeptArg::Atv => Department::Atv,
            DeptArg::Ww => Department::Ww,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    QueueLength,
    MaxCustomers,
    StopStrategy,
}

impl From<ParamArg> for SweepParam {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::QueueLength => SweepParam::QueueLength,
            ParamArg::MaxCustomers => SweepParam::MaxCustomers,
            ParamArg::StopStrategy => SweepParam::StopStrategy,
        }
    }
}

enum Failure {
    Usage(String),
    Config(String),
    Calibration(String),
    Other(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => Failure::Config(c.to_string()),
            RunError::Plan(m) => Failure::Usage(m),
            e @ RunError::Uncalibratable { .. } => Failure::Calibration(e.to_string()),
            e @ RunError::Model(_) => Failure::Other(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Config(m) => (EXIT_CONFIG, m),
                Failure::Calibration(m) => (EXIT_CALIBRATION, m),
                Failure::Other(m) => (EXIT_USAGE, m),
            };
            eprintln!("storesim: {msg}");
            ExitCode::from(code)
        }
    }
}

fn config_for(path: Option<&Path>, dept: DeptArg) -> Result<DepartmentConfig, Failure> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(parse_config(bundled_config(dept.into()))?),
    }
}

fn plan_for(c: &Common) -> Result<(DepartmentConfig, RunPlan), Failure> {
    let cfg = config_for(c.config.as_deref(), c.department)?;
    let scenario = Scenario::from_label(&c.scenario).ok_or_else(|| {
        Failure::Usage(format!(
            "unknown scenario {:?}, expected a, b, c or d",
            c.scenario
        ))
    })?;
    let mut plan = RunPlan::new(scenario, c.seed);
    plan.weeks = c.weeks;
    plan.replications = c.reps;
    Ok((cfg, plan))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

/// Writes `<out>` (JSON), `<out>.csv` and `<out>.schema.json`.
fn write_report(out: &Path, doc: &ReportDocument) -> Result<(), Failure> {
    write(out, &doc.to_json())?;
    write(&out.with_extension("csv"), &measures_to_csv(&doc.measures))?;
    let schema = serde_json::to_string_pretty(&report_schema()).expect("schema serialises");
    write(&out.with_extension("schema.json"), &(schema + "\n"))
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into())
}

fn print_measures(measures: &[MeasureStat]) {
    println!("{:>3}  {:<40} {:>12} {:>10}", "id", "measure", "mean", "sd");
    for m in measures {
        println!(
            "{:>3}  {:<40} {:>12} {:>10}",
            m.id,
            m.name,
            fmt(m.mean),
            fmt(m.sd)
        );
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { common, out } => {
            let (cfg, plan) = plan_for(&common)?;
            let run = run_scenario(&cfg, &plan)?;
            let doc = ReportDocument::new(&cfg, &run.report);
            println!(
                "scenario {} rota {} proactive {} weeks {} reps {} seed {}",
                common.scenario,
                run.report.rota,
                plan.scenario.proactive,
                plan.weeks,
                plan.replications,
                plan.base_seed
            );
            print_measures(&doc.measures);
            if let Some(s) = &doc.sufficiency {
                println!(
                    "replications: {} (half-width/mean {:.4}, {} needed)",
                    if s.sufficient {
                        "sufficient"
                    } else {
                        "insufficient"
                    },
                    s.ratio,
                    s.required_n
                );
            }
            if let Some(out) = out {
                write_report(&out, &doc)?;
            }
            Ok(())
        }
        Command::Sweep {
            common,
            param,
            grid,
            out,
        } => {
            let (cfg, plan) = plan_for(&common)?;
            let points = sensitivity_sweep(&cfg, &plan, param.into(), &grid)?;
            println!(
                "{:>8} {:>14} {:>10} {:>22}",
                "value", "transactions", "sd", "% leave not waiting pay"
            );
            for (x, run) in &points {
                let m = &run.report.measures;
                println!(
                    "{:>8} {:>14} {:>10} {:>22}",
                    x,
                    fmt(m[TRANSACTIONS].mean),
                    fmt(m[TRANSACTIONS].sd),
                    fmt(m[LEAVE_NOT_WAITING_TO_PAY].mean)
                );
                if let Some(dir) = &out {
                    let doc = ReportDocument::new(&cfg, &run.report);
                    write_report(&dir.join(format!("point-{x}.json")), &doc)?;
                }
            }
            Ok(())
        }
        Command::Calibrate {
            common,
            param,
            target,
            lo,
            hi,
            tol,
            out,
        } => {
            let (cfg, plan) = plan_for(&common)?;
            let cal = calibrate_parameter(&cfg, &plan, param.into(), target, (lo, hi), tol)?;
            println!("{:>10} {:>14}", "value", "transactions");
            for (x, y) in &cal.evaluations {
                println!("{x:>10.4} {y:>14.2}");
            }
            println!(
                "calibrated value {:.4} gives {:.2} against target {:.2} ({})",
                cal.value,
                cal.simulated,
                cal.target,
                if cal.converged {
                    "within tolerance"
                } else {
                    "bracket exhausted"
                }
            );
            if let Some(out) = out {
                let text = serde_json::to_string_pretty(&cal).expect("calibration serialises");
                write(&out, &(text + "\n"))?;
            }
            Ok(())
        }
        Command::Validate { config, department } => {
            let cfg = config_for(config.as_deref(), department)?;
            println!(
                "ok: {:?} config, {} expected customers per week",
                cfg.department,
                cfg.expected_weekly_customers().round()
            );
            Ok(())
        }
        Command::ShowConfig { department } => {
            print!("{}", bundled_config(department.into()));
            Ok(())
        }
        Command::Regenerate { report } => {
            let text = std::fs::read_to_string(&report)
                .map_err(|e| Failure::Usage(format!("{}: {e}", report.display())))?;
            let doc = ReportDocument::from_json(&text)?;
            let again = doc.regenerate()?;
            if again.to_json() == text {
                println!("identical");
                Ok(())
            } else {
                Err(Failure::Other("regenerated report differs".into()))
            }
        }
    }
}
