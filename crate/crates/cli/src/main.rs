//! `colombeau`: runs scenario pipelines and writes result tables.

mod scenario;
mod stages;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use scenario::{canonical, ConfigError, LoadedScenario, Stage};
use stages::{Check, Context};
use table::{emit_tables, Format, Provenance, ResultTable};

const EXIT_VERDICT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "colombeau", version, about = "Impulsive pp-wave computations in the Colombeau framework")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tensor identities and the Ricci closed form at random points.
    Curvature(RunArgs),
    /// Geodesics across the shock and their ε → 0 limit.
    Geodesic(RunArgs),
    /// Jacobi fields along a geodesic.
    Deviation(RunArgs),
    /// The coordinate change t_ε: limit map and constancy along geodesics.
    Transform(RunArgs),
    /// Rosen-form, Ricci and association-breaking shadows.
    Shadow(RunArgs),
    /// Strictness and δ-association of the mollifier net.
    VerifyDelta(RunArgs),
    /// Generalized-diffeomorphism checks for t_ε.
    VerifyDiffeo(RunArgs),
    /// Every stage listed in the scenario's `outputs`.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for randomized sampling; overrides `curvature.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn stages_for(command: &Command, loaded: &LoadedScenario) -> Vec<Stage> {
    match command {
        Command::Curvature(_) => vec![Stage::Curvature],
        Command::Geodesic(_) => vec![Stage::Geodesic],
        Command::Deviation(_) => vec![Stage::Deviation],
        Command::Transform(_) => vec![Stage::Transform],
        Command::Shadow(_) => vec![Stage::Shadow],
        Command::VerifyDelta(_) => vec![Stage::VerifyDelta],
        Command::VerifyDiffeo(_) => vec![Stage::VerifyDiffeo],
        Command::All(_) => {
            let mut s = loaded.scenario.outputs.clone();
            s.sort();
            s.dedup();
            s
        }
    }
}

fn provenance(loaded: &LoadedScenario) -> Provenance {
    let s = &loaded.scenario;
    let t = &s.tolerances;
    let tolerances = [
        ("identity", t.identity),
        ("ricci", t.ricci),
        ("association", t.association),
        ("deviation_fd", t.deviation_fd),
        ("geodesic_cross_check", colombeau::ppwave::geodesic::CROSS_CHECK_TOL),
        ("composition", colombeau::penrose::verify::COMPOSITION_TOL),
        ("det_decay_max_slope", colombeau::penrose::verify::DET_DECAY_MAX_SLOPE),
        ("det_floor", colombeau::penrose::verify::DET_FLOOR),
        ("macroscopic_limit", colombeau::penrose::limit::MACRO_TOL),
        ("constancy", colombeau::penrose::limit::CONSTANCY_TOL),
        ("pullback", colombeau::penrose::metric::PULLBACK_TOL),
        ("rosen_sup", colombeau::penrose::metric::ROSEN_SUP_TOL),
    ];
    Provenance {
        scenario: s.name.clone(),
        scenario_hash: hex::encode(Sha256::digest(canonical(&loaded.resolved).as_bytes())),
        schedule: s.schedule.epsilons.clone(),
        tolerances: tolerances.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

enum Status {
    Pass,
    Verdict,
    Numerical(String),
}

struct StageRecord {
    stage: Stage,
    status: Status,
    checks: Vec<Check>,
    tables: Vec<String>,
}

fn manifest(records: &[StageRecord], prov: &Provenance, exit: u8) -> String {
    let mut stages = Vec::new();
    for r in records {
        let (status, error) = match &r.status {
            Status::Pass => ("pass", serde_json::Value::Null),
            Status::Verdict => ("verdict_failure", serde_json::Value::Null),
            Status::Numerical(e) => ("numerical_failure", serde_json::Value::String(e.clone())),
        };
        let checks: Vec<serde_json::Value> = r
            .checks
            .iter()
            .map(|c| serde_json::json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
            .collect();
        stages.push(serde_json::json!({
            "stage": r.stage.name(),
            "status": status,
            "error": error,
            "checks": checks,
            "tables": r.tables,
        }));
    }
    let failures: Vec<serde_json::Value> = records
        .iter()
        .filter(|r| !matches!(r.status, Status::Pass))
        .map(|r| {
            let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            serde_json::json!({"stage": r.stage.name(), "failed_checks": failed, "error": match &r.status {
                Status::Numerical(e) => serde_json::Value::String(e.clone()),
                _ => serde_json::Value::Null,
            }})
        })
        .collect();
    let m = serde_json::json!({
        "scenario": prov.scenario,
        "scenario_hash": prov.scenario_hash,
        "exit_code": exit,
        "stages": stages,
        "failures": failures,
    });
    serde_json::to_string_pretty(&m).expect("serializable") + "\n"
}

fn run(command: Command) -> Result<u8, (u8, String)> {
    let args = match &command {
        Command::Curvature(a)
        | Command::Geodesic(a)
        | Command::Deviation(a)
        | Command::Transform(a)
        | Command::Shadow(a)
        | Command::VerifyDelta(a)
        | Command::VerifyDiffeo(a)
        | Command::All(a) => a,
    };
    let mut loaded = scenario::load(&args.config).map_err(|e| (EXIT_CONFIG, config_message(&e)))?;
    if let Some(seed) = args.seed {
        loaded.scenario.curvature.seed = seed;
        loaded.resolved["curvature"]["seed"] = seed.into();
    }
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err((EXIT_CONFIG, "--jobs: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| (EXIT_NUMERICAL, format!("thread pool: {e}")))?;
    }
    let prov = provenance(&loaded);
    let stages = stages_for(&command, &loaded);
    let ctx = Context::new(loaded.scenario.clone());
    let mut records = Vec::new();
    for stage in stages {
        let (status, checks, tables): (Status, Vec<Check>, Vec<ResultTable>) = match ctx.run(stage) {
            Ok(out) => {
                let ok = out.checks.iter().all(|c| c.passed);
                (if ok { Status::Pass } else { Status::Verdict }, out.checks, out.tables)
            }
            Err(e) => (Status::Numerical(e.to_string()), Vec::new(), Vec::new()),
        };
        write_tables(&tables, &args.out, args.format, &prov)?;
        for c in &checks {
            eprintln!("{} {}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, stage.name(), c.name, c.detail);
        }
        if let Status::Numerical(e) = &status {
            eprintln!("ERROR {}: {e}", stage.name());
        }
        records.push(StageRecord { stage, status, checks, tables: tables.iter().map(|t| t.name.clone()).collect() });
    }
    let exit = if records.iter().any(|r| matches!(r.status, Status::Numerical(_))) {
        EXIT_NUMERICAL
    } else if records.iter().any(|r| matches!(r.status, Status::Verdict)) {
        EXIT_VERDICT
    } else {
        0
    };
    let text = manifest(&records, &prov, exit);
    std::fs::write(args.out.join("manifest.json"), text).map_err(|e| (EXIT_NUMERICAL, format!("{}: {e}", args.out.display())))?;
    Ok(exit)
}

fn write_tables(tables: &[ResultTable], out: &Path, format: Format, prov: &Provenance) -> Result<(), (u8, String)> {
    emit_tables(tables, out, format, prov).map(|_| ()).map_err(|e| (EXIT_NUMERICAL, format!("{}: {e}", out.display())))
}

fn config_message(e: &ConfigError) -> String {
    format!("configuration error: {e}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
