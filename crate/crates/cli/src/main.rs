use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use stplan::sim::{ablate_sfc, ablate_ve, aggregate, presets, safety_suite, step_episode, Scenario, SimError};
use stplan::stsfc::SfcMode;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(name = "stplan", version, about = "Run planner episodes, suites and ablations and write CSV/JSON results.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Empty,
    StaticForest,
    DynamicTrefoil,
    DenseDynamic,
    NegativeControl,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML); takes precedence over --preset.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dynamic-trefoil")]
    preset: Preset,
    /// Obstacle count for the forest and trefoil presets.
    #[arg(long, default_value_t = 4)]
    count: usize,
    /// Agent speed limit for the dense preset (m/s).
    #[arg(long, default_value_t = 2.5)]
    v_max: f64,
    #[arg(long, value_enum, default_value = "stsfc")]
    sfc: Sfc,
    /// Scenario seed; overrides the value in the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Solve time-allocation factors sequentially in ascending order.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sfc {
    Stsfc,
    WorstCase,
}

impl From<Sfc> for SfcMode {
    fn from(s: Sfc) -> Self {
        match s {
            Sfc::Stsfc => SfcMode::Spatiotemporal,
            Sfc::WorstCase => SfcMode::WorstCase,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the selected scenario as a scenario file.
    Scenario {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// One episode: metrics.csv, metrics.json, trace.csv, timings.csv and grid.txt.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Episodes over consecutive seeds: one metrics.csv row each plus aggregates.
    Suite {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Branch and bound with and without variable elimination against enumeration.
    AblateVe {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 900)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Spatiotemporal versus worst-case corridors on the dense dynamic suite.
    AblateSfc {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, value_delimiter = ',', default_value = "2.5,5.0")]
        speeds: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Closed-loop episodes with every plan passed through the safety verifier.
    VerifySafety {
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 1000)]
        seed: u64,
        /// Obstacle speed over the assumed bound; above 1 runs the negative control.
        #[arg(long, default_value_t = 1.0)]
        speed_factor: f64,
        #[arg(long, default_value_t = 8)]
        motions: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(args: &ScenarioArgs, seed_offset: u64) -> Result<Scenario, CliError> {
    let mut s = match &args.scenario {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
            let mut s = Scenario::from_toml(&text)?;
            if let Some(seed) = args.seed {
                s.seed = seed;
            }
            s.seed += seed_offset;
            s
        }
        None => {
            let seed = args.seed.unwrap_or(0) + seed_offset;
            match args.preset {
                Preset::Empty => presets::empty(seed),
                Preset::StaticForest => presets::static_forest(seed, args.count),
                Preset::DynamicTrefoil => presets::dynamic_trefoil(seed, args.count),
                Preset::DenseDynamic => presets::dense_dynamic(seed, args.v_max, args.sfc.into()),
                Preset::NegativeControl => presets::negative_control(seed, 2.0),
            }
        }
    };
    if args.deterministic {
        s.planner.deterministic = true;
    }
    Ok(s)
}

fn out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_path_buf(), source })
}

fn write_csv<T: Serialize>(path: PathBuf, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| CliError::Io { path, source })?;
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").map_err(|source| CliError::Io { path, source })
}

fn run(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Scenario { scenario } => {
            print!("{}", load(&scenario, 0)?.to_toml());
            Ok(true)
        }
        Command::Run { scenario, out } => {
            let sc = load(&scenario, 0)?;
            out_dir(&out)?;
            let ep = step_episode(&sc, None)?;
            write_csv(out.join("metrics.csv"), std::slice::from_ref(&ep.metrics))?;
            write_json(out.join("metrics.json"), &aggregate(std::slice::from_ref(&ep.metrics)))?;
            write_csv(out.join("trace.csv"), &ep.trace)?;
            write_csv(out.join("timings.csv"), std::slice::from_ref(&ep.timings))?;
            fs::write(out.join("grid.txt"), ep.final_grid.to_text()).map_err(|source| CliError::Io { path: out.join("grid.txt"), source })?;
            let m = &ep.metrics;
            println!(
                "{} seed {}: success {} collisions {} t_trav {:.2} s l_path {:.2} m replans {} ({} failed)",
                m.scenario, m.seed, m.success, m.collisions, m.t_trav, m.l_path, m.replans, m.replan_failures
            );
            Ok(true)
        }
        Command::Suite { scenario, episodes, out } => {
            out_dir(&out)?;
            let (mut rows, mut times) = (Vec::new(), Vec::new());
            for i in 0..episodes {
                let ep = step_episode(&load(&scenario, i as u64)?, None)?;
                rows.push(ep.metrics);
                times.push(ep.timings);
            }
            let agg = aggregate(&rows);
            write_csv(out.join("metrics.csv"), &rows)?;
            write_csv(out.join("timings.csv"), &times)?;
            write_json(out.join("metrics.json"), &agg)?;
            for a in &agg {
                println!("{}: {} episodes, success {:.1}%, collisions {}", a.scenario, a.episodes, a.success_rate, a.collisions);
            }
            Ok(true)
        }
        Command::AblateVe { count, seed, out } => {
            out_dir(&out)?;
            let rows = ablate_ve(count, seed);
            write_csv(out.join("ve.csv"), &rows)?;
            let both: Vec<_> = rows.iter().filter(|r| r.feasible_ve && r.feasible_no_ve).collect();
            let mut t_ve: Vec<f64> = rows.iter().map(|r| r.t_ve_ms).collect();
            let mut t_no: Vec<f64> = rows.iter().map(|r| r.t_no_ve_ms).collect();
            t_ve.sort_by(f64::total_cmp);
            t_no.sort_by(f64::total_cmp);
            let summary = json!({
                "instances": rows.len(),
                "feasible": both.len(),
                "max_abs_dj": both.iter().map(|r| (r.j_ve - r.j_no_ve).abs()).fold(0.0, f64::max),
                "max_traj_gap_m": both.iter().map(|r| r.traj_gap).fold(0.0, f64::max),
                "bnb_enum_disagreements": rows.iter().filter(|r| r.feasible_ve != r.feasible_enum || (r.feasible_ve && (r.j_ve - r.j_enum).abs() > 1e-6)).count(),
                "median_ve_ms": t_ve.get(t_ve.len() / 2),
                "median_no_ve_ms": t_no.get(t_no.len() / 2),
            });
            println!("{summary}");
            write_json(out.join("metrics.json"), &summary)?;
            Ok(true)
        }
        Command::AblateSfc { seeds, speeds, out } => {
            out_dir(&out)?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let rows = ablate_sfc(&seeds, &speeds)?;
            write_csv(out.join("sfc.csv"), &rows)?;
            let mut summary = Vec::new();
            for v in &speeds {
                for mode in [SfcMode::Spatiotemporal, SfcMode::WorstCase] {
                    let g: Vec<_> = rows.iter().filter(|r| r.v_max == *v && r.mode == mode).collect();
                    let calls: usize = g.iter().map(|r| r.opt_calls).sum();
                    let entry = json!({
                        "v_max": v,
                        "mode": mode,
                        "success_rate": 100.0 * g.iter().filter(|r| r.success).count() as f64 / g.len().max(1) as f64,
                        "collisions": g.iter().map(|r| r.collisions).sum::<usize>(),
                        "t_per_opt_ms": g.iter().map(|r| r.t_per_opt_mean * r.opt_calls as f64).sum::<f64>() / calls.max(1) as f64,
                        "opt_calls": calls,
                        "t_solve_ms": g.iter().map(|r| r.t_solve_mean).sum::<f64>() / g.len().max(1) as f64,
                    });
                    println!("{entry}");
                    summary.push(entry);
                }
            }
            write_json(out.join("metrics.json"), &summary)?;
            Ok(true)
        }
        Command::VerifySafety { episodes, seed, speed_factor, motions, out } => {
            if !(speed_factor > 0.0) {
                return Err(CliError::Usage(format!("speed factor must be positive, got {speed_factor}")));
            }
            out_dir(&out)?;
            let s = safety_suite(episodes, seed, speed_factor, motions)?;
            write_json(out.join("metrics.json"), &s)?;
            let violations = s.collisions + s.verifier.total();
            println!(
                "{} episodes ({} reached goal), {} plans verified, {} collisions, {} verifier violations",
                s.episodes, s.successes, s.plans_verified, s.collisions, s.verifier.total()
            );
            // Inside the bound any violation is a failure; the negative control is expected to show some.
            Ok(if speed_factor <= 1.0 { violations == 0 } else { violations > 0 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
