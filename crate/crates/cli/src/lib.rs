//! Command-line experiment runner for evolving sparse linear functions.
//!
//! Subcommands: `run`, `sweep-n`, `verify-claims`, `theory-params`,
//! `omp-compare`. Any trailing `--key=value` (or `--section.key=value`) that
//! is not a recognized flag overrides the config file.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use evolvolin_core::oracles::ClaimId;

use crate::commands::{
    cmd_omp_compare, cmd_run, cmd_sweep, cmd_verify_claims, theory_table, ClaimSuiteSettings,
};
use crate::config::{ConfigError, RunConfig, SEED_ENV};

#[derive(Debug, Parser)]
#[command(name = "evolvolin", version, about = "Evolve sparse linear functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Overrides collected from unrecognized `--key=value` arguments.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run seeded trials and write per-trial traces plus a summary.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Write an SVG plot of loss against generation.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Export one sample batch of trial 0 to this CSV.
        #[arg(long)]
        export_sample: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        sample_size: usize,
    },
    /// Success rate and median generations over a list of dimensions.
    SweepN {
        #[command(flatten)]
        common: Common,
        /// Comma-separated dimensions; defaults to `run.n_list`.
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Separate CSV with wall-clock seconds per dimension.
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Check the loss-decrease claims and the coordinate-bound lemma on seeded instances.
    VerifyClaims {
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 1000)]
        lemma_instances: usize,
        /// Master seed; the environment variable EVOLVOLIN_SEED takes precedence.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict to these claims (apple, banana, cantaloupe, date, elderberry).
        #[arg(long, value_delimiter = ',')]
        claim: Vec<String>,
        /// Double every required decrease, which must make the suite fail.
        #[arg(long)]
        inject_bug: bool,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the theoretical constants for the configured problem.
    TheoryParams {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the evolved support with population OMP.
    OmpCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "omp.csv")]
        out: PathBuf,
    },
}

const KNOWN_FLAGS: &[&str] = &[
    "config",
    "jobs",
    "set",
    "out",
    "plot",
    "export-sample",
    "sample-size",
    "n-list",
    "timing",
    "instances",
    "lemma-instances",
    "seed",
    "claim",
    "inject-bug",
    "help",
    "version",
];

/// Rewrites unrecognized `--key=value` arguments as `--set key=value`.
fn route_overrides(args: Vec<OsString>) -> Vec<OsString> {
    let mut out = Vec::with_capacity(args.len());
    for arg in args {
        let routed = arg.to_str().and_then(|s| {
            let body = s.strip_prefix("--")?;
            let (key, _) = body.split_once('=')?;
            (!KNOWN_FLAGS.contains(&key)).then(|| body.to_string())
        });
        match routed {
            Some(kv) => {
                out.push("--set".into());
                out.push(kv.into());
            }
            None => out.push(arg),
        }
    }
    out
}

fn load(common: &Common) -> Result<RunConfig, ConfigError> {
    RunConfig::load(&common.config, &common.overrides)
}

/// Exit code for configuration problems and unusable arguments.
pub const EXIT_CONFIG: i32 = 2;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = route_overrides(args.into_iter().map(Into::into).collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Run {
            common,
            out,
            plot,
            export_sample,
            sample_size,
        } => {
            let cfg = load(&common)?;
            let trials = cmd_run(
                &cfg,
                &out,
                common.jobs,
                plot.as_deref(),
                export_sample.as_deref().map(|p| (p, sample_size)),
            )?;
            let ok = trials.iter().filter(|t| t.succeeded()).count();
            let bot = trials
                .iter()
                .filter(|t| t.trace.status == evolvolin_core::framework::RunStatus::Bot)
                .count();
            eprintln!(
                "{} trials: {ok} reached epsilon, {bot} ended in BOT; output in {}",
                trials.len(),
                out.display()
            );
            Ok(if bot == trials.len() { 1 } else { 0 })
        }
        Command::SweepN {
            common,
            n_list,
            out,
            timing,
        } => {
            let cfg = load(&common)?;
            let list = if n_list.is_empty() {
                cfg.run.n_list.clone()
            } else {
                n_list
            };
            if list.is_empty() {
                return Err(ConfigError::Invalid(
                    "no dimensions: set --n-list or run.n_list".into(),
                )
                .into());
            }
            let rows = cmd_sweep(&cfg, &list, &out, timing.as_deref(), common.jobs)?;
            for r in rows {
                eprintln!(
                    "n={:<6} success {}/{}  median generations {}",
                    r.n,
                    r.successes,
                    r.trials,
                    r.median_generations.map_or("-".into(), |g| g.to_string())
                );
            }
            Ok(0)
        }
        Command::VerifyClaims {
            instances,
            lemma_instances,
            seed,
            claim,
            inject_bug,
            jobs,
            out,
        } => {
            let master_seed = match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| ConfigError::Invalid(format!("{SEED_ENV}={v} is not a u64")))?,
                Err(_) => seed,
            };
            let claims = if claim.is_empty() {
                ClaimId::ALL.to_vec()
            } else {
                claim
                    .iter()
                    .map(|c| {
                        ClaimId::parse(c)
                            .ok_or_else(|| ConfigError::Invalid(format!("unknown claim `{c}`")))
                    })
                    .collect::<Result<_, _>>()?
            };
            let settings = ClaimSuiteSettings {
                claims,
                instances,
                lemma_instances,
                master_seed,
                factor: if inject_bug { 2.0 } else { 1.0 },
                jobs,
            };
            let summary = match &out {
                Some(path) => {
                    let file = std::fs::File::create(path)?;
                    cmd_verify_claims(&settings, std::io::BufWriter::new(file))?
                }
                None => cmd_verify_claims(&settings, std::io::stdout().lock())?,
            };
            for t in &summary.tallies {
                eprintln!(
                    "{:<10} pass {:>5}  fail {:>5}  skipped {:>5}  starved {:>5}  min margin {:.3e}",
                    t.claim.as_str(),
                    t.passed,
                    t.failed,
                    t.skipped,
                    t.starved,
                    t.min_margin
                );
            }
            eprintln!(
                "lemma1     pass {:>5}  fail {:>5}",
                summary.lemma_instances - summary.lemma_failures,
                summary.lemma_failures
            );
            Ok(summary.exit_code())
        }
        Command::TheoryParams { common } => {
            let cfg = load(&common)?;
            print!("{}", theory_table(&cfg)?);
            Ok(0)
        }
        Command::OmpCompare { common, out } => {
            let cfg = load(&common)?;
            let rows = cmd_omp_compare(&cfg, &out, common.jobs)?;
            let matched = rows.iter().filter(|r| r.matches()).count();
            eprintln!(
                "{matched}/{} evolved supports equal the OMP support",
                rows.len()
            );
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flags_become_overrides() {
        let args: Vec<OsString> = [
            "evolvolin",
            "run",
            "--config=a.toml",
            "--n=5",
            "--problem.k=2",
        ]
        .into_iter()
        .map(Into::into)
        .collect();
        let routed: Vec<String> = route_overrides(args)
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(
            routed,
            [
                "evolvolin",
                "run",
                "--config=a.toml",
                "--set",
                "n=5",
                "--set",
                "problem.k=2"
            ]
        );
    }

    #[test]
    fn bad_arguments_exit_with_config_code() {
        assert_eq!(run_cli(["evolvolin", "run"]), EXIT_CONFIG);
        assert_eq!(
            run_cli([
                "evolvolin",
                "theory-params",
                "--config",
                "/nonexistent.toml"
            ]),
            EXIT_CONFIG
        );
    }
}
