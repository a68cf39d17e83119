//! Batch front end: scenario runs, verification campaigns, parameter
//! sweeps, oracle self-tests, and snapshot resume.
//!
//! Exit codes: 0 all verdicts pass / run completed; 1 usage or schema
//! error; 2 at least one check failed; 3 blowup-flag termination.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fks_core::experiments::{
    apply_override, explore_subcritical, resume_scenario, run_oracle_battery,
    run_scenario_with_overrides, sweep_resolution, sweep_viscosity, verify_theorem1,
    verify_theorem3, verify_theorem_rlarge, CampaignResult, CheckStatus, ScenarioSpec, Verdict,
    DEFAULT_EPS_LIST, DEFAULT_N_LIST,
};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_BLOWUP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fks",
    version,
    about = "Pseudo-spectral solver and estimate-verification harness for a 1D periodic chemotaxis model with semilinear nonlocal diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario JSON document (schema version 1).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to $FKS_OUT/<name> or ./out/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-path override, e.g. --set params.r=1.5 (repeatable).
    #[arg(long = "set")]
    set: Vec<String>,
    /// Worker threads for sweeps (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the random-initial-condition seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario with the checks it declares.
    Run(CommonArgs),
    /// Run a verification campaign (gates plus its forced check set).
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Which claim to verify.
        #[arg(long)]
        theorem: Theorem,
    },
    /// Parameter sweeps over viscosity, resolution, or the subcritical
    /// (alpha, r) grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        kind: SweepKind,
        /// Comma-separated viscosities (viscosity sweep).
        #[arg(long)]
        eps_list: Option<String>,
        /// Comma-separated grid sizes (resolution sweep).
        #[arg(long)]
        n_list: Option<String>,
        /// Comma-separated diffusion orders (subcritical sweep).
        #[arg(long)]
        alpha_list: Option<String>,
        /// Comma-separated logistic rates (subcritical sweep).
        #[arg(long)]
        r_list: Option<String>,
    },
    /// Run the operator/identity self-test battery.
    Oracle,
    /// Continue a persisted run from its last snapshot.
    Resume {
        /// Directory written by a previous run/verify invocation.
        #[arg(long)]
        from: PathBuf,
        /// Output directory for the continued run.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Theorem {
    #[value(name = "1")]
    One,
    #[value(name = "rlarge")]
    RLarge,
    #[value(name = "corollary")]
    Corollary,
    #[value(name = "3")]
    Three,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Viscosity,
    Resolution,
    Subcritical,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                // --help / --version
                EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run(common) => {
            let (spec, outdir, overrides) = load_scenario(&common)?;
            init_pool(common.jobs)?;
            let result = run_scenario_with_overrides(&spec, Some(&outdir), &overrides)?;
            print_result(&result, &outdir);
            Ok(exit_code_for(&result))
        }
        Command::Verify { common, theorem } => {
            let (spec, outdir, overrides) = load_scenario(&common)?;
            init_pool(common.jobs)?;
            let result = match theorem {
                Theorem::One => verify_theorem1(&spec, Some(&outdir), &overrides)?,
                Theorem::RLarge => verify_theorem_rlarge(&spec, Some(&outdir), &overrides)?,
                Theorem::Corollary => {
                    if spec.params.r != 0.0 {
                        return Err(anyhow!(
                            "the zero-growth corollary requires r = 0, got r = {}",
                            spec.params.r
                        ));
                    }
                    verify_theorem_rlarge(&spec, Some(&outdir), &overrides)?
                }
                Theorem::Three => verify_theorem3(&spec, Some(&outdir), &overrides)?,
            };
            print_result(&result, &outdir);
            Ok(exit_code_for(&result))
        }
        Command::Sweep {
            common,
            kind,
            eps_list,
            n_list,
            alpha_list,
            r_list,
        } => {
            let (spec, outdir, _) = load_scenario(&common)?;
            init_pool(common.jobs)?;
            std::fs::create_dir_all(&outdir)?;
            match kind {
                SweepKind::Viscosity => {
                    let eps = parse_list(eps_list.as_deref(), &DEFAULT_EPS_LIST)?;
                    let report = sweep_viscosity(&spec, &eps)?;
                    let path = outdir.join("sweep_viscosity.json");
                    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
                    println!("viscosity sweep over {:?}", report.eps);
                    for (pair, d) in report.eps.windows(2).zip(&report.pairwise_l2) {
                        println!("  ||u({:.1e}) - u({:.1e})||_L2 = {d:.6e}", pair[0], pair[1]);
                    }
                    println!(
                        "  cauchy trend: {}",
                        if report.cauchy {
                            "monotone decreasing"
                        } else {
                            "NOT monotone (blowup surrogate)"
                        }
                    );
                    println!("report: {}", path.display());
                }
                SweepKind::Resolution => {
                    let ns_f = parse_list(n_list.as_deref(), &DEFAULT_N_LIST.map(|n| n as f64))?;
                    let ns: Vec<usize> = ns_f.iter().map(|&v| v as usize).collect();
                    let report = sweep_resolution(&spec, &ns)?;
                    let path = outdir.join("sweep_resolution.json");
                    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
                    println!("resolution sweep over {:?}", report.n);
                    for (pair, d) in report.n.windows(2).zip(&report.pairwise_l2) {
                        println!("  ||u(n={}) - u(n={})||_L2 = {d:.6e}", pair[0], pair[1]);
                    }
                    println!("  observed orders: {:?}", report.observed_orders);
                    println!("report: {}", path.display());
                }
                SweepKind::Subcritical => {
                    let alphas = parse_list(alpha_list.as_deref(), &[0.8, 0.9])?;
                    let rs = parse_list(r_list.as_deref(), &[0.0, 1.5])?;
                    let cells = explore_subcritical(&spec, &alphas, &rs)?;
                    let path = outdir.join("sweep_subcritical.json");
                    std::fs::write(&path, serde_json::to_string_pretty(&cells)?)?;
                    println!("subcritical classification grid (exploratory, surrogate flags):");
                    for c in &cells {
                        println!(
                            "  alpha={:.2} r={:.2}: {:?} (refined: {:?}, stable: {}) max|u|={:.3e}",
                            c.alpha,
                            c.r,
                            c.class,
                            c.class_refined,
                            c.stable_under_refinement,
                            c.max_linf
                        );
                    }
                    println!("report: {}", path.display());
                }
            }
            Ok(EXIT_OK)
        }
        Command::Oracle => {
            let verdicts = run_oracle_battery();
            let mut failed = false;
            for v in &verdicts {
                print_verdict(v);
                failed |= v.status == CheckStatus::Fail;
            }
            Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
        }
        Command::Resume { from, out } => {
            let outdir = out.unwrap_or_else(|| {
                let mut p = from.clone().into_os_string();
                p.push("-resumed");
                PathBuf::from(p)
            });
            let result = resume_scenario(&from, Some(&outdir))
                .with_context(|| format!("resuming from {}", from.display()))?;
            print_result(&result, &outdir);
            Ok(exit_code_for(&result))
        }
    }
}

/// Read the config, apply --set overrides (and --seed when the initial
/// condition is seeded), validate, and resolve the output directory.
fn load_scenario(common: &CommonArgs) -> anyhow::Result<(ScenarioSpec, PathBuf, Vec<String>)> {
    let text = std::fs::read_to_string(&common.config).with_context(|| {
        format!(
            "reading config {} (expected a scenario JSON document)",
            common.config.display()
        )
    })?;
    let mut doc: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", common.config.display()))?;
    let mut overrides = common.set.clone();
    if let Some(seed) = common.seed {
        if doc.pointer("/initial_condition/seed").is_some() {
            overrides.push(format!("initial_condition.seed={seed}"));
        } else {
            eprintln!("note: --seed ignored (initial condition is not seeded)");
        }
    }
    for assignment in &overrides {
        apply_override(&mut doc, assignment)?;
    }
    let spec = ScenarioSpec::from_json(&doc.to_string())?;
    let outdir = match &common.out {
        Some(dir) => dir.clone(),
        None => output_root().join(&spec.name),
    };
    Ok((spec, outdir, overrides))
}

fn output_root() -> PathBuf {
    std::env::var_os("FKS_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn init_pool(jobs: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing worker pool")?;
    }
    Ok(())
}

fn parse_list(arg: Option<&str>, default: &[f64]) -> anyhow::Result<Vec<f64>> {
    match arg {
        None => Ok(default.to_vec()),
        Some(s) => s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| anyhow!("list entry '{tok}': {e}"))
            })
            .collect(),
    }
}

fn print_verdict(v: &Verdict) {
    let status = match v.status {
        CheckStatus::Pass => "PASS",
        CheckStatus::Fail => "FAIL",
        CheckStatus::PreconditionUnmet => "UNMET",
    };
    println!(
        "{status:<5} {:<24} measured={:>12.5e} tol={:>9.3e}  {}",
        v.check, v.measured, v.tolerance, v.note
    );
}

fn print_result(result: &CampaignResult, outdir: &Path) {
    println!("scenario: {}", result.scenario);
    println!("classification: {:?}", result.classification);
    for v in &result.verdicts {
        print_verdict(v);
    }
    if let Some(s) = &result.summary {
        println!(
            "summary: {} steps to t={:.4}, min={:.6e}, max={:.6e}, mass drift={:.3e}",
            s.steps, s.t_final, s.min_final, s.max_final, s.mass_drift_rel
        );
    }
    println!("outputs: {}", outdir.display());
}

fn exit_code_for(result: &CampaignResult) -> u8 {
    if result.blowup() {
        EXIT_BLOWUP
    } else if !result.all_pass() {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    }
}
