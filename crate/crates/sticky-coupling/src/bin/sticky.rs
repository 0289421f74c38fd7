use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sticky_coupling::scenario::{execute, write_outputs, Mode, Scenario, BUILTIN_SCENARIOS};

/// Default output root when `--out-dir` is not given.
const OUT_ENV: &str = "STICKY_OUT_DIR";

#[derive(Parser)]
#[command(name = "sticky", version, about = "Sticky couplings: bounds, simulations and reports")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario TOML, a manifest.json from an earlier run, or a bundled scenario name.
    config: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: $STICKY_OUT_DIR/<name>, else out/<name>).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run bounds and simulations.
    Run(RunArgs),
    /// Analytic bounds only.
    Bounds(RunArgs),
    /// List bundled scenarios.
    List,
}

fn run(args: &RunArgs, mode: Mode) -> Result<ExitCode, (u8, String)> {
    let input = |e: sticky_coupling::Error| (1u8, e.to_string());
    let mut sc = Scenario::load(&args.config).map_err(input)?;
    if let Some(s) = args.seed {
        sc.seed = s;
    }
    let out = match &args.out_dir {
        Some(d) => d.clone(),
        None => std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")).join(&sc.name),
    };
    let threads = args.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| (1, e.to_string()))?;
    let rep = pool.install(|| execute(&sc, mode)).map_err(input)?;
    write_outputs(&sc, mode, &rep, &out).map_err(input)?;
    for c in &rep.checks {
        let tag = if c.pass { "ok  " } else { "FAIL" };
        println!("{tag} {} {} {}", c.case, c.name, c.detail);
    }
    println!("wrote {}", out.display());
    if rep.failed_checks() > 0 {
        eprintln!("{} check(s) failed", rep.failed_checks());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::List => {
            for (name, desc, _) in BUILTIN_SCENARIOS {
                println!("{name:<16} {desc}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run(a) => run(a, Mode::Full),
        Cmd::Bounds(a) => run(a, Mode::BoundsOnly),
    };
    res.unwrap_or_else(|(code, msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(code)
    })
}
