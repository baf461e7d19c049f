//! Batch front door for the verification suites: lemma checks, presentation
//! tables, moment-graph dumps, endoscopic comparisons, and orbital trace
//! reports.  Exit code 0 means every check passed, 1 means a failure, 2
//! means some check was undetermined.

mod config;
mod suites;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::{parse_space, RunConfig};
use springer_core::rootdata::LatticeCharacter;
use std::path::PathBuf;
use suites::{Artifacts, OrbitalOptions};

#[derive(Parser)]
#[command(
    name = "springer",
    about = "Exact presentations, endoscopic comparisons, and orbital trace identities for unramified affine Springer fibers"
)]
struct Cli {
    /// Structured-text configuration file (single file per run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for JSON and text reports.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the combinatorial lemma suite at the configured bounds.
    Lemmas,
    /// Per-degree invariant factors of the presented equivariant homology.
    Present {
        #[arg(long, default_value = "grassmannian")]
        space: String,
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Export the moment graph of the fiber inside a window.
    Graph {
        #[arg(long, default_value = "grassmannian")]
        space: String,
        #[arg(long)]
        window: Option<i64>,
    },
    /// Verify the localized comparison with the endoscopic subsystem.
    Endoscopy {
        #[arg(long)]
        kmax: Option<u32>,
        #[arg(long)]
        mmax: Option<usize>,
    },
    /// Trace tables against twisted point counts.
    Orbital {
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<u64>>,
        #[arg(long)]
        v: Option<u32>,
        /// "trivial", "sign", or "ORDER:e1,e2,..."
        #[arg(long)]
        kappa: Option<String>,
        /// "id" or "w", optionally "+SHIFT".
        #[arg(long)]
        tau: Option<String>,
        #[arg(long, default_value = "grassmannian")]
        space: String,
    },
}

fn parse_kappa(text: &str, rank: usize) -> Result<LatticeCharacter> {
    match text {
        "trivial" => Ok(LatticeCharacter::trivial(rank)),
        "sign" => {
            let mut exponents = vec![0i64; rank];
            exponents[0] = 1;
            Ok(LatticeCharacter {
                order: 2,
                exponents,
            })
        }
        other => {
            let (order, exps) = other
                .split_once(':')
                .ok_or_else(|| anyhow::anyhow!("expected trivial, sign, or ORDER:e1,e2,..."))?;
            let order: u32 = order.parse()?;
            let exponents: Vec<i64> = exps
                .split(',')
                .map(|e| e.trim().parse::<i64>())
                .collect::<std::result::Result<_, _>>()?;
            anyhow::ensure!(
                exponents.len() == rank,
                "expected {rank} exponents, got {}",
                exponents.len()
            );
            Ok(LatticeCharacter { order, exponents })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let cfg: RunConfig = suites::load_config(cli.config.as_deref())?;
    let out_dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let artifacts = Artifacts::new(&out_dir)?;
    match cli.command {
        Command::Lemmas => suites::cmd_lemmas(&cfg, &artifacts),
        Command::Present { space, kmax } => {
            let space = parse_space(&space)?;
            let kmax = kmax.unwrap_or(cfg.bounds.kmax);
            suites::cmd_present(&cfg, &artifacts, space, kmax)
        }
        Command::Graph { space, window } => {
            let space = parse_space(&space)?;
            let window = window.unwrap_or(cfg.bounds.window.min(8));
            suites::cmd_graph(&cfg, &artifacts, space, window)
        }
        Command::Endoscopy { kmax, mmax } => {
            let kmax = kmax.unwrap_or(cfg.bounds.kmax);
            let mmax = mmax.unwrap_or(cfg.bounds.mmax);
            suites::cmd_endoscopy(&cfg, &artifacts, kmax, mmax)
        }
        Command::Orbital {
            q,
            v,
            kappa,
            tau,
            space,
        } => {
            let space = parse_space(&space)?;
            let datum = cfg.datum()?;
            let kappa_override = match kappa {
                Some(text) => Some(parse_kappa(&text, datum.rank())?),
                None => None,
            };
            let opts = OrbitalOptions {
                space,
                q_list: q.unwrap_or_else(|| cfg.frobenius.q.clone()),
                v_override: v,
                kappa_override,
                tau_override: tau,
            };
            suites::cmd_orbital(&cfg, &artifacts, &opts)
        }
    }
}
