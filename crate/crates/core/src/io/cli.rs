//! Command-line interface: `gen-case`, `solve`, `bases`, `merge`, `report`.

use super::casegen::{generate_case_study, CaseStudyConfig};
use super::network::{load_network, save_network};
use super::pipeline::{
    analyze, resolve_adjacency, run_strategy, verify_trace, write_bases_artifacts,
    write_merge_artifacts, write_report_artifacts, write_solves, AdjacencySource, Analysis,
};
use super::timeseries::{load_timeseries, save_timeseries};
use crate::strategies::{AdjacencyMode, StrategyKind, StrategyTrace, DEFAULT_EXHAUSTIVE_CAP};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

/// Environment variable overriding the default output directory.
pub const OUTDIR_ENV: &str = "BASEMERGE_OUTDIR";

#[derive(Parser, Debug)]
#[command(
    name = "basemerge",
    version,
    about = "Exact time series aggregation for linear programs via active-set bases, \
             with bases merging and analytical error accounting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// network description (JSON)
    #[arg(long)]
    pub network: PathBuf,
    /// hourly input data (CSV: `t, D_<node>..., CF_<gen>...`)
    #[arg(long)]
    pub timeseries: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// output directory (default: $BASEMERGE_OUTDIR or ./out)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Exhaustive,
    Greedy,
    GreedyAdjacent,
}

impl From<StrategyArg> for StrategyKind {
    fn from(value: StrategyArg) -> Self {
        match value {
            StrategyArg::Exhaustive => StrategyKind::Exhaustive,
            StrategyArg::Greedy => StrategyKind::Greedy,
            StrategyArg::GreedyAdjacent => StrategyKind::GreedyAdjacent,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum AdjacencyArg {
    /// contact of member points in the varying input coordinates
    InputSpace,
    /// active sets differing by exactly one pivot
    ActiveSet,
    /// read pairs from --adjacency-file
    File,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the synthetic case study (network + hourly series files)
    GenCase {
        /// horizon length in weeks (168 hours each)
        #[arg(long, default_value_t = 52)]
        weeks: u32,
        /// seed; fully determines the output
        #[arg(long, default_value_t = 83)]
        seed: u64,
        /// network template id
        #[arg(long, default_value = "three-node")]
        template: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve every time step of the full model
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Group time steps into bases and audit aggregation exactness
    Bases {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Search bases mergers with a strategy and write the trace
    Merge {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
        strategy: StrategyArg,
        /// stop once this many clusters remain (default 1)
        #[arg(long, default_value_t = 1)]
        target_k: usize,
        /// re-solve merged problems and audit host choices
        #[arg(long)]
        verify_hosts: bool,
        /// adjacency source for greedy-adjacent
        #[arg(long, value_enum, default_value_t = AdjacencyArg::InputSpace)]
        adjacency: AdjacencyArg,
        /// JSON file with 1-based adjacent basis pairs (with --adjacency file)
        #[arg(long)]
        adjacency_file: Option<PathBuf>,
        /// refuse exhaustive enumeration beyond this many bases
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
        exhaustive_cap: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Render the bases/mergers/counts tables for all feasible strategies
    Report {
        #[command(flatten)]
        input: InputArgs,
        /// strategy whose mergers fill optimal_mergers.csv
        #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 1)]
        target_k: usize,
        #[arg(long, value_enum, default_value_t = AdjacencyArg::InputSpace)]
        adjacency: AdjacencyArg,
        #[arg(long)]
        adjacency_file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
        exhaustive_cap: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn out_dir(arg: &OutArgs) -> Result<PathBuf> {
    let dir = arg
        .out
        .clone()
        .or_else(|| std::env::var_os(OUTDIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    Ok(dir)
}

fn load_inputs(input: &InputArgs) -> Result<Analysis> {
    let net = load_network(&input.network)?;
    let steps = load_timeseries(&input.timeseries)?;
    analyze(net, steps)
}

fn adjacency_source(arg: AdjacencyArg, file: &Option<PathBuf>) -> Result<AdjacencySource> {
    Ok(match arg {
        AdjacencyArg::InputSpace => AdjacencySource::Detect(AdjacencyMode::InputSpace),
        AdjacencyArg::ActiveSet => AdjacencySource::Detect(AdjacencyMode::ActiveSet),
        AdjacencyArg::File => {
            AdjacencySource::File(file.clone().ok_or_else(|| {
                Error::Contract("--adjacency file requires --adjacency-file".into())
            })?)
        }
    })
}

/// Execute one CLI invocation. Errors map to stable exit codes in `main`.
pub fn run_pipeline(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCase {
            weeks,
            seed,
            template,
            out,
        } => {
            let dir = out_dir(&out)?;
            let cfg = CaseStudyConfig {
                weeks,
                seed,
                template,
                ..CaseStudyConfig::default()
            };
            let (net, steps) = generate_case_study(&cfg)?;
            save_network(&dir.join("network.json"), &net)?;
            save_timeseries(&dir.join("timeseries.csv"), &net, &steps)?;
            println!(
                "generated {} time steps ({} weeks, seed {}) in {}",
                steps.len(),
                weeks,
                seed,
                dir.display()
            );
            Ok(())
        }
        Command::Solve { input, out } => {
            let dir = out_dir(&out)?;
            let analysis = load_inputs(&input)?;
            write_solves(&dir, &analysis)?;
            println!(
                "solved {} time steps; total objective {:.6}",
                analysis.steps.len(),
                analysis.full_objective
            );
            Ok(())
        }
        Command::Bases { input, out } => {
            let dir = out_dir(&out)?;
            let analysis = load_inputs(&input)?;
            write_bases_artifacts(&dir, &analysis)?;
            println!(
                "{} bases over {} time steps; exactness {}",
                analysis.bases.n_bases(),
                analysis.steps.len(),
                if analysis.exactness.pass {
                    "pass"
                } else {
                    "FAIL"
                }
            );
            Ok(())
        }
        Command::Merge {
            input,
            strategy,
            target_k,
            verify_hosts,
            adjacency,
            adjacency_file,
            exhaustive_cap,
            out,
        } => {
            let dir = out_dir(&out)?;
            let analysis = load_inputs(&input)?;
            let kind: StrategyKind = strategy.into();
            let (adj, info) = if kind == StrategyKind::GreedyAdjacent {
                let source = adjacency_source(adjacency, &adjacency_file)?;
                let (list, info) = resolve_adjacency(&analysis, &source)?;
                (Some(list), Some(info))
            } else {
                (None, None)
            };
            let trace = run_strategy(&analysis, kind, target_k, exhaustive_cap, adj.as_ref())?;
            let verifications = if verify_hosts {
                Some(verify_trace(&analysis, &trace)?)
            } else {
                None
            };
            write_merge_artifacts(
                &dir,
                &analysis,
                &trace,
                info.as_ref(),
                verifications.as_deref(),
            )?;
            report_trace(&trace);
            if let Some(vs) = &verifications {
                let violations: usize = vs.iter().map(|v| v.host_violations).sum();
                let max_gap = vs.iter().map(|v| v.com_gap_rel).fold(0.0, f64::max);
                println!(
                    "verification: max analytic-vs-resolved gap {max_gap:.3e}, \
                     host violations {violations}"
                );
            }
            Ok(())
        }
        Command::Report {
            input,
            strategy,
            target_k,
            adjacency,
            adjacency_file,
            exhaustive_cap,
            out,
        } => {
            let dir = out_dir(&out)?;
            let analysis = load_inputs(&input)?;
            write_bases_artifacts(&dir, &analysis)?;

            let source = adjacency_source(adjacency, &adjacency_file)?;
            let (adj, _info) = resolve_adjacency(&analysis, &source)?;

            let mut traces: Vec<StrategyTrace> = Vec::new();
            if analysis.bases.n_bases() <= exhaustive_cap {
                traces.push(run_strategy(
                    &analysis,
                    StrategyKind::Exhaustive,
                    target_k,
                    exhaustive_cap,
                    None,
                )?);
            } else {
                eprintln!(
                    "note: {} bases exceed the exhaustive cap {}; skipping exhaustive counts",
                    analysis.bases.n_bases(),
                    exhaustive_cap
                );
            }
            traces.push(run_strategy(
                &analysis,
                StrategyKind::Greedy,
                target_k,
                exhaustive_cap,
                None,
            )?);
            traces.push(run_strategy(
                &analysis,
                StrategyKind::GreedyAdjacent,
                target_k,
                exhaustive_cap,
                Some(&adj),
            )?);

            let kind: StrategyKind = strategy.into();
            let table_trace =
                traces
                    .iter()
                    .find(|t| t.strategy == kind)
                    .ok_or_else(|| Error::CapExceeded {
                        bases: analysis.bases.n_bases(),
                        cap: exhaustive_cap,
                    })?;
            let refs: Vec<&StrategyTrace> = traces.iter().collect();
            write_report_artifacts(&dir, &analysis, &refs, table_trace)?;
            println!(
                "report for {} bases written to {}",
                analysis.bases.n_bases(),
                dir.display()
            );
            Ok(())
        }
    }
}

fn report_trace(trace: &StrategyTrace) {
    print!("{}:", trace.strategy);
    for level in &trace.levels {
        print!(" k={} com={:.4}", level.k, level.com);
    }
    println!();
}

/// Entry point used by the binary: run and map errors to exit codes.
pub fn main_with_exit(cli: Cli) -> i32 {
    match run_pipeline(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
