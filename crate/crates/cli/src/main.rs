use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cascade_dendrite::cascade::{Budget, DEFAULT_ALPHA_TOL};
use cascade_dendrite::dendrite::{DEFAULT_EMBED_C, DEFAULT_GRAPH_R_DEPTH};
use cascade_dendrite::harness::{run, Command, Expectation, ExperimentConfig, Resolution, SeedSpec};
use cascade_dendrite::measure::{CoverSumParams, LocalDimensionParams};
use cascade_dendrite::resist::PerturbationLaw;
use cascade_dendrite::{Error, Result, ScalingLaw};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cascade-dendrite", version, about = "Random self-similar dendrites from multiplicative cascades")]
struct Cli {
    /// Scaling law: a JSON object {"family": ..., "params": ...} or a preset
    /// (uniform, crt, halves, bounded, logtail).
    #[arg(long, global = true, default_value = "uniform")]
    law: String,
    /// Base seed; replica k uses seed + k.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    replicas: u64,
    /// Cut-set scale(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Ball radii, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    radii: Vec<f64>,
    /// Level or depth(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    depth: Vec<usize>,
    /// Directory for the report and side files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Depth of the exhaustive resistance sums.
    #[arg(long, global = true)]
    r_depth: Option<usize>,
    /// Full experiment config as JSON; overrides every other flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Acceptance mode: fail with exit code 4 unless the headline statistic
    /// lies within --tolerance of this value.
    #[arg(long, global = true)]
    expect: Option<f64>,
    #[arg(long, global = true, default_value_t = 0.1)]
    tolerance: f64,
    #[arg(long, global = true)]
    max_nodes: Option<u64>,
    #[arg(long, global = true)]
    max_edges: Option<u64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Solve E Σ w^α = 1 for the dimension α.
    Alpha,
    /// Sample points from the self-similar measure.
    Sample {
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = 4)]
        lookahead: usize,
    },
    /// Build a level-n or cut-set graph.
    Graph,
    /// Build a graph and draw its planar embedding.
    Render {
        #[arg(long, default_value_t = DEFAULT_EMBED_C)]
        c: f64,
        #[arg(long, default_value_t = 800.0)]
        size: f64,
    },
    /// Local dimension of the measure from ball masses.
    Dimension {
        #[arg(long)]
        points: Option<usize>,
    },
    /// Dimension from the growth of cover sums of cell diameters.
    Cover {
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        subtree_depth: Option<usize>,
    },
    /// Percolation clusters of good cells.
    Clusters {
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = 2000)]
        mc_samples: usize,
    },
    /// Partial heights of the perturbed tree.
    Height {
        /// Perturbation law as JSON, e.g. {"kind":"exponential","rate":1}.
        #[arg(long)]
        perturbation: Option<String>,
    },
    /// Population of the unit-weight branching process.
    Gw,
    /// Martingale M_n(θ) at the given depths.
    Martingale {
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Conditions A, B and C for the law.
    Checks {
        #[arg(long, default_value_t = 0.1)]
        p: f64,
    },
}

fn resolution(cli: &Cli) -> Resolution {
    match (cli.delta.first(), cli.depth.first()) {
        (Some(&d), _) => Resolution::Delta(d),
        (None, Some(&n)) => Resolution::Level(n),
        (None, None) => Resolution::Level(4),
    }
}

fn first_depth(cli: &Cli, default: usize) -> usize {
    cli.depth.first().copied().unwrap_or(default)
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        return serde_json::from_str(&text).map_err(|e| Error::validation("config", e.to_string()));
    }
    let law = ScalingLaw::from_arg(&cli.law)?;
    let command = match &cli.command {
        Sub::Alpha => Command::Alpha { tol: DEFAULT_ALPHA_TOL },
        Sub::Sample { points, lookahead } => Command::Sample {
            depth: first_depth(cli, 12),
            n_points: *points,
            lookahead: *lookahead,
        },
        Sub::Graph => Command::Graph {
            resolution: resolution(cli),
            r_depth: cli.r_depth.unwrap_or(DEFAULT_GRAPH_R_DEPTH),
        },
        Sub::Render { c, size } => Command::Render {
            resolution: resolution(cli),
            r_depth: cli.r_depth.unwrap_or(DEFAULT_GRAPH_R_DEPTH),
            c: *c,
            size: *size,
        },
        Sub::Dimension { points } => {
            let mut params = LocalDimensionParams::default();
            if !cli.radii.is_empty() {
                params.radii = cli.radii.clone();
            }
            if let Some(n) = points {
                params.n_points = *n;
            }
            if let Some(r) = cli.r_depth {
                params.r_depth = r;
            }
            Command::Dimension { params }
        }
        Sub::Cover { n_max, subtree_depth } => {
            let mut params = CoverSumParams::default();
            if let Some(n) = n_max.or(cli.depth.first().copied()) {
                params.n_max = n;
            }
            if let Some(s) = subtree_depth {
                params.subtree_depth = *s;
            }
            if let Some(r) = cli.r_depth {
                params.r_depth = r;
            }
            Command::Cover { params }
        }
        Sub::Clusters { p, mc_samples } => Command::Clusters {
            deltas: if cli.delta.is_empty() {
                vec![(-3f64).exp()]
            } else {
                cli.delta.clone()
            },
            p: *p,
            r_depth: cli.r_depth.unwrap_or(8),
            mc_samples: *mc_samples,
        },
        Sub::Height { perturbation } => Command::Height {
            depth: first_depth(cli, 10),
            perturbation: match perturbation {
                Some(s) => serde_json::from_str(s).map_err(|e| Error::validation("perturbation", e.to_string()))?,
                None => PerturbationLaw::default(),
            },
        },
        Sub::Gw => Command::Gw {
            depth: first_depth(cli, 10),
        },
        Sub::Martingale { theta } => Command::Martingale {
            theta: *theta,
            depths: if cli.depth.is_empty() {
                vec![2, 4, 6, 8]
            } else {
                cli.depth.clone()
            },
        },
        Sub::Checks { p } => Command::Checks { p: *p },
    };
    let mut budget = Budget::default();
    if let Some(n) = cli.max_nodes {
        budget.max_nodes = n;
    }
    if let Some(e) = cli.max_edges {
        budget.max_edges = e;
    }
    Ok(ExperimentConfig {
        law,
        seeds: SeedSpec {
            base: cli.seed,
            count: cli.replicas,
        },
        budget,
        command,
        expect: cli.expect.map(|target| Expectation {
            target,
            tolerance: cli.tolerance,
        }),
    })
}

fn main_inner(cli: &Cli) -> Result<bool> {
    let config = build_config(cli)?;
    let out = run(&config)?;
    if let Some(dir) = &cli.out {
        out.write_to(dir)?;
    }
    let text = match cli.format {
        Format::Json => Some(serde_json::to_string_pretty(&out.report).expect("report serializes")),
        Format::Csv => out.csv.clone(),
        Format::Svg => out.svg.clone(),
    };
    match text {
        Some(t) => {
            let _ = writeln!(std::io::stdout().lock(), "{}", t.trim_end());
        }
        None => {
            return Err(Error::validation(
                "format",
                format!("command {} has no {:?} output", out.report.command, cli.format),
            ))
        }
    }
    if let Some(a) = &out.report.acceptance {
        eprintln!(
            "acceptance: statistic {} target {} tolerance {} -> {}",
            a.statistic,
            a.target,
            a.tolerance,
            if a.passed { "pass" } else { "FAIL" }
        );
    }
    Ok(out.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
