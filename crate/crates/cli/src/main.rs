mod commands;
mod registry;
mod report;
mod tree;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Scenario-tree laboratory for dynamic risk and performance measures:
/// evaluates measures, checks time-consistency notions, verifies dual
/// representations and runs the index/risk-family converters.
#[derive(Parser)]
#[command(name = "tclab", version, about)]
pub struct Cli {
    /// Margin for inequality comparisons
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub epsilon: f64,

    /// Tolerance for monotone bisection searches
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,

    /// Seed for random instances (the TCLAB_SEED environment variable
    /// overrides this flag)
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Random instances drawn in addition to named inputs
    #[arg(long, global = true, default_value_t = 48)]
    pub samples: usize,

    /// Output format: json or text
    #[arg(long, global = true, default_value = "json")]
    pub format: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate a measure on a named variable or process
    Evaluate {
        /// Scenario-tree JSON document
        #[arg(long)]
        tree: PathBuf,
        /// Measure id: cexp | dglr | draroc:<alpha> | raroc-family:<alpha>:<x>
        #[arg(long)]
        measure: String,
        /// Named variable (for variables measures)
        #[arg(long)]
        var: Option<String>,
        /// Named process (for process measures)
        #[arg(long)]
        process: Option<String>,
        /// Evaluation time
        #[arg(long)]
        t: usize,
    },
    /// Check a time-consistency statement; exit 0 holds, 2 violated
    Check {
        #[arg(long)]
        tree: PathBuf,
        /// Measure id
        #[arg(long)]
        measure: String,
        /// Rule id: essinf | esssup | expectation | discounted:<alpha> |
        /// weak-process:<dir> | semiweak:<dir> | benchmark:<set>:<measure>
        #[arg(long)]
        rule: String,
        #[arg(long, default_value = "accept")]
        direction: String,
        #[arg(long, default_value = "one-step")]
        scope: String,
    },
    /// Verify the dual representation of the adapted infimum on a variable
    DualCheck {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        t: usize,
        /// Named variable
        #[arg(long)]
        var: String,
    },
    /// Converters between acceptability indices and risk families
    Convert {
        #[command(subcommand)]
        conversion: Conversion,
    },
    /// Classify an update rule (locality, monotonicity, invariance flags)
    ClassifyRule {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        rule: String,
    },
    /// Check the measure axioms (locality, monotonicity)
    Axioms {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        measure: String,
    },
    /// Build the bundled two-period fixture and rerun the headline checks
    Demo {},
}

#[derive(Subcommand)]
pub enum Conversion {
    /// Cash level at which the index drops to x:
    /// inf { c : index(V - c at t) <= x }
    IndexToRisk {
        #[arg(long)]
        tree: PathBuf,
        /// Index measure id (process kind), e.g. dglr
        #[arg(long)]
        index: String,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        process: String,
        #[arg(long)]
        t: usize,
    },
    /// Acceptability level of the family: sup { x : phi^x >= 0 }
    RiskToIndex {
        #[arg(long)]
        tree: PathBuf,
        /// Family id, e.g. raroc:<alpha>
        #[arg(long)]
        family: String,
        #[arg(long)]
        process: String,
        #[arg(long)]
        t: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
