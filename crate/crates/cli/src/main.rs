use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod format;

/// Markov tree-shifts of finite type: counting, entropy, classification.
#[derive(Parser, Debug)]
#[command(name = "treeshift", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Height (or last index) to evaluate; each command has its own default.
    #[arg(long, global = true)]
    pub n: Option<usize>,

    #[arg(long, global = true, value_enum, default_value = "log")]
    pub backend: BackendArg,

    #[arg(long, global = true, value_enum, default_value = "difference")]
    pub estimator: EstimatorArg,

    /// none, periodic, dirichlet:<i> or neumann.
    #[arg(long, global = true, default_value = "none")]
    pub boundary: String,

    /// Mantissa bits of the log backend.
    #[arg(long, global = true, default_value_t = treeshift::eval::DEFAULT_PRECISION)]
    pub precision: u32,

    #[arg(long, global = true, value_enum)]
    pub out: Option<OutFormat>,

    /// Count locally admissible blocks without removing dead symbols first.
    #[arg(long, global = true)]
    pub no_essentialize: bool,

    /// Seed for the randomized perturbation probe.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Report entropies in bits instead of nats.
    #[arg(long, global = true)]
    pub log2: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a basic-set file and report its essential part.
    Validate { file: String },
    /// Compile a basic set to its recurrence system, or back with --from-snre.
    Derive {
        file: String,
        /// Read a recurrence system (text or JSON) and emit a basic set.
        #[arg(long)]
        from_snre: bool,
    },
    /// Count n-blocks for every height up to --n.
    Count { file: String },
    /// Estimate entropy and hidden entropy from the count sequence.
    Entropy {
        file: String,
        /// Growth base for the hidden-entropy column; defaults to d.
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Classify the entropy symbolically.
    Classify { file: String },
    /// Build a tree-shift whose entropy is ln of the polynomial's Perron root.
    Realize {
        /// `x^p - k1*x^p1 - ...` or `p; p1:k1; ...`.
        #[arg(long)]
        poly: String,
        /// Also write the basic set to this file.
        #[arg(long)]
        emit: Option<String>,
    },
    /// Check the boundary-condition criteria for a d=2 k=2 basic set.
    BoundaryCheck { file: String },
    /// Classify every basic set of a small signature.
    Sweep {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Entropy of x_{n+1} = x_n^2 + |g_n| under a perturbation rule.
    Probe {
        #[arg(long, default_value_t = 2.0)]
        x1: f64,
        /// zero, maximal, uniform or constant:<c>.
        #[arg(long, default_value = "uniform")]
        rule: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Log,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Ratio,
    Difference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
    Text,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(&cli) {
        Ok(doc) => {
            print!("{doc}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_budget() { 2 } else { 1 })
        }
    }
}
