use std::path::PathBuf;

use bfly_core::ButterflyKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::config::TolMult;

#[derive(Debug, Parser)]
#[command(
    name = "bfly",
    version,
    about = "Random butterfly matrices, pivoted Gaussian elimination and butterfly Hadamard matrices"
)]
pub struct Cli {
    /// Master seed; every trial draws from its own stream of it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for emitted artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// JSON file with default values; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub json_config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factor a matrix with one pivoting scheme.
    Ge(GeArgs),
    /// GECP permutations on every rearrangement of monotone angles.
    Align(AlignArgs),
    /// Per-trial growth factors with log-scale histograms.
    GrowthHist(GrowthArgs),
    /// Sparsity bitmaps of the GECP factors with and without tolerance.
    Sparsity(SparsityArgs),
    /// Mismatch counts per order, in the layout of the alignment table.
    Table1(Table1Args),
    /// Sample, enumerate or verify butterfly Hadamard matrices.
    Hadamard(HadamardArgs),
    /// Sweep the Lipschitz bound over random perturbations.
    Lipschitz(LipschitzArgs),
    /// Run the property suite and write report.json.
    Verify(VerifyArgs),
    /// Sample or load an angle vector and write the butterfly matrix.
    Butterfly(ButterflyArgs),
}

/// Where a butterfly comes from: a JSON angle file or a seeded sample.
#[derive(Debug, Default, Args)]
pub struct SourceArgs {
    #[arg(long)]
    pub kind: Option<ButterflyKind>,
    /// Order exponent: the matrix has order 2^n.
    #[arg(long)]
    pub n: Option<u32>,
    /// Angle vector as JSON {kind, n, angles}.
    #[arg(long, value_name = "FILE")]
    pub theta: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Factors,
    Pivots,
    Growth,
}

#[derive(Debug, Args)]
pub struct GeArgs {
    /// genp, gepp, gerp or gecp.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Candidate tolerance as a multiple of machine epsilon, or `none`.
    #[arg(long, value_name = "REAL|none")]
    pub tol_mult: Option<TolMult>,
    /// Matrix as CSV; without it a butterfly is built from the source flags.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub emit: Option<Emit>,
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_name = "REAL|none")]
    pub tol_mult: Option<TolMult>,
}

#[derive(Debug, Args)]
pub struct GrowthArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub kind: Option<ButterflyKind>,
    /// Comma-separated list from genp, gepp, gerp, gecp, gecp-notol.
    #[arg(long)]
    pub strategies: Option<String>,
    /// Tolerance used by the tolerance-enabled schemes.
    #[arg(long, value_name = "REAL|none")]
    pub tol_mult: Option<TolMult>,
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Reorder the sampled angles into the completely pivoted normal form.
    #[arg(long)]
    pub monotone: bool,
    /// Pivot-search tolerance for the tolerance-enabled run.
    #[arg(long, value_name = "REAL")]
    pub tol_mult: Option<f64>,
    /// Entries with magnitude at most this multiple of machine epsilon are zero.
    #[arg(long, value_name = "REAL")]
    pub sparsity_tol_mult: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Largest order exponent (at most 6).
    #[arg(long)]
    pub max_n: Option<u32>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_name = "REAL|none")]
    pub tol_mult: Option<TolMult>,
}

#[derive(Debug, Args)]
pub struct HadamardArgs {
    #[command(subcommand)]
    pub action: HadamardAction,
}

#[derive(Debug, Subcommand)]
pub enum HadamardAction {
    /// Print a uniformly sampled member of the family.
    Sample {
        #[arg(long)]
        kind: Option<ButterflyKind>,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Enumerate the family and compare its size with the closed-form count.
    Enumerate {
        #[arg(long)]
        kind: Option<ButterflyKind>,
        #[arg(long)]
        n: Option<u32>,
        /// Also write every member to the output directory.
        #[arg(long)]
        write: bool,
    },
    /// Check H Hᵀ = N I exactly, and family membership when a kind is given.
    Verify {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long)]
        kind: Option<ButterflyKind>,
    },
}

#[derive(Debug, Args)]
pub struct LipschitzArgs {
    /// Restrict to one kind; all four by default.
    #[arg(long)]
    pub kind: Option<ButterflyKind>,
    /// Largest order exponent; orders cycle through 1..=n.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Samples per property.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_name = "REAL|none")]
    pub tol_mult: Option<TolMult>,
    /// Treat known discrepancies as failures.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ButterflyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Also write the matrix as CSV.
    #[arg(long)]
    pub matrix: bool,
}
