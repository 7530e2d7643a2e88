use std::fs;
use std::path::PathBuf;

use anyhow::Context as _;
use bfly_core::butterfly::sample;
use bfly_core::rng::trial_rng;
use bfly_core::{AngleVector, ButterflyKind};

use crate::cli::{Cli, Command, SourceArgs};
use crate::config::{check_n, pick, FileConfig, DEFAULT_OUT, DEFAULT_SEED};

mod experiments;
mod ge;
mod hadamard;
mod verify;

pub use experiments::{
    run_align, run_butterfly, run_growth_hist, run_lipschitz, run_sparsity, run_table1,
};
pub use ge::run_ge;
pub use hadamard::run_hadamard;
pub use verify::{run_verify, Property, Report, Status};

/// Global settings after merging flags, the JSON file and defaults.
pub struct Context {
    pub file: FileConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn new(cli_seed: Option<u64>, cli_out: Option<PathBuf>, file: FileConfig) -> Self {
        Self {
            seed: pick(cli_seed, file.seed, DEFAULT_SEED),
            out: pick(cli_out, file.out.clone(), PathBuf::from(DEFAULT_OUT)),
            file,
        }
    }

    /// Angle vector from `--theta`, or sampled from the first stream of the seed.
    pub fn angles(
        &self,
        src: &SourceArgs,
        default_n: u32,
        max_n: u32,
    ) -> anyhow::Result<AngleVector> {
        if let Some(path) = &src.theta {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let theta: AngleVector = serde_json::from_str(&text)
                .with_context(|| format!("parsing angle vector {}", path.display()))?;
            check_n(theta.n(), 1, max_n, "this command")?;
            return Ok(theta);
        }
        let kind = pick(src.kind, self.file.kind, ButterflyKind::ScalarSimple);
        let n = check_n(
            pick(src.n, self.file.n, default_n),
            1,
            max_n,
            "this command",
        )?;
        Ok(sample(kind, n, &mut trial_rng(self.seed, 0)))
    }
}

/// Runs one invocation; `Ok(false)` means the command completed but a check failed.
pub fn run(cli: Cli) -> anyhow::Result<bool> {
    let file = match &cli.json_config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let ctx = Context::new(cli.seed, cli.out, file);
    match cli.command {
        Command::Ge(args) => {
            print!("{}", run_ge(&ctx, &args)?);
            Ok(true)
        }
        Command::Align(args) => run_align(&ctx, &args).map(|_| true),
        Command::GrowthHist(args) => run_growth_hist(&ctx, &args).map(|_| true),
        Command::Sparsity(args) => run_sparsity(&ctx, &args).map(|_| true),
        Command::Table1(args) => run_table1(&ctx, &args).map(|_| true),
        Command::Hadamard(args) => run_hadamard(&ctx, &args),
        Command::Lipschitz(args) => run_lipschitz(&ctx, &args),
        Command::Verify(args) => run_verify(&ctx, &args).map(|r| r.passed),
        Command::Butterfly(args) => run_butterfly(&ctx, &args).map(|_| true),
    }
}
