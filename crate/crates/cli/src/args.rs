use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperprove::corpus::FamilyCounts;
use hyperprove::search::Strategy;

#[derive(Debug, Parser)]
#[command(name = "hyperprove", version, about = "Value-guided proof search over a toy Peano logic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a corpus of theorems with oracle-shortest proofs.
    GenCorpus(GenCorpusArgs),
    /// Train the tactic predictor and pretrain the value model.
    Pretrain(TrainArgs),
    /// Train the tactic predictor, pretrain, then run reinforcement learning.
    Train(TrainArgs),
    /// Search for a proof of one theorem.
    Prove(ProveArgs),
    /// Run search strategies over a corpus split.
    Eval(EvalArgs),
    /// Retrain and evaluate across a hyperparameter sweep.
    Ablate(AblateArgs),
    /// Brute-force shortest proof of one theorem.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ground, shifted and schema family counts.
    #[arg(long, default_value = "40,40,20")]
    pub counts: FamilyCounts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncoderKind {
    Hashed,
    Autoencoded,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5)]
    pub width: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub actors: usize,
    /// Fraction of theorems held out for testing.
    #[arg(long, default_value_t = 0.3)]
    pub test_ratio: f64,
    #[arg(long)]
    pub rl_epochs: Option<usize>,
    #[arg(long)]
    pub drop_at_most: Option<usize>,
    #[arg(long)]
    pub drop_at_least: Option<usize>,
    #[arg(long, value_enum, default_value_t = EncoderKind::Hashed)]
    pub encoder: EncoderKind,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Training report path; defaults to the checkpoint path with `.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Statement in canonical text, e.g. `forall n, |- Plus(Var(n),Zero) = Var(n)`.
    #[arg(long)]
    pub theorem: String,
    #[arg(long, default_value = "astar")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = hyperprove::search::DEFAULT_BUDGET)]
    pub budget: usize,
    /// Defaults to the width the checkpoint was trained with.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = hyperprove::search::DEFAULT_DFS_DEPTH)]
    pub dfs_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitPart {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitPart::Test)]
    pub split: SplitPart,
    /// Split seed; defaults to the one recorded in the checkpoint.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to the ratio recorded in the checkpoint.
    #[arg(long)]
    pub test_ratio: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "astar,bestfirst,bestfirst_prob,dfs,greedy,greedy_prob")]
    pub strategies: Vec<Strategy>,
    #[arg(long, default_value_t = hyperprove::search::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = hyperprove::search::DEFAULT_DFS_DEPTH)]
    pub dfs_depth: usize,
    /// Record wall-clock times, which makes reports differ between runs.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory for `rows.csv` and `summary.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    Width,
    Gamma,
    Scorer,
    ObligationTraining,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub sweep: Sweep,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3)]
    pub test_ratio: f64,
    #[arg(long, default_value_t = hyperprove::search::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long)]
    pub rl_epochs: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory; one subdirectory per setting.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub theorem: String,
    #[arg(long, default_value_t = hyperprove::oracle::DEFAULT_CORPUS_DEPTH)]
    pub max_depth: usize,
    /// Restrict actions to this checkpoint's predictor top-`width`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
}
