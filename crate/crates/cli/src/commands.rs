use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hyperprove::corpus::{generate_corpus, load_corpus, save_corpus, split_corpus, CorpusSplit};
use hyperprove::encoder::{train_autoencoder, AutoencoderConfig, Encoder};
use hyperprove::env::{Hyperstate, Obligation, Theorem};
use hyperprove::eval::{evaluate, EvalConfig, EvalReport};
use hyperprove::oracle::{shortest_proof, shortest_proof_with, TopN};
use hyperprove::search::{SearchConfig, Strategy};
use hyperprove::trainer::{
    pretrain_system, subproof_tasks, train_system, Checkpoint, SplitParams, TrainerConfig,
};
use serde::Serialize;

use crate::args::*;
use crate::reports::{write_eval, write_json, write_sweep, SweepRow, SweepSummary};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenCorpus(a) => gen_corpus(a),
        Command::Pretrain(a) => train(a, true),
        Command::Train(a) => train(a, false),
        Command::Prove(a) => prove(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn gen_corpus(a: GenCorpusArgs) -> Result<()> {
    let (entries, summary) = generate_corpus(a.seed, &a.counts);
    for f in summary.under_filled() {
        eprintln!(
            "warning: family {} produced {} of {} requested ({} statements available)",
            f.family, f.produced, f.requested, f.available
        );
    }
    save_corpus(&entries, &a.out).with_context(|| format!("writing corpus to {}", a.out.display()))?;
    println!("wrote {} theorems to {}", entries.len(), a.out.display());
    Ok(())
}

fn load_split(path: &Path, seed: u64, test_ratio: f64) -> Result<CorpusSplit> {
    if !(0.0..=1.0).contains(&test_ratio) {
        bail!("test ratio must lie in [0, 1], got {test_ratio}");
    }
    let entries = load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))?;
    Ok(split_corpus(&entries, seed, test_ratio))
}

fn trainer_config(a: &TrainArgs, split: &CorpusSplit) -> Result<TrainerConfig> {
    let mut cfg = TrainerConfig {
        gamma: a.gamma,
        width: a.width,
        seed: a.seed,
        actors: a.actors,
        ..TrainerConfig::default()
    };
    if let Some(n) = a.rl_epochs {
        cfg.rl_epochs = n;
    }
    if let Some(n) = a.drop_at_most {
        cfg.drop_at_most = n;
    }
    if let Some(n) = a.drop_at_least {
        cfg.drop_at_least = n;
    }
    cfg.validate()?;
    if a.encoder == EncoderKind::Autoencoded {
        let obs: Vec<Obligation> = subproof_tasks(&split.train).into_iter().map(|t| t.obligation).collect();
        let ae_cfg = AutoencoderConfig {
            seed: a.seed,
            ..AutoencoderConfig::default()
        };
        let (model, curve) = train_autoencoder(&obs, &ae_cfg)?;
        if let Some(last) = curve.last() {
            eprintln!("autoencoder reconstruction accuracy {:.4}", last.accuracy);
        }
        cfg.encoder = Encoder::Autoencoded { model: Box::new(model) };
    }
    Ok(cfg)
}

fn report_path(a: &TrainArgs) -> PathBuf {
    a.report.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".report.json");
        PathBuf::from(p)
    })
}

fn train(a: TrainArgs, pretrain_only: bool) -> Result<()> {
    let split = load_split(&a.corpus, a.seed, a.test_ratio)?;
    let cfg = trainer_config(&a, &split)?;
    let (mut ck, report) = if pretrain_only {
        pretrain_system(&split, &cfg)?
    } else {
        train_system(&split, &cfg)?
    };
    ck.split = Some(SplitParams {
        seed: a.seed,
        test_ratio: a.test_ratio,
    });
    fs::write(&a.out, ck.to_json()).with_context(|| format!("writing checkpoint {}", a.out.display()))?;
    let rp = report_path(&a);
    write_json(&rp, &report)?;
    println!(
        "trained on {} tasks ({} retained of {}); {} episodes; checkpoint {}; report {}",
        report.pretrain_tasks,
        report.tasks.retained,
        report.tasks.extracted,
        report.episodes,
        a.out.display(),
        rp.display()
    );
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    Checkpoint::from_json(&text).with_context(|| format!("loading checkpoint {}", path.display()))
}

#[derive(Serialize)]
struct ProveRecord<'a> {
    theorem_id: &'a str,
    strategy: Strategy,
    #[serde(flatten)]
    result: &'a hyperprove::search::SearchResult,
}

fn prove(a: ProveArgs) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let statement: Obligation = a.theorem.parse().with_context(|| format!("parsing theorem `{}`", a.theorem))?;
    let thm = Theorem::new("cli", statement);
    let cfg = SearchConfig {
        width: a.width.unwrap_or(ck.config.width),
        budget: a.budget,
        ..SearchConfig::default()
    };
    let predictor = ck.predictor();
    let result = a.strategy.run(&thm, &ck.value, &predictor, &cfg, a.dfs_depth);
    let record = ProveRecord {
        theorem_id: &thm.id,
        strategy: a.strategy,
        result: &result,
    };
    println!("{}", serde_json::to_string(&record)?);
    if let Some(script) = &result.script {
        println!("proof: {script}");
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let recorded = ck.split.unwrap_or(SplitParams {
        seed: ck.config.seed,
        test_ratio: 0.3,
    });
    let split = load_split(&a.corpus, a.seed.unwrap_or(recorded.seed), a.test_ratio.unwrap_or(recorded.test_ratio))?;
    let entries = match a.split {
        SplitPart::Train => split.train,
        SplitPart::Test => split.test,
        SplitPart::All => split.train.into_iter().chain(split.test).collect(),
    };
    let theorems: Vec<Theorem> = entries.into_iter().map(|e| e.theorem).collect();
    let mut strategies = Vec::new();
    for s in a.strategies {
        if !strategies.contains(&s) {
            strategies.push(s);
        }
    }
    let cfg = eval_config(a.width.unwrap_or(ck.config.width), a.budget, a.dfs_depth, a.timing, a.threads);
    let report = evaluate(&theorems, &strategies, &ck.value, &ck.predictor(), &cfg);
    write_eval(&a.out, &report)?;
    for agg in &report.aggregates {
        println!(
            "{:<15} proved {}/{} ({:.1}%)",
            agg.strategy.to_string(),
            agg.proved,
            agg.theorems,
            agg.proved_pct
        );
    }
    Ok(())
}

fn eval_config(width: usize, budget: usize, dfs_depth: usize, timing: bool, threads: Option<usize>) -> EvalConfig {
    let mut cfg = EvalConfig {
        search: SearchConfig {
            width,
            budget,
            ..SearchConfig::default()
        },
        dfs_depth,
        timing,
        ..EvalConfig::default()
    };
    if let Some(t) = threads {
        cfg.threads = t.max(1);
    }
    cfg
}

pub const WIDTHS: [usize; 5] = [3, 5, 7, 9, 11];
pub const GAMMAS: [f64; 4] = [0.5, 0.7, 0.9, 0.99];

fn ablate(a: AblateArgs) -> Result<()> {
    let split = load_split(&a.corpus, a.seed, a.test_ratio)?;
    let theorems: Vec<Theorem> = split.test.iter().map(|e| e.theorem.clone()).collect();
    let mut base = TrainerConfig {
        seed: a.seed,
        ..TrainerConfig::default()
    };
    if let Some(n) = a.rl_epochs {
        base.rl_epochs = n;
    }
    let run = |label: String, cfg: TrainerConfig, strategy: Strategy| -> Result<(String, EvalReport)> {
        let (ck, _) = train_system(&split, &cfg)?;
        let ecfg = eval_config(cfg.width, a.budget, hyperprove::search::DEFAULT_DFS_DEPTH, false, a.threads);
        let report = evaluate(&theorems, &[strategy], &ck.value, &ck.predictor(), &ecfg);
        Ok((label, report))
    };
    let (name, runs): (&str, Vec<(String, EvalReport)>) = match a.sweep {
        Sweep::Width => (
            "width",
            WIDTHS
                .iter()
                .map(|&w| run(format!("width_{w}"), TrainerConfig { width: w, ..base.clone() }, Strategy::Astar))
                .collect::<Result<_>>()?,
        ),
        Sweep::Gamma => (
            "gamma",
            GAMMAS
                .iter()
                .map(|&g| run(format!("gamma_{g}"), TrainerConfig { gamma: g, ..base.clone() }, Strategy::Astar))
                .collect::<Result<_>>()?,
        ),
        Sweep::Scorer => {
            let (ck, _) = train_system(&split, &base)?;
            let ecfg = eval_config(base.width, a.budget, hyperprove::search::DEFAULT_DFS_DEPTH, false, a.threads);
            let p = ck.predictor();
            let runs = [("value_model", Strategy::Astar), ("probability_product", Strategy::BestfirstProb)]
                .into_iter()
                .map(|(label, s)| (label.to_string(), evaluate(&theorems, &[s], &ck.value, &p, &ecfg)))
                .collect();
            ("scorer", runs)
        }
        Sweep::ObligationTraining => (
            "obligation_training",
            [true, false]
                .into_iter()
                .map(|on| {
                    let label = if on { "on" } else { "off" };
                    run(
                        format!("obligation_training_{label}"),
                        TrainerConfig {
                            obligation_training: on,
                            ..base.clone()
                        },
                        Strategy::Astar,
                    )
                })
                .collect::<Result<_>>()?,
        ),
    };
    let dir = a.out.join(name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut union: BTreeSet<String> = BTreeSet::new();
    let mut settings = Vec::new();
    for (label, report) in &runs {
        write_eval(&dir.join(label), report)?;
        let agg = &report.aggregates[0];
        union.extend(report.proved_ids(agg.strategy).into_iter().map(str::to_string));
        settings.push(SweepRow {
            setting: label.clone(),
            strategy: agg.strategy.to_string(),
            theorems: agg.theorems,
            proved: agg.proved,
            proved_pct: agg.proved_pct,
            mean_proof_length: agg.mean_proof_length,
            mean_nodes_expanded: agg.mean_nodes_expanded,
        });
        println!("{label:<28} proved {}/{}", agg.proved, agg.theorems);
    }
    let summary = SweepSummary {
        sweep: name.to_string(),
        settings,
        union_proved: union.len(),
    };
    println!("union proved {}", summary.union_proved);
    write_sweep(&dir, &summary)
}

fn oracle(a: OracleArgs) -> Result<()> {
    let statement: Obligation = a.theorem.parse().with_context(|| format!("parsing theorem `{}`", a.theorem))?;
    let start = Hyperstate::single(statement);
    let result = match &a.checkpoint {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            let predictor = ck.predictor();
            let top = TopN {
                predictor: &predictor,
                width: a.width.unwrap_or(ck.config.width),
            };
            shortest_proof_with(&start, a.max_depth, &top)
        }
        None => shortest_proof(&start, a.max_depth),
    };
    println!("{}", serde_json::to_string(&result)?);
    if let Some(script) = &result.shortest_script {
        println!("proof: {script}");
    }
    Ok(())
}
