use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use semdiv_core::scorer::Objective;
use semdiv_core::synth::SamplingStrategy;

use crate::commands::{self, FilterArgs, SeedSource, TrainArgs};
use crate::config::Config;

#[derive(Debug, Parser)]
#[command(name = "semdiv", version, about = "Detect fine-grained semantic divergences in bitext")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic English-French seed corpus with parses and alignments.
    Toy {
        #[arg(long, default_value_t = 1000)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lexicon_out: Option<PathBuf>,
        #[arg(long)]
        scores_out: Option<PathBuf>,
    },
    /// Drop noisy pairs and optionally select a top-scoring seed set.
    Filter {
        /// `id<TAB>src<TAB>tgt` file.
        #[arg(long, conflicts_with_all = ["src", "tgt"])]
        input: Option<PathBuf>,
        /// Line-aligned source file, used with --tgt.
        #[arg(long, requires = "tgt")]
        src: Option<PathBuf>,
        #[arg(long, requires = "src")]
        tgt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// JSONL of rejected pairs with the rules that fired.
        #[arg(long)]
        rejected: Option<PathBuf>,
        /// `pair_id<TAB>score` similarity file for seed selection.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Keep the top k pairs by score as seeds.
        #[arg(long, requires = "scores")]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        dev_n: usize,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long)]
        train_out: Option<PathBuf>,
        #[arg(long)]
        dev_out: Option<PathBuf>,
    },
    /// Join pairs, source CoNLL-U parses and Pharaoh alignments into seed JSONL.
    Seeds {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        align: PathBuf,
        #[arg(long)]
        tgt_conllu: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate contrastive training items from seeds.
    Generate {
        /// Seed JSONL file, or a number N to use N toy-corpus seeds.
        #[arg(long)]
        seeds: SeedSource,
        /// Hypernym/hyponym TSV; toy seeds default to the toy lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// balanced | concatenation | divergence-ranking | a divergence type name.
        #[arg(long, default_value = "divergence-ranking")]
        strategy: SamplingStrategy,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// JSON list of seeds skipped by a generator.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train the divergence scorer.
    Train {
        /// Seed JSONL file, or a number N to use N toy-corpus seeds.
        #[arg(long)]
        seeds: SeedSource,
        /// Dev seeds; by default the last --dev-count seeds are held out.
        #[arg(long)]
        dev_seeds: Option<SeedSource>,
        #[arg(long, default_value_t = 500)]
        dev_count: usize,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// ce-random | ce-contrastive | margin | multitask
        #[arg(long)]
        objective: Option<Objective>,
        /// Contrastive sampling strategy (default divergence-ranking).
        #[arg(long)]
        strategy: Option<SamplingStrategy>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        rng_seed: Option<u64>,
        /// Search margins 3..8 and keep the best dev weighted F1.
        #[arg(long)]
        grid: bool,
        /// Subword vocabulary, one piece per line, `##` marking continuations.
        #[arg(long)]
        wordpiece: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch JSONL training log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a trained model against an annotated dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Dataset JSONL, or the released TSV (by `.tsv` extension).
        #[arg(long)]
        dataset: PathBuf,
        /// `pair_id<TAB>score` file for the similarity-threshold baseline.
        #[arg(long)]
        baseline_scores: Option<PathBuf>,
        /// Report JSON path; printed to stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for plots.csv, scores.svg and divpct.svg.
        #[arg(long)]
        plots: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Inter-annotator agreement of a dataset.
    Iaa {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Class counts and headline percentages of a dataset.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Run the annotation HTTP service.
    Serve {
        /// Annotated dataset for reference items and statistics.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// `id<TAB>src<TAB>tgt` pairs to annotate; defaults to the dataset's pairs.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Append-only JSONL journal, replayed at startup.
        #[arg(long)]
        journal: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Toy {
            seeds,
            rng_seed,
            out,
            lexicon_out,
            scores_out,
        } => commands::toy(seeds, rng_seed, &out, lexicon_out.as_deref(), scores_out.as_deref()),
        Command::Filter {
            input,
            src,
            tgt,
            out,
            rejected,
            scores,
            k,
            dev_n,
            split_seed,
            train_out,
            dev_out,
        } => commands::filter(
            FilterArgs {
                input: input.as_deref(),
                src: src.as_deref(),
                tgt: tgt.as_deref(),
                out: &out,
                rejected: rejected.as_deref(),
                scores: scores.as_deref(),
                k,
                dev_n,
                split_seed,
                train_out: train_out.as_deref(),
                dev_out: dev_out.as_deref(),
            },
            &cfg.filter,
        ),
        Command::Seeds {
            pairs,
            conllu,
            align,
            tgt_conllu,
            out,
        } => commands::assemble_seeds(&pairs, &conllu, &align, tgt_conllu.as_deref(), &out),
        Command::Generate {
            seeds,
            lexicon,
            strategy,
            rng_seed,
            out,
            log,
        } => commands::generate(&seeds, lexicon.as_deref(), strategy, rng_seed, &cfg.synth, &out, log.as_deref()),
        Command::Train {
            seeds,
            dev_seeds,
            dev_count,
            lexicon,
            objective,
            strategy,
            margin,
            lr,
            epochs,
            rng_seed,
            grid,
            wordpiece,
            out,
            log,
        } => {
            let t = &mut cfg.train;
            if let Some(v) = objective {
                t.objective = v;
            }
            if let Some(v) = margin {
                t.margin = v;
            }
            if let Some(v) = lr {
                t.lr = v;
            }
            if let Some(v) = epochs {
                t.max_epochs = v;
            }
            if let Some(v) = rng_seed {
                t.rng_seed = v;
            }
            commands::train_cmd(
                TrainArgs {
                    seeds: &seeds,
                    dev_seeds: dev_seeds.as_ref(),
                    dev_count,
                    lexicon: lexicon.as_deref(),
                    strategy,
                    grid,
                    wordpiece: wordpiece.as_deref(),
                    out: &out,
                    log_out: log.as_deref(),
                },
                &cfg.train,
                &cfg.synth,
            )
        }
        Command::Evaluate {
            model,
            dataset,
            baseline_scores,
            out,
            plots,
            threshold,
        } => {
            if let Some(t) = threshold {
                cfg.eval.threshold = t;
            }
            commands::evaluate_cmd(
                &model,
                &dataset,
                baseline_scores.as_deref(),
                out.as_deref(),
                plots.as_deref(),
                &cfg.eval,
            )
        }
        Command::Iaa { dataset } => commands::iaa(&dataset),
        Command::Stats { dataset } => commands::stats(&dataset),
        Command::Serve {
            dataset,
            pairs,
            journal,
            addr,
        } => commands::serve(dataset.as_deref(), pairs.as_deref(), journal.as_deref(), &addr, &cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
