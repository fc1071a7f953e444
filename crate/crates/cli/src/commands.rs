use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use semdiv_core::corpus::{
    filter_corpus, parse_conllu, parse_pharaoh_file, parse_parallel_tsv, parse_score_tsv, read_parallel_files,
    select_seed, FilterConfig, SentencePair,
};
use semdiv_core::evaluate::{evaluate, EvalConfig};
use semdiv_core::metrics::render_histogram_svg;
use semdiv_core::refresd::{dataset_agreement, dataset_stats, import_refresd_tsv, load_refresd, Dataset};
use semdiv_core::scorer::{
    build_ce_random_set, build_dev_set, evaluate_dev, grid_search_margin, train, Objective, ScorerParams, TrainConfig,
    TrainData, WordPiece, MARGIN_GRID,
};
use semdiv_core::synth::{
    build_contrastive_set, write_items_jsonl, LexicalResource, Resources, SamplingStrategy, Seed, SynthConfig,
};
use semdiv_core::toycorpus;
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::service::{self, AppState, Corpus};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Prints a JSON value on stdout.
pub fn emit<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// Either a seed JSONL file or a count of toy-corpus seeds.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedSource {
    File(PathBuf),
    Toy(usize),
}

impl FromStr for SeedSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.parse::<usize>() {
            Ok(n) if !Path::new(s).exists() => Ok(SeedSource::Toy(n)),
            _ => Ok(SeedSource::File(PathBuf::from(s))),
        }
    }
}

pub fn write_seeds_jsonl(seeds: &[Seed]) -> String {
    seeds
        .iter()
        .map(|s| serde_json::to_string(s).expect("seed serializes") + "\n")
        .collect()
}

pub fn parse_seeds_jsonl(text: &str) -> Result<Vec<Seed>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("seed line {}", i + 1)))
        .collect()
}

/// Seeds plus the lexicon to generate with. Toy seeds bring their own.
pub fn load_seeds(src: &SeedSource, lexicon: Option<&Path>, extra: usize, rng_seed: u64) -> Result<(Vec<Seed>, LexicalResource)> {
    let lex = match lexicon {
        Some(p) => Some(LexicalResource::from_tsv(&read(p)?).with_context(|| format!("in {}", p.display()))?),
        None => None,
    };
    match src {
        SeedSource::Toy(n) => {
            let toy = toycorpus::generate(n + extra, rng_seed);
            Ok((toy.seeds, lex.unwrap_or(toy.lexicon)))
        }
        SeedSource::File(p) => {
            let seeds = parse_seeds_jsonl(&read(p)?).with_context(|| format!("in {}", p.display()))?;
            if lex.is_none() {
                log::warn!("no lexicon given; lexical substitution will be skipped");
            }
            Ok((seeds, lex.unwrap_or_default()))
        }
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    if path.extension().is_some_and(|e| e == "tsv") {
        let (ds, report) = import_refresd_tsv(&read(path)?).with_context(|| format!("in {}", path.display()))?;
        if !report.label_mismatches.is_empty() {
            log::warn!(
                "{} pairs carry a label that differs from the recomputed vote",
                report.label_mismatches.len()
            );
        }
        Ok(ds)
    } else {
        load_refresd(path).map_err(|e| anyhow!(e))
    }
}

pub fn toy(n: usize, rng_seed: u64, out: &Path, lexicon_out: Option<&Path>, scores_out: Option<&Path>) -> Result<()> {
    let toy = toycorpus::generate(n, rng_seed);
    write(out, &write_seeds_jsonl(&toy.seeds))?;
    if let Some(p) = lexicon_out {
        write(p, &toy.lexicon.to_tsv())?;
    }
    if let Some(p) = scores_out {
        let text: String = toy.scores.iter().map(|s| format!("{}\t{}\n", s.pair_id, s.score)).collect();
        write(p, &text)?;
    }
    emit(&json!({ "seeds": toy.seeds.len(), "lexicon_entries": toy.lexicon.len() }))
}

pub struct FilterArgs<'a> {
    pub input: Option<&'a Path>,
    pub src: Option<&'a Path>,
    pub tgt: Option<&'a Path>,
    pub out: &'a Path,
    pub rejected: Option<&'a Path>,
    pub scores: Option<&'a Path>,
    pub k: Option<usize>,
    pub dev_n: usize,
    pub split_seed: u64,
    pub train_out: Option<&'a Path>,
    pub dev_out: Option<&'a Path>,
}

fn pairs_tsv(pairs: &[SentencePair]) -> String {
    pairs
        .iter()
        .map(|p| format!("{}\t{}\t{}\n", p.id, p.src_raw, p.tgt_raw))
        .collect()
}

pub fn filter(a: FilterArgs<'_>, cfg: &FilterConfig) -> Result<()> {
    let pairs = match (a.input, a.src, a.tgt) {
        (Some(p), None, None) => parse_parallel_tsv(&read(p)?)?,
        (None, Some(s), Some(t)) => read_parallel_files(&read(s)?, &read(t)?)?,
        _ => bail!("give either --input or both --src and --tgt"),
    };
    let total = pairs.len();
    let (kept, rejected) = filter_corpus(pairs, cfg);
    write(a.out, &pairs_tsv(&kept))?;
    if let Some(p) = a.rejected {
        let text: String = rejected.iter().map(|r| serde_json::to_string(r).expect("serializes") + "\n").collect();
        write(p, &text)?;
    }
    let mut by_reason: BTreeMap<String, usize> = BTreeMap::new();
    for r in &rejected {
        for reason in &r.reasons {
            *by_reason.entry(serde_json::to_value(reason)?.as_str().unwrap_or("?").to_string()).or_default() += 1;
        }
    }
    let mut summary = json!({ "input": total, "kept": kept.len(), "rejected": rejected.len(), "by_reason": by_reason });
    if let Some(k) = a.k {
        let scores_path = a.scores.ok_or_else(|| anyhow!("--k needs --scores"))?;
        let scores = parse_score_tsv(&read(scores_path)?)?;
        let split = select_seed(&kept, &scores, k, a.dev_n, a.split_seed)?;
        if let Some(p) = a.train_out {
            write(p, &pairs_tsv(&split.train))?;
        }
        if let Some(p) = a.dev_out {
            write(p, &pairs_tsv(&split.dev))?;
        }
        summary["seed_train"] = json!(split.train.len());
        summary["seed_dev"] = json!(split.dev.len());
    }
    emit(&summary)
}

/// Joins pairs with source parses, alignments and optional target parses
/// (all in the same order) into seeds.
pub fn assemble_seeds(pairs: &Path, conllu: &Path, align: &Path, tgt_conllu: Option<&Path>, out: &Path) -> Result<()> {
    let pairs = parse_parallel_tsv(&read(pairs)?)?;
    let parses = parse_conllu(&read(conllu)?)?;
    let aligns = parse_pharaoh_file(&read(align)?)?;
    let tgt = match tgt_conllu {
        Some(p) => Some(parse_conllu(&read(p)?)?),
        None => None,
    };
    if parses.len() != pairs.len() || aligns.len() != pairs.len() || tgt.as_ref().is_some_and(|t| t.len() != pairs.len()) {
        bail!(
            "{} pairs, {} parses, {} alignments{}: counts must match",
            pairs.len(),
            parses.len(),
            aligns.len(),
            tgt.as_ref().map(|t| format!(", {} target parses", t.len())).unwrap_or_default()
        );
    }
    let mut seeds = Vec::with_capacity(pairs.len());
    for (i, ((p, parse), alignment)) in pairs.into_iter().zip(parses).zip(aligns).enumerate() {
        let (tgt_tokens, tgt_upos) = match &tgt {
            Some(t) => (t[i].forms.clone(), Some(t[i].tree.upos.clone())),
            None => (p.tgt_tokens.clone(), None),
        };
        let pair = SentencePair {
            src_tokens: parse.forms.clone(),
            tgt_tokens,
            ..p
        };
        let seed = Seed {
            pair,
            src_parse: parse,
            tgt_upos,
            alignment,
        };
        seed.validate().with_context(|| format!("seed {}", i + 1))?;
        seeds.push(seed);
    }
    write(out, &write_seeds_jsonl(&seeds))?;
    emit(&json!({ "seeds": seeds.len() }))
}

pub fn generate(
    seeds: &SeedSource,
    lexicon: Option<&Path>,
    strategy: SamplingStrategy,
    rng_seed: u64,
    synth: &SynthConfig,
    out: &Path,
    log_out: Option<&Path>,
) -> Result<()> {
    let (seeds, lex) = load_seeds(seeds, lexicon, 0, rng_seed)?;
    let res = Resources::from_seeds(&seeds, lex, synth.clone());
    let (items, log) = build_contrastive_set(&seeds, strategy, &res.generators(), rng_seed);
    write(out, &write_items_jsonl(&items))?;
    if let Some(p) = log_out {
        write(p, &serde_json::to_string_pretty(&log)?)?;
    }
    emit(&json!({ "seeds": seeds.len(), "items": items.len(), "skipped": log.skipped.len() }))
}

pub struct TrainArgs<'a> {
    pub seeds: &'a SeedSource,
    pub dev_seeds: Option<&'a SeedSource>,
    pub dev_count: usize,
    pub lexicon: Option<&'a Path>,
    pub strategy: Option<SamplingStrategy>,
    pub grid: bool,
    pub wordpiece: Option<&'a Path>,
    pub out: &'a Path,
    pub log_out: Option<&'a Path>,
}

pub fn train_cmd(a: TrainArgs<'_>, cfg: &TrainConfig, synth: &SynthConfig) -> Result<()> {
    cfg.validate()?;
    let extra = if a.dev_seeds.is_none() { a.dev_count } else { 0 };
    let (mut seeds, lex) = load_seeds(a.seeds, a.lexicon, extra, cfg.rng_seed)?;
    let dev_seeds = match a.dev_seeds {
        Some(src) => load_seeds(src, None, 0, cfg.rng_seed.wrapping_add(1))?.0,
        None => {
            if seeds.len() <= a.dev_count {
                bail!("{} seeds cannot spare {} for the dev set", seeds.len(), a.dev_count);
            }
            seeds.split_off(seeds.len() - a.dev_count)
        }
    };
    let all: Vec<Seed> = seeds.iter().chain(&dev_seeds).cloned().collect();
    let res = Resources::from_seeds(&all, lex, synth.clone());
    let gens = res.generators();
    let data = if cfg.objective == Objective::CeRandom {
        TrainData::Labeled(build_ce_random_set(&seeds, &gens, cfg.rng_seed).0)
    } else {
        let strategy = a.strategy.unwrap_or(SamplingStrategy::DivergenceRanking);
        TrainData::Contrastive(build_contrastive_set(&seeds, strategy, &gens, cfg.rng_seed).0)
    };
    let (dev, _) = build_dev_set(&dev_seeds, &gens, cfg.rng_seed.wrapping_add(1));
    let wp = match a.wordpiece {
        Some(p) => Some(WordPiece::from_lines(&read(p)?)),
        None => None,
    };
    let (outcome, grid) = if a.grid {
        if !cfg.objective.is_margin() {
            bail!("--grid applies to margin objectives");
        }
        let (o, g) = grid_search_margin(&data, &dev, cfg, &MARGIN_GRID, wp)?;
        (o, Some(g))
    } else {
        (train(&data, &dev, cfg, wp)?, None)
    };
    outcome.params.save(a.out)?;
    if let Some(p) = a.log_out {
        write(p, &outcome.history_jsonl())?;
    }
    let report = evaluate_dev(&outcome.params, &dev, 0.0)?;
    emit(&json!({
        "train_seeds": seeds.len(),
        "dev_groups": dev.len(),
        "best_epoch": outcome.best_epoch,
        "calibration_bias": outcome.calibration_bias,
        "dev": report,
        "grid": grid,
    }))
}

pub fn evaluate_cmd(
    model: &Path,
    dataset: &Path,
    baseline: Option<&Path>,
    out: Option<&Path>,
    plots: Option<&Path>,
    cfg: &EvalConfig,
) -> Result<()> {
    let params = ScorerParams::load(model)?;
    let ds = load_dataset(dataset)?;
    let scores: Option<HashMap<String, f64>> = match baseline {
        Some(p) => Some(parse_score_tsv(&read(p)?)?.into_iter().map(|s| (s.pair_id, s.score)).collect()),
        None => None,
    };
    let ev = evaluate(&params, &ds, scores.as_ref(), cfg)?;
    if let Some(dir) = plots {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let bins = cfg.histogram_bins;
        write(&dir.join("plots.csv"), &ev.plot_csv(bins))?;
        write(
            &dir.join("scores.svg"),
            &render_histogram_svg(&ev.score_histogram(bins), "Sentence scores by class", "score"),
        )?;
        write(
            &dir.join("divpct.svg"),
            &render_histogram_svg(&ev.divpct_histogram(bins), "Predicted DIV% by class", "DIV %"),
        )?;
    }
    match out {
        Some(p) => {
            write(p, &serde_json::to_string_pretty(&ev.report)?)?;
            emit(&json!({ "pairs": ev.report.pairs, "weighted_f1": ev.report.sentence.weighted_f1 }))
        }
        None => emit(&ev.report),
    }
}

pub fn iaa(dataset: &Path) -> Result<()> {
    let ds = load_dataset(dataset)?;
    emit(&dataset_agreement(&ds)?)
}

pub fn stats(dataset: &Path) -> Result<()> {
    let ds = load_dataset(dataset)?;
    emit(&dataset_stats(&ds))
}

pub fn serve(
    dataset: Option<&Path>,
    pairs: Option<&Path>,
    journal: Option<&Path>,
    addr: &str,
    cfg: &Config,
) -> Result<()> {
    let reference = match dataset {
        Some(p) => load_dataset(p)?,
        None => Dataset::default(),
    };
    let pool = match pairs {
        Some(p) => parse_parallel_tsv(&read(p)?)?,
        None => reference.pairs.iter().map(|a| a.pair.clone()).collect(),
    };
    if journal.is_none() {
        log::warn!("no --journal given; annotations will not be persisted");
    }
    let app = AppState::open(Corpus { pool, reference }, cfg.service.clone(), journal)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(app, addr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_source() {
        assert_eq!("5000".parse::<SeedSource>().unwrap(), SeedSource::Toy(5000));
        assert_eq!(
            "seeds.jsonl".parse::<SeedSource>().unwrap(),
            SeedSource::File("seeds.jsonl".into())
        );
    }

    #[test]
    fn seeds_round_trip() {
        let toy = toycorpus::generate(5, 1);
        assert_eq!(parse_seeds_jsonl(&write_seeds_jsonl(&toy.seeds)).unwrap(), toy.seeds);
    }
}
