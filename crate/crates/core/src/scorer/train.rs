use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{DevSet, LabeledPair};
use super::loss::{example_loss, ranked_example, LossSpec, TrainExample};
use super::model::{sigmoid, Activation, Dims, DivergenceModel, ScorerParams};
use super::vocab::{Vocab, WordPiece};
use super::ScorerError;
use crate::labels::SentenceLabel;
use crate::metrics::classification_report_with_labels;
use crate::synth::ContrastiveItem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Cross-entropy on one randomly chosen labelled example per seed.
    CeRandom,
    /// Cross-entropy on both members of every contrastive item.
    CeContrastive,
    Margin,
    /// Margin plus token-level cross-entropy on the divergent member.
    MultiTask,
}

impl Objective {
    pub fn is_contrastive(self) -> bool {
        !matches!(self, Objective::CeRandom)
    }

    pub fn is_margin(self) -> bool {
        matches!(self, Objective::Margin | Objective::MultiTask)
    }
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").to_lowercase().as_str() {
            "ce_random" => Ok(Objective::CeRandom),
            "ce_contrastive" => Ok(Objective::CeContrastive),
            "margin" => Ok(Objective::Margin),
            "multitask" | "multi_task" => Ok(Objective::MultiTask),
            _ => Err(format!("unknown objective {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingMetric {
    WeightedF1,
    RankingAccuracy,
    DevLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub objective: Objective,
    pub margin: f64,
    pub lr: f64,
    pub max_epochs: usize,
    /// Items per step; by default 32 labelled pairs or 16 contrastive items.
    pub batch_size: Option<usize>,
    pub early_stopping_metric: StoppingMetric,
    /// Stop after this many epochs without improvement.
    pub patience: Option<usize>,
    pub token_weight: f64,
    pub rng_seed: u64,
    pub dims: Dims,
    pub activation: Activation,
    pub min_count: usize,
    pub lowercase: bool,
    /// Fit the output bias on the dev set after margin training.
    pub calibrate: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            objective: Objective::MultiTask,
            margin: 5.0,
            lr: 5e-3,
            max_epochs: 5,
            batch_size: None,
            early_stopping_metric: StoppingMetric::WeightedF1,
            patience: None,
            token_weight: 1.0,
            rng_seed: 0,
            dims: Dims::default(),
            activation: Activation::Tanh,
            min_count: 1,
            lowercase: false,
            calibrate: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ScorerError> {
        let bad = |m: &str| Err(ScorerError::Config(m.into()));
        if self.objective.is_margin() && !(self.margin > 0.0) {
            return bad("margin must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if self.batch_size == Some(0) {
            return bad("batch_size must be at least 1");
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return bad("learning rate must be finite and non-negative");
        }
        if self.dims.d == 0 || self.dims.h == 0 {
            return bad("dimensions must be positive");
        }
        if !(self.token_weight >= 0.0) {
            return bad("token_weight must be non-negative");
        }
        Ok(())
    }

    fn loss_spec(&self) -> LossSpec {
        LossSpec {
            margin: self.margin,
            token_weight: if self.objective == Objective::MultiTask {
                self.token_weight
            } else {
                0.0
            },
        }
    }

    fn batch(&self) -> usize {
        self.batch_size.unwrap_or(if self.objective.is_contrastive() { 16 } else { 32 })
    }
}

/// Training input matching the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainData {
    Contrastive(Vec<ContrastiveItem>),
    Labeled(Vec<LabeledPair>),
}

impl TrainData {
    fn sentences(&self) -> Vec<&[String]> {
        match self {
            TrainData::Contrastive(items) => items
                .iter()
                .flat_map(|i| {
                    [
                        i.x.pair.src_tokens.as_slice(),
                        i.x.pair.tgt_tokens.as_slice(),
                        i.y.src_tokens.as_slice(),
                        i.y.tgt_tokens.as_slice(),
                    ]
                })
                .collect(),
            TrainData::Labeled(v) => v
                .iter()
                .flat_map(|l| [l.pair.src_tokens.as_slice(), l.pair.tgt_tokens.as_slice()])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_metric: f64,
    pub wallclock_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ScorerParams,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
    /// Bias added to the sentence output after training, if any.
    pub calibration_bias: Option<f64>,
}

impl TrainOutcome {
    pub fn history_jsonl(&self) -> String {
        self.history
            .iter()
            .map(|e| serde_json::to_string(e).expect("epoch log serializes") + "\n")
            .collect()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..theta.len() {
            let g = grad[i];
            if g == 0.0 && self.m[i] == 0.0 {
                continue;
            }
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g;
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g * g;
            theta[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

fn build_units(params: &ScorerParams, data: &TrainData, objective: Objective) -> Result<Vec<Vec<TrainExample>>, ScorerError> {
    match (data, objective) {
        (TrainData::Labeled(v), Objective::CeRandom) => Ok(v
            .iter()
            .map(|l| {
                vec![TrainExample::Labeled {
                    pair: params.encode(&l.pair),
                    equivalent: l.label == SentenceLabel::Equivalent,
                }]
            })
            .collect()),
        (TrainData::Contrastive(items), Objective::CeContrastive) => Ok(items
            .iter()
            .map(|i| {
                vec![
                    TrainExample::Labeled {
                        pair: params.encode(&i.x.pair),
                        equivalent: i.x.dtype.is_none(),
                    },
                    TrainExample::Labeled {
                        pair: params.encode(&i.y),
                        equivalent: false,
                    },
                ]
            })
            .collect()),
        (TrainData::Contrastive(items), Objective::Margin | Objective::MultiTask) => {
            items.iter().map(|i| ranked_example(params, i).map(|e| vec![e])).collect()
        }
        _ => Err(ScorerError::Config(format!("training data does not match objective {objective:?}"))),
    }
}

/// Logistic bias `c` maximizing the likelihood of the labels given scores
/// shifted by `c`: the root of `Σ σ(s_i + c) = #equivalent`.
pub fn fit_bias(scores: &[f64], equivalent: &[bool]) -> Option<f64> {
    let pos = equivalent.iter().filter(|e| **e).count() as f64;
    if pos == 0.0 || pos == scores.len() as f64 || scores.iter().any(|s| !s.is_finite()) {
        return None;
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let f = |c: f64| scores.iter().map(|s| sigmoid(s + c)).sum::<f64>() - pos;
    let (mut lo, mut hi) = (-max - 50.0, -min + 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Dev-set evaluation of a scorer, optionally after shifting its scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DevReport {
    pub ranking_accuracy: f64,
    pub weighted_f1: f64,
    pub bias: f64,
}

/// Weighted F1 on the balanced dev set, thresholding `σ(score + bias)` at
/// 0.5, plus ranking accuracy over all groups.
pub fn evaluate_dev(model: &dyn DivergenceModel, dev: &DevSet, bias: f64) -> Result<DevReport, ScorerError> {
    let ranking_accuracy = dev.scores(model)?.ranking_accuracy();
    let balanced = dev.balanced();
    let mut gold = Vec::with_capacity(balanced.len());
    let mut pred = Vec::with_capacity(balanced.len());
    for l in &balanced {
        let s = model.score(&l.pair)? + bias;
        gold.push(l.label);
        pred.push(if sigmoid(s) > 0.5 {
            SentenceLabel::Equivalent
        } else {
            SentenceLabel::Divergent
        });
    }
    let weighted_f1 = if gold.is_empty() {
        0.0
    } else {
        classification_report_with_labels(&gold, &pred, &[SentenceLabel::Equivalent, SentenceLabel::Divergent])
            .map_err(|e| ScorerError::Config(e.to_string()))?
            .weighted_f1
    };
    Ok(DevReport {
        ranking_accuracy,
        weighted_f1,
        bias,
    })
}

/// Calibration bias for a scorer on the balanced dev set.
pub fn dev_bias(model: &dyn DivergenceModel, dev: &DevSet) -> Result<Option<f64>, ScorerError> {
    let balanced = dev.balanced();
    let scores = balanced.iter().map(|l| model.score(&l.pair)).collect::<Result<Vec<_>, _>>()?;
    let eq: Vec<bool> = balanced.iter().map(|l| l.label == SentenceLabel::Equivalent).collect();
    Ok(fit_bias(&scores, &eq))
}

fn dev_loss(params: &ScorerParams, dev: &DevSet, cfg: &TrainConfig) -> Result<f64, ScorerError> {
    let mut total = 0.0;
    let mut n = 0usize;
    if cfg.objective.is_margin() {
        let spec = cfg.loss_spec();
        for g in &dev.groups {
            let x = params.encode(&g.equivalent);
            for d in &g.divergents {
                let y = params.encode(&d.pair);
                let z = super::loss::unit_labels(&y, &d.labels)?;
                total += example_loss(params, &TrainExample::Ranked { x: x.clone(), y, z }, spec, None)?;
                n += 1;
            }
        }
    } else {
        for l in dev.balanced() {
            let ex = TrainExample::Labeled {
                pair: params.encode(&l.pair),
                equivalent: l.label == SentenceLabel::Equivalent,
            };
            total += example_loss(params, &ex, cfg.loss_spec(), None)?;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// Higher is better.
fn dev_metric(params: &ScorerParams, dev: &DevSet, cfg: &TrainConfig) -> Result<f64, ScorerError> {
    match cfg.early_stopping_metric {
        StoppingMetric::RankingAccuracy => Ok(dev.scores(params)?.ranking_accuracy()),
        StoppingMetric::WeightedF1 => {
            let bias = if cfg.objective.is_margin() && cfg.calibrate {
                dev_bias(params, dev)?.unwrap_or(0.0)
            } else {
                0.0
            };
            Ok(evaluate_dev(params, dev, bias)?.weighted_f1)
        }
        StoppingMetric::DevLoss => Ok(-dev_loss(params, dev, cfg)?),
    }
}

/// Builds the vocabulary from the training data and trains.
pub fn train(data: &TrainData, dev: &DevSet, cfg: &TrainConfig, wordpiece: Option<WordPiece>) -> Result<TrainOutcome, ScorerError> {
    let vocab = Vocab::build(data.sentences(), cfg.min_count, cfg.lowercase, wordpiece);
    train_with_vocab(vocab, data, dev, cfg)
}

/// Adam over shuffled minibatches for at most `max_epochs`, keeping the
/// parameters of the best dev epoch.
pub fn train_with_vocab(vocab: Vocab, data: &TrainData, dev: &DevSet, cfg: &TrainConfig) -> Result<TrainOutcome, ScorerError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut params = ScorerParams::init(vocab, cfg.dims, cfg.activation, &mut rng);
    let units = build_units(&params, data, cfg.objective)?;
    if units.is_empty() {
        return Err(ScorerError::Config("empty training set".into()));
    }
    let spec = cfg.loss_spec();
    let mut adam = Adam::new(params.theta.len(), cfg.lr);
    let mut grad = vec![0.0; params.theta.len()];
    let mut order: Vec<usize> = (0..units.len()).collect();
    let started = Instant::now();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut since_best = 0usize;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for (step, chunk) in order.chunks(cfg.batch()).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let count: usize = chunk.iter().map(|&u| units[u].len()).sum();
            let scale = 1.0 / count as f64;
            let mut batch_loss = 0.0;
            for &u in chunk {
                for ex in &units[u] {
                    batch_loss += example_loss(&params, ex, spec, Some((&mut grad, scale)))?;
                }
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(ScorerError::NonFinite { epoch, step });
            }
            adam.step(&mut params.theta, &grad);
            epoch_loss += batch_loss;
            seen += count;
        }
        let metric = dev_metric(&params, dev, cfg)?;
        let train_loss = epoch_loss / seen as f64;
        log::info!("epoch {epoch}: train loss {train_loss:.5}, dev metric {metric:.5}");
        history.push(EpochLog {
            epoch,
            train_loss,
            dev_metric: metric,
            wallclock_s: started.elapsed().as_secs_f64(),
        });
        if best.as_ref().is_none_or(|(m, _, _)| metric > *m) {
            best = Some((metric, epoch, params.theta.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience.is_some_and(|p| since_best >= p) {
                break;
            }
        }
    }
    let (_, best_epoch, theta) = best.expect("at least one epoch");
    params.theta = theta;
    let mut calibration_bias = None;
    if cfg.objective.is_margin() && cfg.calibrate && !dev.is_empty() {
        if let Some(c) = dev_bias(&params, dev)? {
            let b2 = params.layout().b2();
            params.theta[b2] += c;
            calibration_bias = Some(c);
        }
    }
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        calibration_bias,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub margin: f64,
    pub weighted_f1: f64,
    pub ranking_accuracy: f64,
}

/// Trains once per margin and keeps the run with the best calibrated dev
/// weighted F1; ties go to the smaller margin.
pub fn grid_search_margin(
    data: &TrainData,
    dev: &DevSet,
    base: &TrainConfig,
    margins: &[f64],
    wordpiece: Option<WordPiece>,
) -> Result<(TrainOutcome, Vec<GridPoint>), ScorerError> {
    let mut best: Option<(f64, TrainOutcome)> = None;
    let mut grid = Vec::new();
    for &m in margins {
        let cfg = TrainConfig {
            margin: m,
            ..base.clone()
        };
        let out = train(data, dev, &cfg, wordpiece.clone())?;
        let r = evaluate_dev(&out.params, dev, 0.0)?;
        grid.push(GridPoint {
            margin: m,
            weighted_f1: r.weighted_f1,
            ranking_accuracy: r.ranking_accuracy,
        });
        if best.as_ref().is_none_or(|(f, _)| r.weighted_f1 > *f) {
            best = Some((r.weighted_f1, out));
        }
    }
    let (_, out) = best.ok_or_else(|| ScorerError::Config("empty margin grid".into()))?;
    Ok((out, grid))
}

pub const MARGIN_GRID: [f64; 6] = [3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
