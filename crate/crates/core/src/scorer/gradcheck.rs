use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::loss::{example_loss, LossSpec, TrainExample};
use super::model::{Layout, ScorerParams};
use super::ScorerError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub eps: f64,
    pub coords: usize,
    /// Lower bound on the relative-error denominator, so coordinates with a
    /// vanishing gradient are judged by absolute error.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            eps: 1e-5,
            coords: 100,
            floor: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_coord: usize,
    pub worst_tensor: &'static str,
    pub checked: usize,
}

/// Compares the analytic gradient of one example's loss with central
/// differences on a random sample of the coordinates it touches.
pub fn grad_check(
    params: &ScorerParams,
    ex: &TrainExample,
    spec: LossSpec,
    cfg: GradCheckConfig,
) -> Result<GradCheckReport, ScorerError> {
    grad_check_with(params, ex, spec, cfg, |_, _| {})
}

/// Like [`grad_check`], with a hook that may alter the analytic gradient
/// before comparison.
pub fn grad_check_with<F: Fn(&Layout, &mut [f64])>(
    params: &ScorerParams,
    ex: &TrainExample,
    spec: LossSpec,
    cfg: GradCheckConfig,
    mutate: F,
) -> Result<GradCheckReport, ScorerError> {
    let layout = params.layout();
    let mut grad = vec![0.0; params.theta.len()];
    example_loss(params, ex, spec, Some((&mut grad, 1.0)))?;
    mutate(&layout, &mut grad);

    let mut coords: Vec<usize> = (layout.emb().end..layout.total()).collect();
    let mut ids = BTreeSet::new();
    let pairs: Vec<_> = match ex {
        TrainExample::Ranked { x, y, .. } => vec![x, y],
        TrainExample::Labeled { pair, .. } => vec![pair],
    };
    for p in pairs {
        ids.extend(p.src.ids.iter().chain(&p.tgt.ids).copied());
    }
    for id in ids {
        coords.extend(layout.emb_row(id));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    coords.shuffle(&mut rng);
    coords.truncate(cfg.coords);

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_coord: 0,
        worst_tensor: "",
        checked: coords.len(),
    };
    for &c in &coords {
        let orig = probe.theta[c];
        probe.theta[c] = orig + cfg.eps;
        let up = example_loss(&probe, ex, spec, None)?;
        probe.theta[c] = orig - cfg.eps;
        let down = example_loss(&probe, ex, spec, None)?;
        probe.theta[c] = orig;
        let numeric = (up - down) / (2.0 * cfg.eps);
        let analytic = grad[c];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(cfg.floor);
        if rel > report.max_rel_error || report.worst_tensor.is_empty() {
            report.max_rel_error = rel.max(report.max_rel_error);
            report.worst_coord = c;
            report.worst_tensor = layout.names().into_iter().find(|(_, r)| r.contains(&c)).map_or("?", |(n, _)| n);
        }
    }
    Ok(report)
}
