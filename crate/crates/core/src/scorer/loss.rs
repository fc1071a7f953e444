use super::model::{EncodedPair, Logits, ScorerParams};
use super::ScorerError;
use crate::labels::{PairLabels, SentenceLabel};
use crate::synth::ContrastiveItem;

/// Hinge on the score gap: `max(0, ξ − F(x) + F(y))`.
pub fn margin_loss(score_x: f64, score_y: f64, margin: f64) -> f64 {
    (margin - score_x + score_y).max(0.0)
}

/// Mean hinge over a batch of `(F(x), F(y))` pairs.
pub fn margin_loss_batch(scores: &[(f64, f64)], margin: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().map(|&(x, y)| margin_loss(x, y, margin)).sum::<f64>() / scores.len() as f64
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary cross-entropy of `logistic(score)` as the probability of the
/// equivalent class.
pub fn ce_loss(score: f64, label: SentenceLabel) -> f64 {
    match label {
        SentenceLabel::Equivalent => softplus(-score),
        SentenceLabel::Divergent => softplus(score),
    }
}

/// Two-class softmax cross-entropy and its gradient with respect to the
/// logits. Class 1 is DIV.
pub fn token_ce(logits: Logits, div: bool) -> (f64, Logits) {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    let p = [(logits[0] - lse).exp(), (logits[1] - lse).exp()];
    let k = div as usize;
    let mut g = p;
    g[k] -= 1.0;
    (lse - logits[k], g)
}

/// Per-unit DIV flags for y, expanding word labels over subword units.
pub fn unit_labels(enc: &EncodedPair, z: &PairLabels) -> Result<Vec<bool>, ScorerError> {
    if z.src.len() != enc.src.words || z.tgt.len() != enc.tgt.words {
        return Err(ScorerError::LabelMismatch {
            expected: enc.src.words + enc.tgt.words,
            got: z.len(),
        });
    }
    let src = enc.src.word_of.iter().map(|&w| z.src[w].is_div());
    let tgt = enc.tgt.word_of.iter().map(|&w| z.tgt[w].is_div());
    Ok(src.chain(tgt).collect())
}

/// What one training example contributes.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainExample {
    Ranked { x: EncodedPair, y: EncodedPair, z: Vec<bool> },
    Labeled { pair: EncodedPair, equivalent: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub margin: f64,
    /// Weight on the token term; 0 gives the plain margin objective.
    pub token_weight: f64,
}

/// Loss of one example; when `grad` is given, adds `scale ×` its gradient.
pub fn example_loss(
    params: &ScorerParams,
    ex: &TrainExample,
    spec: LossSpec,
    grad: Option<(&mut [f64], f64)>,
) -> Result<f64, ScorerError> {
    match ex {
        TrainExample::Labeled { pair, equivalent } => {
            let c = params.sentence_forward(pair)?;
            let label = if *equivalent {
                SentenceLabel::Equivalent
            } else {
                SentenceLabel::Divergent
            };
            let loss = ce_loss(c.score, label);
            if let Some((g, scale)) = grad {
                let target = if *equivalent { 1.0 } else { 0.0 };
                let d = super::model::sigmoid(c.score) - target;
                params.sentence_backward(pair, &c, scale * d, g);
            }
            Ok(loss)
        }
        TrainExample::Ranked { x, y, z } => {
            if z.len() != y.units() {
                return Err(ScorerError::LabelMismatch {
                    expected: y.units(),
                    got: z.len(),
                });
            }
            let cx = params.sentence_forward(x)?;
            let cy = params.sentence_forward(y)?;
            let hinge = spec.margin - cx.score + cy.score;
            let mut loss = hinge.max(0.0);
            let toks = if spec.token_weight != 0.0 {
                Some(params.tokens_forward(y)?)
            } else {
                None
            };
            let inv = 1.0 / y.units() as f64;
            let mut tok_grads = Vec::new();
            if let Some(toks) = &toks {
                let mut term = 0.0;
                for (c, &div) in toks.iter().zip(z) {
                    let (l, g) = token_ce(c.logits, div);
                    term += l;
                    tok_grads.push(g);
                }
                loss += spec.token_weight * term * inv;
            }
            if let Some((g, scale)) = grad {
                if hinge > 0.0 {
                    params.sentence_backward(x, &cx, -scale, g);
                    params.sentence_backward(y, &cy, scale, g);
                }
                if let Some(toks) = &toks {
                    let w = scale * spec.token_weight * inv;
                    for (c, dl) in toks.iter().zip(tok_grads) {
                        params.token_backward(c, [w * dl[0], w * dl[1]], g);
                    }
                }
            }
            Ok(loss)
        }
    }
}

/// Margin plus token-weighted mean token cross-entropy of y for one item.
pub fn multitask_loss(params: &ScorerParams, item: &ContrastiveItem, margin: f64, token_weight: f64) -> Result<f64, ScorerError> {
    let ex = ranked_example(params, item)?;
    example_loss(params, &ex, LossSpec { margin, token_weight }, None)
}

pub fn ranked_example(params: &ScorerParams, item: &ContrastiveItem) -> Result<TrainExample, ScorerError> {
    let x = params.encode(&item.x.pair);
    let y = params.encode(&item.y);
    let z = unit_labels(&y, &item.z)?;
    Ok(TrainExample::Ranked { x, y, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SentencePair;
    use crate::scorer::{Activation, Dims, Vocab};
    use crate::synth::{DivergenceType, DivergentExample, Instance};
    use crate::TokenLabel::{Div, Eq};

    #[test]
    fn margin_cases() {
        assert_eq!(margin_loss(5.0, 1.0, 3.0), 0.0);
        assert_eq!(margin_loss(2.0, 2.0, 5.0), 5.0);
        assert_eq!(margin_loss_batch(&[(5.0, 1.0), (2.0, 2.0)], 3.0), 1.5);
    }

    #[test]
    fn ce_cases() {
        assert!((ce_loss(0.0, SentenceLabel::Equivalent) - 2f64.ln()).abs() < 1e-15);
        assert!(ce_loss(50.0, SentenceLabel::Equivalent) < 1e-20);
        assert!(ce_loss(-800.0, SentenceLabel::Equivalent).is_finite());
        let (l, g) = token_ce([0.0, 0.0], true);
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g, [0.5, -0.5]);
    }

    fn item() -> ContrastiveItem {
        let eq = SentencePair::from_raw("s", "a b", "x y");
        let div = DivergentExample {
            pair: SentencePair::from_raw("s#lg", "a c", "x y"),
            dtype: DivergenceType::LexicalSubstitutionGeneralize,
            labels: PairLabels {
                src: vec![Eq, Div],
                tgt: vec![Eq, Eq],
            },
            seed_id: "s".into(),
        };
        ContrastiveItem::new(Instance::equivalent(&eq), &div)
    }

    #[test]
    fn uniform_token_term() {
        let it = item();
        let v = Vocab::build([it.x.pair.src_tokens.as_slice(), it.y.src_tokens.as_slice()], 1, false, None);
        let m = ScorerParams::zeros(v, Dims { d: 2, h: 2 }, Activation::Tanh);
        let l = multitask_loss(&m, &it, 5.0, 1.0).unwrap();
        assert!((l - (5.0 + 2f64.ln())).abs() < 1e-14);
        let mut bad = it.clone();
        bad.z.src.pop();
        assert!(matches!(multitask_loss(&m, &bad, 5.0, 1.0), Err(ScorerError::LabelMismatch { .. })));
    }
}
