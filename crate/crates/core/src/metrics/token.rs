use serde::Serialize;

use super::{f1, MetricsError};
use crate::labels::TokenLabel;

/// Class-wise token F1 and their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TokenF1 {
    pub precision_eq: f64,
    pub recall_eq: f64,
    pub f1_eq: f64,
    pub precision_div: f64,
    pub recall_div: f64,
    pub f1_div: f64,
    pub f1_mul: f64,
}

pub fn token_f1(gold: &[TokenLabel], pred: &[TokenLabel]) -> Result<TokenF1, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let prf = |class: TokenLabel| {
        let tp = gold.iter().zip(pred).filter(|(g, p)| **g == class && **p == class).count() as f64;
        let predicted = pred.iter().filter(|p| **p == class).count() as f64;
        let support = gold.iter().filter(|g| **g == class).count() as f64;
        let p = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let r = if support > 0.0 { tp / support } else { 0.0 };
        (p, r, f1(p, r))
    };
    let (pe, re, fe) = prf(TokenLabel::Eq);
    let (pd, rd, fd) = prf(TokenLabel::Div);
    Ok(TokenF1 {
        precision_eq: pe,
        recall_eq: re,
        f1_eq: fe,
        precision_div: pd,
        recall_div: rd,
        f1_div: fd,
        f1_mul: fe * fd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenLabel::{Div, Eq};

    #[test]
    fn absent_div_class() {
        let r = token_f1(&[Eq, Eq, Eq], &[Eq, Eq, Eq]).unwrap();
        assert_eq!((r.f1_eq, r.f1_div, r.f1_mul), (1.0, 0.0, 0.0));
    }

    #[test]
    fn product() {
        let g = [Eq, Div, Div, Eq];
        let p = [Eq, Div, Eq, Eq];
        let r = token_f1(&g, &p).unwrap();
        assert!((r.f1_div - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1_eq - 0.8).abs() < 1e-15);
        assert!((r.f1_mul - 0.8 * 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mismatch() {
        assert!(token_f1(&[Eq], &[]).is_err());
    }
}
