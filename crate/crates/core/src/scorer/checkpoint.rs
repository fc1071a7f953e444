use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Activation, Dims, Layout, ScorerParams};
use super::vocab::{Vocab, VocabSpec};
use super::ScorerError;

const FORMAT: &str = "semdiv-scorer";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    vocab: VocabSpec,
    dims: Dims,
    activation: Activation,
    params: Vec<f64>,
}

impl ScorerParams {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            vocab: self.vocab.spec(),
            dims: self.dims,
            activation: self.activation,
            params: self.theta.clone(),
        })
        .expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScorerError> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| ScorerError::Checkpoint(e.to_string()))?;
        if ck.format != FORMAT || ck.version != VERSION {
            return Err(ScorerError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let vocab = Vocab::from_spec(ck.vocab).map_err(ScorerError::Checkpoint)?;
        let want = Layout {
            vocab: vocab.len(),
            dims: ck.dims,
        }
        .total();
        if ck.params.len() != want {
            return Err(ScorerError::Checkpoint(format!(
                "expected {want} parameters, found {}",
                ck.params.len()
            )));
        }
        let p = ScorerParams {
            vocab,
            dims: ck.dims,
            activation: ck.activation,
            theta: ck.params,
        };
        if !p.is_finite() {
            return Err(ScorerError::Checkpoint("non-finite parameter".into()));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        std::fs::write(path, self.to_json()).map_err(|e| ScorerError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScorerError::Io(e.to_string()))?;
        ScorerParams::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SentencePair;
    use crate::scorer::DivergenceModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_roundtrip() {
        let p = SentencePair::from_raw("p", "a b c", "x y");
        let v = Vocab::build([p.src_tokens.as_slice(), p.tgt_tokens.as_slice()], 1, false, None);
        let m = ScorerParams::init(v, Dims { d: 5, h: 4 }, Activation::Tanh, &mut ChaCha8Rng::seed_from_u64(9));
        let back = ScorerParams::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&p, 0.5).unwrap(), m.predict(&p, 0.5).unwrap());
        assert_eq!(back.score(&p).unwrap().to_bits(), m.score(&p).unwrap().to_bits());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScorerParams::from_json("{}").is_err());
        let p = SentencePair::from_raw("p", "a", "x");
        let v = Vocab::build([p.src_tokens.as_slice()], 1, false, None);
        let mut m = ScorerParams::zeros(v, Dims { d: 2, h: 2 }, Activation::Tanh);
        m.theta.pop();
        assert!(ScorerParams::from_json(&m.to_json()).is_err());
    }
}
