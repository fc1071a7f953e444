use std::fmt;

use serde::{Deserialize, Serialize};

/// Token-level equivalence tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenLabel {
    #[serde(rename = "EQ")]
    Eq,
    #[serde(rename = "DIV")]
    Div,
}

impl TokenLabel {
    pub fn is_div(self) -> bool {
        self == TokenLabel::Div
    }

    pub fn from_div(div: bool) -> Self {
        if div {
            TokenLabel::Div
        } else {
            TokenLabel::Eq
        }
    }
}

impl fmt::Display for TokenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenLabel::Eq => "EQ",
            TokenLabel::Div => "DIV",
        })
    }
}

/// Token labels for both sides of a pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLabels {
    pub src: Vec<TokenLabel>,
    pub tgt: Vec<TokenLabel>,
}

impl PairLabels {
    pub fn all_eq(src_len: usize, tgt_len: usize) -> Self {
        PairLabels {
            src: vec![TokenLabel::Eq; src_len],
            tgt: vec![TokenLabel::Eq; tgt_len],
        }
    }

    pub fn div_count(&self) -> usize {
        self.src.iter().chain(&self.tgt).filter(|l| l.is_div()).count()
    }

    pub fn len(&self) -> usize {
        self.src.len() + self.tgt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Binary sentence-level decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceLabel {
    Equivalent,
    Divergent,
}

impl fmt::Display for SentenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentenceLabel::Equivalent => "equivalent",
            SentenceLabel::Divergent => "divergent",
        })
    }
}

/// Three-way human sentence class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceClass {
    NoMeaningDifference,
    SomeMeaningDifference,
    Unrelated,
}

impl SentenceClass {
    pub const ALL: [SentenceClass; 3] = [
        SentenceClass::NoMeaningDifference,
        SentenceClass::SomeMeaningDifference,
        SentenceClass::Unrelated,
    ];

    pub fn binary(self) -> SentenceLabel {
        match self {
            SentenceClass::NoMeaningDifference => SentenceLabel::Equivalent,
            _ => SentenceLabel::Divergent,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            SentenceClass::NoMeaningDifference => "nd",
            SentenceClass::SomeMeaningDifference => "sd",
            SentenceClass::Unrelated => "un",
        }
    }

    /// Accepts short codes, snake_case names and the human-readable labels.
    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_lowercase().replace([' ', '-'], "_");
        match norm.as_str() {
            "nd" | "no_meaning_difference" | "equivalent" => Some(SentenceClass::NoMeaningDifference),
            "sd" | "some_meaning_difference" => Some(SentenceClass::SomeMeaningDifference),
            "un" | "unrelated" => Some(SentenceClass::Unrelated),
            _ => None,
        }
    }
}

impl fmt::Display for SentenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentenceClass::NoMeaningDifference => "no_meaning_difference",
            SentenceClass::SomeMeaningDifference => "some_meaning_difference",
            SentenceClass::Unrelated => "unrelated",
        })
    }
}
