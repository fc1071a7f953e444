use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub const UNK: &str = "<unk>";
pub const UNK_ID: usize = 0;

/// Greedy longest-match-first subword splitter. Continuation pieces carry a
/// `##` prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPiece {
    pieces: HashSet<String>,
    max_chars: usize,
}

impl WordPiece {
    pub fn new<I: IntoIterator<Item = String>>(pieces: I) -> Self {
        WordPiece {
            pieces: pieces.into_iter().filter(|p| !p.is_empty()).collect(),
            max_chars: 100,
        }
    }

    /// One piece per non-blank line, `#` comments allowed only as `##` pieces.
    pub fn from_lines(text: &str) -> Self {
        WordPiece::new(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from))
    }

    pub fn pieces(&self) -> Vec<String> {
        let mut v: Vec<String> = self.pieces.iter().cloned().collect();
        v.sort();
        v
    }

    /// Splits a word; a word that cannot be covered becomes a single unknown
    /// unit.
    pub fn split(&self, word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > self.max_chars {
            return vec![word.to_string()];
        }
        let mut out = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while end > start {
                let body: String = chars[start..end].iter().collect();
                let cand = if start == 0 { body } else { format!("##{body}") };
                if self.pieces.contains(&cand) {
                    found = Some(cand);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(p) => {
                    out.push(p);
                    start = end;
                }
                None => return vec![word.to_string()],
            }
        }
        out
    }
}

/// Units of one sentence side after subword splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub ids: Vec<usize>,
    /// Word index of each unit.
    pub word_of: Vec<usize>,
    pub words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSpec {
    pub tokens: Vec<String>,
    pub lowercase: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wordpiece: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    lowercase: bool,
    wordpiece: Option<WordPiece>,
}

impl Vocab {
    /// Collects units occurring at least `min_count` times; index 0 is UNK.
    pub fn build<'a, I>(sentences: I, min_count: usize, lowercase: bool, wordpiece: Option<WordPiece>) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut v = Vocab {
            tokens: vec![UNK.to_string()],
            index: HashMap::new(),
            lowercase,
            wordpiece,
        };
        for sent in sentences {
            for w in sent {
                for u in v.units(w) {
                    *counts.entry(u).or_default() += 1;
                }
            }
        }
        for (tok, c) in counts {
            if c >= min_count.max(1) && tok != UNK {
                v.tokens.push(tok);
            }
        }
        v.reindex();
        v
    }

    pub fn from_spec(spec: VocabSpec) -> Result<Self, String> {
        if spec.tokens.first().map(String::as_str) != Some(UNK) {
            return Err("vocabulary must start with the unknown token".into());
        }
        let mut v = Vocab {
            tokens: spec.tokens,
            index: HashMap::new(),
            lowercase: spec.lowercase,
            wordpiece: spec.wordpiece.map(WordPiece::new),
        };
        v.reindex();
        if v.index.len() != v.tokens.len() {
            return Err("duplicate vocabulary entries".into());
        }
        Ok(v)
    }

    pub fn spec(&self) -> VocabSpec {
        VocabSpec {
            tokens: self.tokens.clone(),
            lowercase: self.lowercase,
            wordpiece: self.wordpiece.as_ref().map(WordPiece::pieces),
        }
    }

    fn reindex(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn id(&self, unit: &str) -> usize {
        self.index.get(unit).copied().unwrap_or(UNK_ID)
    }

    pub fn has_subwords(&self) -> bool {
        self.wordpiece.is_some()
    }

    fn units(&self, word: &str) -> Vec<String> {
        let w = if self.lowercase { word.to_lowercase() } else { word.to_string() };
        match &self.wordpiece {
            Some(wp) => wp.split(&w),
            None => vec![w],
        }
    }

    pub fn encode(&self, words: &[String]) -> Encoded {
        let mut ids = Vec::with_capacity(words.len());
        let mut word_of = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            for u in self.units(w) {
                ids.push(self.id(&u));
                word_of.push(i);
            }
        }
        Encoded {
            ids,
            word_of,
            words: words.len(),
        }
    }
}
