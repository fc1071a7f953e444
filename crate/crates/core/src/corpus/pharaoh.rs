use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Word alignment as a set of 0-based `(src, tgt)` links.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub links: BTreeSet<(usize, usize)>,
}

impl Alignment {
    pub fn new(links: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Alignment {
            links: links.into_iter().collect(),
        }
    }

    /// Identity alignment over `n` tokens.
    pub fn diagonal(n: usize) -> Self {
        Self::new((0..n).map(|i| (i, i)))
    }

    pub fn validate(&self, src_len: usize, tgt_len: usize) -> Result<(), CorpusError> {
        match self.links.iter().find(|&&(s, t)| s >= src_len || t >= tgt_len) {
            Some(&(src, tgt)) => Err(CorpusError::AlignmentBounds {
                src,
                tgt,
                src_len,
                tgt_len,
            }),
            None => Ok(()),
        }
    }

    /// Target indices aligned to any of the given source indices.
    pub fn tgt_of<'a>(&'a self, src: impl IntoIterator<Item = &'a usize>) -> BTreeSet<usize> {
        let src: BTreeSet<usize> = src.into_iter().copied().collect();
        self.links
            .iter()
            .filter(|(s, _)| src.contains(s))
            .map(|&(_, t)| t)
            .collect()
    }

    /// Source indices aligned to any of the given target indices.
    pub fn src_of<'a>(&'a self, tgt: impl IntoIterator<Item = &'a usize>) -> BTreeSet<usize> {
        let tgt: BTreeSet<usize> = tgt.into_iter().copied().collect();
        self.links
            .iter()
            .filter(|(_, t)| tgt.contains(t))
            .map(|&(s, _)| s)
            .collect()
    }

    pub fn to_pharaoh(&self) -> String {
        self.links
            .iter()
            .map(|(s, t)| format!("{s}-{t}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Parses one Pharaoh line (`i-j` items separated by whitespace).
pub fn parse_pharaoh(line: &str) -> Result<Alignment, CorpusError> {
    parse_line(line, 1)
}

/// Parses a whole alignment file, one line per sentence pair.
pub fn parse_pharaoh_file(text: &str) -> Result<Vec<Alignment>, CorpusError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| parse_line(l, i + 1))
        .collect()
}

fn parse_line(line: &str, lineno: usize) -> Result<Alignment, CorpusError> {
    let mut links = BTreeSet::new();
    for item in line.split_whitespace() {
        let (s, t) = item
            .split_once('-')
            .ok_or_else(|| CorpusError::parse(lineno, format!("malformed link {item:?}")))?;
        let idx = |x: &str| {
            x.parse::<usize>()
                .map_err(|_| CorpusError::parse(lineno, format!("bad index in link {item:?}")))
        };
        if !links.insert((idx(s)?, idx(t)?)) {
            return Err(CorpusError::parse(lineno, format!("duplicate link {item:?}")));
        }
    }
    Ok(Alignment { links })
}
