use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Dependency parse of one sentence. `heads[i]` is the 1-based parent of
/// token `i` (0 for the root), as in the CoNLL-U HEAD column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyTree {
    pub heads: Vec<usize>,
    pub upos: Vec<String>,
}

impl DependencyTree {
    /// Validates and builds a tree.
    pub fn new(heads: Vec<usize>, upos: Vec<String>) -> Result<Self, String> {
        let tree = DependencyTree { heads, upos };
        tree.validate()?;
        Ok(tree)
    }

    pub fn token_count(&self) -> usize {
        self.heads.len()
    }

    /// 0-based index of the root token.
    pub fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == 0).unwrap_or(0)
    }

    /// Checks the single-root, acyclic, in-range invariants.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.heads.len();
        if n == 0 {
            return Err("empty tree".into());
        }
        if self.upos.len() != n {
            return Err(format!("{} heads but {} UPOS tags", n, self.upos.len()));
        }
        let roots = self.heads.iter().filter(|&&h| h == 0).count();
        if roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        if let Some((i, &h)) = self.heads.iter().enumerate().find(|(_, &h)| h > n) {
            return Err(format!("token {} has head {h} beyond sentence length {n}", i + 1));
        }
        // Every token must reach the root within n steps.
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while self.heads[cur] != 0 {
                cur = self.heads[cur] - 1;
                steps += 1;
                if steps > n {
                    return Err(format!("cycle through token {}", start + 1));
                }
            }
        }
        Ok(())
    }

    /// 0-based children of each token.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut kids = vec![Vec::new(); self.heads.len()];
        for (i, &h) in self.heads.iter().enumerate() {
            if h > 0 {
                kids[h - 1].push(i);
            }
        }
        kids
    }

    /// Sorted 0-based token indices of the subtree rooted at `head`
    /// (inclusive).
    pub fn subtree(&self, head: usize) -> Vec<usize> {
        let kids = self.children();
        let mut out = Vec::new();
        let mut stack = vec![head];
        while let Some(t) = stack.pop() {
            out.push(t);
            stack.extend(kids[t].iter().copied());
        }
        out.sort_unstable();
        out
    }
}

/// One CoNLL-U sentence with the columns this toolkit keeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConlluSentence {
    pub forms: Vec<String>,
    pub lemmas: Vec<String>,
    pub deprels: Vec<String>,
    pub tree: DependencyTree,
}

impl ConlluSentence {
    /// Lemma for lexical lookups, falling back to the lowercased form when
    /// the LEMMA column is `_`.
    pub fn lemma(&self, i: usize) -> String {
        match self.lemmas.get(i).map(String::as_str) {
            Some("_") | None => self.forms[i].to_lowercase(),
            Some(l) => l.to_string(),
        }
    }
}

/// Parses CoNLL-U text into sentences. Multiword-token ranges and empty
/// nodes are skipped.
pub fn parse_conllu(text: &str) -> Result<Vec<ConlluSentence>, CorpusError> {
    let mut out = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !block.is_empty() {
                out.push(parse_block(&block)?);
                block.clear();
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        block.push((lineno, line));
    }
    if !block.is_empty() {
        out.push(parse_block(&block)?);
    }
    Ok(out)
}

fn parse_block(lines: &[(usize, &str)]) -> Result<ConlluSentence, CorpusError> {
    let mut forms = Vec::new();
    let mut lemmas = Vec::new();
    let mut upos = Vec::new();
    let mut heads = Vec::new();
    let mut deprels = Vec::new();
    for &(lineno, line) in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(CorpusError::parse(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let id: usize = id
            .parse()
            .map_err(|_| CorpusError::parse(lineno, format!("non-integer ID {id:?}")))?;
        if id != forms.len() + 1 {
            return Err(CorpusError::parse(
                lineno,
                format!("token ID {id} out of sequence (expected {})", forms.len() + 1),
            ));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| CorpusError::parse(lineno, format!("non-integer HEAD {:?}", cols[6])))?;
        forms.push(cols[1].to_string());
        lemmas.push(cols[2].to_string());
        upos.push(cols[3].to_string());
        heads.push(head);
        deprels.push(cols[7].to_string());
    }
    let first = lines.first().map(|l| l.0).unwrap_or(0);
    let tree = DependencyTree::new(heads, upos).map_err(|msg| CorpusError::parse(first, msg))?;
    Ok(ConlluSentence {
        forms,
        lemmas,
        deprels,
        tree,
    })
}

/// Serializes sentences back to CoNLL-U; unkept columns are written as `_`.
pub fn write_conllu(sentences: &[ConlluSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for i in 0..s.forms.len() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_\n",
                i + 1,
                s.forms[i],
                s.lemmas.get(i).map(String::as_str).unwrap_or("_"),
                s.tree.upos[i],
                s.tree.heads[i],
                s.deprels.get(i).map(String::as_str).unwrap_or("_"),
            ));
        }
        out.push('\n');
    }
    out
}
