use std::collections::BTreeSet;

use rand::Rng;

use super::{no_edit, DivergenceType, DivergentExample, Seed};
use crate::corpus::{Alignment, DependencyTree, SentencePair, Side};
use crate::labels::{PairLabels, TokenLabel};

const DTYPE: DivergenceType = DivergenceType::SubtreeDeletion;

/// Subtrees (as sorted source indices) that may be deleted: not a single
/// leaf, fewer than ⌈n/2⌉ tokens, and aligned to at least one target token.
/// For target-side deletion the aligned tokens must not be the whole target.
pub fn eligible_subtrees(tree: &DependencyTree, alignment: &Alignment, side: Side, tgt_len: usize) -> Vec<Vec<usize>> {
    let n = tree.token_count();
    let limit = n.div_ceil(2);
    (0..n)
        .map(|h| tree.subtree(h))
        .filter(|st| st.len() >= 2 && st.len() < limit)
        .filter(|st| {
            let aligned = alignment.tgt_of(st);
            !aligned.is_empty() && (side == Side::Src || aligned.len() < tgt_len)
        })
        .collect()
}

/// Deletes a uniformly chosen eligible subtree from the source sentence, or
/// the target words aligned to it.
pub fn subtree_deletion<R: Rng>(seed: &Seed, side: Side, rng: &mut R) -> Result<DivergentExample, super::SynthError> {
    let eligible = eligible_subtrees(
        &seed.src_parse.tree,
        &seed.alignment,
        side,
        seed.pair.tgt_tokens.len(),
    );
    if eligible.is_empty() {
        return Err(no_edit(DTYPE, "no non-leaf subtree under half the sentence length"));
    }
    let chosen = &eligible[rng.gen_range(0..eligible.len())];
    Ok(apply_subtree_deletion(seed, chosen, side))
}

/// Removes `subtree` (source indices) on the given side. The surviving tokens
/// on the other side that were aligned to removed tokens become DIV.
pub fn apply_subtree_deletion(seed: &Seed, subtree: &[usize], side: Side) -> DivergentExample {
    let pair = &seed.pair;
    let (src_removed, tgt_removed): (BTreeSet<usize>, BTreeSet<usize>) = match side {
        Side::Src => (subtree.iter().copied().collect(), BTreeSet::new()),
        Side::Tgt => (BTreeSet::new(), seed.alignment.tgt_of(subtree)),
    };
    let keep = |tokens: &[String], removed: &BTreeSet<usize>| -> Vec<String> {
        tokens
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, t)| t.clone())
            .collect()
    };
    let src = keep(&pair.src_tokens, &src_removed);
    let tgt = keep(&pair.tgt_tokens, &tgt_removed);

    let labels = match side {
        Side::Src => {
            let div = seed.alignment.tgt_of(&src_removed);
            PairLabels {
                src: vec![TokenLabel::Eq; src.len()],
                tgt: (0..pair.tgt_tokens.len())
                    .map(|t| TokenLabel::from_div(div.contains(&t)))
                    .collect(),
            }
        }
        Side::Tgt => {
            let div = seed.alignment.src_of(&tgt_removed);
            PairLabels {
                src: (0..pair.src_tokens.len())
                    .map(|s| TokenLabel::from_div(div.contains(&s)))
                    .collect(),
                tgt: vec![TokenLabel::Eq; tgt.len()],
            }
        }
    };
    DivergentExample {
        pair: SentencePair::from_tokens(format!("{}#sd", pair.id), src, tgt),
        dtype: DTYPE,
        labels,
        seed_id: pair.id.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ConlluSentence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seed_from(src: &str, tgt: &str, heads: Vec<usize>, links: &[(usize, usize)]) -> Seed {
        let pair = SentencePair::from_raw("s", src, tgt);
        let n = pair.src_tokens.len();
        Seed {
            src_parse: ConlluSentence {
                forms: pair.src_tokens.clone(),
                lemmas: vec!["_".into(); n],
                deprels: vec!["_".into(); n],
                tree: DependencyTree::new(heads, vec!["X".into(); n]).unwrap(),
            },
            pair,
            tgt_upos: None,
            alignment: Alignment::new(links.iter().copied()),
        }
    }

    #[test]
    fn table_row_highlights_french_survivors() {
        let src = "Now , however , one of them is suddenly asking your help , and you can see from this how weak they are .";
        let tgt = "Maintenant , cependant , l' un d' eux vient soudainement demander votre aide et vous pouvez voir à quel point ils sont faibles .";
        // Root is "asking"; "are" heads "how weak they" and attaches to "see".
        let heads = vec![
            10, 10, 10, 10, 10, 7, 5, 10, 10, 0, 12, 10, 17, 17, 17, 17, 10, 19, 17, 21, 23, 23, 17, 10,
        ];
        let links = [
            (0, 0), (1, 1), (2, 2), (3, 3), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (9, 10), (10, 11),
            (11, 12), (13, 13), (14, 14), (15, 15), (16, 16), (17, 17), (19, 18), (20, 22), (21, 20),
            (22, 21), (23, 23),
        ];
        let seed = seed_from(src, tgt, heads, &links);
        let deleted = seed.src_parse.tree.subtree(22);
        assert_eq!(
            deleted.iter().map(|&i| seed.pair.src_tokens[i].as_str()).collect::<Vec<_>>(),
            vec!["how", "weak", "they", "are"]
        );
        let ex = apply_subtree_deletion(&seed, &deleted, Side::Src);
        assert_eq!(
            ex.pair.src_raw,
            "Now , however , one of them is suddenly asking your help , and you can see from this ."
        );
        let div: Vec<&str> = ex
            .labels
            .tgt
            .iter()
            .zip(&ex.pair.tgt_tokens)
            .filter(|(l, _)| l.is_div())
            .map(|(_, t)| t.as_str())
            .collect();
        assert_eq!(div, vec!["quel", "ils", "sont", "faibles"]);
        assert!(ex.labels.src.iter().all(|l| !l.is_div()));
    }

    #[test]
    fn two_token_tree_has_no_edit() {
        let seed = seed_from("dogs bark", "chiens aboient", vec![2, 0], &[(0, 0), (1, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            subtree_deletion(&seed, Side::Src, &mut rng),
            Err(super::super::SynthError::NoEligibleEdit { .. })
        ));
    }

    #[test]
    fn target_side_deletion_labels_source() {
        // a b c d e f g h : c heads d, root e.
        let seed = seed_from(
            "a b c d e f g h",
            "A B C D E F G H",
            vec![5, 5, 5, 3, 0, 5, 5, 5],
            &(0..8).map(|i| (i, i)).collect::<Vec<_>>(),
        );
        let ex = apply_subtree_deletion(&seed, &[2, 3], Side::Tgt);
        assert_eq!(ex.pair.tgt_raw, "A B E F G H");
        assert_eq!(ex.pair.src_tokens.len(), 8);
        let div: Vec<usize> = (0..8).filter(|&i| ex.labels.src[i].is_div()).collect();
        assert_eq!(div, vec![2, 3]);
    }

    #[test]
    fn unaligned_subtrees_are_not_eligible() {
        let seed = seed_from(
            "a b c d e f g h",
            "A B C D E F G H",
            vec![5, 5, 5, 3, 0, 5, 5, 5],
            &[(0, 0), (4, 4)],
        );
        assert!(eligible_subtrees(&seed.src_parse.tree, &seed.alignment, Side::Src, 8).is_empty());
    }
}
