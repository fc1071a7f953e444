//! A small generative English/French grammar that yields parsed, aligned
//! seed equivalents together with a hypernym/hyponym lexicon. It stands in
//! for a mined parallel corpus in tests, demos and the acceptance suite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Alignment, ConlluSentence, DependencyTree, SentencePair, SimilarityScore};
use crate::synth::{Direction, LexicalResource, LexicalSource, Seed, CONTENT_POS};

// (english, french, feminine, parent)
const NOUNS: &[(&str, &str, bool, Option<&str>)] = &[
    ("animal", "animal", false, None),
    ("dog", "chien", false, Some("animal")),
    ("poodle", "caniche", false, Some("dog")),
    ("terrier", "terrier", false, Some("dog")),
    ("cat", "chat", false, Some("animal")),
    ("kitten", "chaton", false, Some("cat")),
    ("bird", "oiseau", false, Some("animal")),
    ("sparrow", "moineau", false, Some("bird")),
    ("eagle", "aigle", false, Some("bird")),
    ("horse", "cheval", false, Some("animal")),
    ("pony", "poney", false, Some("horse")),
    ("vehicle", "véhicule", false, None),
    ("car", "voiture", true, Some("vehicle")),
    ("taxi", "taxi", false, Some("car")),
    ("truck", "camion", false, Some("vehicle")),
    ("bicycle", "vélo", false, Some("vehicle")),
    ("building", "bâtiment", false, None),
    ("house", "maison", true, Some("building")),
    ("cottage", "chaumière", true, Some("house")),
    ("school", "école", true, Some("building")),
    ("church", "église", true, Some("building")),
    ("cathedral", "cathédrale", true, Some("church")),
    ("person", "personne", true, None),
    ("child", "enfant", false, Some("person")),
    ("boy", "garçon", false, Some("child")),
    ("girl", "fille", true, Some("child")),
    ("teacher", "professeur", false, Some("person")),
    ("doctor", "médecin", false, Some("person")),
    ("surgeon", "chirurgien", false, Some("doctor")),
    ("musician", "musicien", false, Some("person")),
    ("pianist", "pianiste", false, Some("musician")),
    ("food", "nourriture", true, None),
    ("fruit", "fruit", false, Some("food")),
    ("apple", "pomme", true, Some("fruit")),
    ("pear", "poire", true, Some("fruit")),
    ("bread", "pain", false, Some("food")),
    ("cheese", "fromage", false, Some("food")),
    ("book", "livre", false, None),
    ("novel", "roman", false, Some("book")),
    ("tool", "outil", false, None),
    ("hammer", "marteau", false, Some("tool")),
    ("knife", "couteau", false, Some("tool")),
    ("furniture", "meuble", false, None),
    ("table", "table", true, Some("furniture")),
    ("chair", "chaise", true, Some("furniture")),
    ("armchair", "fauteuil", false, Some("chair")),
    ("bed", "lit", false, Some("furniture")),
    ("city", "ville", true, None),
    ("village", "village", false, None),
    ("river", "rivière", true, None),
    ("garden", "jardin", false, None),
    ("park", "parc", false, None),
    ("road", "route", true, None),
    ("street", "rue", true, Some("road")),
    ("market", "marché", false, None),
    ("forest", "forêt", true, None),
    ("mountain", "montagne", true, None),
    ("lake", "lac", false, None),
    ("window", "fenêtre", true, None),
    ("letter", "lettre", true, None),
];

// (lemma, english 3sg, french 3sg, parent)
const VERBS: &[(&str, &str, &str, Option<&str>)] = &[
    ("see", "sees", "voit", None),
    ("watch", "watches", "regarde", Some("see")),
    ("move", "moves", "déplace", None),
    ("carry", "carries", "transporte", Some("move")),
    ("push", "pushes", "pousse", Some("move")),
    ("pull", "pulls", "tire", Some("move")),
    ("drag", "drags", "traîne", Some("pull")),
    ("make", "makes", "fait", None),
    ("build", "builds", "construit", Some("make")),
    ("paint", "paints", "peint", Some("make")),
    ("draw", "draws", "dessine", Some("make")),
    ("get", "gets", "obtient", None),
    ("buy", "buys", "achète", Some("get")),
    ("find", "finds", "trouve", Some("get")),
    ("take", "takes", "prend", Some("get")),
    ("steal", "steals", "vole", Some("take")),
    ("grab", "grabs", "saisit", Some("take")),
    ("like", "likes", "aime", None),
    ("love", "loves", "adore", Some("like")),
    ("hate", "hates", "déteste", None),
    ("clean", "cleans", "nettoie", None),
    ("wash", "washes", "lave", Some("clean")),
    ("eat", "eats", "mange", None),
    ("devour", "devours", "dévore", Some("eat")),
    ("visit", "visits", "visite", None),
    ("follow", "follows", "suit", None),
    ("chase", "chases", "chasse", Some("follow")),
];

const ADJS: &[(&str, &str, Option<&str>)] = &[
    ("big", "grand", None),
    ("huge", "énorme", Some("big")),
    ("small", "petit", None),
    ("tiny", "minuscule", Some("small")),
    ("good", "bon", None),
    ("excellent", "excellent", Some("good")),
    ("bad", "mauvais", None),
    ("terrible", "terrible", Some("bad")),
    ("old", "vieux", None),
    ("ancient", "ancien", Some("old")),
    ("new", "nouveau", None),
    ("modern", "moderne", Some("new")),
    ("colorful", "coloré", None),
    ("red", "rouge", Some("colorful")),
    ("blue", "bleu", Some("colorful")),
    ("green", "vert", Some("colorful")),
    ("happy", "heureux", None),
    ("joyful", "joyeux", Some("happy")),
    ("quiet", "calme", None),
    ("silent", "silencieux", Some("quiet")),
    ("beautiful", "beau", None),
    ("pretty", "joli", Some("beautiful")),
];

const ADVS: &[(&str, &str)] = &[
    ("quickly", "rapidement"),
    ("slowly", "lentement"),
    ("often", "souvent"),
    ("yesterday", "hier"),
    ("again", "encore"),
    ("carefully", "soigneusement"),
    ("suddenly", "soudainement"),
];

const PREPS: &[(&str, &[&str])] = &[
    ("in", &["dans"]),
    ("near", &["près", "de"]),
    ("with", &["avec"]),
    ("behind", &["derrière"]),
    ("under", &["sous"]),
];

// (english, french masculine, french feminine)
const DETS: &[(&str, &str, &str)] = &[
    ("the", "le", "la"),
    ("a", "un", "une"),
    ("this", "ce", "cette"),
    ("my", "mon", "ma"),
];

const PRONS: &[(&str, &str)] = &[("he", "il"), ("she", "elle"), ("they", "ils")];
const CONJS: &[(&str, &str)] = &[("and", "et"), ("but", "mais")];

#[derive(Debug, Clone)]
struct EnTok {
    form: String,
    lemma: String,
    upos: &'static str,
    head: Option<usize>,
    deprel: &'static str,
}

#[derive(Default)]
struct Builder {
    en: Vec<EnTok>,
    fr: Vec<(String, &'static str)>,
    links: Vec<(usize, usize)>,
}

impl Builder {
    fn en(&mut self, form: &str, lemma: &str, upos: &'static str, deprel: &'static str) -> usize {
        self.en.push(EnTok {
            form: form.into(),
            lemma: lemma.into(),
            upos,
            head: None,
            deprel,
        });
        self.en.len() - 1
    }

    fn fr(&mut self, form: &str, upos: &'static str, aligned_to: usize) {
        self.fr.push((form.into(), upos));
        self.links.push((aligned_to, self.fr.len() - 1));
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.en[dep].head = Some(head);
    }

    /// det (adj) noun; French det noun (adj). Returns the noun index.
    fn noun_phrase<R: Rng>(&mut self, rng: &mut R, deprel: &'static str) -> usize {
        let (det_en, det_m, det_f) = *DETS.choose(rng).unwrap();
        let (n_en, n_fr, fem, _) = *NOUNS.choose(rng).unwrap();
        let adj = rng.gen_bool(0.45).then(|| *ADJS.choose(rng).unwrap());
        let d = self.en(det_en, det_en, "DET", "det");
        let a = adj.map(|(a_en, _, _)| self.en(a_en, a_en, "ADJ", "amod"));
        let n = self.en(n_en, n_en, "NOUN", deprel);
        self.attach(d, n);
        if let Some(a) = a {
            self.attach(a, n);
        }
        self.fr(if fem { det_f } else { det_m }, "DET", d);
        self.fr(n_fr, "NOUN", n);
        if let (Some(a), Some((_, a_fr, _))) = (a, adj) {
            self.fr(a_fr, "ADJ", a);
        }
        n
    }

    fn verb<R: Rng>(&mut self, rng: &mut R, deprel: &'static str) -> usize {
        let (lemma, en, fr, _) = *VERBS.choose(rng).unwrap();
        let v = self.en(en, lemma, "VERB", deprel);
        self.fr(fr, "VERB", v);
        v
    }
}

fn build_sentence<R: Rng>(rng: &mut R) -> Builder {
    let mut b = Builder::default();
    let subj = b.noun_phrase(rng, "nsubj");
    let verb = b.verb(rng, "root");
    b.attach(subj, verb);
    let adv = rng.gen_bool(0.35).then(|| *ADVS.choose(rng).unwrap());
    // French places the adverb right after the verb; English at clause end.
    let adv_fr_slot = b.fr.len();
    let obj = b.noun_phrase(rng, "obj");
    b.attach(obj, verb);
    if rng.gen_bool(0.5) {
        let (p_en, p_fr) = *PREPS.choose(rng).unwrap();
        let p = b.en(p_en, p_en, "ADP", "case");
        for w in p_fr {
            b.fr(w, "ADP", p);
        }
        let n = b.noun_phrase(rng, "obl");
        b.attach(p, n);
        b.attach(n, verb);
    }
    if let Some((a_en, a_fr)) = adv {
        let a = b.en(a_en, a_en, "ADV", "advmod");
        b.attach(a, verb);
        b.fr.insert(adv_fr_slot, (a_fr.into(), "ADV"));
        for l in &mut b.links {
            if l.1 >= adv_fr_slot {
                l.1 += 1;
            }
        }
        b.links.push((a, adv_fr_slot));
    }
    if rng.gen_bool(0.4) {
        let (c_en, c_fr) = *CONJS.choose(rng).unwrap();
        let (p_en, p_fr) = *PRONS.choose(rng).unwrap();
        let c = b.en(c_en, c_en, "CCONJ", "cc");
        b.fr(c_fr, "CCONJ", c);
        let p = b.en(p_en, p_en, "PRON", "nsubj");
        b.fr(p_fr, "PRON", p);
        let v2 = b.verb(rng, "conj");
        let o2 = b.noun_phrase(rng, "obj");
        b.attach(c, v2);
        b.attach(p, v2);
        b.attach(o2, v2);
        b.attach(v2, verb);
    }
    let dot = b.en(".", ".", "PUNCT", "punct");
    b.attach(dot, verb);
    b.fr(".", "PUNCT", dot);
    b
}

/// Generated seeds plus the lexicon that covers their vocabulary.
pub struct ToyCorpus {
    pub seeds: Vec<Seed>,
    pub lexicon: LexicalResource,
    /// Pseudo similarity scores, for exercising seed selection.
    pub scores: Vec<SimilarityScore>,
}

/// Hypernym/hyponym entries for every toy word with a parent.
pub fn toy_lexicon() -> LexicalResource {
    let mut res = LexicalResource::default();
    let mut add = |word: &str, parent: Option<&str>, pos: &str| {
        if let Some(p) = parent {
            res.insert(word, pos, Direction::Generalize, p);
            res.insert(p, pos, Direction::Particularize, word);
        }
    };
    for &(w, _, _, p) in NOUNS {
        add(w, p, "NOUN");
    }
    for &(w, _, _, p) in VERBS {
        add(w, p, "VERB");
    }
    for &(w, _, p) in ADJS {
        add(w, p, "ADJ");
    }
    res
}

fn admits(b: &Builder, lex: &LexicalResource, direction: Direction) -> bool {
    b.en.iter()
        .any(|t| CONTENT_POS.contains(&t.upos) && !lex.candidates(&t.lemma, t.upos, direction).is_empty())
}

/// Generates `n` seeds with ids `toy00000`, `toy00001`, ... Every sentence
/// has a content word with a hypernym and one with a hyponym.
pub fn generate(n: usize, rng_seed: u64) -> ToyCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let lexicon = toy_lexicon();
    let mut seeds = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let b = loop {
            let b = build_sentence(&mut rng);
            if admits(&b, &lexicon, Direction::Generalize) && admits(&b, &lexicon, Direction::Particularize) {
                break b;
            }
        };
        let id = format!("toy{i:05}");
        let forms: Vec<String> = b.en.iter().map(|t| t.form.clone()).collect();
        let heads = b.en.iter().map(|t| t.head.map_or(0, |h| h + 1)).collect();
        let upos = b.en.iter().map(|t| t.upos.to_string()).collect();
        let tree = DependencyTree::new(heads, upos).expect("grammar builds trees");
        let parse = ConlluSentence {
            lemmas: b.en.iter().map(|t| t.lemma.clone()).collect(),
            deprels: b.en.iter().map(|t| t.deprel.to_string()).collect(),
            forms: forms.clone(),
            tree,
        };
        let tgt: Vec<String> = b.fr.iter().map(|t| t.0.clone()).collect();
        scores.push(SimilarityScore {
            pair_id: id.clone(),
            score: rng.gen_range(0.9..1.3),
        });
        seeds.push(Seed {
            pair: SentencePair::from_tokens(id, forms, tgt),
            src_parse: parse,
            tgt_upos: Some(b.fr.iter().map(|t| t.1.to_string()).collect()),
            alignment: Alignment::new(b.links),
        });
    }
    ToyCorpus { seeds, lexicon, scores }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_valid() {
        let c = generate(300, 1);
        for s in &c.seeds {
            s.validate().unwrap();
            assert!(s.pair.src_tokens.len() >= 6);
            s.src_parse.tree.validate().unwrap();
        }
        assert!(!c.lexicon.is_empty());
    }

    #[test]
    fn deterministic() {
        let a = generate(20, 5);
        let b = generate(20, 5);
        assert_eq!(a.seeds, b.seeds);
    }

    #[test]
    fn adverb_alignment_crosses() {
        let c = generate(200, 2);
        let s = c
            .seeds
            .iter()
            .find(|s| s.src_parse.tree.upos.iter().any(|u| u == "ADV"))
            .unwrap();
        let adv = s.src_parse.tree.upos.iter().position(|u| u == "ADV").unwrap();
        let fr = s.alignment.tgt_of(&[adv]);
        assert_eq!(fr.len(), 1);
        let fr = *fr.iter().next().unwrap();
        assert_eq!(s.tgt_upos.as_ref().unwrap()[fr], "ADV");
        assert_eq!(s.tgt_upos.as_ref().unwrap()[fr - 1], "VERB");
    }
}
