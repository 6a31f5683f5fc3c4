use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CorpusError, SentenceAnnotation};
use crate::drs::Drs;
use crate::stages;
use crate::tree::to_tree;

pub const RESERVED: [&str; 5] = ["<pad>", "<unk>", "<bos>", "<eos>", "<copy>"];
pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const COPY: usize = 4;

/// Symbol table whose first entries are [`RESERVED`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(symbols: Vec<String>) -> Self {
        let mut v = Vocabulary::new();
        for s in symbols {
            v.add(&s);
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.symbols
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        for r in RESERVED {
            v.add(r);
        }
        v
    }

    pub fn from_symbols<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocabulary::new();
        for s in symbols {
            v.add(s.as_ref());
        }
        v
    }

    /// Symbols seen at least `min_freq` times, in sorted order.
    pub fn from_counts(counts: &BTreeMap<String, usize>, min_freq: usize) -> Self {
        Self::from_symbols(counts.iter().filter(|(_, &c)| c >= min_freq).map(|(s, _)| s))
    }

    pub fn add(&mut self, s: &str) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        self.index.insert(s.to_string(), self.symbols.len());
        self.symbols.push(s.to_string());
        self.symbols.len() - 1
    }

    pub fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Id of `s`, or the `<unk>` id.
    pub fn id(&self, s: &str) -> usize {
        self.get(s).unwrap_or(UNK)
    }

    pub fn contains(&self, s: &str) -> bool {
        self.index.contains_key(s)
    }

    pub fn symbol(&self, id: usize) -> &str {
        &self.symbols[id]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// One symbol per line, reserved symbols included.
    pub fn to_text(&self) -> String {
        let mut out = self.symbols.join("\n");
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        let symbols: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        if symbols.len() < RESERVED.len() || symbols[..RESERVED.len()] != RESERVED {
            return Err(CorpusError::InvalidAnnotation(
                "vocabulary does not start with the reserved symbols".into(),
            ));
        }
        Ok(Self::from_symbols(symbols))
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.symbols {
            h.update(s.as_bytes());
            h.update([0]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Output symbols of the three decoding stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputVocab {
    pub structure: Vocabulary,
    pub unary: Vocabulary,
    pub roles: Vocabulary,
    pub referents: Vocabulary,
}

impl OutputVocab {
    /// First discourse relation label, used to close an unfinished SDRS.
    pub fn default_relation(&self) -> Option<String> {
        self.relation_labels().into_iter().next()
    }

    pub fn relation_labels(&self) -> Vec<String> {
        self.structure
            .symbols()
            .iter()
            .filter_map(|s| s.strip_prefix("(REL:").map(String::from))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSet {
    pub words: Vocabulary,
    pub lemmas: Vocabulary,
    pub upos: Vocabulary,
    pub deprels: Vocabulary,
    pub output: OutputVocab,
}

impl VocabSet {
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for v in [
            &self.words,
            &self.lemmas,
            &self.upos,
            &self.deprels,
            &self.output.structure,
            &self.output.unary,
            &self.output.roles,
            &self.output.referents,
        ] {
            h.update(v.hash().as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Builds input and output vocabularies from training pairs.
///
/// Word and lemma entries need `min_freq` occurrences; so do unary
/// predicates and constants. Skeleton tokens, roles, relation labels and
/// variable names are always kept.
pub fn build_vocab<'a, I>(pairs: I, min_freq: usize) -> Result<VocabSet, CorpusError>
where
    I: IntoIterator<Item = (&'a SentenceAnnotation, &'a Drs)>,
{
    let mut words = BTreeMap::new();
    let mut lemmas = BTreeMap::new();
    let mut upos = BTreeSet::new();
    let mut deprels = BTreeSet::new();
    let mut relations = BTreeSet::new();
    let mut unary = BTreeMap::new();
    let mut roles = BTreeSet::new();
    let mut constants = BTreeMap::new();

    for (s, d) in pairs {
        for w in &s.tokens {
            *words.entry(w.clone()).or_insert(0) += 1;
        }
        for l in &s.lemmas {
            *lemmas.entry(l.clone()).or_insert(0) += 1;
        }
        upos.extend(s.upos.iter().cloned());
        deprels.extend(s.deprels.iter().cloned());

        let tree = to_tree(d).map_err(|e| CorpusError::InvalidAnnotation(e.to_string()))?;
        let st = stages::decompose(&tree).map_err(|e| CorpusError::InvalidAnnotation(e.to_string()))?;
        for tok in &st.skeleton {
            if tok.starts_with("(REL:") {
                relations.insert(tok.clone());
            }
        }
        let mut preds = st.predicates.iter();
        for tok in &st.skeleton {
            match tok.as_str() {
                stages::UNARY_SLOT => {
                    *unary.entry(preds.next().unwrap().clone()).or_insert(0) += 1;
                }
                stages::ROLE_SLOT => {
                    roles.insert(preds.next().unwrap().clone());
                }
                _ => {}
            }
        }
        for r in &st.referents {
            if r.starts_with('"') {
                *constants.entry(r.clone()).or_insert(0) += 1;
            }
        }
    }

    let mut structure = Vocabulary::from_symbols(stages::fixed_skeleton_tokens());
    for r in relations {
        structure.add(&r);
    }
    let mut referents = Vocabulary::from_symbols(stages::fixed_referent_tokens());
    for (c, n) in constants {
        if n >= min_freq {
            referents.add(&c);
        }
    }
    Ok(VocabSet {
        words: Vocabulary::from_counts(&words, min_freq),
        lemmas: Vocabulary::from_counts(&lemmas, min_freq),
        upos: Vocabulary::from_symbols(upos),
        deprels: Vocabulary::from_symbols(deprels),
        output: OutputVocab {
            structure,
            unary: Vocabulary::from_counts(&unary, min_freq),
            roles: Vocabulary::from_symbols(roles),
            referents,
        },
    })
}
