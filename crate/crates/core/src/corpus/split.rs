use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{CorpusError, SentenceAnnotation};
use crate::drs::{ClauseDocument, Drs};

/// A parsed sentence paired with its gold structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub lang: String,
    pub annotation: SentenceAnnotation,
    pub drs: Drs,
}

/// Sentence ids per section of the source language.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

impl Manifest {
    /// Parses `[train]`, `[dev]` and `[test]` sections with one id per line.
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut m = Manifest::default();
        let mut section: Option<&mut Vec<String>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[train]" => section = Some(&mut m.train),
                "[dev]" => section = Some(&mut m.dev),
                "[test]" => section = Some(&mut m.test),
                id => match section.as_deref_mut() {
                    Some(ids) => ids.push(id.to_string()),
                    None => {
                        return Err(CorpusError::PairingError(format!(
                            "manifest line {}: id `{id}` outside a section",
                            i + 1
                        )))
                    }
                },
            }
        }
        m.check_disjoint()?;
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, ids) in [("train", &self.train), ("dev", &self.dev), ("test", &self.test)] {
            out.push_str(&format!("[{name}]\n"));
            for id in ids {
                out.push_str(id);
                out.push('\n');
            }
        }
        out
    }

    /// Assigns `ids` in order: the first `train` to training, the next `dev`
    /// to development and the rest to test.
    pub fn sequential(ids: &[String], train: usize, dev: usize) -> Self {
        let train = train.min(ids.len());
        let dev = dev.min(ids.len() - train);
        Manifest {
            train: ids[..train].to_vec(),
            dev: ids[train..train + dev].to_vec(),
            test: ids[train + dev..].to_vec(),
        }
    }

    pub fn check_disjoint(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for id in self.train.iter().chain(&self.dev).chain(&self.test) {
            if !seen.insert(id) {
                return Err(CorpusError::PairingError(format!(
                    "id `{id}` appears more than once in the manifest"
                )));
            }
        }
        Ok(())
    }
}

/// Source-language train/dev plus one test set per language.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub source_lang: String,
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: BTreeMap<String, Vec<Example>>,
}

impl DatasetSplit {
    pub fn sizes(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        out.insert("train".to_string(), self.train.len());
        out.insert("dev".to_string(), self.dev.len());
        for (lang, ex) in &self.test {
            out.insert(format!("test.{lang}"), ex.len());
        }
        out
    }

    pub fn examples(&self) -> impl Iterator<Item = &Example> {
        self.train
            .iter()
            .chain(&self.dev)
            .chain(self.test.values().flatten())
    }
}

/// Pairs parses with clause documents by id. Every parse needs a structure
/// and every structure needs a parse.
pub fn pair_documents(
    lang: &str,
    sentences: Vec<(String, SentenceAnnotation)>,
    documents: BTreeMap<String, ClauseDocument>,
) -> Result<Vec<Example>, CorpusError> {
    let mut documents = documents;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(sentences.len());
    for (id, mut annotation) in sentences {
        if !seen.insert(id.clone()) {
            return Err(CorpusError::PairingError(format!("{lang}: duplicate sentence id `{id}`")));
        }
        let doc = documents
            .remove(&id)
            .ok_or_else(|| CorpusError::PairingError(format!("{lang}: sentence `{id}` has no gold DRS")))?;
        annotation.alignments = doc.alignments;
        out.push(Example {
            id,
            lang: lang.to_string(),
            annotation,
            drs: doc.drs,
        });
    }
    if let Some(id) = documents.keys().next() {
        return Err(CorpusError::PairingError(format!(
            "{lang}: DRS `{id}` has no dependency parse"
        )));
    }
    Ok(out)
}

/// Splits the source language by manifest; every other language becomes a
/// test set. Source pairs missing from the manifest are left out.
pub fn assemble_split(
    source_lang: &str,
    source: Vec<Example>,
    others: Vec<Example>,
    manifest: &Manifest,
) -> Result<DatasetSplit, CorpusError> {
    manifest.check_disjoint()?;
    let mut by_id: BTreeMap<String, Example> = BTreeMap::new();
    for ex in source {
        if by_id.contains_key(&ex.id) {
            return Err(CorpusError::PairingError(format!("duplicate id `{}`", ex.id)));
        }
        by_id.insert(ex.id.clone(), ex);
    }
    let mut take = |ids: &[String]| -> Result<Vec<Example>, CorpusError> {
        ids.iter()
            .map(|id| {
                by_id.remove(id).ok_or_else(|| {
                    CorpusError::PairingError(format!("manifest id `{id}` has no sentence/DRS pair"))
                })
            })
            .collect()
    };
    let mut split = DatasetSplit {
        source_lang: source_lang.to_string(),
        train: take(&manifest.train)?,
        dev: take(&manifest.dev)?,
        test: BTreeMap::new(),
    };
    split.test.insert(source_lang.to_string(), take(&manifest.test)?);
    if !by_id.is_empty() {
        log::warn!("{} {source_lang} pairs are not in the manifest", by_id.len());
    }
    for ex in others {
        split.test.entry(ex.lang.clone()).or_default().push(ex);
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drs::parse_clauses;

    fn example(id: &str, lang: &str) -> Example {
        Example {
            id: id.into(),
            lang: lang.into(),
            annotation: SentenceAnnotation {
                tokens: vec!["x".into()],
                lemmas: vec!["x".into()],
                upos: vec!["X".into()],
                heads: vec![0],
                deprels: vec!["root".into()],
                alignments: vec![],
            },
            drs: parse_clauses("b1 REF x1\n").unwrap(),
        }
    }

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn manifest_sizes_are_exact() {
        let en = ids("en", 4405);
        let m = Manifest::sequential(&en, 3072, 663);
        let m = Manifest::parse(&m.to_text()).unwrap();
        let source = en.iter().map(|i| example(i, "en")).collect();
        let it = ids("it", 633).iter().map(|i| example(i, "it")).collect();
        let s = assemble_split("en", source, it, &m).unwrap();
        assert_eq!(s.train.len(), 3072);
        assert_eq!(s.dev.len(), 663);
        assert_eq!(s.test["en"].len(), 670);
        assert_eq!(s.test["it"].len(), 633);
    }

    #[test]
    fn overlapping_ids_are_rejected() {
        assert!(matches!(
            Manifest::parse("[train]\na\nb\n[test]\nb\n"),
            Err(CorpusError::PairingError(_))
        ));
        assert!(matches!(Manifest::parse("a\n"), Err(CorpusError::PairingError(_))));
        let m = Manifest {
            train: vec!["a".into()],
            dev: vec![],
            test: vec!["zz".into()],
        };
        assert!(matches!(
            assemble_split("en", vec![example("a", "en")], vec![], &m),
            Err(CorpusError::PairingError(_))
        ));
    }

    #[test]
    fn missing_partner_is_a_pairing_error() {
        let ex = example("a", "en");
        let doc = ClauseDocument {
            drs: ex.drs.clone(),
            text: None,
            alignments: vec![],
        };
        let sentences = vec![("a".to_string(), ex.annotation.clone())];
        assert!(pair_documents("en", sentences.clone(), BTreeMap::new()).is_err());
        let mut docs = BTreeMap::new();
        docs.insert("a".to_string(), doc.clone());
        docs.insert("b".to_string(), doc);
        assert!(pair_documents("en", sentences.clone(), docs.clone()).is_err());
        docs.remove("b");
        assert_eq!(pair_documents("en", sentences, docs).unwrap().len(), 1);
    }
}
