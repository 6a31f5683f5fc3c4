//! Corpus ingestion: dependency parses, embeddings, vocabularies and splits.

mod bundle;
mod conllu;
mod embeddings;
mod split;
mod vocab;

pub use bundle::{ingest, load_bundle, write_raw_corpus, Bundle, IngestOptions, IngestSummary};
pub use conllu::{read_conllu, read_conllu_documents, write_conllu};
pub use embeddings::{load_embeddings, EmbeddingTable};
pub use split::{assemble_split, pair_documents, DatasetSplit, Example, Manifest};
pub use vocab::{build_vocab, OutputVocab, VocabSet, Vocabulary, BOS, COPY, EOS, PAD, RESERVED, UNK};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drs::DrsError;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed CoNLL-U at line {line}: {message}")]
    MalformedConllu { line: usize, message: String },
    #[error("embedding row at line {line} has {found} values, expected {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("malformed embedding row at line {line}")]
    MalformedEmbedding { line: usize },
    #[error("pairing error: {0}")]
    PairingError(String),
    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),
    #[error("{path}: {source}")]
    Drs { path: PathBuf, source: DrsError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CorpusError {
        let path = path.into();
        move |source| CorpusError::Io { path, source }
    }
}

/// Token `token` (0-based) realizes unary predicate `predicate` (1-based, in
/// canonical box order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredicateAlignment {
    pub token: usize,
    pub predicate: usize,
    pub head: bool,
}

/// One dependency-parsed sentence.
///
/// `heads` uses CoNLL-U numbering: token `i` (0-based) attaches to token
/// `heads[i] - 1`, or to the artificial root when `heads[i] == 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    pub upos: Vec<String>,
    pub heads: Vec<usize>,
    pub deprels: Vec<String>,
    pub alignments: Vec<PredicateAlignment>,
}

impl SentenceAnnotation {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("sentence has no tokens".into());
        }
        if [self.lemmas.len(), self.upos.len(), self.heads.len(), self.deprels.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err("column lengths differ".into());
        }
        if let Some(h) = self.heads.iter().find(|&&h| h > n) {
            return Err(format!("head {h} out of range"));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| self.heads[i] == 0).collect();
        if roots.len() != 1 {
            return Err(format!("expected one root, found {}", roots.len()));
        }
        if self.deprels[roots[0]] != "root" {
            return Err(format!("root token has relation `{}`", self.deprels[roots[0]]));
        }
        for start in 0..n {
            let mut cur = start;
            for _ in 0..=n {
                if self.heads[cur] == 0 {
                    break;
                }
                cur = self.heads[cur] - 1;
            }
            if self.heads[cur] != 0 {
                return Err("dependency cycle".into());
            }
        }
        Ok(())
    }

    pub fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == 0).unwrap_or(0)
    }

    /// Children of every token, in surface order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (i, &h) in self.heads.iter().enumerate() {
            if h > 0 {
                out[h - 1].push(i);
            }
        }
        out
    }
}
