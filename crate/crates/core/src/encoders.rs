//! Sentence encoders: BiLSTM, child-sum tree-LSTM, tree-LSTM with positional
//! encodings, and a tree-LSTM over BiLSTM states.
//!
//! Every variant maps a sentence of `n` tokens to `n` state rows and one
//! summary vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Graph, ParamId, ParamStore, Tensor, Var};
use crate::corpus::{EmbeddingTable, SentenceAnnotation, VocabSet, Vocabulary};
use crate::nn::{BiLstm, ChildSum, Linear};

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("empty input")]
    EmptyInput,
    #[error("malformed dependency tree: {0}")]
    MalformedTree(String),
    #[error("unsupported feature combination: {0}")]
    UnsupportedFeatureCombination(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Bi,
    Tree,
    PoTree,
    BiTree,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 4] = [
        EncoderKind::Bi,
        EncoderKind::Tree,
        EncoderKind::PoTree,
        EncoderKind::BiTree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Bi => "bi",
            EncoderKind::Tree => "tree",
            EncoderKind::PoTree => "po_tree",
            EncoderKind::BiTree => "bi_tree",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            EncoderKind::Bi => "Bi",
            EncoderKind::Tree => "tree",
            EncoderKind::PoTree => "Po/tree",
            EncoderKind::BiTree => "Bi/tree",
        }
    }

    pub fn uses_tree(self) -> bool {
        self != EncoderKind::Bi
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncoderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace(['/', '-'], "_").as_str() {
            "bi" | "bilstm" => Ok(EncoderKind::Bi),
            "tree" => Ok(EncoderKind::Tree),
            "po_tree" | "potree" => Ok(EncoderKind::PoTree),
            "bi_tree" | "bitree" => Ok(EncoderKind::BiTree),
            other => Err(format!("unknown encoder `{other}`")),
        }
    }
}

/// Which embedding families feed the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureMask {
    pub we: bool,
    pub pe: bool,
    pub de: bool,
}

impl FeatureMask {
    pub const ALL: FeatureMask = FeatureMask {
        we: true,
        pe: true,
        de: true,
    };

    /// The five feature sets of the ablation, in reporting order.
    pub const ABLATION: [FeatureMask; 5] = [
        FeatureMask { we: true, pe: true, de: false },
        FeatureMask { we: true, pe: true, de: true },
        FeatureMask { we: false, pe: false, de: true },
        FeatureMask { we: true, pe: false, de: true },
        FeatureMask { we: true, pe: false, de: false },
    ];

    pub fn is_empty(&self) -> bool {
        !(self.we || self.pe || self.de)
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.we {
            parts.push("WE");
        }
        if self.pe {
            parts.push("PE");
        }
        if self.de {
            parts.push("DE");
        }
        f.write_str(&parts.join(","))
    }
}

impl FromStr for FeatureMask {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut m = FeatureMask {
            we: false,
            pe: false,
            de: false,
        };
        for part in s.split([',', '+', ' ']).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "we" => m.we = true,
                "pe" => m.pe = true,
                "de" => m.de = true,
                other => return Err(format!("unknown feature `{other}`")),
            }
        }
        if m.is_empty() {
            return Err("feature set is empty".into());
        }
        Ok(m)
    }
}

/// `P(i, 2j) = sin(i / base^(2j/d))`, `P(i, 2j+1) = cos(i / base^(2j/d))`.
pub fn positional_encoding(i: usize, d: usize, base: f64) -> Result<Vec<f64>, EncoderError> {
    if d == 0 || d % 2 == 1 {
        return Err(crate::autodiff::shape_err("positional_encoding", format!("dimension {d} is not even")).into());
    }
    let mut out = vec![0.0; d];
    for j in 0..d / 2 {
        let angle = i as f64 / base.powf(2.0 * j as f64 / d as f64);
        out[2 * j] = angle.sin();
        out[2 * j + 1] = angle.cos();
    }
    Ok(out)
}

pub const POSITIONAL_BASE: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub features: FeatureMask,
    pub word_dim: usize,
    pub upos_dim: usize,
    pub deprel_dim: usize,
    pub hidden: usize,
    pub positional_base: f64,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.features.is_empty() {
            return Err(EncoderError::UnsupportedFeatureCombination("no features".into()));
        }
        if self.kind == EncoderKind::BiTree && !self.features.we && !self.features.pe {
            return Err(EncoderError::UnsupportedFeatureCombination(
                "Bi/tree needs word or PoS features to initialise its BiLSTM".into(),
            ));
        }
        if self.kind == EncoderKind::PoTree {
            let d = self.word_dim;
            let dims = [
                (self.features.we, self.word_dim),
                (self.features.pe, self.upos_dim),
                (self.features.de, self.deprel_dim),
            ];
            if d % 2 == 1 || dims.iter().any(|&(on, dim)| on && dim != d) {
                return Err(crate::autodiff::shape_err(
                    "po_tree",
                    "word, PoS and relation embeddings must share one even dimension",
                )
                .into());
            }
        }
        Ok(())
    }

    /// Width of the state rows.
    pub fn state_dim(&self) -> usize {
        match self.kind {
            EncoderKind::Bi => 2 * self.hidden,
            _ => self.hidden,
        }
    }

    /// Width of the summary vector.
    pub fn summary_dim(&self) -> usize {
        self.state_dim()
    }
}

/// Vocabulary ids of one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderInput {
    pub words: Vec<usize>,
    pub upos: Vec<usize>,
    pub deprels: Vec<usize>,
    pub heads: Vec<usize>,
}

impl EncoderInput {
    pub fn new(s: &SentenceAnnotation, v: &VocabSet) -> Self {
        EncoderInput {
            words: s.tokens.iter().map(|w| word_id(&v.words, w)).collect(),
            upos: s.upos.iter().map(|p| v.upos.id(p)).collect(),
            deprels: s.deprels.iter().map(|d| v.deprels.id(d)).collect(),
            heads: s.heads.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn check(&self, tree: bool) -> Result<(), EncoderError> {
        let n = self.words.len();
        if n == 0 {
            return Err(EncoderError::EmptyInput);
        }
        if self.upos.len() != n || self.deprels.len() != n || self.heads.len() != n {
            return Err(crate::autodiff::shape_err("encoder input", "feature lengths differ").into());
        }
        if tree {
            let s = SentenceAnnotation {
                tokens: vec![String::new(); n],
                lemmas: vec![String::new(); n],
                upos: vec![String::new(); n],
                heads: self.heads.clone(),
                deprels: (0..n)
                    .map(|i| if self.heads[i] == 0 { "root".into() } else { "dep".into() })
                    .collect(),
                alignments: vec![],
            };
            s.validate().map_err(EncoderError::MalformedTree)?;
        }
        Ok(())
    }
}

/// Exact match, then lowercase, then `<unk>`.
pub fn word_id(v: &Vocabulary, w: &str) -> usize {
    v.get(w).or_else(|| v.get(&w.to_lowercase())).unwrap_or(crate::corpus::UNK)
}

pub struct EncoderOutput {
    pub states: Var,
    pub summary: Var,
}

#[derive(Debug, Clone)]
enum Body {
    Bi(BiLstm),
    Tree { proj: Linear, cell: ChildSum },
    BiTree { proj: Linear, bilstm: BiLstm, cell: ChildSum },
}

#[derive(Debug, Clone)]
pub struct Encoder {
    pub config: EncoderConfig,
    words: Option<ParamId>,
    upos: Option<ParamId>,
    deprels: Option<ParamId>,
    body: Body,
}

impl Encoder {
    /// Creates the parameters. With `pretrained`, word vectors are copied
    /// from the table (mean vector for misses, zero for padding) and frozen.
    pub fn new(
        store: &mut ParamStore,
        config: EncoderConfig,
        vocab: &VocabSet,
        pretrained: Option<&EmbeddingTable>,
    ) -> Result<Self, EncoderError> {
        config.validate()?;
        let f = config.features;
        let words = if f.we {
            Some(match pretrained {
                Some(table) => {
                    if table.dim() != config.word_dim {
                        return Err(crate::autodiff::shape_err(
                            "word embeddings",
                            format!("table has {} dims, config {}", table.dim(), config.word_dim),
                        )
                        .into());
                    }
                    let mut data = Vec::with_capacity(vocab.words.len() * config.word_dim);
                    for (i, w) in vocab.words.symbols().iter().enumerate() {
                        if i == crate::corpus::PAD {
                            data.extend(std::iter::repeat_n(0.0, config.word_dim));
                        } else {
                            data.extend_from_slice(table.lookup(w));
                        }
                    }
                    let t = Tensor::new(vocab.words.len(), config.word_dim, data)?;
                    store.insert("enc.emb.words", t, table.trainable)
                }
                None => store.uniform("enc.emb.words", vocab.words.len(), config.word_dim),
            })
        } else {
            None
        };
        let upos = f.pe.then(|| store.uniform("enc.emb.upos", vocab.upos.len(), config.upos_dim));
        let deprels = f.de.then(|| store.uniform("enc.emb.deprels", vocab.deprels.len(), config.deprel_dim));

        let h = config.hidden;
        let concat_dim = f.we as usize * config.word_dim
            + f.pe as usize * config.upos_dim
            + f.de as usize * config.deprel_dim;
        let body = match config.kind {
            EncoderKind::Bi => Body::Bi(BiLstm::new(store, "enc.bilstm", concat_dim, h)),
            EncoderKind::Tree | EncoderKind::PoTree => Body::Tree {
                proj: Linear::new(store, "enc.proj", concat_dim, h, true),
                cell: ChildSum::new(store, "enc.tree", h, h),
            },
            EncoderKind::BiTree => {
                let stage1 = f.we as usize * config.word_dim + f.pe as usize * config.upos_dim;
                let tree_in = 2 * h + f.de as usize * config.deprel_dim;
                Body::BiTree {
                    proj: Linear::new(store, "enc.proj", stage1, h, true),
                    bilstm: BiLstm::new(store, "enc.bilstm", h, h),
                    cell: ChildSum::new(store, "enc.tree", tree_in, h),
                }
            }
        };
        Ok(Encoder {
            config,
            words,
            upos,
            deprels,
            body,
        })
    }

    pub fn encode(&self, g: &mut Graph, input: &EncoderInput) -> Result<EncoderOutput, EncoderError> {
        let positions = if self.config.kind == EncoderKind::PoTree {
            input.check(true)?;
            let d = self.config.word_dim;
            let mut data = Vec::with_capacity(input.len() * d);
            for i in 0..input.len() {
                data.extend(positional_encoding(i, d, self.config.positional_base)?);
            }
            Some(Tensor::new(input.len(), d, data)?)
        } else {
            None
        };
        self.encode_with_positions(g, input, positions.as_ref())
    }

    /// As [`encode`](Self::encode), with explicit positional vectors added to
    /// each embedding family (ignored unless the encoder is `PoTree`).
    pub fn encode_with_positions(
        &self,
        g: &mut Graph,
        input: &EncoderInput,
        positions: Option<&Tensor>,
    ) -> Result<EncoderOutput, EncoderError> {
        input.check(self.config.kind.uses_tree())?;
        let mut families = Vec::new();
        for (table, ids) in [
            (self.words, &input.words),
            (self.upos, &input.upos),
            (self.deprels, &input.deprels),
        ] {
            if let Some(t) = table {
                families.push(g.embed(t, ids)?);
            }
        }
        if let (EncoderKind::PoTree, Some(p)) = (self.config.kind, positions) {
            let p = g.input(p.clone());
            for f in &mut families {
                *f = g.add(*f, p)?;
            }
        }
        match &self.body {
            Body::Bi(bilstm) => {
                let xs = g.concat(&families)?;
                let (states, summary) = bilstm.run(g, xs)?;
                Ok(EncoderOutput { states, summary })
            }
            Body::Tree { proj, cell } => {
                let e = g.concat(&families)?;
                let z = proj.forward(g, e)?;
                let xs = g.tanh(z);
                self.tree(g, cell, xs, &input.heads)
            }
            Body::BiTree { proj, bilstm, cell } => {
                let f = self.config.features;
                let k = f.we as usize + f.pe as usize;
                let e = g.concat(&families[..k])?;
                let z = proj.forward(g, e)?;
                let xs = g.tanh(z);
                let (hbar, _) = bilstm.run(g, xs)?;
                let tree_in = if f.de {
                    g.concat(&[hbar, families[k]])?
                } else {
                    hbar
                };
                self.tree(g, cell, tree_in, &input.heads)
            }
        }
    }

    fn tree(&self, g: &mut Graph, cell: &ChildSum, xs: Var, heads: &[usize]) -> Result<EncoderOutput, EncoderError> {
        let (states, root) = cell
            .run(g, xs, heads)
            .map_err(|e| EncoderError::MalformedTree(e.to_string()))?;
        let rows: Vec<Var> = states.iter().map(|s| s.h).collect();
        let stacked = g.stack_rows(&rows)?;
        Ok(EncoderOutput {
            states: stacked,
            summary: states[root].h,
        })
    }
}
