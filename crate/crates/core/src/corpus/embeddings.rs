use std::collections::HashMap;
use std::fmt::Write as _;

use super::CorpusError;

/// Word vectors in word2vec text layout. Unknown words map to the mean vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
    unk: Vec<f64>,
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            words: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
            unk: vec![0.0; dim],
            trainable: false,
        }
    }

    /// Adds a row; returns false if the word is already present.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> bool {
        assert_eq!(vector.len(), self.dim, "embedding dimension");
        if self.index.contains_key(word) {
            return false;
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.data.extend_from_slice(vector);
        self.recompute_unk();
        true
    }

    fn recompute_unk(&mut self) {
        let n = self.words.len();
        self.unk = vec![0.0; self.dim];
        if n == 0 {
            return;
        }
        for row in self.data.chunks(self.dim) {
            for (u, v) in self.unk.iter_mut().zip(row) {
                *u += v;
            }
        }
        for u in &mut self.unk {
            *u /= n as f64;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Row index of `word`: exact match first, then its lowercased form.
    pub fn find(&self, word: &str) -> Option<usize> {
        self.index
            .get(word)
            .or_else(|| self.index.get(&word.to_lowercase()))
            .copied()
    }

    pub fn lookup(&self, word: &str) -> &[f64] {
        match self.find(word) {
            Some(i) => self.row(i),
            None => &self.unk,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn unk(&self) -> &[f64] {
        &self.unk
    }

    /// Keeps only rows reachable from `words` through [`find`](Self::find).
    pub fn restrict<'a, I: IntoIterator<Item = &'a str>>(&self, words: I) -> EmbeddingTable {
        let mut keep: Vec<usize> = words.into_iter().filter_map(|w| self.find(w)).collect();
        keep.sort_unstable();
        keep.dedup();
        let mut out = EmbeddingTable::new(self.dim);
        out.trainable = self.trainable;
        for i in keep {
            out.index.insert(self.words[i].clone(), out.words.len());
            out.words.push(self.words[i].clone());
            out.data.extend_from_slice(self.row(i));
        }
        out.recompute_unk();
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for v in self.row(i) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses word2vec text format with an optional `count dim` header.
pub fn load_embeddings(text: &str, expected_dim: usize) -> Result<EmbeddingTable, CorpusError> {
    let mut table = EmbeddingTable::new(expected_dim);
    let mut words = Vec::new();
    let mut data = Vec::new();
    let mut index = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if line_no == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            let dim: usize = fields[1].parse().unwrap();
            if dim != expected_dim {
                return Err(CorpusError::DimensionMismatch {
                    line: 1,
                    expected: expected_dim,
                    found: dim,
                });
            }
            continue;
        }
        let values = &fields[1..];
        if values.len() != expected_dim {
            return Err(CorpusError::DimensionMismatch {
                line: line_no,
                expected: expected_dim,
                found: values.len(),
            });
        }
        let row = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CorpusError::MalformedEmbedding { line: line_no })?;
        if index.contains_key(fields[0]) {
            continue;
        }
        index.insert(fields[0].to_string(), words.len());
        words.push(fields[0].to_string());
        data.extend(row);
    }
    table.words = words;
    table.data = data;
    table.index = index;
    table.recompute_unk();
    Ok(table)
}
