//! Dataset bundles on disk.
//!
//! ```text
//! out/
//!   clauses/<lang>/<id>.clf     processed gold structures
//!   conllu/<lang>.conllu        parses, one `# sent_id` per sentence
//!   manifest.train              one id per line
//!   manifest.dev
//!   manifest.test.<lang>
//!   vocab/<name>.txt
//!   embeddings.vec              restricted to corpus words (optional)
//!   nonlexical.txt
//!   ingest.json
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    build_vocab, load_embeddings, pair_documents, read_conllu_documents, write_conllu,
    assemble_split, CorpusError, DatasetSplit, EmbeddingTable, Example, Manifest, OutputVocab,
    VocabSet, Vocabulary,
};
use crate::drs::{
    merge_presuppositions, parse_clause_document, revert_predicates, strip_senses,
    ClauseDocument, NonLexical, RevertReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub clauses_dir: PathBuf,
    pub conllu_dir: PathBuf,
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: usize,
    pub source_lang: String,
    pub min_freq: usize,
    /// Extra non-lexical labels, one per line.
    pub non_lexical: Option<PathBuf>,
}

impl IngestOptions {
    pub fn new(clauses_dir: impl Into<PathBuf>, conllu_dir: impl Into<PathBuf>, manifest: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        IngestOptions {
            clauses_dir: clauses_dir.into(),
            conllu_dir: conllu_dir.into(),
            manifest: manifest.into(),
            out: out.into(),
            embeddings: None,
            embedding_dim: 300,
            source_lang: "en".into(),
            min_freq: 1,
            non_lexical: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub source_lang: String,
    pub sizes: BTreeMap<String, usize>,
    pub reverted: usize,
    pub unaligned: usize,
    pub unusable: usize,
    pub vocab_hash: String,
    pub embeddings: usize,
}

/// A loaded bundle.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub split: DatasetSplit,
    pub vocab: VocabSet,
    pub embeddings: Option<EmbeddingTable>,
    pub non_lexical: NonLexical,
    pub summary: IngestSummary,
}

impl Bundle {
    /// Lemmas of every sentence in the bundle.
    pub fn lemmas(&self) -> BTreeSet<String> {
        self.split
            .examples()
            .flat_map(|e| e.annotation.lemmas.iter().cloned())
            .collect()
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(CorpusError::io(path))
}

fn write(path: &Path, text: &str) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(CorpusError::io(parent))?;
    }
    fs::write(path, text).map_err(CorpusError::io(path))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(CorpusError::io(dir))?
        .map(|e| e.map(|e| e.path()).map_err(CorpusError::io(dir)))
        .collect::<Result<_, _>>()?;
    out.sort();
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_language(
    lang: &str,
    clause_dir: &Path,
    conllu_dir: &Path,
) -> Result<Vec<Example>, CorpusError> {
    let mut documents = BTreeMap::new();
    for p in sorted_entries(clause_dir)? {
        if p.extension().and_then(|e| e.to_str()) != Some("clf") {
            continue;
        }
        let doc = parse_clause_document(&read(&p)?).map_err(|source| CorpusError::Drs {
            path: p.clone(),
            source,
        })?;
        documents.insert(stem(&p), doc);
    }
    let mut sentences = Vec::new();
    if conllu_dir.is_dir() {
        for p in sorted_entries(conllu_dir)? {
            if p.extension().and_then(|e| e.to_str()) != Some("conllu") {
                continue;
            }
            let docs = read_conllu_documents(&read(&p)?).map_err(|e| CorpusError::File {
                path: p.clone(),
                message: e.to_string(),
            })?;
            let single = docs.len() == 1;
            for (id, s) in docs {
                let id = match id {
                    Some(id) => id,
                    None if single => stem(&p),
                    None => {
                        return Err(CorpusError::File {
                            path: p.clone(),
                            message: "sentence without `# sent_id`".into(),
                        })
                    }
                };
                sentences.push((id, s));
            }
        }
    }
    pair_documents(lang, sentences, documents)
}

fn process(ex: &mut Example, non_lexical: &NonLexical, total: &mut RevertReport) -> Result<(), CorpusError> {
    let (reverted, report) = revert_predicates(&ex.drs, &ex.annotation, non_lexical);
    total.replaced += report.replaced;
    total.unaligned += report.unaligned;
    total.unusable += report.unusable;
    let merged = merge_presuppositions(&reverted).map_err(|source| CorpusError::Drs {
        path: PathBuf::from(format!("{}/{}", ex.lang, ex.id)),
        source,
    })?;
    ex.drs = strip_senses(&merged);
    ex.annotation.alignments.clear();
    Ok(())
}

const VOCAB_FILES: [&str; 8] = [
    "words", "lemmas", "upos", "deprels", "structure", "unary", "roles", "referents",
];

/// Reads raw clause files and parses, preprocesses the structures and writes
/// a bundle. Output depends only on the inputs.
pub fn ingest(opts: &IngestOptions) -> Result<IngestSummary, CorpusError> {
    let mut non_lexical = NonLexical::default();
    if let Some(p) = &opts.non_lexical {
        for l in read(p)?.lines().map(str::trim).filter(|l| !l.is_empty()) {
            non_lexical.insert(l);
        }
    }
    let manifest = Manifest::parse(&read(&opts.manifest)?)?;

    let mut source = Vec::new();
    let mut others = Vec::new();
    let mut report = RevertReport::default();
    for lang_dir in sorted_entries(&opts.clauses_dir)? {
        if !lang_dir.is_dir() {
            continue;
        }
        let lang = lang_dir.file_name().unwrap().to_string_lossy().into_owned();
        let mut examples = read_language(&lang, &lang_dir, &opts.conllu_dir.join(&lang))?;
        for ex in &mut examples {
            process(ex, &non_lexical, &mut report)?;
        }
        if lang == opts.source_lang {
            source = examples;
        } else {
            others.extend(examples);
        }
    }
    let split = assemble_split(&opts.source_lang, source, others, &manifest)?;
    let mut vocab = build_vocab(split.train.iter().map(|e| (&e.annotation, &e.drs)), opts.min_freq)?;
    let table = match &opts.embeddings {
        Some(p) => Some(load_embeddings(&read(p)?, opts.embedding_dim)?),
        None => None,
    };
    if let Some(table) = &table {
        // Frozen pretrained rows carry over to words never seen in training.
        for ex in split.examples() {
            for w in &ex.annotation.tokens {
                for form in [w.clone(), w.to_lowercase()] {
                    if table.find(&form).is_some() {
                        vocab.words.add(&form);
                    }
                }
            }
        }
    }

    let out = &opts.out;
    let section = |name: &str, examples: &[Example]| -> Result<(), CorpusError> {
        let ids: String = examples.iter().map(|e| format!("{}\n", e.id)).collect();
        write(&out.join(format!("manifest.{name}")), &ids)
    };
    section("train", &split.train)?;
    section("dev", &split.dev)?;
    for (lang, ex) in &split.test {
        section(&format!("test.{lang}"), ex)?;
    }
    let mut by_lang: BTreeMap<&str, Vec<&Example>> = BTreeMap::new();
    for ex in split.examples() {
        by_lang.entry(&ex.lang).or_default().push(ex);
    }
    for (lang, exs) in &by_lang {
        for ex in exs {
            let doc = ClauseDocument {
                drs: ex.drs.clone(),
                text: Some(ex.annotation.tokens.join(" ")),
                alignments: vec![],
            };
            write(&out.join("clauses").join(lang).join(format!("{}.clf", ex.id)), &doc.to_text())?;
        }
        let text = write_conllu(exs.iter().map(|e| (Some(e.id.as_str()), &e.annotation)));
        write(&out.join("conllu").join(format!("{lang}.conllu")), &text)?;
    }
    for (name, v) in VOCAB_FILES.iter().zip(vocab_tables(&vocab)) {
        write(&out.join("vocab").join(format!("{name}.txt")), &v.to_text())?;
    }
    let nl: String = non_lexical.labels().map(|l| format!("{l}\n")).collect();
    write(&out.join("nonlexical.txt"), &nl)?;

    let mut embeddings = 0;
    if let Some(table) = &table {
        let restricted = table.restrict(vocab.words.symbols().iter().map(String::as_str));
        embeddings = restricted.len();
        write(&out.join("embeddings.vec"), &restricted.to_text())?;
    }

    let summary = IngestSummary {
        source_lang: opts.source_lang.clone(),
        sizes: split.sizes(),
        reverted: report.replaced,
        unaligned: report.unaligned,
        unusable: report.unusable,
        vocab_hash: vocab.hash(),
        embeddings,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&out.join("ingest.json"), &format!("{json}\n"))?;
    Ok(summary)
}

fn vocab_tables(v: &VocabSet) -> [&Vocabulary; 8] {
    [
        &v.words,
        &v.lemmas,
        &v.upos,
        &v.deprels,
        &v.output.structure,
        &v.output.unary,
        &v.output.roles,
        &v.output.referents,
    ]
}

/// Loads a bundle written by [`ingest`].
pub fn load_bundle(dir: &Path) -> Result<Bundle, CorpusError> {
    let summary: IngestSummary = serde_json::from_str(&read(&dir.join("ingest.json"))?).map_err(|e| {
        CorpusError::File {
            path: dir.join("ingest.json"),
            message: e.to_string(),
        }
    })?;
    let mut tables = Vec::new();
    for name in VOCAB_FILES {
        tables.push(Vocabulary::from_text(&read(&dir.join("vocab").join(format!("{name}.txt")))?)?);
    }
    let mut t = tables.into_iter();
    let mut next = || t.next().unwrap();
    let vocab = VocabSet {
        words: next(),
        lemmas: next(),
        upos: next(),
        deprels: next(),
        output: OutputVocab {
            structure: next(),
            unary: next(),
            roles: next(),
            referents: next(),
        },
    };
    let non_lexical = NonLexical::new(
        read(&dir.join("nonlexical.txt"))?
            .lines()
            .filter(|l| !l.is_empty())
            .map(String::from),
    );

    let mut parses: BTreeMap<String, BTreeMap<String, super::SentenceAnnotation>> = BTreeMap::new();
    for p in sorted_entries(&dir.join("conllu"))? {
        let lang = stem(&p);
        let docs = read_conllu_documents(&read(&p)?).map_err(|e| CorpusError::File {
            path: p.clone(),
            message: e.to_string(),
        })?;
        let map = parses.entry(lang).or_default();
        for (id, s) in docs {
            let id = id.ok_or_else(|| CorpusError::File {
                path: p.clone(),
                message: "sentence without `# sent_id`".into(),
            })?;
            map.insert(id, s);
        }
    }
    let load = |lang: &str, ids_file: &Path| -> Result<Vec<Example>, CorpusError> {
        let mut out = Vec::new();
        for id in read(ids_file)?.lines().filter(|l| !l.is_empty()) {
            let path = dir.join("clauses").join(lang).join(format!("{id}.clf"));
            let doc = parse_clause_document(&read(&path)?).map_err(|source| CorpusError::Drs {
                path: path.clone(),
                source,
            })?;
            let annotation = parses
                .get(lang)
                .and_then(|m| m.get(id))
                .cloned()
                .ok_or_else(|| CorpusError::PairingError(format!("{lang}: `{id}` has no parse")))?;
            out.push(Example {
                id: id.to_string(),
                lang: lang.to_string(),
                annotation,
                drs: doc.drs,
            });
        }
        Ok(out)
    };
    let source_lang = summary.source_lang.clone();
    let mut split = DatasetSplit {
        source_lang: source_lang.clone(),
        train: load(&source_lang, &dir.join("manifest.train"))?,
        dev: load(&source_lang, &dir.join("manifest.dev"))?,
        test: BTreeMap::new(),
    };
    for lang in summary.sizes.keys().filter_map(|k| k.strip_prefix("test.")) {
        split
            .test
            .insert(lang.to_string(), load(lang, &dir.join(format!("manifest.test.{lang}")))?);
    }

    let emb_path = dir.join("embeddings.vec");
    let embeddings = if emb_path.exists() {
        let text = read(&emb_path)?;
        let dim = text
            .lines()
            .next()
            .and_then(|l| l.split_whitespace().nth(1))
            .and_then(|d| d.parse().ok())
            .unwrap_or(0);
        Some(load_embeddings(&text, dim)?)
    } else {
        None
    };
    Ok(Bundle {
        split,
        vocab,
        embeddings,
        non_lexical,
        summary,
    })
}

/// Writes a raw corpus (clause files with alignments plus parses) in the
/// layout [`ingest`] reads.
pub fn write_raw_corpus(
    clauses_dir: &Path,
    conllu_dir: &Path,
    examples: &[(Example, ClauseDocument)],
) -> Result<(), CorpusError> {
    let mut by_lang: BTreeMap<&str, Vec<&Example>> = BTreeMap::new();
    for (ex, doc) in examples {
        write(
            &clauses_dir.join(&ex.lang).join(format!("{}.clf", ex.id)),
            &doc.to_text(),
        )?;
        by_lang.entry(&ex.lang).or_default().push(ex);
    }
    for (lang, exs) in by_lang {
        let text = write_conllu(exs.iter().map(|e| (Some(e.id.as_str()), &e.annotation)));
        write(&conllu_dir.join(lang).join(format!("{lang}.conllu")), &text)?;
    }
    Ok(())
}
