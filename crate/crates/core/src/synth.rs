//! Synthetic data: random valid structures and a small parallel EN/IT
//! corpus built from templates.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::path::{Path, PathBuf};

use crate::corpus::{write_raw_corpus, CorpusError, EmbeddingTable, Example, Manifest, SentenceAnnotation};
use crate::drs::{
    parse_clause_document, Arg, BoxId, ClauseDocument, Condition, Drs, DrsBox, Operator, Relation, Sort, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomDrsConfig {
    pub max_boxes: usize,
    pub max_conditions: usize,
}

impl Default for RandomDrsConfig {
    fn default() -> Self {
        RandomDrsConfig {
            max_boxes: 4,
            max_conditions: 12,
        }
    }
}

const ENTITY_LABELS: &[&str] = &["man", "woman", "dog", "book", "entity", "person", "city"];
const EVENT_LABELS: &[&str] = &["run", "sleep", "open", "read", "sing"];
const TIME_LABELS: &[&str] = &["time", "now"];
const STATE_LABELS: &[&str] = &["happy", "red", "old"];
const ROLES: &[&str] = &["Agent", "Theme", "Patient", "Owner", "Time", "Name", "Attribute"];
const CONSTANTS: &[&str] = &["speaker", "hearer", "now", "tom"];
const RELATIONS: &[&str] = &["CONTINUATION", "CONTRAST", "RESULT", "ELABORATION", "EXPLANATION"];

struct Generator<'r, R: Rng> {
    rng: &'r mut R,
    cfg: RandomDrsConfig,
    boxes: Vec<DrsBox>,
    relations: Vec<Relation>,
    counters: [usize; 4],
    conditions: usize,
}

impl<R: Rng> Generator<'_, R> {
    fn new_box(&mut self) -> usize {
        let id = BoxId::new(self.boxes.len() + 1);
        self.boxes.push(DrsBox::new(id));
        self.boxes.len() - 1
    }

    fn fresh(&mut self) -> Var {
        let sort = *[Sort::Entity, Sort::Entity, Sort::Event, Sort::Event, Sort::Time, Sort::State]
            .choose(self.rng)
            .unwrap();
        self.counters[sort as usize] += 1;
        Var::new(sort, self.counters[sort as usize])
    }

    fn unary_label(&mut self, v: &Var) -> String {
        let pool = match v.sort() {
            Sort::Entity => ENTITY_LABELS,
            Sort::Event => EVENT_LABELS,
            Sort::Time => TIME_LABELS,
            Sort::State => STATE_LABELS,
        };
        pool.choose(self.rng).unwrap().to_string()
    }

    /// Fills box `b`; returns the referents it declares.
    fn fill(&mut self, b: usize, visible: &[Var], min_referents: usize) -> Vec<Var> {
        let k = self.rng.gen_range(min_referents..=2.max(min_referents));
        let own: Vec<Var> = (0..k).map(|_| self.fresh()).collect();
        self.boxes[b].referents = own.clone();
        let mut vis: Vec<Var> = visible.to_vec();
        vis.extend(own.iter().cloned());

        let n = self.rng.gen_range(0..=3);
        for _ in 0..n {
            if self.conditions >= self.cfg.max_conditions {
                break;
            }
            let roll = self.rng.gen_range(0..10);
            let cond = if roll < 8 && !vis.is_empty() {
                let v = vis.choose(self.rng).unwrap().clone();
                if roll < 5 {
                    Condition::Pred {
                        label: self.unary_label(&v),
                        var: v,
                    }
                } else {
                    let second = if self.rng.gen_bool(0.3) {
                        Arg::Const(CONSTANTS.choose(self.rng).unwrap().to_string())
                    } else {
                        Arg::Var(vis.choose(self.rng).unwrap().clone())
                    };
                    Condition::Role {
                        label: ROLES.choose(self.rng).unwrap().to_string(),
                        args: [Arg::Var(v), second],
                    }
                }
            } else {
                let op = *Operator::ALL.choose(self.rng).unwrap();
                if self.boxes.len() + op.arity() > self.cfg.max_boxes {
                    continue;
                }
                self.conditions += 1;
                let first = self.new_box();
                let second = (op.arity() == 2).then(|| self.new_box());
                let mut ids = vec![self.boxes[first].id.clone()];
                ids.extend(second.map(|s| self.boxes[s].id.clone()));
                let first_refs = self.fill(first, &vis, 0);
                if let Some(second) = second {
                    let mut inner = vis.clone();
                    if op.antecedent_accessible() {
                        inner.extend(first_refs);
                    }
                    self.fill(second, &inner, 0);
                }
                self.boxes[b].conditions.push(Condition::Op { op, boxes: ids });
                continue;
            };
            self.conditions += 1;
            self.boxes[b].conditions.push(cond);
        }

        if self.boxes.len() + 2 <= self.cfg.max_boxes && self.rng.gen_bool(0.25) {
            let room = (self.cfg.max_boxes - self.boxes.len()).min(3);
            let k = self.rng.gen_range(2..=room);
            let mut segments = Vec::new();
            let mut seen = vis.clone();
            let slots: Vec<usize> = (0..k).map(|_| self.new_box()).collect();
            for &s in &slots {
                segments.push(self.boxes[s].id.clone());
                let refs = self.fill(s, &seen, 0);
                seen.extend(refs);
            }
            for pair in segments.windows(2) {
                self.relations.push(Relation {
                    anchor: self.boxes[b].id.clone(),
                    label: RELATIONS.choose(self.rng).unwrap().to_string(),
                    left: pair[0].clone(),
                    right: pair[1].clone(),
                });
            }
        }
        own
    }
}

/// A random structure that passes validation, with at least one referent in
/// the top box.
pub fn random_drs<R: Rng>(rng: &mut R, cfg: RandomDrsConfig) -> Drs {
    let mut g = Generator {
        rng,
        cfg,
        boxes: Vec::new(),
        relations: Vec::new(),
        counters: [0; 4],
        conditions: 0,
    };
    let top = g.new_box();
    g.fill(top, &[], 1);
    let top = g.boxes[top].id.clone();
    Drs {
        boxes: g.boxes,
        relations: g.relations,
        top,
    }
}

struct Word {
    en: &'static str,
    en_lemma: &'static str,
    it: &'static str,
    it_lemma: &'static str,
    sense: &'static str,
}

const fn w(en: &'static str, en_lemma: &'static str, it: &'static str, it_lemma: &'static str, sense: &'static str) -> Word {
    Word {
        en,
        en_lemma,
        it,
        it_lemma,
        sense,
    }
}

const NAMES: &[(&str, &str)] = &[("Tom", "male"), ("Anna", "female"), ("Marco", "male"), ("Lucia", "female")];

const INTRANSITIVE: &[Word] = &[
    w("sleeps", "sleep", "dorme", "dormire", "sleep.v.01"),
    w("sings", "sing", "canta", "cantare", "sing.v.01"),
    w("runs", "run", "corre", "correre", "run.v.01"),
    w("laughs", "laugh", "ride", "ridere", "laugh.v.01"),
];

const TRANSITIVE: &[Word] = &[
    w("reads", "read", "legge", "leggere", "read.v.01"),
    w("opens", "open", "apre", "aprire", "open.v.01"),
    w("eats", "eat", "mangia", "mangiare", "eat.v.01"),
    w("sees", "see", "vede", "vedere", "see.v.01"),
];

/// Nouns with their Italian article.
const NOUNS: &[(Word, &str)] = &[
    (w("book", "book", "libro", "libro", "book.n.01"), "il"),
    (w("door", "door", "porta", "porta", "door.n.01"), "la"),
    (w("apple", "apple", "mela", "mela", "apple.n.01"), "la"),
    (w("laptop", "laptop", "portatile", "portatile", "laptop.n.01"), "il"),
];

/// Uninflected forms of the intransitive verbs, used after negation.
const BARE: &[(&str, &str)] = &[("sleep", "sleep"), ("sing", "sing"), ("run", "run"), ("laugh", "laugh")];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lang {
    En,
    It,
}

impl Lang {
    pub fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::It => "it",
        }
    }
}

struct Sentence {
    tokens: Vec<(String, String, &'static str, usize, &'static str)>,
    clauses: Vec<String>,
    /// (1-based token, file-order unary predicate number)
    alignments: Vec<(usize, usize)>,
}

impl Sentence {
    fn new() -> Self {
        Sentence {
            tokens: Vec::new(),
            clauses: Vec::new(),
            alignments: Vec::new(),
        }
    }

    fn token(&mut self, form: &str, lemma: &str, upos: &'static str, head: usize, deprel: &'static str) -> usize {
        self.tokens.push((form.into(), lemma.into(), upos, head, deprel));
        self.tokens.len()
    }

    fn unary(&mut self, clause: String, token: Option<usize>) {
        self.clauses.push(clause);
        let n = self.clauses.iter().filter(|c| is_unary_clause(c)).count();
        if let Some(t) = token {
            self.alignments.push((t, n));
        }
    }

    fn clause(&mut self, clause: String) {
        self.clauses.push(clause);
    }

    fn annotation(&self) -> SentenceAnnotation {
        SentenceAnnotation {
            tokens: self.tokens.iter().map(|t| t.0.clone()).collect(),
            lemmas: self.tokens.iter().map(|t| t.1.clone()).collect(),
            upos: self.tokens.iter().map(|t| t.2.to_string()).collect(),
            heads: self.tokens.iter().map(|t| t.3).collect(),
            deprels: self.tokens.iter().map(|t| t.4.to_string()).collect(),
            alignments: vec![],
        }
    }

    fn document(&self) -> ClauseDocument {
        let mut text = format!(
            "% {}\n",
            self.tokens.iter().map(|t| t.0.as_str()).collect::<Vec<_>>().join(" ")
        );
        for (t, p) in &self.alignments {
            text.push_str(&format!("% {t} {p}\n"));
        }
        for c in &self.clauses {
            text.push_str(c);
            text.push('\n');
        }
        parse_clause_document(&text).expect("synthetic clauses parse")
    }
}

fn is_unary_clause(c: &str) -> bool {
    let parts: Vec<&str> = c.split_whitespace().collect();
    parts.len() == 3 && parts[1] != "REF" && parts[1].chars().next().is_some_and(|ch| ch.is_lowercase())
}

/// Adds the subject and its clauses; returns the subject token.
fn subject(s: &mut Sentence, b: &str, x: &str, name: (&str, &str), head: usize) -> usize {
    let t = s.token(name.0, name.0, "PROPN", head, "nsubj");
    s.clause(format!("{b} REF {x}"));
    s.unary(format!("{b} {} {x}", name.1), None);
    s.clause(format!("{b} Name {x} \"{}\"", name.0.to_lowercase()));
    t
}

fn event(s: &mut Sentence, b: &str, e: &str, x: &str, sense: &str, token: usize) {
    s.clause(format!("{b} REF {e}"));
    s.unary(format!("{b} {sense} {e}"), Some(token));
    s.clause(format!("{b} Agent {e} {x}"));
}

fn pick<'a, T, R: Rng>(rng: &mut R, xs: &'a [T]) -> (usize, &'a T) {
    let i = rng.gen_range(0..xs.len());
    (i, &xs[i])
}

/// Template choices shared by both languages of one pair.
#[derive(Debug, Clone, Copy)]
struct Plan {
    template: usize,
    name: usize,
    name2: usize,
    verb: usize,
    verb2: usize,
    noun: usize,
}

fn realize(p: Plan, lang: Lang) -> Sentence {
    let mut s = Sentence::new();
    let en = lang == Lang::En;
    let pick_form = |wd: &Word| if en { (wd.en, wd.en_lemma) } else { (wd.it, wd.it_lemma) };
    match p.template {
        // Tom sleeps
        0 => {
            let v = &INTRANSITIVE[p.verb];
            subject(&mut s, "b1", "x1", NAMES[p.name], 2);
            let (f, l) = pick_form(v);
            let t = s.token(f, l, "VERB", 0, "root");
            event(&mut s, "b1", "e1", "x1", v.sense, t);
        }
        // Tom reads the book / Tom legge il libro
        1 => {
            let v = &TRANSITIVE[p.verb];
            let (n, art) = &NOUNS[p.noun];
            subject(&mut s, "b1", "x1", NAMES[p.name], 2);
            let (f, l) = pick_form(v);
            let t = s.token(f, l, "VERB", 0, "root");
            event(&mut s, "b1", "e1", "x1", v.sense, t);
            let det = if en { "the" } else { art };
            s.token(det, det, "DET", 4, "det");
            let (f, l) = pick_form(n);
            let tn = s.token(f, l, "NOUN", 2, "obj");
            s.clause("b1 REF x2".into());
            s.unary(format!("b1 {} x2", n.sense), Some(tn));
            s.clause("b1 Theme e1 x2".into());
        }
        // Tom does not sleep / Tom non dorme
        2 => {
            let v = &INTRANSITIVE[p.verb];
            let verb_at = if en { 4 } else { 3 };
            subject(&mut s, "b1", "x1", NAMES[p.name], verb_at);
            if en {
                s.token("does", "do", "AUX", 4, "aux");
                s.token("not", "not", "PART", 4, "advmod");
                let t = s.token(BARE[p.verb].0, BARE[p.verb].1, "VERB", 0, "root");
                s.clause("b1 NOT b2".into());
                event(&mut s, "b2", "e1", "x1", v.sense, t);
            } else {
                s.token("non", "non", "ADV", 3, "advmod");
                let t = s.token(v.it, v.it_lemma, "VERB", 0, "root");
                s.clause("b1 NOT b2".into());
                event(&mut s, "b2", "e1", "x1", v.sense, t);
            }
        }
        // Tom sleeps and Anna sings / Tom dorme e Anna canta
        _ => {
            let (v1, v2) = (&INTRANSITIVE[p.verb], &INTRANSITIVE[p.verb2]);
            s.clause("b1 CONTINUATION b2 b3".into());
            subject(&mut s, "b2", "x1", NAMES[p.name], 2);
            let (f, l) = pick_form(v1);
            let t1 = s.token(f, l, "VERB", 0, "root");
            event(&mut s, "b2", "e1", "x1", v1.sense, t1);
            let and = if en { "and" } else { "e" };
            s.token(and, and, "CCONJ", 5, "cc");
            subject(&mut s, "b3", "x2", NAMES[p.name2], 5);
            let (f, l) = pick_form(v2);
            let t2 = s.token(f, l, "VERB", 2, "conj");
            event(&mut s, "b3", "e2", "x2", v2.sense, t2);
        }
    }
    s
}

fn plan<R: Rng>(rng: &mut R) -> Plan {
    let name = pick(rng, NAMES).0;
    let mut name2 = pick(rng, NAMES).0;
    if name2 == name {
        name2 = (name2 + 1) % NAMES.len();
    }
    Plan {
        template: rng.gen_range(0..4),
        name,
        name2,
        verb: rng.gen_range(0..4),
        verb2: rng.gen_range(0..4),
        noun: pick(rng, NOUNS).0,
    }
}

/// Raw parallel corpus: clause files with English sense labels plus
/// alignments, and dependency parses, in the layout `ingest` reads.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub examples: Vec<(Example, ClauseDocument)>,
    pub manifest: Manifest,
    /// Shared space: translations get nearly identical vectors.
    pub embeddings: EmbeddingTable,
}

/// `n_source` English pairs split train/dev/test by `train` and `dev`, plus
/// Italian translations of the first `n_target` English test pairs.
pub fn synthetic_corpus(n_source: usize, train: usize, dev: usize, n_target: usize, seed: u64, dim: usize) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plans: Vec<Plan> = (0..n_source).map(|_| plan(&mut rng)).collect();
    let mut examples = Vec::new();
    let mut ids = Vec::new();
    for (i, p) in plans.iter().enumerate() {
        let id = format!("s{i:04}");
        ids.push(id.clone());
        let s = realize(*p, Lang::En);
        let doc = s.document();
        examples.push((
            Example {
                id: id.clone(),
                lang: "en".into(),
                annotation: s.annotation(),
                drs: doc.drs.clone(),
            },
            doc,
        ));
    }
    for (i, p) in plans.iter().enumerate().skip(train + dev).take(n_target) {
        let s = realize(*p, Lang::It);
        let doc = s.document();
        examples.push((
            Example {
                id: format!("s{i:04}"),
                lang: "it".into(),
                annotation: s.annotation(),
                drs: doc.drs.clone(),
            },
            doc,
        ));
    }
    SyntheticCorpus {
        examples,
        manifest: Manifest::sequential(&ids, train, dev),
        embeddings: synthetic_embeddings(dim, seed),
    }
}

/// Where [`SyntheticCorpus::write`] put each input of `ingest`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCorpusPaths {
    pub clauses: PathBuf,
    pub conllu: PathBuf,
    pub manifest: PathBuf,
    pub embeddings: PathBuf,
}

impl SyntheticCorpus {
    /// Writes `clauses/`, `conllu/`, `manifest.txt` and `embeddings.vec`
    /// under `dir`.
    pub fn write(&self, dir: &Path) -> Result<RawCorpusPaths, CorpusError> {
        let paths = RawCorpusPaths {
            clauses: dir.join("clauses"),
            conllu: dir.join("conllu"),
            manifest: dir.join("manifest.txt"),
            embeddings: dir.join("embeddings.vec"),
        };
        write_raw_corpus(&paths.clauses, &paths.conllu, &self.examples)?;
        std::fs::write(&paths.manifest, self.manifest.to_text()).map_err(CorpusError::io(&paths.manifest))?;
        std::fs::write(&paths.embeddings, self.embeddings.to_text()).map_err(CorpusError::io(&paths.embeddings))?;
        Ok(paths)
    }
}

fn synthetic_embeddings(dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut table = EmbeddingTable::new(dim);
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    for wd in INTRANSITIVE.iter().chain(TRANSITIVE).chain(NOUNS.iter().map(|n| &n.0)) {
        pairs.push((wd.en, wd.it));
    }
    for (en, _) in BARE {
        pairs.push((en, en));
    }
    for (name, _) in NAMES {
        pairs.push((name, name));
    }
    pairs.extend([("the", "il"), ("the", "la"), ("and", "e"), ("not", "non"), ("does", "does")]);
    let mut base: std::collections::BTreeMap<&str, Vec<f64>> = std::collections::BTreeMap::new();
    for (en, it) in pairs {
        let v = base
            .entry(en)
            .or_insert_with(|| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .clone();
        table.insert(en, &v);
        let noisy: Vec<f64> = v.iter().map(|x| x + rng.gen_range(-0.05..0.05)).collect();
        table.insert(it, &noisy);
    }
    table
}
