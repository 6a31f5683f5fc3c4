//! Clause-matching evaluation: best variable alignment between a predicted
//! and a gold structure, micro-averaged P/R/F1 and per-category breakdowns.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drs::{Arg, BoxId, Condition, Drs, NonLexical, Var};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Fixed(String),
    Box(BoxId),
    Var(Var),
}

impl Symbol {
    /// Alignment class; fixed symbols have none.
    fn class(&self) -> Option<usize> {
        match self {
            Symbol::Fixed(_) => None,
            Symbol::Box(_) => Some(0),
            Symbol::Var(v) => Some(1 + v.sort() as usize),
        }
    }

    fn name(&self) -> &str {
        match self {
            Symbol::Fixed(s) => s,
            Symbol::Box(b) => b.as_str(),
            Symbol::Var(v) => v.as_str(),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Operators,
    NonLexicalUnary,
    NonLexicalBinary,
    Lexical,
    Referents,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Operators,
        Category::NonLexicalUnary,
        Category::NonLexicalBinary,
        Category::Lexical,
        Category::Referents,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Operators => "operators",
            Category::NonLexicalUnary => "non-lexical unary",
            Category::NonLexicalBinary => "non-lexical binary",
            Category::Lexical => "lexical predicate",
            Category::Referents => "referents",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Decides whether a unary label is lexical.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    non_lexical: NonLexical,
    lemmas: BTreeSet<String>,
}

impl Lexicon {
    pub fn new<I, S>(non_lexical: NonLexical, lemmas: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Lexicon {
            non_lexical,
            lemmas: lemmas.into_iter().map(Into::into).collect(),
        }
    }

    pub fn add_lemmas<I, S>(&mut self, lemmas: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.lemmas.extend(lemmas.into_iter().map(Into::into));
    }

    /// Closed-list sort predicates are non-lexical; other labels are lexical
    /// when they occur as an input lemma.
    pub fn unary_category(&self, label: &str) -> Category {
        if self.non_lexical.contains(label) || !self.lemmas.contains(label) {
            Category::NonLexicalUnary
        } else {
            Category::Lexical
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub category: Category,
    pub symbols: Vec<Symbol>,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClauseSet {
    pub clauses: Vec<Clause>,
}

impl ClauseSet {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Distinct alignable symbols in first-mention order.
    pub fn symbols(&self) -> Vec<&Symbol> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for s in self.clauses.iter().flat_map(|c| &c.symbols) {
            if s.class().is_some() && seen.insert(s) {
                out.push(s);
            }
        }
        out
    }
}

fn arg_symbol(a: &Arg) -> Symbol {
    match a {
        Arg::Var(v) => Symbol::Var(v.clone()),
        Arg::Const(c) => Symbol::Fixed(format!("\"{c}\"")),
    }
}

/// One clause per referent, condition and relation.
pub fn to_clauses(d: &Drs, lexicon: &Lexicon) -> ClauseSet {
    let mut clauses = Vec::new();
    for b in &d.boxes {
        let bs = Symbol::Box(b.id.clone());
        for v in &b.referents {
            clauses.push(Clause {
                category: Category::Referents,
                symbols: vec![bs.clone(), Symbol::Fixed("REF".into()), Symbol::Var(v.clone())],
            });
        }
        for c in &b.conditions {
            let clause = match c {
                Condition::Pred { label, var } => Clause {
                    category: lexicon.unary_category(label),
                    symbols: vec![bs.clone(), Symbol::Fixed(label.clone()), Symbol::Var(var.clone())],
                },
                Condition::Role { label, args } => Clause {
                    category: Category::NonLexicalBinary,
                    symbols: vec![
                        bs.clone(),
                        Symbol::Fixed(label.clone()),
                        arg_symbol(&args[0]),
                        arg_symbol(&args[1]),
                    ],
                },
                Condition::Op { op, boxes } => {
                    let mut symbols = vec![bs.clone(), Symbol::Fixed(op.label().into())];
                    symbols.extend(boxes.iter().cloned().map(Symbol::Box));
                    Clause {
                        category: Category::Operators,
                        symbols,
                    }
                }
            };
            clauses.push(clause);
        }
    }
    for r in &d.relations {
        clauses.push(Clause {
            category: Category::Operators,
            symbols: vec![
                Symbol::Box(r.anchor.clone()),
                Symbol::Fixed(r.label.clone()),
                Symbol::Box(r.left.clone()),
                Symbol::Box(r.right.clone()),
            ],
        });
    }
    ClauseSet { clauses }
}

/// Injective, class-respecting map from predicted to gold symbol names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub pairs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            restarts: 20,
            max_iters: 1000,
            seed: 0,
        }
    }
}

type Key = Vec<u64>;

#[derive(Clone, Copy)]
enum Tok {
    Fixed(u64),
    Sym(usize),
}

struct Problem {
    pred_syms: Vec<Symbol>,
    gold_syms: Vec<Symbol>,
    /// Gold symbols of each class.
    gold_by_class: Vec<Vec<usize>>,
    pred_class: Vec<usize>,
    pred_clauses: Vec<Vec<Tok>>,
    gold_counts: HashMap<Key, i64>,
    /// Predicted clauses mentioning each predicted symbol.
    touching: Vec<Vec<usize>>,
    pred_sigs: Vec<Vec<u64>>,
    gold_sig_clauses: Vec<(Vec<u64>, Vec<usize>)>,
}

const CLASSES: usize = 5;

impl Problem {
    fn new(pred: &ClauseSet, gold: &ClauseSet) -> Self {
        let mut fixed: HashMap<String, u64> = HashMap::new();
        let mut intern = |s: &Symbol| -> u64 {
            let n = fixed.len() as u64;
            *fixed.entry(s.name().to_string()).or_insert(n)
        };
        let index_syms = |set: &ClauseSet| -> (Vec<Symbol>, HashMap<Symbol, usize>) {
            let syms: Vec<Symbol> = set.symbols().into_iter().cloned().collect();
            let index = syms.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
            (syms, index)
        };
        let (pred_syms, pred_index) = index_syms(pred);
        let (gold_syms, gold_index) = index_syms(gold);

        let sig = |c: &Clause, intern: &mut dyn FnMut(&Symbol) -> u64| -> Vec<u64> {
            c.symbols
                .iter()
                .map(|s| match s.class() {
                    Some(k) => k as u64,
                    None => (intern(s) + 1) << 8,
                })
                .collect()
        };

        let mut gold_counts: HashMap<Key, i64> = HashMap::new();
        let mut gold_sig_clauses = Vec::new();
        for c in &gold.clauses {
            let key: Key = c
                .symbols
                .iter()
                .map(|s| match s.class() {
                    Some(_) => (gold_index[s] as u64) << 1 | 1,
                    None => intern(s) << 1,
                })
                .collect();
            *gold_counts.entry(key).or_default() += 1;
            let g: Vec<usize> = c.symbols.iter().filter_map(|s| gold_index.get(s).copied()).collect();
            gold_sig_clauses.push((sig(c, &mut intern), g));
        }

        let mut pred_clauses = Vec::new();
        let mut touching = vec![Vec::new(); pred_syms.len()];
        let mut pred_sigs = Vec::new();
        for (ci, c) in pred.clauses.iter().enumerate() {
            let toks: Vec<Tok> = c
                .symbols
                .iter()
                .map(|s| match s.class() {
                    Some(_) => Tok::Sym(pred_index[s]),
                    None => Tok::Fixed(intern(s) << 1),
                })
                .collect();
            for t in &toks {
                if let Tok::Sym(p) = *t {
                    if touching[p].last() != Some(&ci) {
                        touching[p].push(ci);
                    }
                }
            }
            pred_clauses.push(toks);
            pred_sigs.push(sig(c, &mut intern));
        }

        let mut gold_by_class = vec![Vec::new(); CLASSES];
        for (i, s) in gold_syms.iter().enumerate() {
            gold_by_class[s.class().unwrap()].push(i);
        }
        let pred_class = pred_syms.iter().map(|s| s.class().unwrap()).collect();
        Problem {
            pred_syms,
            gold_syms,
            gold_by_class,
            pred_class,
            pred_clauses,
            gold_counts,
            touching,
            pred_sigs,
            gold_sig_clauses,
        }
    }

    /// Pairs symbols of clauses whose fixed-symbol signature is unique on
    /// both sides.
    fn smart_init(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.pred_syms.len()];
        let mut taken = vec![false; self.gold_syms.len()];
        let mut pred_counts: HashMap<&[u64], usize> = HashMap::new();
        for s in &self.pred_sigs {
            *pred_counts.entry(s).or_default() += 1;
        }
        let mut gold_by_sig: HashMap<&[u64], Vec<usize>> = HashMap::new();
        for (i, (s, _)) in self.gold_sig_clauses.iter().enumerate() {
            gold_by_sig.entry(s).or_default().push(i);
        }
        for (ci, s) in self.pred_sigs.iter().enumerate() {
            if pred_counts[s.as_slice()] != 1 {
                continue;
            }
            let Some(gold) = gold_by_sig.get(s.as_slice()) else {
                continue;
            };
            if gold.len() != 1 {
                continue;
            }
            let gsyms = &self.gold_sig_clauses[gold[0]].1;
            let psyms: Vec<usize> = self.pred_clauses[ci]
                .iter()
                .filter_map(|t| match *t {
                    Tok::Sym(p) => Some(p),
                    Tok::Fixed(_) => None,
                })
                .collect();
            let consistent = psyms
                .iter()
                .zip(gsyms)
                .all(|(&p, &g)| map[p] == Some(g) || (map[p].is_none() && !taken[g]));
            if consistent {
                for (&p, &g) in psyms.iter().zip(gsyms) {
                    if map[p].is_none() && !taken[g] {
                        map[p] = Some(g);
                        taken[g] = true;
                    }
                }
            }
        }
        map
    }

    fn random_fill(&self, map: &mut [Option<usize>], rng: &mut ChaCha8Rng) {
        let mut taken = vec![false; self.gold_syms.len()];
        for g in map.iter().flatten() {
            taken[*g] = true;
        }
        let mut order: Vec<usize> = (0..map.len()).filter(|&p| map[p].is_none()).collect();
        order.shuffle(rng);
        for p in order {
            let free: Vec<usize> = self.gold_by_class[self.pred_class[p]]
                .iter()
                .copied()
                .filter(|&g| !taken[g])
                .collect();
            if !free.is_empty() {
                let g = free[rng.gen_range(0..free.len())];
                map[p] = Some(g);
                taken[g] = true;
            }
        }
    }
}

struct Climb<'a> {
    problem: &'a Problem,
    map: Vec<Option<usize>>,
    inverse: Vec<Option<usize>>,
    keys: Vec<Option<Key>>,
    counts: HashMap<Key, i64>,
    matched: i64,
}

impl<'a> Climb<'a> {
    fn new(problem: &'a Problem, map: Vec<Option<usize>>) -> Self {
        let mut inverse = vec![None; problem.gold_syms.len()];
        for (p, g) in map.iter().enumerate() {
            if let Some(g) = *g {
                inverse[g] = Some(p);
            }
        }
        let mut c = Climb {
            problem,
            map,
            inverse,
            keys: vec![None; problem.pred_clauses.len()],
            counts: HashMap::new(),
            matched: 0,
        };
        for ci in 0..problem.pred_clauses.len() {
            c.rekey(ci);
        }
        c
    }

    fn key(&self, ci: usize) -> Option<Key> {
        self.problem.pred_clauses[ci]
            .iter()
            .map(|t| match *t {
                Tok::Fixed(f) => Some(f),
                Tok::Sym(p) => self.map[p].map(|g| (g as u64) << 1 | 1),
            })
            .collect()
    }

    fn rekey(&mut self, ci: usize) {
        if let Some(old) = self.keys[ci].take() {
            let n = self.counts.get_mut(&old).unwrap();
            if *n <= self.problem.gold_counts.get(&old).copied().unwrap_or(0) {
                self.matched -= 1;
            }
            *n -= 1;
        }
        let new = self.key(ci);
        if let Some(k) = &new {
            let n = self.counts.entry(k.clone()).or_default();
            *n += 1;
            if *n <= self.problem.gold_counts.get(k).copied().unwrap_or(0) {
                self.matched += 1;
            }
        }
        self.keys[ci] = new;
    }

    fn set(&mut self, p: usize, g: Option<usize>) {
        if let Some(old) = self.map[p] {
            self.inverse[old] = None;
        }
        self.map[p] = g;
        if let Some(g) = g {
            self.inverse[g] = Some(p);
        }
        for i in 0..self.problem.touching[p].len() {
            self.rekey(self.problem.touching[p][i]);
        }
    }

    /// Maps `p` to `g`, handing `p`'s old target to the previous holder of `g`.
    fn assign(&mut self, p: usize, g: usize) {
        let old = self.map[p];
        match self.inverse[g] {
            Some(q) => {
                self.set(q, None);
                self.set(p, Some(g));
                self.set(q, old);
            }
            None => self.set(p, Some(g)),
        }
    }

    fn delta(&mut self, p: usize, g: usize) -> i64 {
        let before = self.matched;
        let (old, holder) = (self.map[p], self.inverse[g]);
        self.assign(p, g);
        let gain = self.matched - before;
        match (old, holder) {
            (Some(o), Some(_)) => self.assign(p, o),
            (Some(o), None) => self.set(p, Some(o)),
            (None, Some(q)) => {
                self.set(p, None);
                self.set(q, Some(g));
            }
            (None, None) => self.set(p, None),
        }
        debug_assert_eq!(self.matched, before);
        gain
    }

    fn climb(&mut self, max_iters: usize, ceiling: i64) {
        for _ in 0..max_iters {
            if self.matched >= ceiling {
                return;
            }
            let mut best: Option<(i64, usize, usize)> = None;
            for p in 0..self.map.len() {
                for &g in &self.problem.gold_by_class[self.problem.pred_class[p]] {
                    if self.map[p] == Some(g) {
                        continue;
                    }
                    let d = self.delta(p, g);
                    if d > 0 && best.is_none_or(|(b, _, _)| d > b) {
                        best = Some((d, p, g));
                    }
                }
            }
            match best {
                Some((_, p, g)) => self.assign(p, g),
                None => return,
            }
        }
    }
}

/// Hill-climbing search for the alignment maximizing matched clauses. The
/// first restart starts from the signature-based initialization, the others
/// from random maps.
pub fn best_alignment(pred: &ClauseSet, gold: &ClauseSet, cfg: &AlignConfig) -> (Alignment, usize) {
    let problem = Problem::new(pred, gold);
    let ceiling = pred.len().min(gold.len()) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(i64, Vec<Option<usize>>)> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut map = if restart == 0 {
            problem.smart_init()
        } else {
            vec![None; problem.pred_syms.len()]
        };
        problem.random_fill(&mut map, &mut rng);
        let mut climb = Climb::new(&problem, map);
        climb.climb(cfg.max_iters, ceiling);
        if best.as_ref().is_none_or(|(m, _)| climb.matched > *m) {
            best = Some((climb.matched, climb.map));
        }
        if best.as_ref().unwrap().0 >= ceiling {
            break;
        }
    }
    let (matched, map) = best.unwrap();
    let pairs = map
        .iter()
        .enumerate()
        .filter_map(|(p, g)| {
            g.map(|g| {
                (
                    problem.pred_syms[p].name().to_string(),
                    problem.gold_syms[g].name().to_string(),
                )
            })
        })
        .collect();
    (Alignment { pairs }, matched as usize)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub matched: usize,
    pub n_predicted: usize,
    pub n_gold: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl ScoreReport {
    pub fn precision(&self) -> f64 {
        ratio(self.matched, self.n_predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched, self.n_gold)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

impl std::ops::AddAssign for ScoreReport {
    fn add_assign(&mut self, o: Self) {
        self.matched += o.matched;
        self.n_predicted += o.n_predicted;
        self.n_gold += o.n_gold;
    }
}

/// Scores per clause category under a fixed alignment. Unaligned predicted
/// symbols match nothing.
pub fn category_breakdown(pred: &ClauseSet, gold: &ClauseSet, alignment: &Alignment) -> BTreeMap<Category, ScoreReport> {
    let mut out: BTreeMap<Category, ScoreReport> = Category::ALL.iter().map(|&c| (c, ScoreReport::default())).collect();
    let mut gold_counts: HashMap<Vec<&str>, usize> = HashMap::new();
    for c in &gold.clauses {
        out.get_mut(&c.category).unwrap().n_gold += 1;
        *gold_counts.entry(c.symbols.iter().map(Symbol::name).collect()).or_default() += 1;
    }
    for c in &pred.clauses {
        out.get_mut(&c.category).unwrap().n_predicted += 1;
        let renamed: Option<Vec<&str>> = c
            .symbols
            .iter()
            .map(|s| match s {
                Symbol::Fixed(f) => Some(f.as_str()),
                _ => alignment.pairs.get(s.name()).map(String::as_str),
            })
            .collect();
        if let Some(n) = renamed.and_then(|k| gold_counts.get_mut(&k)) {
            if *n > 0 {
                *n -= 1;
                out.get_mut(&c.category).unwrap().matched += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub overall: ScoreReport,
    pub categories: BTreeMap<Category, ScoreReport>,
}

impl Evaluation {
    pub fn merge(&mut self, o: &Evaluation) {
        self.overall += o.overall;
        for (c, r) in &o.categories {
            *self.categories.entry(*c).or_default() += *r;
        }
    }
}

pub fn score_clauses(pred: &ClauseSet, gold: &ClauseSet, cfg: &AlignConfig) -> (Evaluation, Alignment) {
    let (alignment, matched) = best_alignment(pred, gold, cfg);
    let categories = category_breakdown(pred, gold, &alignment);
    let overall = ScoreReport {
        matched,
        n_predicted: pred.len(),
        n_gold: gold.len(),
    };
    debug_assert_eq!(categories.values().map(|r| r.matched).sum::<usize>(), matched);
    (Evaluation { overall, categories }, alignment)
}

pub fn score(pred: &Drs, gold: &Drs, lexicon: &Lexicon, cfg: &AlignConfig) -> Evaluation {
    score_clauses(&to_clauses(pred, lexicon), &to_clauses(gold, lexicon), cfg).0
}

/// Micro-averaged corpus score; documents are scored in parallel.
pub fn score_corpus(pairs: &[(Drs, Drs)], lexicon: &Lexicon, cfg: &AlignConfig) -> Evaluation {
    pairs
        .par_iter()
        .map(|(p, g)| score(p, g, lexicon, cfg))
        .collect::<Vec<_>>()
        .iter()
        .fold(Evaluation::default(), |mut acc, e| {
            acc.merge(e);
            acc
        })
}

/// One machine-readable result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub model: String,
    pub language: String,
    pub category: String,
    pub matched: usize,
    pub n_predicted: usize,
    pub n_gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Record {
    pub fn new(model: &str, language: &str, category: &str, r: &ScoreReport) -> Self {
        Record {
            model: model.into(),
            language: language.into(),
            category: category.into(),
            matched: r.matched,
            n_predicted: r.n_predicted,
            n_gold: r.n_gold,
            precision: r.precision(),
            recall: r.recall(),
            f1: r.f1(),
        }
    }

    pub fn to_kv(&self) -> String {
        format!(
            "model={} language={} category={} matched={} predicted={} gold={} precision={:.4} recall={:.4} f1={:.4}",
            self.model.replace(' ', "_"),
            self.language,
            self.category.replace(' ', "_"),
            self.matched,
            self.n_predicted,
            self.n_gold,
            self.precision,
            self.recall,
            self.f1
        )
    }
}

/// Plain-text table with a P/R/F column triple per column key.
pub fn render_table(row_header: &str, rows: &[(String, Vec<Option<ScoreReport>>)], columns: &[String]) -> String {
    let width = rows
        .iter()
        .map(|(r, _)| r.chars().count())
        .chain([row_header.chars().count()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = write!(out, "{row_header:<width$}");
    for c in columns {
        let _ = write!(out, " | {c:^20}");
    }
    out.push('\n');
    let _ = write!(out, "{:<width$}", "");
    for _ in columns {
        let _ = write!(out, " | {:>6} {:>6} {:>6}", "P", "R", "F");
    }
    out.push('\n');
    for (name, cells) in rows {
        let _ = write!(out, "{name:<width$}");
        for cell in cells {
            match cell {
                Some(r) => {
                    let _ = write!(out, " | {:>6.4} {:>6.4} {:>6.4}", r.precision(), r.recall(), r.f1());
                }
                None => {
                    let _ = write!(out, " | {:^20}", "--");
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drs::parse_clauses;

    const FIGURE_ONE: &str = "\
b1 CONTINUATION b2 b3
b2 REF e1
b2 sit_down e1
b2 Agent e1 \"speaker\"
b3 REF e2
b3 REF x1
b3 open e2
b3 laptop x1
b3 Owner x1 \"speaker\"
b3 Agent e2 \"speaker\"
b3 Theme e2 x1
";

    fn lexicon() -> Lexicon {
        Lexicon::new(NonLexical::default(), ["sit_down", "open", "laptop"])
    }

    #[test]
    fn figure_one_clause_counts() {
        let d = parse_clauses(FIGURE_ONE).unwrap();
        let c = to_clauses(&d, &lexicon());
        assert_eq!(c.len(), 11);
        let count = |k| c.clauses.iter().filter(|c| c.category == k).count();
        assert_eq!(count(Category::Referents), 3);
        assert_eq!(count(Category::Operators), 1);
        assert_eq!(count(Category::Lexical), 3);
        assert_eq!(count(Category::NonLexicalBinary), 4);
        assert_eq!(c.len(), d.referent_count() + d.condition_count() + d.relations.len());
    }

    #[test]
    fn self_score_and_renaming() {
        let d = parse_clauses(FIGURE_ONE).unwrap();
        let renamed = parse_clauses(
            &FIGURE_ONE
                .replace("b2", "b9")
                .replace("x1", "x7")
                .replace("e1", "e4")
                .replace("e2", "e1")
                .replace("e4", "e2"),
        )
        .unwrap();
        for other in [&d, &renamed] {
            let e = score(other, &d, &lexicon(), &AlignConfig::default());
            assert_eq!(e.overall.matched, 11);
            assert_eq!(e.overall.f1(), 1.0);
            for c in [Category::Operators, Category::NonLexicalBinary, Category::Lexical, Category::Referents] {
                assert_eq!(e.categories[&c].f1(), 1.0, "{c}");
            }
        }
    }

    #[test]
    fn missing_relation_only_hits_operators() {
        let gold = parse_clauses(FIGURE_ONE).unwrap();
        let mut pred = gold.clone();
        pred.relations.clear();
        let (g, p) = (to_clauses(&gold, &lexicon()), to_clauses(&pred, &lexicon()));
        let (e, _) = score_clauses(&p, &g, &AlignConfig::default());
        assert_eq!(e.categories[&Category::Operators].recall(), 0.0);
        for c in [Category::NonLexicalBinary, Category::Lexical, Category::Referents] {
            assert_eq!(e.categories[&c].f1(), 1.0);
        }
    }

    #[test]
    fn half_the_clauses() {
        let gold = parse_clauses(FIGURE_ONE).unwrap();
        let g = to_clauses(&gold, &lexicon());
        let p = ClauseSet {
            clauses: g.clauses[..4].to_vec(),
        };
        let g8 = ClauseSet {
            clauses: g.clauses[..8].to_vec(),
        };
        let (e, _) = score_clauses(&p, &g8, &AlignConfig::default());
        assert_eq!(e.overall.precision(), 1.0);
        assert_eq!(e.overall.recall(), 0.5);
        assert!((e.overall.f1() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_and_empty() {
        let a = parse_clauses("b1 REF x1\nb1 cat x1\n").unwrap();
        let b = parse_clauses("b1 REF e1\nb1 run e1\n").unwrap();
        let e = score(&a, &b, &Lexicon::default(), &AlignConfig::default());
        assert_eq!(e.overall.matched, 0);
        assert_eq!(e.overall.f1(), 0.0);
        let (al, m) = best_alignment(&ClauseSet::default(), &ClauseSet::default(), &AlignConfig::default());
        assert_eq!(m, 0);
        assert!(al.pairs.is_empty());
    }

    #[test]
    fn micro_average() {
        let a = parse_clauses("b1 REF x1\nb1 cat x1\n").unwrap();
        let b = parse_clauses("b1 REF x1\nb1 dog x1\nb1 big x1\n").unwrap();
        let e = score_corpus(&[(a.clone(), a.clone()), (a, b)], &Lexicon::default(), &AlignConfig::default());
        assert_eq!(e.overall, ScoreReport { matched: 3, n_predicted: 4, n_gold: 5 });
        assert!((e.overall.f1() - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-12);
    }

    #[test]
    fn duplicate_clauses_match_once() {
        let a = parse_clauses("b1 REF x1\nb1 cat x1\nb1 cat x1\n").unwrap();
        let b = parse_clauses("b1 REF x1\nb1 cat x1\n").unwrap();
        let e = score(&a, &b, &Lexicon::default(), &AlignConfig::default());
        assert_eq!(e.overall.matched, 2);
    }

    #[test]
    fn table_renders_dash_cells() {
        let r = ScoreReport { matched: 1, n_predicted: 2, n_gold: 2 };
        let t = render_table("model", &[("Bi".into(), vec![Some(r), None])], &["it".into(), "de".into()]);
        assert!(t.contains("0.5000 0.5000 0.5000"));
        assert!(t.contains("--"));
    }
}
