use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::clauses::predicate_positions;
use super::{is_symbol_text, Attachment, Condition, Drs, DrsError, Var};
use crate::corpus::SentenceAnnotation;

/// Moves every presupposed box into the box that consumes its referents.
///
/// The consumer is the unique box among those using the presupposed
/// referents that dominates all the others; with no consumer the material
/// goes to the anchoring box. Consumers on separate branches, or a consumer
/// sitting under an operator below the anchor, give `AmbiguousMerge`.
pub fn merge_presuppositions(d: &Drs) -> Result<Drs, DrsError> {
    let mut d = d.clone();
    loop {
        let s = d.validate()?;
        let presupposed: Vec<usize> = (0..d.boxes.len())
            .filter(|&i| d.boxes[i].is_presupposed())
            .collect();
        let Some(&first) = presupposed.first() else {
            return d.normalized();
        };

        let uses = |i: usize, vars: &BTreeSet<&Var>| {
            d.boxes[i]
                .conditions
                .iter()
                .any(|c| c.vars().into_iter().any(|v| vars.contains(v)))
        };
        // Merge boxes whose referents no other pending presupposition needs.
        let p = presupposed
            .iter()
            .copied()
            .find(|&p| {
                let vars: BTreeSet<&Var> = d.boxes[p].referents.iter().collect();
                presupposed.iter().all(|&q| q == p || !uses(q, &vars))
            })
            .ok_or_else(|| DrsError::AmbiguousMerge(d.boxes[first].id.to_string()))?;
        let ambiguous = || DrsError::AmbiguousMerge(d.boxes[p].id.to_string());

        let anchor = s.attachment[p].parent().expect("presupposed box has an anchor");
        let vars: BTreeSet<&Var> = d.boxes[p].referents.iter().collect();
        let consumers: Vec<usize> = (0..d.boxes.len())
            .filter(|&i| i != p && uses(i, &vars))
            .collect();
        let target = if consumers.is_empty() {
            anchor
        } else {
            consumers
                .iter()
                .copied()
                .find(|&c| consumers.iter().all(|&o| s.dominates(c, o)))
                .ok_or_else(ambiguous)?
        };
        if !s.dominates(anchor, target) {
            return Err(ambiguous());
        }
        let mut cur = target;
        while cur != anchor {
            if matches!(s.attachment[cur], Attachment::Operator { .. }) {
                return Err(ambiguous());
            }
            cur = s.attachment[cur].parent().unwrap();
        }

        let moved = d.boxes.remove(p);
        let target = if target > p { target - 1 } else { target };
        let target_id = d.boxes[target].id.clone();
        d.boxes[target].referents.extend(moved.referents);
        d.boxes[target].conditions.extend(moved.conditions);
        for rel in &mut d.relations {
            if rel.anchor == moved.id {
                rel.anchor = target_id.clone();
            }
        }
        for b in &mut d.boxes {
            if b.presupposed_by.as_ref() == Some(&moved.id) {
                b.presupposed_by = Some(target_id.clone());
            }
        }
    }
}

/// Removes a trailing `.pos.NN` sense suffix (`open.v.01` becomes `open`).
pub fn strip_sense(label: &str) -> &str {
    let mut out = label;
    loop {
        let mut parts = out.rsplitn(3, '.');
        let (Some(num), Some(pos), Some(lemma)) = (parts.next(), parts.next(), parts.next()) else {
            return out;
        };
        let is_sense = !lemma.is_empty()
            && matches!(pos, "n" | "v" | "a" | "r" | "s")
            && !num.is_empty()
            && num.bytes().all(|b| b.is_ascii_digit());
        if !is_sense {
            return out;
        }
        out = lemma;
    }
}

pub fn strip_senses(d: &Drs) -> Drs {
    let mut d = d.clone();
    for b in &mut d.boxes {
        for c in &mut b.conditions {
            if let Condition::Pred { label, .. } = c {
                *label = strip_sense(label).to_string();
            }
        }
    }
    d
}

/// Closed class of unary predicates that are not content words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonLexical {
    labels: BTreeSet<String>,
}

impl Default for NonLexical {
    fn default() -> Self {
        let labels = [
            "time", "entity", "person", "male", "female", "location", "organization", "quantity",
            "thing", "group", "event", "measure",
        ];
        NonLexical {
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl NonLexical {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(labels: I) -> Self {
        NonLexical {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn insert(&mut self, label: impl Into<String>) {
        self.labels.insert(label.into());
    }

    /// Sense suffixes are ignored.
    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(strip_sense(label))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevertReport {
    pub replaced: usize,
    /// Lexical predicates without any alignment; their label is kept.
    pub unaligned: usize,
    /// Aligned lemmas that cannot be used as a label (whitespace, brackets).
    pub unusable: usize,
}

/// Replaces each aligned lexical predicate by the lemma of its token.
///
/// Predicates aligned to several tokens take the one marked as head, the
/// leftmost on a tie or when none is marked.
pub fn revert_predicates(
    d: &Drs,
    a: &SentenceAnnotation,
    non_lexical: &NonLexical,
) -> (Drs, RevertReport) {
    let mut by_predicate: BTreeMap<usize, Vec<(bool, usize)>> = BTreeMap::new();
    for al in &a.alignments {
        if al.token < a.len() {
            by_predicate.entry(al.predicate).or_default().push((al.head, al.token));
        }
    }

    let mut out = d.clone();
    let mut report = RevertReport::default();
    for (i, (bi, ci)) in predicate_positions(d).into_iter().enumerate() {
        let Condition::Pred { label, .. } = &mut out.boxes[bi].conditions[ci] else {
            unreachable!()
        };
        if non_lexical.contains(label) {
            continue;
        }
        let Some(tokens) = by_predicate.get(&(i + 1)) else {
            report.unaligned += 1;
            continue;
        };
        let any_head = tokens.iter().any(|t| t.0);
        let token = tokens
            .iter()
            .filter(|t| t.0 || !any_head)
            .map(|t| t.1)
            .min()
            .unwrap();
        let lemma = &a.lemmas[token];
        if is_symbol_text(lemma) && !lemma.contains('"') {
            *label = lemma.clone();
            report.replaced += 1;
        } else {
            report.unusable += 1;
        }
    }
    (out, report)
}
