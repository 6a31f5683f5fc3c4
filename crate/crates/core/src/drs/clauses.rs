//! Line-oriented clause notation.
//!
//! ```text
//! % I sat down and opened my laptop
//! % 3 2
//! b2 REF e1
//! b2 sit_down.v.01 e1
//! b2 Agent e1 "speaker"
//! b1 CONTINUATION b2 b3
//! ```
//!
//! Each clause line starts with the box it belongs to. Comment lines holding
//! two integers (optionally followed by `head`) align a 1-based token index
//! with the n-th unary predicate clause of the file; any other comment is
//! taken as the raw sentence text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{
    is_symbol_text, Arg, BoxId, Condition, Drs, DrsBox, DrsError, Operator, Relation, Var,
};
use crate::corpus::PredicateAlignment;

/// A parsed clause file: the structure plus its comment metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseDocument {
    pub drs: Drs,
    pub text: Option<String>,
    /// Alignments with predicate ids renumbered to the canonical box order.
    pub alignments: Vec<PredicateAlignment>,
}

pub fn parse_clauses(text: &str) -> Result<Drs, DrsError> {
    parse_clause_document(text).map(|doc| doc.drs)
}

fn is_relation_label(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
        && s.chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

struct Builder {
    boxes: Vec<DrsBox>,
    index: BTreeMap<BoxId, usize>,
    referenced: BTreeSet<usize>,
    relations: Vec<Relation>,
}

impl Builder {
    fn slot(&mut self, id: &BoxId) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        self.boxes.push(DrsBox::new(id.clone()));
        self.index.insert(id.clone(), self.boxes.len() - 1);
        self.boxes.len() - 1
    }
}

pub fn parse_clause_document(text: &str) -> Result<ClauseDocument, DrsError> {
    let mut b = Builder {
        boxes: Vec::new(),
        index: BTreeMap::new(),
        referenced: BTreeSet::new(),
        relations: Vec::new(),
    };
    let mut raw_text = None;
    let mut alignments = Vec::new();
    // file-order predicate id -> (box slot, condition index)
    let mut predicates: Vec<(usize, usize)> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let syntax = |message: String| DrsError::Syntax {
            line: line_no,
            message,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('%') {
            let comment = comment.trim();
            let fields: Vec<&str> = comment.split_whitespace().collect();
            let numeric = |s: &str| s.parse::<usize>().ok().filter(|&n| n >= 1);
            let is_alignment = matches!(fields.len(), 2 | 3)
                && numeric(fields[0]).is_some()
                && numeric(fields[1]).is_some()
                && (fields.len() == 2 || fields[2] == "head");
            if is_alignment {
                alignments.push(PredicateAlignment {
                    token: numeric(fields[0]).unwrap() - 1,
                    predicate: numeric(fields[1]).unwrap(),
                    head: fields.len() == 3,
                });
            } else if raw_text.is_none() && !comment.is_empty() {
                raw_text = Some(comment.to_string());
            }
            continue;
        }

        let fields: Vec<&str> = line.split_whitespace().collect();
        let owner_id =
            BoxId::parse(fields[0]).ok_or_else(|| syntax(format!("expected box id, got `{}`", fields[0])))?;
        let owner = b.slot(&owner_id);
        if fields.len() == 1 {
            continue;
        }
        let label = fields[1];
        let args = &fields[2..];

        if label == "REF" {
            let [v] = args else {
                return Err(syntax("REF takes exactly one variable".into()));
            };
            let var = Var::parse(v).ok_or_else(|| syntax(format!("bad variable `{v}`")))?;
            b.boxes[owner].referents.push(var);
            continue;
        }

        let box_args: Option<Vec<BoxId>> = args.iter().map(|a| BoxId::parse(a)).collect();
        if let Some(box_args) = box_args.filter(|a| !a.is_empty()) {
            let slots: Vec<usize> = box_args.iter().map(|id| b.slot(id)).collect();
            b.referenced.extend(&slots);
            if label == "PRESUPPOSITION" {
                let [p] = slots[..] else {
                    return Err(syntax("PRESUPPOSITION takes exactly one box".into()));
                };
                if b.boxes[p].presupposed_by.is_some() {
                    return Err(DrsError::MultipleParents(b.boxes[p].id.to_string()));
                }
                b.boxes[p].presupposed_by = Some(owner_id);
            } else if let Some(op) = Operator::from_label(label) {
                if box_args.len() != op.arity() {
                    return Err(syntax(format!("{op} takes {} box(es)", op.arity())));
                }
                b.boxes[owner].conditions.push(Condition::Op { op, boxes: box_args });
            } else if is_relation_label(label) && box_args.len() == 2 {
                b.relations.push(Relation {
                    anchor: owner_id,
                    label: label.to_string(),
                    left: box_args[0].clone(),
                    right: box_args[1].clone(),
                });
            } else if is_relation_label(label) {
                return Err(DrsError::UnknownOperator {
                    label: label.to_string(),
                });
            } else {
                return Err(syntax(format!("condition `{label}` cannot take box arguments")));
            }
            continue;
        }

        if Operator::from_label(label).is_some() || label == "PRESUPPOSITION" {
            return Err(syntax(format!("{label} expects box arguments")));
        }
        if !is_symbol_text(label) || label.contains('"') {
            return Err(syntax(format!("bad label `{label}`")));
        }
        match args {
            [v] => {
                let var = Var::parse(v).ok_or_else(|| syntax(format!("bad variable `{v}`")))?;
                b.boxes[owner].conditions.push(Condition::Pred {
                    label: label.to_string(),
                    var,
                });
                predicates.push((owner, b.boxes[owner].conditions.len() - 1));
            }
            [a1, a2] => {
                let parse = |s: &str| Arg::parse(s).ok_or_else(|| syntax(format!("bad argument `{s}`")));
                b.boxes[owner].conditions.push(Condition::Role {
                    label: label.to_string(),
                    args: [parse(a1)?, parse(a2)?],
                });
            }
            _ => return Err(syntax(format!("`{label}` takes one or two arguments"))),
        }
    }

    if b.boxes.is_empty() {
        return Err(DrsError::EmptyInput);
    }
    let top = (0..b.boxes.len())
        .find(|i| !b.referenced.contains(i))
        .ok_or_else(|| DrsError::CyclicStructure(b.boxes[0].id.to_string()))?;

    let drs = Drs {
        top: b.boxes[top].id.clone(),
        boxes: b.boxes,
        relations: b.relations,
    };
    drs.validate()?;

    // Translate file-order predicate ids into canonical order.
    let keyed: Vec<(BoxId, usize)> = predicates
        .iter()
        .map(|&(slot, cond)| (drs.boxes[slot].id.clone(), cond))
        .collect();
    let drs = drs.normalized()?;
    let canonical: BTreeMap<(BoxId, usize), usize> = predicate_positions(&drs)
        .into_iter()
        .enumerate()
        .map(|(i, (bi, ci))| ((drs.boxes[bi].id.clone(), ci), i + 1))
        .collect();
    let alignments = alignments
        .into_iter()
        .map(|mut a| {
            a.predicate = keyed
                .get(a.predicate - 1)
                .and_then(|k| canonical.get(k).copied())
                .ok_or_else(|| DrsError::Syntax {
                    line: 0,
                    message: format!("alignment to unknown predicate {}", a.predicate),
                })?;
            Ok(a)
        })
        .collect::<Result<Vec<_>, DrsError>>()?;

    Ok(ClauseDocument {
        drs,
        text: raw_text,
        alignments,
    })
}

/// Positions (box, condition) of unary predicates in canonical order; the
/// 1-based index into this list is a predicate id.
pub(crate) fn predicate_positions(drs: &Drs) -> Vec<(usize, usize)> {
    drs.boxes
        .iter()
        .enumerate()
        .flat_map(|(bi, b)| {
            b.conditions
                .iter()
                .enumerate()
                .filter(|(_, c)| matches!(c, Condition::Pred { .. }))
                .map(move |(ci, _)| (bi, ci))
        })
        .collect()
}

/// Serializes in canonical box order; `parse_clauses` reads it back unchanged.
pub fn write_clauses(drs: &Drs) -> String {
    let order: Vec<usize> = match drs.structure() {
        Ok(s) => s.preorder(drs),
        Err(_) => (0..drs.boxes.len()).collect(),
    };
    let mut out = String::new();
    for i in order {
        let b = &drs.boxes[i];
        let start = out.len();
        for r in &b.referents {
            let _ = writeln!(out, "{} REF {r}", b.id);
        }
        for c in &b.conditions {
            match c {
                Condition::Pred { label, var } => {
                    let _ = writeln!(out, "{} {label} {var}", b.id);
                }
                Condition::Role { label, args } => {
                    let _ = writeln!(out, "{} {label} {} {}", b.id, args[0], args[1]);
                }
                Condition::Op { op, boxes } => {
                    let ids: Vec<&str> = boxes.iter().map(BoxId::as_str).collect();
                    let _ = writeln!(out, "{} {op} {}", b.id, ids.join(" "));
                }
            }
        }
        for rel in drs.relations.iter().filter(|r| r.anchor == b.id) {
            let _ = writeln!(out, "{} {} {} {}", b.id, rel.label, rel.left, rel.right);
        }
        for p in drs.boxes.iter().filter(|p| p.presupposed_by.as_ref() == Some(&b.id)) {
            let _ = writeln!(out, "{} PRESUPPOSITION {}", b.id, p.id);
        }
        if out.len() == start {
            let _ = writeln!(out, "{}", b.id);
        }
    }
    out
}

impl ClauseDocument {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.text {
            let _ = writeln!(out, "% {t}");
        }
        for a in &self.alignments {
            let head = if a.head { " head" } else { "" };
            let _ = writeln!(out, "% {} {}{head}", a.token + 1, a.predicate);
        }
        out.push_str(&write_clauses(&self.drs));
        out
    }
}
