//! Discourse Representation Structures.
//!
//! A [`Drs`] is a set of boxes. Every box except the top one hangs off exactly
//! one parent: as the operand of an operator condition (`NOT`, `IMP`, ...), as
//! a segment of a discourse relation anchored in the parent, or as a
//! presupposition of the parent. Variables are declared once per structure and
//! must be accessible from every box that uses them.

mod clauses;
mod transform;

pub use clauses::{parse_clause_document, parse_clauses, write_clauses, ClauseDocument};
pub use transform::{
    merge_presuppositions, revert_predicates, strip_sense, strip_senses, NonLexical, RevertReport,
};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DrsError {
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("variable {var} used in box {box_id} is not declared in an accessible box")]
    UnboundVariable { var: String, box_id: String },
    #[error("unknown operator `{label}`")]
    UnknownOperator { label: String },
    #[error("box {0} is its own ancestor")]
    CyclicStructure(String),
    #[error("box {0} is referenced but never defined")]
    UnknownBox(String),
    #[error("box {0} has more than one parent")]
    MultipleParents(String),
    #[error("box {0} is not reachable from the top box")]
    UnreachableBox(String),
    #[error("referent {0} is declared more than once")]
    DuplicateReferent(String),
    #[error("presupposed box {0} cannot be merged unambiguously")]
    AmbiguousMerge(String),
    #[error("malformed sequence: {0}")]
    MalformedSequence(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
}

/// Box identifier, `b` followed by digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoxId(pub String);

impl BoxId {
    pub fn new(index: usize) -> Self {
        BoxId(format!("b{index}"))
    }

    pub fn parse(s: &str) -> Option<Self> {
        let digits = s.strip_prefix('b')?;
        (!digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())).then(|| BoxId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BoxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Entity,
    Event,
    Time,
    State,
}

impl Sort {
    pub const ALL: [Sort; 4] = [Sort::Entity, Sort::Event, Sort::Time, Sort::State];

    pub fn prefix(self) -> char {
        match self {
            Sort::Entity => 'x',
            Sort::Event => 'e',
            Sort::Time => 't',
            Sort::State => 's',
        }
    }

    pub fn from_prefix(c: char) -> Option<Self> {
        match c {
            'x' => Some(Sort::Entity),
            'e' => Some(Sort::Event),
            't' => Some(Sort::Time),
            's' => Some(Sort::State),
            _ => None,
        }
    }
}

/// A discourse referent: sort prefix plus a numeric index, e.g. `x1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(String);

impl Var {
    pub fn parse(s: &str) -> Option<Self> {
        let mut chars = s.chars();
        Sort::from_prefix(chars.next()?)?;
        let rest = chars.as_str();
        (!rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())).then(|| Var(s.to_string()))
    }

    pub fn new(sort: Sort, index: usize) -> Self {
        Var(format!("{}{}", sort.prefix(), index))
    }

    pub fn sort(&self) -> Sort {
        Sort::from_prefix(self.0.chars().next().unwrap()).unwrap()
    }

    pub fn index(&self) -> usize {
        self.0[1..].parse().unwrap_or(0)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Argument of a binary condition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arg {
    Var(Var),
    /// Constant, stored without the surrounding quotes.
    Const(String),
}

impl Arg {
    /// Parses `x1` or `"speaker"`.
    pub fn parse(s: &str) -> Option<Self> {
        if let Some(inner) = s.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
            if s.len() >= 2 && is_symbol_text(inner) && !inner.contains('"') {
                return Some(Arg::Const(inner.to_string()));
            }
            return None;
        }
        Var::parse(s).map(Arg::Var)
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Arg::Var(v) => Some(v),
            Arg::Const(_) => None,
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Var(v) => write!(f, "{v}"),
            Arg::Const(c) => write!(f, "\"{c}\""),
        }
    }
}

/// Label characters allowed in predicates, roles and constants. Anything that
/// would break the bracketed encoding is rejected.
pub fn is_symbol_text(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '(' || c == ')')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    Not,
    Pos,
    Nec,
    Imp,
    Dis,
    Dup,
}

impl Operator {
    pub const ALL: [Operator; 6] = [
        Operator::Not,
        Operator::Pos,
        Operator::Nec,
        Operator::Imp,
        Operator::Dis,
        Operator::Dup,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Operator::Not => "NOT",
            Operator::Pos => "POS",
            Operator::Nec => "NEC",
            Operator::Imp => "IMP",
            Operator::Dis => "DIS",
            Operator::Dup => "DUP",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Operator::ALL.into_iter().find(|op| op.label() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Operator::Not | Operator::Pos | Operator::Nec => 1,
            Operator::Imp | Operator::Dis | Operator::Dup => 2,
        }
    }

    /// Whether the first operand's referents are visible from the second.
    pub fn antecedent_accessible(self) -> bool {
        matches!(self, Operator::Imp | Operator::Dup)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Unary predicate, e.g. `laptop(x1)`.
    Pred { label: String, var: Var },
    /// Binary role, e.g. `Agent(e1, "speaker")`.
    Role { label: String, args: [Arg; 2] },
    /// Logical operator over one or two embedded boxes.
    Op { op: Operator, boxes: Vec<BoxId> },
}

impl Condition {
    pub fn vars(&self) -> Vec<&Var> {
        match self {
            Condition::Pred { var, .. } => vec![var],
            Condition::Role { args, .. } => args.iter().filter_map(Arg::as_var).collect(),
            Condition::Op { .. } => Vec::new(),
        }
    }
}

/// Discourse relation between two segments anchored in `anchor`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub anchor: BoxId,
    pub label: String,
    pub left: BoxId,
    pub right: BoxId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrsBox {
    pub id: BoxId,
    pub referents: Vec<Var>,
    pub conditions: Vec<Condition>,
    /// Set when this box holds presupposed material of the named box.
    pub presupposed_by: Option<BoxId>,
}

impl DrsBox {
    pub fn new(id: BoxId) -> Self {
        DrsBox {
            id,
            referents: Vec::new(),
            conditions: Vec::new(),
            presupposed_by: None,
        }
    }

    pub fn is_presupposed(&self) -> bool {
        self.presupposed_by.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Drs {
    pub boxes: Vec<DrsBox>,
    pub relations: Vec<Relation>,
    pub top: BoxId,
}

/// How a box hangs off its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attachment {
    Top,
    Operator {
        parent: usize,
        op: Operator,
        position: usize,
        operands: Vec<usize>,
    },
    Segment {
        parent: usize,
        index: usize,
    },
    Presupposition {
        parent: usize,
    },
}

impl Attachment {
    pub fn parent(&self) -> Option<usize> {
        match *self {
            Attachment::Top => None,
            Attachment::Operator { parent, .. }
            | Attachment::Segment { parent, .. }
            | Attachment::Presupposition { parent } => Some(parent),
        }
    }
}

/// Box-level skeleton of a validated [`Drs`], indexed by position in `boxes`.
#[derive(Debug, Clone)]
pub struct Structure {
    pub attachment: Vec<Attachment>,
    /// Segments of each box's discourse relations, in first-mention order.
    pub segments: Vec<Vec<usize>>,
    /// Presupposition boxes anchored in each box.
    pub presuppositions: Vec<Vec<usize>>,
    pub top: usize,
}

impl Structure {
    /// Boxes whose referents are visible from box `b`, including `b`.
    pub fn accessible(&self, b: usize) -> Vec<usize> {
        let mut out = vec![b];
        out.extend(&self.presuppositions[b]);
        let mut cur = b;
        while let Some(parent) = self.attachment[cur].parent() {
            match &self.attachment[cur] {
                Attachment::Operator {
                    op,
                    position,
                    operands,
                    ..
                } if *position > 0 && op.antecedent_accessible() => out.push(operands[0]),
                Attachment::Segment { index, .. } => {
                    out.extend(self.segments[parent][..*index].iter().copied())
                }
                _ => {}
            }
            out.push(parent);
            out.extend(&self.presuppositions[parent]);
            cur = parent;
        }
        out
    }

    /// Whether `ancestor` is `b` or lies on `b`'s parent chain.
    pub fn dominates(&self, ancestor: usize, b: usize) -> bool {
        let mut cur = Some(b);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.attachment[c].parent();
        }
        false
    }

    /// Depth-first box order matching the tree encoding: a box, then its
    /// presuppositions, operator operands in condition order, then segments.
    pub fn preorder(&self, drs: &Drs) -> Vec<usize> {
        let index = drs.box_index();
        let mut order = Vec::with_capacity(drs.boxes.len());
        let mut stack = vec![self.top];
        while let Some(b) = stack.pop() {
            order.push(b);
            let mut children: Vec<usize> = self.presuppositions[b].clone();
            for cond in &drs.boxes[b].conditions {
                if let Condition::Op { boxes, .. } = cond {
                    children.extend(boxes.iter().map(|id| index[id]));
                }
            }
            children.extend(&self.segments[b]);
            stack.extend(children.into_iter().rev());
        }
        order
    }
}

impl Drs {
    pub fn box_index(&self) -> BTreeMap<BoxId, usize> {
        self.boxes
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect()
    }

    pub fn get(&self, id: &BoxId) -> Option<&DrsBox> {
        self.boxes.iter().find(|b| &b.id == id)
    }

    pub fn condition_count(&self) -> usize {
        self.boxes.iter().map(|b| b.conditions.len()).sum()
    }

    pub fn referent_count(&self) -> usize {
        self.boxes.iter().map(|b| b.referents.len()).sum()
    }

    /// Computes the box skeleton, checking that every box except the top has
    /// exactly one parent and that the structure is a tree rooted at `top`.
    pub fn structure(&self) -> Result<Structure, DrsError> {
        let index = self.box_index();
        if index.len() != self.boxes.len() {
            return Err(DrsError::InvalidStructure("duplicate box id".into()));
        }
        let top = *index
            .get(&self.top)
            .ok_or_else(|| DrsError::UnknownBox(self.top.0.clone()))?;
        let lookup = |id: &BoxId| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| DrsError::UnknownBox(id.0.clone()))
        };

        let n = self.boxes.len();
        let mut attachment: Vec<Option<Attachment>> = vec![None; n];
        let mut attach = |child: usize, a: Attachment| -> Result<(), DrsError> {
            if attachment[child].is_some() {
                return Err(DrsError::MultipleParents(self.boxes[child].id.0.clone()));
            }
            attachment[child] = Some(a);
            Ok(())
        };

        for (p, b) in self.boxes.iter().enumerate() {
            for cond in &b.conditions {
                if let Condition::Op { op, boxes } = cond {
                    if boxes.len() != op.arity() {
                        return Err(DrsError::InvalidStructure(format!(
                            "{op} in {} takes {} box(es)",
                            b.id,
                            op.arity()
                        )));
                    }
                    let operands = boxes.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
                    for (position, &child) in operands.iter().enumerate() {
                        attach(
                            child,
                            Attachment::Operator {
                                parent: p,
                                op: *op,
                                position,
                                operands: operands.clone(),
                            },
                        )?;
                    }
                }
            }
        }

        let mut segments = vec![Vec::new(); n];
        for rel in &self.relations {
            let anchor = lookup(&rel.anchor)?;
            let left = lookup(&rel.left)?;
            let right = lookup(&rel.right)?;
            if left == right {
                return Err(DrsError::InvalidStructure(format!(
                    "relation {} links {} to itself",
                    rel.label, rel.left
                )));
            }
            for seg in [left, right] {
                if !segments[anchor].contains(&seg) {
                    segments[anchor].push(seg);
                    let index = segments[anchor].len() - 1;
                    attach(seg, Attachment::Segment { parent: anchor, index })?;
                }
            }
        }

        let mut presuppositions = vec![Vec::new(); n];
        for (i, b) in self.boxes.iter().enumerate() {
            if let Some(anchor) = &b.presupposed_by {
                let p = lookup(anchor)?;
                presuppositions[p].push(i);
                attach(i, Attachment::Presupposition { parent: p })?;
            }
        }

        if attachment[top].is_some() {
            return Err(DrsError::CyclicStructure(self.top.0.clone()));
        }
        attachment[top] = Some(Attachment::Top);

        for start in 0..n {
            let mut seen = HashSet::new();
            let mut cur = start;
            loop {
                if !seen.insert(cur) {
                    return Err(DrsError::CyclicStructure(self.boxes[cur].id.0.clone()));
                }
                match &attachment[cur] {
                    None => {
                        return Err(DrsError::UnreachableBox(self.boxes[cur].id.0.clone()))
                    }
                    Some(Attachment::Top) => break,
                    Some(a) => cur = a.parent().unwrap(),
                }
            }
        }

        Ok(Structure {
            attachment: attachment.into_iter().map(Option::unwrap).collect(),
            segments,
            presuppositions,
            top,
        })
    }

    /// Checks every structural and scoping invariant.
    pub fn validate(&self) -> Result<Structure, DrsError> {
        let structure = self.structure()?;
        let mut declared: BTreeMap<&Var, usize> = BTreeMap::new();
        for (i, b) in self.boxes.iter().enumerate() {
            for v in &b.referents {
                if declared.insert(v, i).is_some() {
                    return Err(DrsError::DuplicateReferent(v.to_string()));
                }
            }
        }
        for (i, b) in self.boxes.iter().enumerate() {
            let visible: BTreeSet<usize> = structure.accessible(i).into_iter().collect();
            for cond in &b.conditions {
                match cond {
                    Condition::Pred { label, .. } | Condition::Role { label, .. }
                        if !is_symbol_text(label) =>
                    {
                        return Err(DrsError::InvalidStructure(format!("bad label `{label}`")));
                    }
                    _ => {}
                }
                for v in cond.vars() {
                    if !declared.get(v).is_some_and(|d| visible.contains(d)) {
                        return Err(DrsError::UnboundVariable {
                            var: v.to_string(),
                            box_id: b.id.to_string(),
                        });
                    }
                }
            }
        }
        for rel in &self.relations {
            if !is_symbol_text(&rel.label) {
                return Err(DrsError::InvalidStructure(format!("bad label `{}`", rel.label)));
            }
        }
        Ok(structure)
    }

    /// Reorders `boxes` into the canonical depth-first order.
    pub fn normalized(mut self) -> Result<Self, DrsError> {
        let structure = self.structure()?;
        let order = structure.preorder(&self);
        let mut slots: Vec<Option<DrsBox>> = self.boxes.into_iter().map(Some).collect();
        self.boxes = order.into_iter().map(|i| slots[i].take().unwrap()).collect();
        Ok(self)
    }
}
