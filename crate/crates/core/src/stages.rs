//! Symbolic side of coarse-to-fine decoding.
//!
//! A DRS tree splits into three token streams:
//!
//! * the **skeleton**: boxes, operators, discourse relations and condition
//!   placeholders (`REF`, `P1` for unary predicates, `P2` for roles);
//! * the **predicates**: one label per `P1`/`P2` placeholder;
//! * the **referents**: one filler per referent slot. A `REF` slot takes
//!   `NEW:σ`; predicate arguments take a previously introduced variable, a
//!   constant, or `NEW:σ`.
//!
//! Variables are renamed to `σ1, σ2, ...` in order of introduction, so the
//! referent vocabulary is closed. [`SkeletonState`] is the pushdown automaton
//! behind the decoder's legality masks and [`ReferentScope`] tracks which
//! variables each slot can see.

use std::collections::HashMap;

use crate::drs::{DrsError, Operator, Sort, Var};
use crate::tree::{self, DrsTree, Node};

pub const OPEN_BOX: &str = "(DRS";
pub const OPEN_SDRS: &str = "(SDRS";
pub const CLOSE: &str = ")";
pub const REF_SLOT: &str = "REF";
pub const UNARY_SLOT: &str = "P1";
pub const ROLE_SLOT: &str = "P2";
pub const MAX_SEGMENTS: usize = 9;
pub const MAX_VARS_PER_SORT: usize = 40;

pub fn segment_token(k: usize) -> String {
    format!("k{k}")
}

pub fn new_var_token(sort: Sort) -> String {
    format!("NEW:{}", sort.prefix())
}

pub fn op_token(op: Operator) -> String {
    format!("({}{}", tree::OP_PREFIX, op.label())
}

pub fn relation_token(label: &str) -> String {
    format!("({}{label}", tree::REL_PREFIX)
}

/// Every skeleton token that does not depend on the corpus.
pub fn fixed_skeleton_tokens() -> Vec<String> {
    let mut out = vec![
        OPEN_BOX.to_string(),
        OPEN_SDRS.to_string(),
        CLOSE.to_string(),
        REF_SLOT.to_string(),
        UNARY_SLOT.to_string(),
        ROLE_SLOT.to_string(),
    ];
    out.extend(Operator::ALL.iter().map(|&op| op_token(op)));
    out.extend((1..=MAX_SEGMENTS).map(segment_token));
    out
}

/// Every referent action that does not depend on the corpus.
pub fn fixed_referent_tokens() -> Vec<String> {
    let mut out: Vec<String> = Sort::ALL.iter().map(|&s| new_var_token(s)).collect();
    for sort in Sort::ALL {
        out.extend((1..=MAX_VARS_PER_SORT).map(|i| Var::new(sort, i).to_string()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTargets {
    pub skeleton: Vec<String>,
    pub predicates: Vec<String>,
    pub referents: Vec<String>,
}

/// Splits a tree into the three decoding streams.
pub fn decompose(t: &DrsTree) -> Result<StageTargets, DrsError> {
    let mut out = StageTargets {
        skeleton: Vec::new(),
        predicates: Vec::new(),
        referents: Vec::new(),
    };
    let names: HashMap<String, String> = HashMap::new();
    let counts: HashMap<Sort, usize> = HashMap::new();
    let bad = |m: &str| DrsError::MalformedTree(m.to_string());

    fn walk(
        n: &Node,
        out: &mut StageTargets,
        introduce: &mut dyn FnMut(&str, &mut StageTargets) -> Result<(), DrsError>,
        names: &dyn Fn(&str) -> Option<String>,
    ) -> Result<(), DrsError> {
        let bad = |m: &str| DrsError::MalformedTree(m.to_string());
        let Node::Internal { label, children } = n else {
            return Err(bad("unexpected leaf"));
        };
        let mut arg = |leaf: &Node, out: &mut StageTargets| -> Result<(), DrsError> {
            let s = leaf.label();
            if s.starts_with('"') {
                out.referents.push(s.to_string());
                return Ok(());
            }
            match names(s) {
                Some(name) => {
                    out.referents.push(name);
                    Ok(())
                }
                None => introduce(s, out),
            }
        };
        match label.as_str() {
            tree::BOX | tree::SDRS => {
                out.skeleton.push(format!("({label}"));
                for c in children {
                    walk(c, out, introduce, names)?;
                }
                out.skeleton.push(CLOSE.into());
            }
            tree::REF => {
                out.skeleton.push(REF_SLOT.into());
                introduce(children[0].label(), out)?;
            }
            tree::PRED => {
                out.skeleton.push(UNARY_SLOT.into());
                out.predicates.push(children[0].label().to_string());
                arg(&children[1], out)?;
            }
            tree::ROLE => {
                out.skeleton.push(ROLE_SLOT.into());
                out.predicates.push(children[0].label().to_string());
                arg(&children[1], out)?;
                arg(&children[2], out)?;
            }
            l if l.starts_with(tree::OP_PREFIX) => {
                out.skeleton.push(format!("({label}"));
                for c in children {
                    walk(c, out, introduce, names)?;
                }
                out.skeleton.push(CLOSE.into());
            }
            l if l.starts_with(tree::REL_PREFIX) => {
                out.skeleton.push(format!("({label}"));
                out.skeleton.extend(children.iter().map(|c| c.label().to_string()));
                out.skeleton.push(CLOSE.into());
            }
            other => return Err(bad(&format!("`{other}` has no decoder encoding"))),
        }
        Ok(())
    }

    let names = std::cell::RefCell::new(names);
    let counts = std::cell::RefCell::new(counts);
    let mut introduce = |surface: &str, out: &mut StageTargets| -> Result<(), DrsError> {
        let v = Var::parse(surface).ok_or_else(|| bad("expected a variable"))?;
        let mut counts = counts.borrow_mut();
        let c = counts.entry(v.sort()).or_insert(0);
        *c += 1;
        names
            .borrow_mut()
            .insert(surface.to_string(), Var::new(v.sort(), *c).to_string());
        out.referents.push(new_var_token(v.sort()));
        Ok(())
    };
    let lookup = |s: &str| names.borrow().get(s).cloned();
    walk(&t.root, &mut out, &mut introduce, &lookup)?;
    Ok(out)
}

/// Rebuilds a tree from the three streams. An unfinished skeleton is closed
/// with a legal completion; the flag reports whether that happened. Closing
/// an SDRS uses `relation_label`, else the first relation in the skeleton.
pub fn compose(
    skeleton: &[String],
    predicates: &[String],
    referents: &[String],
    relation_label: Option<&str>,
) -> Result<(DrsTree, bool), DrsError> {
    let label = relation_label
        .map(str::to_string)
        .or_else(|| skeleton.iter().find_map(|t| t.strip_prefix("(REL:").map(str::to_string)))
        .unwrap_or_else(|| "CONTINUATION".to_string());
    let mut state = SkeletonState::new(Some(label), usize::MAX);
    for (i, tok) in skeleton.iter().enumerate() {
        if !state.allows(tok) {
            return Err(DrsError::MalformedSequence(format!(
                "skeleton token `{tok}` not allowed at {i}"
            )));
        }
        state.apply(tok);
    }
    let completion = state.completion();
    let truncated = !completion.is_empty() || !state.is_done() && skeleton.is_empty();
    let full: Vec<String> = if skeleton.is_empty() {
        vec![OPEN_BOX.into(), CLOSE.into()]
    } else {
        skeleton.iter().cloned().chain(completion).collect()
    };

    let mismatch = |what: &str| DrsError::InvalidStructure(format!("{what} count does not match the skeleton"));
    let mut preds = predicates.iter();
    let mut refs = referents.iter();
    let mut counts: HashMap<Sort, usize> = HashMap::new();
    let mut var_leaf = |tok: &str, allow_const: bool| -> String {
        if let Some(sort) = tok.strip_prefix("NEW:").and_then(|p| p.chars().next()).and_then(Sort::from_prefix) {
            let c = counts.entry(sort).or_insert(0);
            *c += 1;
            return Var::new(sort, *c).to_string();
        }
        if Var::parse(tok).is_some() || (allow_const && tok.starts_with('"') && tok.len() >= 2) {
            return tok.to_string();
        }
        // Unknown filler: introduce an entity.
        let c = counts.entry(Sort::Entity).or_insert(0);
        *c += 1;
        Var::new(Sort::Entity, *c).to_string()
    };

    let mut stack: Vec<(String, Vec<Node>)> = Vec::new();
    let mut root = None;
    for tok in &full {
        let leaf: Option<Node> = match tok.as_str() {
            REF_SLOT => {
                let r = refs.next().ok_or_else(|| mismatch("referent"))?;
                Some(Node::internal(tree::REF, vec![Node::leaf(var_leaf(r, false))]))
            }
            UNARY_SLOT => {
                let p = preds.next().ok_or_else(|| mismatch("predicate"))?;
                let r = refs.next().ok_or_else(|| mismatch("referent"))?;
                Some(Node::internal(
                    tree::PRED,
                    vec![Node::leaf(p.clone()), Node::leaf(var_leaf(r, false))],
                ))
            }
            ROLE_SLOT => {
                let p = preds.next().ok_or_else(|| mismatch("predicate"))?;
                let a = refs.next().ok_or_else(|| mismatch("referent"))?;
                let b = refs.next().ok_or_else(|| mismatch("referent"))?;
                Some(Node::internal(
                    tree::ROLE,
                    vec![
                        Node::leaf(p.clone()),
                        Node::leaf(var_leaf(a, true)),
                        Node::leaf(var_leaf(b, true)),
                    ],
                ))
            }
            CLOSE => {
                let (label, children) = stack.pop().expect("skeleton checked balanced");
                Some(Node::Internal { label, children })
            }
            t if t.starts_with('(') => {
                stack.push((t[1..].to_string(), Vec::new()));
                None
            }
            t => Some(Node::leaf(t)),
        };
        if let Some(node) = leaf {
            match stack.last_mut() {
                Some(parent) => parent.1.push(node),
                None => root = Some(node),
            }
        }
    }
    if preds.next().is_some() {
        return Err(mismatch("predicate"));
    }
    if refs.next().is_some() {
        return Err(mismatch("referent"));
    }
    let root = root.ok_or_else(|| DrsError::MalformedSequence("empty skeleton".into()))?;
    Ok((DrsTree { root }, truncated))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SkelTok {
    OpenBox,
    OpenSdrs,
    OpenOp(usize),
    OpenRel,
    Seg(usize),
    Ref,
    Unary,
    Role,
    Close,
    Other,
}

fn classify(tok: &str) -> SkelTok {
    match tok {
        OPEN_BOX => SkelTok::OpenBox,
        OPEN_SDRS => SkelTok::OpenSdrs,
        CLOSE => SkelTok::Close,
        REF_SLOT => SkelTok::Ref,
        UNARY_SLOT => SkelTok::Unary,
        ROLE_SLOT => SkelTok::Role,
        t => {
            if let Some(op) = t.strip_prefix("(OP:").and_then(Operator::from_label) {
                SkelTok::OpenOp(op.arity())
            } else if t.starts_with("(REL:") && t.len() > 5 {
                SkelTok::OpenRel
            } else if let Some(k) = t.strip_prefix('k').and_then(|k| k.parse().ok()) {
                SkelTok::Seg(k)
            } else {
                SkelTok::Other
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Frame {
    Box { phase: u8 },
    Op { arity: usize, filled: usize },
    Sdrs { boxes: usize, rels: usize, linked: u32 },
    Rel { args: Vec<usize> },
}

/// Pushdown automaton over skeleton tokens.
///
/// Within a box, `REF` slots come first, then conditions, then at most one
/// SDRS. An SDRS lists at least two segments and then relations; it may only
/// close once every segment is linked.
#[derive(Debug, Clone)]
pub struct SkeletonState {
    stack: Vec<Frame>,
    done: bool,
    slots: usize,
    max_slots: usize,
    predicates: usize,
    max_predicates: usize,
    relation_label: Option<String>,
}

impl SkeletonState {
    /// `relation_label` is used when closing an SDRS needs a relation; with
    /// `None`, SDRS nodes are never allowed.
    pub fn new(relation_label: Option<String>, max_slots: usize) -> Self {
        SkeletonState {
            stack: Vec::new(),
            done: false,
            slots: 0,
            max_slots,
            predicates: 0,
            max_predicates: usize::MAX,
            relation_label,
        }
    }

    /// Caps the number of `P1`/`P2` placeholders.
    pub fn with_predicate_limit(mut self, max_predicates: usize) -> Self {
        self.max_predicates = max_predicates;
        self
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn allows(&self, tok: &str) -> bool {
        let t = classify(tok);
        if self.done {
            return false;
        }
        let Some(top) = self.stack.last() else {
            return t == SkelTok::OpenBox;
        };
        let room = |n: usize| self.slots.saturating_add(n) <= self.max_slots;
        let pred_room = self.predicates < self.max_predicates;
        match top {
            Frame::Box { phase } => match t {
                SkelTok::Ref => *phase == 0 && room(1),
                SkelTok::Unary => *phase <= 1 && room(1) && pred_room,
                SkelTok::Role => *phase <= 1 && room(2) && pred_room,
                SkelTok::OpenOp(_) => *phase <= 1,
                SkelTok::OpenSdrs => *phase <= 1 && self.relation_label.is_some(),
                SkelTok::Close => true,
                _ => false,
            },
            Frame::Op { arity, filled } => match t {
                SkelTok::OpenBox => filled < arity,
                SkelTok::Close => filled == arity,
                _ => false,
            },
            Frame::Sdrs { boxes, rels, linked } => match t {
                SkelTok::OpenBox => *rels == 0 && *boxes < MAX_SEGMENTS,
                SkelTok::OpenRel => *boxes >= 2,
                SkelTok::Close => *rels >= 1 && *linked == (1u32 << boxes) - 1,
                _ => false,
            },
            Frame::Rel { args } => {
                let boxes = self.enclosing_segments();
                match t {
                    SkelTok::Seg(k) => {
                        args.len() < 2 && k >= 1 && k <= boxes && args.first() != Some(&k)
                    }
                    SkelTok::Close => args.len() == 2,
                    _ => false,
                }
            }
        }
    }

    fn enclosing_segments(&self) -> usize {
        match self.stack.iter().rev().nth(1) {
            Some(Frame::Sdrs { boxes, .. }) => *boxes,
            _ => 0,
        }
    }

    /// Advances the automaton; the token must be allowed.
    pub fn apply(&mut self, tok: &str) {
        debug_assert!(self.allows(tok), "illegal skeleton token {tok}");
        match classify(tok) {
            SkelTok::OpenBox => {
                match self.stack.last_mut() {
                    Some(Frame::Op { filled, .. }) => *filled += 1,
                    Some(Frame::Sdrs { boxes, .. }) => *boxes += 1,
                    _ => {}
                }
                self.stack.push(Frame::Box { phase: 0 });
            }
            SkelTok::Ref => self.slots += 1,
            SkelTok::Unary | SkelTok::Role => {
                self.slots += if classify(tok) == SkelTok::Role { 2 } else { 1 };
                self.predicates += 1;
                if let Some(Frame::Box { phase }) = self.stack.last_mut() {
                    *phase = 1;
                }
            }
            SkelTok::OpenOp(arity) => {
                if let Some(Frame::Box { phase }) = self.stack.last_mut() {
                    *phase = 1;
                }
                self.stack.push(Frame::Op { arity, filled: 0 });
            }
            SkelTok::OpenSdrs => {
                if let Some(Frame::Box { phase }) = self.stack.last_mut() {
                    *phase = 2;
                }
                self.stack.push(Frame::Sdrs {
                    boxes: 0,
                    rels: 0,
                    linked: 0,
                });
            }
            SkelTok::OpenRel => {
                if let Some(Frame::Sdrs { rels, .. }) = self.stack.last_mut() {
                    *rels += 1;
                }
                self.stack.push(Frame::Rel { args: Vec::new() });
            }
            SkelTok::Seg(k) => {
                if let Some(Frame::Rel { args }) = self.stack.last_mut() {
                    args.push(k);
                }
                let n = self.stack.len();
                if let Some(Frame::Sdrs { linked, .. }) = self.stack.get_mut(n.wrapping_sub(2)) {
                    *linked |= 1 << (k - 1);
                }
            }
            SkelTok::Close => {
                self.stack.pop();
                if self.stack.is_empty() {
                    self.done = true;
                }
            }
            SkelTok::Other => {}
        }
    }

    /// A short legal token sequence that finishes the skeleton.
    pub fn completion(&self) -> Vec<String> {
        let mut s = self.clone();
        let mut out = Vec::new();
        if s.stack.is_empty() && !s.done {
            return out;
        }
        while !s.done {
            let tok = match s.stack.last().unwrap() {
                Frame::Box { .. } => CLOSE.to_string(),
                Frame::Op { arity, filled } => {
                    if filled < arity {
                        OPEN_BOX.to_string()
                    } else {
                        CLOSE.to_string()
                    }
                }
                Frame::Sdrs { boxes, rels, linked } => {
                    let all = (1u32 << boxes) - 1;
                    if *rels == 0 && *boxes < 2 {
                        OPEN_BOX.to_string()
                    } else if *rels == 0 || *linked != all {
                        relation_token(s.relation_label.as_deref().unwrap_or("CONTINUATION"))
                    } else {
                        CLOSE.to_string()
                    }
                }
                Frame::Rel { args } => {
                    if args.len() == 2 {
                        CLOSE.to_string()
                    } else {
                        let (boxes, linked) = match s.stack.iter().rev().nth(1) {
                            Some(Frame::Sdrs { boxes, linked, .. }) => (*boxes, *linked),
                            _ => (0, 0),
                        };
                        let candidates = (1..=boxes).filter(|k| args.first() != Some(k));
                        let k = candidates
                            .clone()
                            .find(|k| linked & (1 << (k - 1)) == 0)
                            .or_else(|| candidates.clone().next())
                            .unwrap_or(1);
                        segment_token(k)
                    }
                }
            };
            s.apply(&tok);
            out.push(tok);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Declare,
    UnaryArg,
    RoleArg,
}

impl SlotKind {
    pub fn index(self) -> usize {
        match self {
            SlotKind::Declare => 0,
            SlotKind::UnaryArg => 1,
            SlotKind::RoleArg => 2,
        }
    }
}

/// One referent slot of a skeleton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub kind: SlotKind,
    /// Index of the skeleton token that owns the slot.
    pub token: usize,
    /// Index of the predicate placeholder, for argument slots.
    pub predicate: Option<usize>,
    /// Box (in opening order) the slot belongs to.
    pub box_index: usize,
    /// Boxes whose referents this slot may use.
    pub visible: Vec<usize>,
}

/// Lists the referent slots of a complete, legal skeleton. Segments of a
/// discourse structure see the segments mentioned before them in its
/// relations, matching the scoping of the assembled structure.
pub fn referent_slots(skeleton: &[String]) -> Vec<Slot> {
    enum Ctx {
        Box(usize),
        Op { imp: bool, operands: Vec<usize> },
        Sdrs { segs: Vec<usize>, mentions: Vec<usize> },
        Rel,
    }
    let mut slots = Vec::new();
    // Per box: enclosing box and boxes made visible by its attachment.
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut extra: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<Ctx> = Vec::new();
    let mut predicate = 0;
    for (i, tok) in skeleton.iter().enumerate() {
        let current_box = stack.iter().rev().find_map(|c| match c {
            Ctx::Box(b) => Some(*b),
            _ => None,
        });
        match classify(tok) {
            SkelTok::OpenBox => {
                let b = parent.len();
                let mut ext = Vec::new();
                match stack.last_mut() {
                    Some(Ctx::Op { imp, operands }) => {
                        if *imp && !operands.is_empty() {
                            ext.push(operands[0]);
                        }
                        operands.push(b);
                    }
                    Some(Ctx::Sdrs { segs, .. }) => segs.push(b),
                    _ => {}
                }
                parent.push(current_box);
                extra.push(ext);
                stack.push(Ctx::Box(b));
            }
            SkelTok::OpenOp(_) => {
                let imp = Operator::from_label(&tok[4..]).is_some_and(|op| op.antecedent_accessible());
                stack.push(Ctx::Op {
                    imp,
                    operands: Vec::new(),
                });
            }
            SkelTok::OpenSdrs => stack.push(Ctx::Sdrs {
                segs: Vec::new(),
                mentions: Vec::new(),
            }),
            SkelTok::OpenRel => stack.push(Ctx::Rel),
            SkelTok::Seg(k) => {
                if let Some(Ctx::Sdrs { segs, mentions }) = stack.iter_mut().rev().nth(1) {
                    if let Some(&b) = segs.get(k.wrapping_sub(1)) {
                        if !mentions.contains(&b) {
                            mentions.push(b);
                        }
                    }
                }
            }
            SkelTok::Close => {
                if let Some(Ctx::Sdrs { mentions, .. }) = stack.pop() {
                    for (r, &b) in mentions.iter().enumerate() {
                        extra[b].extend_from_slice(&mentions[..r]);
                    }
                }
            }
            kind @ (SkelTok::Ref | SkelTok::Unary | SkelTok::Role) => {
                let b = current_box.expect("slot inside a box");
                let mk = |kind, predicate| Slot {
                    kind,
                    token: i,
                    predicate,
                    box_index: b,
                    visible: Vec::new(),
                };
                match kind {
                    SkelTok::Ref => slots.push(mk(SlotKind::Declare, None)),
                    SkelTok::Unary => {
                        slots.push(mk(SlotKind::UnaryArg, Some(predicate)));
                        predicate += 1;
                    }
                    _ => {
                        slots.push(mk(SlotKind::RoleArg, Some(predicate)));
                        slots.push(mk(SlotKind::RoleArg, Some(predicate)));
                        predicate += 1;
                    }
                }
            }
            SkelTok::Other => {}
        }
    }
    // Parents open before their children, so one pass in box order suffices.
    let mut visible: Vec<Vec<usize>> = Vec::with_capacity(parent.len());
    for b in 0..parent.len() {
        let mut vis = parent[b].map(|p| visible[p].clone()).unwrap_or_default();
        vis.extend_from_slice(&extra[b]);
        vis.push(b);
        visible.push(vis);
    }
    for slot in &mut slots {
        slot.visible = visible[slot.box_index].clone();
    }
    slots
}

/// Variables introduced so far while filling referent slots.
#[derive(Debug, Clone, Default)]
pub struct ReferentScope {
    declared: Vec<(Var, usize)>,
    counts: HashMap<Sort, usize>,
}

impl ReferentScope {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whether `tok` is a legal filler for `slot`.
    pub fn allows(&self, slot: &Slot, tok: &str) -> bool {
        if let Some(sort) = tok.strip_prefix("NEW:").and_then(|p| p.chars().next()).and_then(Sort::from_prefix) {
            return self.counts.get(&sort).copied().unwrap_or(0) < MAX_VARS_PER_SORT;
        }
        if slot.kind == SlotKind::Declare {
            return false;
        }
        if let Some(v) = Var::parse(tok) {
            return self
                .declared
                .iter()
                .any(|(d, b)| *d == v && slot.visible.contains(b));
        }
        slot.kind == SlotKind::RoleArg && tok.starts_with('"') && tok.len() >= 2
    }

    pub fn apply(&mut self, slot: &Slot, tok: &str) {
        if let Some(sort) = tok.strip_prefix("NEW:").and_then(|p| p.chars().next()).and_then(Sort::from_prefix) {
            let c = self.counts.entry(sort).or_insert(0);
            *c += 1;
            self.declared.push((Var::new(sort, *c), slot.box_index));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drs::parse_clauses;
    use crate::tree::{from_tree, to_tree};

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

    fn strings(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn figure_one_streams() {
        let d = parse_clauses(FIGURE_ONE).unwrap();
        let t = to_tree(&d).unwrap();
        let st = decompose(&t).unwrap();
        assert_eq!(
            st.skeleton,
            strings("(DRS (SDRS (DRS REF P1 P2 ) (DRS REF REF P1 P1 P2 P2 P2 ) (REL:CONTINUATION k1 k2 ) ) )")
        );
        assert_eq!(
            st.predicates,
            strings("sit_down Agent open laptop Owner Agent Theme")
        );
        assert_eq!(
            st.referents,
            strings("NEW:e e1 e1 \"speaker\" NEW:e NEW:x e2 x1 x1 \"speaker\" e2 \"speaker\" e2 x1")
        );
        let (back, truncated) = compose(&st.skeleton, &st.predicates, &st.referents, None).unwrap();
        assert!(!truncated);
        assert_eq!(back, t);
        assert_eq!(from_tree(&back).unwrap(), d);
    }

    #[test]
    fn theme_reuses_declared_x1() {
        let d = parse_clauses(FIGURE_ONE).unwrap();
        let st = decompose(&to_tree(&d).unwrap()).unwrap();
        let slots = referent_slots(&st.skeleton);
        assert_eq!(slots.len(), st.referents.len());
        let mut scope = ReferentScope::new();
        for (slot, tok) in slots.iter().zip(&st.referents) {
            assert!(scope.allows(slot, tok), "{tok} rejected at {slot:?}");
            scope.apply(slot, tok);
        }
        // x1 is not visible from the first segment.
        assert!(!ReferentScope::new().allows(&slots[1], "x1"));
    }

    #[test]
    fn segment_scope_follows_relation_order() {
        let sk = strings("(DRS (SDRS (DRS P1 ) (DRS P1 ) (REL:CONTINUATION k2 k1 ) ) )");
        let slots = referent_slots(&sk);
        assert_eq!(slots[0].box_index, 1);
        assert_eq!(slots[0].visible, vec![0, 2, 1]);
        assert_eq!(slots[1].visible, vec![0, 2]);
    }

    #[test]
    fn grammar_accepts_gold_and_rejects_junk() {
        let gold = strings("(DRS REF P1 (OP:NOT (DRS REF P1 P2 ) ) )");
        let mut s = SkeletonState::new(None, usize::MAX);
        for t in &gold {
            assert!(s.allows(t), "{t}");
            s.apply(t);
        }
        assert!(s.is_done());

        let mut s = SkeletonState::new(None, usize::MAX);
        assert!(!s.allows(")"));
        s.apply("(DRS");
        s.apply("P1");
        assert!(!s.allows("REF"));
        assert!(!s.allows("(SDRS"));
        assert!(s.allows("(OP:IMP"));
        s.apply("(OP:IMP");
        assert!(!s.allows(")"));
    }

    #[test]
    fn completion_closes_open_structures() {
        let mut s = SkeletonState::new(Some("CONTINUATION".into()), usize::MAX);
        for t in strings("(DRS REF (SDRS (DRS P1") {
            s.apply(&t);
        }
        let done = s.completion();
        let mut s2 = s.clone();
        for t in &done {
            assert!(s2.allows(t));
            s2.apply(t);
        }
        assert!(s2.is_done());
        assert_eq!(
            done,
            strings(") (DRS ) (REL:CONTINUATION k1 k2 ) ) )")
        );
    }

    #[test]
    fn truncated_skeleton_is_closed() {
        let sk = strings("(DRS REF (OP:NOT (DRS P1");
        let (t, truncated) = compose(&sk, &strings("man"), &strings("NEW:x x1"), None).unwrap();
        assert!(truncated);
        assert_eq!(
            crate::tree::linearize(&t).to_string(),
            "(DRS (REF x1 ) (OP:NOT (DRS (PRED man x1 ) ) ) )"
        );
        assert!(matches!(
            compose(&sk, &[], &strings("NEW:x x1"), None),
            Err(DrsError::InvalidStructure(_))
        ));
    }
}
