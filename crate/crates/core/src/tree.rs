//! Tree encoding of a [`Drs`] and its bracketed linearization.
//!
//! Node inventory:
//!
//! ```text
//! (DRS child*)                 box: referents, presuppositions, conditions, segments
//! (REF x1)                     referent declaration
//! (PRESUP (DRS ...))           presupposed box
//! (PRED label x1)              unary predicate
//! (ROLE label arg arg)         binary role; args are variables or "constants"
//! (OP:NOT (DRS ...))           operator over one or two boxes
//! (SDRS (DRS ...)+ (REL:L k1 k2)+)   discourse relations between segments
//! ```
//!
//! Variables are repeated at every use, so the encoding is a plain tree.
//! Segment references `kN` point at the N-th box child of the enclosing SDRS.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::drs::{
    is_symbol_text, Arg, BoxId, Condition, Drs, DrsBox, DrsError, Operator, Relation, Sort, Var,
};

pub const BOX: &str = "DRS";
pub const REF: &str = "REF";
pub const PRED: &str = "PRED";
pub const ROLE: &str = "ROLE";
pub const SDRS: &str = "SDRS";
pub const PRESUP: &str = "PRESUP";
pub const OP_PREFIX: &str = "OP:";
pub const REL_PREFIX: &str = "REL:";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(String),
    Internal { label: String, children: Vec<Node> },
}

impl Node {
    pub fn leaf(s: impl Into<String>) -> Self {
        Node::Leaf(s.into())
    }

    pub fn internal(label: impl Into<String>, children: Vec<Node>) -> Self {
        Node::Internal {
            label: label.into(),
            children,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Node::Leaf(s) => s,
            Node::Internal { label, .. } => label,
        }
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::Leaf(_) => &[],
            Node::Internal { children, .. } => children,
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(Node::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Node::depth).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&str> {
        match self {
            Node::Leaf(s) => vec![s.as_str()],
            Node::Internal { children, .. } => children.iter().flat_map(Node::leaves).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DrsTree {
    pub root: Node,
}

/// Bracketed token sequence: `(LABEL` opens, `)` closes, anything else is a leaf.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct LinearSeq {
    pub tokens: Vec<String>,
}

impl LinearSeq {
    pub fn parse(line: &str) -> Self {
        LinearSeq {
            tokens: line.split_whitespace().map(str::to_string).collect(),
        }
    }
}

impl fmt::Display for LinearSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

pub fn to_tree(d: &Drs) -> Result<DrsTree, DrsError> {
    let s = d.structure()?;
    let index = d.box_index();
    fn render(
        d: &Drs,
        s: &crate::drs::Structure,
        index: &BTreeMap<BoxId, usize>,
        b: usize,
    ) -> Node {
        let bx = &d.boxes[b];
        let mut children = Vec::new();
        for r in &bx.referents {
            children.push(Node::internal(REF, vec![Node::leaf(r.as_str())]));
        }
        for &p in &s.presuppositions[b] {
            children.push(Node::internal(PRESUP, vec![render(d, s, index, p)]));
        }
        for c in &bx.conditions {
            children.push(match c {
                Condition::Pred { label, var } => Node::internal(
                    PRED,
                    vec![Node::leaf(label.clone()), Node::leaf(var.as_str())],
                ),
                Condition::Role { label, args } => Node::internal(
                    ROLE,
                    vec![
                        Node::leaf(label.clone()),
                        Node::leaf(args[0].to_string()),
                        Node::leaf(args[1].to_string()),
                    ],
                ),
                Condition::Op { op, boxes } => Node::internal(
                    format!("{OP_PREFIX}{op}"),
                    boxes.iter().map(|id| render(d, s, index, index[id])).collect(),
                ),
            });
        }
        if !s.segments[b].is_empty() {
            let segs = &s.segments[b];
            let mut sdrs: Vec<Node> = segs.iter().map(|&g| render(d, s, index, g)).collect();
            let k = |id: &BoxId| {
                let pos = segs.iter().position(|&g| g == index[id]).unwrap();
                Node::leaf(format!("k{}", pos + 1))
            };
            for rel in d.relations.iter().filter(|r| r.anchor == bx.id) {
                sdrs.push(Node::internal(
                    format!("{REL_PREFIX}{}", rel.label),
                    vec![k(&rel.left), k(&rel.right)],
                ));
            }
            children.push(Node::internal(SDRS, sdrs));
        }
        Node::internal(BOX, children)
    }
    Ok(DrsTree {
        root: render(d, &s, &index, s.top),
    })
}

pub fn linearize(t: &DrsTree) -> LinearSeq {
    fn walk(n: &Node, out: &mut Vec<String>) {
        match n {
            Node::Leaf(s) => out.push(s.clone()),
            Node::Internal { label, children } => {
                out.push(format!("({label}"));
                for c in children {
                    walk(c, out);
                }
                out.push(")".to_string());
            }
        }
    }
    let mut tokens = Vec::new();
    walk(&t.root, &mut tokens);
    LinearSeq { tokens }
}

pub fn delinearize(s: &LinearSeq) -> Result<DrsTree, DrsError> {
    let malformed = |m: &str| DrsError::MalformedSequence(m.to_string());
    if s.tokens.is_empty() {
        return Err(DrsError::EmptyInput);
    }
    let mut stack: Vec<(String, Vec<Node>)> = Vec::new();
    let mut root = None;
    for (i, tok) in s.tokens.iter().enumerate() {
        if root.is_some() {
            return Err(malformed(&format!("trailing token `{tok}` at {i}")));
        }
        if let Some(label) = tok.strip_prefix('(') {
            if label.is_empty() || label.contains(')') {
                return Err(malformed(&format!("bad opening token `{tok}` at {i}")));
            }
            stack.push((label.to_string(), Vec::new()));
        } else if tok == ")" {
            let (label, children) = stack.pop().ok_or_else(|| malformed("unbalanced `)`"))?;
            let node = Node::Internal { label, children };
            match stack.last_mut() {
                Some(parent) => parent.1.push(node),
                None => root = Some(node),
            }
        } else {
            if tok.contains('(') || tok.contains(')') {
                return Err(malformed(&format!("bad leaf `{tok}` at {i}")));
            }
            match stack.last_mut() {
                Some(parent) => parent.1.push(Node::leaf(tok.clone())),
                None => return Err(malformed("sequence must open with a bracket")),
            }
        }
    }
    root.map(|root| DrsTree { root })
        .ok_or_else(|| malformed("unclosed bracket"))
}

/// Rebuilds a [`Drs`] from its tree encoding.
///
/// Box ids are assigned in depth-first order. A variable leaf refers to the
/// nearest accessible declaration with the same surface form; a leaf with no
/// such declaration introduces a fresh referent in the current box. Surface
/// names already taken elsewhere are renamed to keep referents unique.
pub fn from_tree(t: &DrsTree) -> Result<Drs, DrsError> {
    let mut b = TreeReader::default();
    let top = b.read_box(&t.root, &HashMap::new())?;
    let drs = Drs {
        top: b.boxes[top.0].id.clone(),
        boxes: b.boxes,
        relations: b.relations,
    };
    drs.validate()?;
    drs.normalized()
}

type Scope = HashMap<String, Var>;

#[derive(Default)]
struct TreeReader {
    boxes: Vec<DrsBox>,
    relations: Vec<Relation>,
    taken: HashSet<Var>,
    next_index: HashMap<Sort, usize>,
}

fn malformed(m: impl Into<String>) -> DrsError {
    DrsError::MalformedTree(m.into())
}

impl TreeReader {
    fn declare(&mut self, surface: &Var) -> Var {
        let v = if self.taken.contains(surface) {
            let sort = surface.sort();
            loop {
                let next = self.next_index.entry(sort).or_insert(1);
                let candidate = Var::new(sort, *next);
                *next += 1;
                if !self.taken.contains(&candidate) {
                    break candidate;
                }
            }
        } else {
            surface.clone()
        };
        self.taken.insert(v.clone());
        v
    }

    fn resolve(&mut self, leaf: &str, scope: &mut Scope, box_slot: usize) -> Result<Var, DrsError> {
        let surface = Var::parse(leaf).ok_or_else(|| malformed(format!("`{leaf}` is not a variable")))?;
        if let Some(v) = scope.get(leaf) {
            return Ok(v.clone());
        }
        let v = self.declare(&surface);
        self.boxes[box_slot].referents.push(v.clone());
        scope.insert(leaf.to_string(), v.clone());
        Ok(v)
    }

    fn arg(&mut self, leaf: &Node, scope: &mut Scope, box_slot: usize) -> Result<Arg, DrsError> {
        let Node::Leaf(s) = leaf else {
            return Err(malformed("argument must be a leaf"));
        };
        if s.starts_with('"') {
            return Arg::parse(s).ok_or_else(|| malformed(format!("bad constant `{s}`")));
        }
        self.resolve(s, scope, box_slot).map(Arg::Var)
    }

    /// Reads a `DRS` node; returns its slot and the names it declared.
    fn read_box(&mut self, node: &Node, outer: &Scope) -> Result<(usize, Scope), DrsError> {
        let Node::Internal { label, children } = node else {
            return Err(malformed(format!("expected a box, found leaf `{}`", node.label())));
        };
        if label != BOX {
            return Err(malformed(format!("expected a box, found `{label}`")));
        }
        let slot = self.boxes.len();
        let id = BoxId::new(slot + 1);
        self.boxes.push(DrsBox::new(id.clone()));
        let mut scope = outer.clone();
        let mut own = Scope::new();

        for child in children {
            let Node::Internal { label, children: args } = child else {
                return Err(malformed(format!("leaf `{}` directly under a box", child.label())));
            };
            match label.as_str() {
                REF => {
                    let [Node::Leaf(name)] = &args[..] else {
                        return Err(malformed("REF takes one variable leaf"));
                    };
                    let surface =
                        Var::parse(name).ok_or_else(|| malformed(format!("`{name}` is not a variable")))?;
                    let v = self.declare(&surface);
                    self.boxes[slot].referents.push(v.clone());
                    scope.insert(name.clone(), v.clone());
                }
                PRESUP => {
                    let [inner] = &args[..] else {
                        return Err(malformed("PRESUP takes one box"));
                    };
                    let (p, declared) = self.read_box(inner, &scope)?;
                    self.boxes[p].presupposed_by = Some(id.clone());
                    scope.extend(declared);
                }
                PRED => {
                    let [Node::Leaf(pred), Node::Leaf(v)] = &args[..] else {
                        return Err(malformed("PRED takes a label and a variable"));
                    };
                    if !is_symbol_text(pred) {
                        return Err(malformed(format!("bad label `{pred}`")));
                    }
                    let var = self.resolve(v, &mut scope, slot)?;
                    self.boxes[slot].conditions.push(Condition::Pred {
                        label: pred.clone(),
                        var,
                    });
                }
                ROLE => {
                    let [Node::Leaf(role), a1, a2] = &args[..] else {
                        return Err(malformed("ROLE takes a label and two arguments"));
                    };
                    let a1 = self.arg(a1, &mut scope, slot)?;
                    let a2 = self.arg(a2, &mut scope, slot)?;
                    self.boxes[slot].conditions.push(Condition::Role {
                        label: role.clone(),
                        args: [a1, a2],
                    });
                }
                SDRS => self.read_sdrs(slot, args, &scope)?,
                l if l.starts_with(OP_PREFIX) => {
                    let op = Operator::from_label(&l[OP_PREFIX.len()..]).ok_or_else(|| {
                        DrsError::UnknownOperator {
                            label: l[OP_PREFIX.len()..].to_string(),
                        }
                    })?;
                    if args.len() != op.arity() {
                        return Err(malformed(format!("{op} takes {} box(es)", op.arity())));
                    }
                    let mut ids = Vec::new();
                    let mut inner_scope = scope.clone();
                    for (pos, a) in args.iter().enumerate() {
                        let (child, declared) = self.read_box(a, &inner_scope)?;
                        if pos == 0 && op.antecedent_accessible() {
                            inner_scope.extend(declared);
                        }
                        ids.push(self.boxes[child].id.clone());
                    }
                    self.boxes[slot].conditions.push(Condition::Op { op, boxes: ids });
                }
                other => return Err(malformed(format!("unknown node `{other}` under a box"))),
            }
        }
        for (name, v) in &scope {
            if self.boxes[slot].referents.contains(v) {
                own.insert(name.clone(), v.clone());
            }
        }
        Ok((slot, own))
    }

    fn read_sdrs(&mut self, anchor: usize, children: &[Node], outer: &Scope) -> Result<(), DrsError> {
        let mut segments = Vec::new();
        let mut scope = outer.clone();
        let mut seen_relation = false;
        let anchor_id = self.boxes[anchor].id.clone();
        for child in children {
            match child {
                Node::Internal { label, .. } if label == BOX => {
                    if seen_relation {
                        return Err(malformed("segment after relation in SDRS"));
                    }
                    let (seg, declared) = self.read_box(child, &scope)?;
                    scope.extend(declared);
                    segments.push(self.boxes[seg].id.clone());
                }
                Node::Internal { label, children: args } if label.starts_with(REL_PREFIX) => {
                    seen_relation = true;
                    let rel = &label[REL_PREFIX.len()..];
                    if !is_symbol_text(rel) {
                        return Err(malformed(format!("bad relation label `{rel}`")));
                    }
                    let pick = |n: &Node| -> Result<BoxId, DrsError> {
                        let k = n
                            .label()
                            .strip_prefix('k')
                            .and_then(|k| k.parse::<usize>().ok())
                            .filter(|&k| matches!(n, Node::Leaf(_)) && k >= 1 && k <= segments.len())
                            .ok_or_else(|| malformed(format!("bad segment reference `{}`", n.label())))?;
                        Ok(segments[k - 1].clone())
                    };
                    let [l, r] = &args[..] else {
                        return Err(malformed("relation takes two segment references"));
                    };
                    self.relations.push(Relation {
                        anchor: anchor_id.clone(),
                        label: rel.to_string(),
                        left: pick(l)?,
                        right: pick(r)?,
                    });
                }
                other => return Err(malformed(format!("unexpected `{}` in SDRS", other.label()))),
            }
        }
        let linked: HashSet<&BoxId> = self
            .relations
            .iter()
            .filter(|r| r.anchor == anchor_id)
            .flat_map(|r| [&r.left, &r.right])
            .collect();
        if segments.iter().any(|s| !linked.contains(s)) {
            return Err(malformed("SDRS segment not linked by any relation"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drs::parse_clauses;

    pub(crate) const FIGURE_ONE: &str = "\
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

    #[test]
    fn reentrant_variable_is_duplicated() {
        let d = parse_clauses(FIGURE_ONE).unwrap();
        let t = to_tree(&d).unwrap();
        let x1 = t.root.leaves().iter().filter(|l| **l == "x1").count();
        // one declaration plus the uses in laptop, Owner and Theme
        assert_eq!(x1, 4);
    }

    #[test]
    fn figure_one_round_trips_byte_equal() {
        let d = parse_clauses(FIGURE_ONE).unwrap();
        let seq = linearize(&to_tree(&d).unwrap());
        let text = seq.to_string();
        assert!(text.starts_with("(DRS (SDRS (DRS (REF e1 )"));
        let back = delinearize(&LinearSeq::parse(&text)).unwrap();
        assert_eq!(linearize(&back).to_string(), text);
        assert_eq!(from_tree(&back).unwrap(), d);
    }

    #[test]
    fn minimal_tree() {
        let d = parse_clauses("b1 REF x1\n").unwrap();
        let d2 = parse_clauses("b1 REF x1\nb1 man x1\n").unwrap();
        assert_eq!(to_tree(&d).unwrap().root.depth(), 3);
        let t = to_tree(&d2).unwrap();
        assert_eq!(linearize(&t).to_string(), "(DRS (REF x1 ) (PRED man x1 ) )");
        assert_eq!(from_tree(&t).unwrap(), d2);
    }

    #[test]
    fn depth_one_tree_round_trips() {
        let t = DrsTree {
            root: Node::internal("root", vec![Node::leaf("leaf")]),
        };
        let seq = linearize(&t);
        assert_eq!(seq.tokens, vec!["(root", "leaf", ")"]);
        assert_eq!(delinearize(&seq).unwrap(), t);
    }

    #[test]
    fn malformed_sequences() {
        let bad = |s: &str| delinearize(&LinearSeq::parse(s));
        assert!(matches!(bad("( ("), Err(DrsError::MalformedSequence(_))));
        assert!(matches!(bad("(DRS"), Err(DrsError::MalformedSequence(_))));
        assert!(matches!(bad("(DRS ) )"), Err(DrsError::MalformedSequence(_))));
        assert!(matches!(bad("x1 (DRS )"), Err(DrsError::MalformedSequence(_))));
        assert_eq!(bad(""), Err(DrsError::EmptyInput));
    }

    #[test]
    fn condition_outside_box_is_malformed() {
        let t = delinearize(&LinearSeq::parse("(PRED man x1 )")).unwrap();
        assert!(matches!(from_tree(&t), Err(DrsError::MalformedTree(_))));
        let t = delinearize(&LinearSeq::parse("(DRS man )")).unwrap();
        assert!(matches!(from_tree(&t), Err(DrsError::MalformedTree(_))));
    }

    #[test]
    fn undeclared_use_becomes_fresh_referent() {
        let t = delinearize(&LinearSeq::parse("(DRS (PRED man x3 ) (PRED tall x3 ) )")).unwrap();
        let d = from_tree(&t).unwrap();
        assert_eq!(d.boxes[0].referents.len(), 1);
    }

    #[test]
    fn empty_box_survives() {
        let d = parse_clauses("b1 REF x1\nb1 NOT b2\nb2\n").unwrap();
        let t = to_tree(&d).unwrap();
        let seq = linearize(&t);
        assert_eq!(seq.to_string(), "(DRS (REF x1 ) (OP:NOT (DRS ) ) )");
        assert_eq!(from_tree(&delinearize(&seq).unwrap()).unwrap(), d);
    }
}
