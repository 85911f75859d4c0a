//! Behavior-tree documents: a set of named definitions, one of which is the
//! main tree, linked by `SubTree` references.
//!
//! Condition ids and subtree ids live in separate namespaces, so a
//! `Condition("OS_3")` and a `SubTree("OS_3")` may sit side by side.

mod dot;
mod xml;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dot::emit_dot;
pub use xml::{emit_xml, parse_xml, BTCPP_FORMAT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BtError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("{path}: unknown element <{name}>")]
    UnknownElement { path: String, name: String },
    #[error("{path}: missing attribute `{attribute}`")]
    MissingAttribute { path: String, attribute: String },
    #[error("{path}: {message}")]
    Structure { path: String, message: String },
    #[error("main tree `{0}` is not defined")]
    MissingMain(String),
    #[error("duplicate definition `{0}`")]
    DuplicateDefinition(String),
    #[error("definition `{from}` references undefined subtree `{missing}`")]
    UnresolvedSubTree { from: String, missing: String },
    #[error("cyclic subtree references: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("definition `{definition}`: composite node without children")]
    EmptyComposite { definition: String },
    #[error("definition `{definition}`: parallel threshold {threshold} outside [1, {children}]")]
    ParallelThreshold {
        definition: String,
        threshold: usize,
        children: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TickStatus {
    Success,
    Failure,
    Running,
}

impl fmt::Display for TickStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TickStatus::Success => "SUCCESS",
            TickStatus::Failure => "FAILURE",
            TickStatus::Running => "RUNNING",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoratorKind {
    Inverter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BtNode {
    Fallback(Vec<BtNode>),
    Sequence(Vec<BtNode>),
    Parallel {
        children: Vec<BtNode>,
        success_threshold: usize,
    },
    Decorator {
        kind: DecoratorKind,
        child: Box<BtNode>,
    },
    Condition(String),
    Action(String),
    SubTree(String),
}

impl BtNode {
    pub fn condition(id: impl Into<String>) -> Self {
        BtNode::Condition(id.into())
    }

    pub fn action(id: impl Into<String>) -> Self {
        BtNode::Action(id.into())
    }

    pub fn subtree(id: impl Into<String>) -> Self {
        BtNode::SubTree(id.into())
    }

    pub fn inverter(child: BtNode) -> Self {
        BtNode::Decorator {
            kind: DecoratorKind::Inverter,
            child: Box::new(child),
        }
    }

    pub fn children(&self) -> &[BtNode] {
        match self {
            BtNode::Fallback(c) | BtNode::Sequence(c) | BtNode::Parallel { children: c, .. } => c,
            BtNode::Decorator { child, .. } => std::slice::from_ref(child),
            _ => &[],
        }
    }

    /// Symbol shown in diagrams: `?`, `→`, `⇉`, `δ`, or the leaf id.
    pub fn label(&self) -> &str {
        match self {
            BtNode::Fallback(_) => "?",
            BtNode::Sequence(_) => "→",
            BtNode::Parallel { .. } => "⇉",
            BtNode::Decorator { .. } => "δ",
            BtNode::Condition(id) | BtNode::Action(id) | BtNode::SubTree(id) => id,
        }
    }

    /// Visit every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a BtNode)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn subtree_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if let BtNode::SubTree(id) = n {
                out.push(id.as_str());
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BtDefinition {
    pub id: String,
    pub root: BtNode,
}

impl BtDefinition {
    pub fn new(id: impl Into<String>, root: BtNode) -> Self {
        BtDefinition { id: id.into(), root }
    }
}

/// A validated set of definitions. Construction checks that the main tree
/// exists, ids are unique, every `SubTree` resolves, and references are
/// acyclic.
#[derive(Debug, Clone, Serialize)]
pub struct BtDocument {
    main_id: String,
    definitions: Vec<BtDefinition>,
}

impl BtDocument {
    pub fn new(main_id: impl Into<String>, definitions: Vec<BtDefinition>) -> Result<Self, BtError> {
        let doc = BtDocument {
            main_id: main_id.into(),
            definitions,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn main_id(&self) -> &str {
        &self.main_id
    }

    pub fn definitions(&self) -> &[BtDefinition] {
        &self.definitions
    }

    pub fn definition(&self, id: &str) -> Option<&BtDefinition> {
        self.definitions.iter().find(|d| d.id == id)
    }

    pub fn main(&self) -> &BtDefinition {
        self.definition(&self.main_id).expect("validated on construction")
    }

    fn validate(&self) -> Result<(), BtError> {
        let mut ids = BTreeSet::new();
        for d in &self.definitions {
            if !ids.insert(d.id.as_str()) {
                return Err(BtError::DuplicateDefinition(d.id.clone()));
            }
        }
        if !ids.contains(self.main_id.as_str()) {
            return Err(BtError::MissingMain(self.main_id.clone()));
        }
        for d in &self.definitions {
            check_node(&d.id, &d.root)?;
            for r in d.root.subtree_refs() {
                if !ids.contains(r) {
                    return Err(BtError::UnresolvedSubTree {
                        from: d.id.clone(),
                        missing: r.to_string(),
                    });
                }
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<(), BtError> {
        let edges: BTreeMap<&str, Vec<&str>> = self
            .definitions
            .iter()
            .map(|d| (d.id.as_str(), d.root.subtree_refs()))
            .collect();

        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn visit<'a>(
            id: &'a str,
            edges: &BTreeMap<&'a str, Vec<&'a str>>,
            marks: &mut BTreeMap<&'a str, Mark>,
            stack: &mut Vec<&'a str>,
        ) -> Result<(), BtError> {
            match marks.get(id) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Open) => {
                    let start = stack.iter().position(|s| *s == id).unwrap_or(0);
                    let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(id.to_string());
                    return Err(BtError::Cycle(cycle));
                }
                None => {}
            }
            marks.insert(id, Mark::Open);
            stack.push(id);
            for next in edges.get(id).into_iter().flatten() {
                visit(next, edges, marks, stack)?;
            }
            stack.pop();
            marks.insert(id, Mark::Done);
            Ok(())
        }

        let mut marks = BTreeMap::new();
        for id in edges.keys() {
            visit(id, &edges, &mut marks, &mut Vec::new())?;
        }
        Ok(())
    }
}

fn check_node(definition: &str, node: &BtNode) -> Result<(), BtError> {
    match node {
        BtNode::Fallback(c) | BtNode::Sequence(c) if c.is_empty() => {
            return Err(BtError::EmptyComposite {
                definition: definition.to_string(),
            })
        }
        BtNode::Parallel {
            children,
            success_threshold,
        } => {
            if children.is_empty() {
                return Err(BtError::EmptyComposite {
                    definition: definition.to_string(),
                });
            }
            if *success_threshold == 0 || *success_threshold > children.len() {
                return Err(BtError::ParallelThreshold {
                    definition: definition.to_string(),
                    threshold: *success_threshold,
                    children: children.len(),
                });
            }
        }
        _ => {}
    }
    for c in node.children() {
        check_node(definition, c)?;
    }
    Ok(())
}

/// Same main id, same definitions by id (order of definitions is
/// irrelevant), and identical node trees including child order.
pub fn structural_equal(a: &BtDocument, b: &BtDocument) -> bool {
    a.main_id == b.main_id
        && a.definitions.len() == b.definitions.len()
        && a.definitions
            .iter()
            .all(|d| b.definition(&d.id).is_some_and(|other| other.root == d.root))
}

impl PartialEq for BtDocument {
    fn eq(&self, other: &Self) -> bool {
        structural_equal(self, other)
    }
}

impl Eq for BtDocument {}
