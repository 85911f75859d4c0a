//! Static fault trees: AND/OR gates over basic events with per-interval
//! occurrence probabilities.
//!
//! Trees are finite and unshared. Inside one hazard tree every basic event id
//! is distinct, which makes the independent-events recursion in
//! [`node_probability`] exact. The same event id may appear under different
//! hazards.

mod xml;

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use xml::{parse_fault_tree, to_xml};

/// Errors raised while reading or evaluating fault trees.
///
/// Every parse error carries the element path where it was detected, e.g.
/// `faultTree[I_01]/hazard[HZ_01]/or/and`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FaultTreeError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("{path}: unknown element <{name}>")]
    UnknownElement { path: String, name: String },
    #[error("{path}: missing attribute `{attribute}`")]
    MissingAttribute { path: String, attribute: String },
    #[error("{path}: {message}")]
    Structure { path: String, message: String },
    #[error("{path}: gate has {found} children, at least 2 required")]
    GateArity { path: String, found: usize },
    #[error("{path}: probability outside [0,1]: `{value}`")]
    ProbabilityRange { path: String, value: String },
    #[error("{path}: duplicate event id `{id}` within hazard `{hazard}`")]
    DuplicateEvent {
        path: String,
        hazard: String,
        id: String,
    },
    #[error("{path}: duplicate hazard id `{id}`")]
    DuplicateHazard { path: String, id: String },
    #[error("assignment has no value for event `{0}`")]
    MissingAssignment(String),
}

impl FaultTreeError {
    /// True for errors about the document's content rather than its syntax.
    pub fn is_validation(&self) -> bool {
        !matches!(self, FaultTreeError::Xml(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicEvent {
    pub id: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Or,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::And => f.write_str("and"),
            GateKind::Or => f.write_str("or"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FtNode {
    Event(BasicEvent),
    Gate { kind: GateKind, children: Vec<FtNode> },
}

impl FtNode {
    pub fn event(id: impl Into<String>, probability: f64) -> Self {
        FtNode::Event(BasicEvent {
            id: id.into(),
            probability,
        })
    }

    pub fn and(children: Vec<FtNode>) -> Self {
        FtNode::Gate {
            kind: GateKind::And,
            children,
        }
    }

    pub fn or(children: Vec<FtNode>) -> Self {
        FtNode::Gate {
            kind: GateKind::Or,
            children,
        }
    }

    /// Basic events of the subtree, left to right.
    pub fn events(&self) -> Vec<&BasicEvent> {
        let mut out = Vec::new();
        self.collect_events(&mut out);
        out
    }

    fn collect_events<'a>(&'a self, out: &mut Vec<&'a BasicEvent>) {
        match self {
            FtNode::Event(e) => out.push(e),
            FtNode::Gate { children, .. } => {
                for c in children {
                    c.collect_events(out);
                }
            }
        }
    }

    /// Smallest basic-event id in the subtree. Used as a deterministic
    /// tie-break key for gate children.
    pub fn min_event_id(&self) -> &str {
        match self {
            FtNode::Event(e) => &e.id,
            FtNode::Gate { children, .. } => children
                .iter()
                .map(FtNode::min_event_id)
                .min()
                .unwrap_or(""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardTree {
    pub hazard_id: String,
    pub root: FtNode,
}

impl HazardTree {
    pub fn probability(&self) -> f64 {
        node_probability(&self.root)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultTreeDoc {
    pub item_id: String,
    pub hazards: Vec<HazardTree>,
}

impl FaultTreeDoc {
    pub fn hazard(&self, id: &str) -> Option<&HazardTree> {
        self.hazards.iter().find(|h| h.hazard_id == id)
    }

    /// Top-event probability of every hazard, keyed by hazard id.
    pub fn hazard_probabilities(&self) -> BTreeMap<String, f64> {
        self.hazards
            .iter()
            .map(|h| (h.hazard_id.clone(), h.probability()))
            .collect()
    }
}

/// Occurrence probability of a subtree assuming independent, distinct basic
/// events: AND multiplies, OR complements the product of complements.
pub fn node_probability(node: &FtNode) -> f64 {
    match node {
        FtNode::Event(e) => e.probability,
        FtNode::Gate {
            kind: GateKind::And,
            children,
        } => children.iter().map(node_probability).product(),
        FtNode::Gate {
            kind: GateKind::Or,
            children,
        } => 1.0 - children.iter().map(|c| 1.0 - node_probability(c)).product::<f64>(),
    }
}

/// Boolean value of a subtree under a total assignment of its events.
pub fn evaluate(node: &FtNode, assignment: &BTreeMap<String, bool>) -> Result<bool, FaultTreeError> {
    evaluate_with(node, &mut |id| {
        assignment
            .get(id)
            .copied()
            .ok_or_else(|| FaultTreeError::MissingAssignment(id.to_string()))
    })
}

/// Like [`evaluate`] but pulls event values from a closure. Gates
/// short-circuit, so the closure is not called for every event.
pub fn evaluate_with<F>(node: &FtNode, value: &mut F) -> Result<bool, FaultTreeError>
where
    F: FnMut(&str) -> Result<bool, FaultTreeError>,
{
    match node {
        FtNode::Event(e) => value(&e.id),
        FtNode::Gate { kind, children } => {
            for c in children {
                let v = evaluate_with(c, value)?;
                match (kind, v) {
                    (GateKind::And, false) => return Ok(false),
                    (GateKind::Or, true) => return Ok(true),
                    _ => {}
                }
            }
            Ok(*kind == GateKind::And)
        }
    }
}

/// Fraction of `samples` independent draws in which the subtree evaluates
/// true. Deterministic for a fixed `seed`.
pub fn monte_carlo_probability(node: &FtNode, samples: u64, seed: u64) -> f64 {
    let samples = samples.max(1);
    let events = node.events();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: BTreeMap<&str, bool> = BTreeMap::new();
    let mut hits = 0u64;
    for _ in 0..samples {
        values.clear();
        for e in &events {
            // random::<f64>() is in [0, 1): p = 0 never fires, p = 1 always does.
            values.insert(e.id.as_str(), rng.random::<f64>() < e.probability);
        }
        let fired = evaluate_with(node, &mut |id| Ok(values[id])).unwrap_or(false);
        if fired {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}
