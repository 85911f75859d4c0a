use std::collections::BTreeSet;

use crate::bt::{BtDocument, BtNode};

/// Roles of the ids in a compiled supervisor, recovered from its shape:
/// conditions of the main tree select operating scenarios, definitions
/// referenced from the main tree are recovery trees, definitions referenced
/// from those are hazard detection subtrees, and conditions reachable from
/// the hazard subtrees are events.
///
/// Documents of other shapes still tick; their roles are simply empty or
/// partial.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupervisorLayout {
    pub item: String,
    pub os_conditions: BTreeSet<String>,
    pub recovery_trees: BTreeSet<String>,
    pub hazards: BTreeSet<String>,
    pub events: BTreeSet<String>,
    pub actions: BTreeSet<String>,
}

impl SupervisorLayout {
    pub fn from_document(doc: &BtDocument) -> Self {
        let main = doc.main();
        let mut layout = SupervisorLayout {
            item: main.id.clone(),
            ..Default::default()
        };
        main.root.walk(&mut |n| match n {
            BtNode::Condition(id) => {
                layout.os_conditions.insert(id.clone());
            }
            BtNode::SubTree(id) => {
                layout.recovery_trees.insert(id.clone());
            }
            _ => {}
        });
        for r in &layout.recovery_trees {
            if let Some(def) = doc.definition(r) {
                def.root.walk(&mut |n| match n {
                    BtNode::SubTree(id) => {
                        layout.hazards.insert(id.clone());
                    }
                    BtNode::Action(id) => {
                        layout.actions.insert(id.clone());
                    }
                    _ => {}
                });
            }
        }
        let mut pending: Vec<&str> = layout.hazards.iter().map(String::as_str).collect();
        let mut seen = BTreeSet::new();
        while let Some(id) = pending.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let Some(def) = doc.definition(id) {
                def.root.walk(&mut |n| match n {
                    BtNode::Condition(c) => {
                        layout.events.insert(c.clone());
                    }
                    BtNode::SubTree(s) => pending.push(s),
                    _ => {}
                });
            }
        }
        layout
    }

    /// Event conditions of the hazard subtrees reachable from one recovery
    /// tree, in pre-order of the expanded tree (the order a tick visits them
    /// when nothing short-circuits).
    pub fn event_priority(&self, doc: &BtDocument, recovery_tree: &str) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(def) = doc.definition(recovery_tree) {
            expand(doc, &def.root, &mut |id| {
                if self.events.contains(id) && !out.iter().any(|e| e == id) {
                    out.push(id.to_string());
                }
            });
        }
        out
    }
}

fn expand(doc: &BtDocument, node: &BtNode, f: &mut impl FnMut(&str)) {
    match node {
        BtNode::Condition(id) => f(id),
        BtNode::SubTree(id) => {
            if let Some(def) = doc.definition(id) {
                expand(doc, &def.root, f);
            }
        }
        other => {
            for c in other.children() {
                expand(doc, c, f);
            }
        }
    }
}
