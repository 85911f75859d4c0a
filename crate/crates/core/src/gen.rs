//! Seeded random inputs for property tests, acceptance checks and benches.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bt::{BtDefinition, BtDocument, BtNode};
use crate::fault_tree::{FaultTreeDoc, FtNode, HazardTree};

/// Random fault tree over `n_events` distinct events `E_01..`, with gates
/// of 2 to `max_arity` children. Probabilities are drawn from
/// `[0.001, 0.6)`.
pub fn random_fault_tree<R: Rng + ?Sized>(rng: &mut R, n_events: usize, max_arity: usize) -> FtNode {
    assert!(n_events >= 2 && max_arity >= 2);
    let mut leaves: Vec<FtNode> = (1..=n_events)
        .map(|i| FtNode::event(format!("E_{i:02}"), rng.random_range(0.001..0.6)))
        .collect();
    leaves.shuffle(rng);
    build(rng, leaves, max_arity)
}

fn build<R: Rng + ?Sized>(rng: &mut R, mut leaves: Vec<FtNode>, max_arity: usize) -> FtNode {
    if leaves.len() == 1 {
        return leaves.pop().unwrap();
    }
    let arity = rng.random_range(2..=max_arity.min(leaves.len()));
    // Cut points split the leaves into `arity` non-empty runs.
    let mut cuts: Vec<usize> = (1..leaves.len()).collect();
    cuts.shuffle(rng);
    cuts.truncate(arity - 1);
    cuts.sort_unstable();
    let mut children = Vec::with_capacity(arity);
    for cut in cuts.into_iter().rev() {
        let tail = leaves.split_off(cut);
        children.push(build(rng, tail, max_arity));
    }
    children.push(build(rng, leaves, max_arity));
    children.reverse();
    if rng.random_bool(0.5) {
        FtNode::and(children)
    } else {
        FtNode::or(children)
    }
}

/// Fault-tree document with `hazards` random hazard trees over disjoint
/// event id ranges.
pub fn random_fault_tree_doc<R: Rng + ?Sized>(rng: &mut R, item: &str, hazards: usize, max_events: usize) -> FaultTreeDoc {
    let hazards = (1..=hazards)
        .map(|h| {
            let n = rng.random_range(2..=max_events.max(2));
            let mut root = random_fault_tree(rng, n, 4);
            rename_events(&mut root, &format!("E_{h}"));
            HazardTree {
                hazard_id: format!("HZ_{h:02}"),
                root,
            }
        })
        .collect();
    FaultTreeDoc {
        item_id: item.to_string(),
        hazards,
    }
}

fn rename_events(node: &mut FtNode, prefix: &str) {
    match node {
        FtNode::Event(e) => e.id = format!("{prefix}{}", &e.id[2..]),
        FtNode::Gate { children, .. } => children.iter_mut().for_each(|c| rename_events(c, prefix)),
    }
}

/// Random valid behavior-tree document covering every node kind. Subtree
/// references only point at later definitions, so the result is acyclic.
pub fn random_bt_document<R: Rng + ?Sized>(rng: &mut R) -> BtDocument {
    let n_defs = rng.random_range(1..=4);
    let ids: Vec<String> = (0..n_defs).map(|i| format!("Tree_{i}")).collect();
    let defs = (0..n_defs)
        .map(|i| BtDefinition::new(ids[i].clone(), random_bt_node(rng, &ids[i + 1..], 4)))
        .collect();
    BtDocument::new(ids[0].clone(), defs).expect("generator emits valid documents")
}

fn random_bt_node<R: Rng + ?Sized>(rng: &mut R, refs: &[String], depth: u32) -> BtNode {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        return match rng.random_range(0..3) {
            0 if !refs.is_empty() => BtNode::subtree(refs[rng.random_range(0..refs.len())].clone()),
            1 => BtNode::action(format!("SS_{:02}", rng.random_range(0..20))),
            _ => BtNode::condition(format!("C_{}", rng.random_range(0..50))),
        };
    }
    let kind = rng.random_range(0..4);
    let mut children = || {
        let n = rng.random_range(1..=4);
        (0..n).map(|_| random_bt_node(rng, refs, depth - 1)).collect::<Vec<_>>()
    };
    match kind {
        0 => BtNode::Fallback(children()),
        1 => BtNode::Sequence(children()),
        2 => {
            let c = children();
            let success_threshold = rng.random_range(1..=c.len());
            BtNode::Parallel {
                children: c,
                success_threshold,
            }
        }
        _ => BtNode::inverter(children().swap_remove(0)),
    }
}
