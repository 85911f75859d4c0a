//! Static-to-dynamic translation in three layers:
//!
//! 1. each hazard fault tree becomes a detection subtree (AND → Sequence,
//!    OR → Fallback, event → Condition), children ordered by probability;
//! 2. each operating scenario gets a recovery tree pairing every hazard
//!    subtree with the safety state the HARA assigns, hazards ordered by ASIL;
//! 3. the item's main tree selects the active scenario, scenarios ordered by
//!    [`OsPriorityKey`](crate::hara::OsPriorityKey).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::bt::{emit_dot, BtDefinition, BtDocument, BtError, BtNode};
use crate::fault_tree::{node_probability, FaultTreeDoc, FtNode, GateKind, HazardTree};
use crate::hara::{ranked_scenarios, validate_cross, Diagnostic, HaraError, HaraTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("validation failed with {} error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Validation(Vec<Diagnostic>),
    #[error(transparent)]
    Hara(#[from] HaraError),
    #[error(transparent)]
    Bt(#[from] BtError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompileOptions {
    /// Also render the compiled document as DOT.
    pub include_dot: bool,
}

#[derive(Debug, Clone)]
pub struct CompiledSupervisor {
    pub document: BtDocument,
    pub dot: Option<String>,
    /// Non-fatal cross-validation findings.
    pub warnings: Vec<Diagnostic>,
}

/// Detection subtree for one hazard. The definition id is the hazard id.
///
/// Fallback children are ordered by subtree probability descending and
/// Sequence children ascending; ties fall back to the smallest event id in
/// each child subtree.
pub fn compile_fmp(hazard: &HazardTree) -> BtDefinition {
    BtDefinition::new(hazard.hazard_id.clone(), compile_node(&hazard.root))
}

fn compile_node(node: &FtNode) -> BtNode {
    match node {
        FtNode::Event(e) => BtNode::Condition(e.id.clone()),
        FtNode::Gate { kind, children } => {
            let mut ranked: Vec<&FtNode> = children.iter().collect();
            ranked.sort_by(|a, b| gate_child_order(*kind, a, b));
            let compiled = ranked.into_iter().map(compile_node).collect();
            match kind {
                GateKind::Or => BtNode::Fallback(compiled),
                GateKind::And => BtNode::Sequence(compiled),
            }
        }
    }
}

/// Recovery tree for one operating scenario, with definition id = `os`.
///
/// Hazards are ordered by ASIL descending, then top-event probability
/// descending, then hazard id.
pub fn compile_recovery(
    item: &str,
    os: &str,
    table: &HaraTable,
    hazard_probability: &BTreeMap<String, f64>,
) -> Result<BtDefinition, HaraError> {
    if table.rows_for_item(item).next().is_none() {
        return Err(HaraError::UnknownItem(item.to_string()));
    }
    let mut rows = table.rows_for(item, os);
    if rows.is_empty() {
        return Err(HaraError::UnknownScenario {
            item: item.to_string(),
            os: os.to_string(),
        });
    }
    let probability = |h: &str| hazard_probability.get(h).copied().unwrap_or(0.0);
    rows.sort_by(|a, b| {
        b.asil
            .cmp(&a.asil)
            .then_with(|| probability(&b.hazard_id).total_cmp(&probability(&a.hazard_id)))
            .then_with(|| a.hazard_id.cmp(&b.hazard_id))
    });
    let branches = rows
        .into_iter()
        .map(|r| {
            BtNode::Sequence(vec![
                BtNode::SubTree(r.hazard_id.clone()),
                BtNode::Action(r.safety_state_id.clone()),
            ])
        })
        .collect();
    Ok(BtDefinition::new(os, BtNode::Fallback(branches)))
}

/// Scenario-selection tree for one item, with definition id = `item`.
pub fn compile_os_tree(
    item: &str,
    table: &HaraTable,
    hazard_probability: &BTreeMap<String, f64>,
) -> Result<BtDefinition, HaraError> {
    let branches = ranked_scenarios(table, item, hazard_probability)?
        .into_iter()
        .map(|k| BtNode::Sequence(vec![BtNode::Condition(k.os_id.clone()), BtNode::SubTree(k.os_id)]))
        .collect();
    Ok(BtDefinition::new(item, BtNode::Fallback(branches)))
}

/// Full supervisor for the item of `doc`: the scenario-selection tree
/// (main), one recovery tree per scenario, and one detection subtree per
/// hazard the HARA references. Detection subtrees are defined once and
/// shared by every recovery tree that uses them.
pub fn compile_supervisor(doc: &FaultTreeDoc, table: &HaraTable) -> Result<BtDocument, CompileError> {
    compile_supervisor_with(doc, table, &CompileOptions::default()).map(|c| c.document)
}

pub fn compile_supervisor_with(
    doc: &FaultTreeDoc,
    table: &HaraTable,
    options: &CompileOptions,
) -> Result<CompiledSupervisor, CompileError> {
    let diagnostics = validate_cross(table, doc);
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(CompileError::Validation(diagnostics));
    }
    let item = doc.item_id.as_str();
    let probabilities = doc.hazard_probabilities();

    let main = compile_os_tree(item, table, &probabilities)?;
    let mut definitions = vec![main];
    for key in ranked_scenarios(table, item, &probabilities)? {
        definitions.push(compile_recovery(item, &key.os_id, table, &probabilities)?);
    }
    for hazard in &doc.hazards {
        if table.rows_for_item(item).any(|r| r.hazard_id == hazard.hazard_id) {
            definitions.push(compile_fmp(hazard));
        }
    }

    let document = BtDocument::new(item, definitions)?;
    let dot = options.include_dot.then(|| emit_dot(&document));
    Ok(CompiledSupervisor {
        document,
        dot,
        warnings: diagnostics,
    })
}

/// Ordering predicate used by the compiler, exposed for property checks:
/// `Less` when `a` must come before `b` under a gate of `kind`.
pub fn gate_child_order(kind: GateKind, a: &FtNode, b: &FtNode) -> Ordering {
    let (pa, pb) = (node_probability(a), node_probability(b));
    match kind {
        GateKind::Or => pb.total_cmp(&pa),
        GateKind::And => pa.total_cmp(&pb),
    }
    .then_with(|| a.min_event_id().cmp(b.min_event_id()))
}
