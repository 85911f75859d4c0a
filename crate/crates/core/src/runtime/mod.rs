//! Deterministic tick engine.
//!
//! Every tick restarts at the root of the main tree and walks depth-first,
//! left to right. Composite nodes short-circuit: a Fallback stops at its
//! first non-FAILURE child, a Sequence at its first non-SUCCESS child.
//! There is no per-node memory between ticks except for the set of actions
//! that are still running.

mod layout;
mod supervisor;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bt::{BtDocument, BtNode, DecoratorKind, TickStatus};

pub use layout::SupervisorLayout;
pub use supervisor::{run_supervisor, tick_count, Supervisor};
pub use trace::{NodeKind, TickTrace, TraceEntry, Visit, NOMINAL_EVENT, TRACE_LOG_HEADER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("tick {tick}: condition `{condition}` returned RUNNING")]
    ConditionRunning { condition: String, tick: u64 },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("tick rate must be positive and finite, got {0}")]
    TickRate(f64),
}

/// Source of truth for condition nodes. Must be pure in
/// `(condition_id, tick)` and answer only SUCCESS or FAILURE.
pub trait PredicateProvider {
    fn query(&self, condition_id: &str, tick: u64) -> TickStatus;
}

impl<F> PredicateProvider for F
where
    F: Fn(&str, u64) -> TickStatus,
{
    fn query(&self, condition_id: &str, tick: u64) -> TickStatus {
        self(condition_id, tick)
    }
}

/// Side of the supervisor that carries out safety states.
///
/// `start` is called on the first tick an action is reached (or reached
/// again after it ended), then `poll` on that tick and every following tick
/// it is reached. `poll` answers RUNNING until the safety goal is achieved
/// and SUCCESS afterwards. `halt` is called when a running action stops
/// being reached.
pub trait ActionExecutor {
    fn start(&mut self, action_id: &str, tick: u64) -> Result<(), RuntimeError>;
    fn poll(&mut self, action_id: &str, tick: u64) -> Result<TickStatus, RuntimeError>;
    fn halt(&mut self, action_id: &str, tick: u64);
}

/// Executor for documents without actions; any action is an error.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoActions;

impl ActionExecutor for NoActions {
    fn start(&mut self, action_id: &str, _tick: u64) -> Result<(), RuntimeError> {
        Err(RuntimeError::UnknownAction(action_id.to_string()))
    }

    fn poll(&mut self, action_id: &str, _tick: u64) -> Result<TickStatus, RuntimeError> {
        Err(RuntimeError::UnknownAction(action_id.to_string()))
    }

    fn halt(&mut self, _action_id: &str, _tick: u64) {}
}

/// State carried between ticks of one document.
#[derive(Debug, Clone)]
pub struct TickState {
    layout: SupervisorLayout,
    running: BTreeSet<String>,
    /// Tick since which each condition has been observed SUCCESS on every
    /// tick without interruption.
    success_since: BTreeMap<String, u64>,
}

impl TickState {
    pub fn new(doc: &BtDocument) -> Self {
        TickState {
            layout: SupervisorLayout::from_document(doc),
            running: BTreeSet::new(),
            success_since: BTreeMap::new(),
        }
    }

    pub fn layout(&self) -> &SupervisorLayout {
        &self.layout
    }

    pub fn running_actions(&self) -> impl Iterator<Item = &str> {
        self.running.iter().map(String::as_str)
    }
}

struct Walk<'a, P: ?Sized, E: ?Sized> {
    doc: &'a BtDocument,
    provider: &'a P,
    executor: &'a mut E,
    state: &'a mut TickState,
    tick: u64,
    visited: Vec<Visit>,
    ticked_actions: BTreeSet<String>,
    halted: Vec<String>,
}

/// Tick `doc` once at `tick_index`. `time_s` is recorded as given.
pub fn tick<P, E>(
    doc: &BtDocument,
    provider: &P,
    executor: &mut E,
    state: &mut TickState,
    tick_index: u64,
    time_s: f64,
) -> Result<TraceEntry, RuntimeError>
where
    P: PredicateProvider + ?Sized,
    E: ActionExecutor + ?Sized,
{
    let mut walk = Walk {
        doc,
        provider,
        executor,
        state,
        tick: tick_index,
        visited: Vec::new(),
        ticked_actions: BTreeSet::new(),
        halted: Vec::new(),
    };
    let main = doc.main();
    let root_status = walk.node(&main.id, &main.root, None)?;

    let stale: Vec<String> = walk
        .state
        .running
        .iter()
        .filter(|a| !walk.ticked_actions.contains(*a))
        .cloned()
        .collect();
    for a in stale {
        walk.executor.halt(&a, tick_index);
        walk.state.running.remove(&a);
        walk.halted.push(a);
    }

    let Walk {
        visited,
        halted,
        state,
        ..
    } = walk;

    let mut seen_success = BTreeSet::new();
    for v in &visited {
        if v.kind == NodeKind::Condition {
            let id = v.id.as_deref().unwrap_or_default();
            if v.status == TickStatus::Success {
                seen_success.insert(id.to_string());
                state.success_since.entry(id.to_string()).or_insert(tick_index);
            }
        }
    }
    state.success_since.retain(|id, _| seen_success.contains(id));

    Ok(TraceEntry::identify(
        tick_index,
        time_s,
        root_status,
        visited,
        halted,
        state,
    ))
}

impl<P, E> Walk<'_, P, E>
where
    P: PredicateProvider + ?Sized,
    E: ActionExecutor + ?Sized,
{
    fn enter(&mut self, definition: &str, node: &BtNode, parent: Option<usize>) -> usize {
        let (kind, id) = NodeKind::of(node);
        self.visited.push(Visit {
            definition: definition.to_string(),
            kind,
            id,
            parent,
            status: TickStatus::Failure,
        });
        self.visited.len() - 1
    }

    fn node(&mut self, definition: &str, node: &BtNode, parent: Option<usize>) -> Result<TickStatus, RuntimeError> {
        let me = self.enter(definition, node, parent);
        let status = match node {
            BtNode::Fallback(children) => {
                let mut out = TickStatus::Failure;
                for c in children {
                    out = self.node(definition, c, Some(me))?;
                    if out != TickStatus::Failure {
                        break;
                    }
                }
                out
            }
            BtNode::Sequence(children) => {
                let mut out = TickStatus::Success;
                for c in children {
                    out = self.node(definition, c, Some(me))?;
                    if out != TickStatus::Success {
                        break;
                    }
                }
                out
            }
            BtNode::Parallel {
                children,
                success_threshold,
            } => {
                let (mut ok, mut failed) = (0usize, 0usize);
                for c in children {
                    match self.node(definition, c, Some(me))? {
                        TickStatus::Success => ok += 1,
                        TickStatus::Failure => failed += 1,
                        TickStatus::Running => {}
                    }
                }
                if ok >= *success_threshold {
                    TickStatus::Success
                } else if failed > children.len() - success_threshold {
                    TickStatus::Failure
                } else {
                    TickStatus::Running
                }
            }
            BtNode::Decorator {
                kind: DecoratorKind::Inverter,
                child,
            } => match self.node(definition, child, Some(me))? {
                TickStatus::Success => TickStatus::Failure,
                TickStatus::Failure => TickStatus::Success,
                TickStatus::Running => TickStatus::Running,
            },
            BtNode::Condition(id) => match self.provider.query(id, self.tick) {
                TickStatus::Running => {
                    return Err(RuntimeError::ConditionRunning {
                        condition: id.clone(),
                        tick: self.tick,
                    })
                }
                s => s,
            },
            BtNode::Action(id) => self.action(id)?,
            BtNode::SubTree(id) => {
                let def = self.doc.definition(id).expect("references validated on construction");
                self.node(&def.id, &def.root, Some(me))?
            }
        };
        self.visited[me].status = status;
        Ok(status)
    }

    fn action(&mut self, id: &str) -> Result<TickStatus, RuntimeError> {
        if !self.state.running.contains(id) {
            // Anything still running whose branch was not reached yet this
            // tick is preempted before the new action starts.
            let preempted: Vec<String> = self
                .state
                .running
                .iter()
                .filter(|a| !self.ticked_actions.contains(*a))
                .cloned()
                .collect();
            for a in preempted {
                self.executor.halt(&a, self.tick);
                self.state.running.remove(&a);
                self.halted.push(a);
            }
            self.executor.start(id, self.tick)?;
        }
        let status = self.executor.poll(id, self.tick)?;
        self.ticked_actions.insert(id.to_string());
        if status == TickStatus::Running {
            self.state.running.insert(id.to_string());
        } else {
            self.state.running.remove(id);
        }
        Ok(status)
    }
}

#[cfg(test)]
mod tests;
