use std::fmt::Write as _;

use serde::Serialize;

use super::TickState;
use crate::bt::{BtNode, TickStatus};

/// Event label used for ticks and outcomes where nothing was identified.
pub const NOMINAL_EVENT: &str = "E_0";

pub const TRACE_LOG_HEADER: &str = "tick,time_s,root_status,os,hazard,event,action";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Fallback,
    Sequence,
    Parallel,
    Inverter,
    Condition,
    Action,
    SubTree,
}

impl NodeKind {
    pub(super) fn of(node: &BtNode) -> (NodeKind, Option<String>) {
        match node {
            BtNode::Fallback(_) => (NodeKind::Fallback, None),
            BtNode::Sequence(_) => (NodeKind::Sequence, None),
            BtNode::Parallel { .. } => (NodeKind::Parallel, None),
            BtNode::Decorator { .. } => (NodeKind::Inverter, None),
            BtNode::Condition(id) => (NodeKind::Condition, Some(id.clone())),
            BtNode::Action(id) => (NodeKind::Action, Some(id.clone())),
            BtNode::SubTree(id) => (NodeKind::SubTree, Some(id.clone())),
        }
    }
}

/// One node reached during a tick, in the order nodes were entered.
/// `parent` indexes the same visit list; the root of a referenced
/// definition has the `SubTree` visit as parent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Visit {
    pub definition: String,
    pub kind: NodeKind,
    pub id: Option<String>,
    pub parent: Option<usize>,
    pub status: TickStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub tick: u64,
    pub time_s: f64,
    pub root_status: TickStatus,
    pub visited: Vec<Visit>,
    pub identified_os: Option<String>,
    pub identified_hazard: Option<String>,
    /// Event that triggered the identified hazard: among the SUCCESS
    /// conditions on the hazard's success path, the one that became true
    /// most recently, leftmost on ties.
    pub identified_event: Option<String>,
    /// Action that returned RUNNING on this tick.
    pub active_action: Option<String>,
    /// Action that returned SUCCESS on this tick.
    pub completed_action: Option<String>,
    pub halted_actions: Vec<String>,
}

impl TraceEntry {
    pub(super) fn identify(
        tick: u64,
        time_s: f64,
        root_status: TickStatus,
        visited: Vec<Visit>,
        halted_actions: Vec<String>,
        state: &TickState,
    ) -> Self {
        let layout = &state.layout;
        let id_of = |v: &Visit| v.id.clone().unwrap_or_default();

        let identified_os = visited
            .iter()
            .find(|v| {
                v.kind == NodeKind::Condition
                    && v.status == TickStatus::Success
                    && v.definition == layout.item
                    && v.id.as_ref().is_some_and(|id| layout.os_conditions.contains(id))
            })
            .map(id_of);

        let hazard_visit = visited.iter().position(|v| {
            v.kind == NodeKind::SubTree
                && v.status == TickStatus::Success
                && v.id.as_ref().is_some_and(|id| layout.hazards.contains(id))
        });
        let identified_hazard = hazard_visit.map(|i| id_of(&visited[i]));

        let identified_event = hazard_visit.and_then(|h| {
            let on_path = |mut i: usize| loop {
                if visited[i].status != TickStatus::Success {
                    return false;
                }
                if i == h {
                    return true;
                }
                match visited[i].parent {
                    Some(p) => i = p,
                    None => return false,
                }
            };
            let mut best: Option<(u64, &str)> = None;
            for (i, v) in visited.iter().enumerate().skip(h + 1) {
                if v.kind != NodeKind::Condition || !on_path(i) {
                    continue;
                }
                let Some(id) = v.id.as_deref() else { continue };
                if !layout.events.contains(id) {
                    continue;
                }
                let since = state.success_since.get(id).copied().unwrap_or(tick);
                if best.is_none_or(|(b, _)| since > b) {
                    best = Some((since, id));
                }
            }
            best.map(|(_, id)| id.to_string())
        });

        let action_with = |status: TickStatus| {
            visited
                .iter()
                .find(|v| v.kind == NodeKind::Action && v.status == status)
                .map(id_of)
        };

        TraceEntry {
            tick,
            time_s,
            root_status,
            identified_os,
            identified_hazard,
            identified_event,
            active_action: action_with(TickStatus::Running),
            completed_action: action_with(TickStatus::Success),
            halted_actions,
            visited,
        }
    }

    /// Number of condition nodes evaluated on this tick, up to and including
    /// the first evaluation of `condition_id`. `None` if it was not reached.
    pub fn evaluations_until(&self, condition_id: &str) -> Option<usize> {
        let mut count = 0;
        for v in &self.visited {
            if v.kind == NodeKind::Condition {
                count += 1;
                if v.id.as_deref() == Some(condition_id) {
                    return Some(count);
                }
            }
        }
        None
    }

    pub fn condition_evaluations(&self) -> usize {
        self.visited.iter().filter(|v| v.kind == NodeKind::Condition).count()
    }

    /// `tick,time_s,root_status,os,hazard,event,action`. Absent os, hazard
    /// and action are empty; an absent event is written as `E_0`.
    pub fn log_line(&self) -> String {
        format!(
            "{},{:.6},{},{},{},{},{}",
            self.tick,
            self.time_s,
            self.root_status,
            self.identified_os.as_deref().unwrap_or(""),
            self.identified_hazard.as_deref().unwrap_or(""),
            self.identified_event.as_deref().unwrap_or(NOMINAL_EVENT),
            self.active_action.as_deref().unwrap_or(""),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickTrace {
    pub tick_rate_hz: f64,
    pub entries: Vec<TraceEntry>,
}

impl TickTrace {
    /// Ticks on which no scenario condition matched.
    pub fn unmatched_os_ticks(&self) -> usize {
        self.entries.iter().filter(|e| e.identified_os.is_none()).count()
    }

    /// Header line followed by one record per tick, `\n`-terminated.
    pub fn to_log(&self) -> String {
        let mut out = String::with_capacity(64 * (self.entries.len() + 1));
        out.push_str(TRACE_LOG_HEADER);
        out.push('\n');
        for e in &self.entries {
            let _ = writeln!(out, "{}", e.log_line());
        }
        out
    }
}
