use std::collections::BTreeSet;

use super::*;
use crate::bt::{BtDefinition, BtDocument, BtNode, TickStatus};
use crate::compiler::compile_supervisor;
use crate::fault_tree::parse_fault_tree;
use crate::hara::parse_hara;

const FIG2: &str = include_str!("../../data/i01_fault_tree.xml");
const TABLE_I: &str = include_str!("../../data/i01_hara.csv");

fn supervisor() -> BtDocument {
    compile_supervisor(&parse_fault_tree(FIG2).unwrap(), &parse_hara(TABLE_I).unwrap()).unwrap()
}

fn truth(ids: &'static [&'static str]) -> impl Fn(&str, u64) -> TickStatus {
    move |id, _| {
        if ids.contains(&id) {
            TickStatus::Success
        } else {
            TickStatus::Failure
        }
    }
}

/// Actions finish at a fixed tick; every call is logged.
#[derive(Default)]
struct Scripted {
    done_at: u64,
    log: Vec<String>,
}

impl ActionExecutor for Scripted {
    fn start(&mut self, id: &str, tick: u64) -> Result<(), RuntimeError> {
        self.log.push(format!("start {id} @{tick}"));
        Ok(())
    }

    fn poll(&mut self, _id: &str, tick: u64) -> Result<TickStatus, RuntimeError> {
        Ok(if tick >= self.done_at {
            TickStatus::Success
        } else {
            TickStatus::Running
        })
    }

    fn halt(&mut self, id: &str, tick: u64) {
        self.log.push(format!("halt {id} @{tick}"));
    }
}

fn single(root: BtNode) -> BtDocument {
    BtDocument::new("T", vec![BtDefinition::new("T", root)]).unwrap()
}

#[test]
fn fallback_short_circuits() {
    let doc = single(BtNode::Fallback(vec![BtNode::condition("S"), BtNode::condition("X")]));
    let mut state = TickState::new(&doc);
    let e = tick(&doc, &truth(&["S"]), &mut NoActions, &mut state, 0, 0.0).unwrap();
    assert_eq!(e.root_status, TickStatus::Success);
    let ids: Vec<_> = e.visited.iter().filter_map(|v| v.id.as_deref()).collect();
    assert_eq!(ids, ["S"]);
}

#[test]
fn sequence_stops_at_first_failure() {
    let doc = single(BtNode::Sequence(vec![BtNode::condition("A"), BtNode::condition("B"), BtNode::condition("C")]));
    let mut state = TickState::new(&doc);
    let e = tick(&doc, &truth(&["A", "C"]), &mut NoActions, &mut state, 0, 0.0).unwrap();
    assert_eq!(e.root_status, TickStatus::Failure);
    assert_eq!(e.condition_evaluations(), 2);
}

#[test]
fn parallel_and_inverter() {
    let par = |k| BtNode::Parallel {
        children: vec![BtNode::condition("A"), BtNode::condition("B"), BtNode::condition("C")],
        success_threshold: k,
    };
    let status = |root: BtNode, p: &'static [&'static str]| {
        let doc = single(root);
        let mut state = TickState::new(&doc);
        tick(&doc, &truth(p), &mut NoActions, &mut state, 0, 0.0).unwrap().root_status
    };
    assert_eq!(status(par(2), &["A", "C"]), TickStatus::Success);
    assert_eq!(status(par(2), &["A"]), TickStatus::Failure);
    assert_eq!(status(par(3), &["A", "B"]), TickStatus::Failure);
    assert_eq!(status(BtNode::inverter(BtNode::condition("A")), &["A"]), TickStatus::Failure);
    assert_eq!(status(BtNode::inverter(BtNode::condition("A")), &[]), TickStatus::Success);

    // One RUNNING action keeps a 2-of-2 parallel undecided.
    let doc = single(BtNode::Parallel {
        children: vec![BtNode::condition("A"), BtNode::action("act")],
        success_threshold: 2,
    });
    let mut state = TickState::new(&doc);
    let mut ex = Scripted {
        done_at: 5,
        ..Default::default()
    };
    let e = tick(&doc, &truth(&["A"]), &mut ex, &mut state, 0, 0.0).unwrap();
    assert_eq!(e.root_status, TickStatus::Running);
    let inv = single(BtNode::inverter(BtNode::action("act")));
    let mut state = TickState::new(&inv);
    assert_eq!(
        tick(&inv, &truth(&[]), &mut ex, &mut state, 0, 0.0).unwrap().root_status,
        TickStatus::Running
    );
}

#[test]
fn condition_running_is_a_contract_violation() {
    let doc = single(BtNode::condition("A"));
    let mut state = TickState::new(&doc);
    let err = tick(&doc, &|_: &str, _| TickStatus::Running, &mut NoActions, &mut state, 3, 0.0).unwrap_err();
    assert_eq!(
        err,
        RuntimeError::ConditionRunning {
            condition: "A".into(),
            tick: 3
        }
    );
}

#[test]
fn nominal_tick_walks_the_whole_supervisor() {
    let doc = supervisor();
    let mut state = TickState::new(&doc);
    let e = tick(&doc, &truth(&["OS_3"]), &mut NoActions, &mut state, 0, 0.0).unwrap();
    assert_eq!(e.root_status, TickStatus::Failure);
    assert_eq!(e.identified_os.as_deref(), Some("OS_3"));
    assert_eq!(e.identified_hazard, None);
    assert_eq!(e.active_action, None);
    let order: Vec<_> = e
        .visited
        .iter()
        .filter(|v| v.kind == NodeKind::Condition)
        .map(|v| v.id.as_deref().unwrap())
        .collect();
    assert_eq!(order, ["OS_3", "E_13", "E_15", "E_14", "E_11", "E_10", "E_12A", "OS_2", "OS_1"]);
}

#[test]
fn hazard_identification_runs_the_safety_state() {
    let doc = supervisor();
    let mut state = TickState::new(&doc);
    let mut ex = Scripted {
        done_at: u64::MAX,
        ..Default::default()
    };
    let e = tick(&doc, &truth(&["OS_3", "E_13"]), &mut ex, &mut state, 0, 0.0).unwrap();
    assert_eq!(e.root_status, TickStatus::Running);
    assert_eq!(e.identified_hazard.as_deref(), Some("HZ_02"));
    assert_eq!(e.identified_event.as_deref(), Some("E_13"));
    assert_eq!(e.active_action.as_deref(), Some("SS_04"));
    assert_eq!(e.log_line(), "0,0.000000,RUNNING,OS_3,HZ_02,E_13,SS_04");
}

#[test]
fn leftmost_event_wins() {
    let doc = supervisor();
    let mut state = TickState::new(&doc);
    let mut ex = Scripted::default();
    let e = tick(&doc, &truth(&["OS_3", "E_13", "E_14"]), &mut ex, &mut state, 0, 0.0).unwrap();
    assert_eq!(e.identified_event.as_deref(), Some("E_13"));
}

#[test]
fn detection_cost_grows_with_position() {
    let doc = supervisor();
    let cost = |ev: &'static str| {
        let mut state = TickState::new(&doc);
        let ids: &'static [&'static str] = Box::leak(vec!["OS_3", ev].into_boxed_slice());
        let mut ex = Scripted {
            done_at: u64::MAX,
            ..Default::default()
        };
        tick(&doc, &truth(ids), &mut ex, &mut state, 0, 0.0).unwrap().evaluations_until(ev).unwrap()
    };
    let costs: Vec<usize> = ["E_13", "E_15", "E_14", "E_11", "E_10"].into_iter().map(cost).collect();
    assert_eq!(costs, [2, 3, 4, 5, 6]);
}

#[test]
fn triggering_event_is_the_latest_to_become_true() {
    let doc = supervisor();
    let run = |latent: &'static str, trigger: &'static str| {
        let provider = move |id: &str, k: u64| {
            let on = id == "OS_3" || id == latent || (id == trigger && k >= 3);
            if on {
                TickStatus::Success
            } else {
                TickStatus::Failure
            }
        };
        let mut ex = Scripted {
            done_at: u64::MAX,
            ..Default::default()
        };
        let trace = run_supervisor(&doc, &provider, &mut ex, 100.0, 0.05).unwrap();
        assert!(trace.entries[..3].iter().all(|e| e.identified_hazard.is_none()));
        trace.entries[3].identified_event.clone()
    };
    assert_eq!(run("E_12B", "E_12A").as_deref(), Some("E_12A"));
    assert_eq!(run("E_12A", "E_12B").as_deref(), Some("E_12B"));
}

#[test]
fn nominal_run_never_acts() {
    let doc = supervisor();
    let trace = run_supervisor(&doc, &truth(&["OS_2"]), &mut NoActions, 100.0, 1.0).unwrap();
    assert_eq!(trace.entries.len(), 100);
    assert!(trace.entries.iter().all(|e| e.root_status == TickStatus::Failure));
    assert!(trace.entries.iter().all(|e| e.active_action.is_none()));
    assert_eq!(trace.unmatched_os_ticks(), 0);
}

#[test]
fn action_runs_until_goal_then_supervision_resumes() {
    let doc = supervisor();
    let provider = |id: &str, k: u64| {
        if id == "OS_3" || (id == "E_15" && k >= 50) {
            TickStatus::Success
        } else {
            TickStatus::Failure
        }
    };
    let mut ex = Scripted {
        done_at: 80,
        ..Default::default()
    };
    let trace = run_supervisor(&doc, &provider, &mut ex, 100.0, 1.0).unwrap();
    for e in &trace.entries {
        let expected = (50..80).contains(&e.tick).then_some("SS_04");
        assert_eq!(e.active_action.as_deref(), expected, "tick {}", e.tick);
        assert_eq!(e.identified_os.as_deref(), Some("OS_3"));
    }
    assert_eq!(trace.entries[80].completed_action.as_deref(), Some("SS_04"));
    assert_eq!(trace.entries[80].root_status, TickStatus::Success);
    assert_eq!(ex.log[0], "start SS_04 @50");
    assert!(trace.entries[49].identified_hazard.is_none());
    assert_eq!(trace.entries[50].identified_event.as_deref(), Some("E_15"));
}

#[test]
fn preempted_action_is_halted_before_the_next_starts() {
    let doc = supervisor();
    let provider = |id: &str, k: u64| {
        let on = match id {
            "OS_3" => true,
            "E_11" => k >= 1,
            "E_13" => k >= 4,
            _ => false,
        };
        if on {
            TickStatus::Success
        } else {
            TickStatus::Failure
        }
    };
    let mut ex = Scripted {
        done_at: u64::MAX,
        ..Default::default()
    };
    let trace = run_supervisor(&doc, &provider, &mut ex, 100.0, 0.06).unwrap();
    assert_eq!(ex.log, ["start SS_01 @1", "halt SS_01 @4", "start SS_04 @4"]);
    assert_eq!(trace.entries[4].halted_actions, ["SS_01"]);
    assert_eq!(trace.entries[4].active_action.as_deref(), Some("SS_04"));
}

#[test]
fn action_dropped_from_path_is_halted_at_end_of_tick() {
    let doc = supervisor();
    let provider = |id: &str, k: u64| {
        if id == "OS_3" || (id == "E_13" && k < 2) {
            TickStatus::Success
        } else {
            TickStatus::Failure
        }
    };
    let mut ex = Scripted {
        done_at: u64::MAX,
        ..Default::default()
    };
    let trace = run_supervisor(&doc, &provider, &mut ex, 100.0, 0.04).unwrap();
    assert_eq!(ex.log, ["start SS_04 @0", "halt SS_04 @2"]);
    assert!(trace.entries[2].active_action.is_none());
}

#[test]
fn zero_duration_is_empty() {
    let doc = supervisor();
    let trace = run_supervisor(&doc, &truth(&[]), &mut NoActions, 100.0, 0.0).unwrap();
    assert!(trace.entries.is_empty());
    assert_eq!(trace.to_log(), format!("{TRACE_LOG_HEADER}\n"));
    assert!(run_supervisor(&doc, &truth(&[]), &mut NoActions, 0.0, 1.0).is_err());
}

#[test]
fn unmatched_scenario_is_counted() {
    let doc = supervisor();
    let trace = run_supervisor(&doc, &truth(&[]), &mut NoActions, 10.0, 1.0).unwrap();
    assert_eq!(trace.unmatched_os_ticks(), 10);
    assert!(trace.to_log().lines().nth(1).unwrap().ends_with(",FAILURE,,,E_0,"));
}

#[test]
fn tick_count_guards_float_products() {
    assert_eq!(tick_count(100.0, 0.29), 29);
    assert_eq!(tick_count(100.0, 1.0), 100);
    assert_eq!(tick_count(3.0, 0.5), 1);
}

#[test]
fn condition_only_ticks_are_stateless() {
    let doc = supervisor();
    let p = truth(&["OS_1", "E_10", "E_14"]);
    let mut a = TickState::new(&doc);
    let first = tick(&doc, &p, &mut Scripted::default(), &mut a, 7, 0.07).unwrap();
    let mut b = TickState::new(&doc);
    let again = tick(&doc, &p, &mut Scripted::default(), &mut b, 7, 0.07).unwrap();
    assert_eq!(first, again);
    let events: BTreeSet<_> = a.layout().events.iter().cloned().collect();
    assert_eq!(events.len(), 7);
}

mod properties {
    use std::collections::BTreeMap;

    use proptest::prelude::*;

    use super::*;
    use crate::fault_tree::evaluate;

    const EVENTS: [&str; 7] = ["E_10", "E_11", "E_12A", "E_12B", "E_13", "E_14", "E_15"];

    proptest! {
        /// The identified hazard is the first hazard of the active recovery
        /// tree whose fault tree holds; the identified event is one of its
        /// true events; a tick without actions depends only on the snapshot.
        #[test]
        fn identification_matches_fault_tree_oracle(mask in 0u32..128, os in 0usize..3) {
            let doc = supervisor();
            let ft = parse_fault_tree(FIG2).unwrap();
            let os_id = ["OS_1", "OS_2", "OS_3"][os];
            let truth: BTreeMap<String, bool> =
                EVENTS.iter().enumerate().map(|(i, e)| (e.to_string(), mask & (1 << i) != 0)).collect();
            let provider = |id: &str, _| {
                if id == os_id || truth.get(id).copied().unwrap_or(false) {
                    TickStatus::Success
                } else {
                    TickStatus::Failure
                }
            };
            let mut ex = Scripted { done_at: u64::MAX, ..Default::default() };
            let mut state = TickState::new(&doc);
            let e = tick(&doc, &provider, &mut ex, &mut state, 0, 0.0).unwrap();

            let recovery = doc.definition(os_id).unwrap();
            let expected = recovery.root.subtree_refs().into_iter().find(|h| {
                evaluate(&ft.hazard(h).unwrap().root, &truth).unwrap()
            });
            prop_assert_eq!(e.identified_hazard.as_deref(), expected);
            prop_assert_eq!(e.identified_os.as_deref(), Some(os_id));
            match (&e.identified_hazard, &e.identified_event) {
                (Some(h), Some(ev)) => {
                    prop_assert!(truth[ev]);
                    prop_assert!(ft.hazard(h).unwrap().root.events().iter().any(|x| &x.id == ev));
                }
                (None, None) => prop_assert_eq!(e.root_status, TickStatus::Failure),
                _ => prop_assert!(false, "hazard and event must be identified together"),
            }
            let running = e.visited.iter().filter(|v| v.kind == NodeKind::Action && v.status == TickStatus::Running).count();
            prop_assert!(running <= 1);

            let mut fresh = TickState::new(&doc);
            let again = tick(&doc, &provider, &mut NoActionsOrRunning, &mut fresh, 0, 0.0).unwrap();
            prop_assert_eq!(again.identified_event, e.identified_event);
        }

        /// Leftmost true event in the compiled order wins.
        #[test]
        fn leftmost_true_event_is_identified(mask in 1u32..128) {
            let doc = supervisor();
            let layout = SupervisorLayout::from_document(&doc);
            let order = layout.event_priority(&doc, "OS_3");
            let on: Vec<&str> = EVENTS.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, e)| *e).collect();
            let provider = |id: &str, _| if id == "OS_3" || on.contains(&id) { TickStatus::Success } else { TickStatus::Failure };
            let mut state = TickState::new(&doc);
            let e = tick(&doc, &provider, &mut Scripted { done_at: u64::MAX, ..Default::default() }, &mut state, 0, 0.0).unwrap();
            // E_12A alone or E_12B alone do not complete their cut set.
            let expected = order.iter().find(|ev| match ev.as_str() {
                "E_12A" => on.contains(&"E_12A") && on.contains(&"E_12B"),
                "E_12B" => false,
                other => on.contains(&other),
            });
            prop_assert_eq!(e.identified_event.as_ref(), expected);
        }
    }

    /// Executor that keeps every action running; used to re-tick a snapshot.
    struct NoActionsOrRunning;

    impl ActionExecutor for NoActionsOrRunning {
        fn start(&mut self, _: &str, _: u64) -> Result<(), RuntimeError> {
            Ok(())
        }
        fn poll(&mut self, _: &str, _: u64) -> Result<TickStatus, RuntimeError> {
            Ok(TickStatus::Running)
        }
        fn halt(&mut self, _: &str, _: u64) {}
    }
}
