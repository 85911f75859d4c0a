//! Reference item `I_01` and its scripted campaigns.

use std::collections::BTreeMap;

use super::scenario::{Debounce, Injection, OsSwitch, Scenario};
use crate::fault_tree::{parse_fault_tree, FaultTreeDoc};
use crate::hara::{parse_hara, HaraTable};

pub const FAULT_TREE_XML: &str = include_str!("../../data/i01_fault_tree.xml");
pub const HARA_CSV: &str = include_str!("../../data/i01_hara.csv");

pub const ITEM: &str = "I_01";
pub const SCENARIOS: [&str; 3] = ["OS_1", "OS_2", "OS_3"];
pub const EVENTS: [&str; 7] = ["E_10", "E_11", "E_12A", "E_12B", "E_13", "E_14", "E_15"];
/// Events that identify a hazard on their own.
pub const SINGLE_POINT_EVENTS: [&str; 5] = ["E_10", "E_11", "E_13", "E_14", "E_15"];

pub const TICK_RATE_HZ: f64 = 100.0;
pub const T_ANOMALY_S: f64 = 0.1;

pub fn fault_tree() -> FaultTreeDoc {
    parse_fault_tree(FAULT_TREE_XML).expect("bundled fault tree is valid")
}

pub fn hara() -> HaraTable {
    parse_hara(HARA_CSV).expect("bundled HARA is valid")
}

fn base(name: String, os: &str, duration_s: f64) -> Scenario {
    let mut s = Scenario::new(ITEM, TICK_RATE_HZ, duration_s, os);
    s.name = Some(name);
    s.debounce = EVENTS
        .iter()
        .map(|e| {
            (
                e.to_string(),
                Debounce {
                    t_anomaly_s: T_ANOMALY_S,
                    tolerance: 0.0,
                },
            )
        })
        .collect::<BTreeMap<_, _>>();
    s
}

/// The other input of a two-event AND gate, injected as a latent fault
/// from the start so that the labelled event completes the cut set.
fn latent_partner(event: &str) -> Option<&'static str> {
    match event {
        "E_12A" => Some("E_12B"),
        "E_12B" => Some("E_12A"),
        _ => None,
    }
}

/// 47 single-fault runs cycling through every event and scenario. Onsets
/// are deliberately off the tick grid.
pub fn isolated_campaign() -> Vec<Scenario> {
    (0..47)
        .map(|i| {
            let event = EVENTS[i % EVENTS.len()];
            let os = SCENARIOS[(i / EVENTS.len()) % SCENARIOS.len()];
            let mut s = base(format!("isolated_{:02}_{event}_{os}", i + 1), os, 3.0);
            if let Some(p) = latent_partner(event) {
                s.injections.push(Injection::step(p, 0.0));
            }
            s.injections.push(Injection::step(event, 1.0 + 0.0037 * i as f64));
            s
        })
        .collect()
}

/// 33 multi-fault runs: every pair of single-point events and the triple of
/// `HZ_02` events, each in every scenario, injected simultaneously.
pub fn simultaneous_campaign() -> Vec<Scenario> {
    let mut sets: Vec<Vec<&str>> = Vec::new();
    for (a, ea) in SINGLE_POINT_EVENTS.iter().enumerate() {
        for eb in &SINGLE_POINT_EVENTS[a + 1..] {
            sets.push(vec![ea, eb]);
        }
    }
    sets.push(vec!["E_13", "E_14", "E_15"]);
    let mut out = Vec::new();
    for os in SCENARIOS {
        for set in &sets {
            let i = out.len();
            let mut s = base(format!("simultaneous_{:02}_{}_{os}", i + 1, set.join("+")), os, 3.0);
            let t_on = 1.0 + 0.0051 * i as f64;
            s.injections = set.iter().map(|e| Injection::step(*e, t_on)).collect();
            out.push(s);
        }
    }
    out
}

/// Fault-free runs with scenario switches.
pub fn nominal_campaign() -> Vec<Scenario> {
    (0..20)
        .map(|i| {
            let mut s = base(format!("nominal_{:02}", i + 1), SCENARIOS[i % 3], 3.0);
            s.os_timeline.push(OsSwitch {
                t: 0.5 + 0.06 * i as f64,
                os: SCENARIOS[(i + 1 + i / 3) % 3].to_string(),
            });
            s.os_timeline.push(OsSwitch {
                t: 2.0 + 0.03 * i as f64,
                os: SCENARIOS[(i + 2) % 3].to_string(),
            });
            s
        })
        .collect()
}

/// `E_13` present from 5 s to 8 s in `OS_3`: nominal, then identified,
/// then nominal again.
pub fn experiment_63() -> Scenario {
    let mut s = base("experiment_63".into(), "OS_3", 10.0);
    s.injections.push(Injection {
        event_id: "E_13".into(),
        t_on_s: 5.0,
        t_off_s: Some(8.0),
        ramp_per_s: None,
    });
    s
}

/// Growing lateral deviation (`E_15`) in `OS_3` leading to an emergency
/// stop from 10 m/s at 8 m/s².
pub fn experiment_21() -> Scenario {
    let mut s = base("experiment_21".into(), "OS_3", 50.0);
    s.debounce.insert(
        "E_15".into(),
        Debounce {
            t_anomaly_s: T_ANOMALY_S,
            tolerance: 0.3,
        },
    );
    s.injections.push(Injection {
        event_id: "E_15".into(),
        t_on_s: 45.0,
        t_off_s: None,
        ramp_per_s: Some(0.5),
    });
    s.vehicle.initial_speed_mps = 10.0;
    s.vehicle.brake_decel_mps2 = 8.0;
    s
}

/// Every bundled scenario, keyed by file stem.
pub fn all_scenarios() -> Vec<Scenario> {
    let mut all = isolated_campaign();
    all.extend(simultaneous_campaign());
    all.extend(nominal_campaign());
    all.push(experiment_63());
    all.push(experiment_21());
    all
}
