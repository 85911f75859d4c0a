use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::provider::DebouncedProvider;
use super::scenario::{Scenario, TIME_EPS};
use super::vehicle::{VehicleExecutor, VehicleState};
use super::HarnessError;
use crate::bt::BtDocument;
use crate::runtime::{Supervisor, SupervisorLayout, TickTrace, tick_count, NOMINAL_EVENT};

/// Identifications later than this after the debounced onset count as
/// missed.
pub const FALSE_NEGATIVE_LATENCY_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectionOutcome {
    pub scenario: String,
    /// Event the scenario scripts as the trigger, `E_0` for a run without
    /// injections.
    pub injected_event: String,
    /// First event identified at or after the onset, `E_0` when nothing
    /// was identified in time.
    pub predicted_event: String,
    /// Identification time minus onset minus the predicted event's
    /// debounce time. Present iff `predicted_event` is not `E_0`.
    pub detection_latency_s: Option<f64>,
    pub detection_tick: Option<u64>,
    /// Condition evaluations on the detection tick up to the predicted
    /// event's condition.
    pub condition_evaluations: Option<usize>,
}

impl InjectionOutcome {
    pub fn is_nominal_run(&self) -> bool {
        self.injected_event == NOMINAL_EVENT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    /// `E_0` followed by the event ids in ascending order.
    pub labels: Vec<String>,
    /// Row = injected, column = predicted.
    pub counts: Vec<Vec<u64>>,
    /// `counts` as row percentages; rows without outcomes are all zero.
    pub rows: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn from_outcomes<'a>(events: impl IntoIterator<Item = &'a str>, outcomes: &[InjectionOutcome]) -> Self {
        let mut ids: BTreeSet<&str> = events.into_iter().collect();
        for o in outcomes {
            ids.insert(&o.injected_event);
            ids.insert(&o.predicted_event);
        }
        ids.remove(NOMINAL_EVENT);
        let labels: Vec<String> = std::iter::once(NOMINAL_EVENT)
            .chain(ids)
            .map(str::to_string)
            .collect();
        let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let n = labels.len();
        let mut counts = vec![vec![0u64; n]; n];
        for o in outcomes {
            counts[index[o.injected_event.as_str()]][index[o.predicted_event.as_str()]] += 1;
        }
        let rows = counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                    .collect()
            })
            .collect();
        ConfusionMatrix { labels, counts, rows }
    }

    pub fn percent(&self, actual: &str, predicted: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == actual)?;
        let j = self.labels.iter().position(|l| l == predicted)?;
        Some(self.rows[i][j])
    }

    /// Every row with outcomes is 100% on its diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.counts.iter().enumerate().all(|(i, row)| {
            let total: u64 = row.iter().sum();
            total == row[i]
        })
    }

    /// Aligned text table, actual events down, predicted across.
    pub fn to_table(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(7);
        let mut out = format!("{:>width$}", "act\\pred");
        for l in &self.labels {
            out.push_str(&format!(" {l:>width$}"));
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.rows) {
            out.push_str(&format!("{label:>width$}"));
            for v in row {
                out.push_str(&format!(" {:>width$}", format!("{v:.1}")));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub outcomes: Vec<InjectionOutcome>,
    pub confusion_matrix: ConfusionMatrix,
    pub latency_means_s: BTreeMap<String, f64>,
}

impl CampaignReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Everything recorded for one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub name: String,
    pub outcome: InjectionOutcome,
    pub trace: TickTrace,
    /// Vehicle state after each tick.
    pub vehicle: Vec<VehicleState>,
}

/// Mean detection latency per predicted event over outcomes of injected
/// runs that identified something.
pub fn latency_stats(outcomes: &[InjectionOutcome]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, u32)> = BTreeMap::new();
    for o in outcomes.iter().filter(|o| !o.is_nominal_run()) {
        if let Some(l) = o.detection_latency_s {
            let e = sums.entry(o.predicted_event.clone()).or_default();
            e.0 += l;
            e.1 += 1;
        }
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / f64::from(n))).collect()
}

/// Run one scenario against `doc` with the debounced provider and the
/// vehicle stub.
pub fn run_scenario(doc: &BtDocument, scenario: &Scenario) -> Result<ScenarioRun, HarnessError> {
    scenario.validate()?;
    if scenario.item != doc.main_id() {
        return Err(HarnessError::ItemMismatch {
            scenario: scenario.label().to_string(),
            expected: doc.main_id().to_string(),
            found: scenario.item.clone(),
        });
    }
    let mut sup = Supervisor::new(doc, scenario.tick_rate_hz)?;
    let layout = sup.state().layout().clone();
    let provider = DebouncedProvider::new(scenario.clone(), layout.os_conditions.clone());
    let mut executor = VehicleExecutor::new(scenario);

    let n = tick_count(scenario.tick_rate_hz, scenario.duration_s);
    let mut entries = Vec::with_capacity(n as usize);
    let mut vehicle = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let k = sup.next_tick();
        let t = k as f64 / scenario.tick_rate_hz;
        if executor.state().speed_mps > 0.0 {
            executor.set_lateral_deviation(lateral_deviation(scenario, t));
        }
        entries.push(sup.step(&provider, &mut executor)?);
        vehicle.push(executor.state());
    }
    let trace = TickTrace {
        tick_rate_hz: scenario.tick_rate_hz,
        entries,
    };
    let outcome = classify(doc, &layout, scenario, &trace);
    Ok(ScenarioRun {
        name: scenario.label().to_string(),
        outcome,
        trace,
        vehicle,
    })
}

/// Sum of the ramped anomaly magnitudes active at `t_s`.
fn lateral_deviation(scenario: &Scenario, t_s: f64) -> f64 {
    scenario
        .injections
        .iter()
        .filter(|i| i.ramp_per_s.is_some())
        .filter_map(|i| i.magnitude(t_s))
        .sum()
}

/// The scripted trigger: the injection whose debounced onset is latest,
/// ties resolved by position in the recovery tree active at that onset.
fn injected_label(doc: &BtDocument, layout: &SupervisorLayout, scenario: &Scenario) -> Option<(String, f64)> {
    let onset = |i: &super::scenario::Injection| i.onset_s(scenario.debounce_for(&i.event_id).tolerance);
    let latest = scenario
        .injections
        .iter()
        .map(onset)
        .fold(f64::NEG_INFINITY, f64::max);
    if !latest.is_finite() {
        return None;
    }
    let tied: Vec<&str> = scenario
        .injections
        .iter()
        .filter(|i| (onset(i) - latest).abs() <= TIME_EPS)
        .map(|i| i.event_id.as_str())
        .collect();
    let priority = scenario
        .active_os(latest)
        .map(|os| layout.event_priority(doc, os))
        .unwrap_or_default();
    let label = priority
        .iter()
        .find(|e| tied.contains(&e.as_str()))
        .cloned()
        .unwrap_or_else(|| tied.iter().min().expect("at least one injection").to_string());
    Some((label, latest))
}

fn classify(doc: &BtDocument, layout: &SupervisorLayout, scenario: &Scenario, trace: &TickTrace) -> InjectionOutcome {
    let rate = scenario.tick_rate_hz;
    let (injected, onset_s) = match injected_label(doc, layout, scenario) {
        Some((label, onset)) => (label, Some(onset)),
        None => (NOMINAL_EVENT.to_string(), None),
    };
    let first_tick = onset_s.map_or(0, |t| (t * rate - TIME_EPS).ceil().max(0.0) as u64);
    let detection = trace
        .entries
        .iter()
        .filter(|e| e.tick >= first_tick)
        .find_map(|e| e.identified_event.as_ref().map(|ev| (e, ev.clone())));

    let mut outcome = InjectionOutcome {
        scenario: scenario.label().to_string(),
        injected_event: injected,
        predicted_event: NOMINAL_EVENT.to_string(),
        detection_latency_s: None,
        detection_tick: None,
        condition_evaluations: None,
    };
    let Some((entry, event)) = detection else {
        return outcome;
    };
    let latency = round_ns(match onset_s {
        Some(t_on) => entry.time_s - t_on - scenario.debounce_for(&event).t_anomaly_s,
        None => entry.time_s,
    });
    if onset_s.is_some() && latency > FALSE_NEGATIVE_LATENCY_S {
        return outcome;
    }
    outcome.condition_evaluations = entry.evaluations_until(&event);
    outcome.predicted_event = event;
    outcome.detection_latency_s = Some(latency);
    outcome.detection_tick = Some(entry.tick);
    outcome
}

/// Snap to whole nanoseconds so tick-aligned results come out exact.
fn round_ns(seconds: f64) -> f64 {
    (seconds * 1e9).round() / 1e9 + 0.0
}

/// Run every scenario and aggregate, keeping input order.
pub fn run_campaign_detailed(doc: &BtDocument, scenarios: &[Scenario]) -> Result<(CampaignReport, Vec<ScenarioRun>), HarnessError> {
    let runs = scenarios
        .iter()
        .map(|s| run_scenario(doc, s))
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes: Vec<InjectionOutcome> = runs.iter().map(|r| r.outcome.clone()).collect();
    let layout = SupervisorLayout::from_document(doc);
    let report = CampaignReport {
        confusion_matrix: ConfusionMatrix::from_outcomes(layout.events.iter().map(String::as_str), &outcomes),
        latency_means_s: latency_stats(&outcomes),
        outcomes,
    };
    Ok((report, runs))
}

pub fn run_campaign(doc: &BtDocument, scenarios: &[Scenario]) -> Result<CampaignReport, HarnessError> {
    run_campaign_detailed(doc, scenarios).map(|(report, _)| report)
}
