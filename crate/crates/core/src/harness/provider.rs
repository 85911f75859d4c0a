use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{Scenario, TIME_EPS};
use crate::bt::TickStatus;
use crate::runtime::PredicateProvider;

/// Condition source driven by a scenario script.
///
/// Operating-scenario conditions follow the timeline exactly. Every other
/// condition id is an event: its raw value at tick `k` is "injected and
/// above tolerance" XOR a seeded noise flip, and it reports SUCCESS only
/// once the raw value has held on ticks `k - N ..= k`, with
/// `N = ceil(t_anomaly_s * tick_rate_hz)`. Ticks before 0 count as false.
///
/// Noise for `(event, tick)` is drawn from a ChaCha8 stream keyed by the
/// seed and the event id at a position fixed by the tick, so answers do not
/// depend on query order.
#[derive(Debug, Clone)]
pub struct DebouncedProvider {
    scenario: Scenario,
    os_conditions: BTreeSet<String>,
}

impl DebouncedProvider {
    pub fn new(scenario: Scenario, os_conditions: BTreeSet<String>) -> Self {
        DebouncedProvider {
            scenario,
            os_conditions,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn is_os_condition(&self, id: &str) -> bool {
        self.os_conditions.contains(id)
    }

    pub fn time_of(&self, tick: u64) -> f64 {
        tick as f64 / self.scenario.tick_rate_hz
    }

    /// Number of extra ticks an event must persist, `ceil(t_anomaly * rate)`.
    pub fn debounce_ticks(&self, event_id: &str) -> u64 {
        let d = self.scenario.debounce_for(event_id);
        (d.t_anomaly_s * self.scenario.tick_rate_hz - TIME_EPS).ceil().max(0.0) as u64
    }

    pub fn injected(&self, event_id: &str, tick: u64) -> bool {
        let t = self.time_of(tick);
        let tolerance = self.scenario.debounce_for(event_id).tolerance;
        self.scenario
            .injections
            .iter()
            .filter(|i| i.event_id == event_id)
            .filter_map(|i| i.magnitude(t).map(|m| (i, m)))
            .any(|(i, m)| i.ramp_per_s.is_none() || m > tolerance + TIME_EPS)
    }

    pub fn noise_flip(&self, event_id: &str, tick: u64) -> bool {
        let p = self.scenario.noise.false_flip_prob;
        if p <= 0.0 {
            return false;
        }
        if p >= 1.0 {
            return true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.noise.seed);
        rng.set_stream(fnv1a(event_id));
        // One f64 consumes two 32-bit words.
        rng.set_word_pos(u128::from(tick) * 2);
        rng.random::<f64>() < p
    }

    pub fn raw(&self, event_id: &str, tick: u64) -> bool {
        self.injected(event_id, tick) ^ self.noise_flip(event_id, tick)
    }

    pub fn event_status(&self, event_id: &str, tick: u64) -> bool {
        let n = self.debounce_ticks(event_id);
        if n > tick {
            return false;
        }
        (tick - n..=tick).all(|k| self.raw(event_id, k))
    }
}

impl PredicateProvider for DebouncedProvider {
    fn query(&self, condition_id: &str, tick: u64) -> TickStatus {
        let ok = if self.os_conditions.contains(condition_id) {
            self.scenario.active_os(self.time_of(tick)) == Some(condition_id)
        } else {
            self.event_status(condition_id, tick)
        };
        if ok {
            TickStatus::Success
        } else {
            TickStatus::Failure
        }
    }
}

/// Provider whose operating-scenario conditions are the ids named in the
/// scenario's timeline.
pub fn debounced_provider(scenario: &Scenario) -> DebouncedProvider {
    let os = scenario.os_timeline.iter().map(|s| s.os.clone()).collect();
    DebouncedProvider::new(scenario.clone(), os)
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
