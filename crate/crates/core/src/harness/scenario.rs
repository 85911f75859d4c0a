use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub tick_rate_hz: f64,
    pub duration_s: f64,
    pub item: String,
    pub os_timeline: Vec<OsSwitch>,
    #[serde(default)]
    pub injections: Vec<Injection>,
    #[serde(default)]
    pub debounce: BTreeMap<String, Debounce>,
    #[serde(default)]
    pub vehicle: VehicleConfig,
    #[serde(default)]
    pub noise: Noise,
}

/// From `t` on, `os` is the active operating scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OsSwitch {
    pub t: f64,
    pub os: String,
}

/// Event `event_id` is present on `[t_on_s, t_off_s)`. Without `t_off_s`
/// it persists to the end of the run. With `ramp_per_s` the anomaly grows
/// linearly from `t_on_s` and only counts once it exceeds the event's
/// debounce tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub event_id: String,
    pub t_on_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_off_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_per_s: Option<f64>,
}

impl Injection {
    pub fn step(event_id: impl Into<String>, t_on_s: f64) -> Self {
        Injection {
            event_id: event_id.into(),
            t_on_s,
            t_off_s: None,
            ramp_per_s: None,
        }
    }

    /// Anomaly magnitude at `t_s`, `None` outside the active window. Step
    /// injections have magnitude infinity.
    pub fn magnitude(&self, t_s: f64) -> Option<f64> {
        let active = t_s + TIME_EPS >= self.t_on_s && self.t_off_s.is_none_or(|off| t_s + TIME_EPS < off);
        active.then(|| match self.ramp_per_s {
            Some(r) => r * (t_s - self.t_on_s).max(0.0),
            None => f64::INFINITY,
        })
    }

    /// Time the anomaly first exceeds `tolerance`.
    pub fn onset_s(&self, tolerance: f64) -> f64 {
        match self.ramp_per_s {
            Some(r) if r > 0.0 => self.t_on_s + tolerance / r,
            _ => self.t_on_s,
        }
    }
}

/// Guard for comparisons of tick times `k / rate` against scripted times.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Debounce {
    #[serde(default)]
    pub t_anomaly_s: f64,
    #[serde(default)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DriveMode {
    #[default]
    Autonomous,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub initial_speed_mps: f64,
    pub brake_decel_mps2: f64,
    /// Speed cap of each degraded safety state, as a fraction of the speed
    /// at the moment the state is entered.
    #[serde(default = "default_caps")]
    pub degraded_caps: BTreeMap<String, f64>,
    #[serde(default)]
    pub mode: DriveMode,
}

pub fn default_caps() -> BTreeMap<String, f64> {
    [("SS_01", 0.7), ("SS_02", 0.5), ("SS_03", 0.3)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

impl Default for VehicleConfig {
    fn default() -> Self {
        VehicleConfig {
            initial_speed_mps: 10.0,
            brake_decel_mps2: 8.0,
            degraded_caps: default_caps(),
            mode: DriveMode::Autonomous,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    #[serde(default)]
    pub false_flip_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn new(item: impl Into<String>, tick_rate_hz: f64, duration_s: f64, os: impl Into<String>) -> Self {
        Scenario {
            name: None,
            tick_rate_hz,
            duration_s,
            item: item.into(),
            os_timeline: vec![OsSwitch { t: 0.0, os: os.into() }],
            injections: Vec::new(),
            debounce: BTreeMap::new(),
            vehicle: VehicleConfig::default(),
            noise: Noise::default(),
        }
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn debounce_for(&self, event_id: &str) -> Debounce {
        self.debounce.get(event_id).copied().unwrap_or_default()
    }

    /// Operating scenario active at `t_s`: the last timeline entry with
    /// `t <= t_s`.
    pub fn active_os(&self, t_s: f64) -> Option<&str> {
        self.os_timeline
            .iter()
            .take_while(|s| s.t <= t_s + TIME_EPS)
            .last()
            .map(|s| s.os.as_str())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |path: String, message: &str| {
            Err(HarnessError::Invalid {
                path,
                message: message.to_string(),
            })
        };
        if !(self.tick_rate_hz.is_finite() && self.tick_rate_hz > 0.0) {
            return bad("tick_rate_hz".into(), "must be a positive number");
        }
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return bad("duration_s".into(), "must be a non-negative number");
        }
        if self.item.is_empty() {
            return bad("item".into(), "must not be empty");
        }
        let mut prev = 0.0;
        for (i, s) in self.os_timeline.iter().enumerate() {
            if !(s.t.is_finite() && s.t >= 0.0) {
                return bad(format!("os_timeline[{i}].t"), "must be a non-negative number");
            }
            if s.t < prev {
                return bad(format!("os_timeline[{i}].t"), "timeline times must be non-decreasing");
            }
            prev = s.t;
        }
        for (i, inj) in self.injections.iter().enumerate() {
            if inj.event_id.is_empty() {
                return bad(format!("injections[{i}].event_id"), "must not be empty");
            }
            if !(inj.t_on_s.is_finite() && inj.t_on_s >= 0.0) {
                return bad(format!("injections[{i}].t_on_s"), "must be a non-negative number");
            }
            if let Some(off) = inj.t_off_s {
                if !(off > inj.t_on_s) {
                    return bad(format!("injections[{i}].t_off_s"), "must be greater than t_on_s");
                }
            }
            if let Some(r) = inj.ramp_per_s {
                if !(r.is_finite() && r > 0.0) {
                    return bad(format!("injections[{i}].ramp_per_s"), "must be a positive number");
                }
            }
        }
        for (id, d) in &self.debounce {
            if !(d.t_anomaly_s.is_finite() && d.t_anomaly_s >= 0.0) {
                return bad(format!("debounce.{id}.t_anomaly_s"), "must be a non-negative number");
            }
            if !(d.tolerance.is_finite() && d.tolerance >= 0.0) {
                return bad(format!("debounce.{id}.tolerance"), "must be a non-negative number");
            }
        }
        let v = &self.vehicle;
        if !(v.initial_speed_mps.is_finite() && v.initial_speed_mps >= 0.0) {
            return bad("vehicle.initial_speed_mps".into(), "must be a non-negative number");
        }
        if !(v.brake_decel_mps2.is_finite() && v.brake_decel_mps2 > 0.0) {
            return bad("vehicle.brake_decel_mps2".into(), "must be a positive number");
        }
        for (id, cap) in &v.degraded_caps {
            if !(0.0..=1.0).contains(cap) {
                return bad(format!("vehicle.degraded_caps.{id}"), "must be in [0, 1]");
            }
        }
        if !(0.0..=1.0).contains(&self.noise.false_flip_prob) {
            return bad("noise.false_flip_prob".into(), "must be in [0, 1]");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parse and validate a scenario file. Omitted noise and debounce default
/// to zero; an omitted vehicle is 10 m/s with 8 m/s² braking.
pub fn load_scenario(json_text: &str) -> Result<Scenario, HarnessError> {
    let de = &mut serde_json::Deserializer::from_str(json_text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}
