use serde::{Deserialize, Serialize};

use crate::crs::parse_id;
use crate::group::GroupId;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// A simulation run, loaded from TOML. Times are in seconds unless the
/// field name says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default = "default_curve")]
    pub curve: GroupId,
    /// Honest vehicles.
    pub vehicles: usize,
    pub duration: f64,
    #[serde(default)]
    pub medium: Medium,
    #[serde(default)]
    pub traffic: Traffic,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default, rename = "adversary")]
    pub adversaries: Vec<Adversary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    /// Independent per-link drop probability.
    pub loss_rate: f64,
    /// Uniform per-link latency bounds `[min, max]`, milliseconds.
    pub latency_ms: [u64; 2],
}

impl Default for Medium {
    fn default() -> Self {
        Medium { loss_rate: 0.0, latency_ms: [5, 50] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Traffic {
    /// Messages per second per honest vehicle.
    pub rate: f64,
}

impl Default for Traffic {
    fn default() -> Self {
        Traffic { rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Protocol {
    pub k: usize,
    pub ring_size: usize,
    pub min_span_time: u64,
    /// Certificate lifetime.
    pub validity: u64,
    /// Interval between an honest vehicle's pseudonym refreshes.
    pub refresh_interval: u64,
    pub clock_skew: u64,
    pub id_capacity: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            k: 10,
            ring_size: 5,
            min_span_time: 60,
            validity: 300,
            refresh_interval: 60,
            clock_skew: 5,
            id_capacity: 64,
        }
    }
}

/// A scripted attacker. `start` is its activation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Adversary {
    /// A joined module issuing `count` certificates inside one window,
    /// `spacing` seconds apart, each followed by a message.
    Sybil {
        start: f64,
        #[serde(default = "default_sybil_count")]
        count: usize,
        #[serde(default = "default_spacing")]
        spacing: f64,
    },
    /// Captures up to `limit` honest frames from `start` on and rebroadcasts
    /// each `delay` seconds later. `delay` defaults to one second past
    /// validity plus skew, and may not be shorter.
    Replay {
        start: f64,
        #[serde(default)]
        delay: Option<f64>,
        #[serde(default = "default_limit")]
        limit: usize,
    },
    /// Holds no private key; broadcasts `count` certificates whose ring
    /// tuples are all forgeries, every `interval` seconds.
    Forger {
        start: f64,
        #[serde(default = "default_interval")]
        interval: f64,
        #[serde(default = "default_attempts")]
        count: usize,
    },
    /// A joined module claiming a singleton ring under `target`, an id it
    /// does not own.
    Masquerade {
        start: f64,
        #[serde(default = "default_target")]
        target: String,
        #[serde(default = "default_interval")]
        interval: f64,
        #[serde(default = "default_attempts")]
        count: usize,
    },
    /// A module whose master secret has leaked. It sends like an honest
    /// vehicle; at `revoke_at` every honest vehicle adds its secret to the
    /// rogue list.
    Compromised {
        start: f64,
        #[serde(default)]
        revoke_at: Option<f64>,
    },
}

impl Adversary {
    pub fn kind(&self) -> &'static str {
        match self {
            Adversary::Sybil { .. } => "sybil",
            Adversary::Replay { .. } => "replay",
            Adversary::Forger { .. } => "forger",
            Adversary::Masquerade { .. } => "masquerade",
            Adversary::Compromised { .. } => "compromised",
        }
    }

    pub fn start(&self) -> f64 {
        match self {
            Adversary::Sybil { start, .. }
            | Adversary::Replay { start, .. }
            | Adversary::Forger { start, .. }
            | Adversary::Masquerade { start, .. }
            | Adversary::Compromised { start, .. } => *start,
        }
    }
}

fn default_curve() -> GroupId {
    GroupId::P192
}

fn default_sybil_count() -> usize {
    5
}

fn default_spacing() -> f64 {
    1.0
}

fn default_limit() -> usize {
    20
}

fn default_interval() -> f64 {
    5.0
}

fn default_attempts() -> usize {
    5
}

fn default_target() -> String {
    "acme:AMBULANCE-01".into()
}

pub(crate) fn ms(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn duration_ms(&self) -> u64 {
        ms(self.duration)
    }

    /// Replay delay in milliseconds after defaulting.
    pub fn replay_delay_ms(&self, delay: Option<f64>) -> u64 {
        let p = &self.protocol;
        delay.map(ms).unwrap_or((p.validity + p.clock_skew + 1) * 1000)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: String| Err(ScenarioError::Invalid(msg));
        let p = &self.protocol;
        if self.vehicles < 2 {
            return bad("at least two honest vehicles are required".into());
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad("duration must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.medium.loss_rate) {
            return bad("medium.loss_rate must lie in [0, 1]".into());
        }
        if self.medium.latency_ms[0] > self.medium.latency_ms[1] {
            return bad("medium.latency_ms must be [min, max] with min <= max".into());
        }
        if !(self.traffic.rate.is_finite() && self.traffic.rate > 0.0) {
            return bad("traffic.rate must be positive".into());
        }
        if p.k == 0 || p.ring_size == 0 || p.min_span_time == 0 || p.validity == 0 {
            return bad("protocol k, ring_size, min_span_time and validity must be positive".into());
        }
        if p.ring_size > 32 {
            return bad("protocol.ring_size is capped at 32".into());
        }
        if p.refresh_interval < p.min_span_time {
            return bad("protocol.refresh_interval must be at least min_span_time".into());
        }
        if let GroupId::Toy(q) = self.curve {
            crate::group::Toy::new(q).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        }
        for (i, adv) in self.adversaries.iter().enumerate() {
            let start = adv.start();
            if !(start.is_finite() && start >= 0.0) {
                return bad(format!("adversary {i}: start must be non-negative"));
            }
            match adv {
                Adversary::Sybil { count, spacing, .. } => {
                    if *count < 2 {
                        return bad(format!("adversary {i}: sybil count must be at least 2"));
                    }
                    if !(spacing.is_finite() && *spacing >= 0.0) {
                        return bad(format!("adversary {i}: spacing must be non-negative"));
                    }
                    let window = |t: f64| ms(t) / 1000 / p.min_span_time;
                    if window(start) != window(start + spacing * (*count - 1) as f64) {
                        return bad(format!(
                            "adversary {i}: sybil certificates must fall inside one min_span_time window"
                        ));
                    }
                }
                Adversary::Replay { delay, .. } => {
                    let floor = (p.validity + p.clock_skew + 1) * 1000;
                    if self.replay_delay_ms(*delay) < floor {
                        return bad(format!(
                            "adversary {i}: replay delay must be at least validity + clock_skew + 1"
                        ));
                    }
                }
                Adversary::Forger { interval, .. } => {
                    if !(interval.is_finite() && *interval > 0.0) {
                        return bad(format!("adversary {i}: interval must be positive"));
                    }
                }
                Adversary::Masquerade { target, interval, .. } => {
                    if parse_id(target).is_err() {
                        return bad(format!("adversary {i}: target `{target}` is not a valid id"));
                    }
                    if !(interval.is_finite() && *interval > 0.0) {
                        return bad(format!("adversary {i}: interval must be positive"));
                    }
                }
                Adversary::Compromised { revoke_at, .. } => {
                    if revoke_at.is_some_and(|t| !(t.is_finite() && t >= start)) {
                        return bad(format!("adversary {i}: revoke_at must not precede start"));
                    }
                }
            }
        }
        Ok(())
    }
}
