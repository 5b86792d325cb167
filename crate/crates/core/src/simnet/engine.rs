use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::report::{
    AdversaryStats, HonestStats, LogRecord, MediumStats, RunReport, Sizes, VehicleCounters,
};
use super::scenario::{ms, Adversary, Scenario, ScenarioError};
use crate::crs::{forge_tuple, RingSignature};
use crate::deployment::Deployment;
use crate::frame::{fingerprint, Frame, TAG_CERTIFICATE, TAG_MESSAGE};
use crate::group::{Group, OpMeter};
use crate::hsm::{
    ApplicationMessage, CertContent, Clock, HardwareModule, PseudonymCertificate, SCHEME_SCHNORR,
};
use crate::transient::TransientKey;
use crate::vehicle::{Outcome, RejectReason, Vehicle, VehicleConfig};

const MANUFACTORIES: [&str; 2] = ["acme", "zenith"];
const STREAM_MEDIUM: u64 = 0;
const STREAM_SETUP: u64 = 1;
const STREAM_NODES: u64 = 16;

/// A finished run: the report and the newline-delimited JSON event log.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub events: String,
}

pub(crate) fn honest_id(i: usize) -> String {
    format!("{}:V{i:04}", MANUFACTORIES[i % MANUFACTORIES.len()])
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Refresh(usize),
    Send(usize),
    Deliver { tx: usize, dst: usize },
    Act { adversary: usize },
    Replay { adversary: usize, tx: usize },
    Revoke { adversary: usize },
}

struct Scheduled {
    time: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    /// Reversed: the heap pops the earliest `(time, seq)` first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

enum Actor<G: Group> {
    Sybil(Vehicle<G>),
    Replay { captured: usize, limit: usize, delay_ms: u64 },
    Forger,
    Masquerade { module: HardwareModule<G>, target: String },
    Compromised { vehicle: Vehicle<G>, f: G::Scalar },
}

struct Tx {
    src: usize,
    bytes: Vec<u8>,
}

struct Engine<'s, G: Group> {
    scenario: &'s Scenario,
    deployment: Deployment<G>,
    config: VehicleConfig,
    honest: Vec<Vehicle<G>>,
    actors: Vec<Actor<G>>,
    /// Remaining scripted actions per adversary.
    remaining: Vec<usize>,
    names: Vec<String>,
    rngs: Vec<ChaCha20Rng>,
    sent: Vec<u64>,
    medium_rng: ChaCha20Rng,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    /// Last delivery time per `(src, dst)` link, keeping links FIFO.
    link_clock: Vec<u64>,
    txs: Vec<Tx>,
    send_interval_ms: u64,
    duration_ms: u64,
    medium: MediumStats,
    honest_stats: HonestStats,
    sizes: Sizes,
    receivers: Vec<VehicleCounters>,
    adversary_stats: Vec<AdversaryStats>,
    revocations_ms: Vec<u64>,
    log: String,
}

/// Runs a validated scenario to completion.
pub fn run(scenario: &Scenario) -> Result<RunOutput, ScenarioError> {
    use crate::group::{GroupId, Toy, P192, P256};
    scenario.validate()?;
    match scenario.curve {
        GroupId::P192 => run_on(scenario, P192::new()),
        GroupId::P256 => run_on(scenario, P256::new()),
        GroupId::Toy(q) => {
            let group = Toy::new(q).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            run_on(scenario, group)
        }
    }
}

fn run_on<G: Group>(scenario: &Scenario, group: G) -> Result<RunOutput, ScenarioError> {
    let mut engine = Engine::new(scenario, group)?;
    engine.schedule_initial();
    while let Some(Scheduled { time, event, .. }) = engine.queue.pop() {
        engine.deployment.clock().set(time / 1000);
        engine.handle(time, event);
    }
    Ok(engine.finish())
}

fn setup_error(e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Invalid(format!("setup failed: {e}"))
}

fn node_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl<'s, G: Group> Engine<'s, G> {
    fn new(scenario: &'s Scenario, group: G) -> Result<Self, ScenarioError> {
        let p = &scenario.protocol;
        let n = scenario.vehicles;
        let mut setup_rng = node_rng(scenario.seed, STREAM_SETUP);
        let deployment =
            Deployment::new(group, &MANUFACTORIES, p.min_span_time, 0, &mut setup_rng)
                .map_err(setup_error)?;
        let config = VehicleConfig {
            k: p.k,
            ring_size: p.ring_size,
            id_capacity: p.id_capacity,
            validity: p.validity,
            clock_skew: p.clock_skew,
        };

        let ids: Vec<String> = (0..n).map(honest_id).collect();
        let mut honest = Vec::with_capacity(n);
        for id in &ids {
            let mut v = deployment.vehicle(id, config, &mut setup_rng).map_err(setup_error)?;
            let mut known = ids.clone();
            known.shuffle(&mut setup_rng);
            for other in &known {
                v.remember_id(other);
            }
            honest.push(v);
        }

        let mut names = ids.clone();
        let mut actors = Vec::new();
        let mut remaining = Vec::new();
        let mut adversary_stats = Vec::new();
        for (j, adv) in scenario.adversaries.iter().enumerate() {
            let label = format!("{}-{j}", adv.kind());
            let insider = |id: String, rng: &mut ChaCha20Rng| -> Result<Vehicle<G>, ScenarioError> {
                let mut v = deployment.vehicle(&id, config, rng).map_err(setup_error)?;
                for other in &ids {
                    v.remember_id(other);
                }
                Ok(v)
            };
            let (actor, count) = match adv {
                Adversary::Sybil { count, .. } => {
                    (Actor::Sybil(insider(format!("acme:SYBIL-{j}"), &mut setup_rng)?), *count)
                }
                Adversary::Replay { delay, limit, .. } => (
                    Actor::Replay {
                        captured: 0,
                        limit: *limit,
                        delay_ms: scenario.replay_delay_ms(*delay),
                    },
                    0,
                ),
                Adversary::Forger { count, .. } => (Actor::Forger, *count),
                Adversary::Masquerade { target, count, .. } => {
                    let module = deployment
                        .module(&format!("acme:MASQ-{j}"), &mut setup_rng)
                        .map_err(setup_error)?;
                    (Actor::Masquerade { module, target: target.clone() }, *count)
                }
                Adversary::Compromised { .. } => {
                    let f = deployment.group().random_nonzero_scalar(&mut setup_rng);
                    let module = deployment
                        .module_with_secret(&format!("zenith:LEAK-{j}"), f)
                        .map_err(setup_error)?;
                    let mut vehicle = Vehicle::new(module, config).map_err(setup_error)?;
                    for other in &ids {
                        vehicle.remember_id(other);
                    }
                    (Actor::Compromised { vehicle, f }, 0)
                }
            };
            actors.push(actor);
            remaining.push(count);
            adversary_stats.push(AdversaryStats {
                label: label.clone(),
                kind: adv.kind().to_string(),
                start_ms: ms(adv.start()),
                ..Default::default()
            });
            names.push(label);
        }

        let nodes = names.len();
        let rngs = (0..nodes).map(|i| node_rng(scenario.seed, STREAM_NODES + i as u64)).collect();
        let receivers = ids
            .iter()
            .map(|id| VehicleCounters { id: id.clone(), ..Default::default() })
            .collect();
        Ok(Engine {
            scenario,
            deployment,
            config,
            honest,
            actors,
            remaining,
            names,
            rngs,
            sent: vec![0; nodes],
            medium_rng: node_rng(scenario.seed, STREAM_MEDIUM),
            queue: BinaryHeap::new(),
            seq: 0,
            link_clock: vec![0; nodes * n],
            txs: Vec::new(),
            send_interval_ms: ((1000.0 / scenario.traffic.rate).round() as u64).max(1),
            duration_ms: scenario.duration_ms(),
            medium: MediumStats::default(),
            honest_stats: HonestStats::default(),
            sizes: Sizes::default(),
            receivers,
            adversary_stats,
            revocations_ms: Vec::new(),
            log: String::new(),
        })
    }

    fn push(&mut self, time: u64, event: Event) {
        self.queue.push(Scheduled { time, seq: self.seq, event });
        self.seq += 1;
    }

    /// Like `push`, but only for events inside the simulated duration.
    fn push_active(&mut self, time: u64, event: Event) {
        if time < self.duration_ms {
            self.push(time, event);
        }
    }

    fn schedule_initial(&mut self) {
        let n = self.honest.len();
        for node in 0..n {
            let offset = self.rngs[node].gen_range(0..self.send_interval_ms);
            self.push_active(offset, Event::Refresh(node));
            self.push_active(offset, Event::Send(node));
        }
        for (j, adv) in self.scenario.adversaries.iter().enumerate() {
            let start = ms(adv.start());
            match adv {
                Adversary::Sybil { .. } | Adversary::Forger { .. } | Adversary::Masquerade { .. } => {
                    if self.remaining[j] > 0 {
                        self.push_active(start, Event::Act { adversary: j });
                    }
                }
                Adversary::Compromised { revoke_at, .. } => {
                    self.push_active(start, Event::Refresh(n + j));
                    self.push_active(start, Event::Send(n + j));
                    if let Some(t) = revoke_at {
                        self.push_active(ms(*t), Event::Revoke { adversary: j });
                    }
                }
                Adversary::Replay { .. } => {}
            }
        }
    }

    fn sender(&mut self, node: usize) -> (&mut Vehicle<G>, &mut ChaCha20Rng) {
        let n = self.honest.len();
        let rng = &mut self.rngs[node];
        if node < n {
            return (&mut self.honest[node], rng);
        }
        match &mut self.actors[node - n] {
            Actor::Sybil(v) | Actor::Compromised { vehicle: v, .. } => (v, rng),
            _ => unreachable!("node {node} does not run a vehicle"),
        }
    }

    fn payload(&mut self, node: usize) -> Vec<u8> {
        self.sent[node] += 1;
        format!("status {node}/{}", self.sent[node]).into_bytes()
    }

    fn handle(&mut self, time: u64, event: Event) {
        match event {
            Event::Refresh(node) => {
                let (vehicle, rng) = self.sender(node);
                vehicle.refresh_pseudonym(rng).expect("pseudonym over a buffered ring");
                let next = time + self.scenario.protocol.refresh_interval * 1000;
                self.push_active(next, Event::Refresh(node));
            }
            Event::Send(node) => {
                let payload = self.payload(node);
                let (vehicle, _) = self.sender(node);
                let frames = vehicle.send(&payload).expect("vehicle holds a pseudonym");
                for frame in frames {
                    self.transmit(time, node, frame);
                }
                self.push_active(time + self.send_interval_ms, Event::Send(node));
            }
            Event::Deliver { tx, dst } => self.deliver(time, tx, dst),
            Event::Act { adversary } => {
                self.act(time, adversary);
                self.remaining[adversary] -= 1;
                if self.remaining[adversary] > 0 {
                    let step = match &self.scenario.adversaries[adversary] {
                        Adversary::Sybil { spacing, .. } => ms(*spacing),
                        Adversary::Forger { interval, .. }
                        | Adversary::Masquerade { interval, .. } => ms(*interval),
                        _ => unreachable!("only scripted adversaries act"),
                    };
                    self.push_active(time + step, Event::Act { adversary });
                }
            }
            Event::Replay { adversary, tx } => {
                let bytes = self.txs[tx].bytes.clone();
                self.transmit(time, self.honest.len() + adversary, bytes);
            }
            Event::Revoke { adversary } => {
                let Actor::Compromised { f, .. } = &self.actors[adversary] else {
                    unreachable!("only compromised modules are revoked");
                };
                let f = *f;
                for v in &mut self.honest {
                    v.revoke(f);
                }
                self.revocations_ms.push(time);
            }
        }
    }

    fn act(&mut self, time: u64, adversary: usize) {
        let node = self.honest.len() + adversary;
        let payload = self.payload(node);
        let frames = match &mut self.actors[adversary] {
            Actor::Sybil(vehicle) => {
                let rng = &mut self.rngs[node];
                vehicle.refresh_pseudonym(rng).expect("insider holds a valid key");
                vehicle.send(&payload).expect("fresh pseudonym")
            }
            Actor::Forger => {
                let rng = &mut self.rngs[node];
                forged_frames(&self.deployment, &self.config, &self.names[..self.honest.len()], &payload, rng)
            }
            Actor::Masquerade { module, target } => {
                let rng = &mut self.rngs[node];
                let own = vec![module.identity().expect("joined").to_string()];
                let mut cert = module
                    .gen_pseudonym(&own, self.config.validity, rng)
                    .expect("singleton ring over own id");
                cert.signature.ids = vec![target.clone()];
                let group = self.deployment.group();
                let cert_frame = Frame::Certificate(cert).to_bytes(group);
                let message = module.gen_message(&payload).expect("fresh transient key");
                let msg_frame =
                    Frame::Message { certificate: fingerprint(&cert_frame), message }.to_bytes(group);
                vec![cert_frame, msg_frame]
            }
            _ => unreachable!("only scripted adversaries act"),
        };
        for frame in frames {
            self.transmit(time, node, frame);
        }
    }

    fn transmit(&mut self, time: u64, src: usize, bytes: Vec<u8>) {
        let n = self.honest.len();
        match bytes.first() {
            Some(&TAG_CERTIFICATE) => self.sizes.certificate_frame.add(bytes.len()),
            Some(&TAG_MESSAGE) => self.sizes.message_frame.add(bytes.len()),
            _ => {}
        }
        if src < n {
            match bytes.first() {
                Some(&TAG_CERTIFICATE) => self.honest_stats.certificates_sent += 1,
                Some(&TAG_MESSAGE) => self.honest_stats.messages_sent += 1,
                _ => {}
            }
        } else {
            self.adversary_stats[src - n].frames_sent += 1;
        }
        let tx = self.txs.len();
        self.txs.push(Tx { src, bytes });
        self.medium.transmissions += 1;

        let loss = self.scenario.medium.loss_rate;
        let [lo, hi] = self.scenario.medium.latency_ms;
        for dst in (0..n).filter(|d| *d != src) {
            if self.medium_rng.gen_bool(loss) {
                self.medium.dropped += 1;
                continue;
            }
            let latency = self.medium_rng.gen_range(lo..=hi);
            let link = src * n + dst;
            let at = (time + latency).max(self.link_clock[link]);
            self.link_clock[link] = at;
            self.push(at, Event::Deliver { tx, dst });
        }

        if src < n {
            for j in 0..self.actors.len() {
                let start = self.adversary_stats[j].start_ms;
                if let Actor::Replay { captured, limit, delay_ms } = &mut self.actors[j] {
                    if time >= start && *captured < *limit {
                        *captured += 1;
                        let at = time + *delay_ms;
                        self.push(at, Event::Replay { adversary: j, tx });
                    }
                }
            }
        }
    }

    fn deliver(&mut self, time: u64, tx: usize, dst: usize) {
        let n = self.honest.len();
        let Tx { src, bytes } = &self.txs[tx];
        let src = *src;
        let outcome = self.honest[dst].receive(bytes);
        let frame = match bytes.first() {
            Some(&TAG_CERTIFICATE) => "cert",
            Some(&TAG_MESSAGE) => "msg",
            _ => "unknown",
        };
        self.medium.delivered += 1;
        self.receivers[dst].record(&outcome);
        if src < n {
            if matches!(outcome, Outcome::Message { .. }) {
                self.honest_stats.messages_accepted += 1;
            }
        } else {
            let stats = &mut self.adversary_stats[src - n];
            match &outcome {
                o if o.is_accepted() => stats.frames_accepted += 1,
                Outcome::Duplicate => stats.duplicates += 1,
                Outcome::Rejected(reason) => {
                    *stats.rejections.entry(reason.to_string()).or_default() += 1;
                    if *reason == RejectReason::Sybil && stats.sybil_detection_latency_ms.is_none() {
                        stats.sybil_detection_latency_ms = Some(time.saturating_sub(stats.start_ms));
                    }
                }
                _ => unreachable!("outcome kinds are exhaustive"),
            }
        }
        let record = LogRecord {
            time,
            src: &self.names[src],
            dst: &self.names[dst],
            frame,
            outcome: outcome.kind(),
            reason: outcome.reason().map(RejectReason::as_str),
        };
        self.log.push_str(&serde_json::to_string(&record).expect("log record serializes"));
        self.log.push('\n');
    }

    fn finish(mut self) -> RunOutput {
        let n = self.honest.len() as u64;
        let copies = self.medium.delivered + self.medium.dropped;
        self.medium.delivery_ratio = ratio(self.medium.delivered, copies);
        let h = &mut self.honest_stats;
        h.message_deliveries_possible = h.messages_sent * (n - 1);
        h.acceptance_ratio = ratio(h.messages_accepted, h.message_deliveries_possible);
        h.throughput = h.messages_accepted as f64 / (self.duration_ms as f64 / 1000.0);

        let mut rejections = BTreeMap::new();
        for reason in RejectReason::ALL {
            let total: u64 = self.receivers.iter().map(|r| r.rejected(reason)).sum();
            rejections.insert(reason.to_string(), total);
        }
        let report = RunReport {
            seed: self.scenario.seed,
            curve: self.scenario.curve.to_string(),
            vehicles: self.scenario.vehicles,
            duration_ms: self.duration_ms,
            medium: self.medium,
            honest: self.honest_stats,
            rejections,
            sizes: self.sizes,
            revocations_ms: self.revocations_ms,
            adversaries: self.adversary_stats,
            receivers: self.receivers,
        };
        RunOutput { report, events: self.log }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// A certificate with every ring tuple forged and a random chain start,
/// plus a message under it. Uses only public keys.
fn forged_frames<G: Group>(
    deployment: &Deployment<G>,
    config: &VehicleConfig,
    roster: &[String],
    payload: &[u8],
    rng: &mut ChaCha20Rng,
) -> Vec<Vec<u8>> {
    let registry = deployment.registry();
    let g = registry.group();
    let now = deployment.clock().now();
    let transient = TransientKey::generate(g, rng);
    let content = CertContent::<G> {
        scheme: SCHEME_SCHNORR,
        public_key: *transient.public(),
        issued_at: now,
        expires_at: now + config.validity,
    }
    .to_bytes(g);
    let ids: Vec<String> =
        roster.choose_multiple(rng, config.ring_size.min(roster.len())).cloned().collect();
    let meter = OpMeter::new();
    let tuples = ids
        .iter()
        .map(|id| {
            let e = registry.public_key(id).expect("roster ids are extractable");
            forge_tuple(registry.params(), &e, rng, &meter).expect("non-degenerate key")
        })
        .collect();
    let mut glue = vec![0u8; g.scalar_len()];
    rng.fill(glue.as_mut_slice());
    let signature = RingSignature { start: rng.gen_range(0..ids.len()), glue, ids, tuples };
    let random_element = |rng: &mut ChaCha20Rng| g.mul(&g.random_nonzero_scalar(rng), &g.generator());
    let cert = PseudonymCertificate {
        content,
        content_binding: random_element(rng),
        window_tag: random_element(rng),
        signature,
    };
    let cert_frame = Frame::Certificate(cert).to_bytes(g);
    let message = ApplicationMessage { payload: payload.to_vec(), signature: transient.sign(g, payload) };
    let msg_frame = Frame::Message { certificate: fingerprint(&cert_frame), message }.to_bytes(g);
    vec![cert_frame, msg_frame]
}
