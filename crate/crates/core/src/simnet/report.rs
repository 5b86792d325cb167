use std::collections::BTreeMap;

use serde::Serialize;

use crate::vehicle::{Outcome, RejectReason};

/// Receive-side counters for one honest vehicle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VehicleCounters {
    pub id: String,
    pub accepted_certificates: u64,
    pub accepted_messages: u64,
    pub duplicates: u64,
    pub sybil: u64,
    pub expired: u64,
    pub revoked: u64,
    pub bad_signature: u64,
    pub no_cert: u64,
    pub malformed: u64,
}

impl VehicleCounters {
    pub const CSV_HEADER: [&'static str; 10] = [
        "vehicle",
        "accepted_certificates",
        "accepted_messages",
        "duplicates",
        "sybil",
        "expired",
        "revoked",
        "bad_signature",
        "no_cert",
        "malformed",
    ];

    pub(crate) fn record(&mut self, outcome: &Outcome) {
        match outcome {
            Outcome::Certificate(_) => self.accepted_certificates += 1,
            Outcome::Message { .. } => self.accepted_messages += 1,
            Outcome::Duplicate => self.duplicates += 1,
            Outcome::Rejected(reason) => *self.slot(*reason) += 1,
        }
    }

    fn slot(&mut self, reason: RejectReason) -> &mut u64 {
        match reason {
            RejectReason::Sybil => &mut self.sybil,
            RejectReason::Expired => &mut self.expired,
            RejectReason::Revoked => &mut self.revoked,
            RejectReason::BadSignature => &mut self.bad_signature,
            RejectReason::NoCert => &mut self.no_cert,
            RejectReason::Malformed => &mut self.malformed,
        }
    }

    pub fn rejected(&self, reason: RejectReason) -> u64 {
        match reason {
            RejectReason::Sybil => self.sybil,
            RejectReason::Expired => self.expired,
            RejectReason::Revoked => self.revoked,
            RejectReason::BadSignature => self.bad_signature,
            RejectReason::NoCert => self.no_cert,
            RejectReason::Malformed => self.malformed,
        }
    }

    /// Every frame this vehicle was handed.
    pub fn total(&self) -> u64 {
        self.accepted_certificates
            + self.accepted_messages
            + self.duplicates
            + RejectReason::ALL.iter().map(|r| self.rejected(*r)).sum::<u64>()
    }

    fn csv_row(&self) -> [String; 10] {
        [
            self.id.clone(),
            self.accepted_certificates.to_string(),
            self.accepted_messages.to_string(),
            self.duplicates.to_string(),
            self.sybil.to_string(),
            self.expired.to_string(),
            self.revoked.to_string(),
            self.bad_signature.to_string(),
            self.no_cert.to_string(),
            self.malformed.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MediumStats {
    /// Frames put on the air.
    pub transmissions: u64,
    /// Per-receiver copies handed to a vehicle.
    pub delivered: u64,
    /// Per-receiver copies lost.
    pub dropped: u64,
    pub delivery_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HonestStats {
    pub messages_sent: u64,
    pub certificates_sent: u64,
    /// `messages_sent` times the number of other honest vehicles.
    pub message_deliveries_possible: u64,
    pub messages_accepted: u64,
    pub acceptance_ratio: f64,
    /// Accepted honest messages per simulated second.
    pub throughput: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AdversaryStats {
    pub label: String,
    pub kind: String,
    pub start_ms: u64,
    pub frames_sent: u64,
    pub frames_accepted: u64,
    pub duplicates: u64,
    pub rejections: BTreeMap<String, u64>,
    /// Time from activation to the first sybil rejection of its frames.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sybil_detection_latency_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SizeStats {
    pub count: u64,
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

impl SizeStats {
    pub(crate) fn add(&mut self, size: usize) {
        let size = size as u64;
        if self.count == 0 {
            self.min = size;
            self.max = size;
        } else {
            self.min = self.min.min(size);
            self.max = self.max.max(size);
        }
        self.mean += (size as f64 - self.mean) / (self.count + 1) as f64;
        self.count += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Sizes {
    pub certificate_frame: SizeStats,
    pub message_frame: SizeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub curve: String,
    pub vehicles: usize,
    pub duration_ms: u64,
    pub medium: MediumStats,
    pub honest: HonestStats,
    /// Rejections summed over honest receivers.
    pub rejections: BTreeMap<String, u64>,
    pub sizes: Sizes,
    pub revocations_ms: Vec<u64>,
    pub adversaries: Vec<AdversaryStats>,
    pub receivers: Vec<VehicleCounters>,
}

impl RunReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    /// One row per honest vehicle.
    pub fn counters_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(VehicleCounters::CSV_HEADER).expect("in-memory write");
        for v in &self.receivers {
            w.write_record(v.csv_row()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// One receive event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogRecord<'a> {
    /// Simulated milliseconds.
    pub time: u64,
    pub src: &'a str,
    pub dst: &'a str,
    pub frame: &'static str,
    pub outcome: &'static str,
    pub reason: Option<&'static str>,
}
