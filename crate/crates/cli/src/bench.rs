//! Latency and operation-count benchmarks.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use avcs::crs::{keygen, ring_sign_metered, ring_verify_metered, IdentityKey};
use avcs::deployment::Deployment;
use avcs::frame::{fingerprint, Frame};
use avcs::group::{Group, OpMeter};
use avcs::hsm::HardwareModule;
use avcs::vehicle::{Vehicle, VehicleConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::avgcost::AvgCostInput;
use crate::metered::Metered;

/// Largest ring size the bench accepts.
pub const MAX_RING_SIZE: usize = 32;

pub const CSV_HEADER: &str = "curve,ring_size,op,trials,mean_ms,median_ms,p95_ms,scalar_mul_count,extraction_count,serialized_size";

const VALIDITY: u64 = 600;
const START: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchOp {
    RingSign,
    RingVerify,
    GenPseudonym,
    GenMessage,
    VerifyMessage,
    ReceiveCert,
}

impl BenchOp {
    pub const ALL: [BenchOp; 6] = [
        BenchOp::RingSign,
        BenchOp::RingVerify,
        BenchOp::GenPseudonym,
        BenchOp::GenMessage,
        BenchOp::VerifyMessage,
        BenchOp::ReceiveCert,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchOp::RingSign => "ring_sign",
            BenchOp::RingVerify => "ring_verify",
            BenchOp::GenPseudonym => "gen_pseudonym",
            BenchOp::GenMessage => "gen_message",
            BenchOp::VerifyMessage => "verify_message",
            BenchOp::ReceiveCert => "receive_cert",
        }
    }
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub curve: String,
    pub ring_size: usize,
    pub op: BenchOp,
    pub trials: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    /// Scalar multiplications in one operation.
    pub scalar_mul_count: u64,
    /// Public-key extractions; recorded for the ring operations only.
    pub extraction_count: Option<u64>,
    /// Bytes of the artifact the operation produces or consumes.
    pub serialized_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub r_max: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
}

/// Mean, median and nearest-rank 95th percentile.
pub fn latency_stats(samples_ms: &[f64]) -> LatencyStats {
    assert!(!samples_ms.is_empty(), "no samples");
    let mut sorted = samples_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    LatencyStats {
        mean_ms: sorted.iter().sum::<f64>() / n as f64,
        median_ms: median,
        p95_ms: sorted[rank - 1],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    assert!(points.len() >= 2, "need two points");
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    LinearFit { slope, intercept, r_squared }
}

/// Fit of median latency against ring size over `r ≥ 2` for one op.
pub fn linearity(records: &[BenchRecord], op: BenchOp) -> Option<LinearFit> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.op == op && r.ring_size >= 2)
        .map(|r| (r.ring_size as f64, r.median_ms))
        .collect();
    (points.len() >= 2).then(|| linear_fit(&points))
}

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.write_record([
            r.curve.clone(),
            r.ring_size.to_string(),
            r.op.to_string(),
            r.trials.to_string(),
            format!("{:.6}", r.mean_ms),
            format!("{:.6}", r.median_ms),
            format!("{:.6}", r.p95_ms),
            r.scalar_mul_count.to_string(),
            r.extraction_count.map(|c| c.to_string()).unwrap_or_default(),
            r.serialized_size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn ring_ids(r: usize) -> Vec<String> {
    (0..r).map(|i| format!("acme:B{i:04}")).collect()
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Timing samples of one measured step at one ring size.
#[derive(Debug, Default)]
struct Samples {
    ms: Vec<f64>,
    muls: Option<u64>,
    extractions: Option<u64>,
    size: usize,
}

impl Samples {
    /// Records one trial; the scalar-multiplication count must not vary.
    fn push(&mut self, ms: f64, muls: u64) -> Result<()> {
        match self.muls {
            Some(m) if m != muls => bail!("scalar-mul count varies across trials: {m} vs {muls}"),
            _ => self.muls = Some(muls),
        }
        self.ms.push(ms);
        Ok(())
    }

    fn mean(&self) -> f64 {
        latency_stats(&self.ms).mean_ms
    }
}

/// Sample slots past the six public ops: frame encoding of a certificate
/// and of a message.
const SEND_CERT: usize = 6;
const SEND_MESSAGE: usize = 7;
const STEPS: usize = 8;

/// Everything measured at one ring size.
struct Slot<G: Group> {
    r: usize,
    ids: Vec<String>,
    signer_pos: usize,
    key: IdentityKey<Metered<G>>,
    issuer: HardwareModule<Metered<G>>,
    /// Certificate frames from distinct modules (no Sybil conflicts), each
    /// received once.
    inbound: std::vec::IntoIter<Vec<u8>>,
    rx: Vehicle<Metered<G>>,
    samples: [Samples; STEPS],
}

/// Shared fixture: one deployment over a metered group.
///
/// Trials are interleaved across ring sizes, one round at a time, so slow
/// stretches of machine time spread over every ring size instead of
/// skewing one. An untimed first round warms caches.
pub struct Bench<G: Group> {
    group: Metered<G>,
    deployment: Deployment<Metered<G>>,
    rng: ChaCha20Rng,
    trials: usize,
}

impl<G: Group> Bench<G> {
    pub fn new(group: G, trials: usize, seed: u64) -> Result<Self> {
        ensure!(trials >= 1, "trials must be at least 1");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let group = Metered::new(group);
        let deployment = Deployment::new(group.clone(), &["acme"], 60, START, &mut rng)?;
        Ok(Bench { group, deployment, rng, trials })
    }

    fn module(&mut self, id: &str) -> Result<HardwareModule<Metered<G>>> {
        Ok(self.deployment.module(id, &mut self.rng)?)
    }

    fn slot(&mut self, r: usize) -> Result<Slot<G>> {
        let ids = ring_ids(r);
        let signer_pos = r / 2;
        let key = keygen(self.deployment.master_key("acme").expect("registered"), &ids[signer_pos])?;
        let issuer = self.module(&ids[0])?;
        let mut inbound = Vec::with_capacity(self.trials + 1);
        for t in 0..=self.trials {
            let id = format!("acme:S{r:02}{t:04}");
            let mut ring = ids[1..].to_vec();
            ring.push(id.clone());
            let cert = self.module(&id)?.gen_pseudonym(&ring, VALIDITY, &mut self.rng)?;
            inbound.push(Frame::Certificate(cert).to_bytes(&self.group));
        }
        let rx_config = VehicleConfig { validity: VALIDITY, ..VehicleConfig::default() };
        let rx = Vehicle::new(self.module(&format!("acme:RX{r:02}"))?, rx_config)?;
        Ok(Slot {
            r,
            ids,
            signer_pos,
            key,
            issuer,
            inbound: inbound.into_iter(),
            rx,
            samples: Default::default(),
        })
    }

    /// Times `f`, returning its output, latency and scalar-mul count.
    fn timed<T>(&self, f: impl FnOnce() -> Result<T>) -> Result<(T, f64, u64)> {
        self.group.reset();
        let start = Instant::now();
        let out = f()?;
        let ms = elapsed_ms(start);
        Ok((out, ms, self.group.scalar_muls()))
    }

    /// One trial of every step at this slot's ring size, in dependency
    /// order.
    fn round(&mut self, slot: &mut Slot<G>, record: bool) -> Result<()> {
        let registry = self.deployment.registry().clone();
        let mut rng = self.rng.clone();
        let msg: &[u8] = b"bench message";
        let mut results: [(f64, u64); STEPS] = [(0.0, 0); STEPS];
        let meter = OpMeter::new();

        let (sig, ms, muls) = self.timed(|| {
            Ok(ring_sign_metered(&registry, msg, &slot.ids, &slot.key, slot.signer_pos, &mut rng, &meter)?)
        })?;
        ensure!(meter.scalar_muls() == muls, "meter and group counts disagree");
        results[0] = (ms, muls);
        let sign_extractions = meter.extractions();

        meter.reset();
        let ((), ms, muls) = self.timed(|| Ok(ring_verify_metered(&registry, msg, &sig, &meter)?))?;
        results[1] = (ms, muls);

        let issuer = &mut slot.issuer;
        let ids = &slot.ids;
        let (cert, ms, muls) = self.timed(|| Ok(issuer.gen_pseudonym(ids, VALIDITY, &mut rng)?))?;
        results[2] = (ms, muls);

        let payload = [0x5a; 64];
        let (message, ms, muls) = self.timed(|| Ok(slot.issuer.gen_message(&payload)?))?;
        results[3] = (ms, muls);

        let pk = cert.content_fields(&self.group)?.public_key;
        let group = &self.group;
        let ((), ms, muls) = self.timed(|| {
            ensure!(message.verify(group, &pk), "message failed to verify");
            Ok(())
        })?;
        results[4] = (ms, muls);

        let frame = slot.inbound.next().expect("one inbound frame per round");
        let rx = &mut slot.rx;
        let ((), ms, muls) = self.timed(|| {
            let outcome = rx.receive(&frame);
            ensure!(outcome.is_accepted(), "benchmark certificate not accepted: {outcome:?}");
            Ok(())
        })?;
        results[5] = (ms, muls);

        let (cert_frame, ms, muls) = self.timed(|| Ok(Frame::Certificate(cert.clone()).to_bytes(group)))?;
        results[SEND_CERT] = (ms, muls);
        let fp = fingerprint(&cert_frame);
        let (msg_frame, ms, muls) =
            self.timed(|| Ok(Frame::Message { certificate: fp, message: message.clone() }.to_bytes(group)))?;
        results[SEND_MESSAGE] = (ms, muls);

        self.rng = rng;
        if record {
            for (s, (ms, muls)) in slot.samples.iter_mut().zip(results) {
                s.push(ms, muls)?;
            }
            let sig_len = sig.encoded_len(&self.group);
            let sizes = [sig_len, sig_len, cert_frame.len(), msg_frame.len(), msg_frame.len(), frame.len()];
            for (s, size) in slot.samples.iter_mut().zip(sizes) {
                s.size = size;
            }
            slot.samples[0].extractions = Some(sign_extractions);
            slot.samples[1].extractions = Some(meter.extractions());
        }
        Ok(())
    }

    fn measure(&mut self, slots: &mut [Slot<G>]) -> Result<()> {
        for trial in 0..=self.trials {
            for slot in slots.iter_mut() {
                self.round(slot, trial > 0)?;
            }
        }
        Ok(())
    }

    fn record(&self, slot: &Slot<G>, op: BenchOp) -> BenchRecord {
        let i = BenchOp::ALL.iter().position(|o| *o == op).expect("listed op");
        let s = &slot.samples[i];
        let stats = latency_stats(&s.ms);
        BenchRecord {
            curve: self.group.id().to_string(),
            ring_size: slot.r,
            op,
            trials: s.ms.len(),
            mean_ms: stats.mean_ms,
            median_ms: stats.median_ms,
            p95_ms: stats.p95_ms,
            scalar_mul_count: s.muls.unwrap_or(0),
            extraction_count: s.extractions,
            serialized_size: s.size,
        }
    }

    /// One record per `(op, r)` for `r ∈ 1..=r_max`.
    pub fn run(&mut self, r_max: usize) -> Result<Vec<BenchRecord>> {
        ensure!((1..=MAX_RING_SIZE).contains(&r_max), "r_max must be in 1..={MAX_RING_SIZE}");
        let mut slots = (1..=r_max).map(|r| self.slot(r)).collect::<Result<Vec<_>>>()?;
        self.measure(&mut slots)?;
        Ok(slots
            .iter()
            .flat_map(|slot| BenchOp::ALL.iter().map(move |op| (slot, *op)))
            .map(|(slot, op)| self.record(slot, op))
            .collect())
    }

    /// Measured inputs to the average-cost formula at ring size `r`.
    /// Sending is modeled as frame encoding, the only per-send work the
    /// node itself performs.
    pub fn avgcost_input(&mut self, r: usize, n: u64, k: u64) -> Result<AvgCostInput> {
        ensure!((1..=MAX_RING_SIZE).contains(&r), "r must be in 1..={MAX_RING_SIZE}");
        let mut slots = [self.slot(r)?];
        self.measure(&mut slots)?;
        let s = &slots[0].samples;
        Ok(AvgCostInput {
            n,
            k,
            t_gm: s[3].mean(),
            t_gp: s[2].mean(),
            t_sm: s[SEND_MESSAGE].mean(),
            t_sp: s[SEND_CERT].mean(),
            t_vm: s[4].mean(),
            t_vp: s[5].mean(),
        })
    }
}

/// Parses a CSV produced by [`write_csv`] back into `(op, r, median_ms)`
/// triples; used to check the file format.
pub fn read_medians(csv_text: &str) -> Result<Vec<(String, usize, f64)>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    ensure!(header.join(",") == CSV_HEADER, "unexpected header {header:?}");
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        out.push((
            row[2].to_string(),
            row[1].parse().context("ring_size")?,
            row[5].parse().context("median_ms")?,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use avcs::group::{GroupId, Toy};

    use super::*;

    #[test]
    fn fit_recovers_exact_line() {
        let pts: Vec<(f64, f64)> = (2..=10).map(|r| (r as f64, 3.0 * r as f64 + 1.5)).collect();
        let fit = linear_fit(&pts);
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 1.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_matches_hand_computation() {
        // x = 1,2,3; y = 1,3,2: slope 0.5, intercept 1, SSE 1.5, SST 2.
        let fit = linear_fit(&[(1.0, 1.0), (2.0, 3.0), (3.0, 2.0)]);
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 0.25).abs() < 1e-12);
    }

    #[test]
    fn stats() {
        let s = latency_stats(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!((s.mean_ms, s.median_ms, s.p95_ms), (3.0, 3.0, 5.0));
        let samples: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = latency_stats(&samples);
        assert_eq!((s.median_ms, s.p95_ms), (50.5, 95.0));
    }

    #[test]
    fn toy_bench_counts_and_csv() {
        let mut bench = Bench::new(Toy::from_id(GroupId::TOY61).unwrap(), 3, 1).unwrap();
        let records = bench.run(4).unwrap();
        assert_eq!(records.len(), 4 * BenchOp::ALL.len());
        for rec in &records {
            let r = rec.ring_size as u64;
            assert!(rec.mean_ms > 0.0 && rec.median_ms > 0.0 && rec.p95_ms > 0.0);
            match rec.op {
                BenchOp::RingSign => {
                    assert_eq!(rec.scalar_mul_count, 2 * r - 1);
                    assert_eq!(rec.extraction_count, Some(r));
                }
                BenchOp::RingVerify | BenchOp::ReceiveCert => assert_eq!(rec.scalar_mul_count, 3 * r),
                // Transient key, R and T on top of the ring signature.
                BenchOp::GenPseudonym => assert_eq!(rec.scalar_mul_count, 2 * r - 1 + 3),
                BenchOp::GenMessage => assert_eq!(rec.scalar_mul_count, 1),
                BenchOp::VerifyMessage => assert_eq!(rec.scalar_mul_count, 2),
            }
        }
        let mut out = Vec::new();
        write_csv(&records, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(read_medians(&text).unwrap().len(), records.len());
        assert!(text.lines().nth(1).unwrap().starts_with("toy,1,ring_sign,3,"));
    }
}
