//! Amortized per-message cost of a pseudonym stream.

use serde::{Deserialize, Serialize};

/// Stream length `n`, certificate re-send interval `k`, and the mean
/// latency in ms of generating (`g`), sending (`s`) and verifying (`v`) a
/// message (`m`) or pseudonym certificate (`p`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvgCostInput {
    pub n: u64,
    pub k: u64,
    pub t_gm: f64,
    pub t_gp: f64,
    pub t_sm: f64,
    pub t_sp: f64,
    pub t_vm: f64,
    pub t_vp: f64,
}

impl AvgCostInput {
    /// Per-message cost in ms: one pseudonym generated and verified per
    /// stream, its certificate sent `n/k` times, and every message
    /// generated, sent and verified once. `n/k` is the real quotient.
    ///
    /// ```
    /// use avcs_cli::avgcost::AvgCostInput;
    /// let input = AvgCostInput { n: 1, k: 1, t_gm: 1.0, t_gp: 2.0, t_sm: 3.0, t_sp: 4.0, t_vm: 5.0, t_vp: 6.0 };
    /// assert_eq!(input.tau(), 21.0);
    /// ```
    pub fn tau(&self) -> f64 {
        assert!(self.n >= 1 && self.k >= 1, "n and k must be at least 1");
        let n = self.n as f64;
        let k = self.k as f64;
        (n * self.t_gm + self.t_gp + n * self.t_sm + (n / k) * self.t_sp + n * self.t_vm + self.t_vp) / n
    }

    /// Cost of the one-off pseudonym work that the stream amortizes.
    pub fn pseudonym_cost(&self) -> f64 {
        self.t_gp + self.t_vp
    }

    pub fn scaled(&self, c: f64) -> Self {
        AvgCostInput {
            t_gm: self.t_gm * c,
            t_gp: self.t_gp * c,
            t_sm: self.t_sm * c,
            t_sp: self.t_sp * c,
            t_vm: self.t_vm * c,
            t_vp: self.t_vp * c,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 || self.k == 0 {
            return Err("n and k must be at least 1".into());
        }
        let times = [self.t_gm, self.t_gp, self.t_sm, self.t_sp, self.t_vm, self.t_vp];
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err("times must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// Reference per-operation timings for the 192-bit scheme on a 2011
/// desktop CPU, with its "<1 ms" send cost read as 0.5 ms.
pub const REFERENCE_INPUT: AvgCostInput = AvgCostInput {
    n: 100,
    k: 10,
    t_gm: 2.1,
    t_gp: 52.6,
    t_sm: 0.5,
    t_sp: 9.7,
    t_vm: 6.7,
    t_vp: 67.4,
};

/// Reference average per-message cost measured with [`REFERENCE_INPUT`].
pub const REFERENCE_TAU_MS: f64 = 10.9;
