//! Stochastic multi-domain FeFET cell model.
//!
//! A cell is a bundle of independent 10nm x 10nm polarization domains. Each
//! domain carries its own coercive voltage (sampled once per cell, log-normal
//! across the population) and switches under gate pulses following a
//! nucleation-limited-switching law: a pulse of amplitude `V` and duration `t`
//! deposits a normalized dose `u = t / tau`, `tau = tau0 * exp(alpha * vc / |V|)`,
//! and a domain that has accumulated dose `u` since its last polarity reversal
//! has switched with probability `1 - exp(-u^beta)`.
//!
//! Internally each domain samples its total switching dose by inverse-CDF at
//! the start of a polarity run, which makes pulse-train composability exact:
//! splitting a pulse into sub-pulses of the same polarity changes nothing.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

use crate::seed::{stream_rng, Purpose};

/// Area of one polarization domain: 10nm x 10nm.
pub const DOMAIN_AREA_M2: f64 = 100e-18;

/// Hard reset pulse: -5 V for 1 us. Strong enough that even the slow tail of
/// the coercive-voltage distribution resets with overwhelming probability.
pub const HARD_RESET_PULSE: Pulse = Pulse {
    amplitude: -5.0,
    duration: 1e-6,
};

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("negative dose arguments to switch_probability")]
    NegativeDose,
}

/// FeFET cell parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeviceParams {
    /// Number of independent polarization domains (the cell-size axis).
    pub n_domains: usize,
    /// Median domain coercive voltage (V).
    pub vc_median: f64,
    /// Log-normal spread of the coercive voltage. Zero selects the
    /// deterministic limit: identical domains with stratified switching
    /// quantiles, so programming and readback become noise-free.
    pub vc_sigma_ln: f64,
    /// Switching-time prefactor (s).
    pub tau0: f64,
    /// Field-acceleration factor in `tau = tau0 * exp(alpha * vc / |V|)`.
    pub alpha: f64,
    /// NLS shape exponent.
    pub beta: f64,
    /// Read current with all domains in the reset state (uA).
    pub i_low: f64,
    /// Read current with all domains in the set state (uA).
    pub i_high: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        // Shipped calibration: ~0.047 dose per 3.0 V / 100 ns set pulse,
        // near-certain switching under the -5 V / 1 us hard reset.
        DeviceParams {
            n_domains: 150,
            vc_median: 1.0,
            vc_sigma_ln: 0.04,
            tau0: 1e-9,
            alpha: 23.0,
            beta: 2.0,
            i_low: 1.0,
            i_high: 64.0,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let err = |m: &str| Err(DeviceError::InvalidParams(m.to_string()));
        if self.n_domains < 1 {
            return err("n_domains must be >= 1");
        }
        if !(self.tau0 > 0.0) {
            return err("tau0 must be > 0");
        }
        if !(self.beta > 0.0) {
            return err("beta must be > 0");
        }
        if !(self.vc_median > 0.0) {
            return err("vc_median must be > 0");
        }
        if !(self.vc_sigma_ln >= 0.0) {
            return err("vc_sigma_ln must be >= 0");
        }
        if !(self.i_low > 0.0 && self.i_low < self.i_high) {
            return err("require 0 < i_low < i_high");
        }
        Ok(())
    }

    /// Switching time constant for a domain of coercive voltage `vc` under
    /// pulse amplitude `v` (sign ignored).
    pub fn tau(&self, vc: f64, v: f64) -> f64 {
        self.tau0 * (self.alpha * vc / v.abs()).exp()
    }

    /// Expected switched fraction of a fresh nominal cell (all domains at
    /// `vc_median`) after accumulating dose `u`: the NLS CDF `1 - exp(-u^beta)`.
    pub fn nls_cdf(&self, u: f64) -> f64 {
        1.0 - (-u.powf(self.beta)).exp()
    }
}

/// Programming stimulus: signed amplitude (positive = SET direction) and
/// duration in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub amplitude: f64,
    pub duration: f64,
}

impl Pulse {
    pub fn new(amplitude: f64, duration: f64) -> Result<Pulse, DeviceError> {
        if !(duration > 0.0) {
            return Err(DeviceError::InvalidPulse("duration must be > 0".into()));
        }
        if amplitude == 0.0 || !amplitude.is_finite() {
            return Err(DeviceError::InvalidPulse(
                "amplitude must be nonzero and finite".into(),
            ));
        }
        Ok(Pulse {
            amplitude,
            duration,
        })
    }

    /// True for SET-direction (positive) pulses.
    pub fn is_set(&self) -> bool {
        self.amplitude > 0.0
    }
}

/// Conditional probability that a domain which survived accumulated dose
/// `u_prev` switches during an additional increment `delta_u`:
/// `1 - exp(-((u_prev + delta_u)^beta - u_prev^beta))`.
pub fn switch_probability(u_prev: f64, delta_u: f64, beta: f64) -> Result<f64, DeviceError> {
    if u_prev < 0.0 || delta_u < 0.0 {
        return Err(DeviceError::NegativeDose);
    }
    if !(beta > 0.0) {
        return Err(DeviceError::InvalidParams("beta must be > 0".into()));
    }
    Ok(1.0 - (-((u_prev + delta_u).powf(beta) - u_prev.powf(beta))).exp())
}

/// One FeFET cell: per-domain polarization state, coercive voltage, and
/// accumulated dose toward the direction opposing the current state.
#[derive(Debug, Clone)]
pub struct FeFETCell {
    params: DeviceParams,
    /// true = SET, false = RESET.
    set: Vec<bool>,
    vc: Vec<f64>,
    /// Dose accumulated since the last polarity reversal of each domain.
    dose: Vec<f64>,
    /// Sampled total switching dose for the current opposing run; NaN when
    /// not yet drawn. Inverse-CDF sampling of the NLS law, so per-pulse
    /// conditional switching probabilities compose exactly.
    switch_dose: Vec<f64>,
    rng: ChaCha8Rng,
    /// Deterministic limit (vc_sigma_ln == 0): stratified quantiles instead
    /// of uniform draws.
    deterministic: bool,
}

impl FeFETCell {
    /// Create a cell with domain coercive voltages sampled i.i.d. log-normal
    /// (median `vc_median`, log-sd `vc_sigma_ln`) from the stream keyed by
    /// `(master_seed, cell_index)`. All domains start RESET with zero dose.
    pub fn new(params: &DeviceParams, master_seed: u64, cell_index: u64) -> FeFETCell {
        let mut rng = stream_rng(master_seed, Purpose::Cell, cell_index);
        let n = params.n_domains;
        let deterministic = params.vc_sigma_ln == 0.0;
        let vc = if deterministic {
            vec![params.vc_median; n]
        } else {
            let dist = LogNormal::new(params.vc_median.ln(), params.vc_sigma_ln)
                .expect("validated params");
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        };
        FeFETCell {
            params: params.clone(),
            set: vec![false; n],
            vc,
            dose: vec![0.0; n],
            switch_dose: vec![f64::NAN; n],
            rng,
            deterministic,
        }
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn n_domains(&self) -> usize {
        self.params.n_domains
    }

    pub fn n_set(&self) -> usize {
        self.set.iter().filter(|&&s| s).count()
    }

    pub fn domain_states(&self) -> &[bool] {
        &self.set
    }

    pub fn domain_vc(&self) -> &[f64] {
        &self.vc
    }

    pub fn domain_dose(&self) -> &[f64] {
        &self.dose
    }

    /// Read current in uA: linear in the switched fraction, no read noise.
    pub fn read_current(&self) -> f64 {
        let frac = self.n_set() as f64 / self.params.n_domains as f64;
        self.params.i_low + frac * (self.params.i_high - self.params.i_low)
    }

    /// Inverse CDF of P(switch by dose u) = 1 - exp(-u^beta) at survival
    /// quantile `q` in [0, 1).
    fn dose_quantile(&self, q: f64) -> f64 {
        (-(1.0 - q).ln()).powf(1.0 / self.params.beta)
    }

    fn draw_switch_dose(&mut self) -> f64 {
        let q: f64 = self.rng.random::<f64>();
        self.dose_quantile(q)
    }

    /// Apply one gate pulse. Domains aligned with the pulse polarity are
    /// unaffected and their stale opposing dose is cleared; opposing domains
    /// accumulate dose and switch per the NLS law.
    pub fn apply_pulse(&mut self, pulse: Pulse) {
        let to_set = pulse.is_set();
        if self.deterministic {
            // Deterministic limit: stratify the switching-dose quantiles over
            // the domains entering this opposing run, so a pulse giving each
            // domain switch probability p flips exactly the fraction p of
            // them — the population mean of the stochastic model.
            let fresh: Vec<usize> = (0..self.params.n_domains)
                .filter(|&i| self.set[i] != to_set && self.switch_dose[i].is_nan())
                .collect();
            let m = fresh.len() as f64;
            for (j, &i) in fresh.iter().enumerate() {
                self.switch_dose[i] = self.dose_quantile((j as f64 + 0.5) / m);
            }
        }
        for i in 0..self.params.n_domains {
            if self.set[i] == to_set {
                // Aligned: polarity reversal discards stale dose.
                self.dose[i] = 0.0;
                self.switch_dose[i] = f64::NAN;
                continue;
            }
            let tau = self.params.tau(self.vc[i], pulse.amplitude);
            let du = pulse.duration / tau;
            if self.switch_dose[i].is_nan() {
                self.switch_dose[i] = self.draw_switch_dose();
            }
            self.dose[i] += du;
            if self.dose[i] >= self.switch_dose[i] {
                self.set[i] = to_set;
                self.dose[i] = 0.0;
                self.switch_dose[i] = f64::NAN;
            }
        }
    }

    /// Hard reset: one [`HARD_RESET_PULSE`], then all doses cleared.
    pub fn hard_reset(&mut self) {
        self.apply_pulse(HARD_RESET_PULSE);
        for i in 0..self.params.n_domains {
            self.dose[i] = 0.0;
            self.switch_dose[i] = f64::NAN;
        }
    }
}
