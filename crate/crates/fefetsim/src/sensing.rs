//! Multi-level sensing model: geometric reference thresholds, programming
//! target currents, and a flash-ADC style quantizer with proportional
//! Gaussian device-to-device variation.
//!
//! Thresholds are geometrically spaced, `T_k = i_low * rho^k` with
//! `rho = (i_high/i_low)^(1/2^n)`. Threshold variation is proportional
//! (`sigma_k = sigma_rel * T_k`), so the gap-to-sigma ratio is constant
//! across levels and read errors distribute evenly over the programming
//! window.

use rand::Rng;
use thiserror::Error;

use crate::seed::{stream_rng, Purpose};

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("invalid ADC config: {0}")]
    InvalidConfig(String),
}

/// Flash-ADC sensing configuration for n-bit cells.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdcConfig {
    /// Bits per cell, n in {1,2,3}; the cell is compared against 2^n - 1
    /// reference levels.
    pub bits_per_cell: u32,
    /// Read current of the fully-reset state (uA).
    pub i_low: f64,
    /// Read current of the fully-set state (uA).
    pub i_high: f64,
    /// Relative threshold standard deviation; default 0.05/3 so 3 sigma = 5%.
    pub sigma_rel: f64,
    /// Number of physical ADC instances; variation is static per instance.
    pub n_instances: usize,
}

impl Default for AdcConfig {
    fn default() -> Self {
        AdcConfig {
            bits_per_cell: 2,
            i_low: 1.0,
            i_high: 64.0,
            sigma_rel: 0.05 / 3.0,
            n_instances: 64,
        }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<(), SensingError> {
        let err = |m: &str| Err(SensingError::InvalidConfig(m.to_string()));
        if !(1..=3).contains(&self.bits_per_cell) {
            return err("bits_per_cell must be in 1..=3");
        }
        if !(self.sigma_rel >= 0.0) {
            return err("sigma_rel must be >= 0");
        }
        if self.n_instances < 1 {
            return err("n_instances must be >= 1");
        }
        if !(self.i_low > 0.0 && self.i_low < self.i_high) {
            return err("require 0 < i_low < i_high");
        }
        Ok(())
    }

    pub fn n_levels(&self) -> usize {
        1usize << self.bits_per_cell
    }
}

/// Nominal and per-instance sampled ADC reference currents.
#[derive(Debug, Clone)]
pub struct ThresholdSet {
    /// Nominal thresholds T_1..T_{2^n - 1}, strictly increasing (uA).
    pub nominal: Vec<f64>,
    /// One sampled, sorted threshold row per ADC instance (uA).
    pub sampled: Vec<Vec<f64>>,
}

impl ThresholdSet {
    /// Sample all instances from `(master_seed, instance_index)` streams.
    pub fn generate(cfg: &AdcConfig, master_seed: u64) -> Result<ThresholdSet, SensingError> {
        cfg.validate()?;
        let nominal = nominal_thresholds(cfg)?;
        let sampled = (0..cfg.n_instances)
            .map(|i| sample_adc(cfg, master_seed, i as u64))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ThresholdSet { nominal, sampled })
    }

    /// Threshold row for the ADC instance assigned to `cell_index`
    /// (round-robin over instances).
    pub fn row_for_cell(&self, cell_index: u64) -> &[f64] {
        &self.sampled[(cell_index % self.sampled.len() as u64) as usize]
    }
}

/// Nominal thresholds: T_k = i_low * rho^k, rho = (i_high/i_low)^(1/2^n),
/// k = 1..2^n - 1.
pub fn nominal_thresholds(cfg: &AdcConfig) -> Result<Vec<f64>, SensingError> {
    cfg.validate()?;
    let n_levels = cfg.n_levels() as f64;
    let rho = (cfg.i_high / cfg.i_low).powf(1.0 / n_levels);
    // Explicit multiply chain rather than powi: bit-reproducible across call
    // sites and platforms.
    let mut t = cfg.i_low;
    Ok((1..cfg.n_levels())
        .map(|_| {
            t *= rho;
            t
        })
        .collect())
}

/// Programming target currents, length 2^n: L_0 = i_low (hard-reset state);
/// L_j = sqrt(T_j * T_{j+1}) with sentinel T_{2^n} = i_high.
pub fn target_levels(cfg: &AdcConfig) -> Result<Vec<f64>, SensingError> {
    let thresholds = nominal_thresholds(cfg)?;
    let mut levels = Vec::with_capacity(cfg.n_levels());
    levels.push(cfg.i_low);
    for j in 1..cfg.n_levels() {
        let t_lo = thresholds[j - 1];
        let t_hi = if j < thresholds.len() {
            thresholds[j]
        } else {
            cfg.i_high
        };
        levels.push((t_lo * t_hi).sqrt());
    }
    Ok(levels)
}

/// One sampled threshold row: T_k * (1 + eps_k), eps_k ~ N(0, sigma_rel^2)
/// i.i.d. per (instance, k), sorted ascending. Static per instance.
pub fn sample_adc(
    cfg: &AdcConfig,
    master_seed: u64,
    instance_index: u64,
) -> Result<Vec<f64>, SensingError> {
    let nominal = nominal_thresholds(cfg)?;
    if cfg.sigma_rel == 0.0 {
        return Ok(nominal);
    }
    let mut rng = stream_rng(master_seed, Purpose::Adc, instance_index);
    let normal = rand_distr::Normal::new(0.0, cfg.sigma_rel).expect("validated sigma");
    let mut row: Vec<f64> = nominal
        .iter()
        .map(|t| t * (1.0 + rng.sample(normal)))
        .collect();
    row.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(row)
}

/// Quantize a read current against a sorted threshold row:
/// level = #{k : current > T_k}.
pub fn sense(row: &[f64], current: f64) -> usize {
    row.iter().take_while(|&&t| current > t).count()
}

/// Nominal sensing geometry used by the write-verify programming window.
#[derive(Debug, Clone)]
pub struct LevelPlan {
    pub thresholds: Vec<f64>,
    pub targets: Vec<f64>,
    pub i_high: f64,
}

impl LevelPlan {
    pub fn new(cfg: &AdcConfig) -> Result<LevelPlan, SensingError> {
        Ok(LevelPlan {
            thresholds: nominal_thresholds(cfg)?,
            targets: target_levels(cfg)?,
            i_high: cfg.i_high,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.targets.len()
    }

    /// Target window for level j >= 1:
    /// [L_j - frac*(L_j - T_j), L_j + frac*(T_{j+1} - L_j)].
    pub fn window(&self, level: usize, frac: f64) -> (f64, f64) {
        assert!(level >= 1 && level < self.n_levels());
        let l = self.targets[level];
        let t_lo = self.thresholds[level - 1];
        let t_hi = if level < self.thresholds.len() {
            self.thresholds[level]
        } else {
            self.i_high
        };
        (l - frac * (l - t_lo), l + frac * (t_hi - l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(bits: u32) -> AdcConfig {
        AdcConfig {
            bits_per_cell: bits,
            ..AdcConfig::default()
        }
    }

    #[test]
    fn nominal_1bit() {
        let t = nominal_thresholds(&cfg(1)).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn nominal_2bit() {
        let t = nominal_thresholds(&cfg(2)).unwrap();
        let expect = [2.828427, 8.0, 22.627417];
        assert_eq!(t.len(), 3);
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn relative_gaps_are_constant() {
        for bits in 1..=3 {
            let t = nominal_thresholds(&cfg(bits)).unwrap();
            let rho = (64.0f64).powf(1.0 / (1u32 << bits) as f64);
            for w in t.windows(2) {
                assert!(((w[1] - w[0]) / w[0] - (rho - 1.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn targets_1bit() {
        let l = target_levels(&cfg(1)).unwrap();
        assert_eq!(l.len(), 2);
        assert!((l[0] - 1.0).abs() < 1e-12);
        assert!((l[1] - (8.0f64 * 64.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn targets_2bit() {
        let l = target_levels(&cfg(2)).unwrap();
        let expect = [1.0, 4.756828, 13.454343, 38.054628];
        for (a, b) in l.iter().zip(expect) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn targets_interleave_thresholds() {
        for bits in 1..=3 {
            let c = cfg(bits);
            let t = nominal_thresholds(&c).unwrap();
            let l = target_levels(&c).unwrap();
            for j in 1..l.len() {
                let t_hi = if j < t.len() { t[j] } else { c.i_high };
                assert!(t[j - 1] < l[j] && l[j] < t_hi, "level {j}");
            }
        }
    }

    #[test]
    fn zero_sigma_sampled_equals_nominal() {
        let c = AdcConfig {
            sigma_rel: 0.0,
            ..cfg(3)
        };
        assert_eq!(
            sample_adc(&c, 9, 0).unwrap(),
            nominal_thresholds(&c).unwrap()
        );
    }

    #[test]
    fn sampled_rows_deterministic_and_sorted() {
        let c = cfg(3);
        let a = sample_adc(&c, 42, 17).unwrap();
        let b = sample_adc(&c, 42, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        let other = sample_adc(&c, 42, 18).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn sampled_relative_sd_matches_sigma() {
        // sd(T~_k / T_k - 1) == sigma_rel within 2% over 10^5 instances.
        let c = cfg(2);
        let nominal = nominal_thresholds(&c).unwrap();
        let n = 100_000u64;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut count = 0usize;
        for inst in 0..n {
            // Use unsorted deviations: resample directly.
            let row = sample_adc(&c, 5, inst).unwrap();
            for (t, t0) in row.iter().zip(&nominal) {
                let e = t / t0 - 1.0;
                sum += e;
                sum2 += e * e;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let sd = (sum2 / count as f64 - mean * mean).sqrt();
        assert!(
            (sd / c.sigma_rel - 1.0).abs() < 0.02,
            "sd {sd} vs sigma_rel {}",
            c.sigma_rel
        );
    }

    #[test]
    fn sense_is_monotone_step_function() {
        let c = cfg(2);
        let t = nominal_thresholds(&c).unwrap();
        assert_eq!(sense(&t, 0.5), 0);
        assert_eq!(sense(&t, 13.45), 2);
        assert_eq!(sense(&t, 100.0), 3);
        let mut prev = 0;
        let mut i = 0.1;
        while i < 100.0 {
            let lvl = sense(&t, i);
            assert!(lvl >= prev);
            prev = lvl;
            i += 0.1;
        }
    }

    #[test]
    fn sense_inverts_targets_at_zero_variation() {
        for bits in 1..=3 {
            let c = cfg(bits);
            let t = nominal_thresholds(&c).unwrap();
            let l = target_levels(&c).unwrap();
            for (j, lj) in l.iter().enumerate() {
                assert_eq!(sense(&t, *lj), j);
            }
        }
    }

    #[test]
    fn interior_misreads_favor_higher_levels() {
        // Exact programming at L_j with only (inflated) ADC variation. The
        // geometric target sits closer to the upper threshold in units of
        // that threshold's proportional sigma, so misreads upward are at
        // least as likely as misreads downward.
        let c = cfg(3);
        let l = target_levels(&c).unwrap();
        let c = AdcConfig { sigma_rel: 0.2, ..c };
        let n = 200_000u64;
        for j in 2..=5usize {
            let mut down = 0u64;
            let mut up = 0u64;
            for inst in 0..n {
                let row = sample_adc(&c, 77, inst).unwrap();
                let got = sense(&row, l[j]);
                if got < j {
                    down += 1;
                } else if got > j {
                    up += 1;
                }
            }
            let (d, u) = (down as f64 / n as f64, up as f64 / n as f64);
            assert!(d > 0.0 && u > 0.0, "level {j}: no misreads observed");
            let se = ((d + u) / n as f64).sqrt();
            assert!(u + 2.0 * se >= d, "level {j}: down {d}, up {u}");
        }
    }
}
