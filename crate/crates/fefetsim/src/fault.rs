//! Device + ADC fault characterization: confusion matrices over programmed
//! levels and shmoo sweeps over (cell size x bits-per-cell x scheme).

use rayon::prelude::*;
use thiserror::Error;

use crate::device::FeFETCell;
use crate::programming::{MemConfig, ProgramError, SchemeKind};
use crate::sensing::{sense, ThresholdSet};

#[derive(Debug, Error)]
pub enum FaultError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("empty sweep grid: {0}")]
    EmptyGrid(&'static str),
}

/// Per-level read-fault probabilities: p[j][k] = P(read k | programmed j).
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub p: Vec<Vec<f64>>,
    pub n_levels: usize,
    pub samples_per_level: usize,
}

impl ConfusionMatrix {
    fn from_counts(counts: Vec<Vec<u64>>, samples_per_level: usize) -> ConfusionMatrix {
        let n_levels = counts.len();
        let p = counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter().map(|&c| c as f64 / total as f64).collect()
            })
            .collect();
        ConfusionMatrix {
            counts,
            p,
            n_levels,
            samples_per_level,
        }
    }

    /// Max over programmed levels of the misread probability 1 - p[j][j].
    pub fn max_fault_rate(&self) -> f64 {
        (0..self.n_levels)
            .map(|j| 1.0 - self.p[j][j])
            .fold(0.0, f64::max)
    }

    pub fn mean_fault_rate(&self) -> f64 {
        (0..self.n_levels)
            .map(|j| 1.0 - self.p[j][j])
            .sum::<f64>()
            / self.n_levels as f64
    }

    /// Mean over rows of the below-diagonal probability mass (misreads to a
    /// lower level).
    pub fn below_diagonal_mass(&self) -> f64 {
        let mut mass = 0.0;
        for j in 0..self.n_levels {
            for k in 0..j {
                mass += self.p[j][k];
            }
        }
        mass / self.n_levels as f64
    }

    pub fn above_diagonal_mass(&self) -> f64 {
        let mut mass = 0.0;
        for j in 0..self.n_levels {
            for k in (j + 1)..self.n_levels {
                mass += self.p[j][k];
            }
        }
        mass / self.n_levels as f64
    }
}

/// Program `samples_per_level` fresh cells per level, sense each through its
/// round-robin ADC instance, and tally the read levels. Deterministic given
/// the seed, independent of thread count.
pub fn confusion_matrix(
    mem: &MemConfig,
    samples_per_level: usize,
    master_seed: u64,
) -> Result<ConfusionMatrix, FaultError> {
    assert!(samples_per_level >= 1);
    let artifacts = mem.artifacts()?;
    let thresholds = ThresholdSet::generate(&mem.adc, master_seed).expect("validated adc");
    let n_levels = mem.adc.n_levels();
    let counts: Vec<Vec<u64>> = (0..n_levels)
        .map(|level| {
            let tallies: Vec<usize> = (0..samples_per_level)
                .into_par_iter()
                .map(|s| {
                    let cell_index = (level * samples_per_level + s) as u64;
                    let mut cell = FeFETCell::new(&mem.device, master_seed, cell_index);
                    let r = mem
                        .program_cell(&mut cell, level, &artifacts)
                        .expect("level in range");
                    sense(thresholds.row_for_cell(cell_index), r.final_current)
                })
                .collect();
            let mut row = vec![0u64; n_levels];
            for t in tallies {
                row[t.min(n_levels - 1)] += 1;
            }
            row
        })
        .collect();
    Ok(ConfusionMatrix::from_counts(counts, samples_per_level))
}

/// One shmoo sweep point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ShmooRow {
    pub n_domains: usize,
    pub bpc: u32,
    pub scheme: SchemeKind,
    pub max_fault: f64,
    pub mean_fault: f64,
    pub below_mass: f64,
    pub above_mass: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ShmooTable {
    pub rows: Vec<ShmooRow>,
}

pub const SHMOO_CSV_HEADER: &str =
    "n_domains,bpc,scheme,max_fault,mean_fault,below_mass,above_mass,samples,seed";

/// Default domain grid for shmoo and minimum-cell-size sweeps.
pub const DEFAULT_DOMAIN_GRID: [usize; 9] = [20, 50, 100, 150, 200, 250, 300, 400, 500];

impl ShmooTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SHMOO_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n_domains,
                r.bpc,
                r.scheme,
                r.max_fault,
                r.mean_fault,
                r.below_mass,
                r.above_mass,
                r.samples,
                r.seed
            ));
        }
        out
    }
}

/// Cartesian sweep of confusion matrices over the given grids.
pub fn shmoo(
    base: &MemConfig,
    domain_grid: &[usize],
    bpc_set: &[u32],
    schemes: &[SchemeKind],
    samples_per_level: usize,
    master_seed: u64,
) -> Result<ShmooTable, FaultError> {
    if domain_grid.is_empty() {
        return Err(FaultError::EmptyGrid("domain_grid"));
    }
    if bpc_set.is_empty() {
        return Err(FaultError::EmptyGrid("bpc_set"));
    }
    if schemes.is_empty() {
        return Err(FaultError::EmptyGrid("schemes"));
    }
    let mut rows = Vec::new();
    for &n_domains in domain_grid {
        for &bpc in bpc_set {
            for scheme in schemes {
                let mut mem = base.with_axes(n_domains, bpc);
                mem.program.scheme = scheme.clone();
                let m = confusion_matrix(&mem, samples_per_level, master_seed)?;
                rows.push(ShmooRow {
                    n_domains,
                    bpc,
                    scheme: scheme.clone(),
                    max_fault: m.max_fault_rate(),
                    mean_fault: m.mean_fault_rate(),
                    below_mass: m.below_diagonal_mass(),
                    above_mass: m.above_diagonal_mass(),
                    samples: samples_per_level,
                    seed: master_seed,
                });
            }
        }
    }
    Ok(ShmooTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mem(scheme: SchemeKind, n_domains: usize, bits: u32) -> MemConfig {
        let mut m = MemConfig::default();
        m.program.scheme = scheme;
        m.device.n_domains = n_domains;
        m.adc.bits_per_cell = bits;
        m
    }

    #[test]
    fn zero_variance_gives_identity_matrix() {
        for bits in 1..=3u32 {
            let mut m = mem(SchemeKind::Verify, 200, bits);
            m.device.vc_sigma_ln = 0.0;
            m.adc.sigma_rel = 0.0;
            let cm = confusion_matrix(&m, 64, 3).unwrap();
            for j in 0..cm.n_levels {
                assert_eq!(cm.p[j][j], 1.0, "bits {bits} level {j}");
            }
            assert_eq!(cm.max_fault_rate(), 0.0);
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let m = mem(SchemeKind::Single, 50, 2);
        let cm = confusion_matrix(&m, 2000, 11).unwrap();
        for row in &cm.p {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn max_fault_rate_matches_raw_tally_recount() {
        // Independent oracle: recount the raw tallies directly.
        let m = mem(SchemeKind::Single, 80, 2);
        let cm = confusion_matrix(&m, 1000, 21).unwrap();
        let mut worst = 0.0f64;
        for (j, row) in cm.counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            let wrong: u64 = total - row[j];
            worst = worst.max(wrong as f64 / total as f64);
        }
        assert!((cm.max_fault_rate() - worst).abs() < 1e-12);
    }

    #[test]
    fn handcrafted_matrix_rates() {
        let cm = ConfusionMatrix::from_counts(vec![vec![9, 1], vec![0, 10]], 10);
        assert!((cm.max_fault_rate() - 0.1).abs() < 1e-12);
        assert!((cm.mean_fault_rate() - 0.05).abs() < 1e-12);
        assert!((cm.above_diagonal_mass() - 0.05).abs() < 1e-12);
        assert_eq!(cm.below_diagonal_mass(), 0.0);
    }

    #[test]
    fn confusion_matrix_reproducible() {
        let m = mem(SchemeKind::Verify, 100, 2);
        let a = confusion_matrix(&m, 500, 77).unwrap();
        let b = confusion_matrix(&m, 500, 77).unwrap();
        assert_eq!(a.counts, b.counts);
    }

    #[test]
    fn shmoo_rejects_empty_grids() {
        let m = MemConfig::default();
        assert!(shmoo(&m, &[], &[1], &[SchemeKind::Single], 10, 0).is_err());
        assert!(shmoo(&m, &[50], &[], &[SchemeKind::Single], 10, 0).is_err());
        assert!(shmoo(&m, &[50], &[1], &[], 10, 0).is_err());
    }

    #[test]
    fn shmoo_csv_shape() {
        let m = MemConfig::default();
        let t = shmoo(
            &m,
            &[50, 100],
            &[1, 2],
            &[SchemeKind::Single, SchemeKind::Verify],
            200,
            9,
        )
        .unwrap();
        assert_eq!(t.rows.len(), 8);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SHMOO_CSV_HEADER);
        assert_eq!(lines.count(), 8);
        for r in &t.rows {
            assert!(r.max_fault >= 0.0 && r.max_fault <= 1.0);
            assert!(r.mean_fault <= r.max_fault + 1e-12);
        }
    }
}
