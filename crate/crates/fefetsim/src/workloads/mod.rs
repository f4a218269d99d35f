//! Application fault-injection harness: encode workload data into MLC
//! levels, push it through program -> sense, decode, and score.

pub mod classifier;
pub mod graph;
pub mod tensor;

use rayon::prelude::*;
use thiserror::Error;

use crate::device::FeFETCell;
use crate::fault::DEFAULT_DOMAIN_GRID;
use crate::programming::{MemConfig, ProgramError, SchemeKind};
use crate::sensing::{sense, ThresholdSet};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty graph")]
    EmptyGraph,
    #[error("graph size mismatch: {0} vs {1} nodes")]
    SizeMismatch(usize, usize),
    #[error("level {0} out of range for {1} bits per cell")]
    LevelOutOfRange(u8, u32),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("tensor manifest error: {0}")]
    Manifest(String),
}

/// Packed bit buffer, LSB-first within each word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBuffer {
    words: Vec<u64>,
    len: usize,
}

impl BitBuffer {
    pub fn zeros(len: usize) -> BitBuffer {
        BitBuffer {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> BitBuffer {
        let mut b = BitBuffer::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            if v {
                b.set(i, true);
            }
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> BitBuffer {
        // One bit per byte value's LSB-significant bits: bytes are data, 8
        // bits each, MSB-first to match the textual reading order.
        let mut b = BitBuffer::zeros(bytes.len() * 8);
        for (i, &byte) in bytes.iter().enumerate() {
            for k in 0..8 {
                b.set(i * 8 + k, (byte >> (7 - k)) & 1 == 1);
            }
        }
        b
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        assert_eq!(self.len % 8, 0);
        (0..self.len / 8)
            .map(|i| {
                (0..8).fold(0u8, |acc, k| (acc << 1) | u8::from(self.get(i * 8 + k)))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of differing bits.
    pub fn hamming(&self, other: &BitBuffer) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }
}

/// Pack bits into MLC levels: consecutive groups of `bits_per_cell` bits,
/// MSB-first within a cell; the tail is zero-padded.
pub fn encode_levels(bits: &BitBuffer, bits_per_cell: u32) -> Vec<u8> {
    let n = bits_per_cell as usize;
    let n_cells = bits.len().div_ceil(n).max(0);
    (0..n_cells)
        .map(|c| {
            let mut level = 0u8;
            for k in 0..n {
                let i = c * n + k;
                let bit = if i < bits.len() { bits.get(i) } else { false };
                level = (level << 1) | u8::from(bit);
            }
            level
        })
        .collect()
}

/// Inverse of [`encode_levels`]; `n_bits` trims the padding.
pub fn decode_levels(
    levels: &[u8],
    bits_per_cell: u32,
    n_bits: usize,
) -> Result<BitBuffer, WorkloadError> {
    let n = bits_per_cell as usize;
    let mut bits = BitBuffer::zeros(n_bits);
    for (c, &level) in levels.iter().enumerate() {
        if level as usize >= (1usize << n) {
            return Err(WorkloadError::LevelOutOfRange(level, bits_per_cell));
        }
        for k in 0..n {
            let i = c * n + k;
            if i < n_bits {
                bits.set(i, (level >> (n - 1 - k)) & 1 == 1);
            }
        }
    }
    Ok(bits)
}

/// Fault statistics from one store/readback pass.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FaultStats {
    pub bits_total: usize,
    pub bit_errors: usize,
    pub bit_error_rate: f64,
    pub levels_total: usize,
    pub level_errors: usize,
    pub level_error_rate: f64,
    /// confusion_counts[j][k]: cells intended at level j read as level k.
    pub confusion_counts: Vec<Vec<u64>>,
}

/// Store a bit string into MLC cells and read it back: encode, then per cell
/// create, program, sense via its round-robin ADC instance, then decode.
pub fn store_and_readback(
    bits: &BitBuffer,
    mem: &MemConfig,
    master_seed: u64,
) -> Result<(BitBuffer, FaultStats), WorkloadError> {
    let bpc = mem.adc.bits_per_cell;
    let n_levels = mem.adc.n_levels();
    let levels_in = encode_levels(bits, bpc);
    let artifacts = mem.artifacts()?;
    let thresholds = ThresholdSet::generate(&mem.adc, master_seed).expect("validated adc");
    let levels_out: Vec<u8> = levels_in
        .par_iter()
        .enumerate()
        .map(|(i, &level)| {
            let cell_index = i as u64;
            let mut cell = FeFETCell::new(&mem.device, master_seed, cell_index);
            let r = mem
                .program_cell(&mut cell, level as usize, &artifacts)
                .expect("encoded level in range");
            sense(thresholds.row_for_cell(cell_index), r.final_current).min(n_levels - 1) as u8
        })
        .collect();
    let mut confusion_counts = vec![vec![0u64; n_levels]; n_levels];
    let mut level_errors = 0usize;
    for (&a, &b) in levels_in.iter().zip(&levels_out) {
        confusion_counts[a as usize][b as usize] += 1;
        if a != b {
            level_errors += 1;
        }
    }
    let bits_out = decode_levels(&levels_out, bpc, bits.len())?;
    let bit_errors = bits.hamming(&bits_out);
    let stats = FaultStats {
        bits_total: bits.len(),
        bit_errors,
        bit_error_rate: if bits.is_empty() {
            0.0
        } else {
            bit_errors as f64 / bits.len() as f64
        },
        levels_total: levels_in.len(),
        level_errors,
        level_error_rate: if levels_in.is_empty() {
            0.0
        } else {
            level_errors as f64 / levels_in.len() as f64
        },
        confusion_counts,
    };
    Ok((bits_out, stats))
}

/// Full injection outcome: fault statistics plus workload metric before and
/// after storage.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InjectionReport {
    pub workload: String,
    pub bit_error_rate: f64,
    pub level_error_rate: f64,
    pub confusion_counts: Vec<Vec<u64>>,
    pub metric_before: f64,
    pub metric_after: f64,
    /// 1 - metric_after / metric_before.
    pub relative_error: f64,
}

impl InjectionReport {
    pub fn new(
        workload: &str,
        stats: &FaultStats,
        metric_before: f64,
        metric_after: f64,
    ) -> InjectionReport {
        InjectionReport {
            workload: workload.to_string(),
            bit_error_rate: stats.bit_error_rate,
            level_error_rate: stats.level_error_rate,
            confusion_counts: stats.confusion_counts.clone(),
            metric_before,
            metric_after,
            relative_error: 1.0 - metric_after / metric_before,
        }
    }
}

/// Workload selector for injection and minimum-cell-size sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    Graph,
    Classifier,
}

impl std::fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorkloadKind::Graph => write!(f, "graph"),
            WorkloadKind::Classifier => write!(f, "classifier"),
        }
    }
}

impl std::str::FromStr for WorkloadKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "graph" => Ok(WorkloadKind::Graph),
            "classifier" => Ok(WorkloadKind::Classifier),
            _ => Err(format!(
                "unknown workload '{s}', expected graph or classifier"
            )),
        }
    }
}

/// One row of the minimum-cell-size table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MinSizeRow {
    pub bpc: u32,
    pub scheme: SchemeKind,
    pub workload: WorkloadKind,
    /// Smallest grid size whose mean relative error stays below the
    /// threshold; None when no grid point passes.
    pub min_domains: Option<usize>,
}

pub const MINSIZE_CSV_HEADER: &str = "bpc,scheme,workload,min_domains";

pub fn minsize_to_csv(rows: &[MinSizeRow]) -> String {
    let mut out = String::from(MINSIZE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let min = r
            .min_domains
            .map(|d| d.to_string())
            .unwrap_or_else(|| "none".to_string());
        out.push_str(&format!("{},{},{},{}\n", r.bpc, r.scheme, r.workload, min));
    }
    out
}

/// Evaluate one workload injection at a fixed memory configuration.
pub fn run_injection(
    workload: WorkloadKind,
    graph_input: Option<&graph::Graph>,
    mem: &MemConfig,
    n_queries: usize,
    master_seed: u64,
) -> Result<InjectionReport, WorkloadError> {
    match workload {
        WorkloadKind::Graph => {
            let g = graph_input.expect("graph workload requires a graph");
            graph::run_graph_injection(g, mem, n_queries, master_seed)
        }
        WorkloadKind::Classifier => {
            classifier::run_classifier_injection(mem, master_seed)
        }
    }
}

/// For each (scheme, bpc) pair, find the smallest domain-grid size whose
/// mean relative error over `replicates` seeded runs stays below `epsilon`.
#[allow(clippy::too_many_arguments)]
pub fn min_cell_size_sweep(
    workload: WorkloadKind,
    graph_input: Option<&graph::Graph>,
    base: &MemConfig,
    domain_grid: &[usize],
    schemes: &[SchemeKind],
    bpc_set: &[u32],
    epsilon: f64,
    replicates: usize,
    n_queries: usize,
    master_seed: u64,
) -> Result<Vec<MinSizeRow>, WorkloadError> {
    assert!(epsilon > 0.0);
    let grid = if domain_grid.is_empty() {
        DEFAULT_DOMAIN_GRID.to_vec()
    } else {
        let mut g = domain_grid.to_vec();
        g.sort_unstable();
        g
    };
    let mut rows = Vec::new();
    for scheme in schemes {
        for &bpc in bpc_set {
            let mut min_domains = None;
            for &n_domains in &grid {
                let mut mem = base.with_axes(n_domains, bpc);
                mem.program.scheme = scheme.clone();
                let mut total = 0.0;
                for rep in 0..replicates {
                    let seed = crate::seed::stream_key(
                        master_seed,
                        crate::seed::Purpose::Replicate,
                        rep as u64,
                    );
                    let report = run_injection(workload, graph_input, &mem, n_queries, seed)?;
                    total += report.relative_error;
                }
                if total / (replicates as f64) < epsilon {
                    min_domains = Some(n_domains);
                    break;
                }
            }
            rows.push(MinSizeRow {
                bpc,
                scheme: scheme.clone(),
                workload,
                min_domains,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_example() {
        let bits = BitBuffer::from_bools(&[true, false, true, true, false, false, false, true]);
        assert_eq!(encode_levels(&bits, 2), vec![2, 3, 0, 1]);
    }

    #[test]
    fn encode_pads_with_zeros() {
        // 101 100 01(0) -> 5, 4, 2
        let bits = BitBuffer::from_bools(&[true, false, true, true, false, false, false, true]);
        assert_eq!(encode_levels(&bits, 3), vec![5, 4, 2]);
    }

    #[test]
    fn decode_rejects_out_of_range_levels() {
        assert!(decode_levels(&[4], 2, 2).is_err());
    }

    #[test]
    fn empty_input_roundtrip() {
        let bits = BitBuffer::zeros(0);
        let mem = MemConfig::default();
        let (out, stats) = store_and_readback(&bits, &mem, 1).unwrap();
        assert_eq!(out.len(), 0);
        assert_eq!(stats.bit_error_rate, 0.0);
    }

    #[test]
    fn zero_variance_readback_is_identity() {
        for bpc in 1..=3u32 {
            let mut mem = MemConfig::default();
            mem.device.vc_sigma_ln = 0.0;
            mem.adc.sigma_rel = 0.0;
            mem.adc.bits_per_cell = bpc;
            mem.device.n_domains = 200;
            let mut bits = BitBuffer::zeros(301);
            for i in (0..301).step_by(3) {
                bits.set(i, true);
            }
            let (out, stats) = store_and_readback(&bits, &mem, 99).unwrap();
            assert_eq!(out, bits, "bpc {bpc}");
            assert_eq!(stats.bit_errors, 0);
        }
    }

    #[test]
    fn readback_ber_consistent_with_confusion_matrix() {
        // Uniform random bits through a faulty config: the level error rate
        // must match the fault module's confusion matrix prediction within 3
        // Monte Carlo sigma.
        let mut mem = MemConfig::default();
        mem.device.n_domains = 50;
        mem.adc.bits_per_cell = 2;
        mem.program.scheme = SchemeKind::Single;
        let cm = crate::fault::confusion_matrix(&mem, 10_000, 500).unwrap();
        let n_bits = 40_000usize;
        let mut rng = crate::seed::stream_rng(501, crate::seed::Purpose::Blobs, 0);
        let mut bits = BitBuffer::zeros(n_bits);
        for i in 0..n_bits {
            if rand::Rng::random::<bool>(&mut rng) {
                bits.set(i, true);
            }
        }
        let (_, stats) = store_and_readback(&bits, &mem, 502).unwrap();
        // Predicted level error rate for uniform level usage.
        let predicted = cm.mean_fault_rate();
        let n_cells = stats.levels_total as f64;
        let se = (predicted * (1.0 - predicted) / n_cells).sqrt();
        assert!(
            (stats.level_error_rate - predicted).abs() < 3.0 * se + 0.01,
            "level error {} vs predicted {predicted}",
            stats.level_error_rate
        );
    }

    #[test]
    fn minsize_csv_sentinel() {
        let rows = vec![MinSizeRow {
            bpc: 3,
            scheme: SchemeKind::Single,
            workload: WorkloadKind::Graph,
            min_domains: None,
        }];
        let csv = minsize_to_csv(&rows);
        assert_eq!(csv, "bpc,scheme,workload,min_domains\n3,single,graph,none\n");
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..512), bpc in 1u32..=3) {
            let buf = BitBuffer::from_bools(&bits);
            let levels = encode_levels(&buf, bpc);
            let back = decode_levels(&levels, bpc, bits.len()).unwrap();
            prop_assert_eq!(back, buf);
        }

        #[test]
        fn bytes_roundtrip(bytes in proptest::collection::vec(any::<u8>(), 0..128)) {
            let buf = BitBuffer::from_bytes(&bytes);
            prop_assert_eq!(buf.to_bytes(), bytes);
        }
    }
}
