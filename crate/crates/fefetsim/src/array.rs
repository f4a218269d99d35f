//! Analytical AND-array cost model ("NVSim-lite"): area, read latency and
//! energy, SET latency and energy, and storage density, with an exhaustive
//! organization sweep under a selectable optimization target.
//!
//! Peripheral constants are free parameters with shipped defaults calibrated
//! against a 4 MB, 2-bit, 150-domain write-verify reference design.

use thiserror::Error;

use crate::programming::{set_latency, EnergyModel};

const UM2_PER_MM2: f64 = 1e6;
const DOMAIN_AREA_UM2: f64 = 1e-4; // 100 nm^2

#[derive(Debug, Error)]
pub enum ArrayError {
    #[error("infeasible organization: {0}")]
    Infeasible(String),
    #[error("invalid array config: {0}")]
    InvalidConfig(String),
    #[error("no feasible organization in the sweep range")]
    NoFeasibleOrganization,
}

/// Optimization target for the organization sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptTarget {
    ReadLatency,
    ReadEnergy,
    ReadEdp,
    Area,
}

impl std::str::FromStr for OptTarget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "read_latency" => Ok(OptTarget::ReadLatency),
            "read_energy" => Ok(OptTarget::ReadEnergy),
            "read_edp" => Ok(OptTarget::ReadEdp),
            "area" => Ok(OptTarget::Area),
            _ => Err(format!("unknown optimization target '{s}'")),
        }
    }
}

/// Write statistics feeding the SET latency/energy model; produced by
/// `programming::population_stats`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WriteStats {
    /// Mean total programming pulses per cell (set + soft resets).
    pub mean_total_pulses: f64,
    /// Programming pulse duration (s).
    pub pulse_duration: f64,
    /// Verify sensing time per pulse (s).
    pub t_verify: f64,
    /// Mean device programming energy per cell (J).
    pub mean_energy_per_cell_j: f64,
    /// Representative write amplitude for wire/driver overhead (V).
    pub v_write: f64,
}

/// Peripheral circuit constants (per-um wire parasitics, decoder and sense
/// amp costs, layout overhead).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PeripheralParams {
    /// Cell area multiplier for AND-array wiring.
    pub layout_factor: f64,
    /// Wire capacitance (F/um).
    pub wire_cap_f_per_um: f64,
    /// Wire resistance (ohm/um).
    pub wire_res_ohm_per_um: f64,
    /// Decoder delay per stage (s); stages = log2(rows) + log2(banks).
    pub decoder_delay_per_stage_s: f64,
    /// Sense amplifier evaluation time (s).
    pub sense_time_s: f64,
    /// Bitline/wordline read swing (V).
    pub v_read: f64,
    /// Per-cell bitline junction load (F).
    pub drain_cap_f: f64,
    /// Energy per comparator evaluation (J).
    pub sense_energy_j: f64,
    /// Decoder area per driven row (um^2).
    pub decoder_area_per_row_um2: f64,
    /// Sense amplifier area per comparator (um^2).
    pub sense_area_per_comparator_um2: f64,
    /// Write driver area per column (um^2).
    pub driver_area_per_col_um2: f64,
}

impl Default for PeripheralParams {
    fn default() -> Self {
        PeripheralParams {
            layout_factor: 1.5,
            wire_cap_f_per_um: 0.2e-15,
            wire_res_ohm_per_um: 4.0,
            decoder_delay_per_stage_s: 35e-12,
            sense_time_s: 0.45e-9,
            v_read: 1.0,
            drain_cap_f: 0.05e-15,
            sense_energy_j: 0.08e-12,
            decoder_area_per_row_um2: 0.4,
            sense_area_per_comparator_um2: 0.6,
            driver_area_per_col_um2: 0.25,
        }
    }
}

/// Array organization: identical subarrays of rows x cols cells, replicated
/// over banks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Organization {
    pub subarray_rows: usize,
    pub subarray_cols: usize,
    pub n_banks: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArrayConfig {
    pub capacity_bits: u64,
    pub word_width: u32,
    pub bits_per_cell: u32,
    pub n_domains: usize,
    pub write_stats: WriteStats,
    pub periph: PeripheralParams,
    pub energy: EnergyModel,
    /// None selects the organization sweep.
    pub organization: Option<Organization>,
}

/// Evaluated array cost metrics.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArrayMetrics {
    pub area_mm2: f64,
    pub read_latency_ns: f64,
    pub read_energy_pj_per_bit: f64,
    pub set_latency_us: f64,
    pub set_energy_pj_per_bit: f64,
    pub density_mb_per_mm2: f64,
}

impl ArrayMetrics {
    pub fn read_edp(&self) -> f64 {
        self.read_latency_ns * self.read_energy_pj_per_bit
    }
}

/// Cell footprint in um^2: n_domains * 100 nm^2 * layout_factor.
pub fn cell_geometry(n_domains: usize, layout_factor: f64) -> f64 {
    n_domains as f64 * DOMAIN_AREA_UM2 * layout_factor
}

impl ArrayConfig {
    pub fn total_cells(&self) -> Result<u64, ArrayError> {
        if self.capacity_bits == 0 || self.capacity_bits % self.word_width as u64 != 0 {
            return Err(ArrayError::InvalidConfig(
                "capacity must be a positive multiple of the word width".into(),
            ));
        }
        if !(1..=3).contains(&self.bits_per_cell) {
            return Err(ArrayError::InvalidConfig(
                "bits_per_cell must be in 1..=3".into(),
            ));
        }
        Ok(self.capacity_bits.div_ceil(self.bits_per_cell as u64))
    }

    fn check_org(&self, org: Organization) -> Result<(), ArrayError> {
        let total = self.total_cells()?;
        let per_subarray = (org.subarray_rows as u64) * (org.subarray_cols as u64);
        if per_subarray > total {
            return Err(ArrayError::Infeasible(format!(
                "subarray of {per_subarray} cells exceeds capacity of {total} cells"
            )));
        }
        if per_subarray * org.n_banks as u64 != total {
            return Err(ArrayError::Infeasible(format!(
                "organization {}x{}x{} does not cover {total} cells exactly",
                org.subarray_rows, org.subarray_cols, org.n_banks
            )));
        }
        if (org.subarray_cols as u64) * (self.bits_per_cell as u64) < self.word_width as u64 {
            return Err(ArrayError::Infeasible(
                "subarray row narrower than one word".into(),
            ));
        }
        Ok(())
    }
}

/// Evaluate a fixed organization.
pub fn evaluate_array(cfg: &ArrayConfig) -> Result<ArrayMetrics, ArrayError> {
    let org = cfg
        .organization
        .ok_or_else(|| ArrayError::InvalidConfig("no organization fixed; use the sweep".into()))?;
    cfg.check_org(org)?;
    let total_cells = cfg.total_cells()? as f64;
    let p = &cfg.periph;
    let rows = org.subarray_rows as f64;
    let cols = org.subarray_cols as f64;
    let n_subarrays = org.n_banks as f64;

    // Geometry.
    let cell_area_um2 = cell_geometry(cfg.n_domains, p.layout_factor);
    let pitch_um = cell_area_um2.sqrt();
    let cells_area_um2 = total_cells * cell_area_um2;
    let cells_sensed = (cfg.word_width as f64 / cfg.bits_per_cell as f64).ceil();
    let comparators = cells_sensed * ((1u32 << cfg.bits_per_cell) - 1) as f64;
    let periph_per_subarray_um2 = rows * p.decoder_area_per_row_um2
        + comparators * p.sense_area_per_comparator_um2
        + cols * p.driver_area_per_col_um2;
    let area_um2 = cells_area_um2 + n_subarrays * periph_per_subarray_um2;
    let area_mm2 = area_um2 / UM2_PER_MM2;

    // Read latency: decoder + wordline RC + bitline RC + sense.
    let stages = rows.log2() + n_subarrays.log2().max(0.0);
    let t_dec = stages * p.decoder_delay_per_stage_s;
    let len_wl = cols * pitch_um;
    let c_gate = cfg.energy.cell_capacitance(cfg.n_domains);
    let c_wl = len_wl * p.wire_cap_f_per_um + cols * c_gate;
    let r_wl = len_wl * p.wire_res_ohm_per_um;
    let t_wl = 0.5 * r_wl * c_wl;
    let len_bl = rows * pitch_um;
    let c_bl = len_bl * p.wire_cap_f_per_um + rows * p.drain_cap_f;
    let r_bl = len_bl * p.wire_res_ohm_per_um;
    let t_bl = 0.5 * r_bl * c_bl;
    let read_latency_s = t_dec + t_wl + t_bl + p.sense_time_s;

    // Read energy per access: one wordline, the sensed bitlines, and the
    // parallel comparators.
    let e_wl = c_wl * p.v_read * p.v_read;
    let e_bl = cells_sensed * c_bl * p.v_read * p.v_read;
    let e_sense = comparators * p.sense_energy_j;
    let read_energy_j = e_wl + e_bl + e_sense;
    let read_energy_pj_per_bit = read_energy_j * 1e12 / cfg.word_width as f64;

    // SET path: shared decomposition with the programming statistics.
    let ws = &cfg.write_stats;
    let set_latency_s = set_latency(ws.mean_total_pulses, ws.pulse_duration, ws.t_verify);
    let wire_overhead_j =
        (c_wl / cols + c_bl) * ws.v_write * ws.v_write * (1.0 + ws.mean_total_pulses);
    let set_energy_pj_per_bit =
        (ws.mean_energy_per_cell_j + wire_overhead_j) * 1e12 / cfg.bits_per_cell as f64;

    let capacity_mb = cfg.capacity_bits as f64 / 8.0 / (1u64 << 20) as f64;
    Ok(ArrayMetrics {
        area_mm2,
        read_latency_ns: read_latency_s * 1e9,
        read_energy_pj_per_bit,
        set_latency_us: set_latency_s * 1e6,
        set_energy_pj_per_bit,
        density_mb_per_mm2: capacity_mb / area_mm2,
    })
}

/// Exhaustive organization sweep: subarray rows/cols over powers of two in
/// 128..=2048, bank count covering capacity exactly. Returns the feasible
/// organization minimizing the target; ties broken by smaller area, then
/// fewer banks.
pub fn optimize_array(
    cfg: &ArrayConfig,
    target: OptTarget,
) -> Result<(Organization, ArrayMetrics), ArrayError> {
    let total = cfg.total_cells()?;
    let sizes = [128usize, 256, 512, 1024, 2048];
    let mut best: Option<(f64, f64, usize, Organization, ArrayMetrics)> = None;
    for &rows in &sizes {
        for &cols in &sizes {
            let per = (rows as u64) * (cols as u64);
            if per > total || total % per != 0 {
                continue;
            }
            let org = Organization {
                subarray_rows: rows,
                subarray_cols: cols,
                n_banks: (total / per) as usize,
            };
            let mut fixed = cfg.clone();
            fixed.organization = Some(org);
            let metrics = match evaluate_array(&fixed) {
                Ok(m) => m,
                Err(ArrayError::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            };
            let score = match target {
                OptTarget::ReadLatency => metrics.read_latency_ns,
                OptTarget::ReadEnergy => metrics.read_energy_pj_per_bit,
                OptTarget::ReadEdp => metrics.read_edp(),
                OptTarget::Area => metrics.area_mm2,
            };
            let key = (score, metrics.area_mm2, org.n_banks);
            let better = match &best {
                None => true,
                Some((s, a, b, _, _)) => {
                    key.0 < *s
                        || (key.0 == *s && key.1 < *a)
                        || (key.0 == *s && key.1 == *a && key.2 < *b)
                }
            };
            if better {
                best = Some((key.0, key.1, key.2, org, metrics));
            }
        }
    }
    best.map(|(_, _, _, org, m)| (org, m))
        .ok_or(ArrayError::NoFeasibleOrganization)
}
