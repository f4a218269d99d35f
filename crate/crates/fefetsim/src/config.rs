//! TOML experiment configuration. Unknown keys are rejected; every key has
//! a shipped default, so an empty file is a valid experiment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{ArrayConfig, Organization, PeripheralParams, WriteStats};
use crate::device::DeviceParams;
use crate::programming::{
    EnergyModel, MemConfig, PopulationStats, ProgramConfig, SchemeKind, WriteVerifyScheme,
};
use crate::sensing::AdcConfig;
use crate::workloads::WorkloadKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: Option<u64>,
    #[serde(default = "default_samples_per_level")]
    pub samples_per_level: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_n_cells")]
    pub n_cells: usize,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub adc: AdcSection,
    #[serde(default)]
    pub program: ProgramSection,
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub workload: WorkloadSection,
}

fn default_samples_per_level() -> usize {
    10_000
}
fn default_replicates() -> usize {
    3
}
fn default_n_cells() -> usize {
    1500
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub n_domains: usize,
    pub vc_median_v: f64,
    pub vc_sigma_ln: f64,
    pub tau0_s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub i_low_ua: f64,
    pub i_high_ua: f64,
}

impl Default for DeviceSection {
    fn default() -> Self {
        let d = DeviceParams::default();
        DeviceSection {
            n_domains: d.n_domains,
            vc_median_v: d.vc_median,
            vc_sigma_ln: d.vc_sigma_ln,
            tau0_s: d.tau0,
            alpha: d.alpha,
            beta: d.beta,
            i_low_ua: d.i_low,
            i_high_ua: d.i_high,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdcSection {
    pub bits_per_cell: u32,
    pub i_low_ua: f64,
    pub i_high_ua: f64,
    pub sigma_rel: f64,
    pub n_instances: usize,
}

impl Default for AdcSection {
    fn default() -> Self {
        let a = AdcConfig::default();
        AdcSection {
            bits_per_cell: a.bits_per_cell,
            i_low_ua: a.i_low,
            i_high_ua: a.i_high,
            sigma_rel: a.sigma_rel,
            n_instances: a.n_instances,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProgramSection {
    pub scheme: SchemeKind,
    pub v_set: f64,
    pub v_soft_reset: f64,
    pub pulse_ns: f64,
    pub max_soft_resets: usize,
    pub max_total_pulses: usize,
    pub window_frac: f64,
    pub t_verify_ns: f64,
    pub single_pulse_ns: f64,
}

impl Default for ProgramSection {
    fn default() -> Self {
        let p = ProgramConfig::default();
        ProgramSection {
            scheme: p.scheme,
            v_set: p.verify.v_set,
            v_soft_reset: p.verify.v_soft_reset,
            pulse_ns: p.verify.pulse_duration * 1e9,
            max_soft_resets: p.verify.max_soft_resets,
            max_total_pulses: p.verify.max_total_pulses,
            window_frac: p.verify.window_frac,
            t_verify_ns: p.verify.t_verify * 1e9,
            single_pulse_ns: p.single_pulse_duration * 1e9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    pub capacity_mb: f64,
    pub word_width: u32,
    /// Driver overhead factor on switched gate capacitance.
    pub eta_drv: f64,
    /// Gate oxide capacitance density (F/m^2).
    pub c_ox: f64,
    pub gate_cap_factor: f64,
    pub layout_factor: f64,
    pub wire_cap_f_per_um: f64,
    pub wire_res_ohm_per_um: f64,
    pub decoder_delay_per_stage_s: f64,
    pub sense_time_s: f64,
    pub v_read: f64,
    pub drain_cap_f: f64,
    pub sense_energy_j: f64,
    pub decoder_area_per_row_um2: f64,
    pub sense_area_per_comparator_um2: f64,
    pub driver_area_per_col_um2: f64,
    /// Fixed organization; all three must be set together, otherwise the
    /// sweep is used.
    pub subarray_rows: Option<usize>,
    pub subarray_cols: Option<usize>,
    pub n_banks: Option<usize>,
}

impl Default for ArraySection {
    fn default() -> Self {
        let p = PeripheralParams::default();
        let e = EnergyModel::default();
        ArraySection {
            capacity_mb: 4.0,
            word_width: 64,
            eta_drv: e.eta_drv,
            c_ox: e.c_ox,
            gate_cap_factor: e.gate_cap_factor,
            layout_factor: p.layout_factor,
            wire_cap_f_per_um: p.wire_cap_f_per_um,
            wire_res_ohm_per_um: p.wire_res_ohm_per_um,
            decoder_delay_per_stage_s: p.decoder_delay_per_stage_s,
            sense_time_s: p.sense_time_s,
            v_read: p.v_read,
            drain_cap_f: p.drain_cap_f,
            sense_energy_j: p.sense_energy_j,
            decoder_area_per_row_um2: p.decoder_area_per_row_um2,
            sense_area_per_comparator_um2: p.sense_area_per_comparator_um2,
            driver_area_per_col_um2: p.driver_area_per_col_um2,
            subarray_rows: None,
            subarray_cols: None,
            n_banks: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSection {
    pub kind: WorkloadKind,
    /// Graph source: a SNAP edge-list path, "er:<nodes>:<p>", or
    /// "clustered:<nodes>:<clusters>:<p_in>:<p_out>".
    pub graph: String,
    pub directed: bool,
    pub n_queries: usize,
    pub epsilon: f64,
    pub blobs_classes: usize,
    pub blobs_dim: usize,
    pub blobs_train: usize,
    pub blobs_test: usize,
    pub blobs_mean_scale: f64,
    pub blobs_lambda: f64,
}

impl Default for WorkloadSection {
    fn default() -> Self {
        let b = crate::workloads::classifier::BlobsParams::default();
        WorkloadSection {
            kind: WorkloadKind::Graph,
            graph: "er:256:0.05".to_string(),
            directed: true,
            n_queries: 16,
            epsilon: 0.01,
            blobs_classes: b.n_classes,
            blobs_dim: b.dim,
            blobs_train: b.n_train,
            blobs_test: b.n_test,
            blobs_mean_scale: b.mean_scale,
            blobs_lambda: b.lambda,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.to_mem_config()
            .validate()
            .map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    pub fn to_mem_config(&self) -> MemConfig {
        MemConfig {
            device: DeviceParams {
                n_domains: self.device.n_domains,
                vc_median: self.device.vc_median_v,
                vc_sigma_ln: self.device.vc_sigma_ln,
                tau0: self.device.tau0_s,
                alpha: self.device.alpha,
                beta: self.device.beta,
                i_low: self.device.i_low_ua,
                i_high: self.device.i_high_ua,
            },
            adc: AdcConfig {
                bits_per_cell: self.adc.bits_per_cell,
                i_low: self.adc.i_low_ua,
                i_high: self.adc.i_high_ua,
                sigma_rel: self.adc.sigma_rel,
                n_instances: self.adc.n_instances,
            },
            program: ProgramConfig {
                scheme: self.program.scheme.clone(),
                verify: WriteVerifyScheme {
                    v_set: self.program.v_set,
                    v_soft_reset: self.program.v_soft_reset,
                    pulse_duration: self.program.pulse_ns * 1e-9,
                    max_soft_resets: self.program.max_soft_resets,
                    max_total_pulses: self.program.max_total_pulses,
                    window_frac: self.program.window_frac,
                    t_verify: self.program.t_verify_ns * 1e-9,
                },
                single_pulse_duration: self.program.single_pulse_ns * 1e-9,
            },
            energy: EnergyModel {
                eta_drv: self.array.eta_drv,
                c_ox: self.array.c_ox,
                gate_cap_factor: self.array.gate_cap_factor,
            },
        }
    }

    pub fn peripheral_params(&self) -> PeripheralParams {
        PeripheralParams {
            layout_factor: self.array.layout_factor,
            wire_cap_f_per_um: self.array.wire_cap_f_per_um,
            wire_res_ohm_per_um: self.array.wire_res_ohm_per_um,
            decoder_delay_per_stage_s: self.array.decoder_delay_per_stage_s,
            sense_time_s: self.array.sense_time_s,
            v_read: self.array.v_read,
            drain_cap_f: self.array.drain_cap_f,
            sense_energy_j: self.array.sense_energy_j,
            decoder_area_per_row_um2: self.array.decoder_area_per_row_um2,
            sense_area_per_comparator_um2: self.array.sense_area_per_comparator_um2,
            driver_area_per_col_um2: self.array.driver_area_per_col_um2,
        }
    }

    /// Array config fed by programming population statistics.
    pub fn to_array_config(&self, stats: &PopulationStats) -> Result<ArrayConfig, ConfigError> {
        let mem = self.to_mem_config();
        let capacity_bits = (self.array.capacity_mb * 8.0 * (1u64 << 20) as f64).round() as u64;
        let (pulse_duration, t_verify, v_write) = match mem.program.scheme {
            SchemeKind::Verify => (
                mem.program.verify.pulse_duration,
                mem.program.verify.t_verify,
                mem.program.verify.v_set,
            ),
            SchemeKind::Single => (mem.program.single_pulse_duration, 0.0, 3.0),
        };
        let organization = match (
            self.array.subarray_rows,
            self.array.subarray_cols,
            self.array.n_banks,
        ) {
            (Some(r), Some(c), Some(b)) => Some(Organization {
                subarray_rows: r,
                subarray_cols: c,
                n_banks: b,
            }),
            (None, None, None) => None,
            _ => {
                return Err(ConfigError::Invalid(
                    "set all of subarray_rows, subarray_cols, n_banks or none".into(),
                ))
            }
        };
        Ok(ArrayConfig {
            capacity_bits,
            word_width: self.array.word_width,
            bits_per_cell: self.adc.bits_per_cell,
            n_domains: self.device.n_domains,
            write_stats: WriteStats {
                mean_total_pulses: stats.mean_total_pulses,
                pulse_duration,
                t_verify,
                mean_energy_per_cell_j: stats.mean_energy_per_cell_j,
                v_write,
            },
            periph: self.peripheral_params(),
            energy: mem.energy,
            organization,
        })
    }

    pub fn blobs_params(&self) -> crate::workloads::classifier::BlobsParams {
        crate::workloads::classifier::BlobsParams {
            n_classes: self.workload.blobs_classes,
            dim: self.workload.blobs_dim,
            n_train: self.workload.blobs_train,
            n_test: self.workload.blobs_test,
            mean_scale: self.workload.blobs_mean_scale,
            lambda: self.workload.blobs_lambda,
        }
    }
}
