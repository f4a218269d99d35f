//! Programming engines and population statistics.
//!
//! Two schemes are modeled. Single-pulse: hard reset followed by one pulse
//! whose amplitude is calibrated per target level. Write-verify: hard reset
//! followed by fixed-amplitude 100 ns set pulses with read-back after each
//! pulse, and soft-reset pulses of the same duration to correct overshoot.
//! The sequence terminates on entering the target window, on exhausting the
//! soft-reset budget, or on hitting the total pulse cap.

use rayon::prelude::*;
use thiserror::Error;

use crate::device::{DeviceParams, FeFETCell, Pulse, DOMAIN_AREA_M2, HARD_RESET_PULSE};
use crate::sensing::{AdcConfig, LevelPlan};

/// Hard reset duration; every programming sequence starts with one.
pub const T_HARD_RESET: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("level {level} out of range for {n_levels} levels")]
    LevelOutOfRange { level: usize, n_levels: usize },
    #[error("cannot calibrate level {level}: target fraction {target_frac:.4} unreachable in (0, {v_max}] V")]
    Unreachable {
        level: usize,
        target_frac: f64,
        v_max: f64,
    },
    #[error("targets must be strictly increasing")]
    NonMonotoneTargets,
}

/// Pulse energy model: E = eta_drv * C_cell * V^2 with
/// C_cell = gate_cap_factor * c_ox * n_domains * domain area.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyModel {
    /// Driver overhead factor on the switched gate capacitance.
    pub eta_drv: f64,
    /// Gate oxide capacitance density (F/m^2).
    pub c_ox: f64,
    /// Ferroelectric gate stack capacitance relative to the CMOS gate.
    pub gate_cap_factor: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            eta_drv: 2.0,
            c_ox: 0.02,
            gate_cap_factor: 1.73,
        }
    }
}

impl EnergyModel {
    /// Cell gate capacitance in farads.
    pub fn cell_capacitance(&self, n_domains: usize) -> f64 {
        self.gate_cap_factor * self.c_ox * n_domains as f64 * DOMAIN_AREA_M2
    }

    /// Energy of one gate pulse of amplitude `v` (J).
    pub fn pulse_energy(&self, n_domains: usize, v: f64) -> f64 {
        self.eta_drv * self.cell_capacitance(n_domains) * v * v
    }
}

/// Single-pulse scheme: per-level amplitudes (slot 0 unused) and one pulse
/// duration.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePulseScheme {
    pub amplitude_per_level: Vec<f64>,
    pub pulse_duration: f64,
}

/// Write-verify scheme parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WriteVerifyScheme {
    pub v_set: f64,
    pub v_soft_reset: f64,
    pub pulse_duration: f64,
    pub max_soft_resets: usize,
    pub max_total_pulses: usize,
    /// Fraction of the distance from the target current to the nearest
    /// nominal threshold defining the target window.
    pub window_frac: f64,
    /// Verify sensing time added per pulse (s).
    pub t_verify: f64,
}

impl Default for WriteVerifyScheme {
    fn default() -> Self {
        WriteVerifyScheme {
            v_set: 3.0,
            // Strong enough that one soft reset unswitches ~20% of set
            // domains: overshoot correction must actually move the cell
            // within the 10-reset budget, and abandoned cells should end
            // below the window rather than stuck above it.
            v_soft_reset: -4.3,
            pulse_duration: 100e-9,
            // Generous budget: a soft reset can leave the cell unchanged
            // (no domain crosses its reset dose), and fine-grained levels
            // need several correction rounds before the loop gives up.
            max_soft_resets: 20,
            max_total_pulses: 64,
            window_frac: 0.4,
            t_verify: 0.0,
        }
    }
}

/// Outcome of programming one cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProgramResult {
    pub success: bool,
    /// Final cell read current (uA).
    pub final_current: f64,
    pub n_set_pulses: usize,
    pub n_soft_resets: usize,
    /// Total programming latency (s), including the hard reset.
    pub latency: f64,
    /// Total programming energy (J), including the hard reset.
    pub energy: f64,
}

/// SET latency decomposition shared by the programming statistics and the
/// array model: hard reset plus `pulses * (pulse_duration + t_verify)`.
pub fn set_latency(mean_pulses: f64, pulse_duration: f64, t_verify: f64) -> f64 {
    T_HARD_RESET + mean_pulses * (pulse_duration + t_verify)
}

/// Population-mean switched fraction of a fresh cell after one pulse of
/// amplitude `v`: the NLS CDF averaged over the log-normal coercive-voltage
/// distribution (deterministic 96-point midpoint quadrature over +/- 6
/// log-sigma). Degenerates to the nominal-cell CDF when the spread is zero.
pub fn expected_switched_fraction(params: &DeviceParams, v: f64, pulse_duration: f64) -> f64 {
    if params.vc_sigma_ln == 0.0 {
        let u = pulse_duration / params.tau(params.vc_median, v);
        return params.nls_cdf(u);
    }
    const N: usize = 96;
    const Z_MAX: f64 = 6.0;
    let mut acc = 0.0;
    let mut weight = 0.0;
    for k in 0..N {
        let z = -Z_MAX + (k as f64 + 0.5) * (2.0 * Z_MAX / N as f64);
        let w = (-0.5 * z * z).exp();
        let vc = params.vc_median * (params.vc_sigma_ln * z).exp();
        let u = pulse_duration / params.tau(vc, v);
        acc += w * params.nls_cdf(u);
        weight += w;
    }
    acc / weight
}

/// Calibrate single-pulse amplitudes by bisection on the cell population:
/// for each level j >= 1 find V so that the population-mean switched
/// fraction after one pulse equals f_j = (L_j - i_low) / (i_high - i_low).
/// Tolerance 1 mV, search range (0, 6] V.
pub fn calibrate_single_pulse(
    params: &DeviceParams,
    targets: &[f64],
    pulse_duration: f64,
) -> Result<SinglePulseScheme, ProgramError> {
    if targets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ProgramError::NonMonotoneTargets);
    }
    const V_MAX: f64 = 6.0;
    const V_TOL: f64 = 1e-3;
    let expected_frac = |v: f64| -> f64 { expected_switched_fraction(params, v, pulse_duration) };
    let mut amplitudes = vec![0.0; targets.len()];
    for (level, &target) in targets.iter().enumerate().skip(1) {
        let f_j = (target - params.i_low) / (params.i_high - params.i_low);
        if expected_frac(V_MAX) < f_j {
            return Err(ProgramError::Unreachable {
                level,
                target_frac: f_j,
                v_max: V_MAX,
            });
        }
        let mut lo = 1e-3;
        let mut hi = V_MAX;
        while hi - lo > V_TOL {
            let mid = 0.5 * (lo + hi);
            if expected_frac(mid) < f_j {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        amplitudes[level] = 0.5 * (lo + hi);
    }
    Ok(SinglePulseScheme {
        amplitude_per_level: amplitudes,
        pulse_duration,
    })
}

/// Hard reset, then (for level > 0) one calibrated pulse. No verification;
/// success is always reported.
pub fn program_single_pulse(
    cell: &mut FeFETCell,
    level: usize,
    scheme: &SinglePulseScheme,
    energy: &EnergyModel,
) -> Result<ProgramResult, ProgramError> {
    if level >= scheme.amplitude_per_level.len() {
        return Err(ProgramError::LevelOutOfRange {
            level,
            n_levels: scheme.amplitude_per_level.len(),
        });
    }
    let n = cell.n_domains();
    cell.hard_reset();
    let mut e = energy.pulse_energy(n, HARD_RESET_PULSE.amplitude);
    let mut latency = T_HARD_RESET;
    let mut n_set = 0;
    if level > 0 {
        let v = scheme.amplitude_per_level[level];
        cell.apply_pulse(Pulse::new(v, scheme.pulse_duration).expect("calibrated pulse"));
        e += energy.pulse_energy(n, v);
        latency += scheme.pulse_duration;
        n_set = 1;
    }
    Ok(ProgramResult {
        success: true,
        final_current: cell.read_current(),
        n_set_pulses: n_set,
        n_soft_resets: 0,
        latency,
        energy: e,
    })
}

/// Write-verify loop: measure, set-pulse when below the window, soft-reset
/// when above, stop on success or on budget exhaustion. Failed cells are
/// left in their last state.
pub fn program_write_verify(
    cell: &mut FeFETCell,
    level: usize,
    scheme: &WriteVerifyScheme,
    plan: &LevelPlan,
) -> Result<ProgramResult, ProgramError> {
    if level >= plan.n_levels() {
        return Err(ProgramError::LevelOutOfRange {
            level,
            n_levels: plan.n_levels(),
        });
    }
    let energy = EnergyModel::default();
    program_write_verify_with_energy(cell, level, scheme, plan, &energy)
}

pub fn program_write_verify_with_energy(
    cell: &mut FeFETCell,
    level: usize,
    scheme: &WriteVerifyScheme,
    plan: &LevelPlan,
    energy: &EnergyModel,
) -> Result<ProgramResult, ProgramError> {
    if level >= plan.n_levels() {
        return Err(ProgramError::LevelOutOfRange {
            level,
            n_levels: plan.n_levels(),
        });
    }
    let n = cell.n_domains();
    cell.hard_reset();
    let mut e = energy.pulse_energy(n, HARD_RESET_PULSE.amplitude);
    let mut n_set = 0usize;
    let mut n_soft = 0usize;
    let mut success = level == 0;
    if level > 0 {
        let (w_lo, w_hi) = plan.window(level, scheme.window_frac);
        let set_pulse = Pulse::new(scheme.v_set, scheme.pulse_duration).expect("v_set > 0");
        let soft_pulse =
            Pulse::new(scheme.v_soft_reset, scheme.pulse_duration).expect("v_soft_reset < 0");
        loop {
            let i = cell.read_current();
            if i >= w_lo && i <= w_hi {
                success = true;
                break;
            }
            if n_set + n_soft >= scheme.max_total_pulses {
                break;
            }
            if i < w_lo {
                cell.apply_pulse(set_pulse);
                e += energy.pulse_energy(n, scheme.v_set);
                n_set += 1;
            } else {
                if n_soft >= scheme.max_soft_resets {
                    break;
                }
                cell.apply_pulse(soft_pulse);
                e += energy.pulse_energy(n, scheme.v_soft_reset);
                n_soft += 1;
                // The soft-reset budget is a hard stop: once the counter hits
                // its maximum the cell is abandoned in its current (post-reset,
                // typically under-programmed) state rather than re-entering the
                // set/verify loop.
                if n_soft >= scheme.max_soft_resets {
                    break;
                }
            }
        }
    }
    let latency = set_latency(
        (n_set + n_soft) as f64,
        scheme.pulse_duration,
        scheme.t_verify,
    );
    Ok(ProgramResult {
        success,
        final_current: cell.read_current(),
        n_set_pulses: n_set,
        n_soft_resets: n_soft,
        latency,
        energy: e,
    })
}

/// Programming scheme selection plus parameters, as configured.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Single,
    Verify,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeKind::Single => write!(f, "single"),
            SchemeKind::Verify => write!(f, "verify"),
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(SchemeKind::Single),
            "verify" => Ok(SchemeKind::Verify),
            _ => Err(format!("unknown scheme '{s}', expected single or verify")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProgramConfig {
    pub scheme: SchemeKind,
    pub verify: WriteVerifyScheme,
    /// Single-pulse duration (s); mirrors the hard reset by default.
    pub single_pulse_duration: f64,
}

impl Default for ProgramConfig {
    fn default() -> Self {
        ProgramConfig {
            scheme: SchemeKind::Verify,
            verify: WriteVerifyScheme::default(),
            single_pulse_duration: 1e-6,
        }
    }
}

/// Complete memory configuration: device, sensing, programming, energy.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MemConfig {
    pub device: DeviceParams,
    pub adc: AdcConfig,
    pub program: ProgramConfig,
    pub energy: EnergyModel,
}

impl Default for MemConfig {
    fn default() -> Self {
        MemConfig {
            device: DeviceParams::default(),
            adc: AdcConfig::default(),
            program: ProgramConfig::default(),
            energy: EnergyModel::default(),
        }
    }
}

impl MemConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.device.validate().map_err(|e| e.to_string())?;
        self.adc.validate().map_err(|e| e.to_string())?;
        let v = &self.program.verify;
        if !(v.v_set > 0.0 && v.v_soft_reset < 0.0) {
            return Err("require v_set > 0 > v_soft_reset".into());
        }
        if !(v.window_frac > 0.0 && v.window_frac < 1.0) {
            return Err("window_frac must be in (0,1)".into());
        }
        Ok(())
    }

    /// Device config with the bits-per-cell / domain axes overridden; used by
    /// sweeps.
    pub fn with_axes(&self, n_domains: usize, bits_per_cell: u32) -> MemConfig {
        let mut c = self.clone();
        c.device.n_domains = n_domains;
        c.adc.bits_per_cell = bits_per_cell;
        c
    }

    /// Program one fresh cell of this configuration to `level`, using the
    /// provided calibration artifacts.
    pub fn program_cell(
        &self,
        cell: &mut FeFETCell,
        level: usize,
        artifacts: &ProgramArtifacts,
    ) -> Result<ProgramResult, ProgramError> {
        match self.program.scheme {
            SchemeKind::Single => program_single_pulse(
                cell,
                level,
                artifacts.single.as_ref().expect("calibrated"),
                &self.energy,
            ),
            SchemeKind::Verify => program_write_verify_with_energy(
                cell,
                level,
                &self.program.verify,
                &artifacts.plan,
                &self.energy,
            ),
        }
    }

    /// Precompute the sensing plan and (for the single-pulse scheme) the
    /// calibrated amplitudes.
    pub fn artifacts(&self) -> Result<ProgramArtifacts, ProgramError> {
        let plan = LevelPlan::new(&self.adc).expect("validated adc config");
        let single = match self.program.scheme {
            SchemeKind::Single => Some(calibrate_single_pulse(
                &self.device,
                &plan.targets,
                self.program.single_pulse_duration,
            )?),
            SchemeKind::Verify => None,
        };
        Ok(ProgramArtifacts { plan, single })
    }
}

/// Calibration artifacts shared across a cell population.
#[derive(Debug, Clone)]
pub struct ProgramArtifacts {
    pub plan: LevelPlan,
    pub single: Option<SinglePulseScheme>,
}

/// Fixed log-spaced current histogram over [i_low/2, 2*i_high].
pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, serde::Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub n_cells: usize,
    pub histogram: Vec<u64>,
    pub mean_set_pulses: f64,
    pub max_set_pulses: usize,
    pub mean_soft_resets: f64,
    pub max_soft_resets: usize,
    pub failure_rate: f64,
    pub mean_latency_s: f64,
    pub mean_energy_j: f64,
    pub mean_current_ua: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PopulationStats {
    pub per_level: Vec<LevelStats>,
    /// Mean total pulses (set + soft reset) per cell, levels weighted
    /// uniformly. Drives the array SET latency.
    pub mean_total_pulses: f64,
    /// Mean programming energy per cell (J), levels weighted uniformly.
    pub mean_energy_per_cell_j: f64,
    pub histogram_edges: Vec<f64>,
}

/// Log-spaced histogram bin edges (length HISTOGRAM_BINS + 1).
pub fn histogram_edges(i_low: f64, i_high: f64) -> Vec<f64> {
    let lo = (i_low / 2.0).ln();
    let hi = (2.0 * i_high).ln();
    (0..=HISTOGRAM_BINS)
        .map(|k| (lo + (hi - lo) * k as f64 / HISTOGRAM_BINS as f64).exp())
        .collect()
}

fn histogram_bin(edges: &[f64], current: f64) -> usize {
    let n = edges.len() - 1;
    if current <= edges[0] {
        return 0;
    }
    if current >= edges[n] {
        return n - 1;
    }
    edges[1..n].partition_point(|&e| e < current)
}

/// Program `n_cells` fresh cells per level and aggregate per-level current
/// histograms, pulse counts, failure rates, latency, and energy.
pub fn population_stats(
    mem: &MemConfig,
    n_cells: usize,
    master_seed: u64,
) -> Result<PopulationStats, ProgramError> {
    let artifacts = mem.artifacts()?;
    let n_levels = mem.adc.n_levels();
    let edges = histogram_edges(mem.device.i_low, mem.device.i_high);
    let results: Vec<Vec<ProgramResult>> = (0..n_levels)
        .map(|level| {
            (0..n_cells)
                .into_par_iter()
                .map(|c| {
                    let cell_index = (level * n_cells + c) as u64;
                    let mut cell = FeFETCell::new(&mem.device, master_seed, cell_index);
                    mem.program_cell(&mut cell, level, &artifacts)
                        .expect("level in range")
                })
                .collect()
        })
        .collect();

    let mut per_level = Vec::with_capacity(n_levels);
    let mut total_pulses = 0usize;
    let mut total_energy = 0.0;
    for (level, rs) in results.iter().enumerate() {
        let mut histogram = vec![0u64; HISTOGRAM_BINS];
        let mut set_sum = 0usize;
        let mut soft_sum = 0usize;
        let mut set_max = 0usize;
        let mut soft_max = 0usize;
        let mut failures = 0usize;
        let mut lat_sum = 0.0;
        let mut e_sum = 0.0;
        let mut i_sum = 0.0;
        for r in rs {
            histogram[histogram_bin(&edges, r.final_current)] += 1;
            set_sum += r.n_set_pulses;
            soft_sum += r.n_soft_resets;
            set_max = set_max.max(r.n_set_pulses);
            soft_max = soft_max.max(r.n_soft_resets);
            if !r.success {
                failures += 1;
            }
            lat_sum += r.latency;
            e_sum += r.energy;
            i_sum += r.final_current;
        }
        let n = rs.len() as f64;
        total_pulses += set_sum + soft_sum;
        total_energy += e_sum;
        per_level.push(LevelStats {
            level,
            n_cells: rs.len(),
            histogram,
            mean_set_pulses: set_sum as f64 / n,
            max_set_pulses: set_max,
            mean_soft_resets: soft_sum as f64 / n,
            max_soft_resets: soft_max,
            failure_rate: failures as f64 / n,
            mean_latency_s: lat_sum / n,
            mean_energy_j: e_sum / n,
            mean_current_ua: i_sum / n,
        });
    }
    let total_cells = (n_levels * n_cells) as f64;
    Ok(PopulationStats {
        per_level,
        mean_total_pulses: total_pulses as f64 / total_cells,
        mean_energy_per_cell_j: total_energy / total_cells,
        histogram_edges: edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::target_levels;

    fn mem(scheme: SchemeKind, n_domains: usize, bits: u32) -> MemConfig {
        let mut m = MemConfig::default();
        m.program.scheme = scheme;
        m.device.n_domains = n_domains;
        m.adc.bits_per_cell = bits;
        m
    }

    #[test]
    fn calibration_is_monotone_and_accurate() {
        let params = DeviceParams::default();
        let cfg = AdcConfig::default();
        let targets = target_levels(&cfg).unwrap();
        let scheme = calibrate_single_pulse(&params, &targets, 1e-6).unwrap();
        assert_eq!(scheme.amplitude_per_level[0], 0.0);
        for w in scheme.amplitude_per_level[1..].windows(2) {
            assert!(w[1] > w[0], "amplitudes not increasing: {w:?}");
        }
        for (level, &target) in targets.iter().enumerate().skip(1) {
            let f_j = (target - params.i_low) / (params.i_high - params.i_low);
            let v = scheme.amplitude_per_level[level];
            let f = expected_switched_fraction(&params, v, scheme.pulse_duration);
            assert!((f - f_j).abs() < 1e-3, "level {level}: f {f} vs {f_j}");
        }
    }

    #[test]
    fn calibration_rejects_unreachable_targets() {
        let params = DeviceParams {
            tau0: 1.0, // absurdly slow device
            ..DeviceParams::default()
        };
        let cfg = AdcConfig::default();
        let targets = target_levels(&cfg).unwrap();
        let err = calibrate_single_pulse(&params, &targets, 1e-6).unwrap_err();
        assert!(matches!(err, ProgramError::Unreachable { .. }));
    }

    #[test]
    fn single_pulse_level0_is_reset_only() {
        let m = mem(SchemeKind::Single, 150, 2);
        let artifacts = m.artifacts().unwrap();
        let mut cell = FeFETCell::new(&m.device, 1, 0);
        let r = m.program_cell(&mut cell, 0, &artifacts).unwrap();
        assert!(r.success);
        assert_eq!(r.n_set_pulses, 0);
        assert!((r.final_current - m.device.i_low).abs() < 1.0);
        assert_eq!(r.latency, T_HARD_RESET);
    }

    #[test]
    fn level_out_of_range_errors() {
        let m = mem(SchemeKind::Verify, 100, 2);
        let artifacts = m.artifacts().unwrap();
        let mut cell = FeFETCell::new(&m.device, 1, 0);
        assert!(m.program_cell(&mut cell, 4, &artifacts).is_err());
    }

    #[test]
    fn verify_success_implies_in_window() {
        let m = mem(SchemeKind::Verify, 150, 2);
        let artifacts = m.artifacts().unwrap();
        for c in 0..500u64 {
            for level in 1..4usize {
                let mut cell = FeFETCell::new(&m.device, 2024, c * 4 + level as u64);
                let r = m.program_cell(&mut cell, level, &artifacts).unwrap();
                if r.success {
                    let (lo, hi) = artifacts.plan.window(level, m.program.verify.window_frac);
                    assert!(
                        r.final_current >= lo && r.final_current <= hi,
                        "level {level}: {} not in [{lo}, {hi}]",
                        r.final_current
                    );
                }
                assert!(r.n_soft_resets <= m.program.verify.max_soft_resets);
                assert!(
                    r.n_set_pulses + r.n_soft_resets <= m.program.verify.max_total_pulses
                );
            }
        }
    }

    #[test]
    fn latency_and_energy_follow_pulse_counts() {
        let m = mem(SchemeKind::Verify, 150, 2);
        let artifacts = m.artifacts().unwrap();
        let v = &m.program.verify;
        for c in 0..100u64 {
            let mut cell = FeFETCell::new(&m.device, 7, c);
            let r = m.program_cell(&mut cell, 2, &artifacts).unwrap();
            let pulses = (r.n_set_pulses + r.n_soft_resets) as f64;
            let expect = set_latency(pulses, v.pulse_duration, v.t_verify);
            assert!((r.latency - expect).abs() < 1e-15);
            let e_expect = m.energy.pulse_energy(150, HARD_RESET_PULSE.amplitude)
                + r.n_set_pulses as f64 * m.energy.pulse_energy(150, v.v_set)
                + r.n_soft_resets as f64 * m.energy.pulse_energy(150, v.v_soft_reset);
            assert!((r.energy - e_expect).abs() < 1e-20);
        }
    }

    #[test]
    fn soft_reset_is_partial() {
        // mean(fraction switched after one soft reset) / mean(before) > 0.5
        // over 10^4 cells.
        let m = mem(SchemeKind::Verify, 150, 2);
        let mut before = 0.0;
        let mut after = 0.0;
        let soft = Pulse::new(m.program.verify.v_soft_reset, m.program.verify.pulse_duration)
            .unwrap();
        for c in 0..10_000u64 {
            let mut cell = FeFETCell::new(&m.device, 88, c);
            cell.hard_reset();
            for _ in 0..10 {
                cell.apply_pulse(Pulse::new(3.0, 100e-9).unwrap());
            }
            before += cell.n_set() as f64;
            cell.apply_pulse(soft);
            after += cell.n_set() as f64;
        }
        assert!(before > 0.0);
        assert!(after / before > 0.5, "soft reset too strong: {}", after / before);
        assert!(after < before, "soft reset had no effect");
    }

    #[test]
    fn zero_variance_population_never_fails() {
        for bits in 1..=3u32 {
            let mut m = mem(SchemeKind::Verify, 200, bits);
            m.device.vc_sigma_ln = 0.0;
            m.adc.sigma_rel = 0.0;
            let stats = population_stats(&m, 64, 5).unwrap();
            for ls in &stats.per_level {
                assert_eq!(ls.failure_rate, 0.0, "bits {bits} level {}", ls.level);
            }
        }
    }

    #[test]
    fn histogram_mass_stays_in_current_bounds() {
        let m = mem(SchemeKind::Single, 100, 2);
        let stats = population_stats(&m, 500, 9).unwrap();
        let edges = &stats.histogram_edges;
        for ls in &stats.per_level {
            assert_eq!(ls.histogram.iter().sum::<u64>(), ls.n_cells as u64);
            for (bin, &count) in ls.histogram.iter().enumerate() {
                if count > 0 {
                    // Bin must intersect [i_low, i_high].
                    assert!(edges[bin + 1] >= m.device.i_low && edges[bin] <= m.device.i_high);
                }
            }
        }
    }

    #[test]
    fn population_stats_deterministic() {
        let m = mem(SchemeKind::Verify, 100, 2);
        let a = population_stats(&m, 200, 42).unwrap();
        let b = population_stats(&m, 200, 42).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
