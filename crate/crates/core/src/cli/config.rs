use serde::{Deserialize, Serialize};

use crate::emitter::{
    ImpurityParams, DEFAULT_BETA_THRESHOLDS, DEFAULT_CLEARANCE_NM, DEFAULT_EPSILON_THRESHOLD,
    DEFAULT_ETA, DEFAULT_F_NG,
};
use crate::error::{invalid, Result};
use crate::geometry::{DeviceSpec, WaveguideParams};
use crate::source::db_to_linear;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Plane-wave cutoff, `|G|` in units of `2π/a`.
    pub cutoff: f64,
    /// Tracked bands per waveguide k-point; defaults to `2·rows_per_side + 12`.
    pub nbands: Option<usize>,
    /// Number of `k_x` samples over `[0, 1/2]`.
    pub nk: usize,
    pub bulk_points_per_segment: usize,
    pub bulk_nbands: usize,
    /// Field-map spacing; defaults to `a/64`.
    pub grid_spacing_nm: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            cutoff: 4.0,
            nbands: None,
            nk: 201,
            bulk_points_per_segment: 30,
            bulk_nbands: 8,
            grid_spacing_nm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub count: usize,
}

impl SweepRange {
    pub fn wavelengths(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start_nm];
        }
        let step = (self.stop_nm - self.start_nm) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| self.start_nm + step * i as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSettings {
    pub beta_thresholds: Vec<f64>,
    pub epsilon_threshold: f64,
    pub clearance_nm: f64,
    pub f_ng: f64,
    /// Linear extinction; ignored when `eta_db` is given.
    pub eta: f64,
    pub eta_db: Option<f64>,
    pub wavelengths_nm: Vec<f64>,
    pub sweep: Option<SweepRange>,
    /// Wavelength at which `wg-bands` reports the guided crossings.
    pub design_wavelength_nm: Option<f64>,
    pub filter_w1_factor: f64,
    /// Thickness used in the Purcell unit conversion; defaults to `t_nm`.
    pub t_eff_nm: Option<f64>,
    /// Reference index of the Purcell factor; defaults to `n_slab`.
    pub n_ref: Option<f64>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            beta_thresholds: DEFAULT_BETA_THRESHOLDS.to_vec(),
            epsilon_threshold: DEFAULT_EPSILON_THRESHOLD,
            clearance_nm: DEFAULT_CLEARANCE_NM,
            f_ng: DEFAULT_F_NG,
            eta: DEFAULT_ETA,
            eta_db: None,
            wavelengths_nm: Vec::new(),
            sweep: None,
            design_wavelength_nm: None,
            filter_w1_factor: 1.38,
            t_eff_nm: None,
            n_ref: None,
        }
    }
}

impl AnalysisSettings {
    pub fn eta(&self) -> f64 {
        self.eta_db.map_or(self.eta, db_to_linear)
    }

    pub fn impurity(&self) -> ImpurityParams {
        ImpurityParams {
            eta: self.eta(),
            epsilon_threshold: self.epsilon_threshold,
            beta_thresholds: self.beta_thresholds.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    pub dir: Option<String>,
    pub plot: bool,
}

/// Waveguide section of the cascaded device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Section {
    W1,
    Dual,
    Filter,
}

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Section::W1 => "w1",
            Section::Dual => "dual",
            Section::Filter => "filter",
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn nbands(&self) -> usize {
        self.solver
            .nbands
            .unwrap_or(2 * self.device.rows_per_side + 12)
    }

    pub fn grid_spacing_nm(&self) -> f64 {
        self.solver
            .grid_spacing_nm
            .unwrap_or(self.device.a_nm / 64.0)
    }

    /// Geometry parameters of a section. The dual section is the device as
    /// written; W1 keeps only the lattice; the filter widens the dual
    /// section and adds the axis row.
    pub fn section_params(&self, section: Section) -> WaveguideParams {
        let dual = self.device.waveguide_params();
        match section {
            Section::Dual => dual,
            Section::W1 => WaveguideParams {
                w1_factor: 1.0,
                d1: 0.5 * 3f64.sqrt() * self.device.a_nm,
                d2: 0.5 * 3f64.sqrt() * self.device.a_nm,
                center_row: false,
                ..dual
            },
            Section::Filter => WaveguideParams {
                w1_factor: self.analysis.filter_w1_factor,
                center_row: true,
                ..dual
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.device;
        for (name, v) in [
            ("device.a_nm", d.a_nm),
            ("device.t_nm", d.t_nm),
            ("device.wavelength_nm", d.wavelength_nm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        d.slab().validate()?;
        let s = &self.solver;
        if !(s.cutoff > 0.0 && s.cutoff <= 20.0) {
            return Err(invalid(
                "solver.cutoff",
                format!("must lie in (0, 20], got {}", s.cutoff),
            ));
        }
        if s.nk < 2 {
            return Err(invalid("solver.nk", format!("must be >= 2, got {}", s.nk)));
        }
        if s.bulk_points_per_segment < 10 {
            return Err(invalid(
                "solver.bulk_points_per_segment",
                format!("must be >= 10, got {}", s.bulk_points_per_segment),
            ));
        }
        if s.bulk_nbands < 2 {
            return Err(invalid("solver.bulk_nbands", "must be >= 2"));
        }
        if self.nbands() == 0 {
            return Err(invalid("solver.nbands", "must be positive"));
        }
        let spacing = self.grid_spacing_nm();
        if !(spacing > 0.0 && spacing <= 0.25 * d.a_nm) {
            return Err(invalid(
                "solver.grid_spacing_nm",
                format!("must lie in (0, a/4], got {spacing}"),
            ));
        }
        let a = &self.analysis;
        self.analysis.impurity().validate()?;
        if !(a.clearance_nm >= 0.0) {
            return Err(invalid("analysis.clearance_nm", "must be non-negative"));
        }
        if !(a.f_ng >= 0.0) {
            return Err(invalid("analysis.f_ng", "must be non-negative"));
        }
        if !(a.filter_w1_factor >= 1.0) {
            return Err(invalid("analysis.filter_w1_factor", "must be >= 1"));
        }
        for (name, v) in [
            ("analysis.t_eff_nm", a.t_eff_nm),
            ("analysis.n_ref", a.n_ref),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(invalid(name, format!("must be positive, got {v}")));
                }
            }
        }
        if let Some(w) = a.wavelengths_nm.iter().find(|&&w| !(w > 0.0)) {
            return Err(invalid(
                "analysis.wavelengths_nm",
                format!("must be positive, got {w}"),
            ));
        }
        if let Some(r) = &a.sweep {
            if r.count == 0 || !(r.start_nm > 0.0) || !(r.stop_nm >= r.start_nm) {
                return Err(invalid(
                    "analysis.sweep",
                    "needs count >= 1 and 0 < start_nm <= stop_nm",
                ));
            }
        }
        Ok(())
    }
}
