//! Purcell and β-factor maps of a y-oriented point dipole in a waveguide
//! supercell, effective-area masks, area fractions and pump-impurity maps.
//!
//! # Unit bookkeeping
//!
//! A 2D field normalized as `∫ ε|ẽ|² dÃ = 1` with areas in units of `a²`
//! corresponds to a 3D field `|E|² = |ẽ|²/(a² t)` spread uniformly over an
//! effective thickness `t`. Inserting that and `ω = 2πc ω̃/a` into the
//! Purcell factor `F = 3πc² a n_g |E·ŷ|² / (n ω²)` gives
//!
//! `F = (3 / 4π) · (a / t) · n_g · |ẽ_y|² / (n_ref · ω̃²)`,
//!
//! which is what [`purcell_prefactor`] evaluates.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bands::{guided_mode_at_wavelength, BandStructure, Crossing, GapInfo, Parity};
use crate::error::{invalid, Error, Result};
use crate::geometry::SupercellGeometry;
use crate::pwe::{evaluate_field_at, Eigenpair, Grid, ModeField, TeProblem};

pub const DEFAULT_CLEARANCE_NM: f64 = 43.0;
pub const DEFAULT_F_NG: f64 = 0.13;
pub const DEFAULT_ETA: f64 = 1e-5;
pub const DEFAULT_EPSILON_THRESHOLD: f64 = 5e-3;
pub const DEFAULT_BETA_THRESHOLDS: [f64; 3] = [0.85, 0.90, 0.95];

/// Rows kept beyond `|y| = w1` in the map grids.
const MAP_MARGIN_FRACTION: f64 = 0.125;

/// Energy `∫ ε|E|² dA` of a sampled field with areas in units of `a²`.
fn energy_in_cell_units(field: &ModeField, a: f64) -> f64 {
    field.electric_energy() / (a * a)
}

fn check_covers_cell(grid: &Grid, geom: &SupercellGeometry) -> Result<()> {
    let a = geom.cell_vectors[0][0];
    let h = geom.height();
    let wx = grid.nx as f64 * grid.dx;
    let wy = grid.ny as f64 * grid.dy;
    if (wx - a).abs() > 1e-9 * a || (wy - h).abs() > 1e-9 * h {
        return Err(invalid(
            "grid",
            format!("must cover one unit cell ({a} x {h} nm), got {wx} x {wy} nm"),
        ));
    }
    Ok(())
}

/// Scale factor that normalizes a field to unit electric energy per cell.
pub fn normalization_scale(field: &ModeField, geom: &SupercellGeometry) -> Result<f64> {
    check_covers_cell(&field.grid, geom)?;
    let energy = energy_in_cell_units(field, geom.lattice.a);
    if !(energy > f64::MIN_POSITIVE) || !energy.is_finite() {
        return Err(Error::ZeroField);
    }
    Ok(energy.sqrt().recip())
}

/// Returns the field scaled so that `∫_cell ε|E|² dA = 1` (areas in `a²`).
pub fn normalize_mode(field: &ModeField, geom: &SupercellGeometry) -> Result<ModeField> {
    let s = normalization_scale(field, geom)?;
    let mut out = field.clone();
    out.scale(s);
    Ok(out)
}

/// How the 2D model's fields are converted into Purcell factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellUnits {
    pub a_nm: f64,
    /// Thickness over which the 2D mode is assumed to be spread (nm).
    pub t_eff_nm: f64,
    /// Refractive index of the reference homogeneous medium.
    pub n_ref: f64,
}

impl PurcellUnits {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_nm", self.a_nm),
            ("t_eff_nm", self.t_eff_nm),
            ("n_ref", self.n_ref),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `F / |ẽ_y|²` for a unit-energy field: `(3/4π)(a/t)|n_g|/(n_ref ω̃²)`.
pub fn purcell_prefactor(units: &PurcellUnits, n_g: f64, omega: f64) -> f64 {
    3.0 / (4.0 * PI) * (units.a_nm / units.t_eff_nm) * n_g.abs() / (units.n_ref * omega * omega)
}

/// Pointwise Purcell factor of a y dipole into the mode of a normalized field.
pub fn purcell_map(field: &ModeField, n_g: f64, units: &PurcellUnits) -> Result<Vec<f64>> {
    units.validate()?;
    if !n_g.is_finite() {
        return Err(invalid("n_g", "must be finite"));
    }
    if !(field.omega > 0.0) {
        return Err(invalid("omega", "must be positive"));
    }
    let c = purcell_prefactor(units, n_g, field.omega);
    Ok(field.ey.iter().map(|e| c * e.norm_sqr()).collect())
}

/// `β_j = F_j / (F1 + F2 + F_ng)` pointwise.
pub fn beta_map(f1: &[f64], f2: &[f64], f_ng: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if f1.len() != f2.len() {
        return Err(Error::GridMismatch);
    }
    if !(f_ng >= 0.0) {
        return Err(invalid("f_ng", format!("must be non-negative, got {f_ng}")));
    }
    let mut b1 = Vec::with_capacity(f1.len());
    let mut b2 = Vec::with_capacity(f1.len());
    for (&x, &y) in f1.iter().zip(f2) {
        let total = x + y + f_ng;
        if total > 0.0 {
            b1.push(x / total);
            b2.push(y / total);
        } else {
            b1.push(0.0);
            b2.push(0.0);
        }
    }
    Ok((b1, b2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpurityParams {
    /// Linear extinction ratio.
    pub eta: f64,
    pub epsilon_threshold: f64,
    pub beta_thresholds: Vec<f64>,
}

impl Default for ImpurityParams {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            epsilon_threshold: DEFAULT_EPSILON_THRESHOLD,
            beta_thresholds: DEFAULT_BETA_THRESHOLDS.to_vec(),
        }
    }
}

impl ImpurityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(invalid(
                "eta",
                format!("must be positive, got {}", self.eta),
            ));
        }
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.epsilon_threshold) {
            return Err(invalid(
                "epsilon_threshold",
                format!("must lie in (0, 1), got {}", self.epsilon_threshold),
            ));
        }
        if let Some(&b) = self.beta_thresholds.iter().find(|&&b| !in_unit(b)) {
            return Err(invalid(
                "beta_thresholds",
                format!("must lie in (0, 1), got {b}"),
            ));
        }
        Ok(())
    }
}

/// `ε = η/(β1 β2)` pointwise, `+∞` where either coupling vanishes.
pub fn impurity_map(beta1: &[f64], beta2: &[f64], params: &ImpurityParams) -> Result<Vec<f64>> {
    if beta1.len() != beta2.len() {
        return Err(Error::GridMismatch);
    }
    if !(params.eta > 0.0) {
        return Err(invalid("eta", "must be positive"));
    }
    Ok(beta1
        .iter()
        .zip(beta2)
        .map(|(&b1, &b2)| {
            let p = b1 * b2;
            if p > 0.0 {
                params.eta / p
            } else {
                f64::INFINITY
            }
        })
        .collect())
}

/// Whether a point belongs to the effective area: inside the channel
/// `|y| <= w1` and farther than `clearance` from every hole edge.
pub fn in_effective_area(
    geom: &SupercellGeometry,
    w1: f64,
    clearance: f64,
    x: f64,
    y: f64,
) -> bool {
    y.abs() <= w1 && geom.distance_to_hole_edge(x, y) > clearance
}

fn channel_w1(geom: &SupercellGeometry) -> Result<f64> {
    geom.channel
        .as_ref()
        .map(|c| c.w1)
        .ok_or_else(|| invalid("geometry", "effective area needs a waveguide channel"))
}

pub fn effective_area_mask(
    geom: &SupercellGeometry,
    grid: &Grid,
    clearance: f64,
) -> Result<Vec<bool>> {
    if !(clearance >= 0.0) {
        return Err(invalid(
            "clearance",
            format!("must be non-negative, got {clearance}"),
        ));
    }
    let w1 = channel_w1(geom)?;
    let mut mask = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        let y = grid.y(j);
        for i in 0..grid.nx {
            mask.push(in_effective_area(geom, w1, clearance, grid.x(i), y));
        }
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    Ok(mask)
}

fn masked_count(mask: &[bool]) -> Result<usize> {
    let n = mask.iter().filter(|&&m| m).count();
    if n == 0 {
        Err(Error::EmptyMask)
    } else {
        Ok(n)
    }
}

/// Fraction of the mask where `map >= threshold`. Grid cells are uniform,
/// so the cell weighting reduces to counting.
pub fn area_fraction(map: &[f64], mask: &[bool], threshold: f64) -> Result<f64> {
    if map.len() != mask.len() {
        return Err(Error::GridMismatch);
    }
    let total = masked_count(mask)?;
    let hits = map
        .iter()
        .zip(mask)
        .filter(|(&v, &m)| m && v >= threshold)
        .count();
    Ok(hits as f64 / total as f64)
}

/// Fraction of the mask where `β1 >= beta0` and `ε <= eps0`.
pub fn working_area(
    beta1: &[f64],
    epsilon: &[f64],
    beta0: f64,
    eps0: f64,
    mask: &[bool],
) -> Result<f64> {
    if beta1.len() != mask.len() || epsilon.len() != mask.len() {
        return Err(Error::GridMismatch);
    }
    let total = masked_count(mask)?;
    let hits = (0..mask.len())
        .filter(|&p| mask[p] && beta1[p] >= beta0 && epsilon[p] <= eps0)
        .count();
    Ok(hits as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSettings {
    pub grid_spacing_nm: f64,
    pub clearance_nm: f64,
    pub f_ng: f64,
    pub units: PurcellUnits,
    pub impurity: ImpurityParams,
}

impl MapSettings {
    pub fn new(geom: &SupercellGeometry, t_eff_nm: f64, n_ref: f64) -> Self {
        let a = geom.lattice.a;
        Self {
            grid_spacing_nm: a / 64.0,
            clearance_nm: DEFAULT_CLEARANCE_NM,
            f_ng: DEFAULT_F_NG,
            units: PurcellUnits {
                a_nm: a,
                t_eff_nm,
                n_ref,
            },
            impurity: ImpurityParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_spacing_nm > 0.0) {
            return Err(invalid("grid_spacing_nm", "must be positive"));
        }
        if !(self.clearance_nm >= 0.0) {
            return Err(invalid("clearance_nm", "must be non-negative"));
        }
        if !(self.f_ng >= 0.0) {
            return Err(invalid("f_ng", "must be non-negative"));
        }
        self.units.validate()?;
        self.impurity.validate()
    }
}

/// One guided mode entering the maps, with everything needed to evaluate
/// its Purcell factor anywhere in the cell.
#[derive(Debug, Clone)]
pub struct MapMode {
    pub crossing: Crossing,
    pub pair: Eigenpair,
    /// Multiplies the raw reconstructed field to give unit cell energy.
    pub scale: f64,
    /// `F = prefactor · |scale · Ey|²`.
    pub prefactor: f64,
}

impl MapMode {
    pub fn k(&self) -> [f64; 2] {
        [self.crossing.k, 0.0]
    }

    /// Purcell factor at arbitrary points (nm), by direct plane-wave sums.
    pub fn purcell_at(&self, problem: &TeProblem, points: &[[f64; 2]]) -> Vec<f64> {
        let s2 = self.scale * self.scale;
        evaluate_field_at(&problem.geom, &problem.basis, self.k(), &self.pair, points)
            .iter()
            .map(|f| self.prefactor * s2 * f[2].norm_sqr())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct EmitterMaps {
    /// Rows of the cell with `|y| <= w1 + margin`.
    pub grid: Grid,
    pub omega: f64,
    pub wavelength_nm: f64,
    pub even: MapMode,
    pub odd: Option<MapMode>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub mask: Vec<bool>,
    pub f_ng: f64,
    pub settings: MapSettings,
}

fn strongest(crossings: &[Crossing], parity: Parity) -> Option<Crossing> {
    crossings
        .iter()
        .filter(|c| c.parity == parity && c.ng.is_finite())
        .fold(None, |acc: Option<Crossing>, &c| match acc {
            Some(a) if a.ng.abs() >= c.ng.abs() => Some(a),
            _ => Some(c),
        })
}

fn map_mode(
    problem: &TeProblem,
    full: &Grid,
    crossing: Crossing,
    nsolve: usize,
    units: &PurcellUnits,
) -> Result<(MapMode, ModeField)> {
    let k = [crossing.k, 0.0];
    let mut pairs = problem.solve(k, nsolve)?;
    let pair = pairs.swap_remove(crossing.state_index);
    let raw = problem.field(k, crossing.band, &pair, full);
    let scale = normalization_scale(&raw, &problem.geom)?;
    let mut field = raw;
    field.scale(scale);
    let prefactor = purcell_prefactor(units, crossing.ng, pair.omega);
    Ok((
        MapMode {
            crossing,
            pair,
            scale,
            prefactor,
        },
        field,
    ))
}

impl EmitterMaps {
    /// Maps at a target frequency. `F1` comes from the even guided
    /// crossing with the largest `|n_g|`, `F2` from the strongest odd one
    /// (zero when no odd mode is guided there).
    pub fn at_frequency(
        problem: &TeProblem,
        bands: &BandStructure,
        gap: &GapInfo,
        omega: f64,
        settings: &MapSettings,
    ) -> Result<Self> {
        settings.validate()?;
        let geom = &problem.geom;
        let w1 = channel_w1(geom)?;
        let crossings = guided_mode_at_wavelength(problem, bands, gap, omega)?;
        let even = strongest(&crossings, Parity::Even).ok_or(Error::NoneFound { omega })?;
        let odd = strongest(&crossings, Parity::Odd);
        let nsolve = bands.spectra.iter().map(Vec::len).min().unwrap_or(0);

        let full = Grid::cell(geom, settings.grid_spacing_nm);
        let half = w1 + MAP_MARGIN_FRACTION * geom.lattice.a;
        let units = &settings.units;

        let (even, field1) = map_mode(problem, &full, even, nsolve, units)?;
        let field1 = field1.cropped(half);
        let f1 = purcell_map(&field1, even.crossing.ng, units)?;
        let (odd, f2) = match odd {
            Some(c) => {
                let (m, field2) = map_mode(problem, &full, c, nsolve, units)?;
                let f2 = purcell_map(&field2.cropped(half), c.ng, units)?;
                (Some(m), f2)
            }
            None => (None, vec![0.0; f1.len()]),
        };
        let grid = field1.grid.clone();
        let (beta1, beta2) = beta_map(&f1, &f2, settings.f_ng)?;
        let epsilon = impurity_map(&beta1, &beta2, &settings.impurity)?;
        let mask = effective_area_mask(geom, &grid, settings.clearance_nm)?;
        Ok(Self {
            grid,
            omega,
            wavelength_nm: geom.lattice.a / omega,
            even,
            odd,
            f1,
            f2,
            beta1,
            beta2,
            epsilon,
            mask,
            f_ng: settings.f_ng,
            settings: settings.clone(),
        })
    }

    /// `(F1, F2)` at arbitrary points, from the plane-wave sums.
    pub fn purcell_at(&self, problem: &TeProblem, points: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
        let f1 = self.even.purcell_at(problem, points);
        let f2 = match &self.odd {
            Some(m) => m.purcell_at(problem, points),
            None => vec![0.0; points.len()],
        };
        (f1, f2)
    }

    /// `(x_nm, F1, F2)` along the waveguide axis `y = 0`.
    pub fn axis_profile(&self, problem: &TeProblem) -> Vec<(f64, f64, f64)> {
        let points: Vec<[f64; 2]> = (0..self.grid.nx).map(|i| [self.grid.x(i), 0.0]).collect();
        let (f1, f2) = self.purcell_at(problem, &points);
        points
            .iter()
            .zip(f1.iter().zip(&f2))
            .map(|(p, (&a, &b))| (p[0], a, b))
            .collect()
    }

    pub fn fraction(&self, threshold: f64) -> Result<f64> {
        area_fraction(&self.beta1, &self.mask, threshold)
    }

    pub fn working_fraction(&self, beta0: f64) -> Result<f64> {
        working_area(
            &self.beta1,
            &self.epsilon,
            beta0,
            self.settings.impurity.epsilon_threshold,
            &self.mask,
        )
    }

    pub fn summary(&self) -> Result<MapSummary> {
        let mut fractions = BTreeMap::new();
        for &t in &self.settings.impurity.beta_thresholds {
            fractions.insert(format!("{t:.2}"), self.fraction(t)?);
        }
        let beta0 = self
            .settings
            .impurity
            .beta_thresholds
            .iter()
            .copied()
            .fold(f64::MIN, f64::max);
        let beta1_max = self.beta1.iter().copied().fold(0.0, f64::max);
        let mask_points = self.mask.iter().filter(|&&m| m).count();
        Ok(MapSummary {
            wavelength_nm: self.wavelength_nm,
            omega: self.omega,
            ng1: self.even.crossing.ng.abs(),
            ng2: self.odd.as_ref().map(|m| m.crossing.ng.abs()),
            beta1_max,
            fractions,
            working_beta0: beta0,
            working_fraction: self.working_fraction(beta0)?,
            mask_area_nm2: mask_points as f64 * self.grid.cell_area(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub wavelength_nm: f64,
    pub omega: f64,
    pub ng1: f64,
    pub ng2: Option<f64>,
    pub beta1_max: f64,
    /// β1 area fractions keyed by threshold.
    pub fractions: BTreeMap<String, f64>,
    pub working_beta0: f64,
    pub working_fraction: f64,
    pub mask_area_nm2: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_bulk_cell, build_waveguide_cell, LatticeSpec, WaveguideParams};

    #[test]
    fn beta_examples() {
        let (b1, b2) = beta_map(&[10.0], &[0.0], 0.0).unwrap();
        assert_eq!((b1[0], b2[0]), (1.0, 0.0));
        let (b1, b2) = beta_map(&[0.5], &[0.5], 0.5).unwrap();
        assert!((b1[0] - 1.0 / 3.0).abs() < 1e-15 && (b2[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            beta_map(&[1.0], &[], 0.1),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn impurity_examples() {
        let p = ImpurityParams::default();
        assert!((impurity_map(&[1.0], &[1.0], &p).unwrap()[0] - 1e-5).abs() < 1e-20);
        assert_eq!(impurity_map(&[0.9], &[0.0], &p).unwrap()[0], f64::INFINITY);
    }

    #[test]
    fn fraction_limits() {
        let map = [0.1, 0.5, 0.9, 2.0];
        let mask = [true, true, true, false];
        assert_eq!(area_fraction(&map, &mask, 0.0).unwrap(), 1.0);
        assert_eq!(area_fraction(&map, &mask, 1.0).unwrap(), 0.0);
        assert!((area_fraction(&map, &mask, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            area_fraction(&map, &[false; 4], 0.5),
            Err(Error::EmptyMask)
        ));
        let eps = [1e-3, 1e-2, 1e-3, 0.0];
        assert!((working_area(&map, &eps, 0.5, 5e-3, &mask).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(working_area(&map, &eps, 0.0, 0.0, &mask).unwrap(), 0.0);
    }

    fn dual() -> SupercellGeometry {
        let lat = LatticeSpec::new(240.0, 64.0, 3.0f64.powi(2), 1.0).unwrap();
        build_waveguide_cell(lat, WaveguideParams::dual_mode(&lat)).unwrap()
    }

    #[test]
    fn zero_clearance_mask_is_channel_minus_holes() {
        let geom = dual();
        let grid = Grid::cell(&geom, 5.0);
        let mask = effective_area_mask(&geom, &grid, 0.0).unwrap();
        let w1 = geom.channel.as_ref().unwrap().w1;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = (grid.x(i), grid.y(j));
                let expect = y.abs() <= w1 && geom.permittivity_at(x, y) == geom.lattice.eps_bg;
                assert_eq!(mask[j * grid.nx + i], expect, "({x}, {y})");
            }
        }
    }

    #[test]
    fn mask_empties_beyond_the_corner_distance() {
        let geom = dual();
        let grid = Grid::cell(&geom, 2.0);
        let lat = geom.lattice;
        let w1 = geom.channel.as_ref().unwrap().w1;
        // The point of the channel farthest from every hole is on the axis,
        // midway between the first-row holes above and below it.
        let reach = (0.25 * lat.a * lat.a + w1 * w1).sqrt() - lat.r0;
        assert!(effective_area_mask(&geom, &grid, reach - 2.0).is_ok());
        assert!(matches!(
            effective_area_mask(&geom, &grid, reach + 0.1),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn bulk_cell_has_no_channel() {
        let lat = LatticeSpec::new(240.0, 64.0, 9.0, 1.0).unwrap();
        let geom = build_bulk_cell(lat).unwrap();
        let grid = Grid::cell(&geom, 10.0);
        assert!(effective_area_mask(&geom, &grid, 43.0).is_err());
    }

    fn homogeneous_mode(n: f64) -> (SupercellGeometry, ModeField) {
        let lat = LatticeSpec::new(240.0, 0.0, n * n, 1.0).unwrap();
        let geom = build_bulk_cell(lat).unwrap();
        let p = TeProblem::new(&geom, 2.0).unwrap();
        let pairs = p.solve([0.3, 0.0], 1).unwrap();
        let field = p.field([0.3, 0.0], 0, &pairs[0], &Grid::cell(&geom, 240.0 / 32.0));
        (geom, field)
    }

    #[test]
    fn normalized_plane_wave_amplitude() {
        let n = 3.475;
        let (geom, field) = homogeneous_mode(n);
        let f = normalize_mode(&field, &geom).unwrap();
        let area = geom.area() / (240.0 * 240.0);
        let expect = 1.0 / (n * area.sqrt());
        for p in 0..f.grid.len() {
            let e = (f.ex[p].norm_sqr() + f.ey[p].norm_sqr()).sqrt();
            assert!((e - expect).abs() < 1e-9 * expect);
        }
        let mut scaled = field.clone();
        scaled.scale(7.0);
        let g = normalize_mode(&scaled, &geom).unwrap();
        for p in 0..f.grid.len() {
            assert!((g.ey[p] - f.ey[p]).norm() < 1e-12 * expect);
        }
    }

    #[test]
    fn purcell_matches_homogeneous_benchmark_in_physical_units() {
        // Independent evaluation in nm: a y-polarized plane wave filling a
        // cell of area A and thickness t has |E|² = 1/(n² A t), and the
        // Purcell factor of a mode with group index n_g is
        // 3 λ² n_g |E|² a / (4π n_ref).
        let n = 3.475;
        let (geom, field) = homogeneous_mode(n);
        let f = normalize_mode(&field, &geom).unwrap();
        let units = PurcellUnits {
            a_nm: 240.0,
            t_eff_nm: 175.0,
            n_ref: 3.475,
        };
        let map = purcell_map(&f, n, &units).unwrap();
        let lambda = 240.0 / f.omega;
        let e2 = 1.0 / (n * n * geom.area() * units.t_eff_nm);
        let expect = 3.0 * lambda * lambda * n * e2 * 240.0 / (4.0 * PI * units.n_ref);
        for &v in &map {
            assert!((v - expect).abs() < 1e-8 * expect, "{v} vs {expect}");
        }
        let doubled = purcell_map(&f, 2.0 * n, &units).unwrap();
        assert!(doubled
            .iter()
            .zip(&map)
            .all(|(d, m)| (d - 2.0 * m).abs() < 1e-12 * m));
    }

    #[test]
    fn normalization_requires_full_cell() {
        let (geom, field) = homogeneous_mode(2.0);
        let cropped = field.cropped(20.0);
        assert!(normalize_mode(&cropped, &geom).is_err());
        let mut zero = field.clone();
        zero.scale(0.0);
        assert!(matches!(
            normalize_mode(&zero, &geom),
            Err(Error::ZeroField)
        ));
    }
}
