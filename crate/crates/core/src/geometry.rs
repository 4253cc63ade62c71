//! Supercell descriptions of the bulk crystal and the waveguide sections.
//!
//! Lengths are stored in nanometres. The solver works in units of the
//! lattice constant `a`, so every length is divided by `a` before it reaches
//! the plane-wave machinery; reciprocal vectors are expressed in units of
//! `2π/a`.
//!
//! The waveguide supercell is one lattice constant long in `x` and holds
//! `rows_per_side` rows of holes on each side of the line defect. Its second
//! lattice vector is `(a/2, L)` rather than `(0, L)`: with an odd number of
//! row positions across the period, the half-lattice shift keeps the outer
//! rows in triangular registry across the periodic seam, so the seam looks
//! like bulk crystal instead of a second line defect.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Lattice constant (nm).
    pub a: f64,
    /// Hole radius (nm). Zero is accepted and builds a homogeneous slab.
    pub r0: f64,
    /// Relative permittivity of the (effective) slab material.
    pub eps_bg: f64,
    /// Relative permittivity inside the holes.
    pub eps_hole: f64,
}

impl LatticeSpec {
    pub fn new(a: f64, r0: f64, eps_bg: f64, eps_hole: f64) -> Result<Self> {
        let spec = Self {
            a,
            r0,
            eps_bg,
            eps_hole,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid("a", format!("must be positive, got {}", self.a)));
        }
        if !(self.r0 >= 0.0 && self.r0 < 0.5 * self.a) {
            return Err(invalid(
                "r0",
                format!("must lie in [0, a/2), got {} for a = {}", self.r0, self.a),
            ));
        }
        if !(self.eps_hole >= 1.0 && self.eps_bg > self.eps_hole) {
            return Err(invalid(
                "eps_bg",
                format!(
                    "need eps_bg > eps_hole >= 1, got eps_bg = {}, eps_hole = {}",
                    self.eps_bg, self.eps_hole
                ),
            ));
        }
        Ok(())
    }

    /// Row spacing of the triangular lattice, `a√3/2`.
    pub fn w0(&self) -> f64 {
        0.5 * SQRT3 * self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideParams {
    /// Half-width of the defect channel in units of `w0`.
    pub w1_factor: f64,
    /// Spacing between the first and second hole rows (nm).
    pub d1: f64,
    /// Spacing between the second and third hole rows (nm).
    pub d2: f64,
    /// Mode-filter variant: an extra hole row on the waveguide axis.
    pub center_row: bool,
    pub rows_per_side: usize,
}

impl WaveguideParams {
    pub fn w1(lattice: &LatticeSpec) -> Self {
        let w0 = lattice.w0();
        Self {
            w1_factor: 1.0,
            d1: w0,
            d2: w0,
            center_row: false,
            rows_per_side: 7,
        }
    }

    /// The dual-mode design: `w1 = 1.07 w0`, `d1 = w0 - 60 nm`, `d2 = w0 - 40 nm`.
    pub fn dual_mode(lattice: &LatticeSpec) -> Self {
        let w0 = lattice.w0();
        Self {
            w1_factor: 1.07,
            d1: w0 - 60.0,
            d2: w0 - 40.0,
            center_row: false,
            rows_per_side: 7,
        }
    }

    /// The even-mode filter: the dual-mode cell widened to `w1 = 1.38 w0`
    /// with a row of `r0` holes on the axis.
    pub fn mode_filter(lattice: &LatticeSpec) -> Self {
        Self {
            w1_factor: 1.38,
            center_row: true,
            ..Self::dual_mode(lattice)
        }
    }

    pub fn validate(&self, lattice: &LatticeSpec) -> Result<()> {
        if !(self.w1_factor >= 1.0) {
            return Err(invalid(
                "w1_factor",
                format!("must be >= 1, got {}", self.w1_factor),
            ));
        }
        if !(self.d1 > lattice.r0) {
            return Err(invalid("d1", format!("must exceed r0, got {}", self.d1)));
        }
        if !(self.d2 > lattice.r0) {
            return Err(invalid("d2", format!("must exceed r0, got {}", self.d2)));
        }
        if self.rows_per_side < 5 {
            return Err(invalid(
                "rows_per_side",
                format!("must be >= 5, got {}", self.rows_per_side),
            ));
        }
        Ok(())
    }

    /// Centre `y` coordinates of the hole rows above the axis, innermost first.
    pub fn row_offsets(&self, lattice: &LatticeSpec) -> Vec<f64> {
        let w0 = lattice.w0();
        let first = self.w1_factor * w0;
        let mut rows = vec![first, first + self.d1, first + self.d1 + self.d2];
        while rows.len() < self.rows_per_side {
            let last = *rows.last().expect("three seeded rows");
            rows.push(last + w0);
        }
        rows.truncate(self.rows_per_side);
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

/// Channel layout of a waveguide supercell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelLayout {
    /// Distance from the axis to the first hole row (nm).
    pub w1: f64,
    pub params: WaveguideParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupercellGeometry {
    /// In-plane lattice vectors (nm). The first is always along `x`.
    pub cell_vectors: [[f64; 2]; 2],
    pub holes: Vec<Hole>,
    pub lattice: LatticeSpec,
    pub symmetry_axis: bool,
    pub channel: Option<ChannelLayout>,
}

/// Reciprocal-lattice vector `m b1 + n b2`, components in units of `2π/a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalVector {
    pub m: i32,
    pub n: i32,
    pub g: [f64; 2],
}

impl ReciprocalVector {
    pub fn norm(&self) -> f64 {
        self.g[0].hypot(self.g[1])
    }
}

pub fn build_bulk_cell(lattice: LatticeSpec) -> Result<SupercellGeometry> {
    lattice.validate()?;
    let a = lattice.a;
    let holes = if lattice.r0 > 0.0 {
        vec![Hole {
            x: 0.0,
            y: 0.0,
            r: lattice.r0,
        }]
    } else {
        Vec::new()
    };
    Ok(SupercellGeometry {
        cell_vectors: [[a, 0.0], [0.5 * a, 0.5 * SQRT3 * a]],
        holes,
        lattice,
        symmetry_axis: true,
        channel: None,
    })
}

pub fn build_waveguide_cell(
    lattice: LatticeSpec,
    params: WaveguideParams,
) -> Result<SupercellGeometry> {
    lattice.validate()?;
    params.validate(&lattice)?;
    let a = lattice.a;
    let rows = params.row_offsets(&lattice);
    let w1 = rows[0];
    let outer = *rows.last().expect("at least five rows");
    let height = 2.0 * outer + lattice.w0();

    let mut holes = Vec::with_capacity(2 * rows.len() + 1);
    if lattice.r0 > 0.0 {
        if params.center_row {
            // The axis row takes the place of the missing lattice row, so it
            // is staggered by a/2 against the first rows on either side.
            holes.push(Hole {
                x: 0.0,
                y: 0.0,
                r: lattice.r0,
            });
        }
        for (i, &y) in rows.iter().enumerate() {
            // Row n (1-based) sits at x = n·a/2 mod a.
            let x = if i % 2 == 0 { 0.5 * a } else { 0.0 };
            holes.push(Hole {
                x,
                y,
                r: lattice.r0,
            });
            holes.push(Hole {
                x,
                y: -y,
                r: lattice.r0,
            });
        }
    }

    let geom = SupercellGeometry {
        cell_vectors: [[a, 0.0], [0.5 * a, height]],
        holes,
        lattice,
        symmetry_axis: true,
        channel: Some(ChannelLayout { w1, params }),
    };
    geom.check_overlaps()?;
    Ok(geom)
}

impl SupercellGeometry {
    pub fn area(&self) -> f64 {
        let [u, v] = self.cell_vectors;
        (u[0] * v[1] - u[1] * v[0]).abs()
    }

    /// Height of the rectangular fundamental domain `[0, a) × [-H/2, H/2)`.
    pub fn height(&self) -> f64 {
        self.cell_vectors[1][1]
    }

    pub fn fill_fraction(&self) -> f64 {
        let holes: f64 = self
            .holes
            .iter()
            .map(|h| std::f64::consts::PI * h.r * h.r)
            .fold(0.0, |acc, x| acc + x);
        holes / self.area()
    }

    /// Copy with every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.cell_vectors.iter_mut() {
            v[0] *= s;
            v[1] *= s;
        }
        for h in out.holes.iter_mut() {
            h.x *= s;
            h.y *= s;
            h.r *= s;
        }
        out.lattice.a *= s;
        out.lattice.r0 *= s;
        if let Some(ch) = out.channel.as_mut() {
            ch.w1 *= s;
            ch.params.d1 *= s;
            ch.params.d2 *= s;
        }
        out
    }

    /// Copy reflected through `y = 0`.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for h in out.holes.iter_mut() {
            h.y = -h.y;
        }
        // (a2x, -a2y) is a lattice vector iff (a2x, a2y) - (2 a2x / a1x) a1 is.
        let [u, v] = out.cell_vectors;
        out.cell_vectors = [u, [v[0], -v[1]]];
        out
    }

    fn image_offsets(&self) -> [[f64; 2]; 9] {
        let [u, v] = self.cell_vectors;
        let mut out = [[0.0; 2]; 9];
        let mut idx = 0;
        for p in -1..=1 {
            for q in -1..=1 {
                let (p, q) = (p as f64, q as f64);
                out[idx] = [p * u[0] + q * v[0], p * u[1] + q * v[1]];
                idx += 1;
            }
        }
        out
    }

    /// Smallest distance from `(x, y)` to the centre of `hole`, periodic images
    /// included. Assumes the point and the hole live in the same fundamental
    /// domain.
    fn image_distance(&self, offsets: &[[f64; 2]; 9], hole: &Hole, x: f64, y: f64) -> f64 {
        offsets
            .iter()
            .map(|o| (x - hole.x - o[0]).hypot(y - hole.y - o[1]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_overlaps(&self) -> Result<()> {
        let offsets = self.image_offsets();
        for (i, hi) in self.holes.iter().enumerate() {
            for (j, hj) in self.holes.iter().enumerate().skip(i) {
                for o in offsets.iter() {
                    if i == j && o[0] == 0.0 && o[1] == 0.0 {
                        continue;
                    }
                    let d = (hi.x - hj.x - o[0]).hypot(hi.y - hj.y - o[1]);
                    if d < hi.r + hj.r {
                        return Err(Error::OverlappingHoles {
                            first: i,
                            second: j,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Relative permittivity at a point of the fundamental domain.
    pub fn permittivity_at(&self, x: f64, y: f64) -> f64 {
        let offsets = self.image_offsets();
        let inside = self
            .holes
            .iter()
            .any(|h| self.image_distance(&offsets, h, x, y) < h.r);
        if inside {
            self.lattice.eps_hole
        } else {
            self.lattice.eps_bg
        }
    }

    /// Distance from a point to the nearest hole edge; negative inside a hole.
    pub fn distance_to_hole_edge(&self, x: f64, y: f64) -> f64 {
        let offsets = self.image_offsets();
        self.holes
            .iter()
            .map(|h| self.image_distance(&offsets, h, x, y) - h.r)
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the hole list maps onto itself under `y → -y`, modulo lattice
    /// translations.
    pub fn is_mirror_symmetric(&self, tol: f64) -> bool {
        let offsets = self.image_offsets();
        self.holes.iter().all(|h| {
            self.holes.iter().any(|k| {
                (h.r - k.r).abs() <= tol
                    && offsets.iter().any(|o| {
                        (h.x - k.x - o[0]).abs() <= tol && (-h.y - k.y - o[1]).abs() <= tol
                    })
            })
        })
    }

    /// Reciprocal basis vectors in units of `2π/a`, satisfying `b_i · a_j = δ_ij`
    /// with the lattice vectors measured in units of `a`.
    pub fn reciprocal_basis(&self) -> [[f64; 2]; 2] {
        let a = self.lattice.a;
        let [u, v] = self.cell_vectors;
        let (ux, uy, vx, vy) = (u[0] / a, u[1] / a, v[0] / a, v[1] / a);
        let det = ux * vy - uy * vx;
        [[vy / det, -vx / det], [-uy / det, ux / det]]
    }

    pub fn reciprocal_vector(&self, m: i32, n: i32) -> ReciprocalVector {
        let [b1, b2] = self.reciprocal_basis();
        let (mf, nf) = (m as f64, n as f64);
        ReciprocalVector {
            m,
            n,
            g: [mf * b1[0] + nf * b2[0], mf * b1[1] + nf * b2[1]],
        }
    }

    /// Integer indices of the mirror image `(Gx, -Gy)` of `m b1 + n b2`.
    pub fn mirror_indices(&self, m: i32, n: i32) -> (i32, i32) {
        let r = self.reciprocal_vector(m, n);
        let mirrored = [r.g[0], -r.g[1]];
        // G · a_j gives the integer coefficient along b_j.
        let a = self.lattice.a;
        let [u, v] = self.cell_vectors;
        let mm = mirrored[0] * u[0] / a + mirrored[1] * u[1] / a;
        let nn = mirrored[0] * v[0] / a + mirrored[1] * v[1] / a;
        (mm.round() as i32, nn.round() as i32)
    }

    /// Fourier coefficient `ε(G) = (1/A) ∫ ε(r) e^{-iG·r} dr` at a wavevector
    /// given in rad/nm.
    pub fn epsilon_at_wavevector(&self, g: [f64; 2]) -> c64 {
        let lat = &self.lattice;
        let gnorm = g[0].hypot(g[1]);
        let area = self.area();
        let contrast = lat.eps_hole - lat.eps_bg;
        let mut terms: Vec<c64> = self
            .holes
            .iter()
            .map(|h| {
                let fill = std::f64::consts::PI * h.r * h.r / area;
                let x = gnorm * h.r;
                let shape = if x < 1e-8 { 1.0 } else { 2.0 * libm::j1(x) / x };
                let phase = -(g[0] * h.x + g[1] * h.y);
                c64::new(phase.cos(), phase.sin()) * (contrast * fill * shape)
            })
            .collect();
        // A fixed summation order over the term values makes the result
        // independent of hole ordering, so mirror images agree bit for bit.
        terms.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
        let base = if gnorm == 0.0 { lat.eps_bg } else { 0.0 };
        terms
            .into_iter()
            .fold(c64::new(base, 0.0), |acc, t| acc + t)
    }

    /// `ε(G)` for a reciprocal vector in units of `2π/a`.
    pub fn epsilon_coefficient(&self, g: [f64; 2]) -> c64 {
        let scale = 2.0 * std::f64::consts::PI / self.lattice.a;
        self.epsilon_at_wavevector([g[0] * scale, g[1] * scale])
    }
}

/// The matrix `[ε(G_i - G_j)]` over a list of reciprocal vectors.
pub fn epsilon_fourier(geom: &SupercellGeometry, gvecs: &[ReciprocalVector]) -> Mat<c64> {
    let n = gvecs.len();
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    // Differences of lattice vectors are lattice vectors: tabulate ε by
    // integer index difference instead of evaluating N² Bessel functions.
    let (mut mlo, mut mhi, mut nlo, mut nhi) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
    for g in gvecs {
        mlo = mlo.min(g.m);
        mhi = mhi.max(g.m);
        nlo = nlo.min(g.n);
        nhi = nhi.max(g.n);
    }
    let dm = mhi - mlo;
    let dn = nhi - nlo;
    let width = (2 * dn + 1) as usize;
    let mut table = vec![c64::new(0.0, 0.0); ((2 * dm + 1) as usize) * width];
    for m in -dm..=dm {
        for nn in -dn..=dn {
            let r = geom.reciprocal_vector(m, nn);
            table[((m + dm) as usize) * width + (nn + dn) as usize] = geom.epsilon_coefficient(r.g);
        }
    }
    Mat::from_fn(n, n, |i, j| {
        let m = gvecs[i].m - gvecs[j].m;
        let nn = gvecs[i].n - gvecs[j].n;
        table[((m + dm) as usize) * width + (nn + dn) as usize]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabSpec {
    pub n_core: f64,
    pub n_clad: f64,
    /// Core thickness (nm).
    pub thickness: f64,
    /// Vacuum wavelength (nm).
    pub wavelength: f64,
}

impl SlabSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_clad >= 1.0 && self.n_core > self.n_clad) {
            return Err(invalid(
                "n_core",
                format!(
                    "need n_core > n_clad >= 1, got {} and {}",
                    self.n_core, self.n_clad
                ),
            ));
        }
        if !(self.thickness > 0.0) {
            return Err(invalid("thickness", "must be positive"));
        }
        if !(self.wavelength > 0.0) {
            return Err(invalid("wavelength", "must be positive"));
        }
        Ok(())
    }

    /// Fundamental-TE residual `atan(γ/κ) - κt/2`; increasing in `n_eff`,
    /// zero at the guided mode.
    pub fn te_residual(&self, n_eff: f64) -> f64 {
        let k0 = 2.0 * std::f64::consts::PI / self.wavelength;
        let kappa = k0 * (self.n_core * self.n_core - n_eff * n_eff).max(0.0).sqrt();
        let gamma = k0 * (n_eff * n_eff - self.n_clad * self.n_clad).max(0.0).sqrt();
        gamma.atan2(kappa) - 0.5 * kappa * self.thickness
    }
}

/// Effective index of the fundamental TE mode of a symmetric slab, by bisection.
pub fn slab_te_effective_index(spec: SlabSpec) -> Result<f64> {
    spec.validate()?;
    let (mut lo, mut hi) = (spec.n_clad, spec.n_core);
    let (flo, fhi) = (spec.te_residual(lo), spec.te_residual(hi));
    if !(flo <= 0.0 && fhi >= 0.0) || flo == fhi {
        return Err(Error::NoGuidedMode);
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if spec.te_residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Device description as ingested from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub a_nm: f64,
    pub r0_nm: f64,
    /// Refractive index of the membrane material.
    pub n_slab: f64,
    pub t_nm: f64,
    /// Wavelength at which the membrane is reduced to an effective index.
    pub wavelength_nm: f64,
    #[serde(default = "default_w1_factor")]
    pub w1_factor: f64,
    /// Defaults to `w0` when absent.
    #[serde(default)]
    pub d1_nm: Option<f64>,
    #[serde(default)]
    pub d2_nm: Option<f64>,
    #[serde(default)]
    pub center_row: bool,
    #[serde(default = "default_rows")]
    pub rows_per_side: usize,
}

fn default_w1_factor() -> f64 {
    1.0
}

fn default_rows() -> usize {
    7
}

impl DeviceSpec {
    /// The membrane parameters used throughout the design: `a = 240 nm`,
    /// `r0 = 64 nm`, `t = 175 nm`, `n = 3.475`, reduced at 930 nm, with the
    /// dual-mode row shifts.
    pub fn reference_dual_mode() -> Self {
        let w0 = 0.5 * SQRT3 * 240.0;
        Self {
            a_nm: 240.0,
            r0_nm: 64.0,
            n_slab: 3.475,
            t_nm: 175.0,
            wavelength_nm: 930.0,
            w1_factor: 1.07,
            d1_nm: Some(w0 - 60.0),
            d2_nm: Some(w0 - 40.0),
            center_row: false,
            rows_per_side: 7,
        }
    }

    pub fn slab(&self) -> SlabSpec {
        SlabSpec {
            n_core: self.n_slab,
            n_clad: 1.0,
            thickness: self.t_nm,
            wavelength: self.wavelength_nm,
        }
    }

    pub fn effective_index(&self) -> Result<f64> {
        slab_te_effective_index(self.slab())
    }

    pub fn lattice(&self) -> Result<LatticeSpec> {
        let n_eff = self.effective_index()?;
        LatticeSpec::new(self.a_nm, self.r0_nm, n_eff * n_eff, 1.0)
    }

    pub fn waveguide_params(&self) -> WaveguideParams {
        let w0 = 0.5 * SQRT3 * self.a_nm;
        WaveguideParams {
            w1_factor: self.w1_factor,
            d1: self.d1_nm.unwrap_or(w0),
            d2: self.d2_nm.unwrap_or(w0),
            center_row: self.center_row,
            rows_per_side: self.rows_per_side,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> LatticeSpec {
        LatticeSpec::new(240.0, 64.0, 2.9f64.powi(2), 1.0).unwrap()
    }

    /// Pole-free form of the symmetric-slab TE condition; its sign changes
    /// mark every guided mode, the fundamental being the one at largest n.
    fn pole_free_residual(spec: &SlabSpec, n: f64) -> f64 {
        let k0 = 2.0 * std::f64::consts::PI / spec.wavelength;
        let kappa = k0 * (spec.n_core.powi(2) - n * n).max(0.0).sqrt();
        let gamma = k0 * (n * n - spec.n_clad.powi(2)).max(0.0).sqrt();
        let half = 0.5 * kappa * spec.thickness;
        kappa * half.sin() - gamma * half.cos()
    }

    #[test]
    fn slab_index_matches_dense_scan() {
        let spec = SlabSpec {
            n_core: 3.475,
            n_clad: 1.0,
            thickness: 175.0,
            wavelength: 930.0,
        };
        let n_eff = slab_te_effective_index(spec).unwrap();
        assert!(n_eff > 1.0 && n_eff < 3.475);

        let samples = 10_000;
        let step = (spec.n_core - spec.n_clad) / samples as f64;
        let mut roots = Vec::new();
        let mut prev = pole_free_residual(&spec, spec.n_clad + 0.5 * step);
        for i in 1..samples {
            let n = spec.n_clad + (i as f64 + 0.5) * step;
            let cur = pole_free_residual(&spec, n);
            if prev.signum() != cur.signum() {
                roots.push(n - 0.5 * step);
            }
            prev = cur;
        }
        // A 175 nm GaAs membrane at 930 nm is single-mode for TE.
        assert_eq!(roots.len(), 1, "roots: {roots:?}");
        assert!((roots[0] - n_eff).abs() < step, "{} vs {}", roots[0], n_eff);
        assert!(spec.te_residual(n_eff).abs() < 1e-9);
    }

    #[test]
    fn slab_index_limits() {
        let faint = SlabSpec {
            n_core: 2.0,
            n_clad: 2.0 - 1e-12,
            thickness: 100.0,
            wavelength: 930.0,
        };
        assert!((slab_te_effective_index(faint).unwrap() - 2.0).abs() < 1e-6);

        let thick = SlabSpec {
            n_core: 3.475,
            n_clad: 1.0,
            thickness: 50.0 * 930.0,
            wavelength: 930.0,
        };
        assert!((slab_te_effective_index(thick).unwrap() - 3.475).abs() < 1e-3);
    }

    #[test]
    fn slab_index_monotone() {
        let base = SlabSpec {
            n_core: 3.475,
            n_clad: 1.0,
            thickness: 175.0,
            wavelength: 930.0,
        };
        let mut prev = 0.0;
        for t in [50.0, 100.0, 150.0, 175.0, 250.0, 400.0] {
            let n = slab_te_effective_index(SlabSpec {
                thickness: t,
                ..base
            })
            .unwrap();
            assert!(n > prev);
            prev = n;
        }
        let mut prev = 0.0;
        for nc in [2.0, 2.5, 3.0, 3.475, 4.0] {
            let n = slab_te_effective_index(SlabSpec { n_core: nc, ..base }).unwrap();
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn slab_rejects_inverted_contrast() {
        let bad = SlabSpec {
            n_core: 1.0,
            n_clad: 1.5,
            thickness: 100.0,
            wavelength: 930.0,
        };
        assert!(matches!(
            slab_te_effective_index(bad),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn bulk_fill_fraction() {
        let geom = build_bulk_cell(lattice()).unwrap();
        assert_eq!(geom.holes.len(), 1);
        let expected = 2.0 * std::f64::consts::PI / 3f64.sqrt() * (64.0f64 / 240.0).powi(2);
        assert!((geom.fill_fraction() - expected).abs() < 1e-12);
        assert!((expected - 0.25796).abs() < 1e-5);

        let empty = build_bulk_cell(LatticeSpec {
            r0: 0.0,
            ..lattice()
        })
        .unwrap();
        assert_eq!(empty.fill_fraction(), 0.0);
    }

    #[test]
    fn lattice_invariants_rejected() {
        assert!(LatticeSpec::new(-1.0, 10.0, 9.0, 1.0).is_err());
        assert!(LatticeSpec::new(240.0, 130.0, 9.0, 1.0).is_err());
        assert!(LatticeSpec::new(240.0, 64.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn w1_cell_layout() {
        let lat = lattice();
        let geom = build_waveguide_cell(lat, WaveguideParams::w1(&lat)).unwrap();
        assert_eq!(geom.holes.len(), 14);
        assert!(geom.is_mirror_symmetric(1e-9));
        let w0 = lat.w0();
        assert!((geom.height() - 15.0 * w0).abs() < 1e-9);
        assert!((geom.area() - 240.0 * 15.0 * w0).abs() < 1e-6);
    }

    #[test]
    fn dual_mode_rows() {
        let lat = lattice();
        let params = WaveguideParams::dual_mode(&lat);
        let rows = params.row_offsets(&lat);
        let expected = [222.4, 370.2, 538.1];
        for (row, e) in rows.iter().zip(expected) {
            assert!((row - e).abs() < 0.05, "{row} vs {e}");
        }
        let geom = build_waveguide_cell(lat, params).unwrap();
        assert!(geom.is_mirror_symmetric(1e-9));
        assert_eq!(geom.channel.as_ref().unwrap().w1, rows[0]);
    }

    #[test]
    fn mode_filter_has_axis_hole() {
        let lat = lattice();
        let geom = build_waveguide_cell(lat, WaveguideParams::mode_filter(&lat)).unwrap();
        assert!(geom.holes.iter().any(|h| h.y == 0.0 && h.x == 0.0));
        assert_eq!(geom.holes.len(), 15);
        assert!(geom.is_mirror_symmetric(1e-9));
    }

    #[test]
    fn overlapping_rows_rejected() {
        let lat = lattice();
        // Neighbouring rows are staggered by a/2, so d1 > r0 alone does not
        // keep large holes apart.
        let fat = LatticeSpec { r0: 110.0, ..lat };
        let params = WaveguideParams {
            d1: 115.0,
            ..WaveguideParams::w1(&fat)
        };
        assert!(matches!(
            build_waveguide_cell(fat, params),
            Err(Error::OverlappingHoles { .. })
        ));
        let params = WaveguideParams {
            rows_per_side: 4,
            ..WaveguideParams::w1(&lat)
        };
        assert!(build_waveguide_cell(lat, params).is_err());
    }

    #[test]
    fn seam_is_bulk_like() {
        // The outermost rows and the periodic image across the seam must sit
        // at the bulk spacing with alternating x registry.
        let lat = lattice();
        let geom = build_waveguide_cell(lat, WaveguideParams::w1(&lat)).unwrap();
        let top = geom
            .holes
            .iter()
            .max_by(|a, b| a.y.total_cmp(&b.y))
            .unwrap();
        let bottom = geom
            .holes
            .iter()
            .min_by(|a, b| a.y.total_cmp(&b.y))
            .unwrap();
        let [_, v] = geom.cell_vectors;
        let image = (bottom.x + v[0], bottom.y + v[1]);
        assert!((image.1 - top.y - lat.w0()).abs() < 1e-9);
        assert!(((image.0 - top.x).rem_euclid(240.0) - 120.0).abs() < 1e-9);
    }

    #[test]
    fn homogeneous_coefficients() {
        let lat = LatticeSpec {
            r0: 0.0,
            ..lattice()
        };
        let geom = build_bulk_cell(lat).unwrap();
        assert_eq!(geom.epsilon_coefficient([0.0, 0.0]).re, lat.eps_bg);
        let g = geom.reciprocal_vector(1, 2);
        assert_eq!(geom.epsilon_coefficient(g.g).norm(), 0.0);
    }

    #[test]
    fn centred_hole_gives_real_coefficients() {
        let geom = build_bulk_cell(lattice()).unwrap();
        for m in -3..=3 {
            for n in -3..=3 {
                let g = geom.reciprocal_vector(m, n);
                assert!(geom.epsilon_coefficient(g.g).im.abs() < 1e-15);
            }
        }
        let mirrored = geom.mirrored();
        for m in -3..=3 {
            for n in -3..=3 {
                let g = geom.reciprocal_vector(m, n);
                let a = geom.epsilon_coefficient(g.g);
                let b = mirrored.epsilon_coefficient(g.g);
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_g_coefficient_is_average() {
        let lat = lattice();
        let geom = build_bulk_cell(lat).unwrap();
        let f = geom.fill_fraction();
        let avg = geom.epsilon_coefficient([0.0, 0.0]).re;
        assert!((avg - (lat.eps_bg + f * (1.0 - lat.eps_bg))).abs() < 1e-12);

        // Midpoint quadrature of ε(r) over the cell on a 1024² grid in
        // fractional coordinates.
        let n = 1024;
        let [u, v] = geom.cell_vectors;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s = (i as f64 + 0.5) / n as f64 - 0.5;
                let t = (j as f64 + 0.5) / n as f64 - 0.5;
                let x = s * u[0] + t * v[0];
                let y = s * u[1] + t * v[1];
                sum += geom.permittivity_at(x, y);
            }
        }
        let quad = sum / (n * n) as f64;
        assert!((quad - avg).abs() < 1e-4, "{quad} vs {avg}");
    }

    #[test]
    fn waveguide_mirror_property() {
        let lat = lattice();
        let geom = build_waveguide_cell(lat, WaveguideParams::dual_mode(&lat)).unwrap();
        for m in -4..=4 {
            for n in -40..=40 {
                let g = geom.reciprocal_vector(m, n);
                let (mm, nn) = geom.mirror_indices(m, n);
                let gm = geom.reciprocal_vector(mm, nn);
                assert!((gm.g[0] - g.g[0]).abs() < 1e-12 && (gm.g[1] + g.g[1]).abs() < 1e-12);
                let a = geom.epsilon_coefficient(g.g);
                let b = geom.epsilon_coefficient([g.g[0], -g.g[1]]);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn hermitian_in_g() {
        let lat = lattice();
        let geom = build_waveguide_cell(lat, WaveguideParams::dual_mode(&lat)).unwrap();
        for (m, n) in [(1, 3), (-2, 7), (3, -11)] {
            let g = geom.reciprocal_vector(m, n);
            let neg = geom.reciprocal_vector(-m, -n);
            let a = geom.epsilon_coefficient(g.g);
            let b = geom.epsilon_coefficient(neg.g);
            assert!((a - b.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn analytic_coefficients_match_quadrature() {
        // Direct quadrature of e^{-iG·r} ε(r) over the rectangular
        // fundamental domain of a waveguide cell.
        let lat = lattice();
        let geom = build_waveguide_cell(lat, WaveguideParams::dual_mode(&lat)).unwrap();
        let (nx, ny) = (480, 4800);
        let (a, h) = (lat.a, geom.height());
        let mut eps = vec![0.0; nx * ny];
        for j in 0..ny {
            let y = -0.5 * h + (j as f64 + 0.5) * h / ny as f64;
            for i in 0..nx {
                let x = (i as f64 + 0.5) * a / nx as f64;
                eps[j * nx + i] = geom.permittivity_at(x, y);
            }
        }
        for (m, n) in [(0, 0), (1, 0), (0, 4), (1, -3), (2, 9)] {
            let rv = geom.reciprocal_vector(m, n);
            let scale = 2.0 * std::f64::consts::PI / a;
            let (gx, gy) = (rv.g[0] * scale, rv.g[1] * scale);
            let mut acc = c64::new(0.0, 0.0);
            for j in 0..ny {
                let y = -0.5 * h + (j as f64 + 0.5) * h / ny as f64;
                for i in 0..nx {
                    let x = (i as f64 + 0.5) * a / nx as f64;
                    let ph = -(gx * x + gy * y);
                    acc += c64::new(ph.cos(), ph.sin()) * eps[j * nx + i];
                }
            }
            acc /= (nx * ny) as f64;
            let exact = geom.epsilon_coefficient(rv.g);
            let scale_ref = exact.norm().max(0.05);
            assert!(
                (acc - exact).norm() / scale_ref < 1e-3 * 10.0,
                "G=({m},{n}): {acc} vs {exact}"
            );
        }
    }

    #[test]
    fn scale_invariance_of_coefficients() {
        let lat = lattice();
        let geom = build_waveguide_cell(lat, WaveguideParams::dual_mode(&lat)).unwrap();
        let scaled = geom.scaled(2.0);
        let scale = 2.0 * std::f64::consts::PI / lat.a;
        for (m, n) in [(0, 0), (1, 2), (-2, 5)] {
            let g = geom.reciprocal_vector(m, n).g;
            let phys = [g[0] * scale, g[1] * scale];
            let a = geom.epsilon_at_wavevector(phys);
            let b = scaled.epsilon_at_wavevector([phys[0] / 2.0, phys[1] / 2.0]);
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn device_json_round_trip() {
        let spec = DeviceSpec::reference_dual_mode();
        let text = serde_json::to_string(&spec).unwrap();
        let back: DeviceSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let err = serde_json::from_str::<DeviceSpec>(r#"{"a_nm": 240, "bogus": 1}"#);
        assert!(err.is_err());
    }
}
