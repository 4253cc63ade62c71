//! Plane-wave expansion of the 2D TE (out-of-plane `Hz`) Bloch problem.
//!
//! The master equation `∇·(ε⁻¹ ∇Hz) + (ω/c)² Hz = 0` is expanded over
//! `e^{i(k+G)·r}`. The inverse permittivity enters through the inverse of
//! the full `[ε(G−G′)]` matrix (inverse rule), which converges much faster
//! than the direct transform of `1/ε(r)` for air holes in a semiconductor.
//!
//! Wavevectors are in units of `2π/a`, so the operator eigenvalues are
//! `(ωa/2πc)²`.

use std::collections::HashMap;
use std::sync::Arc;

use faer::{c64, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{epsilon_fourier, ReciprocalVector, SupercellGeometry};

pub const DEFAULT_BASIS_CAP: usize = 4000;
pub const MAX_EPSILON_CONDITION: f64 = 1e12;
const OMEGA_FLOOR: f64 = 1e-8;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct PlaneWaveBasis {
    /// Maximum `|G|` in units of `2π/a`.
    pub cutoff: f64,
    pub gvecs: Vec<ReciprocalVector>,
    mirror: Option<Vec<usize>>,
}

impl PlaneWaveBasis {
    pub fn len(&self) -> usize {
        self.gvecs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gvecs.is_empty()
    }

    /// Index of `(Gx, -Gy)` for each basis vector, when the basis is
    /// closed under the mirror.
    pub fn mirror_partners(&self) -> Option<&[usize]> {
        self.mirror.as_deref()
    }

    pub fn index_of(&self, m: i32, n: i32) -> Option<usize> {
        self.gvecs.iter().position(|g| g.m == m && g.n == n)
    }
}

pub fn build_basis(geom: &SupercellGeometry, cutoff: f64) -> Result<PlaneWaveBasis> {
    build_basis_with_cap(geom, cutoff, DEFAULT_BASIS_CAP)
}

pub fn build_basis_with_cap(
    geom: &SupercellGeometry,
    cutoff: f64,
    cap: usize,
) -> Result<PlaneWaveBasis> {
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return Err(invalid(
            "cutoff",
            format!("must be non-negative, got {cutoff}"),
        ));
    }
    let a = geom.lattice.a;
    let [u, v] = geom.cell_vectors;
    // m = G·a1 and n = G·a2 in reduced units bound the index ranges.
    let mmax = (cutoff * u[0].hypot(u[1]) / a).ceil() as i32;
    let nmax = (cutoff * v[0].hypot(v[1]) / a).ceil() as i32;
    let tol = 1e-12 * cutoff.max(1.0);
    let mut gvecs = Vec::new();
    for m in -mmax..=mmax {
        for n in -nmax..=nmax {
            let g = geom.reciprocal_vector(m, n);
            if g.norm() <= cutoff + tol {
                gvecs.push(g);
            }
        }
    }
    if gvecs.len() < 2 {
        return Err(Error::BasisTooSmall { size: gvecs.len() });
    }
    if gvecs.len() > cap {
        return Err(Error::BasisTooLarge {
            size: gvecs.len(),
            cap,
        });
    }
    gvecs.sort_by(|p, q| {
        p.norm()
            .total_cmp(&q.norm())
            .then(p.m.cmp(&q.m))
            .then(p.n.cmp(&q.n))
    });

    let mirror = if geom.symmetry_axis {
        let lookup: HashMap<(i32, i32), usize> = gvecs
            .iter()
            .enumerate()
            .map(|(i, g)| ((g.m, g.n), i))
            .collect();
        gvecs
            .iter()
            .map(|g| lookup.get(&geom.mirror_indices(g.m, g.n)).copied())
            .collect::<Option<Vec<_>>>()
    } else {
        None
    };

    Ok(PlaneWaveBasis {
        cutoff,
        gvecs,
        mirror,
    })
}

/// Inverse of the permittivity Toeplitz matrix for one geometry and basis.
/// Independent of `k`, so it is computed once per band-structure run.
#[derive(Debug, Clone)]
pub struct InverseEpsilon {
    pub matrix: Mat<c64>,
    pub condition: f64,
}

impl InverseEpsilon {
    pub fn new(geom: &SupercellGeometry, basis: &PlaneWaveBasis) -> Result<Self> {
        let eps = epsilon_fourier(geom, &basis.gvecs);
        let evd = eps
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigSolveFailure(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let n = basis.len();
        let lo = s[0].re;
        let hi = s[n - 1].re;
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_EPSILON_CONDITION) {
            return Err(Error::SingularEpsilon { condition });
        }
        let u = evd.U();
        let mut scaled = u.to_owned();
        for j in 0..n {
            let inv = 1.0 / s[j].re;
            for i in 0..n {
                scaled[(i, j)] *= inv;
            }
        }
        let matrix = &scaled * u.adjoint();
        Ok(Self { matrix, condition })
    }
}

#[derive(Debug, Clone)]
pub struct PlaneWaveOperator {
    pub k: [f64; 2],
    pub basis: Arc<PlaneWaveBasis>,
    pub matrix: Mat<c64>,
}

impl PlaneWaveOperator {
    fn from_inverse(k: [f64; 2], basis: Arc<PlaneWaveBasis>, eta: &Mat<c64>) -> Self {
        let n = basis.len();
        let q: Vec<[f64; 2]> = basis
            .gvecs
            .iter()
            .map(|g| [k[0] + g.g[0], k[1] + g.g[1]])
            .collect();
        let mut matrix = Mat::from_fn(n, n, |i, j| {
            let dot = q[i][0] * q[j][0] + q[i][1] * q[j][1];
            eta[(i, j)] * dot
        });
        for i in 0..n {
            for j in 0..=i {
                let avg = (matrix[(i, j)] + matrix[(j, i)].conj()) * 0.5;
                matrix[(i, j)] = avg;
                matrix[(j, i)] = avg.conj();
            }
        }
        Self { k, basis, matrix }
    }

    /// `max |M - M†|` relative to `max |M|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                defect = defect.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
                scale = scale.max(self.matrix[(i, j)].norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }
}

pub fn assemble_te_operator(
    geom: &SupercellGeometry,
    basis: &PlaneWaveBasis,
    k: [f64; 2],
) -> Result<PlaneWaveOperator> {
    let eta = InverseEpsilon::new(geom, basis)?;
    Ok(PlaneWaveOperator::from_inverse(
        k,
        Arc::new(basis.clone()),
        &eta.matrix,
    ))
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    /// Normalized frequency `ωa/2πc`.
    pub omega: f64,
    /// Plane-wave coefficients `h_G`, unit norm.
    pub vector: Vec<c64>,
}

pub fn solve_bands(op: &PlaneWaveOperator, nbands: usize) -> Result<Vec<Eigenpair>> {
    let n = op.matrix.nrows();
    if nbands == 0 || nbands > n {
        return Err(invalid(
            "nbands",
            format!("must lie in 1..={n}, got {nbands}"),
        ));
    }
    let evd = op
        .matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigSolveFailure(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut out = Vec::with_capacity(nbands);
    for b in 0..nbands {
        let lambda = s[b].re;
        let mut omega = lambda.max(0.0).sqrt();
        if omega < OMEGA_FLOOR {
            omega = 0.0;
        }
        let mut vector: Vec<c64> = (0..n).map(|i| u[(i, b)]).collect();
        fix_phase(&mut vector);
        out.push(Eigenpair { omega, vector });
    }
    Ok(out)
}

/// Rotates the vector so its largest-magnitude component is real positive.
fn fix_phase(v: &mut [c64]) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, z) in v.iter().enumerate() {
        let nz = z.norm();
        if nz > best_norm * (1.0 + 1e-9) {
            best = i;
            best_norm = nz;
        }
    }
    if best_norm > 0.0 {
        let rot = v[best].conj() / best_norm;
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// A geometry together with its basis and cached inverse permittivity.
#[derive(Debug, Clone)]
pub struct TeProblem {
    pub geom: SupercellGeometry,
    pub basis: Arc<PlaneWaveBasis>,
    eta: Arc<Mat<c64>>,
    pub condition: f64,
}

impl TeProblem {
    pub fn new(geom: &SupercellGeometry, cutoff: f64) -> Result<Self> {
        let basis = build_basis(geom, cutoff)?;
        let eta = InverseEpsilon::new(geom, &basis)?;
        Ok(Self {
            geom: geom.clone(),
            basis: Arc::new(basis),
            eta: Arc::new(eta.matrix),
            condition: eta.condition,
        })
    }

    pub fn operator(&self, k: [f64; 2]) -> PlaneWaveOperator {
        PlaneWaveOperator::from_inverse(k, Arc::clone(&self.basis), &self.eta)
    }

    pub fn solve(&self, k: [f64; 2], nbands: usize) -> Result<Vec<Eigenpair>> {
        solve_bands(&self.operator(k), nbands)
    }

    pub fn field(
        &self,
        k: [f64; 2],
        band_index: usize,
        pair: &Eigenpair,
        grid: &Grid,
    ) -> ModeField {
        reconstruct_field(&self.geom, &self.basis, k, band_index, pair, grid)
    }
}

/// Cell-centred rectangular sampling of `[0, a) × [y_min, y_min + ny·dy)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    /// Spacings in nm.
    pub dx: f64,
    pub dy: f64,
    pub y_min: f64,
}

impl Grid {
    /// Covers the whole fundamental domain of the supercell.
    pub fn cell(geom: &SupercellGeometry, spacing: f64) -> Self {
        let a = geom.cell_vectors[0][0];
        let h = geom.height();
        let nx = ((a / spacing).round() as usize).max(1);
        let ny = ((h / spacing).round() as usize).max(1);
        Self {
            nx,
            ny,
            dx: a / nx as f64,
            dy: h / ny as f64,
            y_min: -0.5 * h,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Row index of the mirror image `-y`, when the grid is symmetric.
    pub fn mirror_row(&self, j: usize) -> usize {
        self.ny - 1 - j
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        (self.y_min + 0.5 * self.ny as f64 * self.dy).abs() <= 1e-9 * self.dy
    }

    /// Rows with `|y| <= half_height`, as `(first_row, sub-grid)`.
    pub fn crop_rows(&self, half_height: f64) -> (usize, Grid) {
        let rows: Vec<usize> = (0..self.ny)
            .filter(|&j| self.y(j).abs() <= half_height)
            .collect();
        let first = rows.first().copied().unwrap_or(0);
        let sub = Grid {
            nx: self.nx,
            ny: rows.len(),
            dx: self.dx,
            dy: self.dy,
            y_min: self.y_min + first as f64 * self.dy,
        };
        (first, sub)
    }
}

#[derive(Debug, Clone)]
pub struct ModeField {
    pub grid: Grid,
    /// Row-major samples, index `j * nx + i`.
    pub hz: Vec<c64>,
    pub ex: Vec<c64>,
    pub ey: Vec<c64>,
    /// Relative permittivity at each sample.
    pub eps: Vec<f64>,
    pub k: [f64; 2],
    pub band_index: usize,
    pub omega: f64,
}

impl ModeField {
    pub fn scale(&mut self, s: f64) {
        for v in [&mut self.hz, &mut self.ex, &mut self.ey] {
            for z in v.iter_mut() {
                *z *= s;
            }
        }
    }

    /// `Σ ε|E|² dA` over the grid (nm², field units squared).
    pub fn electric_energy(&self) -> f64 {
        let sum: f64 = (0..self.grid.len())
            .map(|p| self.eps[p] * (self.ex[p].norm_sqr() + self.ey[p].norm_sqr()))
            .sum();
        sum * self.grid.cell_area()
    }

    /// Same as [`electric_energy`](Self::electric_energy) restricted to `|y| <= half_width`.
    pub fn electric_energy_within(&self, half_width: f64) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.grid.ny {
            if self.grid.y(j).abs() > half_width {
                continue;
            }
            for i in 0..self.grid.nx {
                let p = j * self.grid.nx + i;
                sum += self.eps[p] * (self.ex[p].norm_sqr() + self.ey[p].norm_sqr());
            }
        }
        sum * self.grid.cell_area()
    }

    /// Restricts the samples to rows with `|y| <= half_height`.
    pub fn cropped(&self, half_height: f64) -> ModeField {
        let (first, grid) = self.grid.crop_rows(half_height);
        let nx = self.grid.nx;
        let range = first * nx..(first + grid.ny) * nx;
        ModeField {
            hz: self.hz[range.clone()].to_vec(),
            ex: self.ex[range.clone()].to_vec(),
            ey: self.ey[range.clone()].to_vec(),
            eps: self.eps[range].to_vec(),
            grid,
            k: self.k,
            band_index: self.band_index,
            omega: self.omega,
        }
    }
}

/// Samples `Hz = Σ h_G e^{i(k+G)·r}` and the in-plane electric field
/// `E ∝ (i/ωε)(∂yHz, −∂xHz)` on a grid. The result is not normalized.
pub fn reconstruct_field(
    geom: &SupercellGeometry,
    basis: &PlaneWaveBasis,
    k: [f64; 2],
    band_index: usize,
    pair: &Eigenpair,
    grid: &Grid,
) -> ModeField {
    let a = geom.lattice.a;
    let (nx, ny) = (grid.nx, grid.ny);

    // Gx depends only on m, so the x phase factors are shared per m.
    let mmin = basis.gvecs.iter().map(|g| g.m).min().unwrap_or(0);
    let mmax = basis.gvecs.iter().map(|g| g.m).max().unwrap_or(0);
    let nm = (mmax - mmin + 1) as usize;
    let b1x = geom.reciprocal_basis()[0][0];
    let qx_of = |m: i32| k[0] + m as f64 * b1x;

    let xs: Vec<f64> = (0..nx).map(|i| grid.x(i) / a).collect();
    let ys: Vec<f64> = (0..ny).map(|j| grid.y(j) / a).collect();
    let xphase: Vec<Vec<c64>> = (0..nm)
        .map(|mi| {
            let qx = qx_of(mmin + mi as i32);
            xs.iter()
                .map(|&x| {
                    let p = TWO_PI * qx * x;
                    c64::new(p.cos(), p.sin())
                })
                .collect()
        })
        .collect();

    // Per-m column sums of h_G e^{iqy y} and qy h_G e^{iqy y}.
    let mut col_h = vec![vec![c64::new(0.0, 0.0); ny]; nm];
    let mut col_qy = vec![vec![c64::new(0.0, 0.0); ny]; nm];
    for (g, &h) in basis.gvecs.iter().zip(pair.vector.iter()) {
        if h.norm_sqr() == 0.0 {
            continue;
        }
        let mi = (g.m - mmin) as usize;
        let qy = k[1] + g.g[1];
        for (j, &y) in ys.iter().enumerate() {
            let p = TWO_PI * qy * y;
            let term = h * c64::new(p.cos(), p.sin());
            col_h[mi][j] += term;
            col_qy[mi][j] += term * qy;
        }
    }

    let omega = if pair.omega > 0.0 { pair.omega } else { 1.0 };
    let mut hz = vec![c64::new(0.0, 0.0); nx * ny];
    let mut ex = vec![c64::new(0.0, 0.0); nx * ny];
    let mut ey = vec![c64::new(0.0, 0.0); nx * ny];
    let mut eps = vec![0.0; nx * ny];
    for j in 0..ny {
        let y = grid.y(j);
        for i in 0..nx {
            let mut h = c64::new(0.0, 0.0);
            let mut sx = c64::new(0.0, 0.0);
            let mut sy = c64::new(0.0, 0.0);
            for mi in 0..nm {
                let xp = xphase[mi][i];
                let ch = col_h[mi][j] * xp;
                h += ch;
                sx += ch * qx_of(mmin + mi as i32);
                sy += col_qy[mi][j] * xp;
            }
            let p = j * nx + i;
            let e = geom.permittivity_at(grid.x(i), y);
            eps[p] = e;
            hz[p] = h;
            let inv = 1.0 / (omega * e);
            ex[p] = -sy * inv;
            ey[p] = sx * inv;
        }
    }

    ModeField {
        grid: grid.clone(),
        hz,
        ex,
        ey,
        eps,
        k,
        band_index,
        omega: pair.omega,
    }
}

/// Direct plane-wave evaluation of `(Hz, Ex, Ey)` at arbitrary points (nm).
/// Slower than [`reconstruct_field`] but free of any grid.
pub fn evaluate_field_at(
    geom: &SupercellGeometry,
    basis: &PlaneWaveBasis,
    k: [f64; 2],
    pair: &Eigenpair,
    points: &[[f64; 2]],
) -> Vec<[c64; 3]> {
    let a = geom.lattice.a;
    let omega = if pair.omega > 0.0 { pair.omega } else { 1.0 };
    let q: Vec<[f64; 2]> = basis
        .gvecs
        .iter()
        .map(|g| [k[0] + g.g[0], k[1] + g.g[1]])
        .collect();
    points
        .iter()
        .map(|&[x, y]| {
            let (xr, yr) = (x / a, y / a);
            let mut h = c64::new(0.0, 0.0);
            let mut sx = c64::new(0.0, 0.0);
            let mut sy = c64::new(0.0, 0.0);
            for (qi, &c) in q.iter().zip(pair.vector.iter()) {
                let p = TWO_PI * (qi[0] * xr + qi[1] * yr);
                let t = c * c64::new(p.cos(), p.sin());
                h += t;
                sx += t * qi[0];
                sy += t * qi[1];
            }
            let e = geom.permittivity_at(x.rem_euclid(geom.cell_vectors[0][0]), y);
            let inv = 1.0 / (omega * e);
            [h, -sy * inv, sx * inv]
        })
        .collect()
}

/// Mirror overlap `Σ conj(h_G) h_{σG} / Σ |h_G|²` of the plane-wave
/// coefficients, where `σ` maps `(Gx, Gy)` to `(Gx, -Gy)`. Because `Ey`
/// is `∂xHz/ε` and `ε` is mirror-symmetric, this equals the mirror parity
/// of `Ey` for a pure-parity mode.
pub fn coefficient_mirror_overlap(basis: &PlaneWaveBasis, v: &[c64]) -> Option<f64> {
    let partners = basis.mirror_partners()?;
    let mut num = c64::new(0.0, 0.0);
    let mut den = 0.0;
    for (i, &p) in partners.iter().enumerate() {
        num += v[i].conj() * v[p];
        den += v[i].norm_sqr();
    }
    if den == 0.0 {
        None
    } else {
        Some(num.re / den)
    }
}
