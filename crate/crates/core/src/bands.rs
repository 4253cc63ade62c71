//! Band tracking, parity labels, gap search, group indices and guided-mode
//! crossings.
//!
//! Wavevectors are in units of `2π/a` and frequencies in units of `a/λ`
//! (`ωa/2πc`), so the group index is simply `n_g = Δk/Δω`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::SupercellGeometry;
use crate::pwe::{coefficient_mirror_overlap, Eigenpair, Grid, ModeField, TeProblem};

pub const PARITY_THRESHOLD: f64 = 0.9;
pub const MIN_TRACKING_OVERLAP: f64 = 0.5;
/// Fraction of the electric energy within `2·w0` of the axis required for
/// a state to count as guided.
pub const GUIDED_LOCALIZATION: f64 = 0.8;
pub const FLAT_BAND_DOMEGA: f64 = 1e-12;
/// Bisection stops once the bracket is narrower than this (units of `2π/a`).
pub const CROSSING_K_TOL: f64 = 1e-7;
/// Step used for the central difference at a refined crossing.
pub const CROSSING_NG_STEP: f64 = 5e-4;
/// k-samples closer than this to the zone edge never count as an interior
/// group-index peak.
pub const EDGE_EXCLUSION: f64 = 0.02;

/// Extra eigenpairs solved above the tracked ones so the top tracked band
/// can still find its continuation.
const TRACKING_MARGIN: usize = 4;
/// Grid spacing, as a fraction of `a`, of the coarse fields used for the
/// localization measure.
const LOCALIZATION_SPACING: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    pub fn from_overlap(s: f64) -> Self {
        if s > PARITY_THRESHOLD {
            Parity::Even
        } else if s < -PARITY_THRESHOLD {
            Parity::Odd
        } else {
            Parity::Mixed
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        }
    }
}

/// Bulk TE gap between the first and second band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapInfo {
    pub omega_lo: f64,
    pub omega_hi: f64,
}

impl GapInfo {
    pub fn contains(&self, omega: f64) -> bool {
        omega > self.omega_lo && omega < self.omega_hi
    }

    /// Frequency midpoint of the gap.
    pub fn midgap(&self) -> f64 {
        0.5 * (self.omega_lo + self.omega_hi)
    }

    pub fn width(&self) -> f64 {
        self.omega_hi - self.omega_lo
    }
}

/// Where a band structure came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub geometry_hash: String,
    pub cutoff: f64,
    pub basis_size: usize,
}

impl Provenance {
    pub fn of(problem: &TeProblem) -> Self {
        Self {
            geometry_hash: geometry_hash(&problem.geom),
            cutoff: problem.basis.cutoff,
            basis_size: problem.basis.len(),
        }
    }
}

/// Stable hex digest of the geometry's JSON form.
pub fn geometry_hash(geom: &SupercellGeometry) -> String {
    let json = serde_json::to_string(geom).expect("geometry serializes");
    let mut h = DefaultHasher::new();
    json.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Eigenpairs at one k-point, sorted by frequency, with per-state mirror
/// overlap and (for states inside the localization window) the guided
/// energy fraction.
#[derive(Debug, Clone)]
pub struct KSolution {
    pub k: [f64; 2],
    pub pairs: Vec<Eigenpair>,
    pub mirror: Vec<Option<f64>>,
    pub localization: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub band: usize,
    pub k_index: usize,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    /// Path coordinate of each sample (`k_x` for waveguides), `2π/a`.
    pub kgrid: Vec<f64>,
    pub kpoints: Vec<[f64; 2]>,
    /// Sorted frequencies at every k, including the tracking margin.
    pub spectra: Vec<Vec<f64>>,
    /// Tracked frequencies, `bands[band][k]`.
    pub bands: Vec<Vec<f64>>,
    /// Index into the sorted spectrum that each tracked sample came from.
    pub sources: Vec<Vec<usize>>,
    pub parity: Vec<Parity>,
    /// Mirror overlap of each tracked sample, when the basis has a mirror.
    pub mirror: Vec<Vec<Option<f64>>>,
    /// Signed group index per sample; `+∞` on flat steps.
    pub ng: Vec<Vec<f64>>,
    pub localization: Vec<Vec<Option<f64>>>,
    pub ambiguities: Vec<Ambiguity>,
    pub provenance: Provenance,
}

/// Γ–M–K–Γ path of the triangular lattice in `2π/a` units, with
/// `per_segment` samples per leg plus the closing Γ.
pub fn bulk_path(per_segment: usize) -> (Vec<f64>, Vec<[f64; 2]>) {
    let s3 = 3f64.sqrt();
    let corners = [
        [0.0, 0.0],
        [0.0, 1.0 / s3],
        [1.0 / 3.0, 1.0 / s3],
        [0.0, 0.0],
    ];
    let mut kgrid = Vec::with_capacity(3 * per_segment + 1);
    let mut kpoints = Vec::with_capacity(3 * per_segment + 1);
    let mut s = 0.0;
    for leg in corners.windows(2) {
        let (p, q) = (leg[0], leg[1]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        for i in 0..per_segment {
            let t = i as f64 / per_segment as f64;
            kgrid.push(s + t * len);
            kpoints.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
        s += len;
    }
    kgrid.push(s);
    kpoints.push([0.0, 0.0]);
    (kgrid, kpoints)
}

/// `nk` uniform samples of `k_x` over `[0, 1/2]`.
pub fn waveguide_kgrid(nk: usize) -> (Vec<f64>, Vec<[f64; 2]>) {
    let kgrid: Vec<f64> = if nk == 1 {
        vec![0.0]
    } else {
        (0..nk).map(|i| 0.5 * i as f64 / (nk - 1) as f64).collect()
    };
    let kpoints = kgrid.iter().map(|&k| [k, 0.0]).collect();
    (kgrid, kpoints)
}

/// Energy fraction of a mode within `2·w0` of the waveguide axis.
pub fn localization(field: &ModeField, geom: &SupercellGeometry) -> f64 {
    let total = field.electric_energy();
    if total <= 0.0 {
        return 0.0;
    }
    field.electric_energy_within(2.0 * geom.lattice.w0()) / total
}

fn localization_grid(geom: &SupercellGeometry) -> Grid {
    Grid::cell(geom, geom.lattice.a * LOCALIZATION_SPACING)
}

fn state_localization(problem: &TeProblem, grid: &Grid, k: [f64; 2], pair: &Eigenpair) -> f64 {
    let field = problem.field(k, 0, pair, grid);
    localization(&field, &problem.geom)
}

/// Solves every k-point (in parallel, results in input order). The
/// localization is evaluated only for states with `window.0 < ω < window.1`.
pub fn solve_spectra(
    problem: &TeProblem,
    kpoints: &[[f64; 2]],
    nsolve: usize,
    window: Option<(f64, f64)>,
) -> Result<Vec<KSolution>> {
    let grid = localization_grid(&problem.geom);
    kpoints
        .par_iter()
        .map(|&k| {
            let pairs = problem.solve(k, nsolve)?;
            let mirror = pairs
                .iter()
                .map(|p| coefficient_mirror_overlap(&problem.basis, &p.vector))
                .collect();
            let localization = pairs
                .iter()
                .map(|p| match window {
                    Some((lo, hi)) if p.omega > lo && p.omega < hi => {
                        Some(state_localization(problem, &grid, k, p))
                    }
                    _ => None,
                })
                .collect();
            Ok(KSolution {
                k,
                pairs,
                mirror,
                localization,
            })
        })
        .collect()
}

fn overlap(u: &[c64], v: &[c64]) -> f64 {
    u.iter()
        .zip(v)
        .fold(c64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
        .norm()
}

/// Follows `nbands` bands through the samples by greedy eigenvector overlap.
/// Band identity at the first sample is the frequency order.
pub fn track_bands(
    kgrid: &[f64],
    samples: &[KSolution],
    nbands: usize,
    provenance: Provenance,
) -> Result<BandStructure> {
    if samples.is_empty() || kgrid.len() != samples.len() {
        return Err(invalid("kgrid", "needs one path coordinate per sample"));
    }
    let width = samples.iter().map(|s| s.pairs.len()).min().unwrap_or(0);
    if nbands == 0 || nbands > width {
        return Err(invalid(
            "nbands",
            format!("must lie in 1..={width}, got {nbands}"),
        ));
    }
    let nk = samples.len();
    let mut sources = vec![vec![0usize; nk]; nbands];
    for (b, src) in sources.iter_mut().enumerate() {
        src[0] = b;
    }
    let mut ambiguities = Vec::new();

    for i in 0..nk - 1 {
        let (cur, next) = (&samples[i], &samples[i + 1]);
        let mut cand = Vec::with_capacity(nbands * width);
        let mut best = vec![0.0f64; nbands];
        for b in 0..nbands {
            let u = &cur.pairs[sources[b][i]];
            for (j, w) in next.pairs.iter().take(width).enumerate() {
                let o = overlap(&u.vector, &w.vector);
                best[b] = best[b].max(o);
                cand.push((o, (w.omega - u.omega).abs(), b, j));
            }
        }
        // Largest overlap first; near-equal overlaps go to the closer frequency.
        cand.sort_by(|x, y| {
            let ox = (x.0 * 1e9).round();
            let oy = (y.0 * 1e9).round();
            oy.total_cmp(&ox)
                .then(x.1.total_cmp(&y.1))
                .then(x.2.cmp(&y.2))
                .then(x.3.cmp(&y.3))
        });
        let mut band_done = vec![false; nbands];
        let mut state_used = vec![false; width];
        let mut left = nbands;
        for &(_, _, b, j) in &cand {
            if left == 0 {
                break;
            }
            if band_done[b] || state_used[j] {
                continue;
            }
            band_done[b] = true;
            state_used[j] = true;
            sources[b][i + 1] = j;
            left -= 1;
        }
        for (b, &o) in best.iter().enumerate() {
            if o < MIN_TRACKING_OVERLAP {
                ambiguities.push(Ambiguity {
                    band: b,
                    k_index: i + 1,
                    overlap: o,
                });
            }
        }
    }

    let bands: Vec<Vec<f64>> = sources
        .iter()
        .map(|src| (0..nk).map(|i| samples[i].pairs[src[i]].omega).collect())
        .collect();
    let mirror: Vec<Vec<Option<f64>>> = sources
        .iter()
        .map(|src| (0..nk).map(|i| samples[i].mirror[src[i]]).collect())
        .collect();
    let localization: Vec<Vec<Option<f64>>> = sources
        .iter()
        .map(|src| (0..nk).map(|i| samples[i].localization[src[i]]).collect())
        .collect();
    let parity = (0..nbands)
        .map(|b| {
            if ambiguities.iter().any(|a| a.band == b) {
                return Parity::Mixed;
            }
            band_parity(&mirror[b])
        })
        .collect();
    let ng = bands.iter().map(|w| group_index_series(kgrid, w)).collect();

    Ok(BandStructure {
        kgrid: kgrid.to_vec(),
        kpoints: samples.iter().map(|s| s.k).collect(),
        spectra: samples
            .iter()
            .map(|s| s.pairs.iter().map(|p| p.omega).collect())
            .collect(),
        bands,
        sources,
        parity,
        mirror,
        ng,
        localization,
        ambiguities,
        provenance,
    })
}

fn band_parity(mirror: &[Option<f64>]) -> Parity {
    let labels: Vec<Parity> = mirror
        .iter()
        .map(|m| m.map_or(Parity::Mixed, Parity::from_overlap))
        .collect();
    match labels.first() {
        Some(&first) if labels.iter().all(|&l| l == first) => first,
        _ => Parity::Mixed,
    }
}

/// Solves, annotates and tracks a band structure. `window` selects which
/// states get a localization measure (typically the bulk gap).
pub fn compute_band_structure(
    problem: &TeProblem,
    kgrid: &[f64],
    kpoints: &[[f64; 2]],
    nbands: usize,
    window: Option<(f64, f64)>,
) -> Result<BandStructure> {
    let nsolve = (nbands + TRACKING_MARGIN).min(problem.basis.len());
    let samples = solve_spectra(problem, kpoints, nsolve, window)?;
    track_bands(kgrid, &samples, nbands.min(nsolve), Provenance::of(problem))
}

/// Bulk bands along Γ–M–K–Γ.
pub fn bulk_band_structure(
    problem: &TeProblem,
    per_segment: usize,
    nbands: usize,
) -> Result<BandStructure> {
    let (kgrid, kpoints) = bulk_path(per_segment);
    compute_band_structure(problem, &kgrid, &kpoints, nbands, None)
}

/// Gap between the first two bands of the sorted spectra.
pub fn find_bandgap(bulk: &BandStructure) -> Result<GapInfo> {
    if bulk.spectra.iter().any(|s| s.len() < 2) {
        return Err(invalid("bulk", "needs at least two bands per k-point"));
    }
    let omega_lo = bulk.spectra.iter().map(|s| s[0]).fold(f64::MIN, f64::max);
    let omega_hi = bulk.spectra.iter().map(|s| s[1]).fold(f64::MAX, f64::min);
    if omega_lo >= omega_hi {
        return Err(Error::NoGap { omega_lo, omega_hi });
    }
    Ok(GapInfo { omega_lo, omega_hi })
}

/// Re-normalized mirror overlap `Re⟨Ey(x,y), Ey(x,−y)⟩ / ⟨Ey, Ey⟩` of a
/// sampled field.
pub fn field_mirror_overlap(field: &ModeField) -> Result<f64> {
    let g = &field.grid;
    if !g.is_mirror_symmetric() {
        return Err(Error::AsymmetricGeometry);
    }
    let mut num = c64::new(0.0, 0.0);
    let mut den = 0.0;
    for j in 0..g.ny {
        let jm = g.mirror_row(j);
        for i in 0..g.nx {
            let e = field.ey[j * g.nx + i];
            num += e.conj() * field.ey[jm * g.nx + i];
            den += e.norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(num.re / den)
}

/// Parity of a mode from the mirror symmetry of its `Ey`.
pub fn classify_parity(field: &ModeField, geom: &SupercellGeometry) -> Result<Parity> {
    if !geom.symmetry_axis || !geom.is_mirror_symmetric(1e-9) {
        return Err(Error::AsymmetricGeometry);
    }
    field_mirror_overlap(field).map(Parity::from_overlap)
}

fn step_ng(dk: f64, domega: f64) -> f64 {
    if domega.abs() < FLAT_BAND_DOMEGA {
        f64::INFINITY
    } else {
        dk / domega
    }
}

fn group_index_series(kgrid: &[f64], omega: &[f64]) -> Vec<f64> {
    let n = omega.len();
    if n < 2 {
        return vec![f64::NAN; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            step_ng(kgrid[b] - kgrid[a], omega[b] - omega[a])
        })
        .collect()
}

/// Signed group index of a tracked band at a sample, by central difference
/// (one-sided at the ends). Flat steps give `+∞`.
pub fn group_index(bands: &BandStructure, band: usize, k_index: usize) -> Result<f64> {
    let w = bands
        .bands
        .get(band)
        .ok_or_else(|| invalid("band", format!("{band} out of range")))?;
    if k_index >= w.len() {
        return Err(invalid("k_index", format!("{k_index} out of range")));
    }
    if w.len() < 2 {
        return Err(invalid("kgrid", "group index needs at least two samples"));
    }
    Ok(group_index_series(&bands.kgrid, w)[k_index])
}

impl BandStructure {
    pub fn nbands(&self) -> usize {
        self.bands.len()
    }

    pub fn nk(&self) -> usize {
        self.kgrid.len()
    }

    /// A band is guided when at least one of its in-gap samples is
    /// defect-localized. The localization of a slow-light mode dips as it
    /// spreads into the shifted rows, so the test is per band.
    pub fn is_guided_band(&self, band: usize, gap: &GapInfo) -> bool {
        (0..self.nk()).any(|i| {
            gap.contains(self.bands[band][i])
                && self.localization[band][i].is_some_and(|l| l >= GUIDED_LOCALIZATION)
        })
    }

    /// In-gap sample of a guided band.
    pub fn is_guided_sample(&self, band: usize, k_index: usize, gap: &GapInfo) -> bool {
        gap.contains(self.bands[band][k_index]) && self.is_guided_band(band, gap)
    }

    pub fn guided_bands(&self, gap: &GapInfo) -> Vec<usize> {
        (0..self.nbands())
            .filter(|&b| self.is_guided_band(b, gap))
            .collect()
    }

    /// Largest interior local maximum of `|n_g|` over the guided samples
    /// of a band, as `(k_index, |n_g|)`. Samples within
    /// [`EDGE_EXCLUSION`] of either end of the grid are ignored, and so are
    /// band extrema, where `n_g` changes sign.
    pub fn interior_ng_peak(&self, band: usize, gap: &GapInfo) -> Option<(usize, f64)> {
        let signed = &self.ng[band];
        let ng: Vec<f64> = signed.iter().map(|v| v.abs()).collect();
        let (k0, k1) = (self.kgrid[0], *self.kgrid.last()?);
        let mut best: Option<(usize, f64)> = None;
        for i in 1..self.nk().saturating_sub(1) {
            let k = self.kgrid[i];
            if k - k0 < EDGE_EXCLUSION || k1 - k < EDGE_EXCLUSION {
                continue;
            }
            if !self.is_guided_sample(band, i, gap) || !ng[i].is_finite() {
                continue;
            }
            let sign = signed[i].signum();
            if signed[i - 1].signum() != sign || signed[i + 1].signum() != sign {
                continue;
            }
            if ng[i] >= ng[i - 1] && ng[i] >= ng[i + 1] && best.is_none_or(|(_, v)| ng[i] > v) {
                best = Some((i, ng[i]));
            }
        }
        best
    }
}

/// A guided band crossing a target frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub band: usize,
    /// Crossing wavevector `k_x` (`2π/a`).
    pub k: f64,
    pub omega: f64,
    pub parity: Parity,
    pub ng: f64,
    pub localization: f64,
    /// Index of the matched state in the sorted spectrum at `k`.
    pub state_index: usize,
}

fn best_match(pairs: &[Eigenpair], reference: &[c64]) -> (usize, f64) {
    pairs
        .iter()
        .enumerate()
        .map(|(j, p)| (j, overlap(reference, &p.vector)))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
}

fn lerp(p: [f64; 2], q: [f64; 2], t: f64) -> [f64; 2] {
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Eigenpair continuing `reference` at `k`, with the full solve.
fn follow(
    problem: &TeProblem,
    k: [f64; 2],
    nsolve: usize,
    reference: &[c64],
) -> Result<(usize, Eigenpair)> {
    let mut pairs = problem.solve(k, nsolve)?;
    let (j, _) = best_match(&pairs, reference);
    Ok((j, pairs.swap_remove(j)))
}

/// Crossings of every guided band with `omega`, refined by bisection with
/// fresh solves along the segment between neighbouring samples.
pub fn guided_mode_at_wavelength(
    problem: &TeProblem,
    bands: &BandStructure,
    gap: &GapInfo,
    omega: f64,
) -> Result<Vec<Crossing>> {
    if !gap.contains(omega) {
        return Err(Error::NoneFound { omega });
    }
    let nsolve = bands.spectra.iter().map(Vec::len).min().unwrap_or(0);
    let grid = localization_grid(&problem.geom);
    let mut brackets = Vec::new();
    for b in 0..bands.nbands() {
        let w = &bands.bands[b];
        for i in 0..bands.nk().saturating_sub(1) {
            let (f0, f1) = (w[i] - omega, w[i + 1] - omega);
            if f0 * f1 > 0.0 || f0 == f1 {
                continue;
            }
            if !(bands.is_guided_sample(b, i, gap) || bands.is_guided_sample(b, i + 1, gap)) {
                continue;
            }
            brackets.push((b, i));
        }
    }
    let mut out: Vec<Crossing> = brackets
        .par_iter()
        .map(|&(b, i)| refine_crossing(problem, bands, &grid, nsolve, b, i, omega))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::NoneFound { omega });
    }
    out.sort_by(|x, y| x.band.cmp(&y.band).then(x.k.total_cmp(&y.k)));
    Ok(out)
}

fn refine_crossing(
    problem: &TeProblem,
    bands: &BandStructure,
    grid: &Grid,
    nsolve: usize,
    band: usize,
    i: usize,
    omega: f64,
) -> Result<Crossing> {
    let (p, q) = (bands.kpoints[i], bands.kpoints[i + 1]);
    let span = (q[0] - p[0]).hypot(q[1] - p[1]);
    let start = problem.solve(p, nsolve)?;
    let mut reference = start[bands.sources[band][i]].vector.clone();
    let sign_lo = (bands.bands[band][i] - omega).signum();
    let (mut t_lo, mut t_hi) = (0.0, 1.0);
    while (t_hi - t_lo) * span > CROSSING_K_TOL {
        let t = 0.5 * (t_lo + t_hi);
        let (_, pair) = follow(problem, lerp(p, q, t), nsolve, &reference)?;
        if (pair.omega - omega).signum() == sign_lo {
            t_lo = t;
        } else {
            t_hi = t;
        }
        reference = pair.vector;
    }
    let kstar = lerp(p, q, 0.5 * (t_lo + t_hi));
    let (state_index, pair) = follow(problem, kstar, nsolve, &reference)?;
    let dir = [(q[0] - p[0]) / span, (q[1] - p[1]) / span];
    let h = CROSSING_NG_STEP;
    let (_, minus) = follow(
        problem,
        [kstar[0] - h * dir[0], kstar[1] - h * dir[1]],
        nsolve,
        &pair.vector,
    )?;
    let (_, plus) = follow(
        problem,
        [kstar[0] + h * dir[0], kstar[1] + h * dir[1]],
        nsolve,
        &pair.vector,
    )?;
    let ng = step_ng(2.0 * h, plus.omega - minus.omega);
    let parity = coefficient_mirror_overlap(&problem.basis, &pair.vector)
        .map_or(Parity::Mixed, Parity::from_overlap);
    let loc = state_localization(problem, grid, kstar, &pair);
    Ok(Crossing {
        band,
        k: kstar[0],
        omega: pair.omega,
        parity,
        ng,
        localization: loc,
        state_index,
    })
}

/// Summary of the slow-light engineering of a dual-mode section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgPeakReport {
    pub band: usize,
    pub peak_k: f64,
    pub peak_omega: f64,
    /// `|n_g|` of the even mode at the refined peak crossing.
    pub ng_even: f64,
    /// `|n_g|` of the odd mode at the same frequency, if it is guided there.
    pub ng_odd: Option<f64>,
    pub ratio: Option<f64>,
}

/// Finds the strongest interior `n_g` maximum over the even guided bands
/// and compares it with the odd mode at the same frequency.
pub fn ng_peak_report(
    problem: &TeProblem,
    bands: &BandStructure,
    gap: &GapInfo,
) -> Result<NgPeakReport> {
    let (band, idx, _) = bands
        .guided_bands(gap)
        .into_iter()
        .filter(|&b| bands.parity[b] == Parity::Even)
        .filter_map(|b| bands.interior_ng_peak(b, gap).map(|(i, v)| (b, i, v)))
        .fold(None, |acc: Option<(usize, usize, f64)>, x| match acc {
            Some(a) if a.2 >= x.2 => Some(a),
            _ => Some(x),
        })
        .ok_or(Error::NoneFound {
            omega: gap.midgap(),
        })?;
    let peak_omega = bands.bands[band][idx];
    let crossings = guided_mode_at_wavelength(problem, bands, gap, peak_omega)?;
    let even = crossings
        .iter()
        .filter(|c| c.band == band)
        .min_by(|x, y| {
            (x.k - bands.kgrid[idx])
                .abs()
                .total_cmp(&(y.k - bands.kgrid[idx]).abs())
        })
        .ok_or(Error::NoneFound { omega: peak_omega })?;
    let ng_odd = crossings
        .iter()
        .filter(|c| c.parity == Parity::Odd)
        .map(|c| c.ng.abs())
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    Ok(NgPeakReport {
        band,
        peak_k: even.k,
        peak_omega,
        ng_even: even.ng.abs(),
        ng_odd,
        ratio: ng_odd.map(|o| even.ng.abs() / o),
    })
}
