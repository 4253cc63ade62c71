use std::sync::OnceLock;

use pcw_core::bands::{
    bulk_band_structure, classify_parity, compute_band_structure, find_bandgap,
    guided_mode_at_wavelength, waveguide_kgrid, BandStructure, GapInfo, Parity,
};
use pcw_core::geometry::{build_bulk_cell, build_waveguide_cell, DeviceSpec, WaveguideParams};
use pcw_core::pwe::{Grid, TeProblem};

struct Case {
    problem: TeProblem,
    gap: GapInfo,
    bands: BandStructure,
}

fn w1() -> &'static Case {
    static CASE: OnceLock<Case> = OnceLock::new();
    CASE.get_or_init(|| {
        let spec = DeviceSpec::reference_dual_mode();
        let lattice = spec.lattice().unwrap();
        let bulk = TeProblem::new(&build_bulk_cell(lattice).unwrap(), 3.0).unwrap();
        let gap = find_bandgap(&bulk_band_structure(&bulk, 10, 4).unwrap()).unwrap();
        let params = WaveguideParams {
            rows_per_side: 5,
            ..WaveguideParams::w1(&lattice)
        };
        let geom = build_waveguide_cell(lattice, params).unwrap();
        let problem = TeProblem::new(&geom, 3.0).unwrap();
        let (kgrid, kpoints) = waveguide_kgrid(41);
        let bands = compute_band_structure(
            &problem,
            &kgrid,
            &kpoints,
            20,
            Some((gap.omega_lo, gap.omega_hi)),
        )
        .unwrap();
        Case {
            problem,
            gap,
            bands,
        }
    })
}

#[test]
fn guided_bands_have_both_parities_and_no_ambiguity() {
    let c = w1();
    let guided = c.bands.guided_bands(&c.gap);
    let parities: Vec<Parity> = guided.iter().map(|&b| c.bands.parity[b]).collect();
    assert!(
        parities.contains(&Parity::Even) && parities.contains(&Parity::Odd),
        "{parities:?}"
    );
    for &b in &guided {
        for (i, m) in c.bands.mirror[b].iter().enumerate() {
            let m = m.expect("mirror-symmetric basis");
            assert!(m.abs() > 0.9, "band {b} sample {i} overlap {m}");
        }
    }
    assert!(c
        .bands
        .ambiguities
        .iter()
        .all(|a| !guided.contains(&a.band)));
}

#[test]
fn tracking_follows_parity_through_crossings() {
    // A tracked band keeps one mirror parity at every sample even where it
    // passes states of the other parity in the sorted spectrum.
    let c = w1();
    for &b in &c.bands.guided_bands(&c.gap) {
        let sign = c.bands.mirror[b][0].unwrap().signum();
        assert!(c.bands.mirror[b]
            .iter()
            .all(|m| m.unwrap().signum() == sign));
        let swaps = c.bands.sources[b]
            .windows(2)
            .filter(|w| w[0] != w[1])
            .count();
        let w = &c.bands.bands[b];
        // Smooth: no second difference exceeds the largest first difference.
        let d1 = w
            .windows(2)
            .map(|p| (p[1] - p[0]).abs())
            .fold(0.0, f64::max);
        let d2 = w
            .windows(3)
            .map(|p| (p[2] - 2.0 * p[1] + p[0]).abs())
            .fold(0.0, f64::max);
        assert!(d2 <= d1 + 1e-12, "band {b}: d2 {d2} d1 {d1} swaps {swaps}");
    }
}

#[test]
fn field_parity_agrees_with_coefficient_parity() {
    let c = w1();
    let geom = &c.problem.geom;
    let grid = Grid::cell(geom, geom.lattice.a / 24.0);
    for &b in &c.bands.guided_bands(&c.gap) {
        let i = 20;
        let k = c.bands.kpoints[i];
        let pairs = c.problem.solve(k, c.bands.spectra[i].len()).unwrap();
        let pair = &pairs[c.bands.sources[b][i]];
        let field = c.problem.field(k, b, pair, &grid);
        assert_eq!(
            classify_parity(&field, geom).unwrap(),
            c.bands.parity[b],
            "band {b}"
        );
    }
}

#[test]
fn crossings_lie_on_the_target_frequency() {
    let c = w1();
    let omega = c.gap.omega_lo + 0.6 * c.gap.width();
    let crossings = guided_mode_at_wavelength(&c.problem, &c.bands, &c.gap, omega).unwrap();
    assert!(!crossings.is_empty());
    for x in &crossings {
        assert!((x.omega - omega).abs() < 1e-6, "{x:?}");
        let pairs = c
            .problem
            .solve([x.k, 0.0], c.bands.spectra[0].len())
            .unwrap();
        assert!((pairs[x.state_index].omega - omega).abs() < 1e-6);
        assert_eq!(x.parity, c.bands.parity[x.band]);
    }
}

#[test]
fn crossing_group_index_matches_band_differences() {
    let c = w1();
    let omega = c.gap.omega_lo + 0.6 * c.gap.width();
    let crossings = guided_mode_at_wavelength(&c.problem, &c.bands, &c.gap, omega).unwrap();
    let dk = c.bands.kgrid[1] - c.bands.kgrid[0];
    for x in &crossings {
        let i = ((x.k / dk).floor() as usize).min(c.bands.nk() - 2);
        let w = &c.bands.bands[x.band];
        let coarse = dk / (w[i + 1] - w[i]);
        // The sample chord bounds the local slope loosely; demand agreement
        // in sign and within a factor of two.
        assert_eq!(coarse.signum(), x.ng.signum(), "{x:?}");
        let r = x.ng / coarse;
        assert!(r > 0.5 && r < 2.0, "{x:?} chord {coarse}");
    }
}
