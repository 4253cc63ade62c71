//! Command-line front end: configuration ingestion, command dispatch and
//! CSV/JSON/SVG emission.
//!
//! All normalized quantities are written as they are computed (k in `2π/a`,
//! ω as `a/λ`); nm columns are converted with the configured `a`.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bands::{
    bulk_band_structure, compute_band_structure, find_bandgap, guided_mode_at_wavelength,
    ng_peak_report, waveguide_kgrid, BandStructure, GapInfo, Parity,
};
use crate::emitter::{
    EmitterMaps, MapSettings, MapSummary, PurcellUnits, DEFAULT_EPSILON_THRESHOLD,
};
use crate::error::Error;
use crate::geometry::{build_bulk_cell, build_waveguide_cell, SupercellGeometry};
use crate::pwe::TeProblem;
use crate::source::{compute_budget, db_to_linear, required_beta2, BudgetInputs};

pub use config::{
    AnalysisSettings, OutputSettings, RunConfig, Section, SolverSettings, SweepRange,
};

#[derive(Debug, Parser)]
#[command(
    name = "pcw",
    version,
    about = "Band structures, emitter maps and source budgets of dual-mode photonic-crystal waveguides"
)]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also emit SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bulk bands along Γ–M–K–Γ and the TE gap.
    BulkBands,
    /// Supercell bands, parity and group index of one waveguide section.
    WgBands {
        #[arg(value_enum)]
        section: Section,
    },
    /// Purcell, β and impurity maps at a list of wavelengths.
    Maps {
        /// Comma-separated wavelengths (nm); defaults to `analysis.wavelengths_nm`.
        #[arg(long, value_delimiter = ',')]
        wavelengths: Vec<f64>,
        #[arg(long, value_enum, default_value = "dual")]
        section: Section,
    },
    /// Area fractions as a function of wavelength.
    Sweep {
        #[arg(long, value_enum, default_value = "dual")]
        section: Section,
    },
    /// Efficiency and impurity budget from a JSON budget file.
    Pipeline {
        /// Budget file; `--config` is used when omitted.
        budget: Option<PathBuf>,
        /// Extinction in dB; derives `t_1in` from `t_2in` and the pump split.
        #[arg(long, allow_hyphen_values = true)]
        eta_db: Option<f64>,
        /// Impurity target of the required-β2 estimate.
        #[arg(long, default_value_t = DEFAULT_EPSILON_THRESHOLD)]
        epsilon_target: f64,
    },
    /// Effective index of the membrane's fundamental TE slab mode.
    SlabNeff,
}

/// Failure of a command, with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: kind.to_string(),
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error, code: u8) -> Self {
        Self {
            code,
            kind: "Io".into(),
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind, "message": self.message}}).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter { .. } | Error::OverlappingHoles { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and reports errors
/// as JSON on stderr.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage("Usage", e.render().to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code)
        }
    }
}

/// Runs a parsed command inside a pool of the requested size and returns
/// what it prints on stdout.
pub fn execute(cli: &Cli) -> CliResult<String> {
    if cli.threads == Some(0) {
        return Err(CliError::usage("Usage", "--threads must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage("Usage", e.to_string()))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Pipeline {
            budget,
            eta_db,
            epsilon_target,
        } => {
            let path = budget
                .as_ref()
                .or(cli.config.as_ref())
                .ok_or_else(|| CliError::usage("Usage", "pipeline needs a budget file"))?;
            let out = cli.out.as_ref().map(|d| Output::new(d.clone(), false));
            cmd_pipeline(path, *eta_db, *epsilon_target, out)
        }
        command => {
            let cfg = load_config(cli.config.as_deref())?;
            let dir = cli
                .out
                .clone()
                .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let mut out = Output::new(dir, cli.plot || cfg.output.plot);
            match command {
                Command::BulkBands => cmd_bulk_bands(&cfg, &mut out),
                Command::WgBands { section } => cmd_wg_bands(&cfg, *section, &mut out),
                Command::Maps {
                    wavelengths,
                    section,
                } => {
                    let list = if wavelengths.is_empty() {
                        cfg.analysis.wavelengths_nm.clone()
                    } else {
                        wavelengths.clone()
                    };
                    cmd_maps(&cfg, *section, &list, &mut out)
                }
                Command::Sweep { section } => cmd_sweep(&cfg, *section, &mut out),
                Command::SlabNeff => cmd_slab_neff(&cfg),
                Command::Pipeline { .. } => unreachable!(),
            }
        }
    }
}

pub fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let path =
        path.ok_or_else(|| CliError::usage("Usage", "this command needs --config <path>"))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e, 2))?;
    let cfg = RunConfig::from_json(&text)
        .map_err(|e| CliError::usage("ConfigParse", format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Collects written artifacts under one directory.
pub struct Output {
    dir: PathBuf,
    plot: bool,
    written: Vec<String>,
}

impl Output {
    pub fn new(dir: PathBuf, plot: bool) -> Self {
        Self {
            dir,
            plot,
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e, 1))?;
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e, 1))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.write(name, &text)
    }

    fn report(&self, command: &str, result: Value) -> String {
        let mut text = serde_json::to_string_pretty(&json!({
            "command": command,
            "out_dir": self.dir.display().to_string(),
            "files": self.written,
            "result": result,
        }))
        .expect("serializable report");
        text.push('\n');
        text
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn wavelength_tag(nm: f64) -> String {
    format!("{nm:08.3}")
}

fn gap_json(result: &Result<GapInfo, Error>, a_nm: f64) -> Value {
    let (status, lo, hi) = match result {
        Ok(g) => ("gap", g.omega_lo, g.omega_hi),
        Err(Error::NoGap { omega_lo, omega_hi }) => ("no_gap", *omega_lo, *omega_hi),
        Err(e) => return json!({"status": "error", "kind": e.kind()}),
    };
    json!({
        "status": status,
        "omega_lo": lo,
        "omega_hi": hi,
        "lambda_hi_nm": a_nm / lo,
        "lambda_lo_nm": a_nm / hi,
        "midgap_omega": 0.5 * (lo + hi),
    })
}

fn solve_bulk(cfg: &RunConfig) -> CliResult<(SupercellGeometry, BandStructure)> {
    let geom = build_bulk_cell(cfg.device.lattice()?)?;
    let problem = TeProblem::new(&geom, cfg.solver.cutoff)?;
    let bands = bulk_band_structure(
        &problem,
        cfg.solver.bulk_points_per_segment,
        cfg.solver.bulk_nbands,
    )?;
    Ok((geom, bands))
}

pub fn cmd_bulk_bands(cfg: &RunConfig, out: &mut Output) -> CliResult<String> {
    let (geom, bands) = solve_bulk(cfg)?;
    let a = cfg.device.a_nm;
    let mut csv = String::from("path_2pi_over_a,k_x_2pi_over_a,k_y_2pi_over_a,band_index,omega_a_over_lambda,wavelength_nm\n");
    for (i, s) in bands.spectra.iter().enumerate() {
        let k = bands.kpoints[i];
        for (b, &w) in s.iter().take(cfg.solver.bulk_nbands).enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{b},{w},{}",
                bands.kgrid[i],
                k[0],
                k[1],
                a / w
            );
        }
    }
    out.write("bulk_bands.csv", &csv)?;
    let gap = find_bandgap(&bands);
    if let Err(e) = &gap {
        if !matches!(e, Error::NoGap { .. }) {
            return Err(e.clone().into());
        }
    }
    let mut report = gap_json(&gap, a);
    report["fill_fraction"] = json!(geom.fill_fraction());
    report["basis_size"] = json!(bands.provenance.basis_size);
    out.write_json("bulk_bands_gap.json", &report)?;
    if out.plot {
        let series: Vec<svg::Series> = (0..cfg.solver.bulk_nbands)
            .map(|b| svg::Series {
                x: bands.kgrid.clone(),
                y: bands
                    .spectra
                    .iter()
                    .map(|s| s.get(b).copied().unwrap_or(f64::NAN))
                    .collect(),
                color: "black",
            })
            .collect();
        let shade = gap.as_ref().ok().map(|g| (g.omega_lo, g.omega_hi));
        out.write(
            "bulk_bands.svg",
            &svg::line_plot(&series, "path (2π/a)", "ωa/2πc", shade),
        )?;
    }
    Ok(out.report("bulk-bands", report))
}

/// Everything a waveguide command needs about one section.
pub struct SectionRun {
    pub section: Section,
    pub problem: TeProblem,
    pub gap: GapInfo,
    pub bands: BandStructure,
}

pub fn solve_section(cfg: &RunConfig, section: Section) -> CliResult<SectionRun> {
    let (_, bulk) = solve_bulk(cfg)?;
    let gap = find_bandgap(&bulk)?;
    let geom = build_waveguide_cell(cfg.device.lattice()?, cfg.section_params(section))?;
    let problem = TeProblem::new(&geom, cfg.solver.cutoff)?;
    let (kgrid, kpoints) = waveguide_kgrid(cfg.solver.nk);
    let bands = compute_band_structure(
        &problem,
        &kgrid,
        &kpoints,
        cfg.nbands(),
        Some((gap.omega_lo, gap.omega_hi)),
    )?;
    Ok(SectionRun {
        section,
        problem,
        gap,
        bands,
    })
}

fn guided_summary(run: &SectionRun) -> Vec<Value> {
    let bs = &run.bands;
    bs.guided_bands(&run.gap)
        .into_iter()
        .map(|b| {
            let idx: Vec<usize> = (0..bs.nk())
                .filter(|&i| bs.is_guided_sample(b, i, &run.gap))
                .collect();
            let w = &bs.bands[b];
            let peak = bs.interior_ng_peak(b, &run.gap).map(|(i, v)| {
                json!({"k_x_2pi_over_a": bs.kgrid[i], "omega_a_over_lambda": w[i], "ng_abs": v})
            });
            json!({
                "band_index": b,
                "parity": bs.parity[b].as_str(),
                "omega_min": idx.iter().map(|&i| w[i]).fold(f64::MAX, f64::min),
                "omega_max": idx.iter().map(|&i| w[i]).fold(f64::MIN, f64::max),
                "k_min": bs.kgrid[idx[0]],
                "k_max": bs.kgrid[*idx.last().expect("guided band has samples")],
                "interior_ng_peak": peak,
            })
        })
        .collect()
}

pub fn cmd_wg_bands(cfg: &RunConfig, section: Section, out: &mut Output) -> CliResult<String> {
    let run = solve_section(cfg, section)?;
    let (bs, gap, a) = (&run.bands, &run.gap, cfg.device.a_nm);
    let name = section.name();
    let mut csv = String::from("k_x_2pi_over_a,band_index,omega_a_over_lambda,wavelength_nm,parity,ng,localization,guided\n");
    for i in 0..bs.nk() {
        for b in 0..bs.nbands() {
            let w = bs.bands[b][i];
            let _ = writeln!(
                csv,
                "{},{b},{w},{},{},{},{},{}",
                bs.kgrid[i],
                a / w,
                bs.parity[b].as_str(),
                bs.ng[b][i],
                opt(bs.localization[b][i]),
                bs.is_guided_sample(b, i, gap)
            );
        }
    }
    out.write(&format!("wg_bands_{name}.csv"), &csv)?;

    let design_omega = cfg
        .analysis
        .design_wavelength_nm
        .map_or(gap.midgap(), |l| a / l);
    let crossings = match guided_mode_at_wavelength(&run.problem, bs, gap, design_omega) {
        Ok(c) => json!(c),
        Err(Error::NoneFound { .. }) => json!([]),
        Err(e) => return Err(e.into()),
    };
    let report = json!({
        "section": name,
        "gap": gap_json(&Ok(*gap), a),
        "design_omega": design_omega,
        "design_wavelength_nm": a / design_omega,
        "guided_bands": guided_summary(&run),
        "crossings_at_design": crossings,
        "ambiguities": bs.ambiguities,
        "provenance": bs.provenance,
    });
    out.write_json(&format!("wg_bands_{name}.json"), &report)?;

    if section == Section::Dual {
        let peak = match ng_peak_report(&run.problem, bs, gap) {
            Ok(r) => json!({"status": "ok", "report": r, "peak_wavelength_nm": a / r.peak_omega}),
            Err(Error::NoneFound { .. }) => json!({"status": "none_found"}),
            Err(e) => return Err(e.into()),
        };
        out.write_json("wg_bands_dual_ng_peak.json", &peak)?;
    }
    if out.plot {
        let guided = bs.guided_bands(gap);
        let series: Vec<svg::Series> = (0..bs.nbands())
            .map(|b| svg::Series {
                x: bs.kgrid.clone(),
                y: bs.bands[b].clone(),
                color: match (guided.contains(&b), bs.parity[b]) {
                    (true, Parity::Even) => "#1f5fbf",
                    (true, Parity::Odd) => "#c0392b",
                    _ => "#999999",
                },
            })
            .collect();
        out.write(
            &format!("wg_bands_{name}.svg"),
            &svg::line_plot(
                &series,
                "k_x (2π/a)",
                "ωa/2πc",
                Some((gap.omega_lo, gap.omega_hi)),
            ),
        )?;
    }
    Ok(out.report("wg-bands", report))
}

pub fn map_settings(cfg: &RunConfig) -> MapSettings {
    let a = &cfg.analysis;
    MapSettings {
        grid_spacing_nm: cfg.grid_spacing_nm(),
        clearance_nm: a.clearance_nm,
        f_ng: a.f_ng,
        units: PurcellUnits {
            a_nm: cfg.device.a_nm,
            t_eff_nm: a.t_eff_nm.unwrap_or(cfg.device.t_nm),
            n_ref: a.n_ref.unwrap_or(cfg.device.n_slab),
        },
        impurity: a.impurity(),
    }
}

fn maps_csv(maps: &EmitterMaps) -> String {
    let g = &maps.grid;
    let mut csv = String::from("x_nm,y_nm,f1,f2,beta1,beta2,epsilon,in_mask\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = j * g.nx + i;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                g.x(i),
                g.y(j),
                maps.f1[p],
                maps.f2[p],
                maps.beta1[p],
                maps.beta2[p],
                maps.epsilon[p],
                u8::from(maps.mask[p])
            );
        }
    }
    csv
}

pub fn cmd_maps(
    cfg: &RunConfig,
    section: Section,
    wavelengths: &[f64],
    out: &mut Output,
) -> CliResult<String> {
    if wavelengths.is_empty() {
        return Err(CliError::usage(
            "Usage",
            "maps needs at least one wavelength",
        ));
    }
    if let Some(w) = wavelengths.iter().find(|&&w| !(w > 0.0)) {
        return Err(CliError::usage(
            "Usage",
            format!("wavelength must be positive, got {w}"),
        ));
    }
    let run = solve_section(cfg, section)?;
    let settings = map_settings(cfg);
    let a = cfg.device.a_nm;
    let maps: Vec<EmitterMaps> = wavelengths
        .par_iter()
        .map(|&l| EmitterMaps::at_frequency(&run.problem, &run.bands, &run.gap, a / l, &settings))
        .collect::<Result<_, Error>>()?;
    let name = section.name();
    let mut summaries = Vec::with_capacity(maps.len());
    for m in &maps {
        let tag = wavelength_tag(m.wavelength_nm);
        let stem = format!("maps_{name}_{tag}");
        out.write(&format!("{stem}.csv"), &maps_csv(m))?;
        let summary = m.summary()?;
        out.write_json(&format!("{stem}.json"), &summary)?;
        if out.plot {
            let (nx, ny) = (m.grid.nx, m.grid.ny);
            out.write(
                &format!("{stem}_f1.svg"),
                &svg::heatmap(nx, ny, &m.f1, "F1"),
            )?;
            out.write(
                &format!("{stem}_beta1.svg"),
                &svg::heatmap(nx, ny, &m.beta1, "beta1"),
            )?;
        }
        summaries.push(summary);
    }
    out.write_json(&format!("maps_{name}_summary.json"), &summaries)?;
    Ok(out.report("maps", json!(summaries)))
}

pub fn sweep_wavelengths(cfg: &RunConfig) -> Vec<f64> {
    match &cfg.analysis.sweep {
        Some(r) => r.wavelengths(),
        None => cfg.analysis.wavelengths_nm.clone(),
    }
}

pub fn cmd_sweep(cfg: &RunConfig, section: Section, out: &mut Output) -> CliResult<String> {
    let wavelengths = sweep_wavelengths(cfg);
    if wavelengths.is_empty() {
        return Err(CliError::usage(
            "Usage",
            "sweep needs analysis.sweep or analysis.wavelengths_nm",
        ));
    }
    let run = solve_section(cfg, section)?;
    let settings = map_settings(cfg);
    let a = cfg.device.a_nm;
    let rows: Vec<Result<MapSummary, Error>> = wavelengths
        .par_iter()
        .map(|&l| {
            EmitterMaps::at_frequency(&run.problem, &run.bands, &run.gap, a / l, &settings)
                .and_then(|m| m.summary())
        })
        .collect();
    let thresholds = &cfg.analysis.beta_thresholds;
    let mut csv = String::from("wavelength_nm,omega_a_over_lambda,status,ng1,ng2,beta1_max");
    for t in thresholds {
        let _ = write!(csv, ",fraction_beta1_ge_{t:.2}");
    }
    csv.push_str(",working_fraction\n");
    let mut ok = 0usize;
    let mut series: Vec<svg::Series> = Vec::new();
    let colors = ["#1f5fbf", "#27ae60", "#c0392b", "#8e44ad", "#d35400"];
    for (n, _) in thresholds
        .iter()
        .enumerate()
        .chain([(thresholds.len(), &0.0)])
    {
        series.push(svg::Series {
            x: Vec::new(),
            y: Vec::new(),
            color: if n == thresholds.len() {
                "black"
            } else {
                colors[n % colors.len()]
            },
        });
    }
    for (&l, row) in wavelengths.iter().zip(&rows) {
        match row {
            Ok(s) => {
                ok += 1;
                let _ = write!(
                    csv,
                    "{l},{},ok,{},{},{}",
                    a / l,
                    s.ng1,
                    opt(s.ng2),
                    s.beta1_max
                );
                for (n, t) in thresholds.iter().enumerate() {
                    let f = s.fractions[&format!("{t:.2}")];
                    let _ = write!(csv, ",{f}");
                    series[n].x.push(l);
                    series[n].y.push(f);
                }
                let _ = writeln!(csv, ",{}", s.working_fraction);
                let last = series.len() - 1;
                series[last].x.push(l);
                series[last].y.push(s.working_fraction);
            }
            Err(e @ (Error::NoneFound { .. } | Error::EmptyMask)) => {
                let _ = write!(csv, "{l},{},{},,,", a / l, e.kind());
                csv.push_str(&",".repeat(thresholds.len()));
                csv.push('\n');
            }
            Err(e) => return Err(e.clone().into()),
        }
    }
    let name = section.name();
    out.write(&format!("sweep_{name}.csv"), &csv)?;
    if out.plot {
        out.write(
            &format!("sweep_{name}.svg"),
            &svg::line_plot(&series, "wavelength (nm)", "area fraction", None),
        )?;
    }
    Ok(out.report("sweep", json!({"wavelengths": wavelengths.len(), "ok": ok})))
}

pub fn cmd_slab_neff(cfg: &RunConfig) -> CliResult<String> {
    let n_eff = cfg.device.effective_index()?;
    let mut text = serde_json::to_string_pretty(&json!({
        "n_eff": n_eff,
        "eps_eff": n_eff * n_eff,
        "n_slab": cfg.device.n_slab,
        "t_nm": cfg.device.t_nm,
        "wavelength_nm": cfg.device.wavelength_nm,
    }))
    .expect("serializable report");
    text.push('\n');
    Ok(text)
}

/// Reads budget inputs; with `eta_db` the input-filter even transmission is
/// derived as `t_1in = η · I_l2 · T_2in / I_l1`.
pub fn read_budget(text: &str, eta_db: Option<f64>) -> CliResult<BudgetInputs> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| CliError::usage("ConfigParse", e.to_string()))?;
    if let (Some(db), Some(obj)) = (eta_db, value.as_object_mut()) {
        let get = |k: &str, d: f64| obj.get(k).and_then(Value::as_f64).unwrap_or(d);
        let (i1, i2) = (get("i_l1", 0.5), get("i_l2", 0.5));
        if let Some(t2) = obj.get("t_2in").and_then(Value::as_f64) {
            let t1 = db_to_linear(db) * i2 * t2 / i1;
            obj.insert("t_1in".into(), json!(t1));
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::usage("ConfigParse", e.to_string()))
}

pub fn cmd_pipeline(
    path: &Path,
    eta_db: Option<f64>,
    epsilon_target: f64,
    out: Option<Output>,
) -> CliResult<String> {
    if !(epsilon_target > 0.0) {
        return Err(CliError::usage(
            "Usage",
            "--epsilon-target must be positive",
        ));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e, 2))?;
    let inputs = read_budget(&text, eta_db)?;
    let budget = compute_budget(inputs)?;
    let beta2 = required_beta2(budget.eta, inputs.beta1, epsilon_target);
    let report = json!({
        "budget": budget,
        "epsilon_target": epsilon_target,
        "required_beta2": beta2,
    });
    if let Some(mut out) = out {
        out.write_json("pipeline.json", &report)?;
    }
    let mut text = serde_json::to_string_pretty(&report).expect("serializable report");
    text.push_str("\n\n");
    text.push_str(&budget.table());
    let _ = writeln!(text, "{:<16} {:>14.6e}", "required_beta2", beta2);
    Ok(text)
}
