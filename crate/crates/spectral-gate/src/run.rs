//! Batch pipelines behind the CLI subcommands.
//!
//! Every pipeline reads one scenario config, writes its artifacts under the
//! output directory, and reports through the exit code: 0 on success, 3 when
//! an iterative solve did not converge within its budget (the report is
//! still written), and an error otherwise. Outputs are byte-deterministic
//! for identical config and seed.

use std::path::{Path, PathBuf};

use log::info;
use num_complex::Complex64;
use serde::Serialize;

use crate::catalog::{
    assemble_multiphase_l, build_preset, check_key_identity, OperatorField, PhaseLayout,
    PhysicsPreset, ALL_PRESETS,
};
use crate::config::{OracleSection, ScenarioConfig};
use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::io;
use crate::pencil::OperatorPencil;
use crate::projection::{build_projection, ProjectionOperator};
use crate::solver::{
    analytic_property_check, dense_oracle_solve, inverse_form_solve, neumann_solve,
    splitting_solve, AnalyticProperty, SolveReport, Subspace,
};
use crate::spectrum::{eigen_oracle_spectrum, map_spectrum_region, MapMetadata, ScanSpec};
use crate::translation::{
    certify_coercivity, rotation_translation_2d, translation_from_csv, verify_translation,
    zero_translation, CertifierConfig, QstarSampling, Translation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    IdentityCheck,
    Solve,
    Certify,
    SpectrumMap,
    BlochScan,
    Properties,
}

#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

struct RunContext {
    cfg: ScenarioConfig,
    base_dir: PathBuf,
    out_dir: PathBuf,
    seed: u64,
}

impl RunContext {
    fn new(config_path: &Path, overrides: &RunOverrides) -> Result<Self> {
        let cfg = ScenarioConfig::from_path(config_path)?;
        let base_dir = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let out_dir = overrides
            .output_dir
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let seed = overrides.seed.unwrap_or_else(|| cfg.seed());
        std::fs::create_dir_all(&out_dir)?;
        Ok(Self {
            cfg,
            base_dir,
            out_dir,
            seed,
        })
    }

    fn grid(&self) -> Result<Grid> {
        self.cfg.require(self.cfg.grid.as_ref(), "grid")?.build()
    }

    fn preset(&self) -> Result<PhysicsPreset> {
        let (name, d) = self
            .cfg
            .require(self.cfg.preset.as_ref(), "preset")?
            .resolve()?;
        build_preset(name, d)
    }

    fn layout(&self, grid: &Grid) -> Result<PhaseLayout> {
        self.cfg
            .require(self.cfg.layout.as_ref(), "layout")?
            .build(grid, &self.base_dir)
    }

    /// The evaluated coefficient: the multiphase assembly from per-phase
    /// moduli, further evaluated at the pencil point `z` when one is given
    /// (`L(x) = Σ z_i χ_i(x) L_i`).
    fn operator(&self, preset: &PhysicsPreset, layout: &PhaseLayout) -> Result<OperatorField> {
        let moduli = self.cfg.phase_moduli()?;
        match &self.cfg.z {
            None => assemble_multiphase_l(preset, layout, &moduli),
            Some(z) => {
                let bases: Vec<_> = moduli
                    .iter()
                    .map(|m| preset.phase_matrix(m))
                    .collect::<Result<_>>()?;
                let pencil = OperatorPencil::from_indicator_phases(layout, &bases, preset.shape())?;
                let z: Vec<Complex64> = z.iter().map(|&v| v.into()).collect();
                pencil.evaluate(&z)
            }
        }
    }

    fn projector(&self, preset: &PhysicsPreset, grid: &Grid) -> Result<ProjectionOperator> {
        if let Some(cache) = &self.cfg.projector_cache {
            let path = self.base_dir.join(cache);
            if path.exists() {
                info!("loading projector cache from {}", path.display());
                let pi = io::load_projector(&path)?;
                if pi.grid() == grid && pi.shape() == preset.shape() {
                    return Ok(pi);
                }
                info!("projector cache does not match this scenario; rebuilding");
            }
            let pi = build_projection(preset.symbol(), grid)?;
            io::save_projector(&path, &pi)?;
            return Ok(pi);
        }
        build_projection(preset.symbol(), grid)
    }

    fn certifier_config(&self) -> CertifierConfig {
        self.cfg
            .certifier
            .as_ref()
            .map(|c| c.certifier_config())
            .unwrap_or_default()
    }

    /// Build and Q*-verify the translation library for a symbol. Every
    /// entry is re-verified numerically regardless of provenance.
    fn library(&self, preset: &PhysicsPreset) -> Result<Vec<Translation>> {
        let Some(cert) = &self.cfg.certifier else {
            return Ok(Vec::new());
        };
        let mut sampling = QstarSampling::default();
        if let Some(n) = cert.qstar_directions {
            sampling.directions = n;
        }
        let mut library = Vec::new();
        for name in cert.translations.clone().unwrap_or_default() {
            let tr = match name.as_str() {
                "zero" => zero_translation(preset.shape().dim()),
                "rotation-2d" => rotation_translation_2d(),
                other => {
                    return Err(Error::Config(format!(
                        "unknown built-in translation '{other}'"
                    )))
                }
            };
            let tr = verify_translation(tr, preset.symbol(), &sampling)?;
            if !tr.is_verified_pass() {
                return Err(Error::UnverifiedTranslation(format!(
                    "{name}: Q* verification failed with worst {}",
                    tr.verified().unwrap().worst
                )));
            }
            library.push(tr);
        }
        for f in cert.translation_files.clone().unwrap_or_default() {
            let text = std::fs::read_to_string(self.base_dir.join(&f.path))?;
            let id = f.id.clone().unwrap_or_else(|| f.path.clone());
            let tr = translation_from_csv(id.clone(), f.ell, &text)?;
            let tr = verify_translation(tr, preset.symbol(), &sampling)?;
            if !tr.is_verified_pass() {
                return Err(Error::UnverifiedTranslation(format!(
                    "{id}: Q* verification failed with worst {}",
                    tr.verified().unwrap().worst
                )));
            }
            library.push(tr);
        }
        Ok(library)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes)?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Error::Format(format!("json: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// Run one subcommand pipeline. Returns the process exit code.
pub fn run_config(command: Command, config_path: &Path, overrides: &RunOverrides) -> Result<i32> {
    let ctx = RunContext::new(config_path, overrides)?;
    match command {
        Command::IdentityCheck => identity_check(&ctx),
        Command::Solve => solve(&ctx),
        Command::Certify => certify(&ctx),
        Command::SpectrumMap => spectrum_map(&ctx),
        Command::BlochScan => bloch_scan(&ctx),
        Command::Properties => properties(&ctx),
    }
}

// ---------------------------------------------------------------------------
// identity-check
// ---------------------------------------------------------------------------

fn identity_check(ctx: &RunContext) -> Result<i32> {
    let section = ctx
        .cfg
        .identity_check
        .clone()
        .unwrap_or(crate::config::IdentityCheckSection {
            presets: None,
            trials: None,
            grid_points: None,
        });
    let trials = section.trials.unwrap_or(20);
    let n = section.grid_points.unwrap_or(16);
    let names: Vec<String> = section
        .presets
        .unwrap_or_else(|| ALL_PRESETS.iter().map(|p| p.as_str().to_string()).collect());

    let mut csv = String::from(
        "preset,d,grid_points,max_pairing,idempotence_defect,selfadjointness_defect\n",
    );
    let mut worst_overall: f64 = 0.0;
    for name in &names {
        let preset_name: crate::catalog::PresetName = name.parse()?;
        let d = preset_name.default_dim();
        let preset = build_preset(preset_name, d)?;
        let grid = Grid::cubic(d, n)?;
        let worst = check_key_identity(&preset, &grid, trials, ctx.seed)?;
        let pi = build_projection(preset.symbol(), &grid)?;
        let (idem, selfadj) = pi.projector_algebra_defects();
        println!(
            "{name:>20}  d={d}  max |(J,E)|/(|P||Q|) = {worst:.3e}  idem = {idem:.3e}  selfadj = {selfadj:.3e}"
        );
        csv.push_str(&format!(
            "{name},{d},{n},{},{},{}\n",
            io::fmt_g17(worst),
            io::fmt_g17(idem),
            io::fmt_g17(selfadj)
        ));
        worst_overall = worst_overall.max(worst).max(idem).max(selfadj);
    }
    ctx.write("identity_check.csv", csv.as_bytes())?;
    if worst_overall > 1e-12 {
        return Err(Error::SoundnessViolation(format!(
            "identity check exceeded tolerance: worst {worst_overall:.3e}"
        )));
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveArtifact {
    method: String,
    seed: u64,
    certificate: Option<crate::pencil::CoercivityCertificate>,
    report: Option<crate::solver::SolveRecord>,
}

fn solve(ctx: &RunContext) -> Result<i32> {
    let grid = ctx.grid()?;
    let preset = ctx.preset()?;
    let layout = ctx.layout(&grid)?;
    let l = ctx.operator(&preset, &layout)?;
    let pi = ctx.projector(&preset, &grid)?;
    let sub = Subspace::e_space(&pi);
    let h = Field::random(&grid, preset.shape(), ctx.seed);
    let solver = ctx
        .cfg
        .solver
        .clone()
        .unwrap_or(crate::config::SolverSection {
            tol: None,
            max_iter: None,
            oracle_cap: None,
            method: None,
            split_factors: None,
        });
    let cfg = ctx.certifier_config();
    let library = ctx.library(&preset)?;

    let method = solver.method().to_string();
    let (solution, certificate, report): (Field, _, Option<SolveReport>) = match method.as_str() {
        "dense" => {
            let e = dense_oracle_solve(&l, &sub, &h, solver.oracle_cap())?;
            (e, None, None)
        }
        "neumann" => {
            let cert = certify_coercivity(&l, &library, &cfg)?.ok_or_else(|| {
                Error::Certificate("no coercivity certificate for this operator".into())
            })?;
            let rep = neumann_solve(&l, &sub, &h, &cert, solver.tol(), solver.max_iter())?;
            (rep.solution.clone(), Some(cert), Some(rep))
        }
        "inverse-form" => {
            let rep = inverse_form_solve(&l, &pi, &h, &cfg, solver.tol(), solver.max_iter())?;
            (rep.solution.clone(), None, Some(rep))
        }
        "splitting" => {
            let (la, lb) = l.hermitian_split();
            let rep = splitting_solve(
                &la,
                &lb,
                &pi,
                &h,
                solver.factors(),
                &cfg,
                solver.tol(),
                solver.max_iter(),
            )?;
            (rep.solution.clone(), None, Some(rep))
        }
        other => return Err(Error::Config(format!("unknown solver method '{other}'"))),
    };

    io::save_field(&ctx.out_dir.join("solution.sgf"), &solution)?;
    ctx.write("solution.csv", io::field_to_csv(&solution).as_bytes())?;
    let converged = report.as_ref().map(|r| r.converged).unwrap_or(true);
    let artifact = SolveArtifact {
        method,
        seed: ctx.seed,
        certificate,
        report: report.as_ref().map(|r| r.record()),
    };
    ctx.write_json("solve_report.json", &artifact)?;
    if !converged {
        eprintln!("solver did not converge within the iteration budget; report written");
        return Ok(3);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CertifyArtifact {
    preset: String,
    certificate: Option<crate::pencil::CoercivityCertificate>,
    translation_ids: Vec<String>,
    theta_samples: usize,
}

fn certify(ctx: &RunContext) -> Result<i32> {
    let grid = ctx.grid()?;
    let preset = ctx.preset()?;
    let layout = ctx.layout(&grid)?;
    let l = ctx.operator(&preset, &layout)?;
    let cfg = ctx.certifier_config();
    let library = ctx.library(&preset)?;
    let certificate = certify_coercivity(&l, &library, &cfg)?;
    match &certificate {
        Some(c) => println!(
            "certified: theta = {:.6}, alpha = {:.6e}, beta = {:.6e}, t = {:.6e}{}",
            c.theta,
            c.alpha,
            c.beta,
            c.t,
            c.translation_id
                .as_ref()
                .map(|id| format!(", translation = {id}"))
                .unwrap_or_default()
        ),
        None => println!("no certificate found (this is not a spectrum claim)"),
    }
    let artifact = CertifyArtifact {
        preset: preset.name().to_string(),
        certificate,
        translation_ids: library.iter().map(|t| t.id().to_string()).collect(),
        theta_samples: cfg.theta_samples,
    };
    ctx.write_json("certificate.json", &artifact)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// spectrum-map
// ---------------------------------------------------------------------------

fn spectrum_map(ctx: &RunContext) -> Result<i32> {
    let grid = ctx.grid()?;
    let preset = ctx.preset()?;
    let layout = ctx.layout(&grid)?;
    let moduli = ctx.cfg.phase_moduli()?;
    if moduli.len() != layout.num_phases() {
        return Err(Error::Config("one phases entry per layout phase".into()));
    }
    let bases: Vec<_> = moduli
        .iter()
        .map(|m| preset.phase_matrix(m))
        .collect::<Result<_>>()?;
    let pencil = OperatorPencil::from_indicator_phases(&layout, &bases, preset.shape())?;

    let section = ctx.cfg.require(ctx.cfg.scan.as_ref(), "scan")?;
    let vary = section.vary.unwrap_or(layout.num_phases() - 1);
    let fixed: Vec<[f64; 2]> = match &section.fixed {
        Some(f) => f
            .iter()
            .map(|&v| {
                let c: Complex64 = v.into();
                [c.re, c.im]
            })
            .collect(),
        None => vec![[1.0, 0.0]; layout.num_phases()],
    };
    let scan = ScanSpec {
        vary,
        fixed,
        re_range: section.re,
        re_steps: section.resolution[0],
        im_range: section.im,
        im_steps: section.resolution[1],
        budget: section.budget,
    };
    let cfg = ctx.certifier_config();
    let library = ctx.library(&preset)?;
    let metadata = MapMetadata {
        preset: preset.name().to_string(),
        layout: format!("{:?}", ctx.cfg.layout.as_ref().unwrap()),
        theta_samples: cfg.theta_samples,
        translation_ids: vec![],
        seed: ctx.seed,
    };
    let mut map = map_spectrum_region(&pencil, &scan, &library, &cfg, metadata)?;

    if let Some(OracleSection {
        enabled: true,
        phase,
        coincidence_tol,
    }) = ctx.cfg.oracle
    {
        let pi = ctx.projector(&preset, &grid)?;
        let sub = Subspace::e_space(&pi);
        let cap = ctx
            .cfg
            .solver
            .as_ref()
            .map(|s| s.oracle_cap())
            .unwrap_or(crate::solver::DEFAULT_ORACLE_CAP);
        let points = eigen_oracle_spectrum(&sub, &layout, phase.unwrap_or(1), cap)?;
        map.overlay_oracle(&points, coincidence_tol.unwrap_or(1e-6))?;
        let oracle_csv: String = std::iter::once("z_over_z1\n".to_string())
            .chain(points.iter().map(|p| format!("{}\n", io::fmt_g17(*p))))
            .collect();
        ctx.write("oracle_points.csv", oracle_csv.as_bytes())?;
    }

    ctx.write("spectrum_map.csv", io::map_to_csv(&map).as_bytes())?;
    ctx.write("spectrum_map.pgm", &io::map_to_pgm(&map))?;
    ctx.write_json("spectrum_map.json", &map)?;
    println!(
        "map: {} certified, {} uncertified, {} oracle-spectrum, {} unscanned",
        map.count("certified"),
        map.count("uncertified"),
        map.count("oracle-spectrum"),
        map.count("unscanned")
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// bloch-scan
// ---------------------------------------------------------------------------

fn bloch_scan(ctx: &RunContext) -> Result<i32> {
    let grid = ctx.grid()?;
    let section = ctx.cfg.require(ctx.cfg.bloch.as_ref(), "bloch")?;
    let layout = ctx.layout(&grid)?;
    let rho: Vec<Complex64> = section.rho.iter().map(|&v| v.into()).collect();
    let kappa: Vec<Complex64> = section.kappa.iter().map(|&v| v.into()).collect();
    let omegas: Vec<Complex64> = section.omegas.iter().map(|&v| v.into()).collect();
    if omegas.is_empty() {
        // an empty frequency list is a valid (empty) scan
        ctx.write("band_report.csv", crate::io::band_to_csv(&[]).as_bytes())?;
        ctx.write_json("band_report.json", &Vec::<crate::bloch::BlochPoint>::new())?;
        return Ok(0);
    }
    let med = crate::bloch::BlochMedium::new(layout, rho, kappa, omegas[0])?;
    let k_points =
        crate::bloch::k_path_points(&section.k_vertices, section.per_segment.unwrap_or(8))?;
    let preset = build_preset(crate::catalog::PresetName::Acoustics, grid.dim())?;
    let pi = ctx.projector(&preset, &grid)?;
    let cfg = ctx.certifier_config();
    let library = ctx.library(&preset)?;
    let cap = ctx
        .cfg
        .solver
        .as_ref()
        .map(|s| s.oracle_cap())
        .unwrap_or(crate::solver::DEFAULT_ORACLE_CAP);
    let points = crate::bloch::bloch_scan(
        &med,
        &k_points,
        &omegas,
        &pi,
        &library,
        &cfg,
        cap,
        section
            .singular_tol
            .unwrap_or(crate::bloch::DEFAULT_SINGULAR_TOL),
    )?;
    ctx.write(
        "band_report.csv",
        crate::io::band_to_csv(&points).as_bytes(),
    )?;
    ctx.write_json("band_report.json", &points)?;
    let detected = points.iter().filter(|p| p.near_singular).count();
    let certified = points.iter().filter(|p| p.certified).count();
    println!(
        "bloch scan: {} points, {certified} certified, {detected} near-singular",
        points.len()
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// properties
// ---------------------------------------------------------------------------

fn properties(ctx: &RunContext) -> Result<i32> {
    let grid = ctx.grid()?;
    let preset = ctx.preset()?;
    let layout = ctx.layout(&grid)?;
    let l = ctx.operator(&preset, &layout)?;
    let pi = ctx.projector(&preset, &grid)?;
    let section = ctx.cfg.require(ctx.cfg.properties.as_ref(), "properties")?;
    let samples = section.samples.unwrap_or(10);
    let solver = ctx.cfg.solver.clone();
    let tol = solver.as_ref().map(|s| s.tol()).unwrap_or(1e-12);
    let max_iter = solver.as_ref().map(|s| s.max_iter()).unwrap_or(20_000);
    let cfg = ctx.certifier_config();

    let mut reports = Vec::new();
    let mut all_pass = true;
    for name in &section.which {
        let property: AnalyticProperty = name.parse()?;
        let report =
            analytic_property_check(&l, &pi, property, samples, ctx.seed, &cfg, tol, max_iter)?;
        println!(
            "{:>14}: worst margin {:.3e} (tolerance {:.0e}) — {}",
            property.as_str(),
            report.worst,
            report.tolerance,
            if report.pass { "pass" } else { "FAIL" }
        );
        all_pass &= report.pass;
        reports.push(report);
    }
    ctx.write_json("properties.json", &reports)?;
    if !all_pass {
        return Err(Error::SoundnessViolation(
            "an analytic property check failed".into(),
        ));
    }
    Ok(0)
}
