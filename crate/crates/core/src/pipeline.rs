//! Drivers behind the command-line subcommands: full solve, mesh convergence,
//! perturbation comparison and the built-in oracle battery.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::error::{PipeError, Result};
use crate::fields::{self, FlowField, NormReport};
use crate::geometry::{CurveSpec, GeometryReport, PipeGeometry, RadiusJet, RadiusSpec};
use crate::perturbation::{compare_full_vs_perturbative, Family, PerturbationReport};
use crate::prandtl::{rigidity_profile, solve_prandtl, PrandtlProfile, RigidityProfile};
use crate::reynolds::{
    longitudinal_velocity, longitudinal_velocity_s, pressure_derivative_bounds, solve_reynolds,
    solve_reynolds_fd, PressureBounds, PressureProfile,
};
use crate::section::{build_meshes, SectionMesh, SectionShape};
use crate::stats::{is_monotone_decreasing, observed_orders};
use crate::transverse::{
    check_compatibility, manufactured_claim_check, solve_all, TransverseSolution,
};

pub const OUTPUT_ENV: &str = "CURVED_PIPE_OUTPUT";
pub const THREADS_ENV: &str = "CURVED_PIPE_THREADS";

/// Everything computed by a full solve.
pub struct Solution {
    pub geometry: PipeGeometry,
    pub meshes: Vec<SectionMesh>,
    pub prandtl: PrandtlProfile,
    pub pressure: PressureProfile,
    pub transverse: Option<Vec<TransverseSolution>>,
    pub field: FlowField,
}

pub fn build_geometry(cfg: &RunConfig, h: f64, n_theta: usize) -> Result<PipeGeometry> {
    PipeGeometry::build(
        &cfg.curve_spec()?,
        cfg.radius_spec()?,
        h,
        cfg.discretization.n_s,
        n_theta,
    )
}

pub fn compute(cfg: &RunConfig) -> Result<Solution> {
    let d = &cfg.discretization;
    let geometry = build_geometry(cfg, cfg.physics.h, d.n_theta)?;
    let meshes = build_meshes(&geometry, d.n_rho)?;
    let prandtl = rigidity_profile(&meshes)?;
    let pressure = solve_reynolds(&prandtl.rigidity, cfg.physics.flux, cfg.physics.p_per)
        .map_err(|e| e.at_station("reynolds", 0, 0.0))?;
    let transverse = if cfg.toggles.transverse {
        Some(solve_all(
            &meshes,
            &prandtl.solutions,
            &prandtl.dpsi,
            &pressure,
        )?)
    } else {
        None
    };
    let field = fields::assemble(
        &geometry,
        &meshes,
        &prandtl,
        &pressure,
        transverse.as_deref(),
        cfg.toggles.cutoff,
    )?;
    Ok(Solution {
        geometry,
        meshes,
        prandtl,
        pressure,
        transverse,
        field,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TransverseSummary {
    pub max_divergence_residual: f64,
    pub max_fd_divergence_residual: f64,
    pub max_compatibility_ratio: f64,
    pub max_iterations: usize,
    /// max over stations of the section L² norm of v²‡
    pub max_velocity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Residuals {
    pub max_prandtl_residual: f64,
    pub max_energy_defect: f64,
    /// max_i |−¼G_i∂ₛp⁰_i − F⁰| of the closed-form route
    pub flux_defect: f64,
    /// max cell |flux − F⁰| of the conservative route
    pub fd_flux_defect: f64,
    /// max_i |∫v₃¹dσ − F⁰| / max(|F⁰|, 1)
    pub section_flux_defect: f64,
    /// max_i |h²∫𝕧·c′dσ − hF⁰| / max(|hF⁰|, h)
    pub field_flux_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub geometry: GeometryReport,
    pub rigidity_min: f64,
    pub rigidity_max: f64,
    pub residuals: Residuals,
    pub pressure_bounds: PressureBounds,
    pub transverse: Option<TransverseSummary>,
    pub norms: NormReport,
    pub geometry_hash: String,
    pub artifacts: Vec<String>,
    pub timing: Timing,
}

fn residuals(sol: &Solution) -> Result<Residuals> {
    let rig = &sol.prandtl.rigidity;
    let p = &sol.pressure;
    let (_, cells) = solve_reynolds_fd(&rig.s, &rig.g, p.flux, p.p_per)?;
    let fd_flux_defect = cells.iter().map(|c| (c - p.flux).abs()).fold(0.0, f64::max);
    let mut section = 0.0f64;
    for (i, mesh) in sol.meshes.iter().enumerate() {
        let v = longitudinal_velocity(&sol.prandtl.solutions[i].psi, p.dp[i]);
        section = section.max((mesh.integrate(&v) - p.flux).abs());
    }
    let h = sol.geometry.h();
    let hf = h * p.flux;
    let field = sol
        .field
        .station_flux
        .iter()
        .map(|q| (q - hf).abs())
        .fold(0.0, f64::max);
    Ok(Residuals {
        max_prandtl_residual: rig.residual.iter().cloned().fold(0.0, f64::max),
        max_energy_defect: rig.max_energy_defect(),
        flux_defect: p.flux_defect(&rig.g),
        fd_flux_defect,
        section_flux_defect: section / p.flux.abs().max(1.0),
        field_flux_defect: field / hf.abs().max(h),
    })
}

fn transverse_summary(sol: &Solution) -> Option<TransverseSummary> {
    let t = sol.transverse.as_ref()?;
    let mut s = TransverseSummary {
        max_divergence_residual: 0.0,
        max_fd_divergence_residual: 0.0,
        max_compatibility_ratio: 0.0,
        max_iterations: 0,
        max_velocity: 0.0,
    };
    for (ts, mesh) in t.iter().zip(&sol.meshes) {
        s.max_divergence_residual = s.max_divergence_residual.max(ts.divergence_residual);
        s.max_fd_divergence_residual = s.max_fd_divergence_residual.max(ts.fd_divergence_residual);
        s.max_compatibility_ratio = s.max_compatibility_ratio.max(ts.compatibility.ratio());
        s.max_iterations = s.max_iterations.max(ts.iterations);
        s.max_velocity = s.max_velocity.max(mesh.l2_norm_vec(&ts.v));
    }
    Some(s)
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes equally long columns as CSV with 17 significant digits.
pub fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) || header.len() != columns.len() {
        return Err(PipeError::Mismatch(format!(
            "columns for {} differ in length",
            path.display()
        )));
    }
    let mut out = String::with_capacity(n * columns.len() * 24);
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|c| fmt(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_rigidity_csv(path: &Path, r: &RigidityProfile) -> Result<()> {
    let defect: Vec<f64> =
        r.g.iter()
            .zip(&r.g_energy)
            .map(|(a, b)| (a - b).abs() / a)
            .collect();
    write_columns(
        path,
        &[
            "s",
            "g",
            "g_energy",
            "energy_defect",
            "residual",
            "dg",
            "d2g",
        ],
        &[&r.s, &r.g, &r.g_energy, &defect, &r.residual, &r.dg, &r.d2g],
    )
}

pub fn write_pressure_csv(path: &Path, p: &PressureProfile, g: &[f64]) -> Result<()> {
    let flux: Vec<f64> = g.iter().zip(&p.dp).map(|(g, d)| -0.25 * g * d).collect();
    write_columns(
        path,
        &["s", "p", "dp", "d2p", "d3p", "flux"],
        &[&p.s, &p.p, &p.dp, &p.d2p, &p.d3p, &flux],
    )
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)
        .map_err(|e| PipeError::Config(format!("cannot create {}: {e}", out.display())))?;
    let probe = out.join(".write-test");
    fs::write(&probe, b"")
        .map_err(|e| PipeError::Config(format!("{} is not writable: {e}", out.display())))?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// Runs the full pipeline and writes profiles, fields and `report.json` into `out`.
pub fn cmd_solve(cfg: &RunConfig, out: &Path, format: OutputFormat) -> Result<RunReport> {
    let start = Instant::now();
    prepare(out)?;
    let sol = compute(cfg)?;
    let mut artifacts = Vec::new();
    let mut emit = |name: &str| -> PathBuf {
        artifacts.push(name.to_string());
        out.join(name)
    };
    write_rigidity_csv(&emit("rigidity.csv"), &sol.prandtl.rigidity)?;
    write_pressure_csv(
        &emit("pressure.csv"),
        &sol.pressure,
        &sol.prandtl.rigidity.g,
    )?;
    if format.csv() {
        fields::write_csv(&sol.field, &emit("fields.csv"))?;
    }
    if format.vtk() {
        fields::write_vtk(&sol.field, &emit("fields.vtk"))?;
    }
    artifacts.push("report.json".into());
    let geometry = sol.geometry.report();
    let report = RunReport {
        config: cfg.clone(),
        pressure_bounds: pressure_derivative_bounds(
            &sol.pressure,
            &sol.prandtl.rigidity,
            &geometry,
            sol.geometry.h(),
        ),
        geometry,
        rigidity_min: sol.prandtl.rigidity.min(),
        rigidity_max: sol.prandtl.rigidity.max(),
        residuals: residuals(&sol)?,
        transverse: transverse_summary(&sol),
        norms: fields::norms(&sol.field, &sol.meshes, None)?,
        geometry_hash: sol.field.metadata.geometry_hash.clone(),
        artifacts,
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        },
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(out.join("report.json"), json)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n_rho: usize,
    pub n_theta: usize,
    pub g_min: f64,
    pub g_max: f64,
    /// max_s |G_n − G_next| against the next mesh in the list
    pub g_change: f64,
    pub p_change: f64,
    pub g_order: f64,
    pub p_order: f64,
    /// max_s |∫v₃¹dσ − F⁰|
    pub flux_defect: f64,
    /// max_s |p_closed − p_fd|
    pub route_difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub g_monotone: bool,
    pub p_monotone: bool,
}

struct MeshRun {
    g: Vec<f64>,
    p: Vec<f64>,
    flux_defect: f64,
    route_difference: f64,
}

fn mesh_run(cfg: &RunConfig, n: usize) -> Result<MeshRun> {
    let geom = build_geometry(cfg, cfg.physics.h, n)?;
    let meshes = build_meshes(&geom, n)?;
    let prof = rigidity_profile(&meshes)?;
    let (flux, p_per) = (cfg.physics.flux, cfg.physics.p_per);
    let p = solve_reynolds(&prof.rigidity, flux, p_per)?;
    let (p_fd, _) = solve_reynolds_fd(&prof.rigidity.s, &prof.rigidity.g, flux, p_per)?;
    let mut flux_defect = 0.0f64;
    for (i, m) in meshes.iter().enumerate() {
        let v = longitudinal_velocity(&prof.solutions[i].psi, p.dp[i]);
        flux_defect = flux_defect.max((m.integrate(&v) - flux).abs());
    }
    let route_difference =
        p.p.iter()
            .zip(&p_fd)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
    Ok(MeshRun {
        g: prof.rigidity.g,
        p: p.p,
        flux_defect,
        route_difference,
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Mesh refinement over `study.meshes` (N_ρ = N_θ = n). Changes are measured
/// against the next mesh, so the last row has none.
pub fn convergence_study(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let meshes = &cfg.study.meshes;
    if meshes.len() < 3 {
        return Err(PipeError::Config(format!(
            "study.meshes needs at least 3 entries for orders, got {}",
            meshes.len()
        )));
    }
    let runs: Vec<MeshRun> = meshes
        .iter()
        .map(|&n| mesh_run(cfg, n))
        .collect::<Result<_>>()?;
    let nm = runs.len();
    let g_change: Vec<f64> = (0..nm - 1)
        .map(|i| max_diff(&runs[i].g, &runs[i + 1].g))
        .collect();
    let p_change: Vec<f64> = (0..nm - 1)
        .map(|i| max_diff(&runs[i].p, &runs[i + 1].p))
        .collect();
    let h: Vec<f64> = meshes[..nm - 1].iter().map(|&n| 1.0 / n as f64).collect();
    let g_orders = observed_orders(&h, &g_change);
    let p_orders = observed_orders(&h, &p_change);
    let rows = runs
        .iter()
        .enumerate()
        .map(|(i, r)| ConvergenceRow {
            n_rho: meshes[i],
            n_theta: meshes[i],
            g_min: r.g.iter().cloned().fold(f64::INFINITY, f64::min),
            g_max: r.g.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            g_change: g_change.get(i).copied().unwrap_or(f64::NAN),
            p_change: p_change.get(i).copied().unwrap_or(f64::NAN),
            g_order: if i >= 1 {
                g_orders.get(i - 1).copied().unwrap_or(f64::NAN)
            } else {
                f64::NAN
            },
            p_order: if i >= 1 {
                p_orders.get(i - 1).copied().unwrap_or(f64::NAN)
            } else {
                f64::NAN
            },
            flux_defect: r.flux_defect,
            route_difference: r.route_difference,
        })
        .collect();
    Ok(ConvergenceReport {
        rows,
        g_monotone: is_monotone_decreasing(&g_change),
        p_monotone: is_monotone_decreasing(&p_change),
    })
}

pub fn cmd_converge(cfg: &RunConfig, out: &Path) -> Result<ConvergenceReport> {
    prepare(out)?;
    let rep = convergence_study(cfg)?;
    let col = |f: fn(&ConvergenceRow) -> f64| rep.rows.iter().map(f).collect::<Vec<f64>>();
    let n: Vec<f64> = rep.rows.iter().map(|r| r.n_rho as f64).collect();
    let mut text = String::from("n_rho,n_theta,g_min,g_max,g_change,p_change,g_order,p_order,flux_defect,route_difference\n");
    let cols = [
        col(|r| r.g_min),
        col(|r| r.g_max),
        col(|r| r.g_change),
        col(|r| r.p_change),
        col(|r| r.g_order),
        col(|r| r.p_order),
        col(|r| r.flux_defect),
        col(|r| r.route_difference),
    ];
    for i in 0..n.len() {
        let rest: Vec<String> = cols.iter().map(|c| fmt(c[i])).collect();
        text.push_str(&format!(
            "{},{},{}\n",
            rep.rows[i].n_rho,
            rep.rows[i].n_theta,
            rest.join(",")
        ));
    }
    text.push_str(&format!(
        "# g_monotone={} p_monotone={}\n",
        rep.g_monotone, rep.p_monotone
    ));
    fs::write(out.join("convergence.csv"), text)?;
    if !rep.g_monotone || !rep.p_monotone {
        log::warn!("defect sequence is not monotone; the finest meshes may be at roundoff");
    }
    Ok(rep)
}

pub fn family(cfg: &RunConfig) -> Result<Family> {
    Ok(Family {
        curve: cfg.curve_spec()?,
        radius: cfg.radius_spec()?,
        n_s: cfg.discretization.n_s,
        flux: cfg.physics.flux,
        p_per: cfg.physics.p_per,
    })
}

pub fn cmd_compare_perturbation(cfg: &RunConfig, out: &Path) -> Result<PerturbationReport> {
    prepare(out)?;
    let rep =
        compare_full_vs_perturbative(&family(cfg)?, &cfg.study.h_values, cfg.discretization.n_rho)?;
    let col =
        |f: fn(&crate::perturbation::Defects) -> f64| rep.rows.iter().map(f).collect::<Vec<f64>>();
    write_columns(
        &out.join("perturbation.csv"),
        &[
            "h",
            "psi_defect",
            "g_defect",
            "p_defect",
            "v_defect",
            "g1_relative",
        ],
        &[
            &col(|r| r.h),
            &col(|r| r.psi),
            &col(|r| r.g),
            &col(|r| r.p),
            &col(|r| r.v),
            &col(|r| r.g1_relative),
        ],
    )?;
    let mut slopes = String::from("quantity,slope\n");
    for (name, v) in [
        ("psi", rep.psi_slope),
        ("g", rep.g_slope),
        ("p", rep.p_slope),
        ("v", rep.v_slope),
    ] {
        slopes.push_str(&format!("{name},{}\n", fmt(v)));
    }
    fs::write(out.join("perturbation_slopes.csv"), slopes)?;
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    /// `scale` multiplies upper limits only; orders and ratios keep their thresholds.
    fn new(name: &'static str, value: f64, limit: f64, bound: Bound, scale: f64) -> Self {
        let limit = match bound {
            Bound::AtMost => limit * scale,
            Bound::AtLeast => limit,
        };
        let passed = match bound {
            Bound::AtMost => value <= limit,
            Bound::AtLeast => value >= limit,
        };
        Check {
            name,
            value,
            limit,
            bound,
            passed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<28} {:>12} {:>4} {:>10}  result\n",
            "check", "value", "", "limit"
        );
        for c in &self.checks {
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
            };
            s.push_str(&format!(
                "{:<28} {:>12.4e} {:>4} {:>10.2e}  {}\n",
                c.name,
                c.value,
                op,
                c.limit,
                if c.passed { "PASS" } else { "FAIL" }
            ));
        }
        s
    }
}

fn limacon(n: usize, a: f64) -> SectionShape {
    SectionShape::from_radius(n, |t| RadiusJet {
        r: 1.0 + a * t.cos(),
        r_theta: -a * t.sin(),
        r_thetatheta: -a * t.cos(),
        ..Default::default()
    })
}

fn disk_rigidity_error(n: usize) -> Result<f64> {
    let sol = solve_prandtl(&SectionMesh::new(SectionShape::disk(n, 1.0), n)?)?;
    Ok((sol.g_bulk - PI / 2.0).abs() / (PI / 2.0))
}

/// Max compatibility ratio along a varying-radius pipe; with `wrong_rigidity`
/// the pressure is computed from a constant G that does not match the sections.
fn compatibility_ratio(wrong_rigidity: bool) -> Result<f64> {
    let geom = PipeGeometry::build(
        &CurveSpec::Helix {
            curvature: 1.0,
            torsion: 1.0,
        },
        RadiusSpec::AxialWave {
            r0: 1.0,
            amplitude: 0.2,
            frequency: 1.0,
        },
        0.1,
        9,
        16,
    )?;
    let meshes = build_meshes(&geom, 16)?;
    let prof = rigidity_profile(&meshes)?;
    let rig = if wrong_rigidity {
        RigidityProfile::constant(prof.rigidity.s.clone(), PI / 2.0)
    } else {
        prof.rigidity.clone()
    };
    let p = solve_reynolds(&rig, 1.0, 0.0)?;
    let mut worst = 0.0f64;
    for (i, m) in meshes.iter().enumerate() {
        let g = longitudinal_velocity_s(&prof.solutions[i].psi, &prof.dpsi[i], p.dp[i], p.d2p[i]);
        worst = worst.max(check_compatibility(m, &g).ratio());
    }
    Ok(worst)
}

fn claim_mesh(n: usize) -> Result<SectionMesh> {
    let geom = PipeGeometry::build(
        &CurveSpec::Arc { radius: 1.0 },
        RadiusSpec::Harmonic {
            r0: 1.0,
            amplitude: 0.2,
            mode: 1,
            taper: 0.3,
        },
        0.1,
        8,
        n,
    )?;
    SectionMesh::new(geom.section_shape(3), n)
}

/// The built-in oracle battery. `scale` multiplies every error tolerance.
pub fn cmd_validate(scale: f64) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    let mut add =
        |name, value, limit, bound| checks.push(Check::new(name, value, limit, bound, scale));

    let (e32, e64) = (disk_rigidity_error(32)?, disk_rigidity_error(64)?);
    add("disk rigidity error", e64, 1e-3, Bound::AtMost);
    add(
        "disk rigidity order",
        (e32 / e64).log2(),
        1.9,
        Bound::AtLeast,
    );

    let lim = solve_prandtl(&SectionMesh::new(limacon(64, 0.2), 64)?)?;
    add(
        "energy identity (limacon)",
        lim.energy_defect(),
        1e-3,
        Bound::AtMost,
    );

    let geom = PipeGeometry::build(
        &CurveSpec::Straight,
        RadiusSpec::AxialWave {
            r0: 1.0,
            amplitude: 0.2,
            frequency: 1.0,
        },
        0.1,
        33,
        16,
    )?;
    let prof = rigidity_profile(&build_meshes(&geom, 16)?)?;
    let (_, cells) = solve_reynolds_fd(&prof.rigidity.s, &prof.rigidity.g, 1.0, 0.0)?;
    let fd_defect = cells.iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max);
    add("flux constancy (fd route)", fd_defect, 1e-10, Bound::AtMost);
    let p = solve_reynolds(&prof.rigidity, 1.0, 0.0)?;
    add(
        "flux constancy (closed form)",
        p.flux_defect(&prof.rigidity.g),
        1e-10,
        Bound::AtMost,
    );

    let c32 = manufactured_claim_check(&claim_mesh(32)?, 0.0).sum().abs();
    let c64 = manufactured_claim_check(&claim_mesh(64)?, 0.0).sum().abs();
    let broken = manufactured_claim_check(&claim_mesh(64)?, 1.0).sum().abs();
    add("claim identity residual", c64, 1e-3, Bound::AtMost);
    add(
        "claim identity order",
        (c32 / c64).log2(),
        1.9,
        Bound::AtLeast,
    );
    add(
        "claim negative control ratio",
        broken / c64,
        1e3,
        Bound::AtLeast,
    );

    add(
        "compatibility residual",
        compatibility_ratio(false)?,
        1e-6,
        Bound::AtMost,
    );
    add(
        "wrong flux detected",
        compatibility_ratio(true)?,
        1e-3,
        Bound::AtLeast,
    );

    Ok(ValidationReport { checks })
}
