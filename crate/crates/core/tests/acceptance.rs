//! Acceptance criteria AC1–AC11. Each test prints one line "ACn PASS/FAIL: detail".

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use curved_pipe::config::{OutputFormat, RunConfig};
use curved_pipe::geometry::{CurveSpec, PipeGeometry, RadiusJet, RadiusSpec};
use curved_pipe::perturbation::{compare_adaptive, solve_station, Family};
use curved_pipe::pipeline::cmd_solve;
use curved_pipe::prandtl::{rigidity_profile, solve_prandtl, PrandtlProfile, RigidityProfile};
use curved_pipe::reynolds::{
    longitudinal_velocity, longitudinal_velocity_s, solve_reynolds, solve_reynolds_fd,
};
use curved_pipe::section::{build_meshes, SectionMesh, SectionShape};
use curved_pipe::stats::loglog_slope;
use curved_pipe::transverse::{check_compatibility, manufactured_claim_check, solve_all};
use curved_pipe::PipeError;

fn verdict(n: u32, pass: bool, detail: String) {
    println!("AC{n} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "AC{n}: {detail}");
}

fn pipe(
    curve: CurveSpec,
    radius: RadiusSpec,
    h: f64,
    n_s: usize,
    n: usize,
) -> (PipeGeometry, Vec<SectionMesh>) {
    let geom = PipeGeometry::build(&curve, radius, h, n_s, n).unwrap();
    let meshes = build_meshes(&geom, n).unwrap();
    (geom, meshes)
}

const UNIT: RadiusSpec = RadiusSpec::Constant { r0: 1.0 };
const TORUS: CurveSpec = CurveSpec::Arc { radius: 1.0 };
const HELIX: CurveSpec = CurveSpec::Helix {
    curvature: 1.0,
    torsion: 1.0,
};

fn axial_wave() -> RadiusSpec {
    RadiusSpec::AxialWave {
        r0: 1.0,
        amplitude: 0.2,
        frequency: 1.0,
    }
}

fn limacon(n: usize) -> SectionShape {
    SectionShape::from_radius(n, |t| RadiusJet {
        r: 1.0 + 0.2 * t.cos(),
        r_theta: -0.2 * t.sin(),
        r_thetatheta: -0.2 * t.cos(),
        ..Default::default()
    })
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(f64::abs).fold(0.0, f64::max)
}

#[test]
fn ac01_disk_rigidity_oracle() {
    let rel_error = |n: usize| {
        let (_, meshes) = pipe(CurveSpec::Straight, UNIT, 0.1, 5, n);
        let t = Instant::now();
        let prof = rigidity_profile(&meshes).unwrap();
        let per_station = t.elapsed().as_secs_f64() / meshes.len() as f64;
        (
            max_abs(prof.rigidity.g.iter().map(|g| (g - PI / 2.0) / (PI / 2.0))),
            per_station,
        )
    };
    let (e32, _) = rel_error(32);
    let (e64, secs) = rel_error(64);
    let order = (e32 / e64).log2();
    verdict(
        1,
        e64 <= 1e-3 && order >= 1.9 && secs <= 5.0,
        format!("|G-pi/2|/(pi/2) = {e64:.3e} at 64x64, order {order:.3}, {secs:.3} s per station"),
    );
}

#[test]
fn ac02_energy_identity() {
    let disk = |n: usize| {
        solve_prandtl(&SectionMesh::new(SectionShape::disk(n, 1.0), n).unwrap())
            .unwrap()
            .energy_defect()
    };
    let lim = |n: usize| {
        solve_prandtl(&SectionMesh::new(limacon(n), n).unwrap())
            .unwrap()
            .energy_defect()
    };
    let torus = |n: usize| {
        let (_, meshes) = pipe(TORUS, UNIT, 0.05, 5, n);
        rigidity_profile(&meshes)
            .unwrap()
            .rigidity
            .max_energy_defect()
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, f) in [
        ("disk", &disk as &dyn Fn(usize) -> f64),
        ("limacon", &lim),
        ("torus", &torus),
    ] {
        let (d32, d64) = (f(32), f(64));
        let order = (d32 / d64).log2();
        pass &= d64 <= 1e-3 && order >= 1.9;
        detail.push(format!("{name} {d64:.2e} (order {order:.2})"));
    }
    verdict(2, pass, format!("defect at 64x64: {}", detail.join(", ")));
}

#[test]
fn ac03_reynolds_routes() {
    let run = |n_s: usize| {
        let (_, meshes) = pipe(CurveSpec::Straight, axial_wave(), 0.1, n_s, 16);
        let prof = rigidity_profile(&meshes).unwrap();
        let p = solve_reynolds(&prof.rigidity, 1.0, 0.0).unwrap();
        let (p_fd, cells) =
            solve_reynolds_fd(&prof.rigidity.s, &prof.rigidity.g, 1.0, 0.0).unwrap();
        let diff = max_abs(p.p.iter().zip(&p_fd).map(|(a, b)| a - b));
        let fd_flux = max_abs(cells.iter().map(|c| c - 1.0));
        (diff, fd_flux, p.flux_defect(&prof.rigidity.g))
    };
    let rows: Vec<_> = [17, 33, 65].iter().map(|&n| run(n)).collect();
    let ds: Vec<f64> = [16.0, 32.0, 64.0].iter().map(|n| 1.0 / n).collect();
    let diffs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let order = loglog_slope(&ds, &diffs);
    let fd_flux = max_abs(rows.iter().map(|r| r.1));
    let cf_flux = max_abs(rows.iter().map(|r| r.2));
    verdict(
        3,
        order >= 1.9 && fd_flux <= 1e-10 && cf_flux <= 1e-10,
        format!("route difference {}, order {order:.3}; flux defect fd {fd_flux:.1e}, closed form {cf_flux:.1e}", sci(&diffs)),
    );
}

fn section_flux_defect(meshes: &[SectionMesh], prof: &PrandtlProfile, flux: f64) -> f64 {
    let p = solve_reynolds(&prof.rigidity, flux, 0.0).unwrap();
    max_abs(meshes.iter().enumerate().map(|(i, m)| {
        let v = longitudinal_velocity(&prof.solutions[i].psi, p.dp[i]);
        (m.integrate(&v) - flux) / flux
    }))
}

#[test]
fn ac04_flux_law() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, curve, radius) in [
        ("disk", CurveSpec::Straight, UNIT),
        ("varying radius", CurveSpec::Straight, axial_wave()),
        ("torus", TORUS, UNIT),
    ] {
        let (_, meshes) = pipe(curve, radius, 0.05, 17, 32);
        let prof = rigidity_profile(&meshes).unwrap();
        let d = section_flux_defect(&meshes, &prof, 1.7);
        pass &= d <= 1e-6;
        detail.push(format!("{name} {d:.1e}"));
    }
    verdict(
        4,
        pass,
        format!("max relative flux defect: {}", detail.join(", ")),
    );
}

#[test]
fn ac05_perturbation_slopes() {
    let t = Instant::now();
    let rep = compare_adaptive(&Family::torus(9), &[0.1, 0.05, 0.025], 16, 256).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let in_band = |s: f64| (1.8..=2.2).contains(&s);
    let g1 = rep.rows.iter().map(|r| r.g1_relative).fold(0.0, f64::max);
    verdict(
        5,
        in_band(rep.psi_slope) && in_band(rep.g_slope) && in_band(rep.p_slope) && g1 <= 1e-6 && secs <= 120.0,
        format!(
            "slopes psi {:.3}, G {:.3}, p {:.3} (v {:.3}); max |G1|/G0 {g1:.1e}; mesh {}; {secs:.2} s",
            rep.psi_slope, rep.g_slope, rep.p_slope, rep.v_slope, rep.mesh
        ),
    );
}

#[test]
fn ac06_psi1_closed_form() {
    let mesh = SectionMesh::new(
        SectionShape::disk(64, 1.0).with_curvature(0.1, [1.0, 0.0]),
        64,
    )
    .unwrap();
    let sol = solve_station(&mesh).unwrap();
    let err = max_abs(
        mesh.nodes()
            .iter()
            .zip(&sol.psi1)
            .map(|(nd, v)| v - 0.375 * nd.eta * (1.0 - nd.eta * nd.eta) * nd.theta.cos()),
    );
    verdict(
        6,
        err <= 1e-3,
        format!("max |Psi1 - (3/8)eta(1-eta^2)cos(theta)| = {err:.3e} at 64x64"),
    );
}

fn claim_mesh(n: usize) -> SectionMesh {
    let radius = RadiusSpec::Harmonic {
        r0: 1.0,
        amplitude: 0.2,
        mode: 1,
        taper: 0.3,
    };
    let geom = PipeGeometry::build(&TORUS, radius, 0.1, 8, n).unwrap();
    SectionMesh::new(geom.section_shape(3), n).unwrap()
}

#[test]
fn ac07_differentiated_compatibility_identity() {
    let mut residual = Vec::new();
    let mut area = Vec::new();
    for n in [32, 64, 128] {
        let r = manufactured_claim_check(&claim_mesh(n), 0.0);
        residual.push(r.sum().abs());
        area.push(r.area);
    }
    // quadrature error of the area term alone, by Richardson extrapolation
    let quad = (area[1] - area[2]).abs() * 4.0 / 3.0;
    let order = (residual[1] / residual[2]).log2();
    let broken = manufactured_claim_check(&claim_mesh(128), 1.0).sum().abs();
    let ratio = broken / residual[2];
    verdict(
        7,
        residual[2] <= 10.0 * quad && order >= 1.9 && ratio >= 1e3,
        format!(
            "residual {:.2e} at 128 (area quadrature error {quad:.2e}), order {order:.3}, broken/consistent {ratio:.2e}",
            residual[2]
        ),
    );
}

fn compatibility_ratio(rigidity: impl Fn(&RigidityProfile) -> RigidityProfile) -> f64 {
    let (_, meshes) = pipe(HELIX, axial_wave(), 0.1, 17, 32);
    let prof = rigidity_profile(&meshes).unwrap();
    let p = solve_reynolds(&rigidity(&prof.rigidity), 1.0, 0.0).unwrap();
    meshes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let g =
                longitudinal_velocity_s(&prof.solutions[i].psi, &prof.dpsi[i], p.dp[i], p.d2p[i]);
            check_compatibility(m, &g).ratio()
        })
        .fold(0.0, f64::max)
}

#[test]
fn ac08_transverse_compatibility() {
    let consistent = compatibility_ratio(|r| r.clone());
    // pressure from a constant G: the flux through each section then varies along s
    let wrong = compatibility_ratio(|r| RigidityProfile::constant(r.s.clone(), PI / 2.0));
    verdict(
        8,
        consistent <= 1e-6 && wrong > 1e-3,
        format!(
            "|int d_s v3|/||d_s v3|| = {consistent:.2e} consistent, {wrong:.2e} with a wrong flux"
        ),
    );
}

fn transverse_norm(curve: &CurveSpec, h: f64) -> f64 {
    let (_, meshes) = pipe(curve.clone(), UNIT, h, 17, 32);
    let prof = rigidity_profile(&meshes).unwrap();
    let p = solve_reynolds(&prof.rigidity, 1.0, 0.0).unwrap();
    let sols = solve_all(&meshes, &prof.solutions, &prof.dpsi, &p).unwrap();
    sols.iter()
        .zip(&meshes)
        .map(|(s, m)| m.l2_norm_vec(&s.v))
        .fold(0.0, f64::max)
}

#[test]
fn ac09_transverse_scaling() {
    let hs = [0.1, 0.05, 0.025];
    // On a torus the section part of c''' vanishes and the sections do not vary, so
    // the transverse data are identically zero: the bound holds with v2 = 0 and no
    // slope can be fitted. The scaling is measured on the helix family, where the
    // forcing is nonzero and still proportional to h at fixed curvature.
    let torus: Vec<f64> = hs.iter().map(|&h| transverse_norm(&TORUS, h)).collect();
    let helix: Vec<f64> = hs.iter().map(|&h| transverse_norm(&HELIX, h)).collect();
    let slope = loglog_slope(&hs, &helix);
    let straight = transverse_norm(&CurveSpec::Straight, 0.1);
    verdict(
        9,
        slope >= 0.8 && straight == 0.0 && torus.iter().all(|&v| v <= 1e-12),
        format!(
            "helix ||v2|| {}, slope {slope:.3}; torus {} (identically zero data); straight {straight:e}",
            sci(&helix),
            sci(&torus)
        ),
    );
}

#[test]
fn ac10_geometry_invariants() {
    let mut ortho = 0.0f64;
    for curve in [TORUS, HELIX, CurveSpec::Straight] {
        let geom = PipeGeometry::build(&curve, UNIT, 0.1, 33, 32).unwrap();
        ortho = ortho.max(geom.report().frame_defect);
    }
    let theta_error = |n: usize| {
        let geom = PipeGeometry::build(&HELIX, UNIT, 0.1, 17, n).unwrap();
        let frame = geom.frame();
        let dt = 2.0 * PI / n as f64;
        let mut err = 0.0f64;
        for i in 0..geom.n_s() {
            for j in 0..n {
                let t = geom.theta(j);
                let d = (frame.e1(i, t + dt) - frame.e1(i, t - dt)) * (1.0 / (2.0 * dt))
                    - frame.e2(i, t);
                err = err.max(d.max_abs());
            }
        }
        err
    };
    let order = (theta_error(16) / theta_error(32)).log2();
    let rejected = PipeGeometry::build(&CurveSpec::Arc { radius: 0.4 }, UNIT, 0.5, 17, 32);
    let rejects = matches!(rejected, Err(PipeError::NonPositiveBeta { .. }));
    verdict(
        10,
        ortho <= 1e-8 && order >= 1.9 && rejects,
        format!(
            "frame orthonormality defect {ortho:.1e}, d_theta e1 = e2 order {order:.3}, h=0.5 rho_c=0.4 rejected: {rejects}"
        ),
    );
}

fn solve_in_pool(cfg: &RunConfig, out: &Path, threads: usize) {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| cmd_solve(cfg, out, OutputFormat::Both).unwrap());
}

#[test]
fn ac11_determinism() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/torus.toml");
    let cfg = RunConfig::from_file(&config).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    solve_in_pool(&cfg, a.path(), 1);
    solve_in_pool(&cfg, b.path(), 4);
    let mut identical = true;
    for f in ["rigidity.csv", "pressure.csv", "fields.csv", "fields.vtk"] {
        identical &=
            std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap();
    }
    verdict(
        11,
        identical,
        format!("two torus solves (1 and 4 threads) produced identical CSV/VTK bytes: {identical}"),
    );
}
