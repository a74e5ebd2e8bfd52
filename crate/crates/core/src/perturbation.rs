//! Small-curvature expansion Ψ ≈ Ψ₀ + hΨ₁, G ≈ G₀ + hG₁, p⁰ ≈ q⁰ + hq¹.
//!
//! With β = 1 − h(k·x), k = (c″·e₁(0), c″·e₁(π/2)):
//!
//! −Δ′Ψ₀ = 2,   −Δ′Ψ₁ = 2(k·x) − k·∇′Ψ₀ = −∇′·((k·x)∇′Ψ₀),
//!
//! both with zero boundary data. The second form of the Ψ₁ source is the one
//! discretized: because the energy matrix is linear in its coefficient, the
//! discrete Ψ then expands exactly as Ψ₀ + hΨ₁ + O(h²) on a fixed mesh.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PipeError, Result};
use crate::geometry::{CurveSpec, PipeGeometry, RadiusSpec};
use crate::prandtl::rigidity_profile;
use crate::reynolds::{longitudinal_velocity, solve_reynolds, tail_integral};
use crate::section::{build_meshes, DirichletOperator, SectionMesh};
use crate::stats::loglog_slope;

#[derive(Clone, Debug)]
pub struct PerturbationSolution {
    pub station: usize,
    pub s: f64,
    pub psi0: Vec<f64>,
    pub psi1: Vec<f64>,
    pub g0: f64,
    pub g1: f64,
}

/// Ψ₀ with the same kernel as the full problem and β ≡ 1.
pub fn solve_psi0(mesh: &SectionMesh) -> Result<Vec<f64>> {
    let op = DirichletOperator::new(mesh, &vec![1.0; mesh.n_nodes()])?;
    Ok(op.solve(mesh, &vec![2.0; mesh.n_nodes()])?.0)
}

/// Ψ₁ from Ψ₀ on the same mesh.
pub fn solve_psi1(mesh: &SectionMesh, psi0: &[f64]) -> Result<Vec<f64>> {
    let op = DirichletOperator::new(mesh, &vec![1.0; mesh.n_nodes()])?;
    solve_psi1_with(mesh, &op, psi0)
}

fn solve_psi1_with(mesh: &SectionMesh, op: &DirichletOperator, psi0: &[f64]) -> Result<Vec<f64>> {
    let k = mesh.shape().kappa;
    let kx: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|n| k[0] * n.x + k[1] * n.y)
        .collect();
    let keep: Vec<usize> = (0..mesh.n_interior()).collect();
    let rhs = mesh
        .energy_matrix(&kx)
        .submatrix(&keep)
        .mul_vec(&psi0[..mesh.n_interior()]);
    let mut psi1 = op.solve_interior(&rhs)?;
    psi1.resize(mesh.n_nodes(), 0.0);
    Ok(psi1)
}

pub fn solve_station(mesh: &SectionMesh) -> Result<PerturbationSolution> {
    let op = DirichletOperator::new(mesh, &vec![1.0; mesh.n_nodes()])?;
    let psi0 = op.solve(mesh, &vec![2.0; mesh.n_nodes()])?.0;
    let psi1 = solve_psi1_with(mesh, &op, &psi0)?;
    let shape = mesh.shape();
    Ok(PerturbationSolution {
        station: shape.station,
        s: shape.s,
        g0: 2.0 * mesh.integrate(&psi0),
        g1: 2.0 * mesh.integrate(&psi1),
        psi0,
        psi1,
    })
}

/// q⁰, q¹ and their s-derivatives.
#[derive(Clone, Debug, Serialize)]
pub struct PerturbativePressure {
    pub q0: Vec<f64>,
    pub q1: Vec<f64>,
    pub dq0: Vec<f64>,
    pub dq1: Vec<f64>,
}

/// q⁰ = p⁰_per + 4F⁰∫ₛ¹G₀⁻¹,   q¹ = −4F⁰∫ₛ¹G₁G₀⁻².
pub fn solve_q01(
    s: &[f64],
    g0: &[f64],
    g1: &[f64],
    flux: f64,
    p_per: f64,
) -> Result<PerturbativePressure> {
    for (&si, &g) in s.iter().zip(g0) {
        if !(g > 0.0) {
            return Err(PipeError::NonPositiveRigidity { s: si, value: g });
        }
    }
    let inv: Vec<f64> = g0.iter().map(|g| 1.0 / g).collect();
    let ratio: Vec<f64> = g0.iter().zip(g1).map(|(a, b)| b / (a * a)).collect();
    let t0 = tail_integral(s, &inv)?;
    let t1 = tail_integral(s, &ratio)?;
    Ok(PerturbativePressure {
        q0: t0.iter().map(|t| p_per + 4.0 * flux * t).collect(),
        q1: t1.iter().map(|t| -4.0 * flux * t).collect(),
        dq0: inv.iter().map(|i| -4.0 * flux * i).collect(),
        dq1: ratio.iter().map(|r| 4.0 * flux * r).collect(),
    })
}

/// A geometry family parameterized by h.
#[derive(Clone, Debug)]
pub struct Family {
    pub curve: CurveSpec,
    pub radius: RadiusSpec,
    pub n_s: usize,
    pub flux: f64,
    pub p_per: f64,
}

impl Family {
    pub fn torus(n_s: usize) -> Self {
        Family {
            curve: CurveSpec::Arc { radius: 1.0 },
            radius: RadiusSpec::Constant { r0: 1.0 },
            n_s,
            flux: 1.0,
            p_per: 0.0,
        }
    }
}

/// Max-norm defects of the two-term expansion at one h.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Defects {
    pub h: f64,
    pub psi: f64,
    pub g: f64,
    pub p: f64,
    pub v: f64,
    /// max |G₁| / G₀
    pub g1_relative: f64,
}

pub fn defects_at(family: &Family, h: f64, n: usize) -> Result<Defects> {
    let geom = PipeGeometry::build(&family.curve, family.radius.clone(), h, family.n_s, n)?;
    let meshes = build_meshes(&geom, n)?;
    let full = rigidity_profile(&meshes)?;
    let pressure = solve_reynolds(&full.rigidity, family.flux, family.p_per)?;
    let pert: Vec<PerturbationSolution> = meshes
        .par_iter()
        .map(|m| {
            solve_station(m)
                .map_err(|e| e.at_station("perturbation", m.shape().station, m.shape().s))
        })
        .collect::<Result<_>>()?;
    let s: Vec<f64> = pert.iter().map(|p| p.s).collect();
    let g0: Vec<f64> = pert.iter().map(|p| p.g0).collect();
    let g1: Vec<f64> = pert.iter().map(|p| p.g1).collect();
    let q = solve_q01(&s, &g0, &g1, family.flux, family.p_per)?;
    let mut d = Defects {
        h,
        psi: 0.0,
        g: 0.0,
        p: 0.0,
        v: 0.0,
        g1_relative: 0.0,
    };
    for (i, ps) in pert.iter().enumerate() {
        let psi = &full.solutions[i].psi;
        let v = longitudinal_velocity(psi, pressure.dp[i]);
        for n in 0..psi.len() {
            let two_term = ps.psi0[n] + h * ps.psi1[n];
            d.psi = d.psi.max((psi[n] - two_term).abs());
            let u1 = -0.5 * ps.psi0[n] * q.dq0[i];
            let u2 = -0.5 * (ps.psi1[n] * q.dq0[i] + ps.psi0[n] * q.dq1[i]);
            d.v = d.v.max((v[n] - u1 - h * u2).abs());
        }
        d.g = d.g.max((full.rigidity.g[i] - ps.g0 - h * ps.g1).abs());
        d.p = d.p.max((pressure.p[i] - q.q0[i] - h * q.q1[i]).abs());
        d.g1_relative = d.g1_relative.max(ps.g1.abs() / ps.g0);
    }
    Ok(d)
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationReport {
    /// mesh resolution (N_ρ = N_θ) used for every member
    pub mesh: usize,
    pub rows: Vec<Defects>,
    pub psi_slope: f64,
    pub g_slope: f64,
    pub p_slope: f64,
    pub v_slope: f64,
}

fn slope(rows: &[Defects], f: fn(&Defects) -> f64) -> f64 {
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let e: Vec<f64> = rows.iter().map(f).collect();
    if e.iter().all(|&x| x > 0.0) {
        loglog_slope(&h, &e)
    } else {
        f64::NAN
    }
}

/// Defects and log-log slopes across the family on a fixed mesh.
pub fn compare_full_vs_perturbative(
    family: &Family,
    h_values: &[f64],
    n: usize,
) -> Result<PerturbationReport> {
    if h_values.len() < 3 {
        return Err(PipeError::TooFew {
            what: "h-values",
            needed: 3,
            got: h_values.len(),
        });
    }
    let rows: Vec<Defects> = h_values
        .iter()
        .map(|&h| defects_at(family, h, n))
        .collect::<Result<_>>()?;
    Ok(PerturbationReport {
        mesh: n,
        psi_slope: slope(&rows, |r| r.psi),
        g_slope: slope(&rows, |r| r.g),
        p_slope: slope(&rows, |r| r.p),
        v_slope: slope(&rows, |r| r.v),
        rows,
    })
}

/// Doubles the mesh from `start` until the Ψ defect at the smallest h changes
/// by less than 5%, or `cap` is reached, then runs the comparison there.
pub fn compare_adaptive(
    family: &Family,
    h_values: &[f64],
    start: usize,
    cap: usize,
) -> Result<PerturbationReport> {
    let h_min = h_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut n = start;
    let mut prev = defects_at(family, h_min, n)?.psi;
    while 2 * n <= cap {
        let next = defects_at(family, h_min, 2 * n)?.psi;
        n *= 2;
        let change = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        prev = next;
        if change < 0.05 {
            break;
        }
    }
    log::info!("perturbation study uses a {n}x{n} section mesh");
    compare_full_vs_perturbative(family, h_values, n)
}
