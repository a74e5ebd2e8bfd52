//! Generalized Prandtl function Ψ and torsional rigidity G(s).
//!
//! Ψ solves −∇′·(β∇′Ψ) = 2 in ω(s) with Ψ = 0 on ∂ω(s). The rigidity has two
//! equal continuum expressions, G = 2∫Ψ dσ = ∫β|∇′Ψ|² dσ; the first is the one
//! used downstream, the second is kept as a consistency check.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PipeError, Result};
use crate::section::{DirichletOperator, SectionMesh, VectorField2};
use crate::sgrid;

#[derive(Clone, Debug)]
pub struct PrandtlSolution {
    pub station: usize,
    pub s: f64,
    pub psi: Vec<f64>,
    pub grad: VectorField2,
    /// 2∫Ψ dσ
    pub g_bulk: f64,
    /// ∫β|∇′Ψ|² dσ
    pub g_energy: f64,
    pub residual: f64,
}

impl PrandtlSolution {
    /// |G_bulk − G_energy| / G_bulk
    pub fn energy_defect(&self) -> f64 {
        (self.g_bulk - self.g_energy).abs() / self.g_bulk.abs()
    }
}

/// Solves −∇′·(c∇′u) = f with zero boundary data. Returns nodal u and the relative residual.
pub fn solve_with(mesh: &SectionMesh, coef: &[f64], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    DirichletOperator::new(mesh, coef)?.solve(mesh, rhs)
}

/// (2∫Ψ dσ, ∫β|∇′Ψ|² dσ) together with the gradient used for the second one.
pub fn rigidity(mesh: &SectionMesh, psi: &[f64]) -> (f64, f64, VectorField2) {
    let grad = mesh.grad(psi);
    let energy: Vec<f64> = (0..mesh.n_nodes())
        .map(|n| mesh.beta()[n] * (grad.x[n] * grad.x[n] + grad.y[n] * grad.y[n]))
        .collect();
    (2.0 * mesh.integrate(psi), mesh.integrate(&energy), grad)
}

pub fn solve_prandtl(mesh: &SectionMesh) -> Result<PrandtlSolution> {
    let rhs = vec![2.0; mesh.n_nodes()];
    let (psi, residual) = solve_with(mesh, mesh.beta(), &rhs)?;
    let (g_bulk, g_energy, grad) = rigidity(mesh, &psi);
    let shape = mesh.shape();
    if !(g_bulk > 0.0) {
        return Err(PipeError::NonPositiveRigidity {
            s: shape.s,
            value: g_bulk,
        });
    }
    Ok(PrandtlSolution {
        station: shape.station,
        s: shape.s,
        psi,
        grad,
        g_bulk,
        g_energy,
        residual,
    })
}

/// Solves every station in parallel.
pub fn solve_stations(meshes: &[SectionMesh]) -> Result<Vec<PrandtlSolution>> {
    meshes
        .par_iter()
        .map(|m| {
            solve_prandtl(m).map_err(|e| e.at_station("prandtl", m.shape().station, m.shape().s))
        })
        .collect()
}

/// ∂ₛΨ at fixed (η, θ) on every station.
///
/// The s-difference is taken on the reference (ρ, θ) grid, which follows the
/// moving boundary, and then converted: ∂ₛΨ|_η = ∂ₛΨ|_ρ − ∂_ηΨ·ρ·∂ₛR.
pub fn psi_s_derivative(meshes: &[SectionMesh], sols: &[PrandtlSolution]) -> Result<Vec<Vec<f64>>> {
    if meshes.len() != sols.len() {
        return Err(PipeError::Mismatch(format!(
            "{} meshes but {} Prandtl solutions",
            meshes.len(),
            sols.len()
        )));
    }
    let s: Vec<f64> = meshes.iter().map(|m| m.shape().s).collect();
    let ds = sgrid::spacing(&s)?;
    let fields: Vec<Vec<f64>> = sols.iter().map(|p| p.psi.clone()).collect();
    let mut d = sgrid::first_derivative_fields(&fields, ds)?;
    for ((di, mesh), sol) in d.iter_mut().zip(meshes).zip(sols) {
        for n in 1..mesh.n_nodes() {
            let nd = mesh.coords(n);
            let d_eta = mesh.polar_gradient(&sol.psi, n).0;
            di[n] -= d_eta * nd.rho * mesh.radius(nd.j).r_s;
        }
    }
    Ok(d)
}

/// G(s) on the station grid, with its s-derivatives.
#[derive(Clone, Debug, Serialize)]
pub struct RigidityProfile {
    pub s: Vec<f64>,
    pub g: Vec<f64>,
    pub g_energy: Vec<f64>,
    pub residual: Vec<f64>,
    /// 2∫∂ₛΨ dσ (the boundary term vanishes because Ψ = 0 there)
    pub dg: Vec<f64>,
    pub d2g: Vec<f64>,
}

impl RigidityProfile {
    pub fn new(
        meshes: &[SectionMesh],
        sols: &[PrandtlSolution],
        dpsi: &[Vec<f64>],
    ) -> Result<Self> {
        let s: Vec<f64> = sols.iter().map(|p| p.s).collect();
        let ds = sgrid::spacing(&s)?;
        let dg: Vec<f64> = meshes
            .iter()
            .zip(dpsi)
            .map(|(m, d)| 2.0 * m.integrate(d))
            .collect();
        let d2g = sgrid::first_derivative(&dg, ds)?;
        Ok(RigidityProfile {
            s,
            g: sols.iter().map(|p| p.g_bulk).collect(),
            g_energy: sols.iter().map(|p| p.g_energy).collect(),
            residual: sols.iter().map(|p| p.residual).collect(),
            dg,
            d2g,
        })
    }

    pub fn min(&self) -> f64 {
        self.g.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_energy_defect(&self) -> f64 {
        self.g
            .iter()
            .zip(&self.g_energy)
            .map(|(a, b)| (a - b).abs() / a)
            .fold(0.0, f64::max)
    }

    /// Profile with constant G and no s-variation, for tests and oracles.
    pub fn constant(s: Vec<f64>, g: f64) -> Self {
        let n = s.len();
        RigidityProfile {
            s,
            g: vec![g; n],
            g_energy: vec![g; n],
            residual: vec![0.0; n],
            dg: vec![0.0; n],
            d2g: vec![0.0; n],
        }
    }
}

/// Ψ at every station, its fixed-η s-derivative and the rigidity profile.
#[derive(Clone, Debug)]
pub struct PrandtlProfile {
    pub solutions: Vec<PrandtlSolution>,
    pub dpsi: Vec<Vec<f64>>,
    pub rigidity: RigidityProfile,
}

pub fn rigidity_profile(meshes: &[SectionMesh]) -> Result<PrandtlProfile> {
    let solutions = solve_stations(meshes)?;
    let dpsi = psi_s_derivative(meshes, &solutions)?;
    let rigidity = RigidityProfile::new(meshes, &solutions, &dpsi)?;
    Ok(PrandtlProfile {
        solutions,
        dpsi,
        rigidity,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{CurveSpec, PipeGeometry, RadiusJet, RadiusSpec};
    use crate::manufactured::{beta_jet, div_coef_grad, limacon_level_set, Jet2};
    use crate::section::{build_meshes, SectionShape};

    fn limacon(n_theta: usize, a: f64) -> SectionShape {
        SectionShape::from_radius(n_theta, |t| RadiusJet {
            r: 1.0 + a * t.cos(),
            r_theta: -a * t.sin(),
            r_thetatheta: -a * t.cos(),
            ..Default::default()
        })
    }

    fn disk_solution(n: usize) -> (SectionMesh, PrandtlSolution) {
        let mesh = SectionMesh::new(SectionShape::disk(n, 1.0), n).unwrap();
        let sol = solve_prandtl(&mesh).unwrap();
        (mesh, sol)
    }

    #[test]
    fn disk_matches_closed_form() {
        let (mesh, sol) = disk_solution(64);
        for (n, nd) in mesh.nodes().iter().enumerate() {
            let exact = 0.5 * (1.0 - nd.eta * nd.eta);
            assert!((sol.psi[n] - exact).abs() < 1e-8, "node {n}");
        }
        assert!((sol.g_bulk - PI / 2.0).abs() / (PI / 2.0) < 1e-3);
        assert!(sol.energy_defect() < 1e-3);
    }

    #[test]
    fn disk_rigidity_converges_at_second_order() {
        let e: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| (disk_solution(n).1.g_bulk - PI / 2.0).abs())
            .collect();
        assert!(
            (e[0] / e[1]).log2() > 1.9 && (e[1] / e[2]).log2() > 1.9,
            "{e:?}"
        );
    }

    #[test]
    fn energy_identity_on_limacon() {
        let defect = |n: usize| {
            let mesh = SectionMesh::new(limacon(n, 0.2), n).unwrap();
            solve_prandtl(&mesh).unwrap().energy_defect()
        };
        let (d32, d64) = (defect(32), defect(64));
        assert!(d64 < 1e-3, "{d64}");
        assert!((d32 / d64).log2() > 1.9, "{d32} {d64}");
    }

    #[test]
    fn manufactured_solution_on_curved_limacon() {
        let (a, h, kappa) = (0.2, 0.1, [1.0, 0.5]);
        let exact = |x: f64, y: f64| {
            limacon_level_set(x, y, a)
                * (Jet2::constant(1.0) + Jet2::x(x) * 0.3 + Jet2::y(y) * Jet2::y(y))
        };
        let err = |n: usize| {
            let shape = limacon(n, a).with_curvature(h, kappa);
            let mesh = SectionMesh::new(shape, n).unwrap();
            let rhs: Vec<f64> = mesh
                .nodes()
                .iter()
                .map(|nd| -div_coef_grad(beta_jet(h, kappa, nd.x, nd.y), exact(nd.x, nd.y)))
                .collect();
            let (u, res) = solve_with(&mesh, mesh.beta(), &rhs).unwrap();
            assert!(res < 1e-9);
            mesh.nodes()
                .iter()
                .zip(&u)
                .map(|(nd, v)| (v - exact(nd.x, nd.y).v).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!((e1 / e2).log2() > 1.9, "{e1} {e2}");
    }

    #[test]
    fn beta_weighted_differs_from_flat_by_order_h() {
        let diff = |h: f64| {
            let mesh = SectionMesh::new(
                SectionShape::disk(32, 1.0).with_curvature(h, [1.0, 0.0]),
                32,
            )
            .unwrap();
            let flat = SectionMesh::new(SectionShape::disk(32, 1.0), 32).unwrap();
            let a = solve_prandtl(&mesh).unwrap().psi;
            let b = solve_prandtl(&flat).unwrap().psi;
            a.iter()
                .zip(&b)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        };
        let (d1, d2) = (diff(0.1), diff(0.05));
        assert!(((d1 / d2).log2() - 1.0).abs() < 0.1, "{d1} {d2}");
        let mesh = SectionMesh::new(
            SectionShape::disk(32, 1.0).with_curvature(0.2, [1.0, 0.0]),
            32,
        )
        .unwrap();
        let sol = solve_prandtl(&mesh).unwrap();
        assert!(sol.psi[..mesh.n_interior()].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn varying_disk_profile_follows_chain_rule() {
        let (amp, n_s) = (0.3, 64);
        let geom = PipeGeometry::build(
            &CurveSpec::Straight,
            RadiusSpec::AxialWave {
                r0: 1.0,
                amplitude: amp,
                frequency: 1.0,
            },
            0.1,
            n_s,
            32,
        )
        .unwrap();
        let meshes = build_meshes(&geom, 32).unwrap();
        let prof = rigidity_profile(&meshes).unwrap();
        let w = 2.0 * PI;
        for (i, st) in geom.stations().iter().enumerate() {
            let r = 1.0 + amp * (w * st.s).sin();
            let r_s = amp * w * (w * st.s).cos();
            // Ψ = (ρ² − η²)/2, so ∂ₛΨ|_η = ρρ′ everywhere in the section
            let worst = prof.dpsi[i]
                .iter()
                .map(|d| (d - r * r_s).abs())
                .fold(0.0, f64::max);
            assert!(worst < 2e-2, "station {i}: {worst}");
            let g = PI * r.powi(4) / 2.0;
            assert!((prof.rigidity.g[i] - g).abs() / g < 2e-3);
            let dg = 2.0 * PI * r.powi(3) * r_s;
            assert!(
                (prof.rigidity.dg[i] - dg).abs() < 2e-2 * (1.0 + dg.abs()),
                "station {i}"
            );
        }
    }

    #[test]
    fn straight_constant_pipe_has_no_s_variation() {
        let geom = PipeGeometry::build(
            &CurveSpec::Straight,
            RadiusSpec::Constant { r0: 1.0 },
            0.1,
            8,
            16,
        )
        .unwrap();
        let meshes = build_meshes(&geom, 16).unwrap();
        let prof = rigidity_profile(&meshes).unwrap();
        assert!(prof.dpsi.iter().flatten().all(|&d| d.abs() < 1e-12));
        assert!(prof.rigidity.dg.iter().all(|&d| d.abs() < 1e-12));
    }
}
