//! Transverse correction (v²‡, p²) on one cross-section:
//!
//! −β⁻¹∇′·β∇′v + ∇′p = F,   −∇′·(βv) = g in ω(s),   v = 0 on ∂ω(s),
//!
//! with F = β⁻²h c‴‡ v₃¹ + β⁻³h c″(2β∂ₛv₃¹ − v₃¹∂ₛβ) and g = ∂ₛv₃¹.
//!
//! Velocity is stored in Cartesian section components at interior nodes and
//! pressure at all nodes (equal order). The pressure–velocity coupling is
//! assembled cell by cell, and a pressure-gradient stabilization of size
//! α(RΔρ)²∫∇′p·∇′q removes the checkerboard mode. The pressure Schur
//! complement is solved by preconditioned CG around a Cholesky factor of the
//! velocity block.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PipeError, Result};
use crate::linalg::{norm2, pcg, BandedCholesky, CsrMatrix};
use crate::manufactured::{div_coef_vec, Jet2};
use crate::prandtl::PrandtlSolution;
use crate::reynolds::{longitudinal_velocity, longitudinal_velocity_s, PressureProfile};
use crate::section::{SectionMesh, VectorField2};
use crate::sgrid;

/// Relative residual requested from the pressure Schur-complement iteration.
pub const SCHUR_TOLERANCE: f64 = 1e-8;

/// Compatibility pre-check: |∫g dσ| must stay below this multiple of ‖g‖.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-6;

const STABILIZATION: f64 = 0.5;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Compatibility {
    /// |∫g dσ|
    pub integral: f64,
    /// ‖g‖_{L²(ω)}
    pub norm: f64,
}

impl Compatibility {
    pub fn ratio(&self) -> f64 {
        if self.norm > 0.0 {
            self.integral / self.norm
        } else {
            0.0
        }
    }

    pub fn holds(&self) -> bool {
        self.integral <= COMPATIBILITY_TOLERANCE * self.norm
    }
}

/// |∫ω ∂ₛv₃¹ dσ| next to ‖∂ₛv₃¹‖.
pub fn check_compatibility(mesh: &SectionMesh, g: &[f64]) -> Compatibility {
    Compatibility {
        integral: mesh.integrate(g).abs(),
        norm: mesh.l2_norm(g),
    }
}

#[derive(Clone, Debug)]
pub struct TransverseSolution {
    pub station: usize,
    pub s: f64,
    pub v: VectorField2,
    /// mean-zero over the section
    pub p: Vec<f64>,
    /// ‖Bv − Cp − Mg‖ / ‖Mg‖ of the discrete constraint
    pub divergence_residual: f64,
    /// ‖∇′·(βv) + g‖ / ‖g‖ with finite-difference divergence
    pub fd_divergence_residual: f64,
    pub compatibility: Compatibility,
    pub iterations: usize,
}

impl TransverseSolution {
    pub fn zero(mesh: &SectionMesh) -> Self {
        let n = mesh.n_nodes();
        TransverseSolution {
            station: mesh.shape().station,
            s: mesh.shape().s,
            v: VectorField2::zeros(n),
            p: vec![0.0; n],
            divergence_residual: 0.0,
            fd_divergence_residual: 0.0,
            compatibility: Compatibility {
                integral: 0.0,
                norm: 0.0,
            },
            iterations: 0,
        }
    }
}

/// Factored saddle-point operator for one section.
pub struct StokesOperator {
    chol: BandedCholesky,
    /// pressure (all nodes) × velocity (x block, then y block, interior nodes)
    b: CsrMatrix,
    stab: CsrMatrix,
    control_volumes: Vec<f64>,
    n_int: usize,
    n_nodes: usize,
}

impl StokesOperator {
    pub fn new(mesh: &SectionMesh) -> Result<Self> {
        let n_int = mesh.n_interior();
        let n_nodes = mesh.n_nodes();
        let keep: Vec<usize> = (0..n_int).collect();
        let k = mesh.energy_matrix(mesh.beta()).submatrix(&keep);
        let chol = BandedCholesky::factor(&k)?;
        let mean_r =
            (0..mesh.n_theta()).map(|j| mesh.radius(j).r).sum::<f64>() / mesh.n_theta() as f64;
        let h_char = mean_r * mesh.d_rho();
        let lap = mesh.energy_matrix(&vec![1.0; n_nodes]);
        let scale = STABILIZATION * h_char * h_char;
        let stab_triplets: Vec<(usize, usize, f64)> = (0..n_nodes)
            .flat_map(|r| {
                lap.row(r)
                    .map(move |(c, v)| (r, c, scale * v))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(StokesOperator {
            chol,
            b: coupling_matrix(mesh),
            stab: CsrMatrix::from_triplets(n_nodes, n_nodes, &stab_triplets),
            control_volumes: mesh.control_volumes().to_vec(),
            n_int,
            n_nodes,
        })
    }

    fn solve_velocity(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n_int;
        let mut out = self.chol.solve(&rhs[..n]);
        out.extend(self.chol.solve(&rhs[n..]));
        out
    }

    /// Solves with nodal force F (Cartesian) and divergence data g.
    /// Returns interior velocity (x block then y block), nodal pressure and CG statistics.
    fn solve_raw(
        &self,
        mesh: &SectionMesh,
        force: &VectorField2,
        g: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, usize, f64)> {
        let (n, cv, beta) = (self.n_int, &self.control_volumes, mesh.beta());
        let mut f = vec![0.0; 2 * n];
        for i in 0..n {
            f[i] = cv[i] * beta[i] * force.x[i];
            f[n + i] = cv[i] * beta[i] * force.y[i];
        }
        // project g so that the discrete system is consistent with constant pressures
        let mean = g.iter().zip(cv).map(|(a, c)| a * c).sum::<f64>() / cv.iter().sum::<f64>();
        let mg: Vec<f64> = g.iter().zip(cv).map(|(a, c)| c * (a - mean)).collect();
        let kf = self.solve_velocity(&f);
        let bkf = self.b.mul_vec(&kf);
        let rhs: Vec<f64> = bkf.iter().zip(&mg).map(|(a, b)| a - b).collect();
        let apply = |p: &[f64]| {
            let btp = self.b.mul_transpose_vec(p);
            let kbtp = self.solve_velocity(&btp);
            let mut out = self.b.mul_vec(&kbtp);
            for (o, c) in out.iter_mut().zip(self.stab.mul_vec(p)) {
                *o += c;
            }
            out
        };
        let precond = |r: &[f64]| r.iter().zip(cv).map(|(a, c)| a / c).collect::<Vec<f64>>();
        let mut p = vec![0.0; self.n_nodes];
        let stats = pcg(
            apply,
            precond,
            &rhs,
            &mut p,
            SCHUR_TOLERANCE,
            20 * self.n_nodes.max(100),
        )?;
        let btp = self.b.mul_transpose_vec(&p);
        let rhs_v: Vec<f64> = f.iter().zip(&btp).map(|(a, b)| a - b).collect();
        let v = self.solve_velocity(&rhs_v);
        let bv = self.b.mul_vec(&v);
        let cp = self.stab.mul_vec(&p);
        let r: Vec<f64> = (0..self.n_nodes).map(|i| bv[i] - cp[i] - mg[i]).collect();
        let mg_norm = norm2(&mg);
        let residual = if mg_norm > 0.0 {
            norm2(&r) / mg_norm
        } else {
            norm2(&r)
        };
        Ok((v, p, stats.iterations, residual))
    }

    /// Full solve; pressure is normalized to zero mean over the section.
    pub fn solve(
        &self,
        mesh: &SectionMesh,
        force: &VectorField2,
        g: &[f64],
    ) -> Result<TransverseSolution> {
        let compatibility = check_compatibility(mesh, g);
        let (raw, mut p, iterations, divergence_residual) = self.solve_raw(mesh, force, g)?;
        let pm = mesh.integrate(&p) / mesh.area();
        p.iter_mut().for_each(|v| *v -= pm);
        let mut v = VectorField2::zeros(self.n_nodes);
        v.x[..self.n_int].copy_from_slice(&raw[..self.n_int]);
        v.y[..self.n_int].copy_from_slice(&raw[self.n_int..]);
        let fd_divergence_residual = fd_divergence_residual(mesh, &v, g);
        Ok(TransverseSolution {
            station: mesh.shape().station,
            s: mesh.shape().s,
            v,
            p,
            divergence_residual,
            fd_divergence_residual,
            compatibility,
            iterations,
        })
    }
}

/// ‖∇′·(βv) + g‖ / ‖g‖ (absolute when g = 0).
pub fn fd_divergence_residual(mesh: &SectionMesh, v: &VectorField2, g: &[f64]) -> f64 {
    let beta = mesh.beta();
    let bv = VectorField2 {
        x: v.x.iter().zip(beta).map(|(a, b)| a * b).collect(),
        y: v.y.iter().zip(beta).map(|(a, b)| a * b).collect(),
    };
    let r: Vec<f64> = mesh.div(&bv).iter().zip(g).map(|(d, gi)| d + gi).collect();
    let gn = mesh.l2_norm(g);
    let rn = mesh.l2_norm(&r);
    if gn > 0.0 {
        rn / gn
    } else {
        rn
    }
}

/// b(v, q) = Σ_cells β_c|c| v_c·∇′q_c with cell-averaged velocity.
fn coupling_matrix(mesh: &SectionMesh) -> CsrMatrix {
    let (nr, nt) = (mesh.n_rho(), mesh.n_theta());
    let (dr, dt) = (mesh.d_rho(), mesh.d_theta());
    let n_int = mesh.n_interior();
    let beta = mesh.beta();
    let mut t = Vec::with_capacity(nr * nt * 32);
    for k in 0..nr {
        let rho = (k as f64 + 0.5) * dr;
        for j in 0..nt {
            let j1 = (j + 1) % nt;
            let corners = [
                mesh.node(k, j),
                mesh.node(k, j1),
                mesh.node(k + 1, j),
                mesh.node(k + 1, j1),
            ];
            let (ra, rb) = (mesh.radius(j), mesh.radius(j1));
            let r = 0.5 * (ra.r + rb.r);
            let m = 0.5 * (ra.r_theta + rb.r_theta) / r;
            let th = mesh.theta(j) + 0.5 * dt;
            let (sn, cs) = th.sin_cos();
            let area = rho * r * r * dr * dt;
            let bc = 0.25 * corners.iter().map(|&c| beta[c]).sum::<f64>();
            // ∂ρ and ∂θ weights of corners (00, 01, 10, 11)
            let w_rho = [-0.5 / dr, -0.5 / dr, 0.5 / dr, 0.5 / dr];
            let w_th = [-0.5 / dt, 0.5 / dt, -0.5 / dt, 0.5 / dt];
            for (q, &cq) in corners.iter().enumerate() {
                let d_eta = w_rho[q] / r;
                let d_ang = (w_th[q] - rho * m * w_rho[q]) / (rho * r);
                let gx = cs * d_eta - sn * d_ang;
                let gy = sn * d_eta + cs * d_ang;
                for &cv in &corners {
                    if cv >= n_int {
                        continue;
                    }
                    let w = 0.25 * bc * area;
                    t.push((cq, cv, w * gx));
                    t.push((cq, n_int + cv, w * gy));
                }
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_nodes(), 2 * n_int, &t)
}

/// Momentum forcing F and divergence data g at one station.
pub fn transverse_data(
    mesh: &SectionMesh,
    psi: &PrandtlSolution,
    dpsi: &[f64],
    pressure: &PressureProfile,
    index: usize,
) -> (VectorField2, Vec<f64>) {
    let shape = mesh.shape();
    let (h, k, ks) = (shape.h, shape.kappa, shape.kappa_s);
    let v = longitudinal_velocity(&psi.psi, pressure.dp[index]);
    let g = longitudinal_velocity_s(&psi.psi, dpsi, pressure.dp[index], pressure.d2p[index]);
    let mut force = VectorField2::zeros(mesh.n_nodes());
    for n in 0..mesh.n_nodes() {
        let b = mesh.beta()[n];
        let bs = mesh.beta_s()[n];
        let c1 = h * v[n] / (b * b);
        let c2 = h * (2.0 * b * g[n] - v[n] * bs) / (b * b * b);
        force.x[n] = c1 * ks[0] + c2 * k[0];
        force.y[n] = c1 * ks[1] + c2 * k[1];
    }
    (force, g)
}

/// Solves the transverse problem at one station after checking compatibility.
pub fn solve_transverse(
    mesh: &SectionMesh,
    psi: &PrandtlSolution,
    dpsi: &[f64],
    pressure: &PressureProfile,
    index: usize,
) -> Result<TransverseSolution> {
    let (force, g) = transverse_data(mesh, psi, dpsi, pressure, index);
    let compat = check_compatibility(mesh, &g);
    if !compat.holds() {
        return Err(PipeError::Compatibility {
            residual: compat.integral,
            threshold: COMPATIBILITY_TOLERANCE * compat.norm,
        });
    }
    let all_zero = g.iter().all(|&x| x == 0.0) && force.x.iter().chain(&force.y).all(|&x| x == 0.0);
    if all_zero {
        return Ok(TransverseSolution::zero(mesh));
    }
    StokesOperator::new(mesh)?.solve(mesh, &force, &g)
}

/// Transverse solutions at every station, in parallel.
pub fn solve_all(
    meshes: &[SectionMesh],
    psi: &[PrandtlSolution],
    dpsi: &[Vec<f64>],
    pressure: &PressureProfile,
) -> Result<Vec<TransverseSolution>> {
    if meshes.len() != psi.len() || psi.len() != dpsi.len() || psi.len() != pressure.len() {
        return Err(PipeError::Mismatch(
            "station counts differ between inputs".into(),
        ));
    }
    (0..meshes.len())
        .into_par_iter()
        .map(|i| {
            solve_transverse(&meshes[i], &psi[i], &dpsi[i], pressure, i)
                .map_err(|e| e.at_station("transverse", i, meshes[i].shape().s))
        })
        .collect()
}

/// ∂ₛv²‡ by differences on the reference grid.
pub fn transverse_s_derivative(sols: &[TransverseSolution]) -> Result<Vec<VectorField2>> {
    let s: Vec<f64> = sols.iter().map(|t| t.s).collect();
    let ds = sgrid::spacing(&s)?;
    let xs: Vec<Vec<f64>> = sols.iter().map(|t| t.v.x.clone()).collect();
    let ys: Vec<Vec<f64>> = sols.iter().map(|t| t.v.y.clone()).collect();
    let dx = sgrid::first_derivative_fields(&xs, ds)?;
    let dy = sgrid::first_derivative_fields(&ys, ds)?;
    Ok(dx
        .into_iter()
        .zip(dy)
        .map(|(x, y)| VectorField2 { x, y })
        .collect())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClaimResidual {
    pub area: f64,
    pub boundary: f64,
}

impl ClaimResidual {
    pub fn sum(&self) -> f64 {
        self.area + self.boundary
    }
}

/// Evaluates both integrals of the s-differentiated compatibility identity
///
/// ∫ω β(∂ₛg + β⁻¹∇′·(∂ₛβ u) − β⁻²∂ₛβ ∇′·(βu)) dσ
///   + ∫₀^{2π} β(∂ₛh − ∂ₛR ∂_ηu)·(R e₁ − ∂_θR e₂) dθ,
///
/// which vanishes whenever −β⁻¹∇′·(βu) = g in ω(s) and u = h on ∂ω(s) for all s.
/// `dh` holds ∂ₛh per boundary ray in Cartesian components.
pub fn check_claim_identity(
    mesh: &SectionMesh,
    u: &VectorField2,
    dg: &[f64],
    dh: &[[f64; 2]],
) -> ClaimResidual {
    let (beta, beta_s) = (mesh.beta(), mesh.beta_s());
    let scale = |c: &[f64]| VectorField2 {
        x: u.x.iter().zip(c).map(|(a, b)| a * b).collect(),
        y: u.y.iter().zip(c).map(|(a, b)| a * b).collect(),
    };
    let div_bs_u = mesh.div(&scale(beta_s));
    let div_b_u = mesh.div(&scale(beta));
    let integrand: Vec<f64> = (0..mesh.n_nodes())
        .map(|n| beta[n] * dg[n] + div_bs_u[n] - beta_s[n] / beta[n] * div_b_u[n])
        .collect();
    let area = mesh.integrate(&integrand);
    let mut boundary = 0.0;
    for j in 0..mesh.n_theta() {
        let n = mesh.node(mesh.n_rho(), j);
        let rj = mesh.radius(j);
        let (sn, cs) = mesh.theta(j).sin_cos();
        let ux = mesh.boundary_normal_derivative(&u.x, j);
        let uy = mesh.boundary_normal_derivative(&u.y, j);
        let tx = dh[j][0] - rj.r_s * ux;
        let ty = dh[j][1] - rj.r_s * uy;
        let nx = rj.r * cs + rj.r_theta * sn;
        let ny = rj.r * sn - rj.r_theta * cs;
        boundary += beta[n] * (tx * nx + ty * ny) * mesh.d_theta();
    }
    ClaimResidual { area, boundary }
}

/// The manufactured field u(x, y, s) = φ(s)·(A(x, y), B(x, y)) used for the identity check.
fn manufactured_u(x: f64, y: f64, s: f64) -> ([Jet2; 2], [Jet2; 2]) {
    let (jx, jy) = (Jet2::x(x), Jet2::y(y));
    let a = (jx * 1.3).sin() * (jy * 0.7).cos() + 0.3;
    let b = jx * jy + jy * jy * 0.5 - jx * 0.2;
    let phi = 1.0 + 0.5 * s + s * s;
    let dphi = 0.5 + 2.0 * s;
    ([a * phi, b * phi], [a * dphi, b * dphi])
}

/// Builds an exact (u, ∂ₛg, ∂ₛh) triple on the mesh and evaluates the identity.
/// `dg_shift` is added to ∂ₛg; a nonzero value breaks the triple on purpose.
pub fn manufactured_claim_check(mesh: &SectionMesh, dg_shift: f64) -> ClaimResidual {
    let shape = mesh.shape();
    let (h, k, ks, s) = (shape.h, shape.kappa, shape.kappa_s, shape.s);
    let n = mesh.n_nodes();
    let mut u = VectorField2::zeros(n);
    let mut dg = vec![0.0; n];
    for (i, nd) in mesh.nodes().iter().enumerate() {
        let (x, y) = (nd.x, nd.y);
        let (uu, du) = manufactured_u(x, y, s);
        let beta = Jet2::constant(1.0) - (Jet2::x(x) * k[0] + Jet2::y(y) * k[1]) * h;
        let beta_s = (Jet2::x(x) * ks[0] + Jet2::y(y) * ks[1]) * (-h);
        u.x[i] = uu[0].v;
        u.y[i] = uu[1].v;
        // g = −β⁻¹∇′β·u − ∇′·u, differentiated in s at fixed (x, y)
        let b = beta.v;
        let grad_b_u = beta.dx * uu[0].v + beta.dy * uu[1].v;
        dg[i] = beta_s.v / (b * b) * grad_b_u
            - (beta_s.dx * uu[0].v + beta_s.dy * uu[1].v) / b
            - (beta.dx * du[0].v + beta.dy * du[1].v) / b
            - div_coef_vec(Jet2::constant(1.0), du[0], du[1])
            + dg_shift;
    }
    let dh: Vec<[f64; 2]> = (0..mesh.n_theta())
        .map(|j| {
            let rj = mesh.radius(j);
            let (sn, cs) = mesh.theta(j).sin_cos();
            let (uu, du) = manufactured_u(rj.r * cs, rj.r * sn, s);
            // h(θ, s) = u(R(θ, s)cosθ, R(θ, s)sinθ, s)
            [
                du[0].v + rj.r_s * (uu[0].dx * cs + uu[0].dy * sn),
                du[1].v + rj.r_s * (uu[1].dx * cs + uu[1].dy * sn),
            ]
        })
        .collect();
    check_claim_identity(mesh, &u, &dg, &dh)
}

/// A manufactured Stokes pair on a section and the data it induces.
pub struct ManufacturedStokes {
    pub velocity: VectorField2,
    pub pressure: Vec<f64>,
    pub force: VectorField2,
    pub divergence: Vec<f64>,
}

/// Velocity (φ·(sin x cos y + 0.5), φ·x y) with φ vanishing on ∂ω and pressure cos(x)·e^{y/2}.
/// `level_set(x, y)` must vanish on the boundary and be positive inside.
pub fn manufactured_stokes<L: Fn(f64, f64) -> Jet2>(
    mesh: &SectionMesh,
    level_set: L,
) -> ManufacturedStokes {
    let shape = mesh.shape();
    let n = mesh.n_nodes();
    let mut out = ManufacturedStokes {
        velocity: VectorField2::zeros(n),
        pressure: vec![0.0; n],
        force: VectorField2::zeros(n),
        divergence: vec![0.0; n],
    };
    for (i, nd) in mesh.nodes().iter().enumerate() {
        let (jx, jy) = (Jet2::x(nd.x), Jet2::y(nd.y));
        let phi = level_set(nd.x, nd.y);
        let vx = phi * ((jx * 1.1).sin() * jy.cos() + 0.5);
        let vy = phi * jx * jy;
        let p = jx.cos() * (jy * 0.5).exp();
        let beta = Jet2::constant(1.0) - (jx * shape.kappa[0] + jy * shape.kappa[1]) * shape.h;
        let lap = |c: Jet2| crate::manufactured::div_coef_grad(beta, c) / beta.v;
        out.velocity.x[i] = vx.v;
        out.velocity.y[i] = vy.v;
        out.pressure[i] = p.v;
        out.force.x[i] = -lap(vx) + p.dx;
        out.force.y[i] = -lap(vy) + p.dy;
        out.divergence[i] = -div_coef_vec(beta, vx, vy);
    }
    let mean = mesh.integrate(&out.pressure) / mesh.area();
    out.pressure.iter_mut().for_each(|v| *v -= mean);
    out
}

/// Quadrature error estimate by Richardson extrapolation of a second-order rule.
pub fn richardson_error(coarse: f64, fine: f64) -> f64 {
    (coarse - fine).abs() / 3.0
}

/// L² norm of a section vector field times 1/(2π), handy for comparing families.
pub fn mean_l2(mesh: &SectionMesh, v: &VectorField2) -> f64 {
    mesh.l2_norm_vec(v) / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurveSpec, PipeGeometry, RadiusJet, RadiusSpec};
    use crate::manufactured::{disk_level_set, limacon_level_set};
    use crate::section::{build_meshes, SectionShape};

    fn limacon(n_theta: usize, a: f64) -> SectionShape {
        SectionShape::from_radius(n_theta, |t| RadiusJet {
            r: 1.0 + a * t.cos(),
            r_theta: -a * t.sin(),
            r_thetatheta: -a * t.cos(),
            ..Default::default()
        })
    }

    fn stokes_error<L: Fn(f64, f64) -> Jet2 + Copy>(
        shape: SectionShape,
        n: usize,
        ls: L,
    ) -> (f64, f64, f64) {
        let mesh = SectionMesh::new(shape, n).unwrap();
        let m = manufactured_stokes(&mesh, ls);
        let op = StokesOperator::new(&mesh).unwrap();
        let sol = op.solve(&mesh, &m.force, &m.divergence).unwrap();
        let ev = (0..mesh.n_nodes())
            .map(|i| {
                (sol.v.x[i] - m.velocity.x[i])
                    .abs()
                    .max((sol.v.y[i] - m.velocity.y[i]).abs())
            })
            .fold(0.0, f64::max);
        let ep: Vec<f64> = sol.p.iter().zip(&m.pressure).map(|(a, b)| a - b).collect();
        (ev, mesh.l2_norm(&ep), sol.divergence_residual)
    }

    #[test]
    fn manufactured_stokes_on_curved_disk() {
        let shape = |n| SectionShape::disk(n, 1.0).with_curvature(0.2, [1.0, 0.3]);
        let (v1, p1, r1) = stokes_error(shape(16), 16, disk_level_set);
        let (v2, p2, r2) = stokes_error(shape(32), 32, disk_level_set);
        assert!(r1 < 1e-6 && r2 < 1e-6);
        let (ov, op) = ((v1 / v2).log2(), (p1 / p2).log2());
        assert!(ov > 1.5, "velocity order {ov}: {v1} {v2}");
        assert!(op > 1.5, "pressure order {op}: {p1} {p2}");
    }

    #[test]
    fn manufactured_stokes_on_limacon() {
        let ls = |x: f64, y: f64| limacon_level_set(x, y, 0.2);
        let (v1, p1, _) = stokes_error(limacon(16, 0.2), 16, ls);
        let (v2, p2, _) = stokes_error(limacon(32, 0.2), 32, ls);
        let (ov, op) = ((v1 / v2).log2(), (p1 / p2).log2());
        assert!(ov > 1.5, "velocity order {ov}: {v1} {v2}");
        assert!(op > 1.5, "pressure order {op}: {p1} {p2}");
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let mesh = SectionMesh::new(SectionShape::disk(16, 1.0), 16).unwrap();
        let n = mesh.n_nodes();
        let sol = StokesOperator::new(&mesh)
            .unwrap()
            .solve(&mesh, &VectorField2::zeros(n), &vec![0.0; n])
            .unwrap();
        assert!(sol
            .v
            .x
            .iter()
            .chain(&sol.v.y)
            .chain(&sol.p)
            .all(|&x| x == 0.0));
    }

    #[test]
    fn pressure_is_mean_zero_and_boundary_velocity_vanishes() {
        let shape = SectionShape::disk(16, 1.0).with_curvature(0.1, [0.0, 1.0]);
        let mesh = SectionMesh::new(shape, 16).unwrap();
        let m = manufactured_stokes(&mesh, disk_level_set);
        let sol = StokesOperator::new(&mesh)
            .unwrap()
            .solve(&mesh, &m.force, &m.divergence)
            .unwrap();
        assert!(mesh.integrate(&sol.p).abs() < 1e-12);
        for n in mesh.n_interior()..mesh.n_nodes() {
            assert_eq!((sol.v.x[n], sol.v.y[n]), (0.0, 0.0));
        }
    }

    fn claim_residual(curve: &CurveSpec, n: usize, shift: f64) -> ClaimResidual {
        let geom = PipeGeometry::build(
            curve,
            RadiusSpec::Harmonic {
                r0: 1.0,
                amplitude: 0.2,
                mode: 1,
                taper: 0.3,
            },
            0.1,
            8,
            n,
        )
        .unwrap();
        let mesh = SectionMesh::new(geom.section_shape(3), n).unwrap();
        manufactured_claim_check(&mesh, shift)
    }

    #[test]
    fn claim_identity_vanishes_at_second_order() {
        for curve in [
            CurveSpec::Arc { radius: 1.0 },
            CurveSpec::Helix {
                curvature: 1.0,
                torsion: 1.0,
            },
        ] {
            let r: Vec<f64> = [32, 64]
                .iter()
                .map(|&n| claim_residual(&curve, n, 0.0).sum().abs())
                .collect();
            assert!((r[0] / r[1]).log2() > 1.9, "{curve:?}: {r:?}");
            let broken = claim_residual(&curve, 64, 1.0).sum().abs();
            assert!(broken > 1e3 * r[1], "{broken} vs {}", r[1]);
        }
    }

    #[test]
    fn straight_pipe_claim_terms_vanish_individually() {
        let geom = PipeGeometry::build(
            &CurveSpec::Straight,
            RadiusSpec::Constant { r0: 1.0 },
            0.1,
            8,
            32,
        )
        .unwrap();
        let mesh = SectionMesh::new(geom.section_shape(2), 32).unwrap();
        let n = mesh.n_nodes();
        let u = VectorField2 {
            x: mesh.nodes().iter().map(|nd| nd.x * nd.y).collect(),
            y: mesh.nodes().iter().map(|nd| nd.x).collect(),
        };
        let r = check_claim_identity(&mesh, &u, &vec![0.0; n], &vec![[0.0; 2]; 32]);
        assert_eq!((r.area, r.boundary), (0.0, 0.0));
    }

    #[test]
    fn s_derivative_needs_three_stations() {
        let mesh = SectionMesh::new(SectionShape::disk(8, 1.0), 8).unwrap();
        let one = vec![TransverseSolution::zero(&mesh)];
        assert!(transverse_s_derivative(&one).is_err());
    }

    #[test]
    fn straight_pipe_has_no_transverse_flow() {
        let geom = PipeGeometry::build(
            &CurveSpec::Straight,
            RadiusSpec::Constant { r0: 1.0 },
            0.1,
            8,
            16,
        )
        .unwrap();
        let meshes = build_meshes(&geom, 16).unwrap();
        let prof = crate::prandtl::rigidity_profile(&meshes).unwrap();
        let p = crate::reynolds::solve_reynolds(&prof.rigidity, 1.0, 0.0).unwrap();
        let sols = solve_all(&meshes, &prof.solutions, &prof.dpsi, &p).unwrap();
        for t in &sols {
            assert!(t.v.x.iter().chain(&t.v.y).all(|&x| x == 0.0));
        }
        let d = transverse_s_derivative(&sols).unwrap();
        assert!(d.iter().all(|f| f.x.iter().chain(&f.y).all(|&x| x == 0.0)));
    }
}
