//! Mapped polar discretization of one star-shaped cross-section.
//!
//! The reference grid is ρ_k = k/N_ρ, θ_j = 2πj/N_θ, mapped to the section by
//! η = ρ·R(θ). Node 0 is the pole; node (k, j) for k ≥ 1 is `1 + (k-1)·N_θ + j`,
//! so interior nodes come first and the boundary ring k = N_ρ last.
//!
//! Elliptic operators are assembled from a discrete energy. In reference
//! coordinates ∫c|∇′u|²dσ = ∫c[ρ(1+m²)u_ρ² − 2m·u_ρu_θ + u_θ²/ρ] dρdθ with
//! m = R_θ/R; the squared terms live on grid edges and the cross term on cells,
//! which keeps the matrix symmetric for any star-shaped section.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{PipeError, Result};
use crate::geometry::{PipeGeometry, RadiusJet};
use crate::linalg::{norm2, solve_dense, CsrMatrix, SpdSolver};

/// Smallest radial resolution accepted.
pub const MIN_N_RHO: usize = 4;

/// Relative residual requested from iterative elliptic solves.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Geometry of one cross-section, independent of the mesh resolution in ρ.
#[derive(Clone, Debug)]
pub struct SectionShape {
    pub station: usize,
    pub s: f64,
    pub h: f64,
    /// R and derivatives at θ_j = 2πj/N_θ
    pub radius: Vec<RadiusJet>,
    /// (c″·e₁(0), c″·e₁(π/2))
    pub kappa: [f64; 2],
    pub kappa_s: [f64; 2],
    pub kappa_ss: [f64; 2],
    pub curvature_sq: f64,
}

impl SectionShape {
    /// A section with β ≡ 1 and radius given by `f(θ)`.
    pub fn from_radius<F: Fn(f64) -> RadiusJet>(n_theta: usize, f: F) -> Self {
        SectionShape {
            station: 0,
            s: 0.0,
            h: 0.0,
            radius: (0..n_theta)
                .map(|j| f(2.0 * PI * j as f64 / n_theta as f64))
                .collect(),
            kappa: [0.0; 2],
            kappa_s: [0.0; 2],
            kappa_ss: [0.0; 2],
            curvature_sq: 0.0,
        }
    }

    pub fn disk(n_theta: usize, r: f64) -> Self {
        Self::from_radius(n_theta, |_| RadiusJet::constant(r))
    }

    /// Sets a constant curvature vector (no s-variation) and slenderness.
    pub fn with_curvature(mut self, h: f64, kappa: [f64; 2]) -> Self {
        self.h = h;
        self.kappa = kappa;
        self.curvature_sq = kappa[0] * kappa[0] + kappa[1] * kappa[1];
        self
    }

    pub fn n_theta(&self) -> usize {
        self.radius.len()
    }
}

/// Per-node description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeCoords {
    pub k: usize,
    pub j: usize,
    pub rho: f64,
    pub theta: f64,
    pub eta: f64,
    pub x: f64,
    pub y: f64,
}

/// A 2-vector field stored as Cartesian components along the θ = 0 pair (e₁(0), e₂(0)).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorField2 {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField2 {
    pub fn zeros(n: usize) -> Self {
        VectorField2 {
            x: vec![0.0; n],
            y: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Components along (e₁(θ), e₂(θ)) at node n, using the given ray angle.
    pub fn frame_components(&self, n: usize, theta: f64) -> (f64, f64) {
        let (sn, cs) = theta.sin_cos();
        (
            cs * self.x[n] + sn * self.y[n],
            -sn * self.x[n] + cs * self.y[n],
        )
    }
}

#[derive(Clone, Debug)]
pub struct SectionMesh {
    shape: SectionShape,
    n_rho: usize,
    n_theta: usize,
    d_rho: f64,
    d_theta: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    // R_θ / R at θ_j
    m: Vec<f64>,
    nodes: Vec<NodeCoords>,
    weights: Vec<f64>,
    control_volumes: Vec<f64>,
    beta: Vec<f64>,
    beta_s: Vec<f64>,
    beta_ss: Vec<f64>,
}

impl SectionMesh {
    pub fn new(shape: SectionShape, n_rho: usize) -> Result<Self> {
        if n_rho < MIN_N_RHO {
            return Err(PipeError::MeshTooCoarse {
                what: "N_rho",
                got: n_rho,
                needed: MIN_N_RHO,
            });
        }
        let n_theta = shape.n_theta();
        if n_theta < 4 {
            return Err(PipeError::MeshTooCoarse {
                what: "N_theta",
                got: n_theta,
                needed: 4,
            });
        }
        let d_rho = 1.0 / n_rho as f64;
        let d_theta = 2.0 * PI / n_theta as f64;
        let theta: Vec<f64> = (0..n_theta).map(|j| j as f64 * d_theta).collect();
        let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        for (j, r) in shape.radius.iter().enumerate() {
            if !(r.r > 0.0) {
                return Err(PipeError::NonPositiveRadius {
                    s: shape.s,
                    theta: theta[j],
                    radius: r.r,
                });
            }
        }
        let m: Vec<f64> = shape.radius.iter().map(|r| r.r_theta / r.r).collect();

        let n_nodes = 1 + n_rho * n_theta;
        let mut nodes = Vec::with_capacity(n_nodes);
        nodes.push(NodeCoords {
            k: 0,
            j: 0,
            rho: 0.0,
            theta: 0.0,
            eta: 0.0,
            x: 0.0,
            y: 0.0,
        });
        for k in 1..=n_rho {
            let rho = k as f64 * d_rho;
            for j in 0..n_theta {
                let eta = rho * shape.radius[j].r;
                nodes.push(NodeCoords {
                    k,
                    j,
                    rho,
                    theta: theta[j],
                    eta,
                    x: eta * cos[j],
                    y: eta * sin[j],
                });
            }
        }

        let r2: Vec<f64> = shape.radius.iter().map(|r| r.r * r.r).collect();
        let mut weights = vec![0.0; n_nodes];
        let mut control_volumes = vec![0.0; n_nodes];
        control_volumes[0] = d_rho * d_rho / 8.0 * r2.iter().sum::<f64>() * d_theta;
        for (n, node) in nodes.iter().enumerate().skip(1) {
            let half = if node.k == n_rho { 0.5 } else { 1.0 };
            let w = node.rho * r2[node.j] * d_rho * d_theta * half;
            weights[n] = w;
            control_volumes[n] = w;
        }

        let h = shape.h;
        let lin = |c: [f64; 2], nd: &NodeCoords| c[0] * nd.x + c[1] * nd.y;
        let beta: Vec<f64> = nodes
            .iter()
            .map(|nd| 1.0 - h * lin(shape.kappa, nd))
            .collect();
        let beta_s = nodes.iter().map(|nd| -h * lin(shape.kappa_s, nd)).collect();
        let beta_ss = nodes
            .iter()
            .map(|nd| -h * (lin(shape.kappa_ss, nd) + shape.curvature_sq * lin(shape.kappa, nd)))
            .collect();
        if let Some((n, &b)) = beta.iter().enumerate().find(|(_, &b)| !(b > 0.0)) {
            return Err(PipeError::NonPositiveBeta {
                station: shape.station,
                s: shape.s,
                theta: nodes[n].theta,
                beta: b,
            });
        }

        Ok(SectionMesh {
            shape,
            n_rho,
            n_theta,
            d_rho,
            d_theta,
            cos,
            sin,
            m,
            nodes,
            weights,
            control_volumes,
            beta,
            beta_s,
            beta_ss,
        })
    }

    pub fn shape(&self) -> &SectionShape {
        &self.shape
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn d_rho(&self) -> f64 {
        self.d_rho
    }

    pub fn d_theta(&self) -> f64 {
        self.d_theta
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes strictly inside the section (the pole and rings 1..N_ρ−1).
    pub fn n_interior(&self) -> usize {
        1 + (self.n_rho - 1) * self.n_theta
    }

    /// Node index of (k, j); every j maps to the pole when k = 0.
    pub fn node(&self, k: usize, j: usize) -> usize {
        if k == 0 {
            0
        } else {
            1 + (k - 1) * self.n_theta + (j % self.n_theta)
        }
    }

    pub fn coords(&self, n: usize) -> &NodeCoords {
        &self.nodes[n]
    }

    pub fn nodes(&self) -> &[NodeCoords] {
        &self.nodes
    }

    pub fn is_boundary(&self, n: usize) -> bool {
        self.nodes[n].k == self.n_rho
    }

    pub fn radius(&self, j: usize) -> &RadiusJet {
        &self.shape.radius[j]
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.d_theta
    }

    /// Trapezoid quadrature weights for dσ = η dη dθ.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Dual-cell areas used as the mass matrix of the elliptic solves.
    pub fn control_volumes(&self) -> &[f64] {
        &self.control_volumes
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn beta_s(&self) -> &[f64] {
        &self.beta_s
    }

    pub fn beta_ss(&self) -> &[f64] {
        &self.beta_ss
    }

    pub fn h(&self) -> f64 {
        self.shape.h
    }

    /// ∫ f dσ
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// ∫ β f dσ
    pub fn integrate_beta(&self, f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .zip(&self.beta)
            .map(|((w, v), b)| w * v * b)
            .sum()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm_vec(&self, v: &VectorField2) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, w)| w * (v.x[n] * v.x[n] + v.y[n] * v.y[n]))
            .sum::<f64>()
            .sqrt()
    }

    /// ∫₀^{2π} f(θ) dθ for samples at the boundary angles.
    pub fn boundary_integral(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.d_theta
    }

    /// (∂_ρu, ∂_θu) on the reference grid at a non-pole node.
    fn reference_derivatives(&self, u: &[f64], k: usize, j: usize) -> (f64, f64) {
        let n = self.n_rho;
        let jp = (j + 1) % self.n_theta;
        let jm = (j + self.n_theta - 1) % self.n_theta;
        let u_rho = if k < n {
            (u[self.node(k + 1, j)] - u[self.node(k - 1, j)]) / (2.0 * self.d_rho)
        } else {
            (3.0 * u[self.node(n, j)] - 4.0 * u[self.node(n - 1, j)] + u[self.node(n - 2, j)])
                / (2.0 * self.d_rho)
        };
        let u_theta = (u[self.node(k, jp)] - u[self.node(k, jm)]) / (2.0 * self.d_theta);
        (u_rho, u_theta)
    }

    /// (∂_ηu, η⁻¹∂_θu) at a non-pole node.
    pub fn polar_gradient(&self, u: &[f64], node: usize) -> (f64, f64) {
        let nd = &self.nodes[node];
        let (u_rho, u_theta) = self.reference_derivatives(u, nd.k, nd.j);
        let r = self.shape.radius[nd.j].r;
        let m = self.m[nd.j];
        (u_rho / r, (u_theta - nd.rho * m * u_rho) / (nd.rho * r))
    }

    /// ∂_η u at the boundary node of ray j, one-sided second order.
    pub fn boundary_normal_derivative(&self, u: &[f64], j: usize) -> f64 {
        self.polar_gradient(u, self.node(self.n_rho, j)).0
    }

    /// Second-order finite-difference gradient ∇′u in section Cartesian components.
    pub fn grad(&self, u: &[f64]) -> VectorField2 {
        let mut g = VectorField2::zeros(self.n_nodes());
        let (gx, gy) = self.pole_gradient(u);
        g.x[0] = gx;
        g.y[0] = gy;
        for n in 1..self.n_nodes() {
            let j = self.nodes[n].j;
            let (d_eta, d_th) = self.polar_gradient(u, n);
            g.x[n] = self.cos[j] * d_eta - self.sin[j] * d_th;
            g.y[n] = self.sin[j] * d_eta + self.cos[j] * d_th;
        }
        g
    }

    /// Least-squares quadratic through the pole value and the first two rings.
    fn pole_gradient(&self, u: &[f64]) -> (f64, f64) {
        let u0 = u[0];
        let mut ata = vec![vec![0.0; 5]; 5];
        let mut atb = vec![0.0; 5];
        for k in 1..=2 {
            for j in 0..self.n_theta {
                let n = self.node(k, j);
                let (x, y) = (self.nodes[n].x, self.nodes[n].y);
                let row = [x, y, x * x, x * y, y * y];
                for p in 0..5 {
                    atb[p] += row[p] * (u[n] - u0);
                    for q in 0..5 {
                        ata[p][q] += row[p] * row[q];
                    }
                }
            }
        }
        match solve_dense(ata, atb) {
            Some(c) => (c[0], c[1]),
            None => (0.0, 0.0),
        }
    }

    /// ∇′·v from finite-difference gradients of the Cartesian components.
    pub fn div(&self, v: &VectorField2) -> Vec<f64> {
        let gx = self.grad(&v.x);
        let gy = self.grad(&v.y);
        gx.x.iter().zip(&gy.y).map(|(a, b)| a + b).collect()
    }

    /// Symmetric matrix of the energy ∫c|∇′u|²dσ on all nodes (no boundary conditions).
    pub fn energy_matrix(&self, coef: &[f64]) -> CsrMatrix {
        let (nr, nt) = (self.n_rho, self.n_theta);
        let (dr, dt) = (self.d_rho, self.d_theta);
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(self.n_nodes() * 20);
        let square = |t: &mut Vec<(usize, usize, f64)>, n1: usize, n2: usize, w: f64| {
            t.push((n1, n1, w));
            t.push((n2, n2, w));
            t.push((n1, n2, -w));
            t.push((n2, n1, -w));
        };
        for k in 0..nr {
            let rho_half = (k as f64 + 0.5) * dr;
            for j in 0..nt {
                let (n1, n2) = (self.node(k, j), self.node(k + 1, j));
                let c = 0.5 * (coef[n1] + coef[n2]);
                let m = self.m[j];
                square(&mut t, n1, n2, c * rho_half * (1.0 + m * m) * dt / dr);
            }
        }
        for k in 1..=nr {
            let rho = k as f64 * dr;
            let half = if k == nr { 0.5 } else { 1.0 };
            for j in 0..nt {
                let (n1, n2) = (self.node(k, j), self.node(k, j + 1));
                let c = 0.5 * (coef[n1] + coef[n2]);
                square(&mut t, n1, n2, c * half * dr / (rho * dt));
            }
        }
        for k in 0..nr {
            for j in 0..nt {
                let p00 = self.node(k, j);
                let p01 = self.node(k, j + 1);
                let p10 = self.node(k + 1, j);
                let p11 = self.node(k + 1, j + 1);
                let m = 0.5 * (self.m[j] + self.m[(j + 1) % nt]);
                if m == 0.0 {
                    continue;
                }
                let c = 0.25 * (coef[p00] + coef[p01] + coef[p10] + coef[p11]);
                let x = -0.25 * c * m;
                let l_rho = [(p10, 1.0), (p00, -1.0), (p11, 1.0), (p01, -1.0)];
                let l_theta = [(p01, 1.0), (p00, -1.0), (p11, 1.0), (p10, -1.0)];
                for &(a, ca) in &l_rho {
                    for &(b, cb) in &l_theta {
                        t.push((a, b, x * ca * cb));
                        t.push((b, a, x * ca * cb));
                    }
                }
            }
        }
        let n = self.n_nodes();
        CsrMatrix::from_triplets(n, n, &t)
    }
}

/// Meshes for every station of a geometry, built in parallel.
pub fn build_meshes(geom: &PipeGeometry, n_rho: usize) -> Result<Vec<SectionMesh>> {
    (0..=geom.n_s())
        .into_par_iter()
        .map(|i| {
            SectionMesh::new(geom.section_shape(i), n_rho)
                .map_err(|e| e.at_station("cross_section", i, geom.station(i).s))
        })
        .collect()
}

/// −∇′·(c∇′u) = f with u = 0 on the boundary, factored once for repeated solves.
#[derive(Clone, Debug)]
pub struct DirichletOperator {
    matrix: CsrMatrix,
    solver: SpdSolver,
    n_nodes: usize,
}

impl DirichletOperator {
    pub fn new(mesh: &SectionMesh, coef: &[f64]) -> Result<Self> {
        let full = mesh.energy_matrix(coef);
        let keep: Vec<usize> = (0..mesh.n_interior()).collect();
        let matrix = full.submatrix(&keep);
        let solver = SpdSolver::new(matrix.clone(), SOLVER_TOLERANCE)?;
        Ok(DirichletOperator {
            matrix,
            solver,
            n_nodes: mesh.n_nodes(),
        })
    }

    pub fn n_unknowns(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Solves K u = b for interior unknowns directly.
    pub fn solve_interior(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solver.solve(b)
    }

    /// Solves with nodal source f; returns the full nodal solution and the relative residual.
    pub fn solve(&self, mesh: &SectionMesh, f: &[f64]) -> Result<(Vec<f64>, f64)> {
        let b: Vec<f64> = (0..self.n_unknowns())
            .map(|n| mesh.control_volumes()[n] * f[n])
            .collect();
        let u = self.solve_interior(&b)?;
        let r = self.matrix.mul_vec(&u);
        let b_norm = norm2(&b);
        let residual = if b_norm > 0.0 {
            norm2(&r.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>()) / b_norm
        } else {
            0.0
        };
        let mut full = u;
        full.resize(self.n_nodes, 0.0);
        Ok((full, residual))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limacon(n_theta: usize, a: f64) -> SectionShape {
        SectionShape::from_radius(n_theta, |t| RadiusJet {
            r: 1.0 + a * t.cos(),
            r_theta: -a * t.sin(),
            r_thetatheta: -a * t.cos(),
            ..Default::default()
        })
    }

    #[test]
    fn unit_disk_area_is_exact() {
        let mesh = SectionMesh::new(SectionShape::disk(64, 1.0), 64).unwrap();
        assert!((mesh.area() - PI).abs() < 1e-12);
        assert!((mesh.integrate_beta(&vec![1.0; mesh.n_nodes()]) - PI).abs() < 1e-12);
    }

    #[test]
    fn limacon_area() {
        let mesh = SectionMesh::new(limacon(64, 0.2), 64).unwrap();
        assert!((mesh.area() - 1.02 * PI).abs() < 1e-10);
    }

    #[test]
    fn gradient_of_coordinate_is_unit_to_second_order() {
        let err = |nt: usize| {
            let mesh = SectionMesh::new(limacon(nt, 0.2), nt / 2).unwrap();
            let u: Vec<f64> = mesh.nodes().iter().map(|n| n.x).collect();
            let g = mesh.grad(&u);
            (0..mesh.n_nodes())
                .map(|n| (g.x[n] - 1.0).abs().max(g.y[n].abs()))
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 3e-3, "{e2}");
        assert!((e1 / e2).log2() > 1.9, "{e1} {e2}");
    }

    #[test]
    fn constant_has_zero_gradient() {
        let mesh = SectionMesh::new(limacon(16, 0.2), 8).unwrap();
        let g = mesh.grad(&vec![3.0; mesh.n_nodes()]);
        assert!(g.x.iter().chain(&g.y).all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_of_eta_squared() {
        let mesh = SectionMesh::new(SectionShape::disk(32, 1.0), 32).unwrap();
        let u: Vec<f64> = mesh.nodes().iter().map(|n| n.eta * n.eta).collect();
        let g = mesh.grad(&u);
        for (n, nd) in mesh.nodes().iter().enumerate() {
            assert!((g.x[n] - 2.0 * nd.x).abs() < 1e-10);
            assert!((g.y[n] - 2.0 * nd.y).abs() < 1e-10);
        }
    }

    #[test]
    fn energy_matrix_is_symmetric_and_annihilates_constants() {
        let shape = limacon(16, 0.3).with_curvature(0.2, [1.0, 0.5]);
        let mesh = SectionMesh::new(shape, 8).unwrap();
        let k = mesh.energy_matrix(mesh.beta());
        assert!(k.max_asymmetry() < 1e-14);
        let ones = vec![1.0; mesh.n_nodes()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn disk_poisson_is_exact_for_the_paraboloid() {
        let mesh = SectionMesh::new(SectionShape::disk(24, 1.0), 16).unwrap();
        let op = DirichletOperator::new(&mesh, &vec![1.0; mesh.n_nodes()]).unwrap();
        let (u, res) = op.solve(&mesh, &vec![2.0; mesh.n_nodes()]).unwrap();
        assert!(res < 1e-12);
        for (n, nd) in mesh.nodes().iter().enumerate() {
            assert!((u[n] - 0.5 * (1.0 - nd.eta * nd.eta)).abs() < 1e-12);
        }
    }

    #[test]
    fn too_coarse_mesh_rejected() {
        assert!(matches!(
            SectionMesh::new(SectionShape::disk(16, 1.0), 3),
            Err(PipeError::MeshTooCoarse { .. })
        ));
    }
}
