//! Pipe geometry: centerline, transported frame, radius law and scale factor.

pub mod centerline;
pub mod frame;
pub mod radius;

use std::f64::consts::PI;

use serde::Serialize;

pub use centerline::{Centerline, CurvePoint, CurveSpec};
pub use frame::Frame;
pub use radius::{RadiusJet, RadiusLaw, RadiusSpec};

use crate::error::{PipeError, Result};
use crate::section::SectionShape;
use crate::vec3::Vec3;

/// Centerline data at one station, with curvature vectors resolved in the θ = 0 frame pair.
#[derive(Clone, Copy, Debug)]
pub struct Station {
    pub index: usize,
    pub s: f64,
    pub point: CurvePoint,
    pub a: Vec3,
    pub b: Vec3,
    /// (c″·a, c″·b)
    pub kappa: [f64; 2],
    /// (c‴·a, c‴·b); the section part of c‴
    pub kappa_s: [f64; 2],
    /// (c⁗·a, c⁗·b)
    pub kappa_ss: [f64; 2],
    /// |c″|²
    pub curvature_sq: f64,
}

impl Station {
    fn new(index: usize, s: f64, point: CurvePoint, a: Vec3, b: Vec3) -> Self {
        Station {
            index,
            s,
            point,
            a,
            b,
            kappa: [point.d2.dot(a), point.d2.dot(b)],
            kappa_s: [point.d3.dot(a), point.d3.dot(b)],
            kappa_ss: [point.d4.dot(a), point.d4.dot(b)],
            curvature_sq: point.d2.dot(point.d2),
        }
    }

    /// β at section coordinates (x, y) = (η cosθ, η sinθ).
    pub fn beta(&self, h: f64, x: f64, y: f64) -> f64 {
        1.0 - h * (self.kappa[0] * x + self.kappa[1] * y)
    }

    /// ∂ₛβ at fixed (η, θ).
    pub fn beta_s(&self, h: f64, x: f64, y: f64) -> f64 {
        -h * (self.kappa_s[0] * x + self.kappa_s[1] * y)
    }

    /// ∂ₛ²β at fixed (η, θ).
    pub fn beta_ss(&self, h: f64, x: f64, y: f64) -> f64 {
        -h * (self.kappa_ss[0] * x
            + self.kappa_ss[1] * y
            + self.curvature_sq * (self.kappa[0] * x + self.kappa[1] * y))
    }

    pub fn e1(&self, theta: f64) -> Vec3 {
        let (sn, cs) = theta.sin_cos();
        self.a * cs + self.b * sn
    }

    pub fn e2(&self, theta: f64) -> Vec3 {
        let (sn, cs) = theta.sin_cos();
        self.a * (-sn) + self.b * cs
    }

    /// Physical position c + h·η·e₁(θ).
    pub fn position(&self, h: f64, eta: f64, theta: f64) -> Vec3 {
        self.point.c + self.e1(theta) * (h * eta)
    }
}

/// Maxima that enter the regularity bounds of the geometry.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    /// max |h c‴|
    pub lambda: f64,
    /// max |h c⁗|
    pub lambda_star: f64,
    /// max |∂ₛR|
    pub gamma: f64,
    /// max |∂ₛ²R|
    pub gamma_star: f64,
    pub max_curvature: f64,
    pub min_beta: f64,
    /// λ·h, which the asymptotics want small
    pub lambda_h: f64,
    /// |c″| ≤ h^{-1/2} λ^{1/2} at every station
    pub curvature_bound_holds: bool,
    /// max | |c″| − √|c‴·c′| |
    pub curvature_identity_defect: f64,
    pub frame_defect: f64,
    pub frame_drift: f64,
    pub speed_defect: f64,
    pub notes: Vec<String>,
}

/// A fully specified pipe on a uniform (θ, s) grid.
#[derive(Clone, Debug)]
pub struct PipeGeometry {
    centerline: Centerline,
    frame: Frame,
    radius: RadiusLaw,
    h: f64,
    n_theta: usize,
    stations: Vec<Station>,
}

impl PipeGeometry {
    /// Builds the geometry and certifies β > 0 on every boundary node.
    pub fn build(
        curve: &CurveSpec,
        radius: RadiusSpec,
        h: f64,
        n_s: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(PipeError::InvalidSpec(format!(
                "slenderness h must be positive, got {h}"
            )));
        }
        if n_theta < 4 {
            return Err(PipeError::MeshTooCoarse {
                what: "N_theta",
                got: n_theta,
                needed: 4,
            });
        }
        let centerline = Centerline::build(curve, n_s)?;
        let frame = Frame::transport(&centerline)?;
        let radius = RadiusLaw::new(radius)?;
        let stations = centerline
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (a, b) = frame.base(i);
                Station::new(i, centerline.s()[i], *p, a, b)
            })
            .collect();
        let geom = PipeGeometry {
            centerline,
            frame,
            radius,
            h,
            n_theta,
            stations,
        };
        geom.certify()?;
        Ok(geom)
    }

    fn certify(&self) -> Result<()> {
        for st in &self.stations {
            for j in 0..self.n_theta {
                let th = self.theta(j);
                let r = self.radius.eval(th, st.s).r;
                if !(r > 0.0) {
                    return Err(PipeError::NonPositiveRadius {
                        s: st.s,
                        theta: th,
                        radius: r,
                    });
                }
                let beta = st.beta(self.h, r * th.cos(), r * th.sin());
                if !(beta > 0.0) {
                    return Err(PipeError::NonPositiveBeta {
                        station: st.index,
                        s: st.s,
                        theta: th,
                        beta,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_s(&self) -> usize {
        self.stations.len() - 1
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn station(&self, i: usize) -> &Station {
        &self.stations[i]
    }

    pub fn centerline(&self) -> &Centerline {
        &self.centerline
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn radius_law(&self) -> &RadiusLaw {
        &self.radius
    }

    pub fn radius(&self, j: usize, i: usize) -> RadiusJet {
        self.radius.eval(self.theta(j), self.stations[i].s)
    }

    /// Everything a cross-section mesh needs at station i.
    pub fn section_shape(&self, i: usize) -> SectionShape {
        let st = &self.stations[i];
        SectionShape {
            station: i,
            s: st.s,
            h: self.h,
            radius: (0..self.n_theta).map(|j| self.radius(j, i)).collect(),
            kappa: st.kappa,
            kappa_s: st.kappa_s,
            kappa_ss: st.kappa_ss,
            curvature_sq: st.curvature_sq,
        }
    }

    pub fn report(&self) -> GeometryReport {
        let h = self.h;
        let mut rep = GeometryReport {
            lambda: 0.0,
            lambda_star: 0.0,
            gamma: 0.0,
            gamma_star: 0.0,
            max_curvature: 0.0,
            min_beta: f64::INFINITY,
            lambda_h: 0.0,
            curvature_bound_holds: true,
            curvature_identity_defect: 0.0,
            frame_defect: self.frame.max_defect(&self.centerline, self.n_theta),
            frame_drift: self.frame.max_drift(),
            speed_defect: self.centerline.max_speed_defect(),
            notes: self.centerline.notes().to_vec(),
        };
        for st in &self.stations {
            let p = &st.point;
            rep.lambda = rep.lambda.max(h * p.d3.norm());
            rep.lambda_star = rep.lambda_star.max(h * p.d4.norm());
            rep.max_curvature = rep.max_curvature.max(p.d2.norm());
            let identity = p.d3.dot(p.d1).abs().sqrt();
            rep.curvature_identity_defect = rep
                .curvature_identity_defect
                .max((p.d2.norm() - identity).abs());
            for j in 0..self.n_theta {
                let th = self.theta(j);
                let r = self.radius(j, st.index);
                rep.gamma = rep.gamma.max(r.r_s.abs());
                rep.gamma_star = rep.gamma_star.max(r.r_ss.abs());
                rep.min_beta = rep.min_beta.min(st.beta(h, r.r * th.cos(), r.r * th.sin()));
            }
        }
        for st in &self.stations {
            let bound = (rep.lambda / h).sqrt();
            if st.point.d2.norm() > bound * (1.0 + 1e-8) + 1e-12 {
                rep.curvature_bound_holds = false;
            }
        }
        rep.lambda_h = rep.lambda * h;
        rep
    }
}
