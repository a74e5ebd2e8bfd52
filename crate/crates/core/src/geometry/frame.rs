//! Transport of the cross-section frame along the centerline.
//!
//! The ODE ∂ₛe = −(c″·e)c′ is linear in e, so e₁(θ,·) = cosθ·a + sinθ·b and
//! e₂(θ,·) = −sinθ·a + cosθ·b where a, b solve it from ex and ey.

use super::centerline::Centerline;
use crate::error::{PipeError, Result};
use crate::vec3::Vec3;

/// Largest per-step orthonormality defect before re-projection that is accepted.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

const MAX_SUBSTEP: f64 = 1.0 / 512.0;

#[derive(Clone, Debug)]
pub struct Frame {
    a: Vec<Vec3>,
    b: Vec<Vec3>,
    max_drift: f64,
}

impl Frame {
    /// Integrates the frame with RK4 and re-orthonormalizes against c′ after every step.
    pub fn transport(line: &Centerline) -> Result<Frame> {
        let s = line.s();
        let mut a = vec![Vec3::EX];
        let mut b = vec![Vec3::EY];
        let mut max_drift = 0.0f64;
        let (mut ea, mut eb) = (Vec3::EX, Vec3::EY);
        for i in 0..s.len() - 1 {
            let span = s[i + 1] - s[i];
            let steps = (span / MAX_SUBSTEP).ceil().max(1.0) as usize;
            let ds = span / steps as f64;
            for k in 0..steps {
                let s0 = s[i] + k as f64 * ds;
                let (na, nb) = rk4_pair(line, s0, ea, eb, ds);
                let t = line.tangent_and_curvature(s0 + ds).0;
                (ea, eb) = (na, nb);
                let drift = orthonormality_defect(ea, eb, t);
                max_drift = max_drift.max(drift);
                if drift > DRIFT_TOLERANCE {
                    return Err(PipeError::FrameDrift {
                        drift,
                        tolerance: DRIFT_TOLERANCE,
                    });
                }
                ea = (ea - t * ea.dot(t)).normalized();
                eb = eb - t * eb.dot(t);
                eb = (eb - ea * eb.dot(ea)).normalized();
            }
            a.push(ea);
            b.push(eb);
        }
        Ok(Frame { a, b, max_drift })
    }

    /// e₁(θ) at station i.
    pub fn e1(&self, i: usize, theta: f64) -> Vec3 {
        let (sn, cs) = theta.sin_cos();
        self.a[i] * cs + self.b[i] * sn
    }

    /// e₂(θ) at station i.
    pub fn e2(&self, i: usize, theta: f64) -> Vec3 {
        let (sn, cs) = theta.sin_cos();
        self.a[i] * (-sn) + self.b[i] * cs
    }

    /// The θ = 0 pair (e₁, e₂) at station i; section Cartesian components refer to it.
    pub fn base(&self, i: usize) -> (Vec3, Vec3) {
        (self.a[i], self.b[i])
    }

    /// Largest pre-projection defect seen during transport.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// Largest orthonormality defect of {e₁(θ_j), e₂(θ_j), c′} over all stations and `n_theta` angles.
    pub fn max_defect(&self, line: &Centerline, n_theta: usize) -> f64 {
        let mut worst = 0.0f64;
        for (i, p) in line.points().iter().enumerate() {
            for j in 0..n_theta {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
                let (e1, e2) = (self.e1(i, th), self.e2(i, th));
                worst = worst.max(orthonormality_defect(e1, e2, p.d1));
                if e1.cross(e2).dot(p.d1) <= 0.0 {
                    return f64::INFINITY;
                }
            }
        }
        worst
    }
}

// one classical RK4 step for both vectors, sharing the curve evaluations
fn rk4_pair(line: &Centerline, s: f64, a: Vec3, b: Vec3, ds: f64) -> (Vec3, Vec3) {
    let p0 = line.tangent_and_curvature(s);
    let pm = line.tangent_and_curvature(s + 0.5 * ds);
    let p1 = line.tangent_and_curvature(s + ds);
    let f = |(t, n): (Vec3, Vec3), e: Vec3| t * (-n.dot(e));
    let step = |e: Vec3| {
        let k1 = f(p0, e);
        let k2 = f(pm, e + k1 * (0.5 * ds));
        let k3 = f(pm, e + k2 * (0.5 * ds));
        let k4 = f(p1, e + k3 * ds);
        e + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (ds / 6.0)
    };
    (step(a), step(b))
}

fn orthonormality_defect(e1: Vec3, e2: Vec3, t: Vec3) -> f64 {
    [
        (e1.dot(e1) - 1.0).abs(),
        (e2.dot(e2) - 1.0).abs(),
        e1.dot(e2).abs(),
        e1.dot(t).abs(),
        e2.dot(t).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
