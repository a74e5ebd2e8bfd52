//! Arc-length parameterized centerlines on s ∈ [0, 1].

use crate::error::{PipeError, Result};
use crate::spline::CubicSpline;
use crate::vec3::{Mat3, Vec3};

const SPEED_TOL_ANALYTIC: f64 = 1e-10;
const SPEED_TOL_SAMPLED: f64 = 1e-8;

/// How the centerline is given.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveSpec {
    Straight,
    /// Planar circular arc of radius `radius`, bending toward +x in the x–z plane.
    Arc {
        radius: f64,
    },
    /// Circular helix with constant curvature and torsion.
    Helix {
        curvature: f64,
        torsion: f64,
    },
    /// Points along the curve, in order; reparameterized to unit length.
    Tabulated {
        points: Vec<Vec3>,
    },
}

/// Position and the first four s-derivatives at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CurvePoint {
    pub c: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
    pub d3: Vec3,
    pub d4: Vec3,
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
enum CurveModel {
    Straight,
    Helix {
        rot: Mat3,
        a: f64,
        b: f64,
        omega: f64,
    },
    Tabulated(TabulatedCurve),
}

#[derive(Clone, Debug)]
struct TabulatedCurve {
    xyz: [CubicSpline; 3],
    // arc length from t = 0 to each knot
    cumulative: Vec<f64>,
    length: f64,
    origin: Vec3,
    rot: Mat3,
}

// 5-point Gauss–Legendre rule on [-1, 1]
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

impl TabulatedCurve {
    fn new(points: &[Vec3]) -> Result<Self> {
        let n = points.len();
        if n < 4 {
            return Err(PipeError::TooFewPoints { needed: 4, got: n });
        }
        let mut t = vec![0.0; n];
        for i in 1..n {
            let chord = (points[i] - points[i - 1]).norm();
            if chord <= 0.0 {
                return Err(PipeError::InvalidSpec(format!(
                    "tabulated centerline has repeated point at index {i}"
                )));
            }
            t[i] = t[i - 1] + chord;
        }
        let coord = |f: fn(&Vec3) -> f64| -> Result<CubicSpline> {
            let v: Vec<f64> = points.iter().map(f).collect();
            CubicSpline::new(&t, &v)
        };
        let xyz = [coord(|p| p.x)?, coord(|p| p.y)?, coord(|p| p.z)?];
        let mut curve = TabulatedCurve {
            xyz,
            cumulative: vec![0.0; n],
            length: 0.0,
            origin: Vec3::ZERO,
            rot: Mat3::IDENTITY,
        };
        for i in 1..n {
            curve.cumulative[i] = curve.cumulative[i - 1] + curve.gauss_length(t[i - 1], t[i]);
        }
        curve.length = curve.cumulative[n - 1];
        curve.origin = curve.raw(0.0).0;
        let tangent0 = curve.raw(0.0).1.normalized();
        curve.rot = Mat3::rotation_between(tangent0, Vec3::EZ);
        Ok(curve)
    }

    // position, first and second derivative in the chord parameter
    fn raw(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let j = [
            self.xyz[0].eval(t),
            self.xyz[1].eval(t),
            self.xyz[2].eval(t),
        ];
        (
            Vec3::new(j[0].value, j[1].value, j[2].value),
            Vec3::new(j[0].d1, j[1].d1, j[2].d1),
            Vec3::new(j[0].d2, j[1].d2, j[2].d2),
        )
    }

    fn gauss_length(&self, t0: f64, t1: f64) -> f64 {
        let mid = 0.5 * (t0 + t1);
        let half = 0.5 * (t1 - t0);
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&x, w)| w * self.raw(mid + half * x).1.norm())
            .sum::<f64>()
            * half
    }

    fn arc_length(&self, t: f64) -> f64 {
        let i = self.xyz[0].interval(t);
        self.cumulative[i] + self.gauss_length(self.xyz[0].knots()[i], t)
    }

    fn invert(&self, sigma: f64) -> f64 {
        let knots = self.xyz[0].knots();
        let n = knots.len();
        let i = match self.cumulative.partition_point(|&c| c <= sigma) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let frac = (sigma - self.cumulative[i]) / (self.cumulative[i + 1] - self.cumulative[i]);
        let mut t = knots[i] + frac * (knots[i + 1] - knots[i]);
        for _ in 0..50 {
            let f = self.arc_length(t) - sigma;
            let speed = self.raw(t).1.norm();
            let step = f / speed;
            t -= step;
            if step.abs() <= 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        t
    }

    fn second_derivative(&self, s: f64) -> Vec3 {
        let t = self.invert(s * self.length);
        let (_, dp, ddp) = self.raw(t);
        let speed = dp.norm();
        let tangent = dp * (1.0 / speed);
        let normal_part = ddp - tangent * ddp.dot(tangent);
        self.rot
            .apply(normal_part * (self.length / (speed * speed)))
    }

    fn eval(&self, s: f64) -> CurvePoint {
        let t = self.invert(s * self.length);
        let (p, dp, _) = self.raw(t);
        let d2 = self.second_derivative(s);
        let e3 = 1e-4;
        let e4 = 1e-3;
        let d3 = (self.second_derivative(s + e3) - self.second_derivative(s - e3)) * (0.5 / e3);
        let d4 = (self.second_derivative(s + e4) - d2 * 2.0 + self.second_derivative(s - e4))
            * (1.0 / (e4 * e4));
        CurvePoint {
            c: self.rot.apply(p - self.origin) * (1.0 / self.length),
            d1: self.rot.apply(dp.normalized()),
            d2,
            d3,
            d4,
        }
    }
}

/// A unit-length, arc-length parameterized centerline sampled on a uniform s-grid.
#[derive(Clone, Debug)]
pub struct Centerline {
    model: CurveModel,
    s: Vec<f64>,
    points: Vec<CurvePoint>,
    analytic: bool,
    max_speed_defect: f64,
    max_normal_defect: f64,
    notes: Vec<String>,
}

impl Centerline {
    /// Builds the centerline on `n_s + 1` uniform stations.
    pub fn build(spec: &CurveSpec, n_s: usize) -> Result<Self> {
        if n_s < 2 {
            return Err(PipeError::MeshTooCoarse {
                what: "N_s",
                got: n_s,
                needed: 2,
            });
        }
        let mut notes = Vec::new();
        let (model, analytic) = match spec {
            CurveSpec::Straight => (CurveModel::Straight, true),
            CurveSpec::Arc { radius } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(PipeError::InvalidSpec(format!(
                        "arc radius must be positive, got {radius}"
                    )));
                }
                (helix_model(1.0 / radius, 0.0), true)
            }
            CurveSpec::Helix { curvature, torsion } => {
                if *curvature < 0.0 || !curvature.is_finite() || !torsion.is_finite() {
                    return Err(PipeError::InvalidSpec(format!(
                        "helix needs finite curvature >= 0 and finite torsion, got ({curvature}, {torsion})"
                    )));
                }
                if *curvature == 0.0 {
                    (CurveModel::Straight, true)
                } else {
                    (helix_model(*curvature, *torsion), true)
                }
            }
            CurveSpec::Tabulated { points } => {
                let curve = TabulatedCurve::new(points)?;
                notes.push(format!(
                    "tabulated centerline of length {:.6e} rescaled to unit length",
                    curve.length
                ));
                if curve.rot != Mat3::IDENTITY {
                    let r = curve.rot.rows;
                    notes.push(format!(
                        "tabulated centerline rotated so that c'(0) = (0,0,1); rotation rows \
                         [{:.6}, {:.6}, {:.6}] [{:.6}, {:.6}, {:.6}] [{:.6}, {:.6}, {:.6}]",
                        r[0].x, r[0].y, r[0].z, r[1].x, r[1].y, r[1].z, r[2].x, r[2].y, r[2].z
                    ));
                }
                notes.push(
                    "c''' and c'''' of a tabulated centerline come from finite differences of a cubic spline; \
                     expect reduced accuracy in s-derivatives of the scale factor"
                        .into(),
                );
                log::warn!(
                    "higher centerline derivatives requested from a cubic spline reconstruction"
                );
                (CurveModel::Tabulated(curve), false)
            }
        };
        let s: Vec<f64> = (0..=n_s).map(|i| i as f64 / n_s as f64).collect();
        let mut line = Centerline {
            model,
            points: Vec::with_capacity(s.len()),
            s,
            analytic,
            max_speed_defect: 0.0,
            max_normal_defect: 0.0,
            notes,
        };
        line.points = line.s.iter().map(|&s| line.eval(s)).collect();
        let tol = if analytic {
            SPEED_TOL_ANALYTIC
        } else {
            SPEED_TOL_SAMPLED
        };
        for (&s, p) in line.s.iter().zip(&line.points) {
            let speed = p.d1.norm();
            let defect = (speed - 1.0).abs();
            line.max_speed_defect = line.max_speed_defect.max(defect);
            line.max_normal_defect = line.max_normal_defect.max(p.d2.dot(p.d1).abs());
            if defect > tol {
                return Err(PipeError::NonUnitSpeed { s, speed });
            }
        }
        Ok(line)
    }

    /// Evaluates the curve at any s (slightly outside [0, 1] is allowed for stencils).
    pub fn eval(&self, s: f64) -> CurvePoint {
        match &self.model {
            CurveModel::Straight => CurvePoint {
                c: Vec3::new(0.0, 0.0, s),
                d1: Vec3::EZ,
                ..Default::default()
            },
            CurveModel::Helix { rot, a, b, omega } => {
                let (sn, cs) = (omega * s).sin_cos();
                let w = *omega;
                let h = Vec3::new(a * cs - a, a * sn, b * w * s);
                let h1 = Vec3::new(-a * w * sn, a * w * cs, b * w);
                let h2 = Vec3::new(-a * w * w * cs, -a * w * w * sn, 0.0);
                let h3 = Vec3::new(a * w.powi(3) * sn, -a * w.powi(3) * cs, 0.0);
                let h4 = Vec3::new(a * w.powi(4) * cs, a * w.powi(4) * sn, 0.0);
                CurvePoint {
                    c: rot.apply(h),
                    d1: rot.apply(h1),
                    d2: rot.apply(h2),
                    d3: rot.apply(h3),
                    d4: rot.apply(h4),
                }
            }
            CurveModel::Tabulated(t) => t.eval(s),
        }
    }

    /// (c′, c″) at any s; cheaper than [`Centerline::eval`] for sampled curves.
    pub fn tangent_and_curvature(&self, s: f64) -> (Vec3, Vec3) {
        match &self.model {
            CurveModel::Tabulated(t) => {
                let tt = t.invert(s * t.length);
                let (_, dp, ddp) = t.raw(tt);
                let speed = dp.norm();
                let tangent = dp * (1.0 / speed);
                let normal_part = ddp - tangent * ddp.dot(tangent);
                (
                    t.rot.apply(tangent),
                    t.rot.apply(normal_part * (t.length / (speed * speed))),
                )
            }
            _ => {
                let p = self.eval(s);
                (p.d1, p.d2)
            }
        }
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn n_s(&self) -> usize {
        self.s.len() - 1
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &CurvePoint {
        &self.points[i]
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    pub fn max_speed_defect(&self) -> f64 {
        self.max_speed_defect
    }

    /// Largest |c''·c'| over the samples.
    pub fn max_normal_defect(&self) -> f64 {
        self.max_normal_defect
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }
}

// Helix about the z-axis, rotated so that c'(0) = ez and c''(0) points along +x.
fn helix_model(kappa: f64, tau: f64) -> CurveModel {
    let k2 = kappa * kappa + tau * tau;
    let a = kappa / k2;
    let b = tau / k2;
    let omega = k2.sqrt();
    let t0 = Vec3::new(0.0, a * omega, b * omega);
    let n0 = Vec3::new(-1.0, 0.0, 0.0);
    let b0 = t0.cross(n0);
    CurveModel::Helix {
        rot: Mat3 { rows: [n0, b0, t0] },
        a,
        b,
        omega,
    }
}
