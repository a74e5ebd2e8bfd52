//! Interpolation helpers: not-a-knot cubic splines and periodic trigonometric interpolation.

use crate::error::{PipeError, Result};

/// Value and first three derivatives of an interpolant at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet1 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Cubic spline with not-a-knot end conditions.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    // second derivatives at the knots
    curvature: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: &[f64], values: &[f64]) -> Result<Self> {
        let n = knots.len();
        if n < 4 {
            return Err(PipeError::TooFewPoints { needed: 4, got: n });
        }
        if values.len() != n {
            return Err(PipeError::Mismatch(format!(
                "{} knots but {} values",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PipeError::InvalidSpec(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (values[i + 1] - values[i]) / h[i])
            .collect();

        // tridiagonal system for M_1 .. M_{n-2} after eliminating the end unknowns
        let m = n - 2;
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for r in 0..m {
            let i = r + 1;
            sub[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            sup[r] = h[i];
            rhs[r] = 6.0 * (delta[i] - delta[i - 1]);
        }
        // not-a-knot at the left: M0 = ((h0+h1) M1 - h0 M2) / h1
        let (h0, h1) = (h[0], h[1]);
        diag[0] = (h0 + h1) * (h0 + 2.0 * h1) / h1;
        if m > 1 {
            sup[0] = (h1 * h1 - h0 * h0) / h1;
        }
        // and at the right: M_{n-1} = ((a+b) M_{n-2} - b M_{n-3}) / a
        let (a, b) = (h[n - 3], h[n - 2]);
        if m > 1 {
            sub[m - 1] = (a * a - b * b) / a;
            diag[m - 1] = (a + b) * (2.0 * a + b) / a;
        } else {
            // n == 3 is excluded above; for n == 4, m == 2 so this branch is unreachable
            diag[0] += (a + b) * b / a - b;
        }
        let inner = thomas(&sub, &diag, &sup, &rhs);
        let mut curvature = vec![0.0; n];
        curvature[1..n - 1].copy_from_slice(&inner);
        curvature[0] = ((h0 + h1) * curvature[1] - h0 * curvature[2]) / h1;
        curvature[n - 1] = ((a + b) * curvature[n - 2] - b * curvature[n - 3]) / a;
        Ok(CubicSpline {
            knots: knots.to_vec(),
            values: values.to_vec(),
            curvature,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Index of the knot interval containing `t`, clamped to the end intervals.
    pub fn interval(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    pub fn eval(&self, t: f64) -> Jet1 {
        let i = self.interval(t);
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let h = t1 - t0;
        let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let a = t1 - t;
        let b = t - t0;
        Jet1 {
            value: m0 * a.powi(3) / (6.0 * h)
                + m1 * b.powi(3) / (6.0 * h)
                + (y0 / h - m0 * h / 6.0) * a
                + (y1 / h - m1 * h / 6.0) * b,
            d1: -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - (y0 / h - m0 * h / 6.0)
                + (y1 / h - m1 * h / 6.0),
            d2: (m0 * a + m1 * b) / h,
            d3: (m1 - m0) / h,
        }
    }

    /// Exact integral of the spline over the knot interval `[knots[i], knots[i+1]]`.
    pub fn interval_integral(&self, i: usize) -> f64 {
        let h = self.knots[i + 1] - self.knots[i];
        h * (self.values[i] + self.values[i + 1]) / 2.0
            - h.powi(3) * (self.curvature[i] + self.curvature[i + 1]) / 24.0
    }

    /// `∫_{knots[i]}^{knots[last]}` for every knot i.
    pub fn tail_integrals(&self) -> Vec<f64> {
        let n = self.knots.len();
        let mut out = vec![0.0; n];
        for i in (0..n - 1).rev() {
            out[i] = out[i + 1] + self.interval_integral(i);
        }
        out
    }
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / den;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Solves a tridiagonal system; `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    thomas(sub, diag, sup, rhs)
}

/// Trigonometric interpolant of samples at `θ_j = 2πj/M`.
#[derive(Clone, Debug)]
pub struct PeriodicInterp {
    mean: f64,
    cos_coef: Vec<f64>,
    sin_coef: Vec<f64>,
}

impl PeriodicInterp {
    pub fn new(samples: &[f64]) -> Result<Self> {
        let m = samples.len();
        if m < 3 {
            return Err(PipeError::TooFewPoints { needed: 3, got: m });
        }
        let mean = samples.iter().sum::<f64>() / m as f64;
        let top = m / 2;
        let mut cos_coef = vec![0.0; top];
        let mut sin_coef = vec![0.0; top];
        for k in 1..=top {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, &f) in samples.iter().enumerate() {
                let ang = 2.0 * std::f64::consts::PI * (k * j) as f64 / m as f64;
                a += f * ang.cos();
                b += f * ang.sin();
            }
            let scale = if m.is_multiple_of(2) && k == top {
                1.0
            } else {
                2.0
            };
            cos_coef[k - 1] = scale * a / m as f64;
            sin_coef[k - 1] = if m.is_multiple_of(2) && k == top {
                0.0
            } else {
                scale * b / m as f64
            };
        }
        Ok(PeriodicInterp {
            mean,
            cos_coef,
            sin_coef,
        })
    }

    /// Value and first two θ-derivatives.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let (mut f, mut df, mut ddf) = (self.mean, 0.0, 0.0);
        for (i, (&a, &b)) in self.cos_coef.iter().zip(&self.sin_coef).enumerate() {
            let k = (i + 1) as f64;
            let (s, c) = (k * theta).sin_cos();
            f += a * c + b * s;
            df += k * (-a * s + b * c);
            ddf += -k * k * (a * c + b * s);
        }
        (f, df, ddf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubics_exactly() {
        let knots: Vec<f64> = (0..7).map(|i| (i as f64).powf(1.3) * 0.2).collect();
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.7 * t.powi(3);
        let values: Vec<f64> = knots.iter().map(|&t| f(t)).collect();
        let sp = CubicSpline::new(&knots, &values).unwrap();
        for &t in &[0.05, 0.33, 0.71, 1.2] {
            let j = sp.eval(t);
            assert!((j.value - f(t)).abs() < 1e-12);
            assert!((j.d1 - (-2.0 + t - 2.1 * t * t)).abs() < 1e-11);
            assert!((j.d2 - (1.0 - 4.2 * t)).abs() < 1e-10);
            assert!((j.d3 + 4.2).abs() < 1e-9);
        }
        let exact = |t: f64| t - t * t + t.powi(3) / 6.0 - 0.175 * t.powi(4);
        let tails = sp.tail_integrals();
        let last = *knots.last().unwrap();
        assert!((tails[2] - (exact(last) - exact(knots[2]))).abs() < 1e-12);
    }

    #[test]
    fn spline_needs_four_points() {
        assert!(matches!(
            CubicSpline::new(&[0.0, 1.0, 2.0], &[0.0, 1.0, 4.0]),
            Err(PipeError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn periodic_interp_recovers_trig_polynomial() {
        let m = 16;
        let f = |t: f64| 1.0 + 0.2 * t.cos() - 0.3 * (3.0 * t).sin() + 0.1 * (8.0 * t).cos();
        let samples: Vec<f64> = (0..m)
            .map(|j| f(2.0 * std::f64::consts::PI * j as f64 / m as f64))
            .collect();
        let p = PeriodicInterp::new(&samples).unwrap();
        let t = 0.4;
        let (v, d, _) = p.eval(t);
        // the Nyquist mode cos(8t) is aliased; compare at a grid point instead for it
        let smooth = |t: f64| 1.0 + 0.2 * t.cos() - 0.3 * (3.0 * t).sin() + 0.1 * (8.0 * t).cos();
        let (vg, _, _) = p.eval(2.0 * std::f64::consts::PI * 3.0 / m as f64);
        assert!((vg - smooth(2.0 * std::f64::consts::PI * 3.0 / m as f64)).abs() < 1e-13);
        let g = |t: f64| 1.0 + 0.2 * t.cos() - 0.3 * (3.0 * t).sin();
        let samples2: Vec<f64> = (0..m)
            .map(|j| g(2.0 * std::f64::consts::PI * j as f64 / m as f64))
            .collect();
        let p2 = PeriodicInterp::new(&samples2).unwrap();
        let (v2, d2, dd2) = p2.eval(t);
        assert!((v2 - g(t)).abs() < 1e-13);
        assert!((d2 - (-0.2 * t.sin() - 0.9 * (3.0 * t).cos())).abs() < 1e-12);
        assert!((dd2 - (-0.2 * t.cos() + 2.7 * (3.0 * t).sin())).abs() < 1e-12);
        assert!(v.is_finite() && d.is_finite());
    }
}
