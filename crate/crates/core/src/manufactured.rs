//! Forward-mode second-order derivatives in the section plane, for building
//! manufactured solutions and their exact data.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, gradient and Hessian of a function of section coordinates (x, y).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Jet2 {
            v,
            ..Default::default()
        }
    }

    pub fn x(x: f64) -> Self {
        Jet2 {
            v: x,
            dx: 1.0,
            ..Default::default()
        }
    }

    pub fn y(y: f64) -> Self {
        Jet2 {
            v: y,
            dy: 1.0,
            ..Default::default()
        }
    }

    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }

    fn chain(self, f: f64, f1: f64, f2: f64) -> Jet2 {
        Jet2 {
            v: f,
            dx: f1 * self.dx,
            dy: f1 * self.dy,
            dxx: f2 * self.dx * self.dx + f1 * self.dxx,
            dxy: f2 * self.dx * self.dy + f1 * self.dxy,
            dyy: f2 * self.dy * self.dy + f1 * self.dyy,
        }
    }

    pub fn sin(self) -> Jet2 {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet2 {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Jet2 {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sqrt(self) -> Jet2 {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn powi(self, n: i32) -> Jet2 {
        let nf = n as f64;
        self.chain(
            self.v.powi(n),
            nf * self.v.powi(n - 1),
            nf * (nf - 1.0) * self.v.powi(n - 2),
        )
    }

    pub fn recip(self) -> Jet2 {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self * -1.0
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, a: f64) -> Jet2 {
        Jet2 {
            v: self.v * a,
            dx: self.dx * a,
            dy: self.dy * a,
            dxx: self.dxx * a,
            dxy: self.dxy * a,
            dyy: self.dyy * a,
        }
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j * self
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, a: f64) -> Jet2 {
        Jet2 {
            v: self.v + a,
            ..self
        }
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(self, a: f64) -> Jet2 {
        Jet2 {
            v: self.v - a,
            ..self
        }
    }
}

/// ∇′·(c∇′u)
pub fn div_coef_grad(c: Jet2, u: Jet2) -> f64 {
    c.v * u.laplacian() + c.dx * u.dx + c.dy * u.dy
}

/// ∇′·(c·(u, w)) for a vector with components u, w.
pub fn div_coef_vec(c: Jet2, u: Jet2, w: Jet2) -> f64 {
    c.v * (u.dx + w.dy) + c.dx * u.v + c.dy * w.v
}

/// Scale factor 1 − h(k₁x + k₂y) as a jet.
pub fn beta_jet(h: f64, kappa: [f64; 2], x: f64, y: f64) -> Jet2 {
    Jet2::constant(1.0) - (Jet2::x(x) * kappa[0] + Jet2::y(y) * kappa[1]) * h
}

/// 1 − x² − y², zero on the unit circle.
pub fn disk_level_set(x: f64, y: f64) -> Jet2 {
    Jet2::constant(1.0) - Jet2::x(x).powi(2) - Jet2::y(y).powi(2)
}

/// η² − (η² − a·x)², zero on the limaçon η = 1 + a·cosθ and positive inside it away from the origin.
pub fn limacon_level_set(x: f64, y: f64, a: f64) -> Jet2 {
    let (jx, jy) = (Jet2::x(x), Jet2::y(y));
    let r2 = jx * jx + jy * jy;
    r2 - (r2 - jx * a).powi(2)
}
