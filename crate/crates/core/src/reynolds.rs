//! Modified Reynolds equation −∂ₛ(G∂ₛp⁰) = 0 with the inlet flux condition
//! −¼G(0)∂ₛp⁰(0) = F⁰ and the outlet datum p⁰(1) = p⁰_per.
//!
//! The solution is p⁰(s) = p⁰_per + 4F⁰∫ₛ¹G⁻¹dt. The main route integrates the
//! cubic interpolant of G⁻¹ exactly; [`solve_reynolds_fd`] discretizes the ODE
//! directly and is kept as an independent check.

use serde::Serialize;

use crate::error::{PipeError, Result};
use crate::geometry::GeometryReport;
use crate::prandtl::RigidityProfile;
use crate::spline::{solve_tridiagonal, CubicSpline};

#[derive(Clone, Debug, Serialize)]
pub struct PressureProfile {
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
    pub d3p: Vec<f64>,
    pub flux: f64,
    pub p_per: f64,
}

impl PressureProfile {
    /// max_i |−¼G_i∂ₛp_i − F⁰|
    pub fn flux_defect(&self, g: &[f64]) -> f64 {
        g.iter()
            .zip(&self.dp)
            .map(|(g, d)| (-0.25 * g * d - self.flux).abs())
            .fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

fn check_positive(s: &[f64], g: &[f64]) -> Result<()> {
    for (&si, &gi) in s.iter().zip(g) {
        if !(gi > 0.0) || !gi.is_finite() {
            return Err(PipeError::NonPositiveRigidity { s: si, value: gi });
        }
    }
    Ok(())
}

/// ∫ₛ¹f for every grid point s, integrating the not-a-knot cubic through the samples exactly.
pub fn tail_integral(s: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    Ok(CubicSpline::new(s, f)?.tail_integrals())
}

/// p⁰_per + 4F⁰∫ₛ¹G⁻¹.
pub fn pressure_from_quadrature(s: &[f64], g: &[f64], flux: f64, p_per: f64) -> Result<Vec<f64>> {
    check_positive(s, g)?;
    let inv: Vec<f64> = g.iter().map(|v| 1.0 / v).collect();
    Ok(tail_integral(s, &inv)?
        .into_iter()
        .map(|t| p_per + 4.0 * flux * t)
        .collect())
}

/// Closed-form route. Derivatives follow from ∂ₛp⁰ = −4F⁰/G and the profile's ∂ₛG, ∂ₛ²G.
pub fn solve_reynolds(profile: &RigidityProfile, flux: f64, p_per: f64) -> Result<PressureProfile> {
    let g = &profile.g;
    let p = pressure_from_quadrature(&profile.s, g, flux, p_per)?;
    let n = g.len();
    let mut dp = vec![0.0; n];
    let mut d2p = vec![0.0; n];
    let mut d3p = vec![0.0; n];
    for i in 0..n {
        let (gi, g1, g2) = (g[i], profile.dg[i], profile.d2g[i]);
        dp[i] = -4.0 * flux / gi;
        d2p[i] = 4.0 * flux * g1 / (gi * gi);
        d3p[i] = 4.0 * flux * (g2 / (gi * gi) - 2.0 * g1 * g1 / gi.powi(3));
    }
    Ok(PressureProfile {
        s: profile.s.clone(),
        p,
        dp,
        d2p,
        d3p,
        flux,
        p_per,
    })
}

/// Conservative three-point discretization of the Reynolds ODE.
///
/// G at cell midpoints is the arithmetic mean of the end values. Returns the
/// nodal pressure and the discrete cell fluxes −¼G_{i+½}(p_{i+1} − p_i)/Δs.
pub fn solve_reynolds_fd(
    s: &[f64],
    g: &[f64],
    flux: f64,
    p_per: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_positive(s, g)?;
    let n = s.len();
    if n < 2 {
        return Err(PipeError::TooFew {
            what: "s-stations",
            needed: 2,
            got: n,
        });
    }
    let ds = (s[n - 1] - s[0]) / (n - 1) as f64;
    let gm: Vec<f64> = g.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    // inlet: ¼G_{½}(p₀ − p₁)/Δs = F⁰
    diag[0] = gm[0];
    sup[0] = -gm[0];
    rhs[0] = 4.0 * flux * ds;
    for i in 1..n - 1 {
        sub[i] = -gm[i - 1];
        diag[i] = gm[i - 1] + gm[i];
        sup[i] = -gm[i];
    }
    diag[n - 1] = 1.0;
    rhs[n - 1] = p_per;
    let p = solve_tridiagonal(&sub, &diag, &sup, &rhs);
    if p.iter().any(|v| !v.is_finite()) {
        return Err(PipeError::SolverDiverged {
            iterations: 1,
            residual: f64::NAN,
        });
    }
    let cell_flux = (0..n - 1)
        .map(|i| -0.25 * gm[i] * (p[i + 1] - p[i]) / ds)
        .collect();
    Ok((p, cell_flux))
}

/// v₃¹ = −½Ψ∂ₛp⁰ at one station.
pub fn longitudinal_velocity(psi: &[f64], dp: f64) -> Vec<f64> {
    psi.iter().map(|v| -0.5 * v * dp).collect()
}

/// ∂ₛv₃¹ = −½(∂ₛΨ∂ₛp⁰ + Ψ∂ₛ²p⁰) at one station.
pub fn longitudinal_velocity_s(psi: &[f64], dpsi: &[f64], dp: f64, d2p: f64) -> Vec<f64> {
    psi.iter()
        .zip(dpsi)
        .map(|(v, d)| -0.5 * (d * dp + v * d2p))
        .collect()
}

/// Maxima of the pressure derivatives next to the geometric quantities that bound them.
#[derive(Clone, Debug, Serialize)]
pub struct PressureBounds {
    pub max_dp: f64,
    pub max_d2p: f64,
    pub max_d3p: f64,
    /// 4|F⁰|/min G, the bound on |∂ₛp⁰|
    pub dp_bound: f64,
    /// λ + γ
    pub first_order_scale: f64,
    /// λ* + γ* + h^{-1/2}λ^{3/2} + γ²
    pub second_order_scale: f64,
    pub d2p_ratio: f64,
    pub d3p_ratio: f64,
}

pub fn pressure_derivative_bounds(
    p: &PressureProfile,
    g: &RigidityProfile,
    rep: &GeometryReport,
    h: f64,
) -> PressureBounds {
    let max_abs = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let first = rep.lambda + rep.gamma;
    let second =
        rep.lambda_star + rep.gamma_star + rep.lambda.powf(1.5) / h.sqrt() + rep.gamma * rep.gamma;
    let ratio = |a: f64, b: f64| {
        if b > 0.0 {
            a / b
        } else if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let (d2, d3) = (max_abs(&p.d2p), max_abs(&p.d3p));
    PressureBounds {
        max_dp: max_abs(&p.dp),
        max_d2p: d2,
        max_d3p: d3,
        dp_bound: 4.0 * p.flux.abs() / g.min(),
        first_order_scale: first,
        second_order_scale: second,
        d2p_ratio: ratio(d2, first),
        d3p_ratio: ratio(d3, second),
    }
}
