//! Cross-section radius laws R(θ, s).

use std::f64::consts::PI;

use crate::error::{PipeError, Result};
use crate::spline::{CubicSpline, PeriodicInterp};

#[derive(Clone, Debug, PartialEq)]
pub enum RadiusSpec {
    Constant {
        r0: f64,
    },
    /// R = r0 + amplitude·cos(mode·θ)·(1 + taper·s)
    Harmonic {
        r0: f64,
        amplitude: f64,
        mode: u32,
        taper: f64,
    },
    /// R = r0 + amplitude·sin(2π·frequency·s)
    AxialWave {
        r0: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// `values[i][j]` = R(θ_j = 2πj/M, s[i]); cubic spline in s, trigonometric interpolation in θ.
    Table {
        s: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// R and its partial derivatives at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RadiusJet {
    pub r: f64,
    pub r_theta: f64,
    pub r_thetatheta: f64,
    pub r_s: f64,
    pub r_ss: f64,
    pub r_stheta: f64,
}

impl RadiusJet {
    pub fn constant(r: f64) -> Self {
        RadiusJet {
            r,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct RadiusLaw {
    spec: RadiusSpec,
    columns: Vec<CubicSpline>,
}

impl RadiusLaw {
    pub fn new(spec: RadiusSpec) -> Result<Self> {
        let mut columns = Vec::new();
        match &spec {
            RadiusSpec::Constant { r0 } => check_positive(*r0)?,
            RadiusSpec::Harmonic {
                r0,
                amplitude,
                taper,
                ..
            } => {
                // worst case over s ∈ [0, 1]
                let scale = 1.0f64.max((1.0 + taper).abs());
                check_positive(r0 - amplitude.abs() * scale)?;
            }
            RadiusSpec::AxialWave { r0, amplitude, .. } => check_positive(r0 - amplitude.abs())?,
            RadiusSpec::Table { s, values } => {
                if s.len() < 4 {
                    return Err(PipeError::TooFewPoints {
                        needed: 4,
                        got: s.len(),
                    });
                }
                if values.len() != s.len() {
                    return Err(PipeError::Mismatch(format!(
                        "radius table has {} s-values but {} rows",
                        s.len(),
                        values.len()
                    )));
                }
                let m = values[0].len();
                if m < 3 || values.iter().any(|row| row.len() != m) {
                    return Err(PipeError::InvalidSpec(
                        "radius table rows must all hold the same number (>= 3) of θ samples"
                            .into(),
                    ));
                }
                if let Some(&bad) = values.iter().flatten().find(|&&v| !(v > 0.0)) {
                    check_positive(bad)?;
                }
                for j in 0..m {
                    let col: Vec<f64> = values.iter().map(|row| row[j]).collect();
                    columns.push(CubicSpline::new(s, &col)?);
                }
            }
        }
        Ok(RadiusLaw { spec, columns })
    }

    pub fn spec(&self) -> &RadiusSpec {
        &self.spec
    }

    pub fn eval(&self, theta: f64, s: f64) -> RadiusJet {
        match &self.spec {
            RadiusSpec::Constant { r0 } => RadiusJet::constant(*r0),
            RadiusSpec::Harmonic {
                r0,
                amplitude,
                mode,
                taper,
            } => {
                let k = *mode as f64;
                let (sn, cs) = (k * theta).sin_cos();
                let g = 1.0 + taper * s;
                RadiusJet {
                    r: r0 + amplitude * cs * g,
                    r_theta: -amplitude * k * sn * g,
                    r_thetatheta: -amplitude * k * k * cs * g,
                    r_s: amplitude * cs * taper,
                    r_ss: 0.0,
                    r_stheta: -amplitude * k * sn * taper,
                }
            }
            RadiusSpec::AxialWave {
                r0,
                amplitude,
                frequency,
            } => {
                let w = 2.0 * PI * frequency;
                let (sn, cs) = (w * s).sin_cos();
                RadiusJet {
                    r: r0 + amplitude * sn,
                    r_s: amplitude * w * cs,
                    r_ss: -amplitude * w * w * sn,
                    ..Default::default()
                }
            }
            RadiusSpec::Table { .. } => {
                let jets: Vec<_> = self.columns.iter().map(|c| c.eval(s)).collect();
                let interp = |f: fn(&crate::spline::Jet1) -> f64| {
                    let samples: Vec<f64> = jets.iter().map(f).collect();
                    PeriodicInterp::new(&samples).map(|p| p.eval(theta))
                };
                // the table was validated to have >= 3 columns, so interpolation cannot fail
                let (r, r_t, r_tt) = interp(|j| j.value).unwrap_or_default();
                let (r_s, r_st, _) = interp(|j| j.d1).unwrap_or_default();
                let (r_ss, _, _) = interp(|j| j.d2).unwrap_or_default();
                RadiusJet {
                    r,
                    r_theta: r_t,
                    r_thetatheta: r_tt,
                    r_s,
                    r_ss,
                    r_stheta: r_st,
                }
            }
        }
    }
}

fn check_positive(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(PipeError::InvalidSpec(format!(
            "radius law reaches a non-positive value ({r})"
        )))
    }
}
