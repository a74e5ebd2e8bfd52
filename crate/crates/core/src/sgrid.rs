//! Second-order finite differences along the uniform s-grid.

use crate::error::{PipeError, Result};

fn check(n: usize) -> Result<()> {
    if n < 3 {
        return Err(PipeError::TooFew {
            what: "s-stations",
            needed: 3,
            got: n,
        });
    }
    Ok(())
}

/// d/ds of samples on a uniform grid; one-sided second-order stencils at the ends.
/// Stencils are written in differences so that constant data gives exactly zero.
pub fn first_derivative(f: &[f64], ds: f64) -> Result<Vec<f64>> {
    let n = f.len();
    check(n)?;
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                (4.0 * (f[1] - f[0]) - (f[2] - f[0])) / (2.0 * ds)
            } else if i == n - 1 {
                (4.0 * (f[n - 1] - f[n - 2]) - (f[n - 1] - f[n - 3])) / (2.0 * ds)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * ds)
            }
        })
        .collect())
}

/// d²/ds² of samples; the end stencil is second order when at least 4 samples exist.
pub fn second_derivative(f: &[f64], ds: f64) -> Result<Vec<f64>> {
    let n = f.len();
    check(n)?;
    let d2 = ds * ds;
    Ok((0..n)
        .map(|i| {
            if n >= 4 && i == 0 {
                (2.0 * (f[0] - f[1]) - 3.0 * (f[1] - f[2]) + (f[2] - f[3])) / d2
            } else if n >= 4 && i == n - 1 {
                (2.0 * (f[n - 1] - f[n - 2]) - 3.0 * (f[n - 2] - f[n - 3]) + (f[n - 3] - f[n - 4]))
                    / d2
            } else {
                let c = i.clamp(1, n - 2);
                ((f[c + 1] - f[c]) - (f[c] - f[c - 1])) / d2
            }
        })
        .collect())
}

/// Applies [`first_derivative`] node by node to a sequence of equally sized fields.
pub fn first_derivative_fields(fields: &[Vec<f64>], ds: f64) -> Result<Vec<Vec<f64>>> {
    check(fields.len())?;
    let len = fields[0].len();
    if fields.iter().any(|f| f.len() != len) {
        return Err(PipeError::Mismatch(
            "fields on different stations have different sizes".into(),
        ));
    }
    let mut out = vec![vec![0.0; len]; fields.len()];
    let mut column = vec![0.0; fields.len()];
    for n in 0..len {
        for (c, f) in column.iter_mut().zip(fields) {
            *c = f[n];
        }
        for (i, d) in first_derivative(&column, ds)?.into_iter().enumerate() {
            out[i][n] = d;
        }
    }
    Ok(out)
}

/// Uniform spacing of an s-grid.
pub fn spacing(s: &[f64]) -> Result<f64> {
    check(s.len())?;
    Ok((s[s.len() - 1] - s[0]) / (s.len() - 1) as f64)
}
