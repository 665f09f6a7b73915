//! Two-parameter weighted least squares, `y = intercept + slope * x`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub var_intercept: f64,
    pub var_slope: f64,
    pub cov: f64,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorModel {
    /// Weights are inverse variances; the parameter covariance is `(X'WX)^-1`.
    KnownVariance,
    /// Weights are relative; the covariance is scaled by `rss / (N - 2)`.
    FromResiduals,
}

pub fn fit_line(x: &[f64], y: &[f64], w: &[f64], errors: ErrorModel) -> Result<LineFit> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { need: 3, got: n });
    }
    let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        s += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    // centred form for stability
    let xm = sx / s;
    let ym = sy / s;
    let (mut cxx, mut cxy) = (0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - xm;
        cxx += w[i] * dx * dx;
        cxy += w[i] * dx * (y[i] - ym);
    }
    if !cxx.is_finite() || cxx <= 1e-14 * s * (xm * xm + 1.0) {
        return Err(Error::SingularFit);
    }
    let slope = cxy / cxx;
    let intercept = ym - slope * xm;
    let rss: f64 = (0..n)
        .map(|i| {
            let r = y[i] - intercept - slope * x[i];
            w[i] * r * r
        })
        .sum();
    let scale = match errors {
        ErrorModel::KnownVariance => 1.0,
        ErrorModel::FromResiduals => rss / (n as f64 - 2.0),
    };
    let var_slope = scale / cxx;
    let var_intercept = scale * (1.0 / s + xm * xm / cxx);
    let cov = -scale * xm / cxx;
    Ok(LineFit {
        intercept,
        slope,
        var_intercept,
        var_slope,
        cov,
        rss,
        points: n,
    })
}
