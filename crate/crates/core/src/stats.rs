//! Summation, resampling errors and straight-line fits used by the campaigns.

use serde::Serialize;

use crate::error::{domain, Result};

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Sample moments about the sample mean (`1/n` normalization).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Spread {
    pub n: usize,
    pub mean: f64,
    /// Mean squared deviation about `mean`.
    pub mse: f64,
    pub rmse: f64,
    /// Standard error of `mean`.
    pub mean_stderr: f64,
    /// Leave-one-out jackknife standard error of `rmse`.
    pub rmse_stderr: f64,
}

/// Mean, mean-centred rms spread, and their standard errors.
///
/// The jackknife replicates are formed in O(n) from centred power sums.
pub fn spread(values: &[f64]) -> Result<Spread> {
    let n = values.len();
    if n < 2 {
        return domain("need at least two values for a spread estimate");
    }
    let nf = n as f64;
    let mean = compensated_sum(values.iter().copied()) / nf;
    let s2 = compensated_sum(values.iter().map(|v| (v - mean).powi(2)));
    let mse = s2 / nf;
    let rmse = mse.sqrt();

    // replicate i: centred sum s1_i = -d_i, s2_i = s2 - d_i²
    let m1 = nf - 1.0;
    let replicate = |d: f64| -> f64 {
        let mean_i = -d / m1;
        let mse_i = (s2 - d * d) / m1 - mean_i * mean_i;
        mse_i.max(0.0).sqrt()
    };
    let avg = compensated_sum(values.iter().map(|v| replicate(v - mean))) / nf;
    let ss = compensated_sum(values.iter().map(|v| (replicate(v - mean) - avg).powi(2)));
    let rmse_stderr = (m1 / nf * ss).sqrt();

    let sample_var = s2 / m1;
    Ok(Spread {
        n,
        mean,
        mse,
        rmse,
        mean_stderr: (sample_var / nf).sqrt(),
        rmse_stderr,
    })
}

/// Generic delete-one jackknife: returns (estimate on full data, standard error).
pub fn jackknife<F>(values: &[f64], statistic: F) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let n = values.len();
    if n < 2 {
        return domain("jackknife needs at least two values");
    }
    let full = statistic(values);
    let mut buf = Vec::with_capacity(n - 1);
    let reps: Vec<f64> = (0..n)
        .map(|i| {
            buf.clear();
            buf.extend_from_slice(&values[..i]);
            buf.extend_from_slice(&values[i + 1..]);
            statistic(&buf)
        })
        .collect();
    let nf = n as f64;
    let avg = compensated_sum(reps.iter().copied()) / nf;
    let ss = compensated_sum(reps.iter().map(|r| (r - avg).powi(2)));
    Ok((full, ((nf - 1.0) / nf * ss).sqrt()))
}

/// `y = intercept + slope · x` with standard errors from the fit covariance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub intercept: f64,
    pub intercept_err: f64,
    pub slope: f64,
    pub slope_err: f64,
}

/// Least squares with optional per-point standard deviations.
///
/// Unweighted fits take the parameter errors from the residual variance;
/// weighted fits use the supplied `sigma` directly.
pub fn fit_line(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || sigma.is_some_and(|s| s.len() != n) {
        return domain("fit inputs have mismatched lengths");
    }
    if n < 3 {
        return domain(format!("need at least 3 points for a line fit, got {n}"));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => {
            if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return domain("fit weights must be positive");
            }
            s.iter().map(|v| 1.0 / (v * v)).collect()
        }
        None => vec![1.0; n],
    };
    let sw = compensated_sum(w.iter().copied());
    let sx = compensated_sum(w.iter().zip(x).map(|(w, x)| w * x));
    let sy = compensated_sum(w.iter().zip(y).map(|(w, y)| w * y));
    let xm = sx / sw;
    let ym = sy / sw;
    let sxx = compensated_sum(w.iter().zip(x).map(|(w, x)| w * (x - xm).powi(2)));
    let sxy = compensated_sum(
        w.iter()
            .zip(x.iter().zip(y))
            .map(|(w, (x, y))| w * (x - xm) * (y - ym)),
    );
    if sxx <= 0.0 {
        return domain("abscissae are degenerate");
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;

    let scale = match sigma {
        Some(_) => 1.0,
        None => {
            let rss = compensated_sum(
                x.iter()
                    .zip(y)
                    .map(|(x, y)| (y - intercept - slope * x).powi(2)),
            );
            rss / (n as f64 - 2.0)
        }
    };
    let slope_var = scale / sxx;
    let intercept_var = scale * (1.0 / sw + xm * xm / sxx);
    Ok(LineFit {
        intercept,
        intercept_err: intercept_var.sqrt(),
        slope,
        slope_err: slope_var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn compensated_beats_naive() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(vals), 2.0);
    }

    #[test]
    fn spread_of_known_values() {
        let s = spread(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(s.mean, 2.5);
        assert_relative_eq!(s.mse, 1.25);
        assert_relative_eq!(s.mean_stderr, (5.0f64 / 3.0 / 4.0).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn too_few_values() {
        assert!(spread(&[1.0]).is_err());
        assert!(fit_line(&[1.0, 2.0], &[1.0, 2.0], None).is_err());
    }

    #[test]
    fn exact_line_recovered() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|x| -1.5 * x + 0.25).collect();
        let f = fit_line(&x, &y, None).unwrap();
        assert_relative_eq!(f.slope, -1.5, epsilon = 1e-14);
        assert_relative_eq!(f.intercept, 0.25, epsilon = 1e-14);
        assert!(f.slope_err < 1e-12);
    }

    #[test]
    fn slope_error_matches_textbook_formula() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.1, 1.9, 3.2, 3.9, 5.1];
        let f = fit_line(&x, &y, None).unwrap();
        // s² / Sxx with Sxx = 10
        let rss: f64 = x
            .iter()
            .zip(&y)
            .map(|(x, y)| (y - f.intercept - f.slope * x).powi(2))
            .sum();
        assert_relative_eq!(f.slope_err, (rss / 3.0 / 10.0).sqrt(), max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn fast_jackknife_matches_brute_force(vals in prop::collection::vec(-1.0f64..1.0, 3..40)) {
            let fast = spread(&vals).unwrap();
            let (full, err) = jackknife(&vals, |v| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
            }).unwrap();
            prop_assert!((fast.rmse - full).abs() <= 1e-12);
            prop_assert!((fast.rmse_stderr - err).abs() <= 1e-9 * (1.0 + err));
        }

        #[test]
        fn jackknife_of_mean_is_classical_stderr(vals in prop::collection::vec(-5.0f64..5.0, 3..40)) {
            let s = spread(&vals).unwrap();
            let (_, err) = jackknife(&vals, |v| v.iter().sum::<f64>() / v.len() as f64).unwrap();
            prop_assert!((s.mean_stderr - err).abs() <= 1e-10 * (1.0 + err));
        }
    }
}
