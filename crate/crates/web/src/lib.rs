//! Browser bindings for the homodyne phase-estimation lab.
//!
//! Every export returns a flat `Float64Array`; the page unpacks it.

use homodyne_lab::experiments::{run_campaign, CampaignConfig, NuRule};
use homodyne_lab::homodyne::{fisher_information, fisher_leading_order, FisherConfig};
use homodyne_lab::{DensityMode, Error, GridConfig, ProbeSpec, Result, Statistics, TabulatedDensity};
use wasm_bindgen::prelude::*;

// keeps a single click responsive on one thread
const MAX_TRIALS: usize = 20_000;
const MAX_GRID_POINTS: f64 = 2e6;

fn mode(exact: bool) -> DensityMode {
    if exact {
        DensityMode::Exact
    } else {
        DensityMode::FirstOrder
    }
}

fn density_curve(nbar: f64, nu: f64, phi: f64, exact: bool, points: usize) -> Result<Vec<f64>> {
    let spec = ProbeSpec::build(nbar, nu)?;
    let stats = Statistics::new(&spec, mode(exact))?;
    // the grid follows the squeezed peak, which moves out as ybar φ
    let reach = stats.peak_centre(phi).abs() + 7.0 * stats.peak_width(phi) + 2.0;
    let mut grid = GridConfig::default();
    grid.half_width = grid.half_width.max(reach);
    if 2.0 * grid.half_width / grid.step(&spec) > MAX_GRID_POINTS {
        return Err(Error::Config(format!(
            "the density at nbar {nbar}, nu {nu}, phi {phi} needs too fine a grid to plot here"
        )));
    }
    let d = TabulatedDensity::tabulate(&spec, phi, mode(exact), &grid)?;
    let stride = d.grid().len().div_ceil(points.max(2));
    Ok(d.downsampled(stride).into_iter().flat_map(|(x, p)| [x, p]).collect())
}

fn fisher_summary(nbar: f64, nu: f64) -> Result<Vec<f64>> {
    let spec = ProbeSpec::build(nbar, nu)?;
    let cfg = FisherConfig::default();
    let exact = fisher_information(&spec, 0.0, DensityMode::Exact, &cfg)?.value;
    // the first-order density is undefined for some probes; NaN marks that
    let first = fisher_information(&spec, 0.0, DensityMode::FirstOrder, &cfg)
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    Ok(vec![exact, first, spec.quantum_fisher(), fisher_leading_order(&spec)])
}

fn campaign_summary(nbar: f64, nu: f64, m: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let cfg = CampaignConfig {
        nbar,
        nu_rule: NuRule::Constant(nu),
        m,
        trials: trials.min(MAX_TRIALS),
        campaign_seed: seed,
        ..CampaignConfig::default()
    };
    let r = run_campaign(&cfg)?;
    Ok(vec![r.rmse, r.rmse_stderr, r.heisenberg, r.cr_bound, r.mean_estimate, r.boundary_fraction])
}

fn js(e: homodyne_lab::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Homodyne density as interleaved `[x0, p0, x1, p1, ...]`, about `points` pairs.
#[wasm_bindgen]
pub fn density(nbar: f64, nu: f64, phi: f64, exact: bool, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    density_curve(nbar, nu, phi, exact, points).map_err(js)
}

/// `[F exact, F first-order, F_Q, 4 nbar²/ν²]` at `φ = 0`.
#[wasm_bindgen]
pub fn fisher(nbar: f64, nu: f64) -> std::result::Result<Vec<f64>, JsError> {
    fisher_summary(nbar, nu).map_err(js)
}

/// `[rmse, stderr, 1/(2 m nbar), Cramér-Rao, mean, boundary fraction]`.
#[wasm_bindgen]
pub fn campaign(nbar: f64, nu: f64, m: usize, trials: usize, seed: u64) -> std::result::Result<Vec<f64>, JsError> {
    campaign_summary(nbar, nu, m, trials, seed).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_is_a_normalized_curve() {
        let v = density_curve(2.0, 0.05, 0.0, true, 400).unwrap();
        assert_eq!(v.len() % 2, 0);
        let pairs: Vec<_> = v.chunks(2).collect();
        assert!(pairs.len() >= 200 && pairs.len() <= 801);
        let mass: f64 = pairs.windows(2).map(|w| 0.5 * (w[0][1] + w[1][1]) * (w[1][0] - w[0][0])).sum();
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    }

    #[test]
    fn fisher_is_ordered() {
        let v = fisher_summary(1.0, 0.05).unwrap();
        assert!(v[1] < v[0] && v[0] <= 1.001 * v[2]);
    }

    #[test]
    fn campaign_is_capped_and_reproducible() {
        let a = campaign_summary(1.0, 0.05, 1, 500, 7).unwrap();
        let b = campaign_summary(1.0, 0.05, 1, 500, 7).unwrap();
        assert_eq!(a, b);
        assert!(a[0] < a[2]);
        assert!(campaign_summary(-1.0, 0.05, 1, 500, 7).is_err());
    }

    #[test]
    fn grid_follows_a_displaced_peak() {
        // nxi = 400, ybar ≈ 28.3: the peak at ybar φ is near x = 2.8
        let v = density_curve(1.0, 0.05, 0.1, false, 400).unwrap();
        assert!(v[v.len() - 2] > 2.8 + 1.0);
        let v = density_curve(1.0, 0.05, -0.1, true, 400).unwrap();
        assert!(v[0] < -2.8 - 1.0);
        assert!(density_curve(10.0, 0.01, 0.1, true, 400).is_err());
    }
}
