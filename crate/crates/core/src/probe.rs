//! The superposition probe `|ψ> = μ|0> + ν|ξ>` at a fixed photon budget.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::gaussian::SqueezedParams;

/// `<0|ξ> = sqrt(sech r) · exp[−ybar² / (4(e^{2r} + 1))]`.
///
/// Closed form of the Gaussian overlap integral; reduces to 1 for the vacuum.
pub fn vacuum_overlap(params: &SqueezedParams) -> f64 {
    let r = params.r();
    let y2 = params.ybar() * params.ybar();
    (1.0 / r.cosh()).sqrt() * (-y2 / (4.0 * ((2.0 * r).exp() + 1.0))).exp()
}

/// Strong-squeezing form `sqrt(2ΔX) · exp(−ybar² ΔX² / 4)`, valid for `ΔX ≪ 1`.
pub fn vacuum_overlap_asymptotic(params: &SqueezedParams) -> f64 {
    (2.0 * params.dx()).sqrt() * (-params.ybar().powi(2) * params.dx2() / 4.0).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeSpec {
    pub mu: f64,
    pub nu: f64,
    /// Photon budget `ν² nxi`.
    pub nbar: f64,
    /// `<0|ξ>`, kept for the normalization bookkeeping.
    pub overlap: f64,
    #[serde(skip)]
    pub squeezed: SqueezedParams,
}

impl ProbeSpec {
    /// Builds the probe with `nxi = nbar / ν²` and `μ` the positive root of
    /// `μ² + ν² + 2μν<0|ξ> = 1`.
    pub fn build(nbar: f64, nu: f64) -> Result<Self> {
        if !(nbar.is_finite() && nbar > 0.0) {
            return domain(format!("nbar must be > 0, got {nbar}"));
        }
        if !(nu > 0.0 && nu <= 1.0) {
            return domain(format!("nu must lie in (0, 1], got {nu}"));
        }
        let squeezed = SqueezedParams::from_mean_photons(nbar / (nu * nu))?;
        let overlap = vacuum_overlap(&squeezed);
        let b = nu * overlap;
        let disc = b * b + 1.0 - nu * nu;
        if disc < 0.0 {
            return domain("no real vacuum amplitude normalizes the probe");
        }
        let mut mu = if nu == 1.0 { 0.0 } else { disc.sqrt() - b };
        if mu < 0.0 {
            if mu > -1e-12 {
                mu = 0.0;
            } else {
                return domain(format!("no positive vacuum amplitude (mu = {mu})"));
            }
        }
        Ok(Self {
            mu,
            nu,
            nbar,
            overlap,
            squeezed,
        })
    }

    /// `<ψ|ψ>`; one up to rounding by construction.
    pub fn norm_sq(&self) -> f64 {
        self.mu * self.mu + self.nu * self.nu + 2.0 * self.mu * self.nu * self.overlap
    }

    /// Mean photon number of the normalized state. `a|0> = 0` kills every
    /// cross term, so this is `ν² nxi` exactly.
    pub fn exact_mean_photons(&self) -> f64 {
        self.nu * self.nu * self.squeezed.nxi()
    }

    /// Exact variance of `a†a` in the normalized superposition.
    pub fn number_variance(&self) -> f64 {
        let (mean_xi, var_xi) = self.squeezed.number_moments();
        let nu2 = self.nu * self.nu;
        let second = nu2 * (var_xi + mean_xi * mean_xi);
        let mean = nu2 * mean_xi;
        second - mean * mean
    }

    /// Pure-state quantum Fisher information for the generator `a†a`.
    pub fn quantum_fisher(&self) -> f64 {
        4.0 * self.number_variance()
    }

    /// Leading order `(5/2) nbar² / ν²` of the number variance.
    pub fn number_variance_leading(&self) -> f64 {
        2.5 * self.nbar * self.nbar / (self.nu * self.nu)
    }
}
