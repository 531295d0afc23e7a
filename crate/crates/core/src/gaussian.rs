//! Squeezed-coherent component `D(ybar) S(r) |0>` of the probe.
//!
//! Conventions: `X = a† + a`, `Y = i(a† − a)`, `[X, Y] = 2i`, so the vacuum has
//! unit quadrature variance and `<x|0> = (2π)^{-1/4} exp(−x²/4)`. The
//! displacement `D(ybar) = exp(i ybar X / 2)` moves `<Y>` to `ybar`, and
//! `S(r) = exp[i r (XY + YX) / 4]` reduces the X variance to `exp(−2r)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};

/// `<x|0>` in the unit-vacuum-variance convention.
#[inline]
pub fn vacuum_amplitude(x: f64) -> f64 {
    (2.0 * PI).powf(-0.25) * (-0.25 * x * x).exp()
}

/// Displacement and squeezing of the squeezed-coherent state, with the
/// derived variance and mean photon number cached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezedParams {
    ybar: f64,
    r: f64,
    dx2: f64,
    nxi: f64,
}

impl SqueezedParams {
    pub fn new(ybar: f64, r: f64) -> Result<Self> {
        if !(ybar.is_finite() && ybar >= 0.0) {
            return domain(format!("displacement must be finite and >= 0, got {ybar}"));
        }
        if !(r.is_finite() && r >= 0.0) {
            return domain(format!("squeezing must be finite and >= 0, got {r}"));
        }
        let sinh_r = r.sinh();
        Ok(Self {
            ybar,
            r,
            dx2: (-2.0 * r).exp(),
            nxi: 0.25 * ybar * ybar + sinh_r * sinh_r,
        })
    }

    /// Equal splitting of `nxi` photons between displacement and squeezing,
    /// `ybar²/4 = sinh² r = nxi/2`.
    pub fn from_mean_photons(nxi: f64) -> Result<Self> {
        if !(nxi.is_finite() && nxi > 0.0) {
            return domain(format!("mean photon number must be > 0, got {nxi}"));
        }
        let half = 0.5 * nxi;
        let r = half.sqrt().asinh();
        Ok(Self {
            ybar: (2.0 * nxi).sqrt(),
            r,
            dx2: (-2.0 * r).exp(),
            nxi,
        })
    }

    pub fn ybar(&self) -> f64 {
        self.ybar
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Quadrature variance `(ΔX)²`.
    pub fn dx2(&self) -> f64 {
        self.dx2
    }

    /// Quadrature standard deviation `ΔX = exp(−r)`.
    pub fn dx(&self) -> f64 {
        (-self.r).exp()
    }

    pub fn nxi(&self) -> f64 {
        self.nxi
    }

    /// Mean and variance of `a†a`.
    ///
    /// The displacement `iybar/2` points along the anti-squeezed quadrature,
    /// so the coherent part picks up the `exp(2r)` noise:
    /// `Var = (ybar²/4) e^{2r} + 2 sinh²r cosh²r`.
    pub fn number_moments(&self) -> (f64, f64) {
        let (s, c) = (self.r.sinh(), self.r.cosh());
        let variance = 0.25 * self.ybar * self.ybar * (2.0 * self.r).exp() + 2.0 * s * s * c * c;
        (self.nxi, variance)
    }

    /// Exact position amplitude `<x| e^{−iφ a†a} D(ybar) S(r) |0>`.
    ///
    /// The state is the null vector of `L = X + iΔ²(Y − ybar)`. Conjugating
    /// with the phase shift rotates the quadratures,
    /// `U X U† = X cos φ − Y sin φ` and `U Y U† = Y cos φ + X sin φ`, and the
    /// rotated annihilator fixes the quadratic and linear coefficients. The
    /// modulus of `exp(a0)` comes from normalization; its phase from
    /// `<0|U|ξ> = <0|ξ>`, which is real and positive.
    pub fn exact_amplitude(&self, phi: f64) -> ComplexGaussianAmplitude {
        let d2 = self.dx2;
        let (s, c) = phi.sin_cos();
        let c1 = Complex64::new(c, d2 * s);
        let c2 = Complex64::new(-s, d2 * c);
        let c0 = Complex64::new(0.0, d2 * self.ybar);
        let i = Complex64::i();
        let a2 = c1 / (4.0 * i * c2);
        let a1 = -c0 / (2.0 * i * c2);

        let a = -2.0 * a2.re;
        let b = 2.0 * a1.re;
        let log_norm = 0.5 * (PI / a).ln() + b * b / (4.0 * a);
        let re_a0 = -0.5 * log_norm;

        let aq = Complex64::new(0.25, 0.0) - a2;
        let overlap_phase = -0.5 * aq.arg() + (a1 * a1 / (4.0 * aq)).im;
        ComplexGaussianAmplitude {
            a2,
            a1,
            a0: Complex64::new(re_a0, -overlap_phase),
        }
    }

    /// Small-signal amplitude
    /// `(2π)^{-1/4} ΔX^{-1/2} exp{i[ybar x/2 − g(x) φ] − (x − ybar sin φ)² / (4ΔX²)}`.
    pub fn small_signal_amplitude(&self, phi: f64, x: f64) -> Complex64 {
        let d2 = self.dx2;
        let xbar = self.ybar * phi.sin();
        let phase = 0.5 * self.ybar * x - self.phase_kernel(x) * phi;
        let re = -(x - xbar).powi(2) / (4.0 * d2);
        let modulus = (2.0 * PI).powf(-0.25) / self.dx().sqrt() * re.exp();
        Complex64::from_polar(modulus, phase)
    }

    /// `g(x) = ¼(x² − 2 + 2/ΔX² + ybar² − x²/ΔX⁴)`.
    #[inline]
    pub fn phase_kernel(&self, x: f64) -> f64 {
        let inv = 1.0 / self.dx2;
        let x2 = x * x;
        0.25 * (x2 - 2.0 + 2.0 * inv + self.ybar * self.ybar - x2 * inv * inv)
    }
}

/// `ψ(x) = exp(a2 x² + a1 x + a0)` with `Re a2 < 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexGaussianAmplitude {
    pub a2: Complex64,
    pub a1: Complex64,
    pub a0: Complex64,
}

impl ComplexGaussianAmplitude {
    #[inline]
    pub fn eval(&self, x: f64) -> Complex64 {
        (self.a2 * (x * x) + self.a1 * x + self.a0).exp()
    }

    #[inline]
    pub fn modulus_sq(&self, x: f64) -> f64 {
        (2.0 * (self.a2.re * x * x + self.a1.re * x + self.a0.re)).exp()
    }

    /// Closed-form `∫|ψ|² dx`.
    pub fn norm_sq(&self) -> f64 {
        let a = -2.0 * self.a2.re;
        let b = 2.0 * self.a1.re;
        (PI / a).sqrt() * (b * b / (4.0 * a) + 2.0 * self.a0.re).exp()
    }

    /// Mean of `|ψ|²` regarded as a density in x.
    pub fn mean_x(&self) -> f64 {
        -self.a1.re / (2.0 * self.a2.re)
    }

    pub fn var_x(&self) -> f64 {
        -1.0 / (4.0 * self.a2.re)
    }

    /// Closed-form `<0|ψ>`.
    pub fn vacuum_overlap(&self) -> Complex64 {
        let aq = Complex64::new(0.25, 0.0) - self.a2;
        (2.0 * PI).powf(-0.25)
            * (Complex64::new(PI, 0.0) / aq).sqrt()
            * (self.a1 * self.a1 / (4.0 * aq) + self.a0).exp()
    }
}
