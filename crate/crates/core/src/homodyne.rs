//! X-quadrature statistics of the phase-shifted probe and their Fisher
//! information.
//!
//! Two density families are available. [`DensityMode::FirstOrder`] is the
//! small-signal, small-ν expression
//!
//! ```text
//! p(x|φ) = [μ² e^{−x²/2} + (2μν/√ΔX) cos(ybar x/2 − φ g(x))
//!           · exp(−x²/4 − (x − ybar φ)²/(4ΔX²))] / √(2π)
//! ```
//!
//! which drops the `ν²` self-term; for the pure squeezed probe (`μ = 0`) it
//! falls back to the Gaussian `N(ybar φ, ΔX²)`. [`DensityMode::Exact`] is
//! `|μ<x|0> + ν<x|e^{−iφa†a}|ξ>|²` with no expansion.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::gaussian::{vacuum_amplitude, ComplexGaussianAmplitude};
use crate::probe::ProbeSpec;
use crate::stats::{compensated_sum, CompensatedSum};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMode {
    FirstOrder,
    Exact,
}

impl fmt::Display for DensityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DensityMode::FirstOrder => "first-order",
            DensityMode::Exact => "exact",
        })
    }
}

impl FromStr for DensityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "first-order" | "firstorder" => Ok(DensityMode::FirstOrder),
            "exact" => Ok(DensityMode::Exact),
            other => Err(Error::Config(format!("unknown density mode '{other}'"))),
        }
    }
}

/// Largest ν for which the first-order expansion is accepted.
pub const FIRST_ORDER_MAX_NU: f64 = 0.2;
/// Largest |φ| for which the first-order expansion is accepted when tabulating.
pub const FIRST_ORDER_MAX_PHI: f64 = 0.1;

/// `g(x)` for the probe's squeezed component.
pub fn g_kernel(spec: &ProbeSpec, x: f64) -> f64 {
    spec.squeezed.phase_kernel(x)
}

/// Pointwise evaluator for `p(x|φ)`.
#[derive(Clone, Copy, Debug)]
pub struct Statistics {
    spec: ProbeSpec,
    mode: DensityMode,
    background: f64,
    interference: f64,
}

impl Statistics {
    pub fn new(spec: &ProbeSpec, mode: DensityMode) -> Result<Self> {
        if mode == DensityMode::FirstOrder && spec.mu > 0.0 && spec.nu > FIRST_ORDER_MAX_NU {
            return domain(format!(
                "first-order statistics need nu <= {FIRST_ORDER_MAX_NU} (or nu = 1), got {}",
                spec.nu
            ));
        }
        Ok(Self {
            spec: *spec,
            mode,
            background: spec.mu * spec.mu * INV_SQRT_2PI,
            interference: 2.0 * spec.mu * spec.nu / spec.squeezed.dx().sqrt() * INV_SQRT_2PI,
        })
    }

    pub fn spec(&self) -> &ProbeSpec {
        &self.spec
    }

    pub fn mode(&self) -> DensityMode {
        self.mode
    }

    /// Raw density. The first-order expression may dip below zero.
    pub fn pdf(&self, x: f64, phi: f64) -> f64 {
        match self.mode {
            DensityMode::FirstOrder => self.first_order(x, phi),
            DensityMode::Exact => {
                let amp = self.spec.squeezed.exact_amplitude(phi);
                self.exact_with(&amp, x)
            }
        }
    }

    /// Evaluates `p(·|φ)` on many points, reusing the φ-dependent setup.
    pub fn pdf_many(&self, xs: &[f64], phi: f64, out: &mut Vec<f64>) {
        out.clear();
        match self.mode {
            DensityMode::FirstOrder => out.extend(xs.iter().map(|&x| self.first_order(x, phi))),
            DensityMode::Exact => {
                let amp = self.spec.squeezed.exact_amplitude(phi);
                out.extend(xs.iter().map(|&x| self.exact_with(&amp, x)));
            }
        }
    }

    #[inline]
    fn first_order(&self, x: f64, phi: f64) -> f64 {
        let sq = &self.spec.squeezed;
        let d2 = sq.dx2();
        let shift = x - sq.ybar() * phi;
        if self.spec.mu == 0.0 {
            return self.spec.nu * self.spec.nu * INV_SQRT_2PI / sq.dx()
                * (-shift * shift / (2.0 * d2)).exp();
        }
        let x2 = x * x;
        let bg = self.background * (-0.5 * x2).exp();
        let arg = 0.5 * sq.ybar() * x - phi * sq.phase_kernel(x);
        bg + self.interference * arg.cos() * (-0.25 * x2 - shift * shift / (4.0 * d2)).exp()
    }

    #[inline]
    pub(crate) fn exact_with(&self, amp: &ComplexGaussianAmplitude, x: f64) -> f64 {
        let psi = amp.eval(x) * self.spec.nu + Complex64::new(self.spec.mu * vacuum_amplitude(x), 0.0);
        psi.norm_sqr()
    }

    /// Centre of the squeezed peak in x at phase φ.
    pub fn peak_centre(&self, phi: f64) -> f64 {
        let ybar = self.spec.squeezed.ybar();
        match self.mode {
            DensityMode::FirstOrder => ybar * phi,
            DensityMode::Exact => ybar * phi.sin(),
        }
    }

    /// Standard deviation of the squeezed peak in x at phase φ.
    pub fn peak_width(&self, phi: f64) -> f64 {
        let sq = &self.spec.squeezed;
        match self.mode {
            DensityMode::FirstOrder => sq.dx(),
            DensityMode::Exact => {
                let (s, c) = phi.sin_cos();
                (sq.dx2() * c * c + s * s / sq.dx2()).sqrt()
            }
        }
    }
}

/// Uniform tabulation grid on `[−half_width, half_width]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub half_width: f64,
    pub max_step: f64,
    /// Grid points per `ΔX`.
    pub peak_resolution: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            max_step: 1e-3,
            peak_resolution: 10.0,
        }
    }
}

impl GridConfig {
    pub fn step(&self, spec: &ProbeSpec) -> f64 {
        self.max_step.min(spec.squeezed.dx() / self.peak_resolution)
    }

    /// Symmetric grid with an odd number of points (x = 0 included).
    pub fn points(&self, spec: &ProbeSpec) -> Result<Vec<f64>> {
        if !(self.half_width > 0.0 && self.max_step > 0.0 && self.peak_resolution > 0.0) {
            return Err(Error::Config("grid parameters must be positive".into()));
        }
        let target = self.step(spec);
        let half = (self.half_width / target).ceil() as usize;
        if half > 20_000_000 {
            return Err(Error::Config(format!("grid of {} points is too large", 2 * half + 1)));
        }
        let h = self.half_width / half as f64;
        Ok((0..=2 * half)
            .map(|k| (k as f64 - half as f64) * h)
            .collect())
    }

    pub fn refined(&self) -> Self {
        Self {
            max_step: 0.5 * self.max_step,
            peak_resolution: 2.0 * self.peak_resolution,
            ..*self
        }
    }
}

/// `p(x|φ)` sampled on a grid, clamped at zero and renormalized, with its CDF.
#[derive(Clone, Debug)]
pub struct TabulatedDensity {
    grid: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
    pub phi: f64,
    pub mode: DensityMode,
    pub probe: ProbeSpec,
    /// Trapezoidal mass before renormalization.
    pub raw_mass: f64,
    /// Mass removed by clamping negative values.
    pub clamped_mass: f64,
}

impl TabulatedDensity {
    pub fn tabulate(spec: &ProbeSpec, phi: f64, mode: DensityMode, grid: &GridConfig) -> Result<Self> {
        if mode == DensityMode::FirstOrder && phi.abs() > FIRST_ORDER_MAX_PHI {
            return domain(format!(
                "first-order statistics need |phi| <= {FIRST_ORDER_MAX_PHI}, got {phi}"
            ));
        }
        let stats = Statistics::new(spec, mode)?;
        let xs = grid.points(spec)?;
        let lo = xs[0];
        let hi = xs[xs.len() - 1];

        let centre = stats.peak_centre(phi);
        let width = stats.peak_width(phi);
        let reach = 6.0 * width.min(1.0);
        if centre - reach < lo || centre + reach > hi {
            return Err(Error::Config(format!(
                "squeezed peak at {centre:.4} (width {width:.3e}) is not inside the grid [{lo}, {hi}]"
            )));
        }
        let outside = tail_mass(&stats, phi, lo, hi);
        if outside > 1e-6 {
            return Err(Error::Config(format!(
                "grid support [{lo}, {hi}] leaves {outside:.3e} of the probability outside"
            )));
        }

        let mut raw = Vec::with_capacity(xs.len());
        stats.pdf_many(&xs, phi, &mut raw);
        let h = xs[1] - xs[0];
        let clamped_mass =
            h * compensated_sum(raw.iter().filter(|v| **v < 0.0).map(|v| -*v));
        let mut pdf: Vec<f64> = raw.into_iter().map(|v| v.max(0.0)).collect();
        let raw_mass = trapezoid(&pdf, h);
        if !(raw_mass > 0.0 && raw_mass.is_finite()) {
            return Err(Error::Numerical(format!("density has no mass (got {raw_mass})")));
        }
        for v in pdf.iter_mut() {
            *v /= raw_mass;
        }
        let cdf = cumulative(&pdf, h);
        Ok(Self {
            grid: xs,
            pdf,
            cdf,
            phi,
            mode,
            probe: *spec,
            raw_mass,
            clamped_mass,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn pdf(&self) -> &[f64] {
        &self.pdf
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Piecewise-linear CDF, clamped outside the grid.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let h = self.step();
        let t = (x - lo) / h;
        let k = (t.floor() as usize).min(self.grid.len() - 2);
        let frac = t - k as f64;
        self.cdf[k] + frac * (self.cdf[k + 1] - self.cdf[k])
    }

    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.cdf_at(b) - self.cdf_at(a)
    }

    pub fn mean(&self) -> f64 {
        let h = self.step();
        h * compensated_sum(self.grid.iter().zip(&self.pdf).map(|(x, p)| x * p))
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let h = self.step();
        h * compensated_sum(self.grid.iter().zip(&self.pdf).map(|(x, p)| (x - m).powi(2) * p))
    }

    /// `½∫|p − q|` on a shared grid.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        if self.grid.len() != other.grid.len() || self.step() != other.step() {
            return domain("total variation needs identical grids");
        }
        let diff: Vec<f64> = self.pdf.iter().zip(&other.pdf).map(|(a, b)| (a - b).abs()).collect();
        Ok(0.5 * trapezoid(&diff, self.step()))
    }

    /// Two-column `x,pdf` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,pdf")?;
        for (x, p) in self.grid.iter().zip(&self.pdf) {
            writeln!(w, "{x:.16e},{p:.16e}")?;
        }
        Ok(())
    }

    /// Keeps every `stride`-th point; for plotting.
    pub fn downsampled(&self, stride: usize) -> Vec<(f64, f64)> {
        let stride = stride.max(1);
        self.grid
            .iter()
            .zip(&self.pdf)
            .step_by(stride)
            .map(|(x, p)| (*x, *p))
            .collect()
    }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner = compensated_sum(values[1..n - 1].iter().copied());
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

fn cumulative(pdf: &[f64], h: f64) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(pdf.len());
    let mut acc = CompensatedSum::new();
    cdf.push(0.0);
    for w in pdf.windows(2) {
        acc.add(0.5 * h * (w[0] + w[1]));
        cdf.push(acc.value());
    }
    let total = *cdf.last().unwrap();
    let mut prev = 0.0f64;
    for c in cdf.iter_mut() {
        *c = (*c / total).clamp(prev, 1.0);
        prev = *c;
    }
    *cdf.last_mut().unwrap() = 1.0;
    cdf
}

fn tail_mass(stats: &Statistics, phi: f64, lo: f64, hi: f64) -> f64 {
    const SPAN: f64 = 10.0;
    const N: usize = 4000;
    let h = SPAN / N as f64;
    let side = |start: f64, dir: f64| -> f64 {
        let vals: Vec<f64> = (0..=N)
            .map(|k| stats.pdf(start + dir * k as f64 * h, phi).max(0.0))
            .collect();
        trapezoid(&vals, h)
    };
    side(hi, 1.0) + side(lo, -1.0)
}

/// Numerical Fisher information with convergence diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FisherReport {
    /// Value on the refined grid.
    pub value: f64,
    /// Value on the base grid.
    pub coarse_value: f64,
    /// Value using the plain central difference at the smaller step.
    pub central_value: f64,
    pub phi_step: f64,
    pub grid_points: usize,
    /// Probability mass excluded by the integrand floor.
    pub floored_mass: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FisherConfig {
    pub grid: GridConfig,
    /// Relative density floor for the `1/p` integrand.
    pub floor: f64,
    /// Allowed relative change under grid refinement.
    pub refine_tolerance: f64,
}

impl Default for FisherConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            floor: 1e-12,
            refine_tolerance: 0.01,
        }
    }
}

/// `F(φ) = ∫ (∂_φ p)² / p dx` by quadrature.
///
/// `∂_φ p` is the Richardson combination of central differences at steps
/// `δ` and `δ/2` with `δ = min(1e−5, 0.1/g(0))`. The integral is evaluated
/// on the configured grid and on a grid twice as fine; disagreement beyond
/// `refine_tolerance` is an error.
pub fn fisher_information(
    spec: &ProbeSpec,
    phi: f64,
    mode: DensityMode,
    config: &FisherConfig,
) -> Result<FisherReport> {
    let stats = Statistics::new(spec, mode)?;
    let g0 = spec.squeezed.phase_kernel(0.0).abs();
    let delta = if g0 > 0.0 { 1e-5f64.min(0.1 / g0) } else { 1e-5 };

    let coarse = fisher_on_grid(&stats, phi, delta, &config.grid.points(spec)?, config.floor);
    let fine_grid = config.grid.refined();
    let fine = fisher_on_grid(&stats, phi, delta, &fine_grid.points(spec)?, config.floor);

    let change = (fine.0 - coarse.0).abs() / fine.0.abs().max(f64::MIN_POSITIVE);
    if !fine.0.is_finite() || change > config.refine_tolerance {
        return Err(Error::Numerical(format!(
            "Fisher quadrature not converged: {:.6e} -> {:.6e} (relative change {change:.3e})",
            coarse.0, fine.0
        )));
    }
    Ok(FisherReport {
        value: fine.0,
        coarse_value: coarse.0,
        central_value: fine.1,
        phi_step: delta,
        grid_points: fine.3,
        floored_mass: fine.2,
    })
}

/// Returns (Richardson value, plain central value, floored mass, points).
fn fisher_on_grid(stats: &Statistics, phi: f64, delta: f64, xs: &[f64], floor: f64) -> (f64, f64, f64, usize) {
    let mut p0 = Vec::new();
    let mut pp = Vec::new();
    let mut pm = Vec::new();
    let mut hp = Vec::new();
    let mut hm = Vec::new();
    stats.pdf_many(xs, phi, &mut p0);
    stats.pdf_many(xs, phi + delta, &mut pp);
    stats.pdf_many(xs, phi - delta, &mut pm);
    stats.pdf_many(xs, phi + 0.5 * delta, &mut hp);
    stats.pdf_many(xs, phi - 0.5 * delta, &mut hm);

    let h = xs[1] - xs[0];
    let pmax = p0.iter().copied().fold(0.0, f64::max);
    let cutoff = floor * pmax;
    let mut rich = CompensatedSum::new();
    let mut central = CompensatedSum::new();
    let mut floored = CompensatedSum::new();
    for k in 0..xs.len() {
        let p = p0[k];
        if p <= cutoff {
            floored.add(p.max(0.0));
            continue;
        }
        let d_full = (pp[k] - pm[k]) / (2.0 * delta);
        let d_half = (hp[k] - hm[k]) / delta;
        let d = (4.0 * d_half - d_full) / 3.0;
        rich.add(d * d / p);
        central.add(d_half * d_half / p);
    }
    (rich.value() * h, central.value() * h, floored.value() * h, xs.len())
}

/// Single-parameter Cramér-Rao bound `1/sqrt(m F)` on the standard deviation.
pub fn cramer_rao_bound(fisher: f64, m: usize) -> Result<f64> {
    if !(fisher > 0.0 && fisher.is_finite()) {
        return domain(format!("Fisher information must be positive, got {fisher}"));
    }
    if m == 0 {
        return domain("need at least one repetition");
    }
    Ok(1.0 / (m as f64 * fisher).sqrt())
}

/// Rough probability of landing under the narrow peak, `ν/sqrt(nbar)`.
pub fn peak_mass_estimate(spec: &ProbeSpec) -> f64 {
    spec.nu / spec.nbar.sqrt()
}

/// Exact probability within `|x − centre| ≤ 3ΔX` at φ = 0 minus the vacuum
/// background over the same window.
pub fn central_peak_mass(spec: &ProbeSpec) -> Result<f64> {
    let stats = Statistics::new(spec, DensityMode::Exact)?;
    let half = 3.0 * spec.squeezed.dx();
    let n = 6000usize;
    let h = 2.0 * half / n as f64;
    let xs: Vec<f64> = (0..=n).map(|k| -half + k as f64 * h).collect();
    let mut p = Vec::new();
    stats.pdf_many(&xs, 0.0, &mut p);
    let total = trapezoid(&p, h);
    let bg: Vec<f64> = xs
        .iter()
        .map(|&x| spec.mu * spec.mu * vacuum_amplitude(x).powi(2))
        .collect();
    Ok(total - trapezoid(&bg, h))
}

/// `ybar² / ΔX²`, the Fisher information of the pure squeezed probe at φ = 0.
pub fn squeezed_fisher(spec: &ProbeSpec) -> f64 {
    let sq = &spec.squeezed;
    sq.ybar() * sq.ybar() / sq.dx2()
}

/// Leading order `4 nbar² / ν²` of the superposition probe's Fisher information.
pub fn fisher_leading_order(spec: &ProbeSpec) -> f64 {
    4.0 * spec.nbar * spec.nbar / (spec.nu * spec.nu)
}
