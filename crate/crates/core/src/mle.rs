//! Maximum-likelihood phase estimation from a handful of homodyne outcomes.
//!
//! For a single outcome `x` the first-order likelihood in φ is a constant
//! vacuum background plus a Gaussian bump of width `√2 ΔX/ybar` centred on
//! `x/ybar`, modulated by `cos(ybar x/2 − φ g(x))`. Envelope and carrier
//! bound each factor on any interval, so the first-order search is a
//! best-first branch and bound that certifies the global maximum. The exact
//! density has no such cheap bound; its search is a coarse scan of the whole
//! window plus a fine scan around each outcome's bump. Both finish with a
//! golden-section refinement of the best point.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::gaussian::vacuum_amplitude;
use crate::homodyne::{DensityMode, GridConfig, Statistics};
use crate::probe::ProbeSpec;

/// Floor applied to `p(x|φ)` before taking the logarithm.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Resolution of the φ search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    /// Uniform points across the whole window.
    pub coarse_points: usize,
    /// Local points per standard deviation of an outcome's envelope.
    pub points_per_width: f64,
    /// Local points per `π/ω`, ω the carrier frequency in φ (spacing `π/(k ω)`).
    pub points_per_half_period: f64,
    /// Envelope half-span of the local scan, in standard deviations.
    pub span_widths: f64,
    /// Cap on local points per outcome; the span shrinks around the centre.
    pub max_local_points: usize,
    /// Width below which intervals are no longer split, and golden-section
    /// termination width.
    pub tolerance: f64,
    /// Log-likelihood margin within which a bound no longer forces a split.
    pub slack: f64,
    /// Cap on interval splits before the search gives up on certification.
    pub max_splits: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            coarse_points: 65,
            points_per_width: 8.0,
            points_per_half_period: 20.0,
            span_widths: 6.0,
            max_local_points: 1024,
            tolerance: 1e-9,
            slack: 1e-10,
            max_splits: 200_000,
        }
    }
}

impl ScanConfig {
    /// Same search with every grid spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            coarse_points: 2 * self.coarse_points - 1,
            points_per_width: 2.0 * self.points_per_width,
            points_per_half_period: 2.0 * self.points_per_half_period,
            max_local_points: 2 * self.max_local_points,
            ..*self
        }
    }
}

/// Window half-width that lets the estimate reach the bump of any outcome on
/// the tabulation grid: `min(half_width / ybar, π/2)`.
pub fn default_window(spec: &ProbeSpec) -> f64 {
    (GridConfig::default().half_width / spec.squeezed.ybar()).min(0.5 * PI)
}

#[derive(Clone, Copy, Debug)]
struct Outcome {
    x: f64,
    background: f64,
    interference: f64,
    carrier: f64,
    kernel: f64,
    vacuum: f64,
}

/// The likelihood `∏ p(x_i|φ)` for a fixed outcome record.
#[derive(Clone, Debug)]
pub struct LikelihoodProblem {
    outcomes: Vec<Outcome>,
    stats: Statistics,
    window: f64,
}

/// Result of [`LikelihoodProblem::estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub phi_hat: f64,
    pub log_likelihood: f64,
    pub boundary_hit: bool,
    /// Strict local maxima seen across the scan grids.
    pub local_maxima: usize,
    pub evaluations: usize,
    /// The search proved no point beats the estimate by more than the slack.
    pub certified: bool,
}

impl LikelihoodProblem {
    pub fn new(outcomes: &[f64], spec: &ProbeSpec, mode: DensityMode, window: Option<f64>) -> Result<Self> {
        if outcomes.is_empty() {
            return domain("need at least one outcome");
        }
        if let Some(x) = outcomes.iter().find(|x| !x.is_finite()) {
            return domain(format!("outcome {x} is not finite"));
        }
        let window = window.unwrap_or_else(|| default_window(spec));
        if !(window > 0.0 && window.is_finite()) {
            return domain(format!("search window must be positive, got {window}"));
        }
        let stats = Statistics::new(spec, mode)?;
        let sq = spec.squeezed;
        let inv_sqrt_2pi = 1.0 / (2.0 * PI).sqrt();
        let outcomes = outcomes
            .iter()
            .map(|&x| Outcome {
                x,
                background: spec.mu * spec.mu * inv_sqrt_2pi * (-0.5 * x * x).exp(),
                interference: 2.0 * spec.mu * spec.nu / sq.dx().sqrt()
                    * inv_sqrt_2pi
                    * (-0.25 * x * x).exp(),
                carrier: 0.5 * sq.ybar() * x,
                kernel: sq.phase_kernel(x),
                vacuum: spec.mu * vacuum_amplitude(x),
            })
            .collect();
        Ok(Self {
            outcomes,
            stats,
            window,
        })
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// `Σ log max(p(x_i|φ), 1e−300)` with the analytic density.
    pub fn log_likelihood(&self, phi: f64) -> f64 {
        let spec = self.stats.spec();
        let sq = &spec.squeezed;
        match self.stats.mode() {
            DensityMode::FirstOrder => {
                let ybar = sq.ybar();
                let d2 = sq.dx2();
                if spec.mu == 0.0 {
                    let norm = spec.nu * spec.nu / ((2.0 * PI).sqrt() * sq.dx());
                    return self
                        .outcomes
                        .iter()
                        .map(|o| {
                            let s = o.x - ybar * phi;
                            (norm * (-s * s / (2.0 * d2)).exp()).max(DENSITY_FLOOR).ln()
                        })
                        .sum();
                }
                self.outcomes
                    .iter()
                    .map(|o| {
                        let s = o.x - ybar * phi;
                        let env = (-s * s / (4.0 * d2)).exp();
                        let p = o.background + o.interference * (o.carrier - phi * o.kernel).cos() * env;
                        p.max(DENSITY_FLOOR).ln()
                    })
                    .sum()
            }
            DensityMode::Exact => {
                let amp = sq.exact_amplitude(phi);
                self.outcomes
                    .iter()
                    .map(|o| {
                        let psi = amp.eval(o.x) * spec.nu + Complex64::new(o.vacuum, 0.0);
                        psi.norm_sqr().max(DENSITY_FLOOR).ln()
                    })
                    .sum()
            }
        }
    }

    /// Centre, envelope width and carrier frequency of an outcome's bump in φ.
    fn bump(&self, o: &Outcome) -> (f64, f64, f64) {
        let spec = self.stats.spec();
        let sq = &spec.squeezed;
        let ybar = sq.ybar();
        match self.stats.mode() {
            DensityMode::FirstOrder => {
                let centre = (o.x / ybar).clamp(-self.window, self.window);
                let width = std::f64::consts::SQRT_2 * sq.dx() / ybar;
                let freq = if spec.mu == 0.0 { 0.0 } else { o.kernel.abs() };
                (centre, width, freq)
            }
            DensityMode::Exact => {
                let centre = (o.x / ybar).clamp(-1.0, 1.0).asin().clamp(-self.window, self.window);
                let width = std::f64::consts::SQRT_2 * self.stats.peak_width(centre)
                    / (ybar * centre.cos().max(1e-3));
                let freq = if spec.mu == 0.0 {
                    0.0
                } else {
                    let h = 1e-8;
                    let up = sq.exact_amplitude(centre + h).eval(o.x);
                    let down = sq.exact_amplitude(centre - h).eval(o.x);
                    ((up * down.conj()).arg() / (2.0 * h)).abs()
                };
                (centre, width, freq)
            }
        }
    }

    /// Global maximizer of the likelihood over `[−window, window]`.
    ///
    /// Ties (to 1e−12 relative) go to the smaller |φ|. A maximizer on the
    /// window edge is reported through `boundary_hit`.
    pub fn estimate(&self, scan: &ScanConfig) -> Estimate {
        let mut search = Search::default();
        match self.stats.mode() {
            DensityMode::FirstOrder => self.branch_and_bound(scan, &mut search),
            DensityMode::Exact => self.dense_scan(scan, &mut search),
        }
        let w = self.window;
        let Best { phi, value, step } = search.best;
        let lo = (phi - step).max(-w);
        let hi = (phi + step).min(w);
        let (phi_hat, log_likelihood) = if hi - lo > scan.tolerance {
            let (p, v, n) = golden_section_max(|phi| self.log_likelihood(phi), lo, hi, scan.tolerance);
            search.evaluations += n;
            if v > value {
                (p, v)
            } else {
                (phi, value)
            }
        } else {
            (phi, value)
        };

        Estimate {
            phi_hat,
            log_likelihood,
            boundary_hit: phi_hat.abs() >= w * (1.0 - 1e-9),
            local_maxima: search.local_maxima,
            evaluations: search.evaluations,
            certified: search.certified,
        }
    }

    fn coarse_grid(&self, scan: &ScanConfig) -> (Vec<f64>, f64) {
        let w = self.window;
        let n = scan.coarse_points.max(3) | 1;
        let step = 2.0 * w / (n - 1) as f64;
        let mut grid: Vec<f64> = (0..n).map(|k| -w + k as f64 * step).collect();
        // land exactly on the window edges and the origin
        grid[0] = -w;
        grid[n - 1] = w;
        grid[n / 2] = 0.0;
        (grid, step)
    }

    /// Coarse scan plus a fine scan around each outcome's bump that resolves
    /// both its envelope and its carrier.
    fn dense_scan(&self, scan: &ScanConfig, search: &mut Search) {
        let w = self.window;
        let (coarse, coarse_step) = self.coarse_grid(scan);
        search.scan(coarse.into_iter(), coarse_step, |phi| self.log_likelihood(phi));

        for o in &self.outcomes {
            let (centre, width, freq) = self.bump(o);
            let mut step = width / scan.points_per_width;
            if freq > 0.0 {
                step = step.min(PI / (scan.points_per_half_period * freq));
            }
            let half = ((scan.span_widths * width / step).ceil() as usize)
                .min(scan.max_local_points / 2)
                .max(1);
            search.scan(
                (0..=2 * half)
                    .map(|k| centre + (k as f64 - half as f64) * step)
                    .filter(|phi| phi.abs() <= w),
                step,
                |phi| self.log_likelihood(phi),
            );
        }
        // the scan is exhaustive only for the bumps it resolves
        search.certified = false;
    }

    /// Best-first interval subdivision with rigorous upper bounds on the
    /// first-order log-likelihood. Stops once no interval can beat the best
    /// evaluated point by more than `slack`.
    fn branch_and_bound(&self, scan: &ScanConfig, search: &mut Search) {
        let (coarse, coarse_step) = self.coarse_grid(scan);
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(coarse.len() + 64);
        for &phi in &coarse {
            let v = self.log_likelihood(phi);
            points.push((phi, v));
            search.best.offer(phi, v, coarse_step);
        }
        for o in &self.outcomes {
            let (centre, _, _) = self.bump(o);
            let v = self.log_likelihood(centre);
            points.push((centre, v));
            search.best.offer(centre, v, coarse_step);
        }
        let slack = scan.slack;
        let mut heap: BinaryHeap<Cell> = coarse
            .windows(2)
            .map(|c| Cell::new(c[0], c[1], self.log_likelihood_bound(c[0], c[1])))
            .filter(|c| c.bound > search.best.value + slack)
            .collect();
        search.certified = true;
        let mut splits = 0usize;
        while let Some(cell) = heap.pop() {
            if cell.bound <= search.best.value + slack {
                break;
            }
            if cell.hi - cell.lo <= scan.tolerance {
                continue;
            }
            if splits == scan.max_splits {
                search.certified = false;
                break;
            }
            splits += 1;
            let mid = 0.5 * (cell.lo + cell.hi);
            let v = self.log_likelihood(mid);
            points.push((mid, v));
            search.best.offer(mid, v, 0.5 * (cell.hi - cell.lo));
            for (lo, hi) in [(cell.lo, mid), (mid, cell.hi)] {
                let bound = self.log_likelihood_bound(lo, hi);
                if bound > search.best.value + slack {
                    heap.push(Cell::new(lo, hi, bound));
                }
            }
        }
        search.evaluations += points.len();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|a, b| a.0 == b.0);
        search.local_maxima += points
            .windows(3)
            .filter(|t| t[1].1 > t[0].1 && t[1].1 > t[2].1)
            .count();
    }

    /// Upper bound of the first-order log-likelihood on `[lo, hi]`: each
    /// factor's envelope and carrier are bounded separately.
    fn log_likelihood_bound(&self, lo: f64, hi: f64) -> f64 {
        let spec = self.stats.spec();
        let sq = &spec.squeezed;
        let ybar = sq.ybar();
        let d2 = sq.dx2();
        let pure = spec.mu == 0.0;
        let norm = spec.nu * spec.nu / ((2.0 * PI).sqrt() * sq.dx());
        self.outcomes
            .iter()
            .map(|o| {
                let a = o.x - ybar * hi;
                let b = o.x - ybar * lo;
                let near = if a <= 0.0 && b >= 0.0 { 0.0 } else { (a * a).min(b * b) };
                let p = if pure {
                    norm * (-near / (2.0 * d2)).exp()
                } else {
                    let far = (a * a).max(b * b);
                    let p_lo = o.carrier - lo * o.kernel;
                    let p_hi = o.carrier - hi * o.kernel;
                    let (pa, pb) = if p_lo <= p_hi { (p_lo, p_hi) } else { (p_hi, p_lo) };
                    let crest = (pa / (2.0 * PI)).ceil() * 2.0 * PI;
                    let cmax = if crest <= pb { 1.0 } else { pa.cos().max(pb.cos()) };
                    let env = if cmax >= 0.0 {
                        (-near / (4.0 * d2)).exp()
                    } else {
                        (-far / (4.0 * d2)).exp()
                    };
                    o.background + o.interference * cmax * env
                };
                p.max(DENSITY_FLOOR).ln()
            })
            .sum()
    }
}

#[derive(Debug)]
struct Search {
    best: Best,
    local_maxima: usize,
    evaluations: usize,
    certified: bool,
    values: Vec<f64>,
}

impl Default for Search {
    fn default() -> Self {
        Self {
            best: Best::default(),
            local_maxima: 0,
            evaluations: 0,
            certified: false,
            values: Vec::new(),
        }
    }
}

impl Search {
    fn scan<I: Iterator<Item = f64>, F: Fn(f64) -> f64>(&mut self, grid: I, step: f64, f: F) {
        self.values.clear();
        for phi in grid {
            let v = f(phi);
            self.values.push(v);
            self.best.offer(phi, v, step);
        }
        self.evaluations += self.values.len();
        self.local_maxima += self
            .values
            .windows(3)
            .filter(|t| t[1] > t[0] && t[1] > t[2])
            .count();
    }
}

/// Interval of the branch-and-bound queue, ordered by its bound.
#[derive(Clone, Copy, Debug)]
struct Cell {
    lo: f64,
    hi: f64,
    bound: f64,
}

impl Cell {
    fn new(lo: f64, hi: f64, bound: f64) -> Self {
        Self { lo, hi, bound }
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.lo.abs().total_cmp(&self.lo.abs()))
    }
}

#[derive(Clone, Copy, Debug)]
struct Best {
    phi: f64,
    value: f64,
    step: f64,
}

impl Default for Best {
    fn default() -> Self {
        Self {
            phi: 0.0,
            value: f64::NEG_INFINITY,
            step: 0.0,
        }
    }
}

impl Best {
    #[inline]
    fn offer(&mut self, phi: f64, value: f64, step: f64) {
        let tol = if self.value.is_finite() { 1e-12 * self.value.abs() } else { 0.0 };
        let better = value > self.value + tol
            || ((value - self.value).abs() <= tol && phi.abs() < self.phi.abs());
        if better {
            *self = Self { phi, value, step };
        }
    }
}

/// Golden-section search for a maximum inside `[lo, hi]`.
/// Returns (argmax, value, evaluations).
fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut n = 2;
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        n += 1;
    }
    if fc >= fd {
        (c, fc, n)
    } else {
        (d, fd, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_probe() -> ProbeSpec {
        ProbeSpec::build(1.0, 0.05).unwrap()
    }

    #[test]
    fn origin_log_likelihood() {
        let spec = table_probe();
        let prob = LikelihoodProblem::new(&[0.0], &spec, DensityMode::FirstOrder, None).unwrap();
        let expected = ((spec.mu * spec.mu + 2.0 * spec.mu * spec.nu / spec.squeezed.dx().sqrt())
            / (2.0 * PI).sqrt())
        .ln();
        assert_relative_eq!(prob.log_likelihood(0.0), expected, max_relative = 1e-14);
    }

    #[test]
    fn matches_density_evaluator() {
        let spec = table_probe();
        for mode in [DensityMode::FirstOrder, DensityMode::Exact] {
            let stats = Statistics::new(&spec, mode).unwrap();
            for &x in &[-1.3, 0.0, 0.01, 2.2] {
                let prob = LikelihoodProblem::new(&[x], &spec, mode, None).unwrap();
                for &phi in &[0.0, 1e-3, -0.02] {
                    let direct = stats.pdf(x, phi).max(DENSITY_FLOOR).ln();
                    assert_relative_eq!(prob.log_likelihood(phi), direct, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn peak_outcome_likelihood_falls_away_from_zero() {
        let spec = table_probe();
        let prob = LikelihoodProblem::new(&[0.0], &spec, DensityMode::FirstOrder, None).unwrap();
        let g0 = spec.squeezed.phase_kernel(0.0);
        let mut prev = prob.log_likelihood(0.0);
        for k in 1..20 {
            let phi = k as f64 * 0.5 / (20.0 * g0);
            let v = prob.log_likelihood(phi);
            assert!(v < prev);
            assert_relative_eq!(v, prob.log_likelihood(-phi), max_relative = 1e-12);
            prev = v;
        }
        let est = prob.estimate(&ScanConfig::default());
        assert!(est.phi_hat.abs() < 1e-8, "{}", est.phi_hat);
    }

    #[test]
    fn squeezed_only_estimate_is_gaussian_mean() {
        let spec = ProbeSpec::build(4.0, 1.0).unwrap();
        let ybar = spec.squeezed.ybar();
        for &x in &[0.0, 0.17, -0.9, 2.5] {
            let prob = LikelihoodProblem::new(&[x], &spec, DensityMode::FirstOrder, None).unwrap();
            let est = prob.estimate(&ScanConfig::default());
            let expected = (x / ybar).clamp(-prob.window(), prob.window());
            assert!((est.phi_hat - expected).abs() < 1e-8, "x {x}: {} vs {expected}", est.phi_hat);
        }
        // outcome beyond the window is clipped and flagged
        let prob = LikelihoodProblem::new(&[3.0], &spec, DensityMode::FirstOrder, Some(0.1)).unwrap();
        let est = prob.estimate(&ScanConfig::default());
        assert!(est.boundary_hit);
        assert_relative_eq!(est.phi_hat, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn background_outcome_lands_on_its_bump() {
        let spec = table_probe();
        let ybar = spec.squeezed.ybar();
        for &x in &[0.4, -1.1, 2.7] {
            let prob = LikelihoodProblem::new(&[x], &spec, DensityMode::FirstOrder, None).unwrap();
            let est = prob.estimate(&ScanConfig::default());
            let width = std::f64::consts::SQRT_2 * spec.squeezed.dx() / ybar;
            assert!((est.phi_hat - x / ybar).abs() < 2.0 * width, "x {x}");
            assert!(!est.boundary_hit);
            // no grid point beats the estimate
            let mut phi = -prob.window();
            while phi <= prob.window() {
                assert!(prob.log_likelihood(phi) <= est.log_likelihood + 1e-9);
                phi += 1e-6;
            }
        }
    }

    #[test]
    fn joint_likelihood_maximum_is_global() {
        // records where two outcomes' bumps overlap away from either centre
        let spec = table_probe();
        let records: [&[f64]; 3] = [&[-0.22, -0.97, 0.17, -1.04], &[-0.84, -0.27, -0.89, 0.26], &[0.3, 0.31]];
        for xs in records {
            let prob = LikelihoodProblem::new(xs, &spec, DensityMode::FirstOrder, None).unwrap();
            let est = prob.estimate(&ScanConfig::default());
            assert!(est.certified);
            let w = prob.window();
            let n = 2_000_000;
            let brute = (0..=n)
                .map(|k| prob.log_likelihood(-w + 2.0 * w * k as f64 / n as f64))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(brute <= est.log_likelihood + 1e-9, "{xs:?}: {brute} > {}", est.log_likelihood);
        }
    }

    #[test]
    fn bound_dominates_likelihood() {
        let spec = table_probe();
        let prob = LikelihoodProblem::new(&[0.7, -0.1, 1.9], &spec, DensityMode::FirstOrder, None).unwrap();
        for k in 0..200 {
            let lo = -0.2 + k as f64 * 2e-3;
            let hi = lo + 1e-3 * (1 + k % 7) as f64;
            let bound = prob.log_likelihood_bound(lo, hi);
            for j in 0..=50 {
                let phi = lo + (hi - lo) * j as f64 / 50.0;
                assert!(prob.log_likelihood(phi) <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn refined_scan_agrees() {
        let spec = ProbeSpec::build(2.0, 0.05).unwrap();
        for &x in &[0.003, -0.5, 1.7] {
            let prob = LikelihoodProblem::new(&[x], &spec, DensityMode::FirstOrder, None).unwrap();
            let a = prob.estimate(&ScanConfig::default());
            let b = prob.estimate(&ScanConfig::default().refined());
            assert!(b.log_likelihood - a.log_likelihood < 1e-9);
        }
    }

    #[test]
    fn exact_mode_estimates() {
        let spec = table_probe();
        let prob = LikelihoodProblem::new(&[0.0], &spec, DensityMode::Exact, None).unwrap();
        let est = prob.estimate(&ScanConfig::default());
        assert!(est.phi_hat.abs() < 1e-6);
        let squeezed = ProbeSpec::build(25.0, 1.0).unwrap();
        let x = 0.05;
        let prob = LikelihoodProblem::new(&[x], &squeezed, DensityMode::Exact, None).unwrap();
        let est = prob.estimate(&ScanConfig::default());
        // the variance grows with |φ|, pulling the maximizer below asin(x/ybar)
        let sq = squeezed.squeezed;
        let loglik = |phi: f64| {
            let (s, c) = phi.sin_cos();
            let var = sq.dx2() * c * c + s * s / sq.dx2();
            -0.5 * var.ln() - (x - sq.ybar() * s).powi(2) / (2.0 * var)
        };
        let brute = (-100_000..=100_000)
            .map(|k| k as f64 * 1e-7)
            .max_by(|a, b| loglik(*a).total_cmp(&loglik(*b)))
            .unwrap();
        assert!((est.phi_hat - brute).abs() < 2e-7, "{} vs {brute}", est.phi_hat);
    }

    #[test]
    fn invalid_problems() {
        let spec = table_probe();
        assert!(LikelihoodProblem::new(&[], &spec, DensityMode::FirstOrder, None).is_err());
        assert!(LikelihoodProblem::new(&[0.1], &spec, DensityMode::FirstOrder, Some(0.0)).is_err());
        assert!(LikelihoodProblem::new(&[f64::NAN], &spec, DensityMode::FirstOrder, None).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v, _) = golden_section_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(v <= 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn log_likelihood_is_additive(
            xs in prop::collection::vec(-3.0f64..3.0, 1..6),
            phi in -0.05f64..0.05,
        ) {
            let spec = table_probe();
            let joint = LikelihoodProblem::new(&xs, &spec, DensityMode::FirstOrder, None).unwrap();
            let parts: f64 = xs
                .iter()
                .map(|x| LikelihoodProblem::new(&[*x], &spec, DensityMode::FirstOrder, None).unwrap().log_likelihood(phi))
                .sum();
            prop_assert!((joint.log_likelihood(phi) - parts).abs() <= 1e-9 * parts.abs().max(1.0));
        }
    }
}
