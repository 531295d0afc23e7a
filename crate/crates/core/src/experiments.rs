//! Monte Carlo campaigns: single-shot ML error at fixed phase, convergence
//! traces, photon-number scaling fits and the bound comparison table.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::homodyne::{DensityMode, GridConfig, Statistics, TabulatedDensity, FIRST_ORDER_MAX_PHI};
use crate::mle::{Estimate, LikelihoodProblem, ScanConfig};
use crate::probe::ProbeSpec;
use crate::sampler::{sample, SeedSpec};
use crate::stats::{compensated_sum, fit_line, spread, LineFit};

/// Campaigns whose boundary fraction exceeds this are flagged unreliable.
pub const MAX_BOUNDARY_FRACTION: f64 = 0.05;

/// How the squeezed amplitude ν is chosen for a given photon budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum NuRule {
    Constant(f64),
    /// `ν = c / nbar`.
    Reciprocal(f64),
}

impl NuRule {
    pub fn nu(&self, nbar: f64) -> Result<f64> {
        let nu = match *self {
            NuRule::Constant(nu) => nu,
            NuRule::Reciprocal(c) => {
                if !(c > 0.0) {
                    return domain(format!("reciprocal rule needs c > 0, got {c}"));
                }
                c / nbar
            }
        };
        if !(nu > 0.0 && nu <= 1.0) {
            return domain(format!("rule gives nu = {nu} at nbar = {nbar}, outside (0, 1]"));
        }
        Ok(nu)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignConfig {
    pub nbar: f64,
    pub nu_rule: NuRule,
    /// Outcomes per estimate.
    pub m: usize,
    pub phi_true: f64,
    pub trials: usize,
    /// Density family the outcomes are drawn from.
    pub mode: DensityMode,
    /// Density family used by the likelihood; `None` means `mode`.
    pub inference_mode: Option<DensityMode>,
    pub campaign_seed: u64,
    pub window: Option<f64>,
    pub grid: GridConfig,
    pub scan: ScanConfig,
    /// Cap on worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            nbar: 1.0,
            nu_rule: NuRule::Constant(0.05),
            m: 1,
            phi_true: 0.0,
            trials: 100_000,
            mode: DensityMode::FirstOrder,
            inference_mode: None,
            campaign_seed: 2013,
            window: None,
            grid: GridConfig::default(),
            scan: ScanConfig::default(),
            workers: None,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 10 {
            return domain(format!("need at least 10 trials, got {}", self.trials));
        }
        if self.m == 0 {
            return domain("m must be at least 1");
        }
        if !self.phi_true.is_finite() {
            return domain("phi_true must be finite");
        }
        if let Some(w) = self.window {
            if !(w > 0.0 && w.is_finite()) {
                return domain(format!("window must be positive, got {w}"));
            }
            if self.phi_true.abs() > w {
                return domain(format!("phi_true {} lies outside the window {w}", self.phi_true));
            }
        }
        if self.workers == Some(0) {
            return domain("workers must be at least 1");
        }
        if self.mode == DensityMode::FirstOrder && self.phi_true.abs() > FIRST_ORDER_MAX_PHI {
            return domain(format!(
                "first-order statistics need |phi_true| <= {FIRST_ORDER_MAX_PHI}, got {}",
                self.phi_true
            ));
        }
        let spec = self.probe()?;
        Statistics::new(&spec, self.mode)?;
        Statistics::new(&spec, self.inference())?;
        Ok(())
    }

    pub fn nu(&self) -> Result<f64> {
        self.nu_rule.nu(self.nbar)
    }

    pub fn probe(&self) -> Result<ProbeSpec> {
        ProbeSpec::build(self.nbar, self.nu()?)
    }

    pub fn inference(&self) -> DensityMode {
        self.inference_mode.unwrap_or(self.mode)
    }

    /// Same campaign at another photon budget.
    pub fn at_nbar(&self, nbar: f64) -> Self {
        Self { nbar, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub phi_hat: f64,
    pub boundary_hit: bool,
    pub local_maxima: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignResult {
    pub nbar: f64,
    pub nu: f64,
    pub m: usize,
    pub trials: usize,
    pub mean_estimate: f64,
    pub mean_stderr: f64,
    /// Mean square deviation about the sample mean.
    pub mse: f64,
    pub mse_about_true: f64,
    pub rmse: f64,
    pub rmse_stderr: f64,
    /// `1/(2 m nbar)`.
    pub heisenberg: f64,
    /// `ν/(2 sqrt(m) nbar)`.
    pub cr_bound: f64,
    pub boundary_fraction: f64,
    pub unreliable: bool,
}

impl CampaignResult {
    pub fn beats_heisenberg(&self, sigmas: f64) -> bool {
        self.rmse + sigmas * self.rmse_stderr < self.heisenberg
    }

    pub fn respects_cramer_rao(&self, sigmas: f64) -> bool {
        self.rmse >= self.cr_bound - sigmas * self.rmse_stderr
    }
}

/// Runs every trial of the campaign and returns the per-trial records in
/// trial order.
pub fn run_trials(config: &CampaignConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let spec = config.probe()?;
    let density = TabulatedDensity::tabulate(&spec, config.phi_true, config.mode, &config.grid)?;
    LikelihoodProblem::new(&[0.0], &spec, config.inference(), config.window)?;

    let trial = |i: u64| -> TrialRecord {
        let xs = sample(&density, SeedSpec::new(config.campaign_seed, i), config.m);
        let problem = LikelihoodProblem::new(&xs, &spec, config.inference(), config.window)
            .expect("validated above");
        let Estimate {
            phi_hat,
            boundary_hit,
            local_maxima,
            ..
        } = problem.estimate(&config.scan);
        TrialRecord {
            trial_index: i,
            phi_hat,
            boundary_hit,
            local_maxima,
        }
    };
    run_indexed(config.trials as u64, config.workers, trial)
}

#[cfg(feature = "parallel")]
fn run_indexed<F>(n: u64, workers: Option<usize>, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64) -> TrialRecord + Sync + Send,
{
    use rayon::prelude::*;
    let go = || (0..n).into_par_iter().map(&f).collect::<Vec<_>>();
    match workers {
        None => Ok(go()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| crate::Error::Config(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(go))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn run_indexed<F>(n: u64, _workers: Option<usize>, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64) -> TrialRecord,
{
    Ok((0..n).map(f).collect())
}

/// Aggregates trial records; `records` must be non-empty.
pub fn summarize(config: &CampaignConfig, records: &[TrialRecord]) -> Result<CampaignResult> {
    let estimates: Vec<f64> = records.iter().map(|r| r.phi_hat).collect();
    let s = spread(&estimates)?;
    let n = records.len() as f64;
    let mse_about_true = compensated_sum(estimates.iter().map(|p| (p - config.phi_true).powi(2))) / n;
    let hits = records.iter().filter(|r| r.boundary_hit).count() as f64;
    let nu = config.nu()?;
    let m = config.m as f64;
    let boundary_fraction = hits / n;
    Ok(CampaignResult {
        nbar: config.nbar,
        nu,
        m: config.m,
        trials: records.len(),
        mean_estimate: s.mean,
        mean_stderr: s.mean_stderr,
        mse: s.mse,
        mse_about_true,
        rmse: s.rmse,
        rmse_stderr: s.rmse_stderr,
        heisenberg: 1.0 / (2.0 * m * config.nbar),
        cr_bound: nu / (2.0 * m.sqrt() * config.nbar),
        boundary_fraction,
        unreliable: boundary_fraction > MAX_BOUNDARY_FRACTION,
    })
}

pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult> {
    summarize(config, &run_trials(config)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub trials: usize,
    pub rmse: f64,
    pub rmse_stderr: f64,
}

/// rmse on growing prefixes of one trial stream. The campaign is run for the
/// last checkpoint's number of trials.
pub fn convergence_trace(config: &CampaignConfig, checkpoints: &[usize]) -> Result<Vec<TracePoint>> {
    let Some(&last) = checkpoints.last() else {
        return domain("need at least one checkpoint");
    };
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return domain("checkpoints must be strictly increasing");
    }
    if checkpoints[0] < 2 {
        return domain("checkpoints need at least two trials");
    }
    let records = run_trials(&CampaignConfig {
        trials: last,
        ..config.clone()
    })?;
    let estimates: Vec<f64> = records.iter().map(|r| r.phi_hat).collect();
    checkpoints
        .iter()
        .map(|&k| {
            let s = spread(&estimates[..k])?;
            Ok(TracePoint {
                trials: k,
                rmse: s.rmse,
                rmse_stderr: s.rmse_stderr,
            })
        })
        .collect()
}

/// Relative change of rmse between the last checkpoint and the one nearest
/// to a tenth of it.
pub fn trace_flatness(trace: &[TracePoint]) -> Option<f64> {
    let last = trace.last()?;
    let target = last.trials / 10;
    let early = trace
        .iter()
        .filter(|p| p.trials < last.trials)
        .min_by_key(|p| p.trials.abs_diff(target))?;
    Some((last.rmse - early.rmse).abs() / last.rmse)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub nbar: f64,
    pub nu: f64,
    /// Total photons `m nbar`.
    pub nt: f64,
    pub rmse: f64,
    pub stderr: f64,
}

/// `rmse = prefactor / N_T^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLaw {
    pub prefactor: f64,
    pub prefactor_err: f64,
    pub exponent: f64,
    pub exponent_err: f64,
}

impl PowerLaw {
    fn from_line(fit: LineFit) -> Self {
        let prefactor = fit.intercept.exp();
        Self {
            prefactor,
            prefactor_err: prefactor * fit.intercept_err,
            exponent: -fit.slope,
            exponent_err: fit.slope_err,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Unweighted least squares on `(log N_T, log rmse)`.
    #[serde(flatten)]
    pub fit: PowerLaw,
    /// Same fit weighted by the jackknife errors.
    pub weighted: PowerLaw,
    pub points: Vec<ScalingPoint>,
}

/// Runs `template` at each photon budget and fits a power law in `m nbar`.
pub fn scaling_study(template: &CampaignConfig, nbars: &[f64]) -> Result<ScalingFit> {
    if nbars.len() < 3 {
        return domain(format!("a scaling fit needs at least 3 photon budgets, got {}", nbars.len()));
    }
    if let Some(n) = nbars.iter().find(|n| !(**n >= 1.0)) {
        return domain(format!("scaling study needs nbar >= 1, got {n}"));
    }
    let mut points = Vec::with_capacity(nbars.len());
    for &nbar in nbars {
        let r = run_campaign(&template.at_nbar(nbar))?;
        points.push(ScalingPoint {
            nbar,
            nu: r.nu,
            nt: template.m as f64 * nbar,
            rmse: r.rmse,
            stderr: r.rmse_stderr,
        });
    }
    fit_points(points)
}

/// Power-law fits of already computed points.
pub fn fit_points(points: Vec<ScalingPoint>) -> Result<ScalingFit> {
    let lx: Vec<f64> = points.iter().map(|p| p.nt.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.rmse.ln()).collect();
    let sigma: Vec<f64> = points.iter().map(|p| p.stderr / p.rmse).collect();
    let fit = PowerLaw::from_line(fit_line(&lx, &ly, None)?);
    let weighted = if sigma.iter().all(|s| *s > 0.0 && s.is_finite()) {
        PowerLaw::from_line(fit_line(&lx, &ly, Some(&sigma))?)
    } else {
        fit
    };
    Ok(ScalingFit { fit, weighted, points })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTable {
    pub rows: Vec<CampaignResult>,
}

/// Campaigns at each photon budget, compared with the Heisenberg and
/// Cramér-Rao bounds.
pub fn bound_table(template: &CampaignConfig, nbars: &[f64]) -> Result<BoundTable> {
    if nbars.is_empty() {
        return domain("need at least one photon budget");
    }
    let rows = nbars
        .iter()
        .map(|&n| run_campaign(&template.at_nbar(n)))
        .collect::<Result<_>>()?;
    Ok(BoundTable { rows })
}

impl BoundTable {
    pub fn all_beat_heisenberg(&self) -> bool {
        self.rows.iter().all(|r| r.rmse < r.heisenberg)
    }

    pub fn any_unreliable(&self) -> bool {
        self.rows.iter().any(|r| r.unreliable)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, stamp: bool) -> std::io::Result<()> {
        header(&mut w, stamp)?;
        writeln!(w, "nbar,mean_estimate,rmse,rmse_stderr,heisenberg,cr_bound")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                num(r.nbar),
                num(r.mean_estimate),
                num(r.rmse),
                num(r.rmse_stderr),
                num(r.heisenberg),
                num(r.cr_bound)
            )?;
        }
        Ok(())
    }
}

impl ScalingFit {
    pub fn write_csv<W: Write>(&self, mut w: W, stamp: bool) -> std::io::Result<()> {
        header(&mut w, stamp)?;
        writeln!(w, "nbar,NT,rmse,stderr")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", num(p.nbar), num(p.nt), num(p.rmse), num(p.stderr))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}

pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut w: W, stamp: bool) -> std::io::Result<()> {
    header(&mut w, stamp)?;
    writeln!(w, "trials,rmse")?;
    for p in trace {
        writeln!(w, "{},{}", p.trials, num(p.rmse))?;
    }
    Ok(())
}

/// Full-precision, locale-independent float formatting.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Optional `# generated <unix seconds>` line.
pub fn header<W: Write>(w: &mut W, stamp: bool) -> std::io::Result<()> {
    if stamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(w, "# generated {secs}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small(nbar: f64, nu: f64, trials: usize) -> CampaignConfig {
        CampaignConfig {
            nbar,
            nu_rule: NuRule::Constant(nu),
            trials,
            ..Default::default()
        }
    }

    #[test]
    fn nu_rules() {
        assert_eq!(NuRule::Constant(0.05).nu(3.0).unwrap(), 0.05);
        assert_relative_eq!(NuRule::Reciprocal(0.05).nu(5.0).unwrap(), 0.01);
        assert!(NuRule::Reciprocal(2.0).nu(1.0).is_err());
        assert!(NuRule::Reciprocal(-1.0).nu(1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(small(1.0, 0.05, 9).validate().is_err());
        assert!(CampaignConfig { m: 0, ..small(1.0, 0.05, 100) }.validate().is_err());
        assert!(CampaignConfig { window: Some(-1.0), ..small(1.0, 0.05, 100) }.validate().is_err());
        // first-order statistics with a large ν are rejected before any trial
        assert!(small(1.0, 0.5, 100).validate().is_err());
        assert!(CampaignConfig { mode: DensityMode::Exact, ..small(1.0, 0.5, 100) }.validate().is_ok());
    }

    #[test]
    fn deterministic_and_order_independent() {
        let cfg = small(2.0, 0.05, 400);
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&CampaignConfig { workers: Some(1), ..cfg.clone() }).unwrap();
        assert_eq!(a, b);
        let c = run_campaign(&CampaignConfig { campaign_seed: 7, ..cfg }).unwrap();
        assert_ne!(a.rmse, c.rmse);
    }

    #[test]
    fn squeezed_only_matches_gaussian_mean_estimator() {
        // estimate = x/ybar with x ~ N(0, ΔX²): rmse = ΔX/ybar
        let cfg = small(5.0, 1.0, 4000);
        let r = run_campaign(&cfg).unwrap();
        let sq = cfg.probe().unwrap().squeezed;
        let expected = sq.dx() / sq.ybar();
        assert!((r.rmse - expected).abs() < 4.0 * r.rmse_stderr, "{} vs {expected}", r.rmse);
        assert_eq!(r.boundary_fraction, 0.0);
    }

    #[test]
    fn summary_fields() {
        let cfg = small(1.0, 0.05, 2000);
        let r = run_campaign(&cfg).unwrap();
        assert_relative_eq!(r.heisenberg, 0.5);
        assert_relative_eq!(r.cr_bound, 0.025);
        assert!(r.mse >= 0.0 && r.rmse_stderr > 0.0 && r.mean_stderr > 0.0);
        assert!(r.mse_about_true >= r.mse);
        assert_relative_eq!(r.rmse * r.rmse, r.mse, max_relative = 1e-12);
        assert!(r.rmse < r.heisenberg);
        assert!(!r.unreliable);
    }

    #[test]
    fn trace_ends_at_campaign_value() {
        let cfg = small(1.0, 0.05, 600);
        let full = run_campaign(&cfg).unwrap();
        let trace = convergence_trace(&cfg, &[60, 300, 600]).unwrap();
        assert_eq!(trace.len(), 3);
        assert_eq!(trace[2].rmse, full.rmse);
        let single = convergence_trace(&cfg, &[600]).unwrap();
        assert_eq!(single[0].rmse, full.rmse);
        assert!(convergence_trace(&cfg, &[300, 300]).is_err());
        assert!(convergence_trace(&cfg, &[]).is_err());
        assert!(trace_flatness(&trace).is_some());
    }

    #[test]
    fn scaling_needs_three_points() {
        let cfg = small(1.0, 0.05, 50);
        assert!(scaling_study(&cfg, &[1.0, 2.0]).is_err());
        assert!(scaling_study(&cfg, &[0.5, 1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let points = [1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&n: &f64| ScalingPoint {
                nbar: n,
                nu: 0.05 / n,
                nt: n,
                rmse: 0.0354 * n.powf(-1.5),
                stderr: 1e-5,
            })
            .collect();
        let fit = fit_points(points).unwrap();
        assert_relative_eq!(fit.fit.exponent, 1.5, max_relative = 1e-10);
        assert_relative_eq!(fit.fit.prefactor, 0.0354, max_relative = 1e-10);
        assert_relative_eq!(fit.weighted.exponent, 1.5, max_relative = 1e-10);
    }

    #[test]
    fn heisenberg_column() {
        let rows = [1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&n| run_campaign(&small(n, 0.05, 20)).unwrap().heisenberg)
            .collect::<Vec<_>>();
        for (h, want) in rows.iter().zip([0.5, 0.25, 0.1667, 0.125, 0.1]) {
            assert!((h - want).abs() < 5e-5);
        }
    }

    #[test]
    fn csv_layout() {
        let table = bound_table(&small(1.0, 0.05, 20), &[1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "nbar,mean_estimate,rmse,rmse_stderr,heisenberg,cr_bound");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1.0000000000000000e0,"));
        let mut stamped = Vec::new();
        table.write_csv(&mut stamped, true).unwrap();
        assert!(String::from_utf8(stamped).unwrap().starts_with("# generated "));
    }
}
